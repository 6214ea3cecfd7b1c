"""Contour tracking for live-cell videos."""

import json

from ._contrack import (
    ContrackError,
    compute_normals,
    contour_accuracy,
    cycle_loss,
    extract_contour,
    generate_synthetic,
    mech_linear_loss,
    mech_normal_loss,
    photometric_loss,
    snap,
    solve_mechanical,
    spatial_accuracy,
)

__all__ = [
    "ContrackError",
    "compute_normals",
    "contour_accuracy",
    "cycle_loss",
    "extract_contour",
    "generate_synthetic",
    "mech_linear_loss",
    "mech_normal_loss",
    "photometric_loss",
    "snap",
    "solve_mechanical",
    "spatial_accuracy",
    "track",
]


def track(frames, contours, method="learned", checkpoint=None):
    """Tracks contour points through a sequence; returns the TrackSet as a dict."""
    from ._contrack import track_json

    return json.loads(track_json(list(frames), list(contours), method, checkpoint))
