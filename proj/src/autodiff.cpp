#include <contrack/autodiff.hpp>
#include <contrack/errors.hpp>
#include <contrack/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace contrack::ad {

std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), data(numel(shape), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape)) throw Error(ErrorKind::ShapeMismatch, "tensor data does not match its shape");
}

Tensor& Node::ensure_grad() {
    if (grad.data.size() != value.data.size()) grad = Tensor(value.shape, 0.0);
    return grad;
}

namespace {

Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p->requires_grad; });
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(fn);
    }
    return node;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->value.shape != b->value.shape) throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": shape mismatch");
}

void require_matrix(const Var& a, const char* op) {
    if (a->value.shape.size() != 2) throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": expected a matrix");
}

void require_chw(const Var& a, const char* op) {
    if (a->value.shape.size() != 3) throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": expected [C, H, W]");
}

}  // namespace

Var constant(Tensor value) { return make(std::move(value), {}, nullptr); }

Var leaf(Tensor value, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return node;
}

void backward(const Var& root) {
    if (root->value.size() != 1) throw Error(ErrorKind::ShapeMismatch, "backward needs a scalar root");
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* child = node->parents[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn && !node->grad.data.empty()) node->backward_fn(*node);
    }
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        for (const Var& p : {a, b}) {
            if (!p->requires_grad) continue;
            auto& g = p->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a->value[i];
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v *= s;
    return make(std::move(out), {a}, [a, s](Node& self) {
        auto& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
    });
}

Var relu(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make(std::move(out), {a}, [a](Node& self) {
        auto& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (a->value[i] > 0.0) g[i] += self.grad[i];
    });
}

Var abs(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::fabs(v);
    return make(std::move(out), {a}, [a](Node& self) {
        auto& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double x = a->value[i];
            g[i] += x > 0.0 ? self.grad[i] : (x < 0.0 ? -self.grad[i] : 0.0);
        }
    });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make(Tensor({1}, {s}), {a}, [a](Node& self) {
        auto& g = a->ensure_grad();
        for (double& v : g.data) v += self.grad[0];
    });
}

Var sum_all(std::span<const Var> parts) {
    double s = 0.0;
    for (const Var& p : parts) {
        if (p->value.size() != 1) throw Error(ErrorKind::ShapeMismatch, "sum_all: expected scalars");
        s += p->value[0];
    }
    std::vector<Var> parents(parts.begin(), parts.end());
    return make(Tensor({1}, {s}), parents, [parents](Node& self) {
        for (const Var& p : parents)
            if (p->requires_grad) p->ensure_grad()[0] += self.grad[0];
    });
}

Var matmul(const Var& a, const Var& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const int n = a->value.rows(), k = a->value.cols(), m = b->value.cols();
    if (b->value.rows() != k) throw Error(ErrorKind::ShapeMismatch, "matmul: inner dimensions differ");
    Tensor out({n, m}, 0.0);
    const double* A = a->value.data.data();
    const double* B = b->value.data.data();
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
            double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = B + p * m;
            double* orow = out.data.data() + i * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    return make(std::move(out), {a, b}, [a, b, n, k, m](Node& self) {
        const double* G = self.grad.data.data();
        if (a->requires_grad) {
            double* dA = a->ensure_grad().data.data();
            const double* B = b->value.data.data();
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (int j = 0; j < m; ++j) s += G[i * m + j] * B[p * m + j];
                    dA[i * k + p] += s;
                }
        }
        if (b->requires_grad) {
            double* dB = b->ensure_grad().data.data();
            const double* A = a->value.data.data();
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < k; ++p) {
                    double av = A[i * k + p];
                    for (int j = 0; j < m; ++j) dB[p * m + j] += av * G[i * m + j];
                }
        }
    });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
    Var y = matmul(x, w);
    const int n = y->value.rows(), m = y->value.cols();
    if (static_cast<int>(bias->value.size()) != m) throw Error(ErrorKind::ShapeMismatch, "linear: bias size");
    Tensor out = y->value;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[i * m + j] += bias->value[j];
    return make(std::move(out), {y, bias}, [y, bias, n, m](Node& self) {
        if (y->requires_grad) {
            auto& g = y->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (bias->requires_grad) {
            auto& g = bias->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
        }
    });
}

Var transpose(const Var& a) {
    require_matrix(a, "transpose");
    const int n = a->value.rows(), m = a->value.cols();
    Tensor out({m, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[j * n + i] = a->value[i * m + j];
    return make(std::move(out), {a}, [a, n, m](Node& self) {
        auto& g = a->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_cols: nothing to concatenate");
    const int n = parts[0]->value.rows();
    std::vector<int> widths;
    int total = 0;
    for (const Var& p : parts) {
        require_matrix(p, "concat_cols");
        if (p->value.rows() != n) throw Error(ErrorKind::ShapeMismatch, "concat_cols: row counts differ");
        widths.push_back(p->value.cols());
        total += widths.back();
    }
    Tensor out({n, total});
    int offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        for (int i = 0; i < n; ++i)
            std::copy_n(parts[k]->value.data.begin() + static_cast<std::ptrdiff_t>(i) * widths[k], widths[k],
                        out.data.begin() + static_cast<std::ptrdiff_t>(i) * total + offset);
        offset += widths[k];
    }
    std::vector<Var> parents(parts.begin(), parts.end());
    return make(std::move(out), parents, [parents, widths, n, total](Node& self) {
        int off = 0;
        for (std::size_t k = 0; k < parents.size(); ++k) {
            if (parents[k]->requires_grad) {
                auto& g = parents[k]->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += self.grad[i * total + off + j];
            }
            off += widths[k];
        }
    });
}

Var slice_cols(const Var& a, int begin, int end) {
    require_matrix(a, "slice_cols");
    const int n = a->value.rows(), m = a->value.cols(), w = end - begin;
    if (begin < 0 || end > m || w <= 0) throw Error(ErrorKind::ShapeMismatch, "slice_cols: bad range");
    Tensor out({n, w});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < w; ++j) out[i * w + j] = a->value[i * m + begin + j];
    return make(std::move(out), {a}, [a, n, m, w, begin](Node& self) {
        auto& g = a->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < w; ++j) g[i * m + begin + j] += self.grad[i * w + j];
    });
}

Var softmax_rows(const Var& a) {
    require_matrix(a, "softmax_rows");
    const int n = a->value.rows(), m = a->value.cols();
    Tensor out({n, m});
    for (int i = 0; i < n; ++i) {
        const double* row = a->value.data.data() + i * m;
        double mx = *std::max_element(row, row + m);
        double z = 0.0;
        for (int j = 0; j < m; ++j) z += out[i * m + j] = std::exp(row[j] - mx);
        for (int j = 0; j < m; ++j) out[i * m + j] /= z;
    }
    return make(std::move(out), {a}, [a, n, m](Node& self) {
        auto& g = a->ensure_grad();
        const auto& y = self.value;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += self.grad[i * m + j] * y[i * m + j];
            for (int j = 0; j < m; ++j) g[i * m + j] += y[i * m + j] * (self.grad[i * m + j] - s);
        }
    });
}

Var gather_rows(const Var& a, std::span<const std::size_t> index) {
    require_matrix(a, "gather_rows");
    const int n = a->value.rows(), m = a->value.cols();
    std::vector<std::size_t> idx(index.begin(), index.end());
    Tensor out({static_cast<int>(idx.size()), m});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= static_cast<std::size_t>(n)) throw Error(ErrorKind::ShapeMismatch, "gather_rows: index out of range");
        std::copy_n(a->value.data.begin() + static_cast<std::ptrdiff_t>(idx[r] * m), m,
                    out.data.begin() + static_cast<std::ptrdiff_t>(r * m));
    }
    return make(std::move(out), {a}, [a, idx, m](Node& self) {
        auto& g = a->ensure_grad();
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (int j = 0; j < m; ++j) g[idx[r] * m + j] += self.grad[r * m + j];
    });
}

Var row_norm(const Var& a) {
    require_matrix(a, "row_norm");
    const int n = a->value.rows(), m = a->value.cols();
    Tensor out({n, 1});
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += a->value[i * m + j] * a->value[i * m + j];
        out[i] = std::sqrt(s);
    }
    return make(std::move(out), {a}, [a, n, m](Node& self) {
        auto& g = a->ensure_grad();
        for (int i = 0; i < n; ++i) {
            double len = self.value[i];
            if (len == 0.0) continue;
            for (int j = 0; j < m; ++j) g[i * m + j] += self.grad[i] * a->value[i * m + j] / len;
        }
    });
}

Var normalize_rows(const Var& a, double eps) {
    require_matrix(a, "normalize_rows");
    const int n = a->value.rows(), m = a->value.cols();
    Tensor out({n, m}, 0.0);
    std::vector<double> lengths(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += a->value[i * m + j] * a->value[i * m + j];
        lengths[i] = std::sqrt(s);
        if (lengths[i] < eps) continue;
        for (int j = 0; j < m; ++j) out[i * m + j] = a->value[i * m + j] / lengths[i];
    }
    return make(std::move(out), {a}, [a, n, m, lengths, eps](Node& self) {
        auto& g = a->ensure_grad();
        const auto& y = self.value;
        for (int i = 0; i < n; ++i) {
            if (lengths[i] < eps) continue;
            double yg = 0.0;
            for (int j = 0; j < m; ++j) yg += y[i * m + j] * self.grad[i * m + j];
            for (int j = 0; j < m; ++j) g[i * m + j] += (self.grad[i * m + j] - y[i * m + j] * yg) / lengths[i];
        }
    });
}

Var conv2d(const Var& x, const Var& w, const Var& bias, int stride) {
    require_chw(x, "conv2d");
    if (w->value.shape.size() != 4) throw Error(ErrorKind::ShapeMismatch, "conv2d: weight must be [Co, C, k, k]");
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int Co = w->value.dim(0), k = w->value.dim(2);
    if (w->value.dim(1) != C || w->value.dim(3) != k) throw Error(ErrorKind::ShapeMismatch, "conv2d: weight/input channels");
    if (static_cast<int>(bias->value.size()) != Co) throw Error(ErrorKind::ShapeMismatch, "conv2d: bias size");
    const int pad = k / 2;
    const int Ho = (H + 2 * pad - k) / stride + 1, Wo = (W + 2 * pad - k) / stride + 1;

    // Replicate padding as precomputed clamped source indices.
    std::vector<int> rows(static_cast<std::size_t>(k) * Ho), cols(static_cast<std::size_t>(k) * Wo);
    for (int ky = 0; ky < k; ++ky)
        for (int oy = 0; oy < Ho; ++oy) rows[ky * Ho + oy] = std::clamp(oy * stride + ky - pad, 0, H - 1);
    for (int kx = 0; kx < k; ++kx)
        for (int ox = 0; ox < Wo; ++ox) cols[kx * Wo + ox] = std::clamp(ox * stride + kx - pad, 0, W - 1);

    Tensor out({Co, Ho, Wo});
    const double* X = x->value.data.data();
    const double* Wt = w->value.data.data();
    for (int co = 0; co < Co; ++co) {
        double* O = out.data.data() + static_cast<std::size_t>(co) * Ho * Wo;
        std::fill(O, O + Ho * Wo, bias->value[co]);
        for (int ci = 0; ci < C; ++ci)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    double wv = Wt[((co * C + ci) * k + ky) * k + kx];
                    const int* cidx = cols.data() + kx * Wo;
                    for (int oy = 0; oy < Ho; ++oy) {
                        const double* xrow = X + (static_cast<std::size_t>(ci) * H + rows[ky * Ho + oy]) * W;
                        double* orow = O + static_cast<std::size_t>(oy) * Wo;
                        for (int ox = 0; ox < Wo; ++ox) orow[ox] += wv * xrow[cidx[ox]];
                    }
                }
    }
    return make(std::move(out), {x, w, bias}, [x, w, bias, rows, cols, C, H, W, Co, k, Ho, Wo](Node& self) {
        const double* G = self.grad.data.data();
        const double* X = x->value.data.data();
        const double* Wt = w->value.data.data();
        double* dX = x->requires_grad ? x->ensure_grad().data.data() : nullptr;
        double* dW = w->requires_grad ? w->ensure_grad().data.data() : nullptr;
        if (bias->requires_grad) {
            auto& db = bias->ensure_grad();
            for (int co = 0; co < Co; ++co) {
                double s = 0.0;
                for (int i = 0; i < Ho * Wo; ++i) s += G[static_cast<std::size_t>(co) * Ho * Wo + i];
                db[co] += s;
            }
        }
        for (int co = 0; co < Co; ++co) {
            const double* Gc = G + static_cast<std::size_t>(co) * Ho * Wo;
            for (int ci = 0; ci < C; ++ci)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        std::size_t widx = ((co * C + ci) * k + ky) * k + kx;
                        double wv = Wt[widx];
                        const int* cidx = cols.data() + kx * Wo;
                        double acc = 0.0;
                        for (int oy = 0; oy < Ho; ++oy) {
                            std::size_t base = (static_cast<std::size_t>(ci) * H + rows[ky * Ho + oy]) * W;
                            const double* grow = Gc + static_cast<std::size_t>(oy) * Wo;
                            if (dX) {
                                double* dxrow = dX + base;
                                for (int ox = 0; ox < Wo; ++ox) dxrow[cidx[ox]] += wv * grow[ox];
                            }
                            if (dW) {
                                const double* xrow = X + base;
                                for (int ox = 0; ox < Wo; ++ox) acc += grow[ox] * xrow[cidx[ox]];
                            }
                        }
                        if (dW) dW[widx] += acc;
                    }
        }
    });
}

namespace {

struct AxisTap {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

AxisTap axis_taps(int in, int out) {
    AxisTap t;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    double step = out > 1 ? static_cast<double>(in - 1) / (out - 1) : 0.0;
    for (int o = 0; o < out; ++o) {
        double pos = o * step;
        int lo = std::min(static_cast<int>(std::floor(pos)), std::max(in - 2, 0));
        t.lo[o] = lo;
        t.hi[o] = std::min(lo + 1, in - 1);
        t.frac[o] = in > 1 ? pos - lo : 0.0;
    }
    return t;
}

}  // namespace

Var resize_bilinear(const Var& x, int out_h, int out_w) {
    require_chw(x, "resize_bilinear");
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    AxisTap ty = axis_taps(H, out_h), tx = axis_taps(W, out_w);
    Tensor out({C, out_h, out_w});
    for (int c = 0; c < C; ++c) {
        const double* X = x->value.data.data() + static_cast<std::size_t>(c) * H * W;
        double* O = out.data.data() + static_cast<std::size_t>(c) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const double* r0 = X + static_cast<std::size_t>(ty.lo[oy]) * W;
            const double* r1 = X + static_cast<std::size_t>(ty.hi[oy]) * W;
            double fy = ty.frac[oy];
            for (int ox = 0; ox < out_w; ++ox) {
                double fx = tx.frac[ox];
                int l = tx.lo[ox], h = tx.hi[ox];
                O[oy * out_w + ox] = lerp_exact(lerp_exact(r0[l], r0[h], fx), lerp_exact(r1[l], r1[h], fx), fy);
            }
        }
    }
    return make(std::move(out), {x}, [x, ty, tx, C, H, W, out_h, out_w](Node& self) {
        auto& g = x->ensure_grad();
        for (int c = 0; c < C; ++c) {
            double* dX = g.data.data() + static_cast<std::size_t>(c) * H * W;
            const double* G = self.grad.data.data() + static_cast<std::size_t>(c) * out_h * out_w;
            for (int oy = 0; oy < out_h; ++oy) {
                double* r0 = dX + static_cast<std::size_t>(ty.lo[oy]) * W;
                double* r1 = dX + static_cast<std::size_t>(ty.hi[oy]) * W;
                double fy = ty.frac[oy];
                for (int ox = 0; ox < out_w; ++ox) {
                    double gv = G[oy * out_w + ox];
                    double fx = tx.frac[ox];
                    int l = tx.lo[ox], h = tx.hi[ox];
                    r0[l] += gv * (1 - fy) * (1 - fx);
                    r0[h] += gv * (1 - fy) * fx;
                    r1[l] += gv * fy * (1 - fx);
                    r1[h] += gv * fy * fx;
                }
            }
        }
    });
}

Var sample_points(const Var& grid, const Var& coords) {
    require_chw(grid, "sample_points");
    require_matrix(coords, "sample_points");
    if (coords->value.cols() != 2) throw Error(ErrorKind::ShapeMismatch, "sample_points: coords must be [N, 2]");
    const int C = grid->value.dim(0), H = grid->value.dim(1), W = grid->value.dim(2);
    const int N = coords->value.rows();
    std::vector<Vec2> pts(N);
    for (int i = 0; i < N; ++i) pts[i] = {coords->value[2 * i], coords->value[2 * i + 1]};
    GridView gv{C, H, W, grid->value.data};
    SampleOutput s = bilinear_sample(gv, pts);

    Tensor out({N, C}, s.values);
    return make(std::move(out), {grid, coords}, [grid, coords, pts, s, C, H, W, N](Node& self) {
        if (coords->requires_grad) {
            auto& g = coords->ensure_grad();
            for (int i = 0; i < N; ++i)
                for (int c = 0; c < C; ++c) {
                    g[2 * i] += self.grad[i * C + c] * s.d_dx[i * C + c];
                    g[2 * i + 1] += self.grad[i * C + c] * s.d_dy[i * C + c];
                }
        }
        if (grid->requires_grad) {
            auto& g = grid->ensure_grad();
            for (int i = 0; i < N; ++i) {
                BilinearTap t = bilinear_tap(pts[i].x, pts[i].y, W, H);
                for (int c = 0; c < C; ++c) {
                    double gv = self.grad[i * C + c];
                    std::size_t base = static_cast<std::size_t>(c) * H * W;
                    g[base + t.y0 * W + t.x0] += gv * t.w00();
                    g[base + t.y0 * W + t.x1] += gv * t.w10();
                    g[base + t.y1 * W + t.x0] += gv * t.w01();
                    g[base + t.y1 * W + t.x1] += gv * t.w11();
                }
            }
        }
    });
}

void ParameterSet::add(std::string name, Tensor value) {
    if (contains(name)) throw Error(ErrorKind::ConfigError, "duplicate parameter " + name);
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error(ErrorKind::ConfigError, "unknown parameter " + name);
    return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterSet::contains(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Binding::Binding(const ParameterSet& params, bool requires_grad) : params_(&params) {
    leaves_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) leaves_.push_back(leaf(params[i], requires_grad));
}

const Var& Binding::operator()(const std::string& name) const { return leaves_[params_->index_of(name)]; }

std::vector<Tensor> Binding::gradients() const {
    std::vector<Tensor> out;
    out.reserve(leaves_.size());
    for (const auto& l : leaves_) out.push_back(l->grad.data.empty() ? Tensor(l->value.shape, 0.0) : l->grad);
    return out;
}

}  // namespace contrack::ad
