#pragma once

// Small reverse-mode automatic differentiation over dense double tensors.
// Each op records a closure that scatters its output gradient into its
// parents; backward() replays them in reverse topological order.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace contrack::ad {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);
    Tensor(std::vector<int> s, std::vector<double> d);

    std::size_t size() const { return data.size(); }
    int dim(std::size_t k) const { return shape[k]; }
    int rows() const { return shape[0]; }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t numel(const std::vector<int>& shape);

struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
    bool requires_grad = false;

    Tensor& ensure_grad();
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad = true);

/// Seeds d(root)/d(root) = 1 and accumulates gradients into every reachable
/// node that requires them. root must hold a single element.
void backward(const Var& root);

// Elementwise / structural ops. Matrices are row-major [rows, cols].
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var abs(const Var& a);
Var sum(const Var& a);
Var sum_all(std::span<const Var> parts);  // sum of scalar vars

Var matmul(const Var& a, const Var& b);
/// x [n, k] * w [k, m] + bias [m]
Var linear(const Var& x, const Var& w, const Var& bias);
Var transpose(const Var& a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, int begin, int end);
Var softmax_rows(const Var& a);
Var gather_rows(const Var& a, std::span<const std::size_t> index);
/// Per-row Euclidean norm [n, k] -> [n, 1]; zero rows get a zero subgradient.
Var row_norm(const Var& a);
/// Rows scaled to unit length; rows with norm below eps map to zero.
Var normalize_rows(const Var& a, double eps);

/// x [C, H, W], w [Co, C, k, k], bias [Co]; edge-replicated padding k / 2.
Var conv2d(const Var& x, const Var& w, const Var& bias, int stride);
/// Bilinear resize with corner alignment, x [C, H, W] -> [C, out_h, out_w].
Var resize_bilinear(const Var& x, int out_h, int out_w);
/// Bilinear lookup of every channel at (x, y) rows of coords [N, 2];
/// returns [N, C]. Differentiable in both the grid and the coordinates.
Var sample_points(const Var& grid, const Var& coords);

/// Named parameter tensors of a model.
class ParameterSet {
public:
    void add(std::string name, Tensor value);
    std::size_t size() const { return values_.size(); }
    std::size_t scalar_count() const;
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const;

    Tensor& operator[](std::size_t i) { return values_[i]; }
    const Tensor& operator[](std::size_t i) const { return values_[i]; }
    Tensor& at(const std::string& name) { return values_[index_of(name)]; }
    const Tensor& at(const std::string& name) const { return values_[index_of(name)]; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::string>& names() const { return names_; }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

/// Binds a ParameterSet into leaf variables for one forward pass and
/// collects their gradients afterwards.
class Binding {
public:
    explicit Binding(const ParameterSet& params, bool requires_grad = true);

    const Var& operator()(const std::string& name) const;
    /// Gradients aligned with the ParameterSet; untouched parameters are zero.
    std::vector<Tensor> gradients() const;

private:
    const ParameterSet* params_;
    std::vector<Var> leaves_;
};

}  // namespace contrack::ad
