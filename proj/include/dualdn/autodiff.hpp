#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "dualdn/geometry.hpp"

namespace dualdn::nn {

using Mat = Eigen::MatrixXd;

// One tape node. Children hold shared ownership of their parents, so a live
// root keeps exactly the subgraph it depends on alive.
struct Node {
    Mat value;
    Mat grad;  // empty until touched
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Mat&)> backward;  // accumulates into parent grads

    void accum_grad(const Mat& g);
};

// Value handle into the tape. Cheap to copy.
class Var {
public:
    Var() = default;

    static Var leaf(Mat value, bool requires_grad);
    static Var constant(Mat value);
    static Var scalar(double v);

    bool defined() const { return static_cast<bool>(node_); }
    const Mat& val() const { return node_->value; }
    Mat& mut_value() { return node_->value; }
    const Mat& grad() const;
    bool has_grad() const { return node_ && node_->grad.size() > 0; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    void zero_grad();

    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    double item() const;  // 1x1 only

    std::shared_ptr<Node> node() const { return node_; }

    friend Var make_op(Mat value, std::vector<Var> parents, std::function<void(const Mat&)> backward);

private:
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;
};

// Builds a tape node from computed value + parents + backward closure.
// Collapses to a constant when no parent needs gradients (or grads are off).
Var make_op(Mat value, std::vector<Var> parents, std::function<void(const Mat&)> backward);

// Runs reverse accumulation from a scalar root (seeds with 1).
void backward(const Var& root);

// While a guard is alive no graph is recorded; ops return constants.
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// ---- ops ----------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise, equal shapes
Var scale(const Var& a, double c);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

// b is 1 x d, broadcast over the rows of x
Var add_rowvec(const Var& x, const Var& b);
// y = x .* m; m is 1 x d (broadcast over rows) or same shape as x
Var rowwise_mul(const Var& x, const Var& m);
// y = x .* (1 + scale) + shift; shift/scale 1 x d or same shape as x
Var modulate(const Var& x, const Var& shift, const Var& scale);

Var layernorm(const Var& x, double eps = 1e-6);  // per row, no affine
Var gelu(const Var& x);
Var silu(const Var& x);
Var softmax_rows(const Var& x);
Var l2normalize_rows(const Var& x);

Var gather_rows(const Var& x, const IndexSet& indices);
Var slice_rows(const Var& x, Eigen::Index r0, Eigen::Index len);
Var slice_cols(const Var& x, Eigen::Index c0, Eigen::Index len);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var reshape_rowmajor(const Var& x, Eigen::Index rows, Eigen::Index cols);

// rows grouped in fixed segments of `seg`; per-segment, per-column max
Var segment_max(const Var& x, Eigen::Index seg);
// each row repeated `times` times
Var repeat_rows(const Var& x, Eigen::Index times);

Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var dot(const Var& a, const Var& b);  // same-shape, sum of elementwise product

Var detach(const Var& x);

// ---- losses as ops -------------------------------------------------------

// Huber, averaged over elements: |d| < beta ? 0.5 d^2 / beta : |d| - 0.5 beta
Var smooth_l1(const Var& pred, const Mat& target, double beta);

// softmax cross entropy; logits 1 x C
Var cross_entropy_logits(const Var& logits, Eigen::Index target);

// mean over G tokens of chamfer_l2 between K x 3 blocks of pred and target
Var chamfer_tokens(const Var& pred, const Mat& target, Eigen::Index groups, Eigen::Index group_size);

// ---- small conveniences ----------------------------------------------------

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace dualdn::nn
