#include "dualdn/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "dualdn/error.hpp"

namespace dualdn::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void Node::accum_grad(const Mat& g) {
    if (grad.size() == 0) {
        grad = g;
    } else {
        grad += g;
    }
}

Var Var::leaf(Mat value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
}

Var Var::constant(Mat value) { return leaf(std::move(value), false); }

Var Var::scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
}

const Mat& Var::grad() const {
    static const Mat empty;
    if (!node_ || node_->grad.size() == 0) return empty;
    return node_->grad;
}

void Var::zero_grad() {
    if (node_) node_->grad.resize(0, 0);
}

double Var::item() const {
    if (rows() != 1 || cols() != 1) throw InvalidInput("Var::item: not a scalar");
    return node_->value(0, 0);
}

Var make_op(Mat value, std::vector<Var> parents, std::function<void(const Mat&)> backward) {
    bool need = false;
    if (g_grad_enabled) {
        for (const Var& p : parents)
            if (p.requires_grad()) {
                need = true;
                break;
            }
    }
    if (!need) return Var::constant(std::move(value));

    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (Var& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
    return Var(std::move(n));
}

void backward(const Var& root) {
    if (!root.defined()) throw InvalidInput("backward: undefined root");
    if (root.rows() != 1 || root.cols() != 1) throw InvalidInput("backward: root must be scalar");
    if (!root.requires_grad()) return;

    // post-order over the requires-grad subgraph, then reversed
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    Mat seed(1, 1);
    seed(0, 0) = 1.0;
    root.node()->accum_grad(seed);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.size() > 0) n->backward(n->grad);
    }
}

// ---- ops -------------------------------------------------------------------

namespace {

void check_same_shape(const Var& a, const Var& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(who) + ": shape mismatch");
}

}  // namespace

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make_op(a.val() + b.val(), {a, b}, [an, bn](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g);
        if (bn->requires_grad) bn->accum_grad(g);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make_op(a.val() - b.val(), {a, b}, [an, bn](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g);
        if (bn->requires_grad) bn->accum_grad(-g);
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make_op(a.val().cwiseProduct(b.val()), {a, b}, [an, bn](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g.cwiseProduct(bn->value));
        if (bn->requires_grad) bn->accum_grad(g.cwiseProduct(an->value));
    });
}

Var scale(const Var& a, double c) {
    Node* an = a.node().get();
    return make_op(c * a.val(), {a}, [an, c](const Mat& g) {
        if (an->requires_grad) an->accum_grad(c * g);
    });
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimension mismatch");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make_op(a.val() * b.val(), {a, b}, [an, bn](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g * bn->value.transpose());
        if (bn->requires_grad) bn->accum_grad(an->value.transpose() * g);
    });
}

Var transpose(const Var& a) {
    Node* an = a.node().get();
    return make_op(a.val().transpose(), {a}, [an](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g.transpose());
    });
}

Var add_rowvec(const Var& x, const Var& b) {
    if (b.rows() != 1 || b.cols() != x.cols()) throw InvalidInput("add_rowvec: bias must be 1 x cols");
    Node* xn = x.node().get();
    Node* bn = b.node().get();
    Mat y = x.val();
    y.rowwise() += Eigen::RowVectorXd(b.val().row(0));
    return make_op(std::move(y), {x, b}, [xn, bn](const Mat& g) {
        if (xn->requires_grad) xn->accum_grad(g);
        if (bn->requires_grad) bn->accum_grad(g.colwise().sum());
    });
}

Var rowwise_mul(const Var& x, const Var& m) {
    const bool broadcast = m.rows() == 1 && x.rows() != 1;
    if (!broadcast) check_same_shape(x, m, "rowwise_mul");
    if (m.cols() != x.cols()) throw InvalidInput("rowwise_mul: column mismatch");
    Node* xn = x.node().get();
    Node* mn = m.node().get();
    Mat y;
    if (broadcast) {
        y = (x.val().array().rowwise() * m.val().row(0).array()).matrix();
    } else {
        y = x.val().cwiseProduct(m.val());
    }
    return make_op(std::move(y), {x, m}, [xn, mn, broadcast](const Mat& g) {
        if (xn->requires_grad) {
            if (broadcast)
                xn->accum_grad((g.array().rowwise() * mn->value.row(0).array()).matrix());
            else
                xn->accum_grad(g.cwiseProduct(mn->value));
        }
        if (mn->requires_grad) {
            if (broadcast)
                mn->accum_grad(g.cwiseProduct(xn->value).colwise().sum());
            else
                mn->accum_grad(g.cwiseProduct(xn->value));
        }
    });
}

Var modulate(const Var& x, const Var& shift, const Var& scale_v) {
    const bool broadcast = shift.rows() == 1 && x.rows() != 1;
    if (shift.rows() != scale_v.rows() || shift.cols() != scale_v.cols())
        throw InvalidInput("modulate: shift/scale shape mismatch");
    if (shift.cols() != x.cols()) throw InvalidInput("modulate: column mismatch");
    if (!broadcast && shift.rows() != x.rows()) throw InvalidInput("modulate: row mismatch");

    Node* xn = x.node().get();
    Node* sn = shift.node().get();
    Node* cn = scale_v.node().get();
    Mat y;
    if (broadcast) {
        y = ((x.val().array().rowwise() * (1.0 + scale_v.val().row(0).array())).rowwise() +
             shift.val().row(0).array())
                .matrix();
    } else {
        y = x.val().cwiseProduct((scale_v.val().array() + 1.0).matrix()) + shift.val();
    }
    return make_op(std::move(y), {x, shift, scale_v}, [xn, sn, cn, broadcast](const Mat& g) {
        if (xn->requires_grad) {
            if (broadcast)
                xn->accum_grad((g.array().rowwise() * (1.0 + cn->value.row(0).array())).matrix());
            else
                xn->accum_grad(g.cwiseProduct((cn->value.array() + 1.0).matrix()));
        }
        if (sn->requires_grad) {
            if (broadcast)
                sn->accum_grad(g.colwise().sum());
            else
                sn->accum_grad(g);
        }
        if (cn->requires_grad) {
            if (broadcast)
                cn->accum_grad(g.cwiseProduct(xn->value).colwise().sum());
            else
                cn->accum_grad(g.cwiseProduct(xn->value));
        }
    });
}

Var layernorm(const Var& x, double eps) {
    const Eigen::Index d = x.cols();
    Mat y(x.rows(), d);
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mu = x.val().row(r).mean();
        const Eigen::RowVectorXd centered = x.val().row(r).array() - mu;
        const double var = centered.squaredNorm() / static_cast<double>(d);
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        y.row(r) = centered * inv_std(r);
    }
    Node* xn = x.node().get();
    Mat y_saved = y;
    return make_op(std::move(y), {x}, [xn, y_saved, inv_std](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double gmean = g.row(r).mean();
            const double gy = g.row(r).cwiseProduct(y_saved.row(r)).mean();
            dx.row(r) = (inv_std(r) * (g.row(r).array() - gmean - y_saved.row(r).array() * gy)).matrix();
        }
        xn->accum_grad(dx);
    });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Var gelu(const Var& x) {
    Mat y = x.val().unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
    Node* xn = x.node().get();
    return make_op(std::move(y), {x}, [xn](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = xn->value.unaryExpr([](double v) {
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            return cdf + v * pdf;
        });
        xn->accum_grad(g.cwiseProduct(dx));
    });
}

Var silu(const Var& x) {
    Mat y = x.val().unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
    Node* xn = x.node().get();
    return make_op(std::move(y), {x}, [xn](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = xn->value.unaryExpr([](double v) {
            const double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 + v * (1.0 - s));
        });
        xn->accum_grad(g.cwiseProduct(dx));
    });
}

Var softmax_rows(const Var& x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.val().row(r).maxCoeff();
        const Eigen::RowVectorXd e = (x.val().row(r).array() - mx).exp().matrix();
        y.row(r) = e / e.sum();
    }
    Node* xn = x.node().get();
    Mat y_saved = y;
    return make_op(std::move(y), {x}, [xn, y_saved](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double s = g.row(r).cwiseProduct(y_saved.row(r)).sum();
            dx.row(r) = y_saved.row(r).cwiseProduct((g.row(r).array() - s).matrix());
        }
        xn->accum_grad(dx);
    });
}

Var l2normalize_rows(const Var& x) {
    Mat y(x.rows(), x.cols());
    Eigen::VectorXd inv_norm(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double n = std::sqrt(x.val().row(r).squaredNorm() + 1e-24);
        inv_norm(r) = 1.0 / n;
        y.row(r) = x.val().row(r) * inv_norm(r);
    }
    Node* xn = x.node().get();
    Mat y_saved = y;
    return make_op(std::move(y), {x}, [xn, y_saved, inv_norm](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double gy = g.row(r).cwiseProduct(y_saved.row(r)).sum();
            dx.row(r) = inv_norm(r) * (g.row(r) - gy * y_saved.row(r));
        }
        xn->accum_grad(dx);
    });
}

Var gather_rows(const Var& x, const IndexSet& indices) {
    Mat y(static_cast<Eigen::Index>(indices.size()), x.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= x.rows()) throw InvalidInput("gather_rows: index out of range");
        y.row(static_cast<Eigen::Index>(i)) = x.val().row(indices[i]);
    }
    Node* xn = x.node().get();
    const Eigen::Index src_rows = x.rows();
    IndexSet idx = indices;
    return make_op(std::move(y), {x}, [xn, idx, src_rows](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = Mat::Zero(src_rows, g.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            dx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        xn->accum_grad(dx);
    });
}

Var slice_rows(const Var& x, Eigen::Index r0, Eigen::Index len) {
    if (r0 < 0 || len < 0 || r0 + len > x.rows()) throw InvalidInput("slice_rows: range out of bounds");
    Node* xn = x.node().get();
    const Eigen::Index total = x.rows();
    return make_op(x.val().middleRows(r0, len), {x}, [xn, r0, len, total](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = Mat::Zero(total, g.cols());
        dx.middleRows(r0, len) = g;
        xn->accum_grad(dx);
    });
}

Var slice_cols(const Var& x, Eigen::Index c0, Eigen::Index len) {
    if (c0 < 0 || len < 0 || c0 + len > x.cols()) throw InvalidInput("slice_cols: range out of bounds");
    Node* xn = x.node().get();
    const Eigen::Index total = x.cols();
    return make_op(x.val().middleCols(c0, len), {x}, [xn, c0, len, total](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = Mat::Zero(g.rows(), total);
        dx.middleCols(c0, len) = g;
        xn->accum_grad(dx);
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidInput("concat_rows: no parts");
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts.front().cols();
    for (const Var& p : parts) {
        if (p.cols() != cols) throw InvalidInput("concat_rows: column mismatch");
        rows += p.rows();
    }
    Mat y(rows, cols);
    std::vector<Eigen::Index> offsets(parts.size());
    std::vector<Eigen::Index> sizes(parts.size());
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        offsets[i] = at;
        sizes[i] = parts[i].rows();
        y.middleRows(at, parts[i].rows()) = parts[i].val();
        at += parts[i].rows();
    }
    std::vector<Node*> nodes;
    nodes.reserve(parts.size());
    for (const Var& p : parts) nodes.push_back(p.node().get());
    return make_op(std::move(y), parts, [nodes, offsets, sizes](const Mat& g) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i]->requires_grad) nodes[i]->accum_grad(g.middleRows(offsets[i], sizes[i]));
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidInput("concat_cols: no parts");
    Eigen::Index cols = 0;
    const Eigen::Index rows = parts.front().rows();
    for (const Var& p : parts) {
        if (p.rows() != rows) throw InvalidInput("concat_cols: row mismatch");
        cols += p.cols();
    }
    Mat y(rows, cols);
    std::vector<Eigen::Index> offsets(parts.size());
    std::vector<Eigen::Index> sizes(parts.size());
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        offsets[i] = at;
        sizes[i] = parts[i].cols();
        y.middleCols(at, parts[i].cols()) = parts[i].val();
        at += parts[i].cols();
    }
    std::vector<Node*> nodes;
    nodes.reserve(parts.size());
    for (const Var& p : parts) nodes.push_back(p.node().get());
    return make_op(std::move(y), parts, [nodes, offsets, sizes](const Mat& g) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i]->requires_grad) nodes[i]->accum_grad(g.middleCols(offsets[i], sizes[i]));
    });
}

Var reshape_rowmajor(const Var& x, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != x.rows() * x.cols()) throw InvalidInput("reshape_rowmajor: size mismatch");
    const Eigen::Index in_cols = x.cols();
    Mat y(rows, cols);
    for (Eigen::Index i = 0; i < rows * cols; ++i)
        y(i / cols, i % cols) = x.val()(i / in_cols, i % in_cols);
    Node* xn = x.node().get();
    const Eigen::Index in_rows = x.rows();
    return make_op(std::move(y), {x}, [xn, in_rows, in_cols, cols](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx(in_rows, in_cols);
        const Eigen::Index total = in_rows * in_cols;
        for (Eigen::Index i = 0; i < total; ++i)
            dx(i / in_cols, i % in_cols) = g(i / cols, i % cols);
        xn->accum_grad(dx);
    });
}

Var segment_max(const Var& x, Eigen::Index seg) {
    if (seg < 1 || x.rows() % seg != 0) throw InvalidInput("segment_max: rows not a multiple of segment size");
    const Eigen::Index out_rows = x.rows() / seg;
    Mat y(out_rows, x.cols());
    Eigen::MatrixXi argmax(out_rows, x.cols());
    for (Eigen::Index s = 0; s < out_rows; ++s) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            Eigen::Index best = s * seg;
            for (Eigen::Index r = s * seg + 1; r < (s + 1) * seg; ++r)
                if (x.val()(r, c) > x.val()(best, c)) best = r;
            y(s, c) = x.val()(best, c);
            argmax(s, c) = static_cast<int>(best);
        }
    }
    Node* xn = x.node().get();
    const Eigen::Index in_rows = x.rows();
    return make_op(std::move(y), {x}, [xn, argmax, in_rows](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx = Mat::Zero(in_rows, g.cols());
        for (Eigen::Index s = 0; s < g.rows(); ++s)
            for (Eigen::Index c = 0; c < g.cols(); ++c)
                dx(argmax(s, c), c) += g(s, c);
        xn->accum_grad(dx);
    });
}

Var repeat_rows(const Var& x, Eigen::Index times) {
    if (times < 1) throw InvalidInput("repeat_rows: times must be >= 1");
    Mat y(x.rows() * times, x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index t = 0; t < times; ++t) y.row(r * times + t) = x.val().row(r);
    Node* xn = x.node().get();
    const Eigen::Index in_rows = x.rows();
    return make_op(std::move(y), {x}, [xn, times, in_rows](const Mat& g) {
        if (!xn->requires_grad) return;
        Mat dx(in_rows, g.cols());
        for (Eigen::Index r = 0; r < in_rows; ++r) {
            dx.row(r) = g.row(r * times);
            for (Eigen::Index t = 1; t < times; ++t) dx.row(r) += g.row(r * times + t);
        }
        xn->accum_grad(dx);
    });
}

Var sum_all(const Var& x) {
    Mat y(1, 1);
    y(0, 0) = x.val().sum();
    Node* xn = x.node().get();
    const Eigen::Index r = x.rows(), c = x.cols();
    return make_op(std::move(y), {x}, [xn, r, c](const Mat& g) {
        if (xn->requires_grad) xn->accum_grad(Mat::Constant(r, c, g(0, 0)));
    });
}

Var mean_all(const Var& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.rows() * x.cols()));
}

Var dot(const Var& a, const Var& b) {
    check_same_shape(a, b, "dot");
    Mat y(1, 1);
    y(0, 0) = a.val().cwiseProduct(b.val()).sum();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make_op(std::move(y), {a, b}, [an, bn](const Mat& g) {
        if (an->requires_grad) an->accum_grad(g(0, 0) * bn->value);
        if (bn->requires_grad) bn->accum_grad(g(0, 0) * an->value);
    });
}

Var detach(const Var& x) { return Var::constant(x.val()); }

Var smooth_l1(const Var& pred, const Mat& target, double beta) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw InvalidInput("smooth_l1: shape mismatch");
    if (beta <= 0.0) throw InvalidInput("smooth_l1: beta must be positive");
    const Mat diff = pred.val() - target;
    const double n = static_cast<double>(diff.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
        const double d = std::abs(diff(i));
        total += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
    }
    Mat y(1, 1);
    y(0, 0) = total / n;
    Node* pn = pred.node().get();
    return make_op(std::move(y), {pred}, [pn, diff, beta, n](const Mat& g) {
        if (!pn->requires_grad) return;
        Mat dx = diff.unaryExpr([beta](double d) {
            return std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0);
        });
        pn->accum_grad((g(0, 0) / n) * dx);
    });
}

Var cross_entropy_logits(const Var& logits, Eigen::Index target) {
    if (logits.rows() != 1) throw InvalidInput("cross_entropy_logits: logits must be 1 x C");
    if (target < 0 || target >= logits.cols()) throw InvalidInput("cross_entropy_logits: target out of range");
    const double mx = logits.val().maxCoeff();
    const Eigen::RowVectorXd e = (logits.val().row(0).array() - mx).exp().matrix();
    const double lse = mx + std::log(e.sum());
    Mat y(1, 1);
    y(0, 0) = lse - logits.val()(0, target);
    Eigen::RowVectorXd probs = e / e.sum();
    Node* ln = logits.node().get();
    return make_op(std::move(y), {logits}, [ln, probs, target](const Mat& g) {
        if (!ln->requires_grad) return;
        Mat dx = probs;
        dx(0, target) -= 1.0;
        ln->accum_grad(g(0, 0) * dx);
    });
}

Var chamfer_tokens(const Var& pred, const Mat& target, Eigen::Index groups, Eigen::Index group_size) {
    if (pred.cols() != 3 || target.cols() != 3) throw InvalidInput("chamfer_tokens: expected x,y,z columns");
    if (pred.rows() != groups * group_size || target.rows() != groups * group_size)
        throw InvalidInput("chamfer_tokens: shape mismatch");

    double total = 0.0;
    for (Eigen::Index g = 0; g < groups; ++g) {
        const PointCloud pa = pred.val().middleRows(g * group_size, group_size);
        const PointCloud pb = target.middleRows(g * group_size, group_size);
        total += chamfer_l2(pa, pb);
    }
    Mat y(1, 1);
    y(0, 0) = total / static_cast<double>(groups);

    Node* pn = pred.node().get();
    Mat pred_saved = pred.val();
    Mat target_saved = target;
    return make_op(std::move(y), {pred}, [pn, pred_saved, target_saved, groups, group_size](const Mat& gout) {
        if (!pn->requires_grad) return;
        Mat dx(pred_saved.rows(), 3);
        const double w = gout(0, 0) / static_cast<double>(groups);
        for (Eigen::Index g = 0; g < groups; ++g) {
            const PointCloud pa = pred_saved.middleRows(g * group_size, group_size);
            const PointCloud pb = target_saved.middleRows(g * group_size, group_size);
            dx.middleRows(g * group_size, group_size) = w * chamfer_l2_grad(pa, pb).da;
        }
        pn->accum_grad(dx);
    });
}

}  // namespace dualdn::nn
