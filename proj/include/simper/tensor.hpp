#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "simper/errors.hpp"

namespace simper {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Consumes this node's grad and pushes contributions into the parents.
    std::function<void(const std::vector<double>&)> backward;

    void accumulate(const double* g, std::size_t n) {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) grad[i] += g[i];
    }
    void accumulate_scalar(double g) { accumulate(&g, 1); }
};

}  // namespace detail

// Dense row-major tensor of doubles with reverse-mode autodiff. Tensors are
// cheap shared handles; ops build a DAG only while some input requires a
// gradient, so inference-time math carries no tape overhead.
class Tensor {
public:
    Tensor() = default;

    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        if (n == 0)
            throw dimension_error("tensor: zero-sized shapes are not supported " + shape_str(shape));
        if (n != values.size())
            throw dimension_error("tensor: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(values.size()) + " values");
        auto node = std::make_shared<detail::TensorNode>();
        node->shape = std::move(shape);
        node->value = std::move(values);
        node->requires_grad = requires_grad;
        Tensor t;
        t.n_ = std::move(node);
        return t;
    }

    static Tensor full(Shape shape, double v, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        return from_values(std::move(shape), std::vector<double>(n, v), requires_grad);
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), 0.0, requires_grad);
    }

    static Tensor ones(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), 1.0, requires_grad);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from_values(Shape{}, {v}, requires_grad);
    }

    // Generic op factory: `backward` receives the output gradient and is
    // responsible for accumulating into the parents it captured.
    static Tensor make_op(Shape shape, std::vector<double> values, const std::vector<Tensor>& parents,
                          std::function<void(const std::vector<double>&)> backward) {
        Tensor out = from_values(std::move(shape), std::move(values), false);
        bool needs = false;
        for (const Tensor& p : parents)
            if (p.requires_grad()) needs = true;
        if (needs) {
            out.n_->requires_grad = true;
            out.n_->is_leaf = false;
            for (const Tensor& p : parents) out.n_->parents.push_back(p.n_);
            out.n_->backward = std::move(backward);
        }
        return out;
    }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    std::size_t rank() const { return n_->shape.size(); }
    std::size_t numel() const { return n_->value.size(); }
    bool requires_grad() const { return n_->requires_grad; }
    bool is_leaf() const { return n_->is_leaf; }

    const std::vector<double>& values() const { return n_->value; }
    // Mutable access, intended for parameter initialization and optimizer
    // updates on leaves; mutating an interior node invalidates its tape.
    std::vector<double>& mutable_values() { return n_->value; }

    const std::vector<double>& grad() const {
        static const std::vector<double> kEmpty;
        return n_->grad.empty() ? kEmpty : n_->grad;
    }
    double grad_at(std::size_t i) const { return n_->grad.empty() ? 0.0 : n_->grad[i]; }
    void zero_grad() { n_->grad.clear(); }
    void accumulate_grad(const std::vector<double>& g) { n_->accumulate(g.data(), g.size()); }

    double item() const {
        if (numel() != 1)
            throw contract_error("tensor: item() on non-scalar " + shape_str(shape()));
        return n_->value[0];
    }

    detail::TensorNode* node() const { return n_.get(); }

private:
    std::shared_ptr<detail::TensorNode> n_;
};

namespace detail {

inline void check_finite(const std::vector<double>& v, const char* op) {
#ifdef SIMPER_TENSOR_CHECK_FINITE
    for (double x : v)
        if (!std::isfinite(x)) throw numeric_error(std::string("tensor: non-finite value after ") + op);
#else
    (void)v;
    (void)op;
#endif
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        throw dimension_error("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                              shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    const double* A = a.values().data();
    const double* B = b.values().data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    detail::check_finite(out, "matmul");
    return Tensor::make_op({m, n}, std::move(out), {a, b}, [a, b, m, k, n](const std::vector<double>& g) {
        if (a.requires_grad()) {
            // dA = g . B^T
            std::vector<double> da(m * k, 0.0);
            const double* B = b.values().data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                double* drow = da.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = B + p * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    drow[p] = acc;
                }
            }
            a.node()->accumulate(da.data(), da.size());
        }
        if (b.requires_grad()) {
            // dB = A^T . g
            std::vector<double> db(k * n, 0.0);
            const double* A = a.values().data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = A + i * k;
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = arow[p];
                    double* drow = db.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
                }
            }
            b.node()->accumulate(db.data(), db.size());
        }
    });
}

// ---------------------------------------------------------------------------
// elementwise add/sub/mul/div with rank-0 broadcast
// ---------------------------------------------------------------------------

enum class EwKind { Add, Sub, Mul, Div };

inline Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind) {
    const bool a_scalar = a.rank() == 0;
    const bool b_scalar = b.rank() == 0;
    if (!a_scalar && !b_scalar && a.shape() != b.shape())
        throw dimension_error("elementwise: shape mismatch " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
    if (kind == EwKind::Div) {
        for (double d : b.values())
            if (d == 0.0) throw numeric_error("elementwise: division by zero");
    }
    const Shape& out_shape = a_scalar ? b.shape() : a.shape();
    const std::size_t n = shape_numel(out_shape);
    std::vector<double> out(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    auto A = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
    auto B = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };
    switch (kind) {
        case EwKind::Add:
            for (std::size_t i = 0; i < n; ++i) out[i] = A(i) + B(i);
            break;
        case EwKind::Sub:
            for (std::size_t i = 0; i < n; ++i) out[i] = A(i) - B(i);
            break;
        case EwKind::Mul:
            for (std::size_t i = 0; i < n; ++i) out[i] = A(i) * B(i);
            break;
        case EwKind::Div:
            for (std::size_t i = 0; i < n; ++i) out[i] = A(i) / B(i);
            break;
    }
    detail::check_finite(out, "elementwise");
    return Tensor::make_op(out_shape, std::move(out), {a, b},
                           [a, b, kind, a_scalar, b_scalar, n](const std::vector<double>& g) {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        auto A = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
        auto B = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };
        if (a.requires_grad()) {
            std::vector<double> da(a.numel(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double d = 0.0;
                switch (kind) {
                    case EwKind::Add: d = g[i]; break;
                    case EwKind::Sub: d = g[i]; break;
                    case EwKind::Mul: d = g[i] * B(i); break;
                    case EwKind::Div: d = g[i] / B(i); break;
                }
                da[a_scalar ? 0 : i] += d;
            }
            a.node()->accumulate(da.data(), da.size());
        }
        if (b.requires_grad()) {
            std::vector<double> db(b.numel(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double d = 0.0;
                switch (kind) {
                    case EwKind::Add: d = g[i]; break;
                    case EwKind::Sub: d = -g[i]; break;
                    case EwKind::Mul: d = g[i] * A(i); break;
                    case EwKind::Div: d = -g[i] * A(i) / (B(i) * B(i)); break;
                }
                db[b_scalar ? 0 : i] += d;
            }
            b.node()->accumulate(db.data(), db.size());
        }
    });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Add); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Sub); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Mul); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Div); }
inline Tensor operator+(const Tensor& a, double b) { return a + Tensor::scalar(b); }
inline Tensor operator-(const Tensor& a, double b) { return a - Tensor::scalar(b); }
inline Tensor operator*(const Tensor& a, double b) { return a * Tensor::scalar(b); }
inline Tensor operator/(const Tensor& a, double b) { return a / Tensor::scalar(b); }
inline Tensor operator-(const Tensor& a) { return Tensor::scalar(0.0) - a; }

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

enum class ReduceKind { Sum, Mean, Max };

namespace detail {

struct AxisView {
    std::size_t outer = 1, axis = 1, inner = 1;
};

inline AxisView axis_view(const Shape& s, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.axis = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

}  // namespace detail

// Reduce over all elements (axis omitted, result rank 0) or along one axis
// (that axis dropped from the shape). Max routes the gradient to the argmax
// element, ties broken toward the lowest index.
inline Tensor reduce(const Tensor& a, ReduceKind kind, std::ptrdiff_t axis = -1) {
    const std::size_t n = a.numel();
    if (axis < 0) {
        double acc;
        std::size_t arg = 0;
        const double* v = a.values().data();
        if (kind == ReduceKind::Max) {
            acc = v[0];
            for (std::size_t i = 1; i < n; ++i)
                if (v[i] > acc) { acc = v[i]; arg = i; }
        } else {
            acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += v[i];
            if (kind == ReduceKind::Mean) acc /= static_cast<double>(n);
        }
        return Tensor::make_op({}, {acc}, {a}, [a, kind, n, arg](const std::vector<double>& g) {
            if (!a.requires_grad()) return;
            std::vector<double> da(n, 0.0);
            if (kind == ReduceKind::Max) {
                da[arg] = g[0];
            } else {
                const double s = kind == ReduceKind::Mean ? g[0] / static_cast<double>(n) : g[0];
                std::fill(da.begin(), da.end(), s);
            }
            a.node()->accumulate(da.data(), da.size());
        });
    }

    if (static_cast<std::size_t>(axis) >= a.rank())
        throw dimension_error("reduce: axis " + std::to_string(axis) + " out of range for " +
                              shape_str(a.shape()));
    const auto view = detail::axis_view(a.shape(), static_cast<std::size_t>(axis));
    Shape out_shape;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (i != static_cast<std::size_t>(axis)) out_shape.push_back(a.shape()[i]);
    const std::size_t out_n = view.outer * view.inner;
    std::vector<double> out(out_n, 0.0);
    std::vector<std::size_t> args;
    const double* v = a.values().data();
    if (kind == ReduceKind::Max) {
        args.assign(out_n, 0);
        for (std::size_t o = 0; o < view.outer; ++o)
            for (std::size_t i = 0; i < view.inner; ++i) {
                double best = v[o * view.axis * view.inner + i];
                std::size_t bj = 0;
                for (std::size_t j = 1; j < view.axis; ++j) {
                    double x = v[(o * view.axis + j) * view.inner + i];
                    if (x > best) { best = x; bj = j; }
                }
                out[o * view.inner + i] = best;
                args[o * view.inner + i] = bj;
            }
    } else {
        for (std::size_t o = 0; o < view.outer; ++o)
            for (std::size_t j = 0; j < view.axis; ++j)
                for (std::size_t i = 0; i < view.inner; ++i)
                    out[o * view.inner + i] += v[(o * view.axis + j) * view.inner + i];
        if (kind == ReduceKind::Mean)
            for (double& x : out) x /= static_cast<double>(view.axis);
    }
    return Tensor::make_op(out_shape, std::move(out), {a},
                           [a, kind, view, args](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel(), 0.0);
        if (kind == ReduceKind::Max) {
            for (std::size_t o = 0; o < view.outer; ++o)
                for (std::size_t i = 0; i < view.inner; ++i) {
                    std::size_t bj = args[o * view.inner + i];
                    da[(o * view.axis + bj) * view.inner + i] = g[o * view.inner + i];
                }
        } else {
            const double scale = kind == ReduceKind::Mean ? 1.0 / static_cast<double>(view.axis) : 1.0;
            for (std::size_t o = 0; o < view.outer; ++o)
                for (std::size_t j = 0; j < view.axis; ++j)
                    for (std::size_t i = 0; i < view.inner; ++i)
                        da[(o * view.axis + j) * view.inner + i] = scale * g[o * view.inner + i];
        }
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor sum(const Tensor& a, std::ptrdiff_t axis = -1) { return reduce(a, ReduceKind::Sum, axis); }
inline Tensor mean(const Tensor& a, std::ptrdiff_t axis = -1) { return reduce(a, ReduceKind::Mean, axis); }
inline Tensor max(const Tensor& a, std::ptrdiff_t axis = -1) { return reduce(a, ReduceKind::Max, axis); }

// ---------------------------------------------------------------------------
// pointwise nonlinearities
// ---------------------------------------------------------------------------

inline Tensor tanh(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
    return Tensor::make_op(a.shape(), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel());
        for (std::size_t i = 0; i < da.size(); ++i) {
            double y = std::tanh(a.values()[i]);
            da[i] = g[i] * (1.0 - y * y);
        }
        a.node()->accumulate(da.data(), da.size());
    });
}

// relu; the subgradient at exactly 0 is 0.
inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    return Tensor::make_op(a.shape(), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel());
        for (std::size_t i = 0; i < da.size(); ++i) da[i] = a.values()[i] > 0.0 ? g[i] : 0.0;
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor exp(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
    detail::check_finite(out, "exp");
    return Tensor::make_op(a.shape(), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel());
        for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] * std::exp(a.values()[i]);
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor log(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a.values()[i] <= 0.0) throw numeric_error("log: non-positive input");
        out[i] = std::log(a.values()[i]);
    }
    return Tensor::make_op(a.shape(), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel());
        for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] / a.values()[i];
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor sqrt(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a.values()[i] < 0.0) throw numeric_error("sqrt: negative input");
        out[i] = std::sqrt(a.values()[i]);
    }
    return Tensor::make_op(a.shape(), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel());
        for (std::size_t i = 0; i < da.size(); ++i) {
            double y = std::sqrt(a.values()[i]);
            if (y == 0.0) throw numeric_error("sqrt: gradient undefined at 0");
            da[i] = g[i] * 0.5 / y;
        }
        a.node()->accumulate(da.data(), da.size());
    });
}

// ---------------------------------------------------------------------------
// data-movement ops
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw dimension_error("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    std::vector<double> out = a.values();
    return Tensor::make_op(std::move(shape), std::move(out), {a}, [a](const std::vector<double>& g) {
        if (a.requires_grad()) a.node()->accumulate(g.data(), g.size());
    });
}

// Column c of a [T x C] matrix as a length-T vector.
inline Tensor take_column(const Tensor& a, std::size_t c) {
    if (a.rank() != 2 || c >= a.shape()[1])
        throw dimension_error("take_column: bad column " + std::to_string(c) + " for " +
                              shape_str(a.shape()));
    const std::size_t t = a.shape()[0], w = a.shape()[1];
    std::vector<double> out(t);
    for (std::size_t i = 0; i < t; ++i) out[i] = a.values()[i * w + c];
    return Tensor::make_op({t}, std::move(out), {a}, [a, c, t, w](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel(), 0.0);
        for (std::size_t i = 0; i < t; ++i) da[i * w + c] = g[i];
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor slice1d(const Tensor& a, std::size_t start, std::size_t len) {
    if (a.rank() != 1 || start + len > a.shape()[0] || len == 0)
        throw dimension_error("slice1d: [" + std::to_string(start) + ", " +
                              std::to_string(start + len) + ") of " + shape_str(a.shape()));
    std::vector<double> out(a.values().begin() + start, a.values().begin() + start + len);
    return Tensor::make_op({len}, std::move(out), {a}, [a, start, len](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(a.numel(), 0.0);
        for (std::size_t i = 0; i < len; ++i) da[start + i] = g[i];
        a.node()->accumulate(da.data(), da.size());
    });
}

// out[t] = a[(t + shift) mod n]
inline Tensor circshift1d(const Tensor& a, std::size_t shift) {
    if (a.rank() != 1) throw dimension_error("circshift1d: rank-1 input required");
    const std::size_t n = a.shape()[0];
    shift %= n;
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = a.values()[(t + shift) % n];
    return Tensor::make_op({n}, std::move(out), {a}, [a, shift, n](const std::vector<double>& g) {
        if (!a.requires_grad()) return;
        std::vector<double> da(n, 0.0);
        for (std::size_t t = 0; t < n; ++t) da[(t + shift) % n] = g[t];
        a.node()->accumulate(da.data(), da.size());
    });
}

inline Tensor stack(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw dimension_error("stack: empty input");
    const Shape& inner = parts[0].shape();
    for (const Tensor& p : parts)
        if (p.shape() != inner) throw dimension_error("stack: mismatched part shapes");
    Shape out_shape;
    out_shape.push_back(parts.size());
    out_shape.insert(out_shape.end(), inner.begin(), inner.end());
    const std::size_t stride = shape_numel(inner);
    std::vector<double> out;
    out.reserve(parts.size() * stride);
    for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    return Tensor::make_op(std::move(out_shape), std::move(out), parts,
                           [parts, stride](const std::vector<double>& g) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (!parts[i].requires_grad()) continue;
            parts[i].node()->accumulate(g.data() + i * stride, stride);
        }
    });
}

inline Tensor dot(const Tensor& a, const Tensor& b) { return sum(a * b); }

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Reverse-mode sweep from a scalar root. The tape is the topological order of
// the reachable gradient-requiring subgraph; every node is visited exactly
// once. Interior gradients are released after use, so repeated backward calls
// accumulate cleanly into the leaves.
inline void backward(const Tensor& root) {
    if (root.rank() != 0) throw contract_error("backward: root must be scalar, got " + shape_str(root.shape()));
    if (!root.requires_grad()) return;

    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> seen;
    // iterative post-order DFS over parents
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            detail::TensorNode* p = node->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node()->accumulate_scalar(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorNode* node = *it;
        if (!node->backward) continue;  // leaf
        if (node->grad.empty()) continue;  // no contribution reached this node
        node->backward(node->grad);
        node->grad.clear();  // interior grads are not retained
    }
}

}  // namespace simper
