#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "sgcl/error.hpp"

namespace sgcl::ad {

template <typename S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;
    bool requires_grad = false;
    std::vector<S> grad;  // same length as data when in use

    int64_t numel() const {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }

    static TensorT zeros(std::vector<int> shape) {
        TensorT t;
        t.shape = std::move(shape);
        t.data.assign(static_cast<size_t>(t.numel()), S(0));
        return t;
    }

    static TensorT from(std::vector<int> shape, std::vector<S> data) {
        TensorT t;
        t.shape = std::move(shape);
        t.data = std::move(data);
        if (static_cast<int64_t>(t.data.size()) != t.numel())
            fail_internal("tensor data length does not match shape");
        return t;
    }

    static TensorT scalar(S v) { return from({1}, {v}); }

    S& at2(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    S at2(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
};

using Tensor = TensorT<float>;

template <typename S>
struct ParameterT {
    std::string name;
    TensorT<S> value;  // value.requires_grad == true, value.grad allocated
};

namespace detail {

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += " ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace detail

// Reverse-mode tape. Values are stored per node; backward closures accumulate
// into node gradients and finally into bound parameters. Single-threaded by
// contract; independent tapes may run concurrently.
template <typename S>
class TapeT {
public:
    struct Var {
        int idx = -1;
        bool valid() const { return idx >= 0; }
    };

    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    size_t size() const { return nodes_.size(); }

    const TensorT<S>& value(Var v) const { return node(v).value; }
    const std::vector<int>& shape(Var v) const { return node(v).value.shape; }

    // Gradient of the last backward() w.r.t. this node (zeros if untouched).
    TensorT<S> grad(Var v) const {
        const Node& n = node(v);
        TensorT<S> g = TensorT<S>::zeros(n.value.shape);
        if (!n.grad.empty()) g.data = n.grad;
        return g;
    }

    // --- leaves ----------------------------------------------------------

    Var constant(TensorT<S> t) { return push(std::move(t), false, nullptr); }

    Var input(TensorT<S> t, bool requires_grad = false) {
        check_finite(t);
        return push(std::move(t), requires_grad, nullptr);
    }

    Var param(ParameterT<S>& p) {
        check_finite(p.value);
        return push(p.value, true, &p);
    }

    // --- elementwise -----------------------------------------------------

    Var add(Var a, Var b) {
        same_shape(a, b, "add");
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto &da = data(a), &db = data(b);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = da[i] + db[i];
        Var r = push(std::move(out), needs(a) || needs(b), nullptr);
        record(r, [this, a, b, r] {
            axpy(a, S(1), grad_of(r));
            axpy(b, S(1), grad_of(r));
        });
        return r;
    }

    Var sub(Var a, Var b) {
        same_shape(a, b, "sub");
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto &da = data(a), &db = data(b);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = da[i] - db[i];
        Var r = push(std::move(out), needs(a) || needs(b), nullptr);
        record(r, [this, a, b, r] {
            axpy(a, S(1), grad_of(r));
            axpy(b, S(-1), grad_of(r));
        });
        return r;
    }

    Var mul(Var a, Var b) {
        same_shape(a, b, "mul");
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto &da = data(a), &db = data(b);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = da[i] * db[i];
        Var r = push(std::move(out), needs(a) || needs(b), nullptr);
        record(r, [this, a, b, r] {
            const auto& g = grad_of(r);
            if (needs(a)) {
                auto& ga = grad_buf(a);
                const auto& db2 = data(b);
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * db2[i];
            }
            if (needs(b)) {
                auto& gb = grad_buf(b);
                const auto& da2 = data(a);
                for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * da2[i];
            }
        });
        return r;
    }

    Var scale(Var a, double c) {
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto& da = data(a);
        const S cs = static_cast<S>(c);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = da[i] * cs;
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, cs, r] { axpy(a, cs, grad_of(r)); });
        return r;
    }

    Var relu(Var a) {
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto& da = data(a);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = da[i] > S(0) ? da[i] : S(0);
        Var r = push(std::move(out), needs(a), nullptr);
        // Subgradient at 0 is 0.
        record(r, [this, a, r] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& da2 = data(a);
            const auto& g = grad_of(r);
            for (size_t i = 0; i < g.size(); ++i)
                if (da2[i] > S(0)) ga[i] += g[i];
        });
        return r;
    }

    Var exp_elem(Var a) {
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto& da = data(a);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::exp(da[i]);
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            const auto& y = data(r);
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        });
        return r;
    }

    // --- broadcasts ------------------------------------------------------

    // (n, m) + row vector (m), broadcast over rows.
    Var add_rowvec(Var m, Var v) {
        require(ndim(m) == 2 && ndim(v) == 1 && shape(m)[1] == shape(v)[0],
                "add_rowvec", m, v);
        const int rows = shape(m)[0], cols = shape(m)[1];
        TensorT<S> out = TensorT<S>::zeros(shape(m));
        const auto &dm = data(m), &dv = data(v);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                out.data[static_cast<size_t>(i) * cols + j] = dm[static_cast<size_t>(i) * cols + j] + dv[j];
        Var r = push(std::move(out), needs(m) || needs(v), nullptr);
        record(r, [this, m, v, r, rows, cols] {
            const auto& g = grad_of(r);
            if (needs(m)) axpy(m, S(1), g);
            if (needs(v)) {
                auto& gv = grad_buf(v);
                for (int j = 0; j < cols; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < rows; ++i) acc += g[static_cast<size_t>(i) * cols + j];
                    gv[j] += static_cast<S>(acc);
                }
            }
        });
        return r;
    }

    // (n, m) + column vector (n), broadcast over columns.
    Var add_colvec(Var m, Var v) {
        require(ndim(m) == 2 && ndim(v) == 1 && shape(m)[0] == shape(v)[0],
                "add_colvec", m, v);
        const int rows = shape(m)[0], cols = shape(m)[1];
        TensorT<S> out = TensorT<S>::zeros(shape(m));
        const auto &dm = data(m), &dv = data(v);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                out.data[static_cast<size_t>(i) * cols + j] = dm[static_cast<size_t>(i) * cols + j] + dv[i];
        Var r = push(std::move(out), needs(m) || needs(v), nullptr);
        record(r, [this, m, v, r, rows, cols] {
            const auto& g = grad_of(r);
            if (needs(m)) axpy(m, S(1), g);
            if (needs(v)) {
                auto& gv = grad_buf(v);
                for (int i = 0; i < rows; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < cols; ++j) acc += g[static_cast<size_t>(i) * cols + j];
                    gv[i] += static_cast<S>(acc);
                }
            }
        });
        return r;
    }

    // Multiply every element by a 1-element scalar variable.
    Var scale_by(Var m, Var s) {
        require(numel(s) == 1, "scale_by", m, s);
        const S sv = data(s)[0];
        TensorT<S> out = TensorT<S>::zeros(shape(m));
        const auto& dm = data(m);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = dm[i] * sv;
        Var r = push(std::move(out), needs(m) || needs(s), nullptr);
        record(r, [this, m, s, sv, r] {
            const auto& g = grad_of(r);
            if (needs(m)) axpy(m, sv, g);
            if (needs(s)) {
                const auto& dm2 = data(m);
                double acc = 0.0;
                for (size_t i = 0; i < g.size(); ++i) acc += static_cast<double>(g[i]) * dm2[i];
                grad_buf(s)[0] += static_cast<S>(acc);
            }
        });
        return r;
    }

    // --- linear algebra ----------------------------------------------------

    Var matmul(Var a, Var b) {
        require(ndim(a) == 2 && ndim(b) == 2 && shape(a)[1] == shape(b)[0],
                "matmul", a, b);
        const int n = shape(a)[0], k = shape(a)[1], m = shape(b)[1];
        TensorT<S> out = TensorT<S>::zeros({n, m});
        gemm_nn(data(a), data(b), out.data, n, k, m);
        Var r = push(std::move(out), needs(a) || needs(b), nullptr);
        record(r, [this, a, b, r, n, k, m] {
            const auto& g = grad_of(r);
            if (needs(a)) {  // dA += g * B^T
                auto& ga = grad_buf(a);
                const auto& db = data(b);
                for (int i = 0; i < n; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (int j = 0; j < m; ++j)
                            acc += static_cast<double>(g[static_cast<size_t>(i) * m + j]) * db[static_cast<size_t>(p) * m + j];
                        ga[static_cast<size_t>(i) * k + p] += static_cast<S>(acc);
                    }
            }
            if (needs(b)) {  // dB += A^T * g
                auto& gb = grad_buf(b);
                const auto& da = data(a);
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < m; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < n; ++i)
                            acc += static_cast<double>(da[static_cast<size_t>(i) * k + p]) * g[static_cast<size_t>(i) * m + j];
                        gb[static_cast<size_t>(p) * m + j] += static_cast<S>(acc);
                    }
            }
        });
        return r;
    }

    // A (n,k) * B^T where B is (m,k); row-by-row dot products.
    Var matmul_nt(Var a, Var b) {
        require(ndim(a) == 2 && ndim(b) == 2 && shape(a)[1] == shape(b)[1],
                "matmul_nt", a, b);
        const int n = shape(a)[0], k = shape(a)[1], m = shape(b)[0];
        TensorT<S> out = TensorT<S>::zeros({n, m});
        const auto &da = data(a), &db = data(b);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                const S* ra = &da[static_cast<size_t>(i) * k];
                const S* rb = &db[static_cast<size_t>(j) * k];
                for (int p = 0; p < k; ++p) acc += static_cast<double>(ra[p]) * rb[p];
                out.data[static_cast<size_t>(i) * m + j] = static_cast<S>(acc);
            }
        Var r = push(std::move(out), needs(a) || needs(b), nullptr);
        record(r, [this, a, b, r, n, k, m] {
            const auto& g = grad_of(r);
            if (needs(a)) {  // dA += g * B
                auto& ga = grad_buf(a);
                const auto& db2 = data(b);
                for (int i = 0; i < n; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (int j = 0; j < m; ++j)
                            acc += static_cast<double>(g[static_cast<size_t>(i) * m + j]) * db2[static_cast<size_t>(j) * k + p];
                        ga[static_cast<size_t>(i) * k + p] += static_cast<S>(acc);
                    }
            }
            if (needs(b)) {  // dB += g^T * A
                auto& gb = grad_buf(b);
                const auto& da2 = data(a);
                for (int j = 0; j < m; ++j)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (int i = 0; i < n; ++i)
                            acc += static_cast<double>(g[static_cast<size_t>(i) * m + j]) * da2[static_cast<size_t>(i) * k + p];
                        gb[static_cast<size_t>(j) * k + p] += static_cast<S>(acc);
                    }
            }
        });
        return r;
    }

    Var transpose(Var a) {
        require(ndim(a) == 2, "transpose", a, a);
        const int n = shape(a)[0], m = shape(a)[1];
        TensorT<S> out = TensorT<S>::zeros({m, n});
        const auto& da = data(a);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                out.data[static_cast<size_t>(j) * n + i] = da[static_cast<size_t>(i) * m + j];
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r, n, m] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    ga[static_cast<size_t>(i) * m + j] += g[static_cast<size_t>(j) * n + i];
        });
        return r;
    }

    // --- reductions (64-bit accumulators) ----------------------------------

    Var sum_all(Var a) {
        double acc = 0.0;
        for (S v : data(a)) acc += static_cast<double>(v);
        Var r = push(TensorT<S>::scalar(static_cast<S>(acc)), needs(a), nullptr);
        record(r, [this, a, r] {
            if (!needs(a)) return;
            const S g = grad_of(r)[0];
            auto& ga = grad_buf(a);
            for (auto& v : ga) v += g;
        });
        return r;
    }

    Var mean_all(Var a) { return scale(sum_all(a), 1.0 / static_cast<double>(numel(a))); }

    // (n, m) -> (m): column means.
    Var mean_axis0(Var a) {
        require(ndim(a) == 2, "mean_axis0", a, a);
        const int n = shape(a)[0], m = shape(a)[1];
        TensorT<S> out = TensorT<S>::zeros({m});
        const auto& da = data(a);
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += da[static_cast<size_t>(i) * m + j];
            out.data[j] = static_cast<S>(acc / n);
        }
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r, n, m] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            const S inv = S(1) / static_cast<S>(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    ga[static_cast<size_t>(i) * m + j] += g[j] * inv;
        });
        return r;
    }

    // (n, m) -> (n): log(sum_j exp(x_ij)), max-shifted.
    Var logsumexp_rows(Var a) {
        require(ndim(a) == 2, "logsumexp_rows", a, a);
        const int n = shape(a)[0], m = shape(a)[1];
        TensorT<S> out = TensorT<S>::zeros({n});
        const auto& da = data(a);
        for (int i = 0; i < n; ++i) {
            const S* row = &da[static_cast<size_t>(i) * m];
            S mx = row[0];
            for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += std::exp(static_cast<double>(row[j] - mx));
            out.data[i] = mx + static_cast<S>(std::log(acc));
        }
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r, n, m] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            const auto& da2 = data(a);
            const auto& y = data(r);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) {
                    const S soft = std::exp(da2[static_cast<size_t>(i) * m + j] - y[i]);
                    ga[static_cast<size_t>(i) * m + j] += g[i] * soft;
                }
        });
        return r;
    }

    // --- shuffling ----------------------------------------------------------

    Var reshape(Var a, std::vector<int> new_shape) {
        TensorT<S> out;
        out.shape = std::move(new_shape);
        out.data = data(a);
        if (out.numel() != numel(a))
            fail_internal("shape error: reshape " + detail::shape_str(shape(a)) + " vs " +
                          detail::shape_str(out.shape));
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
        return r;
    }

    Var select_row(Var m, int row) {
        require(ndim(m) == 2, "select_row", m, m);
        const int rows = shape(m)[0], cols = shape(m)[1];
        if (row < 0 || row >= rows) fail_internal("select_row: index out of range");
        TensorT<S> out = TensorT<S>::zeros({cols});
        const auto& dm = data(m);
        for (int j = 0; j < cols; ++j) out.data[j] = dm[static_cast<size_t>(row) * cols + j];
        Var r = push(std::move(out), needs(m), nullptr);
        record(r, [this, m, r, row, cols] {
            if (!needs(m)) return;
            auto& gm = grad_buf(m);
            const auto& g = grad_of(r);
            for (int j = 0; j < cols; ++j) gm[static_cast<size_t>(row) * cols + j] += g[j];
        });
        return r;
    }

    // Stack 1-D vectors (k) and/or 2-D matrices (r, k) along axis 0.
    Var concat_axis0(const std::vector<Var>& parts) {
        if (parts.empty()) fail_internal("concat_axis0: empty input");
        int cols = ndim(parts[0]) == 1 ? shape(parts[0])[0] : shape(parts[0])[1];
        int total_rows = 0;
        for (Var p : parts) {
            int c = ndim(p) == 1 ? shape(p)[0] : shape(p)[1];
            if (ndim(p) > 2 || c != cols)
                fail_internal("shape error: concat_axis0 " + detail::shape_str(shape(p)) +
                              " vs width " + std::to_string(cols));
            total_rows += ndim(p) == 1 ? 1 : shape(p)[0];
        }
        TensorT<S> out = TensorT<S>::zeros({total_rows, cols});
        size_t off = 0;
        bool any_grad = false;
        for (Var p : parts) {
            const auto& dp = data(p);
            std::copy(dp.begin(), dp.end(), out.data.begin() + off);
            off += dp.size();
            any_grad = any_grad || needs(p);
        }
        Var r = push(std::move(out), any_grad, nullptr);
        record(r, [this, parts, r] {
            const auto& g = grad_of(r);
            size_t off2 = 0;
            for (Var p : parts) {
                const size_t n = data(p).size();
                if (needs(p)) {
                    auto& gp = grad_buf(p);
                    for (size_t i = 0; i < n; ++i) gp[i] += g[off2 + i];
                }
                off2 += n;
            }
        });
        return r;
    }

    // Concatenate 1-D vectors into one longer vector.
    Var concat_vec(const std::vector<Var>& parts) {
        if (parts.empty()) fail_internal("concat_vec: empty input");
        int total = 0;
        for (Var p : parts) {
            require(ndim(p) == 1, "concat_vec", p, p);
            total += shape(p)[0];
        }
        TensorT<S> out = TensorT<S>::zeros({total});
        size_t off = 0;
        bool any_grad = false;
        for (Var p : parts) {
            const auto& dp = data(p);
            std::copy(dp.begin(), dp.end(), out.data.begin() + off);
            off += dp.size();
            any_grad = any_grad || needs(p);
        }
        Var r = push(std::move(out), any_grad, nullptr);
        record(r, [this, parts, r] {
            const auto& g = grad_of(r);
            size_t off2 = 0;
            for (Var p : parts) {
                const size_t n = data(p).size();
                if (needs(p)) {
                    auto& gp = grad_buf(p);
                    for (size_t i = 0; i < n; ++i) gp[i] += g[off2 + i];
                }
                off2 += n;
            }
        });
        return r;
    }

    // --- normalization ------------------------------------------------------

    // Row-wise x / (|x| + eps); 1-D input treated as a single row.
    Var l2_normalize(Var a, double eps = 1e-8) {
        const bool vec = ndim(a) == 1;
        const int rows = vec ? 1 : shape(a)[0];
        const int cols = vec ? shape(a)[0] : shape(a)[1];
        TensorT<S> out = TensorT<S>::zeros(shape(a));
        const auto& da = data(a);
        std::vector<double> norms(rows);
        for (int i = 0; i < rows; ++i) {
            double acc = 0.0;
            const S* row = &da[static_cast<size_t>(i) * cols];
            for (int j = 0; j < cols; ++j) acc += static_cast<double>(row[j]) * row[j];
            norms[i] = std::sqrt(acc);
            const double denom = norms[i] + eps;
            for (int j = 0; j < cols; ++j)
                out.data[static_cast<size_t>(i) * cols + j] = static_cast<S>(row[j] / denom);
        }
        Var r = push(std::move(out), needs(a), nullptr);
        record(r, [this, a, r, rows, cols, norms, eps] {
            if (!needs(a)) return;
            auto& ga = grad_buf(a);
            const auto& g = grad_of(r);
            const auto& da2 = data(a);
            for (int i = 0; i < rows; ++i) {
                const S* row = &da2[static_cast<size_t>(i) * cols];
                const S* grow = &g[static_cast<size_t>(i) * cols];
                const double n = norms[i];
                const double denom = n + eps;
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += static_cast<double>(grow[j]) * row[j];
                // d/dx [x/(|x|+eps)] = I/(|x|+eps) - x x^T / (|x| (|x|+eps)^2)
                const double coef = (n > 0.0) ? dot / (n * denom * denom) : 0.0;
                for (int j = 0; j < cols; ++j)
                    ga[static_cast<size_t>(i) * cols + j] +=
                        static_cast<S>(grow[j] / denom - coef * row[j]);
            }
        });
        return r;
    }

    // cos(U, V)[i][j] with rows of U (n,d) and V (m,d); eps guards both norms.
    Var cosine_similarity_matrix(Var u, Var v, double eps = 1e-8) {
        return matmul_nt(l2_normalize(u, eps), l2_normalize(v, eps));
    }

    // --- convolution pieces -------------------------------------------------

    // (C, H, W) -> (C*kh*kw, H*W) patch matrix, zero padding, stride 1.
    Var im2col(Var img, int kh, int kw, int pad) {
        require(ndim(img) == 3, "im2col", img, img);
        const int C = shape(img)[0], H = shape(img)[1], W = shape(img)[2];
        const int rows = C * kh * kw, cols = H * W;
        // Source index per output cell, -1 for zero padding.
        std::vector<int32_t> src(static_cast<size_t>(rows) * cols, -1);
        for (int c = 0; c < C; ++c)
            for (int dy = 0; dy < kh; ++dy)
                for (int dx = 0; dx < kw; ++dx) {
                    const int row = (c * kh + dy) * kw + dx;
                    for (int y = 0; y < H; ++y)
                        for (int x = 0; x < W; ++x) {
                            const int sy = y + dy - pad, sx = x + dx - pad;
                            if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                            src[static_cast<size_t>(row) * cols + y * W + x] =
                                (c * H + sy) * W + sx;
                        }
                }
        TensorT<S> out = TensorT<S>::zeros({rows, cols});
        const auto& di = data(img);
        for (size_t i = 0; i < src.size(); ++i)
            if (src[i] >= 0) out.data[i] = di[static_cast<size_t>(src[i])];
        Var r = push(std::move(out), needs(img), nullptr);
        record(r, [this, img, r, src = std::move(src)] {
            if (!needs(img)) return;
            auto& gi = grad_buf(img);
            const auto& g = grad_of(r);
            for (size_t i = 0; i < src.size(); ++i)
                if (src[i] >= 0) gi[static_cast<size_t>(src[i])] += g[i];
        });
        return r;
    }

    // (C, H, W) -> (C, H/2, W/2), 2x2 mean, H and W must be even.
    Var avgpool2x2(Var img) {
        require(ndim(img) == 3, "avgpool2x2", img, img);
        const int C = shape(img)[0], H = shape(img)[1], W = shape(img)[2];
        if (H % 2 != 0 || W % 2 != 0) fail_internal("avgpool2x2: odd spatial dims");
        const int Ho = H / 2, Wo = W / 2;
        TensorT<S> out = TensorT<S>::zeros({C, Ho, Wo});
        const auto& di = data(img);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < Ho; ++y)
                for (int x = 0; x < Wo; ++x) {
                    const size_t base = (static_cast<size_t>(c) * H + 2 * y) * W + 2 * x;
                    const S s = di[base] + di[base + 1] + di[base + W] + di[base + W + 1];
                    out.data[(static_cast<size_t>(c) * Ho + y) * Wo + x] = s * S(0.25);
                }
        Var r = push(std::move(out), needs(img), nullptr);
        record(r, [this, img, r, C, H, W, Ho, Wo] {
            if (!needs(img)) return;
            auto& gi = grad_buf(img);
            const auto& g = grad_of(r);
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < Ho; ++y)
                    for (int x = 0; x < Wo; ++x) {
                        const S gv = g[(static_cast<size_t>(c) * Ho + y) * Wo + x] * S(0.25);
                        const size_t base = (static_cast<size_t>(c) * H + 2 * y) * W + 2 * x;
                        gi[base] += gv;
                        gi[base + 1] += gv;
                        gi[base + W] += gv;
                        gi[base + W + 1] += gv;
                    }
        });
        return r;
    }

    // --- backward ----------------------------------------------------------

    void backward(Var loss) {
        if (numel(loss) != 1) fail_numeric("scalar required for backward");
        if (!std::isfinite(static_cast<double>(data(loss)[0])))
            fail_numeric("non-finite loss");
        for (auto& n : nodes_) n.grad.clear();
        grad_buf(loss)[0] = S(1);
        for (int i = loss.idx; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.requires_grad || n.grad.empty()) continue;
            if (n.back) n.back();
            if (n.bound) {
                auto& pg = n.bound->value.grad;
                if (pg.size() != n.grad.size())
                    fail_internal("parameter gradient buffer not allocated: " + n.bound->name);
                for (size_t k = 0; k < n.grad.size(); ++k) pg[k] += n.grad[k];
            }
        }
    }

private:
    struct Node {
        TensorT<S> value;
        std::vector<S> grad;
        std::function<void()> back;
        ParameterT<S>* bound = nullptr;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;

    const Node& node(Var v) const {
        if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
            fail_internal("invalid tape variable");
        return nodes_[v.idx];
    }
    Node& node(Var v) {
        if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
            fail_internal("invalid tape variable");
        return nodes_[v.idx];
    }

    const std::vector<S>& data(Var v) const { return node(v).value.data; }
    bool needs(Var v) const { return node(v).requires_grad; }
    int ndim(Var v) const { return static_cast<int>(node(v).value.shape.size()); }
    int64_t numel(Var v) const { return node(v).value.numel(); }

    std::vector<S>& grad_buf(Var v) {
        Node& n = node(v);
        if (n.grad.empty()) n.grad.assign(n.value.data.size(), S(0));
        return n.grad;
    }
    const std::vector<S>& grad_of(Var v) { return grad_buf(v); }

    void axpy(Var dst, S c, const std::vector<S>& g) {
        if (!needs(dst)) return;
        auto& gd = grad_buf(dst);
        for (size_t i = 0; i < g.size(); ++i) gd[i] += c * g[i];
    }

    void same_shape(Var a, Var b, const char* op) const {
        if (node(a).value.shape != node(b).value.shape)
            fail_internal(std::string("shape error: ") + op + " " +
                          detail::shape_str(node(a).value.shape) + " vs " +
                          detail::shape_str(node(b).value.shape));
    }

    void require(bool ok, const char* op, Var a, Var b) const {
        if (!ok)
            fail_internal(std::string("shape error: ") + op + " " +
                          detail::shape_str(node(a).value.shape) + " vs " +
                          detail::shape_str(node(b).value.shape));
    }

    void check_finite(const TensorT<S>& t) const {
        for (S v : t.data)
            if (!std::isfinite(static_cast<double>(v))) fail_numeric("non-finite input");
    }

    static void gemm_nn(const std::vector<S>& a, const std::vector<S>& b,
                        std::vector<S>& out, int n, int k, int m) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int p = 0; p < k; ++p)
                    acc += static_cast<double>(a[static_cast<size_t>(i) * k + p]) *
                           b[static_cast<size_t>(p) * m + j];
                out[static_cast<size_t>(i) * m + j] = static_cast<S>(acc);
            }
    }

    Var push(TensorT<S> value, bool requires_grad, ParameterT<S>* bound) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        n.bound = bound;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    void record(Var v, std::function<void()> back) {
        if (node(v).requires_grad) node(v).back = std::move(back);
    }
};

using Tape = TapeT<float>;
using Var = Tape::Var;

}  // namespace sgcl::ad
