#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mlmn/numerics/tape.hpp"
#include "mlmn/util/rng.hpp"

// Differentiable primitives recorded on a Tape. Every op computes its value
// eagerly and, when any input requires a gradient, attaches a backward rule
// that accumulates into the inputs' gradient buffers.
namespace mlmn::ops {

    enum class Activation { none, relu };

    namespace detail {

        inline void expect(bool ok, const std::string& msg) {
            if (!ok) throw ShapeError(msg);
        }

        inline bool any_grad(std::initializer_list<Var> vs) {
            for (const auto& v : vs) {
                if (v.requires_grad()) return true;
            }
            return false;
        }

        inline void accumulate(Tape& t, std::size_t id, std::span<const double> g) {
            if (!t.requires_grad(id)) return;
            auto dst = t.grad_buffer(id).data();
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }

        inline double sigmoid(double x) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        }

    }  // namespace detail

    inline Var add(const Var& a, const Var& b) {
        detail::expect(a.shape() == b.shape(), "add: shape mismatch " + shape_string(a.shape()) + " vs " +
                                                   shape_string(b.shape()));
        Tensor out = a.value();
        auto o = out.data();
        auto bv = b.value().data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record(std::move(out), detail::any_grad({a, b}), [ia, ib](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            detail::accumulate(t, ia, g);
            detail::accumulate(t, ib, g);
        });
    }

    // sum of same-shaped tensors
    inline Var add_n(const std::vector<Var>& xs) {
        detail::expect(!xs.empty(), "add_n: no inputs");
        Tensor out = xs.front().value();
        bool rg = false;
        std::vector<std::size_t> ids;
        for (const auto& x : xs) {
            detail::expect(x.shape() == out.shape(), "add_n: shape mismatch");
            rg = rg || x.requires_grad();
            ids.push_back(x.id());
        }
        auto o = out.data();
        for (std::size_t k = 1; k < xs.size(); ++k) {
            auto v = xs[k].value().data();
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
        }
        return xs.front().tape().record(std::move(out), rg, [ids](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            for (std::size_t id : ids) detail::accumulate(t, id, g);
        });
    }

    inline Var mul(const Var& a, const Var& b) {
        detail::expect(a.shape() == b.shape(), "mul: shape mismatch");
        Tensor out = a.value();
        auto o = out.data();
        auto bv = b.value().data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record(std::move(out), detail::any_grad({a, b}), [ia, ib](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            const auto av = t.value(ia).data();
            const auto bv = t.value(ib).data();
            if (t.requires_grad(ia)) {
                auto d = t.grad_buffer(ia).data();
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
            }
            if (t.requires_grad(ib)) {
                auto d = t.grad_buffer(ib).data();
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
            }
        });
    }

    inline Var scale(const Var& a, double s) {
        Tensor out = a.value();
        for (double& v : out.data()) v *= s;
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, s](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            auto d = t.grad_buffer(ia).data();
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += s * g[i];
        });
    }

    inline Var sum_all(const Var& a) {
        double s = 0.0;
        for (double v : a.value().data()) s += v;
        const std::size_t ia = a.id();
        return a.tape().record(Tensor::scalar(s), a.requires_grad(), [ia](Tape& t, std::size_t self) {
            const double g = t.grad(self)[0];
            for (double& d : t.grad_buffer(ia).data()) d += g;
        });
    }

    namespace detail {

        template <class F, class DF>
        Var unary(const Var& a, F f, DF df_from_y) {
            Tensor out = a.value();
            for (double& v : out.data()) v = f(v);
            const std::size_t ia = a.id();
            return a.tape().record(std::move(out), a.requires_grad(), [ia, df_from_y](Tape& t, std::size_t self) {
                const auto g = t.grad(self).data();
                const auto y = t.value(self).data();
                const auto x = t.value(ia).data();
                auto d = t.grad_buffer(ia).data();
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * df_from_y(x[i], y[i]);
            });
        }

    }  // namespace detail

    inline Var relu(const Var& a) {
        return detail::unary(
            a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
    }

    inline Var sigmoid(const Var& a) {
        return detail::unary(a, detail::sigmoid, [](double, double y) { return y * (1.0 - y); });
    }

    inline Var tanh(const Var& a) {
        return detail::unary(
            a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
    }

    // a[n x k] . b[k x m]
    inline Var matmul(const Var& a, const Var& b) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        detail::expect(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
                       "matmul: incompatible shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
        const std::size_t n = av.dim(0), k = av.dim(1), m = bv.dim(1);
        Tensor out({n, m});
        for (std::size_t i = 0; i < n; ++i) {
            auto orow = out.row(i);
            for (std::size_t p = 0; p < k; ++p) {
                const double x = av.at(i, p);
                if (x == 0.0) continue;
                auto brow = bv.row(p);
                for (std::size_t j = 0; j < m; ++j) orow[j] += x * brow[j];
            }
        }
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record(std::move(out), detail::any_grad({a, b}), [ia, ib, n, k, m](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& av = t.value(ia);
            const Tensor& bv = t.value(ib);
            if (t.requires_grad(ia)) {
                Tensor& da = t.grad_buffer(ia);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < m; ++j) s += g.at(i, j) * bv.at(p, j);
                        da.at(i, p) += s;
                    }
                }
            }
            if (t.requires_grad(ib)) {
                Tensor& db = t.grad_buffer(ib);
                for (std::size_t i = 0; i < n; ++i) {
                    auto grow = g.row(i);
                    for (std::size_t p = 0; p < k; ++p) {
                        const double x = av.at(i, p);
                        auto drow = db.row(p);
                        for (std::size_t j = 0; j < m; ++j) drow[j] += x * grow[j];
                    }
                }
            }
        });
    }

    // a[n x k] . b[m x k]^T
    inline Var matmul_nt(const Var& a, const Var& b) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        detail::expect(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(1),
                       "matmul_nt: incompatible shapes " + shape_string(av.shape()) + " and " +
                           shape_string(bv.shape()));
        const std::size_t n = av.dim(0), k = av.dim(1), m = bv.dim(0);
        Tensor out({n, m});
        for (std::size_t i = 0; i < n; ++i) {
            auto arow = av.row(i);
            for (std::size_t j = 0; j < m; ++j) {
                auto brow = bv.row(j);
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
                out.at(i, j) = s;
            }
        }
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record(std::move(out), detail::any_grad({a, b}), [ia, ib, n, k, m](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& av = t.value(ia);
            const Tensor& bv = t.value(ib);
            const bool ga = t.requires_grad(ia), gb = t.requires_grad(ib);
            Tensor* da = ga ? &t.grad_buffer(ia) : nullptr;
            Tensor* db = gb ? &t.grad_buffer(ib) : nullptr;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    const double gij = g.at(i, j);
                    if (gij == 0.0) continue;
                    if (ga) {
                        auto drow = da->row(i);
                        auto brow = bv.row(j);
                        for (std::size_t p = 0; p < k; ++p) drow[p] += gij * brow[p];
                    }
                    if (gb) {
                        auto drow = db->row(j);
                        auto arow = av.row(i);
                        for (std::size_t p = 0; p < k; ++p) drow[p] += gij * arow[p];
                    }
                }
            }
        });
    }

    // v[n] . M[n x m] -> [m]
    inline Var vecmat(const Var& v, const Var& mat) {
        const Tensor& vv = v.value();
        const Tensor& mv = mat.value();
        detail::expect(vv.rank() == 1 && mv.rank() == 2 && vv.dim(0) == mv.dim(0), "vecmat: shape mismatch");
        const std::size_t n = mv.dim(0), m = mv.dim(1);
        Tensor out({m});
        for (std::size_t i = 0; i < n; ++i) {
            auto row = mv.row(i);
            for (std::size_t j = 0; j < m; ++j) out[j] += vv[i] * row[j];
        }
        const std::size_t iv = v.id(), im = mat.id();
        return v.tape().record(std::move(out), detail::any_grad({v, mat}), [iv, im, n, m](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& vv = t.value(iv);
            const Tensor& mv = t.value(im);
            if (t.requires_grad(iv)) {
                Tensor& dv = t.grad_buffer(iv);
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += mv.at(i, j) * g[j];
                    dv[i] += s;
                }
            }
            if (t.requires_grad(im)) {
                Tensor& dm = t.grad_buffer(im);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < m; ++j) dm.at(i, j) += vv[i] * g[j];
                }
            }
        });
    }

    // M[n x m] . v[m] -> [n]
    inline Var matvec(const Var& mat, const Var& v) {
        const Tensor& mv = mat.value();
        const Tensor& vv = v.value();
        detail::expect(vv.rank() == 1 && mv.rank() == 2 && vv.dim(0) == mv.dim(1), "matvec: shape mismatch");
        const std::size_t n = mv.dim(0), m = mv.dim(1);
        Tensor out({n});
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += mv.at(i, j) * vv[j];
            out[i] = s;
        }
        const std::size_t iv = v.id(), im = mat.id();
        return v.tape().record(std::move(out), detail::any_grad({v, mat}), [iv, im, n, m](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& vv = t.value(iv);
            const Tensor& mv = t.value(im);
            if (t.requires_grad(iv)) {
                Tensor& dv = t.grad_buffer(iv);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < m; ++j) dv[j] += mv.at(i, j) * g[i];
                }
            }
            if (t.requires_grad(im)) {
                Tensor& dm = t.grad_buffer(im);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < m; ++j) dm.at(i, j) += g[i] * vv[j];
                }
            }
        });
    }

    namespace detail {

        // splits a shape around `axis` into (outer, length, inner) strides
        struct AxisView {
            std::size_t outer = 1, length = 1, inner = 1;
        };

        inline AxisView axis_view(const Shape& shape, std::size_t axis) {
            expect(axis < shape.size(), "invalid axis " + std::to_string(axis) + " for shape " + shape_string(shape));
            AxisView v;
            for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
            v.length = shape[axis];
            for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
            return v;
        }

    }  // namespace detail

    // softmax along `axis`, computed with max-subtraction
    inline Var softmax(const Var& a, std::size_t axis) {
        const Tensor& x = a.value();
        const auto v = detail::axis_view(x.shape(), axis);
        Tensor out(x.shape());
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = o * v.length * v.inner + in;
                double mx = x[base];
                for (std::size_t k = 1; k < v.length; ++k) mx = std::max(mx, x[base + k * v.inner]);
                double z = 0.0;
                for (std::size_t k = 0; k < v.length; ++k) {
                    const double e = std::exp(x[base + k * v.inner] - mx);
                    out[base + k * v.inner] = e;
                    z += e;
                }
                for (std::size_t k = 0; k < v.length; ++k) out[base + k * v.inner] /= z;
            }
        }
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, v](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& y = t.value(self);
            Tensor& d = t.grad_buffer(ia);
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t in = 0; in < v.inner; ++in) {
                    const std::size_t base = o * v.length * v.inner + in;
                    double dot = 0.0;
                    for (std::size_t k = 0; k < v.length; ++k) {
                        const std::size_t idx = base + k * v.inner;
                        dot += g[idx] * y[idx];
                    }
                    for (std::size_t k = 0; k < v.length; ++k) {
                        const std::size_t idx = base + k * v.inner;
                        d[idx] += y[idx] * (g[idx] - dot);
                    }
                }
            }
        });
    }

    // reduces a matrix along `axis` (0: over rows -> [cols], 1: over cols -> [rows])
    inline Var sum_axis(const Var& a, std::size_t axis) {
        const Tensor& x = a.value();
        detail::expect(x.rank() == 2 && axis < 2, "sum_axis: expects a matrix and axis 0 or 1");
        const std::size_t r = x.dim(0), c = x.dim(1);
        Tensor out({axis == 0 ? c : r});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += x.at(i, j);
        }
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, axis, r, c](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& d = t.grad_buffer(ia);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) d.at(i, j) += g[axis == 0 ? j : i];
            }
        });
    }

    // row i of M scaled by w[i]
    inline Var scale_rows(const Var& mat, const Var& w) {
        const Tensor& mv = mat.value();
        const Tensor& wv = w.value();
        detail::expect(mv.rank() == 2 && wv.rank() == 1 && wv.dim(0) == mv.dim(0),
                       "scale_rows: weight length " + shape_string(wv.shape()) + " vs matrix " +
                           shape_string(mv.shape()));
        const std::size_t r = mv.dim(0), c = mv.dim(1);
        Tensor out = mv;
        for (std::size_t i = 0; i < r; ++i) {
            for (double& x : out.row(i)) x *= wv[i];
        }
        const std::size_t im = mat.id(), iw = w.id();
        return mat.tape().record(std::move(out), detail::any_grad({mat, w}), [im, iw, r, c](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& mv = t.value(im);
            const Tensor& wv = t.value(iw);
            if (t.requires_grad(im)) {
                Tensor& d = t.grad_buffer(im);
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) d.at(i, j) += wv[i] * g.at(i, j);
                }
            }
            if (t.requires_grad(iw)) {
                Tensor& d = t.grad_buffer(iw);
                for (std::size_t i = 0; i < r; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < c; ++j) s += g.at(i, j) * mv.at(i, j);
                    d[i] += s;
                }
            }
        });
    }

    // [a | b] along the feature (last) axis of two matrices with equal row counts
    inline Var concat_cols(const Var& a, const Var& b) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        detail::expect(av.rank() == 2 && bv.rank() == 2 && av.dim(0) == bv.dim(0),
                       "concat_cols: row count mismatch " + shape_string(av.shape()) + " vs " +
                           shape_string(bv.shape()));
        const std::size_t r = av.dim(0), p = av.dim(1), q = bv.dim(1);
        Tensor out({r, p + q});
        for (std::size_t i = 0; i < r; ++i) {
            auto o = out.row(i);
            std::copy_n(av.row(i).begin(), p, o.begin());
            std::copy_n(bv.row(i).begin(), q, o.begin() + static_cast<std::ptrdiff_t>(p));
        }
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record(std::move(out), detail::any_grad({a, b}), [ia, ib, r, p, q](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            if (t.requires_grad(ia)) {
                Tensor& d = t.grad_buffer(ia);
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < p; ++j) d.at(i, j) += g.at(i, j);
                }
            }
            if (t.requires_grad(ib)) {
                Tensor& d = t.grad_buffer(ib);
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < q; ++j) d.at(i, j) += g.at(i, p + j);
                }
            }
        });
    }

    // flat concatenation of tensors into one vector
    inline Var concat(const std::vector<Var>& xs) {
        detail::expect(!xs.empty(), "concat: no inputs");
        std::vector<double> values;
        std::vector<std::pair<std::size_t, std::size_t>> parts;
        bool rg = false;
        for (const auto& x : xs) {
            parts.emplace_back(x.id(), x.value().size());
            values.insert(values.end(), x.value().data().begin(), x.value().data().end());
            rg = rg || x.requires_grad();
        }
        return xs.front().tape().record(Tensor::vector(std::move(values)), rg, [parts](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            std::size_t off = 0;
            for (const auto& [id, len] : parts) {
                detail::accumulate(t, id, g.subspan(off, len));
                off += len;
            }
        });
    }

    // contiguous slice [begin, begin+len) of the flattened tensor, as a vector
    inline Var slice(const Var& a, std::size_t begin, std::size_t len) {
        detail::expect(len > 0 && begin + len <= a.value().size(), "slice: out of range");
        auto src = a.value().data().subspan(begin, len);
        Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, begin, len](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            auto d = t.grad_buffer(ia).data();
            for (std::size_t i = 0; i < len; ++i) d[begin + i] += g[i];
        });
    }

    inline Var row(const Var& a, std::size_t i) {
        const std::size_t c = a.value().cols();
        detail::expect(i < a.value().rows(), "row: index out of range");
        return slice(a, i * c, c);
    }

    // affine map over the last dimension, optional ReLU
    inline Var dense(const Var& x, const Var& weight, const Var& bias, Activation act = Activation::none) {
        const Tensor& xv = x.value();
        const Tensor& wv = weight.value();
        const Tensor& bv = bias.value();
        detail::expect(wv.rank() == 2 && xv.cols() == wv.dim(0) && bv.size() == wv.dim(1),
                       "dense: input " + shape_string(xv.shape()) + ", weight " + shape_string(wv.shape()) +
                           ", bias " + shape_string(bv.shape()));
        const std::size_t rows = xv.rows(), in = wv.dim(0), outw = wv.dim(1);
        Shape out_shape = xv.shape();
        out_shape.back() = outw;
        Tensor out(out_shape);
        for (std::size_t r = 0; r < rows; ++r) {
            auto o = out.data().subspan(r * outw, outw);
            std::copy(bv.data().begin(), bv.data().end(), o.begin());
            auto xr = xv.data().subspan(r * in, in);
            for (std::size_t p = 0; p < in; ++p) {
                const double xp = xr[p];
                if (xp == 0.0) continue;
                auto wr = wv.row(p);
                for (std::size_t j = 0; j < outw; ++j) o[j] += xp * wr[j];
            }
            if (act == Activation::relu) {
                for (double& v : o) v = v > 0 ? v : 0.0;
            }
        }
        const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
        return x.tape().record(
            std::move(out), detail::any_grad({x, weight, bias}), [ix, iw, ib, rows, in, outw, act](Tape& t, std::size_t self) {
                const Tensor& g0 = t.grad(self);
                const Tensor& y = t.value(self);
                std::vector<double> g(g0.data().begin(), g0.data().end());
                if (act == Activation::relu) {
                    for (std::size_t k = 0; k < g.size(); ++k) {
                        if (y[k] <= 0) g[k] = 0.0;
                    }
                }
                const Tensor& xv = t.value(ix);
                const Tensor& wv = t.value(iw);
                if (t.requires_grad(ib)) {
                    auto db = t.grad_buffer(ib).data();
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < outw; ++j) db[j] += g[r * outw + j];
                    }
                }
                if (t.requires_grad(iw)) {
                    Tensor& dw = t.grad_buffer(iw);
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t p = 0; p < in; ++p) {
                            const double xp = xv[r * in + p];
                            if (xp == 0.0) continue;
                            auto drow = dw.row(p);
                            for (std::size_t j = 0; j < outw; ++j) drow[j] += xp * g[r * outw + j];
                        }
                    }
                }
                if (t.requires_grad(ix)) {
                    auto dx = t.grad_buffer(ix).data();
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t p = 0; p < in; ++p) {
                            auto wr = wv.row(p);
                            double s = 0.0;
                            for (std::size_t j = 0; j < outw; ++j) s += wr[j] * g[r * outw + j];
                            dx[r * in + p] += s;
                        }
                    }
                }
            });
    }

    // Same-length 1-D convolution. Zero padding of floor((h-1)/2) on the left and
    // ceil((h-1)/2) on the right; out[i] = b + sum_k x_pad[i+k] . kernel[k].
    inline Var conv1d_same(const Var& x, const Var& kernel, const Var& bias) {
        const Tensor& xv = x.value();
        const Tensor& kv = kernel.value();
        const Tensor& bv = bias.value();
        detail::expect(xv.rank() == 2, "conv1d_same: input must be len x channels");
        detail::expect(kv.rank() == 3 && kv.dim(1) == xv.dim(1),
                       "conv1d_same: kernel " + shape_string(kv.shape()) + " does not match input channels " +
                           shape_string(xv.shape()));
        detail::expect(bv.size() == kv.dim(2), "conv1d_same: bias width mismatch");
        const std::size_t len = xv.dim(0), in = xv.dim(1), h = kv.dim(0), outc = kv.dim(2);
        const std::ptrdiff_t left = static_cast<std::ptrdiff_t>((h - 1) / 2);
        Tensor out({len, outc});
        for (std::size_t i = 0; i < len; ++i) {
            auto o = out.row(i);
            std::copy(bv.data().begin(), bv.data().end(), o.begin());
            for (std::size_t k = 0; k < h; ++k) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + k) - left;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                auto xr = xv.row(static_cast<std::size_t>(src));
                for (std::size_t c = 0; c < in; ++c) {
                    const double xc = xr[c];
                    if (xc == 0.0) continue;
                    const double* kr = kv.data().data() + (k * in + c) * outc;
                    for (std::size_t j = 0; j < outc; ++j) o[j] += xc * kr[j];
                }
            }
        }
        const std::size_t ix = x.id(), ik = kernel.id(), ib = bias.id();
        return x.tape().record(
            std::move(out), detail::any_grad({x, kernel, bias}),
            [ix, ik, ib, len, in, h, outc, left](Tape& t, std::size_t self) {
                const Tensor& g = t.grad(self);
                const Tensor& xv = t.value(ix);
                const Tensor& kv = t.value(ik);
                if (t.requires_grad(ib)) {
                    auto db = t.grad_buffer(ib).data();
                    for (std::size_t i = 0; i < len; ++i) {
                        auto gr = g.row(i);
                        for (std::size_t j = 0; j < outc; ++j) db[j] += gr[j];
                    }
                }
                const bool gx = t.requires_grad(ix), gk = t.requires_grad(ik);
                double* dx = gx ? t.grad_buffer(ix).data().data() : nullptr;
                double* dk = gk ? t.grad_buffer(ik).data().data() : nullptr;
                for (std::size_t i = 0; i < len; ++i) {
                    auto gr = g.row(i);
                    for (std::size_t k = 0; k < h; ++k) {
                        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + k) - left;
                        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                        const std::size_t s = static_cast<std::size_t>(src);
                        for (std::size_t c = 0; c < in; ++c) {
                            const std::size_t koff = (k * in + c) * outc;
                            if (gx) {
                                const double* kr = kv.data().data() + koff;
                                double acc = 0.0;
                                for (std::size_t j = 0; j < outc; ++j) acc += kr[j] * gr[j];
                                dx[s * in + c] += acc;
                            }
                            if (gk) {
                                const double xc = xv[s * in + c];
                                if (xc == 0.0) continue;
                                double* dkr = dk + koff;
                                for (std::size_t j = 0; j < outc; ++j) dkr[j] += xc * gr[j];
                            }
                        }
                    }
                }
            });
    }

    // max over the last dimension; gradient goes to the first maximal entry
    inline Var maxpool_last(const Var& a) {
        const Tensor& x = a.value();
        const std::size_t t_len = x.cols();
        const std::size_t n = x.rows();
        detail::expect(t_len >= 1, "maxpool_last: empty last dimension");
        Tensor out({n});
        std::vector<std::size_t> arg(n);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = x.row(r);
            std::size_t best = 0;
            for (std::size_t j = 1; j < t_len; ++j) {
                if (row[j] > row[best]) best = j;
            }
            arg[r] = best;
            out[r] = row[best];
        }
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, arg, t_len](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            auto d = t.grad_buffer(ia).data();
            for (std::size_t r = 0; r < arg.size(); ++r) d[r * t_len + arg[r]] += g[r];
        });
    }

    // inverted dropout; identity outside training
    inline Var dropout(const Var& a, double rate, bool training, Rng& rng) {
        if (rate < 0.0 || rate > 1.0) throw InputError("dropout: rate must lie in [0, 1]");
        if (!training || rate == 0.0) return a;
        const Tensor& x = a.value();
        std::vector<double> mask(x.size());
        const double keep_scale = rate >= 1.0 ? 0.0 : 1.0 / (1.0 - rate);
        for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
        Tensor out = x;
        for (std::size_t i = 0; i < mask.size(); ++i) out[i] *= mask[i];
        const std::size_t ia = a.id();
        return a.tape().record(std::move(out), a.requires_grad(), [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
            const auto g = t.grad(self).data();
            auto d = t.grad_buffer(ia).data();
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
        });
    }

    // -log softmax(logits)[label]
    inline Var softmax_cross_entropy(const Var& logits, std::size_t label) {
        const Tensor& z = logits.value();
        detail::expect(z.rank() == 1, "softmax_cross_entropy: logits must be a vector");
        if (label >= z.size()) {
            throw InputError("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
        }
        double mx = z[0];
        for (double v : z.data()) mx = std::max(mx, v);
        double sum = 0.0;
        for (double v : z.data()) sum += std::exp(v - mx);
        const double log_z = mx + std::log(sum);
        std::vector<double> probs(z.size());
        for (std::size_t k = 0; k < z.size(); ++k) probs[k] = std::exp(z[k] - log_z);
        const std::size_t il = logits.id();
        return logits.tape().record(Tensor::scalar(log_z - z[label]), logits.requires_grad(),
                                    [il, label, probs = std::move(probs)](Tape& t, std::size_t self) {
                                        const double g = t.grad(self)[0];
                                        auto d = t.grad_buffer(il).data();
                                        for (std::size_t k = 0; k < probs.size(); ++k) {
                                            d[k] += g * (probs[k] - (k == label ? 1.0 : 0.0));
                                        }
                                    });
    }

    // rows of `table` selected by ids -> [ids.size() x width]
    inline Var embedding_lookup(const Var& table, std::span<const std::size_t> ids) {
        const Tensor& tv = table.value();
        detail::expect(tv.rank() == 2 && !ids.empty(), "embedding_lookup: table must be a matrix, ids non-empty");
        const std::size_t d = tv.dim(1);
        Tensor out({ids.size(), d});
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] >= tv.dim(0)) throw InputError("embedding_lookup: id out of range");
            std::copy_n(tv.row(ids[i]).begin(), d, out.row(i).begin());
        }
        const std::size_t it = table.id();
        std::vector<std::size_t> idv(ids.begin(), ids.end());
        return table.tape().record(std::move(out), table.requires_grad(), [it, idv = std::move(idv), d](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& dt = t.grad_buffer(it);
            for (std::size_t i = 0; i < idv.size(); ++i) {
                auto src = g.row(i);
                auto dst = dt.row(idv[i]);
                for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }

    // Fused LSTM cell. gates = [i f g o] pre-activations (4H), c_prev (H).
    // Returns [h | c] (2H).
    inline Var lstm_cell(const Var& gates, const Var& c_prev) {
        const Tensor& z = gates.value();
        const Tensor& cp = c_prev.value();
        const std::size_t hw = cp.size();
        detail::expect(z.size() == 4 * hw, "lstm_cell: gates must be 4x the state width");
        Tensor out({2 * hw});
        for (std::size_t k = 0; k < hw; ++k) {
            const double ig = detail::sigmoid(z[k]);
            const double fg = detail::sigmoid(z[hw + k]);
            const double gg = std::tanh(z[2 * hw + k]);
            const double og = detail::sigmoid(z[3 * hw + k]);
            const double c = fg * cp[k] + ig * gg;
            out[hw + k] = c;
            out[k] = og * std::tanh(c);
        }
        const std::size_t iz = gates.id(), ic = c_prev.id();
        return gates.tape().record(std::move(out), detail::any_grad({gates, c_prev}), [iz, ic, hw](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& z = t.value(iz);
            const Tensor& cp = t.value(ic);
            const Tensor& y = t.value(self);
            const bool gz = t.requires_grad(iz), gc = t.requires_grad(ic);
            double* dz = gz ? t.grad_buffer(iz).data().data() : nullptr;
            double* dcp = gc ? t.grad_buffer(ic).data().data() : nullptr;
            for (std::size_t k = 0; k < hw; ++k) {
                const double ig = detail::sigmoid(z[k]);
                const double fg = detail::sigmoid(z[hw + k]);
                const double gg = std::tanh(z[2 * hw + k]);
                const double og = detail::sigmoid(z[3 * hw + k]);
                const double tc = std::tanh(y[hw + k]);
                const double dh = g[k];
                const double dc = g[hw + k] + dh * og * (1.0 - tc * tc);
                if (gz) {
                    dz[k] += dc * gg * ig * (1.0 - ig);
                    dz[hw + k] += dc * cp[k] * fg * (1.0 - fg);
                    dz[2 * hw + k] += dc * ig * (1.0 - gg * gg);
                    dz[3 * hw + k] += dh * tc * og * (1.0 - og);
                }
                if (gc) dcp[k] += dc * fg;
            }
        });
    }

}  // namespace mlmn::ops
