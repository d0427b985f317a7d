#include "infu/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace infu {

namespace {

void require_matrix(const Tensor& t, const char* op) {
    if (t.shape().size() != 2)
        throw validation_error(std::string(op) + ": expected a matrix, got shape " +
                               format_shape(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw validation_error(std::string(op) + ": shape mismatch " + format_shape(a.shape()) +
                               " vs " + format_shape(b.shape()));
}

// c[m,n] += a[m,k] @ b[k,n], ikj order so the inner loop runs over contiguous
// rows. Rows of c are written by exactly one thread: bit-deterministic at any
// thread count.
void matmul_accum(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
    for (long i = 0; i < static_cast<long>(m); ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * k;
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* bl = b + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

// c[m,k] += g[m,n] @ b[k,n]^T  (dot products over contiguous rows)
void matmul_accum_bt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
    for (long i = 0; i < static_cast<long>(m); ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * n;
        double* ci = c + static_cast<std::size_t>(i) * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double* bl = b + l * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gi[j] * bl[j];
            ci[l] += s;
        }
    }
}

// c[k,n] += a[m,k]^T @ g[m,n]
void matmul_accum_at(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
    for (long l = 0; l < static_cast<long>(k); ++l) {
        double* cl = c + static_cast<std::size_t>(l) * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[i * k + static_cast<std::size_t>(l)];
            const double* gi = g + i * n;
            for (std::size_t j = 0; j < n; ++j) cl[j] += av * gi[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k)
        throw validation_error("matmul: inner extents disagree: " + format_shape(a.shape()) +
                               " vs " + format_shape(b.shape()));
    std::vector<double> out(m * n, 0.0);
    matmul_accum(a.data().data(), b.data().data(), out.data(), m, k, n);
    return make_op_output({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Node& o) {
        if (a.requires_grad()) {
            std::vector<double> da(m * k, 0.0);
            matmul_accum_bt(o.grad.data(), b.data().data(), da.data(), m, k, n);
            a.node()->accum_grad(da);
        }
        if (b.requires_grad()) {
            std::vector<double> db(k * n, 0.0);
            matmul_accum_at(a.data().data(), o.grad.data(), db.data(), m, k, n);
            b.node()->accum_grad(db);
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    const auto src = a.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = src[i * c + j];
    return make_op_output({c, r}, std::move(out), {a}, [a, r, c](Node& o) {
        if (!a.requires_grad()) return;
        std::vector<double> da(r * c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) da[i * c + j] = o.grad[j * r + i];
        a.node()->accum_grad(da);
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    const auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_op_output(a.shape(), std::move(out), {a, b}, [a, b](Node& o) {
        if (a.requires_grad()) a.node()->accum_grad(o.grad);
        if (b.requires_grad()) b.node()->accum_grad(o.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    const auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_op_output(a.shape(), std::move(out), {a, b}, [a, b](Node& o) {
        if (a.requires_grad()) a.node()->accum_grad(o.grad);
        if (b.requires_grad()) {
            std::vector<double> g(o.grad.size());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = -o.grad[i];
            b.node()->accum_grad(g);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    const auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_op_output(a.shape(), std::move(out), {a, b}, [a, b](Node& o) {
        if (a.requires_grad()) {
            std::vector<double> g(o.grad.size());
            const auto bv2 = b.data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * bv2[i];
            a.node()->accum_grad(g);
        }
        if (b.requires_grad()) {
            std::vector<double> g(o.grad.size());
            const auto av2 = a.data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * av2[i];
            b.node()->accum_grad(g);
        }
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    const auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
    return make_op_output(a.shape(), std::move(out), {a}, [a](Node& o) {
        if (a.requires_grad()) a.node()->accum_grad(o.grad);
    });
}

Tensor mul_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    const auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
    return make_op_output(a.shape(), std::move(out), {a}, [a, c](Node& o) {
        if (!a.requires_grad()) return;
        std::vector<double> g(o.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * c;
        a.node()->accum_grad(g);
    });
}

Tensor repeat_interleave_rows(const Tensor& x, std::size_t k) {
    require_matrix(x, "repeat_interleave_rows");
    if (k == 0) throw validation_error("repeat_interleave_rows: k must be positive");
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> out(r * k * c);
    const auto src = x.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j)
            std::memcpy(out.data() + (i * k + j) * c, src.data() + i * c, c * sizeof(double));
    return make_op_output({r * k, c}, std::move(out), {x}, [x, r, c, k](Node& o) {
        if (!x.requires_grad()) return;
        std::vector<double> g(r * c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                const double* gs = o.grad.data() + (i * k + j) * c;
                double* gd = g.data() + i * c;
                for (std::size_t t = 0; t < c; ++t) gd[t] += gs[t];
            }
        x.node()->accum_grad(g);
    });
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    require_matrix(x, "slice_rows");
    const std::size_t r = x.rows(), c = x.cols();
    if (r0 >= r1 || r1 > r)
        throw validation_error("slice_rows: range [" + std::to_string(r0) + "," +
                               std::to_string(r1) + ") out of bounds for " +
                               format_shape(x.shape()));
    std::vector<double> out(x.data().begin() + r0 * c, x.data().begin() + r1 * c);
    return make_op_output({r1 - r0, c}, std::move(out), {x}, [x, r0, c](Node& o) {
        if (!x.requires_grad()) return;
        std::vector<double> g(x.size(), 0.0);
        std::memcpy(g.data() + r0 * c, o.grad.data(), o.grad.size() * sizeof(double));
        x.node()->accum_grad(g);
    });
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    require_matrix(x, "slice_cols");
    const std::size_t r = x.rows(), c = x.cols();
    if (c0 >= c1 || c1 > c)
        throw validation_error("slice_cols: range [" + std::to_string(c0) + "," +
                               std::to_string(c1) + ") out of bounds for " +
                               format_shape(x.shape()));
    const std::size_t w = c1 - c0;
    std::vector<double> out(r * w);
    const auto src = x.data();
    for (std::size_t i = 0; i < r; ++i)
        std::memcpy(out.data() + i * w, src.data() + i * c + c0, w * sizeof(double));
    return make_op_output({r, w}, std::move(out), {x}, [x, r, c, c0, w](Node& o) {
        if (!x.requires_grad()) return;
        std::vector<double> g(r * c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
            std::memcpy(g.data() + i * c + c0, o.grad.data() + i * w, w * sizeof(double));
        x.node()->accum_grad(g);
    });
}

Tensor take_rows(const Tensor& x, std::vector<std::size_t> idx) {
    require_matrix(x, "take_rows");
    const std::size_t r = x.rows(), c = x.cols();
    for (auto i : idx)
        if (i >= r)
            throw validation_error("take_rows: index " + std::to_string(i) +
                                   " out of bounds for " + format_shape(x.shape()));
    std::vector<double> out(idx.size() * c);
    const auto src = x.data();
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::memcpy(out.data() + i * c, src.data() + idx[i] * c, c * sizeof(double));
    auto idx_shared = std::make_shared<std::vector<std::size_t>>(std::move(idx));
    return make_op_output({idx_shared->size(), c}, std::move(out), {x},
                          [x, c, idx_shared](Node& o) {
                              if (!x.requires_grad()) return;
                              std::vector<double> g(x.size(), 0.0);
                              for (std::size_t i = 0; i < idx_shared->size(); ++i) {
                                  const double* gs = o.grad.data() + i * c;
                                  double* gd = g.data() + (*idx_shared)[i] * c;
                                  for (std::size_t t = 0; t < c; ++t) gd[t] += gs[t];
                              }
                              x.node()->accum_grad(g);
                          });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw validation_error("concat_rows: no inputs");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_matrix(p, "concat_rows");
        if (p.cols() != c)
            throw validation_error("concat_rows: column mismatch " + format_shape(p.shape()) +
                                   " vs " + std::to_string(c) + " columns");
        total += p.rows();
    }
    std::vector<double> out(total * c);
    std::size_t at = 0;
    for (const auto& p : parts) {
        std::memcpy(out.data() + at, p.data().data(), p.size() * sizeof(double));
        at += p.size();
    }
    return make_op_output({total, c}, std::move(out), parts, [parts](Node& o) {
        std::size_t at = 0;
        for (const auto& p : parts) {
            if (p.requires_grad())
                p.node()->accum_grad(std::span<const double>(o.grad.data() + at, p.size()));
            at += p.size();
        }
    });
}

Tensor gather(const Tensor& x, std::vector<std::size_t> idx, std::vector<std::size_t> out_shape) {
    const std::size_t n = shape_numel(out_shape);
    if (idx.size() != n)
        throw validation_error("gather: index count " + std::to_string(idx.size()) +
                               " does not match output shape " + format_shape(out_shape));
    for (auto i : idx)
        if (i >= x.size())
            throw validation_error("gather: index " + std::to_string(i) + " out of bounds");
    std::vector<double> out(n);
    const auto src = x.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = src[idx[i]];
    auto idx_shared = std::make_shared<std::vector<std::size_t>>(std::move(idx));
    return make_op_output(std::move(out_shape), std::move(out), {x}, [x, idx_shared](Node& o) {
        if (!x.requires_grad()) return;
        std::vector<double> g(x.size(), 0.0);
        for (std::size_t i = 0; i < idx_shared->size(); ++i) g[(*idx_shared)[i]] += o.grad[i];
        x.node()->accum_grad(g);
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_matrix(x, "softmax_rows");
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> out(r * c);
    const auto src = x.data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = src.data() + i * c;
        double* oi = out.data() + i * c;
        double mx = xi[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            oi[j] = std::exp(xi[j] - mx);
            s += oi[j];
        }
        const double inv = 1.0 / s;
        for (std::size_t j = 0; j < c; ++j) oi[j] *= inv;
    }
    Tensor result = make_op_output({r, c}, std::move(out), {x}, [x, r, c](Node& o) {
        if (!x.requires_grad()) return;
        // ds = p * (g - sum(g*p)) per row
        std::vector<double> g(r * c);
        for (std::size_t i = 0; i < r; ++i) {
            const double* pi = o.value.data() + i * c;
            const double* gi = o.grad.data() + i * c;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += gi[j] * pi[j];
            for (std::size_t j = 0; j < c; ++j) g[i * c + j] = pi[j] * (gi[j] - dot);
        }
        x.node()->accum_grad(g);
    });
    return result;
}

Tensor rms_norm(const Tensor& x, const Tensor& gain) {
    require_matrix(x, "rms_norm");
    const std::size_t r = x.rows(), d = x.cols();
    if (gain.size() != d)
        throw validation_error("rms_norm: gain length " + std::to_string(gain.size()) +
                               " does not match last extent " + std::to_string(d));
    constexpr double kEps = 1e-6;
    std::vector<double> out(r * d);
    std::vector<double> inv_rms(r);
    const auto src = x.data();
    const auto gv = gain.data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = src.data() + i * d;
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) ss += xi[j] * xi[j];
        const double inv = 1.0 / std::sqrt(ss / static_cast<double>(d) + kEps);
        inv_rms[i] = inv;
        double* oi = out.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) oi[j] = xi[j] * inv * gv[j];
    }
    auto saved = std::make_shared<std::vector<double>>(std::move(inv_rms));
    return make_op_output({r, d}, std::move(out), {x, gain}, [x, gain, saved, r, d](Node& o) {
        const auto xv = x.data();
        const auto gnv = gain.data();
        if (x.requires_grad()) {
            std::vector<double> g(r * d);
            for (std::size_t i = 0; i < r; ++i) {
                const double inv = (*saved)[i];
                const double* xi = xv.data() + i * d;
                const double* gi = o.grad.data() + i * d;
                double dot = 0.0;  // sum_j gy_ij * gain_j * x_ij
                for (std::size_t j = 0; j < d; ++j) dot += gi[j] * gnv[j] * xi[j];
                const double k = dot * inv * inv * inv / static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j)
                    g[i * d + j] = gi[j] * gnv[j] * inv - xi[j] * k;
            }
            x.node()->accum_grad(g);
        }
        if (gain.requires_grad()) {
            std::vector<double> g(d, 0.0);
            for (std::size_t i = 0; i < r; ++i) {
                const double inv = (*saved)[i];
                const double* xi = xv.data() + i * d;
                const double* gi = o.grad.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) g[j] += gi[j] * xi[j] * inv;
            }
            gain.node()->accum_grad(g);
        }
    });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.size());
    const auto src = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = src[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
    }
    return make_op_output(x.shape(), std::move(out), {x}, [x](Node& o) {
        if (!x.requires_grad()) return;
        const auto xv = x.data();
        std::vector<double> g(o.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            const double u = kGeluC * (v + kGeluA * v * v * v);
            const double t = std::tanh(u);
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            g[i] = o.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
        }
        x.node()->accum_grad(g);
    });
}

Tensor joint_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t batch,
                       std::size_t heads) {
    require_matrix(q, "joint_attention");
    require_same_shape(q, k, "joint_attention");
    require_same_shape(q, v, "joint_attention");
    const std::size_t rows = q.rows(), dim = q.cols();
    if (batch == 0 || rows % batch != 0)
        throw validation_error("joint_attention: row count " + std::to_string(rows) +
                               " not divisible by batch " + std::to_string(batch));
    if (heads == 0 || dim % heads != 0)
        throw validation_error("joint_attention: dim " + std::to_string(dim) +
                               " not divisible by heads " + std::to_string(heads));
    const std::size_t seq = rows / batch;
    const std::size_t hd = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<double> out(rows * dim, 0.0);
    // Saved softmax probabilities: [batch][head][seq*seq], contiguous.
    auto probs = std::make_shared<std::vector<double>>(batch * heads * seq * seq);

    const double* qd = q.data().data();
    const double* kd = k.data().data();
    const double* vd = v.data().data();
#pragma omp parallel for schedule(static) if (batch * heads > 1)
    for (long bh = 0; bh < static_cast<long>(batch * heads); ++bh) {
        const std::size_t b = static_cast<std::size_t>(bh) / heads;
        const std::size_t h = static_cast<std::size_t>(bh) % heads;
        const std::size_t row0 = b * seq;
        const std::size_t col0 = h * hd;
        double* p = probs->data() + static_cast<std::size_t>(bh) * seq * seq;
        for (std::size_t i = 0; i < seq; ++i) {
            const double* qi = qd + (row0 + i) * dim + col0;
            double* pi = p + i * seq;
            double mx = -1e300;
            for (std::size_t j = 0; j < seq; ++j) {
                const double* kj = kd + (row0 + j) * dim + col0;
                double s = 0.0;
                for (std::size_t t = 0; t < hd; ++t) s += qi[t] * kj[t];
                pi[j] = s * scale;
                mx = std::max(mx, pi[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < seq; ++j) {
                pi[j] = std::exp(pi[j] - mx);
                sum += pi[j];
            }
            const double inv = 1.0 / sum;
            double* oi = out.data() + (row0 + i) * dim + col0;
            for (std::size_t j = 0; j < seq; ++j) {
                pi[j] *= inv;
                const double* vj = vd + (row0 + j) * dim + col0;
                for (std::size_t t = 0; t < hd; ++t) oi[t] += pi[j] * vj[t];
            }
        }
    }

    return make_op_output(
        {rows, dim}, std::move(out), {q, k, v},
        [q, k, v, probs, batch, heads, seq, hd, dim, scale](Node& o) {
            const bool nq = q.requires_grad(), nk = k.requires_grad(), nv = v.requires_grad();
            if (!nq && !nk && !nv) return;
            std::vector<double> dq(nq ? q.size() : 0, 0.0);
            std::vector<double> dk(nk ? k.size() : 0, 0.0);
            std::vector<double> dv(nv ? v.size() : 0, 0.0);
            const double* qd = q.data().data();
            const double* kd = k.data().data();
            const double* vd = v.data().data();
#pragma omp parallel for schedule(static) if (batch * heads > 1)
            for (long bh = 0; bh < static_cast<long>(batch * heads); ++bh) {
                const std::size_t b = static_cast<std::size_t>(bh) / heads;
                const std::size_t h = static_cast<std::size_t>(bh) % heads;
                const std::size_t row0 = b * seq;
                const std::size_t col0 = h * hd;
                const double* p = probs->data() + static_cast<std::size_t>(bh) * seq * seq;
                std::vector<double> dp(seq);
                for (std::size_t i = 0; i < seq; ++i) {
                    const double* go = o.grad.data() + (row0 + i) * dim + col0;
                    const double* pi = p + i * seq;
                    // dV += P^T dO ; dp_j = dO . V_j
                    double dot = 0.0;
                    for (std::size_t j = 0; j < seq; ++j) {
                        const double* vj = vd + (row0 + j) * dim + col0;
                        double s = 0.0;
                        for (std::size_t t = 0; t < hd; ++t) s += go[t] * vj[t];
                        dp[j] = s;
                        dot += s * pi[j];
                        if (!dv.empty()) {
                            double* dvj = dv.data() + (row0 + j) * dim + col0;
                            for (std::size_t t = 0; t < hd; ++t) dvj[t] += pi[j] * go[t];
                        }
                    }
                    // dS = P o (dp - dot); dQ_i += scale * sum_j dS_j K_j; dK_j += scale*dS_j Q_i
                    const double* qi = qd + (row0 + i) * dim + col0;
                    for (std::size_t j = 0; j < seq; ++j) {
                        const double ds = pi[j] * (dp[j] - dot) * scale;
                        if (ds == 0.0) continue;
                        const double* kj = kd + (row0 + j) * dim + col0;
                        if (!dq.empty()) {
                            double* dqi = dq.data() + (row0 + i) * dim + col0;
                            for (std::size_t t = 0; t < hd; ++t) dqi[t] += ds * kj[t];
                        }
                        if (!dk.empty()) {
                            double* dkj = dk.data() + (row0 + j) * dim + col0;
                            for (std::size_t t = 0; t < hd; ++t) dkj[t] += ds * qi[t];
                        }
                    }
                }
            }
            if (nq) q.node()->accum_grad(dq);
            if (nk) k.node()->accum_grad(dk);
            if (nv) v.node()->accum_grad(dv);
        });
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return make_op_output({1}, {s}, {x}, [x](Node& o) {
        if (!x.requires_grad()) return;
        std::vector<double> g(x.size(), o.grad[0]);
        x.node()->accum_grad(g);
    });
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape) {
    if (shape_numel(new_shape) != x.size())
        throw validation_error("reshape: cannot view " + format_shape(x.shape()) + " as " +
                               format_shape(new_shape));
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_op_output(std::move(new_shape), std::move(out), {x}, [x](Node& o) {
        if (x.requires_grad()) x.node()->accum_grad(o.grad);
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = matmul(x, w);
    return add(y, repeat_interleave_rows(b, y.rows()));
}

Tensor mean_squared_error(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mean_squared_error");
    Tensor d = sub(pred, target);
    return mul_scalar(sum_all(mul(d, d)), 1.0 / static_cast<double>(pred.size()));
}

}  // namespace infu
