#pragma once

#include <cstddef>
#include <vector>

#include "infu/tensor.hpp"

namespace infu {

// Dense matrix product a[m,k] @ b[k,n]. Backward: da = g @ b^T, db = a^T @ g.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Elementwise; shapes must match exactly (scalars broadcast only via the
// *_scalar variants).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// Row r*k+j of the output is row r of x. Backward sums each group of k rows.
Tensor repeat_interleave_rows(const Tensor& x, std::size_t k);

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);

// out row r = x row idx[r]; indices may repeat (backward accumulates).
Tensor take_rows(const Tensor& x, std::vector<std::size_t> idx);

Tensor concat_rows(const std::vector<Tensor>& parts);

// Element-level permutation/selection: out flat[i] = x flat[idx[i]].
Tensor gather(const Tensor& x, std::vector<std::size_t> idx,
              std::vector<std::size_t> out_shape);

// Numerically stabilized softmax over the last axis of a matrix.
Tensor softmax_rows(const Tensor& x);

// x[r,d] / sqrt(mean(x[r,:]^2) + 1e-6) * gain[d], per row.
Tensor rms_norm(const Tensor& x, const Tensor& gain);

// tanh-approximation GELU, elementwise.
Tensor gelu(const Tensor& x);

// Scaled dot-product attention over `batch` independent sequences laid out
// contiguously in the rows of q/k/v ({batch*seq, dim}), split into `heads`
// column groups. One fused node; softmax probabilities are saved for backward.
Tensor joint_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                       std::size_t batch, std::size_t heads);

Tensor sum_all(const Tensor& x);

// Row-major reinterpretation; same element count.
Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape);

// x[n,din] @ w[din,dout] + bias (bias shape {1,dout}), expanded over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Mean of squared differences over all elements.
Tensor mean_squared_error(const Tensor& pred, const Tensor& target);

}  // namespace infu
