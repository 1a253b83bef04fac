#pragma once

#include <span>

#include "vmdload/autodiff/tensor.hpp"

namespace vmdload::ad {

enum class Padding { none, same };
enum class BatchNormMode { train, eval };

/// Cross-correlation of x[B,C,L] with kernel[F,C,W]; `bias` may be undefined.
/// Output length is floor((L + pad_l + pad_r - W) / stride) + 1; `same` pads (W-1)/2 left.
Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& kernel, const Tensor& bias, int stride = 1,
              Padding padding = Padding::none);

/// Window mean over the last axis; zero padding counts toward the mean.
Tensor avg_pool1d(Tape& tape, const Tensor& x, int kernel, int stride, int padding = 0);
/// Window max over the last axis; padding never wins. Ties route to the first maximum.
Tensor max_pool1d(Tape& tape, const Tensor& x, int kernel, int stride, int padding = 0);

/// Per-channel normalization of x[B,C,L] over batch and length. In train mode the running
/// statistics are updated in place as running = (1 - momentum) * running + momentum * batch,
/// with the unbiased batch variance.
Tensor batch_norm1d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, double momentum, BatchNormMode mode, double eps = 1e-5);

/// x[B,F_in] * weight[F_out,F_in]^T + bias[F_out]; `bias` may be undefined.
Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor identity(Tape& tape, const Tensor& x);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);
Tensor narrow(Tape& tape, const Tensor& x, std::size_t axis, Index start, Index length);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
/// Zero padding on the last axis.
Tensor pad1d(Tape& tape, const Tensor& x, Index left, Index right);

/// Mean over the last axis: [B,C,L] -> [B,C].
Tensor global_avg_pool1d(Tape& tape, const Tensor& x);

Tensor mse_loss(Tape& tape, const Tensor& prediction, const Tensor& target);

}  // namespace vmdload::ad
