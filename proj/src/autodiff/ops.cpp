#include "vmdload/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmdload/errors.hpp"

namespace vmdload::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

bool tracks(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->defined() && t->requires_grad(); });
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     (t.defined() ? ", got " + to_string(t.shape()) : ", got undefined tensor"));
  }
}

void require_vector(const Tensor& t, Index size, const char* op, const char* what) {
  if (!t.defined() || t.rank() != 1 || t.dim(0) != size) {
    throw ShapeError(std::string(op) + ": " + what + " must have shape [" + std::to_string(size) + "]");
  }
}

Index leading(const Shape& shape, std::size_t axis) {
  Index n = 1;
  for (std::size_t i = 0; i < axis; ++i) n *= shape[i];
  return n;
}

Index trailing(const Shape& shape, std::size_t axis) {
  Index n = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) n *= shape[i];
  return n;
}

}  // namespace

Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& kernel, const Tensor& bias, int stride, Padding padding) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(kernel, 3, "conv1d", "kernel");
  const Index batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const Index filters = kernel.dim(0), width = kernel.dim(2);
  if (kernel.dim(1) != channels) {
    throw ShapeError("conv1d: kernel " + to_string(kernel.shape()) + " incompatible with input " + to_string(x.shape()));
  }
  if (bias.defined()) require_vector(bias, filters, "conv1d", "bias");
  if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
  const Index pad_left = padding == Padding::same ? (width - 1) / 2 : 0;
  const Index pad_right = padding == Padding::same ? width - 1 - pad_left : 0;
  if (width > length + pad_left + pad_right) throw ShapeError("conv1d: kernel wider than padded input");
  const Index out_len = (length + pad_left + pad_right - width) / stride + 1;
  const Index rows = channels * width;

  // im2col: per batch a [C*W, L'] matrix.
  Eigen::ArrayXd cols = Eigen::ArrayXd::Zero(batch * rows * out_len);
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const double* src = x.data() + (b * channels + c) * length;
      for (Index k = 0; k < width; ++k) {
        double* dst = cols.data() + (b * rows + c * width + k) * out_len;
        for (Index o = 0; o < out_len; ++o) {
          const Index s = o * stride + k - pad_left;
          if (s >= 0 && s < length) dst[o] = src[s];
        }
      }
    }
  }

  Eigen::ArrayXd out(batch * filters * out_len);
  const ConstMatMap w(kernel.data(), filters, rows);
  for (Index b = 0; b < batch; ++b) {
    MatMap ob(out.data() + b * filters * out_len, filters, out_len);
    ob.noalias() = w * ConstMatMap(cols.data() + b * rows * out_len, rows, out_len);
    if (bias.defined()) ob.colwise() += ConstVecMap(bias.data(), filters);
  }

  const bool grad = tracks(tape, {&x, &kernel, &bias});
  Tensor result = Tensor::from({batch, filters, out_len}, std::move(out), grad);
  if (grad) {
    tape.record(result, [=, cols = std::move(cols)]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      const ConstMatMap wm(kernel.data(), filters, rows);
      RowMatrix dcol(rows, out_len);
      for (Index b = 0; b < batch; ++b) {
        const ConstMatMap gb(g.data() + b * filters * out_len, filters, out_len);
        const ConstMatMap col(cols.data() + b * rows * out_len, rows, out_len);
        if (kernel.requires_grad()) MatMap(kernel.grad().data(), filters, rows).noalias() += gb * col.transpose();
        if (bias.defined() && bias.requires_grad()) VecMap(bias.grad().data(), filters) += gb.rowwise().sum();
        if (x.requires_grad()) {
          dcol.noalias() = wm.transpose() * gb;
          Eigen::ArrayXd& dx = x.grad();
          for (Index c = 0; c < channels; ++c) {
            double* dst = dx.data() + (b * channels + c) * length;
            for (Index k = 0; k < width; ++k) {
              for (Index o = 0; o < out_len; ++o) {
                const Index s = o * stride + k - pad_left;
                if (s >= 0 && s < length) dst[s] += dcol(c * width + k, o);
              }
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor avg_pool1d(Tape& tape, const Tensor& x, int kernel, int stride, int padding) {
  if (!x.defined() || x.rank() < 1) throw ShapeError("avg_pool1d: input must have rank >= 1");
  const Index length = x.shape().back();
  if (kernel < 1 || stride < 1 || padding < 0) throw ShapeError("avg_pool1d: invalid kernel/stride/padding");
  if (kernel > length + 2 * padding) throw ShapeError("avg_pool1d: kernel larger than input");
  const Index rows = x.numel() / length;
  const Index out_len = (length + 2 * padding - kernel) / stride + 1;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(rows * out_len);
  const double inv = 1.0 / kernel;
  for (Index r = 0; r < rows; ++r) {
    const double* src = x.data() + r * length;
    for (Index o = 0; o < out_len; ++o) {
      double acc = 0.0;
      for (Index j = 0; j < kernel; ++j) {
        const Index s = o * stride + j - padding;
        if (s >= 0 && s < length) acc += src[s];
      }
      out[r * out_len + o] = acc * inv;
    }
  }
  Shape shape = x.shape();
  shape.back() = out_len;
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Eigen::ArrayXd& dx = x.grad();
      for (Index r = 0; r < rows; ++r) {
        for (Index o = 0; o < out_len; ++o) {
          const double v = g[r * out_len + o] * inv;
          for (Index j = 0; j < kernel; ++j) {
            const Index s = o * stride + j - padding;
            if (s >= 0 && s < length) dx[r * length + s] += v;
          }
        }
      }
    });
  }
  return result;
}

Tensor max_pool1d(Tape& tape, const Tensor& x, int kernel, int stride, int padding) {
  if (!x.defined() || x.rank() < 1) throw ShapeError("max_pool1d: input must have rank >= 1");
  const Index length = x.shape().back();
  if (kernel < 1 || stride < 1 || padding < 0 || padding >= kernel) {
    throw ShapeError("max_pool1d: invalid kernel/stride/padding");
  }
  if (kernel > length + 2 * padding) throw ShapeError("max_pool1d: kernel larger than input");
  const Index rows = x.numel() / length;
  const Index out_len = (length + 2 * padding - kernel) / stride + 1;
  Eigen::ArrayXd out(rows * out_len);
  std::vector<Index> argmax(static_cast<std::size_t>(rows * out_len));
  for (Index r = 0; r < rows; ++r) {
    const double* src = x.data() + r * length;
    for (Index o = 0; o < out_len; ++o) {
      double best = -std::numeric_limits<double>::infinity();
      Index where = -1;
      for (Index j = 0; j < kernel; ++j) {
        const Index s = o * stride + j - padding;
        if (s >= 0 && s < length && (where < 0 || src[s] > best)) {
          best = src[s];
          where = s;
        }
      }
      out[r * out_len + o] = best;
      argmax[static_cast<std::size_t>(r * out_len + o)] = r * length + where;
    }
  }
  Shape shape = x.shape();
  shape.back() = out_len;
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    tape.record(result, [=, argmax = std::move(argmax)]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Eigen::ArrayXd& dx = x.grad();
      for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += g[static_cast<Index>(i)];
    });
  }
  return result;
}

Tensor batch_norm1d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, double momentum, BatchNormMode mode, double eps) {
  require_rank(x, 3, "batch_norm1d", "input");
  const Index batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  require_vector(gamma, channels, "batch_norm1d", "gamma");
  require_vector(beta, channels, "batch_norm1d", "beta");
  require_vector(running_mean, channels, "batch_norm1d", "running_mean");
  require_vector(running_var, channels, "batch_norm1d", "running_var");
  const Index count = batch * length;
  const bool train = mode == BatchNormMode::train;
  if (train && count <= 1) throw ShapeError("batch_norm1d: train mode needs more than one value per channel");

  Eigen::ArrayXd inv_std(channels);
  Eigen::ArrayXd normalized(x.numel());
  Eigen::ArrayXd out(x.numel());
  for (Index c = 0; c < channels; ++c) {
    double mean = 0.0, var = 0.0;
    if (train) {
      for (Index b = 0; b < batch; ++b) mean += x.value().segment((b * channels + c) * length, length).sum();
      mean /= static_cast<double>(count);
      for (Index b = 0; b < batch; ++b) {
        var += (x.value().segment((b * channels + c) * length, length) - mean).square().sum();
      }
      var /= static_cast<double>(count);
      running_mean.value()[c] = (1.0 - momentum) * running_mean.value()[c] + momentum * mean;
      running_var.value()[c] = (1.0 - momentum) * running_var.value()[c] +
                               momentum * var * static_cast<double>(count) / static_cast<double>(count - 1);
    } else {
      mean = running_mean.value()[c];
      var = running_var.value()[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (Index b = 0; b < batch; ++b) {
      const Index off = (b * channels + c) * length;
      normalized.segment(off, length) = (x.value().segment(off, length) - mean) * inv_std[c];
      out.segment(off, length) = normalized.segment(off, length) * gamma.value()[c] + beta.value()[c];
    }
  }

  const bool grad = tracks(tape, {&x, &gamma, &beta});
  Tensor result = Tensor::from(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record(result, [=, normalized = std::move(normalized), inv_std = std::move(inv_std)]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      const double n = static_cast<double>(count);
      for (Index c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_g_xhat = 0.0;
        for (Index b = 0; b < batch; ++b) {
          const Index off = (b * channels + c) * length;
          sum_g += g.segment(off, length).sum();
          sum_g_xhat += (g.segment(off, length) * normalized.segment(off, length)).sum();
        }
        if (gamma.requires_grad()) gamma.grad()[c] += sum_g_xhat;
        if (beta.requires_grad()) beta.grad()[c] += sum_g;
        if (!x.requires_grad()) continue;
        const double gm = gamma.value()[c];
        Eigen::ArrayXd& dx = x.grad();
        for (Index b = 0; b < batch; ++b) {
          const Index off = (b * channels + c) * length;
          if (train) {
            dx.segment(off, length) += gm * inv_std[c] / n *
                                       (n * g.segment(off, length) - sum_g - normalized.segment(off, length) * sum_g_xhat);
          } else {
            dx.segment(off, length) += gm * inv_std[c] * g.segment(off, length);
          }
        }
      }
    });
  }
  return result;
}

Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "dense", "input");
  require_rank(weight, 2, "dense", "weight");
  const Index batch = x.dim(0), in = x.dim(1), outf = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("dense: weight " + to_string(weight.shape()) + " incompatible with input " + to_string(x.shape()));
  }
  if (bias.defined()) require_vector(bias, outf, "dense", "bias");
  Eigen::ArrayXd out(batch * outf);
  MatMap y(out.data(), batch, outf);
  y.noalias() = ConstMatMap(x.data(), batch, in) * ConstMatMap(weight.data(), outf, in).transpose();
  if (bias.defined()) y.rowwise() += ConstVecMap(bias.data(), outf).transpose();

  const bool grad = tracks(tape, {&x, &weight, &bias});
  Tensor result = Tensor::from({batch, outf}, std::move(out), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const ConstMatMap g(result.node()->grad.data(), batch, outf);
      if (x.requires_grad()) MatMap(x.grad().data(), batch, in).noalias() += g * ConstMatMap(weight.data(), outf, in);
      if (weight.requires_grad()) {
        MatMap(weight.grad().data(), outf, in).noalias() += g.transpose() * ConstMatMap(x.data(), batch, in);
      }
      if (bias.defined() && bias.requires_grad()) VecMap(bias.grad().data(), outf) += g.colwise().sum().transpose();
    });
  }
  return result;
}

Tensor relu(Tape& tape, const Tensor& x) {
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(x.shape(), x.value().max(0.0), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      x.grad() += (x.value() > 0.0).cast<double>() * result.node()->grad;
    });
  }
  return result;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  const Eigen::ArrayXd& v = x.value();
  Eigen::ArrayXd y(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    y[i] = v[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-v[i])) : std::exp(v[i]) / (1.0 + std::exp(v[i]));
  }
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(x.shape(), std::move(y), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& s = result.value();
      x.grad() += result.node()->grad * s * (1.0 - s);
    });
  }
  return result;
}

Tensor identity(Tape&, const Tensor& x) { return x; }

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const bool grad = tracks(tape, {&a, &b});
  Tensor result = Tensor::from(a.shape(), a.value() + b.value(), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      if (a.requires_grad()) a.grad() += g;
      if (b.requires_grad()) b.grad() += g;
    });
  }
  return result;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(x.shape(), x.value() * factor, grad);
  if (grad) {
    tape.record(result, [=]() mutable { x.grad() += factor * result.node()->grad; });
  }
  return result;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw ShapeError("concat: axis out of range");
  Shape shape = ref;
  shape[axis] = 0;
  bool grad = false;
  for (const auto& p : parts) {
    if (p.rank() != ref.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d) {
      if (d != axis && p.dim(d) != ref[d]) {
        throw ShapeError("concat: shape mismatch " + to_string(p.shape()) + " vs " + to_string(ref));
      }
    }
    shape[axis] += p.dim(axis);
    grad = grad || tracks(tape, {&p});
  }
  const Index outer = leading(ref, axis);
  const Index inner = trailing(ref, axis);
  const Index total = shape[axis] * inner;
  Eigen::ArrayXd out(numel(shape));
  Index offset = 0;
  for (const auto& p : parts) {
    const Index chunk = p.dim(axis) * inner;
    for (Index o = 0; o < outer; ++o) out.segment(o * total + offset, chunk) = p.value().segment(o * chunk, chunk);
    offset += chunk;
  }
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Index off = 0;
      for (auto& p : inputs) {
        const Index chunk = p.dim(axis) * inner;
        if (p.requires_grad()) {
          Eigen::ArrayXd& dp = p.grad();
          for (Index o = 0; o < outer; ++o) dp.segment(o * chunk, chunk) += g.segment(o * total + off, chunk);
        }
        off += chunk;
      }
    });
  }
  return result;
}

Tensor narrow(Tape& tape, const Tensor& x, std::size_t axis, Index start, Index length) {
  if (axis >= x.rank() || start < 0 || length < 1 || start + length > x.dim(axis)) {
    throw ShapeError("narrow: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") invalid for axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  }
  const Index outer = leading(x.shape(), axis);
  const Index inner = trailing(x.shape(), axis);
  const Index src_chunk = x.dim(axis) * inner;
  const Index chunk = length * inner;
  Shape shape = x.shape();
  shape[axis] = length;
  Eigen::ArrayXd out(outer * chunk);
  for (Index o = 0; o < outer; ++o) out.segment(o * chunk, chunk) = x.value().segment(o * src_chunk + start * inner, chunk);
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Eigen::ArrayXd& dx = x.grad();
      for (Index o = 0; o < outer; ++o) dx.segment(o * src_chunk + start * inner, chunk) += g.segment(o * chunk, chunk);
    });
  }
  return result;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape) + " changes element count");
  }
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(std::move(shape), x.value(), grad);
  if (grad) {
    tape.record(result, [=]() mutable { x.grad() += result.node()->grad; });
  }
  return result;
}

Tensor pad1d(Tape& tape, const Tensor& x, Index left, Index right) {
  if (left < 0 || right < 0) throw ShapeError("pad1d: negative padding");
  const Index length = x.shape().back();
  const Index rows = x.numel() / length;
  const Index out_len = length + left + right;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(rows * out_len);
  for (Index r = 0; r < rows; ++r) out.segment(r * out_len + left, length) = x.value().segment(r * length, length);
  Shape shape = x.shape();
  shape.back() = out_len;
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Eigen::ArrayXd& dx = x.grad();
      for (Index r = 0; r < rows; ++r) dx.segment(r * length, length) += g.segment(r * out_len + left, length);
    });
  }
  return result;
}

Tensor global_avg_pool1d(Tape& tape, const Tensor& x) {
  require_rank(x, 3, "global_avg_pool1d", "input");
  const Index rows = x.dim(0) * x.dim(1), length = x.dim(2);
  Eigen::ArrayXd out(rows);
  for (Index r = 0; r < rows; ++r) out[r] = x.value().segment(r * length, length).mean();
  const bool grad = tracks(tape, {&x});
  Tensor result = Tensor::from({x.dim(0), x.dim(1)}, std::move(out), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const Eigen::ArrayXd& g = result.node()->grad;
      Eigen::ArrayXd& dx = x.grad();
      for (Index r = 0; r < rows; ++r) dx.segment(r * length, length) += g[r] / static_cast<double>(length);
    });
  }
  return result;
}

Tensor mse_loss(Tape& tape, const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse_loss: shape mismatch " + to_string(prediction.shape()) + " vs " + to_string(target.shape()));
  }
  const double n = static_cast<double>(prediction.numel());
  const double loss = (prediction.value() - target.value()).square().sum() / n;
  const bool grad = tracks(tape, {&prediction, &target});
  Tensor result = Tensor::from({1}, Eigen::ArrayXd::Constant(1, loss), grad);
  if (grad) {
    tape.record(result, [=]() mutable {
      const double g = result.node()->grad[0];
      const Eigen::ArrayXd d = (prediction.value() - target.value()) * (2.0 * g / n);
      if (prediction.requires_grad()) prediction.grad() += d;
      if (target.requires_grad()) target.grad() -= d;
    });
  }
  return result;
}

}  // namespace vmdload::ad
