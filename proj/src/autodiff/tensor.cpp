#include "vmdload/autodiff/tensor.hpp"

#include <numeric>
#include <sstream>

#include "vmdload/errors.hpp"

namespace vmdload::ad {

Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const Index n = ad::numel(shape);
  return from(std::move(shape), Eigen::ArrayXd::Zero(n), requires_grad);
}

Tensor Tensor::from(Shape shape, Eigen::ArrayXd values, bool requires_grad) {
  if (ad::numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + to_string(shape) + " does not hold " + std::to_string(values.size()) +
                     " values");
  }
  auto node = std::make_shared<TensorData>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, Eigen::ArrayXd::Constant(1, value), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

Eigen::ArrayXd& Tensor::grad() const {
  if (!has_grad()) node_->grad = Eigen::ArrayXd::Zero(node_->value.size());
  return node_->grad;
}

Tensor Tensor::clone() const {
  return from(shape(), value(), requires_grad());
}

void Tape::record(const Tensor& output, Backward fn) {
  if (recording_) entries_.push_back({output.node(), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar tensor");
  }
  auto& seed = loss.node()->grad;
  if (seed.size() != 1) seed = Eigen::ArrayXd::Zero(1);
  seed[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.size() == it->output->value.size()) it->fn();
  }
}

}  // namespace vmdload::ad
