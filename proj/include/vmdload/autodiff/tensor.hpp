#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vmdload::ad {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct TensorData {
  Shape shape;
  Eigen::ArrayXd value;  // row-major
  Eigen::ArrayXd grad;   // empty until something is accumulated
  bool requires_grad = false;
};

/// Shared handle to a dense row-major float64 array with an optional gradient.
/// Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, Eigen::ArrayXd values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  Index dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  Index numel() const { return node_->value.size(); }

  Eigen::ArrayXd& value() { return node_->value; }
  const Eigen::ArrayXd& value() const { return node_->value; }
  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  /// Gradient accumulator, allocated as zeros on first access.
  // Handles are shallow, so accumulating through a const handle is allowed.
  Eigen::ArrayXd& grad() const;
  void zero_grad() { node_->grad.resize(0); }

  /// Deep copy without gradient history.
  Tensor clone() const;

  const std::shared_ptr<TensorData>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorData> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorData> node_;
};

/// Ordered record of executed operations. Each entry owns the closure that pushes the
/// output's gradient into its inputs; entries are appended in execution order, so
/// replaying them backwards is a valid reverse topological sweep.
class Tape {
 public:
  using Backward = std::function<void()>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void record(const Tensor& output, Backward fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates through every recorded entry.
  void backward(const Tensor& loss);

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::shared_ptr<TensorData> output;
    Backward fn;
  };
  std::vector<Entry> entries_;
  bool recording_;
};

}  // namespace vmdload::ad
