#include "vmdload/autodiff/adam.hpp"

#include <cmath>

#include "vmdload/errors.hpp"

namespace vmdload::ad {

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Eigen::ArrayXd::Zero(p.numel()));
      state.second_moment.push_back(Eigen::ArrayXd::Zero(p.numel()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter count changed between steps");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != p.numel()) throw ShapeError("adam_step: moment shape does not match parameter");
    if (!p.has_grad()) {
      m *= state.beta1;
      v *= state.beta2;
    } else {
      const Eigen::ArrayXd& g = p.node()->grad;
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    }
    p.value() -= state.lr * (m / correction1) / ((v / correction2).sqrt() + state.eps);
  }
}

}  // namespace vmdload::ad
