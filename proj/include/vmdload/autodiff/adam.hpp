#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vmdload/autodiff/tensor.hpp"

namespace vmdload::ad {

struct AdamState {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Eigen::ArrayXd> first_moment;
  std::vector<Eigen::ArrayXd> second_moment;
};

/// One bias-corrected Adam update of every tensor in `params` from its accumulated
/// gradient (a tensor without gradient counts as zero gradient). Moments are created
/// on the first call and must keep the same parameter order afterwards.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace vmdload::ad
