#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "vmdload/autodiff/ops.hpp"

namespace gradcheck {

using vmdload::ad::Tape;
using vmdload::ad::Tensor;

struct Report {
  double max_rel_error = 0.0;
  int checked = 0;
  int kinks = 0;  // coordinates skipped because the stencil straddled a non-differentiable point
};

/// Compares reverse-mode gradients of `loss_fn` w.r.t. `wrt` with finite differences on up
/// to `per_tensor` randomly chosen coordinates of each tensor (all when the tensor is small).
/// Error per coordinate is |a - n| / max(|a|, |n|, s) with s = `floor` times the largest
/// analytic magnitude in that tensor, so near-zero entries are judged on the tensor's scale.
/// With `kink_guard`, each coordinate is also differenced at h/10; when the two estimates
/// disagree the stencil crossed a ReLU or max-pool kink and the coordinate is skipped. A wrong
/// analytic gradient still shows up, since both estimates then agree with each other.
inline Report check(const std::function<Tensor(Tape&)>& loss_fn, const std::vector<Tensor>& wrt, int per_tensor,
                    std::uint64_t seed, double h = 1e-4, double floor = 1e-3, bool kink_guard = false) {
  for (auto t : wrt) t.zero_grad();
  {
    Tape tape;
    const Tensor loss = loss_fn(tape);
    tape.backward(loss);
  }
  std::vector<Eigen::ArrayXd> analytic;
  for (const auto& t : wrt) analytic.push_back(t.has_grad() ? t.grad() : Eigen::ArrayXd::Zero(t.numel()));

  auto eval = [&] {
    Tape quiet(false);
    return loss_fn(quiet).item();
  };
  std::mt19937_64 rng(seed);
  Report report;
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    Tensor t = wrt[i];
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(t.numel()));
    for (Eigen::Index j = 0; j < t.numel(); ++j) coords[static_cast<std::size_t>(j)] = j;
    std::shuffle(coords.begin(), coords.end(), rng);
    if (static_cast<int>(coords.size()) > per_tensor) coords.resize(static_cast<std::size_t>(per_tensor));
    for (auto j : coords) {
      // Fourth-order central stencil: truncation O(h^4) lets h stay large enough that
      // cancellation does not swamp small gradients.
      const double keep = t.value()[j];
      auto at = [&](double dx) {
        t.value()[j] = keep + dx;
        const double v = eval();
        t.value()[j] = keep;
        return v;
      };
      auto stencil = [&](double step) {
        return (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
      };
      const double numeric = stencil(h);
      const double scale = std::max(floor * analytic[i].abs().maxCoeff(), 1e-12);
      if (kink_guard && oracle::relative_error(numeric, stencil(h / 10.0), scale) > 1e-5) {
        ++report.kinks;
        continue;
      }
      report.max_rel_error = std::max(report.max_rel_error, oracle::relative_error(analytic[i][j], numeric, scale));
      ++report.checked;
    }
  }
  return report;
}

inline Tensor random_tensor(vmdload::ad::Shape shape, std::mt19937_64& rng, double scale = 1.0,
                            bool requires_grad = true) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::ArrayXd v(vmdload::ad::numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace gradcheck
