#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fadnet/ops.hpp"
#include "fadnet/rng.hpp"
#include "fadnet/tensor.hpp"

// Central finite-difference verification of analytic gradients. The checked
// scalar is sum(op(inputs)); callers wanting a random projection can fold the
// projection into `op` itself.

namespace fadnet {

struct GradientReport {
  bool pass = false;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int worst_input = -1;
  std::int64_t worst_element = -1;
  std::int64_t probes = 0;
};

using TensorOp = std::function<Tensor(const std::vector<Tensor>&)>;

namespace detail {

inline double forward_sum(const TensorOp& op, const std::vector<Tensor>& inputs) {
  Tensor out = op(inputs);
  double s = 0.0;
  for (double v : out.values()) s += v;
  return s;
}

}  // namespace detail

// Compares dSum/dInput against (f(x+eps) - f(x-eps)) / (2 eps) per element.
// An element passes when the relative error is <= tol, with an absolute
// fallback |delta| <= tol when both magnitudes are below 1e-6. When
// max_probes_per_input >= 0, a deterministic random subset of elements is
// probed instead of all of them.
inline GradientReport check_gradient(const TensorOp& op, const std::vector<Tensor>& inputs,
                                     double eps = 1e-5, double tol = 1e-4,
                                     std::int64_t max_probes_per_input = -1,
                                     std::uint64_t probe_seed = 0x9e3779b9) {
  if (!(eps > 0.0)) throw ContractError("check_gradient requires eps > 0");

  // Fresh gradient-tracking leaves, detached from any prior graph.
  std::vector<Tensor> tracked;
  tracked.reserve(inputs.size());
  for (const auto& in : inputs) {
    tracked.push_back(Tensor::from_data(in.shape(), in.values(), true));
  }
  Tensor loss = sum(op(tracked));
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : tracked) {
    analytic.push_back(t.has_grad() ? t.grad() : std::vector<double>(t.values().size(), 0.0));
  }

  // Plain value copies for probing.
  std::vector<Tensor> probe;
  for (const auto& in : inputs) probe.push_back(Tensor::from_data(in.shape(), in.values()));

  GradientReport report;
  report.pass = true;
  Rng rng(probe_seed);
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const std::int64_t n = probe[k].numel();
    std::vector<std::int64_t> elements;
    if (max_probes_per_input < 0 || n <= max_probes_per_input) {
      elements.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) elements[static_cast<std::size_t>(i)] = i;
    } else {
      for (std::int64_t i = 0; i < max_probes_per_input; ++i) elements.push_back(rng.index(n));
    }
    for (std::int64_t e : elements) {
      auto& cell = probe[k].values()[static_cast<std::size_t>(e)];
      const double saved = cell;
      cell = saved + eps;
      const double f_plus = detail::forward_sum(op, probe);
      cell = saved - eps;
      const double f_minus = detail::forward_sum(op, probe);
      cell = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericError("non-finite finite-difference probe at input " + std::to_string(k) +
                           " element " + std::to_string(e));
      }
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[k][static_cast<std::size_t>(e)];
      const double abs_err = std::fabs(a - fd);
      const double denom = std::max(std::fabs(a), std::fabs(fd));
      const double rel_err = denom > 0.0 ? abs_err / denom : 0.0;
      const bool small = std::fabs(a) < 1e-6 && std::fabs(fd) < 1e-6;
      const bool ok = small ? abs_err <= tol : rel_err <= tol;
      ++report.probes;
      if (rel_err > report.max_rel_err && !small) {
        report.max_rel_err = rel_err;
        report.worst_input = static_cast<int>(k);
        report.worst_element = e;
      }
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      if (!ok) report.pass = false;
    }
  }
  return report;
}

// One-sided difference quotient along +/- eps at a single input element, for
// probing non-differentiable points directionally.
inline double one_sided_fd(const TensorOp& op, const std::vector<Tensor>& inputs, std::size_t input,
                           std::int64_t element, int direction, double eps = 1e-5) {
  if (!(eps > 0.0)) throw ContractError("one_sided_fd requires eps > 0");
  std::vector<Tensor> probe;
  for (const auto& in : inputs) probe.push_back(Tensor::from_data(in.shape(), in.values()));
  const double f0 = detail::forward_sum(op, probe);
  auto& cell = probe[input].values()[static_cast<std::size_t>(element)];
  cell += direction >= 0 ? eps : -eps;
  const double f1 = detail::forward_sum(op, probe);
  return direction >= 0 ? (f1 - f0) / eps : (f0 - f1) / eps;
}

}  // namespace fadnet
