#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fadnet/network.hpp"
#include "fadnet/training.hpp"

// Forward-pass timing harness. Inference only: no gradient buffers are
// touched, matching how deployment latency is reported.

namespace fadnet {

struct BenchReport {
  std::string config_name;
  std::int64_t height = 0;
  std::int64_t width = 0;
  int warmup_runs = 0;
  int timed_runs = 0;
  std::vector<double> run_seconds;  // timed runs only
  double median_seconds = 0.0;
  double p95_seconds = 0.0;
  std::int64_t parameter_count = 0;
};

namespace detail {

inline double percentile_nearest_rank(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline BenchReport bench_forward(const NetworkConfig& cfg, const std::string& name,
                                 std::int64_t height, std::int64_t width, int timed_runs,
                                 int warmup_runs, std::uint64_t seed) {
  if (timed_runs < 10) throw ConfigError("bench: need at least 10 timed runs");
  if (warmup_runs < 0) throw ConfigError("bench: warmup count must be >= 0");
  cfg.validate();

  StackedModel model = build_model(cfg, seed);
  Rng rng(seed ^ 0xbadc0ffee0ddf00dULL);
  Tensor left = Tensor::rand_uniform({1, 3, height, width}, rng);
  Tensor right = Tensor::rand_uniform({1, 3, height, width}, rng);

  BenchReport report;
  report.config_name = name;
  report.height = height;
  report.width = width;
  report.warmup_runs = warmup_runs;
  report.timed_runs = timed_runs;
  report.parameter_count = model.parameter_count();

  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup_runs; ++i) model.forward(left, right);
  for (int i = 0; i < timed_runs; ++i) {
    const auto t0 = clock::now();
    model.forward(left, right);
    const auto t1 = clock::now();
    report.run_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  report.median_seconds = detail::median_of(report.run_seconds);
  report.p95_seconds = detail::percentile_nearest_rank(report.run_seconds, 0.95);
  return report;
}

inline std::string bench_table(const std::vector<BenchReport>& reports) {
  std::ostringstream os;
  os << "# config\tresolution\tparams\truns\tmedian_s\tp95_s\n";
  for (const auto& r : reports) {
    os << r.config_name << '\t' << r.width << 'x' << r.height << '\t' << r.parameter_count
       << '\t' << r.timed_runs << '\t' << r.median_seconds << '\t' << r.p95_seconds << '\n';
  }
  return os.str();
}

}  // namespace fadnet
