#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fadnet/disparity_io.hpp"
#include "fadnet/errors.hpp"

// Evaluation metrics over jointly valid pixels. All of them are permutation
// invariant and ignore invalid pixels entirely.

namespace fadnet {

namespace detail {

inline void check_metric_pair(const DisparityMap& pred, const DisparityMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("metrics: map sizes differ: " + std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                     std::to_string(gt.height));
  }
}

}  // namespace detail

// Mean absolute disparity error (end-point error).
inline double epe(const DisparityMap& pred, const DisparityMap& gt) {
  detail::check_metric_pair(pred, gt);
  double acc = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    acc += std::fabs(static_cast<double>(pred.values[i]) - static_cast<double>(gt.values[i]));
    ++n;
  }
  if (n == 0) throw DegenerateError("epe: no jointly valid pixels");
  return acc / static_cast<double>(n);
}

struct ThresholdMetrics {
  double d1_all = 0.0;    // error > 3 px and error > 5% of ground truth
  std::vector<double> bad;  // fraction with |error| > threshold, per input threshold
  double rms = 0.0;
  double avg_error = 0.0;  // same quantity as epe
};

inline ThresholdMetrics threshold_metrics(const DisparityMap& pred, const DisparityMap& gt,
                                          const std::vector<double>& thresholds) {
  detail::check_metric_pair(pred, gt);
  ThresholdMetrics m;
  m.bad.assign(thresholds.size(), 0.0);
  double abs_acc = 0.0, sq_acc = 0.0;
  std::int64_t n = 0, d1 = 0;
  std::vector<std::int64_t> bad_counts(thresholds.size(), 0);
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    const double err =
        std::fabs(static_cast<double>(pred.values[i]) - static_cast<double>(gt.values[i]));
    abs_acc += err;
    sq_acc += err * err;
    if (err > 3.0 && err > 0.05 * static_cast<double>(gt.values[i])) ++d1;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (err > thresholds[t]) ++bad_counts[t];
    }
    ++n;
  }
  if (n == 0) throw DegenerateError("threshold_metrics: no jointly valid pixels");
  const double dn = static_cast<double>(n);
  m.d1_all = static_cast<double>(d1) / dn;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    m.bad[t] = static_cast<double>(bad_counts[t]) / dn;
  }
  m.rms = std::sqrt(sq_acc / dn);
  m.avg_error = abs_acc / dn;
  return m;
}

// Counts of valid nonzero disparities binned as [k*w, (k+1)*w). Zeros are
// excluded by definition.
struct DisparityHistogram {
  double bin_width = 1.0;
  std::map<std::int64_t, std::int64_t> counts;  // bin index -> count

  bool empty() const { return counts.empty(); }

  std::string to_text() const {
    std::ostringstream os;
    os << "# bin_lo\tbin_hi\tcount\n";
    for (const auto& [bin, c] : counts) {
      os << static_cast<double>(bin) * bin_width << '\t'
         << static_cast<double>(bin + 1) * bin_width << '\t' << c << '\n';
    }
    return os.str();
  }
};

inline DisparityHistogram disparity_histogram(const std::vector<DisparityMap>& maps,
                                              double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("disparity_histogram: bin width must be positive");
  DisparityHistogram h;
  h.bin_width = bin_width;
  for (const auto& map : maps) {
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      if (!map.valid[i] || map.values[i] == 0.0f) continue;
      const std::int64_t bin =
          static_cast<std::int64_t>(std::floor(static_cast<double>(map.values[i]) / bin_width));
      ++h.counts[bin];
    }
  }
  return h;
}

}  // namespace fadnet
