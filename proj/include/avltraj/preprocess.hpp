#pragma once

// Trip cleaning: completeness filter, jump removal, monotone repair, endpoint
// trimming, and density subsampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "avltraj/core.hpp"

namespace avltraj {

struct PreprocessConfig {
  double max_time_gap = 600.0;       // s
  double max_dist_gap = 5280.0;      // ft
  double max_jump = 500.0;           // ft
  double max_back_jump = 200.0;      // ft
  double implied_speed_cap = 66.0;   // ft/s
  double stationary_tolerance = 1.0; // ft
  std::size_t min_samples = 2;

  void validate() const {
    detail::require(max_time_gap > 0 && max_dist_gap > 0 && max_jump > 0 && max_back_jump > 0 &&
                        implied_speed_cap > 0 && stationary_tolerance >= 0,
                    ErrorKind::invalid_argument, "preprocess: thresholds must be positive");
    detail::require(max_back_jump <= max_jump, ErrorKind::invalid_argument,
                    "preprocess: max_back_jump must not exceed max_jump");
    detail::require(min_samples >= 2, ErrorKind::invalid_argument,
                    "preprocess: min_samples must be at least 2");
  }
};

enum class RejectReason { time_gap, distance_gap, too_short };

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::time_gap: return "time-gap";
    case RejectReason::distance_gap: return "distance-gap";
    case RejectReason::too_short: return "too-short";
  }
  return "unknown";
}

struct Rejection {
  std::string trip_id;
  RejectReason reason;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct PreprocessReport {
  std::size_t input_trips = 0;
  std::size_t accepted_trips = 0;
  std::size_t removed_outliers = 0;
  std::size_t adjusted_points = 0;
  std::size_t trimmed_head = 0;
  std::size_t trimmed_tail = 0;
  std::vector<Rejection> rejected_trips;

  PreprocessReport& operator+=(const PreprocessReport& o) {
    input_trips += o.input_trips;
    accepted_trips += o.accepted_trips;
    removed_outliers += o.removed_outliers;
    adjusted_points += o.adjusted_points;
    trimmed_head += o.trimmed_head;
    trimmed_tail += o.trimmed_tail;
    rejected_trips.insert(rejected_trips.end(), o.rejected_trips.begin(), o.rejected_trips.end());
    return *this;
  }

  friend bool operator==(const PreprocessReport&, const PreprocessReport&) = default;
};

/// Rejects a trip with any consecutive gap above the time or distance limit.
inline std::optional<RejectReason> filter_complete_trips(const ObservationSeries& series,
                                                         const PreprocessConfig& cfg) {
  const auto t = series.t();
  const auto x = series.x();
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] - t[i - 1] > cfg.max_time_gap) return RejectReason::time_gap;
    if (std::abs(x[i] - x[i - 1]) > cfg.max_dist_gap) return RejectReason::distance_gap;
  }
  return std::nullopt;
}

struct RepairResult {
  ObservationSeries series;
  std::size_t removed_outliers = 0;
  std::size_t adjusted_points = 0;
};

namespace detail {

/// One removal sweep against the last kept point. Returns kept indices.
inline std::vector<std::size_t> jump_survivors(const ObservationSeries& s,
                                               const PreprocessConfig& cfg) {
  const auto t = s.t();
  const auto x = s.x();
  std::vector<std::size_t> keep;
  keep.reserve(t.size());
  double running_max = -INFINITY;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!keep.empty()) {
      const std::size_t k = keep.back();
      const double dx = x[i] - x[k];
      const double speed = std::abs(dx) / (t[i] - t[k]);
      if (std::abs(dx) > cfg.max_jump && speed > cfg.implied_speed_cap) continue;
      if (running_max - x[i] > cfg.max_back_jump) continue;
    }
    keep.push_back(i);
    running_max = std::max(running_max, x[i]);
  }
  return keep;
}

}  // namespace detail

/// Removes implausible jumps (large and fast) and large backward jumps, then
/// raises remaining backward steps to the running maximum. Removal repeats
/// until no point is dropped.
inline RepairResult repair_outliers(const ObservationSeries& series, const PreprocessConfig& cfg) {
  RepairResult out{series};
  while (out.series.size() > 1) {
    const auto keep = detail::jump_survivors(out.series, cfg);
    if (keep.size() == out.series.size()) break;
    out.removed_outliers += out.series.size() - keep.size();
    out.series = out.series.subset(keep);
  }
  const auto x = out.series.x();
  auto y = monotone_correct(x);
  for (std::size_t i = 0; i < y.size(); ++i) out.adjusted_points += y[i] != x[i];
  out.series = out.series.with_positions(std::move(y));
  return out;
}

struct TrimResult {
  ObservationSeries series;
  std::size_t trimmed_head = 0;
  std::size_t trimmed_tail = 0;
};

/// Drops leading and trailing samples within `tolerance` of the end position,
/// keeping the last stationary sample at each end. A fully stationary trip
/// collapses to a single sample.
inline TrimResult trim_endpoints(const ObservationSeries& series, double tolerance = 1.0) {
  const auto x = series.x();
  const std::size_t n = x.size();
  if (n < 2) return {series};
  std::size_t first_move = n;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] - x.front() > tolerance) {
      first_move = i;
      break;
    }
  }
  if (first_move == n) {
    const std::vector<std::size_t> last{n - 1};
    return {series.subset(last), n - 1, 0};
  }
  const std::size_t lo = first_move - 1;
  std::size_t hi = lo;
  for (std::size_t i = n - 1; i-- > lo;) {
    if (x.back() - x[i] > tolerance) {
      hi = i + 1;
      break;
    }
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = lo; i <= hi; ++i) idx.push_back(i);
  return {series.subset(idx), lo, n - 1 - hi};
}

struct PreprocessOutcome {
  std::optional<ObservationSeries> series;  // empty when rejected
  PreprocessReport report;
};

/// Completeness check, jump repair, trimming, then a final completeness and
/// length check so that the pipeline is idempotent.
inline PreprocessOutcome preprocess_trip(const ObservationSeries& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  PreprocessOutcome out;
  out.report.input_trips = 1;
  auto reject = [&](RejectReason r) {
    out.report.rejected_trips.push_back({raw.trip_id(), r});
    return out;
  };
  if (raw.size() < cfg.min_samples) return reject(RejectReason::too_short);
  if (auto r = filter_complete_trips(raw, cfg)) return reject(*r);

  auto repaired = repair_outliers(raw, cfg);
  out.report.removed_outliers = repaired.removed_outliers;
  out.report.adjusted_points = repaired.adjusted_points;
  auto trimmed = trim_endpoints(repaired.series, cfg.stationary_tolerance);
  out.report.trimmed_head = trimmed.trimmed_head;
  out.report.trimmed_tail = trimmed.trimmed_tail;

  if (trimmed.series.size() < cfg.min_samples) return reject(RejectReason::too_short);
  if (auto r = filter_complete_trips(trimmed.series, cfg)) return reject(*r);
  out.report.accepted_trips = 1;
  out.series = std::move(trimmed.series);
  return out;
}

struct PreprocessedCorpus {
  std::vector<ObservationSeries> trips;
  PreprocessReport report;
};

inline PreprocessedCorpus preprocess_trips(const std::vector<ObservationSeries>& raw,
                                           const PreprocessConfig& cfg) {
  PreprocessedCorpus out;
  for (const auto& s : raw) {
    auto r = preprocess_trip(s, cfg);
    out.report += r.report;
    if (r.series) out.trips.push_back(std::move(*r.series));
  }
  return out;
}

/// Keeps the endpoints and a seeded uniform random subset of interior samples,
/// sized so that the mean retained interval is the target.
inline ObservationSeries subsample(const ObservationSeries& series, double target_mean_interval,
                                   std::uint64_t seed) {
  const std::size_t n = series.size();
  if (n < 3) return series;
  const double span = series.t_end() - series.t_begin();
  const double native = span / static_cast<double>(n - 1);
  detail::require(target_mean_interval >= native * (1.0 - 1e-9), ErrorKind::invalid_argument,
                  "subsample: target interval " + std::to_string(target_mean_interval) +
                      " s is below the native interval " + std::to_string(native) + " s");
  const auto m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(span / target_mean_interval)) + 1, 2, n);
  if (m == n) return series;

  std::vector<std::size_t> interior(n - 2);
  for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
  std::vector<std::size_t> idx{0};
  std::mt19937_64 rng(seed);
  std::sample(interior.begin(), interior.end(), std::back_inserter(idx), m - 2, rng);
  idx.push_back(n - 1);
  return series.subset(idx);
}

}  // namespace avltraj
