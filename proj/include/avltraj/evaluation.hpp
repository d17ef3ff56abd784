#pragma once

// Holdout fit metrics, physical-profile checks, intersection-window metrics,
// baseline comparison, aggregation into a report, and timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/methods.hpp"
#include "avltraj/model.hpp"
#include "avltraj/synthetic.hpp"

namespace avltraj {

// ─── Statistics ─────────────────────────────────────────────────────────────

/// Mean and sample standard deviation. `count` 0 means the metric is absent.
struct Stat {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;

  friend bool operator==(const Stat&, const Stat&) = default;
};

inline Stat summarize(std::span<const double> values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

// ─── Holdout ────────────────────────────────────────────────────────────────

struct HoldoutSplit {
  std::vector<std::size_t> fit_indices;
  std::vector<std::size_t> held_indices;
};

/// Holds out round(fraction * n) interior samples; endpoints always stay in
/// the fit set.
inline HoldoutSplit make_holdout(std::size_t n, double fraction, std::uint64_t seed) {
  detail::require(fraction >= 0.0 && fraction < 1.0, ErrorKind::invalid_argument,
                  "holdout fraction must lie in [0, 1)");
  HoldoutSplit split;
  if (n < 3) {
    for (std::size_t i = 0; i < n; ++i) split.fit_indices.push_back(i);
    return split;
  }
  const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  // Keep at least the endpoints and one interior sample for fitting.
  const std::size_t held = std::min(want, n - 3);
  std::vector<std::size_t> interior(n - 2);
  for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
  std::mt19937_64 rng(seed);
  std::sample(interior.begin(), interior.end(), std::back_inserter(split.held_indices), held, rng);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (h < split.held_indices.size() && split.held_indices[h] == i) {
      ++h;
    } else {
      split.fit_indices.push_back(i);
    }
  }
  return split;
}

struct HoldoutMetrics {
  double rmse_pos = 0.0;
  double mae_pos = 0.0;
  std::optional<double> rmse_vel;
  std::optional<double> mae_vel;
};

/// RMSE and MAE of the model at the held samples; velocity errors only when
/// the held samples carry velocity.
inline HoldoutMetrics holdout_metrics(const TrajectoryModel& model, const ObservationSeries& held) {
  detail::require(!held.empty(), ErrorKind::invalid_argument, "holdout_metrics: empty held set");
  double se = 0.0, ae = 0.0, sev = 0.0, aev = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const auto k = model.at(offset_from_breaks(model, held.t()[i]));
    const double e = model.position(held.t()[i]) - held.x()[i];
    se += e * e;
    ae += std::abs(e);
    if (held.has_velocity()) {
      const double ev = k.v - held.v()[i];
      sev += ev * ev;
      aev += std::abs(ev);
    }
  }
  const auto n = static_cast<double>(held.size());
  HoldoutMetrics m{std::sqrt(se / n), ae / n, std::nullopt, std::nullopt};
  if (held.has_velocity()) {
    m.rmse_vel = std::sqrt(sev / n);
    m.mae_vel = aev / n;
  }
  return m;
}

// ─── Profile checks ─────────────────────────────────────────────────────────

inline constexpr double kMonotonicityTolerance = 1e-6;

struct MonotonicityMetrics {
  double violation_rate = 0.0;  // fraction of adjacent grid pairs that decrease
  bool is_monotone = true;
};

inline MonotonicityMetrics monotonicity_metrics(const TrajectoryModel& model, double grid_dt = 1.0,
                                                double tolerance = kMonotonicityTolerance) {
  const auto grid = time_grid(model.t_begin(), model.t_end(), grid_dt);
  if (grid.size() < 2) return {};
  std::size_t drops = 0;
  double prev = model.position(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double x = model.position(grid[i]);
    drops += x < prev - tolerance;
    prev = x;
  }
  const double rate = static_cast<double>(drops) / static_cast<double>(grid.size() - 1);
  return {rate, drops == 0};
}

struct AccelBounds {
  double lo;
  double hi;

  void validate() const {
    detail::require(lo < 0.0 && hi > 0.0, ErrorKind::invalid_argument,
                    "acceleration bounds must satisfy lo < 0 < hi");
  }
  friend bool operator==(const AccelBounds&, const AccelBounds&) = default;
};

inline constexpr AccelBounds kTightAccelBounds{-5.79, 4.26};
inline constexpr AccelBounds kLooseAccelBounds{-7.77, 5.43};

/// Percentage of grid samples whose acceleration lies within the bounds.
inline double accel_adherence(const TrajectoryModel& model, const AccelBounds& bounds,
                              double grid_dt = 1.0) {
  bounds.validate();
  const auto grid = time_grid(model.t_begin(), model.t_end(), grid_dt);
  std::size_t inside = 0;
  for (double t : grid) {
    const double a = model.acceleration(offset_from_breaks(model, t));
    inside += a >= bounds.lo && a <= bounds.hi;
  }
  return 100.0 * static_cast<double>(inside) / static_cast<double>(grid.size());
}

/// Among samples flagged stopped, the percentage where the model's velocity
/// is at most `threshold`. Absent when no sample is flagged.
inline std::optional<double> stop_consistency(const TrajectoryModel& model,
                                              const ObservationSeries& series, double threshold) {
  std::size_t flagged = 0, consistent = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.stopped()[i]) continue;
    ++flagged;
    consistent += model.at(offset_from_breaks(model, series.t()[i])).v <= threshold;
  }
  if (flagged == 0) return std::nullopt;
  return 100.0 * static_cast<double>(consistent) / static_cast<double>(flagged);
}

// ─── Intersection windows ───────────────────────────────────────────────────

struct IntersectionSpec {
  std::vector<double> signal_positions;
  double window = 300.0;  // ft upstream

  void validate() const {
    detail::require(window > 0.0, ErrorKind::invalid_argument, "intersection window must be positive");
  }
  friend bool operator==(const IntersectionSpec&, const IntersectionSpec&) = default;
};

struct IntersectionResult {
  std::size_t signal_index = 0;
  double entry_time = 0.0;
  double travel_time = 0.0;
  double mean_speed = 0.0;
  double speed_volatility = 0.0;
  double deceleration = 0.0;
  bool non_monotone = false;
};

inline constexpr double kBrakingThreshold = -0.1;  // ft/s^2

namespace detail {

/// First time the model reaches `target`, by grid scan then bisection.
inline std::optional<double> first_crossing(const TrajectoryModel& model, double target,
                                            double grid_dt) {
  double t_prev = model.t_begin();
  if (model.position(t_prev) >= target) return t_prev;
  for (double t : time_grid(model.t_begin(), model.t_end(), grid_dt)) {
    if (model.position(t) >= target) {
      double lo = t_prev, hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (model.position(mid) >= target ? hi : lo) = mid;
      }
      return hi;
    }
    t_prev = t;
  }
  return std::nullopt;
}

}  // namespace detail

/// Metrics for every window [p - window, p] the model's path fully crosses.
/// Speed and acceleration are read on a grid from entry to exit, both ends
/// included.
inline std::vector<IntersectionResult> intersection_metrics(const TrajectoryModel& model,
                                                            const IntersectionSpec& spec,
                                                            double grid_dt = 1.0) {
  spec.validate();
  std::vector<IntersectionResult> out;
  for (std::size_t j = 0; j < spec.signal_positions.size(); ++j) {
    const double p = spec.signal_positions[j];
    const auto entry = detail::first_crossing(model, p - spec.window, grid_dt);
    if (!entry) continue;
    const auto exit = detail::first_crossing(model, p, grid_dt);
    if (!exit || *exit <= *entry) continue;
    IntersectionResult r;
    r.signal_index = j;
    r.entry_time = *entry;
    r.travel_time = *exit - *entry;
    r.mean_speed = spec.window / r.travel_time;

    std::vector<double> speeds;
    double decel_sum = 0.0;
    std::size_t decel_n = 0;
    double prev_x = model.position(*entry);
    for (double t : time_grid(*entry, *exit, grid_dt)) {
      const auto k = model.at(offset_from_breaks(model, t));
      speeds.push_back(k.v);
      if (k.a < kBrakingThreshold) {
        decel_sum += std::abs(k.a);
        ++decel_n;
      }
      const double x = model.position(t);
      if (x < prev_x - kMonotonicityTolerance) r.non_monotone = true;
      prev_x = x;
    }
    double mean = 0.0;
    for (double v : speeds) mean += v;
    mean /= static_cast<double>(speeds.size());
    double ss = 0.0;
    for (double v : speeds) ss += (v - mean) * (v - mean);
    r.speed_volatility = std::sqrt(ss / static_cast<double>(speeds.size()));
    r.deceleration = decel_n ? decel_sum / static_cast<double>(decel_n) : 0.0;
    out.push_back(r);
  }
  return out;
}

/// Per-intersection values keyed for comparison against a baseline.
struct IntersectionRecord {
  std::string trip_id;
  std::size_t signal_index;
  std::array<double, 4> values;  // travel_time, mean_speed, speed_volatility, deceleration
};

inline constexpr std::array<std::string_view, 4> kIntersectionMetricNames = {
    "travel_time", "mean_speed", "speed_volatility", "deceleration"};

struct Mape {
  double value = 0.0;         // percent
  std::size_t count = 0;      // matched intersections used
  std::size_t excluded = 0;   // matched intersections with a zero baseline value

  friend bool operator==(const Mape&, const Mape&) = default;
};

/// MAPE per metric of `records` against `baseline`, matched by trip and
/// signal. Intersections where the baseline value is 0 are excluded and
/// counted.
inline std::array<Mape, 4> compare_to_baseline(const std::vector<IntersectionRecord>& records,
                                               const std::vector<IntersectionRecord>& baseline) {
  std::map<std::pair<std::string, std::size_t>, const IntersectionRecord*> base;
  for (const auto& b : baseline) base[{b.trip_id, b.signal_index}] = &b;
  std::array<Mape, 4> out{};
  std::array<double, 4> sum{};
  for (const auto& r : records) {
    const auto it = base.find({r.trip_id, r.signal_index});
    if (it == base.end()) continue;
    for (std::size_t m = 0; m < 4; ++m) {
      const double b = it->second->values[m];
      if (b == 0.0) {
        ++out[m].excluded;
        continue;
      }
      sum[m] += std::abs(r.values[m] - b) / std::abs(b);
      ++out[m].count;
    }
  }
  for (std::size_t m = 0; m < 4; ++m) {
    out[m].value = out[m].count ? 100.0 * sum[m] / static_cast<double>(out[m].count) : 0.0;
  }
  return out;
}

// ─── Report ─────────────────────────────────────────────────────────────────

struct EvaluationConfig {
  double holdout_fraction = 0.05;
  std::uint64_t holdout_seed = 1;
  double grid_dt = 1.0;
  double monotonicity_tolerance = kMonotonicityTolerance;
  AccelBounds tight = kTightAccelBounds;
  AccelBounds loose = kLooseAccelBounds;
  std::vector<double> stop_thresholds{2.0, 5.0, 10.0};
  IntersectionSpec intersections;
  std::string baseline_method = "VCHIP-ME";
  std::string baseline_dataset = "dense";

  friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

/// One method on one dataset.
struct ReportRow {
  std::string method;
  std::string dataset;
  std::size_t trips = 0;
  std::size_t fit_failures = 0;
  // fit metrics
  Stat rmse_pos, rmse_vel, mae_pos, mae_vel;
  Stat violation_rate;
  double mon_success = 0.0;
  Stat truth_rmse_pos, truth_rmse_vel;
  // profile metrics
  Stat accel_tight, accel_loose;
  std::vector<Stat> stop_consistency;  // one per threshold
  // intersection metrics
  std::array<Stat, 4> intersection{};
  std::array<Mape, 4> mape{};
  std::size_t non_monotone_windows = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvaluationReport {
  EvaluationConfig config;
  std::vector<ReportRow> rows;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Wall-clock timing of one method on one dataset (kept out of the report so
/// that reports are reproducible byte for byte).
struct TimingRow {
  std::string method;
  std::string dataset;
  Stat fit_ms;
};

struct DatasetInput {
  std::string name;
  const std::vector<ObservationSeries>* trips = nullptr;
  const std::map<std::string, GroundTruth>* truth = nullptr;  // optional
};

struct MethodEvaluation {
  ReportRow row;
  std::vector<IntersectionRecord> intersections;
  TimingRow timing;
};

/// Evaluates one method on one dataset. Holdout errors come from a model fitted
/// without the held samples; all other metrics from a fit on the full trip.
inline MethodEvaluation evaluate_method(Method method, const DatasetInput& data,
                                        const MethodParams& params, const EvaluationConfig& cfg) {
  using clock = std::chrono::steady_clock;
  MethodEvaluation out;
  ReportRow& row = out.row;
  row.method = std::string(to_string(method));
  row.dataset = data.name;
  out.timing = {row.method, row.dataset, {}};

  std::vector<double> rmse_pos, rmse_vel, mae_pos, mae_vel, viol, truth_pos, truth_vel, tight, loose;
  std::vector<std::vector<double>> stops(cfg.stop_thresholds.size());
  std::array<std::vector<double>, 4> inter;
  std::vector<double> fit_ms;
  std::size_t monotone_trips = 0;

  for (const auto& trip : *data.trips) {
    ++row.trips;
    try {
      const auto split = make_holdout(trip.size(), cfg.holdout_fraction,
                                      trip_seed(cfg.holdout_seed, trip.trip_id()));
      if (!split.held_indices.empty()) {
        const auto held_model = fit(method, trip.subset(split.fit_indices), params);
        const auto hm = holdout_metrics(held_model, trip.subset(split.held_indices));
        rmse_pos.push_back(hm.rmse_pos);
        mae_pos.push_back(hm.mae_pos);
        if (hm.rmse_vel) {
          rmse_vel.push_back(*hm.rmse_vel);
          mae_vel.push_back(*hm.mae_vel);
        }
      }

      const auto t0 = clock::now();
      const auto model = fit(method, trip, params);
      const auto t1 = clock::now();
      fit_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

      const auto mono = monotonicity_metrics(model, cfg.grid_dt, cfg.monotonicity_tolerance);
      viol.push_back(mono.violation_rate);
      monotone_trips += mono.is_monotone;
      tight.push_back(accel_adherence(model, cfg.tight, cfg.grid_dt));
      loose.push_back(accel_adherence(model, cfg.loose, cfg.grid_dt));
      for (std::size_t k = 0; k < cfg.stop_thresholds.size(); ++k) {
        if (auto s = stop_consistency(model, trip, cfg.stop_thresholds[k])) stops[k].push_back(*s);
      }
      if (data.truth) {
        const auto it = data.truth->find(trip.trip_id());
        if (it != data.truth->end()) {
          const auto te = truth_errors(model, it->second, cfg.grid_dt);
          truth_pos.push_back(te.rmse_pos);
          truth_vel.push_back(te.rmse_vel);
        }
      }
      for (const auto& r : intersection_metrics(model, cfg.intersections, cfg.grid_dt)) {
        const std::array<double, 4> v{r.travel_time, r.mean_speed, r.speed_volatility, r.deceleration};
        for (std::size_t m = 0; m < 4; ++m) inter[m].push_back(v[m]);
        row.non_monotone_windows += r.non_monotone;
        out.intersections.push_back({trip.trip_id(), r.signal_index, v});
      }
    } catch (const Error&) {
      ++row.fit_failures;
    }
  }

  row.rmse_pos = summarize(rmse_pos);
  row.rmse_vel = summarize(rmse_vel);
  row.mae_pos = summarize(mae_pos);
  row.mae_vel = summarize(mae_vel);
  row.violation_rate = summarize(viol);
  row.mon_success = row.trips ? static_cast<double>(monotone_trips) / static_cast<double>(row.trips) : 0.0;
  row.truth_rmse_pos = summarize(truth_pos);
  row.truth_rmse_vel = summarize(truth_vel);
  row.accel_tight = summarize(tight);
  row.accel_loose = summarize(loose);
  for (const auto& s : stops) row.stop_consistency.push_back(summarize(s));
  for (std::size_t m = 0; m < 4; ++m) row.intersection[m] = summarize(inter[m]);
  out.timing.fit_ms = summarize(fit_ms);
  return out;
}

struct EvaluationRun {
  EvaluationReport report;
  std::vector<TimingRow> timing;
};

/// Runs every method on every dataset and fills MAPE against the baseline
/// (method, dataset). Rows are ordered by dataset as given, then method.
inline EvaluationRun evaluate(const std::vector<Method>& methods,
                              const std::vector<DatasetInput>& datasets, const MethodParams& params,
                              const EvaluationConfig& cfg) {
  const auto baseline_method = parse_method(cfg.baseline_method);
  detail::require(baseline_method.has_value(), ErrorKind::unknown_method,
                  "unknown method '" + cfg.baseline_method + "'");
  EvaluationRun run;
  run.report.config = cfg;
  std::vector<std::vector<IntersectionRecord>> records;
  for (const auto& d : datasets) {
    for (Method m : methods) {
      auto e = evaluate_method(m, d, params, cfg);
      run.report.rows.push_back(std::move(e.row));
      records.push_back(std::move(e.intersections));
      run.timing.push_back(std::move(e.timing));
    }
  }

  // Baseline records: reuse a row already computed, else evaluate it.
  std::vector<IntersectionRecord> baseline;
  bool found = false;
  for (std::size_t i = 0; i < run.report.rows.size(); ++i) {
    if (run.report.rows[i].method == to_string(*baseline_method) &&
        run.report.rows[i].dataset == cfg.baseline_dataset) {
      baseline = records[i];
      found = true;
    }
  }
  if (!found) {
    const auto d = std::find_if(datasets.begin(), datasets.end(),
                                [&](const DatasetInput& x) { return x.name == cfg.baseline_dataset; });
    detail::require(d != datasets.end(), ErrorKind::invalid_argument,
                    "baseline dataset '" + cfg.baseline_dataset + "' not among the inputs");
    baseline = evaluate_method(*baseline_method, *d, params, cfg).intersections;
  }
  for (std::size_t i = 0; i < run.report.rows.size(); ++i) {
    run.report.rows[i].mape = compare_to_baseline(records[i], baseline);
  }
  return run;
}

// ─── Timing benchmark ───────────────────────────────────────────────────────

struct BenchPoint {
  std::size_t n;
  Stat ms;  // per trajectory: fit plus one grid evaluation
};

/// Times fit + one `grid_dt` evaluation per trajectory over a batch after a
/// warm-up fit.
inline Stat benchmark_timing(Method method, const std::vector<ObservationSeries>& batch,
                             const MethodParams& params, double grid_dt = 1.0) {
  using clock = std::chrono::steady_clock;
  std::vector<double> ms;
  volatile double sink = 0.0;
  if (!batch.empty()) sink = sink + fit(method, batch.front(), params).position(batch.front().t_begin());
  for (const auto& s : batch) {
    const auto t0 = clock::now();
    const auto model = fit(method, s, params);
    double acc = 0.0;
    for (double t : time_grid(model.t_begin(), model.t_end(), grid_dt)) acc += model.at(t).x;
    const auto t1 = clock::now();
    sink = sink + acc;
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize(ms);
}

/// Least-squares slope of log(time) on log(n).
inline double scaling_exponent(const std::vector<BenchPoint>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : points) {
    if (p.ms.mean <= 0.0) continue;
    const double lx = std::log(static_cast<double>(p.n));
    const double ly = std::log(p.ms.mean);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0.0;
  const double dm = static_cast<double>(m);
  return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

/// Trips of exactly `n` samples drawn from a corridor repeated until long
/// enough at the spec's sampling interval.
inline std::vector<ObservationSeries> bench_trips(const CorridorSpec& base, std::size_t n,
                                                  std::size_t count, std::uint64_t seed) {
  // Expected duration of one corridor pass, measured on a sample trip.
  const double pass = generate_truth(base, seed).t_end();
  const double need = static_cast<double>(n) * base.mean_sample_interval * 1.3;
  const auto reps = static_cast<std::size_t>(std::ceil(need / pass)) + 1;
  CorridorSpec spec = base;
  spec.route_length = base.route_length * static_cast<double>(reps);
  spec.signal_positions.clear();
  spec.stop_positions.clear();
  for (std::size_t r = 0; r < reps; ++r) {
    const double off = base.route_length * static_cast<double>(r);
    for (double x : base.signal_positions) spec.signal_positions.push_back(off + x);
    for (double x : base.stop_positions) spec.stop_positions.push_back(off + x);
  }
  std::vector<ObservationSeries> out;
  PreprocessConfig pre;
  for (std::size_t k = 0; out.size() < count && k < 20 * count; ++k) {
    const std::string id = "bench-" + std::to_string(n) + "-" + std::to_string(k);
    const auto s0 = trip_seed(seed, id);
    const auto truth = generate_truth(spec, s0, id);
    auto cleaned = preprocess_trip(sample_avl(truth, spec, s0 + 1), pre);
    if (!cleaned.series || cleaned.series->size() < n) continue;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    out.push_back(cleaned.series->subset(idx));
  }
  return out;
}

}  // namespace avltraj
