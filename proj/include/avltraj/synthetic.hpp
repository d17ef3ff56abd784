#pragma once

// Bus corridor simulator: exact constant-acceleration ground truth with stops
// and signals, and AVL-like noisy irregular sampling of it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/model.hpp"
#include "avltraj/preprocess.hpp"

namespace avltraj {

struct CorridorSpec {
  double route_length = 15840.0;  // 3 mi
  std::vector<double> signal_positions;
  std::vector<double> stop_positions;
  double cruise_speed = 40.0;  // ft/s
  double accel_max = 3.5;      // ft/s^2
  double decel_max = 4.5;      // ft/s^2
  double dwell_min = 10.0;     // s
  double dwell_max = 40.0;
  double red_wait_min = 5.0;  // s
  double red_wait_max = 45.0;
  double signal_stop_probability = 0.5;
  double noise_sigma_pos = 10.0;  // ft
  double noise_sigma_vel = 1.0;   // ft/s
  double mean_sample_interval = 16.49;
  double min_sample_interval = 1.0;
  double flag_error_rate = 0.2;
  std::uint64_t seed = 1;

  /// 3 mi corridor with 20 evenly spread signals and 10 stops.
  static CorridorSpec default_corridor() {
    CorridorSpec s;
    for (int j = 0; j < 20; ++j) s.signal_positions.push_back((j + 0.5) * s.route_length / 20.0);
    for (int k = 0; k < 10; ++k) s.stop_positions.push_back((k + 0.6) * s.route_length / 10.0);
    return s;
  }

  void validate() const {
    auto req = [](bool c, const char* msg) { detail::require(c, ErrorKind::invalid_argument, msg); };
    req(route_length > 0, "corridor: route_length must be positive");
    req(cruise_speed > 0 && accel_max > 0 && decel_max > 0, "corridor: kinematic limits must be positive");
    req(dwell_min >= 0 && dwell_max >= dwell_min, "corridor: invalid dwell range");
    req(red_wait_min >= 0 && red_wait_max >= red_wait_min, "corridor: invalid red wait range");
    req(signal_stop_probability >= 0 && signal_stop_probability <= 1,
        "corridor: signal_stop_probability must lie in [0, 1]");
    req(flag_error_rate >= 0 && flag_error_rate < 1, "corridor: flag_error_rate must lie in [0, 1)");
    req(noise_sigma_pos >= 0 && noise_sigma_vel >= 0, "corridor: noise must be nonnegative");
    req(min_sample_interval >= 0 && mean_sample_interval > min_sample_interval,
        "corridor: mean sample interval must exceed the minimum");
    for (const auto* p : {&signal_positions, &stop_positions}) {
      req(std::is_sorted(p->begin(), p->end()), "corridor: positions must be sorted");
      for (double x : *p) req(x > 0 && x < route_length, "corridor: positions must lie inside the route");
    }
  }
};

/// Constant-acceleration piece starting at (t0, x0, v0).
struct KinematicPiece {
  double t0, x0, v0, a, duration;

  [[nodiscard]] Kinematics at(double t) const {
    const double s = std::clamp(t - t0, 0.0, duration);
    return {x0 + v0 * s + 0.5 * a * s * s, v0 + a * s, a};
  }
  friend bool operator==(const KinematicPiece&, const KinematicPiece&) = default;
};

struct Interval {
  double begin, end;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct GroundTruth {
  std::string trip_id;
  std::vector<KinematicPiece> pieces;
  std::vector<Interval> stops;         // dwell at bus stops
  std::vector<Interval> signal_stops;  // waiting at red signals

  [[nodiscard]] double t_begin() const { return pieces.front().t0; }
  [[nodiscard]] double t_end() const { return pieces.back().t0 + pieces.back().duration; }

  [[nodiscard]] Kinematics at(double t) const {
    auto it = std::upper_bound(pieces.begin(), pieces.end(), t,
                               [](double tq, const KinematicPiece& p) { return tq < p.t0; });
    if (it != pieces.begin()) --it;
    return it->at(t);
  }
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Trapezoidal (or triangular, when too short to reach cruise) speed profile
/// between consecutive stopping points.
inline GroundTruth generate_truth(const CorridorSpec& spec, std::uint64_t trip_seed_value,
                                  std::string trip_id = "trip") {
  spec.validate();
  std::mt19937_64 rng(trip_seed_value);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  struct Halt {
    double x;
    double wait;
    bool signal;
  };
  std::vector<Halt> halts;
  for (double x : spec.stop_positions) {
    halts.push_back({x, spec.dwell_min + (spec.dwell_max - spec.dwell_min) * unif(rng), false});
  }
  for (double x : spec.signal_positions) {
    const bool red = unif(rng) < spec.signal_stop_probability;
    const double wait = spec.red_wait_min + (spec.red_wait_max - spec.red_wait_min) * unif(rng);
    if (red) halts.push_back({x, wait, true});
  }
  std::stable_sort(halts.begin(), halts.end(), [](const Halt& a, const Halt& b) { return a.x < b.x; });
  // Coinciding halts merge into one wait.
  std::vector<Halt> merged;
  for (const auto& h : halts) {
    if (!merged.empty() && h.x - merged.back().x < 1e-9) {
      merged.back().wait = std::max(merged.back().wait, h.wait);
      merged.back().signal = merged.back().signal && h.signal;
    } else {
      merged.push_back(h);
    }
  }
  merged.push_back({spec.route_length, 0.0, false});

  GroundTruth truth;
  truth.trip_id = std::move(trip_id);
  double t = 0.0, x = 0.0;
  auto push = [&](double v0, double a, double dur) {
    if (dur <= 0.0) return;
    truth.pieces.push_back({t, x, v0, a, dur});
    x += v0 * dur + 0.5 * a * dur * dur;
    t += dur;
  };
  const double acc = spec.accel_max, dec = spec.decel_max;
  for (const auto& h : merged) {
    const double d = h.x - x;
    if (d > 1e-9) {
      const double vp = std::min(spec.cruise_speed, std::sqrt(2.0 * d * acc * dec / (acc + dec)));
      const double d_acc = vp * vp / (2.0 * acc);
      const double d_dec = vp * vp / (2.0 * dec);
      const double x_goal = h.x;
      push(0.0, acc, vp / acc);
      push(vp, 0.0, std::max(0.0, d - d_acc - d_dec) / vp);
      push(vp, -dec, vp / dec);
      x = x_goal;  // absorb rounding so halts sit exactly on their positions
      truth.pieces.back().x0 = x_goal - (vp * vp / (2.0 * dec));
    }
    if (h.wait > 0.0) {
      const double t0 = t;
      push(0.0, 0.0, h.wait);
      (h.signal ? truth.signal_stops : truth.stops).push_back({t0, t});
    }
  }
  return truth;
}

/// Noisy irregular AVL samples of a ground truth. Intervals are the minimum
/// plus an exponential with the remaining mean; the trip end is always
/// sampled. Position noise is a normal truncated at 3 sigma and clipped to the
/// route. Truly stationary samples are flagged stopped; a share of moving
/// samples (recorded speed above 5 ft/s) is flagged too, so that roughly
/// `flag_error_rate` of all flagged samples are inconsistent.
inline ObservationSeries sample_avl(const GroundTruth& truth, const CorridorSpec& spec,
                                    std::uint64_t sample_seed) {
  spec.validate();
  std::mt19937_64 rng(sample_seed);
  std::exponential_distribution<double> gap(1.0 / (spec.mean_sample_interval - spec.min_sample_interval));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double t_end = truth.t_end();
  std::vector<double> times{truth.t_begin()};
  while (true) {
    const double next = times.back() + spec.min_sample_interval + gap(rng);
    if (next >= t_end) break;
    times.push_back(next);
  }
  if (times.size() > 1 && t_end - times.back() < spec.min_sample_interval) times.back() = t_end;
  else times.push_back(t_end);

  const double route_end = truth.pieces.empty() ? 0.0 : truth.at(t_end).x;
  std::vector<double> xs, vs;
  std::vector<std::uint8_t> stopped;
  std::size_t truly_stopped = 0;
  std::vector<std::size_t> moving;
  for (double t : times) {
    const auto k = truth.at(t);
    double e = 0.0;
    if (spec.noise_sigma_pos > 0) {
      do e = unit(rng); while (std::abs(e) > 3.0);
    }
    xs.push_back(std::clamp(k.x + spec.noise_sigma_pos * e, 0.0, route_end));
    vs.push_back(k.v + spec.noise_sigma_vel * unit(rng));
    const bool still = std::abs(k.v) < 1e-9;
    stopped.push_back(still ? 1 : 0);
    if (still) ++truly_stopped;
    else if (vs.back() > 5.0) moving.push_back(xs.size() - 1);
  }
  if (spec.flag_error_rate > 0 && !moving.empty()) {
    const double r = spec.flag_error_rate;
    const double q = std::min(1.0, r * static_cast<double>(truly_stopped) /
                                       ((1.0 - r) * static_cast<double>(moving.size())));
    for (std::size_t i : moving) {
      if (unif(rng) < q) stopped[i] = 1;
    }
  }
  return {truth.trip_id, std::move(times), std::move(xs), std::move(vs), std::move(stopped)};
}

/// RMSE of a model against the truth on a grid over their common domain.
struct TruthErrors {
  double rmse_pos;
  double rmse_vel;
};

inline TruthErrors truth_errors(const TrajectoryModel& model, const GroundTruth& truth,
                                double grid_dt = 1.0) {
  const double lo = std::max(model.t_begin(), truth.t_begin());
  const double hi = std::min(model.t_end(), truth.t_end());
  detail::require(hi > lo, ErrorKind::invalid_argument,
                  "truth_errors: model and truth domains do not overlap");
  const auto grid = time_grid(lo, hi, grid_dt);
  double sp = 0.0, sv = 0.0;
  for (double t : grid) {
    const auto m = model.at(offset_from_breaks(model, t));
    const auto g = truth.at(t);
    sp += (m.x - g.x) * (m.x - g.x);
    sv += (m.v - g.v) * (m.v - g.v);
  }
  const auto n = static_cast<double>(grid.size());
  return {std::sqrt(sp / n), std::sqrt(sv / n)};
}

struct SynthConfig {
  CorridorSpec corridor = CorridorSpec::default_corridor();
  std::size_t trips = 200;
  double dense_interval = 5.96;
  double sparse_interval = 16.49;
};

struct SyntheticCorpus {
  std::vector<GroundTruth> truth;
  std::vector<ObservationSeries> dense;
  std::vector<ObservationSeries> sparse;  // subsample of the dense feed
};

inline std::string synthetic_trip_id(std::size_t k) {
  std::string digits = std::to_string(k + 1);
  return "trip-" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

inline SyntheticCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.corridor.validate();
  detail::require(cfg.sparse_interval >= cfg.dense_interval, ErrorKind::invalid_argument,
                  "synthetic: sparse interval must not be below the dense interval");
  SyntheticCorpus out;
  CorridorSpec dense_spec = cfg.corridor;
  dense_spec.mean_sample_interval = cfg.dense_interval;
  for (std::size_t k = 0; k < cfg.trips; ++k) {
    const std::string id = synthetic_trip_id(k);
    const std::uint64_t base = trip_seed(cfg.corridor.seed, id);
    out.truth.push_back(generate_truth(cfg.corridor, base, id));
    out.dense.push_back(sample_avl(out.truth.back(), dense_spec, base ^ 0x5a5a5a5a5a5a5a5aULL));
    out.sparse.push_back(subsample(out.dense.back(), cfg.sparse_interval, base ^ 0xa5a5a5a5a5a5a5a5ULL));
  }
  return out;
}

}  // namespace avltraj
