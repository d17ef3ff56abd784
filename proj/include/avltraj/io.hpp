#pragma once

// File formats: trip CSV, truth sidecar JSON, run configuration, evaluation
// reports, model dumps.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "avltraj/core.hpp"
#include "avltraj/evaluation.hpp"
#include "avltraj/methods.hpp"
#include "avltraj/preprocess.hpp"
#include "avltraj/synthetic.hpp"

namespace avltraj {

using json = nlohmann::json;

// ─── Numbers ────────────────────────────────────────────────────────────────

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = line.find(',', pos);
    out.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io_error, "cannot open '" + path + "' for writing");
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io_error, "cannot open '" + path + "'");
  return f;
}

}  // namespace detail

// ─── Trip CSV ───────────────────────────────────────────────────────────────

inline constexpr std::string_view kTripCsvHeader = "trip_id,t,x,v,stopped";

/// Reads `trip_id,t,x,v,stopped` rows grouped by trip. Errors name the line.
inline std::vector<ObservationSeries> read_trips(std::istream& in, const std::string& source = "input") {
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::parse_error, source + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    fail("missing header");
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTripCsvHeader) fail("header must be '" + std::string(kTripCsvHeader) + "'");

  struct Building {
    std::string id;
    std::vector<double> t, x, v;
    std::vector<std::uint8_t> stopped;
    std::size_t with_v = 0;
  };
  std::vector<ObservationSeries> out;
  std::map<std::string, bool> seen;
  std::optional<Building> cur;
  auto flush = [&] {
    if (!cur) return;
    if (cur->with_v != 0 && cur->with_v != cur->t.size()) {
      fail("trip '" + cur->id + "' mixes rows with and without velocity");
    }
    if (cur->with_v == 0) cur->v.clear();
    out.emplace_back(cur->id, std::move(cur->t), std::move(cur->x), std::move(cur->v),
                     std::move(cur->stopped));
    cur.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 5) fail("expected 5 fields, got " + std::to_string(f.size()));
    const std::string id(f[0]);
    if (id.empty()) fail("empty trip_id");
    const auto t = detail::parse_double(f[1]);
    const auto x = detail::parse_double(f[2]);
    if (!t || !std::isfinite(*t)) fail("invalid t '" + std::string(f[1]) + "'");
    if (!x || !std::isfinite(*x)) fail("invalid x '" + std::string(f[2]) + "'");
    std::optional<double> v;
    if (!f[3].empty()) {
      v = detail::parse_double(f[3]);
      if (!v || !std::isfinite(*v)) fail("invalid v '" + std::string(f[3]) + "'");
    }
    if (f[4] != "0" && f[4] != "1") fail("stopped must be 0 or 1");

    if (!cur || cur->id != id) {
      flush();
      if (seen.count(id)) fail("rows of trip '" + id + "' are not contiguous");
      seen[id] = true;
      cur = Building{id, {}, {}, {}, {}, 0};
    }
    if (!cur->t.empty() && *t <= cur->t.back()) {
      fail("time does not increase within trip '" + id + "'");
    }
    cur->t.push_back(*t);
    cur->x.push_back(*x);
    cur->v.push_back(v.value_or(0.0));
    cur->with_v += v.has_value();
    cur->stopped.push_back(f[4] == "1");
  }
  flush();
  return out;
}

inline std::vector<ObservationSeries> read_trips(const std::string& path) {
  auto f = detail::open_in(path);
  return read_trips(f, path);
}

inline void write_trips(std::ostream& out, const std::vector<ObservationSeries>& trips) {
  out << kTripCsvHeader << '\n';
  for (const auto& s : trips) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.trip_id() << ',' << format_double(s.t()[i]) << ',' << format_double(s.x()[i]) << ',';
      if (s.has_velocity()) out << format_double(s.v()[i]);
      out << ',' << (s.stopped()[i] ? '1' : '0') << '\n';
    }
  }
}

inline void write_trips(const std::string& path, const std::vector<ObservationSeries>& trips) {
  auto f = detail::open_out(path);
  write_trips(f, trips);
  detail::require(static_cast<bool>(f), ErrorKind::io_error, "failed writing '" + path + "'");
}

// ─── Truth sidecar ──────────────────────────────────────────────────────────

inline json truth_to_json(const std::vector<GroundTruth>& truth) {
  json trips = json::array();
  for (const auto& g : truth) {
    json pieces = json::array();
    for (const auto& p : g.pieces) pieces.push_back({p.t0, p.x0, p.v0, p.a, p.duration});
    auto intervals = [](const std::vector<Interval>& v) {
      json a = json::array();
      for (const auto& i : v) a.push_back({i.begin, i.end});
      return a;
    };
    trips.push_back({{"trip_id", g.trip_id},
                     {"pieces", pieces},
                     {"stops", intervals(g.stops)},
                     {"signal_stops", intervals(g.signal_stops)}});
  }
  return {{"trips", trips}};
}

inline std::vector<GroundTruth> truth_from_json(const json& j) {
  std::vector<GroundTruth> out;
  try {
    for (const auto& tj : j.at("trips")) {
      GroundTruth g;
      g.trip_id = tj.at("trip_id").get<std::string>();
      for (const auto& p : tj.at("pieces")) {
        g.pieces.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                            p.at(3).get<double>(), p.at(4).get<double>()});
      }
      for (const auto& i : tj.at("stops")) g.stops.push_back({i.at(0).get<double>(), i.at(1).get<double>()});
      for (const auto& i : tj.at("signal_stops")) {
        g.signal_stops.push_back({i.at(0).get<double>(), i.at(1).get<double>()});
      }
      detail::require(!g.pieces.empty(), ErrorKind::parse_error, "truth trip without pieces");
      out.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("truth file: ") + e.what());
  }
  return out;
}

inline json read_json(const std::string& path) {
  auto f = detail::open_in(path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << '\n';
  detail::require(static_cast<bool>(f), ErrorKind::io_error, "failed writing '" + path + "'");
}

// ─── Run configuration ──────────────────────────────────────────────────────

struct BenchConfig {
  std::vector<std::size_t> sizes{100, 200, 400, 800, 1600, 3200};
  std::size_t trips_per_size = 5;
  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  MethodParams params;
  PreprocessConfig preprocess;
  EvaluationConfig evaluation;
  SynthConfig synthetic;
  BenchConfig bench;
};

namespace detail {

/// Reads known keys from an object and rejects unknown ones so that typos in
/// a config file surface as errors.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j.is_object(), ErrorKind::parse_error, where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse_error, where_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    used_.push_back(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  [[nodiscard]] const json* child(const char* key) {
    used_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end()) {
        throw Error(ErrorKind::parse_error, where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> used_;
};

inline AccelBounds bounds_from(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
          ErrorKind::parse_error, where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline json config_to_json(const RunConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  const auto& p = c.params;
  const auto& e = c.evaluation;
  const auto& s = c.synthetic;
  const auto& k = s.corridor;
  return {
      {"seed", c.seed},
      {"methods", methods},
      {"method_params",
       {{"k", opt(p.k)},
        {"k_x", opt(p.k_x)},
        {"k_v", opt(p.k_v)},
        {"alpha", p.alpha},
        {"gamma", p.vspline.gamma},
        {"eta", p.vspline.eta},
        {"mu", p.vspline.mu},
        {"velocity_floor", p.vspline.velocity_floor},
        {"solver", p.vspline.solver == VSplineSolver::dense ? "dense" : "banded"},
        {"flat_epsilon", p.flat_epsilon}}},
      {"preprocess",
       {{"max_time_gap", c.preprocess.max_time_gap},
        {"max_dist_gap", c.preprocess.max_dist_gap},
        {"max_jump", c.preprocess.max_jump},
        {"max_back_jump", c.preprocess.max_back_jump},
        {"implied_speed_cap", c.preprocess.implied_speed_cap},
        {"stationary_tolerance", c.preprocess.stationary_tolerance},
        {"min_samples", c.preprocess.min_samples}}},
      {"evaluation",
       {{"holdout_fraction", e.holdout_fraction},
        {"holdout_seed", e.holdout_seed},
        {"grid_dt", e.grid_dt},
        {"monotonicity_tolerance", e.monotonicity_tolerance},
        {"tight_bounds", {e.tight.lo, e.tight.hi}},
        {"loose_bounds", {e.loose.lo, e.loose.hi}},
        {"stop_thresholds", e.stop_thresholds},
        {"intersection_window", e.intersections.window},
        {"signal_positions", e.intersections.signal_positions},
        {"baseline_method", e.baseline_method},
        {"baseline_dataset", e.baseline_dataset}}},
      {"synthetic",
       {{"trips", s.trips},
        {"dense_interval", s.dense_interval},
        {"sparse_interval", s.sparse_interval},
        {"route_length", k.route_length},
        {"signal_positions", k.signal_positions},
        {"stop_positions", k.stop_positions},
        {"cruise_speed", k.cruise_speed},
        {"accel_max", k.accel_max},
        {"decel_max", k.decel_max},
        {"dwell_range", {k.dwell_min, k.dwell_max}},
        {"red_wait_range", {k.red_wait_min, k.red_wait_max}},
        {"signal_stop_probability", k.signal_stop_probability},
        {"noise_sigma_pos", k.noise_sigma_pos},
        {"noise_sigma_vel", k.noise_sigma_vel},
        {"min_sample_interval", k.min_sample_interval},
        {"flag_error_rate", k.flag_error_rate}}},
      {"bench", {{"sizes", c.bench.sizes}, {"trips_per_size", c.bench.trips_per_size}}},
  };
}

/// Defaults: the default corridor, and intersection windows at its signals.
inline RunConfig default_run_config() {
  RunConfig c;
  c.synthetic.corridor = CorridorSpec::default_corridor();
  c.evaluation.intersections.signal_positions = c.synthetic.corridor.signal_positions;
  return c;
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c = default_run_config();
  detail::ObjectReader top(j, "config");
  top.get("seed", c.seed);
  if (const json* m = top.child("methods")) {
    detail::require(m->is_array(), ErrorKind::parse_error, "config.methods: expected an array");
    c.methods.clear();
    for (const auto& name : *m) {
      const auto s = name.is_string() ? name.get<std::string>() : name.dump();
      const auto parsed = parse_method(s);
      if (!parsed) throw Error(ErrorKind::unknown_method, "unknown method '" + s + "'");
      c.methods.push_back(*parsed);
    }
  }
  if (const json* mp = top.child("method_params")) {
    detail::ObjectReader r(*mp, "config.method_params");
    auto& p = c.params;
    r.get_optional("k", p.k);
    r.get_optional("k_x", p.k_x);
    r.get_optional("k_v", p.k_v);
    r.get("alpha", p.alpha);
    r.get("gamma", p.vspline.gamma);
    r.get("eta", p.vspline.eta);
    r.get("mu", p.vspline.mu);
    r.get("velocity_floor", p.vspline.velocity_floor);
    std::string solver = p.vspline.solver == VSplineSolver::dense ? "dense" : "banded";
    r.get("solver", solver);
    detail::require(solver == "dense" || solver == "banded", ErrorKind::parse_error,
                    "config.method_params.solver: expected 'dense' or 'banded'");
    p.vspline.solver = solver == "dense" ? VSplineSolver::dense : VSplineSolver::banded;
    r.get("flat_epsilon", p.flat_epsilon);
    r.finish();
  }
  if (const json* pp = top.child("preprocess")) {
    detail::ObjectReader r(*pp, "config.preprocess");
    auto& p = c.preprocess;
    r.get("max_time_gap", p.max_time_gap);
    r.get("max_dist_gap", p.max_dist_gap);
    r.get("max_jump", p.max_jump);
    r.get("max_back_jump", p.max_back_jump);
    r.get("implied_speed_cap", p.implied_speed_cap);
    r.get("stationary_tolerance", p.stationary_tolerance);
    r.get("min_samples", p.min_samples);
    r.finish();
  }
  bool signals_given = false;
  if (const json* ej = top.child("evaluation")) {
    detail::ObjectReader r(*ej, "config.evaluation");
    auto& e = c.evaluation;
    r.get("holdout_fraction", e.holdout_fraction);
    r.get("holdout_seed", e.holdout_seed);
    r.get("grid_dt", e.grid_dt);
    r.get("monotonicity_tolerance", e.monotonicity_tolerance);
    if (const json* b = r.child("tight_bounds")) e.tight = detail::bounds_from(*b, "config.evaluation.tight_bounds");
    if (const json* b = r.child("loose_bounds")) e.loose = detail::bounds_from(*b, "config.evaluation.loose_bounds");
    r.get("stop_thresholds", e.stop_thresholds);
    r.get("intersection_window", e.intersections.window);
    if (const json* sp = r.child("signal_positions"); sp && !sp->is_null()) {
      try {
        e.intersections.signal_positions = sp->get<std::vector<double>>();
      } catch (const json::exception& ex) {
        throw Error(ErrorKind::parse_error, std::string("config.evaluation.signal_positions: ") + ex.what());
      }
      signals_given = true;
    }
    r.get("baseline_method", e.baseline_method);
    r.get("baseline_dataset", e.baseline_dataset);
    r.finish();
  }
  if (const json* sj = top.child("synthetic")) {
    detail::ObjectReader r(*sj, "config.synthetic");
    auto& s = c.synthetic;
    auto& k = s.corridor;
    r.get("trips", s.trips);
    r.get("dense_interval", s.dense_interval);
    r.get("sparse_interval", s.sparse_interval);
    r.get("route_length", k.route_length);
    r.get("signal_positions", k.signal_positions);
    r.get("stop_positions", k.stop_positions);
    r.get("cruise_speed", k.cruise_speed);
    r.get("accel_max", k.accel_max);
    r.get("decel_max", k.decel_max);
    if (const json* d = r.child("dwell_range")) {
      const auto b = detail::bounds_from(*d, "config.synthetic.dwell_range");
      k.dwell_min = b.lo;
      k.dwell_max = b.hi;
    }
    if (const json* d = r.child("red_wait_range")) {
      const auto b = detail::bounds_from(*d, "config.synthetic.red_wait_range");
      k.red_wait_min = b.lo;
      k.red_wait_max = b.hi;
    }
    r.get("signal_stop_probability", k.signal_stop_probability);
    r.get("noise_sigma_pos", k.noise_sigma_pos);
    r.get("noise_sigma_vel", k.noise_sigma_vel);
    r.get("min_sample_interval", k.min_sample_interval);
    r.get("flag_error_rate", k.flag_error_rate);
    r.finish();
  }
  if (const json* bj = top.child("bench")) {
    detail::ObjectReader r(*bj, "config.bench");
    r.get("sizes", c.bench.sizes);
    r.get("trips_per_size", c.bench.trips_per_size);
    r.finish();
  }
  top.finish();
  if (!signals_given) c.evaluation.intersections.signal_positions = c.synthetic.corridor.signal_positions;

  c.preprocess.validate();
  c.params.vspline.validate();
  BlendConfig{c.params.alpha}.validate();
  c.evaluation.tight.validate();
  c.evaluation.loose.validate();
  c.evaluation.intersections.validate();
  c.synthetic.corridor.validate();
  return c;
}

inline RunConfig read_config(const std::string& path) { return config_from_json(read_json(path)); }

// ─── Preprocess report ──────────────────────────────────────────────────────

inline json preprocess_report_to_json(const PreprocessReport& r) {
  json rejected = json::array();
  for (const auto& x : r.rejected_trips) {
    rejected.push_back({{"trip_id", x.trip_id}, {"reason", std::string(to_string(x.reason))}});
  }
  return {{"input_trips", r.input_trips},         {"accepted_trips", r.accepted_trips},
          {"removed_outliers", r.removed_outliers}, {"adjusted_points", r.adjusted_points},
          {"trimmed_head", r.trimmed_head},       {"trimmed_tail", r.trimmed_tail},
          {"rejected_trips", rejected}};
}

// ─── Evaluation report ──────────────────────────────────────────────────────

namespace detail {

inline json stat_json(const Stat& s) {
  if (s.count == 0) return nullptr;
  return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}};
}

inline Stat stat_from(const json& j) {
  if (j.is_null()) return {};
  return {j.at("mean").get<double>(), j.at("sd").get<double>(), j.at("count").get<std::size_t>()};
}

/// Mean and SD cells; both empty when the metric is absent.
inline void stat_cells(std::ostream& out, const Stat& s) {
  if (s.count == 0) {
    out << ",,";
  } else {
    out << ',' << format_double(s.mean) << ',' << format_double(s.sd);
  }
}

inline std::string threshold_label(double t) { return format_double(t); }

}  // namespace detail

inline json report_to_json(const EvaluationReport& report) {
  json rows = json::array();
  const auto& cfg = report.config;
  for (const auto& r : report.rows) {
    json stops = json::array();
    for (const auto& s : r.stop_consistency) stops.push_back(detail::stat_json(s));
    json inter = json::object();
    json mape = json::object();
    for (std::size_t m = 0; m < 4; ++m) {
      const std::string name(kIntersectionMetricNames[m]);
      inter[name] = detail::stat_json(r.intersection[m]);
      mape[name] = {{"value", r.mape[m].value}, {"count", r.mape[m].count}, {"excluded", r.mape[m].excluded}};
    }
    rows.push_back({{"method", r.method},
                    {"dataset", r.dataset},
                    {"trips", r.trips},
                    {"fit_failures", r.fit_failures},
                    {"rmse_pos", detail::stat_json(r.rmse_pos)},
                    {"rmse_vel", detail::stat_json(r.rmse_vel)},
                    {"mae_pos", detail::stat_json(r.mae_pos)},
                    {"mae_vel", detail::stat_json(r.mae_vel)},
                    {"violation_rate", detail::stat_json(r.violation_rate)},
                    {"mon_success", r.mon_success},
                    {"truth_rmse_pos", detail::stat_json(r.truth_rmse_pos)},
                    {"truth_rmse_vel", detail::stat_json(r.truth_rmse_vel)},
                    {"accel_tight", detail::stat_json(r.accel_tight)},
                    {"accel_loose", detail::stat_json(r.accel_loose)},
                    {"stop_consistency", stops},
                    {"intersection", inter},
                    {"mape", mape},
                    {"non_monotone_windows", r.non_monotone_windows}});
  }
  return {{"config",
           {{"holdout_fraction", cfg.holdout_fraction},
            {"holdout_seed", cfg.holdout_seed},
            {"grid_dt", cfg.grid_dt},
            {"monotonicity_tolerance", cfg.monotonicity_tolerance},
            {"tight_bounds", {cfg.tight.lo, cfg.tight.hi}},
            {"loose_bounds", {cfg.loose.lo, cfg.loose.hi}},
            {"stop_thresholds", cfg.stop_thresholds},
            {"intersection_window", cfg.intersections.window},
            {"signal_positions", cfg.intersections.signal_positions},
            {"baseline_method", cfg.baseline_method},
            {"baseline_dataset", cfg.baseline_dataset}}},
          {"rows", rows}};
}

inline EvaluationReport report_from_json(const json& j) {
  EvaluationReport rep;
  try {
    const auto& c = j.at("config");
    auto& cfg = rep.config;
    cfg.holdout_fraction = c.at("holdout_fraction").get<double>();
    cfg.holdout_seed = c.at("holdout_seed").get<std::uint64_t>();
    cfg.grid_dt = c.at("grid_dt").get<double>();
    cfg.monotonicity_tolerance = c.at("monotonicity_tolerance").get<double>();
    cfg.tight = detail::bounds_from(c.at("tight_bounds"), "tight_bounds");
    cfg.loose = detail::bounds_from(c.at("loose_bounds"), "loose_bounds");
    cfg.stop_thresholds = c.at("stop_thresholds").get<std::vector<double>>();
    cfg.intersections.window = c.at("intersection_window").get<double>();
    cfg.intersections.signal_positions = c.at("signal_positions").get<std::vector<double>>();
    cfg.baseline_method = c.at("baseline_method").get<std::string>();
    cfg.baseline_dataset = c.at("baseline_dataset").get<std::string>();
    for (const auto& rj : j.at("rows")) {
      ReportRow r;
      r.method = rj.at("method").get<std::string>();
      r.dataset = rj.at("dataset").get<std::string>();
      r.trips = rj.at("trips").get<std::size_t>();
      r.fit_failures = rj.at("fit_failures").get<std::size_t>();
      r.rmse_pos = detail::stat_from(rj.at("rmse_pos"));
      r.rmse_vel = detail::stat_from(rj.at("rmse_vel"));
      r.mae_pos = detail::stat_from(rj.at("mae_pos"));
      r.mae_vel = detail::stat_from(rj.at("mae_vel"));
      r.violation_rate = detail::stat_from(rj.at("violation_rate"));
      r.mon_success = rj.at("mon_success").get<double>();
      r.truth_rmse_pos = detail::stat_from(rj.at("truth_rmse_pos"));
      r.truth_rmse_vel = detail::stat_from(rj.at("truth_rmse_vel"));
      r.accel_tight = detail::stat_from(rj.at("accel_tight"));
      r.accel_loose = detail::stat_from(rj.at("accel_loose"));
      for (const auto& s : rj.at("stop_consistency")) r.stop_consistency.push_back(detail::stat_from(s));
      for (std::size_t m = 0; m < 4; ++m) {
        const std::string name(kIntersectionMetricNames[m]);
        r.intersection[m] = detail::stat_from(rj.at("intersection").at(name));
        const auto& mj = rj.at("mape").at(name);
        r.mape[m] = {mj.at("value").get<double>(), mj.at("count").get<std::size_t>(),
                     mj.at("excluded").get<std::size_t>()};
      }
      r.non_monotone_windows = rj.at("non_monotone_windows").get<std::size_t>();
      rep.rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("report: ") + e.what());
  }
  return rep;
}

inline void write_fit_metrics_csv(std::ostream& out, const EvaluationReport& rep) {
  out << "method,dataset,trips,fit_failures,rmse_pos_mean,rmse_pos_sd,rmse_vel_mean,rmse_vel_sd,"
         "mae_pos_mean,mae_pos_sd,mae_vel_mean,mae_vel_sd,violation_rate_mean,violation_rate_sd,"
         "mon_success,truth_rmse_pos_mean,truth_rmse_pos_sd,truth_rmse_vel_mean,truth_rmse_vel_sd\n";
  for (const auto& r : rep.rows) {
    out << r.method << ',' << r.dataset << ',' << r.trips << ',' << r.fit_failures;
    for (const Stat* s : {&r.rmse_pos, &r.rmse_vel, &r.mae_pos, &r.mae_vel, &r.violation_rate}) {
      detail::stat_cells(out, *s);
    }
    out << ',' << format_double(r.mon_success);
    detail::stat_cells(out, r.truth_rmse_pos);
    detail::stat_cells(out, r.truth_rmse_vel);
    out << '\n';
  }
}

inline void write_profile_metrics_csv(std::ostream& out, const EvaluationReport& rep) {
  out << "method,dataset,accel_tight_mean,accel_tight_sd,accel_loose_mean,accel_loose_sd";
  for (double t : rep.config.stop_thresholds) {
    const auto l = detail::threshold_label(t);
    out << ",stop_" << l << "_mean,stop_" << l << "_sd";
  }
  out << '\n';
  for (const auto& r : rep.rows) {
    out << r.method << ',' << r.dataset;
    detail::stat_cells(out, r.accel_tight);
    detail::stat_cells(out, r.accel_loose);
    for (const auto& s : r.stop_consistency) detail::stat_cells(out, s);
    out << '\n';
  }
}

inline void write_intersection_metrics_csv(std::ostream& out, const EvaluationReport& rep) {
  out << "method,dataset,windows,non_monotone_windows";
  for (auto name : kIntersectionMetricNames) out << ',' << name << "_mean," << name << "_sd";
  for (auto name : kIntersectionMetricNames) out << ',' << name << "_mape";
  out << ",mape_excluded\n";
  for (const auto& r : rep.rows) {
    out << r.method << ',' << r.dataset << ',' << r.intersection[0].count << ',' << r.non_monotone_windows;
    for (const auto& s : r.intersection) detail::stat_cells(out, s);
    std::size_t excluded = 0;
    for (const auto& m : r.mape) {
      out << ',' << format_double(m.value);
      excluded += m.excluded;
    }
    out << ',' << excluded << '\n';
  }
}

/// Writes fit_metrics.csv, profile_metrics.csv, intersection_metrics.csv and
/// report.json into `dir`.
inline void write_report(const std::string& dir, const EvaluationReport& rep) {
  {
    auto f = detail::open_out(dir + "/fit_metrics.csv");
    write_fit_metrics_csv(f, rep);
  }
  {
    auto f = detail::open_out(dir + "/profile_metrics.csv");
    write_profile_metrics_csv(f, rep);
  }
  {
    auto f = detail::open_out(dir + "/intersection_metrics.csv");
    write_intersection_metrics_csv(f, rep);
  }
  write_json(dir + "/report.json", report_to_json(rep));
}

inline void write_timing_csv(const std::string& path, const std::vector<TimingRow>& rows) {
  auto f = detail::open_out(path);
  f << "method,dataset,fits,fit_ms_mean,fit_ms_sd\n";
  for (const auto& r : rows) {
    f << r.method << ',' << r.dataset << ',' << r.fit_ms.count << ',' << format_double(r.fit_ms.mean)
      << ',' << format_double(r.fit_ms.sd) << '\n';
  }
}

// ─── Model dump ─────────────────────────────────────────────────────────────

inline json model_to_json(const TrajectoryModel& model, const std::string& trip_id) {
  json j = {{"trip_id", trip_id},
            {"method", std::string(to_string(model.method()))},
            {"t_begin", model.t_begin()},
            {"t_end", model.t_end()}};
  if (const auto* pc = model.piecewise()) {
    json coeffs = json::array();
    for (const auto& c : pc->coefficients()) coeffs.push_back({c[0], c[1], c[2], c[3]});
    j["representation"] = "piecewise_cubic";
    j["breaks"] = std::vector<double>(pc->breaks().begin(), pc->breaks().end());
    j["coefficients"] = coeffs;
    j["velocity_breaks"] = std::vector<double>(pc->velocity_breaks().begin(), pc->velocity_breaks().end());
  } else {
    const auto& lc = std::get<LocregCurve>(model.representation());
    j["representation"] = "local_regression";
    j["t"] = std::vector<double>(lc.position().t().begin(), lc.position().t().end());
    j["x"] = std::vector<double>(lc.position().y().begin(), lc.position().y().end());
    j["k_x"] = lc.position().config().k;
    if (lc.velocity()) {
      j["v"] = std::vector<double>(lc.velocity()->y().begin(), lc.velocity()->y().end());
      j["k_v"] = lc.velocity()->config().k;
    }
  }
  if (model.knots()) {
    const auto& k = *model.knots();
    j["knots"] = {{"t", std::vector<double>(k.t().begin(), k.t().end())},
                  {"y", std::vector<double>(k.y().begin(), k.y().end())},
                  {"m", std::vector<double>(k.m().begin(), k.m().end())}};
  }
  return j;
}

/// Grid trajectory CSV: trip_id,t,x,v,a.
inline void write_grid_csv(std::ostream& out, const std::vector<std::pair<std::string, TrajectoryModel>>& models,
                           double dt) {
  out << "trip_id,t,x,v,a\n";
  for (const auto& [id, m] : models) {
    for (double t : time_grid(m.t_begin(), m.t_end(), dt)) {
      const auto k = m.at(offset_from_breaks(m, t));
      out << id << ',' << format_double(t) << ',' << format_double(m.position(t)) << ','
          << format_double(k.v) << ',' << format_double(k.a) << '\n';
    }
  }
}

}  // namespace avltraj
