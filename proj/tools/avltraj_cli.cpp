// avltraj command line: preprocess, synth, fit, evaluate, bench.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avltraj/avltraj.hpp"

namespace fs = std::filesystem;
using namespace avltraj;

namespace {

struct Options {
  std::string config;
  std::string methods;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> inputs;
  std::vector<std::string> datasets;
  std::string baseline;
  std::string truth;
  std::optional<std::size_t> trips;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? default_run_config() : read_config(o.config);
  if (!o.methods.empty()) cfg.methods = parse_method_list(o.methods);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trips) cfg.synthetic.trips = *o.trips;
  cfg.synthetic.corridor.seed = cfg.seed;
  if (!o.baseline.empty()) {
    // METHOD or METHOD-dataset, e.g. VCHIP-ME-dense.
    std::string method = o.baseline, dataset = cfg.evaluation.baseline_dataset;
    if (!parse_method(method)) {
      for (auto pos = o.baseline.rfind('-'); pos != std::string::npos && pos > 0;
           pos = o.baseline.rfind('-', pos - 1)) {
        if (parse_method(o.baseline.substr(0, pos))) {
          method = o.baseline.substr(0, pos);
          dataset = o.baseline.substr(pos + 1);
          break;
        }
      }
    }
    if (!parse_method(method)) throw Error(ErrorKind::unknown_method, "unknown method '" + o.baseline + "'");
    cfg.evaluation.baseline_method = method;
    cfg.evaluation.baseline_dataset = dataset;
  }
  return cfg;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create directory '" + dir + "': " + ec.message());
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void run_preprocess(const Options& o) {
  const auto cfg = load_config(o);
  if (o.inputs.empty()) throw Error(ErrorKind::invalid_argument, "preprocess: no --input given");
  make_dir(o.out);
  for (const auto& path : o.inputs) {
    const auto cleaned = preprocess_trips(read_trips(path), cfg.preprocess);
    const std::string base = o.out + "/" + stem(path);
    write_trips(base + ".csv", cleaned.trips);
    write_json(base + ".preprocess.json", preprocess_report_to_json(cleaned.report));
  }
}

void run_synth(const Options& o) {
  const auto cfg = load_config(o);
  make_dir(o.out);
  const auto corpus = generate_corpus(cfg.synthetic);
  write_trips(o.out + "/sparse.csv", corpus.sparse);
  write_trips(o.out + "/dense.csv", corpus.dense);
  write_json(o.out + "/truth.json", truth_to_json(corpus.truth));
}

void run_fit(const Options& o) {
  const auto cfg = load_config(o);
  if (o.inputs.size() != 1) throw Error(ErrorKind::invalid_argument, "fit: exactly one --input required");
  if (cfg.methods.size() != 1) throw Error(ErrorKind::invalid_argument, "fit: exactly one method required");
  const Method method = cfg.methods.front();
  make_dir(o.out);
  std::vector<std::pair<std::string, TrajectoryModel>> models;
  json dump = json::array();
  for (const auto& s : read_trips(o.inputs.front())) {
    try {
      models.emplace_back(s.trip_id(), fit(method, s, cfg.params));
    } catch (const Error& e) {
      throw Error(e.kind(), "trip '" + s.trip_id() + "': " + e.what());
    }
    dump.push_back(model_to_json(models.back().second, s.trip_id()));
  }
  write_json(o.out + "/models.json", dump);
  auto f = detail::open_out(o.out + "/grid.csv");
  write_grid_csv(f, models, cfg.evaluation.grid_dt);
}

void run_evaluate(const Options& o) {
  const auto cfg = load_config(o);
  if (o.datasets.empty()) throw Error(ErrorKind::invalid_argument, "evaluate: no --dataset given");
  // Loaded first so that the DatasetInput pointers stay valid.
  std::vector<std::pair<std::string, std::vector<ObservationSeries>>> loaded;
  for (const auto& spec : o.datasets) {
    const auto eq = spec.find('=');
    const std::string name = eq == std::string::npos ? stem(spec) : spec.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    for (const auto& l : loaded) {
      if (l.first == name) throw Error(ErrorKind::invalid_argument, "duplicate dataset name '" + name + "'");
    }
    loaded.emplace_back(name, read_trips(path));
  }
  std::map<std::string, GroundTruth> truth;
  if (!o.truth.empty()) {
    for (auto& g : truth_from_json(read_json(o.truth))) truth.emplace(g.trip_id, std::move(g));
  }
  std::vector<DatasetInput> inputs;
  for (const auto& [name, trips] : loaded) inputs.push_back({name, &trips, truth.empty() ? nullptr : &truth});

  make_dir(o.out);
  const auto run = evaluate(cfg.methods, inputs, cfg.params, cfg.evaluation);
  write_report(o.out, run.report);
  write_timing_csv(o.out + "/timing.csv", run.timing);
}

void run_bench(const Options& o) {
  const auto cfg = load_config(o);
  make_dir(o.out);
  auto spec = cfg.synthetic.corridor;
  spec.mean_sample_interval = cfg.synthetic.sparse_interval;
  auto f = detail::open_out(o.out + "/bench.csv");
  f << "method,n,trips,fit_ms_mean,fit_ms_sd\n";
  json exponents = json::object();
  std::map<std::size_t, std::vector<ObservationSeries>> batches;
  for (std::size_t n : cfg.bench.sizes) batches[n] = bench_trips(spec, n, cfg.bench.trips_per_size, cfg.seed);
  for (Method m : cfg.methods) {
    std::vector<BenchPoint> points;
    for (std::size_t n : cfg.bench.sizes) {
      const auto st = benchmark_timing(m, batches[n], cfg.params, cfg.evaluation.grid_dt);
      points.push_back({n, st});
      f << to_string(m) << ',' << n << ',' << st.count << ',' << format_double(st.mean) << ','
        << format_double(st.sd) << '\n';
    }
    exponents[std::string(to_string(m))] = scaling_exponent(points);
  }
  write_json(o.out + "/bench_summary.json", {{"scaling_exponent", exponents}});
}

int report_error(ErrorKind kind, const std::string& message) {
  const json j = {{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
  return kind == ErrorKind::unknown_method ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bus trajectory reconstruction from AVL samples"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "global seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto methods = [&](CLI::App* sub) {
    sub->add_option("--methods,--method", o.methods, "comma-separated method names");
  };

  auto* pre = app.add_subcommand("preprocess", "clean raw trips");
  common(pre);
  pre->add_option("--input", o.inputs, "raw trip CSV (repeatable)")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic corridor corpus");
  common(synth);
  synth->add_option("--trips", o.trips, "number of trips");

  auto* fitc = app.add_subcommand("fit", "fit one method and dump models");
  common(fitc);
  methods(fitc);
  fitc->add_option("--input", o.inputs, "cleaned trip CSV")->required();

  auto* eval = app.add_subcommand("evaluate", "holdout, profile and intersection tests");
  common(eval);
  methods(eval);
  eval->add_option("--dataset", o.datasets, "NAME=PATH or PATH (name from file stem); repeatable")->required();
  eval->add_option("--baseline", o.baseline, "baseline METHOD or METHOD-DATASET (default VCHIP-ME-dense)");
  eval->add_option("--truth", o.truth, "truth sidecar JSON for truth errors");

  auto* bench = app.add_subcommand("bench", "fit timing against trip length");
  common(bench);
  methods(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return 2;
  }

  try {
    if (pre->parsed()) run_preprocess(o);
    else if (synth->parsed()) run_synth(o);
    else if (fitc->parsed()) run_fit(o);
    else if (eval->parsed()) run_evaluate(o);
    else if (bench->parsed()) run_bench(o);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorKind::io_error, e.what());
  }
  return 0;
}
