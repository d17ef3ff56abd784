#include <gtest/gtest.h>

#include "avltraj/methods.hpp"
#include "avltraj/synthetic.hpp"

using namespace avltraj;

namespace {

ObservationSeries clean(const ObservationSeries& raw) {
  auto out = preprocess_trip(raw, {});
  if (!out.series) throw std::runtime_error("trip rejected: " + raw.trip_id());
  return *out.series;
}

CorridorSpec empty_corridor() {
  CorridorSpec s;
  s.signal_positions.clear();
  s.stop_positions.clear();
  return s;
}

}  // namespace

TEST(GenerateTruth, SingleTrapezoid) {
  const auto spec = empty_corridor();
  const auto g = generate_truth(spec, 1);
  const double expected = spec.route_length / spec.cruise_speed + spec.cruise_speed / (2 * spec.accel_max) +
                          spec.cruise_speed / (2 * spec.decel_max);
  EXPECT_NEAR(g.t_end(), expected, 1e-9);
  EXPECT_NEAR(g.at(g.t_end()).x, spec.route_length, 1e-9);
  EXPECT_EQ(g.pieces.size(), 3u);
  EXPECT_TRUE(g.stops.empty());
}

TEST(GenerateTruth, TriangleWhenTooShortForCruise) {
  auto spec = empty_corridor();
  spec.route_length = 200;
  const auto g = generate_truth(spec, 1);
  // Peak speed from d = vp^2/2 (1/acc + 1/dec).
  const double vp = std::sqrt(2 * 200 * spec.accel_max * spec.decel_max / (spec.accel_max + spec.decel_max));
  EXPECT_LT(vp, spec.cruise_speed);
  EXPECT_NEAR(g.t_end(), vp / spec.accel_max + vp / spec.decel_max, 1e-9);
  EXPECT_NEAR(g.at(g.t_end()).x, 200, 1e-9);
}

TEST(GenerateTruth, NoRedSignalsNeverStopAfterLaunch) {
  auto spec = CorridorSpec::default_corridor();
  spec.stop_positions.clear();
  spec.signal_stop_probability = 0;
  const auto g = generate_truth(spec, 3);
  EXPECT_TRUE(g.signal_stops.empty());
  for (double t = 0.5; t < g.t_end() - 0.5; t += 0.1) ASSERT_GT(g.at(t).v, 0.0) << t;
}

TEST(GenerateTruth, Deterministic) {
  const auto spec = CorridorSpec::default_corridor();
  EXPECT_EQ(generate_truth(spec, 42, "a"), generate_truth(spec, 42, "a"));
  EXPECT_NE(generate_truth(spec, 42, "a"), generate_truth(spec, 43, "a"));
}

TEST(GenerateTruth, KinematicInvariants) {
  const auto spec = CorridorSpec::default_corridor();
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto g = generate_truth(spec, seed);
    double prev = g.at(0).x;
    for (double t = 0; t <= g.t_end(); t += 0.1) {
      const auto k = g.at(t);
      ASSERT_GE(k.x, prev - 1e-9);
      ASSERT_GE(k.v, -1e-9);
      ASSERT_GE(k.a, -spec.decel_max - 1e-12);
      ASSERT_LE(k.a, spec.accel_max + 1e-12);
      prev = k.x;
    }
    for (const auto* list : {&g.stops, &g.signal_stops}) {
      for (const auto& d : *list) {
        for (double t = d.begin; t <= d.end; t += 0.1) ASSERT_NEAR(g.at(t).v, 0.0, 1e-9);
      }
    }
    EXPECT_EQ(g.stops.size(), spec.stop_positions.size());
    EXPECT_NEAR(g.at(g.t_end()).x, spec.route_length, 1e-6);
  }
}

TEST(SampleAvl, ZeroNoiseLiesOnTruth) {
  auto spec = CorridorSpec::default_corridor();
  spec.noise_sigma_pos = 0;
  spec.noise_sigma_vel = 0;
  spec.min_sample_interval = 1.0;
  spec.mean_sample_interval = 1.0 + 1e-9;
  const auto g = generate_truth(spec, 5);
  const auto s = sample_avl(g, spec, 6);
  EXPECT_EQ(s.t_begin(), g.t_begin());
  EXPECT_EQ(s.t_end(), g.t_end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto k = g.at(s.t()[i]);
    ASSERT_DOUBLE_EQ(s.x()[i], k.x);
    ASSERT_DOUBLE_EQ(s.v()[i], k.v);
  }
  for (std::size_t i = 1; i + 1 < s.size(); ++i) ASSERT_NEAR(s.t()[i] - s.t()[i - 1], 1.0, 1e-6);
  EXPECT_LT(s.t_end() - s.t()[s.size() - 2], 2.0);
}

TEST(SampleAvl, MeanIntervalAndCount) {
  auto spec = CorridorSpec::default_corridor();
  std::vector<double> intervals;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = sample_avl(generate_truth(spec, seed), spec, seed + 1000);
    for (std::size_t i = 1; i < s.size(); ++i) intervals.push_back(s.t()[i] - s.t()[i - 1]);
  }
  double mean = 0;
  for (double d : intervals) mean += d;
  mean /= static_cast<double>(intervals.size());
  EXPECT_NEAR(mean, 16.49, 0.05 * 16.49);

  // A 5470 s trip at 16.49 s gives about 332 samples.
  auto flat = empty_corridor();
  flat.route_length = 5470.0 * 3.0;
  flat.cruise_speed = 3.0;
  const auto g = generate_truth(flat, 1);
  std::vector<double> counts;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) counts.push_back(static_cast<double>(sample_avl(g, flat, seed).size()));
  double c = 0;
  for (double d : counts) c += d;
  c /= static_cast<double>(counts.size());
  EXPECT_NEAR(c, g.t_end() / 16.49 + 1, 10.0);
  EXPECT_NEAR(g.t_end(), 5470.0, 5.0);
}

TEST(SampleAvl, FlagErrorRate) {
  const auto spec = CorridorSpec::default_corridor();
  std::size_t flagged = 0, fast = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto s = sample_avl(generate_truth(spec, seed), spec, seed + 7);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.stopped()[i]) continue;
      ++flagged;
      fast += s.v()[i] > 5.0;
    }
  }
  ASSERT_GT(flagged, 500u);
  EXPECT_NEAR(static_cast<double>(fast) / static_cast<double>(flagged), 0.2, 0.03);
}

TEST(SampleAvl, NoiseTruncated) {
  const auto spec = CorridorSpec::default_corridor();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = generate_truth(spec, seed);
    const auto s = sample_avl(g, spec, seed);
    for (std::size_t i = 0; i < s.size(); ++i) {
      ASSERT_LE(std::abs(s.x()[i] - g.at(s.t()[i]).x), 3 * spec.noise_sigma_pos + 1e-9);
    }
  }
}

TEST(TruthErrors, ZeroForTruthItself) {
  auto spec = empty_corridor();
  spec.route_length = 2000;
  const auto g = generate_truth(spec, 1);
  // LSEG through breakpoints of a piecewise-linear velocity still errs; use
  // a cruise-only piece instead where LSEG is exact.
  const auto cruise = g.pieces[1];
  std::vector<double> t{cruise.t0, cruise.t0 + cruise.duration};
  std::vector<double> x{g.at(t[0]).x, g.at(t[1]).x};
  GroundTruth line{"line", {cruise}, {}, {}};
  const auto m = fit_lseg({"line", t, x});
  const auto e = truth_errors(m, line);
  EXPECT_NEAR(e.rmse_pos, 0.0, 1e-9);
  EXPECT_NEAR(e.rmse_vel, 0.0, 1e-9);
}

TEST(TruthErrors, NoiseFreeDenseInterpolationIsClose) {
  auto spec = CorridorSpec::default_corridor();
  spec.noise_sigma_pos = 0;
  spec.noise_sigma_vel = 0;
  spec.mean_sample_interval = 3.0;
  const auto g = generate_truth(spec, 2);
  const auto s = sample_avl(g, spec, 3);
  const auto e = truth_errors(fit_vchip_me(s), g);
  // Cubic Hermite error with exact slopes is at most h^4/384 max|x''''| per
  // piece, but the truth has acceleration jumps; bound by a jump of
  // (accel + decel) over one sample gap.
  const double h = 20.0;
  EXPECT_LT(e.rmse_pos, (spec.accel_max + spec.decel_max) * h * h / 8.0);
  EXPECT_LT(e.rmse_pos, 5.0);
}

TEST(TruthErrors, LsegWorseThanVchipMeOnSparseEnsemble) {
  SynthConfig cfg;
  cfg.trips = 200;
  const auto corpus = generate_corpus(cfg);
  double lseg = 0, vme = 0;
  for (std::size_t k = 0; k < corpus.truth.size(); ++k) {
    lseg += truth_errors(fit_lseg(clean(corpus.sparse[k])), corpus.truth[k]).rmse_pos;
    vme += truth_errors(fit_vchip_me(clean(corpus.sparse[k])), corpus.truth[k]).rmse_pos;
  }
  EXPECT_GT(lseg, vme);
}

TEST(Corpus, DeterministicAndSparseIsSubset) {
  SynthConfig cfg;
  cfg.trips = 5;
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  EXPECT_EQ(a.dense, b.dense);
  EXPECT_EQ(a.sparse, b.sparse);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.dense[0].trip_id(), "trip-0001");
  for (std::size_t k = 0; k < a.dense.size(); ++k) {
    EXPECT_LT(a.sparse[k].size(), a.dense[k].size());
    EXPECT_EQ(a.sparse[k].t_end(), a.dense[k].t_end());
  }
}

TEST(Corpus, DenserSamplingLowersTruthError) {
  SynthConfig cfg;
  cfg.trips = 12;
  const auto corpus = generate_corpus(cfg);
  for (Method m : kAllMethods) {
    double dense = 0, sparse = 0;
    for (std::size_t k = 0; k < corpus.truth.size(); ++k) {
      dense += truth_errors(fit(m, clean(corpus.dense[k]), {}), corpus.truth[k]).rmse_pos;
      sparse += truth_errors(fit(m, clean(corpus.sparse[k]), {}), corpus.truth[k]).rmse_pos;
    }
    EXPECT_LT(dense, sparse) << to_string(m);
  }
}
