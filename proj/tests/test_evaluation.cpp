#include "ajam/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ajam;

namespace {

Scenario quiet() {
  Scenario s = Scenario::reference();
  s.jammers.clear();
  s.radio.rayleigh_fading = false;
  return s;
}

NamedPolicyFactory constant(const std::string& name, int f, int p, int v) {
  return {name, [=](std::size_t) { return std::make_unique<ConstantPolicy>(f, p, v); }};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Quantile, TypeSevenOnOneToEight) {
  const std::vector<double> xs{8, 3, 1, 7, 2, 6, 5, 4};
  EXPECT_DOUBLE_EQ(quantile(xs, 0.25), 2.75);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 4.5);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.75), 6.25);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 8.0);
  const BoxStats b = BoxStats::of(xs, 5.0);
  EXPECT_DOUBLE_EQ(b.iqr(), 3.5);
  EXPECT_DOUBLE_EQ(b.mean, 4.5);
  EXPECT_EQ(b.n_runs, 8u);
  EXPECT_THROW(quantile({}, 0.5), ContractViolation);
}

TEST(Quantile, OrderedAndBracketedOnRandomSamples) {
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> xs(1 + uniform_index(rng, 40));
    for (auto& x : xs) x = 100.0 * uniform01(rng) - 50.0;
    const BoxStats b = BoxStats::of(xs, 0.0);
    EXPECT_LE(b.min, b.q1);
    EXPECT_LE(b.q1, b.median);
    EXPECT_LE(b.median, b.q3);
    EXPECT_LE(b.q3, b.max);
    EXPECT_GE(b.mean, b.min);
    EXPECT_LE(b.mean, b.max);
  }
}

TEST(Accuracy, KnownValues) {
  EXPECT_DOUBLE_EQ(decision_accuracy({1, 2, 3, 4}, {1, 2, 0, 4}), 0.75);
  EXPECT_DOUBLE_EQ(decision_accuracy({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(decision_accuracy({0, 0}, {1, 1}), 0.0);
  EXPECT_THROW(decision_accuracy({1}, {1, 2}), ContractViolation);
}

TEST(Rollout, TraceLayout) {
  ConstantPolicy p(2, 4, 1);
  const EpisodeStats st = run_episode(p, Scenario::reference(), 0.0, 1, 2);
  ASSERT_EQ(st.decisions.size(), 10u + 2u * 10u * 3u);
  EXPECT_EQ(st.beta.size(), 30u);
  for (std::size_t T = 0; T < 10; ++T) {
    EXPECT_EQ(st.decisions[T * 7], 2);
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_EQ(st.decisions[T * 7 + 1 + 2 * t], 4);
      EXPECT_EQ(st.decisions[T * 7 + 2 + 2 * t], 1);
    }
  }
}

TEST(Rollout, CleanLinkMatchesHandCalculation) {
  ConstantPolicy p(0, 5, 3);
  const EpisodeStats st = run_episode(p, quiet(), 0.0, 1, 2);
  const double beta = 100.0 / 25.0 / 1e-11;
  EXPECT_NEAR(st.cumulative_throughput_bits, 30.0 * 1e7 * std::log2(1.0 + beta) * 1e-3, 1e-5);
  for (int m : st.mu) EXPECT_EQ(m, 1);
}

TEST(Rollout, ObserverSeesSensedAndTrueStates) {
  ConstantPolicy p(0, 5, 0);
  const Scenario sc = Scenario::reference();
  const double R = sc.channel_radius_w(10.0) / sc.radio.state_ref_w;
  int count[3] = {0, 0, 0};
  run_episode(p, sc, 10.0, 3, 4, [&](Role r, const Vector& obs, const Vector& truth, int) {
    ++count[static_cast<int>(r)];
    EXPECT_EQ(obs.size(), truth.size());
    EXPECT_LE((obs - truth).cwiseAbs().maxCoeff(), R + 1e-12);
  });
  EXPECT_EQ(count[0], 10);
  EXPECT_EQ(count[1], 30);
  EXPECT_EQ(count[2], 30);
}

TEST(Rollout, HoldingPolicyDecidesOncePerLongSlot) {
  struct Counting final : Policy {
    int calls = 0;
    int frequency(const Vector&) override { return 0; }
    int power(const Vector&) override { return ++calls % 6; }
    int modulation(const Vector&) override { return 0; }
    bool holds_within_long_slot() const override { return true; }
  } p;
  const EpisodeStats st = run_episode(p, Scenario::reference(), 0.0, 1, 2);
  EXPECT_EQ(p.calls, 10);
  EXPECT_EQ(st.decisions.size(), 70u);
  EXPECT_EQ(st.decisions[1], st.decisions[3]);
  EXPECT_EQ(st.decisions[3], st.decisions[5]);
}

TEST(Rollout, NegativeRadiusRejected) {
  ConstantPolicy p(0, 0, 0);
  EXPECT_THROW(run_episode(p, Scenario::reference(), -1.0, 1, 2), DomainError);
}

TEST(GreedyBaseline, PicksFromSensedEstimates) {
  const Scenario sc = Scenario::reference();
  GreedyBaseline g(sc);
  Vector f(5);
  f << 3.0, 1.0, 0.5, 0.5, 2.0;
  EXPECT_EQ(g.frequency(f), 2);
  EXPECT_EQ(g.power(Vector::Zero(2)), 5);
  Vector v(3);
  v << 0.0, 1e-12, 10.0;  // 4 W against 1e-11 W
  EXPECT_EQ(g.modulation(v), 3);
  v[1] = 0.04;  // 4 W against 0.4 W: 10 dB
  EXPECT_EQ(g.modulation(v), 2);
  v[1] = 0.2;  // 3 dB
  EXPECT_EQ(g.modulation(v), 0);
}

TEST(Sweep, SeedsShareFadingAndVaryPerturbation) {
  const RunSeeds a = sweep_seeds(7, 0), b = sweep_seeds(7, 1);
  EXPECT_EQ(a.fading, b.fading);
  EXPECT_NE(a.perturbation, b.perturbation);
}

TEST(Sweep, UnperturbedDeterministicPolicyHasNoSpread) {
  const Scenario sc = Scenario::reference();
  const auto mt = constant("c", 1, 5, 0);
  const SweepResult r = robustness_sweep({mt}, mt, sc, {0.0, 10.0}, 4, 3);
  ASSERT_EQ(r.boxes.size(), 2u);
  EXPECT_EQ(r.boxes[0].second.min, r.boxes[0].second.max);
  EXPECT_EQ(r.accuracy[0].accuracy, 1.0);
  EXPECT_EQ(r.runs.size(), 8u);
  EXPECT_EQ(r.per_run_accuracy.at({"c", 10.0}).size(), 4u);
}

TEST(Sweep, SingleRunWorks) {
  const auto mt = constant("c", 1, 5, 0);
  const SweepResult r = robustness_sweep({mt}, mt, Scenario::reference(), {5.0}, 1, 3);
  EXPECT_EQ(r.boxes[0].second.n_runs, 1u);
  EXPECT_EQ(r.boxes[0].second.q1, r.boxes[0].second.q3);
}

TEST(Sweep, DisagreeingPolicyScoresZero) {
  const auto bench = constant("b", 0, 0, 0);
  const auto other = constant("o", 1, 1, 1);
  const SweepResult r = robustness_sweep({other}, bench, Scenario::reference(), {0.0, 10.0}, 3, 1);
  for (const auto& a : r.accuracy) EXPECT_EQ(a.accuracy, 0.0);
}

TEST(Sweep, RandomPolicyAgreesAtChanceLevel) {
  const Scenario sc = Scenario::reference();
  const auto bench = constant("b", 0, 0, 0);
  NamedPolicyFactory rnd{"random", [&](std::size_t r) { return std::make_unique<RandomPolicy>(sc, 100 + r); }};
  const SweepResult r = robustness_sweep({rnd}, bench, sc, {0.0}, 50, 2);
  // 10 of 70 positions at 1/5, 30 at 1/6, 30 at 1/4.
  const double chance = (10.0 / 5 + 30.0 / 6 + 30.0 / 4) / 70.0;
  EXPECT_NEAR(r.accuracy[0].accuracy, chance, 0.02);
}

TEST(Sweep, MeanThroughputAveragesIndependentRuns) {
  const Scenario sc = Scenario::reference();
  auto make = [](std::size_t) { return std::make_unique<ConstantPolicy>(3, 5, 1); };
  double expect = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    ConstantPolicy p(3, 5, 1);
    expect += run_episode(p, sc, 0.0, derive_seed(4, Stream::Fading, 1000 + r),
                          derive_seed(4, Stream::Perturbation, 1000 + r))
                  .cumulative_throughput_bits;
  }
  EXPECT_DOUBLE_EQ(mean_throughput(make, sc, 0.0, 3, 4), expect / 3.0);
}

TEST(Ablation, OneRowPerVariantAndSeed) {
  Hyperparameters hp;
  hp.episodes = 1;
  hp.batch = 4;
  hp.buffer_frequency = hp.buffer_power = hp.buffer_modulation = 16;
  hp.hidden = 4;
  hp.depth = 1;
  const Scenario sc = Scenario::reference();
  std::vector<std::string> seen;
  const auto rows = ablation_suite(sc, hp, {1, 2}, 2, [&](const std::string& s) { seen.push_back(s); });
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_EQ(rows[0].variant, "full");
  EXPECT_EQ(rows[2].variant, "single_timescale");
  EXPECT_EQ(rows[4].variant, "fixed_max_power");
  EXPECT_EQ(rows[6].variant, "unshaped_modulation");

  TrainingOptions o;
  o.seed = 2;
  const auto tr = train(sc, hp, o);
  const double m = mean_throughput([&](std::size_t) { return std::make_unique<BundlePolicy>(tr.bundle, 5); }, sc,
                                   0.0, 2, 2);
  EXPECT_EQ(rows[1].cumulative_throughput_bits, m);
}

TEST(Intervals, DumpCoversEveryDecisionAndIsDegenerateWithoutNoise) {
  const Scenario sc = Scenario::reference();
  const auto b = AgentBundle::initialize(sc, Hyperparameters{}, Algorithm::NQC, Variant::Full, 1);
  const auto rows = q_interval_dump(b, sc, 0.0, 0.005, 1, 2);
  EXPECT_EQ(rows.size(), 10u * 5 + 30u * 6 + 30u * 4);
  for (const auto& r : rows) {
    EXPECT_EQ(r.q_low, r.q_point);
    EXPECT_EQ(r.q_high, r.q_point);
  }
  const auto noisy = q_interval_dump(b, sc, 10.0, 0.005, 1, 2);
  ASSERT_EQ(noisy.size(), rows.size());
  for (const auto& r : noisy) {
    EXPECT_LE(r.q_low, r.q_point + 1e-12);
    EXPECT_GE(r.q_high, r.q_point - 1e-12);
  }
}

TEST(Intervals, CertificationIsSoundAtEveryRadius) {
  const Scenario sc = Scenario::reference();
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto b = AgentBundle::initialize(sc, Hyperparameters{}, Algorithm::MT, Variant::Full, seed);
    const auto zero = certified_consistency(b, sc, 0.0, 3, seed);
    EXPECT_EQ(zero.decisions, 3u * 70u);
    EXPECT_EQ(zero.certified, zero.decisions);
    EXPECT_EQ(zero.violations, 0u);
    for (double eps : {0.01, 0.1, 1.0, 10.0}) {
      const auto rep = certified_consistency(b, sc, eps, 3, seed);
      EXPECT_EQ(rep.violations, 0u) << "eps " << eps;
      EXPECT_LE(rep.certified, rep.decisions);
    }
  }
}

TEST(Probe, NoDiscountMeansImmediateFixedPoint) {
  const ToyMdp m = ToyMdp::seeded(1);
  const auto rep = contraction_probe(m, 0.0, 200, 1);
  EXPECT_EQ(rep.max_ratio, 0.0);
  EXPECT_EQ(rep.applications_to_fixed_point, 1);
}

TEST(Probe, ContractsWithDiscountFactor) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ToyMdp m = ToyMdp::seeded(seed);
    const auto rep = contraction_probe(m, 0.3, 2000, seed);
    EXPECT_LE(rep.max_ratio, 0.3 + 1e-12);
    EXPECT_GT(rep.max_ratio, 0.0);
    EXPECT_LE((m.worst_case_backup(rep.fixed_point, 0.3) - rep.fixed_point).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Probe, FixedPointIsUniqueAcrossStarts) {
  const ToyMdp m = ToyMdp::seeded(9);
  Rng rng(3);
  const Vector ref = iterate_to_fixed_point(m, 0.3, Vector::Zero(4)).value;
  for (int i = 0; i < 10; ++i) {
    Vector v0(4);
    for (int s = 0; s < 4; ++s) v0[s] = 1e4 * (2.0 * uniform01(rng) - 1.0);
    const FixedPoint fp = iterate_to_fixed_point(m, 0.3, v0);
    EXPECT_TRUE(fp.converged);
    EXPECT_LE((fp.value - ref).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Probe, BackupMatchesHandComputedSingleStateCase) {
  ToyMdp m;
  m.n_states = 1;
  m.n_actions = 2;
  m.n_perturb = 2;
  m.n_obs = 2;
  m.reward = {1.0, 3.0};
  m.transition = {1.0, 1.0};
  m.observation = {0, 1};
  m.policy = {1.0, 0.0, 0.25, 0.75};
  // obs 0: 1 + g V; obs 1: 0.25 + 2.25 + g V. Worst is obs 0, so V* = 1 / (1 - g).
  const FixedPoint fp = iterate_to_fixed_point(m, 0.5, Vector::Zero(1));
  EXPECT_NEAR(fp.value[0], 2.0, 1e-9);
}

TEST(Csv, EpisodeLayout) {
  ConstantPolicy p(0, 5, 3);
  const Scenario sc = quiet();
  std::ostringstream os;
  write_episode_csv(os, sc, {run_episode(p, sc, 0.0, 1, 2)});
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 31u);
  EXPECT_EQ(ls[0], "run_id,slot,channel,power_dbm,modulation,beta,mu,throughput_bps");
  EXPECT_EQ(ls[1].substr(0, 14), "0,0,0,50,64QAM");
  EXPECT_EQ(ls[30].substr(0, 15), "0,29,0,50,64QAM");
}

TEST(Csv, HeadersAndRoundTrippableNumbers) {
  std::ostringstream a, b, c;
  write_sweep_csv(a, {{"mt", 10.0, 3, 0.1}});
  EXPECT_EQ(a.str(), "algorithm,epsilon_w,run_id,cumulative_throughput_bits\nmt,10,3,0.1\n");
  write_accuracy_csv(b, {{"nqc", 2.5, 1.0 / 3.0}});
  EXPECT_EQ(lines(b.str())[1], "nqc,2.5," + format_double(1.0 / 3.0));
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  write_ablation_csv(c, {{"full", 4, 2e6}});
  EXPECT_EQ(lines(c.str())[1], "full,4,2e+06");
}
