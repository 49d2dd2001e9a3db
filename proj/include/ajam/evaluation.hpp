#pragma once

// Rollouts under sensing error, robustness sweeps, decision accuracy,
// ablations, Q-interval dumps and the worst-case Bellman contraction probe.

#include "ajam/agents.hpp"
#include "ajam/common.hpp"
#include "ajam/environment.hpp"
#include "ajam/neural.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ajam {

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Maps (possibly perturbed) role states to actions.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int frequency(const Vector& s_f) = 0;
  virtual int power(const Vector& s_p) = 0;
  virtual int modulation(const Vector& s_v) = 0;
  /// Power and modulation decided once per long slot and held.
  virtual bool holds_within_long_slot() const { return false; }
};

/// Greedy (no exploration) on a trained bundle's current networks.
class BundlePolicy final : public Policy {
 public:
  explicit BundlePolicy(const AgentBundle& b, int max_power_index)
      : b_(&b), max_power_(max_power_index) {}
  int frequency(const Vector& s) override { return argmax(b_->role(Role::Frequency).current.forward(s)); }
  int power(const Vector& s) override {
    if (b_->variant == Variant::FixedMaxPower) return max_power_;
    return argmax(b_->role(Role::Power).current.forward(s));
  }
  int modulation(const Vector& s) override { return argmax(b_->role(Role::Modulation).current.forward(s)); }
  bool holds_within_long_slot() const override { return b_->variant == Variant::SingleTimescale; }

 private:
  const AgentBundle* b_;
  int max_power_;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(const Scenario& sc, std::uint64_t seed)
      : n_f_(static_cast<std::size_t>(sc.radio.n_channels)),
        n_p_(static_cast<std::size_t>(sc.radio.n_power_levels())),
        n_v_(static_cast<std::size_t>(sc.radio.n_modulations())),
        rng_(seed) {}
  int frequency(const Vector&) override { return static_cast<int>(uniform_index(rng_, n_f_)); }
  int power(const Vector&) override { return static_cast<int>(uniform_index(rng_, n_p_)); }
  int modulation(const Vector&) override { return static_cast<int>(uniform_index(rng_, n_v_)); }

 private:
  std::size_t n_f_, n_p_, n_v_;
  Rng rng_;
};

/// Least-jammed channel, maximum power, and the highest modulation whose
/// threshold the sensed SJNR estimate (mean fading) clears.
class GreedyBaseline final : public Policy {
 public:
  explicit GreedyBaseline(const Scenario& sc) : sc_(sc), gain_(sc.tx_path_gain()) {}
  int frequency(const Vector& s) override {
    int best = 0;
    for (Eigen::Index i = 1; i < s.size(); ++i)
      if (s[i] < s[best]) best = static_cast<int>(i);
    return best;
  }
  int power(const Vector&) override { return sc_.radio.n_power_levels() - 1; }
  int modulation(const Vector& s) override {
    const double interference = s[1] * sc_.radio.state_ref_w;
    const double signal = s[2] * sc_.radio.state_ref_w * gain_;
    const double est_db = linear_to_db(signal / interference);
    for (int v = sc_.radio.n_modulations() - 1; v > 0; --v)
      if (est_db >= sc_.radio.threshold_db(v)) return v;
    return 0;
  }

 private:
  Scenario sc_;
  double gain_;
};

/// Fixed actions; useful for scripted traces.
class ConstantPolicy final : public Policy {
 public:
  ConstantPolicy(int channel, int power, int modulation) : f_(channel), p_(power), v_(modulation) {}
  int frequency(const Vector&) override { return f_; }
  int power(const Vector&) override { return p_; }
  int modulation(const Vector&) override { return v_; }

 private:
  int f_, p_, v_;
};

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

struct EpisodeStats {
  double cumulative_throughput_bits = 0.0;
  // Per long slot: channel, then per short slot power and modulation.
  std::vector<int> decisions;
  std::vector<double> beta;
  std::vector<int> mu;
  std::vector<double> slot_throughput_bps;
  std::uint64_t fading_seed = 0;
  std::uint64_t perturbation_seed = 0;
};

/// Called at every decision with the role, the observed state, the true
/// state and the action taken.
using DecisionObserver = std::function<void(Role, const Vector& observed, const Vector& truth, int action)>;

inline EpisodeStats run_episode(Policy& policy, const Scenario& sc, double eps_eval_w, std::uint64_t fading_seed,
                                std::uint64_t perturbation_seed, const DecisionObserver& observe = {}) {
  if (eps_eval_w < 0.0) throw DomainError("run_episode: negative evaluation radius");
  Environment env(sc);
  env.reset(fading_seed, perturbation_seed, sc.channel_radius_w(eps_eval_w));
  EpisodeStats st;
  st.fading_seed = fading_seed;
  st.perturbation_seed = perturbation_seed;
  const int l = sc.timescale.short_per_long();
  const bool hold = policy.holds_within_long_slot();
  while (!env.done()) {
    const Vector f_obs = env.frequency_state(Observation::Sensed);
    const int a_f = policy.frequency(f_obs);
    if (observe) observe(Role::Frequency, f_obs, env.frequency_state(Observation::True), a_f);
    st.decisions.push_back(a_f);
    env.choose_channel(a_f);
    int a_p = 0, a_v = 0;
    for (int t = 0; t < l; ++t) {
      if (!hold || t == 0) {
        const Vector p_obs = env.power_state(Observation::Sensed);
        a_p = policy.power(p_obs);
        if (observe) observe(Role::Power, p_obs, env.power_state(Observation::True), a_p);
        const Vector v_obs = env.modulation_state(Observation::Sensed, a_p);
        a_v = policy.modulation(v_obs);
        if (observe) observe(Role::Modulation, v_obs, env.modulation_state(Observation::True, a_p), a_v);
      }
      st.decisions.push_back(a_p);
      st.decisions.push_back(a_v);
      const SlotOutcome& o = env.step(a_p, a_v);
      st.beta.push_back(o.beta);
      st.mu.push_back(o.mu);
      st.slot_throughput_bps.push_back(o.throughput_bps);
    }
  }
  st.cumulative_throughput_bits = env.cumulative_bits();
  return st;
}

/// Fraction of positions where the two action traces agree.
inline double decision_accuracy(const std::vector<int>& test, const std::vector<int>& benchmark) {
  require(test.size() == benchmark.size(), "decision_accuracy: trace length mismatch");
  if (test.empty()) return 1.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < test.size(); ++i) hit += test[i] == benchmark[i];
  return static_cast<double>(hit) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
inline double quantile(std::vector<double> xs, double p) {
  require(!xs.empty(), "quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile: p out of [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct BoxStats {
  double epsilon = 0.0;
  std::size_t n_runs = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  double iqr() const { return q3 - q1; }

  static BoxStats of(const std::vector<double>& xs, double eps) {
    require(!xs.empty(), "BoxStats: empty sample");
    BoxStats b;
    b.epsilon = eps;
    b.n_runs = xs.size();
    b.min = *std::min_element(xs.begin(), xs.end());
    b.max = *std::max_element(xs.begin(), xs.end());
    b.q1 = quantile(xs, 0.25);
    b.median = quantile(xs, 0.5);
    b.q3 = quantile(xs, 0.75);
    double s = 0.0;
    for (double x : xs) s += x;
    b.mean = s / static_cast<double>(xs.size());
    return b;
  }
};

// ---------------------------------------------------------------------------
// Robustness sweep
// ---------------------------------------------------------------------------

/// Seeds for evaluation run `run`: one fading realization per sweep (so runs
/// differ only in their sensing errors) and one perturbation stream per run.
struct RunSeeds {
  std::uint64_t fading;
  std::uint64_t perturbation;
};

inline RunSeeds sweep_seeds(std::uint64_t master, std::size_t run) {
  return {derive_seed(master, Stream::Fading, 0), derive_seed(master, Stream::Perturbation, run)};
}

struct SweepRow {
  std::string algorithm;
  double epsilon_w = 0.0;
  std::size_t run_id = 0;
  double cumulative_throughput_bits = 0.0;
};

struct AccuracyRow {
  std::string algorithm;
  double epsilon_w = 0.0;
  double accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> runs;
  std::vector<AccuracyRow> accuracy;
  std::vector<std::pair<std::string, BoxStats>> boxes;
  // Per (algorithm, eps) the per-run accuracies, in run order.
  std::map<std::pair<std::string, double>, std::vector<double>> per_run_accuracy;
};

struct NamedPolicyFactory {
  std::string name;
  // Builds a fresh policy for one run (stateful policies get their own stream).
  std::function<std::unique_ptr<Policy>(std::size_t run)> make;
};

/// Every (algorithm, epsilon, run) rollout, and decision accuracy against the
/// benchmark policy's unperturbed trace for the same run.
inline SweepResult robustness_sweep(const std::vector<NamedPolicyFactory>& policies, const NamedPolicyFactory& benchmark,
                                    const Scenario& sc, const std::vector<double>& eps_list, std::size_t n_runs,
                                    std::uint64_t master) {
  require(n_runs > 0, "robustness_sweep: need at least one run");
  SweepResult out;
  std::vector<std::vector<int>> bench(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) {
    const RunSeeds s = sweep_seeds(master, r);
    auto p = benchmark.make(r);
    bench[r] = run_episode(*p, sc, 0.0, s.fading, s.perturbation).decisions;
  }
  for (const auto& pf : policies) {
    for (double eps : eps_list) {
      std::vector<double> bits, acc;
      for (std::size_t r = 0; r < n_runs; ++r) {
        const RunSeeds s = sweep_seeds(master, r);
        auto p = pf.make(r);
        const EpisodeStats st = run_episode(*p, sc, eps, s.fading, s.perturbation);
        bits.push_back(st.cumulative_throughput_bits);
        acc.push_back(decision_accuracy(st.decisions, bench[r]));
        out.runs.push_back({pf.name, eps, r, st.cumulative_throughput_bits});
      }
      double mean_acc = 0.0;
      for (double a : acc) mean_acc += a;
      mean_acc /= static_cast<double>(acc.size());
      out.accuracy.push_back({pf.name, eps, mean_acc});
      out.boxes.emplace_back(pf.name, BoxStats::of(bits, eps));
      out.per_run_accuracy[{pf.name, eps}] = std::move(acc);
    }
  }
  return out;
}

/// Mean cumulative throughput over `runs` episodes with distinct fading draws.
inline double mean_throughput(const std::function<std::unique_ptr<Policy>(std::size_t)>& make, const Scenario& sc,
                              double eps_w, std::size_t runs, std::uint64_t master) {
  require(runs > 0, "mean_throughput: need at least one run");
  double s = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    auto p = make(r);
    s += run_episode(*p, sc, eps_w, derive_seed(master, Stream::Fading, 1000 + r),
                     derive_seed(master, Stream::Perturbation, 1000 + r))
             .cumulative_throughput_bits;
  }
  return s / static_cast<double>(runs);
}

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double cumulative_throughput_bits = 0.0;
};

inline const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> v{Variant::Full, Variant::SingleTimescale, Variant::FixedMaxPower,
                                      Variant::UnshapedModulation};
  return v;
}

/// Trains every variant (MT learner, true states) per seed and reports the
/// mean unperturbed cumulative throughput over `eval_runs` fading draws.
inline std::vector<AblationRow> ablation_suite(const Scenario& sc, const Hyperparameters& hp,
                                               const std::vector<std::uint64_t>& seeds, std::size_t eval_runs,
                                               const std::function<void(const std::string&)>& progress = {}) {
  require(!seeds.empty(), "ablation_suite: need at least one seed");
  std::vector<AblationRow> rows;
  for (Variant v : ablation_variants()) {
    for (std::uint64_t seed : seeds) {
      if (progress) progress(std::string(variant_name(v)) + " seed " + std::to_string(seed));
      TrainingOptions opt;
      opt.algorithm = Algorithm::MT;
      opt.variant = v;
      opt.seed = seed;
      const TrainingResult tr = train(sc, hp, opt);
      const int maxp = sc.radio.n_power_levels() - 1;
      const double m = mean_throughput(
          [&](std::size_t) { return std::make_unique<BundlePolicy>(tr.bundle, maxp); }, sc, 0.0, eval_runs, seed);
      rows.push_back({variant_name(v), seed, m});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Interval inspection
// ---------------------------------------------------------------------------

struct QIntervalRecord {
  std::string role;
  long slot = 0;
  int action = 0;
  double q_point = 0.0, q_low = 0.0, q_high = 0.0;
};

/// Point Q-values and compressed interval bounds at every state visited by a
/// greedy rollout under sensing radius `eps_w`.
inline std::vector<QIntervalRecord> q_interval_dump(const AgentBundle& b, const Scenario& sc, double eps_w,
                                                    double compression, std::uint64_t fading_seed,
                                                    std::uint64_t perturbation_seed) {
  std::vector<QIntervalRecord> out;
  BundlePolicy pol(b, sc.radio.n_power_levels() - 1);
  long slot = 0;
  run_episode(pol, sc, eps_w, fading_seed, perturbation_seed,
              [&](Role r, const Vector& obs, const Vector&, int) {
                const QNetwork& net = b.role(r).current;
                const Vector q = net.forward(obs);
                const PerturbationBox box = perturbation_box(sc, r, eps_w);
                const IntervalBatch iv = compress_interval(net.ibp_forward(box.around(Matrix(obs))), compression);
                for (Eigen::Index a = 0; a < q.size(); ++a)
                  out.push_back({role_name(r), slot, static_cast<int>(a), q[a], iv.low(a, 0), iv.high(a, 0)});
                if (r == Role::Modulation) ++slot;
              });
  return out;
}

struct CertificationReport {
  std::size_t decisions = 0;
  std::size_t certified = 0;
  std::size_t violations = 0;  // certified, yet the true-state action differs
};

/// At every decision of `runs` greedy rollouts, checks whether the raw
/// interval bounds on the observation box certify the chosen action, and if
/// so whether the true state yields the same action.
inline CertificationReport certified_consistency(const AgentBundle& b, const Scenario& sc, double eps_w,
                                                 std::size_t runs, std::uint64_t master) {
  CertificationReport rep;
  BundlePolicy pol(b, sc.radio.n_power_levels() - 1);
  for (std::size_t r = 0; r < runs; ++r) {
    const RunSeeds s = sweep_seeds(master, r);
    run_episode(pol, sc, eps_w, s.fading, s.perturbation, [&](Role role, const Vector& obs, const Vector& truth, int) {
      if (role == Role::Power && b.variant == Variant::FixedMaxPower) return;
      const QNetwork& net = b.role(role).current;
      const int a_obs = argmax(net.forward(obs));
      const PerturbationBox box = perturbation_box(sc, role, eps_w);
      const IntervalBatch iv = net.ibp_forward(box.around(Matrix(obs)));
      ++rep.decisions;
      if (!misleading_set(iv.low.col(0), iv.high.col(0), a_obs).empty()) return;
      ++rep.certified;
      if (argmax(net.forward(truth)) != a_obs) ++rep.violations;
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Contraction probe
// ---------------------------------------------------------------------------

/// Finite MDP whose agent sees one of several perturbed observations of each
/// state and acts through a fixed stochastic policy on observations.
struct ToyMdp {
  int n_states = 4;
  int n_actions = 2;
  int n_perturb = 3;
  int n_obs = 6;
  std::vector<double> reward;                 // [s][a]
  std::vector<double> transition;             // [s][a][s']
  std::vector<int> observation;               // [s][k] -> obs label
  std::vector<double> policy;                 // [o][a]

  double R(int s, int a) const { return reward[static_cast<std::size_t>(s * n_actions + a)]; }
  double P(int s, int a, int s2) const {
    return transition[static_cast<std::size_t>((s * n_actions + a) * n_states + s2)];
  }
  int obs(int s, int k) const { return observation[static_cast<std::size_t>(s * n_perturb + k)]; }
  double pi(int o, int a) const { return policy[static_cast<std::size_t>(o * n_actions + a)]; }

  static ToyMdp seeded(std::uint64_t seed, int n_states = 4, int n_actions = 2, int n_perturb = 3, int n_obs = 6) {
    Rng rng = make_rng(seed, Stream::Probe);
    ToyMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.n_perturb = n_perturb;
    m.n_obs = n_obs;
    for (int i = 0; i < n_states * n_actions; ++i) m.reward.push_back(2.0 * uniform01(rng) - 1.0);
    for (int i = 0; i < n_states * n_actions; ++i) {
      std::vector<double> row(static_cast<std::size_t>(n_states));
      double s = 0.0;
      for (auto& x : row) s += (x = uniform01(rng) + 1e-3);
      for (auto& x : row) m.transition.push_back(x / s);
    }
    for (int i = 0; i < n_states * n_perturb; ++i)
      m.observation.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_obs))));
    for (int o = 0; o < n_obs; ++o) {
      std::vector<double> row(static_cast<std::size_t>(n_actions));
      double s = 0.0;
      for (auto& x : row) s += (x = uniform01(rng) + 1e-3);
      for (auto& x : row) m.policy.push_back(x / s);
    }
    return m;
  }

  /// Worst case over perturbed observations of the policy-weighted backup.
  Vector worst_case_backup(const Vector& V, double gamma) const {
    require(V.size() == n_states, "ToyMdp: value dimension mismatch");
    Vector out(n_states);
    for (int s = 0; s < n_states; ++s) {
      double worst = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_perturb; ++k) {
        const int o = obs(s, k);
        double v = 0.0;
        for (int a = 0; a < n_actions; ++a) {
          double next = 0.0;
          for (int s2 = 0; s2 < n_states; ++s2) next += P(s, a, s2) * V[s2];
          v += pi(o, a) * (R(s, a) + gamma * next);
        }
        worst = std::min(worst, v);
      }
      out[s] = worst;
    }
    return out;
  }
};

struct FixedPoint {
  Vector value;
  int applications = 0;
  bool converged = false;
};

/// Iterates the operator from `v0` until successive iterates agree within `tol`.
inline FixedPoint iterate_to_fixed_point(const ToyMdp& m, double gamma, Vector v0, double tol = 1e-10,
                                         int max_iter = 100000) {
  FixedPoint fp;
  Vector v = std::move(v0);
  for (int i = 1; i <= max_iter; ++i) {
    Vector next = m.worst_case_backup(v, gamma);
    const double d = (next - v).cwiseAbs().maxCoeff();
    fp.applications = i;
    v = std::move(next);
    if ((m.worst_case_backup(v, gamma) - v).cwiseAbs().maxCoeff() <= tol || d == 0.0) {
      fp.converged = true;
      break;
    }
  }
  fp.value = std::move(v);
  return fp;
}

struct ContractionReport {
  double max_ratio = 0.0;
  int applications_to_fixed_point = 0;
  Vector fixed_point;
};

inline ContractionReport contraction_probe(const ToyMdp& m, double gamma, std::size_t n_pairs, std::uint64_t seed) {
  require(gamma >= 0.0 && gamma < 1.0, "contraction_probe: gamma must be in [0, 1)");
  Rng rng = make_rng(seed, Stream::Probe, 1);
  ContractionReport rep;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    Vector a(m.n_states), b(m.n_states);
    const double scale = std::pow(10.0, 4.0 * uniform01(rng) - 2.0);
    for (int s = 0; s < m.n_states; ++s) {
      a[s] = scale * (2.0 * uniform01(rng) - 1.0);
      b[s] = scale * (2.0 * uniform01(rng) - 1.0);
    }
    const double den = (a - b).cwiseAbs().maxCoeff();
    if (den == 0.0) continue;
    const double num = (m.worst_case_backup(a, gamma) - m.worst_case_backup(b, gamma)).cwiseAbs().maxCoeff();
    rep.max_ratio = std::max(rep.max_ratio, num / den);
  }
  const FixedPoint fp = iterate_to_fixed_point(m, gamma, Vector::Zero(m.n_states));
  rep.applications_to_fixed_point = fp.applications;
  rep.fixed_point = fp.value;
  return rep;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "algorithm,epsilon_w,run_id,cumulative_throughput_bits\n";
  for (const auto& r : rows)
    os << r.algorithm << ',' << format_double(r.epsilon_w) << ',' << r.run_id << ','
       << format_double(r.cumulative_throughput_bits) << '\n';
}

inline void write_accuracy_csv(std::ostream& os, const std::vector<AccuracyRow>& rows) {
  os << "algorithm,epsilon_w,accuracy\n";
  for (const auto& r : rows)
    os << r.algorithm << ',' << format_double(r.epsilon_w) << ',' << format_double(r.accuracy) << '\n';
}

inline void write_box_csv(std::ostream& os, const std::vector<std::pair<std::string, BoxStats>>& rows) {
  os << "algorithm,epsilon_w,n_runs,min,q1,median,q3,max,mean\n";
  for (const auto& [name, b] : rows)
    os << name << ',' << format_double(b.epsilon) << ',' << b.n_runs << ',' << format_double(b.min) << ','
       << format_double(b.q1) << ',' << format_double(b.median) << ',' << format_double(b.q3) << ','
       << format_double(b.max) << ',' << format_double(b.mean) << '\n';
}

inline void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
  os << "variant,seed,cumulative_throughput_bits\n";
  for (const auto& r : rows)
    os << r.variant << ',' << r.seed << ',' << format_double(r.cumulative_throughput_bits) << '\n';
}

inline void write_qdump_csv(std::ostream& os, const std::vector<QIntervalRecord>& rows) {
  os << "role,slot,action,q_point,q_low,q_high\n";
  for (const auto& r : rows)
    os << r.role << ',' << r.slot << ',' << r.action << ',' << format_double(r.q_point) << ','
       << format_double(r.q_low) << ',' << format_double(r.q_high) << '\n';
}

inline void write_episode_csv(std::ostream& os, const Scenario& sc, const std::vector<EpisodeStats>& eps) {
  os << "run_id,slot,channel,power_dbm,modulation,beta,mu,throughput_bps\n";
  const int l = sc.timescale.short_per_long();
  for (std::size_t r = 0; r < eps.size(); ++r) {
    const auto& st = eps[r];
    std::size_t pos = 0;
    int channel = -1;
    for (std::size_t slot = 0; slot < st.beta.size(); ++slot) {
      if (slot % static_cast<std::size_t>(l) == 0) channel = st.decisions[pos++];
      const int p = st.decisions[pos++];
      const int v = st.decisions[pos++];
      os << r << ',' << slot << ',' << channel << ',' << format_double(sc.radio.power_levels_dbm.at(static_cast<std::size_t>(p)))
         << ',' << sc.radio.modulations.at(static_cast<std::size_t>(v)).name << ',' << format_double(st.beta[slot]) << ','
         << st.mu[slot] << ',' << format_double(st.slot_throughput_bps[slot]) << '\n';
    }
  }
}

inline void write_training_log_csv(std::ostream& os, const std::vector<EpisodeLog>& log) {
  os << "episode,loss_f,loss_p,loss_v,episode_throughput_bits,explore_p,lr\n";
  for (const auto& e : log)
    os << e.episode << ',' << format_double(e.loss_f) << ',' << format_double(e.loss_p) << ','
       << format_double(e.loss_v) << ',' << format_double(e.throughput_bits) << ',' << format_double(e.explore_p)
       << ',' << format_double(e.lr) << '\n';
}

}  // namespace ajam
