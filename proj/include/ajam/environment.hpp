#pragma once

// Jammed-link simulator: path loss with block Rayleigh fading, scripted
// jammers, bounded sensing error, and the three decision-role states.

#include "ajam/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ajam {

// ---------------------------------------------------------------------------
// Units and link budget
// ---------------------------------------------------------------------------

inline double dbm_to_watts(double dbm) {
  if (!std::isfinite(dbm)) throw DomainError("dbm_to_watts: non-finite input");
  return std::pow(10.0, dbm / 10.0) / 1000.0;
}

inline double watts_to_dbm(double watts) {
  if (!(watts > 0.0) || !std::isfinite(watts))
    throw DomainError("watts_to_dbm: power must be positive and finite");
  return 10.0 * std::log10(1000.0 * watts);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) {
  return ratio > 0.0 ? 10.0 * std::log10(ratio) : -std::numeric_limits<double>::infinity();
}

/// Large-scale path loss times the small-scale power gain |h|^2.
inline double channel_gain(double distance_km, double ref_distance_km, double path_loss_exp,
                           double fading_power = 1.0) {
  if (!(distance_km > 0.0)) throw GeometryError("channel_gain: distance must be positive");
  if (!(ref_distance_km > 0.0))
    throw GeometryError("channel_gain: reference distance must be positive");
  if (fading_power < 0.0) throw DomainError("channel_gain: negative fading power");
  return std::pow(distance_km / ref_distance_km, -path_loss_exp) * fading_power;
}

/// |h|^2 for h ~ CN(0, 1), i.e. exponential with unit mean.
inline double draw_fading_power(Rng& rng) { return -std::log1p(-uniform01(rng)); }

/// Signal to jamming-plus-noise ratio. `co_channel_jam_w` lists only jammers
/// on the active channel; anything on other channels is excluded by the caller.
inline double sjnr(double received_w, std::span<const double> co_channel_jam_w, double noise_w) {
  if (!(noise_w > 0.0)) throw DomainError("sjnr: noise power must be positive");
  if (received_w < 0.0) throw DomainError("sjnr: negative received power");
  double jam = 0.0;
  for (double j : co_channel_jam_w) {
    if (j < 0.0) throw DomainError("sjnr: negative jamming power");
    jam += j;
  }
  return received_w / (jam + noise_w);
}

inline double sjnr(double received_w, double co_channel_jam_w, double noise_w) {
  return sjnr(received_w, std::span<const double>(&co_channel_jam_w, 1), noise_w);
}

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;
};

inline double distance_km(Point a, Point b) { return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km); }

struct Geometry {
  Point tx{0.0, 5.0};
  Point rx{5.0, 5.0};
  double d0_km = 1.0;
  double tau = 2.0;
};

struct Modulation {
  std::string name;
  int order = 2;
  double bits() const { return std::log2(static_cast<double>(order)); }
};

struct RadioPlan {
  int n_channels = 5;
  double bandwidth_hz = 1e7;
  std::vector<double> power_levels_dbm{25, 30, 35, 40, 45, 50};
  // Sorted by increasing order.
  std::vector<Modulation> modulations{{"BPSK", 2}, {"8PSK", 8}, {"16QAM", 16}, {"64QAM", 64}};
  // eta_1 > eta_2 > ..., one per modulation except the lowest, highest order first.
  std::vector<double> demod_thresholds_db{15, 10, 5};
  // Demodulation threshold of the lowest-order modulation.
  double floor_threshold_db = 0.0;
  double noise_dbm = -80.0;
  double throughput_threshold_bps = 1e6;
  // Block Rayleigh fading on every link; when off every |h|^2 is 1.
  bool rayleigh_fading = true;

  // Modulation reward shaping: one coefficient per SJNR bucket, the reward for
  // the lowest modulation below the last threshold, and the penalty factor.
  std::vector<double> bucket_rewards{2000, 1000, 500};
  double floor_reward = 200.0;
  double suboptimal_penalty = 0.7;

  // Power-like state entries are divided by this before reaching a network.
  double state_ref_w = 10.0;

  int n_power_levels() const { return static_cast<int>(power_levels_dbm.size()); }
  int n_modulations() const { return static_cast<int>(modulations.size()); }
  double noise_w() const { return dbm_to_watts(noise_dbm); }
  double power_w(int index) const { return dbm_to_watts(power_levels_dbm.at(index)); }
  double max_bits() const { return modulations.back().bits(); }

  /// Demodulation threshold (dB) of modulation `index`.
  double threshold_db(int index) const {
    const int z = n_modulations();
    if (index < 0 || index >= z) throw ConfigError("unknown modulation index");
    if (index == 0) return floor_threshold_db;
    return demod_thresholds_db.at(static_cast<std::size_t>(z - 1 - index));
  }

  int modulation_index(std::string_view name) const {
    for (int i = 0; i < n_modulations(); ++i)
      if (modulations[i].name == name) return i;
    throw ConfigError("unknown modulation '" + std::string(name) + "'");
  }
};

enum class JammerKind { Cognitive, CombSweep };

/// Periodic comb: `teeth` channels spaced `spacing` apart, whose base channel
/// sweeps one step per short slot with the given period.
struct CombPattern {
  int teeth = 2;
  int spacing = 2;
  bool descending = false;
  int phase = 0;
  int period = 5;

  std::vector<int> channels(long slot, int n_channels) const {
    const long p = ((slot + phase) % period + period) % period;
    const long base = descending ? (period - 1 - p) : p;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(teeth));
    for (int j = 0; j < teeth; ++j) {
      const long ch = ((base + static_cast<long>(j) * spacing) % n_channels + n_channels) % n_channels;
      out.push_back(static_cast<int>(ch));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct JammerSpec {
  JammerKind kind = JammerKind::CombSweep;
  Point position{};
  double power_dbm = 45.0;
  double detect_threshold_dbm = -55.0;  // cognitive only
  CombPattern comb{};                   // comb only
};

struct TimescalePlan {
  int total_ms = 30;
  int long_ms = 3;
  int short_ms = 1;
  int long_slots() const { return total_ms / long_ms; }
  int short_per_long() const { return long_ms / short_ms; }
  double short_seconds() const { return short_ms / 1000.0; }
};

enum class BallKind { Box, L2 };

struct UncertaintyModel {
  double eps_per_jammer_w = 10.0;
  BallKind ball = BallKind::Box;
};

struct Scenario {
  Geometry geometry{};
  RadioPlan radio{};
  std::vector<JammerSpec> jammers{};
  TimescalePlan timescale{};
  UncertaintyModel uncertainty{};

  /// Built-in defaults: the 3-jammer link of the reference experiment.
  static Scenario reference() {
    Scenario s;
    JammerSpec j1;
    j1.kind = JammerKind::Cognitive;
    j1.position = {4.0, 10.0};
    j1.power_dbm = 53.0;
    j1.detect_threshold_dbm = -55.0;
    JammerSpec j2;
    j2.kind = JammerKind::CombSweep;
    j2.position = {2.0, 1.5};
    j2.power_dbm = 45.0;
    j2.comb = CombPattern{2, 2, false, 0, 5};
    JammerSpec j3 = j2;
    j3.position = {9.0, 8.0};
    j3.comb = CombPattern{2, 2, true, 1, 5};
    s.jammers = {j1, j2, j3};
    return s;
  }

  int n_jammers() const { return static_cast<int>(jammers.size()); }

  /// Per-channel sensing radius for a per-jammer radius `eps_w`.
  double channel_radius_w(double eps_w) const { return n_jammers() * eps_w; }
  double channel_radius_w() const { return channel_radius_w(uncertainty.eps_per_jammer_w); }

  double tx_path_gain() const {
    return channel_gain(distance_km(geometry.tx, geometry.rx), geometry.d0_km, geometry.tau);
  }

  void validate() const {
    const auto& g = geometry;
    if (!(g.d0_km > 0.0)) throw ConfigError("geometry.d0_km: must be > 0");
    if (!(g.tau >= 0.0)) throw ConfigError("geometry.tau: must be >= 0");
    if (!(distance_km(g.tx, g.rx) > 0.0)) throw ConfigError("geometry.tx: coincides with rx");
    const auto& r = radio;
    if (r.n_channels < 1) throw ConfigError("radio.n_channels: must be >= 1");
    if (!(r.bandwidth_hz > 0.0)) throw ConfigError("radio.bandwidth_hz: must be > 0");
    if (r.power_levels_dbm.empty()) throw ConfigError("radio.power_levels_dbm: empty");
    for (std::size_t i = 1; i < r.power_levels_dbm.size(); ++i)
      if (!(r.power_levels_dbm[i] > r.power_levels_dbm[i - 1]))
        throw ConfigError("radio.power_levels_dbm: must be strictly increasing");
    if (r.modulations.size() < 2) throw ConfigError("radio.modulations: need at least two");
    for (std::size_t i = 0; i < r.modulations.size(); ++i) {
      if (r.modulations[i].order < 2) throw ConfigError("radio.modulation_orders: order < 2");
      if (i > 0 && !(r.modulations[i].order > r.modulations[i - 1].order))
        throw ConfigError("radio.modulation_orders: must be strictly increasing");
    }
    if (r.demod_thresholds_db.size() + 1 != r.modulations.size())
      throw ConfigError("radio.demod_thresholds_db: need one per modulation except the lowest");
    for (std::size_t i = 1; i < r.demod_thresholds_db.size(); ++i)
      if (!(r.demod_thresholds_db[i - 1] > r.demod_thresholds_db[i]))
        throw ConfigError("radio.demod_thresholds_db: must be strictly decreasing");
    if (!(r.demod_thresholds_db.back() > r.floor_threshold_db))
      throw ConfigError("radio.floor_threshold_db: must be below the last demod threshold");
    if (r.bucket_rewards.size() != r.demod_thresholds_db.size())
      throw ConfigError("radio.bucket_rewards: need one per demod threshold");
    if (!(r.throughput_threshold_bps >= 0.0))
      throw ConfigError("radio.throughput_threshold_bps: must be >= 0");
    if (!(r.state_ref_w > 0.0)) throw ConfigError("radio.state_ref_w: must be > 0");
    if (!std::isfinite(r.noise_dbm)) throw ConfigError("radio.noise_dbm: not finite");
    for (std::size_t i = 0; i < jammers.size(); ++i) {
      const auto& j = jammers[i];
      const std::string key = "jammers." + std::to_string(i + 1);
      if (!(distance_km(j.position, g.rx) > 0.0)) throw ConfigError(key + ".position: coincides with rx");
      if (j.kind == JammerKind::Cognitive && !(distance_km(j.position, g.tx) > 0.0))
        throw ConfigError(key + ".position: coincides with tx");
      if (j.kind == JammerKind::CombSweep) {
        if (j.comb.teeth < 1) throw ConfigError(key + ".teeth: must be >= 1");
        if (j.comb.period < 1) throw ConfigError(key + ".period: must be >= 1");
        if (j.comb.spacing < 0) throw ConfigError(key + ".spacing: must be >= 0");
      }
    }
    const auto& t = timescale;
    if (t.short_ms < 1) throw ConfigError("timescale.short_ms: must be >= 1");
    if (t.long_ms < t.short_ms || t.long_ms % t.short_ms != 0)
      throw ConfigError("timescale.long_ms: must be a multiple of short_ms");
    if (t.total_ms < 0 || t.total_ms % t.long_ms != 0)
      throw ConfigError("timescale.long_ms: total_ms must be divisible by long_ms");
    if (!(uncertainty.eps_per_jammer_w >= 0.0))
      throw ConfigError("uncertainty.epsilon_w: must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Modulation, throughput and rewards
// ---------------------------------------------------------------------------

/// Throughput scaling factor of modulation `index` at SJNR `beta` (linear).
inline double mod_scale(const RadioPlan& plan, int index, double beta) {
  const double thr = plan.threshold_db(index);
  if (linear_to_db(beta) < thr) return 0.0;
  return plan.modulations[static_cast<std::size_t>(index)].bits() / plan.max_bits();
}

struct SlotThroughput {
  double bps = 0.0;
  int mu = 0;
};

/// psi * B * log2(1 + beta), counted only when it reaches the success threshold.
inline SlotThroughput rate_with_scale(double psi, double beta, double bandwidth_hz, double threshold_bps) {
  const double rate = psi * bandwidth_hz * std::log2(1.0 + beta);
  if (rate >= threshold_bps && rate > 0.0) return {rate, 1};
  return {0.0, 0};
}

inline SlotThroughput slot_throughput(const RadioPlan& plan, int modulation, double beta) {
  return rate_with_scale(mod_scale(plan, modulation, beta), beta, plan.bandwidth_hz, plan.throughput_threshold_bps);
}

inline SlotThroughput slot_throughput(const RadioPlan& plan, int modulation, double tx_power_w,
                                      double tx_gain, double co_channel_jam_w) {
  return slot_throughput(plan, modulation, sjnr(tx_power_w * tx_gain, co_channel_jam_w, plan.noise_w()));
}

/// Shaped modulation reward. Buckets are half-open: bucket b holds
/// eta_{b+1} <= beta_dB < eta_b and admits the modulations decodable there.
inline double reward_modulation(const RadioPlan& plan, double beta, int modulation) {
  const int z = plan.n_modulations();
  if (modulation < 0 || modulation >= z) throw ConfigError("unknown modulation index");
  const double beta_db = linear_to_db(beta);
  const auto& eta = plan.demod_thresholds_db;
  for (std::size_t b = 0; b < eta.size(); ++b) {
    if (beta_db >= eta[b]) {
      const int best_valid = z - 1 - static_cast<int>(b);
      if (modulation > best_valid) return 0.0;
      const double omega = plan.modulations[static_cast<std::size_t>(modulation)].bits() /
                           plan.modulations[static_cast<std::size_t>(best_valid)].bits();
      return plan.bucket_rewards[b] * plan.suboptimal_penalty * omega;
    }
  }
  return modulation == 0 ? plan.floor_reward : 0.0;
}

// ---------------------------------------------------------------------------
// Sensing
// ---------------------------------------------------------------------------

/// Bounded sensing error: each channel reading is perturbed within radius
/// `radius_w` (per-channel box, or an L2 ball over all channels) and clamped at 0.
inline std::vector<double> sense(std::span<const double> true_jam_w, double radius_w, BallKind ball,
                                 Rng& rng) {
  if (radius_w < 0.0) throw DomainError("sense: negative radius");
  const std::size_t n = true_jam_w.size();
  std::vector<double> out(n);
  if (ball == BallKind::Box) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * uniform01(rng) - 1.0;
      out[i] = std::max(0.0, true_jam_w[i] + radius_w * u);
    }
    return out;
  }
  // Uniform in the L2 ball: Gaussian direction, radius ~ R * U^(1/n).
  std::vector<double> dir(n);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = uniform01(rng), u2 = uniform01(rng);
    dir[i] = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    norm2 += dir[i] * dir[i];
  }
  const double rad = radius_w * std::pow(uniform01(rng), 1.0 / static_cast<double>(std::max<std::size_t>(n, 1)));
  const double scale = norm2 > 0.0 ? rad / std::sqrt(norm2) : 0.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, true_jam_w[i] + scale * dir[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Jammers
// ---------------------------------------------------------------------------

/// Scripted jammers. Comb jammers follow their pattern; the cognitive jammer
/// jams, for exactly one slot, the channel the transmitter used in the
/// previous slot if it heard that transmission above its detection threshold.
class JammerBank {
 public:
  explicit JammerBank(const Scenario& sc) : n_channels_(sc.radio.n_channels), fading_(sc.radio.rayleigh_fading) {
    for (const auto& j : sc.jammers) {
      Entry e;
      e.spec = j;
      e.power_w = dbm_to_watts(j.power_dbm);
      e.gain_to_rx = channel_gain(distance_km(j.position, sc.geometry.rx), sc.geometry.d0_km, sc.geometry.tau);
      if (j.kind == JammerKind::Cognitive) {
        e.gain_from_tx =
            channel_gain(distance_km(sc.geometry.tx, j.position), sc.geometry.d0_km, sc.geometry.tau);
        e.threshold_w = dbm_to_watts(j.detect_threshold_dbm);
      }
      entries_.push_back(e);
    }
  }

  void reset() {
    for (auto& e : entries_) e.trigger_channel = -1;
  }

  /// Received jamming power per channel at the receiver for `slot`, given the
  /// transmitter's channel (-1 when silent) and power in this slot. Draws one
  /// fading sample per jammer link, then one per transmitter-to-cognitive link.
  std::vector<double> step(long slot, int tx_channel, double tx_power_w, Rng& fading) {
    std::vector<double> jam(static_cast<std::size_t>(n_channels_), 0.0);
    for (auto& e : entries_) {
      const double rx_w = e.power_w * e.gain_to_rx * (fading_ ? draw_fading_power(fading) : 1.0);
      if (e.spec.kind == JammerKind::CombSweep) {
        for (int ch : e.spec.comb.channels(slot, n_channels_)) jam[static_cast<std::size_t>(ch)] += rx_w;
      } else if (e.trigger_channel >= 0) {
        jam[static_cast<std::size_t>(e.trigger_channel)] += rx_w;
      }
    }
    for (auto& e : entries_) {
      if (e.spec.kind != JammerKind::Cognitive) continue;
      const double heard = tx_power_w * e.gain_from_tx * (fading_ ? draw_fading_power(fading) : 1.0);
      e.trigger_channel = (tx_channel >= 0 && heard > e.threshold_w) ? tx_channel : -1;
    }
    return jam;
  }

 private:
  struct Entry {
    JammerSpec spec;
    double power_w = 0.0;
    double gain_to_rx = 0.0;
    double gain_from_tx = 0.0;
    double threshold_w = 0.0;
    int trigger_channel = -1;
  };
  int n_channels_;
  bool fading_;
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

enum class Observation { True, Sensed };

struct SlotOutcome {
  long slot = 0;
  int long_slot = 0;
  int short_slot = 0;
  int channel = -1;
  int power_index = -1;
  int modulation_index = -1;
  std::vector<double> true_jam_w;
  std::vector<double> sensed_jam_w;
  double received_w = 0.0;
  double beta = 0.0;
  double throughput_bps = 0.0;
  int mu = 0;
  double modulation_reward = 0.0;
};

/// One link over one episode of k long slots of l short slots each. Decision
/// order per long slot: choose_channel(), then l x (power, modulation) via step().
/// A silent sensing window of l slots precedes the first long slot so that a
/// frequency state exists for the first decision.
class Environment {
 public:
  explicit Environment(Scenario sc) : sc_(std::move(sc)), bank_(sc_) {
    sc_.validate();
    tx_gain_ = sc_.tx_path_gain();
    noise_w_ = sc_.radio.noise_w();
  }

  static int frequency_dim(const Scenario& sc) { return sc.radio.n_channels; }
  static constexpr int power_dim() { return 2; }
  static constexpr int modulation_dim() { return 3; }

  void reset(std::uint64_t fading_seed, std::uint64_t sensing_seed, double sense_radius_w) {
    if (sense_radius_w < 0.0) throw DomainError("Environment::reset: negative sensing radius");
    fading_ = Rng(fading_seed);
    sensing_ = Rng(sensing_seed);
    radius_w_ = sense_radius_w;
    bank_.reset();
    const auto n = static_cast<std::size_t>(sc_.radio.n_channels);
    slot_ = 0;
    long_ = 0;
    short_ = 0;
    channel_ = -1;
    bits_ = 0.0;
    long_tp_sum_ = 0.0;
    last_long_tp_sum_ = 0.0;
    win_true_.assign(n, 0.0);
    win_sensed_.assign(n, 0.0);
    last_true_.assign(n, 0.0);
    last_sensed_.assign(n, 0.0);
    const int l = sc_.timescale.short_per_long();
    for (int i = 0; i < l; ++i) {
      if (sc_.radio.rayleigh_fading) (void)draw_fading_power(fading_);
      auto jam = bank_.step(slot_, -1, 0.0, fading_);
      record_sensing(std::move(jam));
      ++slot_;
    }
    close_window();
    awaiting_channel_ = !done();
  }

  const Scenario& scenario() const { return sc_; }
  bool done() const { return long_ >= sc_.timescale.long_slots(); }
  bool awaiting_channel() const { return awaiting_channel_; }
  int long_slot() const { return long_; }
  int short_slot() const { return short_; }
  int channel() const { return channel_; }
  long slot() const { return slot_; }
  double cumulative_bits() const { return bits_; }
  /// Sum of slot throughputs (bps) over the most recently completed long slot.
  double last_long_throughput_bps() const { return last_long_tp_sum_; }

  /// Per-channel mean of (jam + noise) over the last completed window, normalized.
  Vector frequency_state(Observation view) const {
    const auto& src = view == Observation::True ? freq_true_ : freq_sensed_;
    Vector s(static_cast<Eigen::Index>(src.size()));
    for (std::size_t i = 0; i < src.size(); ++i)
      s[static_cast<Eigen::Index>(i)] = (src[i] + noise_w_) / sc_.radio.state_ref_w;
    return s;
  }

  /// {t_index / l, (jam on the active channel in the previous slot + noise) / P_ref}.
  Vector power_state(Observation view) const {
    require(channel_ >= 0, "power_state: no active channel");
    const auto& src = view == Observation::True ? last_true_ : last_sensed_;
    Vector s(2);
    s[0] = static_cast<double>(short_) / sc_.timescale.short_per_long();
    s[1] = (src[static_cast<std::size_t>(channel_)] + noise_w_) / sc_.radio.state_ref_w;
    return s;
  }

  /// Power state extended with the chosen transmit power (normalized watts).
  Vector modulation_state(Observation view, int power_index) const {
    require(power_index >= 0 && power_index < sc_.radio.n_power_levels(),
            "modulation_state: power index out of range");
    Vector p = power_state(view);
    Vector s(3);
    s << p[0], p[1], sc_.radio.power_w(power_index) / sc_.radio.state_ref_w;
    return s;
  }

  void choose_channel(int channel) {
    require(awaiting_channel_ && !done(), "choose_channel: not at a long-slot boundary");
    require(channel >= 0 && channel < sc_.radio.n_channels, "choose_channel: channel out of range");
    channel_ = channel;
    awaiting_channel_ = false;
  }

  const SlotOutcome& step(int power_index, int modulation_index) {
    require(!done(), "step: episode finished");
    require(!awaiting_channel_, "step: frequency decision pending");
    require(power_index >= 0 && power_index < sc_.radio.n_power_levels(), "step: power index out of range");
    require(modulation_index >= 0 && modulation_index < sc_.radio.n_modulations(),
            "step: modulation index out of range");
    const double p_w = sc_.radio.power_w(power_index);
    const double h_tx = sc_.radio.rayleigh_fading ? draw_fading_power(fading_) : 1.0;
    auto jam = bank_.step(slot_, channel_, p_w, fading_);

    SlotOutcome& o = outcome_;
    o.slot = slot_;
    o.long_slot = long_;
    o.short_slot = short_;
    o.channel = channel_;
    o.power_index = power_index;
    o.modulation_index = modulation_index;
    o.received_w = p_w * tx_gain_ * h_tx;
    o.beta = sjnr(o.received_w, jam[static_cast<std::size_t>(channel_)], noise_w_);
    const auto tp = slot_throughput(sc_.radio, modulation_index, o.beta);
    o.throughput_bps = tp.bps;
    o.mu = tp.mu;
    o.modulation_reward = reward_modulation(sc_.radio, o.beta, modulation_index);

    record_sensing(std::move(jam));
    o.true_jam_w = last_true_;
    o.sensed_jam_w = last_sensed_;

    bits_ += tp.bps * sc_.timescale.short_seconds();
    long_tp_sum_ += tp.bps;
    ++slot_;
    if (++short_ == sc_.timescale.short_per_long()) {
      close_window();
      last_long_tp_sum_ = long_tp_sum_;
      long_tp_sum_ = 0.0;
      short_ = 0;
      ++long_;
      awaiting_channel_ = !done();
    }
    return o;
  }

 private:
  void record_sensing(std::vector<double> jam) {
    auto sensed = sense(jam, radius_w_, sc_.uncertainty.ball, sensing_);
    for (std::size_t i = 0; i < jam.size(); ++i) {
      win_true_[i] += jam[i];
      win_sensed_[i] += sensed[i];
    }
    last_true_ = std::move(jam);
    last_sensed_ = std::move(sensed);
  }

  void close_window() {
    const double l = sc_.timescale.short_per_long();
    freq_true_.resize(win_true_.size());
    freq_sensed_.resize(win_sensed_.size());
    for (std::size_t i = 0; i < win_true_.size(); ++i) {
      freq_true_[i] = win_true_[i] / l;
      freq_sensed_[i] = win_sensed_[i] / l;
      win_true_[i] = 0.0;
      win_sensed_[i] = 0.0;
    }
  }

  Scenario sc_;
  JammerBank bank_;
  double tx_gain_ = 0.0;
  double noise_w_ = 0.0;
  Rng fading_{};
  Rng sensing_{};
  double radius_w_ = 0.0;
  long slot_ = 0;
  int long_ = 0;
  int short_ = 0;
  int channel_ = -1;
  bool awaiting_channel_ = false;
  double bits_ = 0.0;
  double long_tp_sum_ = 0.0;
  double last_long_tp_sum_ = 0.0;
  std::vector<double> win_true_, win_sensed_;
  std::vector<double> freq_true_, freq_sensed_;
  std::vector<double> last_true_, last_sensed_;
  SlotOutcome outcome_{};
};

}  // namespace ajam
