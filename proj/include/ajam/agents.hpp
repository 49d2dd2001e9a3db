#pragma once

// Learners for the three decision roles: replay, exploration, double-DQN
// targets, adversarial (PGD) and interval-certified (QSR) regularizers, and
// the multi-timescale training loop.

#include "ajam/common.hpp"
#include "ajam/environment.hpp"
#include "ajam/neural.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace ajam {

enum class Role { Frequency = 0, Power = 1, Modulation = 2 };
inline constexpr std::array<Role, 3> kRoles{Role::Frequency, Role::Power, Role::Modulation};

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Frequency: return "frequency";
    case Role::Power: return "power";
    case Role::Modulation: return "modulation";
  }
  return "?";
}

enum class Algorithm { MT, PGD, NQC };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::MT: return "mt";
    case Algorithm::PGD: return "pgd";
    case Algorithm::NQC: return "nqc";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "mt") return Algorithm::MT;
  if (s == "pgd") return Algorithm::PGD;
  if (s == "nqc") return Algorithm::NQC;
  throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected mt, pgd or nqc)");
}

/// Architectural variants used by the ablation study.
enum class Variant { Full, SingleTimescale, FixedMaxPower, UnshapedModulation };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::SingleTimescale: return "single_timescale";
    case Variant::FixedMaxPower: return "fixed_max_power";
    case Variant::UnshapedModulation: return "unshaped_modulation";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::Full, Variant::SingleTimescale, Variant::FixedMaxPower, Variant::UnshapedModulation})
    if (s == variant_name(v)) return v;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

struct Hyperparameters {
  int episodes = 2000;
  double lr = 0.01;
  double lr_decay = 0.999;
  double lr_floor = 1e-4;
  double gamma = 0.3;
  int batch = 128;
  int buffer_frequency = 2000;
  int buffer_power = 3000;
  int buffer_modulation = 3000;
  int target_sync = 10;
  double explore_start = 1.0;
  double explore_end = 0.01;
  double explore_fraction = 0.6;
  int pgd_steps = 20;
  double pgd_step_frac = 1.0 / 20.0;
  double pgd_delta = -100.0;
  double compression = 0.005;
  double omega_frequency = 0.5;
  double omega_power = 0.5;
  double omega_modulation = 0.5;
  int hidden = 32;
  int depth = 3;
  // Throughput rewards are expressed in units of this many bit/s.
  double reward_unit_bps = 1e7;
  // Global gradient-norm ceiling per update; 0 disables clipping.
  double grad_clip = 30.0;

  double omega(Role r) const {
    switch (r) {
      case Role::Frequency: return omega_frequency;
      case Role::Power: return omega_power;
      case Role::Modulation: return omega_modulation;
    }
    return 1.0;
  }
  int buffer(Role r) const {
    switch (r) {
      case Role::Frequency: return buffer_frequency;
      case Role::Power: return buffer_power;
      case Role::Modulation: return buffer_modulation;
    }
    return 0;
  }

  double explore_at(int episode) const {
    const double span = explore_fraction * episodes;
    const double f = span > 0.0 ? std::min(1.0, episode / span) : 1.0;
    return explore_start + (explore_end - explore_start) * f;
  }

  void validate() const {
    if (episodes < 0) throw ConfigError("training.episodes: must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("training.lr: must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("training.lr_decay: must be in (0, 1]");
    if (!(lr_floor > 0.0)) throw ConfigError("training.lr_floor: must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("training.gamma: must be in [0, 1)");
    if (batch < 1) throw ConfigError("training.batch: must be >= 1");
    if (buffer_frequency < batch || buffer_power < batch || buffer_modulation < batch)
      throw ConfigError("training.buffer_*: capacity must be >= batch");
    if (target_sync < 1) throw ConfigError("training.target_sync: must be >= 1");
    if (explore_start < 0 || explore_start > 1 || explore_end < 0 || explore_end > 1)
      throw ConfigError("training.explore_start: exploration rates must be in [0, 1]");
    if (!(explore_fraction >= 0.0 && explore_fraction <= 1.0))
      throw ConfigError("training.explore_fraction: must be in [0, 1]");
    if (pgd_steps < 1) throw ConfigError("training.pgd_steps: must be >= 1");
    if (!(pgd_step_frac > 0.0 && pgd_step_frac <= 1.0))
      throw ConfigError("training.pgd_step_frac: must be in (0, 1]");
    if (!(pgd_delta < 0.0)) throw ConfigError("training.pgd_delta: must be < 0");
    if (!(compression >= 0.0)) throw ConfigError("training.compression: must be >= 0");
    for (double w : {omega_frequency, omega_power, omega_modulation})
      if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("training.omega_*: must be in [0, 1]");
    if (hidden < 1 || depth < 0) throw ConfigError("training.hidden: must be >= 1");
    if (!(reward_unit_bps > 0.0)) throw ConfigError("training.reward_unit_bps: must be > 0");
    if (!(grad_clip >= 0.0)) throw ConfigError("training.grad_clip: must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Replay and exploration
// ---------------------------------------------------------------------------

struct Transition {
  Vector state;
  int action = 0;
  Vector next_state;
  double reward = 0.0;
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1) : capacity_(capacity) {
    require(capacity > 0, "ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t inserted() const { return inserted_; }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
    ++inserted_;
  }

  /// Oldest first.
  const Transition& at(std::size_t i) const {
    require(i < data_.size(), "ReplayBuffer::at: index out of range");
    return data_[(head_ + i) % data_.size()];
  }

  /// Distinct storage slots chosen uniformly (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    require(n <= data_.size(), "ReplayBuffer::sample: batch larger than buffer");
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + uniform_index(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

  const Transition& slot(std::size_t storage_index) const { return data_.at(storage_index); }

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;
  std::size_t inserted_ = 0;
};

/// Lowest index among the maxima.
inline int argmax(const Eigen::Ref<const Vector>& q) {
  require(q.size() > 0, "argmax: empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = static_cast<int>(i);
  return best;
}

/// Consumes exactly one uniform draw, plus one more for the random action
/// when exploring.
inline int epsilon_greedy(const Vector& q, double explore_p, Rng& rng) {
  require(q.size() > 0, "epsilon_greedy: empty action values");
  require(explore_p >= 0.0 && explore_p <= 1.0, "epsilon_greedy: probability out of [0, 1]");
  if (uniform01(rng) < explore_p) return static_cast<int>(uniform_index(rng, static_cast<std::size_t>(q.size())));
  return argmax(q);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct Batch {
  Matrix s;       // in x B
  Matrix s_next;  // in x B
  std::vector<int> a;
  Vector r;
  std::vector<bool> terminal;

  int size() const { return static_cast<int>(a.size()); }

  static Batch from(const ReplayBuffer& buf, const std::vector<std::size_t>& idx) {
    Batch b;
    const auto n = static_cast<Eigen::Index>(idx.size());
    require(n > 0, "Batch: empty");
    const auto d = buf.slot(idx[0]).state.size();
    b.s.resize(d, n);
    b.s_next.resize(d, n);
    b.r.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Transition& t = buf.slot(idx[static_cast<std::size_t>(j)]);
      b.s.col(j) = t.state;
      b.s_next.col(j) = t.next_state;
      b.a.push_back(t.action);
      b.r[j] = t.reward;
      b.terminal.push_back(t.terminal);
    }
    return b;
  }
};

/// r + gamma * Q_tgt(s', argmax_a Q_cur(s', a)); r alone when terminal.
inline Vector ddqn_targets(const Batch& b, const QNetwork& cur, const QNetwork& tgt, double gamma) {
  const Matrix qc = cur.forward(b.s_next);
  const Matrix qt = tgt.forward(b.s_next);
  Vector y(b.size());
  for (int j = 0; j < b.size(); ++j) {
    if (b.terminal[static_cast<std::size_t>(j)] || gamma == 0.0) {
      y[j] = b.r[j];
      continue;
    }
    y[j] = b.r[j] + gamma * qt(argmax(qc.col(j)), j);
  }
  return y;
}

inline double ddqn_target(double r, const Vector& next_state, const QNetwork& cur, const QNetwork& tgt,
                          double gamma, bool terminal) {
  if (terminal || gamma == 0.0) return r;
  const Vector qc = cur.forward(next_state);
  const Vector qt = tgt.forward(next_state);
  return r + gamma * qt[argmax(qc)];
}

struct LossResult {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared TD error over the batch for fixed targets `y`.
inline LossResult td_loss(const QNetwork& cur, const Matrix& s, const std::vector<int>& a, const Vector& y,
                          Matrix* q_out = nullptr) {
  const auto n = static_cast<Eigen::Index>(a.size());
  require(n > 0 && s.cols() == n && y.size() == n, "td_loss: batch shape mismatch");
  ForwardCache cache;
  const Matrix q = cur.forward(s, &cache);
  Matrix up = Matrix::Zero(q.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int aj = a[static_cast<std::size_t>(j)];
    require(aj >= 0 && aj < q.rows(), "td_loss: action out of range");
    const double e = q(aj, j) - y[j];
    loss += e * e;
    up(aj, j) = 2.0 * e / static_cast<double>(n);
  }
  LossResult out{loss / static_cast<double>(n), cur.backward(cache, up)};
  if (q_out) *q_out = q;
  return out;
}

// -- adversarial perturbation -----------------------------------------------

/// Per-coordinate perturbation radius and physical floor (normalized units).
struct PerturbationBox {
  Vector radius;
  Vector floor;

  /// Lower and upper corners around `s`, intersected with the floor.
  IntervalBatch around(const Matrix& s) const {
    Matrix lo = s, hi = s;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      lo.col(j) = (s.col(j) - radius).cwiseMax(floor);
      hi.col(j) = s.col(j) + radius;
    }
    lo = lo.cwiseMin(s);
    return {lo, hi};
  }
  bool zero() const { return (radius.array() == 0.0).all(); }
};

inline PerturbationBox perturbation_box(const Scenario& sc, Role role, double eps_per_jammer_w) {
  const double R = sc.channel_radius_w(eps_per_jammer_w) / sc.radio.state_ref_w;
  const double fl = sc.radio.noise_w() / sc.radio.state_ref_w;
  const double none = -std::numeric_limits<double>::infinity();
  PerturbationBox b;
  switch (role) {
    case Role::Frequency:
      b.radius = Vector::Constant(sc.radio.n_channels, R);
      b.floor = Vector::Constant(sc.radio.n_channels, fl);
      break;
    case Role::Power:
      b.radius = Vector(2);
      b.radius << 0.0, R;
      b.floor = Vector(2);
      b.floor << none, fl;
      break;
    case Role::Modulation:
      b.radius = Vector(3);
      b.radius << 0.0, R, 0.0;
      b.floor = Vector(3);
      b.floor << none, fl, none;
      break;
  }
  return b;
}

struct AttackSpec {
  int steps = 20;
  double step_frac = 1.0 / 20.0;
  BallKind projection = BallKind::Box;
};

/// max_{a != a*} Q(x, a) - Q(x, a*) per column, and the maximizing runner-up.
inline Vector attack_margin(const Matrix& q, const std::vector<int>& a_star, std::vector<int>* runner = nullptr) {
  const auto n = q.cols();
  Vector m(n);
  if (runner) runner->assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int as = a_star[static_cast<std::size_t>(j)];
    double best = -std::numeric_limits<double>::infinity();
    int bi = -1;
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
      if (a == as) continue;
      if (q(a, j) > best) {
        best = q(a, j);
        bi = static_cast<int>(a);
      }
    }
    m[j] = bi < 0 ? 0.0 : best - q(as, j);
    if (runner) (*runner)[static_cast<std::size_t>(j)] = bi;
  }
  return m;
}

namespace detail {

inline void project(Matrix& x, const Matrix& s, const PerturbationBox& box, BallKind kind) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (kind == BallKind::L2) {
      Vector d = x.col(j) - s.col(j);
      for (Eigen::Index i = 0; i < d.size(); ++i)
        if (box.radius[i] == 0.0) d[i] = 0.0;
      const double R = box.radius.maxCoeff();
      const double nrm = d.norm();
      if (nrm > R && nrm > 0.0) d *= R / nrm;
      x.col(j) = s.col(j) + d;
    } else {
      x.col(j) = x.col(j).cwiseMax(s.col(j) - box.radius).cwiseMin(s.col(j) + box.radius);
    }
    // The floor never moves a point outside the ball: true states sit above it.
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (box.radius[i] > 0.0) x(i, j) = std::max(x(i, j), std::min(box.floor[i], s(i, j)));
  }
}

inline Matrix draw_in_ball(const Matrix& s, const PerturbationBox& box, BallKind kind, Rng& rng) {
  Matrix x = s;
  const auto d = s.rows();
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    if (kind == BallKind::Box) {
      for (Eigen::Index i = 0; i < d; ++i) x(i, j) += box.radius[i] * (2.0 * uniform01(rng) - 1.0);
    } else {
      Vector g(d);
      int active = 0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double u1 = uniform01(rng), u2 = uniform01(rng);
        g[i] = box.radius[i] > 0.0 ? std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2) : 0.0;
        active += box.radius[i] > 0.0;
      }
      const double nrm = g.norm();
      const double rad = box.radius.maxCoeff() * std::pow(uniform01(rng), 1.0 / std::max(active, 1));
      if (nrm > 0.0) x.col(j) += g * (rad / nrm);
    }
  }
  project(x, s, box, kind);
  return x;
}

}  // namespace detail

/// Projected sign-gradient ascent on the attack margin for each column of `s`,
/// starting from a uniform draw in the ball. Returns the best iterate seen.
inline Matrix pgd_attack(const QNetwork& net, const Matrix& s, const std::vector<int>& a_star,
                         const PerturbationBox& box, const AttackSpec& spec, Rng& rng) {
  require(spec.steps >= 1, "pgd_attack: steps must be >= 1");
  require(spec.step_frac > 0.0 && spec.step_frac <= 1.0, "pgd_attack: step fraction out of (0, 1]");
  require(box.radius.size() == s.rows(), "pgd_attack: box dimension mismatch");
  require((box.radius.array() >= 0.0).all(), "pgd_attack: negative radius");
  if (box.zero()) return s;
  Matrix x = detail::draw_in_ball(s, box, spec.projection, rng);
  Matrix best = x;
  Vector best_m = Vector::Constant(s.cols(), -std::numeric_limits<double>::infinity());
  std::vector<int> runner;
  for (int it = 0; it <= spec.steps; ++it) {
    ForwardCache c;
    const Matrix q = net.forward(x, &c);
    const Vector m = attack_margin(q, a_star, &runner);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (m[j] > best_m[j]) {
        best_m[j] = m[j];
        best.col(j) = x.col(j);
      }
    if (it == spec.steps) break;
    Matrix up = Matrix::Zero(q.rows(), q.cols());
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const int rj = runner[static_cast<std::size_t>(j)];
      if (rj < 0) continue;
      up(rj, j) = 1.0;
      up(a_star[static_cast<std::size_t>(j)], j) = -1.0;
    }
    const Matrix g = net.backward(c, up, false).dx;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        x(i, j) += spec.step_frac * box.radius[i] * (g(i, j) > 0.0 ? 1.0 : (g(i, j) < 0.0 ? -1.0 : 0.0));
    detail::project(x, s, box, spec.projection);
  }
  return best;
}

inline Vector pgd_attack(const QNetwork& net, const Vector& s, int a_star, const PerturbationBox& box,
                         const AttackSpec& spec, Rng& rng) {
  return pgd_attack(net, Matrix(s), std::vector<int>{a_star}, box, spec, rng).col(0);
}

/// max{ max_{a != a*} Q(x*, a) - Q(x*, a*), delta }.
inline double pgd_regularizer(const QNetwork& net, const Vector& worst_state, int a_star, double delta) {
  require(delta < 0.0, "pgd_regularizer: delta must be negative");
  const Vector m = attack_margin(net.forward(Matrix(worst_state)), {a_star});
  return std::max(m[0], delta);
}

/// Mean regularizer over the batch at fixed attack points, with gradients.
inline LossResult pgd_regularizer_loss(const QNetwork& net, const Matrix& x_star, const std::vector<int>& a_star,
                                       double delta) {
  ForwardCache c;
  const Matrix q = net.forward(x_star, &c);
  std::vector<int> runner;
  const Vector m = attack_margin(q, a_star, &runner);
  const double n = static_cast<double>(q.cols());
  Matrix up = Matrix::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    loss += std::max(m[j], delta);
    const int rj = runner[static_cast<std::size_t>(j)];
    if (m[j] > delta && rj >= 0) {
      up(rj, j) = 1.0 / n;
      up(a_star[static_cast<std::size_t>(j)], j) = -1.0 / n;
    }
  }
  return {loss / n, net.backward(c, up)};
}

// -- interval certification ----------------------------------------------------

/// Actions whose upper bound strictly exceeds the lower bound of a*.
inline std::vector<int> misleading_set(const Vector& low, const Vector& high, int a_star) {
  require(low.size() == high.size() && a_star >= 0 && a_star < low.size(), "misleading_set: bad arguments");
  std::vector<int> out;
  for (Eigen::Index a = 0; a < high.size(); ++a)
    if (a != a_star && high[a] > low[a_star]) out.push_back(static_cast<int>(a));
  return out;
}

inline double qsr_loss(const Vector& low, const Vector& high, int a_star) {
  double s = 0.0;
  for (int a : misleading_set(low, high, a_star)) s += std::max(high[a] - low[a_star], 0.0);
  return s;
}

/// Mean QSR over the batch on compressed interval bounds of the box around
/// each state, with gradients through compression and interval propagation.
inline LossResult qsr_batch_loss(const QNetwork& net, const Matrix& s, const std::vector<int>& a_star,
                                 const PerturbationBox& box, double compression) {
  IntervalCache ic;
  const IntervalBatch raw = net.ibp_forward(box.around(s), &ic);
  CompressionCache cc;
  const IntervalBatch iv = compress_interval(raw, compression, &cc);
  const double n = static_cast<double>(s.cols());
  Matrix ul = Matrix::Zero(iv.rows(), iv.cols()), uh = Matrix::Zero(iv.rows(), iv.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < iv.cols(); ++j) {
    const int as = a_star[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < iv.rows(); ++a) {
      if (a == as) continue;
      const double v = iv.high(a, j) - iv.low(as, j);
      if (v > 0.0) {
        loss += v;
        uh(a, j) += 1.0 / n;
        ul(as, j) -= 1.0 / n;
      }
    }
  }
  auto [gl, gh] = compress_interval_backward(cc, compression, ul, uh);
  return {loss / n, net.ibp_backward(ic, gl, gh)};
}

/// One role's full objective for a batch: omega * TD + (1 - omega) * regularizer.
struct RoleLoss {
  double td = 0.0;
  double reg = 0.0;
  double total = 0.0;
  Gradients grads;
};

inline RoleLoss role_loss(Algorithm algo, const QNetwork& cur, const QNetwork& tgt, const Batch& b,
                          const PerturbationBox& box, const Hyperparameters& hp, double omega, Rng& attack_rng) {
  require(omega >= 0.0 && omega <= 1.0, "role_loss: omega out of [0, 1]");
  const Vector y = ddqn_targets(b, cur, tgt, hp.gamma);
  Matrix q;
  LossResult td = td_loss(cur, b.s, b.a, y, &q);
  RoleLoss out;
  out.td = td.loss;
  if (algo == Algorithm::MT || omega == 1.0) {
    out.total = td.loss;
    out.grads = std::move(td.grads);
    return out;
  }
  std::vector<int> a_star(static_cast<std::size_t>(q.cols()));
  for (Eigen::Index j = 0; j < q.cols(); ++j) a_star[static_cast<std::size_t>(j)] = argmax(q.col(j));
  LossResult reg;
  if (algo == Algorithm::PGD) {
    const AttackSpec spec{hp.pgd_steps, hp.pgd_step_frac, BallKind::Box};
    const Matrix x_star = pgd_attack(cur, b.s, a_star, box, spec, attack_rng);
    reg = pgd_regularizer_loss(cur, x_star, a_star, hp.pgd_delta);
  } else {
    reg = qsr_batch_loss(cur, b.s, a_star, box, hp.compression);
  }
  out.reg = reg.loss;
  out.total = omega * td.loss + (1.0 - omega) * reg.loss;
  td.grads.scale(omega);
  reg.grads.scale(1.0 - omega);
  td.grads.add(reg.grads);
  out.grads = std::move(td.grads);
  return out;
}

// ---------------------------------------------------------------------------
// Agent bundle
// ---------------------------------------------------------------------------

struct RoleNets {
  QNetwork current;
  QNetwork target;
};

inline int role_input_dim(const Scenario& sc, Role r) {
  switch (r) {
    case Role::Frequency: return sc.radio.n_channels;
    case Role::Power: return 2;
    case Role::Modulation: return 3;
  }
  return 0;
}

inline int role_output_dim(const Scenario& sc, Role r) {
  switch (r) {
    case Role::Frequency: return sc.radio.n_channels;
    case Role::Power: return sc.radio.n_power_levels();
    case Role::Modulation: return sc.radio.n_modulations();
  }
  return 0;
}

struct AgentBundle {
  Algorithm algorithm = Algorithm::MT;
  Variant variant = Variant::Full;
  std::uint64_t seed = 0;
  std::array<RoleNets, 3> nets{};

  RoleNets& role(Role r) { return nets[static_cast<std::size_t>(r)]; }
  const RoleNets& role(Role r) const { return nets[static_cast<std::size_t>(r)]; }

  static AgentBundle initialize(const Scenario& sc, const Hyperparameters& hp, Algorithm algo, Variant variant,
                                std::uint64_t seed) {
    AgentBundle b;
    b.algorithm = algo;
    b.variant = variant;
    b.seed = seed;
    for (Role r : kRoles) {
      Rng wr = make_rng(seed, Stream::Weights, static_cast<std::uint64_t>(r));
      QNetwork net(QNetwork::standard_dims(role_input_dim(sc, r), role_output_dim(sc, r), hp.hidden, hp.depth), wr);
      b.role(r) = RoleNets{net, net};
    }
    return b;
  }

  void check_against(const Scenario& sc) const {
    for (Role r : kRoles) {
      const auto& n = role(r).current;
      if (n.input_dim() != role_input_dim(sc, r) || n.output_dim() != role_output_dim(sc, r))
        throw ConfigError(std::string("checkpoint ") + role_name(r) +
                          " network does not match the scenario dimensions");
    }
  }

  /// Directory with one network file per role and net, plus a manifest.
  void save(const std::filesystem::path& dir, const std::string& manifest_json) const {
    std::filesystem::create_directories(dir);
    for (Role r : kRoles) {
      role(r).current.save((dir / (std::string(role_name(r)) + ".current.ajqn")).string());
      role(r).target.save((dir / (std::string(role_name(r)) + ".target.ajqn")).string());
    }
    std::ofstream m(dir / "manifest.json", std::ios::binary);
    m << manifest_json;
    if (!m) throw std::runtime_error("cannot write checkpoint manifest");
  }

  static AgentBundle load(const std::filesystem::path& dir, Algorithm algo, Variant variant, std::uint64_t seed) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("missing checkpoint directory " + dir.string());
    AgentBundle b;
    b.algorithm = algo;
    b.variant = variant;
    b.seed = seed;
    for (Role r : kRoles) {
      b.role(r).current = QNetwork::load((dir / (std::string(role_name(r)) + ".current.ajqn")).string());
      b.role(r).target = QNetwork::load((dir / (std::string(role_name(r)) + ".target.ajqn")).string());
    }
    return b;
  }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpisodeLog {
  int episode = 0;
  double loss_f = 0.0, loss_p = 0.0, loss_v = 0.0;
  double throughput_bits = 0.0;
  double explore_p = 0.0;
  double lr = 0.0;
};

struct TrainingOptions {
  Algorithm algorithm = Algorithm::MT;
  Variant variant = Variant::Full;
  std::uint64_t seed = 1;
  // Per-jammer radius used by the robust regularizers; defaults to the scenario's.
  std::optional<double> train_eps_w;
  std::function<void(const EpisodeLog&)> on_episode;
};

struct TrainingResult {
  AgentBundle bundle;
  std::vector<EpisodeLog> log;
  std::array<std::size_t, 3> stored{};  // transitions stored per role
};

namespace detail {

struct Learner {
  Role role;
  ReplayBuffer buffer;
  PerturbationBox box;
  double omega;
  double loss_sum = 0.0;
  int updates = 0;
};

inline void clip(Gradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = std::sqrt(g.squared_norm());
  if (n > max_norm) g.scale(max_norm / n);
}

}  // namespace detail

/// Runs the multi-timescale decision loop for `hp.episodes` episodes on true
/// states. Per short slot the power and modulation learners store one
/// transition each and take one gradient step; per long slot the frequency
/// learner does the same. Transitions are completed one decision late so the
/// stored next state is the one the learner actually sees next.
inline TrainingResult train(const Scenario& sc, const Hyperparameters& hp, const TrainingOptions& opt) {
  sc.validate();
  hp.validate();
  const Algorithm algo = opt.algorithm;
  const Variant var = opt.variant;
  const double train_eps = opt.train_eps_w.value_or(sc.uncertainty.eps_per_jammer_w);

  TrainingResult res{AgentBundle::initialize(sc, hp, algo, var, opt.seed), {}, {}};
  AgentBundle& B = res.bundle;

  std::array<detail::Learner, 3> L{
      detail::Learner{Role::Frequency, ReplayBuffer(static_cast<std::size_t>(hp.buffer_frequency)),
                      perturbation_box(sc, Role::Frequency, train_eps), hp.omega_frequency},
      detail::Learner{Role::Power, ReplayBuffer(static_cast<std::size_t>(hp.buffer_power)),
                      perturbation_box(sc, Role::Power, train_eps), hp.omega_power},
      detail::Learner{Role::Modulation, ReplayBuffer(static_cast<std::size_t>(hp.buffer_modulation)),
                      perturbation_box(sc, Role::Modulation, train_eps), hp.omega_modulation}};

  Rng explore_rng = make_rng(opt.seed, Stream::Exploration);
  Rng replay_rng = make_rng(opt.seed, Stream::Replay);
  Rng attack_rng = make_rng(opt.seed, Stream::AttackInit);

  const bool learn_power = var != Variant::FixedMaxPower;
  const bool hold = var == Variant::SingleTimescale;
  const int max_power = sc.radio.n_power_levels() - 1;
  const double unit = hp.reward_unit_bps;

  double lr = hp.lr;
  Environment env(sc);

  auto update = [&](detail::Learner& l) {
    if (l.buffer.size() < static_cast<std::size_t>(hp.batch)) return;
    const Batch b = Batch::from(l.buffer, l.buffer.sample_indices(static_cast<std::size_t>(hp.batch), replay_rng));
    RoleNets& n = B.role(l.role);
    RoleLoss rl = role_loss(algo, n.current, n.target, b, l.box, hp, l.omega, attack_rng);
    if (!std::isfinite(rl.total) || !rl.grads.finite())
      throw TrainingError(std::string("non-finite loss in the ") + role_name(l.role) + " learner");
    detail::clip(rl.grads, hp.grad_clip);
    n.current.sgd_step(rl.grads, lr);
    if (!n.current.finite())
      throw TrainingError(std::string("diverged parameters in the ") + role_name(l.role) + " learner");
    l.loss_sum += rl.total;
    ++l.updates;
  };

  auto store = [&](detail::Learner& l, Transition t) {
    l.buffer.push(std::move(t));
    ++res.stored[static_cast<std::size_t>(l.role)];
  };

  for (int ep = 0; ep < hp.episodes; ++ep) {
    const double explore = hp.explore_at(ep);
    for (auto& l : L) {
      l.loss_sum = 0.0;
      l.updates = 0;
    }
    env.reset(derive_seed(opt.seed, Stream::Fading, static_cast<std::uint64_t>(ep)),
              derive_seed(opt.seed, Stream::Perturbation, static_cast<std::uint64_t>(ep)), 0.0);

    std::optional<Transition> pend_p, pend_v;
    const int k = sc.timescale.long_slots();
    const int l = sc.timescale.short_per_long();
    for (int T = 0; T < k; ++T) {
      const Vector s_f = env.frequency_state(Observation::True);
      const int a_f = epsilon_greedy(B.role(Role::Frequency).current.forward(s_f), explore, explore_rng);
      env.choose_channel(a_f);
      double sum_tp = 0.0, sum_rv = 0.0;
      int a_p = max_power, a_v = 0;
      Vector hold_sp, hold_sv;
      for (int t = 0; t < l; ++t) {
        const Vector s_p = env.power_state(Observation::True);
        const bool decide = !hold || t == 0;
        if (decide) {
          if (learn_power) a_p = epsilon_greedy(B.role(Role::Power).current.forward(s_p), explore, explore_rng);
        }
        const Vector s_v = env.modulation_state(Observation::True, a_p);
        if (decide) a_v = epsilon_greedy(B.role(Role::Modulation).current.forward(s_v), explore, explore_rng);

        if (decide) {
          if (pend_p) {
            pend_p->next_state = s_p;
            if (learn_power) store(L[1], std::move(*pend_p));
            pend_p.reset();
          }
          if (pend_v) {
            pend_v->next_state = s_v;
            store(L[2], std::move(*pend_v));
            pend_v.reset();
          }
          hold_sp = s_p;
          hold_sv = s_v;
        }

        const SlotOutcome& o = env.step(a_p, a_v);
        const double r_p = o.throughput_bps / unit;
        const double r_v = var == Variant::UnshapedModulation ? r_p : o.modulation_reward;
        sum_tp += r_p;
        sum_rv += r_v;

        const bool last = (t + 1 == l);
        if (!hold) {
          pend_p = Transition{s_p, a_p, Vector(), r_p, env.done()};
          pend_v = Transition{s_v, a_v, Vector(), r_v, env.done()};
        } else if (last) {
          pend_p = Transition{hold_sp, a_p, Vector(), sum_tp, env.done()};
          pend_v = Transition{hold_sv, a_v, Vector(), sum_rv, env.done()};
        }
        if (env.done() && last) {
          if (pend_p) {
            pend_p->next_state = pend_p->state;
            if (learn_power) store(L[1], std::move(*pend_p));
          }
          if (pend_v) {
            pend_v->next_state = pend_v->state;
            store(L[2], std::move(*pend_v));
          }
          pend_p.reset();
          pend_v.reset();
        }
        if (learn_power) update(L[1]);
        update(L[2]);
      }
      const Vector s_f2 = env.frequency_state(Observation::True);
      store(L[0], Transition{s_f, a_f, s_f2, sum_tp, env.done()});
      update(L[0]);
    }

    if ((ep + 1) % hp.target_sync == 0)
      for (Role r : kRoles) B.role(r).target = B.role(r).current;

    EpisodeLog row;
    row.episode = ep;
    row.loss_f = L[0].updates ? L[0].loss_sum / L[0].updates : 0.0;
    row.loss_p = L[1].updates ? L[1].loss_sum / L[1].updates : 0.0;
    row.loss_v = L[2].updates ? L[2].loss_sum / L[2].updates : 0.0;
    row.throughput_bits = env.cumulative_bits();
    row.explore_p = explore;
    row.lr = lr;
    res.log.push_back(row);
    if (opt.on_episode) opt.on_episode(row);
    lr = std::max(hp.lr_floor, lr * hp.lr_decay);
  }
  return res;
}

}  // namespace ajam
