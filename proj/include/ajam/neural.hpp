#pragma once

// Small fully connected Q-network: point and interval forward passes, reverse
// mode gradients for both, plain SGD, the interval compression head, and a
// flat binary checkpoint format.

#include "ajam/common.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace ajam {

/// Column-batched box: column j is the box [low.col(j), high.col(j)].
struct IntervalBatch {
  Matrix low;
  Matrix high;

  IntervalBatch() = default;
  IntervalBatch(Matrix lo, Matrix hi) : low(std::move(lo)), high(std::move(hi)) {
    require(low.rows() == high.rows() && low.cols() == high.cols(), "IntervalBatch: shape mismatch");
  }
  static IntervalBatch point(const Matrix& x) { return {x, x}; }
  Eigen::Index rows() const { return low.rows(); }
  Eigen::Index cols() const { return low.cols(); }
  bool valid() const { return (low.array() <= high.array()).all(); }
};

struct Layer {
  Matrix W;  // out x in
  Vector b;  // out
};

struct Gradients {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  Matrix dx;  // input gradient, one column per sample

  double squared_norm() const {
    double s = 0.0;
    for (const auto& m : dW) s += m.squaredNorm();
    for (const auto& v : db) s += v.squaredNorm();
    return s;
  }
  bool finite() const {
    for (const auto& m : dW)
      if (!m.allFinite()) return false;
    for (const auto& v : db)
      if (!v.allFinite()) return false;
    return true;
  }
  void scale(double k) {
    for (auto& m : dW) m *= k;
    for (auto& v : db) v *= k;
  }
  void add(const Gradients& o) {
    require(o.dW.size() == dW.size(), "Gradients::add: layer count mismatch");
    for (std::size_t i = 0; i < dW.size(); ++i) {
      dW[i] += o.dW[i];
      db[i] += o.db[i];
    }
  }
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to layer i (post-activation of i-1)
  std::vector<Matrix> pre;     // pre-activation of layer i
  Matrix out;
};

struct IntervalCache {
  std::vector<Matrix> center, radius;  // input box of layer i in center/radius form
  std::vector<Matrix> pre_low, pre_high;
  IntervalBatch out;
};

class QNetwork {
 public:
  QNetwork() = default;

  /// Uniform Glorot initialization with the given layer widths.
  QNetwork(std::vector<int> dims, Rng& rng) : dims_(std::move(dims)) {
    require(dims_.size() >= 2, "QNetwork: need at least input and output sizes");
    for (int d : dims_) require(d >= 1, "QNetwork: layer width must be >= 1");
    for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
      const int in = dims_[i], out = dims_[i + 1];
      const double lim = std::sqrt(6.0 / (in + out));
      Layer L{Matrix(out, in), Vector::Zero(out)};
      for (int c = 0; c < in; ++c)
        for (int r = 0; r < out; ++r) L.W(r, c) = lim * (2.0 * uniform01(rng) - 1.0);
      layers_.push_back(std::move(L));
    }
  }

  /// Network with explicit parameters.
  explicit QNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "QNetwork: no layers");
    dims_.push_back(static_cast<int>(layers_.front().W.cols()));
    for (const auto& L : layers_) {
      require(L.W.cols() == dims_.back(), "QNetwork: inconsistent layer dimensions");
      require(L.b.size() == L.W.rows(), "QNetwork: bias size mismatch");
      dims_.push_back(static_cast<int>(L.W.rows()));
    }
  }

  static std::vector<int> standard_dims(int in, int out, int hidden = 32, int depth = 3) {
    std::vector<int> d{in};
    for (int i = 0; i < depth; ++i) d.push_back(hidden);
    d.push_back(out);
    return d;
  }

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }

  bool operator==(const QNetwork& o) const {
    if (dims_ != o.dims_) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].W != o.layers_[i].W || layers_[i].b != o.layers_[i].b) return false;
    return true;
  }

  // -- point path -----------------------------------------------------------

  Matrix forward(const Matrix& X, ForwardCache* cache = nullptr) const {
    require(X.rows() == input_dim(), "forward: input dimension mismatch");
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    Matrix A = X;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix Z = affine(i, A);
      if (cache) {
        cache->inputs.push_back(A);
        cache->pre.push_back(Z);
      }
      A = (i + 1 < layers_.size()) ? Matrix(Z.cwiseMax(0.0)) : std::move(Z);
    }
    if (cache) cache->out = A;
    return A;
  }

  Vector forward(const Vector& x) const { return forward(Matrix(x)).col(0); }

  /// Reverse pass; `upstream` is dL/dQ with one column per sample. The
  /// parameter gradients are summed over columns.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream, bool with_params = true) const {
    require(cache.pre.size() == layers_.size(), "backward: cache does not match network");
    require(upstream.rows() == output_dim() && upstream.cols() == cache.out.cols(),
            "backward: upstream shape mismatch");
    Gradients g;
    g.dW.resize(layers_.size());
    g.db.resize(layers_.size());
    Matrix delta = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (k + 1 < layers_.size()) delta = delta.cwiseProduct(relu_mask(cache.pre[k]));
      if (with_params) {
        g.dW[k] = delta * cache.inputs[k].transpose();
        g.db[k] = delta.rowwise().sum();
      }
      delta = layers_[k].W.transpose() * delta;
    }
    g.dx = std::move(delta);
    return g;
  }

  /// dL/dx only; parameters are untouched.
  Matrix input_gradient(const Matrix& X, const Matrix& upstream) const {
    ForwardCache c;
    forward(X, &c);
    return backward(c, upstream, false).dx;
  }

  // -- interval path --------------------------------------------------------

  /// Sound interval bounds. Each affine layer maps center c and radius r to
  /// W c + b and |W| r, which equals the sign-split form
  /// [W+ low + W- high + b, W+ high + W- low + b].
  /// Widens rad so that the box also covers floating-point rounding in the
  /// point forward pass. Columns with zero input radius are left untouched.
  void add_rounding_slack(std::size_t i, const Matrix& c, const Matrix& r, Matrix& rad) const {
    const Layer& L = layers_[i];
    const double gamma = 4.0 * static_cast<double>(L.W.cols() + 2) * std::numeric_limits<double>::epsilon();
    const Matrix absW = L.W.cwiseAbs();
    const Vector absb = L.b.cwiseAbs();
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if ((r.col(j).array() == 0.0).all()) continue;
      const Vector mag = absW * (c.col(j).cwiseAbs() + r.col(j)) + absb;
      rad.col(j) += gamma * mag;
    }
  }

  IntervalBatch ibp_forward(const IntervalBatch& box, IntervalCache* cache = nullptr) const {
    require(box.rows() == input_dim(), "ibp_forward: input dimension mismatch");
    require(box.valid(), "ibp_forward: low > high");
    if (cache) {
      cache->center.clear();
      cache->radius.clear();
      cache->pre_low.clear();
      cache->pre_high.clear();
    }
    Matrix lo = box.low, hi = box.high;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix c = (lo + hi) * 0.5;
      Matrix r = (hi - lo) * 0.5;
      Matrix mu = affine(i, c);
      Matrix rad = layers_[i].W.cwiseAbs() * r;
      add_rounding_slack(i, c, r, rad);
      Matrix zl = mu - rad, zh = mu + rad;
      if (cache) {
        cache->center.push_back(std::move(c));
        cache->radius.push_back(std::move(r));
        cache->pre_low.push_back(zl);
        cache->pre_high.push_back(zh);
      }
      if (i + 1 < layers_.size()) {
        lo = zl.cwiseMax(0.0);
        hi = zh.cwiseMax(0.0);
      } else {
        lo = std::move(zl);
        hi = std::move(zh);
      }
    }
    IntervalBatch out(std::move(lo), std::move(hi));
    if (cache) cache->out = out;
    return out;
  }

  /// Reverse pass through ibp_forward given dL/dlow and dL/dhigh of the output.
  /// dx holds dL/dlow and dL/dhigh of the input box stacked as [low; high].
  Gradients ibp_backward(const IntervalCache& cache, const Matrix& up_low, const Matrix& up_high) const {
    require(cache.center.size() == layers_.size(), "ibp_backward: cache does not match network");
    require(up_low.rows() == output_dim() && up_high.rows() == output_dim() &&
                up_low.cols() == cache.out.cols() && up_high.cols() == cache.out.cols(),
            "ibp_backward: upstream shape mismatch");
    Gradients g;
    g.dW.resize(layers_.size());
    g.db.resize(layers_.size());
    Matrix gl = up_low, gh = up_high;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (k + 1 < layers_.size()) {
        gl = gl.cwiseProduct(relu_mask(cache.pre_low[k]));
        gh = gh.cwiseProduct(relu_mask(cache.pre_high[k]));
      }
      const Matrix dmu = gl + gh;
      const Matrix drad = gh - gl;
      const Matrix& W = layers_[k].W;
      g.dW[k] = dmu * cache.center[k].transpose();
      g.dW[k] += (drad * cache.radius[k].transpose()).cwiseProduct(sign(W));
      g.db[k] = dmu.rowwise().sum();
      const Matrix dc = W.transpose() * dmu;
      const Matrix dr = W.cwiseAbs().transpose() * drad;
      gl = (dc - dr) * 0.5;
      gh = (dc + dr) * 0.5;
    }
    g.dx.resize(gl.rows() * 2, gl.cols());
    g.dx.topRows(gl.rows()) = gl;
    g.dx.bottomRows(gh.rows()) = gh;
    return g;
  }

  // -- optimisation ---------------------------------------------------------

  void sgd_step(const Gradients& g, double lr) {
    if (!(lr > 0.0)) throw TrainingError("sgd_step: learning rate must be positive");
    require(g.dW.size() == layers_.size(), "sgd_step: gradient layer count mismatch");
    if (!g.finite()) throw TrainingError("sgd_step: non-finite gradient");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      require(g.dW[i].rows() == layers_[i].W.rows() && g.dW[i].cols() == layers_[i].W.cols(),
              "sgd_step: gradient shape mismatch");
      layers_[i].W -= lr * g.dW[i];
      layers_[i].b -= lr * g.db[i];
    }
  }

  bool finite() const {
    for (const auto& L : layers_)
      if (!L.W.allFinite() || !L.b.allFinite()) return false;
    return true;
  }

  // -- checkpoint -----------------------------------------------------------

  void write(std::ostream& os) const {
    os.write("AJQN", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(layers_.size()));
    for (int d : dims_) put_u32(os, static_cast<std::uint32_t>(d));
    for (const auto& L : layers_) {
      for (Eigen::Index r = 0; r < L.W.rows(); ++r)
        for (Eigen::Index c = 0; c < L.W.cols(); ++c) put_f64(os, L.W(r, c));
      for (Eigen::Index r = 0; r < L.b.size(); ++r) put_f64(os, L.b[r]);
    }
    if (!os) throw std::runtime_error("QNetwork::write: stream failure");
  }

  static QNetwork read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "AJQN", 4) != 0) throw std::runtime_error("QNetwork::read: bad magic");
    if (get_u32(is) != 1) throw std::runtime_error("QNetwork::read: unsupported version");
    const std::uint32_t n = get_u32(is);
    if (n == 0 || n > 64) throw std::runtime_error("QNetwork::read: implausible layer count");
    std::vector<int> dims(n + 1);
    for (auto& d : dims) {
      d = static_cast<int>(get_u32(is));
      if (d < 1 || d > 1 << 16) throw std::runtime_error("QNetwork::read: implausible layer width");
    }
    std::vector<Layer> layers;
    for (std::uint32_t i = 0; i < n; ++i) {
      Layer L{Matrix(dims[i + 1], dims[i]), Vector(dims[i + 1])};
      for (Eigen::Index r = 0; r < L.W.rows(); ++r)
        for (Eigen::Index c = 0; c < L.W.cols(); ++c) L.W(r, c) = get_f64(is);
      for (Eigen::Index r = 0; r < L.b.size(); ++r) L.b[r] = get_f64(is);
      layers.push_back(std::move(L));
    }
    return QNetwork(std::move(layers));
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write(f);
  }

  static QNetwork load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path);
    QNetwork net = read(f);
    if (f.peek() != std::char_traits<char>::eof()) throw std::runtime_error("QNetwork::load: trailing bytes in " + path);
    return net;
  }

 private:
  Matrix affine(std::size_t i, const Matrix& A) const {
    Matrix Z = layers_[i].W * A;
    Z.colwise() += layers_[i].b;
    return Z;
  }

  static Matrix relu_mask(const Matrix& Z) { return (Z.array() > 0.0).cast<double>().matrix(); }

  static Matrix sign(const Matrix& W) {
    return W.unaryExpr([](double w) { return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0); });
  }

  static void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
  static void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
  static std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("QNetwork::read: truncated");
    return v;
  }
  static double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw std::runtime_error("QNetwork::read: truncated");
    return v;
  }

  std::vector<int> dims_;
  std::vector<Layer> layers_;
};

// ---------------------------------------------------------------------------
// Compression head
// ---------------------------------------------------------------------------

inline double compress(double q, double c, double coeff) {
  if (coeff < 0.0) throw DomainError("compress: negative coefficient");
  const double d = q - c;
  return c + d * std::exp(-coeff * std::abs(d));
}

struct CompressionCache {
  Matrix radius;
};

/// Contracts every interval toward its midpoint. With c the midpoint both
/// endpoints sit at distance r from c, so the result is c -/+ r e^{-k r}.
inline IntervalBatch compress_interval(const IntervalBatch& iv, double coeff, CompressionCache* cache = nullptr) {
  if (coeff < 0.0) throw DomainError("compress_interval: negative coefficient");
  require(iv.valid(), "compress_interval: low > high");
  const Matrix c = (iv.low + iv.high) * 0.5;
  IntervalBatch out(iv.low, iv.high);
  for (Eigen::Index j = 0; j < iv.cols(); ++j)
    for (Eigen::Index i = 0; i < iv.rows(); ++i) {
      const double lo = compress(iv.low(i, j), c(i, j), coeff);
      const double hi = compress(iv.high(i, j), c(i, j), coeff);
      out.low(i, j) = std::min(lo, hi);
      out.high(i, j) = std::max(lo, hi);
    }
  if (cache) cache->radius = (iv.high - iv.low) * 0.5;
  return out;
}

/// Maps (dL/dlow', dL/dhigh') of the compressed interval back to the raw one.
inline std::pair<Matrix, Matrix> compress_interval_backward(const CompressionCache& cache, double coeff,
                                                            const Matrix& up_low, const Matrix& up_high) {
  const Matrix& r = cache.radius;
  const Matrix fprime = r.unaryExpr([coeff](double x) { return std::exp(-coeff * x) * (1.0 - coeff * x); });
  const Matrix dc = up_low + up_high;
  const Matrix dr = (up_high - up_low).cwiseProduct(fprime);
  return {(dc - dr) * 0.5, (dc + dr) * 0.5};
}

}  // namespace ajam
