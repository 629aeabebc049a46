#pragma once

// The learned local planner: 722 -> 256 -> 256 -> 2 fully connected network
// with ReLU hidden layers and squashed outputs, trained by mini-batch
// regression on (v, w).

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "hlsd/exploration.hpp"
#include "hlsd/hallucination.hpp"
#include "hlsd/rng.hpp"

namespace hlsd {

inline constexpr int kGoalFeatures = 2;

// 720 normalized ranges followed by the goal in the c_c frame.
inline std::vector<double> encode_input(const std::vector<double>& scan, const Pose& c_c, const Pose& c_g,
                                        double max_range = 1.0) {
  std::vector<double> x(scan.size() + kGoalFeatures);
  for (std::size_t i = 0; i < scan.size(); ++i) x[i] = std::clamp(scan[i], 0.0, max_range) / max_range;
  const double dx = c_g.x - c_c.x, dy = c_g.y - c_c.y;
  const double c = std::cos(c_c.psi), s = std::sin(c_c.psi);
  x[scan.size()] = c * dx + s * dy;
  x[scan.size() + 1] = -s * dx + c * dy;
  return x;
}

struct OutputScale {
  double v_max = 1.0;
  double w_max = 1.57;
};

template <class Scalar>
struct Mlp {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::array<Mat, 3> W;
  std::array<Vec, 3> b;
  OutputScale scale;

  Mlp() = default;
  Mlp(int in, int hidden, int out = 2) {
    const int dims[4] = {in, hidden, hidden, out};
    for (int l = 0; l < 3; ++l) {
      W[l] = Mat::Zero(dims[l + 1], dims[l]);
      b[l] = Vec::Zero(dims[l + 1]);
    }
  }

  int input_dim() const { return static_cast<int>(W[0].cols()); }
  int hidden_dim() const { return static_cast<int>(W[0].rows()); }

  // Uniform in +-1/sqrt(fan_in).
  static Mlp init(int in, int hidden, std::uint64_t seed) {
    Mlp m(in, hidden);
    Rng rng(derive_seed(seed, 0x1417));
    for (int l = 0; l < 3; ++l) {
      const double k = 1.0 / std::sqrt(static_cast<double>(m.W[l].cols()));
      for (Eigen::Index j = 0; j < m.W[l].cols(); ++j)
        for (Eigen::Index i = 0; i < m.W[l].rows(); ++i) m.W[l](i, j) = static_cast<Scalar>(rng.uniform(-k, k));
      for (Eigen::Index i = 0; i < m.b[l].size(); ++i) m.b[l](i) = static_cast<Scalar>(rng.uniform(-k, k));
    }
    return m;
  }

  template <class Other>
  Mlp<Other> cast() const {
    Mlp<Other> m;
    for (int l = 0; l < 3; ++l) {
      m.W[l] = W[l].template cast<Other>();
      m.b[l] = b[l].template cast<Other>();
    }
    m.scale = scale;
    return m;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < 3; ++l) n += W[l].size() + b[l].size();
    return n;
  }

  // Flat views in the serialization order: W0, b0, W1, b1, W2, b2; matrices
  // row-major.
  Scalar& param(std::size_t k) {
    for (int l = 0; l < 3; ++l) {
      const auto nw = static_cast<std::size_t>(W[l].size());
      if (k < nw) return W[l](static_cast<Eigen::Index>(k / W[l].cols()), static_cast<Eigen::Index>(k % W[l].cols()));
      k -= nw;
      const auto nb = static_cast<std::size_t>(b[l].size());
      if (k < nb) return b[l](static_cast<Eigen::Index>(k));
      k -= nb;
    }
    throw std::out_of_range("Mlp::param");
  }
  Scalar param(std::size_t k) const { return const_cast<Mlp*>(this)->param(k); }

  bool finite() const {
    for (int l = 0; l < 3; ++l)
      if (!W[l].allFinite() || !b[l].allFinite()) return false;
    return true;
  }

  // Raw (pre-squash) outputs for a column batch.
  Mat raw(const Mat& X) const {
    Mat h = (W[0] * X).colwise() + b[0];
    h = h.cwiseMax(Scalar(0));
    Mat h2 = (W[1] * h).colwise() + b[1];
    h2 = h2.cwiseMax(Scalar(0));
    return (W[2] * h2).colwise() + b[2];
  }

  Action squash(Scalar o1, Scalar o2) const {
    const double v = scale.v_max / (1.0 + std::exp(-static_cast<double>(o1)));
    const double w = scale.w_max * std::tanh(static_cast<double>(o2));
    return {v, w};
  }

  Action forward(const std::vector<double>& x) const {
    if (static_cast<Eigen::Index>(x.size()) != W[0].cols()) throw std::invalid_argument("Mlp::forward: input size");
    Mat X(W[0].cols(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = static_cast<Scalar>(x[i]);
    const Mat o = raw(X);
    return squash(o(0, 0), o(1, 0));
  }
};

template <class Scalar>
struct Gradients {
  std::array<typename Mlp<Scalar>::Mat, 3> W;
  std::array<typename Mlp<Scalar>::Vec, 3> b;
};

// Mean squared error over the batch and both outputs, with its gradient.
// Y holds the (v, w) labels column-wise.
template <class Scalar>
double loss_and_gradient(const Mlp<Scalar>& m, const typename Mlp<Scalar>::Mat& X,
                         const typename Mlp<Scalar>::Mat& Y, Gradients<Scalar>* g) {
  using Mat = typename Mlp<Scalar>::Mat;
  const Eigen::Index B = X.cols();
  Mat z1 = (m.W[0] * X).colwise() + m.b[0];
  Mat h1 = z1.cwiseMax(Scalar(0));
  Mat z2 = (m.W[1] * h1).colwise() + m.b[1];
  Mat h2 = z2.cwiseMax(Scalar(0));
  Mat o = (m.W[2] * h2).colwise() + m.b[2];

  Mat d(2, B);
  double loss = 0.0;
  const double inv = 1.0 / (2.0 * static_cast<double>(B));
  for (Eigen::Index j = 0; j < B; ++j) {
    const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(o(0, j))));
    const double t = std::tanh(static_cast<double>(o(1, j)));
    const double ev = m.scale.v_max * s - static_cast<double>(Y(0, j));
    const double ew = m.scale.w_max * t - static_cast<double>(Y(1, j));
    loss += (ev * ev + ew * ew) * inv;
    d(0, j) = static_cast<Scalar>(2.0 * inv * ev * m.scale.v_max * s * (1.0 - s));
    d(1, j) = static_cast<Scalar>(2.0 * inv * ew * m.scale.w_max * (1.0 - t * t));
  }
  if (!g) return loss;

  g->W[2] = d * h2.transpose();
  g->b[2] = d.rowwise().sum();
  Mat d2 = (m.W[2].transpose() * d).cwiseProduct((z2.array() > Scalar(0)).template cast<Scalar>().matrix());
  g->W[1] = d2 * h1.transpose();
  g->b[1] = d2.rowwise().sum();
  Mat d1 = (m.W[1].transpose() * d2).cwiseProduct((z1.array() > Scalar(0)).template cast<Scalar>().matrix());
  g->W[0] = d1 * X.transpose();
  g->b[0] = d1.rowwise().sum();
  return loss;
}

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences (step h) on a random fraction of the coordinates.
inline GradientCheckResult gradient_check(const Mlp<double>& params, const std::vector<double>& input, Action label,
                                          std::uint64_t seed = 1, double fraction = 0.01, double h = 1e-5) {
  using Mat = Mlp<double>::Mat;
  Mat X(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = input[i];
  Mat Y(2, 1);
  Y << label.v, label.w;
  Gradients<double> g;
  loss_and_gradient(params, X, Y, &g);
  Mlp<double> probe = params;
  Mlp<double> flat_grad = params;
  for (int l = 0; l < 3; ++l) {
    flat_grad.W[l] = g.W[l];
    flat_grad.b[l] = g.b[l];
  }
  Rng rng(derive_seed(seed, 0x6c));
  GradientCheckResult r;
  const std::size_t n = params.parameter_count();
  for (std::size_t k = 0; k < n; ++k) {
    if (!rng.bernoulli(fraction)) continue;
    const double orig = probe.param(k);
    probe.param(k) = orig + h;
    const double lp = loss_and_gradient<double>(probe, X, Y, nullptr);
    probe.param(k) = orig - h;
    const double lm = loss_and_gradient<double>(probe, X, Y, nullptr);
    probe.param(k) = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = flat_grad.param(k);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
    r.max_rel_error = std::max(r.max_rel_error, std::abs(numeric - analytic) / denom);
    ++r.checked;
  }
  return r;
}

enum class Optimizer { sgd_momentum, adam };

struct TrainConfig {
  Optimizer optimizer = Optimizer::sgd_momentum;
  double lr = 1e-3;
  int halve_every = 20;  // epochs
  double momentum = 0.9;
  double beta2 = 0.999;  // adam only
  int batch = 128;
  int epochs = 60;
  int hidden = 256;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lr > 0.0) || batch < 1 || epochs < 1 || hidden < 1 || halve_every < 1)
      throw std::invalid_argument("TrainConfig: hyperparameters must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  }
};

struct Dataset {
  Eigen::MatrixXf X;  // inputs, one column per sample
  Eigen::MatrixXf Y;  // (v, w) labels
  Eigen::Index size() const { return X.cols(); }
};

inline Dataset make_dataset(const std::vector<TrainDatum>& data, double max_range = 1.0) {
  if (data.empty()) throw std::invalid_argument("make_dataset: empty data");
  const auto in = static_cast<Eigen::Index>(data.front().scan.size() + kGoalFeatures);
  Dataset ds;
  ds.X.resize(in, static_cast<Eigen::Index>(data.size()));
  ds.Y.resize(2, static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto x = encode_input(data[j].scan, data[j].c_c, data[j].c_g, max_range);
    if (static_cast<Eigen::Index>(x.size()) != in) throw std::invalid_argument("make_dataset: ragged scans");
    const auto c = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < in; ++i) ds.X(i, c) = static_cast<float>(x[static_cast<std::size_t>(i)]);
    const Action a = data[j].plan.empty() ? Action{} : data[j].plan.front();
    ds.Y(0, c) = static_cast<float>(a.v);
    ds.Y(1, c) = static_cast<float>(a.w);
  }
  return ds;
}

struct TrainResult {
  Mlp<float> model;
  double initial_loss = 0.0;    // full-data loss before the first update
  std::vector<double> losses;   // full-data loss after each epoch
};

template <class Scalar>
double dataset_loss(const Mlp<Scalar>& m, const Dataset& ds, Eigen::Index chunk = 4096) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < ds.size(); c += chunk) {
    const Eigen::Index n = std::min(chunk, ds.size() - c);
    const double l = loss_and_gradient<Scalar>(m, ds.X.middleCols(c, n).template cast<Scalar>(),
                                               ds.Y.middleCols(c, n).template cast<Scalar>(), nullptr);
    total += l * static_cast<double>(n);
  }
  return total / static_cast<double>(ds.size());
}

inline TrainResult train(const Dataset& ds, const TrainConfig& cfg, const OutputScale& scale = {}) {
  cfg.validate();
  if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
  TrainResult r;
  r.model = Mlp<float>::init(static_cast<int>(ds.X.rows()), cfg.hidden, cfg.seed);
  r.model.scale = scale;
  Mlp<float>& m = r.model;
  r.initial_loss = dataset_loss(m, ds);

  std::array<Eigen::MatrixXf, 3> vW, sW;
  std::array<Eigen::VectorXf, 3> vb, sb;
  for (int l = 0; l < 3; ++l) {
    vW[l] = Eigen::MatrixXf::Zero(m.W[l].rows(), m.W[l].cols());
    vb[l] = Eigen::VectorXf::Zero(m.b[l].size());
    sW[l] = vW[l];
    sb[l] = vb[l];
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(derive_seed(cfg.seed, 0x5b));
  Eigen::MatrixXf Xb(ds.X.rows(), cfg.batch), Yb(2, cfg.batch);
  Gradients<float> g;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = static_cast<float>(cfg.lr * std::pow(0.5, epoch / cfg.halve_every));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const auto n = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.batch, order.size() - start));
      if (Xb.cols() != n) {
        Xb.resize(ds.X.rows(), n);
        Yb.resize(2, n);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        Xb.col(j) = ds.X.col(order[start + static_cast<std::size_t>(j)]);
        Yb.col(j) = ds.Y.col(order[start + static_cast<std::size_t>(j)]);
      }
      const double l = loss_and_gradient<float>(m, Xb, Yb, &g);
      if (!std::isfinite(l)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << " step " << step;
        throw std::runtime_error(os.str());
      }
      ++step;
      if (cfg.optimizer == Optimizer::sgd_momentum) {
        const float mu = static_cast<float>(cfg.momentum);
        for (int k = 0; k < 3; ++k) {
          vW[k] = mu * vW[k] + g.W[k];
          vb[k] = mu * vb[k] + g.b[k];
          m.W[k] -= lr * vW[k];
          m.b[k] -= lr * vb[k];
        }
      } else {
        const float b1 = static_cast<float>(cfg.momentum), b2 = static_cast<float>(cfg.beta2);
        const float c1 = 1.0f - static_cast<float>(std::pow(cfg.momentum, static_cast<double>(step)));
        const float c2 = 1.0f - static_cast<float>(std::pow(cfg.beta2, static_cast<double>(step)));
        const float a = lr * std::sqrt(c2) / c1;
        for (int k = 0; k < 3; ++k) {
          vW[k] = b1 * vW[k] + (1.0f - b1) * g.W[k];
          sW[k] = b2 * sW[k] + (1.0f - b2) * g.W[k].cwiseAbs2();
          vb[k] = b1 * vb[k] + (1.0f - b1) * g.b[k];
          sb[k] = b2 * sb[k] + (1.0f - b2) * g.b[k].cwiseAbs2();
          m.W[k].array() -= a * vW[k].array() / (sW[k].array().sqrt() + 1e-8f);
          m.b[k].array() -= a * vb[k].array() / (sb[k].array().sqrt() + 1e-8f);
        }
      }
    }
    const double el = dataset_loss(m, ds);
    if (!std::isfinite(el)) throw std::runtime_error("train: non-finite loss after epoch " + std::to_string(epoch));
    r.losses.push_back(el);
  }
  return r;
}

namespace detail {

inline std::uint64_t fnv1a(const unsigned char* p, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <class T>
void put_le(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("model file: truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr char kModelMagic[8] = {'H', 'L', 'S', 'D', 'M', 'L', 'P', '1'};

// Magic, scalar width, layer dims, output scale, row-major weights and biases
// per layer, then an FNV-1a checksum of everything before it.
template <class Scalar>
void save_model(std::ostream& os, const Mlp<Scalar>& m) {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  std::string buf(kModelMagic, sizeof kModelMagic);
  detail::put_le<std::uint32_t>(buf, sizeof(Scalar));
  detail::put_le<std::uint32_t>(buf, 3);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.W[0].cols()));
  for (int l = 0; l < 3; ++l) detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.W[l].rows()));
  detail::put_le<double>(buf, m.scale.v_max);
  detail::put_le<double>(buf, m.scale.w_max);
  for (std::size_t k = 0; k < m.parameter_count(); ++k) detail::put_le<Scalar>(buf, m.param(k));
  const std::uint64_t sum = detail::fnv1a(reinterpret_cast<const unsigned char*>(buf.data()), buf.size());
  detail::put_le<std::uint64_t>(buf, sum);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("save_model: write failed");
}

template <class Scalar>
Mlp<Scalar> load_model(std::istream& is) {
  const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kModelMagic + 8 || std::memcmp(buf.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw std::runtime_error("load_model: bad magic");
  const std::size_t body = buf.size() - 8;
  std::size_t pos = body;
  const auto stored = detail::get_le<std::uint64_t>(buf, pos);
  if (stored != detail::fnv1a(reinterpret_cast<const unsigned char*>(buf.data()), body))
    throw std::runtime_error("load_model: checksum mismatch");
  pos = sizeof kModelMagic;
  if (detail::get_le<std::uint32_t>(buf, pos) != sizeof(Scalar)) throw std::runtime_error("load_model: scalar width");
  if (detail::get_le<std::uint32_t>(buf, pos) != 3) throw std::runtime_error("load_model: layer count");
  std::uint32_t dims[4];
  for (auto& d : dims) d = detail::get_le<std::uint32_t>(buf, pos);
  if (dims[1] != dims[2]) throw std::runtime_error("load_model: hidden layers differ");
  Mlp<Scalar> m(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[3]));
  m.scale.v_max = detail::get_le<double>(buf, pos);
  m.scale.w_max = detail::get_le<double>(buf, pos);
  for (std::size_t k = 0; k < m.parameter_count(); ++k) m.param(k) = detail::get_le<Scalar>(buf, pos);
  if (pos != body) throw std::runtime_error("load_model: size mismatch");
  if (!m.finite()) throw std::runtime_error("load_model: non-finite parameters");
  return m;
}

}  // namespace hlsd
