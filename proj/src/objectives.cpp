#include "metagrad/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "metagrad/errors.hpp"

namespace metagrad {

double default_fd_step(const Vector& phi) { return 1e-5 * (1.0 + norm(phi)); }

Vector hvp_finite_difference(const TaskObjective& obj, const Vector& phi, const Vector& v,
                             double eps) {
  require(eps > 0.0, "hvp_finite_difference: eps must be positive");
  require(v.size() == phi.size(), "hvp_finite_difference: direction dimension mismatch");
  const double v_norm = norm(v);
  require(std::isfinite(v_norm) && v_norm >= std::numeric_limits<double>::min(),
          "hvp_finite_difference: direction must be finite and nonzero");
  const Vector u = (1.0 / v_norm) * v;
  Vector plus = obj.gradient(phi + eps * u);
  const Vector minus = obj.gradient(phi - eps * u);
  plus -= minus;
  return (v_norm / (2.0 * eps)) * std::move(plus);
}

Vector hvp_finite_difference(const TaskObjective& obj, const Vector& phi, const Vector& v) {
  return hvp_finite_difference(obj, phi, v, default_fd_step(phi));
}

// ---------------------------------------------------------------------------------------------

QuadraticObjective::QuadraticObjective(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  require(a_.rows() == a_.cols() && a_.rows() == b_.size(),
          "QuadraticObjective: A must be square and match b");
  require(a_.is_symmetric(), "QuadraticObjective: A must be symmetric");
  const auto eig = symmetric_eigenvalues(a_);
  smoothness_ = eig.empty() ? 0.0 : std::max(std::abs(eig.front()), std::abs(eig.back()));
}

double QuadraticObjective::value(const Vector& phi) const {
  return 0.5 * dot(phi, matvec(a_, phi)) + dot(b_, phi);
}

Vector QuadraticObjective::gradient(const Vector& phi) const { return matvec(a_, phi) + b_; }

Vector QuadraticObjective::hvp(const Vector& /*phi*/, const Vector& v) const {
  return matvec(a_, v);
}

std::optional<Matrix> QuadraticObjective::full_hessian(const Vector& /*phi*/) const { return a_; }

// ---------------------------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LogisticObjective::LogisticObjective(Matrix x, std::vector<int> labels)
    : x_(std::move(x)), labels_(std::move(labels)) {
  require(x_.cols() == labels_.size() && !labels_.empty(),
          "LogisticObjective: need one label per column of X");
  for (int y : labels_) require(y == 0 || y == 1, "LogisticObjective: labels must be 0 or 1");
  const auto eig = symmetric_eigenvalues(matmul(x_, x_.transpose()));
  smoothness_ = 0.25 * eig.back() / static_cast<double>(labels_.size());
}

Vector LogisticObjective::margins(const Vector& phi) const {
  return matvec(x_.transpose(), phi);
}

double LogisticObjective::value(const Vector& phi) const {
  const Vector z = margins(phi);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += softplus(z[i]) - labels_[i] * z[i];
  return sum / static_cast<double>(z.size());
}

Vector LogisticObjective::gradient(const Vector& phi) const {
  Vector r = margins(phi);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]) - labels_[i];
  return (1.0 / static_cast<double>(r.size())) * matvec(x_, r);
}

Vector LogisticObjective::hvp(const Vector& phi, const Vector& v) const {
  const Vector z = margins(phi);
  Vector w = matvec(x_.transpose(), v);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double s = sigmoid(z[i]);
    w[i] *= s * (1.0 - s);
  }
  return (1.0 / static_cast<double>(w.size())) * matvec(x_, w);
}

std::optional<Matrix> LogisticObjective::full_hessian(const Vector& phi) const {
  const Vector z = margins(phi);
  const std::size_t d = x_.rows();
  const std::size_t n = x_.cols();
  Matrix h(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigmoid(z[i]);
    const double weight = s * (1.0 - s) / static_cast<double>(n);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) h(r, c) += weight * x_(r, i) * x_(c, i);
  }
  return h;
}

// ---------------------------------------------------------------------------------------------

std::size_t MlpShape::parameter_count() const {
  require(layers.size() >= 2, "MlpShape: need at least input and output layers");
  std::size_t count = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) count += layers[l] * layers[l - 1] + layers[l];
  return count;
}

Vector MlpShape::initialize(unsigned long long seed) const {
  Vector params(parameter_count());
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const std::size_t fan_in = layers[l - 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    // Weights then biases, matching the packing order.
    for (std::size_t i = 0; i < layers[l] * (fan_in + 1); ++i) params[offset++] = uniform(rng);
  }
  return params;
}

namespace {

// Forward pass for one scalar input. activations[l] holds the post-activation of layer l
// (activations[0] is the input, the last entry is the linear output).
void forward(const MlpShape& shape, const Vector& params, double x,
             std::vector<std::vector<double>>& activations) {
  const auto& layers = shape.layers;
  activations.resize(layers.size());
  activations[0].assign(1, x);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const std::size_t in = layers[l - 1];
    const std::size_t out = layers[l];
    const double* w = params.span().data() + offset;
    const double* b = w + out * in;
    auto& act = activations[l];
    act.assign(out, 0.0);
    const auto& prev = activations[l - 1];
    const bool hidden = l + 1 < layers.size();
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * prev[i];
      act[o] = hidden ? std::tanh(z) : z;
    }
    offset += out * in + out;
  }
}

}  // namespace

double MlpShape::predict(const Vector& params, double x) const {
  require(params.size() == parameter_count(), "MlpShape::predict: parameter size mismatch");
  require(layers.front() == 1 && layers.back() == 1, "MlpShape::predict: scalar network only");
  std::vector<std::vector<double>> acts;
  forward(*this, params, x, acts);
  return acts.back()[0];
}

MlpRegressionObjective::MlpRegressionObjective(MlpShape shape, std::vector<double> xs,
                                               std::vector<double> ys)
    : shape_(std::move(shape)), xs_(std::move(xs)), ys_(std::move(ys)) {
  require(!xs_.empty() && xs_.size() == ys_.size(), "MlpRegressionObjective: need matched data");
  require(shape_.layers.front() == 1 && shape_.layers.back() == 1,
          "MlpRegressionObjective: scalar input and output expected");
}

double MlpRegressionObjective::value(const Vector& phi) const {
  require(phi.size() == dimension(), "MlpRegressionObjective: parameter size mismatch");
  std::vector<std::vector<double>> acts;
  double sum = 0.0;
  for (std::size_t n = 0; n < xs_.size(); ++n) {
    forward(shape_, phi, xs_[n], acts);
    const double r = acts.back()[0] - ys_[n];
    sum += r * r;
  }
  return sum / static_cast<double>(xs_.size());
}

Vector MlpRegressionObjective::gradient(const Vector& phi) const {
  require(phi.size() == dimension(), "MlpRegressionObjective: parameter size mismatch");
  const auto& layers = shape_.layers;
  const std::size_t depth = layers.size();
  std::vector<std::size_t> offsets(depth, 0);
  for (std::size_t l = 1, off = 0; l < depth; ++l) {
    offsets[l] = off;
    off += layers[l] * layers[l - 1] + layers[l];
  }

  Vector grad(phi.size());
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  std::vector<double> prev_delta;
  const double scale = 2.0 / static_cast<double>(xs_.size());
  for (std::size_t n = 0; n < xs_.size(); ++n) {
    forward(shape_, phi, xs_[n], acts);
    delta.assign(1, scale * (acts.back()[0] - ys_[n]));
    for (std::size_t l = depth - 1; l >= 1; --l) {
      const std::size_t in = layers[l - 1];
      const std::size_t out = layers[l];
      const double* w = phi.span().data() + offsets[l];
      double* gw = grad.span().data() + offsets[l];
      double* gb = gw + out * in;
      const auto& prev = acts[l - 1];
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * prev[i];
      }
      if (l == 1) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += w[o * in + i] * delta[o];
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - prev[i] * prev[i];
      delta.swap(prev_delta);
    }
  }
  return grad;
}

Vector MlpRegressionObjective::hvp(const Vector& phi, const Vector& v) const {
  if (norm_inf(v) == 0.0) return Vector(v.size());
  return hvp_finite_difference(*this, phi, v);
}

// ---------------------------------------------------------------------------------------------

PrescribedHessianSequence::PrescribedHessianSequence(std::vector<Matrix> hessians, Vector g)
    : hessians_(std::move(hessians)), g_(std::move(g)) {
  for (const auto& h : hessians_) {
    require(h.rows() == g_.size() && h.cols() == g_.size(),
            "PrescribedHessianSequence: every H^k must be d×d");
    require(h.is_symmetric(), "PrescribedHessianSequence: every H^k must be symmetric");
  }
}

Vector PrescribedHessianSequence::hvp(std::size_t k, const Vector& v) const {
  require(k < hessians_.size(), "PrescribedHessianSequence: step index out of range");
  return matvec(hessians_[k], v);
}

std::optional<Matrix> PrescribedHessianSequence::hessian(std::size_t k) const {
  require(k < hessians_.size(), "PrescribedHessianSequence: step index out of range");
  return hessians_[k];
}

double PrescribedHessianSequence::max_spectral_norm() const {
  double m = 0.0;
  for (const auto& h : hessians_) m = std::max(m, spectral_norm(h));
  return m;
}

SharpnessKind parse_sharpness_kind(std::string_view name) {
  if (name == "theorem2-neg") return SharpnessKind::Theorem2Negative;
  if (name == "theorem3-pos") return SharpnessKind::Theorem3Positive;
  if (name == "theorem3-trunc") return SharpnessKind::Theorem3Truncated;
  throw ConstraintError("unknown sharpness sequence kind: " + std::string(name));
}

PrescribedHessianSequence sharpness_sequence(SharpnessKind kind, std::size_t k_steps,
                                             std::size_t l_trunc, double h_const,
                                             std::size_t dim) {
  require(h_const > 0.0, "sharpness_sequence: H must be positive");
  require(l_trunc <= k_steps, "sharpness_sequence: need 0 <= L <= K");
  require(dim >= 1, "sharpness_sequence: dimension must be positive");
  std::vector<Matrix> seq;
  seq.reserve(k_steps);
  for (std::size_t k = 0; k < k_steps; ++k) {
    double scale = 0.0;
    switch (kind) {
      case SharpnessKind::Theorem2Negative: scale = -h_const; break;
      case SharpnessKind::Theorem3Positive: scale = h_const; break;
      case SharpnessKind::Theorem3Truncated: scale = k + l_trunc < k_steps ? h_const : 0.0; break;
    }
    seq.push_back(scale * Matrix::identity(dim));
  }
  Vector g(dim);
  g[0] = 1.0;
  return PrescribedHessianSequence(std::move(seq), std::move(g));
}

double estimate_smoothness(const TaskObjective& obj, const std::vector<Vector>& points) {
  double h = 0.0;
  for (const auto& phi : points) {
    const auto result = power_iteration([&](const Vector& v) { return obj.hvp(phi, v); },
                                        obj.dimension(), 50, 1e-8);
    h = std::max(h, result.value);
  }
  return h;
}

}  // namespace metagrad
