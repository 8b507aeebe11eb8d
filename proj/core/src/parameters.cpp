#include "mocha/parameters.hpp"

#include <random>
#include <sstream>

#include "mocha/error.hpp"

namespace mocha {

double ModelParameters::mu(int k) const { return softplus(mu_raw(k)); }

double ModelParameters::alpha(int k, int l) const { return softplus(alpha_raw(k, l)); }

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  visit_tensors(*this, [&](std::string_view, auto, auto, auto span) { n += span.size(); });
  return n;
}

bool ModelParameters::all_finite() const {
  bool ok = true;
  visit_tensors(*this, [&](std::string_view, auto, auto, auto span) {
    for (double v : span) ok = ok && std::isfinite(v);
  });
  return ok;
}

bool ModelParameters::operator==(const ModelParameters& other) const {
  return mu_raw == other.mu_raw && alpha_raw == other.alpha_raw && E_type == other.E_type &&
         W_Q == other.W_Q && W_K == other.W_K && a_attn == other.a_attn &&
         W_proj == other.W_proj && W_fc1 == other.W_fc1 && b1 == other.b1 &&
         W_fc2 == other.W_fc2 && b2 == other.b2;
}

ModelParameters zero_parameters(const HyperParameters& hp) {
  const int e = hp.embedding_dim();
  ModelParameters p;
  p.mu_raw = Eigen::VectorXd::Zero(hp.K);
  p.alpha_raw = Eigen::MatrixXd::Zero(hp.K, hp.L);
  p.E_type = Eigen::MatrixXd::Zero(hp.K, e);
  p.W_Q = Eigen::MatrixXd::Zero(hp.d_attn, e);
  p.W_K = Eigen::MatrixXd::Zero(hp.d_attn, e);
  p.a_attn = Eigen::VectorXd::Zero(2 * hp.d_attn);
  p.W_proj = Eigen::MatrixXd::Zero(hp.K, e);
  p.W_fc1 = Eigen::MatrixXd::Zero(hp.hidden, e);
  p.b1 = Eigen::VectorXd::Zero(hp.hidden);
  p.W_fc2 = Eigen::RowVectorXd::Zero(hp.hidden);
  p.b2 = 0.0;
  return p;
}

ModelParameters init_parameters(const HyperParameters& hp, std::uint64_t seed) {
  hp.validate();
  ModelParameters p = zero_parameters(hp);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Fill in storage order so the draw sequence is fixed by the shapes alone.
  auto fill = [&](auto& m, double fan_in) {
    const double scale = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
  };
  const double e = hp.embedding_dim();
  fill(p.E_type, e);
  fill(p.W_Q, e);
  fill(p.W_K, e);
  fill(p.a_attn, 2.0 * hp.d_attn);
  fill(p.W_proj, e);
  fill(p.W_fc1, e);
  fill(p.W_fc2, hp.hidden);

  p.mu_raw.setConstant(softplus_inverse(0.1));
  p.alpha_raw.setConstant(softplus_inverse(1.0));
  // Start the decay kernel near sigmoid(-3) ~ 0.05 so chain sums of every
  // order begin small instead of growing like (N/2)^l.
  p.b2 = kInitialDecayBias;
  return p;
}

void check_shapes(const ModelParameters& params, const HyperParameters& hp) {
  const ModelParameters expected = zero_parameters(hp);
  std::ostringstream msg;
  bool ok = true;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  visit_tensors(expected, [&](std::string_view, Eigen::Index r, Eigen::Index c, auto) {
    shapes.emplace_back(r, c);
  });
  std::size_t i = 0;
  visit_tensors(params, [&](std::string_view name, Eigen::Index r, Eigen::Index c, auto) {
    if (shapes[i].first != r || shapes[i].second != c) {
      ok = false;
      msg << name << " is " << r << "x" << c << ", expected " << shapes[i].first << "x"
          << shapes[i].second << "; ";
    }
    ++i;
  });
  if (!ok) throw Error(ErrorCode::ShapeMismatch, msg.str());
}

void axpy(double scale, const ModelParameters& source, ModelParameters& target) {
  std::vector<std::span<const double>> src;
  visit_tensors(source, [&](std::string_view, auto, auto, auto span) {
    src.emplace_back(span.data(), span.size());
  });
  std::size_t t = 0;
  visit_tensors(target, [&](std::string_view, auto, auto, auto span) {
    const auto& s = src[t++];
    for (std::size_t i = 0; i < span.size(); ++i) span[i] += scale * s[i];
  });
}

}  // namespace mocha
