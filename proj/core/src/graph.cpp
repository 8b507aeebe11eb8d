#include "mocha/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mocha/error.hpp"

namespace mocha {

namespace {

double leaky_relu(double x) { return x > 0.0 ? x : kLeakyReluSlope * x; }

Eigen::MatrixXd score_logits(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys,
                             const ModelParameters& params) {
  const Eigen::Index da = params.d_attn();
  const Eigen::VectorXd q_part = queries * params.a_attn.head(da);
  const Eigen::VectorXd k_part = keys * params.a_attn.tail(da);
  const Eigen::Index K = queries.rows();
  Eigen::MatrixXd logits(K, K);
  for (Eigen::Index v = 0; v < K; ++v) {
    for (Eigen::Index u = 0; u < K; ++u) logits(u, v) = q_part(u) + k_part(v);
  }
  return logits;
}

}  // namespace

Eigen::MatrixXd attention_scores(const Eigen::MatrixXd& H, const ModelParameters& params) {
  const Eigen::MatrixXd queries = H * params.W_Q.transpose();
  const Eigen::MatrixXd keys = H * params.W_K.transpose();
  return score_logits(queries, keys, params).unaryExpr(&leaky_relu);
}

Eigen::MatrixXd structural_weights_forward(const Eigen::MatrixXd& H, const ModelParameters& params,
                                           AttentionCache& cache) {
  cache.H = H;
  cache.queries.noalias() = H * params.W_Q.transpose();
  cache.keys.noalias() = H * params.W_K.transpose();
  cache.logits = score_logits(cache.queries, cache.keys, params);
  const Eigen::Index K = H.rows();
  cache.weights.resize(K, K);
  for (Eigen::Index v = 0; v < K; ++v) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index u = 0; u < K; ++u) {
      const double e = leaky_relu(cache.logits(u, v));
      if (!std::isfinite(e)) {
        throw Error(ErrorCode::NumericOverflow, "attention score is not finite");
      }
      cache.weights(u, v) = e;
      top = std::max(top, e);
    }
    double total = 0.0;
    for (Eigen::Index u = 0; u < K; ++u) {
      cache.weights(u, v) = std::exp(cache.weights(u, v) - top);
      total += cache.weights(u, v);
    }
    cache.weights.col(v) /= total;
  }
  cache.context.noalias() = cache.weights.transpose() * H;
  return cache.context * params.W_proj.transpose();
}

StructuralWeights structural_weights(const Eigen::MatrixXd& H, const ModelParameters& params) {
  AttentionCache cache;
  return {0.0, structural_weights_forward(H, params, cache)};
}

Eigen::MatrixXd structural_weights_backward(const AttentionCache& cache,
                                            const ModelParameters& params,
                                            const Eigen::MatrixXd& dW, ModelParameters& grad) {
  const Eigen::Index K = cache.H.rows();
  const Eigen::Index da = params.d_attn();

  grad.W_proj.noalias() += dW.transpose() * cache.context;
  const Eigen::MatrixXd d_context = dW * params.W_proj;

  Eigen::MatrixXd dH = cache.weights * d_context;
  const Eigen::MatrixXd d_weights = cache.H * d_context.transpose();  // (u, v)

  Eigen::VectorXd d_q_part = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd d_k_part = Eigen::VectorXd::Zero(K);
  for (Eigen::Index v = 0; v < K; ++v) {
    const double inner = cache.weights.col(v).dot(d_weights.col(v));
    for (Eigen::Index u = 0; u < K; ++u) {
      const double d_score = cache.weights(u, v) * (d_weights(u, v) - inner);
      const double d_logit = d_score * (cache.logits(u, v) > 0.0 ? 1.0 : kLeakyReluSlope);
      d_q_part(u) += d_logit;
      d_k_part(v) += d_logit;
    }
  }
  grad.a_attn.head(da).noalias() += cache.queries.transpose() * d_q_part;
  grad.a_attn.tail(da).noalias() += cache.keys.transpose() * d_k_part;

  const Eigen::MatrixXd d_queries = d_q_part * params.a_attn.head(da).transpose();
  const Eigen::MatrixXd d_keys = d_k_part * params.a_attn.tail(da).transpose();
  grad.W_Q.noalias() += d_queries.transpose() * cache.H;
  grad.W_K.noalias() += d_keys.transpose() * cache.H;
  dH.noalias() += d_queries * params.W_Q;
  dH.noalias() += d_keys * params.W_K;
  return dH;
}

double edge_activation(double w, double beta) noexcept { return -std::expm1(-beta * std::abs(w)); }

CausalGraph threshold_graph(const StructuralWeights& Wt, double beta, double theta) {
  const Eigen::Index K = Wt.W.rows();
  CausalGraph g;
  g.t = Wt.t;
  g.A.setZero(K, K);
  for (Eigen::Index u = 0; u < K; ++u) {
    for (Eigen::Index v = 0; v < K; ++v) {
      g.A(u, v) = edge_activation(Wt.W(u, v), beta) > theta ? 1 : 0;
    }
  }

  // Tarjan's strongly connected components; an edge lies on a cycle iff both
  // endpoints share a component (self-loops included).
  std::vector<int> index(K, -1), low(K, 0), component(K, -1), stack;
  std::vector<bool> on_stack(K, false);
  int counter = 0, components = 0;
  std::function<void(int)> connect = [&](int u) {
    index[u] = low[u] = counter++;
    stack.push_back(u);
    on_stack[u] = true;
    for (int v = 0; v < K; ++v) {
      if (!g.A(u, v)) continue;
      if (index[v] < 0) {
        connect(v);
        low[u] = std::min(low[u], low[v]);
      } else if (on_stack[v]) {
        low[u] = std::min(low[u], index[v]);
      }
    }
    if (low[u] == index[u]) {
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component[w] = components;
      } while (w != u);
      ++components;
    }
  };
  for (int u = 0; u < K; ++u) {
    if (index[u] < 0) connect(u);
  }

  for (int u = 0; u < K; ++u) {
    for (int v = 0; v < K; ++v) {
      if (g.A(u, v) && component[u] == component[v]) g.cycle_edges.emplace_back(u, v);
    }
  }
  g.is_dag = g.cycle_edges.empty();
  return g;
}

CausalGraph threshold_graph(const StructuralWeights& Wt, const HyperParameters& hp) {
  return threshold_graph(Wt, hp.beta, hp.theta);
}

CountMatrix path_count_matrix(const CountMatrix& A, int l) {
  if (l < 1) throw Error(ErrorCode::InvalidArgument, "path length must be >= 1");
  if (l > A.rows()) throw Error(ErrorCode::InvalidArgument, "path length must be <= K");
  CountMatrix power = A;
  for (int i = 1; i < l; ++i) power = power * A;
  return power;
}

CountMatrix path_count_matrix(const CausalGraph& graph, int l) {
  return path_count_matrix(CountMatrix(graph.A.cast<std::int64_t>()), l);
}

AcyclicityResult acyclicity(const Eigen::MatrixXd& W) {
  const Eigen::Index K = W.rows();
  const Eigen::MatrixXd M = W.cwiseProduct(W);
  const int max_terms = 2 * static_cast<int>(K) + 20;

  // term_j = M^j / j!; partial = sum_{i < j} term_i is d Tr(term_j-series)/dM^T.
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(K, K);
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(K, K);
  AcyclicityResult result;
  for (int j = 1; j <= max_terms; ++j) {
    partial += term;
    term = term * M / static_cast<double>(j);
    const double trace = term.trace();
    if (!std::isfinite(trace)) {
      throw Error(ErrorCode::NumericOverflow, "acyclicity series diverged");
    }
    result.value += trace;
    result.terms = j;
    // Entries are non-negative, so a vanishing entry sum means every later
    // term is negligible as well (traces alone can be zero before a cycle
    // of length > 1 shows up).
    if (term.sum() < 1e-12) break;
  }
  result.gradient = 2.0 * partial.transpose().cwiseProduct(W);
  return result;
}

double acyclicity_value(const StructuralWeights& Wt) { return acyclicity(Wt.W).value; }

double sparsity_value(const StructuralWeights& Wt) { return Wt.W.cwiseAbs().sum(); }

}  // namespace mocha
