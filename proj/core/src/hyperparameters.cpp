#include "mocha/hyperparameters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mocha/error.hpp"

namespace mocha {

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::HawkesUni: return "HAWKES_UNI";
    case Variant::HawkesMulti: return "HAWKES_MULTI";
    case Variant::MultiOrderStatic: return "MULTI_ORDER_STATIC";
    case Variant::FullDynamic: return "FULL_DYNAMIC";
  }
  return "UNKNOWN";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
  for (Variant v : {Variant::HawkesUni, Variant::HawkesMulti, Variant::MultiOrderStatic,
                    Variant::FullDynamic}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

int HyperParameters::effective_order() const noexcept {
  switch (variant) {
    case Variant::HawkesUni:
    case Variant::HawkesMulti:
      return 1;
    case Variant::MultiOrderStatic:
    case Variant::FullDynamic:
      return L;
  }
  return L;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("hyperparameter ") + what);
}

}  // namespace

void HyperParameters::validate() const {
  require(K >= 2, "K must be at least 2");
  require(d >= 1, "d must be at least 1");
  require(d_attn >= 1, "d_attn must be at least 1");
  require(hidden >= 1, "hidden must be at least 1");
  require(L >= 1 && L <= K - 1, "L must satisfy 1 <= L <= K - 1");
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  require(theta >= 0.0 && std::isfinite(theta), "theta must be non-negative");
  require(gamma_acyclic >= 0.0 && std::isfinite(gamma_acyclic),
          "gamma_acyclic must be non-negative");
  require(gamma_sparse >= 0.0 && std::isfinite(gamma_sparse), "gamma_sparse must be non-negative");
  require(substeps >= 1, "substeps must be positive");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
  require(max_history >= 0, "max_history must be non-negative");
  require(time_scale > 0.0 && std::isfinite(time_scale), "time_scale must be positive");
}

HyperParameters default_hyperparameters(int K) {
  HyperParameters hp;
  hp.K = K;
  hp.L = std::max(1, std::min(3, K - 1));
  return hp;
}

}  // namespace mocha
