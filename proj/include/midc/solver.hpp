#pragma once

// Equilibrium seeking: the fixed-point iteration alternating AD best
// responses with the AM price update, the closed-form interior solution, and
// the saturated-regime price report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "midc/errors.hpp"
#include "midc/game.hpp"
#include "midc/io.hpp"
#include "midc/model.hpp"

namespace midc {

enum class EquilibriumStatus { Converged, Saturated, MaxIterations,
                               NoSupportNeeded };

inline const char* status_name(EquilibriumStatus s) {
  switch (s) {
    case EquilibriumStatus::Converged: return "converged";
    case EquilibriumStatus::Saturated: return "saturated";
    case EquilibriumStatus::MaxIterations: return "max_iterations";
    case EquilibriumStatus::NoSupportNeeded: return "no_support_needed";
  }
  return "unknown";
}

struct SolverConfig {
  double eps_gamma = 1e-8;  // stop threshold on the price step
  double eps_k = 1e-6;      // stop threshold on droop movement
  int max_iters = 10000;
  std::optional<double> gamma0;              // default: gamma_set midpoint
  std::optional<std::vector<double>> k0;     // default: zero vector
};

struct TraceRound {
  int round = 0;
  double gamma = 0.0;  // price after this round's update
  std::vector<double> k;
  double omega_hat = 0.0;
  double e_gamma = 0.0;
  double max_e_k = 0.0;
};

struct EquilibriumResult {
  EquilibriumStatus status = EquilibriumStatus::Converged;
  double gamma_star = 0.0;
  std::vector<double> k_star;
  double reward_star = 0.0;
  double omega_hat = 0.0;
  int iterations = 0;
  std::vector<std::string> ad_ids;
  std::vector<TraceRound> trace;

  double droop_sum() const {
    double s = 0.0;
    for (double k : k_star) s += k;
    return s;
  }
};

namespace detail {

inline std::vector<std::string> adjacent_ids(const SystemModel& model) {
  std::vector<std::string> ids;
  ids.reserve(model.adjacents.size());
  for (const auto& ad : model.adjacents) ids.push_back(ad.id);
  return ids;
}

inline void check_solver_config(const SolverConfig& cfg, std::size_t n_ads) {
  if (cfg.eps_gamma <= 0.0 || cfg.eps_k <= 0.0)
    throw DomainError("solver config: tolerances must be positive");
  if (cfg.max_iters < 1)
    throw DomainError("solver config: max_iters must be at least 1");
  if (cfg.k0 && cfg.k0->size() != n_ads)
    throw DomainError("solver config: k0 size does not match adjacent count");
}

// The round loop, shared by the monolithic solver and the decentralized
// session. respond(round, gamma) yields this round's droop vector; how it is
// produced (local best responses or a message exchange) is the caller's
// concern. Oscillation damping: four consecutive sign flips of the price
// step halve the effective response coefficient, floored at a_min/64.
template <typename Respond>
EquilibriumResult iterate_sefp(const FaultedView& view, double omega_am,
                               const SolverConfig& cfg, Respond&& respond) {
  const MainSystem& main = view.model().main;
  EquilibriumResult res;
  res.ad_ids = adjacent_ids(view.model());

  double gamma_prev =
      main.gamma_set.clamp(cfg.gamma0.value_or(main.gamma_set.midpoint()));
  std::vector<double> k_prev =
      cfg.k0.value_or(std::vector<double>(res.ad_ids.size(), 0.0));

  double a_scale = 1.0;
  int prev_sign = 0, flips = 0;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const std::vector<double> k = respond(t, gamma_prev);
    const double omega_hat = steady_frequency(view, k);
    const double d = price_mismatch(omega_am, omega_hat);
    const double a = (d < 0.0 ? main.a_max : main.a_min) * a_scale;
    const double gamma = main.gamma_set.clamp(gamma_prev + a * d);

    const double e_gamma = gamma - gamma_prev;
    double max_e_k = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i)
      max_e_k = std::max(max_e_k, std::abs(k[i] - k_prev[i]));

    const int sign = e_gamma > 0.0 ? 1 : (e_gamma < 0.0 ? -1 : 0);
    if (sign != 0 && sign == -prev_sign) {
      if (++flips >= 4) {
        a_scale = std::max(0.5 * a_scale, 1.0 / 64.0);
        flips = 0;
      }
    } else {
      flips = 0;
    }
    if (sign != 0) prev_sign = sign;

    res.trace.push_back({t, gamma, k, omega_hat, e_gamma, max_e_k});
    if (std::abs(e_gamma) < cfg.eps_gamma && max_e_k < cfg.eps_k) {
      res.status = EquilibriumStatus::Converged;
      res.gamma_star = gamma;
      res.k_star = k;
      res.omega_hat = omega_hat;
      res.iterations = t;
      res.reward_star = gamma * res.droop_sum();
      return res;
    }
    gamma_prev = gamma;
    k_prev = k;
  }
  res.status = EquilibriumStatus::MaxIterations;
  res.gamma_star = gamma_prev;
  res.k_star = k_prev;
  res.omega_hat = res.trace.empty() ? 0.0 : res.trace.back().omega_hat;
  res.iterations = cfg.max_iters;
  res.reward_star = gamma_prev * res.droop_sum();
  return res;
}

inline double gamma_minimal_price(const std::vector<AdCurvature>& cs,
                                  const std::vector<Interval>& bounds) {
  double g = 0.0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    g = std::max(g, 2.0 * cs[i].u * bounds[i].hi);
  return g;
}

}  // namespace detail

// Short-circuit results for the regimes where no iteration is meaningful:
// W <= 0 (generators alone restore the target) and W beyond the pooled droop
// capability (every response saturates).
inline std::optional<EquilibriumResult> presolve_regime(
    const FaultedView& view, double omega_am) {
  const RequiredDroop w = required_total_droop(view, omega_am);
  EquilibriumResult res;
  res.ad_ids = detail::adjacent_ids(view.model());
  if (!w.support_needed) {
    res.status = EquilibriumStatus::NoSupportNeeded;
    res.k_star.assign(res.ad_ids.size(), 0.0);
    res.omega_hat = steady_frequency(view, res.k_star);
    return res;
  }
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  double hi_sum = 0.0;
  for (const auto& b : bounds) hi_sum += b.hi;
  if (w.value > hi_sum) {
    res.status = EquilibriumStatus::Saturated;
    for (const auto& b : bounds) res.k_star.push_back(b.hi);
    res.gamma_star = detail::gamma_minimal_price(
        all_curvatures(view.model(), omega_am), bounds);
    res.reward_star = res.gamma_star * hi_sum;
    res.omega_hat = steady_frequency(view, res.k_star);
    return res;
  }
  return std::nullopt;
}

inline EquilibriumResult seek_equilibrium(const FaultedView& view,
                                          double omega_am,
                                          const SolverConfig& cfg = {}) {
  detail::check_solver_config(cfg, view.model().adjacents.size());
  if (auto shortcut = presolve_regime(view, omega_am)) return *shortcut;

  const auto curvatures = all_curvatures(view.model(), omega_am);
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  auto respond = [&](int, double gamma) {
    std::vector<double> k(curvatures.size());
    for (std::size_t i = 0; i < k.size(); ++i)
      k[i] = best_response_droop(gamma, curvatures[i], bounds[i]);
    return k;
  };
  return detail::iterate_sefp(view, omega_am, cfg, respond);
}

// Closed-form interior equilibrium. Valid only when every resulting droop is
// strictly inside its bounds and the price is admissible; otherwise the
// projection is active and the iterative path must be used.
inline EquilibriumResult analytic_equilibrium(const FaultedView& view,
                                              double omega_am) {
  const RequiredDroop w = required_total_droop(view, omega_am);
  if (!w.support_needed)
    throw DomainError(
        "analytic_equilibrium: no support needed (W <= 0); use "
        "seek_equilibrium");
  const auto curvatures = all_curvatures(view.model(), omega_am);
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  double inv_sum = 0.0;
  for (const auto& c : curvatures) inv_sum += 1.0 / c.u;
  const double gamma = 2.0 * w.value / inv_sum;
  if (!view.model().main.gamma_set.contains(gamma))
    throw DomainError(
        "analytic_equilibrium: price outside the admissible set; use "
        "seek_equilibrium");
  EquilibriumResult res;
  res.ad_ids = detail::adjacent_ids(view.model());
  res.status = EquilibriumStatus::Converged;
  res.gamma_star = gamma;
  for (std::size_t i = 0; i < curvatures.size(); ++i) {
    const double k = w.value / (curvatures[i].u * inv_sum);
    if (k <= bounds[i].lo || k >= bounds[i].hi)
      throw DomainError(
          "analytic_equilibrium: interior condition violated for '" +
          curvatures[i].ad_id + "'; use seek_equilibrium");
    res.k_star.push_back(k);
  }
  res.reward_star = gamma * w.value;
  res.omega_hat = steady_frequency(view, res.k_star);
  res.iterations = 0;
  return res;
}

struct SaturationReport {
  std::vector<std::string> saturated_ids;
  double gamma_minimal = 0.0;     // smallest price with every reply at its cap
  double uncovered_imbalance = 0.0;  // MW left for load shedding
};

inline SaturationReport saturate_price(const FaultedView& view,
                                       double omega_am) {
  const RequiredDroop w = required_total_droop(view, omega_am);
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  double hi_sum = 0.0;
  for (const auto& b : bounds) hi_sum += b.hi;
  if (w.value < hi_sum)
    throw DomainError(
        "saturate_price: requirement is within pooled droop capability");
  SaturationReport rep;
  rep.saturated_ids = detail::adjacent_ids(view.model());
  rep.gamma_minimal = detail::gamma_minimal_price(
      all_curvatures(view.model(), omega_am), bounds);
  rep.uncovered_imbalance = std::max(0.0, w.value - hi_sum) *
                            std::abs(omega_am);
  return rep;
}

inline std::string trace_csv(const EquilibriumResult& res) {
  std::string s = "round,gamma";
  for (std::size_t i = 1; i <= res.ad_ids.size(); ++i)
    s += ",k_" + std::to_string(i);
  s += ",omega_hat,e_gamma,max_e_k\n";
  for (const auto& row : res.trace) {
    s += std::to_string(row.round) + "," + fmt_fixed(row.gamma);
    for (double k : row.k) s += "," + fmt_fixed(k);
    s += "," + fmt_fixed(row.omega_hat) + "," + fmt_sci(row.e_gamma) + "," +
         fmt_sci(row.max_e_k) + "\n";
  }
  return s;
}

}  // namespace midc
