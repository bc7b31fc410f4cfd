#pragma once

// Pure functions of the incentive game: the AM system posts a virtual price
// gamma for droop contribution, each AD system responds with a droop
// coefficient. Both players' objectives and the linear price update live
// here; iteration order is the solver's business.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "midc/errors.hpp"
#include "midc/model.hpp"

namespace midc {

// Aggregate regulation-cost curvature of one AD system: its internal cost of
// running droop k is u * k^2.
struct AdCurvature {
  std::string ad_id;
  double u = 0.0;          // (p.u.) per (MW/Hz)^2
  bool degenerate = false; // omega_am == 0 collapses the cost to zero
};

inline AdCurvature ad_curvature(const AdjacentSystem& ad, double omega_am) {
  const double kg_sum = ad.generator_droop_sum();
  if (kg_sum <= 0.0)
    throw DomainError("ad_curvature: adjacent system '" + ad.id +
                      "' has non-positive generator droop sum");
  double quad = 0.0;
  for (const auto& g : ad.generators) quad += 0.5 * g.alpha * g.k_g * g.k_g;
  AdCurvature c;
  c.ad_id = ad.id;
  c.u = omega_am * omega_am * quad / (kg_sum * kg_sum);
  c.degenerate = omega_am == 0.0;
  return c;
}

inline std::vector<AdCurvature> all_curvatures(const SystemModel& model,
                                               double omega_am) {
  std::vector<AdCurvature> out;
  out.reserve(model.adjacents.size());
  for (const auto& ad : model.adjacents)
    out.push_back(ad_curvature(ad, omega_am));
  return out;
}

// Total droop the LCC links must add so the post-fault steady state lands on
// omega_am. Non-positive values mean the AM generators cover the imbalance
// on their own.
struct RequiredDroop {
  double value = 0.0;  // MW/Hz
  bool support_needed = false;
};

inline RequiredDroop required_total_droop(const FaultedView& view,
                                          double omega_am) {
  if (omega_am == 0.0)
    throw DomainError("required_total_droop: omega_am must be nonzero");
  RequiredDroop r;
  r.value = -view.delta_p() / omega_am - view.effective_am_droop();
  r.support_needed = r.value > 0.0;
  return r;
}

// Optimal droop reply to a posted price: unconstrained optimum gamma/(2u)
// projected onto the feasible interval.
inline double best_response_droop(double gamma, const AdCurvature& c,
                                  const Interval& bounds) {
  if (c.u <= 0.0)
    throw DomainError("best_response_droop: degenerate curvature for '" +
                      c.ad_id + "'");
  return bounds.clamp(gamma / (2.0 * c.u));
}

inline double steady_frequency(const FaultedView& view,
                               const std::vector<double>& k_d) {
  double den = view.effective_am_droop();
  for (double k : k_d) den += k;
  if (den <= 0.0)
    throw DomainError("steady_frequency: non-positive total droop");
  return -view.delta_p() / den;
}

struct PriceState {
  double gamma = 0.0;
  int round = 0;
};

// Frequency mismatch in the shortage frame: positive when support is
// insufficient, whichever side of nominal the event pushes the frequency.
// An over-frequency target (redundancy event) mirrors the axis.
inline double price_mismatch(double omega_am, double omega_hat) {
  return omega_am < 0.0 ? omega_am - omega_hat : omega_hat - omega_am;
}

// One linear price step gamma + a*d, a picked from [a_lo, a_hi] to minimize
// the paid reward (sum k)*gamma: the smallest a when the step raises gamma,
// the largest when it lowers it, a_lo on ties.
inline double price_step(double gamma_prev, double omega_am, double omega_hat,
                         double a_lo, double a_hi, const Interval& gamma_set) {
  const double d = price_mismatch(omega_am, omega_hat);
  const double a = d < 0.0 ? a_hi : a_lo;
  return gamma_set.clamp(gamma_prev + a * d);
}

inline PriceState price_update(const PriceState& prev, double omega_am,
                               double omega_hat, const MainSystem& main,
                               double k_sum) {
  if (k_sum < 0.0)
    throw DomainError("price_update: negative total droop");
  PriceState next;
  next.gamma = price_step(prev.gamma, omega_am, omega_hat, main.a_min,
                          main.a_max, main.gamma_set);
  next.round = prev.round + 1;
  return next;
}

// AD objective of the modified game: forgo gamma*k of reward, pay u*k^2 of
// regulation cost.
inline double eval_modified_ad_disutility(double gamma, double k, double u) {
  return -gamma * k + u * k * k;
}

// AD objective of the original game: proportional share of the posted reward
// plus the physical regulation cost of following its own frequency dip.
inline double eval_original_ad_disutility(double reward,
                                          const std::vector<double>& k_d,
                                          std::size_t i,
                                          const AdjacentSystem& ad,
                                          double omega_am) {
  double k_sum = 0.0;
  for (double k : k_d) k_sum += k;
  if (k_sum <= 0.0)
    throw DomainError("eval_original_ad_disutility: non-positive total droop");
  const double share = -(k_d.at(i) / k_sum) * reward;
  const double omega_ad = k_d.at(i) * omega_am / ad.generator_droop_sum();
  double cost = 0.0;
  for (const auto& g : ad.generators) {
    const double dp = -g.k_g * omega_ad;
    cost += 0.5 * g.alpha * dp * dp;
  }
  return share + cost;
}

// AM objective: the paid reward plus its own generators' regulation cost at
// deviation omega (tripped unit regulates nothing).
inline double eval_am_disutility(double reward, const FaultedView& view,
                                 double omega) {
  double cost = 0.0;
  for (const auto& g : view.model().main.generators) {
    if (view.is_tripped(g)) continue;
    const double dp = -g.k_g * omega;
    cost += 0.5 * g.alpha * dp * dp;
  }
  return reward + cost;
}

// P-f droop control law of the LCC link, signed per link kind. Not clamped;
// callers compare against signed_bounds() when they care.
inline double lcc_power_order(const LccParams& lcc, double k, double omega) {
  return lcc.signed_nominal() - k * omega;
}

// Gradient of the original (not modified) AD disutility in k_i at fixed
// reward. Diagnostic only: at the modified-game equilibrium it is positive,
// not zero (price-taking vs exact best response of the share rule).
inline double original_droop_gradient(double reward,
                                      const std::vector<double>& k_d,
                                      std::size_t i,
                                      const AdjacentSystem& ad,
                                      double omega_am) {
  double k_sum = 0.0;
  for (double k : k_d) k_sum += k;
  if (k_sum <= 0.0)
    throw DomainError("original_droop_gradient: non-positive total droop");
  const double u = ad_curvature(ad, omega_am).u;
  return -reward * (k_sum - k_d.at(i)) / (k_sum * k_sum) + 2.0 * u * k_d.at(i);
}

}  // namespace midc
