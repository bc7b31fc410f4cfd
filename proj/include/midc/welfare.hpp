#pragma once

// Social-welfare reference problem: minimize total AD regulation cost
// sum u_i k_i^2 subject to sum k_i = W and box bounds. Solved by bisection
// on the shared multiplier; used to certify game equilibria.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "midc/errors.hpp"
#include "midc/game.hpp"
#include "midc/model.hpp"

namespace midc {

struct WelfareSolution {
  std::vector<double> k_tilde;
  double lambda_tilde = 0.0;  // equality multiplier; equals -gamma* at optimum
  double objective = 0.0;
};

inline WelfareSolution solve_social_welfare(const FaultedView& view,
                                            double omega_am) {
  const auto curvatures = all_curvatures(view.model(), omega_am);
  for (const auto& c : curvatures)
    if (c.degenerate || c.u <= 0.0)
      throw DomainError("solve_social_welfare: degenerate curvature for '" +
                        c.ad_id + "' (omega_am == 0?)");
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  const double W = required_total_droop(view, omega_am).value;

  double lo_sum = 0.0, hi_sum = 0.0;
  for (const auto& b : bounds) {
    lo_sum += b.lo;
    hi_sum += b.hi;
  }
  if (W < lo_sum || W > hi_sum)
    throw DomainError("solve_social_welfare: requirement outside pooled "
                      "droop capability");

  const std::size_t n = curvatures.size();
  auto fill = [&](double mu, std::vector<double>& k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      k[i] = bounds[i].clamp(mu / (2.0 * curvatures[i].u));
      s += k[i];
    }
    return s;
  };

  double mu_lo = 0.0, mu_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    mu_hi = std::max(mu_hi, 2.0 * curvatures[i].u * bounds[i].hi);
  std::vector<double> k(n);
  double mu = mu_hi;
  // Run the bracket down to adjacent doubles. The multiplier has to match
  // the game's price to ~1e-9 even when the droop scale is in the thousands,
  // and stopping at the first midpoint whose equality residual clears
  // 1e-10*max(1,W) can leave mu an order short of that; at collapse the
  // residual is far inside that bound anyway.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    if (mid == mu_lo || mid == mu_hi) break;
    mu = mid;
    (fill(mu, k) < W ? mu_lo : mu_hi) = mu;
  }
  fill(mu, k);

  WelfareSolution sol;
  sol.k_tilde = k;
  sol.lambda_tilde = -mu;
  for (std::size_t i = 0; i < n; ++i)
    sol.objective += curvatures[i].u * k[i] * k[i];
  return sol;
}

// Stationarity and equality residuals of a candidate point against the
// welfare KKT system with multiplier gamma. At an active bound the gradient
// may point into the bound (normal cone); only the violating part counts.
struct KktReport {
  std::vector<double> stationarity;
  double max_stationarity = 0.0;
  double equality_residual = 0.0;
};

inline KktReport kkt_residual(const std::vector<double>& k, double gamma,
                              const FaultedView& view, double omega_am) {
  const auto curvatures = all_curvatures(view.model(), omega_am);
  const auto bounds = derive_all_droop_bounds(view.model(), omega_am);
  if (k.size() != curvatures.size())
    throw DomainError("kkt_residual: droop vector size mismatch");
  const double W = required_total_droop(view, omega_am).value;

  KktReport rep;
  double k_sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    k_sum += k[i];
    const double grad = 2.0 * curvatures[i].u * k[i] - gamma;
    const double btol = 1e-9 * std::max(1.0, std::abs(bounds[i].hi));
    double r;
    if (k[i] >= bounds[i].hi - btol)
      r = std::max(0.0, grad);  // at the cap the gradient may be negative
    else if (k[i] <= bounds[i].lo + btol)
      r = std::max(0.0, -grad);  // at the floor it may be positive
    else
      r = std::abs(grad);
    rep.stationarity.push_back(r);
    rep.max_stationarity = std::max(rep.max_stationarity, r);
  }
  rep.equality_residual = std::abs(k_sum - W);
  return rep;
}

}  // namespace midc
