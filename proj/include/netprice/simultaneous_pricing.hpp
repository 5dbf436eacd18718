#pragma once

// Finite-horizon simultaneous pricing. All users are priced at once in each of
// T periods using the inverse demand
//
//   p^(k) = a + (G - C) y^(k-1) - Lambda y^(k),
//
// so the operator's plan is a constant demand x* and prices affine in k.

#include <utility>
#include <vector>

#include "netprice/market_model.hpp"
#include "netprice/sequential_pricing.hpp"
#include "netprice/static_pricing.hpp"

namespace netprice {

struct SimuPlan {
  int horizon = 0;
  Vector x_star;
  std::vector<Vector> prices;
  Vector Xi;
  // Per-user price slope times (T + 1).
  Vector Phi;
  double revenue = 0.0;
  // (period, user) pairs with a negative price; periods are 1-based.
  std::vector<std::pair<int, Eigen::Index>> negative_price_periods;
};

struct PriceSlope {
  Vector Xi;
  Vector Phi;
};

/// x* = ((T+1) Lambda - (T-1)(G - C))^{-1} a,
/// p^(k) = ((T-k+1) Lambda - (T-k)(G - C)) x*.
SimuPlan solve_simultaneous(const ModelMatrices& m, int horizon,
                            DemandCheck check = DemandCheck::Strict);

/// Xi = (I - (T-1)/(T+1) (G - C) Lambda^{-1})^{-1} a, Phi = (G - C) Lambda^{-1} Xi - Xi.
PriceSlope price_slope(const ModelMatrices& m, int horizon);

/// True iff every Phi_i < 0. Requires homogeneous a and b (within 1e-12).
bool check_homogeneous_slope(const ModelMatrices& m, int horizon);

/// Total revenue of a demand schedule (entry k-1 is period k) under the
/// simultaneous inverse demand.
double simultaneous_revenue(const ModelMatrices& m, const std::vector<Vector>& schedule);

/// One-period lookahead: each period maximizes current revenue given the
/// cumulative demand so far, with demand clamped at zero.
DemandTrajectory run_greedy(const ModelMatrices& m, int periods);

}  // namespace netprice
