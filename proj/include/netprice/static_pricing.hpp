#pragma once

#include "netprice/market_model.hpp"

namespace netprice {

/// Whether a solver rejects interior solutions with negative demand.
enum class DemandCheck { Strict, Permissive };

/// One-shot Stackelberg outcome (optimal discriminatory static pricing).
struct StaticOutcome {
  Vector x_hat;
  Vector p_hat;
  double revenue = 0.0;
  double welfare = 0.0;
  bool negative_demand = false;
};

/// x_hat = M^{-1} a, p_hat = (2 Lambda_c - Lambda) x_hat.
/// With DemandCheck::Strict any x_hat_i < -1e-12 raises NegativeDemand.
StaticOutcome solve_static(const ModelMatrices& m, DemandCheck check = DemandCheck::Strict);

}  // namespace netprice
