#include "netprice/static_pricing.hpp"

#include <algorithm>
#include <sstream>

namespace netprice {

StaticOutcome solve_static(const ModelMatrices& m, DemandCheck check) {
  StaticOutcome out;
  out.x_hat = m.M_lu.solve(m.a());
  out.negative_demand = (out.x_hat.array() < -1e-12).any();
  if (out.negative_demand && check == DemandCheck::Strict) {
    std::ostringstream msg;
    msg << "static demand is negative (min " << out.x_hat.minCoeff()
        << "); the model is outside the interior-solution regime";
    throw Error(ErrorCode::NegativeDemand, msg.str());
  }

  out.p_hat = m.D.cwiseProduct(out.x_hat);
  // Same price from the inverse demand a - (Lambda - G + C) x_hat.
  const Vector p_alt = m.a() - m.L * out.x_hat;
  const double scale = std::max(1.0, numerics::inf_norm(m.a()));
  if ((out.p_hat - p_alt).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::InvariantViolated, "static price forms disagree");
  }

  out.revenue = out.p_hat.dot(out.x_hat);
  // a^T M^{-1} (2 Lambda_c - Lambda/2 + C/2) M^{-1} a - revenue
  const Matrix gross_op = 2.0 * m.Lambda_c - 0.5 * m.Lambda + 0.5 * m.C_mat;
  out.welfare = out.x_hat.dot(gross_op * out.x_hat) - out.revenue;
  return out;
}

}  // namespace netprice
