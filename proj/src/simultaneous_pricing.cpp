#include "netprice/simultaneous_pricing.hpp"

#include <cmath>
#include <sstream>

namespace netprice {

namespace {

void require_horizon(int horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
}

}  // namespace

SimuPlan solve_simultaneous(const ModelMatrices& m, int horizon, DemandCheck check) {
  require_horizon(horizon);
  const double t = horizon;
  const Matrix gc = m.G - m.C_mat;

  SimuPlan plan;
  plan.horizon = horizon;
  const Matrix op = (t + 1.0) * m.Lambda - (t - 1.0) * gc;
  plan.x_star = numerics::solve_linear(op, m.a());
  if (check == DemandCheck::Strict && (plan.x_star.array() < -1e-12).any()) {
    std::ostringstream msg;
    msg << "simultaneous demand is negative (min " << plan.x_star.minCoeff() << ")";
    throw Error(ErrorCode::NegativeDemand, msg.str());
  }

  const Vector lx = m.Lambda.diagonal().cwiseProduct(plan.x_star);
  const Vector gx = gc * plan.x_star;
  for (int k = 1; k <= horizon; ++k) {
    Vector p = (t - k + 1.0) * lx - (t - k) * gx;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) < 0.0) plan.negative_price_periods.emplace_back(k, i);
    }
    plan.revenue += p.dot(plan.x_star);
    plan.prices.push_back(std::move(p));
  }

  const PriceSlope slope = price_slope(m, horizon);
  plan.Xi = slope.Xi;
  plan.Phi = slope.Phi;
  return plan;
}

PriceSlope price_slope(const ModelMatrices& m, int horizon) {
  require_horizon(horizon);
  const auto n = m.n();
  const double t = horizon;
  const Vector lambda_inv = m.Lambda.diagonal().cwiseInverse();
  const Matrix gc_scaled = (m.G - m.C_mat) * lambda_inv.asDiagonal();

  PriceSlope s;
  const Matrix op = Matrix::Identity(n, n) - ((t - 1.0) / (t + 1.0)) * gc_scaled;
  s.Xi = numerics::solve_linear(op, m.a());
  s.Phi = gc_scaled * s.Xi - s.Xi;
  return s;
}

bool check_homogeneous_slope(const ModelMatrices& m, int horizon) {
  const auto& a = m.params.a;
  const auto& b = m.params.b;
  if (a.maxCoeff() - a.minCoeff() > 1e-12 || b.maxCoeff() - b.minCoeff() > 1e-12) {
    throw Error(ErrorCode::NotHomogeneous, "price-slope sign check needs homogeneous a and b");
  }
  return (price_slope(m, horizon).Phi.array() < 0.0).all();
}

double simultaneous_revenue(const ModelMatrices& m, const std::vector<Vector>& schedule) {
  const auto n = m.n();
  const Matrix gc = m.G - m.C_mat;
  const Vector lambda = m.Lambda.diagonal();
  Vector y = Vector::Zero(n);
  double total = 0.0;
  for (const auto& x : schedule) {
    if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "schedule dimension mismatch");
    const Vector y_next = y + x;
    const Vector p = m.a() + gc * y - lambda.cwiseProduct(y_next);
    total += p.dot(x);
    y = y_next;
  }
  return total;
}

DemandTrajectory run_greedy(const ModelMatrices& m, int periods) {
  if (periods < 1) throw Error(ErrorCode::InvalidArgument, "number of periods must be >= 1");
  const auto n = m.n();
  const Matrix gc = m.G - m.C_mat;
  const Vector two_b = 2.0 * m.params.b;

  DemandTrajectory traj;
  traj.periods = periods;
  Vector y = Vector::Zero(n);
  for (int k = 1; k <= periods; ++k) {
    const Vector a_hat = m.a() + gc * y - two_b.cwiseProduct(y);
    const Vector x = (a_hat.array() / (2.0 * two_b.array())).max(0.0).matrix();
    Vector p = a_hat - two_b.cwiseProduct(x);
    y += x;
    traj.per_period_revenue.push_back(p.dot(x));
    traj.x.push_back(x);
    traj.y.push_back(y);
    traj.p.push_back(std::move(p));
    traj.orders.push_back(VisitOrder::identity(n));
  }
  return traj;
}

}  // namespace netprice
