#include "netprice/sequential_pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace netprice {

namespace {

constexpr double kNegativeDemandTol = 1e-12;

void require_period(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "period index must be >= 1");
}

VisitOrder fair_order(const Vector& utilities) {
  VisitOrder v = VisitOrder::identity(utilities.size());
  std::stable_sort(v.order.begin(), v.order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return utilities(l) < utilities(r); });
  return v;
}

// Cumulative utilities from the cumulative demand and total payments so far.
Vector utilities_from(const Vector& y, const Vector& paid, const ModelMatrices& m) {
  const double total = y.sum();
  const double congestion = 0.5 * m.params.c * total * total;
  const Vector gy = m.G * y;
  Vector u(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    u(i) = m.params.a(i) * y(i) - m.params.b(i) * y(i) * y(i) + y(i) * gy(i) - congestion - paid(i);
  }
  return u;
}

}  // namespace

VisitOrder VisitOrder::identity(Eigen::Index n) {
  VisitOrder v;
  v.order.resize(static_cast<std::size_t>(n));
  std::iota(v.order.begin(), v.order.end(), Eigen::Index{0});
  return v;
}

VisitOrder VisitOrder::checked(std::vector<Eigen::Index> order, Eigen::Index n) {
  std::vector<bool> seen(static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)), false);
  bool ok = static_cast<Eigen::Index>(order.size()) == n;
  for (auto idx : order) {
    if (!ok) break;
    if (idx < 0 || idx >= n || seen[static_cast<std::size_t>(idx)]) {
      ok = false;
    } else {
      seen[static_cast<std::size_t>(idx)] = true;
    }
  }
  if (!ok) throw Error(ErrorCode::InvalidArgument, "visit order is not a permutation of 0..N-1");
  return VisitOrder{std::move(order)};
}

double DemandTrajectory::total_revenue() const {
  return std::accumulate(per_period_revenue.begin(), per_period_revenue.end(), 0.0);
}

Vector demand_step(const ModelMatrices& m, int k) {
  require_period(k);
  Vector ak = m.a();
  for (int t = 1; t < k; ++t) ak = m.T_op * ak;
  return m.M_lu.solve(ak);
}

Vector limit_demand(const ModelMatrices& m) {
  return numerics::solve_linear(m.L, m.a());
}

Vector anticipatory_prices(const ModelMatrices& m, int k) {
  require_period(k);
  Vector ak = m.a();
  for (int t = 1; t < k; ++t) ak = m.T_op * ak;
  const Vector xk = m.M_lu.solve(ak);
  return ak - m.L * xk;
}

Vector step4_prices(const ModelMatrices& m, const VisitOrder& order, const Vector& y_prev,
                    const Vector& x_k) {
  const auto n = m.n();
  if (m.G != m.G.transpose()) throw Error(ErrorCode::AsymmetricTies, "tie matrix is not symmetric");
  if (static_cast<Eigen::Index>(order.order.size()) != n || y_prev.size() != n || x_k.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch in step-4 prices");
  }
  const double c = m.params.c;
  const Vector gy = m.G * y_prev;
  Vector p(n);
  // Demand of users already visited this period.
  Vector seen = Vector::Zero(n);
  double seen_total = 0.0;
  for (auto i : order.order) {
    const double b = m.params.b(i);
    p(i) = m.params.a(i) - 2.0 * b * (y_prev(i) + x_k(i)) + gy(i) + m.G.col(i).dot(seen) -
           c * y_prev(i) - c * seen_total;
    seen(i) = x_k(i);
    seen_total += x_k(i);
  }
  return p;
}

DemandTrajectory run_sequential(const ModelMatrices& m, int periods, PriceConvention convention,
                                const OrderPolicy& policy) {
  if (periods < 1) throw Error(ErrorCode::InvalidArgument, "number of periods must be >= 1");
  const auto n = m.n();
  if (const auto* fixed = std::get_if<FixedOrder>(&policy)) {
    VisitOrder::checked(fixed->order.order, n);
  }

  DemandTrajectory traj;
  traj.periods = periods;
  traj.convention = convention;

  Vector ak = m.a();
  Vector y = Vector::Zero(n);
  Vector paid = Vector::Zero(n);
  for (int k = 1; k <= periods; ++k) {
    if (k > 1) ak = m.T_op * ak;
    const Vector xk = m.M_lu.solve(ak);
    if ((xk.array() < -kNegativeDemandTol).any()) traj.negative_demand_periods.push_back(k);

    VisitOrder order;
    if (const auto* fixed = std::get_if<FixedOrder>(&policy)) {
      order = fixed->order;
    } else if (k == 1) {
      order = VisitOrder::identity(n);
    } else {
      order = fair_order(utilities_from(y, paid, m));
    }

    Vector pk = convention == PriceConvention::Anticipatory ? Vector(ak - m.L * xk)
                                                            : step4_prices(m, order, y, xk);
    y += xk;
    paid += pk.cwiseProduct(xk);

    traj.per_period_revenue.push_back(pk.dot(xk));
    traj.x.push_back(xk);
    traj.y.push_back(y);
    traj.p.push_back(std::move(pk));
    traj.orders.push_back(std::move(order));
  }
  return traj;
}

Vector cumulative_user_utilities(const DemandTrajectory& traj, int k, const ModelMatrices& m) {
  if (k < 0 || k > static_cast<int>(traj.x.size())) {
    std::ostringstream msg;
    msg << "period " << k << " outside trajectory of length " << traj.x.size();
    throw Error(ErrorCode::IndexOutOfRange, msg.str());
  }
  const auto n = m.n();
  if (k == 0) return Vector::Zero(n);
  Vector paid = Vector::Zero(n);
  for (int t = 0; t < k; ++t) paid += traj.p[t].cwiseProduct(traj.x[t]);
  return utilities_from(traj.y[k - 1], paid, m);
}

double cumulative_user_utility(Eigen::Index i, const DemandTrajectory& traj, int k,
                               const ModelMatrices& m) {
  if (i < 0 || i >= m.n()) throw Error(ErrorCode::IndexOutOfRange, "user index out of range");
  return cumulative_user_utilities(traj, k, m)(i);
}

double revenue_closed_form(const ModelMatrices& m) {
  const Vector x_hat = m.M_lu.solve(m.a());
  const Vector y_inf = limit_demand(m);
  const Vector rhs = m.M * y_inf;
  const Vector z = numerics::solve_linear(Matrix(2.0 * m.M - m.L), rhs);
  return x_hat.dot(m.D.cwiseProduct(z));
}

double revenue_closed_form_commuting(const ModelMatrices& m) {
  const auto n = m.n();
  const Matrix l_minv = m.M_lu.solve(m.L.transpose()).transpose();  // L M^{-1}
  const Matrix inner = 2.0 * Matrix::Identity(n, n) - l_minv;
  const Vector w = numerics::solve_linear(inner, m.a());
  const Vector v = m.M_lu.solve(numerics::solve_linear(m.L, w));
  return m.a().dot(m.D.cwiseProduct(v));
}

double revenue_tail_bound(const ModelMatrices& m, int periods) {
  if (periods < 0) throw Error(ErrorCode::InvalidArgument, "number of periods must be >= 0");
  const double rho = transition_spectral_radius(m).value;
  if (!(rho < 1.0)) return std::numeric_limits<double>::infinity();
  const Vector x1 = m.M_lu.solve(m.a());
  const double first = x1.dot(m.D.cwiseProduct(x1));
  return std::pow(rho, 2.0 * periods) / (1.0 - rho * rho) * first;
}

double welfare_dynamic(const ModelMatrices& m) {
  const Vector y_inf = limit_demand(m);
  const Matrix half = 0.5 * (m.Lambda + m.C_mat);
  return y_inf.dot(half * y_inf) - revenue_closed_form(m);
}

SymmetricClosedForms symmetric_closed_forms(double a, double b, double g, double c, int n, int k,
                                            int m) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (m < 1 || m > n) {
    std::ostringstream msg;
    msg << "visiting position " << m << " outside [1, " << n << "]";
    throw Error(ErrorCode::InvalidPosition, msg.str());
  }
  require_period(k);
  const double nn = n;
  const double denom = 4.0 * b + c - (nn - 1.0) * g + nn * c;
  const double rho = (2.0 * b + c) / denom;
  const double x1 = a / denom;

  SymmetricClosedForms out;
  out.x_k = x1 * std::pow(rho, k - 1);
  const double y_prev = x1 * (1.0 - std::pow(rho, k - 1)) / (1.0 - rho);
  const double before = m - 1.0;
  // Coefficients of y^(k-1) and x^(k) in the step-4 price.
  const double cy = -2.0 * b + (nn - 1.0) * g - c;
  const double cx = -2.0 * b + before * (g - c);
  out.p_km = a + cy * y_prev + cx * out.x_k;

  const double sum_x = x1 / (1.0 - rho);
  const double sum_x2 = x1 * x1 / (1.0 - rho * rho);
  const double sum_yx = x1 * x1 / (1.0 - rho) * (1.0 / (1.0 - rho) - 1.0 / (1.0 - rho * rho));
  const double paid = a * sum_x + cy * sum_yx + cx * sum_x2;
  const double y = sum_x;
  out.u_m_limit = a * y - b * y * y + (nn - 1.0) * g * y * y - 0.5 * c * (nn * y) * (nn * y) - paid;
  return out;
}

}  // namespace netprice
