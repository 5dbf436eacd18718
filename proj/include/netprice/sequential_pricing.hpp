#pragma once

// Sequential dynamic pricing: the operator visits users one by one in every
// period. Period-k demand is x^(k) = M^{-1} T_op^{k-1} a regardless of the
// visiting order; prices come in two conventions:
//
//   Anticipatory  p^(k) = a^(k) - (Lambda - G + C) x^(k)     (order-free)
//   Step4         per-user price that sees only the current-period demand of
//                 users visited earlier in the order          (order-sensitive)
//
// Total per-period revenue is order-invariant under both when G is symmetric.

#include <variant>
#include <vector>

#include "netprice/market_model.hpp"

namespace netprice {

enum class PriceConvention { Anticipatory, Step4 };

/// Permutation r_1..r_N of user indices.
struct VisitOrder {
  std::vector<Eigen::Index> order;

  static VisitOrder identity(Eigen::Index n);
  /// Throws InvalidArgument unless `order` is a permutation of 0..n-1.
  static VisitOrder checked(std::vector<Eigen::Index> order, Eigen::Index n);
};

struct FixedOrder {
  VisitOrder order;
};

/// Max-min fairness reordering: period 1 uses the identity order, later
/// periods visit users in ascending order of cumulative utility (ties by index).
struct RoundRobinFair {};

using OrderPolicy = std::variant<FixedOrder, RoundRobinFair>;

/// Entry k-1 of every sequence describes period k.
struct DemandTrajectory {
  int periods = 0;
  std::vector<Vector> x;
  std::vector<Vector> y;
  std::vector<Vector> p;
  std::vector<double> per_period_revenue;
  std::vector<VisitOrder> orders;
  PriceConvention convention = PriceConvention::Anticipatory;
  // Periods (1-based) whose demand had a component below -1e-12.
  std::vector<int> negative_demand_periods;

  double total_revenue() const;
};

/// x^(k) = M^{-1} T_op^{k-1} a, by repeated application of T_op.
Vector demand_step(const ModelMatrices& m, int k);

/// y_inf = (Lambda - G + C)^{-1} a.
Vector limit_demand(const ModelMatrices& m);

Vector anticipatory_prices(const ModelMatrices& m, int k);

/// Step-4 prices for one period given the cumulative demand before it and the
/// period demand. Throws AsymmetricTies when G is not exactly symmetric.
Vector step4_prices(const ModelMatrices& m, const VisitOrder& order, const Vector& y_prev,
                    const Vector& x_k);

DemandTrajectory run_sequential(const ModelMatrices& m, int periods, PriceConvention convention,
                                const OrderPolicy& policy);

/// Cumulative utility of user i after k periods; k = 0 gives 0.
double cumulative_user_utility(Eigen::Index i, const DemandTrajectory& traj, int k,
                               const ModelMatrices& m);

/// All users' cumulative utilities after k periods.
Vector cumulative_user_utilities(const DemandTrajectory& traj, int k, const ModelMatrices& m);

/// Infinite-horizon revenue sum_k x^(k)T D x^(k) under the anticipatory
/// convention, in closed form x_hat^T D (2M - L)^{-1} M y_inf.
double revenue_closed_form(const ModelMatrices& m);

/// a^T D M^{-1} L^{-1} (2I - L M^{-1})^{-1} a. Equal to revenue_closed_form
/// only when D and M commute (e.g. homogeneous b); kept for comparison.
double revenue_closed_form_commuting(const ModelMatrices& m);

/// Upper bound on sum_{k > K} Pi^(k): rho^{2K} / (1 - rho^2) * Pi^(1), with
/// rho the spectral radius of T_op. Infinite when rho >= 1.
double revenue_tail_bound(const ModelMatrices& m, int periods);

/// U_d = y_inf^T ((Lambda + C)/2) y_inf - Pi_d.
double welfare_dynamic(const ModelMatrices& m);

struct SymmetricClosedForms {
  double x_k = 0.0;
  double p_km = 0.0;
  double u_m_limit = 0.0;
};

/// Closed forms for a_i = a, b_i = b, g_ij = g (i != j) on N users, with
/// denominator D = 4b + c - (N-1) g + N c and ratio rho = (2b + c) / D.
/// p_km is the step-4 price of the m-th visited user in period k; u_m_limit the
/// infinite-horizon cumulative utility of a user always visited m-th.
SymmetricClosedForms symmetric_closed_forms(double a, double b, double g, double c, int n, int k,
                                            int m);

}  // namespace netprice
