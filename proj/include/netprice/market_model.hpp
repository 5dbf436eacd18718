#pragma once

#include <string>
#include <vector>

#include "netprice/numerics.hpp"
#include "netprice/social_graph.hpp"

namespace netprice {

/// Intrinsic utility coefficients: f_i(x) = a_i x - b_i x^2, plus the shared
/// congestion coefficient c (the utility carries c/2 times the squared total).
struct MarketParams {
  Vector a;
  Vector b;
  double c = 0.0;
};

/// Operators derived from (params, graph).
///
///   Lambda    = diag(2 b_i)
///   Lambda_c  = Lambda + diag(c/2)
///   C_mat     = c * ones * ones^T
///   M         = 2 Lambda_c - G + C_mat          (period demand operator)
///   L         = Lambda - G + C_mat               (limit demand operator)
///   D         = 2 Lambda_c - Lambda = diag(2 b_i + c)
///   T_op      = I - L M^{-1} = D M^{-1}          (period transition)
struct ModelMatrices {
  MarketParams params;
  Matrix G;
  Matrix Lambda;
  Matrix Lambda_c;
  Matrix C_mat;
  Matrix M;
  Matrix L;
  Vector D;
  Matrix T_op;
  numerics::Factorization<double> M_lu;

  Eigen::Index n() const { return G.rows(); }
  const Vector& a() const { return params.a; }
};

struct ValidationReport {
  bool assumption1_ok = false;
  Vector assumption1_margins;
  bool invertible = false;
  // Spectral radius of ((2 Lambda_c - Lambda) M^{-1})^2; NaN when M is singular.
  double rho_T_squared = 0.0;
  bool rho_converged = false;
  bool demand_nonnegative = false;
  std::vector<std::string> warnings;

  /// Assumption 1 holds, M is invertible and the transition contracts.
  bool ok() const { return assumption1_ok && invertible && rho_T_squared < 1.0; }
};

/// Throws InvalidArgument for dimension or sign violations of the params.
void check_params(const MarketParams& params, const SocialGraph& graph);

ModelMatrices build_matrices(const MarketParams& params, const SocialGraph& graph);

/// margins_i = 2 b_i - sum_{j != i} (g_ij - c). Fills only the assumption fields.
ValidationReport check_assumption1(const MarketParams& params, const SocialGraph& graph);

ValidationReport validate_model(const ModelMatrices& m);

/// Builds the matrices and validates; a singular M is reported, not thrown.
ValidationReport validate_model(const MarketParams& params, const SocialGraph& graph);

/// Spectral radius of T_op, from the eigenvalues of the similar symmetric
/// operator D^{1/2} M^{-1} D^{1/2}.
numerics::SpectralEstimate<double> transition_spectral_radius(const ModelMatrices& m);

/// a^T y - y^T (Lambda/2) y + y^T G y - (c/2) (sum_j y_j)^2.
double gross_utility(const Vector& y, const ModelMatrices& m);

/// Single-period net utility of user i at demand profile x and price p_i.
double user_net_utility(Eigen::Index i, const Vector& x, double p_i, const ModelMatrices& m);

}  // namespace netprice
