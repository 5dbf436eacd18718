#include "netprice/market_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace netprice {

namespace {

constexpr double kNegativeDemandTol = 1e-12;

}  // namespace

void check_params(const MarketParams& params, const SocialGraph& graph) {
  const auto n = graph.ties.rows();
  if (n < 1 || graph.ties.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "tie matrix must be square and non-empty");
  }
  if (params.a.size() != n || params.b.size() != n) {
    std::ostringstream msg;
    msg << "parameter vectors have lengths " << params.a.size() << "/" << params.b.size()
        << " but the graph has " << n << " users";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  if (!params.a.allFinite() || !params.b.allFinite() || !std::isfinite(params.c)) {
    throw Error(ErrorCode::InvalidArgument, "parameters must be finite");
  }
  if ((params.a.array() <= 0.0).any() || (params.b.array() <= 0.0).any() || params.c < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "require a_i > 0, b_i > 0 and c >= 0");
  }
  if (!satisfies_graph_invariants(graph.ties)) {
    throw Error(ErrorCode::InvalidArgument, "tie matrix violates symmetry/diagonal/sign invariants");
  }
}

ModelMatrices build_matrices(const MarketParams& params, const SocialGraph& graph) {
  check_params(params, graph);
  const auto n = graph.ties.rows();
  const double c = params.c;

  ModelMatrices m;
  m.params = params;
  m.G = graph.ties;
  m.Lambda = (2.0 * params.b).asDiagonal();
  m.Lambda_c = m.Lambda;
  m.Lambda_c.diagonal().array() += c / 2.0;
  m.C_mat = Matrix::Constant(n, n, c);
  m.M = 2.0 * m.Lambda_c - m.G + m.C_mat;
  m.L = m.Lambda - m.G + m.C_mat;
  m.D = (2.0 * m.Lambda_c - m.Lambda).diagonal();
  m.M_lu = numerics::Factorization<double>(m.M);
  // T_op = D M^{-1}; M is symmetric so M^{-1} D = (D M^{-1})^T.
  m.T_op = m.M_lu.solve(Matrix(m.D.asDiagonal())).transpose();
  return m;
}

ValidationReport check_assumption1(const MarketParams& params, const SocialGraph& graph) {
  check_params(params, graph);
  const auto n = graph.ties.rows();
  ValidationReport r;
  // g_ii = 0, so the row sum over j != i is the full row sum.
  const Vector neighbour_excess =
      graph.ties.rowwise().sum().array() - params.c * static_cast<double>(n - 1);
  r.assumption1_margins = 2.0 * params.b - neighbour_excess;
  r.assumption1_ok = (r.assumption1_margins.array() > 0.0).all();
  if (!r.assumption1_ok) r.warnings.emplace_back("Assumption 1 violated for at least one user");
  return r;
}

numerics::SpectralEstimate<double> transition_spectral_radius(const ModelMatrices& m) {
  const Vector root = m.D.array().sqrt();
  const Matrix minv_root = m.M_lu.solve(Matrix(root.asDiagonal()));
  Matrix sym = root.asDiagonal() * minv_root;
  sym = 0.5 * (sym + sym.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  numerics::SpectralEstimate<double> out;
  out.converged = eig.info() == Eigen::Success;
  out.value = out.converged ? eig.eigenvalues().cwiseAbs().maxCoeff()
                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

ValidationReport validate_model(const ModelMatrices& m) {
  SocialGraph g;
  g.n = m.n();
  g.ties = m.G;
  ValidationReport r = check_assumption1(m.params, g);
  r.invertible = true;

  const auto rho = transition_spectral_radius(m);
  r.rho_T_squared = rho.value * rho.value;
  r.rho_converged = rho.converged;
  if (!rho.converged) r.warnings.emplace_back("eigenvalue solver did not converge");
  if (!(r.rho_T_squared < 1.0)) {
    r.warnings.emplace_back("period transition does not contract (spectral radius >= 1)");
  }

  const Matrix m_inv = m.M_lu.inverse();
  if ((m_inv.array() < 0.0).any()) {
    r.warnings.emplace_back("(2 Lambda_c - G + C)^{-1} has negative entries");
  }
  const Vector x_hat = m.M_lu.solve(m.a());
  r.demand_nonnegative = (x_hat.array() >= -kNegativeDemandTol).all();
  if (!r.demand_nonnegative) r.warnings.emplace_back("static demand has negative entries");
  return r;
}

ValidationReport validate_model(const MarketParams& params, const SocialGraph& graph) {
  try {
    return validate_model(build_matrices(params, graph));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    ValidationReport r = check_assumption1(params, graph);
    r.invertible = false;
    r.rho_T_squared = std::numeric_limits<double>::quiet_NaN();
    r.warnings.emplace_back(std::string("2 Lambda_c - G + C is singular: ") + e.what());
    return r;
  }
}

double gross_utility(const Vector& y, const ModelMatrices& m) {
  const double total = y.sum();
  return m.a().dot(y) - 0.5 * y.dot(m.Lambda.diagonal().cwiseProduct(y)) + y.dot(m.G * y) -
         0.5 * m.params.c * total * total;
}

double user_net_utility(Eigen::Index i, const Vector& x, double p_i, const ModelMatrices& m) {
  if (i < 0 || i >= m.n()) throw Error(ErrorCode::IndexOutOfRange, "user index out of range");
  const double xi = x(i);
  const double total = x.sum();
  return m.params.a(i) * xi - m.params.b(i) * xi * xi + xi * m.G.row(i).dot(x) -
         0.5 * m.params.c * total * total - p_i * xi;
}

}  // namespace netprice
