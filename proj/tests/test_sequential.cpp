#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "expect_error.hpp"
#include "generators.hpp"
#include "netprice/sequential_pricing.hpp"
#include "netprice/static_pricing.hpp"

using netprice::DemandCheck;
using netprice::ErrorCode;
using netprice::FixedOrder;
using netprice::Matrix;
using netprice::PriceConvention;
using netprice::RoundRobinFair;
using netprice::Vector;
using netprice::VisitOrder;
using testing::code_of;

namespace {

gen::Instance scalar_instance() {
  return gen::make(Vector::Ones(1), Vector::Ones(1), 0.0, Matrix::Zero(1, 1));
}

gen::Instance pair_instance() { return gen::symmetric(2, 1.0, 1.0, 0.5, 0.2); }

const double kX1 = 1.0 / 4.1;
const double kRho = 2.2 / 4.1;

double rel_diff(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

VisitOrder random_order(std::mt19937_64& rng, Eigen::Index n) {
  VisitOrder v = VisitOrder::identity(n);
  std::shuffle(v.order.begin(), v.order.end(), rng);
  return v;
}

// Assumption 1 alone does not make the transition contract, so properties that
// need convergence draw from instances that pass the full validation.
template <typename Draw>
gen::Instance until_valid(std::mt19937_64& rng, Draw draw) {
  for (;;) {
    gen::Instance inst = draw(rng);
    if (netprice::validate_model(inst.params, inst.graph).ok()) return inst;
  }
}

double spread(const Vector& v) { return v.maxCoeff() - v.minCoeff(); }

// Random symmetric instance satisfying Assumption 1.
gen::Instance random_symmetric(std::mt19937_64& rng, int n_min = 2, int n_max = 12) {
  std::uniform_int_distribution<int> nd(n_min, n_max);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const int n = nd(rng);
    const double b = 0.5 + 2.0 * u(rng);
    const double c = u(rng) < 0.3 ? 0.0 : 0.5 * u(rng);
    const double g = (2.0 * b / std::max(1, n - 1) + c) * u(rng);
    auto inst = gen::symmetric(n, 0.5 + u(rng), b, g, c);
    if (gen::assumption1(inst)) return inst;
  }
}

}  // namespace

TEST_CASE("demand_step examples") {
  const auto m1 = scalar_instance().model();
  CHECK(netprice::demand_step(m1, 1)(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(netprice::demand_step(m1, 2)(0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(netprice::demand_step(m1, 3)(0) == doctest::Approx(0.0625).epsilon(1e-15));

  const auto m2 = pair_instance().model();
  const Vector x2 = netprice::demand_step(m2, 2);
  CHECK(x2(0) == doctest::Approx(kRho * kX1).epsilon(1e-14));
  CHECK(x2(1) == doctest::Approx(0.130876).epsilon(1e-5));
  CHECK(netprice::demand_step(m2, 1)(0) == doctest::Approx(0.243902).epsilon(1e-6));

  CHECK(code_of([&] { netprice::demand_step(m2, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("period one coincides with the static outcome") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    const auto inst = gen::around_defaults(rng);
    const auto m = inst.model();
    const auto s = netprice::solve_static(m, DemandCheck::Permissive);
    CHECK(netprice::demand_step(m, 1) == s.x_hat);
    // a - L x and D x agree up to rounding.
    const Vector p1 = netprice::anticipatory_prices(m, 1);
    CHECK((p1 - s.p_hat).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, s.p_hat.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("limit_demand examples") {
  CHECK(netprice::limit_demand(scalar_instance().model())(0) == doctest::Approx(0.5).epsilon(1e-15));
  const Vector y = netprice::limit_demand(pair_instance().model());
  CHECK(y(0) == doctest::Approx(1.0 / 1.9).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(0.526316).epsilon(1e-6));
  const Vector a{{1.0, 2.0, 3.0}}, b{{0.5, 1.0, 4.0}};
  const Vector yd = netprice::limit_demand(gen::make(a, b, 0.0, Matrix::Zero(3, 3)).model());
  for (int i = 0; i < 3; ++i) CHECK(yd(i) == doctest::Approx(a(i) / (2.0 * b(i))).epsilon(1e-15));
}

TEST_CASE("anticipatory_prices examples") {
  const auto m1 = scalar_instance().model();
  CHECK(netprice::anticipatory_prices(m1, 1)(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(netprice::anticipatory_prices(m1, 2)(0) == doctest::Approx(0.25).epsilon(1e-15));
  const Vector p = netprice::anticipatory_prices(pair_instance().model(), 1);
  CHECK(p(0) == doctest::Approx(1.0 - 1.9 * kX1).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(0.536585).epsilon(1e-6));
}

TEST_CASE("step4_prices examples") {
  const auto m = pair_instance().model();
  const Vector x = Vector::Constant(2, kX1);
  const Vector p01 = netprice::step4_prices(m, VisitOrder::identity(2), Vector::Zero(2), x);
  CHECK(p01(0) == doctest::Approx(1.0 - 2.0 * kX1).epsilon(1e-14));
  CHECK(p01(1) == doctest::Approx(1.0 - 2.0 * kX1 + 0.3 * kX1).epsilon(1e-14));
  CHECK(p01(0) == doctest::Approx(0.512195).epsilon(1e-6));
  CHECK(p01(1) == doctest::Approx(0.585366).epsilon(1e-6));

  const Vector p10 = netprice::step4_prices(m, VisitOrder::checked({1, 0}, 2), Vector::Zero(2), x);
  CHECK(p10(0) == p01(1));
  CHECK(p10(1) == p01(0));
  CHECK(p10.dot(x) == doctest::Approx(p01.dot(x)).epsilon(1e-15));

  const auto m1 = scalar_instance().model();
  const Vector x1 = netprice::demand_step(m1, 1);
  CHECK(netprice::step4_prices(m1, VisitOrder::identity(1), Vector::Zero(1), x1)(0) ==
        doctest::Approx(1.0 - 2.0 * x1(0)).epsilon(1e-15));
}

TEST_CASE("step4_prices rejects asymmetric ties and bad orders") {
  auto m = pair_instance().model();
  m.G(0, 1) = 0.7;
  CHECK(code_of([&] {
          netprice::step4_prices(m, VisitOrder::identity(2), Vector::Zero(2), Vector::Ones(2));
        }) == ErrorCode::AsymmetricTies);
  CHECK(code_of([] { VisitOrder::checked({0, 0}, 2); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { VisitOrder::checked({0, 2}, 2); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { VisitOrder::checked({0}, 2); }) == ErrorCode::InvalidArgument);
  const auto m2 = pair_instance().model();
  CHECK(code_of([&] { netprice::run_sequential(m2, 3, PriceConvention::Step4, FixedOrder{VisitOrder{{1, 1}}}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { netprice::run_sequential(m2, 0, PriceConvention::Step4, RoundRobinFair{}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("run_sequential examples") {
  const auto m1 = scalar_instance().model();
  for (auto conv : {PriceConvention::Anticipatory, PriceConvention::Step4}) {
    const auto t = netprice::run_sequential(m1, 3, conv, FixedOrder{VisitOrder::identity(1)});
    REQUIRE(t.per_period_revenue.size() == 3);
    CHECK(t.per_period_revenue[0] == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(t.per_period_revenue[1] == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(t.per_period_revenue[2] == doctest::Approx(0.0078125).epsilon(1e-15));
  }

  const auto m2 = pair_instance().model();
  const auto ta = netprice::run_sequential(m2, 1, PriceConvention::Anticipatory, RoundRobinFair{});
  CHECK(ta.per_period_revenue[0] == doctest::Approx(2.0 * 2.2 * kX1 * kX1).epsilon(1e-14));
  CHECK(ta.per_period_revenue[0] == doctest::Approx(0.261749).epsilon(1e-6));

  const auto ts = netprice::run_sequential(m2, 1, PriceConvention::Step4, FixedOrder{VisitOrder::identity(2)});
  CHECK(ts.per_period_revenue[0] == doctest::Approx(kX1 * (2.0 - 3.7 * kX1)).epsilon(1e-14));
  CHECK(ts.per_period_revenue[0] == doctest::Approx(0.267698).epsilon(1e-6));
}

TEST_CASE("trajectory invariants and the residual-demand oracle") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 40; ++t) {
    const auto inst = until_valid(rng, [t](std::mt19937_64& r) {
      return t % 2 ? gen::around_defaults(r) : gen::network_heavy(r);
    });
    const auto m = inst.model();
    const int K = 30;
    const auto traj = netprice::run_sequential(m, K, PriceConvention::Anticipatory, RoundRobinFair{});
    const auto ref = oracle::sequential(inst.market(), K);
    REQUIRE(traj.x.size() == static_cast<std::size_t>(K));
    CHECK(traj.periods == K);
    const double xs = std::max(1e-12, oracle::max_abs(ref.x[0]));
    const double ps = std::max(1e-12, oracle::max_abs(ref.p[0]));
    for (int k = 0; k < K; ++k) {
      const Vector prev = k ? traj.y[k - 1] : Vector::Zero(m.n());
      CHECK((traj.y[k] - prev - traj.x[k]).cwiseAbs().maxCoeff() <=
            4.0 * std::numeric_limits<double>::epsilon() * traj.y[k].cwiseAbs().maxCoeff());
      CHECK(rel_diff(traj.per_period_revenue[k], traj.p[k].dot(traj.x[k])) <= 1e-12);
      CHECK(oracle::max_abs_diff(oracle::to_vec(traj.x[k]), ref.x[k]) <= 1e-10 * xs);
      CHECK(oracle::max_abs_diff(oracle::to_vec(traj.y[k]), ref.y[k]) <= 1e-10 * xs * (k + 1));
      CHECK(oracle::max_abs_diff(oracle::to_vec(traj.p[k]), ref.p[k]) <= 1e-10 * ps);
      CHECK(std::abs(traj.per_period_revenue[k] - ref.revenue[k]) <= 1e-10 * std::abs(ref.revenue[0]));
    }
    CHECK(traj.x[4] == netprice::demand_step(m, 5));
  }
}

TEST_CASE("step4 prices match the literal oracle and revenue is order invariant") {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 20; ++t) {
    const auto inst = t % 2 ? gen::around_defaults(rng) : gen::network_heavy(rng);
    const auto m = inst.model();
    const auto mk = inst.market();
    const auto base = netprice::run_sequential(m, 5, PriceConvention::Step4, FixedOrder{VisitOrder::identity(m.n())});
    for (int r = 0; r < 10; ++r) {
      const VisitOrder order = random_order(rng, m.n());
      const auto traj = netprice::run_sequential(m, 5, PriceConvention::Step4, FixedOrder{order});
      std::vector<std::size_t> ord(order.order.begin(), order.order.end());
      for (int k = 0; k < 5; ++k) {
        const Vector prev = k ? traj.y[k - 1] : Vector::Zero(m.n());
        const oracle::Vec p_ref = oracle::step4(mk, ord, oracle::to_vec(prev), oracle::to_vec(traj.x[k]));
        CHECK(oracle::max_abs_diff(oracle::to_vec(traj.p[k]), p_ref) <= 1e-12 * std::max(1.0, oracle::max_abs(p_ref)));
        CHECK(rel_diff(traj.per_period_revenue[k], base.per_period_revenue[k]) <= 1e-10);
      }
    }
  }
}

TEST_CASE("fair order policy") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto inst = gen::around_defaults(rng, {.n_min = 3, .n_max = 10});
    const auto m = inst.model();
    const auto traj = netprice::run_sequential(m, 8, PriceConvention::Step4, RoundRobinFair{});
    CHECK(traj.orders[0].order == VisitOrder::identity(m.n()).order);
    for (int k = 1; k < 8; ++k) {
      const Vector u = netprice::cumulative_user_utilities(traj, k, m);
      const auto& ord = traj.orders[k].order;
      for (std::size_t q = 1; q < ord.size(); ++q) {
        const bool ok = u(ord[q - 1]) < u(ord[q]) || (u(ord[q - 1]) == u(ord[q]) && ord[q - 1] < ord[q]);
        CHECK(ok);
      }
    }
  }
  // Equal utilities fall back to index order.
  const auto sym = gen::symmetric(4, 1.0, 1.0, 0.0, 0.0);
  const auto ta = netprice::run_sequential(sym.model(), 3, PriceConvention::Anticipatory, RoundRobinFair{});
  for (const auto& o : ta.orders) CHECK(o.order == VisitOrder::identity(4).order);
}

TEST_CASE("cumulative_user_utility examples") {
  const auto m1 = scalar_instance().model();
  const auto t1 = netprice::run_sequential(m1, 2, PriceConvention::Anticipatory, RoundRobinFair{});
  CHECK(netprice::cumulative_user_utility(0, t1, 0, m1) == 0.0);
  CHECK(netprice::cumulative_user_utility(0, t1, 1, m1) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(netprice::cumulative_user_utility(0, t1, 1, m1) ==
        doctest::Approx(netprice::user_net_utility(0, t1.x[0], t1.p[0](0), m1)).epsilon(1e-15));
  CHECK(code_of([&] { netprice::cumulative_user_utility(0, t1, 3, m1); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { netprice::cumulative_user_utility(0, t1, -1, m1); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { netprice::cumulative_user_utility(1, t1, 1, m1); }) == ErrorCode::IndexOutOfRange);

  const auto m2 = pair_instance().model();
  const auto t2 = netprice::run_sequential(m2, 60, PriceConvention::Anticipatory, RoundRobinFair{});
  const Vector u = netprice::cumulative_user_utilities(t2, 60, m2);
  CHECK(u(0) == doctest::Approx(u(1)).epsilon(1e-14));
}

TEST_CASE("convergence to the limit demand") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const auto inst = until_valid(rng, [](std::mt19937_64& r) { return gen::around_defaults(r); });
    const auto m = inst.model();
    const auto vr = netprice::validate_model(m);
    REQUIRE(vr.ok());
    const double rho = std::sqrt(vr.rho_T_squared);
    const Vector y_inf = netprice::limit_demand(m);
    const Vector sqrt_d = m.D.cwiseSqrt();
    auto dnorm = [&](const Vector& v) { return v.cwiseProduct(sqrt_d).norm(); };

    const int K = std::min(2000, static_cast<int>(std::ceil(std::log(1e-13) / std::log(rho))) + 1);
    const auto traj = netprice::run_sequential(m, K, PriceConvention::Anticipatory, RoundRobinFair{});
    const double e1 = dnorm(traj.y[0] - y_inf);
    const double e1_inf = (traj.y[0] - y_inf).cwiseAbs().maxCoeff() / y_inf.cwiseAbs().maxCoeff();
    // Norm equivalence between the D-weighted 2-norm and the max norm.
    const double kappa = std::sqrt(m.n() * m.D.maxCoeff() / m.D.minCoeff()) * e1_inf;
    double prev = e1;
    for (int k = 2; k <= K; ++k) {
      const Vector err = traj.y[k - 1] - y_inf;
      const double ek = dnorm(err);
      CHECK(ek <= std::pow(rho, k - 1) * e1 * (1.0 + 1e-9) + 1e-13 * dnorm(y_inf));
      if (ek > 1e-11 * dnorm(y_inf)) CHECK(ek < prev);
      const double rel_inf = err.cwiseAbs().maxCoeff() / y_inf.cwiseAbs().maxCoeff();
      CHECK(rel_inf <= std::pow(rho, k - 1) * kappa * (1.0 + 1e-9) + 1e-12);
      prev = ek;
    }
    if (K < 2000) {
      CHECK((traj.y.back() - y_inf).cwiseAbs().maxCoeff() / y_inf.cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("revenue closed form against the summed oracle") {
  CHECK(netprice::revenue_closed_form(scalar_instance().model()) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  const double pi_d = 2.0 * 2.2 * kX1 * kX1 / (1.0 - kRho * kRho);
  CHECK(netprice::revenue_closed_form(pair_instance().model()) == doctest::Approx(pi_d).epsilon(1e-13));
  CHECK(pi_d == doctest::Approx(0.3675856).epsilon(1e-7));

  std::mt19937_64 rng(44);
  int hetero_gap = 0;
  for (int t = 0; t < 60; ++t) {
    const auto inst = until_valid(rng, [t](std::mt19937_64& r) {
      return t % 3 ? gen::around_defaults(r) : gen::network_heavy(r);
    });
    const auto m = inst.model();
    const double closed = netprice::revenue_closed_form(m);
    const double summed = oracle::sequential_revenue_sum(inst.market());
    CHECK(rel_diff(closed, summed) <= 1e-10);
    const double commuting = netprice::revenue_closed_form_commuting(m);
    if (rel_diff(commuting, closed) > 1e-8) ++hetero_gap;
  }
  // The printed commuting form is off whenever b is heterogeneous.
  CHECK(hetero_gap > 30);

  std::mt19937_64 rng2(45);
  for (int t = 0; t < 30; ++t) {
    const auto inst = until_valid(rng2, [](std::mt19937_64& r) { return gen::homogeneous(r); });
    const auto m = inst.model();
    CHECK(rel_diff(netprice::revenue_closed_form_commuting(m), netprice::revenue_closed_form(m)) <= 1e-10);
  }
}

TEST_CASE("truncated revenue stays within the tail bound") {
  std::mt19937_64 rng(46);
  for (int t = 0; t < 20; ++t) {
    const auto inst = until_valid(rng, [](std::mt19937_64& r) { return gen::around_defaults(r); });
    const auto m = inst.model();
    const double closed = netprice::revenue_closed_form(m);
    const auto traj = netprice::run_sequential(m, 200, PriceConvention::Anticipatory, RoundRobinFair{});
    double partial = 0.0;
    for (int k = 1; k <= 200; ++k) {
      partial += traj.per_period_revenue[k - 1];
      CHECK(std::abs(closed - partial) <= netprice::revenue_tail_bound(m, k) + 1e-12 * std::abs(closed));
    }
  }
  CHECK(netprice::revenue_tail_bound(scalar_instance().model(), 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(code_of([] { netprice::revenue_tail_bound(scalar_instance().model(), -1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("welfare_dynamic examples and identity") {
  const auto m1 = scalar_instance().model();
  CHECK(netprice::welfare_dynamic(m1) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  const auto m2 = pair_instance().model();
  const double y = 1.0 / 1.9;
  const double u_d = (2.0 * y - 1.4 * y * y) - netprice::revenue_closed_form(m2);
  CHECK(netprice::welfare_dynamic(m2) == doctest::Approx(u_d).epsilon(1e-13));
  CHECK(netprice::welfare_dynamic(m2) == doctest::Approx(0.297234).epsilon(1e-6));

  std::mt19937_64 rng(47);
  for (int t = 0; t < 40; ++t) {
    const auto inst = until_valid(rng, [](std::mt19937_64& r) { return gen::network_heavy(r); });
    const auto m = inst.model();
    const double gross = netprice::gross_utility(netprice::limit_demand(m), m);
    const double w = netprice::welfare_dynamic(m);
    CHECK(std::abs(w - (gross - netprice::revenue_closed_form(m))) <= 1e-10 * std::max(std::abs(w), std::abs(gross)));
  }
}

TEST_CASE("dynamic pricing dominates static pricing") {
  // Dominance needs a contracting transition and interior static demand on
  // top of Assumption 1.
  std::mt19937_64 rng(48);
  int checked = 0;
  while (checked < 200) {
    const auto inst = until_valid(rng, [checked](std::mt19937_64& r) {
      return checked % 2 ? gen::around_defaults(r) : gen::network_heavy(r);
    });
    const auto m = inst.model();
    const auto s = netprice::solve_static(m, DemandCheck::Permissive);
    if (s.negative_demand) continue;
    ++checked;
    CHECK(netprice::revenue_closed_form(m) >= s.revenue * (1.0 - 1e-9));
    CHECK(netprice::welfare_dynamic(m) >= s.welfare * (1.0 - 1e-9));
  }
}

TEST_CASE("assumption 1 alone does not make the transition contract") {
  // Margins 3.2, 0.7, 0.3 are all positive, yet L = Lambda - G + C has a
  // negative eigenvalue, so T_op has spectral radius above one.
  Matrix g = Matrix::Zero(3, 3);
  g(1, 2) = g(2, 1) = 2.1;
  const auto inst = gen::make(Vector::Ones(3), Vector{{0.6, 0.4, 0.2}}, 1.0, g);
  const auto a1 = netprice::check_assumption1(inst.params, inst.graph);
  CHECK(a1.assumption1_ok);
  CHECK(a1.assumption1_margins(2) == doctest::Approx(0.3).epsilon(1e-12));
  const auto m = inst.model();
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(m.L).eigenvalues().minCoeff() < 0.0);
  const auto r = netprice::validate_model(m);
  CHECK(std::sqrt(r.rho_T_squared) == doctest::Approx(1.2202165).epsilon(1e-6));
  CHECK_FALSE(r.ok());
  CHECK(std::isinf(netprice::revenue_tail_bound(m, 10)));
}

TEST_CASE("symmetric closed forms examples") {
  const auto f = netprice::symmetric_closed_forms(1.0, 1.0, 0.5, 0.2, 2, 1, 1);
  CHECK(f.x_k == doctest::Approx(kX1).epsilon(1e-15));
  CHECK(f.x_k == doctest::Approx(0.243902).epsilon(1e-6));
  CHECK(f.x_k != doctest::Approx(1.0 / 3.9));

  for (double c : {0.0, 0.7}) {
    const double rho = (2.0 + c) / (4.0 + 2.0 * c);
    const auto s = netprice::symmetric_closed_forms(1.5, 1.0, 0.0, c, 1, 4, 1);
    CHECK(s.x_k == doctest::Approx(1.5 * std::pow(rho, 3) / (4.0 + 2.0 * c)).epsilon(1e-14));
  }

  // c = 0, k = 1: p_m = a (2b - (N - m) g) / (4b - (N - 1) g).
  for (int m = 1; m <= 5; ++m) {
    const auto s = netprice::symmetric_closed_forms(2.0, 1.5, 0.4, 0.0, 5, 1, m);
    CHECK(s.p_km == doctest::Approx(2.0 * (3.0 - (5 - m) * 0.4) / (6.0 - 4 * 0.4)).epsilon(1e-14));
  }

  CHECK(code_of([] { netprice::symmetric_closed_forms(1, 1, 0.5, 0.2, 2, 1, 3); }) == ErrorCode::InvalidPosition);
  CHECK(code_of([] { netprice::symmetric_closed_forms(1, 1, 0.5, 0.2, 2, 1, 0); }) == ErrorCode::InvalidPosition);
}

TEST_CASE("symmetric closed forms match the matrix pipeline") {
  std::mt19937_64 rng(49);
  for (int t = 0; t < 50; ++t) {
    const auto inst = random_symmetric(rng);
    const int n = inst.n();
    const double a = inst.params.a(0), b = inst.params.b(0), c = inst.params.c;
    const double g = n > 1 ? inst.graph.ties(0, 1) : 0.0;
    const auto m = inst.model();
    const int K = 12;
    const auto traj = netprice::run_sequential(m, K, PriceConvention::Step4, FixedOrder{VisitOrder::identity(n)});
    for (int k = 1; k <= K; ++k) {
      for (int pos = 1; pos <= n; ++pos) {
        const auto f = netprice::symmetric_closed_forms(a, b, g, c, n, k, pos);
        CHECK(std::abs(f.x_k - traj.x[k - 1](pos - 1)) <= 1e-12 * traj.x[0](0));
        CHECK(std::abs(f.p_km - traj.p[k - 1](pos - 1)) <= 1e-12 * std::max(1.0, a));
      }
    }
    // Infinite-horizon utility of the user at each fixed position.
    const double rho = (2.0 * b + c) / (4.0 * b + c - (n - 1) * g + n * c);
    const int long_k = static_cast<int>(std::ceil(std::log(1e-17) / std::log(rho))) + 5;
    const auto longer = netprice::run_sequential(m, long_k, PriceConvention::Step4, FixedOrder{VisitOrder::identity(n)});
    const Vector u = netprice::cumulative_user_utilities(longer, long_k, m);
    for (int pos = 1; pos <= n; ++pos) {
      const auto f = netprice::symmetric_closed_forms(a, b, g, c, n, 1, pos);
      CHECK(std::abs(f.u_m_limit - u(pos - 1)) <= 1e-10 * std::max(1.0, std::abs(u(pos - 1))));
    }
  }
}

TEST_CASE("fair reordering narrows the utility spread on symmetric instances") {
  std::mt19937_64 rng(50);
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_symmetric(rng, 3, 15);
    const auto m = inst.model();
    const auto fixed = netprice::run_sequential(m, 50, PriceConvention::Step4, FixedOrder{VisitOrder::identity(m.n())});
    const auto fair = netprice::run_sequential(m, 50, PriceConvention::Step4, RoundRobinFair{});
    const double s_fixed = spread(netprice::cumulative_user_utilities(fixed, 50, m));
    const double s_fair = spread(netprice::cumulative_user_utilities(fair, 50, m));
    CHECK(s_fair <= s_fixed + 1e-12);
    // Revenue is unaffected by the order.
    CHECK(rel_diff(fair.total_revenue(), fixed.total_revenue()) <= 1e-10);
  }
}

TEST_CASE("negative demand is recorded, not fatal") {
  const Vector a{{0.1, 5.0}};
  const auto m = gen::make(a, Vector::Ones(2), 10.0, Matrix::Zero(2, 2)).model();
  const auto traj = netprice::run_sequential(m, 3, PriceConvention::Anticipatory, RoundRobinFair{});
  REQUIRE_FALSE(traj.negative_demand_periods.empty());
  CHECK(traj.negative_demand_periods.front() == 1);
}
