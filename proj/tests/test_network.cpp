#include "doctest.h"

#include <Eigen/Dense>

#include "srn/reaction_network.hpp"
#include "srn/rng.hpp"
#include "support/test_helpers.hpp"

using namespace srn;
using namespace srn::testing;

TEST_SUITE_BEGIN("network");

TEST_CASE("stoichiometry matrix assembly") {
  const ReactionNetwork net = make_michaelis_menten();
  Eigen::MatrixXd expected(4, 3);
  expected << -1, 1, 1,
              -1, 1, 0,
               1, -1, -1,
               0, 0, 1;
  CHECK(net.stoichiometry() == expected);
  CHECK(net.species_count() == 4);
  CHECK(net.reaction_count() == 3);
  CHECK(net.param_count() == 3);

  for (int k = 0; k < net.reaction_count(); ++k)
    CHECK(net.stoichiometry().col(k) ==
          net.reactions()[k].net_change().cast<double>());
}

TEST_CASE("simplest valid network") {
  const ReactionNetwork net({make_reaction({0}, {1}, 0)}, 1);
  CHECK(net.stoichiometry() == Eigen::MatrixXd::Constant(1, 1, 1.0));
}

TEST_CASE("construction errors") {
  CHECK_THROWS_WITH_AS(ReactionNetwork({make_reaction({1}, {1}, 0)}, 1),
                       "zero reaction vector", std::invalid_argument);
  CHECK_THROWS_AS(ReactionNetwork({make_reaction({1, 0}, {0, 1}, 0)}, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(ReactionNetwork({make_reaction({0}, {1}, 0)}, 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ReactionNetwork({make_reaction({0}, {1}, 0)}, 1, -2.0),
                  std::invalid_argument);
}

TEST_CASE("mass-action rates at a reference point") {
  const ReactionNetwork net = make_michaelis_menten();
  Eigen::VectorXd s(4), theta(3);
  s << 45, 39, 55, 6;
  theta << 0.001, 0.005, 0.01;

  const Eigen::VectorXd v = reaction_rates(net, s, theta);
  CHECK(v(0) == doctest::Approx(1.755).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.275).epsilon(1e-12));
  CHECK(v(2) == doctest::Approx(0.55).epsilon(1e-12));

  const Eigen::VectorXd mu = drift(net, s, theta);
  CHECK(mu(0) == doctest::Approx(-0.93).epsilon(1e-12));
  CHECK(mu(1) == doctest::Approx(-1.48).epsilon(1e-12));
  CHECK(mu(2) == doctest::Approx(0.93).epsilon(1e-12));
  CHECK(mu(3) == doctest::Approx(0.55).epsilon(1e-12));

  const Eigen::MatrixXd D = diffusion_matrix(net, s, theta);
  CHECK(D(0, 0) == doctest::Approx(2.58).epsilon(1e-12));
  CHECK(D == D.transpose());

  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 1, ev);
  CHECK(ev.jac_state(0, 0) == doctest::Approx(0.039).epsilon(1e-12));
  CHECK(ev.dparam(0) == doctest::Approx(1755.0).epsilon(1e-12));
  CHECK(ev.dparam(1) == doctest::Approx(55.0).epsilon(1e-12));
}

TEST_CASE("zero rates for zero constants and empty systems") {
  const ReactionNetwork net = make_michaelis_menten();
  Eigen::VectorXd s(4), theta0(3);
  s << 45, 39, 55, 6;
  theta0.setZero();
  CHECK(reaction_rates(net, s, theta0).isZero());
  CHECK(drift(net, s, theta0).isZero());
  CHECK(diffusion_matrix(net, s, theta0).isZero());
  CHECK(drift_jacobian_state(net, s, theta0).isZero());

  Eigen::VectorXd zero_state = Eigen::VectorXd::Zero(4), theta(3);
  theta << 0.5, 0.5, 0.5;
  CHECK(reaction_rates(net, zero_state, theta).isZero());
}

TEST_CASE("negative-state clamping zeroes rates and derivatives") {
  const ReactionNetwork net = make_michaelis_menten();
  Eigen::VectorXd s(4), theta(3);
  s << -1.0, 39, 55, 6;  // first reaction's monomial goes negative
  theta << 0.001, 0.005, 0.01;
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 2, ev);
  CHECK(ev.value(0) == 0.0);
  CHECK(ev.jac_state.row(0).isZero());
  CHECK(ev.dparam(0) == 0.0);
  CHECK(ev.hess_state[0].isZero());
  CHECK(ev.value(1) == doctest::Approx(0.275));
  CHECK(ev.value(2) == doctest::Approx(0.55));
}

TEST_CASE("scalar diffusion") {
  const ReactionNetwork net({make_reaction({0}, {1}, 0)}, 1);
  Eigen::VectorXd s(1), theta(1);
  s << 3.0;
  theta << 0.7;
  CHECK(diffusion_matrix(net, s, theta)(0, 0) == doctest::Approx(0.7));
}

TEST_CASE("analytic derivatives match central differences") {
  // a network with a second-order reactant exercises exponents > 1
  const ReactionNetwork mm = make_michaelis_menten();
  const ReactionNetwork quad({make_reaction({2, 0}, {0, 1}, 0),
                              make_reaction({1, 1}, {2, 0}, 1)},
                             2);
  Rng rng(1234);
  for (const ReactionNetwork* net : {&mm, &quad}) {
    const int J = net->species_count();
    const int N = net->param_count();
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd s(J), theta(N);
      for (int j = 0; j < J; ++j) s(j) = rng.uniform(0.1, 100.0);
      for (int n = 0; n < N; ++n) theta(n) = rng.uniform(1e-4, 1.0);

      const Eigen::MatrixXd A = drift_jacobian_state(*net, s, theta);
      const Eigen::MatrixXd dmu_dth = drift_grad_params(*net, s, theta);
      const auto dD_dth = diffusion_grad_params(*net, s, theta);
      const auto dD_ds = diffusion_jacobian_state(*net, s, theta);

      for (int j = 0; j < J; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(s(j)));
        Eigen::VectorXd sp = s, sm = s;
        sp(j) += h;
        sm(j) -= h;
        const Eigen::VectorXd dmu =
            (drift(*net, sp, theta) - drift(*net, sm, theta)) / (2 * h);
        for (int i = 0; i < J; ++i) CHECK(rel_err(A(i, j), dmu(i)) < 1e-5);
        const Eigen::MatrixXd dD =
            (diffusion_matrix(*net, sp, theta) - diffusion_matrix(*net, sm, theta)) /
            (2 * h);
        CHECK((dD_ds[j] - dD).cwiseAbs().maxCoeff() /
                  std::max(1.0, dD.cwiseAbs().maxCoeff()) <
              1e-5);
      }
      for (int n = 0; n < N; ++n) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta(n)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(n) += h;
        tm(n) -= h;
        const Eigen::VectorXd dmu = (drift(*net, s, tp) - drift(*net, s, tm)) / (2 * h);
        for (int i = 0; i < J; ++i) CHECK(rel_err(dmu_dth(i, n), dmu(i)) < 1e-5);
        const Eigen::MatrixXd dD =
            (diffusion_matrix(*net, s, tp) - diffusion_matrix(*net, s, tm)) / (2 * h);
        CHECK((dD_dth[n] - dD).cwiseAbs().maxCoeff() /
                  std::max(1.0, dD.cwiseAbs().maxCoeff()) <
              1e-5);
      }
    }
  }
}

TEST_CASE("conservation laws annihilate drift and diffusion") {
  const ReactionNetwork net = make_michaelis_menten();
  // left null vectors of the stoichiometry matrix
  Eigen::VectorXd u1(4), u2(4);
  u1 << 1, 0, 1, 0;  // enzyme + complex
  u2 << 0, 1, 1, 1;  // substrate + complex + product
  CHECK((u1.transpose() * net.stoichiometry()).isZero(0));
  CHECK((u2.transpose() * net.stoichiometry()).isZero(0));

  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd s(4), theta(3);
    for (int j = 0; j < 4; ++j) s(j) = rng.uniform(0.0, 50.0);
    for (int n = 0; n < 3; ++n) theta(n) = rng.uniform(0.0, 1.0);
    const Eigen::VectorXd mu = drift(net, s, theta);
    const Eigen::MatrixXd D = diffusion_matrix(net, s, theta);
    for (const Eigen::VectorXd* u : {&u1, &u2}) {
      CHECK(std::abs(u->dot(mu)) < 1e-12);
      CHECK(std::abs(u->dot(D * (*u))) < 1e-12);
    }
  }
}

TEST_CASE("diffusion matrix is positive semidefinite") {
  const ReactionNetwork net = make_michaelis_menten();
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd s(4), theta(3);
    for (int j = 0; j < 4; ++j) s(j) = rng.uniform(0.0, 100.0);
    for (int n = 0; n < 3; ++n) theta(n) = rng.uniform(1e-4, 1.0);
    const Eigen::MatrixXd D = diffusion_matrix(net, s, theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    CHECK(es.eigenvalues().minCoeff() > -1e-12 * std::max(1.0, D.norm()));
  }
}

TEST_CASE("propensities scale with the system size") {
  const ReactionNetwork unit = make_michaelis_menten();
  Eigen::VectorXd x(4), theta(3);
  x << 45, 39, 55, 6;
  theta << 0.001, 0.005, 0.01;
  CHECK(propensities(unit, x, theta) == reaction_rates(unit, x, theta));

  // a linear rate is invariant in counts: Omega * theta * (x / Omega) = theta * x
  const ReactionNetwork scaled({make_reaction({1}, {0}, 0)}, 1, 2.0);
  Eigen::VectorXd x1(1), th1(1);
  x1 << 10;
  th1 << 0.3;
  CHECK(propensities(scaled, x1, th1)(0) == doctest::Approx(3.0));

  CHECK(propensities(unit, Eigen::VectorXd::Zero(4), theta).isZero());
}

TEST_CASE("shared kinetic constants accumulate over reactions") {
  const ReactionNetwork net({make_reaction({1, 0}, {0, 1}, 0),
                             make_reaction({0, 1}, {1, 0}, 0)},
                            2);
  CHECK(net.param_count() == 1);
  Eigen::VectorXd s(2), theta(1);
  s << 2.0, 3.0;
  theta << 0.5;
  const Eigen::MatrixXd g = drift_grad_params(net, s, theta);
  // d drift / d theta = C * (s1, s2)^T
  CHECK(g(0, 0) == doctest::Approx(-2.0 + 3.0));
  CHECK(g(1, 0) == doctest::Approx(2.0 - 3.0));
}

TEST_SUITE_END();
