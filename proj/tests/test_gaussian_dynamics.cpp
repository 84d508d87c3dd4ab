#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "pseudobath/errors.hpp"
#include "pseudobath/gaussian_dynamics.hpp"

using namespace pseudobath;

namespace {

struct Setup {
    DiscretizedBath bath;
    PseudomodeConfig pm;
    ThermalParams th;
    double omega_sys;
    EigenSystem env;
    HermitianMatrix h;
    EigenSystem full;

    Setup(std::size_t n, double g, double temp, double eta = 1.0)
        : bath(discretize(OhmicSD(eta, 1.0), n)), pm(1.5, g), th(temp), omega_sys(0.46),
          env(eig_hermitian(build_pm_bath_matrix(pm, bath))), h(build_full_matrix(omega_sys, pm, bath)),
          full(eig_hermitian(h))
    {
    }

    CovarianceMatrix c0(InitialStateKind k) const { return initial_covariance(k, omega_sys, pm, bath, env, th); }
};

std::vector<double> times(double step, int n)
{
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = step * k;
    return v;
}

} // namespace

TEST_CASE("initial covariance: zero temperature and decoupled limits")
{
    const Setup s(20, 0.3, 0.0);
    CHECK(s.c0(InitialStateKind::Factorizing).c.cwiseAbs().maxCoeff() == 0.0);

    const DiscretizedBath decoupled({0.5, 1.0, 2.0}, {0.0, 0.0, 0.0});
    const PseudomodeConfig pm(1.5, 0.3);
    const ThermalParams th(3.0);
    const auto env = eig_hermitian(build_pm_bath_matrix(pm, decoupled));
    const auto f = initial_covariance(InitialStateKind::Factorizing, 0.46, pm, decoupled, env, th);
    const auto d = initial_covariance(InitialStateKind::Diagonal, 0.46, pm, decoupled, env, th);
    CHECK((f.c - d.c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("initial covariance: structure and trace")
{
    const Setup s(100, 0.3, 46.0);
    const auto f = s.c0(InitialStateKind::Factorizing);
    const auto d = s.c0(InitialStateKind::Diagonal);
    CHECK(f.dim() == 102);
    CHECK(f.occupation(0) == 0.0);
    CHECK(d.occupation(0) == 0.0);
    CHECK(f.occupation(1) == mean_occupation(1.5, s.th));
    CHECK(f.occupation(2) == mean_occupation(s.bath.frequencies()[0], s.th));
    double sum = 0.0;
    for (Index mu = 0; mu < s.env.dim(); ++mu) sum += mean_occupation(s.env.frequencies(mu), s.th);
    CHECK(d.trace().real() == doctest::Approx(sum).epsilon(1e-12));
    CHECK(d.hermiticity_error() < 1e-12);
    CHECK(d.c.row(0).cwiseAbs().maxCoeff() == 0.0);

    // Diagonal state equals n(M)* computed without the eigensolver.
    const auto m = build_pm_bath_matrix(s.pm, s.bath);
    const Eigen::MatrixXcd e = (s.th.beta() * m.data()).exp();
    const Eigen::MatrixXcd nm = (e - Eigen::MatrixXcd::Identity(m.dim(), m.dim())).inverse();
    CHECK((d.c.bottomRightCorner(101, 101) - nm.conjugate()).cwiseAbs().maxCoeff() < 1e-10 * nm.cwiseAbs().maxCoeff());

    const auto other = initial_covariance(InitialStateKind::Factorizing, 0.46, s.pm, s.bath, s.env, s.th, 2.5);
    CHECK(other.occupation(0) == 2.5);
    const auto small = discretize(OhmicSD(1.0, 1.0), 5);
    CHECK_THROWS_AS(initial_covariance(InitialStateKind::Diagonal, 0.46, s.pm, small, s.env, s.th), ConfigError);
}

TEST_CASE("occupations at t = 0 are exact")
{
    const Setup s(60, 0.3, 46.0);
    const auto ts = times(0.5, 4);
    const auto tf = propagate_occupations(s.full, s.c0(InitialStateKind::Factorizing), ts, InitialStateKind::Factorizing);
    CHECK(tf.n_sys[0] == 0.0);
    CHECK(tf.n_pm[0] == mean_occupation(1.5, s.th));
    CHECK(tf.n_sys[1] > 0.0);
}

TEST_CASE("uncoupled system keeps its occupation")
{
    const Setup s(40, 0.0, 10.0);
    const auto c0 = initial_covariance(InitialStateKind::Diagonal, 0.46, s.pm, s.bath, s.env, s.th, 1.25);
    const auto traj = propagate_occupations(s.full, c0, times(1.0, 50), InitialStateKind::Diagonal);
    for (double n : traj.n_sys) CHECK(n == doctest::Approx(1.25).epsilon(1e-12));
    // The PM of a global thermal environment state stays stationary.
    for (double n : traj.n_pm) CHECK(n == doctest::Approx(traj.n_pm[0]).epsilon(1e-10));
}

TEST_CASE("occupations agree with the full covariance and a matrix-exponential reference")
{
    const Setup s(30, 0.3, 5.0);
    const auto c0 = s.c0(InitialStateKind::Diagonal);
    const std::vector<double> ts{0.7, 3.1, 12.0};
    const auto traj = propagate_occupations(s.full, c0, ts, InitialStateKind::Diagonal);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const Eigen::MatrixXcd p = (cplx(0.0, -ts[i]) * s.h.data()).exp();
        const Eigen::MatrixXcd ref = p.conjugate() * c0.c * p.transpose();
        const auto c = propagate_covariance(s.full, c0, ts[i]);
        CHECK((c.c - ref).cwiseAbs().maxCoeff() < 1e-9 * ref.cwiseAbs().maxCoeff());
        CHECK(traj.n_sys[i] == doctest::Approx(ref(0, 0).real()).epsilon(1e-10));
        CHECK(traj.n_pm[i] == doctest::Approx(ref(1, 1).real()).epsilon(1e-10));
    }
}

TEST_CASE("conservation laws, Hermiticity and positivity")
{
    const Setup s(80, 0.3, 46.0);
    for (auto kind : {InitialStateKind::Factorizing, InitialStateKind::Diagonal}) {
        const auto c0 = s.c0(kind);
        const double e0 = c0.energy(s.h).real();
        const double n0 = c0.trace().real();
        for (double t : {5.0, 50.0, 200.0}) {
            const auto c = propagate_covariance(s.full, c0, t);
            CHECK(std::abs(c.energy(s.h).real() - e0) < 1e-8 * std::abs(e0));
            CHECK(std::abs(c.energy(s.h).imag()) < 1e-8 * std::abs(e0));
            CHECK(std::abs(c.trace().real() - n0) < 1e-10 * n0);
            CHECK(c.hermiticity_error() < 1e-10 * n0);
            CHECK(c.min_diagonal() > -1e-10);
        }
    }
}

TEST_CASE("recurrence warning")
{
    const Setup s(40, 0.3, 1.0);
    const auto c0 = s.c0(InitialStateKind::Factorizing);
    const double horizon = s.bath.recurrence_horizon();
    const std::vector<double> inside{0.0, 0.5 * horizon}, outside{0.0, 1.5 * horizon};
    CHECK_FALSE(propagate_occupations(s.full, c0, inside, InitialStateKind::Factorizing, horizon).beyond_recurrence);
    CHECK(propagate_occupations(s.full, c0, outside, InitialStateKind::Factorizing, horizon).beyond_recurrence);
    CHECK_THROWS_AS(propagate_occupations(s.env, c0, inside, InitialStateKind::Factorizing), ConfigError);
}

TEST_CASE("occupation csv")
{
    OccupationTrajectory t;
    t.t_grid = {0.0, 0.5};
    t.n_sys = {0.0, 0.25};
    t.n_pm = {30.0, 29.5};
    t.kind = InitialStateKind::Diagonal;
    std::ostringstream os;
    CsvHeader h;
    h.add("g", 0.3);
    write_occupation_csv(os, t, h);
    CHECK(os.str() == "# kind: diagonal\n# beyond_recurrence: false\n# g: 0.3\nt,n_sys,n_pm\n0,0,30\n0.5,0.25,29.5\n");
}
