#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pseudobath/errors.hpp"
#include "pseudobath/heisenberg_propagator.hpp"

using namespace pseudobath;

namespace {

std::vector<double> uniform(double step, int n)
{
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = step * k;
    return v;
}

double rel_error(const BCFGrid& a, const BCFGrid& ref)
{
    return (a.values - ref.values).cwiseAbs().maxCoeff() / ref.max_abs();
}

} // namespace

TEST_CASE("memory kernel")
{
    const auto bath = discretize(OhmicSD(0.25, 1.0), 4000);
    const std::vector<double> zero{0.0};
    const auto k0 = memory_kernel(bath, zero);
    CHECK(k0[0].imag() == 0.0);
    CHECK(k0[0].real() == doctest::Approx(bath.total_coupling_weight()).epsilon(1e-13));
    CHECK(std::abs(k0[0].real() - 0.25) < 1e-3);

    const DiscretizedBath one({0.7}, {0.4});
    const std::vector<double> taus{-2.0, 0.5, 2.0};
    const auto k = memory_kernel(one, taus);
    CHECK(std::abs(k[1] - 0.16 * std::polar(1.0, -0.7 * 0.5)) < 1e-15);
    CHECK(std::abs(k[0] - std::conj(k[2])) < 1e-15);
}

TEST_CASE("G matrix layout and spectrum equal to M")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 200);
    const PseudomodeConfig pm(1.5, 0.3);
    const auto g = build_propagator_matrix(pm, bath);
    CHECK(g(0, 0) == cplx(1.5));
    CHECK(g(0, 1) == cplx(0.0, -1.0) * std::conj(bath.couplings()[0]));
    CHECK(g(1, 0) == cplx(0.0, 1.0) * bath.couplings()[0]);
    const auto eg = eig_hermitian(g);
    const auto em = eig_hermitian(build_pm_bath_matrix(pm, bath));
    CHECK((eg.frequencies - em.frequencies).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((eg.row_weights(0) - em.row_weights(0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("resonant single mode: U(t) = exp(-i Omega t) cos(kappa t)")
{
    const double omega = 1.2, kappa = 0.35;
    const DiscretizedBath one({omega}, {kappa});
    const PseudomodeConfig pm(omega, 0.3);
    const auto ts = uniform(0.25, 80);
    const auto emb = propagator_embedding(pm, one, ts);
    const auto dir = propagator_direct(pm, one, ts, 0.01);
    CHECK(emb.u_values[0] == cplx(1.0, 0.0));
    CHECK(dir.u_values[0] == cplx(1.0, 0.0));
    double e_emb = 0.0, e_dir = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const cplx ref = std::polar(1.0, -omega * ts[i]) * std::cos(kappa * ts[i]);
        e_emb = std::max(e_emb, std::abs(emb.u_values[i] - ref));
        e_dir = std::max(e_dir, std::abs(dir.u_values[i] - ref));
    }
    CHECK(e_emb < 1e-13);
    CHECK(e_dir < 1e-8);
}

TEST_CASE("RK4 error scales as dt^4")
{
    const double omega = 1.0, kappa = 0.5;
    const DiscretizedBath one({omega}, {kappa});
    const PseudomodeConfig pm(omega, 0.3);
    const std::vector<double> ts{0.0, 10.0};
    auto err = [&](double dt) {
        const auto dir = propagator_direct(pm, one, ts, dt);
        return std::abs(dir.u_values[1] - std::polar(1.0, -omega * 10.0) * std::cos(kappa * 10.0));
    };
    const double ratio = err(0.08) / err(0.04);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("embedding and direct integration agree on a 32-mode bath")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 32);
    const PseudomodeConfig pm(1.5, 0.3);
    const auto ts = uniform(0.05, 400);
    const auto emb = propagator_embedding(pm, bath, ts);
    const auto dir = propagator_direct(pm, bath, ts, 1e-3);
    double worst = 0.0, max_u = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        worst = std::max(worst, std::abs(emb.u_values[i] - dir.u_values[i]));
        max_u = std::max(max_u, std::abs(emb.u_values[i]));
    }
    CHECK(worst < 1e-6);
    CHECK(max_u <= 1.0 + 1e-8);
    CHECK(emb.embed_eig.has_value());
    CHECK(dir.method == PropagatorTable::Method::DirectIntegration);
}

TEST_CASE("propagator contractivity on the strong-coupling bath")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 2000);
    const PseudomodeConfig pm(1.5, 0.3);
    const auto ts = uniform(0.1, 2000);
    const auto emb = propagator_embedding(pm, bath, ts);
    for (const auto& u : emb.u_values) CHECK(std::abs(u) <= 1.0 + 1e-8);
}

TEST_CASE("direct integration rejects coarse steps and bad grids")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 16);
    const PseudomodeConfig pm(1.5, 0.3);
    const std::vector<double> ts{0.0, 1.0};
    CHECK_THROWS_AS(propagator_direct(pm, bath, ts, 0.02), ConfigError); // 0.02 · 10 > 0.1
    CHECK_NOTHROW(propagator_direct(pm, bath, ts, 0.01));
    const std::vector<double> desc{1.0, 0.5};
    CHECK_THROWS_AS(propagator_direct(pm, bath, desc, 0.001), ConfigError);
    const std::vector<double> neg{-1.0};
    CHECK_THROWS_AS(propagator_embedding(pm, bath, neg), ConfigError);
}

TEST_CASE("bath integrals equal the literal 2-D trapezoid")
{
    // N = 4, 50 time points: Σ_λ |κ_λ|² ∫∫ U(t−s)U*(t'−s') e^{−iω_λ(s−s')} by a product trapezoid
    // rule, against |κ_λ|² I_λ(t) I_λ*(t').
    const auto bath = discretize(OhmicSD(1.0, 1.0), 4, 0.3, 3.0);
    const PseudomodeConfig pm(1.5, 0.3);
    const double ds = 0.1;
    const auto ts = uniform(ds, 49);
    const auto prop = propagator_embedding(pm, bath, ts);
    const auto integrals = propagator_bath_integrals(prop.u_values, ds, bath);

    auto trap_weight = [](int k, int n) { return (k == 0 || k == n) ? 0.5 : 1.0; };
    double worst = 0.0;
    for (int a = 0; a < 50; a += 7) {
        for (int b = 0; b < 50; b += 5) {
            cplx literal{};
            cplx factored{};
            for (std::size_t l = 0; l < bath.size(); ++l) {
                const double w = bath.frequencies()[l];
                const double k2 = std::norm(bath.couplings()[l]);
                cplx sum{};
                for (int i = 0; i <= a; ++i)
                    for (int j = 0; j <= b; ++j) {
                        if (a == 0 || b == 0) continue;
                        const double wij = trap_weight(i, a) * trap_weight(j, b) * ds * ds;
                        sum += wij * prop.u_values[static_cast<std::size_t>(a - i)] *
                               std::conj(prop.u_values[static_cast<std::size_t>(b - j)]) *
                               std::polar(1.0, -w * (i - j) * ds);
                    }
                literal += k2 * sum;
                factored += k2 * integrals(a, static_cast<Index>(l)) * std::conj(integrals(b, static_cast<Index>(l)));
            }
            worst = std::max(worst, std::abs(literal - factored));
        }
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("via-U BCFs at the origin and for a decoupled pseudomode")
{
    const PseudomodeConfig pm(1.5, 0.3);
    const ThermalParams th(46.0);
    const double n = mean_occupation(1.5, th);
    const std::vector<double> zero{0.0};
    {
        const auto bath = discretize(OhmicSD(1.0, 1.0), 64);
        const auto prop = propagator_embedding(pm, bath, uniform(0.01, 10));
        const auto f = bcf_factorizing_via_U(prop, bath, pm, th, zero, zero, 0.01);
        CHECK(std::abs(f.at(0, 0) - (2.0 * n + 1.0)) < 1e-12 * n);
        CHECK(f.method == "heisenberg");
        const auto eig = eig_hermitian(build_pm_bath_matrix(pm, bath));
        const auto d = bcf_diagonal_via_U(prop, eig, bath, pm, th, zero, zero, 0.01);
        const auto ref = bcf_diagonal(eig, pm, th, zero);
        CHECK(std::abs(d.at(0, 0) - ref.at(0)) < 1e-10 * std::abs(ref.at(0)));
        const auto raw = bcf_factorizing_via_U(prop, bath, pm, th, zero, zero, 0.01, {BCFPart::Full, false});
        CHECK(std::abs(raw.at(0, 0) - 0.09 * (2.0 * n + 1.0)) < 1e-12 * n);
    }
    {
        const DiscretizedBath bath({0.5, 1.0}, {0.0, 0.0});
        const auto ts = uniform(0.5, 20);
        const auto prop = propagator_embedding(pm, bath, uniform(0.05, 200));
        const auto eig = eig_hermitian(build_pm_bath_matrix(pm, bath));
        const auto f = bcf_factorizing_via_U(prop, bath, pm, th, ts, ts, 0.05);
        const auto d = bcf_diagonal_via_U(prop, eig, bath, pm, th, ts, ts, 0.05);
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = 0; j < ts.size(); ++j) {
                const double tau = ts[i] - ts[j];
                const cplx ref = std::polar(n, 1.5 * tau) + std::polar(n + 1.0, -1.5 * tau);
                CHECK(std::abs(f.at(i, j) - ref) < 1e-10 * n);
                CHECK(std::abs(d.at(i, j) - ref) < 1e-10 * n);
            }
    }
}

TEST_CASE("via-U BCFs reproduce the eigenbasis BCFs with O(ds^2) convergence")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 24);
    const PseudomodeConfig pm(1.5, 0.3);
    const ThermalParams th(46.0);
    const auto eig = eig_hermitian(build_pm_bath_matrix(pm, bath));
    const auto ts = uniform(0.5, 10);

    const auto ref_f = bcf_factorizing(eig, bath, pm, th, ts, ts);
    const auto ref_d = bcf_diagonal(eig, pm, th, ts, ts);

    double err_f[2], err_d[2];
    int k = 0;
    for (double ds : {0.01, 0.005}) {
        const auto prop = propagator_embedding(pm, bath, uniform(ds, static_cast<int>(std::lround(5.0 / ds))));
        err_f[k] = rel_error(bcf_factorizing_via_U(prop, bath, pm, th, ts, ts, ds), ref_f);
        err_d[k] = rel_error(bcf_diagonal_via_U(prop, eig, bath, pm, th, ts, ts, ds), ref_d);
        ++k;
    }
    CHECK(err_f[1] < 1e-3);
    CHECK(err_d[1] < 1e-3);
    CHECK(err_f[0] / err_f[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(err_d[0] / err_d[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("via-U BCF grid validation")
{
    const auto bath = discretize(OhmicSD(1.0, 1.0), 8);
    const PseudomodeConfig pm(1.5, 0.3);
    const ThermalParams th(1.0);
    const auto prop = propagator_embedding(pm, bath, uniform(0.02, 100));
    const std::vector<double> ok{0.0, 1.0}, off{0.0, 1.003}, far{0.0, 3.0};
    CHECK_NOTHROW(bcf_factorizing_via_U(prop, bath, pm, th, ok, ok, 0.04)); // subsampled
    CHECK_THROWS_AS(bcf_factorizing_via_U(prop, bath, pm, th, ok, ok, 0.01), ConfigError); // undersampled U
    CHECK_THROWS_AS(bcf_factorizing_via_U(prop, bath, pm, th, ok, ok, 0.03), ConfigError); // not a multiple
    CHECK_THROWS_AS(bcf_factorizing_via_U(prop, bath, pm, th, off, ok, 0.02), ConfigError);
    CHECK_THROWS_AS(bcf_factorizing_via_U(prop, bath, pm, th, far, ok, 0.02), ConfigError);
    const auto fine = bcf_factorizing_via_U(prop, bath, pm, th, ok, ok, 0.02);
    const auto coarse = bcf_factorizing_via_U(prop, bath, pm, th, ok, ok, 0.04);
    CHECK(rel_error(coarse, fine) < 1e-2);
}
