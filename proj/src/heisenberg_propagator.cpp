// heisenberg_propagator.cpp

#include "pseudobath/heisenberg_propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pseudobath/errors.hpp"

namespace pseudobath {

double PropagatorTable::uniform_step() const noexcept
{
    if (t_grid.size() < 2 || t_grid.front() != 0.0) return 0.0;
    const double h = t_grid[1] - t_grid[0];
    if (!(h > 0.0)) return 0.0;
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (std::abs(t_grid[k] - static_cast<double>(k) * h) > 1e-9 * std::max(1.0, t_grid[k])) return 0.0;
    return h;
}

std::vector<cplx> memory_kernel(const DiscretizedBath& bath, std::span<const double> tau_grid)
{
    std::vector<cplx> k(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        double re = 0.0, im = 0.0;
        for (std::size_t l = 0; l < bath.size(); ++l) {
            const double w2 = std::norm(bath.couplings()[l]);
            const double ph = bath.frequencies()[l] * tau_grid[i];
            re += w2 * std::cos(ph);
            im -= w2 * std::sin(ph);
        }
        k[i] = {re, im};
    }
    return k;
}

HermitianMatrix build_propagator_matrix(const PseudomodeConfig& pm, const DiscretizedBath& bath)
{
    if (bath.empty()) throw ConfigError("build_propagator_matrix: bath must be non-empty");
    const auto n = static_cast<Index>(bath.size());
    const cplx i1{0.0, 1.0};
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    g(0, 0) = pm.omega_pm;
    for (Index l = 0; l < n; ++l) {
        const cplx k = bath.couplings()[static_cast<std::size_t>(l)];
        g(0, l + 1) = -i1 * std::conj(k);
        g(l + 1, 0) = i1 * k;
        g(l + 1, l + 1) = bath.frequencies()[static_cast<std::size_t>(l)];
    }
    return HermitianMatrix(std::move(g));
}

PropagatorTable propagator_embedding(const PseudomodeConfig& pm, const DiscretizedBath& bath,
                                     std::span<const double> t_grid, EigMethod method)
{
    for (double t : t_grid)
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("propagator_embedding: times must be finite and >= 0");

    PropagatorTable table;
    table.method = PropagatorTable::Method::Embedding;
    table.embed_eig = eig_hermitian(build_propagator_matrix(pm, bath), method);
    const EigenSystem& eig = *table.embed_eig;

    Eigen::VectorXd w = eig.row_weights(0);
    w /= w.sum();

    table.t_grid.assign(t_grid.begin(), t_grid.end());
    table.u_values.resize(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        if (t == 0.0) {
            table.u_values[i] = 1.0;
            continue;
        }
        double re = 0.0, im = 0.0;
        for (Index m = 0; m < w.size(); ++m) {
            const double ph = eig.frequencies(m) * t;
            re += w(m) * std::cos(ph);
            im -= w(m) * std::sin(ph);
        }
        table.u_values[i] = {re, im};
    }
    return table;
}

PropagatorTable propagator_direct(const PseudomodeConfig& pm, const DiscretizedBath& bath,
                                  std::span<const double> t_grid, double dt)
{
    const double w_max = std::max(pm.omega_pm, bath.max_frequency());
    if (!(dt > 0.0)) throw ConfigError("propagator_direct: dt must be > 0");
    if (dt * w_max > 0.1)
        throw ConfigError("propagator_direct: step too coarse, dt * max(omega) = " + std::to_string(dt * w_max) +
                          " exceeds 0.1");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i]))
            throw ConfigError("propagator_direct: times must be finite and >= 0");
        if (i > 0 && t_grid[i] < t_grid[i - 1]) throw ConfigError("propagator_direct: times must be ascending");
    }

    const std::size_t nb = bath.size();
    const auto freq = bath.frequencies();
    const auto kappa = bath.couplings();
    const cplx i1{0.0, 1.0};
    const double omega = pm.omega_pm;

    // u[0] = U, u[1+λ] = U_λ
    //   ∂U   = −iΩU − Σ κ_λ* U_λ
    //   ∂U_λ = κ_λ U − iω_λ U_λ
    auto rhs = [&](const std::vector<cplx>& u, std::vector<cplx>& du) {
        cplx acc = -i1 * omega * u[0];
        for (std::size_t l = 0; l < nb; ++l) {
            acc -= std::conj(kappa[l]) * u[l + 1];
            du[l + 1] = kappa[l] * u[0] - i1 * freq[l] * u[l + 1];
        }
        du[0] = acc;
    };

    std::vector<cplx> u(nb + 1, cplx{}), k1(nb + 1), k2(nb + 1), k3(nb + 1), k4(nb + 1), tmp(nb + 1);
    u[0] = 1.0;
    auto step = [&](double h) {
        rhs(u, k1);
        for (std::size_t j = 0; j <= nb; ++j) tmp[j] = u[j] + 0.5 * h * k1[j];
        rhs(tmp, k2);
        for (std::size_t j = 0; j <= nb; ++j) tmp[j] = u[j] + 0.5 * h * k2[j];
        rhs(tmp, k3);
        for (std::size_t j = 0; j <= nb; ++j) tmp[j] = u[j] + h * k3[j];
        rhs(tmp, k4);
        for (std::size_t j = 0; j <= nb; ++j) u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    };

    PropagatorTable table;
    table.method = PropagatorTable::Method::DirectIntegration;
    table.t_grid.assign(t_grid.begin(), t_grid.end());
    table.u_values.resize(t_grid.size());
    double t = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double target = t_grid[i];
        const double span = target - t;
        if (span > 0.0) {
            const auto nsteps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
            const double h = span / static_cast<double>(nsteps);
            for (std::size_t s = 0; s < nsteps; ++s) step(h);
            t = target;
        }
        table.u_values[i] = target == 0.0 ? cplx{1.0, 0.0} : u[0];
    }
    return table;
}

Eigen::MatrixXcd propagator_bath_integrals(std::span<const cplx> u_on_grid, double ds, const DiscretizedBath& bath)
{
    if (!(ds > 0.0)) throw ConfigError("propagator_bath_integrals: ds must be > 0");
    const auto nt = static_cast<Index>(u_on_grid.size());
    const auto nb = static_cast<Index>(bath.size());
    Eigen::MatrixXcd integrals = Eigen::MatrixXcd::Zero(nt, nb);
    // I(t + ds) = e^{−iω ds} I(t) + ds/2 [U(t) e^{−iω ds} + U(t + ds)]: the composite trapezoid
    // rule of ∫₀^t U(u) e^{−iω(t−u)} du, extended one panel at a time.
    for (Index l = 0; l < nb; ++l) {
        const cplx rot = std::polar(1.0, -bath.frequencies()[static_cast<std::size_t>(l)] * ds);
        cplx acc{};
        for (Index k = 1; k < nt; ++k) {
            acc = rot * acc + 0.5 * ds * (u_on_grid[static_cast<std::size_t>(k - 1)] * rot +
                                          u_on_grid[static_cast<std::size_t>(k)]);
            integrals(k, l) = acc;
        }
    }
    return integrals;
}

namespace {

// Samples U on k·ds and maps each requested time to its grid index.
struct QuadratureGrid {
    std::vector<cplx> u;
    std::vector<Index> t_index;
    std::vector<Index> tprime_index;
};

Index grid_index(double t, double ds, const char* what)
{
    if (!(t >= 0.0)) throw ConfigError(std::string(what) + ": times must be >= 0");
    const double k = std::round(t / ds);
    if (std::abs(k * ds - t) > 1e-9 * std::max(1.0, t))
        throw ConfigError(std::string(what) + ": time " + std::to_string(t) + " is not a multiple of ds");
    return static_cast<Index>(k);
}

QuadratureGrid make_quadrature_grid(const PropagatorTable& prop, std::span<const double> t_grid,
                                    std::span<const double> tprime_grid, double ds, const char* what)
{
    if (!(ds > 0.0)) throw ConfigError(std::string(what) + ": ds must be > 0");
    const double h = prop.uniform_step();
    if (h == 0.0) throw ConfigError(std::string(what) + ": propagator table must be uniform from t = 0");
    if (h > ds * (1.0 + 1e-9))
        throw ConfigError(std::string(what) + ": propagator sampled at " + std::to_string(h) +
                          " is coarser than the quadrature step " + std::to_string(ds));
    const double ratio = std::round(ds / h);
    if (std::abs(ratio * h - ds) > 1e-9 * ds)
        throw ConfigError(std::string(what) + ": ds must be an integer multiple of the propagator step");
    const auto stride = static_cast<std::size_t>(ratio);

    QuadratureGrid q;
    Index kmax = 0;
    for (double t : t_grid) q.t_index.push_back(grid_index(t, ds, what));
    for (double t : tprime_grid) q.tprime_index.push_back(grid_index(t, ds, what));
    for (Index k : q.t_index) kmax = std::max(kmax, k);
    for (Index k : q.tprime_index) kmax = std::max(kmax, k);
    const std::size_t needed = static_cast<std::size_t>(kmax) * stride;
    if (needed >= prop.u_values.size())
        throw ConfigError(std::string(what) + ": propagator table does not cover the requested times");
    q.u.resize(static_cast<std::size_t>(kmax) + 1);
    for (std::size_t k = 0; k < q.u.size(); ++k) q.u[k] = prop.u_values[k * stride];
    return q;
}

// Rows X(t) = (U(t), −iκ_λ* I_λ(t)) so that b(t) = Σ_η X_η(t) a_η(0).
Eigen::MatrixXcd heisenberg_rows(const QuadratureGrid& q, const Eigen::MatrixXcd& integrals,
                                 const DiscretizedBath& bath, const std::vector<Index>& index)
{
    const auto nb = static_cast<Index>(bath.size());
    const cplx i1{0.0, 1.0};
    Eigen::MatrixXcd x(static_cast<Index>(index.size()), nb + 1);
    for (std::size_t r = 0; r < index.size(); ++r) {
        const Index k = index[r];
        const auto row = static_cast<Index>(r);
        x(row, 0) = q.u[static_cast<std::size_t>(k)];
        for (Index l = 0; l < nb; ++l)
            x(row, l + 1) = -i1 * std::conj(bath.couplings()[static_cast<std::size_t>(l)]) * integrals(k, l);
    }
    return x;
}

void finish(BCFGrid& g, BCFKind kind, const BCFOptions& opt, const PseudomodeConfig& pm, const DiscretizedBath& bath,
            std::span<const double> t_grid, std::span<const double> tprime_grid)
{
    g.t_grid.assign(t_grid.begin(), t_grid.end());
    g.tprime_grid.assign(tprime_grid.begin(), tprime_grid.end());
    if (!opt.normalized) g.values *= pm.g_squared();
    g.kind = kind;
    g.part = opt.part;
    g.normalized = opt.normalized;
    g.g_squared = pm.g_squared();
    g.method = "heisenberg";
    double tmax = 0.0;
    for (double t : t_grid) tmax = std::max(tmax, t);
    for (double t : tprime_grid) tmax = std::max(tmax, t);
    g.beyond_recurrence = tmax > bath.recurrence_horizon();
}

} // namespace

BCFGrid bcf_factorizing_via_U(const PropagatorTable& prop, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                              const ThermalParams& th, std::span<const double> t_grid,
                              std::span<const double> tprime_grid, double ds, const BCFOptions& opt)
{
    const auto q = make_quadrature_grid(prop, t_grid, tprime_grid, ds, "bcf_factorizing_via_U");
    const Eigen::MatrixXcd integrals = propagator_bath_integrals(q.u, ds, bath);
    const Eigen::MatrixXcd xt = heisenberg_rows(q, integrals, bath, q.t_index);
    const Eigen::MatrixXcd xp = heisenberg_rows(q, integrals, bath, q.tprime_index);
    const Eigen::VectorXd n = factorizing_occupations(bath, pm, th);

    // η = 0: U(t)U*(t')(n(Ω)+1) + U*(t)U(t')n(Ω).
    // η = λ: |κ_λ|² I_λ(t) I_λ*(t') (n_λ+1) + |κ_λ|² I_λ*(t) I_λ(t') n_λ, the factorised double integrals.
    BCFGrid g;
    g.values = Eigen::MatrixXcd::Zero(xt.rows(), xp.rows());
    if (opt.part != BCFPart::Alpha2)
        g.values.noalias() += (xt * (n.array() + 1.0).matrix().cast<cplx>().asDiagonal()) * xp.adjoint();
    if (opt.part != BCFPart::Alpha1)
        g.values.noalias() += (xt.conjugate() * n.cast<cplx>().asDiagonal()) * xp.transpose();
    finish(g, BCFKind::Factorizing, opt, pm, bath, t_grid, tprime_grid);
    return g;
}

BCFGrid bcf_diagonal_via_U(const PropagatorTable& prop, const EigenSystem& eig, const DiscretizedBath& bath,
                           const PseudomodeConfig& pm, const ThermalParams& th, std::span<const double> t_grid,
                           std::span<const double> tprime_grid, double ds, const BCFOptions& opt)
{
    if (eig.dim() != static_cast<Index>(bath.size()) + 1)
        throw ConfigError("bcf_diagonal_via_U: eigensystem dimension does not match bath size + 1");
    const auto q = make_quadrature_grid(prop, t_grid, tprime_grid, ds, "bcf_diagonal_via_U");
    const Eigen::MatrixXcd integrals = propagator_bath_integrals(q.u, ds, bath);
    const Eigen::MatrixXcd xt = heisenberg_rows(q, integrals, bath, q.t_index);
    const Eigen::MatrixXcd xp = heisenberg_rows(q, integrals, bath, q.tprime_index);
    const Eigen::VectorXd n = eigen_occupations(eig, th);
    const Eigen::MatrixXcd& s = eig.transform;

    // Initial-state moments in the original basis:
    //   ⟨a_η a_η'†⟩ = Σ_μ S_{ημ} S*_{η'μ} (n_μ+1) = P1_{ηη'},   ⟨a_η† a_η'⟩ = conj(Q)_{ηη'}, Q = S n S†.
    // Splitting η, η' into the PM slot 0 and bath modes λ, τ reproduces the four term groups:
    // (0,0) the |S_{0μ}|² U(t)U*(t') terms, (λ,τ) the κ_λ*κ_τ S_{λμ}S*_{τμ} double integrals, and
    // the (0,λ) / (λ,0) mixed single integrals with the ±i prefactors carried by X.
    const Eigen::MatrixXcd p1 = s * (n.array() + 1.0).matrix().cast<cplx>().asDiagonal() * s.adjoint();
    const Eigen::MatrixXcd qn = s * n.cast<cplx>().asDiagonal() * s.adjoint();

    BCFGrid g;
    g.values = Eigen::MatrixXcd::Zero(xt.rows(), xp.rows());
    if (opt.part != BCFPart::Alpha2) g.values.noalias() += xt * p1 * xp.adjoint();
    if (opt.part != BCFPart::Alpha1) g.values.noalias() += xt.conjugate() * qn.conjugate() * xp.transpose();
    finish(g, BCFKind::Diagonal, opt, pm, bath, t_grid, tprime_grid);
    return g;
}

} // namespace pseudobath
