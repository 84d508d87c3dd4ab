// gaussian_dynamics.cpp

#include "pseudobath/gaussian_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pseudobath/errors.hpp"

namespace pseudobath {

cplx CovarianceMatrix::energy(const HermitianMatrix& h) const
{
    if (h.dim() != dim()) throw ConfigError("CovarianceMatrix::energy: dimension mismatch");
    return (h.data().array() * c.array()).sum();
}

double CovarianceMatrix::hermiticity_error() const
{
    return (c - c.adjoint()).cwiseAbs().maxCoeff();
}

double CovarianceMatrix::min_diagonal() const
{
    return c.diagonal().real().minCoeff();
}

CovarianceMatrix initial_covariance(InitialStateKind kind, double omega_sys, const PseudomodeConfig& pm,
                                    const DiscretizedBath& bath, const EigenSystem& eig, const ThermalParams& th,
                                    double n_sys0)
{
    (void)omega_sys; // the system starts uncorrelated; its frequency only enters the full matrix
    const auto n = static_cast<Index>(bath.size());
    if (eig.dim() != n + 1) throw ConfigError("initial_covariance: eigensystem dimension does not match bath size + 1");
    if (!(n_sys0 >= 0.0)) throw ConfigError("initial_covariance: initial system occupation must be >= 0");

    CovarianceMatrix c0;
    c0.c = Eigen::MatrixXcd::Zero(n + 2, n + 2);
    c0.c(0, 0) = n_sys0;
    if (kind == InitialStateKind::Factorizing) {
        const Eigen::VectorXd occ = factorizing_occupations(bath, pm, th);
        for (Index j = 0; j <= n; ++j) c0.c(j + 1, j + 1) = occ(j);
    } else {
        const Eigen::VectorXd occ = eigen_occupations(eig, th);
        const Eigen::MatrixXcd& s = eig.transform;
        Eigen::MatrixXcd env;
        if (s.imag().cwiseAbs().maxCoeff() == 0.0) {
            const Eigen::MatrixXd sr = s.real();
            env = (sr * occ.asDiagonal() * sr.transpose()).cast<cplx>();
        } else {
            env = s.conjugate() * occ.cast<cplx>().asDiagonal() * s.transpose();
        }
        c0.c.bottomRightCorner(n + 1, n + 1) = env;
    }
    return c0;
}

namespace {

bool is_real(const Eigen::MatrixXcd& m)
{
    return m.imag().cwiseAbs().maxCoeff() == 0.0;
}

// Normal-mode moments D_μν = ⟨c_μ† c_ν⟩ = [Wᵀ C0 W*]_μν.
Eigen::MatrixXcd normal_mode_moments(const EigenSystem& full, const CovarianceMatrix& c0)
{
    const Eigen::MatrixXcd& w = full.transform;
    if (is_real(w) && is_real(c0.c)) {
        const Eigen::MatrixXd wr = w.real();
        const Eigen::MatrixXd tmp = c0.c.real() * wr;
        Eigen::MatrixXd d(wr.cols(), wr.cols());
        d.noalias() = wr.transpose() * tmp;
        return d.cast<cplx>();
    }
    const Eigen::MatrixXcd tmp = c0.c * w.conjugate();
    return w.transpose() * tmp;
}

// For y_μ(t) = W_{rμ} e^{−iE_μ t}, C(t)_rr = y† D y. Evaluated for a block of times at once.
void occupation_row(const EigenSystem& full, const Eigen::MatrixXcd& d, bool real_d, Index row,
                    std::span<const double> times, std::vector<double>& out)
{
    const Index n = full.dim();
    constexpr Index kBlock = 128;
    const auto nt = static_cast<Index>(times.size());
    out.assign(times.size(), 0.0);
    Eigen::MatrixXd dr;
    if (real_d) dr = d.real();
    for (Index b0 = 0; b0 < nt; b0 += kBlock) {
        const Index nb = std::min(kBlock, nt - b0);
        Eigen::MatrixXcd y(n, nb);
        for (Index i = 0; i < nb; ++i) {
            const double t = times[static_cast<std::size_t>(b0 + i)];
            for (Index mu = 0; mu < n; ++mu)
                y(mu, i) = full.transform(row, mu) * std::polar(1.0, -full.frequencies(mu) * t);
        }
        if (real_d) {
            // y = a + ib with D real symmetric: y†Dy = aᵀDa + bᵀDb.
            Eigen::MatrixXd ab(n, 2 * nb);
            ab.leftCols(nb) = y.real();
            ab.rightCols(nb) = y.imag();
            const Eigen::MatrixXd dab = dr * ab;
            for (Index i = 0; i < nb; ++i)
                out[static_cast<std::size_t>(b0 + i)] =
                    ab.col(i).dot(dab.col(i)) + ab.col(nb + i).dot(dab.col(nb + i));
        } else {
            const Eigen::MatrixXcd dy = d * y;
            for (Index i = 0; i < nb; ++i)
                out[static_cast<std::size_t>(b0 + i)] = y.col(i).dot(dy.col(i)).real();
        }
    }
}

} // namespace

OccupationTrajectory propagate_occupations(const EigenSystem& full, const CovarianceMatrix& c0,
                                           std::span<const double> t_grid, InitialStateKind kind,
                                           double recurrence_horizon)
{
    if (full.dim() != c0.dim()) throw ConfigError("propagate_occupations: eigensystem and covariance dims differ");
    if (full.dim() < 2) throw ConfigError("propagate_occupations: need system and PM indices");
    for (double t : t_grid)
        if (!std::isfinite(t)) throw ConfigError("propagate_occupations: non-finite time value");

    const Eigen::MatrixXcd d = normal_mode_moments(full, c0);
    const bool real_d = is_real(full.transform) && is_real(c0.c);

    OccupationTrajectory traj;
    traj.kind = kind;
    traj.t_grid.assign(t_grid.begin(), t_grid.end());
    occupation_row(full, d, real_d, 0, t_grid, traj.n_sys);
    occupation_row(full, d, real_d, 1, t_grid, traj.n_pm);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] == 0.0) {
            traj.n_sys[i] = c0.occupation(0);
            traj.n_pm[i] = c0.occupation(1);
        }
        if (std::abs(t_grid[i]) > recurrence_horizon) traj.beyond_recurrence = true;
    }
    return traj;
}

CovarianceMatrix propagate_covariance(const EigenSystem& full, const CovarianceMatrix& c0, double t)
{
    if (full.dim() != c0.dim()) throw ConfigError("propagate_covariance: eigensystem and covariance dims differ");
    // In normal modes D(t)_μν = e^{i(E_μ − E_ν)t} D_μν, and C(t) = W* D(t) Wᵀ.
    Eigen::MatrixXcd d = normal_mode_moments(full, c0);
    const Index n = full.dim();
    Eigen::VectorXcd ph(n);
    for (Index mu = 0; mu < n; ++mu) ph(mu) = std::polar(1.0, full.frequencies(mu) * t);
    d = ph.asDiagonal() * d * ph.conjugate().asDiagonal();

    CovarianceMatrix out;
    const Eigen::MatrixXcd& w = full.transform;
    if (is_real(w)) {
        const Eigen::MatrixXd wr = w.real();
        const Eigen::MatrixXd dr = d.real(), di = d.imag();
        const Eigen::MatrixXd re = wr * (dr * wr.transpose());
        const Eigen::MatrixXd im = wr * (di * wr.transpose());
        out.c.resize(n, n);
        out.c.real() = re;
        out.c.imag() = im;
    } else {
        out.c = w.conjugate() * (d * w.transpose());
    }
    return out;
}

void write_occupation_csv(std::ostream& os, const OccupationTrajectory& traj, const CsvHeader& header)
{
    os << "# kind: " << to_string(traj.kind) << '\n';
    os << "# beyond_recurrence: " << (traj.beyond_recurrence ? "true" : "false") << '\n';
    for (const auto& [k, v] : header.entries) os << "# " << k << ": " << v << '\n';
    os << "t,n_sys,n_pm\n";
    for (std::size_t i = 0; i < traj.t_grid.size(); ++i)
        os << format_double(traj.t_grid[i]) << ',' << format_double(traj.n_sys[i]) << ','
           << format_double(traj.n_pm[i]) << '\n';
}

} // namespace pseudobath
