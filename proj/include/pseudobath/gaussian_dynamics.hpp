// gaussian_dynamics.hpp: second moments of the system + PM + bath quadratic Hamiltonian
//
// Index layout of the full problem: 0 = system, 1 = pseudomode, 2 … N+1 = bath modes.
// With a(t) = P(t) a(0) and P(t) = W e^{−iEt} W†, C(t)_jk = ⟨a_j†(t) a_k(t)⟩ = [P* C0 Pᵀ]_jk.

#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pseudobath/bath_models.hpp"
#include "pseudobath/bcf_engine.hpp"
#include "pseudobath/linalg_core.hpp"

namespace pseudobath {

// C_jk = ⟨a_j† a_k⟩ at a single time.
struct CovarianceMatrix {
    Eigen::MatrixXcd c;

    Index dim() const noexcept { return c.rows(); }
    double occupation(Index j) const { return c(j, j).real(); }
    cplx trace() const { return c.trace(); }

    // ⟨H⟩ = Σ_jk H_jk C_jk for the single-particle matrix H.
    cplx energy(const HermitianMatrix& h) const;

    double hermiticity_error() const;
    double min_diagonal() const;
};

struct OccupationTrajectory {
    std::vector<double> t_grid;
    std::vector<double> n_sys;
    std::vector<double> n_pm;
    InitialStateKind kind = InitialStateKind::Factorizing;
    bool beyond_recurrence = false;
};

// Initial moments for the full (N+2) problem. The system starts with occupation n_sys0 (vacuum by
// default) and is uncorrelated with the environment. Factorizing: environment diagonal with
// (n(Ω), n(ω_λ)). Diagonal: environment block conj(S) diag(n(ω̃)) Sᵀ. eig must be the PM + bath
// eigensystem of (pm, bath).
CovarianceMatrix initial_covariance(InitialStateKind kind, double omega_sys, const PseudomodeConfig& pm,
                                    const DiscretizedBath& bath, const EigenSystem& eig, const ThermalParams& th,
                                    double n_sys0 = 0.0);

// n_sys(t) = C(t)_00 and n_pm(t) = C(t)_11 from the full-matrix eigensystem. The normal-mode
// moments D = Wᵀ C0 W* are formed once; each time point then costs one O(N²) quadratic form per
// observable, batched over times as matrix products. t = 0 returns C0 entries exactly.
OccupationTrajectory propagate_occupations(const EigenSystem& full, const CovarianceMatrix& c0,
                                           std::span<const double> t_grid, InitialStateKind kind,
                                           double recurrence_horizon = std::numeric_limits<double>::infinity());

// Full C(t) at one time (O(N³)); used for conservation and positivity checks.
CovarianceMatrix propagate_covariance(const EigenSystem& full, const CovarianceMatrix& c0, double t);

// Columns (t, n_sys, n_pm).
void write_occupation_csv(std::ostream& os, const OccupationTrajectory& traj, const CsvHeader& header);

} // namespace pseudobath
