// bcf_engine.hpp: closed-form bath correlation functions
//
// Conventions: α(t,t') = ⟨(B(t) + B†(t))(B(t') + B†(t'))⟩ with B = g* b for the pseudomode
// environment, split as α = α1 + α2 with α1 = ⟨B(t)B†(t')⟩ (the (n+1)-weighted family) and
// α2 = ⟨B†(t)B(t')⟩ (the n-weighted family). Values are reported as α/|g|² unless the grid's
// normalized flag is false.

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pseudobath/bath_models.hpp"
#include "pseudobath/linalg_core.hpp"

namespace pseudobath {

enum class InitialStateKind { Factorizing, Diagonal };
enum class BCFKind { Standard, Factorizing, Diagonal };
enum class BCFPart { Full, Alpha1, Alpha2 };

std::string_view to_string(InitialStateKind k) noexcept;
std::string_view to_string(BCFKind k) noexcept;
std::string_view to_string(BCFPart p) noexcept;
InitialStateKind parse_initial_state(std::string_view s);
BCFPart parse_bcf_part(std::string_view s);

BCFKind to_bcf_kind(InitialStateKind k) noexcept;

// Complex correlation values on a set of (t, t') points.
//
// Tensor layout: values(i, j) = α(t_i, t'_j). Paired layout: t and t' grids have equal length
// and values(i, 0) = α(t_i, t'_i) (e.g. a sweep in τ at fixed centre-of-mass time).
struct BCFGrid {
    enum class Layout { Tensor, Paired };

    std::vector<double> t_grid;
    std::vector<double> tprime_grid;
    Eigen::MatrixXcd values;
    Layout layout = Layout::Tensor;
    BCFKind kind = BCFKind::Standard;
    BCFPart part = BCFPart::Full;
    bool normalized = true; // values are α/|g|²
    double g_squared = 1.0;
    bool beyond_recurrence = false;
    std::string method = "eigenbasis";

    std::size_t num_points() const noexcept { return static_cast<std::size_t>(values.size()); }
    cplx at(std::size_t i, std::size_t j = 0) const { return values(static_cast<Index>(i), static_cast<Index>(j)); }

    // Largest |α| over the grid.
    double max_abs() const noexcept;
};

// Shared options for the pseudomode BCFs.
struct BCFOptions {
    BCFPart part = BCFPart::Full;
    bool normalized = true; // report α/|g|²
};

// Standard thermal BCF of a diagonal environment: Σ_μ |k_μ|² [e^{−iω_μτ}(n+1) + e^{iω_μτ} n].
BCFGrid bcf_standard(const DiscretizedBath& bath, const ThermalParams& th, std::span<const double> tau_grid,
                     BCFPart part = BCFPart::Full);

// Factorizing initial state (PM and bath thermal separately). The eigensystem must come from
// build_pm_bath_matrix(pm, bath).
BCFGrid bcf_factorizing(const EigenSystem& eig, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                        const ThermalParams& th, std::span<const double> t_grid,
                        std::span<const double> tprime_grid, const BCFOptions& opt = {});

// Factorizing BCF on the paired points (t_cm + τ/2, t_cm − τ/2); requires τ ≤ 2 t_cm.
BCFGrid bcf_factorizing_cm(const EigenSystem& eig, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                           const ThermalParams& th, double t_cm, std::span<const double> tau_grid,
                           const BCFOptions& opt = {});

// Diagonal (global thermal) initial state, stationary: α(τ) on t = τ, t' = 0.
BCFGrid bcf_diagonal(const EigenSystem& eig, const PseudomodeConfig& pm, const ThermalParams& th,
                     std::span<const double> tau_grid, const BCFOptions& opt = {});

// Diagonal BCF evaluated on a two-time tensor grid (through τ = t − t').
BCFGrid bcf_diagonal(const EigenSystem& eig, const PseudomodeConfig& pm, const ThermalParams& th,
                     std::span<const double> t_grid, std::span<const double> tprime_grid,
                     const BCFOptions& opt = {});

// α1 or α2 of either initial state; dispatches to bcf_factorizing / bcf_diagonal.
BCFGrid bcf_components(InitialStateKind kind, BCFPart part, const EigenSystem& eig, const DiscretizedBath& bath,
                       const PseudomodeConfig& pm, const ThermalParams& th, std::span<const double> t_grid,
                       std::span<const double> tprime_grid, bool normalized = true);

// Occupations of the PM+bath modes in the original basis: (n(Ω), n(ω_1), …, n(ω_N)).
Eigen::VectorXd factorizing_occupations(const DiscretizedBath& bath, const PseudomodeConfig& pm,
                                        const ThermalParams& th);

// n(ω̃_μ) over the eigenfrequencies; throws DomainError if any ω̃_μ ≤ 0.
Eigen::VectorXd eigen_occupations(const EigenSystem& eig, const ThermalParams& th);

// Rows of the propagator P(t) = S e^{−iω̃t} S†: X(i, η) = P(t_i)_{0η}, i.e. b(t) = Σ_η X_η(t) a_η(0).
Eigen::MatrixXcd pm_propagator_rows(const EigenSystem& eig, std::span<const double> times);

// CSV with columns (t, t_prime, re_alpha, im_alpha). Header lines start with '#'.
struct CsvHeader {
    std::vector<std::pair<std::string, std::string>> entries;
    void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value);
};

void write_bcf_csv(std::ostream& os, const BCFGrid& grid, const CsvHeader& header);

// Shortest-round-trip decimal formatting used in all CSV output.
std::string format_double(double v);

} // namespace pseudobath
