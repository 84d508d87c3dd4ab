// bath_models.hpp: spectral densities and their discretization into bath modes

#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace pseudobath {

using cplx = std::complex<double>;

// Ohmic spectral density with exponential cutoff, J(ω) = η ω exp(−ω/Λ).
class OhmicSD {
public:
    OhmicSD(double eta, double lambda_c);

    double eta() const noexcept { return eta_; }
    double lambda_c() const noexcept { return lambda_c_; }

    // ∫₀^∞ J(ω) dω
    double total_weight() const noexcept { return eta_ * lambda_c_ * lambda_c_; }

private:
    double eta_;
    double lambda_c_;
};

// Temperature in frequency units (k_B = ħ = 1). T = 0 is carried as β = +∞.
class ThermalParams {
public:
    explicit ThermalParams(double temperature);

    static ThermalParams zero() { return ThermalParams(0.0); }

    double temperature() const noexcept { return temperature_; }
    double beta() const noexcept { return beta_; }
    bool is_zero_temperature() const noexcept { return beta_ == std::numeric_limits<double>::infinity(); }

private:
    double temperature_;
    double beta_;
};

// A finite set of bath modes: frequencies ω_λ, couplings κ_λ and quadrature weights Δω_λ.
//
// Couplings are stored complex so that the κ* placement of the coupling matrix is honoured
// for user-supplied complex couplings; discretize() always produces real non-negative ones.
class DiscretizedBath {
public:
    DiscretizedBath() = default;

    // Generic diagonal environment {ω_λ, κ_λ}. Weights default to the spacing rule of discretize().
    DiscretizedBath(std::vector<double> frequencies, std::vector<cplx> couplings,
                    std::vector<double> weights = {});

    std::size_t size() const noexcept { return frequencies_.size(); }
    bool empty() const noexcept { return frequencies_.empty(); }

    std::span<const double> frequencies() const noexcept { return frequencies_; }
    std::span<const cplx> couplings() const noexcept { return couplings_; }
    std::span<const double> weights() const noexcept { return weights_; }

    double max_frequency() const noexcept { return frequencies_.empty() ? 0.0 : frequencies_.back(); }

    // Σ_λ |κ_λ|²
    double total_coupling_weight() const noexcept;

    bool has_real_couplings() const noexcept;

    // Time after which the equidistant mode comb rephases, 2π/Δω (largest spacing for
    // non-uniform grids). Infinite for fewer than two modes.
    double recurrence_horizon() const noexcept;

private:
    std::vector<double> frequencies_;
    std::vector<cplx> couplings_;
    std::vector<double> weights_;
};

// System-pseudomode coupling g and PM frequency Ω.
struct PseudomodeConfig {
    PseudomodeConfig(double omega_pm, cplx g);

    double omega_pm;
    cplx g;

    double g_squared() const noexcept { return std::norm(g); }
};

// J(ω) = η ω e^{−ω/Λ}. Throws DomainError for ω < 0.
double ohmic_sd(double omega, const OhmicSD& sd);

// Bose-Einstein occupation 1/(e^{βω} − 1); exactly 0 at T = 0. Throws DomainError for ω ≤ 0.
double mean_occupation(double omega, const ThermalParams& th);

// Analytic continuation of n(ω) to any ω ≠ 0, satisfying n(−ω) = −[n(ω) + 1].
double mean_occupation_continued(double omega, const ThermalParams& th);

// Equidistant sampling of J on [omega_min, omega_max] with the endpoint Δω rule and
// κ_λ = sqrt(J(ω_λ) Δω_λ).
DiscretizedBath discretize(const OhmicSD& sd, std::size_t n_modes, double omega_min,
                           double omega_max);

// Default range [0.002 Λ, 10 Λ].
DiscretizedBath discretize(const OhmicSD& sd, std::size_t n_modes);

} // namespace pseudobath
