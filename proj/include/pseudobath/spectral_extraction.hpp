// spectral_extraction.hpp: Fourier transform of BCF data and spectral-density recovery
//
// Convention: α̃(ω) = ∫dτ e^{+iωτ} α(τ), so α(τ) = ∫dω/(2π) e^{−iωτ} α̃(ω). A line e^{−iω₀τ}
// transforms to 2πδ(ω − ω₀). The spectral density follows from J(ω) = α̃(ω) / [2π(n(ω)+1)].

#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudobath/bath_models.hpp"
#include "pseudobath/bcf_engine.hpp"

namespace pseudobath {

enum class WindowType { Rectangular, Hann };

std::string_view to_string(WindowType w) noexcept;
WindowType parse_window(std::string_view s);

inline constexpr std::string_view kFourierConvention = "alpha_tilde(omega) = int dtau e^{+i omega tau} alpha(tau)";

struct SpectralFunction {
    enum class Quantity { AlphaTilde, SpectralDensity };

    std::vector<double> omega_grid; // ascending
    std::vector<double> values;
    Quantity quantity = Quantity::AlphaTilde;
    std::optional<double> t_cm;     // set for non-stationary (factorizing) input
    WindowType window = WindowType::Rectangular;
    double window_length = 0.0;     // full record length W, τ ∈ [−W/2, W/2]
    double resolution = 0.0;        // 2π / W
    double noise_floor = 0.0;       // median |value| over the outer half of the band
    double max_imag = 0.0;          // largest discarded imaginary part of the transform

    std::size_t size() const noexcept { return values.size(); }
    double max_value() const noexcept;
};

struct FourierOptions {
    double window = 0.0;                     // full record length; must be > 0
    WindowType type = WindowType::Rectangular;
    double recurrence_horizon = std::numeric_limits<double>::infinity();
    int pad_factor = 4;                      // zero padding: FFT length ≥ pad_factor · samples
};

// Transforms a BCF sampled on τ = t − t' = 0, dτ, 2dτ, … (one value per τ). Accepts the
// paired layout of bcf_factorizing_cm (constant t_cm) or a single-column tensor grid such as
// bcf_diagonal(τ). Negative τ are filled from α(−τ) = conj(α(τ)).
SpectralFunction bcf_fourier(const BCFGrid& bcf, const FourierOptions& opt);

// Same transform from raw samples α(k·dτ), k = 0, 1, ….
SpectralFunction bcf_fourier(std::span<const cplx> samples, double dtau, const FourierOptions& opt);

// J(ω) = α̃(ω) / [2π(n(ω)+1)] on the grid points with ω > omega_floor.
SpectralFunction extract_sd(const SpectralFunction& alpha_omega, const ThermalParams& th, double omega_floor);

// J at requested frequencies (linear interpolation); throws DomainError if any ω ≤ omega_floor.
std::vector<double> extract_sd_at(const SpectralFunction& alpha_omega, const ThermalParams& th,
                                  std::span<const double> omegas, double omega_floor);

// Default window length: min(recurrence/2, 2·τ_decay), τ_decay being the time after which |α(τ)|
// stays below 1e-4·|α(0)|. Limited to the available sampled range 2·τ_max.
double default_window(std::span<const cplx> samples, double dtau, double recurrence_horizon);

// Local maxima whose height exceeds rel_threshold · global maximum.
std::vector<std::size_t> find_peaks(const SpectralFunction& f, double rel_threshold = 0.05);

// Trapezoidal ∫ f dω over the whole grid.
double integrate(const SpectralFunction& f);

// max |α̃(ω) − e^{βω} α̃(−ω)| / |α̃(ω)| over ω > 0 with |α̃(ω)| ≥ rel_threshold · max |α̃|.
double detailed_balance_error(const SpectralFunction& alpha_omega, const ThermalParams& th,
                              double rel_threshold = 0.05);

// Columns (omega, J) or (omega, alpha_tilde) with the window and convention in the header.
void write_spectral_csv(std::ostream& os, const SpectralFunction& f, const CsvHeader& header);

} // namespace pseudobath
