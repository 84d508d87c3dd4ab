// bath_models.cpp

#include "pseudobath/bath_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pseudobath/errors.hpp"

namespace pseudobath {

OhmicSD::OhmicSD(double eta, double lambda_c) : eta_(eta), lambda_c_(lambda_c)
{
    if (!(eta > 0.0)) throw ConfigError("OhmicSD: eta must be > 0");
    if (!(lambda_c > 0.0)) throw ConfigError("OhmicSD: lambda_c must be > 0");
}

ThermalParams::ThermalParams(double temperature)
    : temperature_(temperature),
      beta_(temperature > 0.0 ? 1.0 / temperature : std::numeric_limits<double>::infinity())
{
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw ConfigError("ThermalParams: temperature must be finite and >= 0");
}

PseudomodeConfig::PseudomodeConfig(double omega_pm_, cplx g_) : omega_pm(omega_pm_), g(g_)
{
    if (!(omega_pm > 0.0)) throw ConfigError("PseudomodeConfig: omega_pm must be > 0");
}

namespace {

std::vector<double> spacing_weights(const std::vector<double>& w)
{
    const std::size_t n = w.size();
    std::vector<double> dw(n, 0.0);
    if (n < 2) return dw;
    dw.front() = w[1] - w[0];
    dw.back() = w[n - 1] - w[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) dw[i] = 0.5 * (w[i + 1] - w[i - 1]);
    return dw;
}

} // namespace

DiscretizedBath::DiscretizedBath(std::vector<double> frequencies, std::vector<cplx> couplings,
                                 std::vector<double> weights)
    : frequencies_(std::move(frequencies)), couplings_(std::move(couplings)), weights_(std::move(weights))
{
    if (frequencies_.size() != couplings_.size())
        throw ConfigError("DiscretizedBath: frequencies and couplings differ in length");
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
        if (!(frequencies_[i] > 0.0) || !std::isfinite(frequencies_[i]))
            throw ConfigError("DiscretizedBath: frequency " + std::to_string(i) + " must be finite and > 0");
        if (i > 0 && !(frequencies_[i] > frequencies_[i - 1]))
            throw ConfigError("DiscretizedBath: frequencies must be strictly increasing");
        if (!std::isfinite(couplings_[i].real()) || !std::isfinite(couplings_[i].imag()))
            throw ConfigError("DiscretizedBath: coupling " + std::to_string(i) + " is not finite");
    }
    if (weights_.empty()) {
        weights_ = spacing_weights(frequencies_);
    } else if (weights_.size() != frequencies_.size()) {
        throw ConfigError("DiscretizedBath: weights differ in length from frequencies");
    }
}

double DiscretizedBath::total_coupling_weight() const noexcept
{
    double s = 0.0;
    for (const auto& k : couplings_) s += std::norm(k);
    return s;
}

bool DiscretizedBath::has_real_couplings() const noexcept
{
    return std::all_of(couplings_.begin(), couplings_.end(), [](const cplx& k) { return k.imag() == 0.0; });
}

double DiscretizedBath::recurrence_horizon() const noexcept
{
    if (frequencies_.size() < 2) return std::numeric_limits<double>::infinity();
    double max_gap = 0.0;
    for (std::size_t i = 1; i < frequencies_.size(); ++i)
        max_gap = std::max(max_gap, frequencies_[i] - frequencies_[i - 1]);
    return 2.0 * std::numbers::pi / max_gap;
}

double ohmic_sd(double omega, const OhmicSD& sd)
{
    if (!(omega >= 0.0)) throw DomainError("ohmic_sd: omega must be >= 0");
    if (omega == 0.0) return 0.0;
    return sd.eta() * omega * std::exp(-omega / sd.lambda_c());
}

double mean_occupation(double omega, const ThermalParams& th)
{
    if (!(omega > 0.0)) throw DomainError("mean_occupation: omega must be > 0");
    if (th.is_zero_temperature()) return 0.0;
    return 1.0 / std::expm1(th.beta() * omega);
}

double mean_occupation_continued(double omega, const ThermalParams& th)
{
    if (omega == 0.0 || !std::isfinite(omega))
        throw DomainError("mean_occupation_continued: omega must be finite and nonzero");
    if (th.is_zero_temperature()) return omega > 0.0 ? 0.0 : -1.0;
    return 1.0 / std::expm1(th.beta() * omega);
}

DiscretizedBath discretize(const OhmicSD& sd, std::size_t n_modes, double omega_min, double omega_max)
{
    if (n_modes < 2) throw ConfigError("discretize: n_modes must be >= 2");
    if (!(omega_min > 0.0) || !(omega_max > omega_min))
        throw ConfigError("discretize: require 0 < omega_min < omega_max");

    const double step = (omega_max - omega_min) / static_cast<double>(n_modes - 1);
    std::vector<double> w(n_modes);
    for (std::size_t i = 0; i < n_modes; ++i) w[i] = omega_min + static_cast<double>(i) * step;
    w.back() = omega_max;

    auto dw = spacing_weights(w);
    std::vector<cplx> kappa(n_modes);
    for (std::size_t i = 0; i < n_modes; ++i) kappa[i] = std::sqrt(ohmic_sd(w[i], sd) * dw[i]);
    return DiscretizedBath(std::move(w), std::move(kappa), std::move(dw));
}

DiscretizedBath discretize(const OhmicSD& sd, std::size_t n_modes)
{
    return discretize(sd, n_modes, 0.002 * sd.lambda_c(), 10.0 * sd.lambda_c());
}

} // namespace pseudobath
