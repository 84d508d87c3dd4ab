// spectral_extraction.cpp

#include "pseudobath/spectral_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fftw3.h>

#include "pseudobath/errors.hpp"

namespace pseudobath {

std::string_view to_string(WindowType w) noexcept
{
    return w == WindowType::Hann ? "hann" : "rectangular";
}

WindowType parse_window(std::string_view s)
{
    if (s == "rectangular" || s == "rect") return WindowType::Rectangular;
    if (s == "hann") return WindowType::Hann;
    throw ConfigError("unknown window '" + std::string(s) + "' (expected rectangular|hann)");
}

double SpectralFunction::max_value() const noexcept
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct FftwPlan {
    fftw_plan plan = nullptr;
    ~FftwPlan()
    {
        if (plan) fftw_destroy_plan(plan);
    }
};

double median_abs(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    for (double& x : v) x = std::abs(x);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

} // namespace

SpectralFunction bcf_fourier(std::span<const cplx> samples, double dtau, const FourierOptions& opt)
{
    if (!(dtau > 0.0)) throw ConfigError("bcf_fourier: dtau must be > 0");
    if (samples.size() < 2) throw ConfigError("bcf_fourier: need at least two τ samples");
    if (!(opt.window > 0.0)) throw ConfigError("bcf_fourier: window must be > 0");
    if (opt.pad_factor < 1) throw ConfigError("bcf_fourier: pad_factor must be >= 1");
    if (opt.window > opt.recurrence_horizon)
        throw ConfigError("bcf_fourier: window " + std::to_string(opt.window) + " exceeds the recurrence horizon " +
                          std::to_string(opt.recurrence_horizon));
    const double half = 0.5 * opt.window;
    const double m_real = half / dtau;
    const auto m = static_cast<std::size_t>(std::floor(m_real + 1e-9));
    if (m + 1 > samples.size())
        throw ConfigError("bcf_fourier: window needs τ up to " + std::to_string(half) + " but samples end at " +
                          std::to_string(dtau * static_cast<double>(samples.size() - 1)));
    if (m == 0) throw ConfigError("bcf_fourier: window shorter than one sample step");

    auto weight = [&](std::size_t k) {
        if (opt.type == WindowType::Hann) {
            const double c = std::cos(std::numbers::pi * static_cast<double>(k) * dtau / opt.window);
            return c * c;
        }
        return k == m ? 0.5 : 1.0; // trapezoid end points
    };

    const std::size_t len = next_pow2(static_cast<std::size_t>(opt.pad_factor) * (2 * m + 1));
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * len));
    if (!buf) throw NumericError("bcf_fourier: FFT buffer allocation failed");
    for (std::size_t k = 0; k < len; ++k) buf[k][0] = buf[k][1] = 0.0;
    for (std::size_t k = 0; k <= m; ++k) {
        const cplx v = samples[k] * weight(k);
        buf[k][0] = v.real();
        buf[k][1] = v.imag();
        if (k > 0) {
            buf[len - k][0] = v.real();
            buf[len - k][1] = -v.imag();
        }
    }
    {
        FftwPlan p;
        // FFTW_BACKWARD computes Σ_k x_k e^{+2πi jk/L}, i.e. the e^{+iωτ} convention.
        p.plan = fftw_plan_dft_1d(static_cast<int>(len), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!p.plan) {
            fftw_free(buf);
            throw NumericError("bcf_fourier: FFTW plan creation failed");
        }
        fftw_execute(p.plan);
    }

    SpectralFunction out;
    out.quantity = SpectralFunction::Quantity::AlphaTilde;
    out.window = opt.type;
    out.window_length = opt.window;
    out.resolution = kTwoPi / opt.window;
    out.omega_grid.resize(len);
    out.values.resize(len);
    const double dw = kTwoPi / (static_cast<double>(len) * dtau);
    // Reorder j = L/2 … L−1, 0 … L/2−1 to ascending ω.
    for (std::size_t r = 0; r < len; ++r) {
        const std::size_t j = (r + len / 2) % len;
        const auto signed_j = static_cast<double>(r) - static_cast<double>(len / 2);
        out.omega_grid[r] = signed_j * dw;
        out.values[r] = dtau * buf[j][0];
        out.max_imag = std::max(out.max_imag, dtau * std::abs(buf[j][1]));
    }
    fftw_free(buf);

    std::vector<double> outer;
    const double w_nyq = std::numbers::pi / dtau;
    for (std::size_t r = 0; r < len; ++r)
        if (std::abs(out.omega_grid[r]) > 0.5 * w_nyq) outer.push_back(out.values[r]);
    out.noise_floor = median_abs(std::move(outer));
    return out;
}

SpectralFunction bcf_fourier(const BCFGrid& bcf, const FourierOptions& opt)
{
    const std::size_t n = bcf.t_grid.size();
    std::vector<double> tau(n);
    std::optional<double> t_cm;
    if (bcf.layout == BCFGrid::Layout::Paired) {
        if (bcf.tprime_grid.size() != n) throw ConfigError("bcf_fourier: paired grid size mismatch");
        for (std::size_t i = 0; i < n; ++i) tau[i] = bcf.t_grid[i] - bcf.tprime_grid[i];
        const double cm = 0.5 * (bcf.t_grid[0] + bcf.tprime_grid[0]);
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(0.5 * (bcf.t_grid[i] + bcf.tprime_grid[i]) - cm) > 1e-9 * std::max(1.0, cm))
                throw ConfigError("bcf_fourier: paired grid must have a constant centre-of-mass time");
        if (bcf.kind == BCFKind::Factorizing) t_cm = cm;
    } else {
        if (bcf.tprime_grid.size() != 1 || bcf.values.cols() != 1)
            throw ConfigError("bcf_fourier: tensor input must have a single t' column");
        for (std::size_t i = 0; i < n; ++i) tau[i] = bcf.t_grid[i] - bcf.tprime_grid[0];
        if (bcf.kind == BCFKind::Factorizing) t_cm = bcf.tprime_grid[0];
    }
    if (n < 2) throw ConfigError("bcf_fourier: need at least two τ samples");
    if (std::abs(tau[0]) > 1e-12) throw ConfigError("bcf_fourier: τ grid must start at 0");
    const double dtau = tau[1] - tau[0];
    if (!(dtau > 0.0)) throw ConfigError("bcf_fourier: τ grid must be ascending");
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(tau[i] - static_cast<double>(i) * dtau) > 1e-9 * std::max(1.0, tau[i]))
            throw ConfigError("bcf_fourier: non-uniform τ grid");

    std::vector<cplx> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = bcf.at(i, 0);
    auto out = bcf_fourier(samples, dtau, opt);
    out.t_cm = t_cm;
    return out;
}

SpectralFunction extract_sd(const SpectralFunction& alpha_omega, const ThermalParams& th, double omega_floor)
{
    if (!(omega_floor > 0.0)) throw DomainError("extract_sd: omega_floor must be > 0");
    if (alpha_omega.quantity != SpectralFunction::Quantity::AlphaTilde)
        throw ConfigError("extract_sd: input must be a transformed BCF");
    SpectralFunction out = alpha_omega;
    out.quantity = SpectralFunction::Quantity::SpectralDensity;
    out.omega_grid.clear();
    out.values.clear();
    for (std::size_t r = 0; r < alpha_omega.size(); ++r) {
        const double w = alpha_omega.omega_grid[r];
        if (w <= omega_floor) continue;
        out.omega_grid.push_back(w);
        out.values.push_back(alpha_omega.values[r] / (2.0 * std::numbers::pi * (mean_occupation(w, th) + 1.0)));
    }
    if (out.values.empty()) throw DomainError("extract_sd: no grid frequencies above omega_floor");
    std::vector<double> outer;
    const double w_top = out.omega_grid.back();
    for (std::size_t r = 0; r < out.size(); ++r)
        if (out.omega_grid[r] > 0.5 * w_top) outer.push_back(out.values[r]);
    out.noise_floor = median_abs(std::move(outer));
    return out;
}

std::vector<double> extract_sd_at(const SpectralFunction& alpha_omega, const ThermalParams& th,
                                  std::span<const double> omegas, double omega_floor)
{
    for (double w : omegas)
        if (!(w > omega_floor))
            throw DomainError("extract_sd_at: requested omega " + std::to_string(w) + " <= floor " +
                              std::to_string(omega_floor));
    const auto& grid = alpha_omega.omega_grid;
    std::vector<double> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (w < grid.front() || w > grid.back()) throw DomainError("extract_sd_at: omega outside the FFT band");
        auto it = std::upper_bound(grid.begin(), grid.end(), w);
        if (it == grid.end()) --it;
        const auto hi = static_cast<std::size_t>(it - grid.begin());
        const std::size_t lo = hi - 1;
        const double f = (w - grid[lo]) / (grid[hi] - grid[lo]);
        const double a = (1.0 - f) * alpha_omega.values[lo] + f * alpha_omega.values[hi];
        out.push_back(a / (2.0 * std::numbers::pi * (mean_occupation(w, th) + 1.0)));
    }
    return out;
}

double default_window(std::span<const cplx> samples, double dtau, double recurrence_horizon)
{
    if (samples.empty() || !(dtau > 0.0)) throw ConfigError("default_window: empty or invalid sampling");
    const double a0 = std::abs(samples[0]);
    std::size_t last = samples.size();
    for (std::size_t k = samples.size(); k-- > 0;) {
        if (std::abs(samples[k]) >= 1e-4 * a0) {
            last = k;
            break;
        }
    }
    const double tau_max = dtau * static_cast<double>(samples.size() - 1);
    double w = 0.5 * recurrence_horizon;
    // Decay only counts if it happens inside the sampled range.
    if (last + 1 < samples.size()) w = std::min(w, 2.0 * dtau * static_cast<double>(last + 1));
    return std::min(w, 2.0 * tau_max);
}

std::vector<std::size_t> find_peaks(const SpectralFunction& f, double rel_threshold)
{
    std::vector<std::size_t> peaks;
    const double top = f.max_value();
    if (!(top > 0.0)) return peaks;
    for (std::size_t r = 1; r + 1 < f.size(); ++r) {
        const double v = f.values[r];
        if (v > f.values[r - 1] && v >= f.values[r + 1] && v >= rel_threshold * top) peaks.push_back(r);
    }
    return peaks;
}

double integrate(const SpectralFunction& f)
{
    double s = 0.0;
    for (std::size_t r = 1; r < f.size(); ++r)
        s += 0.5 * (f.values[r] + f.values[r - 1]) * (f.omega_grid[r] - f.omega_grid[r - 1]);
    return s;
}

double detailed_balance_error(const SpectralFunction& a, const ThermalParams& th, double rel_threshold)
{
    if (a.quantity != SpectralFunction::Quantity::AlphaTilde)
        throw ConfigError("detailed_balance_error: input must be a transformed BCF");
    double top = 0.0;
    for (double v : a.values) top = std::max(top, std::abs(v));
    const std::size_t len = a.size();
    const std::size_t zero = len / 2; // ω = 0 sits at index L/2 of the ascending grid
    double worst = 0.0;
    for (std::size_t j = 1; zero + j < len && j <= zero; ++j) {
        const double pos = a.values[zero + j];
        const double neg = a.values[zero - j];
        if (std::abs(pos) < rel_threshold * top) continue;
        const double w = a.omega_grid[zero + j];
        const double err = th.is_zero_temperature() ? std::abs(neg) / std::abs(pos)
                                                    : std::abs(pos - std::exp(th.beta() * w) * neg) / std::abs(pos);
        worst = std::max(worst, err);
    }
    return worst;
}

void write_spectral_csv(std::ostream& os, const SpectralFunction& f, const CsvHeader& header)
{
    const bool sd = f.quantity == SpectralFunction::Quantity::SpectralDensity;
    os << "# quantity: " << (sd ? "J" : "alpha_tilde") << '\n';
    os << "# convention: " << kFourierConvention << '\n';
    os << "# window: " << to_string(f.window) << '\n';
    os << "# window_length: " << format_double(f.window_length) << '\n';
    os << "# resolution: " << format_double(f.resolution) << '\n';
    os << "# t_cm: " << (f.t_cm ? format_double(*f.t_cm) : std::string("stationary")) << '\n';
    os << "# noise_floor: " << format_double(f.noise_floor) << '\n';
    for (const auto& [k, v] : header.entries) os << "# " << k << ": " << v << '\n';
    os << (sd ? "omega,J\n" : "omega,alpha_tilde\n");
    for (std::size_t r = 0; r < f.size(); ++r)
        os << format_double(f.omega_grid[r]) << ',' << format_double(f.values[r]) << '\n';
}

} // namespace pseudobath
