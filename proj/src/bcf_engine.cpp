// bcf_engine.cpp

#include "pseudobath/bcf_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

#include "pseudobath/errors.hpp"

namespace pseudobath {

std::string_view to_string(InitialStateKind k) noexcept
{
    return k == InitialStateKind::Factorizing ? "factorizing" : "diagonal";
}

std::string_view to_string(BCFKind k) noexcept
{
    switch (k) {
    case BCFKind::Standard: return "standard";
    case BCFKind::Factorizing: return "factorizing";
    case BCFKind::Diagonal: return "diagonal";
    }
    return "unknown";
}

std::string_view to_string(BCFPart p) noexcept
{
    switch (p) {
    case BCFPart::Full: return "alpha";
    case BCFPart::Alpha1: return "alpha1";
    case BCFPart::Alpha2: return "alpha2";
    }
    return "unknown";
}

InitialStateKind parse_initial_state(std::string_view s)
{
    if (s == "factorizing") return InitialStateKind::Factorizing;
    if (s == "diagonal") return InitialStateKind::Diagonal;
    throw ConfigError("unknown initial-state kind '" + std::string(s) + "' (expected factorizing|diagonal)");
}

BCFPart parse_bcf_part(std::string_view s)
{
    if (s == "alpha" || s == "full") return BCFPart::Full;
    if (s == "alpha1") return BCFPart::Alpha1;
    if (s == "alpha2") return BCFPart::Alpha2;
    throw ConfigError("unknown BCF part '" + std::string(s) + "' (expected alpha|alpha1|alpha2)");
}

BCFKind to_bcf_kind(InitialStateKind k) noexcept
{
    return k == InitialStateKind::Factorizing ? BCFKind::Factorizing : BCFKind::Diagonal;
}

double BCFGrid::max_abs() const noexcept
{
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
}

namespace {

void check_times(std::span<const double> ts, const char* what)
{
    for (double t : ts)
        if (!std::isfinite(t)) throw ConfigError(std::string(what) + ": non-finite time value");
}

double max_abs_time(std::span<const double> ts)
{
    double m = 0.0;
    for (double t : ts) m = std::max(m, std::abs(t));
    return m;
}

// Recurrence estimate for an eigenbasis: 2π over the median level spacing.
double eigen_recurrence_horizon(const EigenSystem& eig)
{
    const Index n = eig.dim();
    if (n < 3) return std::numeric_limits<double>::infinity();
    std::vector<double> gaps(static_cast<std::size_t>(n - 1));
    for (Index i = 1; i < n; ++i) gaps[static_cast<std::size_t>(i - 1)] = eig.frequencies(i) - eig.frequencies(i - 1);
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return *mid > 0.0 ? 2.0 * std::numbers::pi / *mid : std::numeric_limits<double>::infinity();
}

void check_eig_matches(const EigenSystem& eig, const DiscretizedBath& bath, const char* what)
{
    if (eig.dim() != static_cast<Index>(bath.size()) + 1)
        throw ConfigError(std::string(what) + ": eigensystem dimension " + std::to_string(eig.dim()) +
                          " does not match bath size + 1 = " + std::to_string(bath.size() + 1));
}

bool transform_is_real(const EigenSystem& eig)
{
    return (eig.transform.imag().array() == 0.0).all();
}

// Σ_μ w_μ [c_plus e^{−iω̃τ} + c_minus e^{+iω̃τ}] for weights and two occupation families.
cplx stationary_sum(const Eigen::VectorXd& freq, const Eigen::VectorXd& w_minus_phase,
                    const Eigen::VectorXd& w_plus_phase, double tau)
{
    double re = 0.0, im = 0.0;
    for (Index m = 0; m < freq.size(); ++m) {
        const double ph = freq(m) * tau;
        const double c = std::cos(ph), s = std::sin(ph);
        // e^{−iφ} a + e^{+iφ} b
        re += c * (w_minus_phase(m) + w_plus_phase(m));
        im += s * (w_plus_phase(m) - w_minus_phase(m));
    }
    return {re, im};
}

} // namespace

Eigen::VectorXd factorizing_occupations(const DiscretizedBath& bath, const PseudomodeConfig& pm,
                                        const ThermalParams& th)
{
    Eigen::VectorXd n(static_cast<Index>(bath.size()) + 1);
    n(0) = mean_occupation(pm.omega_pm, th);
    for (std::size_t l = 0; l < bath.size(); ++l)
        n(static_cast<Index>(l) + 1) = mean_occupation(bath.frequencies()[l], th);
    return n;
}

Eigen::VectorXd eigen_occupations(const EigenSystem& eig, const ThermalParams& th)
{
    Eigen::VectorXd n(eig.dim());
    for (Index m = 0; m < eig.dim(); ++m) {
        if (!(eig.frequencies(m) > 0.0))
            throw DomainError("eigen_occupations: eigenfrequency " + std::to_string(m) + " = " +
                              std::to_string(eig.frequencies(m)) + " is not positive");
        n(m) = mean_occupation(eig.frequencies(m), th);
    }
    return n;
}

Eigen::MatrixXcd pm_propagator_rows(const EigenSystem& eig, std::span<const double> times)
{
    const Index n = eig.dim();
    const auto nt = static_cast<Index>(times.size());
    Eigen::MatrixXcd x(nt, n);
    if (nt == 0) return x;
    if (transform_is_real(eig)) {
        const Eigen::MatrixXd s = eig.transform.real();
        Eigen::MatrixXd pc(nt, n), ps(nt, n);
        for (Index m = 0; m < n; ++m) {
            const double s0 = s(0, m);
            const double w = eig.frequencies(m);
            for (Index i = 0; i < nt; ++i) {
                const double ph = w * times[static_cast<std::size_t>(i)];
                pc(i, m) = s0 * std::cos(ph);
                ps(i, m) = -s0 * std::sin(ph);
            }
        }
        Eigen::MatrixXd re(nt, n), im(nt, n);
        re.noalias() = pc * s.transpose();
        im.noalias() = ps * s.transpose();
        x.real() = re;
        x.imag() = im;
        return x;
    }
    Eigen::MatrixXcd phi(nt, n);
    for (Index m = 0; m < n; ++m) {
        const cplx s0 = eig.transform(0, m);
        const double w = eig.frequencies(m);
        for (Index i = 0; i < nt; ++i) phi(i, m) = s0 * std::polar(1.0, -w * times[static_cast<std::size_t>(i)]);
    }
    x.noalias() = phi * eig.transform.adjoint();
    return x;
}

// ---------------------------------------------------------------------------------------------

BCFGrid bcf_standard(const DiscretizedBath& bath, const ThermalParams& th, std::span<const double> tau_grid,
                     BCFPart part)
{
    check_times(tau_grid, "bcf_standard");
    const auto nb = static_cast<Index>(bath.size());
    Eigen::VectorXd freq(nb), w_np1(nb), w_n(nb);
    for (Index l = 0; l < nb; ++l) {
        const double w = bath.frequencies()[static_cast<std::size_t>(l)];
        const double k2 = std::norm(bath.couplings()[static_cast<std::size_t>(l)]);
        const double n = mean_occupation(w, th);
        freq(l) = w;
        w_np1(l) = part == BCFPart::Alpha2 ? 0.0 : k2 * (n + 1.0);
        w_n(l) = part == BCFPart::Alpha1 ? 0.0 : k2 * n;
    }

    BCFGrid g;
    g.t_grid.assign(tau_grid.begin(), tau_grid.end());
    g.tprime_grid = {0.0};
    g.values.resize(static_cast<Index>(tau_grid.size()), 1);
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        g.values(static_cast<Index>(i), 0) = stationary_sum(freq, w_np1, w_n, tau_grid[i]);
    g.kind = BCFKind::Standard;
    g.part = part;
    g.normalized = false;
    g.g_squared = 1.0;
    g.beyond_recurrence = max_abs_time(tau_grid) > bath.recurrence_horizon();
    return g;
}

BCFGrid bcf_factorizing(const EigenSystem& eig, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                        const ThermalParams& th, std::span<const double> t_grid,
                        std::span<const double> tprime_grid, const BCFOptions& opt)
{
    check_eig_matches(eig, bath, "bcf_factorizing");
    check_times(t_grid, "bcf_factorizing");
    check_times(tprime_grid, "bcf_factorizing");

    const Eigen::VectorXd n = factorizing_occupations(bath, pm, th);
    const Eigen::MatrixXcd xt = pm_propagator_rows(eig, t_grid);
    const Eigen::MatrixXcd xp = pm_propagator_rows(eig, tprime_grid);

    BCFGrid g;
    g.t_grid.assign(t_grid.begin(), t_grid.end());
    g.tprime_grid.assign(tprime_grid.begin(), tprime_grid.end());
    g.values = Eigen::MatrixXcd::Zero(xt.rows(), xp.rows());
    // α1 = Σ_η (n_η + 1) X_η(t) X_η(t')*,  α2 = Σ_η n_η X_η(t)* X_η(t')
    if (opt.part != BCFPart::Alpha2)
        g.values.noalias() += (xt * (n.array() + 1.0).matrix().cast<cplx>().asDiagonal()) * xp.adjoint();
    if (opt.part != BCFPart::Alpha1)
        g.values.noalias() += (xt.conjugate() * n.cast<cplx>().asDiagonal()) * xp.transpose();
    if (!opt.normalized) g.values *= pm.g_squared();

    g.kind = BCFKind::Factorizing;
    g.part = opt.part;
    g.normalized = opt.normalized;
    g.g_squared = pm.g_squared();
    const double horizon = bath.recurrence_horizon();
    g.beyond_recurrence = max_abs_time(t_grid) > horizon || max_abs_time(tprime_grid) > horizon;
    return g;
}

BCFGrid bcf_factorizing_cm(const EigenSystem& eig, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                           const ThermalParams& th, double t_cm, std::span<const double> tau_grid,
                           const BCFOptions& opt)
{
    check_eig_matches(eig, bath, "bcf_factorizing_cm");
    check_times(tau_grid, "bcf_factorizing_cm");
    for (double tau : tau_grid)
        if (std::abs(tau) > 2.0 * t_cm + 1e-12)
            throw ConfigError("bcf_factorizing_cm: |tau| must not exceed 2 t_cm (t' would be negative)");

    const Eigen::VectorXd n = factorizing_occupations(bath, pm, th);
    const Eigen::ArrayXd np1 = n.array() + 1.0;

    BCFGrid g;
    g.layout = BCFGrid::Layout::Paired;
    g.t_grid.resize(tau_grid.size());
    g.tprime_grid.resize(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        g.t_grid[i] = t_cm + 0.5 * tau_grid[i];
        g.tprime_grid[i] = t_cm - 0.5 * tau_grid[i];
    }
    g.values.resize(static_cast<Index>(tau_grid.size()), 1);

    constexpr std::size_t kBlock = 256;
    for (std::size_t start = 0; start < tau_grid.size(); start += kBlock) {
        const std::size_t len = std::min(kBlock, tau_grid.size() - start);
        const auto xa = pm_propagator_rows(eig, std::span<const double>(g.t_grid).subspan(start, len));
        const auto xb = pm_propagator_rows(eig, std::span<const double>(g.tprime_grid).subspan(start, len));
        for (std::size_t i = 0; i < len; ++i) {
            const auto r = static_cast<Index>(i);
            cplx v{};
            if (opt.part != BCFPart::Alpha2)
                v += (xa.row(r).array() * np1.transpose().cast<cplx>() * xb.row(r).conjugate().array()).sum();
            if (opt.part != BCFPart::Alpha1)
                v += (xa.row(r).conjugate().array() * n.transpose().array().cast<cplx>() * xb.row(r).array()).sum();
            g.values(static_cast<Index>(start + i), 0) = opt.normalized ? v : v * pm.g_squared();
        }
    }

    g.kind = BCFKind::Factorizing;
    g.part = opt.part;
    g.normalized = opt.normalized;
    g.g_squared = pm.g_squared();
    g.beyond_recurrence = t_cm + 0.5 * max_abs_time(tau_grid) > bath.recurrence_horizon();
    return g;
}

BCFGrid bcf_diagonal(const EigenSystem& eig, const PseudomodeConfig& pm, const ThermalParams& th,
                     std::span<const double> tau_grid, const BCFOptions& opt)
{
    const std::vector<double> zero{0.0};
    return bcf_diagonal(eig, pm, th, tau_grid, zero, opt);
}

BCFGrid bcf_diagonal(const EigenSystem& eig, const PseudomodeConfig& pm, const ThermalParams& th,
                     std::span<const double> t_grid, std::span<const double> tprime_grid, const BCFOptions& opt)
{
    check_times(t_grid, "bcf_diagonal");
    check_times(tprime_grid, "bcf_diagonal");
    const Eigen::VectorXd n = eigen_occupations(eig, th);
    const Eigen::VectorXd w = eig.row_weights(0);
    const Eigen::VectorXd w_np1 = opt.part == BCFPart::Alpha2 ? Eigen::VectorXd::Zero(w.size())
                                                              : Eigen::VectorXd(w.array() * (n.array() + 1.0));
    const Eigen::VectorXd w_n = opt.part == BCFPart::Alpha1 ? Eigen::VectorXd::Zero(w.size())
                                                            : Eigen::VectorXd(w.array() * n.array());
    const double scale = opt.normalized ? 1.0 : pm.g_squared();

    BCFGrid g;
    g.t_grid.assign(t_grid.begin(), t_grid.end());
    g.tprime_grid.assign(tprime_grid.begin(), tprime_grid.end());
    g.values.resize(static_cast<Index>(t_grid.size()), static_cast<Index>(tprime_grid.size()));
    double max_tau = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        for (std::size_t j = 0; j < tprime_grid.size(); ++j) {
            const double tau = t_grid[i] - tprime_grid[j];
            max_tau = std::max(max_tau, std::abs(tau));
            g.values(static_cast<Index>(i), static_cast<Index>(j)) =
                scale * stationary_sum(eig.frequencies, w_np1, w_n, tau);
        }
    g.kind = BCFKind::Diagonal;
    g.part = opt.part;
    g.normalized = opt.normalized;
    g.g_squared = pm.g_squared();
    g.beyond_recurrence = max_tau > eigen_recurrence_horizon(eig);
    return g;
}

BCFGrid bcf_components(InitialStateKind kind, BCFPart part, const EigenSystem& eig, const DiscretizedBath& bath,
                       const PseudomodeConfig& pm, const ThermalParams& th, std::span<const double> t_grid,
                       std::span<const double> tprime_grid, bool normalized)
{
    const BCFOptions opt{part, normalized};
    if (kind == InitialStateKind::Factorizing)
        return bcf_factorizing(eig, bath, pm, th, t_grid, tprime_grid, opt);
    check_eig_matches(eig, bath, "bcf_components");
    return bcf_diagonal(eig, pm, th, t_grid, tprime_grid, opt);
}

// ---------------------------------------------------------------------------------------------
// CSV

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void CsvHeader::add(std::string key, double value)
{
    entries.emplace_back(std::move(key), format_double(value));
}

void write_bcf_csv(std::ostream& os, const BCFGrid& grid, const CsvHeader& header)
{
    os << "# kind: " << to_string(grid.kind) << '\n';
    os << "# part: " << to_string(grid.part) << '\n';
    os << "# method: " << grid.method << '\n';
    os << "# normalized_by_g_squared: " << (grid.normalized ? "true" : "false") << '\n';
    os << "# beyond_recurrence: " << (grid.beyond_recurrence ? "true" : "false") << '\n';
    for (const auto& [k, v] : header.entries) os << "# " << k << ": " << v << '\n';
    os << "t,t_prime,re_alpha,im_alpha\n";
    auto row = [&](double t, double tp, cplx a) {
        os << format_double(t) << ',' << format_double(tp) << ',' << format_double(a.real()) << ','
           << format_double(a.imag()) << '\n';
    };
    if (grid.layout == BCFGrid::Layout::Paired) {
        for (std::size_t i = 0; i < grid.t_grid.size(); ++i)
            row(grid.t_grid[i], grid.tprime_grid[i], grid.at(i));
    } else {
        for (std::size_t i = 0; i < grid.t_grid.size(); ++i)
            for (std::size_t j = 0; j < grid.tprime_grid.size(); ++j)
                row(grid.t_grid[i], grid.tprime_grid[j], grid.at(i, j));
    }
}

} // namespace pseudobath
