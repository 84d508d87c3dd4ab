// linalg_core.cpp

#include "pseudobath/linalg_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pseudobath/errors.hpp"

namespace pseudobath {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool is_real_matrix(const Eigen::MatrixXcd& m)
{
    return (m.imag().array() == 0.0).all();
}

} // namespace

// ---------------------------------------------------------------------------------------------
// HermitianMatrix

HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd m) : m_(std::move(m))
{
    if (m_.rows() != m_.cols()) throw ConfigError("HermitianMatrix: matrix must be square");
    if (m_.size() == 0) throw ConfigError("HermitianMatrix: matrix must be non-empty");
    const double scale = std::max(max_abs(), 1.0);
    const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-14 * scale)) throw ConfigError("HermitianMatrix: matrix is not Hermitian");
}

double HermitianMatrix::max_abs() const noexcept
{
    return m_.cwiseAbs().maxCoeff();
}

bool HermitianMatrix::is_real() const noexcept
{
    return is_real_matrix(m_);
}

Index HermitianMatrix::arrowhead_head() const noexcept
{
    const Index n = dim();
    if (n <= 2) return 0;
    // The head is the row with the most nonzero off-diagonal entries.
    Index head = 0;
    Index best = -1;
    for (Index j = 0; j < n; ++j) {
        Index cnt = 0;
        for (Index k = 0; k < n; ++k)
            if (k != j && m_(j, k) != cplx{}) ++cnt;
        if (cnt > best) {
            best = cnt;
            head = j;
        }
    }
    for (Index k = 0; k < n; ++k) {
        if (k == head) continue;
        for (Index j = 0; j < n; ++j) {
            if (j == head || j == k) continue;
            if (m_(j, k) != cplx{}) return -1;
        }
    }
    return head;
}

std::uint64_t HermitianMatrix::content_hash() const noexcept
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<double>(dim()));
    for (Index k = 0; k < m_.cols(); ++k)
        for (Index j = 0; j < m_.rows(); ++j) {
            mix(m_(j, k).real());
            mix(m_(j, k).imag());
        }
    return h;
}

// ---------------------------------------------------------------------------------------------
// EigenSystem

double EigenSystem::unitarity_error() const
{
    const Index n = transform.cols();
    if (is_real_matrix(transform)) {
        const Eigen::MatrixXd s = transform.real();
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        g.selfadjointView<Eigen::Lower>().rankUpdate(s.transpose());
        g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
        g -= Eigen::MatrixXd::Identity(n, n);
        return g.cwiseAbs().maxCoeff();
    }
    Eigen::MatrixXcd g = transform.adjoint() * transform;
    g -= Eigen::MatrixXcd::Identity(n, n);
    return g.cwiseAbs().maxCoeff();
}

double EigenSystem::reconstruction_error(const HermitianMatrix& m) const
{
    if (m.dim() != dim()) throw ConfigError("reconstruction_error: dimension mismatch");
    if (is_real_matrix(transform) && m.is_real()) {
        const Eigen::MatrixXd s = transform.real();
        Eigen::MatrixXd r = m.data().real();
        r.noalias() -= s * frequencies.asDiagonal() * s.transpose();
        return r.cwiseAbs().maxCoeff();
    }
    Eigen::MatrixXcd r = m.data();
    r.noalias() -= transform * frequencies.cast<cplx>().asDiagonal() * transform.adjoint();
    return r.cwiseAbs().maxCoeff();
}

Eigen::VectorXd EigenSystem::row_weights(Index row) const
{
    return transform.row(row).cwiseAbs2().transpose();
}

// ---------------------------------------------------------------------------------------------
// Builders

HermitianMatrix build_pm_bath_matrix(const PseudomodeConfig& pm, const DiscretizedBath& bath)
{
    if (bath.empty()) throw ConfigError("build_pm_bath_matrix: bath must be non-empty");
    const Index n = static_cast<Index>(bath.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    m(0, 0) = pm.omega_pm;
    for (Index l = 0; l < n; ++l) {
        const cplx k = bath.couplings()[l];
        m(0, l + 1) = std::conj(k);
        m(l + 1, 0) = k;
        m(l + 1, l + 1) = bath.frequencies()[l];
    }
    return HermitianMatrix(std::move(m));
}

HermitianMatrix build_full_matrix(double omega_sys, const PseudomodeConfig& pm, const DiscretizedBath& bath)
{
    if (bath.empty()) throw ConfigError("build_full_matrix: bath must be non-empty");
    if (!std::isfinite(omega_sys)) throw ConfigError("build_full_matrix: omega_sys must be finite");
    const Index n = static_cast<Index>(bath.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n + 2, n + 2);
    m(0, 0) = omega_sys;
    m(0, 1) = std::conj(pm.g);
    m(1, 0) = pm.g;
    m(1, 1) = pm.omega_pm;
    for (Index l = 0; l < n; ++l) {
        const cplx k = bath.couplings()[l];
        m(1, l + 2) = std::conj(k);
        m(l + 2, 1) = k;
        m(l + 2, l + 2) = bath.frequencies()[l];
    }
    return HermitianMatrix(std::move(m));
}

// ---------------------------------------------------------------------------------------------
// Phase convention

void canonicalize_phases(Eigen::MatrixXcd& s)
{
    for (Index c = 0; c < s.cols(); ++c) {
        auto col = s.col(c);
        const double norm = col.norm();
        if (norm == 0.0) continue;
        col /= norm;
        const double big = col.cwiseAbs().maxCoeff();
        Index pivot = 0;
        for (Index r = 0; r < col.size(); ++r) {
            if (std::abs(col(r)) >= big * (1.0 - 1e-10)) {
                pivot = r;
                break;
            }
        }
        const cplx ph = std::conj(col(pivot)) / std::abs(col(pivot));
        col *= ph;
        col(pivot) = std::abs(col(pivot));
    }
}

// ---------------------------------------------------------------------------------------------
// Dense solver

namespace {

template <typename Matrix>
void dense_solve(const Matrix& a, EigenSystem& out)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw NumericError("eig_hermitian: QR iteration did not converge for dim " + std::to_string(a.rows()) +
                           " within " + std::to_string(Eigen::SelfAdjointEigenSolver<Matrix>::m_maxIterations) +
                           " sweeps per eigenvalue");
    out.frequencies = es.eigenvalues();
    out.transform = es.eigenvectors().template cast<cplx>();
}

} // namespace

EigenSystem eig_dense(const HermitianMatrix& m)
{
    EigenSystem out;
    if (m.is_real())
        dense_solve(Eigen::MatrixXd(m.data().real()), out);
    else
        dense_solve(m.data(), out);
    canonicalize_phases(out.transform);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Arrowhead solver

namespace {

// A pole of the real arrowhead problem: diagonal value d coupled to the head with z ≥ 0.
// basis holds the (original index, coefficient) expansion of its unit vector; merged
// near-degenerate poles carry more than one entry.
struct Pole {
    double d;
    double z;
    std::vector<std::pair<Index, double>> basis;
};

struct Pair {
    double value;
    Eigen::VectorXd vec; // real, in original index order
};

// Root of f(σ + μ) = head − σ − μ − Σ z_i² / (δ_i − μ), δ_i = d_i − σ, on the open bracket
// (lo, hi). f is strictly decreasing in μ on the bracket.
double secular_root(double head, double sigma, const std::vector<double>& delta, const std::vector<double>& z2,
                    double lo, double hi)
{
    auto eval = [&](double mu, double& fprime) {
        double f = head - sigma - mu;
        fprime = -1.0;
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double inv = 1.0 / (delta[i] - mu);
            f -= z2[i] * inv;
            fprime -= z2[i] * inv * inv;
        }
        return f;
    };

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        double fp = 0.0;
        const double f = eval(x, fp);
        if (f == 0.0) return x;
        if (f > 0.0) lo = x; else hi = x;
        double next = x - f / fp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= 2.0 * kEps * std::abs(x) || hi - lo <= 2.0 * kEps * std::max(std::abs(lo), std::abs(hi)))
            break;
        if (x == lo || x == hi) break;
    }
    return x;
}

} // namespace

EigenSystem eig_arrowhead(const HermitianMatrix& m)
{
    const Index n = m.dim();
    const Index h = m.arrowhead_head();
    if (h < 0) throw ConfigError("eig_arrowhead: matrix is not an arrowhead");

    EigenSystem out;
    if (n == 1) {
        out.frequencies = Eigen::VectorXd::Constant(1, m(0, 0).real());
        out.transform = Eigen::MatrixXcd::Identity(1, 1);
        return out;
    }

    // Diagonal unitary Φ removes the coupling phases: M = Φ A Φ† with A real, A_{h,i} = |M_{h,i}|.
    std::vector<cplx> phase(static_cast<std::size_t>(n), cplx{1.0, 0.0});
    const double head = m(h, h).real();
    std::vector<Pole> poles;
    poles.reserve(static_cast<std::size_t>(n - 1));
    double zsum = 0.0;
    double dmax = std::abs(head);
    for (Index i = 0; i < n; ++i) {
        if (i == h) continue;
        const cplx c = m(h, i);
        const double z = std::abs(c);
        if (z > 0.0) phase[static_cast<std::size_t>(i)] = std::conj(c) / z;
        poles.push_back(Pole{m(i, i).real(), z, {{i, 1.0}}});
        zsum += z;
        dmax = std::max(dmax, std::abs(m(i, i).real()));
    }
    std::sort(poles.begin(), poles.end(), [](const Pole& a, const Pole& b) { return a.d < b.d; });

    const double tol = 8.0 * kEps * std::max({dmax, zsum, 1e-300});
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));

    auto deflate = [&](const Pole& p) {
        Pair pr{p.d, Eigen::VectorXd::Zero(n)};
        for (auto [idx, c] : p.basis) pr.vec(idx) = c;
        pairs.push_back(std::move(pr));
    };

    // Deflation: decoupled poles and (near-)coincident poles.
    std::vector<Pole> active;
    active.reserve(poles.size());
    for (auto& p : poles) {
        if (p.z <= tol) {
            deflate(p);
            continue;
        }
        if (!active.empty()) {
            Pole& q = active.back();
            const double r = std::hypot(q.z, p.z);
            const double cq = q.z / r;
            const double cp = p.z / r;
            if ((p.d - q.d) * cq * cp <= tol) {
                // w_free = cp·e_q − cq·e_p is decoupled from the head; w_coupled carries coupling r.
                Pole freed{q.d, 0.0, {}};
                Pole merged{cq * cq * q.d + cp * cp * p.d, r, {}};
                for (auto [idx, c] : q.basis) {
                    freed.basis.emplace_back(idx, cp * c);
                    merged.basis.emplace_back(idx, cq * c);
                }
                for (auto [idx, c] : p.basis) {
                    freed.basis.emplace_back(idx, -cq * c);
                    merged.basis.emplace_back(idx, cp * c);
                }
                deflate(freed);
                q = std::move(merged);
                continue;
            }
        }
        active.push_back(std::move(p));
    }

    const std::size_t k = active.size();
    if (k == 0) {
        Pair pr{head, Eigen::VectorXd::Zero(n)};
        pr.vec(h) = 1.0;
        pairs.push_back(std::move(pr));
    } else {
        std::vector<double> d(k), z2(k);
        for (std::size_t i = 0; i < k; ++i) {
            d[i] = active[i].d;
            z2[i] = active[i].z * active[i].z;
        }
        const double lower = std::min(head - zsum, d.front()) - 1.0;
        const double upper = std::max(head + zsum, d.back()) + 1.0;

        // Root j lies in (d_{j-1}, d_j) with d_{-1} = lower, d_k = upper; stored as σ_j + μ_j.
        std::vector<double> sigma(k + 1), mu(k + 1);
        std::vector<double> delta(k);
        for (std::size_t j = 0; j <= k; ++j) {
            std::size_t origin;
            double lo, hi;
            if (j == 0) {
                origin = 0;
                lo = lower - d[0];
                hi = 0.0;
            } else if (j == k) {
                origin = k - 1;
                lo = 0.0;
                hi = upper - d[k - 1];
            } else {
                // Shift to the nearer pole, decided by the sign of f at the interval midpoint.
                const double left = d[j - 1];
                const double gap = d[j] - left;
                double f = head - left - 0.5 * gap;
                for (std::size_t i = 0; i < k; ++i) f -= z2[i] / ((d[i] - left) - 0.5 * gap);
                if (f > 0.0) {
                    origin = j;
                    lo = -0.5 * gap;
                    hi = 0.0;
                } else {
                    origin = j - 1;
                    lo = 0.0;
                    hi = 0.5 * gap;
                }
            }
            const double s = d[origin];
            for (std::size_t i = 0; i < k; ++i) delta[i] = d[i] - s;
            sigma[j] = s;
            mu[j] = secular_root(head, s, delta, z2, lo, hi);
        }

        // Löwner correction: couplings of the arrowhead that has exactly these eigenvalues.
        std::vector<double> zhat(k);
        for (std::size_t i = 0; i < k; ++i) {
            double logsum = 0.0;
            for (std::size_t j = 0; j <= k; ++j) logsum += std::log(std::abs((sigma[j] - d[i]) + mu[j]));
            for (std::size_t j = 0; j < k; ++j)
                if (j != i) logsum -= std::log(std::abs(d[j] - d[i]));
            zhat[i] = std::exp(0.5 * logsum);
        }

        for (std::size_t j = 0; j <= k; ++j) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            x(h) = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double c = zhat[i] / ((sigma[j] - d[i]) + mu[j]);
                for (auto [idx, b] : active[i].basis) x(idx) += c * b;
            }
            x /= x.norm();
            pairs.push_back(Pair{sigma[j] + mu[j], std::move(x)});
        }
    }

    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.value < b.value; });
    out.frequencies.resize(n);
    out.transform.resize(n, n);
    for (Index c = 0; c < n; ++c) {
        const auto& pr = pairs[static_cast<std::size_t>(c)];
        out.frequencies(c) = pr.value;
        for (Index r = 0; r < n; ++r) out.transform(r, c) = phase[static_cast<std::size_t>(r)] * pr.vec(r);
    }
    canonicalize_phases(out.transform);
    return out;
}

EigenSystem eig_hermitian(const HermitianMatrix& m, EigMethod method)
{
    switch (method) {
    case EigMethod::Dense: return eig_dense(m);
    case EigMethod::Arrowhead: return eig_arrowhead(m);
    case EigMethod::Auto: break;
    }
    return m.arrowhead_head() >= 0 ? eig_arrowhead(m) : eig_dense(m);
}

// ---------------------------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char kMagic[8] = {'P', 'B', 'E', 'I', 'G', 'S', 'Y', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

class Fnv1a {
public:
    void add(const unsigned char* p, std::size_t n)
    {
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 1099511628211ULL;
        }
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 1469598103934665603ULL;
};

class LeWriter {
public:
    explicit LeWriter(std::ofstream& os) : os_(os) {}
    void bytes(const void* p, std::size_t n)
    {
        os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        hash_.add(static_cast<const unsigned char*>(p), n);
    }
    void u64(std::uint64_t v)
    {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void u32(std::uint32_t v)
    {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::uint64_t hash() const { return hash_.value(); }

private:
    std::ofstream& os_;
    Fnv1a hash_;
};

class LeReader {
public:
    explicit LeReader(std::ifstream& is) : is_(is) {}
    void bytes(void* p, std::size_t n)
    {
        is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!is_) throw NumericError("load_eigensystem: truncated file");
        hash_.add(static_cast<const unsigned char*>(p), n);
    }
    std::uint64_t u64()
    {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint32_t u32()
    {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint64_t hash() const { return hash_.value(); }

private:
    std::ifstream& is_;
    Fnv1a hash_;
};

} // namespace

void save_eigensystem(const EigenSystem& eig, const std::filesystem::path& path, std::uint64_t source_hash)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("save_eigensystem: cannot open " + path.string());
    LeWriter w(os);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);
    w.u32(0);
    const auto n = static_cast<std::uint64_t>(eig.dim());
    w.u64(n);
    w.u64(source_hash);
    for (Index i = 0; i < eig.dim(); ++i) w.f64(eig.frequencies(i));
    for (Index c = 0; c < eig.transform.cols(); ++c)
        for (Index r = 0; r < eig.transform.rows(); ++r) {
            w.f64(eig.transform(r, c).real());
            w.f64(eig.transform(r, c).imag());
        }
    const std::uint64_t digest = w.hash();
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(digest >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
    if (!os) throw ConfigError("save_eigensystem: write failed for " + path.string());
}

EigenSystem load_eigensystem(const std::filesystem::path& path, std::uint64_t expected_hash)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NumericError("load_eigensystem: cannot open " + path.string());
    LeReader r(is);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
        throw NumericError("load_eigensystem: bad magic in " + path.string());
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw NumericError("load_eigensystem: unsupported format version " + std::to_string(version));
    r.u32();
    const std::uint64_t n = r.u64();
    const std::uint64_t stored_hash = r.u64();
    if (n == 0 || n > (1ULL << 20)) throw NumericError("load_eigensystem: implausible dimension");
    if (expected_hash != 0 && stored_hash != expected_hash)
        throw NumericError("load_eigensystem: cache does not match the requested matrix");

    EigenSystem eig;
    const auto dim = static_cast<Index>(n);
    eig.frequencies.resize(dim);
    eig.transform.resize(dim, dim);
    for (Index i = 0; i < dim; ++i) eig.frequencies(i) = r.f64();
    for (Index c = 0; c < dim; ++c)
        for (Index row = 0; row < dim; ++row) {
            const double re = r.f64();
            const double im = r.f64();
            eig.transform(row, c) = cplx{re, im};
        }
    const std::uint64_t digest = r.hash();
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw NumericError("load_eigensystem: missing checksum");
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    if (stored != digest) throw NumericError("load_eigensystem: checksum mismatch in " + path.string());
    return eig;
}

} // namespace pseudobath
