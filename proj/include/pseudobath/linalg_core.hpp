// linalg_core.hpp: coupling-matrix builders and Hermitian eigendecomposition

#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "pseudobath/bath_models.hpp"

namespace pseudobath {

using Eigen::Index;

// Dense Hermitian matrix. Index 0 is the pseudomode (or the system, when present).
class HermitianMatrix {
public:
    // Throws ConfigError if m is not square or not Hermitian to 1e-14 of its largest entry.
    explicit HermitianMatrix(Eigen::MatrixXcd m);

    Index dim() const noexcept { return m_.rows(); }
    const Eigen::MatrixXcd& data() const noexcept { return m_; }
    cplx operator()(Index j, Index k) const { return m_(j, k); }

    double max_abs() const noexcept;
    bool is_real() const noexcept;

    // Index h such that all nonzero off-diagonal entries lie in row/column h, or -1.
    Index arrowhead_head() const noexcept;

    // FNV-1a hash of the entries; used to key cached decompositions.
    std::uint64_t content_hash() const noexcept;

private:
    Eigen::MatrixXcd m_;
};

// Eigenpairs of a Hermitian matrix, M = S diag(ω̃) S†.
//
// Frequencies ascend; column μ of S is the eigenvector of ω̃_μ, so that a_j = Σ_μ S_{jμ} c_μ.
// Each column is normalised with its largest-modulus component real and positive (first such
// index on ties), which makes S reproducible for identical input.
struct EigenSystem {
    Eigen::VectorXd frequencies;
    Eigen::MatrixXcd transform;

    Index dim() const noexcept { return frequencies.size(); }

    // max |S†S − I|
    double unitarity_error() const;
    // max |M − S diag(ω̃) S†|
    double reconstruction_error(const HermitianMatrix& m) const;
    // |S_{row,μ}|² for all μ
    Eigen::VectorXd row_weights(Index row) const;
};

// Auto picks the arrowhead solver whenever the matrix has arrowhead structure.
enum class EigMethod { Auto, Dense, Arrowhead };

// (N+1)×(N+1) matrix of the PM + bath environment: Ω on (0,0), κ_λ* on (0,λ), ω_λ on (λ,λ).
HermitianMatrix build_pm_bath_matrix(const PseudomodeConfig& pm, const DiscretizedBath& bath);

// (N+2)×(N+2) matrix of system + PM + bath: index 0 system (Ω_sys), index 1 PM, (0,1) = g*.
HermitianMatrix build_full_matrix(double omega_sys, const PseudomodeConfig& pm, const DiscretizedBath& bath);

// Dense solve (Householder tridiagonalisation + implicit QR; real arithmetic for real input).
// Throws NumericError on non-convergence.
EigenSystem eig_dense(const HermitianMatrix& m);

// O(N²) solver for arrowhead matrices: secular-equation roots by bisection and eigenvectors
// from Löwner-corrected couplings. Throws ConfigError if m is not an arrowhead.
EigenSystem eig_arrowhead(const HermitianMatrix& m);

// Auto takes the arrowhead path whenever the matrix has that structure.
EigenSystem eig_hermitian(const HermitianMatrix& m, EigMethod method = EigMethod::Auto);

// Applies the phase convention described on EigenSystem, in place.
void canonicalize_phases(Eigen::MatrixXcd& s);

// Binary cache of an EigenSystem, little-endian:
//   char[8]  magic "PBEIGSYS"
//   uint32   format version (1)
//   uint32   reserved (0)
//   uint64   dim
//   uint64   content hash of the source matrix (0 if unknown)
//   f64[dim]            frequencies
//   f64[2*dim*dim]      transform, column-major, (re, im) interleaved
//   uint64   FNV-1a hash of everything above
void save_eigensystem(const EigenSystem& eig, const std::filesystem::path& path,
                      std::uint64_t source_hash = 0);

// Throws NumericError on a malformed or corrupted file, or if expected_hash is nonzero and
// does not match the stored source hash.
EigenSystem load_eigensystem(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

} // namespace pseudobath
