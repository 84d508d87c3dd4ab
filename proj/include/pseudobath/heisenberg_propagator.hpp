// heisenberg_propagator.hpp: PM propagator U(t) from the Heisenberg equations of motion
//
// U(t) solves ∂_t U = −iΩ U − ∫₀^t K(t−s) U(s) ds with K(τ) = Σ_λ |κ_λ|² e^{−iω_λτ} and U(0) = 1.
// The memory kernel is a finite exponential sum, so the equation is embedded into the local
// linear system ∂_t u = −iG u on u = (U, U_1, …, U_N) with U_λ(t) = κ_λ ∫₀^t e^{−iω_λ(t−s)} U(s) ds.
// Only kernels induced by a DiscretizedBath are supported.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pseudobath/bath_models.hpp"
#include "pseudobath/bcf_engine.hpp"
#include "pseudobath/linalg_core.hpp"

namespace pseudobath {

struct PropagatorTable {
    enum class Method { Embedding, DirectIntegration };

    std::vector<double> t_grid;
    std::vector<cplx> u_values;
    Method method = Method::Embedding;
    std::optional<EigenSystem> embed_eig; // eigensystem of G (embedding only)

    // Uniform spacing of t_grid starting at 0, or 0 if the grid is not of that form.
    double uniform_step() const noexcept;
};

// K(τ) = Σ_λ |κ_λ|² e^{−iω_λτ}. Negative τ evaluates the same sum (K(−τ) = K(τ)*).
std::vector<cplx> memory_kernel(const DiscretizedBath& bath, std::span<const double> tau_grid);

// Hermitian G: diagonal (Ω, ω_λ), first row −iκ_λ*, first column +iκ_λ.
HermitianMatrix build_propagator_matrix(const PseudomodeConfig& pm, const DiscretizedBath& bath);

// U(t) = Σ_μ |T_{0μ}|² e^{−iω̄_μ t} from the eigensystem of G. Requires t ≥ 0.
PropagatorTable propagator_embedding(const PseudomodeConfig& pm, const DiscretizedBath& bath,
                                     std::span<const double> t_grid, EigMethod method = EigMethod::Auto);

// Classical RK4 on the embedded local system with step ≤ dt; t_grid must be ascending and ≥ 0.
// Throws ConfigError unless dt · max(Ω, ω_max) ≤ 0.1.
PropagatorTable propagator_direct(const PseudomodeConfig& pm, const DiscretizedBath& bath,
                                  std::span<const double> t_grid, double dt);

// I_λ(t_k) = ∫₀^{t_k} U(t_k − s) e^{−iω_λ s} ds by the composite trapezoid rule on the uniform
// grid t_k = k·ds, for k = 0 … n_steps. Returned as an (n_steps+1) × N matrix.
Eigen::MatrixXcd propagator_bath_integrals(std::span<const cplx> u_on_grid, double ds,
                                           const DiscretizedBath& bath);

// Factorizing-state BCF from U(t): the U(t)U*(t') PM terms plus the double time integrals over
// bath modes, evaluated through I_λ(t). All times must lie on the grid k·ds covered by prop.
BCFGrid bcf_factorizing_via_U(const PropagatorTable& prop, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                              const ThermalParams& th, std::span<const double> t_grid,
                              std::span<const double> tprime_grid, double ds, const BCFOptions& opt = {});

// Diagonal-state BCF from U(t) and the PM+bath eigensystem: the |S_{0μ}|² propagator terms, the
// double-integral group weighted by S_{λμ}S*_{τμ}, and the two mixed single-integral groups.
BCFGrid bcf_diagonal_via_U(const PropagatorTable& prop, const EigenSystem& eig, const DiscretizedBath& bath,
                           const PseudomodeConfig& pm, const ThermalParams& th, std::span<const double> t_grid,
                           std::span<const double> tprime_grid, double ds, const BCFOptions& opt = {});

} // namespace pseudobath
