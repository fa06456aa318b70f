#pragma once

#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "krein/grid_function.hpp"
#include "krein/krein_solver.hpp"
#include "krein/string_model.hpp"

namespace krein {

// u(·, y): multiplies each mode by φ(|ξ|², y).
GridFunction harmonic_extend(const GridFunction& f, const KreinString& s, double y, unsigned workers = 1);
// Kf: multiplies each mode by μ(|ξ|²).
GridFunction dtn_apply(const GridFunction& f, const KreinString& s, unsigned workers = 1);

// (-Δ)^{α/2} by the Fourier multiplier |ξ|^α.
GridFunction fraclap_multiplier(const GridFunction& f, double alpha);
// (-Δ)^{α/2} by the singular integral
//   (c/2) ∫ [2f(x) − f(x+z) − f(x−z)] |z|^{−d−α} dz
// on the periodised box, with a zeta-function correction for the cell at z = 0.
GridFunction fraclap_pv(const GridFunction& f, double alpha);

// c = −2^α π^{−d/2} Γ((d+α)/2) / Γ(−α/2), the kernel constant of (-Δ)^{α/2}.
double fraclap_constant(int d, double alpha);
// π^{−d/2} Γ((d+α)/2) / Γ(α/2), the Poisson kernel constant.
double poisson_constant(int d, double alpha);
// K = κ(α)·(-Δ)^{α/2} for the y^α-normalised extension operator, where
// κ(α) = −Γ(−α/2) / (2^α Γ(α/2)) = Γ(1−α/2) / (2^α Γ(1+α/2)); κ(1) = 1.
double pseudo_dtn_constant(double alpha);

double poisson_kernel(int d, double alpha, double y, std::span<const double> x);
// ∫ P_y over [−B, B]^d (B = inf for the whole space), via x = y sinh t.
double poisson_integral(int d, double alpha, double y, double B = std::numeric_limits<double>::infinity());
// Kernel periodised over the box [−L, L) (d = 1).
double poisson_kernel_periodic(double alpha, double y, double L, double x);
// h Σ_j P^per(x_j) e^{−i ξ_k x_j} for k = 0..modes-1 (d = 1).
std::vector<std::complex<double>> poisson_fourier(double alpha, double y, double L, int N, int modes);

struct EnergyReport {
    double form_value = 0.0;
    double extension_energy = 0.0;
    double rel_gap = 0.0;
};

// form_value = ∫ f Kf, extension_energy = ∫∫ (a |∇_x u|² + |∂_y u|²) for
// u the extension, discretised piecewise-linearly on y_grid.
EnergyReport energy_check(const GridFunction& f, const KreinString& s, const std::vector<double>& y_grid,
                          unsigned workers = 1);

}  // namespace krein
