#pragma once

namespace krein {

// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (k+q)^{-s}, continued analytically to all
// real s != 1, for q > 0.
double hurwitz_zeta(double s, double q);
double riemann_zeta(double s);
// Dirichlet beta β(s) = Σ_{k≥0} (-1)^k (2k+1)^{-s}.
double dirichlet_beta(double s);

}  // namespace krein
