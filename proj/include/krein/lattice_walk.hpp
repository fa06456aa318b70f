#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "krein/trace_sim.hpp"

namespace krein {

// Simple random walk on Z^d x {0, 1, ...}: each step picks one of the 2(d+1)
// neighbours uniformly, except that at height 0 the walk is forced up (the
// reflection rule under which the closed form below holds).
struct WalkConfig {
    int d = 1;
    std::size_t n_steps = 1000000;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 0;
    unsigned workers = 1;

    void validate() const;
};

// E exp(-i xi . X(S_1)) for the horizontal displacement accumulated before
// the first vertical step: a geometric number of steps with parameter 1/(d+1),
// summed in closed form to 1 / (d + 1 - d psi(xi)), psi = (1/d) sum cos xi_j.
std::complex<double> step_cf_oracle(int d, std::span<const double> xi);

// The same quantity by enumerating every horizontal move sequence of length
// <= depth. The omitted mass is (d/(d+1))^{depth+1}.
std::complex<double> step_cf_enumerated(int d, std::span<const double> xi, int depth);

// Bounded solution of f_j = phi (f_{j+1} + f_{j-1}) / 2 with f_0 = 1:
// f_j = r^j with r the root of r = phi (r^2 + 1) / 2 of modulus <= 1.
std::complex<double> trace_cf_closed_form(int d, std::span<const double> xi, int j);

// Horizontal positions at the first return to height 0 from height j.
struct WalkBatch {
    int d = 1;
    int j = 0;
    std::vector<std::int64_t> X;  // n_paths x d
    std::vector<unsigned char> returned;
    std::size_t n_paths() const { return returned.size(); }
};
WalkBatch simulate_walk_batch(const WalkConfig& cfg, int j);

struct WalkCF {
    CFEstimate real;  // value = mean cos(xi . X)
    double imag = 0.0;
    double imag_stderr = 0.0;
};
WalkCF walk_cf_from_batch(const WalkBatch& batch, std::span<const double> xi);
WalkCF simulate_trace(const WalkConfig& cfg, std::span<const double> xi, int j);

}  // namespace krein
