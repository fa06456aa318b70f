#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "krein/string_model.hpp"

namespace krein {

struct SimConfig {
    double dt = 1e-4;
    // Paths still short of the top level at this time are excluded.
    double horizon = 1e6;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 0;
    std::vector<double> s_values{1.0};
    // Half-width of the occupation window for interior atoms; 0 means sqrt(dt).
    double atom_window = 0.0;
    // Step control: the standard deviation of a step is
    // max(sqrt(dt), step_factor * distance to the nearest feature of the
    // string). 0 gives the plain dt grid.
    double step_factor = 0.2;
    unsigned workers = 1;

    void validate() const;
    double window() const;
};

struct CFEstimate {
    std::vector<double> xi;
    double level = 0.0;  // s for the trace, y0 for hitting
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_effective = 0;
    std::size_t n_excluded = 0;
    std::size_t n_killed = 0;
    std::string warning;

    double excluded_fraction() const;
};

// Skorokhod reflection of a sampled path on its grid: m_i = min(0, min_{j<=i} W_j),
// Y_i = W_i - m_i, L_i = -m_i.
struct RegulatedPath {
    std::vector<double> Y;
    std::vector<double> L;
};
RegulatedPath skorokhod_reflect(std::span<const double> W);

// Brownian motion on the plain dt grid from 0, with the regulator taken as the
// running minimum of the continuous path (the minimum of each Brownian bridge
// between grid points is sampled exactly). Deterministic in (seed, path).
RegulatedPath simulate_regulated_bm(const SimConfig& cfg, std::size_t path, std::size_t n_steps);

// A_i = sum_{j<i} a(Y_j) dt + sum of atom masses times their estimated local
// times, on the plain dt grid. An atom at 0 uses the occupation density of
// reflected motion at 0, which is 2 L.
std::vector<double> additive_functional(const RegulatedPath& path, const KreinString& s, const SimConfig& cfg);

// One step of the adaptive trace engine, for observers and tests.
struct TraceStep {
    double t, Y, L, A;
};
using TraceObserver = std::function<void(const TraceStep&)>;

// A_{T_s} for every path and every level of cfg.s_values. NaN marks an
// excluded path (horizon reached first); killed paths (finite R) are flagged
// and contribute exp(-inf) = 0.
struct TraceBatch {
    std::vector<double> levels;
    std::size_t n_paths = 0;
    std::vector<double> A;  // n_paths x levels, row-major
    std::vector<unsigned char> killed;
    std::size_t total_steps = 0;
    // Mean over paths of (time spent in [0, window) / window) / L at the end;
    // the occupation normalisation of local time gives 2.
    double occupation_ratio = 0.0;

    double at(std::size_t path, std::size_t level) const { return A[path * levels.size() + level]; }
};

TraceBatch simulate_trace_batch(const KreinString& s, const SimConfig& cfg);
// Runs a single path of the batch, reporting every step to `observer`.
void trace_path(const KreinString& s, const SimConfig& cfg, std::size_t path, const TraceObserver& observer);

// Mean of exp(-|xi|^2 A_{T_s} / 2) over the included paths.
CFEstimate cf_from_batch(const TraceBatch& batch, std::span<const double> xi, double level);
CFEstimate cf_trace_estimate(const KreinString& s, std::span<const double> xi, double level, const SimConfig& cfg);

// W started at y0 and stopped at its first passage below 0; mean of
// exp(-|xi|^2 A_{tau_0} / 2). Compare with bounded_solution(s, |xi|^2, y0).
struct HittingBatch {
    double y0 = 0.0;
    std::vector<double> A;  // NaN: no passage before the horizon
    std::vector<unsigned char> killed;
};
HittingBatch simulate_hitting_batch(const KreinString& s, double y0, const SimConfig& cfg);
CFEstimate cf_from_hitting(const HittingBatch& batch, std::span<const double> xi);
CFEstimate cf_hitting_estimate(const KreinString& s, std::span<const double> xi, double y0, const SimConfig& cfg);

struct BesselOptions {
    // Local-time level s. The normalising constant of L grows with alpha; 0.2
    // keeps E exp(-u T_s) inside (0.03, 0.97) on the u range for alpha in
    // [0.5, 1.5].
    double level = 0.2;
    double u_min = 0.5, u_max = 8.0;
    int u_points = 16;
    int bootstrap = 200;
    // T_s beyond this is recorded as +inf: exp(-u_min * t_cap) is about 2e-9.
    double t_cap = 40.0;
};

struct BesselFit {
    double alpha = 0.0;
    double exponent = 0.0;
    double half_width = 0.0;  // 95% bootstrap
    std::vector<double> u;
    std::vector<double> laplace;  // mean exp(-u T_s)
    std::size_t n_paths = 0;
    std::size_t n_discarded = 0;
    std::size_t n_capped = 0;
};

// Euler scheme for dY = dW + (1 - alpha)/(2Y) dt reflected at 0, local time
// from the occupation of [0, sqrt(dt)) scaled by dt^{-(2-alpha)/2}, and the
// slope of log(-log E exp(-u T_s)) against log u.
BesselFit bessel_subordinator_exponent(double alpha, const SimConfig& cfg, const BesselOptions& opt = {});

}  // namespace krein
