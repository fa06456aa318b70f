#include "krein/lattice_walk.hpp"

#include <array>
#include <cmath>
#include <functional>

#include "krein/errors.hpp"
#include "krein/parallel.hpp"
#include "krein/philox.hpp"

namespace krein {

namespace {

constexpr std::uint32_t kWalkStream = 5;

void check_xi(int d, std::span<const double> xi) {
    if (d < 1) throw DomainError("dimension must be >= 1");
    if (xi.size() != std::size_t(d)) throw DomainError("frequency vector must have d components");
    for (double v : xi)
        if (!std::isfinite(v)) throw DomainError("frequency must be finite");
}

double psi(int d, std::span<const double> xi) {
    double s = 0.0;
    for (double v : xi) s += std::cos(v);
    return s / d;
}

}  // namespace

void WalkConfig::validate() const {
    if (d < 1) throw DomainError("walk dimension must be >= 1");
    if (n_steps == 0 || n_paths == 0) throw DomainError("walk step and path counts must be positive");
    if (n_paths > std::size_t(0xffffffffu)) throw DomainError("n_paths must fit in 32 bits");
}

std::complex<double> step_cf_oracle(int d, std::span<const double> xi) {
    check_xi(d, xi);
    return 1.0 / (d + 1.0 - d * psi(d, xi));
}

std::complex<double> step_cf_enumerated(int d, std::span<const double> xi, int depth) {
    check_xi(d, xi);
    if (depth < 0) throw DomainError("depth must be nonnegative");
    const double stop = 1.0 / (d + 1.0);        // next step is vertical
    const double move = 1.0 / (2.0 * (d + 1));  // one particular horizontal move
    std::vector<long> x(std::size_t(d), 0);
    std::complex<double> total = 0.0;
    std::function<void(int, double)> walk = [&](int n, double p) {
        double phase = 0.0;
        for (int k = 0; k < d; ++k) phase += xi[k] * double(x[k]);
        total += p * stop * std::polar(1.0, -phase);
        if (n == depth) return;
        for (int k = 0; k < d; ++k)
            for (int sgn : {1, -1}) {
                x[k] += sgn;
                walk(n + 1, p * move);
                x[k] -= sgn;
            }
    };
    walk(0, 1.0);
    return total;
}

std::complex<double> trace_cf_closed_form(int d, std::span<const double> xi, int j) {
    check_xi(d, xi);
    if (j < 0) throw DomainError("start height must be nonnegative");
    if (j == 0) return 1.0;
    const std::complex<double> phi = step_cf_oracle(d, xi);
    if (std::abs(phi) == 0.0) return 0.0;
    const std::complex<double> root = std::sqrt(1.0 - phi * phi);
    std::complex<double> r = (1.0 - root) / phi;
    if (std::abs(r) > 1.0) r = (1.0 + root) / phi;
    return std::pow(r, j);
}

WalkBatch simulate_walk_batch(const WalkConfig& cfg, int j) {
    cfg.validate();
    if (j < 0) throw DomainError("start height must be nonnegative");
    const int d = cfg.d;
    WalkBatch batch;
    batch.d = d;
    batch.j = j;
    batch.X.assign(cfg.n_paths * std::size_t(d), 0);
    batch.returned.assign(cfg.n_paths, 0);
    const std::uint64_t moves = 2 * std::uint64_t(d + 1);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
        std::int64_t* x = &batch.X[p * std::size_t(d)];
        if (j == 0) {
            batch.returned[p] = 1;
            return;
        }
        const CounterStream rng(cfg.seed, p, kWalkStream);
        long y = j;
        std::array<std::uint32_t, 4> b{};
        for (std::size_t n = 0; n < cfg.n_steps; ++n) {
            if (n % 4 == 0) b = rng.block(n / 4);
            const std::uint64_t r = (std::uint64_t(b[n % 4]) * moves) >> 32;
            if (y == 0) {  // forced up; unreachable before the first return
                ++y;
                continue;
            }
            if (r < std::uint64_t(2 * d)) x[r / 2] += (r % 2) ? -1 : 1;
            else y += r == std::uint64_t(2 * d) ? 1 : -1;
            if (y == 0) {
                batch.returned[p] = 1;
                return;
            }
        }
    });
    return batch;
}

WalkCF walk_cf_from_batch(const WalkBatch& batch, std::span<const double> xi) {
    check_xi(batch.d, xi);
    const std::size_t N = batch.n_paths();
    auto phase = [&](std::size_t p) {
        double s = 0.0;
        for (int k = 0; k < batch.d; ++k) s += xi[k] * double(batch.X[p * std::size_t(batch.d) + k]);
        return s;
    };
    double sc = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < N; ++p) {
        if (!batch.returned[p]) continue;
        const double t = phase(p);
        sc += std::cos(t);
        ss -= std::sin(t);
        ++n;
    }
    WalkCF out;
    out.real.xi.assign(xi.begin(), xi.end());
    out.real.level = batch.j;
    out.real.n_effective = n;
    out.real.n_excluded = N - n;
    if (n == 0) throw SimulationError("no walk returned to height 0 within n_steps");
    const double mc = sc / double(n), ms = ss / double(n);
    double vc = 0.0, vs = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        if (!batch.returned[p]) continue;
        const double t = phase(p);
        vc += (std::cos(t) - mc) * (std::cos(t) - mc);
        vs += (-std::sin(t) - ms) * (-std::sin(t) - ms);
    }
    const double denom = n > 1 ? double(n - 1) * double(n) : 1.0;
    out.real.value = mc;
    out.real.stderr_ = n > 1 ? std::sqrt(vc / denom) : 0.0;
    out.imag = ms;
    out.imag_stderr = n > 1 ? std::sqrt(vs / denom) : 0.0;
    if (out.real.excluded_fraction() > 0.01)
        out.real.warning = "excluded fraction " + std::to_string(out.real.excluded_fraction()) +
                           " exceeds 1%; raise n_steps";
    return out;
}

WalkCF simulate_trace(const WalkConfig& cfg, std::span<const double> xi, int j) {
    return walk_cf_from_batch(simulate_walk_batch(cfg, j), xi);
}

}  // namespace krein
