#include "krein/trace_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "krein/errors.hpp"
#include "krein/parallel.hpp"
#include "krein/philox.hpp"

namespace krein {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// stream ids of the counter-based generator
constexpr std::uint32_t kGridStream = 0, kTraceStream = 1, kHitStream = 2, kBesselStream = 3, kBootstrapStream = 4;

// P(min of a Brownian bridge from a to b over time h falls below c), c <= min(a, b)
// is exp(-2 (a - c)(b - c) / h). Returns the sampled minimum if it is below c,
// otherwise c.
double bridge_min_below(double a, double b, double h, double c, std::uint32_t word) {
    if (b <= c) {
        const double u = u32_to_open01(word);
        return std::min(c, 0.5 * ((a + b) - std::sqrt((a - b) * (a - b) - 2.0 * h * std::log(u))));
    }
    const double x = 2.0 * (a - c) * (b - c) / h;
    if (x > 60.0) return c;
    const double u = u32_to_open01(word);
    if (u >= std::exp(-x)) return c;
    return 0.5 * ((a + b) - std::sqrt((a - b) * (a - b) - 2.0 * h * std::log(u)));
}

bool bridge_max_above(double a, double b, double h, double c, std::uint32_t word) {
    if (b >= c || a >= c) return true;
    const double x = 2.0 * (c - a) * (c - b) / h;
    if (x > 60.0) return false;
    return u32_to_open01(word) < std::exp(-x);
}

// Everything the path engines need from a string, in flat form.
struct Medium {
    const KreinString& s;
    std::vector<double> features;  // sorted: 0, piece ends, atoms, R
    std::vector<Atom> interior;    // atoms with y > 0
    double atom0 = 0.0;
    double R;
    bool finite;

    explicit Medium(const KreinString& str) : s(str), R(str.length()), finite(str.finite_length()) {
        features.push_back(0.0);
        for (const auto& pc : s.pieces()) {
            features.push_back(pc.l);
            if (std::isfinite(pc.r)) features.push_back(pc.r);
        }
        for (const auto& a : s.atoms()) {
            if (a.y == 0.0) atom0 += a.m;
            else interior.push_back(a);
            features.push_back(a.y);
        }
        if (finite) features.push_back(R);
        std::sort(features.begin(), features.end());
        features.erase(std::unique(features.begin(), features.end()), features.end());
    }

    double distance(double y) const {
        const auto it = std::lower_bound(features.begin(), features.end(), y);
        double d = kInf;
        if (it != features.end()) d = *it - y;
        if (it != features.begin()) d = std::min(d, y - *(it - 1));
        return d;
    }

    // density at the left end of a step; an integrable singularity there falls
    // back to the right end
    double density(double left, double right) const {
        const double a = s.density(left);
        return std::isfinite(a) ? a : s.density(right);
    }

    // Trapezoid in time over one step. The Ito drift a''/2 makes the left-point
    // rule biased at order h; the average cancels that term.
    double step_integral(double left, double right, double h) const {
        const double a = s.density(left), b = s.density(right);
        if (!std::isfinite(a)) return b * h;
        if (!std::isfinite(b)) return a * h;
        return 0.5 * (a + b) * h;
    }
};

double step_length(const SimConfig& cfg, double dist) {
    if (cfg.step_factor <= 0.0) return cfg.dt;
    const double sigma = cfg.step_factor * dist;
    return std::max(cfg.dt, sigma * sigma);
}

struct TraceRun {
    std::vector<double> A;  // per sorted level
    bool killed = false;
    std::size_t steps = 0;
    double occupation0 = 0.0;
    double L = 0.0;
};

TraceRun run_trace_path(const Medium& med, const SimConfig& cfg, const std::vector<double>& levels, std::size_t path,
                        const TraceObserver* observer) {
    const CounterStream rng(cfg.seed, path, kTraceStream);
    const double delta = cfg.window();
    TraceRun out;
    out.A.assign(levels.size(), kNaN);
    std::vector<double> occ(med.interior.size(), 0.0);
    double t = 0.0, W = 0.0, m = 0.0, dens = 0.0;
    std::size_t k = 0;
    std::uint64_t i = 0;
    while (k < levels.size() && t < cfg.horizon) {
        const double Y = W - m;
        const double h = step_length(cfg, med.distance(Y));
        const auto b = rng.block(i++);
        const double Wn = W + std::sqrt(h) * CounterStream::normal(b);
        const double mn = bridge_min_below(W, Wn, h, m, b[2]);
        const double Yn = Wn - mn;

        dens += med.step_integral(Y, Yn, h);
        for (std::size_t a = 0; a < occ.size(); ++a)
            if (std::abs(Y - med.interior[a].y) < delta) occ[a] += h;
        if (Y < delta) out.occupation0 += h;

        if (med.finite && (Yn >= med.R || bridge_max_above(Y, Yn, h, med.R, b[3]))) {
            out.killed = true;
            break;
        }
        W = Wn;
        m = mn;
        t += h;
        const double L = -m;
        double A = dens + 2.0 * med.atom0 * L;
        for (std::size_t a = 0; a < occ.size(); ++a) A += med.interior[a].m * occ[a] / (2.0 * delta);
        while (k < levels.size() && L > levels[k]) out.A[k++] = A;
        if (observer) (*observer)(TraceStep{t, Yn, L, A});
    }
    out.steps = i;
    out.L = -m;
    if (out.killed)
        for (std::size_t j = k; j < levels.size(); ++j) out.A[j] = kInf;
    return out;
}

std::vector<std::size_t> level_order(const std::vector<double>& s_values) {
    std::vector<std::size_t> order(s_values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s_values[a] < s_values[b]; });
    return order;
}

CFEstimate summarize(std::span<const double> xi, double level, std::size_t n_paths,
                     const std::function<double(std::size_t)>& A, std::size_t n_killed) {
    CFEstimate e;
    e.xi.assign(xi.begin(), xi.end());
    e.level = level;
    e.n_killed = n_killed;
    double xi2 = 0.0;
    for (double v : xi) xi2 += v * v;
    // a killed path has A = +inf and contributes 0, also at xi = 0
    auto xi_of = [&](double a) { return std::isinf(a) ? 0.0 : std::exp(-0.5 * xi2 * a); };
    // two passes in path order: mean, then centred sum of squares
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double a = A(p);
        if (std::isnan(a)) continue;
        sum += xi_of(a);
        ++n;
    }
    e.n_effective = n;
    e.n_excluded = n_paths - n;
    if (n == 0) throw SimulationError("no path reached the requested level before the horizon");
    const double mean = sum / double(n);
    double ss = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double a = A(p);
        if (std::isnan(a)) continue;
        const double d = xi_of(a) - mean;
        ss += d * d;
    }
    e.value = mean;
    e.stderr_ = n > 1 ? std::sqrt(ss / double(n - 1)) / std::sqrt(double(n)) : 0.0;
    if (e.excluded_fraction() > 0.01)
        e.warning = "excluded fraction " + std::to_string(e.excluded_fraction()) + " exceeds 1%; raise the horizon";
    return e;
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (dt > 1e-3 * std::min(1.0, horizon)) throw DomainError("dt must not exceed 1e-3 * min(1, horizon)");
    if (n_paths == 0) throw DomainError("n_paths must be positive");
    if (n_paths > std::size_t(0xffffffffu)) throw DomainError("n_paths must fit in 32 bits");
    for (double s : s_values)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("local-time levels must be positive");
    if (atom_window < 0.0 || !std::isfinite(atom_window)) throw DomainError("atom_window must be nonnegative");
    if (step_factor < 0.0 || step_factor > 0.5) throw DomainError("step_factor must lie in [0, 0.5]");
}

double SimConfig::window() const { return atom_window > 0.0 ? atom_window : std::sqrt(dt); }

double CFEstimate::excluded_fraction() const {
    const std::size_t total = n_effective + n_excluded;
    return total ? double(n_excluded) / double(total) : 0.0;
}

RegulatedPath skorokhod_reflect(std::span<const double> W) {
    RegulatedPath p;
    p.Y.reserve(W.size());
    p.L.reserve(W.size());
    double m = 0.0;
    for (double w : W) {
        m = std::min(m, w);
        p.Y.push_back(w - m);
        p.L.push_back(-m);
    }
    return p;
}

RegulatedPath simulate_regulated_bm(const SimConfig& cfg, std::size_t path, std::size_t n_steps) {
    cfg.validate();
    const CounterStream rng(cfg.seed, path, kGridStream);
    const double sd = std::sqrt(cfg.dt);
    RegulatedPath p;
    p.Y.reserve(n_steps + 1);
    p.L.reserve(n_steps + 1);
    p.Y.push_back(0.0);
    p.L.push_back(0.0);
    double W = 0.0, m = 0.0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const auto b = rng.block(i);
        const double Wn = W + sd * CounterStream::normal(b);
        m = bridge_min_below(W, Wn, cfg.dt, m, b[2]);
        W = Wn;
        p.Y.push_back(W - m);
        p.L.push_back(-m);
    }
    return p;
}

std::vector<double> additive_functional(const RegulatedPath& path, const KreinString& s, const SimConfig& cfg) {
    const Medium med(s);
    const double delta = cfg.window();
    std::vector<double> A(path.Y.size(), 0.0);
    std::vector<double> occ(med.interior.size(), 0.0);
    double dens = 0.0;
    for (std::size_t i = 1; i < path.Y.size(); ++i) {
        const double Y = path.Y[i - 1];
        if (med.finite && Y >= med.R) throw DomainError("additive_functional: path left [0, R)");
        dens += med.density(Y, path.Y[i]) * cfg.dt;
        for (std::size_t a = 0; a < occ.size(); ++a)
            if (std::abs(Y - med.interior[a].y) < delta) occ[a] += cfg.dt;
        double v = dens + 2.0 * med.atom0 * path.L[i];
        for (std::size_t a = 0; a < occ.size(); ++a) v += med.interior[a].m * occ[a] / (2.0 * delta);
        A[i] = v;
    }
    return A;
}

TraceBatch simulate_trace_batch(const KreinString& s, const SimConfig& cfg) {
    cfg.validate();
    if (cfg.s_values.empty()) throw DomainError("no local-time levels requested");
    const Medium med(s);
    const auto order = level_order(cfg.s_values);
    std::vector<double> sorted;
    for (auto j : order) sorted.push_back(cfg.s_values[j]);

    TraceBatch batch;
    batch.levels = cfg.s_values;
    batch.n_paths = cfg.n_paths;
    batch.A.assign(cfg.n_paths * sorted.size(), kNaN);
    batch.killed.assign(cfg.n_paths, 0);
    std::vector<std::size_t> steps(cfg.n_paths);
    std::vector<double> ratio(cfg.n_paths, kNaN);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
        const auto run = run_trace_path(med, cfg, sorted, p, nullptr);
        for (std::size_t j = 0; j < order.size(); ++j) batch.A[p * order.size() + order[j]] = run.A[j];
        batch.killed[p] = run.killed;
        steps[p] = run.steps;
        if (run.L > 0.0 && !run.killed) ratio[p] = run.occupation0 / cfg.window() / run.L;
    });
    double rs = 0.0;
    std::size_t rn = 0;
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        batch.total_steps += steps[p];
        if (!std::isnan(ratio[p])) {
            rs += ratio[p];
            ++rn;
        }
    }
    batch.occupation_ratio = rn ? rs / double(rn) : kNaN;
    return batch;
}

void trace_path(const KreinString& s, const SimConfig& cfg, std::size_t path, const TraceObserver& observer) {
    cfg.validate();
    const Medium med(s);
    auto levels = cfg.s_values;
    std::sort(levels.begin(), levels.end());
    run_trace_path(med, cfg, levels, path, &observer);
}

CFEstimate cf_from_batch(const TraceBatch& batch, std::span<const double> xi, double level) {
    const auto it = std::find(batch.levels.begin(), batch.levels.end(), level);
    if (it == batch.levels.end()) throw DomainError("level was not simulated in this batch");
    const std::size_t j = std::size_t(it - batch.levels.begin());
    std::size_t killed = 0;
    for (auto k : batch.killed) killed += k;
    return summarize(xi, level, batch.n_paths, [&](std::size_t p) { return batch.at(p, j); }, killed);
}

CFEstimate cf_trace_estimate(const KreinString& s, std::span<const double> xi, double level, const SimConfig& cfg) {
    if (std::find(cfg.s_values.begin(), cfg.s_values.end(), level) == cfg.s_values.end())
        throw DomainError("level must be one of cfg.s_values");
    return cf_from_batch(simulate_trace_batch(s, cfg), xi, level);
}

HittingBatch simulate_hitting_batch(const KreinString& s, double y0, const SimConfig& cfg) {
    cfg.validate();
    if (!(y0 > 0.0) || y0 >= s.length()) throw DomainError("start height must lie in (0, R)");
    const Medium med(s);
    const double delta = cfg.window();
    HittingBatch batch;
    batch.y0 = y0;
    batch.A.assign(cfg.n_paths, kNaN);
    batch.killed.assign(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
        const CounterStream rng(cfg.seed, p, kHitStream);
        std::vector<double> occ(med.interior.size(), 0.0);
        double t = 0.0, Y = y0, dens = 0.0;
        std::uint64_t i = 0;
        while (t < cfg.horizon) {
            const double h = step_length(cfg, med.distance(Y));
            const auto b = rng.block(i++);
            const double Yn = Y + std::sqrt(h) * CounterStream::normal(b);
            dens += med.step_integral(Y, std::max(Yn, 0.0), h);
            for (std::size_t a = 0; a < occ.size(); ++a)
                if (std::abs(Y - med.interior[a].y) < delta) occ[a] += h;
            if (bridge_min_below(Y, Yn, h, 0.0, b[2]) < 0.0 || Yn <= 0.0) {
                double A = dens;
                for (std::size_t a = 0; a < occ.size(); ++a) A += med.interior[a].m * occ[a] / (2.0 * delta);
                batch.A[p] = A;
                return;
            }
            if (med.finite && (Yn >= med.R || bridge_max_above(Y, Yn, h, med.R, b[3]))) {
                batch.A[p] = kInf;
                batch.killed[p] = 1;
                return;
            }
            Y = Yn;
            t += h;
        }
    });
    return batch;
}

CFEstimate cf_from_hitting(const HittingBatch& batch, std::span<const double> xi) {
    std::size_t killed = 0;
    for (auto k : batch.killed) killed += k;
    return summarize(xi, batch.y0, batch.A.size(), [&](std::size_t p) { return batch.A[p]; }, killed);
}

CFEstimate cf_hitting_estimate(const KreinString& s, std::span<const double> xi, double y0, const SimConfig& cfg) {
    return cf_from_hitting(simulate_hitting_batch(s, y0, cfg), xi);
}

BesselFit bessel_subordinator_exponent(double alpha, const SimConfig& cfg, const BesselOptions& opt) {
    cfg.validate();
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0, 2)");
    if (!(opt.level > 0.0) || !(opt.u_min > 0.0) || !(opt.u_max > opt.u_min) || opt.u_points < 2)
        throw DomainError("invalid Bessel fit options");
    const double delta = std::sqrt(cfg.dt);
    const double eps = delta / 10.0;
    const double scale = std::pow(delta, -(2.0 - alpha));
    const double drift = 0.5 * (1.0 - alpha);
    const double t_cap = std::min(opt.t_cap, cfg.horizon);

    std::vector<double> T(cfg.n_paths, kNaN);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
        const CounterStream rng(cfg.seed, p, kBesselStream);
        double t = 0.0, Y = 0.0, occ = 0.0;
        std::uint64_t i = 0;
        while (t < t_cap) {
            const double h = step_length(cfg, Y);
            const auto b = rng.block(i++);
            if (Y < delta) occ += h;
            Y = std::abs(Y + drift / std::max(Y, eps) * h + std::sqrt(h) * CounterStream::normal(b));
            t += h;
            if (!std::isfinite(Y)) return;  // discarded
            if (occ * scale > opt.level) {
                T[p] = t;
                return;
            }
        }
        T[p] = kInf;
    });

    BesselFit fit;
    fit.alpha = alpha;
    fit.n_paths = cfg.n_paths;
    std::vector<double> kept;
    kept.reserve(T.size());
    for (double v : T) {
        if (std::isnan(v)) ++fit.n_discarded;
        else {
            if (std::isinf(v)) ++fit.n_capped;
            kept.push_back(v);
        }
    }
    if (double(fit.n_discarded) > 0.05 * double(cfg.n_paths))
        throw SimulationError("more than 5% of the Bessel paths produced non-finite values");
    const std::size_t n = kept.size(), nu = std::size_t(opt.u_points);
    for (int j = 0; j < opt.u_points; ++j)
        fit.u.push_back(opt.u_min * std::pow(opt.u_max / opt.u_min, double(j) / (opt.u_points - 1)));
    // e^{-u T} per path and u, reused by the bootstrap
    std::vector<double> E(n * nu);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t j = 0; j < nu; ++j) E[p * nu + j] = std::exp(-fit.u[j] * kept[p]);

    std::vector<double> lx(nu);
    for (std::size_t j = 0; j < nu; ++j) lx[j] = std::log(fit.u[j]);
    auto slope = [&](const std::vector<double>& mean) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t j = 0; j < nu; ++j) {
            const double y = std::log(-std::log(mean[j]));
            sx += lx[j];
            sy += y;
            sxx += lx[j] * lx[j];
            sxy += lx[j] * y;
        }
        const double k = double(nu);
        return (k * sxy - sx * sy) / (k * sxx - sx * sx);
    };
    std::vector<double> mean(nu, 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t j = 0; j < nu; ++j) mean[j] += E[p * nu + j];
    for (auto& v : mean) v /= double(n);
    fit.laplace = mean;
    fit.exponent = slope(mean);

    std::vector<double> boot(std::size_t(std::max(opt.bootstrap, 0)), kNaN);
    parallel_for(boot.size(), cfg.workers, [&](std::size_t r) {
        const CounterStream rng(cfg.seed, r, kBootstrapStream);
        std::vector<double> m(nu, 0.0);
        for (std::size_t q = 0; q < n; ++q) {
            const std::uint32_t w = rng.block(q / 4)[q % 4];
            const std::size_t p = std::size_t((std::uint64_t(w) * n) >> 32);
            for (std::size_t j = 0; j < nu; ++j) m[j] += E[p * nu + j];
        }
        for (auto& v : m) v /= double(n);
        boot[r] = slope(m);
    });
    double bs = 0.0, bss = 0.0;
    std::size_t bn = 0;
    for (double v : boot)
        if (std::isfinite(v)) {
            bs += v;
            bss += v * v;
            ++bn;
        }
    if (bn > 1) {
        const double bm = bs / double(bn);
        fit.half_width = 1.96 * std::sqrt(std::max(0.0, (bss - double(bn) * bm * bm) / double(bn - 1)));
    }
    return fit;
}

}  // namespace krein
