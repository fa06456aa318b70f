// Acceptance run: one PASS/FAIL line per criterion, exit status = number of failures.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "krein/krein_solver.hpp"
#include "krein/lattice_walk.hpp"
#include "krein/spectral_dtn.hpp"
#include "krein/string_model.hpp"
#include "krein/trace_sim.hpp"
#include "kt_cli.hpp"

using namespace krein;

namespace {

const double pi = std::numbers::pi;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... v) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

// Closed forms, written out independently of the solver.
struct Golden {
    const char* name;
    std::function<double(double)> mu;
};

const std::vector<Golden>& golden() {
    static const std::vector<Golden> g = {
        {"half_laplacian", [](double l) { return std::sqrt(l); }},
        {"water_wave", [](double l) { return std::sqrt(l) * std::tanh(std::sqrt(l)); }},
        {"strip_dirichlet", [](double l) { return std::sqrt(l) / std::tanh(std::sqrt(l)); }},
        {"zero", [](double) { return 0.0; }},
        {"unit_zero", [](double) { return 1.0; }},
        {"atom(1,1)", [](double l) { return l / (l + 1.0); }},
        {"atom(0,1)", [](double l) { return l; }},
        {"quasi_relativistic", [](double l) { return std::sqrt(l + 1.0) - 1.0; }},
        {"quasi_relativistic_plus", [](double l) { return std::sqrt(l + 1.0) + 1.0; }},
        {"sqrt_shift", [](double l) { return std::sqrt(l + 1.0); }},
    };
    return g;
}

const std::vector<const char*> kMcStrings = {"half_laplacian", "water_wave", "atom(1,1)", "quasi_relativistic"};
const std::vector<double> kMcXi = {0.5, 1.0, 2.0};

double golden_mu(const std::string& name, double lambda) {
    for (const auto& g : golden())
        if (name == g.name) return g.mu(lambda);
    throw std::runtime_error("no closed form for " + name);
}

// φ(λ, y0), bounded solution with φ(0) = 1.
double golden_phi(const std::string& name, double lambda, double y0) {
    const double r = std::sqrt(lambda);
    if (name == "half_laplacian") return std::exp(-r * y0);
    if (name == "water_wave") return std::cosh(r * (1.0 - y0)) / std::cosh(r);
    if (name == "atom(1,1)") return 1.0 - lambda * y0 / (1.0 + lambda);
    if (name == "quasi_relativistic") return std::pow(1.0 + 2.0 * y0, 0.5 * (1.0 - std::sqrt(1.0 + lambda)));
    throw std::runtime_error("no closed form for " + name);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

double rel_l2(const GridFunction& a, const GridFunction& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
        den += b.samples[i] * b.samples[i];
    }
    return std::sqrt(num / den);
}

// Splits CSV text, honouring RFC 4180 quotes.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows(1);
    std::string cell;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch != '"') cell += ch;
            else if (i + 1 < text.size() && text[i + 1] == '"') cell += '"', ++i;
            else quoted = false;
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            rows.back().push_back(cell);
            cell.clear();
        } else if (ch == '\n') {
            rows.back().push_back(cell);
            cell.clear();
            rows.emplace_back();
        } else {
            cell += ch;
        }
        any = true;
    }
    if (!cell.empty()) rows.back().push_back(cell);
    if (rows.back().empty()) rows.pop_back();
    if (!any) rows.clear();
    return rows;
}

Outcome golden_suite() {
    const auto grid = log_grid(0.01, 100.0, 25);
    double worst = 0.0;
    std::string where;
    for (const auto& g : golden()) {
        const auto s = builtin_from_spec(g.name);
        for (double l : grid) {
            const double want = g.mu(l), got = spectral_mu(s, l).mu;
            const double err = want == 0.0 ? std::abs(got) / 1e-6 * 1e-12 : std::abs(got / want - 1.0);
            if (err > worst) {
                worst = err;
                where = fmt("%s at lambda=%.4g", g.name, l);
            }
        }
    }
    return {worst <= 1e-6, fmt("worst rel err %.2e (%s), 10 strings x 25 points", worst, where.c_str())};
}

Outcome power_law() {
    const auto grid = log_grid(0.01, 100.0, 25);
    double worst = 0.0, worst_sqrt = 0.0;
    std::string fits;
    for (double alpha : {0.5, 1.0, 1.5}) {
        const auto s = builtin("caffarelli_silvestre", std::vector<double>{alpha});
        std::vector<double> x, y;
        for (double l : grid) {
            const double mu = spectral_mu(s, l).mu;
            x.push_back(std::log(l));
            y.push_back(std::log(mu));
            if (alpha == 1.0) worst_sqrt = std::max(worst_sqrt, std::abs(mu / std::sqrt(l) - 1.0));
        }
        const double slope = ols_slope(x, y);
        worst = std::max(worst, std::abs(slope - alpha / 2));
        fits += fmt(" %.6f", slope);
    }
    return {worst <= 1e-3 && worst_sqrt <= 1e-6,
            fmt("fitted exponents%s; worst |slope - alpha/2| %.1e; alpha=1 vs sqrt: %.1e", fits.c_str(), worst,
                worst_sqrt)};
}

Outcome wronskian() {
    double worst = 0.0;
    long steps = 0;
    for (const auto& g : golden()) {
        const auto s = builtin_from_spec(g.name);
        for (double l : {0.01, 1.0, 100.0}) {
            double Y = 20.0;
            if (s.finite_length()) Y = s.length() * (s.infinite_mass_at_end() ? 0.999 : 1.0);
            else Y = std::max(Y, spectral_mu(s, l).truncation_Y);
            integrate_fundamental(s, l, Y, [&](const FundamentalState& st) {
                worst = std::max(worst, std::abs(st.wronskian() + 1.0));
                ++steps;
            });
        }
    }
    return {worst <= 1e-8, fmt("max |W + 1| = %.2e over %ld steps", worst, steps)};
}

Outcome cbf_suite() {
    const auto grid = log_grid(0.01, 100.0, 25);
    int passed = 0;
    std::string failed;
    for (const auto& g : golden()) {
        if (cbf_check(builtin_from_spec(g.name), grid).all_passed()) ++passed;
        else failed += std::string(" ") + g.name;
    }
    SpectralFunctionTable mock;
    for (double l : grid) mock.entries.push_back({l, l * l, l * l, l * l, 0.0});
    const bool mock_fails = !cbf_check(mock).all_passed();
    return {passed == int(golden().size()) && mock_fails,
            fmt("%d/10 golden strings pass%s%s; lambda^2 mock %s", passed, failed.empty() ? "" : ", failed:",
                failed.c_str(), mock_fails ? "rejected" : "ACCEPTED")};
}

Outcome fraclap_cross() {
    const double L = 20.0;
    const int N = 4096;
    const auto f = GridFunction::sample(1, L, N, [](const double* x) { return std::exp(-x[0] * x[0]); });
    const int mode = 20;
    const double k = pi * mode / L;
    const auto w = GridFunction::sample(1, L, N, [&](const double* x) { return std::cos(k * x[0]); });
    double worst_g = 0.0, worst_w = 0.0;
    for (double alpha : {0.5, 1.0, 1.5}) {
        worst_g = std::max(worst_g, rel_l2(fraclap_pv(f, alpha), fraclap_multiplier(f, alpha)));
        auto target = w;
        for (double& v : target.samples) v *= std::pow(k, alpha);
        worst_w = std::max(worst_w, rel_l2(fraclap_pv(w, alpha), target));
    }
    return {worst_g <= 1e-3 && worst_w <= 1e-3,
            fmt("gaussian pv vs multiplier %.1e; plane wave |k|^alpha %.1e", worst_g, worst_w)};
}

Outcome poisson() {
    double worst_box = 0.0, worst_full = 0.0, worst_ft = 0.0;
    for (int d : {1, 2})
        for (double alpha : {0.5, 1.0, 1.5}) {
            worst_box = std::max(worst_box, std::abs(poisson_integral(d, alpha, 1e-8, 200.0) - 1.0));
            for (double y : {0.5, 1.0, 2.0})
                worst_full = std::max(worst_full, std::abs(poisson_integral(d, alpha, y) - 1.0));
        }
    const double L = 20.0, y = 1.0;
    const auto F = poisson_fourier(1.0, y, L, 1024, 10);
    for (int m = 0; m < 10; ++m) worst_ft = std::max(worst_ft, std::abs(F[m] - std::exp(-y * pi * m / L)));
    return {worst_box <= 1e-4 && worst_full <= 1e-4 && worst_ft <= 1e-6,
            fmt("box [-200,200)^d at y=1e-8: %.1e; whole space y in {0.5,1,2}: %.1e; fourier 10 modes: %.1e",
                worst_box, worst_full, worst_ft)};
}

// Criterion 7 runs through the CLI so criterion 12 can compare bytes.
std::vector<std::string> trace_args(const std::string& name, unsigned workers) {
    return {"trace-cf", "--builtin", name, "--xi", "0.5,1,2", "--s", "0.5,1", "--paths", "100000", "--dt", "1e-4",
            "--seed", std::to_string(kSeed), "--workers", std::to_string(workers)};
}

std::vector<std::string> g_trace_csv;

Outcome headline() {
    g_trace_csv.clear();
    double worst = 0.0, worst_err = 0.0;
    int cells = 0;
    for (const char* name : kMcStrings) {
        std::ostringstream out, err;
        const int code = kt::run(trace_args(name, 1), out, err);
        if (code != kt::ok) return {false, fmt("kt trace-cf %s exited %d", name, code)};
        g_trace_csv.push_back(out.str());
        const auto rows = csv_rows(out.str());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size() || rows[i][0] != name)
                return {false, fmt("malformed trace-cf row %zu for %s", i, name)};
            const double xi = std::stod(rows[i][1]), s = std::stod(rows[i][2]);
            const double est = std::stod(rows[i][3]), se = std::stod(rows[i][4]);
            const double want = std::exp(-s * golden_mu(name, xi * xi));
            worst = std::max(worst, std::abs(est - want) / (3 * se + 0.02));
            worst_err = std::max(worst_err, std::abs(est - want));
            ++cells;
        }
    }
    return {cells == 24 && worst <= 1.0,
            fmt("%d cells; worst |est - exp(-s mu)| %.4f, worst ratio to 3se+0.02 %.3f", cells, worst_err, worst)};
}

Outcome hitting() {
    SimConfig cfg;
    cfg.n_paths = 100000;
    cfg.dt = 1e-4;
    cfg.seed = kSeed;
    double worst = 0.0, worst_err = 0.0;
    int cells = 0;
    for (const char* name : kMcStrings) {
        const auto s = builtin_from_spec(name);
        for (double y0 : {0.5, 1.0}) {
            const auto batch = simulate_hitting_batch(s, y0, cfg);
            for (double xi : kMcXi) {
                const auto e = cf_from_hitting(batch, std::span(&xi, 1));
                const double want = golden_phi(name, xi * xi, y0);
                worst = std::max(worst, std::abs(e.value - want) / (3 * e.stderr_ + 0.02));
                worst_err = std::max(worst_err, std::abs(e.value - want));
                ++cells;
            }
        }
    }
    return {worst <= 1.0, fmt("%d cells; worst |est - phi| %.4f, worst ratio to 3se+0.02 %.3f", cells, worst_err,
                              worst)};
}

Outcome bessel() {
    SimConfig cfg;
    cfg.n_paths = 100000;
    cfg.dt = 1e-5;  // same as kt bessel-exponent
    cfg.seed = kSeed;
    bool ok = true;
    std::string detail;
    for (double alpha : {0.5, 1.0, 1.5}) {
        const auto fit = bessel_subordinator_exponent(alpha, cfg);
        const double tol = alpha == 1.0 ? 0.03 : 0.05;
        const bool pass = std::abs(fit.exponent - alpha / 2) <= tol;
        ok = ok && pass;
        detail += fmt("%salpha=%.1f: %.4f +- %.4f (target %.2f, tol %.2f)", detail.empty() ? "" : "; ", alpha,
                      fit.exponent, fit.half_width, alpha / 2, tol);
    }
    return {ok, detail};
}

Outcome lattice() {
    WalkConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 1000000;
    cfg.seed = kSeed;
    double worst = 0.0, worst_im = 0.0;
    int cells = 0;
    for (int d : {1, 2}) {
        cfg.d = d;
        for (int j : {1, 2, 3}) {
            const auto batch = simulate_walk_batch(cfg, j);
            for (double t : {0.0, 0.5, 1.0, 2.0, pi}) {
                std::vector<double> xi(std::size_t(d), t);
                if (d == 2) xi[1] = 0.5 * t;
                const auto e = walk_cf_from_batch(batch, xi);
                const double want = trace_cf_closed_form(d, xi, j).real();
                worst = std::max(worst, std::abs(e.real.value - want) / (3 * e.real.stderr_ + 0.01));
                worst_im = std::max(worst_im, std::abs(e.imag) / (3 * e.imag_stderr + 1e-12));
                ++cells;
            }
        }
    }
    // numerator: enumeration to depth decides between 1 and (d+1)^2
    double num_err = 0.0, alt_gap = 1e300;
    for (int d : {1, 2}) {
        const int depth = d == 1 ? 20 : 10;
        const double bound = std::pow(double(d) / (d + 1), depth + 1);
        for (double t : {0.0, 0.5, 1.0, 2.0, pi}) {
            std::vector<double> xi(std::size_t(d), t);
            const auto brute = step_cf_enumerated(d, xi, depth);
            const auto closed = step_cf_oracle(d, xi);
            num_err = std::max(num_err, std::abs(brute - closed) / bound);
            alt_gap = std::min(alt_gap, std::abs(brute - double((d + 1) * (d + 1)) * closed));
        }
    }
    return {worst <= 1.0 && worst_im <= 1.0 && num_err <= 1.0 + 1e-9 && alt_gap > 0.1,
            fmt("%d cells; worst ratio to 3se+0.01 %.3f; imag/3se %.3f; numerator 1 within enumeration bound "
                "(ratio %.2e), (d+1)^2 off by >= %.3f",
                cells, worst, worst_im, num_err, alt_gap)};
}

Outcome energy() {
    const double L = 2.0;
    const auto s = builtin("half_laplacian");
    double worst_gap = 0.0, worst_ratio = 0.0;
    for (int mode : {1, 2, 4}) {
        const double k = pi * mode / L;
        const auto f = GridFunction::sample(1, L, 32, [&](const double* x) { return std::cos(k * x[0]); });
        // φ(k², Y_max) = 1e-8
        const double Ymax = std::log(1e8) / k;
        auto grid = [&](int n) {
            std::vector<double> g(n + 1);
            for (int i = 0; i <= n; ++i) g[i] = Ymax * i / n;
            return g;
        };
        const double coarse = std::abs(energy_check(f, s, grid(200)).rel_gap);
        const double fine = std::abs(energy_check(f, s, grid(400)).rel_gap);
        worst_gap = std::max(worst_gap, coarse);
        worst_ratio = std::max(worst_ratio, fine / coarse);
    }
    // at least first order: halving the y-step halves the gap (observed: quarters it)
    return {worst_gap <= 0.01 && worst_ratio <= 0.55,
            fmt("worst rel gap %.2e (200 y-intervals); refinement ratio <= %.3f", worst_gap, worst_ratio)};
}

Outcome determinism() {
    if (g_trace_csv.size() != kMcStrings.size()) return {false, "criterion 7 did not produce its CSV"};
    std::size_t bytes = 0;
    for (std::size_t i = 0; i < kMcStrings.size(); ++i) {
        std::ostringstream out, err;
        if (kt::run(trace_args(kMcStrings[i], 2), out, err) != kt::ok) return {false, "kt trace-cf failed"};
        if (out.str() != g_trace_csv[i]) return {false, fmt("%s: CSV differs between 1 and 2 workers", kMcStrings[i])};
        bytes += out.str().size();
    }
    return {true, fmt("criterion 7 CSV identical at 1 and 2 workers (%zu bytes)", bytes)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance run"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    std::set<int> selected(only.begin(), only.end());
    if (selected.count(12)) selected.insert(7);

    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion all[] = {
        {1, "golden mu suite", golden_suite},
        {2, "power law", power_law},
        {3, "wronskian conservation", wronskian},
        {4, "cbf property suite", cbf_suite},
        {5, "operator cross-validation", fraclap_cross},
        {6, "poisson kernel", poisson},
        {7, "trace cf vs exp(-s mu)", headline},
        {8, "hitting cf", hitting},
        {9, "inverse local time exponent", bessel},
        {10, "lattice walk", lattice},
        {11, "energy check", energy},
        {12, "determinism", determinism},
    };
    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::cout << fmt("[%s] %2d %-28s %s (%.1fs)", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs)
                  << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
    return failures;
}
