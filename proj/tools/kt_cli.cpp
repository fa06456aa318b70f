#include "kt_cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <variant>

#include "krein/errors.hpp"
#include "krein/krein_solver.hpp"
#include "krein/lattice_walk.hpp"
#include "krein/spectral_dtn.hpp"
#include "krein/string_model.hpp"
#include "krein/trace_sim.hpp"

#ifndef KT_VERSION
#define KT_VERSION "0.0.0"
#endif

namespace kt {

namespace {

using namespace krein;
using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// A result table rendered as CSV or as a JSON array of row objects.
struct Table {
    using Cell = std::variant<double, long long, std::string>;
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    static std::string text(const Cell& c) {
        if (auto d = std::get_if<double>(&c)) return num(*d);
        if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
        return std::get<std::string>(c);
    }

    // RFC 4180 quoting; string labels such as atom(1,1) carry commas
    static std::string field(std::string v) {
        if (v.find_first_of(",\"\n") == std::string::npos) return v;
        std::string q = "\"";
        for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + '"';
    }

    std::string csv() const {
        std::string s;
        for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
        s += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + field(text(r[i]));
            s += '\n';
        }
        return s;
    }

    // Numbers are written with the same 17 digits as the CSV; JSON has no
    // non-finite literals, so those become strings.
    std::string json_text() const {
        std::string s = "[";
        for (std::size_t k = 0; k < rows.size(); ++k) {
            s += k ? ",\n {" : "\n {";
            for (std::size_t i = 0; i < header.size(); ++i) {
                s += (i ? ", " : "") + json(header[i]).dump() + ": ";
                const auto& c = rows[k][i];
                if (auto d = std::get_if<double>(&c)) s += std::isfinite(*d) ? num(*d) : json(num(*d)).dump();
                else if (auto n = std::get_if<long long>(&c)) s += std::to_string(*n);
                else s += json(std::get<std::string>(c)).dump();
            }
            s += "}";
        }
        s += rows.empty() ? "]\n" : "\n]\n";
        return s;
    }
};

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string command;
    std::string builtin_name;
    std::string string_file;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed_flag;
    unsigned workers = 0;

    double lambda_min = 0.01, lambda_max = 100.0;
    int points = 25;
    double tol = 1e-12;

    std::vector<std::string> xi{"1"};
    std::vector<double> s{1.0};
    std::vector<double> y0{1.0};
    std::size_t paths = 100000;
    std::optional<double> dt;
    double horizon = 1e6;
    double step_factor = 0.2;
    double atom_window = 0.0;

    double alpha = 1.0;
    int dim = 1;
    int grid_n = 256;
    double box_l = 20.0;
    std::string input;
    std::string function = "gaussian";
    int wave = 1;
    double y = 1.0;
    std::string mode;
    std::vector<std::string> x{"0"};
    double box = kInf;
    int modes = 10;
    double y_max = 0.0;
    int y_points = 400;

    std::vector<int> j{1};
    std::size_t steps = 1000000;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, "cannot read file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Context {
    Options o;
    std::vector<std::string> argv;
    json inputs = json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    KreinString string_arg(std::string* label) {
        if (!o.builtin_name.empty() && !o.string_file.empty())
            throw UsageError("--builtin and --string are mutually exclusive");
        if (!o.builtin_name.empty()) {
            *label = o.builtin_name;
            return builtin_from_spec(o.builtin_name);
        }
        if (!o.string_file.empty()) {
            const std::string text = read_file(o.string_file);
            inputs[o.string_file] = hex64(fnv1a64(text));
            auto s = parse_string(text);
            *label = s.label().empty() ? o.string_file : s.label();
            return s;
        }
        throw UsageError("this subcommand needs --builtin NAME or --string FILE");
    }

    GridFunction grid_arg() {
        if (!o.input.empty()) {
            const std::string bytes = read_file(o.input);
            inputs[o.input] = hex64(fnv1a64(bytes));
            if (bytes.rfind("KTGRID01", 0) == 0) return GridFunction::from_raw(bytes);
            return GridFunction::from_csv(bytes, o.box_l);
        }
        const double k = std::numbers::pi * o.wave / o.box_l;
        if (o.function == "gaussian")
            return GridFunction::sample(o.dim, o.box_l, o.grid_n, [&](const double* p) {
                double r2 = 0.0;
                for (int i = 0; i < o.dim; ++i) r2 += p[i] * p[i];
                return std::exp(-r2);
            });
        if (o.function == "cos")
            return GridFunction::sample(o.dim, o.box_l, o.grid_n, [&](const double* p) { return std::cos(k * p[0]); });
        throw ValidationError("unknown --function '" + o.function + "' (gaussian|cos)");
    }

    SimConfig sim_config(double default_dt) const {
        SimConfig c;
        c.dt = o.dt.value_or(default_dt);
        c.horizon = o.horizon;
        c.n_paths = o.paths;
        c.seed = seed;
        c.s_values = o.s;
        c.atom_window = o.atom_window;
        c.step_factor = o.step_factor;
        c.workers = o.workers;
        return c;
    }
};

double parse_number(const std::string& t) {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0') throw ValidationError("not a number: '" + t + "'");
    return v;
}

// "a:b" -> {a, b}; a scalar is repeated to length d
std::vector<double> parse_vector(const std::string& t, int d) {
    std::vector<double> v;
    std::size_t pos = 0;
    while (true) {
        const auto c = t.find(':', pos);
        v.push_back(parse_number(t.substr(pos, c == std::string::npos ? std::string::npos : c - pos)));
        if (c == std::string::npos) break;
        pos = c + 1;
    }
    if (v.size() == 1) v.assign(std::size_t(d), v[0]);
    if (v.size() != std::size_t(d)) throw ValidationError("vector '" + t + "' needs " + std::to_string(d) + " components");
    return v;
}

std::vector<double> scalar_list(const std::vector<std::string>& items) {
    std::vector<double> v;
    for (const auto& t : items) v.push_back(parse_number(t));
    return v;
}

std::string grid_output(const GridFunction& g, const std::string& format) {
    if (format == "raw") return g.to_raw();
    if (format == "csv") return g.to_csv();
    Table t;
    t.header = g.d == 1 ? std::vector<std::string>{"index", "value"}
                        : std::vector<std::string>{"index0", "index1", "value"};
    for (std::size_t k = 0; k < g.samples.size(); ++k) {
        if (g.d == 1) t.rows.push_back({(long long)k, g.samples[k]});
        else t.rows.push_back({(long long)(k / g.N), (long long)(k % g.N), g.samples[k]});
    }
    return t.json_text();
}

std::string table_output(const Table& t, const std::string& format) {
    if (format == "json") return t.json_text();
    if (format == "csv") return t.csv();
    throw ValidationError("--format raw applies to grid outputs only");
}

std::string cmd_string(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    json j = to_json(s);
    return j.dump(2) + "\n";
}

std::string cmd_mu(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    MuOptions mo;
    mo.tol = c.o.tol;
    const auto table = spectral_table(s, log_grid(c.o.lambda_min, c.o.lambda_max, c.o.points), mo, c.o.workers);
    if (c.o.format == "json") {
        Table t;
        t.header = {"lambda", "mu", "bracket_lo", "bracket_hi", "truncation_Y"};
        for (const auto& e : table.entries) t.rows.push_back({e.lambda, e.mu, e.bracket_lo, e.bracket_hi, e.truncation_Y});
        return t.json_text();
    }
    if (c.o.format != "csv") throw ValidationError("--format raw applies to grid outputs only");
    return table.to_csv();
}

std::string cmd_cbf(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    const auto report = cbf_check(s, log_grid(c.o.lambda_min, c.o.lambda_max, c.o.points), c.o.workers);
    Table t;
    t.header = {"property", "passed", "worst_violation", "at_lambda"};
    for (const auto& p : report.properties)
        t.rows.push_back({p.property, (long long)(p.passed ? 1 : 0), p.worst_violation, p.at_lambda});
    return table_output(t, c.o.format);
}

std::string cmd_extend(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    return grid_output(harmonic_extend(c.grid_arg(), s, c.o.y, c.o.workers), c.o.format);
}

std::string cmd_dtn(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    return grid_output(dtn_apply(c.grid_arg(), s, c.o.workers), c.o.format);
}

double rel_l2(const GridFunction& a, const GridFunction& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        num += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
        den += b.samples[i] * b.samples[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

std::string cmd_fraclap(Context& c) {
    const auto f = c.grid_arg();
    const std::string mode = c.o.mode.empty() ? "spectral" : c.o.mode;
    if (mode == "pv") return grid_output(fraclap_pv(f, c.o.alpha), c.o.format);
    if (mode == "spectral") return grid_output(fraclap_multiplier(f, c.o.alpha), c.o.format);
    if (mode == "compare") {
        Table t;
        t.header = {"d", "N", "L", "alpha", "rel_l2_error"};
        t.rows.push_back({(long long)f.d, (long long)f.N, f.L, c.o.alpha,
                          rel_l2(fraclap_pv(f, c.o.alpha), fraclap_multiplier(f, c.o.alpha))});
        return table_output(t, c.o.format);
    }
    throw ValidationError("--mode must be pv, spectral or compare");
}

std::string cmd_poisson(Context& c) {
    const std::string mode = c.o.mode.empty() ? "eval" : c.o.mode;
    Table t;
    if (mode == "eval") {
        t.header = c.o.dim == 1 ? std::vector<std::string>{"x", "value"}
                                : std::vector<std::string>{"x0", "x1", "value"};
        for (const auto& item : c.o.x) {
            const auto x = parse_vector(item, c.o.dim);
            const double v = poisson_kernel(c.o.dim, c.o.alpha, c.o.y, x);
            if (c.o.dim == 1) t.rows.push_back({x[0], v});
            else t.rows.push_back({x[0], x[1], v});
        }
    } else if (mode == "integral") {
        t.header = {"d", "alpha", "y", "box", "integral"};
        t.rows.push_back({(long long)c.o.dim, c.o.alpha, c.o.y, c.o.box,
                          poisson_integral(c.o.dim, c.o.alpha, c.o.y, c.o.box)});
    } else if (mode == "fourier") {
        t.header = {"k", "xi", "value", "theory"};
        const auto F = poisson_fourier(c.o.alpha, c.o.y, c.o.box_l, c.o.grid_n, c.o.modes);
        for (int k = 0; k < c.o.modes; ++k) {
            const double xi = std::numbers::pi * k / c.o.box_l;
            // closed form known for the Cauchy kernel only
            const double theory = c.o.alpha == 1.0 ? std::exp(-c.o.y * xi) : std::nan("");
            t.rows.push_back({(long long)k, xi, F[k].real(), theory});
        }
    } else {
        throw ValidationError("--mode must be eval, integral or fourier");
    }
    return table_output(t, c.o.format);
}

std::string cmd_energy(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    const auto f = c.grid_arg();
    double Y = c.o.y_max;
    if (Y <= 0.0) {
        if (s.finite_length()) {
            Y = s.length();
        } else {
            const double lam = std::pow(std::numbers::pi / f.L, 2);
            Y = 1.0;
            while (Y < 1e6 && bounded_solution(s, lam, Y) > 1e-4) Y *= 2.0;
        }
    }
    if (c.o.y_points < 2) throw ValidationError("--y-points must be >= 2");
    std::vector<double> grid(std::size_t(c.o.y_points) + 1);
    for (int i = 0; i <= c.o.y_points; ++i) grid[std::size_t(i)] = Y * i / c.o.y_points;
    const auto r = energy_check(f, s, grid, c.o.workers);
    Table t;
    t.header = {"form_value", "extension_energy", "rel_gap", "y_max", "y_points"};
    t.rows.push_back({r.form_value, r.extension_energy, r.rel_gap, Y, (long long)c.o.y_points});
    return table_output(t, c.o.format);
}

void note(Context& c, const CFEstimate& e) {
    if (!e.warning.empty()) c.warnings.push_back(e.warning);
}

std::string cmd_trace(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    const auto cfg = c.sim_config(1e-4);
    const auto batch = simulate_trace_batch(s, cfg);
    Table t;
    t.header = {"string", "xi", "s", "estimate", "stderr", "theory", "abs_err", "n_paths", "dt", "excluded_frac"};
    for (double xi : scalar_list(c.o.xi))
        for (double level : cfg.s_values) {
            const auto e = cf_from_batch(batch, std::span(&xi, 1), level);
            note(c, e);
            const double theory = std::exp(-level * spectral_mu(s, xi * xi).mu);
            t.rows.push_back({label, xi, level, e.value, e.stderr_, theory, std::abs(e.value - theory),
                              (long long)cfg.n_paths, cfg.dt, e.excluded_fraction()});
        }
    return table_output(t, c.o.format);
}

std::string cmd_hit(Context& c) {
    std::string label;
    const auto s = c.string_arg(&label);
    const auto cfg = c.sim_config(1e-4);
    Table t;
    t.header = {"string", "xi", "y0", "estimate", "stderr", "theory", "abs_err", "n_paths", "dt", "excluded_frac"};
    const auto xis = scalar_list(c.o.xi);
    for (double y0 : c.o.y0) {
        const auto batch = simulate_hitting_batch(s, y0, cfg);
        for (double xi : xis) {
            const auto e = cf_from_hitting(batch, std::span(&xi, 1));
            note(c, e);
            const double theory = bounded_solution(s, xi * xi, y0);
            t.rows.push_back({label, xi, y0, e.value, e.stderr_, theory, std::abs(e.value - theory),
                              (long long)cfg.n_paths, cfg.dt, e.excluded_fraction()});
        }
    }
    return table_output(t, c.o.format);
}

std::string cmd_bessel(Context& c, bool level_given) {
    auto cfg = c.sim_config(1e-5);
    BesselOptions bo;
    if (level_given) bo.level = c.o.s.front();
    cfg.s_values = {bo.level};
    const auto fit = bessel_subordinator_exponent(c.o.alpha, cfg, bo);
    Table t;
    t.header = {"alpha", "s", "exponent", "half_width", "target", "n_paths", "dt", "discarded_frac", "capped_frac"};
    t.rows.push_back({fit.alpha, bo.level, fit.exponent, fit.half_width, fit.alpha / 2, (long long)fit.n_paths, cfg.dt,
                      double(fit.n_discarded) / double(fit.n_paths), double(fit.n_capped) / double(fit.n_paths)});
    return table_output(t, c.o.format);
}

std::string cmd_walk(Context& c) {
    WalkConfig wc;
    wc.d = c.o.dim;
    wc.n_steps = c.o.steps;
    wc.n_paths = c.o.paths;
    wc.seed = c.seed;
    wc.workers = c.o.workers;
    Table t;
    t.header = {"d", "j"};
    for (int k = 0; k < wc.d; ++k) t.header.push_back("xi" + std::to_string(k));
    for (const char* h : {"closed_form_re", "estimate", "stderr"}) t.header.push_back(h);
    for (int j : c.o.j) {
        const auto batch = simulate_walk_batch(wc, j);
        for (const auto& item : c.o.xi) {
            const auto xi = parse_vector(item, wc.d);
            const auto e = walk_cf_from_batch(batch, xi);
            note(c, e.real);
            std::vector<Table::Cell> row{(long long)wc.d, (long long)j};
            for (double v : xi) row.push_back(v);
            row.push_back(trace_cf_closed_form(wc.d, xi, j).real());
            row.push_back(e.real.value);
            row.push_back(e.real.stderr_);
            t.rows.push_back(std::move(row));
        }
    }
    return table_output(t, c.o.format);
}

json manifest(const Context& c) {
    const auto& o = c.o;
    json cfg = {{"builtin", o.builtin_name},
                {"string", o.string_file},
                {"out", o.out},
                {"format", o.format},
                {"workers", o.workers},
                {"lambda_min", o.lambda_min},
                {"lambda_max", o.lambda_max},
                {"points", o.points},
                {"tol", o.tol},
                {"xi", o.xi},
                {"s", o.s},
                {"y0", o.y0},
                {"paths", o.paths},
                {"dt", o.dt ? json(*o.dt) : json("subcommand default")},
                {"horizon", o.horizon},
                {"step_factor", o.step_factor},
                {"atom_window", o.atom_window},
                {"alpha", o.alpha},
                {"dim", o.dim},
                {"grid_n", o.grid_n},
                {"box_l", o.box_l},
                {"input", o.input},
                {"function", o.function},
                {"wave", o.wave},
                {"y", o.y},
                {"mode", o.mode},
                {"x", o.x},
                {"box", std::isinf(o.box) ? json("inf") : json(o.box)},
                {"modes", o.modes},
                {"y_max", o.y_max},
                {"y_points", o.y_points},
                {"j", o.j},
                {"steps", o.steps}};
    return {{"subcommand", o.command}, {"argv", c.argv},      {"config", cfg},
            {"seed", c.seed},          {"version", KT_VERSION}, {"inputs", c.inputs},
            {"warnings", c.warnings}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context c;
    c.argv = args;
    Options& o = c.o;

    CLI::App app{"kt: Krein strings, Dirichlet-to-Neumann operators and boundary traces", "kt"};
    app.require_subcommand(1);
    app.set_version_flag("--version", KT_VERSION);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "output file (default: standard output)");
        sub->add_option("--format", o.format, "csv|json (grids also raw)")->check(CLI::IsMember({"csv", "json", "raw"}));
        sub->add_option("--seed", o.seed_flag, "random seed (falls back to KT_SEED, then 0)");
        sub->add_option("--workers", o.workers, "worker threads (0: all cores)");
    };
    auto with_string = [&](CLI::App* sub) {
        sub->add_option("--builtin", o.builtin_name, "catalog string, e.g. water_wave or atom(1,1)");
        sub->add_option("--string", o.string_file, "string spec file (JSON)");
    };
    auto with_lambda = [&](CLI::App* sub) {
        sub->add_option("--lambda-min", o.lambda_min);
        sub->add_option("--lambda-max", o.lambda_max);
        sub->add_option("--points,--lambda-points", o.points);
    };
    auto with_grid = [&](CLI::App* sub) {
        sub->add_option("--input", o.input, "grid function file (CSV or raw)");
        sub->add_option("--function", o.function, "gaussian|cos when no --input");
        sub->add_option("--wave", o.wave, "mode number K of cos(pi K x / L)");
        sub->add_option("--dim", o.dim)->check(CLI::Range(1, 2));
        sub->add_option("--grid-n", o.grid_n);
        sub->add_option("--box-l", o.box_l, "half-width L of the box [-L, L)^d");
    };
    auto with_sim = [&](CLI::App* sub) {
        sub->add_option("--xi", o.xi)->delimiter(',');
        sub->add_option("--paths", o.paths);
        sub->add_option("--dt", o.dt);
        sub->add_option("--horizon", o.horizon);
        sub->add_option("--step-factor", o.step_factor);
        sub->add_option("--atom-window", o.atom_window);
    };

    std::map<std::string, CLI::App*> subs;
    auto add = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        common(sub);
        subs[name] = sub;
        return sub;
    };
    with_string(add("string", "validate a string spec and print it normalised"));
    {
        auto* sub = add("mu", "tabulate mu(lambda) with Dirichlet/Neumann brackets");
        with_string(sub);
        with_lambda(sub);
        sub->add_option("--tol", o.tol, "absolute bracket width");
    }
    {
        auto* sub = add("cbf-check", "complete Bernstein sign-pattern checks on a lambda grid");
        with_string(sub);
        with_lambda(sub);
    }
    {
        auto* sub = add("extend", "harmonic extension u(., y)");
        with_string(sub);
        with_grid(sub);
        sub->add_option("--y", o.y);
    }
    {
        auto* sub = add("dtn", "apply the Dirichlet-to-Neumann operator");
        with_string(sub);
        with_grid(sub);
    }
    {
        auto* sub = add("fraclap", "fractional Laplacian");
        with_grid(sub);
        sub->add_option("--alpha", o.alpha);
        sub->add_option("--mode", o.mode, "pv|spectral|compare");
    }
    {
        auto* sub = add("poisson", "Poisson kernel");
        sub->add_option("--mode", o.mode, "eval|integral|fourier");
        sub->add_option("--dim", o.dim)->check(CLI::Range(1, 2));
        sub->add_option("--alpha", o.alpha);
        sub->add_option("--y", o.y);
        sub->add_option("--x", o.x, "points, a or a:b")->delimiter(',');
        sub->add_option("--box", o.box, "integrate over [-B, B]^d");
        sub->add_option("--box-l", o.box_l);
        sub->add_option("--grid-n", o.grid_n);
        sub->add_option("--modes", o.modes);
    }
    {
        auto* sub = add("energy", "Dirichlet principle: quadratic form vs extension energy");
        with_string(sub);
        with_grid(sub);
        sub->add_option("--y-max", o.y_max, "0: automatic");
        sub->add_option("--y-points", o.y_points);
    }
    {
        auto* sub = add("trace-cf", "Monte Carlo characteristic function of the boundary trace");
        with_string(sub);
        with_sim(sub);
        sub->add_option("--s", o.s, "local-time levels")->delimiter(',');
    }
    {
        auto* sub = add("hit-cf", "Monte Carlo characteristic function at the first hit of the boundary");
        with_string(sub);
        with_sim(sub);
        sub->add_option("--y0", o.y0, "start heights")->delimiter(',');
    }
    CLI::Option* bessel_s = nullptr;
    {
        auto* sub = add("bessel-exponent", "stable index of the Bessel inverse local time");
        sub->add_option("--alpha", o.alpha);
        sub->add_option("--paths", o.paths);
        sub->add_option("--dt", o.dt);
        bessel_s = sub->add_option("--s", o.s, "local-time level")->delimiter(',');
    }
    {
        auto* sub = add("walk", "reflected lattice walk trace");
        sub->add_option("--dim", o.dim);
        sub->add_option("--j", o.j, "start heights")->delimiter(',');
        sub->add_option("--xi", o.xi, "frequencies, t or t0:t1")->delimiter(',');
        sub->add_option("--paths", o.paths);
        sub->add_option("--steps", o.steps);
    }
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << KT_VERSION << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "kt: " << e.what() << "\n\n" << app.help();
        return usage;
    }
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) o.command = name;
    // cbf-check needs a denser default grid for third differences
    if (o.command == "cbf-check" && subs["cbf-check"]->count("--points") == 0) o.points = 32;

    if (o.seed_flag) c.seed = *o.seed_flag;
    else if (const char* env = std::getenv("KT_SEED")) {
        try {
            std::size_t used = 0;
            c.seed = std::stoull(env, &used);
            if (env[used] != '\0') throw std::invalid_argument(env);
        } catch (const std::exception&) {
            err << "kt: KT_SEED must be an unsigned integer\n";
            return usage;
        }
    }

    std::string result;
    try {
        if (o.command == "string") result = cmd_string(c);
        else if (o.command == "mu") result = cmd_mu(c);
        else if (o.command == "cbf-check") result = cmd_cbf(c);
        else if (o.command == "extend") result = cmd_extend(c);
        else if (o.command == "dtn") result = cmd_dtn(c);
        else if (o.command == "fraclap") result = cmd_fraclap(c);
        else if (o.command == "poisson") result = cmd_poisson(c);
        else if (o.command == "energy") result = cmd_energy(c);
        else if (o.command == "trace-cf") result = cmd_trace(c);
        else if (o.command == "hit-cf") result = cmd_hit(c);
        else if (o.command == "bessel-exponent") result = cmd_bessel(c, bessel_s->count() > 0);
        else if (o.command == "walk") result = cmd_walk(c);
    } catch (const UsageError& e) {
        err << "kt: " << e.what() << "\n\n" << subs[o.command]->help();
        return usage;
    } catch (const ConvergenceError& e) {
        err << "kt: " << e.what() << "\n";
        return convergence;
    } catch (const SimulationError& e) {
        err << "kt: " << e.what() << "\n";
        return convergence;
    } catch (const Error& e) {
        err << "kt: " << e.what() << "\n";
        return validation;
    }

    for (const auto& w : c.warnings) err << "kt: warning: " << w << "\n";
    const std::string man = manifest(c).dump(2) + "\n";
    if (o.out.empty()) {
        out << result;
        err << man;
    } else {
        std::ofstream f(o.out, std::ios::binary);
        std::ofstream m(o.out + ".manifest.json", std::ios::binary);
        if (!f || !m) {
            err << "kt: cannot write " << o.out << "\n";
            return validation;
        }
        f << result;
        m << man;
    }
    return ok;
}

}  // namespace kt
