#include "krein/krein_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "krein/parallel.hpp"

namespace krein {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// exp of the traceless generator [[-q, h], [p, q]]:
// cosh(k) I + sinh(k)/k Ω with k² = q² + h p.
struct Mat2 {
    double a, b, c, d;
};

Mat2 magnus_step(double h, double p, double q) {
    const double k2 = q * q + h * p;
    const double k = std::sqrt(std::max(k2, 0.0));
    double ch, shc;
    if (k < 1e-4) {
        ch = 1.0 + k2 / 2.0 + k2 * k2 / 24.0;
        shc = 1.0 + k2 / 6.0 + k2 * k2 / 120.0;
    } else {
        ch = std::cosh(k);
        shc = std::sinh(k) / k;
    }
    return {ch - shc * q, shc * h, shc * p, ch + shc * q};
}

Mat2 mul(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

void normalize(double& v, double& dv, double& log_scale) {
    const double s = std::max(std::abs(v), std::abs(dv));
    if (s == 0.0 || !std::isfinite(s)) return;
    v /= s;
    dv /= s;
    log_scale += std::log(s);
}

}  // namespace

double FundamentalState::wronskian() const {
    return std::exp(log_scale + log_scale_psi) * (phiD * dpsi - psi * dphiD);
}

double FundamentalState::dirichlet_ratio() const {
    if (phiD == 0.0) return kInf;
    return rho + psi / phiD * std::exp(log_scale_psi - log_scale);
}

double FundamentalState::neumann_ratio() const {
    return rho + dpsi / dphiD * std::exp(log_scale_psi - log_scale);
}

FundamentalIntegrator::FundamentalIntegrator(const KreinString& s, double lambda, SolverOptions opt)
    : s_(s), lambda_(lambda), opt_(opt) {
    if (!(lambda >= 0.0) || std::isinf(lambda)) throw DomainError("lambda must be a finite nonnegative number");
    sync();
}

void FundamentalIntegrator::sync() {
    const double e = std::exp(lp_ - ld_);
    const double v[4] = {d_, dd_, rho_ * d_ + p_ * e, rho_ * dd_ + dp_ * e};
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    if (mx == 0.0 || !std::isfinite(mx)) mx = 1.0;
    st_.phiD = v[0] / mx;
    st_.dphiD = v[1] / mx;
    st_.phiN = v[2] / mx;
    st_.dphiN = v[3] / mx;
    st_.log_scale = ld_ + std::log(mx);
    st_.rho = rho_;
    st_.psi = p_;
    st_.dpsi = dp_;
    st_.log_scale_psi = lp_;
}

void FundamentalIntegrator::propagate(double m00, double m01, double m10, double m11) {
    const double d = m00 * d_ + m01 * dd_;
    const double dd = m10 * d_ + m11 * dd_;
    const double p = m00 * p_ + m01 * dp_;
    const double dp = m10 * p_ + m11 * dp_;
    d_ = d;
    dd_ = dd;
    p_ = p;
    dp_ = dp;
    normalize(d_, dd_, ld_);
    if (d_ != 0.0) {
        // move the φ_D component of ψ into rho so ψ(y) = 0 again
        const double r = p_ / d_;
        rho_ += r * std::exp(lp_ - ld_);
        dp_ -= r * dd_;
        p_ = 0.0;
    }
    normalize(p_, dp_, lp_);
}

void FundamentalIntegrator::apply_atom(double m) {
    propagate(1.0, 0.0, lambda_ * m, 1.0);
}

void FundamentalIntegrator::affine(double h) { propagate(1.0, h, 0.0, 1.0); }

void FundamentalIntegrator::advance_piece(const DensityPiece& pc, double b, const StepObserver& observer) {
    double u = st_.y;
    double h = h_hint_ > 0.0 ? h_hint_ : b - u;
    while (u < b) {
        h = std::min(h, b - u);
        if (b - u - h < 0.01 * h) h = b - u;
        Mat2 step{};
        double h_next = h;
        for (;;) {
            const double v = (h == b - u) ? b : u + h;
            const double hh = v - u;
            const double p_full = lambda_ * pc.mass(u, v);
            const double q_full = lambda_ * pc.midpoint_moment(u, v);
            const double k2 = q_full * q_full + hh * p_full;
            if (k2 > 4.0 && hh > 1e-300) {
                h = hh * std::max(0.1, 0.9 * 2.0 / std::sqrt(k2));
                continue;
            }
            const double mid = u + 0.5 * hh;
            const Mat2 full = magnus_step(hh, p_full, q_full);
            const Mat2 m1 = magnus_step(mid - u, lambda_ * pc.mass(u, mid), lambda_ * pc.midpoint_moment(u, mid));
            const Mat2 m2 = magnus_step(v - mid, lambda_ * pc.mass(mid, v), lambda_ * pc.midpoint_moment(mid, v));
            const Mat2 two = mul(m2, m1);
            // error on the φ_D pair and on the (0, 1) column carried by ψ
            const double dv = two.a * d_ + two.b * dd_, ddv = two.c * d_ + two.d * dd_;
            const double ev = (full.a - two.a) * d_ + (full.b - two.b) * dd_;
            const double edv = (full.c - two.c) * d_ + (full.d - two.d) * dd_;
            const double err_d = std::max(std::abs(ev), std::abs(edv)) / std::max(std::abs(dv), std::abs(ddv));
            const double err_p = std::max(std::abs(full.b - two.b), std::abs(full.d - two.d)) /
                                 std::max(std::abs(two.b), std::abs(two.d));
            double err = std::max(err_d, err_p);
            if (!std::isfinite(err)) err = kInf;
            const bool tiny = hh <= 1e-14 * std::max(1.0, std::abs(u));
            if (err <= opt_.rel_tol || tiny) {
                step = two;
                const double f = err == 0.0 ? 4.0 : std::clamp(0.9 * std::pow(opt_.rel_tol / err, 0.2), 0.2, 4.0);
                h_next = hh * f;
                h = hh;
                u = v;
                break;
            }
            h = hh * std::clamp(0.9 * std::pow(opt_.rel_tol / err, 0.2), 0.2, 0.9);
        }
        propagate(step.a, step.b, step.c, step.d);
        if (++steps_ > opt_.max_steps) throw DomainError("integrate_fundamental: step budget exhausted");
        h = h_next;
        h_hint_ = h_next;
        st_.y = u;
        sync();
        if (observer) observer(st_);
    }
}

void FundamentalIntegrator::advance(double y_target, const StepObserver& observer) {
    if (std::isnan(y_target) || y_target < st_.y || y_target > s_.length() || std::isinf(y_target))
        throw DomainError("integrate_fundamental: y_target outside [current y, R]");
    if (y_target == s_.length() && s_.infinite_mass_at_end())
        throw DomainError("integrate_fundamental: the mass diverges at R");
    const auto& pieces = s_.pieces();
    const auto& atoms = s_.atoms();
    std::size_t pi = 0;
    for (;;) {
        while (next_atom_ < atoms.size() && atoms[next_atom_].y <= st_.y && atoms[next_atom_].y < y_target) {
            if (atoms[next_atom_].y > 0.0) {
                apply_atom(atoms[next_atom_].m);
                sync();
                if (observer) observer(st_);
            }
            ++next_atom_;
        }
        if (st_.y >= y_target) break;
        while (pi < pieces.size() && pieces[pi].r <= st_.y) ++pi;
        double nb = y_target;
        if (next_atom_ < atoms.size()) nb = std::min(nb, atoms[next_atom_].y);
        const bool inside = pi < pieces.size() && pieces[pi].l <= st_.y;
        if (pi < pieces.size()) nb = std::min(nb, inside ? pieces[pi].r : pieces[pi].l);
        if (inside) {
            advance_piece(pieces[pi], nb, observer);
        } else {
            affine(nb - st_.y);
            ++steps_;
            st_.y = nb;
            sync();
            if (observer) observer(st_);
        }
    }
}

FundamentalState integrate_fundamental(const KreinString& s, double lambda, double y_target,
                                       const StepObserver& observer, SolverOptions opt) {
    if (!(y_target >= 0.0) || y_target > s.length() || std::isinf(y_target))
        throw DomainError("integrate_fundamental: y_target outside [0, R]");
    FundamentalIntegrator it(s, lambda, opt);
    it.advance(y_target, observer);
    return it.state();
}

namespace {

bool narrow_enough(double lo, double hi, const MuOptions& opt) {
    const double w = hi - lo;
    return w <= opt.tol || w <= opt.rel_tol * std::abs(0.5 * (lo + hi));
}

MuResult finish(MuResult r, double Y, double lo, double hi) {
    if (lo > hi) std::swap(lo, hi);
    r.truncation_Y = Y;
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.mu = 0.5 * (lo + hi);
    return r;
}

// Largest finite point of the support description; used to seed the
// truncation schedule for strings with unbounded support.
double last_finite_feature(const KreinString& s) {
    double y = 0.0;
    for (const auto& pc : s.pieces()) {
        y = std::max(y, pc.l);
        if (std::isfinite(pc.r)) y = std::max(y, pc.r);
    }
    for (const auto& a : s.atoms()) y = std::max(y, a.y);
    return y;
}

}  // namespace

MuResult spectral_mu(const KreinString& s, double lambda, const MuOptions& opt) {
    if (!(lambda >= 0.0) || std::isinf(lambda)) throw DomainError("spectral_mu: lambda must be finite and nonnegative");
    if (!(opt.tol > 0.0)) throw DomainError("spectral_mu: tol must be positive");

    const double a0 = s.atom_mass_at(0.0);
    if (a0 > 0.0) {
        MuResult r = spectral_mu(s.without_atom_at_zero(), lambda, opt);
        const double shift = lambda * a0;
        r.mu += shift;
        r.bracket_lo += shift;
        r.bracket_hi += shift;
        for (auto& st : r.schedule) {
            st.lo += shift;
            st.hi += shift;
        }
        return r;
    }

    MuResult r;
    r.lambda = lambda;
    const double R = s.length();
    if (lambda == 0.0) {
        const double mu = s.finite_length() ? 1.0 / R : 0.0;
        return finish(r, s.finite_length() ? R : 0.0, mu, mu);
    }

    FundamentalIntegrator it(s, lambda, opt.solver);
    auto stage = [&](double Y) {
        it.advance(Y);
        const auto& st = it.state();
        r.schedule.push_back({Y, st.neumann_ratio(), st.dirichlet_ratio()});
        return r.schedule.back();
    };

    if (s.finite_length()) {
        if (!s.infinite_mass_at_end()) {
            const auto st = stage(R);
            return finish(r, R, st.hi, st.hi);
        }
        // the mass diverges at R: close in geometrically on R
        const double ys = s.pieces().back().l;
        for (int k = 1; k <= opt.max_stages; ++k) {
            const double Y = R - (R - ys) * std::ldexp(1.0, -k);
            if (!(Y > it.state().y) || Y >= R) break;
            const auto st = stage(Y);
            if (narrow_enough(std::min(st.lo, st.hi), std::max(st.lo, st.hi), opt)) return finish(r, Y, st.lo, st.hi);
        }
        const auto& last = r.schedule.back();
        throw ConvergenceError("spectral_mu: bracket did not close before reaching R",
                               finish(r, last.Y, last.lo, last.hi));
    }

    if (const auto end = s.support_end()) {
        // beyond the support φ is affine, so the Neumann ratio is exact there
        const double Y = std::max(1.0, 2.0 * *end);
        const auto st = stage(Y);
        return finish(r, Y, st.lo, st.lo);
    }

    double Y = std::max(1.0, last_finite_feature(s));
    for (int k = 0; k < opt.max_stages; ++k, Y *= 2.0) {
        const auto st = stage(Y);
        if (narrow_enough(st.lo, st.hi, opt)) return finish(r, Y, st.lo, st.hi);
    }
    const auto& last = r.schedule.back();
    throw ConvergenceError("spectral_mu: bracket did not close within the truncation budget",
                           finish(r, last.Y, last.lo, last.hi));
}

MuResult spectral_mu(const KreinString& s, double lambda, double tol) {
    MuOptions opt;
    opt.tol = tol;
    opt.rel_tol = 0.0;
    return spectral_mu(s, lambda, opt);
}

// φ_λ(y) = 1 / (φ_D'(y) + μ_y φ_D(y)), with μ_y the exponent of the string
// cut at y. This is the Wronskian identity W(φ_λ, φ_D) = 1 rearranged, and
// avoids the cancellation in φ_N − μ φ_D once φ_D is large.
double bounded_solution(const KreinString& s, double lambda, double y, const MuOptions& opt) {
    if (std::isnan(y) || y < 0.0 || y > s.length() || std::isinf(y))
        throw DomainError("bounded_solution: y outside [0, R]");
    if (!(lambda >= 0.0) || std::isinf(lambda)) throw DomainError("bounded_solution: lambda must be finite and nonnegative");
    if (y == 0.0) return 1.0;
    if (s.finite_length() && y == s.length()) return 0.0;
    if (lambda == 0.0) return s.finite_length() ? (s.length() - y) / s.length() : 1.0;
    const auto st = integrate_fundamental(s, lambda, y, {}, opt.solver);
    const double mu_y = spectral_mu(s.tail(y), lambda, opt).mu;
    const double v = std::exp(-st.log_scale) / (st.dphiD + mu_y * st.phiD);
    return std::clamp(v, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// tables

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double from_num(const nlohmann::json& j, const char* field) {
    if (j.is_string()) {
        const auto t = j.get<std::string>();
        if (t == "inf") return kInf;
        if (t == "-inf") return -kInf;
    }
    if (!j.is_number()) throw ParseError(field, "expected a number");
    return j.get<double>();
}

}  // namespace

std::string SpectralFunctionTable::to_csv() const {
    std::string out = "lambda,mu,bracket_lo,bracket_hi,truncation_Y\n";
    for (const auto& e : entries) {
        out += fmt17(e.lambda) + "," + fmt17(e.mu) + "," + fmt17(e.bracket_lo) + "," + fmt17(e.bracket_hi) + "," +
               fmt17(e.truncation_Y) + "\n";
    }
    return out;
}

SpectralFunctionTable SpectralFunctionTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "lambda,mu,bracket_lo,bracket_hi,truncation_Y")
        throw ParseError("header", "unexpected spectral table header");
    SpectralFunctionTable t;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        double v[5];
        int n = 0;
        while (std::getline(ls, cell, ',')) {
            if (n >= 5) throw ParseError("row " + std::to_string(row), "too many columns");
            char* end = nullptr;
            v[n] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') throw ParseError("row " + std::to_string(row), "bad number '" + cell + "'");
            ++n;
        }
        if (n != 5) throw ParseError("row " + std::to_string(row), "expected 5 columns");
        t.entries.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    return t;
}

nlohmann::json SpectralFunctionTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries)
        rows.push_back({{"lambda", num(e.lambda)},
                        {"mu", num(e.mu)},
                        {"bracket_lo", num(e.bracket_lo)},
                        {"bracket_hi", num(e.bracket_hi)},
                        {"truncation_Y", num(e.truncation_Y)}});
    return rows;
}

SpectralFunctionTable SpectralFunctionTable::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("table", "expected an array");
    SpectralFunctionTable t;
    for (const auto& row : j) {
        if (!row.is_object()) throw ParseError("table", "expected objects");
        for (const char* k : {"lambda", "mu", "bracket_lo", "bracket_hi", "truncation_Y"})
            if (!row.contains(k)) throw ParseError(k, "missing field");
        t.entries.push_back({from_num(row.at("lambda"), "lambda"), from_num(row.at("mu"), "mu"),
                             from_num(row.at("bracket_lo"), "bracket_lo"), from_num(row.at("bracket_hi"), "bracket_hi"),
                             from_num(row.at("truncation_Y"), "truncation_Y")});
    }
    return t;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw DomainError("log_grid: need 0 < lo <= hi and points >= 1");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i) g[i] = std::exp(a + (b - a) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

SpectralFunctionTable spectral_table(const KreinString& s, const std::vector<double>& lambdas, const MuOptions& opt,
                                     unsigned workers) {
    SpectralFunctionTable t;
    t.entries.resize(lambdas.size());
    parallel_for(lambdas.size(), workers, [&](std::size_t i) {
        const auto r = spectral_mu(s, lambdas[i], opt);
        t.entries[i] = {lambdas[i], r.mu, r.bracket_lo, r.bracket_hi, r.truncation_Y};
    });
    return t;
}

// ---------------------------------------------------------------------------
// complete Bernstein sign pattern

bool CbfReport::all_passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

CbfReport cbf_check(const SpectralFunctionTable& table) {
    auto e = table.entries;
    std::sort(e.begin(), e.end(), [](const SpectralEntry& a, const SpectralEntry& b) { return a.lambda < b.lambda; });
    const std::size_t n = e.size();
    std::vector<double> x(n), f(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = e[i].lambda;
        f[i] = e[i].mu;
        w[i] = 0.5 * std::abs(e[i].bracket_hi - e[i].bracket_lo) + 1e-9 * std::abs(e[i].mu) + 1e-300;
    }

    CbfReport rep;
    auto record = [](PropertyResult& p, double violation, double lambda) {
        if (violation > 0.0 && violation > p.worst_violation) {
            p.passed = false;
            p.worst_violation = violation;
            p.at_lambda = lambda;
        }
    };

    PropertyResult nonneg{"mu_nonnegative"};
    for (std::size_t i = 0; i < n; ++i) record(nonneg, -(f[i] + w[i]), x[i]);
    rep.properties.push_back(nonneg);

    // divided differences of orders 1..3; the budget is the same linear
    // combination applied to the half-widths in absolute value
    const char* names[] = {"first_difference_nonnegative", "second_difference_nonpositive",
                           "third_difference_nonnegative"};
    for (int k = 1; k <= 3; ++k) {
        PropertyResult pr{names[k - 1]};
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            double dd = 0.0, budget = 0.0;
            for (int j = 0; j <= k; ++j) {
                double denom = 1.0;
                for (int l = 0; l <= k; ++l)
                    if (l != j) denom *= x[i + j] - x[i + l];
                dd += f[i + j] / denom;
                budget += w[i + j] / std::abs(denom);
            }
            record(pr, -(sign * dd + budget), x[i]);
        }
        rep.properties.push_back(pr);
    }

    PropertyResult ratio{"mu_over_lambda_nonincreasing"};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(x[i] > 0.0)) continue;
        const double d = f[i + 1] / x[i + 1] - f[i] / x[i];
        record(ratio, d - (w[i] / x[i] + w[i + 1] / x[i + 1]), x[i]);
    }
    rep.properties.push_back(ratio);
    return rep;
}

CbfReport cbf_check(const KreinString& s, const std::vector<double>& lambdas, unsigned workers) {
    if (lambdas.size() < 16) throw DomainError("cbf_check: need at least 16 grid points");
    for (double l : lambdas)
        if (!(l > 0.0)) throw DomainError("cbf_check: grid must be positive");
    MuOptions opt;
    opt.tol = 1e-300;
    opt.rel_tol = 1e-10;
    return cbf_check(spectral_table(s, lambdas, opt, workers));
}

}  // namespace krein
