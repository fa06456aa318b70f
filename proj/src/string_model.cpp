#include "krein/string_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "krein/errors.hpp"

namespace krein {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integral of c * B^q over [u, v] with B = b + e*y, e != 0, B >= 0 on [u, v].
double power_antiderivative_diff(double c, double b, double e, double q, double u, double v) {
    if (c == 0.0) return 0.0;
    const double bu = b + e * u;
    const double qp1 = q + 1.0;
    if (bu > 0.0) {
        const double x = std::isinf(v) ? (e > 0 ? kInf : -1.0) : e * (v - u) / bu;
        const double lx = std::log1p(std::max(x, -1.0));
        if (qp1 == 0.0) return c * lx / e;
        return c * std::pow(bu, qp1) * std::expm1(qp1 * lx) / (e * qp1);
    }
    // Singular start: B(u) = 0, only integrable when q > -1.
    if (qp1 <= 0.0) return kInf;
    const double bv = std::isinf(v) ? kInf : b + e * v;
    return c * std::pow(bv, qp1) / (e * qp1);
}

const std::set<std::string>& keys_of(const nlohmann::json& j) {
    static thread_local std::set<std::string> out;
    out.clear();
    for (auto it = j.begin(); it != j.end(); ++it) out.insert(it.key());
    return out;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!j.is_object()) throw ParseError(where, "expected an object");
    for (const auto& k : keys_of(j)) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ParseError(where + "." + k, "unknown field");
    }
}

double number_or_inf(const nlohmann::json& j, const std::string& field) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInf;
        throw ParseError(field, "expected a number or \"inf\"");
    }
    if (!j.is_number()) throw ParseError(field, "expected a number");
    return j.get<double>();
}

double required_number(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(where + "." + key, "missing field");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParseError(where + "." + key, "expected a number");
    return v.get<double>();
}

nlohmann::json number_to_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

void validate_term(const PowerTerm& t, double l, double r, double R, const std::string& where) {
    if (!std::isfinite(t.c) || !std::isfinite(t.b) || !std::isfinite(t.e) || !std::isfinite(t.p))
        throw ValidationError(where + ": non-finite coefficient");
    if (t.c < 0.0) throw ValidationError(where + ": negative density coefficient c");
    if (t.e == 0.0 && t.b == 0.0 && t.p <= 0.0)
        throw ValidationError(where + ": base identically zero with non-positive exponent");
    const double bl = t.base(l);
    if (bl < 0.0) throw ValidationError(where + ": negative base at left end");
    if (std::isinf(r)) {
        if (t.e < 0.0) throw ValidationError(where + ": base turns negative on an infinite piece");
    } else if (t.base(r) < 0.0) {
        throw ValidationError(where + ": negative base at right end");
    }
    if (t.e == 0.0) return;
    if (bl == 0.0 && t.p <= -1.0) throw ValidationError(where + ": non-integrable singularity at left end");
    if (!std::isinf(r) && t.base(r) == 0.0 && t.p <= -1.0 && r < R)
        throw ValidationError(where + ": non-integrable singularity inside the string");
}

}  // namespace

double PowerTerm::value(double y) const {
    if (c == 0.0) return 0.0;
    if (p == 0.0) return c;
    const double bb = base(y);
    if (bb == 0.0) return p > 0.0 ? 0.0 : kInf;
    return c * std::pow(bb, p);
}

double term_integral(const PowerTerm& t, double u, double v) {
    if (v <= u || t.c == 0.0) return 0.0;
    if (t.e == 0.0 || t.p == 0.0) {
        const double val = t.p == 0.0 ? t.c : t.c * std::pow(t.b, t.p);
        return val * (v - u);
    }
    return power_antiderivative_diff(t.c, t.b, t.e, t.p, u, v);
}

double term_midpoint_moment(const PowerTerm& t, double u, double v) {
    if (v <= u || t.c == 0.0 || t.e == 0.0 || t.p == 0.0) return 0.0;
    const double h = v - u;
    const double bm = t.base(0.5 * (u + v));
    const double x = t.e * h / (2.0 * bm);
    if (bm > 0.0 && std::abs(x) < 1e-2) {
        // odd terms of the binomial series of (1 + e*tau/bm)^p against tau
        const double p = t.p;
        const double c1 = p;
        const double c3 = p * (p - 1) * (p - 2) / 6.0;
        const double c5 = c3 * (p - 3) * (p - 4) / 20.0;
        const double x2 = x * x;
        const double series = x * (c1 / 3.0 + x2 * (c3 / 5.0 + x2 * c5 / 7.0));
        return t.c * std::pow(bm, p) * 0.5 * h * h * series;
    }
    const double i_next = power_antiderivative_diff(t.c, t.b, t.e, t.p + 1.0, u, v);
    const double i_this = power_antiderivative_diff(t.c, t.b, t.e, t.p, u, v);
    return (i_next - bm * i_this) / t.e;
}

DensityPiece DensityPiece::constant(double l, double r, double c) {
    return DensityPiece{l, r, FormKind::constant, {PowerTerm{c, 1.0, 0.0, 0.0}}};
}

DensityPiece DensityPiece::power(double l, double r, double c, double b, double e, double p) {
    return DensityPiece{l, r, FormKind::power, {PowerTerm{c, b, e, p}}};
}

DensityPiece DensityPiece::sum(double l, double r, std::vector<PowerTerm> terms) {
    return DensityPiece{l, r, FormKind::sum, std::move(terms)};
}

double DensityPiece::value(double y) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.value(y);
    return v;
}

double DensityPiece::mass(double u, double v) const {
    double m = 0.0;
    for (const auto& t : terms) m += term_integral(t, u, v);
    return m;
}

double DensityPiece::midpoint_moment(double u, double v) const {
    double m = 0.0;
    for (const auto& t : terms) m += term_midpoint_moment(t, u, v);
    return m;
}

KreinString::KreinString(double R, std::vector<DensityPiece> pieces, std::vector<Atom> atoms,
                         RightBoundary boundary, std::string label)
    : R_(R), pieces_(std::move(pieces)), atoms_(std::move(atoms)), boundary_(boundary),
      label_(std::move(label)) {
    if (std::isnan(R_) || R_ <= 0.0) throw ValidationError("R must be positive");
    if (boundary_ == RightBoundary::dirichlet && std::isinf(R_))
        throw ValidationError("dirichlet right boundary requires finite R");
    if (boundary_ == RightBoundary::natural && !std::isinf(R_))
        throw ValidationError("natural right boundary requires R = inf");

    double prev_r = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& pc = pieces_[i];
        const std::string where = "pieces[" + std::to_string(i) + "]";
        if (!std::isfinite(pc.l) || std::isnan(pc.r)) throw ValidationError(where + ": bad interval");
        if (pc.l < 0.0 || pc.r <= pc.l || pc.r > R_) throw ValidationError(where + ": interval outside [0, R)");
        if (pc.l < prev_r) throw ValidationError(where + ": pieces overlap or are unsorted");
        if (pc.terms.empty()) throw ValidationError(where + ": empty form");
        if (pc.kind != FormKind::sum && pc.terms.size() != 1)
            throw ValidationError(where + ": single-term form with several terms");
        for (std::size_t k = 0; k < pc.terms.size(); ++k)
            validate_term(pc.terms[k], pc.l, pc.r, R_, where + ".terms[" + std::to_string(k) + "]");
        prev_r = pc.r;
    }

    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const auto& a = atoms_[i];
        const std::string where = "atoms[" + std::to_string(i) + "]";
        if (!std::isfinite(a.y) || !std::isfinite(a.m)) throw ValidationError(where + ": non-finite atom");
        if (a.m <= 0.0) throw ValidationError(where + ": atom mass must be positive");
        if (a.y < 0.0 || a.y >= R_) throw ValidationError(where + ": atom outside [0, R)");
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.y < b.y; });
    for (std::size_t i = 1; i < atoms_.size(); ++i)
        if (atoms_[i].y == atoms_[i - 1].y) throw ValidationError("duplicate atom location");
}

bool KreinString::finite_length() const { return std::isfinite(R_); }

double KreinString::density(double y) const {
    for (const auto& pc : pieces_)
        if (y >= pc.l && y < pc.r) return pc.value(y);
    return 0.0;
}

double KreinString::mass_between(double u, double v) const {
    double m = 0.0;
    for (const auto& pc : pieces_) {
        const double lo = std::max(u, pc.l);
        const double hi = std::min(v, pc.r);
        if (hi > lo) m += pc.mass(lo, hi);
    }
    for (const auto& a : atoms_)
        if (a.y >= u && a.y < v) m += a.m;
    return m;
}

double KreinString::cumulative_mass(double y) const {
    if (std::isnan(y) || y < 0.0 || y > R_) throw DomainError("cumulative_mass: y outside [0, R]");
    return mass_between(0.0, y);
}

double KreinString::atom_mass_at(double y) const {
    for (const auto& a : atoms_)
        if (a.y == y) return a.m;
    return 0.0;
}

std::optional<double> KreinString::support_end() const {
    double end = 0.0;
    for (const auto& pc : pieces_) {
        if (std::isinf(pc.r)) return std::nullopt;
        end = std::max(end, pc.r);
    }
    for (const auto& a : atoms_) end = std::max(end, a.y);
    return end;
}

bool KreinString::infinite_mass_at_end() const {
    if (!finite_length() || pieces_.empty()) return false;
    const auto& last = pieces_.back();
    if (last.r != R_) return false;
    for (const auto& t : last.terms)
        if (t.c > 0.0 && t.e != 0.0 && t.base(R_) == 0.0 && t.p <= -1.0) return true;
    return false;
}

KreinString KreinString::tail(double y) const {
    if (std::isnan(y) || y < 0.0 || y >= R_) throw DomainError("tail: y outside [0, R)");
    std::vector<DensityPiece> pieces;
    for (const auto& pc : pieces_) {
        if (pc.r <= y) continue;
        DensityPiece q = pc;
        q.l = std::max(pc.l, y) - y;
        q.r = pc.r - y;
        for (auto& t : q.terms) t.b = t.b + t.e * y;
        pieces.push_back(std::move(q));
    }
    std::vector<Atom> atoms;
    for (const auto& a : atoms_)
        if (a.y >= y) atoms.push_back({a.y - y, a.m});
    return KreinString(R_ - y, std::move(pieces), std::move(atoms), boundary_, label_);
}

KreinString KreinString::without_atom_at_zero() const {
    std::vector<Atom> atoms;
    for (const auto& a : atoms_)
        if (a.y != 0.0) atoms.push_back(a);
    return KreinString(R_, pieces_, std::move(atoms), boundary_, label_);
}

bool KreinString::same_measure(const KreinString& o) const {
    return R_ == o.R_ && boundary_ == o.boundary_ && pieces_ == o.pieces_ && atoms_ == o.atoms_;
}

// ---------------------------------------------------------------------------
// structured text

namespace {

PowerTerm parse_term(const nlohmann::json& j, const std::string& where) {
    reject_unknown(j, {"c", "b", "e", "p"}, where);
    return PowerTerm{required_number(j, "c", where), required_number(j, "b", where),
                     required_number(j, "e", where), required_number(j, "p", where)};
}

DensityPiece parse_piece(const nlohmann::json& j, const std::string& where) {
    reject_unknown(j, {"l", "r", "form"}, where);
    if (!j.contains("l")) throw ParseError(where + ".l", "missing field");
    if (!j.contains("r")) throw ParseError(where + ".r", "missing field");
    if (!j.contains("form")) throw ParseError(where + ".form", "missing field");
    const double l = number_or_inf(j.at("l"), where + ".l");
    const double r = number_or_inf(j.at("r"), where + ".r");
    const auto& f = j.at("form");
    const std::string fw = where + ".form";
    if (!f.is_object() || !f.contains("kind") || !f.at("kind").is_string())
        throw ParseError(fw + ".kind", "missing or non-string kind");
    const auto kind = f.at("kind").get<std::string>();
    if (kind == "const") {
        reject_unknown(f, {"kind", "c"}, fw);
        return DensityPiece::constant(l, r, required_number(f, "c", fw));
    }
    if (kind == "power") {
        reject_unknown(f, {"kind", "c", "b", "e", "p"}, fw);
        return DensityPiece::power(l, r, required_number(f, "c", fw), required_number(f, "b", fw),
                                   required_number(f, "e", fw), required_number(f, "p", fw));
    }
    if (kind == "sum") {
        reject_unknown(f, {"kind", "terms"}, fw);
        if (!f.contains("terms") || !f.at("terms").is_array())
            throw ParseError(fw + ".terms", "expected an array");
        std::vector<PowerTerm> terms;
        for (std::size_t k = 0; k < f.at("terms").size(); ++k)
            terms.push_back(parse_term(f.at("terms")[k], fw + ".terms[" + std::to_string(k) + "]"));
        return DensityPiece::sum(l, r, std::move(terms));
    }
    throw ParseError(fw + ".kind", "unknown kind '" + kind + "'");
}

}  // namespace

KreinString build_string(const nlohmann::json& spec) {
    reject_unknown(spec, {"R", "right_boundary", "pieces", "atoms", "label"}, "string");
    if (!spec.contains("R")) throw ParseError("R", "missing field");
    const double R = number_or_inf(spec.at("R"), "R");

    RightBoundary boundary = std::isinf(R) ? RightBoundary::natural : RightBoundary::dirichlet;
    if (spec.contains("right_boundary")) {
        const auto& rb = spec.at("right_boundary");
        if (!rb.is_string()) throw ParseError("right_boundary", "expected a string");
        const auto v = rb.get<std::string>();
        if (v == "natural") boundary = RightBoundary::natural;
        else if (v == "dirichlet") boundary = RightBoundary::dirichlet;
        else throw ParseError("right_boundary", "expected \"natural\" or \"dirichlet\"");
    }

    std::vector<DensityPiece> pieces;
    if (spec.contains("pieces")) {
        const auto& arr = spec.at("pieces");
        if (!arr.is_array()) throw ParseError("pieces", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            pieces.push_back(parse_piece(arr[i], "pieces[" + std::to_string(i) + "]"));
    }
    std::vector<Atom> atoms;
    if (spec.contains("atoms")) {
        const auto& arr = spec.at("atoms");
        if (!arr.is_array()) throw ParseError("atoms", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = "atoms[" + std::to_string(i) + "]";
            reject_unknown(arr[i], {"y", "m"}, where);
            atoms.push_back({required_number(arr[i], "y", where), required_number(arr[i], "m", where)});
        }
    }
    std::string label;
    if (spec.contains("label")) {
        if (!spec.at("label").is_string()) throw ParseError("label", "expected a string");
        label = spec.at("label").get<std::string>();
    }
    return KreinString(R, std::move(pieces), std::move(atoms), boundary, std::move(label));
}

KreinString parse_string(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("<document>", e.what());
    }
    return build_string(j);
}

nlohmann::json to_json(const KreinString& s) {
    nlohmann::json j;
    j["R"] = number_to_json(s.length());
    j["right_boundary"] = s.right_boundary() == RightBoundary::natural ? "natural" : "dirichlet";
    j["pieces"] = nlohmann::json::array();
    for (const auto& pc : s.pieces()) {
        nlohmann::json form;
        switch (pc.kind) {
        case FormKind::constant:
            form = {{"kind", "const"}, {"c", pc.terms[0].c}};
            break;
        case FormKind::power: {
            const auto& t = pc.terms[0];
            form = {{"kind", "power"}, {"c", t.c}, {"b", t.b}, {"e", t.e}, {"p", t.p}};
            break;
        }
        case FormKind::sum: {
            form = {{"kind", "sum"}, {"terms", nlohmann::json::array()}};
            for (const auto& t : pc.terms)
                form["terms"].push_back({{"c", t.c}, {"b", t.b}, {"e", t.e}, {"p", t.p}});
            break;
        }
        }
        j["pieces"].push_back({{"l", pc.l}, {"r", number_to_json(pc.r)}, {"form", form}});
    }
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : s.atoms()) j["atoms"].push_back({{"y", a.y}, {"m", a.m}});
    j["label"] = s.label();
    return j;
}

std::string serialize(const KreinString& s) { return to_json(s).dump(2); }

// ---------------------------------------------------------------------------
// catalog

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {
        "half_laplacian", "water_wave", "strip_dirichlet", "zero", "unit_zero", "atom",
        "quasi_relativistic", "quasi_relativistic_plus", "sqrt_shift", "caffarelli_silvestre"};
    return names;
}

namespace {

std::string fmt_param(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

KreinString builtin(std::string_view name, std::span<const double> params) {
    const auto nat = RightBoundary::natural;
    const auto dir = RightBoundary::dirichlet;
    auto no_params = [&] {
        if (!params.empty()) throw DomainError(std::string(name) + " takes no parameters");
    };
    if (name == "half_laplacian") {
        no_params();
        return KreinString(kInf, {DensityPiece::constant(0, kInf, 1.0)}, {}, nat, "half_laplacian");
    }
    if (name == "water_wave") {
        no_params();
        return KreinString(kInf, {DensityPiece::constant(0, 1, 1.0)}, {}, nat, "water_wave");
    }
    if (name == "strip_dirichlet") {
        no_params();
        return KreinString(1.0, {DensityPiece::constant(0, 1, 1.0)}, {}, dir, "strip_dirichlet");
    }
    if (name == "zero") {
        no_params();
        return KreinString(kInf, {}, {}, nat, "zero");
    }
    if (name == "unit_zero") {
        no_params();
        return KreinString(1.0, {}, {}, dir, "unit_zero");
    }
    if (name == "atom") {
        if (params.size() > 2) throw DomainError("atom takes (y0, m)");
        const double y0 = params.size() > 0 ? params[0] : 1.0;
        const double m = params.size() > 1 ? params[1] : 1.0;
        return KreinString(kInf, {}, {{y0, m}}, nat, "atom(" + fmt_param(y0) + "," + fmt_param(m) + ")");
    }
    if (name == "quasi_relativistic") {
        no_params();
        return KreinString(kInf, {DensityPiece::power(0, kInf, 1.0, 1.0, 2.0, -2.0)}, {}, nat,
                           "quasi_relativistic");
    }
    if (name == "quasi_relativistic_plus") {
        no_params();
        return KreinString(0.5, {DensityPiece::power(0, 0.5, 1.0, 1.0, -2.0, -2.0)}, {}, dir,
                           "quasi_relativistic_plus");
    }
    if (name == "sqrt_shift") {
        no_params();
        std::vector<PowerTerm> terms = {{0.25, 1.0, -1.0, -2.0},
                                        {0.25, 1.0, 1.0, -2.0},
                                        {0.25, 1.0, -1.0, -1.0},
                                        {0.25, 1.0, 1.0, -1.0}};
        return KreinString(1.0, {DensityPiece::sum(0, 1, std::move(terms))}, {}, dir, "sqrt_shift");
    }
    if (name == "caffarelli_silvestre") {
        if (params.size() != 1) throw DomainError("caffarelli_silvestre takes (alpha)");
        const double alpha = params[0];
        if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("caffarelli_silvestre: alpha outside (0, 2)");
        const std::string label = "caffarelli_silvestre(" + fmt_param(alpha) + ")";
        const double p = 2.0 / alpha - 2.0;
        if (p == 0.0)
            return KreinString(kInf, {DensityPiece::constant(0, kInf, 1.0 / (alpha * alpha))}, {}, nat, label);
        return KreinString(kInf, {DensityPiece::power(0, kInf, 1.0 / (alpha * alpha), 0.0, 1.0, p)}, {}, nat,
                           label);
    }
    throw DomainError("unknown builtin string '" + std::string(name) + "'");
}

KreinString builtin_from_spec(std::string_view spec) {
    const auto open = spec.find('(');
    if (open == std::string_view::npos) return builtin(spec);
    if (spec.back() != ')') throw ParseError("builtin", "unbalanced parentheses in '" + std::string(spec) + "'");
    const auto name = spec.substr(0, open);
    std::string inner(spec.substr(open + 1, spec.size() - open - 2));
    std::vector<double> params;
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            params.push_back(std::stod(tok, &pos));
            if (tok.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("builtin", "bad parameter '" + tok + "'");
        }
    }
    return builtin(name, params);
}

}  // namespace krein
