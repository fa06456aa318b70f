#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace krein {

// One term c * (b + e*y)^p of a density piece. A constant density is the term
// (c, 1, 0, 0).
struct PowerTerm {
    double c = 0.0;
    double b = 1.0;
    double e = 0.0;
    double p = 0.0;

    double base(double y) const { return b + e * y; }
    double value(double y) const;

    friend bool operator==(const PowerTerm&, const PowerTerm&) = default;
};

// Closed-form integral of a single term over [u, v]. `v` may be +inf.
double term_integral(const PowerTerm& t, double u, double v);
// Closed-form integral of (y - (u+v)/2) * term over [u, v] (finite v).
double term_midpoint_moment(const PowerTerm& t, double u, double v);

enum class FormKind { constant, power, sum };

// Density on [l, r): a constant, a single power term, or a finite sum of
// power terms. Sums keep every catalog density in closed form, e.g.
// (1 - y^2)^-2 = 1/4 [(1-y)^-2 + (1+y)^-2 + (1-y)^-1 + (1+y)^-1].
struct DensityPiece {
    double l = 0.0;
    double r = 0.0;
    FormKind kind = FormKind::constant;
    std::vector<PowerTerm> terms;

    static DensityPiece constant(double l, double r, double c);
    static DensityPiece power(double l, double r, double c, double b, double e, double p);
    static DensityPiece sum(double l, double r, std::vector<PowerTerm> terms);

    double value(double y) const;
    // Integrals over [u, v], which the caller keeps inside [l, r].
    double mass(double u, double v) const;
    double midpoint_moment(double u, double v) const;

    friend bool operator==(const DensityPiece&, const DensityPiece&) = default;
};

struct Atom {
    double y = 0.0;
    double m = 0.0;
    friend bool operator==(const Atom&, const Atom&) = default;
};

enum class RightBoundary { natural, dirichlet };

// Mass distribution a(dy) on [0, R): density pieces plus atoms. Immutable
// after construction; the constructor validates every invariant and throws
// ValidationError otherwise.
class KreinString {
public:
    KreinString(double R, std::vector<DensityPiece> pieces, std::vector<Atom> atoms,
                RightBoundary boundary, std::string label = {});

    double length() const { return R_; }
    bool finite_length() const;
    RightBoundary right_boundary() const { return boundary_; }
    const std::vector<DensityPiece>& pieces() const { return pieces_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::string& label() const { return label_; }

    // Density of the absolutely continuous part (0 in gaps; +inf at an
    // integrable endpoint singularity).
    double density(double y) const;
    // a([0, y)): atoms strictly below y are included, an atom at y is not.
    double cumulative_mass(double y) const;
    // a([u, v)).
    double mass_between(double u, double v) const;
    double atom_mass_at(double y) const;

    // Supremum of the support, or nullopt when the support is unbounded.
    std::optional<double> support_end() const;
    // True when the density mass diverges at the finite right end R.
    bool infinite_mass_at_end() const;

    // The string restricted to [y, R) and shifted to start at 0. An atom at y
    // becomes an atom at 0.
    KreinString tail(double y) const;
    KreinString without_atom_at_zero() const;

    // Structural equality; the label is ignored.
    bool same_measure(const KreinString& other) const;
    friend bool operator==(const KreinString&, const KreinString&) = default;

private:
    double R_;
    std::vector<DensityPiece> pieces_;
    std::vector<Atom> atoms_;
    RightBoundary boundary_;
    std::string label_;
};

KreinString build_string(const nlohmann::json& spec);
KreinString parse_string(std::string_view text);
nlohmann::json to_json(const KreinString& s);
std::string serialize(const KreinString& s);

// Catalog lookup. `params` are positional: atom(y0, m), caffarelli_silvestre(alpha).
KreinString builtin(std::string_view name, std::span<const double> params = {});
// Accepts "name" or "name(p1,p2,...)".
KreinString builtin_from_spec(std::string_view spec);
const std::vector<std::string>& builtin_names();

}  // namespace krein
