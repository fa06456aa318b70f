#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "krein/errors.hpp"
#include "krein/string_model.hpp"

namespace krein {

// Fundamental solutions of φ'' = λ a φ at position y.
//
// phiD/dphiD/phiN/dphiN are the four values jointly divided by
// exp(log_scale). Internally the Neumann solution is carried as
// φ_N = rho·φ_D + ψ with ψ kept in its own scale (log_scale_psi); ψ is the
// recessive part, which is what keeps the Wronskian and the truncation bracket
// accurate once φ_D has grown by many orders of magnitude. The four
// jointly-scaled values are derived from that representation.
struct FundamentalState {
    double y = 0.0;
    double phiD = 0.0, dphiD = 1.0;
    double phiN = 1.0, dphiN = 0.0;
    double log_scale = 0.0;

    double rho = 0.0;
    double psi = 1.0, dpsi = 0.0;
    double log_scale_psi = 0.0;

    // φ_D φ_N' − φ_N φ_D' in true (unscaled) units; −1 for an exact solve.
    double wronskian() const;
    // φ_N(y)/φ_D(y) and φ_N'(y)/φ_D'(y), accurate to the size of ψ.
    double dirichlet_ratio() const;
    double neumann_ratio() const;
};

struct SolverOptions {
    double rel_tol = 1e-10;
    long max_steps = 20'000'000;
};

using StepObserver = std::function<void(const FundamentalState&)>;

// Incremental integrator; advance() may be called with increasing targets.
// Atoms at 0 < y < target are applied; an atom at 0 never is.
class FundamentalIntegrator {
public:
    FundamentalIntegrator(const KreinString& s, double lambda, SolverOptions opt = {});
    void advance(double y_target, const StepObserver& observer = {});
    const FundamentalState& state() const { return st_; }
    long steps() const { return steps_; }

private:
    void sync();
    void propagate(double m00, double m01, double m10, double m11);
    void apply_atom(double m);
    void advance_piece(const DensityPiece& pc, double b, const StepObserver& observer);
    void affine(double h);

    const KreinString& s_;
    double lambda_;
    SolverOptions opt_;
    FundamentalState st_;
    // scaled φ_D pair and ψ pair
    double d_ = 0.0, dd_ = 1.0, ld_ = 0.0;
    double p_ = 1.0, dp_ = 0.0, lp_ = 0.0;
    double rho_ = 0.0;
    double h_hint_ = 0.0;
    std::size_t next_atom_ = 0;
    long steps_ = 0;
};

FundamentalState integrate_fundamental(const KreinString& s, double lambda, double y_target,
                                       const StepObserver& observer = {}, SolverOptions opt = {});

struct MuResult {
    double lambda = 0.0;
    double mu = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double truncation_Y = 0.0;
    // (Y, lo, hi) at every truncation visited.
    struct Stage {
        double Y, lo, hi;
    };
    std::vector<Stage> schedule;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, MuResult last) : Error(what), last_(std::move(last)) {}
    const MuResult& last() const noexcept { return last_; }

private:
    MuResult last_;
};

struct MuOptions {
    double tol = 1e-12;      // absolute bracket width
    double rel_tol = 1e-9;   // bracket width relative to |mu|; either test suffices
    int max_stages = 200;
    SolverOptions solver{};
};

MuResult spectral_mu(const KreinString& s, double lambda, const MuOptions& opt = {});
MuResult spectral_mu(const KreinString& s, double lambda, double tol);

// Bounded solution φ_λ(y) with φ_λ(0) = 1.
double bounded_solution(const KreinString& s, double lambda, double y, const MuOptions& opt = {});

struct SpectralEntry {
    double lambda, mu, bracket_lo, bracket_hi, truncation_Y;
};

struct SpectralFunctionTable {
    std::vector<SpectralEntry> entries;

    std::string to_csv() const;
    static SpectralFunctionTable from_csv(const std::string& text);
    nlohmann::json to_json() const;
    static SpectralFunctionTable from_json(const nlohmann::json& j);
};

std::vector<double> log_grid(double lo, double hi, int points);

SpectralFunctionTable spectral_table(const KreinString& s, const std::vector<double>& lambdas,
                                     const MuOptions& opt = {}, unsigned workers = 1);

struct PropertyResult {
    std::string property;
    bool passed = true;
    double worst_violation = 0.0;  // 0 when passed
    double at_lambda = 0.0;
};

struct CbfReport {
    std::vector<PropertyResult> properties;
    bool all_passed() const;
};

CbfReport cbf_check(const SpectralFunctionTable& table);
CbfReport cbf_check(const KreinString& s, const std::vector<double>& lambdas, unsigned workers = 1);

}  // namespace krein
