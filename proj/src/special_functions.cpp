#include "krein/special_functions.hpp"

#include <cmath>

#include "krein/errors.hpp"

namespace krein {

namespace {

// B_{2j} / (2j)! for j = 1..10
constexpr double kBernoulliOverFactorial[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
};

}  // namespace

// Euler-Maclaurin summation: direct sum of the first N terms, then the
// integral, half-term and Bernoulli corrections at q + N.
double hurwitz_zeta(double s, double q) {
    if (s == 1.0) throw DomainError("hurwitz_zeta: pole at s = 1");
    if (!(q > 0.0)) throw DomainError("hurwitz_zeta: q must be positive");
    constexpr int N = 24;
    double sum = 0.0;
    for (int k = 0; k < N; ++k) sum += std::pow(q + k, -s);
    const double a = q + N;
    sum += std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s);
    double rising = s;  // s (s+1) ... (s+2j-2)
    double apow = std::pow(a, -s - 1.0);
    for (int j = 0; j < 10; ++j) {
        sum += kBernoulliOverFactorial[j] * rising * apow;
        rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
        apow /= a * a;
    }
    return sum;
}

double riemann_zeta(double s) {
    if (s == 1.0) throw DomainError("riemann_zeta: pole at s = 1");
    return std::riemann_zeta(s);
}

double dirichlet_beta(double s) {
    return std::pow(4.0, -s) * (hurwitz_zeta(s, 0.25) - hurwitz_zeta(s, 0.75));
}

}  // namespace krein
