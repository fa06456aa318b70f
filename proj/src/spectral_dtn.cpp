#include "krein/spectral_dtn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "krein/errors.hpp"
#include "krein/parallel.hpp"
#include "krein/special_functions.hpp"

namespace krein {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha_open(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0, 2)");
}

// 10-point Gauss-Legendre on [-1, 1]
constexpr double kGLx[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845,
                            0.9739065285171717};
constexpr double kGLw[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
                            0.0666713443086881};

template <class F>
void gauss_nodes(double a, double b, double panel, F&& visit) {
    const int n = std::max(1, int(std::ceil((b - a) / panel)));
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
        const double c = a + (i + 0.5) * h;
        for (int k = 0; k < 5; ++k) {
            visit(c - 0.5 * h * kGLx[k], 0.5 * h * kGLw[k]);
            visit(c + 0.5 * h * kGLx[k], 0.5 * h * kGLw[k]);
        }
    }
}

double centered_second_difference(const std::vector<double>& f, int N, int i) {
    return f[(i + 1) % N] - 2.0 * f[i] + f[(i + N - 1) % N];
}

double centered_fourth_difference(const std::vector<double>& f, int N, int i) {
    return f[(i + 2) % N] - 4.0 * f[(i + 1) % N] + 6.0 * f[i] - 4.0 * f[(i + N - 1) % N] + f[(i + N - 2) % N];
}

}  // namespace

GridFunction harmonic_extend(const GridFunction& f, const KreinString& s, double y, unsigned workers) {
    f.validate();
    if (std::isnan(y) || y < 0.0 || y > s.length() || std::isinf(y))
        throw DomainError("harmonic_extend: y outside [0, R]");
    for (double v : f.samples)
        if (!std::isfinite(v)) throw DomainError("harmonic_extend: non-finite samples");
    if (y == 0.0) return f;
    return apply_radial_multiplier(f, [&](double lambda) { return bounded_solution(s, lambda, y); }, workers);
}

GridFunction dtn_apply(const GridFunction& f, const KreinString& s, unsigned workers) {
    return apply_radial_multiplier(f, [&](double lambda) { return spectral_mu(s, lambda).mu; }, workers);
}

GridFunction fraclap_multiplier(const GridFunction& f, double alpha) {
    check_alpha_open(alpha);
    return apply_radial_multiplier(f, [&](double lambda) { return lambda == 0.0 ? 0.0 : std::pow(lambda, 0.5 * alpha); });
}

double fraclap_constant(int d, double alpha) {
    check_alpha_open(alpha);
    return -std::pow(2.0, alpha) * std::pow(kPi, -0.5 * d) * std::tgamma(0.5 * (d + alpha)) / std::tgamma(-0.5 * alpha);
}

double poisson_constant(int d, double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
    return std::pow(kPi, -0.5 * d) * std::tgamma(0.5 * (d + alpha)) / std::tgamma(0.5 * alpha);
}

double pseudo_dtn_constant(double alpha) {
    check_alpha_open(alpha);
    return std::tgamma(1.0 - 0.5 * alpha) / (std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha));
}

GridFunction fraclap_pv(const GridFunction& f, double alpha) {
    check_alpha_open(alpha);
    f.validate();
    const int N = f.N, d = f.d;
    const double h = f.spacing(), P = 2.0 * f.L;
    const double c = fraclap_constant(d, alpha);
    GridFunction out = GridFunction::zeros(d, f.L, N);
    const auto& v = f.samples;

    if (d == 1) {
        // S_r = Σ_n |r h + n P|^{-1-α}, exact through the Hurwitz zeta function
        const double s = 1.0 + alpha;
        std::vector<double> S(N / 2 + 1, 0.0);
        for (int r = 1; r <= N / 2; ++r) {
            const double q = double(r) / N;
            S[r] = std::pow(P, -s) * (hurwitz_zeta(s, q) + hurwitz_zeta(s, 1.0 - q));
        }
        // trapezoid defects of the x^2 and x^4 Taylor terms
        const double corr = 2.0 * riemann_zeta(alpha - 1.0) * std::pow(h, 2.0 - alpha);
        const double corr4 = riemann_zeta(alpha - 3.0) * std::pow(h, 4.0 - alpha) / 6.0;
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int r = 1; r < N / 2; ++r)
                acc += 2.0 * (2.0 * v[j] - v[(j + r) % N] - v[(j - r + N) % N]) * S[r];
            // r = N/2 is its own mirror image
            acc += (2.0 * v[j] - 2.0 * v[(j + N / 2) % N]) * S[N / 2];
            const double f2 = centered_second_difference(v, N, j) / (h * h);
            const double f4 = centered_fourth_difference(v, N, j) / (h * h * h * h);
            out.samples[j] = 0.5 * c * (h * acc + corr * f2 + corr4 * f4);
        }
        return out;
    }

    // d = 2: images within |n|_∞ ≤ M summed directly, the rest replaced by
    // the integral of |w|^{-2-α} outside the square of half-width (M+½)P.
    const double s = 2.0 + alpha;
    constexpr int M = 16;
    double angular = 0.0;
    gauss_nodes(0.0, kPi / 4, kPi / 4, [&](double t, double w) { angular += w * std::pow(std::cos(t), alpha); });
    const double A = (M + 0.5) * P;
    const double tail = 8.0 * angular * std::pow(A, -alpha) / alpha / (P * P);
    const int H = N / 2;
    std::vector<double> S(std::size_t(H + 1) * (H + 1), 0.0);
    for (int r1 = 0; r1 <= H; ++r1)
        for (int r2 = 0; r2 <= H; ++r2) {
            if (r1 == 0 && r2 == 0) continue;
            const double z1 = r1 * h, z2 = r2 * h;
            double acc = tail;
            for (int n1 = -M; n1 <= M; ++n1)
                for (int n2 = -M; n2 <= M; ++n2) {
                    const double a = z1 + n1 * P, b = z2 + n2 * P;
                    acc += std::pow(a * a + b * b, -0.5 * s);
                }
            S[std::size_t(r1) * (H + 1) + r2] = acc;
        }
    auto weight = [&](int r1, int r2) {
        const int a = std::min(r1, N - r1), b = std::min(r2, N - r2);
        return S[std::size_t(a) * (H + 1) + b];
    };
    const double Z = 4.0 * riemann_zeta(0.5 * alpha) * dirichlet_beta(0.5 * alpha);
    const double corr = Z * std::pow(h, 2.0 - alpha) / 2.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double fx = v[std::size_t(i) * N + j];
            double acc = 0.0;
            for (int r1 = 0; r1 < N; ++r1)
                for (int r2 = 0; r2 < N; ++r2) {
                    if (r1 == 0 && r2 == 0) continue;
                    const double fp = v[std::size_t((i + r1) % N) * N + (j + r2) % N];
                    const double fm = v[std::size_t((i - r1 + N) % N) * N + (j - r2 + N) % N];
                    acc += (2.0 * fx - fp - fm) * weight(r1, r2);
                }
            const double lap = (v[std::size_t((i + 1) % N) * N + j] + v[std::size_t((i + N - 1) % N) * N + j] +
                                v[std::size_t(i) * N + (j + 1) % N] + v[std::size_t(i) * N + (j + N - 1) % N] -
                                4.0 * fx) /
                               (h * h);
            out.samples[std::size_t(i) * N + j] = 0.5 * c * (h * h * acc + corr * lap);
        }
    return out;
}

double poisson_kernel(int d, double alpha, double y, std::span<const double> x) {
    if (d != 1 && d != 2) throw DomainError("poisson_kernel: d must be 1 or 2");
    if (x.size() != std::size_t(d)) throw DomainError("poisson_kernel: point has the wrong dimension");
    if (!(y > 0.0)) throw DomainError("poisson_kernel: y must be positive");
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return poisson_constant(d, alpha) * std::pow(y, alpha) * std::pow(r2 + y * y, -0.5 * (d + alpha));
}

// With x_i = y sinh t_i the integrand becomes c (1 + Σ sinh² t_i)^{-(d+α)/2} Π cosh t_i,
// independent of y and smooth, so Gauss panels converge fast even for the
// slowly decaying α < 1 tails. The whole plane in d = 2 uses the radial form
// 2πc ∫ cosh^{-1-α} t sinh t dt (r = y sinh t) instead of the tensor grid.
double poisson_integral(int d, double alpha, double y, double B) {
    if (d != 1 && d != 2) throw DomainError("poisson_integral: d must be 1 or 2");
    if (!(y > 0.0)) throw DomainError("poisson_integral: y must be positive");
    if (!(B > 0.0)) throw DomainError("poisson_integral: box half-width must be positive");
    const double c = poisson_constant(d, alpha);
    // the marginal tail decays like e^{-α t}
    const double T = std::min(std::isinf(B) ? B : std::asinh(B / y), 40.0 / alpha + 5.0);
    const double e = -0.5 * (d + alpha);
    double sum = 0.0;
    if (d == 2 && std::isinf(B)) {
        gauss_nodes(0.0, T, 0.25, [&](double t, double w) {
            sum += w * std::pow(std::cosh(t), -1.0 - alpha) * std::sinh(t);
        });
        return 2.0 * kPi * c * sum;
    }
    std::vector<double> w, sh2, ch;
    gauss_nodes(-T, T, 0.25, [&](double ti, double wi) {
        w.push_back(wi);
        sh2.push_back(std::sinh(ti) * std::sinh(ti));
        ch.push_back(std::cosh(ti));
    });
    if (d == 1) {
        for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * std::pow(1.0 + sh2[i], e) * ch[i];
    } else {
        for (std::size_t i = 0; i < w.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) row += w[j] * std::pow(1.0 + sh2[i] + sh2[j], e) * ch[j];
            sum += w[i] * ch[i] * row;
        }
    }
    return c * sum;
}

double poisson_kernel_periodic(double alpha, double y, double L, double x) {
    if (!(L > 0.0)) throw DomainError("poisson_kernel_periodic: L must be positive");
    const double P = 2.0 * L;
    constexpr int M = 64;
    const double c = poisson_constant(1, alpha);
    double sum = 0.0;
    for (int n = -M; n <= M; ++n) {
        const double z = x + n * P;
        sum += std::pow(z * z + y * y, -0.5 * (1.0 + alpha));
    }
    // far images: |z|^{-1-α}(1 − (1+α)/2 · y²/z²), summed exactly over n > M and n < −M
    const double q = x / P;
    const double s1 = 1.0 + alpha, s3 = 3.0 + alpha;
    sum += std::pow(P, -s1) * (hurwitz_zeta(s1, M + 1 + q) + hurwitz_zeta(s1, M + 1 - q));
    sum -= 0.5 * s1 * y * y * std::pow(P, -s3) * (hurwitz_zeta(s3, M + 1 + q) + hurwitz_zeta(s3, M + 1 - q));
    return c * std::pow(y, alpha) * sum;
}

std::vector<std::complex<double>> poisson_fourier(double alpha, double y, double L, int N, int modes) {
    GridFunction g = GridFunction::zeros(1, L, N);
    std::vector<double> p(N);
    for (int j = 0; j < N; ++j) p[j] = poisson_kernel_periodic(alpha, y, L, g.coordinate(j));
    std::vector<std::complex<double>> out(modes);
    const double h = g.spacing();
    for (int k = 0; k < modes; ++k) {
        const double xi = kPi * k / L;
        std::complex<double> acc = 0.0;
        for (int j = 0; j < N; ++j) acc += p[j] * std::polar(1.0, -xi * g.coordinate(j));
        out[k] = h * acc;
    }
    return out;
}

EnergyReport energy_check(const GridFunction& f, const KreinString& s, const std::vector<double>& y_grid,
                          unsigned workers) {
    f.validate();
    if (y_grid.size() < 2 || y_grid.front() != 0.0) throw DomainError("energy_check: y_grid must start at 0");
    for (std::size_t i = 1; i < y_grid.size(); ++i)
        if (!(y_grid[i] > y_grid[i - 1])) throw DomainError("energy_check: y_grid must be increasing");
    if (y_grid.back() > s.length()) throw DomainError("energy_check: y_grid exceeds R");

    const auto spec = forward_dft(f);
    const int N = f.N;
    const double w = kPi / f.L;
    const double vol = std::pow(2.0 * f.L, f.d);
    const double norm = 1.0 / double(spec.size());
    double maxc = 0.0;
    for (const auto& z : spec) maxc = std::max(maxc, std::abs(z) * norm);

    // |c_k|² accumulated per distinct |ξ|²; modes with no content are skipped
    std::map<long, double> power;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double a = std::abs(spec[i]) * norm;
        if (a <= 1e-14 * maxc) continue;
        long q;
        if (f.d == 1) {
            const long k = signed_index(int(i), N);
            q = k * k;
        } else {
            const long k1 = signed_index(int(i / N), N), k2 = signed_index(int(i % N), N);
            q = k1 * k1 + k2 * k2;
        }
        power[q] += a * a;
    }
    std::vector<std::pair<long, double>> modes(power.begin(), power.end());

    // interior atoms are evaluated exactly; the absolutely continuous mass of
    // each y-interval uses the trapezoid average of φ²
    std::vector<double> ac_mass(y_grid.size() - 1);
    for (std::size_t i = 0; i + 1 < y_grid.size(); ++i) {
        double m = s.mass_between(y_grid[i], y_grid[i + 1]);
        for (const auto& a : s.atoms())
            if (a.y >= y_grid[i] && a.y < y_grid[i + 1]) m -= a.m;
        ac_mass[i] = std::max(m, 0.0);
    }
    std::vector<Atom> atoms;
    for (const auto& a : s.atoms())
        if (a.y < y_grid.back()) atoms.push_back(a);

    std::vector<double> form(modes.size()), ext(modes.size());
    parallel_for(modes.size(), workers, [&](std::size_t m) {
        const double lambda = w * w * double(modes[m].first);
        const double pw = modes[m].second;
        form[m] = spectral_mu(s, lambda).mu * pw;
        std::vector<double> phi(y_grid.size());
        for (std::size_t i = 0; i < y_grid.size(); ++i) phi[i] = bounded_solution(s, lambda, y_grid[i]);
        double e = 0.0;
        for (std::size_t i = 0; i + 1 < y_grid.size(); ++i) {
            const double dy = y_grid[i + 1] - y_grid[i];
            const double dphi = phi[i + 1] - phi[i];
            e += dphi * dphi / dy + lambda * ac_mass[i] * 0.5 * (phi[i] * phi[i] + phi[i + 1] * phi[i + 1]);
        }
        for (const auto& a : atoms) {
            const double p = bounded_solution(s, lambda, a.y);
            e += lambda * a.m * p * p;
        }
        ext[m] = e * pw;
    });

    EnergyReport r;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        r.form_value += vol * form[m];
        r.extension_energy += vol * ext[m];
    }
    const double gap = r.extension_energy - r.form_value;
    r.rel_gap = r.form_value != 0.0 ? gap / std::abs(r.form_value) : gap;
    return r;
}

}  // namespace krein
