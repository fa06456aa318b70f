#include <doctest.h>

#include <cmath>
#include <numbers>

#include "krein/errors.hpp"
#include "krein/spectral_dtn.hpp"

using namespace krein;

namespace {

const double pi = std::numbers::pi;

GridFunction gaussian(int d, double L, int N, double shift = 0.0) {
    return GridFunction::sample(d, L, N, [&](const double* x) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) r2 += (x[i] - shift) * (x[i] - shift);
        return std::exp(-r2);
    });
}

GridFunction plane_wave(double L, int N, int mode) {
    const double k = pi * mode / L;
    return GridFunction::sample(1, L, N, [&](const double* x) { return std::cos(k * x[0]); });
}

double rel_l2(const GridFunction& a, const GridFunction& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
        den += b.samples[i] * b.samples[i];
    }
    return std::sqrt(num / den);
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.samples[i] - b.samples[i]));
    return m;
}

GridFunction scaled(const GridFunction& f, double c) {
    GridFunction g = f;
    for (auto& v : g.samples) v *= c;
    return g;
}

}  // namespace

TEST_CASE("grid functions round-trip through CSV and raw bytes") {
    const auto f = gaussian(2, 3.0, 16, 0.3);
    CHECK(GridFunction::from_csv(f.to_csv(), 3.0) == f);
    const auto raw = f.to_raw();
    CHECK(raw.size() == 32 + 8 * 256);
    CHECK(GridFunction::from_raw(raw) == f);
    const auto g = plane_wave(2.0, 64, 3);
    CHECK(GridFunction::from_raw(g.to_raw()) == g);
    CHECK_THROWS_AS(GridFunction::zeros(1, 1.0, 12), DomainError);
    CHECK_THROWS_AS(GridFunction::zeros(3, 1.0, 16), DomainError);
    CHECK_THROWS_AS(GridFunction::from_raw("KTGRID00" + std::string(24, '\0')), ParseError);
}

TEST_CASE("harmonic_extend examples") {
    const double L = 4.0;
    const int mode = 3;
    const double k = pi * mode / L;
    const auto f = plane_wave(L, 64, mode);
    const auto u = harmonic_extend(f, builtin("half_laplacian"), 0.7);
    CHECK(max_abs_diff(u, scaled(f, std::exp(-k * 0.7))) < 1e-9);
    CHECK(harmonic_extend(f, builtin("water_wave"), 0.0) == f);
    CHECK(max_abs_diff(harmonic_extend(f, builtin("zero"), 3.0), f) < 1e-13);
    CHECK_THROWS_AS(harmonic_extend(f, builtin("strip_dirichlet"), 1.5), DomainError);
}

TEST_CASE("harmonic extension contracts and preserves positivity") {
    const auto f = gaussian(1, 10.0, 256, 1.0);
    double fmax = 0.0;
    for (double v : f.samples) fmax = std::max(fmax, v);
    for (const char* name : {"half_laplacian", "water_wave", "atom(1,1)", "quasi_relativistic", "sqrt_shift",
                             "caffarelli_silvestre(0.5)"}) {
        const auto s = builtin_from_spec(name);
        for (double y : {0.1, 0.4, 0.9}) {
            const auto u = harmonic_extend(f, s, y);
            CAPTURE(name);
            CAPTURE(y);
            CHECK(u.l2_norm() <= f.l2_norm() * (1 + 1e-12));
            double umin = 0.0;
            for (double v : u.samples) umin = std::min(umin, v);
            CHECK(umin >= -1e-8 * fmax);
        }
    }
    const auto g2 = gaussian(2, 6.0, 32);
    const auto u2 = harmonic_extend(g2, builtin("half_laplacian"), 0.5);
    CHECK(u2.l2_norm() <= g2.l2_norm());
}

TEST_CASE("dtn_apply examples") {
    const double L = 5.0;
    const int mode = 4;
    const double k = pi * mode / L;
    const auto f = plane_wave(L, 64, mode);
    CHECK(max_abs_diff(dtn_apply(f, builtin("unit_zero")), f) < 1e-13);
    CHECK(max_abs_diff(dtn_apply(f, builtin("half_laplacian")), scaled(f, k)) < 1e-9);
    CHECK(max_abs_diff(dtn_apply(f, builtin_from_spec("atom(1,1)")), scaled(f, k * k / (k * k + 1))) < 1e-9);

    const auto one = GridFunction::sample(1, L, 16, [](const double*) { return 1.0; });
    CHECK(max_abs_diff(dtn_apply(one, builtin("half_laplacian")), scaled(one, 0.0)) < 1e-14);
    CHECK(max_abs_diff(dtn_apply(one, builtin("quasi_relativistic_plus")), scaled(one, 2.0)) < 1e-13);
}

TEST_CASE("the half-Laplacian squares to the negative Laplacian") {
    const auto f = gaussian(1, 20.0, 256);
    const auto s = builtin("half_laplacian");
    const auto kk = dtn_apply(dtn_apply(f, s), s);
    const auto lap = apply_radial_multiplier(f, [](double l) { return l; });
    CHECK(max_abs_diff(kk, lap) < 1e-8);
}

TEST_CASE("fractional Laplacian: multiplier and singular integral agree") {
    const auto f = gaussian(1, 20.0, 1024);
    for (double alpha : {0.5, 1.0, 1.5}) {
        CAPTURE(alpha);
        CHECK(rel_l2(fraclap_pv(f, alpha), fraclap_multiplier(f, alpha)) <= 1e-3);
    }
    // plane wave eigenvalue
    const auto w = plane_wave(20.0, 1024, 20);
    const double k = pi * 20 / 20.0;
    for (double alpha : {0.5, 1.5}) {
        CHECK(rel_l2(fraclap_pv(w, alpha), scaled(w, std::pow(k, alpha))) <= 1e-3);
        CHECK(rel_l2(fraclap_multiplier(w, alpha), scaled(w, std::pow(k, alpha))) <= 1e-12);
    }
    const auto one = GridFunction::sample(1, 3.0, 64, [](const double*) { return 2.5; });
    CHECK(max_abs_diff(fraclap_pv(one, 0.7), scaled(one, 0.0)) < 1e-10);
    CHECK(max_abs_diff(fraclap_multiplier(one, 0.7), scaled(one, 0.0)) < 1e-14);
    CHECK_THROWS_AS(fraclap_pv(one, 2.0), DomainError);
    CHECK_THROWS_AS(fraclap_multiplier(one, 0.0), DomainError);
}

TEST_CASE("fractional Laplacian in two dimensions") {
    const auto f = gaussian(2, 6.0, 64);
    for (double alpha : {0.5, 1.0, 1.5}) {
        CAPTURE(alpha);
        CHECK(rel_l2(fraclap_pv(f, alpha), fraclap_multiplier(f, alpha)) <= 5e-3);
    }
}

TEST_CASE("kernel constants") {
    // c_{1,1} = 1/π for both normalisations at α = 1
    CHECK(fraclap_constant(1, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-14));
    CHECK(poisson_constant(1, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-14));
    CHECK(poisson_constant(2, 1.0) == doctest::Approx(std::tgamma(1.5) / std::pow(pi, 1.5)).epsilon(1e-14));
    for (int d : {1, 2})
        for (double a : {0.5, 1.0, 1.5})
            CHECK(pseudo_dtn_constant(a) == doctest::Approx(poisson_constant(d, a) / fraclap_constant(d, a)).epsilon(1e-13));
    CHECK(pseudo_dtn_constant(1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("the Caffarelli-Silvestre string realises the y^alpha-normalised extension operator") {
    for (double a : {0.5, 1.0, 1.5}) {
        const auto s = builtin("caffarelli_silvestre", std::vector<double>{a});
        CAPTURE(a);
        CHECK(spectral_mu(s, 1.0).mu == doctest::Approx(pseudo_dtn_constant(a)).epsilon(1e-8));
        CHECK(spectral_mu(s, 7.0).mu == doctest::Approx(pseudo_dtn_constant(a) * std::pow(7.0, a / 2)).epsilon(1e-8));
    }
}

TEST_CASE("Poisson kernel examples") {
    const double x0[] = {0.0};
    CHECK(poisson_kernel(1, 1.0, 1.0, x0) == doctest::Approx(1.0 / pi).epsilon(1e-14));
    CHECK_THROWS_AS(poisson_kernel(1, 1.0, 0.0, x0), DomainError);
    for (int d : {1, 2})
        for (double a : {0.5, 1.0, 1.5, 2.0}) {
            CAPTURE(d);
            CAPTURE(a);
            CHECK(std::abs(poisson_integral(d, a, 1.0) - 1.0) <= 1e-10);
            CHECK(std::abs(poisson_integral(d, a, 0.3) - 1.0) <= 1e-10);
        }
    // a finite box loses the heavy tail: for the Cauchy kernel the box mass is (2/π) atan(B/y)
    CHECK(poisson_integral(1, 1.0, 1.0, 200.0) == doctest::Approx(2.0 / pi * std::atan(200.0)).epsilon(1e-12));
    CHECK(poisson_integral(2, 1.0, 1.0, 200.0) < 1.0 - 1e-3);
}

TEST_CASE("Poisson kernel Fourier transform at alpha = 1") {
    const double L = 20.0, y = 1.0;
    const auto F = poisson_fourier(1.0, y, L, 1024, 10);
    for (int k = 0; k < 10; ++k) {
        const double xi = pi * k / L;
        CHECK(std::abs(F[k] - std::exp(-y * xi)) <= 1e-6);
    }
    // periodised Cauchy kernel has a closed form
    for (double x : {-3.0, 0.0, 11.0})
        CHECK(poisson_kernel_periodic(1.0, y, L, x) ==
              doctest::Approx(std::sinh(pi * y / L) / (2 * L * (std::cosh(pi * y / L) - std::cos(pi * x / L))))
                  .epsilon(1e-10));
}

TEST_CASE("Cauchy kernels form a convolution semigroup") {
    const double L = 30.0;
    const int N = 2048;
    const double h = 2 * L / N, y1 = 0.6, y2 = 0.9;
    std::vector<double> p1(N), p2(N), p12(N);
    for (int j = 0; j < N; ++j) {
        const double x = -L + j * h;
        p1[j] = poisson_kernel_periodic(1.0, y1, L, x);
        p2[j] = poisson_kernel_periodic(1.0, y2, L, x);
        p12[j] = poisson_kernel_periodic(1.0, y1 + y2, L, x);
    }
    // x_j - x_m = -L + (j - m + N/2) h on the periodic grid
    double l1 = 0.0;
    for (int j = 0; j < N; ++j) {
        double conv = 0.0;
        for (int m = 0; m < N; ++m) conv += p1[m] * p2[((j - m + N / 2) % N + N) % N] * h;
        l1 += std::abs(conv - p12[j]) * h;
    }
    CHECK(l1 <= 1e-4);
}

TEST_CASE("energy check") {
    const double L = 2.0;
    const auto f = plane_wave(L, 32, 2);
    const double k = pi * 2 / L;
    std::vector<double> grid;
    const double Ymax = std::log(1e4) / k * 2.0;
    auto make_grid = [&](int n) {
        std::vector<double> g(n + 1);
        for (int i = 0; i <= n; ++i) g[i] = Ymax * i / n;
        return g;
    };
    const auto coarse = energy_check(f, builtin("half_laplacian"), make_grid(200));
    const auto fine = energy_check(f, builtin("half_laplacian"), make_grid(400));
    // ∫ f Kf = k ‖f‖² with ‖cos‖² = L over the box
    CHECK(coarse.form_value == doctest::Approx(k * L).epsilon(1e-9));
    CHECK(std::abs(coarse.rel_gap) <= 0.01);
    CHECK(std::abs(fine.rel_gap) <= 0.55 * std::abs(coarse.rel_gap));

    const auto zf = energy_check(plane_wave(L, 32, 1), builtin("zero"), make_grid(10));
    CHECK(zf.form_value == 0.0);
    CHECK(std::abs(zf.extension_energy) < 1e-20);

    // atoms and a Dirichlet end
    const auto wa = energy_check(f, builtin_from_spec("atom(0.3,1)"), make_grid(400));
    CHECK(std::abs(wa.rel_gap) <= 0.01);
    std::vector<double> unit(401);
    for (int i = 0; i <= 400; ++i) unit[i] = i / 400.0;
    CHECK(std::abs(energy_check(f, builtin("strip_dirichlet"), unit).rel_gap) <= 0.01);
}
