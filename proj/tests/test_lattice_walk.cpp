#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "krein/errors.hpp"
#include "krein/lattice_walk.hpp"

using namespace krein;

namespace {

const double pi = std::numbers::pi;

std::vector<std::vector<double>> xi_grid(int d) {
    std::vector<std::vector<double>> g;
    for (double t : {0.0, 0.5, 1.0, 2.0, pi}) {
        if (d == 1) g.push_back({t});
        else g.push_back({t, 0.5 * t});
    }
    return g;
}

}  // namespace

TEST_CASE("step characteristic function examples") {
    const double zero = 0.0, half_turn = pi;
    CHECK(std::abs(step_cf_oracle(1, std::span(&zero, 1)) - 1.0) < 1e-15);
    // sum_n (1/2)(-1/2)^n
    CHECK(std::abs(step_cf_oracle(1, std::span(&half_turn, 1)) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(step_cf_enumerated(1, std::span(&half_turn, 1), 20) - 1.0 / 3.0) < std::pow(0.5, 21));
    for (int d : {1, 2})
        for (double t = -pi; t <= pi; t += 0.1) {
            const std::vector<double> xi(std::size_t(d), t);
            CHECK(std::abs(step_cf_oracle(d, xi)) <= 1.0 + 1e-15);
        }
}

TEST_CASE("brute-force enumeration fixes the step characteristic function numerator at 1") {
    struct Case {
        int d, depth;
    };
    for (const auto& c : {Case{1, 20}, Case{2, 10}}) {
        const double bound = std::pow(double(c.d) / (c.d + 1), c.depth + 1);
        for (const auto& xi : xi_grid(c.d)) {
            const auto brute = step_cf_enumerated(c.d, xi, c.depth);
            const auto closed = step_cf_oracle(c.d, xi);
            CHECK(std::abs(brute - closed) <= bound);
            // the alternative numerator (d+1)^2 disagrees with the enumeration
            const double sq = double(c.d + 1) * (c.d + 1);
            CHECK(std::abs(brute - sq * closed) > 0.1);
        }
    }
}

TEST_CASE("closed-form trace characteristic function") {
    for (int d : {1, 2}) {
        const std::vector<double> zero(std::size_t(d), 0.0);
        for (int j = 0; j < 6; ++j) CHECK(std::abs(trace_cf_closed_form(d, zero, j) - 1.0) < 1e-15);
        for (double t = -pi; t <= pi; t += 0.05) {
            std::vector<double> xi(std::size_t(d), t);
            if (d == 2) xi[1] = 0.3 * t;
            const auto phi = step_cf_oracle(d, xi);
            const auto f1 = trace_cf_closed_form(d, xi, 1);
            double prev = 1.0;
            for (int j = 1; j < 8; ++j) {
                const auto fj = trace_cf_closed_form(d, xi, j);
                CHECK(std::abs(fj - std::pow(f1, j)) <= 1e-13);
                const auto res = fj - 0.5 * phi * (trace_cf_closed_form(d, xi, j + 1) + trace_cf_closed_form(d, xi, j - 1));
                CHECK(std::abs(res) <= 1e-12);
                CHECK(fj.real() >= 0.0);
                CHECK(fj.real() <= prev + 1e-15);
                prev = fj.real();
            }
        }
    }
}

TEST_CASE("simulated walk trace matches the closed form") {
    WalkConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 200000;
    cfg.seed = 5;
    for (int d : {1, 2}) {
        cfg.d = d;
        for (int j : {1, 2}) {
            const auto batch = simulate_walk_batch(cfg, j);
            for (const auto& xi : xi_grid(d)) {
                const auto e = walk_cf_from_batch(batch, xi);
                CAPTURE(d);
                CAPTURE(j);
                CAPTURE(xi[0]);
                CHECK(std::abs(e.real.value - trace_cf_closed_form(d, xi, j).real()) <= 3 * e.real.stderr_ + 0.01);
                CHECK(std::abs(e.imag) <= 3 * e.imag_stderr + 1e-12);
            }
        }
    }
    cfg.d = 1;
    const double one = 1.0;
    const auto z = simulate_trace(cfg, std::span(&one, 1), 0);
    CHECK(z.real.value == 1.0);
    CHECK(z.real.stderr_ == 0.0);
    cfg.workers = 3;
    cfg.n_paths = 2000;
    const auto a = simulate_walk_batch(cfg, 2);
    cfg.workers = 1;
    CHECK(simulate_walk_batch(cfg, 2).X == a.X);
    CHECK_THROWS_AS(simulate_walk_batch(cfg, -1), DomainError);
    const double two[] = {1.0, 2.0};
    CHECK_THROWS_AS(step_cf_oracle(1, two), DomainError);
}
