#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace krein {

// Samples of a real function on the periodic box [-L, L)^d, d in {1, 2}.
// x_j = -L + j * 2L/N per axis; 2-D samples are row-major (axis 0 slowest).
struct GridFunction {
    int d = 1;
    double L = 1.0;
    int N = 8;
    std::vector<double> samples;

    static GridFunction zeros(int d, double L, int N);
    static GridFunction sample(int d, double L, int N, const std::function<double(const double*)>& f);

    void validate() const;
    double spacing() const { return 2.0 * L / N; }
    double coordinate(int j) const { return -L + j * spacing(); }
    std::size_t size() const { return samples.size(); }
    // sqrt(cell volume * sum of squares)
    double l2_norm() const;

    std::string to_csv() const;
    static GridFunction from_csv(const std::string& text, double L);
    std::string to_raw() const;
    static GridFunction from_raw(const std::string& bytes);

    friend bool operator==(const GridFunction&, const GridFunction&) = default;
};

// Signed frequency index of FFT slot k: k for k < N/2, k - N otherwise.
inline int signed_index(int k, int N) { return k < N / 2 ? k : k - N; }

// Forward DFT (no normalisation) of the real samples, and the inverse
// returning the real part divided by N^d.
std::vector<std::complex<double>> forward_dft(const GridFunction& f);
GridFunction inverse_dft_real(const std::vector<std::complex<double>>& spectrum, int d, double L, int N);

// Applies m(|ξ|²) mode by mode. `multiplier` is evaluated once per distinct
// |ξ|², on up to `workers` threads, and assembled in a fixed order.
GridFunction apply_radial_multiplier(const GridFunction& f, const std::function<double(double)>& multiplier,
                                     unsigned workers = 1);

}  // namespace krein
