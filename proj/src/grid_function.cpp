#include "krein/grid_function.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "krein/errors.hpp"
#include "krein/parallel.hpp"

namespace krein {

namespace {

constexpr char kMagic[8] = {'K', 'T', 'G', 'R', 'I', 'D', '0', '1'};

// FFTW's planner is not reentrant; execution with new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void dft_inplace(std::vector<std::complex<double>>& a, int d, int N, int sign) {
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = d == 1 ? fftw_plan_dft_1d(N, p, p, sign, FFTW_ESTIMATE) : fftw_plan_dft_2d(N, N, p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

template <class T>
void put_le(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t pos) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

GridFunction GridFunction::zeros(int d, double L, int N) {
    GridFunction g{d, L, N, {}};
    g.validate();
    g.samples.assign(d == 1 ? N : std::size_t(N) * N, 0.0);
    return g;
}

GridFunction GridFunction::sample(int d, double L, int N, const std::function<double(const double*)>& f) {
    GridFunction g = zeros(d, L, N);
    double x[2];
    if (d == 1) {
        for (int j = 0; j < N; ++j) {
            x[0] = g.coordinate(j);
            g.samples[j] = f(x);
        }
    } else {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                x[0] = g.coordinate(i);
                x[1] = g.coordinate(j);
                g.samples[std::size_t(i) * N + j] = f(x);
            }
    }
    return g;
}

void GridFunction::validate() const {
    if (d != 1 && d != 2) throw DomainError("grid dimension must be 1 or 2");
    if (N < 8 || (N & (N - 1)) != 0) throw DomainError("grid size N must be a power of two >= 8");
    if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid half-width L must be positive");
    if (!samples.empty() && samples.size() != (d == 1 ? std::size_t(N) : std::size_t(N) * N))
        throw DomainError("grid sample count does not match N^d");
}

double GridFunction::l2_norm() const {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return std::sqrt(s * std::pow(spacing(), d));
}

std::string GridFunction::to_csv() const {
    std::string out = d == 1 ? "index,value\n" : "index0,index1,value\n";
    char buf[64];
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (d == 1) std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, samples[k]);
        else std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", k / N, k % N, samples[k]);
        out += buf;
    }
    return out;
}

GridFunction GridFunction::from_csv(const std::string& text, double L) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    int d = 0;
    if (line == "index,value") d = 1;
    else if (line == "index0,index1,value") d = 2;
    else throw ParseError("header", "expected 'index,value' or 'index0,index1,value'");
    std::vector<double> vals;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto pos = line.rfind(',');
        if (pos == std::string::npos) throw ParseError("row " + std::to_string(row), "missing value column");
        char* end = nullptr;
        const std::string cell = line.substr(pos + 1);
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') throw ParseError("row " + std::to_string(row), "bad number");
        vals.push_back(v);
        ++row;
    }
    int N = d == 1 ? int(vals.size()) : int(std::lround(std::sqrt(double(vals.size()))));
    GridFunction g{d, L, N, std::move(vals)};
    g.validate();
    return g;
}

std::string GridFunction::to_raw() const {
    std::string out(kMagic, 8);
    put_le<std::uint32_t>(out, std::uint32_t(d));
    put_le<std::uint32_t>(out, std::uint32_t(N));
    put_le<double>(out, L);
    out.append(8, '\0');
    for (double v : samples) put_le<double>(out, v);
    return out;
}

GridFunction GridFunction::from_raw(const std::string& bytes) {
    if (bytes.size() < 32 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw ParseError("header", "bad magic");
    GridFunction g;
    g.d = int(get_le<std::uint32_t>(bytes, 8));
    g.N = int(get_le<std::uint32_t>(bytes, 12));
    g.L = get_le<double>(bytes, 16);
    g.validate();
    const std::size_t n = g.d == 1 ? std::size_t(g.N) : std::size_t(g.N) * g.N;
    if (bytes.size() != 32 + 8 * n) throw ParseError("body", "payload size does not match header");
    g.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) g.samples[k] = get_le<double>(bytes, 32 + 8 * k);
    return g;
}

std::vector<std::complex<double>> forward_dft(const GridFunction& f) {
    f.validate();
    std::vector<std::complex<double>> a(f.samples.begin(), f.samples.end());
    dft_inplace(a, f.d, f.N, FFTW_FORWARD);
    return a;
}

GridFunction inverse_dft_real(const std::vector<std::complex<double>>& spectrum, int d, double L, int N) {
    auto a = spectrum;
    dft_inplace(a, d, N, FFTW_BACKWARD);
    GridFunction g = GridFunction::zeros(d, L, N);
    const double scale = 1.0 / double(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) g.samples[k] = a[k].real() * scale;
    return g;
}

GridFunction apply_radial_multiplier(const GridFunction& f, const std::function<double(double)>& multiplier,
                                     unsigned workers) {
    f.validate();
    for (double v : f.samples)
        if (!std::isfinite(v)) throw DomainError("grid function has non-finite samples");
    const int N = f.N;
    const double w = std::numbers::pi / f.L;
    // |ξ|² = w² q with q = k1² + k2², an integer key
    std::map<long, std::size_t> slot;
    auto key = [&](std::size_t idx) {
        if (f.d == 1) {
            const long k = signed_index(int(idx), N);
            return k * k;
        }
        const long k1 = signed_index(int(idx / N), N), k2 = signed_index(int(idx % N), N);
        return k1 * k1 + k2 * k2;
    };
    for (std::size_t i = 0; i < f.size(); ++i) slot.emplace(key(i), 0);
    std::vector<long> keys;
    for (auto& [k, s] : slot) {
        s = keys.size();
        keys.push_back(k);
    }
    std::vector<double> values(keys.size());
    parallel_for(keys.size(), workers, [&](std::size_t i) { values[i] = multiplier(w * w * double(keys[i])); });

    auto spec = forward_dft(f);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= values[slot.at(key(i))];
    return inverse_dft_real(spec, f.d, f.L, N);
}

}  // namespace krein
