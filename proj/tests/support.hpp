// Shared helpers and independent reference computations for the tests.

#pragma once

#include "nv0/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace testsupport {

using cplx = std::complex<double>;

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

template <std::size_t N>
nv0::OperatorMatrix<N> random_hermitian(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    nv0::OperatorMatrix<N> m;
    for (std::size_t r = 0; r < N; ++r) {
        m(r, r) = n(rng);
        for (std::size_t c = r + 1; c < N; ++c) {
            m(r, c) = cplx(n(rng), n(rng));
            m(c, r) = std::conj(m(r, c));
        }
    }
    return m;
}

/// Integrates i d psi/dt = 2 pi H psi with classic RK4 at a fixed step.
template <std::size_t N>
std::array<cplx, N> schrodinger_rk4(const nv0::OperatorMatrix<N>& h, std::array<cplx, N> psi, double t,
                                    std::size_t steps) {
    const double dt = t / static_cast<double>(steps);
    auto f = [&](const std::array<cplx, N>& v) {
        std::array<cplx, N> out{};
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = 0; c < N; ++c) out[r] += cplx(0.0, -2.0 * M_PI) * h(r, c) * v[c];
        return out;
    };
    auto axpy = [](const std::array<cplx, N>& a, const std::array<cplx, N>& b, double s) {
        std::array<cplx, N> o{};
        for (std::size_t i = 0; i < N; ++i) o[i] = a[i] + s * b[i];
        return o;
    };
    for (std::size_t k = 0; k < steps; ++k) {
        const auto k1 = f(psi);
        const auto k2 = f(axpy(psi, k1, 0.5 * dt));
        const auto k3 = f(axpy(psi, k2, 0.5 * dt));
        const auto k4 = f(axpy(psi, k3, dt));
        for (std::size_t i = 0; i < N; ++i) psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return psi;
}

/// Oscillation frequency from the mean-level crossings of a sampled signal:
/// (number of crossings - 1) / 2 periods between the first and last one.
inline double crossing_frequency(const std::vector<double>& t, const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    std::vector<double> crossings;
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double a = y[i - 1] - mean, b = y[i] - mean;
        if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0))
            crossings.push_back(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
    }
    if (crossings.size() < 3) return 0.0;
    return 0.5 * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());
}

}  // namespace testsupport
