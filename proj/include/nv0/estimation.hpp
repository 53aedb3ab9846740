// Levenberg-Marquardt curve fitting with finite-difference Jacobians, the
// protocol fit models, and a residual bootstrap.

#ifndef NV0_ESTIMATION_HPP
#define NV0_ESTIMATION_HPP

#include "nv0/dataset.hpp"
#include "nv0/fields.hpp"
#include "nv0/hamiltonian.hpp"
#include "nv0/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nv0 {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ModelFn = std::function<double(double x, std::span<const double> theta)>;
using GradientFn = std::function<void(double x, std::span<const double> theta, std::span<double> grad)>;

struct FitModel {
    std::string name;
    std::vector<std::string> param_names;
    std::vector<std::string> param_units;
    ModelFn eval;
    GradientFn gradient;      // optional analytic d y / d theta
    std::vector<bool> fixed;  // empty means all free

    std::size_t n_params() const { return param_names.size(); }
    bool is_fixed(std::size_t i) const { return i < fixed.size() && fixed[i]; }
    std::size_t index_of(const std::string& p) const {
        for (std::size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == p) return i;
        throw FitError("model '" + name + "' has no parameter '" + p + "'");
    }
    FitModel& fix(const std::string& p, bool f = true) {
        fixed.resize(n_params(), false);
        fixed[index_of(p)] = f;
        return *this;
    }
};

struct FitOptions {
    int max_iterations = 200;
    double rel_cost_tol = 1e-10;
    double gradient_tol = 1e-8;
    double fd_rel_step = 1e-6;
    double fd_abs_floor = 1e-12;
    bool analytic_jacobian = false;  // use model.gradient when present
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<double> theta;
    std::vector<std::vector<double>> covariance;
    double residual_norm = 0.0;
    double gradient_norm = 0.0;  // max_j |J_j . r| / (|J_j| |r|) over free parameters
    int n_iterations = 0;
    bool converged = false;
    std::string diagnostic;

    double value(const std::string& n) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return theta[i];
        throw FitError("fit result has no parameter '" + n + "'");
    }
    double stderr_of(const std::string& n) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return std::sqrt(std::max(0.0, covariance[i][i]));
        throw FitError("fit result has no parameter '" + n + "'");
    }
};

namespace detail {

using Matrix = std::vector<std::vector<double>>;

/// Cholesky solve of a symmetric positive definite system; false if not SPD.
inline bool cholesky_solve(Matrix a, std::vector<double>& b) {
    const std::size_t n = a.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        a[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / a[j][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k][i] * b[k];
        b[i] = s / a[i][i];
    }
    return true;
}

inline bool invert_spd(const Matrix& a, Matrix& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0);
        e[c] = 1.0;
        if (!cholesky_solve(a, e)) return false;
        for (std::size_t r = 0; r < n; ++r) inv[r][c] = e[r];
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c) inv[r][c] = inv[c][r] = 0.5 * (inv[r][c] + inv[c][r]);
    return true;
}

}  // namespace detail

/// Jacobian d model / d theta (rows = data points) by central differences
/// or, when requested and available, the analytic gradient.
inline std::vector<std::vector<double>> model_jacobian(const FitModel& model, std::span<const double> x,
                                                       std::span<const double> theta, const FitOptions& opt = {}) {
    const std::size_t n = theta.size();
    std::vector<std::vector<double>> jac(x.size(), std::vector<double>(n, 0.0));
    if (opt.analytic_jacobian && model.gradient) {
        for (std::size_t i = 0; i < x.size(); ++i) model.gradient(x[i], theta, jac[i]);
        return jac;
    }
    std::vector<double> tp(theta.begin(), theta.end()), tm = tp;
    for (std::size_t j = 0; j < n; ++j) {
        const double h = std::max(opt.fd_rel_step * std::abs(theta[j]), opt.fd_abs_floor);
        tp[j] = theta[j] + h;
        tm[j] = theta[j] - h;
        const double span = tp[j] - tm[j];
        for (std::size_t i = 0; i < x.size(); ++i)
            jac[i][j] = (model.eval(x[i], tp) - model.eval(x[i], tm)) / span;
        tp[j] = tm[j] = theta[j];
    }
    return jac;
}

/// Levenberg-Marquardt minimization of sum (y - model(x))^2.
///
/// Free parameters are internally scaled by the magnitude of their starting
/// values so a single additive damping term works across parameters whose
/// natural units differ by many orders of magnitude.
inline FitResult fit(const FitModel& model, std::span<const double> x, std::span<const double> y,
                     std::vector<double> theta0, const FitOptions& opt = {}) {
    const std::size_t np = model.n_params();
    if (theta0.size() != np)
        throw FitError("fit: model '" + model.name + "' expects " + std::to_string(np) + " parameters");
    if (x.size() != y.size()) throw FitError("fit: x and y lengths differ");
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < np; ++i)
        if (!model.is_fixed(i)) free.push_back(i);
    const std::size_t nf = free.size();
    const std::size_t m = x.size();
    if (m < nf + 1)
        throw FitError("fit: need at least " + std::to_string(nf + 1) + " points, got " + std::to_string(m));
    for (double t : theta0)
        if (!std::isfinite(t)) throw FitError("fit: non-finite starting value");

    std::vector<double> scale(np, 1.0);
    for (std::size_t i : free) scale[i] = theta0[i] != 0.0 ? std::abs(theta0[i]) : 1.0;

    std::vector<double> theta = theta0;
    auto residuals = [&](const std::vector<double>& th, std::vector<double>& r) {
        r.resize(m);
        double c = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = y[i] - model.eval(x[i], th);
            c += r[i] * r[i];
        }
        return 0.5 * c;
    };
    // Jacobian of the model w.r.t. the scaled free parameters.
    auto scaled_jacobian = [&](const std::vector<double>& th) {
        const auto full = model_jacobian(model, x, th, opt);
        detail::Matrix j(m, std::vector<double>(nf));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < nf; ++k) j[i][k] = full[i][free[k]] * scale[free[k]];
        return j;
    };
    auto gradient_measure = [&](const detail::Matrix& j, const std::vector<double>& r) {
        double rn = 0.0;
        for (double v : r) rn += v * v;
        rn = std::sqrt(rn);
        if (rn == 0.0) return 0.0;
        double worst = 0.0;
        for (std::size_t k = 0; k < nf; ++k) {
            double dot = 0.0, cn = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                dot += j[i][k] * r[i];
                cn += j[i][k] * j[i][k];
            }
            if (cn > 0.0) worst = std::max(worst, std::abs(dot) / (std::sqrt(cn) * rn));
        }
        return worst;
    };

    FitResult res;
    res.names = model.param_names;
    res.units = model.param_units;
    if (res.units.size() != np) res.units.resize(np, "1");

    // residuals at this level are rounding noise: the data are fitted exactly
    double y_norm = 0.0;
    for (double v : y) y_norm += v * v;
    const double exact_cost = 0.5 * 1e-28 * y_norm;

    std::vector<double> r;
    double cost = residuals(theta, r);
    if (!std::isfinite(cost)) throw FitError("fit: model is not finite at the starting point");
    detail::Matrix jac = scaled_jacobian(theta);
    double grad = gradient_measure(jac, r);
    double mu = -1.0;
    int iter = 0;
    bool converged = grad < opt.gradient_tol || cost <= exact_cost;
    int singular_streak = 0;

    while (!converged && iter < opt.max_iterations) {
        ++iter;
        detail::Matrix a(nf, std::vector<double>(nf, 0.0));
        std::vector<double> g(nf, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < nf; ++k) {
                g[k] += jac[i][k] * r[i];
                for (std::size_t l = 0; l <= k; ++l) a[k][l] += jac[i][k] * jac[i][l];
            }
        for (std::size_t k = 0; k < nf; ++k)
            for (std::size_t l = 0; l < k; ++l) a[l][k] = a[k][l];
        if (mu < 0.0) {
            double maxd = 0.0;
            for (std::size_t k = 0; k < nf; ++k) maxd = std::max(maxd, a[k][k]);
            mu = 1e-3 * (maxd > 0.0 ? maxd : 1.0);
        }

        bool accepted = false;
        double new_cost = cost;
        std::vector<double> trial, r_trial;
        while (!accepted && mu < 1e100) {
            detail::Matrix damped = a;
            for (std::size_t k = 0; k < nf; ++k) damped[k][k] += mu;
            std::vector<double> step = g;
            if (!detail::cholesky_solve(damped, step)) {
                mu *= 10.0;
                if (++singular_streak > 40) break;
                continue;
            }
            singular_streak = 0;
            trial = theta;
            for (std::size_t k = 0; k < nf; ++k) trial[free[k]] += step[k] * scale[free[k]];
            new_cost = residuals(trial, r_trial);
            if (std::isfinite(new_cost) && new_cost < cost) {
                accepted = true;
            } else {
                mu *= 10.0;
            }
        }
        if (singular_streak > 40) {
            res.diagnostic = "normal equations remained singular under increasing damping";
            break;
        }
        if (!accepted) {
            // no downhill step exists at any damping: local minimum to rounding
            converged = grad < 1e-4 || cost <= exact_cost;
            if (!converged) res.diagnostic = "no decrease found at maximal damping";
            break;
        }
        const double rel = (cost - new_cost) / std::max(cost, std::numeric_limits<double>::min());
        theta = trial;
        r = r_trial;
        cost = new_cost;
        mu = std::max(mu / 10.0, 1e-300);
        jac = scaled_jacobian(theta);
        grad = gradient_measure(jac, r);
        if (grad < opt.gradient_tol || rel < opt.rel_cost_tol || cost <= exact_cost) converged = true;
    }
    if (!converged && res.diagnostic.empty() && iter >= opt.max_iterations)
        res.diagnostic = "iteration limit reached";

    res.theta = theta;
    res.residual_norm = std::sqrt(2.0 * cost);
    res.gradient_norm = grad;
    res.n_iterations = iter;
    res.converged = converged;

    // covariance: s^2 (J^T J)^{-1}, mapped back to natural units
    res.covariance.assign(np, std::vector<double>(np, 0.0));
    detail::Matrix a(nf, std::vector<double>(nf, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < nf; ++k)
            for (std::size_t l = 0; l < nf; ++l) a[k][l] += jac[i][k] * jac[i][l];
    detail::Matrix inv;
    const double s2 = m > nf ? 2.0 * cost / static_cast<double>(m - nf) : 0.0;
    if (detail::invert_spd(a, inv)) {
        for (std::size_t k = 0; k < nf; ++k)
            for (std::size_t l = 0; l < nf; ++l)
                res.covariance[free[k]][free[l]] = s2 * inv[k][l] * scale[free[k]] * scale[free[l]];
    } else {
        for (std::size_t k : free) res.covariance[k][k] = std::numeric_limits<double>::infinity();
        if (res.diagnostic.empty()) res.diagnostic = "Jacobian rank deficient at optimum; covariance undefined";
    }
    return res;
}

inline FitResult fit(const FitModel& model, const Dataset& data, std::vector<double> theta0,
                     const std::string& column = {}, const FitOptions& opt = {}) {
    const auto& col = column.empty() ? data.first_column() : data.column(column);
    return fit(model, data.x, col.values, std::move(theta0), opt);
}

// ---- model library -----------------------------------------------------------

namespace models {

/// 1 - a exp(-t/T1) + b
inline FitModel t1_recovery() {
    FitModel m;
    m.name = "t1_recovery";
    m.param_names = {"a", "T1", "b"};
    m.param_units = {"1", "s", "1"};
    m.eval = [](double t, std::span<const double> th) { return 1.0 - th[0] * std::exp(-t / th[1]) + th[2]; };
    m.gradient = [](double t, std::span<const double> th, std::span<double> g) {
        const double e = std::exp(-t / th[1]);
        g[0] = -e;
        g[1] = -th[0] * e * t / (th[1] * th[1]);
        g[2] = 1.0;
    };
    return m;
}

/// A sin(omega t + phi) exp(-t/T2*) + B; omega in rad/s.
inline FitModel damped_sine() {
    FitModel m;
    m.name = "damped_sine";
    m.param_names = {"A", "omega", "phi", "T2star", "B"};
    m.param_units = {"1", "rad/s", "rad", "s", "1"};
    m.eval = [](double t, std::span<const double> th) {
        return th[0] * std::sin(th[1] * t + th[2]) * std::exp(-t / th[3]) + th[4];
    };
    m.gradient = [](double t, std::span<const double> th, std::span<double> g) {
        const double s = std::sin(th[1] * t + th[2]);
        const double c = std::cos(th[1] * t + th[2]);
        const double e = std::exp(-t / th[3]);
        g[0] = s * e;
        g[1] = th[0] * c * t * e;
        g[2] = th[0] * c * e;
        g[3] = th[0] * s * e * t / (th[3] * th[3]);
        g[4] = 1.0;
    };
    return m;
}

/// amplitude exp(-4 ln2 (x - center)^2 / fwhm^2) + offset
inline FitModel gaussian_line() {
    FitModel m;
    m.name = "gaussian_line";
    m.param_names = {"amplitude", "center", "fwhm", "offset"};
    m.param_units = {"1", "Hz", "Hz", "1"};
    m.eval = [](double x, std::span<const double> th) {
        const double u = (x - th[1]) / th[2];
        return th[0] * std::exp(-4.0 * std::numbers::ln2 * u * u) + th[3];
    };
    m.gradient = [](double x, std::span<const double> th, std::span<double> g) {
        const double u = (x - th[1]) / th[2];
        const double e = std::exp(-4.0 * std::numbers::ln2 * u * u);
        g[0] = e;
        g[1] = th[0] * e * 8.0 * std::numbers::ln2 * u / th[2];
        g[2] = th[0] * e * 8.0 * std::numbers::ln2 * u * u / th[2];
        g[3] = 1.0;
    };
    return m;
}

/// Two Gaussians with a shared width: amplitudes a1, a2 at c1, c2.
inline FitModel double_gaussian() {
    FitModel m;
    m.name = "double_gaussian";
    m.param_names = {"a1", "c1", "a2", "c2", "fwhm", "offset"};
    m.param_units = {"1", "Hz", "1", "Hz", "Hz", "1"};
    m.eval = [](double x, std::span<const double> th) {
        const double k = 4.0 * std::numbers::ln2 / (th[4] * th[4]);
        return th[0] * std::exp(-k * (x - th[1]) * (x - th[1])) + th[2] * std::exp(-k * (x - th[3]) * (x - th[3])) +
               th[5];
    };
    return m;
}

/// 2 sqrt(lambda^2 + (eps + d E_perp)^2 + (d E'_perp)^2) with the fields
/// linear in the electrode voltage x. lambda starts fixed.
inline FitModel splitting_hyperbola(const ElectrodeGeometry& geom, const std::string& electrode,
                                    double strain_axis_angle = 0.0) {
    const FieldVectorNV per_volt = lab_to_nv(geom.per_volt(electrode), geom);
    const double c = std::cos(strain_axis_angle), s = std::sin(strain_axis_angle);
    const double e_par = c * per_volt.E_x + s * per_volt.E_y;
    const double e_perp = -s * per_volt.E_x + c * per_volt.E_y;
    FitModel m;
    m.name = "splitting_hyperbola";
    m.param_names = {"lambda", "eps_perp", "d_perp"};
    m.param_units = {"Hz", "Hz", "Hz/(V/m)"};
    m.eval = [e_par, e_perp](double v, std::span<const double> th) {
        const double a = th[1] + th[2] * e_par * v;
        const double b = th[2] * e_perp * v;
        return 2.0 * std::sqrt(th[0] * th[0] + a * a + b * b);
    };
    m.gradient = [e_par, e_perp](double v, std::span<const double> th, std::span<double> g) {
        const double a = th[1] + th[2] * e_par * v;
        const double b = th[2] * e_perp * v;
        const double r = std::sqrt(th[0] * th[0] + a * a + b * b);
        g[0] = 2.0 * th[0] / r;
        g[1] = 2.0 * a / r;
        g[2] = 2.0 * (a * e_par * v + b * e_perp * v) / r;
    };
    m.fixed = {true, false, false};
    return m;
}

/// s x
inline FitModel linear_origin() {
    FitModel m;
    m.name = "linear_origin";
    m.param_names = {"slope"};
    m.param_units = {"1"};
    m.eval = [](double x, std::span<const double> th) { return th[0] * x; };
    m.gradient = [](double x, std::span<const double>, std::span<double> g) { g[0] = x; };
    return m;
}

}  // namespace models

/// Named models that need no external context.
inline std::map<std::string, FitModel> model_library(const ElectrodeGeometry& geom = ElectrodeGeometry::device_default(),
                                                     const std::string& dc_electrode = "dc") {
    std::map<std::string, FitModel> lib;
    lib["t1_recovery"] = models::t1_recovery();
    lib["damped_sine"] = models::damped_sine();
    lib["gaussian_line"] = models::gaussian_line();
    lib["linear_origin"] = models::linear_origin();
    if (geom.electrodes.count(dc_electrode)) lib["splitting_hyperbola"] = models::splitting_hyperbola(geom, dc_electrode);
    return lib;
}

// ---- initial guesses ------------------------------------------------------------

namespace guess {

/// Dominant oscillation frequency (Hz) from a direct Fourier scan of the
/// mean-removed samples, refined by parabolic interpolation.
inline double dominant_frequency(std::span<const double> t, std::span<const double> y) {
    const std::size_t n = t.size();
    if (n < 4) return 0.0;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    const double span = t[n - 1] - t[0];
    if (!(span > 0.0)) return 0.0;
    double min_dt = span;
    for (std::size_t i = 1; i < n; ++i) min_dt = std::min(min_dt, std::abs(t[i] - t[i - 1]));
    const double f_max = 0.5 / std::max(min_dt, span / static_cast<double>(n * 4));
    const double df = 1.0 / (8.0 * span);
    const auto k_max = static_cast<std::size_t>(f_max / df);
    std::vector<double> power(k_max + 1, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double w = two_pi * df * static_cast<double>(k);
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            re += (y[i] - mean) * std::cos(w * t[i]);
            im += (y[i] - mean) * std::sin(w * t[i]);
        }
        power[k] = re * re + im * im;
    }
    std::size_t best = 1;
    for (std::size_t k = 2; k <= k_max; ++k)
        if (power[k] > power[best]) best = k;
    double shift = 0.0;
    if (best > 1 && best < k_max) {
        const double a = power[best - 1], b = power[best], c = power[best + 1];
        const double den = a - 2.0 * b + c;
        if (den != 0.0) shift = 0.5 * (a - c) / den;
    }
    return df * (static_cast<double>(best) + shift);
}

inline std::vector<double> t1_recovery(std::span<const double> t, std::span<const double> y) {
    const double last = y.back();
    const double first = y.front();
    const double b = last - 1.0;
    const double a = std::max(1e-6, last - first);
    // time where the curve covers 1 - 1/e of its rise
    const double target = last - (last - first) / std::numbers::e;
    double tau = (t.back() - t.front()) / 3.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if ((last >= first && y[i] >= target) || (last < first && y[i] <= target)) {
            tau = std::max(t[i] - t.front(), (t.back() - t.front()) / 50.0);
            break;
        }
    return {a * std::exp(t.front() / tau), tau, b};
}

inline std::vector<double> damped_sine(std::span<const double> t, std::span<const double> y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double amp = 0.5 * (*hi - *lo);
    const double offset = y.back();
    const double f = dominant_frequency(t, y);
    const double omega = two_pi * f;
    // phase from projection on sin/cos at the guessed frequency
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        s += (y[i] - offset) * std::sin(omega * t[i]);
        c += (y[i] - offset) * std::cos(omega * t[i]);
    }
    const double phi = std::atan2(c, s);
    return {amp, omega, phi, (t.back() - t.front()) / 3.0, offset};
}

inline std::vector<double> gaussian_line(std::span<const double> x, std::span<const double> y) {
    const auto hi = std::max_element(y.begin(), y.end());
    const double offset = 0.5 * (y.front() + y.back());
    const double amp = *hi - offset;
    const std::size_t ip = static_cast<std::size_t>(hi - y.begin());
    const double half = offset + 0.5 * amp;
    std::size_t l = ip, r = ip;
    while (l > 0 && y[l] > half) --l;
    while (r + 1 < y.size() && y[r] > half) ++r;
    double fwhm = x[r] - x[l];
    if (!(fwhm > 0.0)) fwhm = (x.back() - x.front()) / 4.0;
    return {amp, x[ip], fwhm, offset};
}

inline std::vector<double> linear_origin(std::span<const double> x, std::span<const double> y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return {sxx > 0.0 ? sxy / sxx : 1.0};
}

/// lambda, eps and |d| from the quadratic y^2/4 = c0 + c1 V + c2 V^2.
inline std::vector<double> splitting_hyperbola(std::span<const double> v, std::span<const double> y, double lambda,
                                               const ElectrodeGeometry& geom, const std::string& electrode) {
    double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double q = 0.25 * y[i] * y[i];
        double p = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += p;
            if (k < 3) t[k] += p * q;
            p *= v[i];
        }
    }
    std::array<std::array<double, 3>, 3> a{{{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}}};
    std::array<double, 3> b{t[0], t[1], t[2]};
    std::array<double, 3> c{};
    try {
        c = solve_dense<3, double>(a, b);
    } catch (const LinalgError&) {
        return {lambda, 1e9, 1e3};
    }
    const FieldVectorNV pv = lab_to_nv(geom.per_volt(electrode), geom);
    const double e2 = pv.E_x * pv.E_x + pv.E_y * pv.E_y;
    const double d = std::sqrt(std::max(c[2], 0.0) / std::max(e2, 1e-300));
    const double eps = std::sqrt(std::max(c[0] - lambda * lambda, 0.0));
    double dsign = 1.0;
    if (eps > 0.0 && pv.E_x != 0.0) dsign = (c[1] / (2.0 * eps * pv.E_x)) >= 0.0 ? 1.0 : -1.0;
    return {lambda, eps > 0.0 ? eps : 1e9, d > 0.0 ? dsign * d : 1e3};
}

}  // namespace guess

// ---- bootstrap ---------------------------------------------------------------------

struct BootstrapInterval {
    std::string name;
    double lower = 0.0;
    double median = 0.0;
    double upper = 0.0;
};

struct BootstrapReport {
    FitResult base;
    std::vector<BootstrapInterval> intervals;  // free parameters only
    std::size_t n_resamples = 0;
    std::size_t n_failed = 0;
    double level = 0.95;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Residual-resampling bootstrap around the least-squares fit. Resample b
/// draws its residual indices from a generator seeded with
/// splitmix64(seed + b), so results do not depend on thread scheduling.
inline BootstrapReport bootstrap(const FitModel& model, std::span<const double> x, std::span<const double> y,
                                 const std::vector<double>& theta0, std::size_t n_resamples, std::uint64_t seed,
                                 double level = 0.95, const FitOptions& opt = {}) {
    if (n_resamples < 100) throw FitError("bootstrap: n_resamples must be >= 100");
    BootstrapReport rep;
    rep.level = level;
    rep.n_resamples = n_resamples;
    rep.base = fit(model, x, y, theta0, opt);
    const std::size_t m = x.size();
    std::vector<double> fitted(m), resid(m);
    for (std::size_t i = 0; i < m; ++i) {
        fitted[i] = model.eval(x[i], rep.base.theta);
        resid[i] = y[i] - fitted[i];
    }
    struct Sample {
        bool ok = false;
        std::vector<double> theta;
    };
    auto samples = parallel_map(n_resamples, [&](std::size_t b) {
        std::mt19937_64 rng(splitmix64(seed + b));
        std::vector<double> yb(m);
        for (std::size_t i = 0; i < m; ++i) yb[i] = fitted[i] + resid[rng() % m];
        Sample s;
        try {
            const auto r = fit(model, x, yb, rep.base.theta, opt);
            s.ok = r.converged;
            s.theta = r.theta;
        } catch (const std::exception&) {
            s.ok = false;
        }
        return s;
    });
    for (const auto& s : samples)
        if (!s.ok) ++rep.n_failed;
    if (static_cast<double>(rep.n_failed) > 0.2 * static_cast<double>(n_resamples)) {
        std::ostringstream os;
        os << "bootstrap: " << rep.n_failed << " of " << n_resamples << " refits did not converge";
        throw FitError(os.str());
    }
    auto quantile = [](std::vector<double>& v, double q) {
        std::sort(v.begin(), v.end());
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    for (std::size_t p = 0; p < model.n_params(); ++p) {
        if (model.is_fixed(p)) continue;
        std::vector<double> vals;
        for (const auto& s : samples)
            if (s.ok) vals.push_back(s.theta[p]);
        BootstrapInterval iv;
        iv.name = model.param_names[p];
        iv.lower = quantile(vals, 0.5 * (1.0 - level));
        iv.median = quantile(vals, 0.5);
        iv.upper = quantile(vals, 1.0 - 0.5 * (1.0 - level));
        rep.intervals.push_back(iv);
    }
    return rep;
}

// ---- reports -------------------------------------------------------------------------

inline nlohmann::ordered_json fit_report_json(const FitModel& model, const FitResult& r,
                                              const BootstrapReport* boot = nullptr) {
    nlohmann::ordered_json j;
    j["model"] = model.name;
    j["converged"] = r.converged;
    j["iterations"] = r.n_iterations;
    j["residual_norm"] = r.residual_norm;
    j["gradient_norm"] = r.gradient_norm;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    j["parameters"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.theta.size(); ++i) {
        nlohmann::ordered_json p;
        p["name"] = r.names[i];
        p["unit"] = r.units[i];
        p["value"] = r.theta[i];
        p["fixed"] = model.is_fixed(i);
        const double se = std::sqrt(std::max(0.0, r.covariance[i][i]));
        p["stderr"] = std::isfinite(se) ? nlohmann::ordered_json(se) : nlohmann::ordered_json(nullptr);
        if (std::isfinite(se)) p["interval_95"] = {r.theta[i] - 1.959963984540054 * se, r.theta[i] + 1.959963984540054 * se};
        if (boot)
            for (const auto& iv : boot->intervals)
                if (iv.name == r.names[i]) p["bootstrap"] = {{"lower", iv.lower}, {"median", iv.median}, {"upper", iv.upper}};
        j["parameters"].push_back(p);
    }
    if (boot) {
        j["bootstrap"] = {{"resamples", boot->n_resamples}, {"failed", boot->n_failed}, {"level", boot->level}};
    }
    return j;
}

}  // namespace nv0

#endif  // NV0_ESTIMATION_HPP
