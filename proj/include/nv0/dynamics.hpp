// Open-system dynamics of the three effective levels |0>, |1> (ground
// orbital branches) and |2> (optically excited state).
//
// The master equation
//   drho/dt = -i 2pi [H, rho] + sum_k g_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2)
// is integrated with fixed-step RK4. Microwave pulses are treated in the
// rotating-wave approximation inside their own rotating frame; the optical
// pump is incoherent, so coherences with |2> are never created.

#ifndef NV0_DYNAMICS_HPP
#define NV0_DYNAMICS_HPP

#include "nv0/fields.hpp"
#include "nv0/hamiltonian.hpp"
#include "nv0/linalg.hpp"
#include "nv0/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nv0 {

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- state ---------------------------------------------------------------

struct DensityState {
    Op3 rho{Basis::LEVELS_012};

    static DensityState pure(std::size_t level) {
        DensityState s;
        s.rho(level, level) = 1.0;
        return s;
    }

    /// Incoherent mixture of |0> and |1>.
    static DensityState mixture(double p0) {
        DensityState s;
        s.rho(0, 0) = p0;
        s.rho(1, 1) = 1.0 - p0;
        return s;
    }

    double population(std::size_t level) const { return rho(level, level).real(); }
    cplx coherence01() const { return rho(0, 1); }
};

namespace detail {

/// Minimum eigenvalue bound check. All principal minors of a 3x3 hermitian
/// matrix being non-negative is equivalent to positive semidefiniteness; the
/// Jacobi solver only runs when that quick test fails.
inline double min_eigenvalue_if_negative(const Op3& r) {
    const double d0 = r(0, 0).real(), d1 = r(1, 1).real(), d2 = r(2, 2).real();
    const double m01 = d0 * d1 - std::norm(r(0, 1));
    const double m02 = d0 * d2 - std::norm(r(0, 2));
    const double m12 = d1 * d2 - std::norm(r(1, 2));
    const double det = (r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
                        r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
                        r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0)))
                           .real();
    if (d0 >= 0 && d1 >= 0 && d2 >= 0 && m01 >= 0 && m02 >= 0 && m12 >= 0 && det >= 0) return 0.0;
    return hermitian_eig(r, 1e-9).values[0];
}

}  // namespace detail

/// Returns a description of the first violated invariant, or nothing.
inline std::optional<std::string> check_invariants(const DensityState& s, double herm_tol = 1e-10,
                                                   double trace_tol = 1e-9, double pos_tol = 1e-8) {
    std::ostringstream os;
    const double asym = s.rho.max_asymmetry();
    if (!(asym <= herm_tol)) {
        os << "hermiticity violated (max asymmetry " << asym << ")";
        return os.str();
    }
    const double tr = s.rho.trace().real();
    if (!(std::abs(tr - 1.0) <= trace_tol)) {
        os << "trace drifted to " << tr;
        return os.str();
    }
    const double lmin = detail::min_eigenvalue_if_negative(s.rho);
    if (lmin < -pos_tol) {
        os << "positivity violated (min eigenvalue " << lmin << ")";
        return os.str();
    }
    return std::nullopt;
}

// ---- collapse operators --------------------------------------------------

struct OpticalPumping {
    double pump_rate = 0.0;       // Hz, |0> -> |2>
    double branching_back = 0.5;  // fraction of |2> decays returning to |0>
};

/// One Lindblad channel. Jumps |to><from| and diagonal operators have
/// closed-form dissipators; op() gives the dense matrix for either.
struct Collapse {
    enum class Kind { Jump, Diagonal } kind = Kind::Jump;
    std::size_t to = 0, from = 0;       // Jump
    std::array<double, 3> diag{};       // Diagonal
    double rate = 0.0;                  // Hz
    std::string label;

    Op3 op() const {
        Op3 m(Basis::LEVELS_012);
        if (kind == Kind::Jump) {
            m(to, from) = 1.0;
        } else {
            for (std::size_t i = 0; i < 3; ++i) m(i, i) = diag[i];
        }
        return m;
    }
};

/// Orbital decay |1> -> |0> at 1/T1, pure dephasing diag(1,-1,0)/sqrt(2) at
/// 1/Tphi (coherence decay 1/(2 T1) + 1/Tphi), and optionally the optical
/// cycle |0> -> |2> -> {|0>, |1>}.
inline std::vector<Collapse> collapse_set(const NVParams& p,
                                          const std::optional<OpticalPumping>& optical = std::nullopt) {
    std::vector<Collapse> out;
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    out.push_back({Collapse::Kind::Jump, 0, 1, {}, 1.0 / p.T1, "orbital_decay"});
    if (std::isfinite(p.Tphi))
        out.push_back({Collapse::Kind::Diagonal, 0, 0, {inv_sqrt2, -inv_sqrt2, 0.0}, 1.0 / p.Tphi, "dephasing"});
    if (optical) {
        const double g = p.gamma_rad();
        out.push_back({Collapse::Kind::Jump, 2, 0, {}, optical->pump_rate, "optical_pump"});
        out.push_back({Collapse::Kind::Jump, 0, 2, {}, g * optical->branching_back, "decay_to_0"});
        out.push_back({Collapse::Kind::Jump, 1, 2, {}, g * (1.0 - optical->branching_back), "decay_to_1"});
    }
    return out;
}

/// Master-equation right-hand side with the closed-form dissipators.
inline Op3 lindblad_rhs(const Op3& h, const std::vector<Collapse>& collapses, const Op3& rho) {
    Op3 d = commutator(h, rho) * cplx(0.0, -two_pi);
    for (const auto& c : collapses) {
        if (c.rate == 0.0) continue;
        if (c.kind == Collapse::Kind::Jump) {
            const std::size_t a = c.to, b = c.from;
            d(a, a) += c.rate * rho(b, b);
            for (std::size_t j = 0; j < 3; ++j) {
                d(b, j) -= 0.5 * c.rate * rho(b, j);
                d(j, b) -= 0.5 * c.rate * rho(j, b);
            }
        } else {
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) {
                    const double diff = c.diag[i] - c.diag[j];
                    if (diff != 0.0) d(i, j) -= 0.5 * c.rate * diff * diff * rho(i, j);
                }
        }
    }
    return d;
}

/// Same equation with dense operator products; reference for lindblad_rhs.
inline Op3 lindblad_rhs_dense(const Op3& h, const std::vector<Collapse>& collapses, const Op3& rho) {
    Op3 d = commutator(h, rho) * cplx(0.0, -two_pi);
    for (const auto& c : collapses) {
        const Op3 l = c.op();
        const Op3 ld = l.adjoint();
        const Op3 ldl = ld * l;
        d += c.rate * (l * rho * ld - 0.5 * anticommutator(ldl, rho));
    }
    return d;
}

/// Rotating-frame Hamiltonian on the levels: (delta/2)(|1><1| - |0><0|) +
/// (f_R/2)(e^{i phase}|0><1| + h.c.), delta = transition - drive frequency.
inline Op3 rotating_frame_hamiltonian(double detuning, double rabi, double phase = 0.0) {
    Op3 h(Basis::LEVELS_012);
    h(0, 0) = -0.5 * detuning;
    h(1, 1) = 0.5 * detuning;
    const cplx c = 0.5 * rabi * std::exp(cplx(0.0, phase));
    h(0, 1) = c;
    h(1, 0) = std::conj(c);
    return h;
}

// ---- pulse sequences -----------------------------------------------------

struct OpticalPump {
    double duration = 0.0;
    double pump_rate = 0.0;
    double branching_back = 0.5;
};

struct MicrowavePulse {
    double duration = 0.0;
    double power = 0.0;      // W
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // rad
    std::string electrode = "ac";
};

struct Wait {
    double duration = 0.0;
};

struct Readout {
    double duration = 0.0;
    double pump_rate = 0.0;
    double branching_back = 0.5;
    double bin_width = 1e-9;
};

using Segment = std::variant<OpticalPump, MicrowavePulse, Wait, Readout>;

struct PulseSequence {
    std::vector<Segment> segments;

    PulseSequence& add(Segment s) {
        segments.push_back(std::move(s));
        return *this;
    }

    double total_duration() const {
        double t = 0.0;
        for (const auto& s : segments) t += std::visit([](const auto& x) { return x.duration; }, s);
        return t;
    }

    void validate() const {
        for (std::size_t i = 0; i < segments.size(); ++i) {
            auto fail = [i](const std::string& m) {
                throw ParamError("PulseSequence segment " + std::to_string(i) + ": " + m);
            };
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) fail("duration must be >= 0");
                    if constexpr (std::is_same_v<T, OpticalPump> || std::is_same_v<T, Readout>) {
                        if (!(s.pump_rate >= 0.0)) fail("pump_rate must be >= 0");
                        if (!(s.branching_back >= 0.0 && s.branching_back <= 1.0))
                            fail("branching_back must lie in [0, 1]");
                    }
                    if constexpr (std::is_same_v<T, Readout>) {
                        if (!(s.bin_width > 0.0)) fail("bin_width must be > 0");
                    }
                    if constexpr (std::is_same_v<T, MicrowavePulse>) {
                        if (!(s.power >= 0.0)) fail("power must be >= 0");
                        if (!(s.frequency > 0.0)) fail("frequency must be > 0");
                    }
                },
                segments[i]);
        }
    }
};

/// Photoluminescence record: expected detection rate Gamma_rad * rho_22
/// averaged over each bin of every optical segment.
struct PLTrace {
    std::vector<double> bin_times;    // bin start, s
    std::vector<double> counts_rate;  // Hz
    std::vector<std::size_t> segment; // index of the producing segment

    /// Rate of the first bin of the k-th optical segment (0-based).
    double first_bin_of_optical(std::size_t k) const {
        std::size_t seen = 0;
        std::size_t last = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < segment.size(); ++i) {
            if (segment[i] != last) {
                if (seen == k) return counts_rate[i];
                ++seen;
                last = segment[i];
            }
        }
        throw DynamicsError("PLTrace: optical segment " + std::to_string(k) + " not recorded");
    }
};

struct EvolveResult {
    DensityState rho_final;
    PLTrace trace;
};

using StepObserver = std::function<void(double t, const DensityState&)>;

namespace detail {

inline double transition_detuning(const NVParams& p, double frame_frequency) {
    return transition_frequency(p) - frame_frequency;
}

/// Reference frame: the first microwave frequency in the sequence, or the
/// transition itself when there is none.
inline double reference_frame(const PulseSequence& seq, const NVParams& p) {
    for (const auto& s : seq.segments)
        if (const auto* mw = std::get_if<MicrowavePulse>(&s)) return mw->frequency;
    return transition_frequency(p);
}

/// diag(1, e^{i 2pi df t}, 1) conjugation moving rho between frames that
/// differ by df.
inline Op3 shift_frame(const Op3& rho, double df, double t) {
    if (df == 0.0) return rho;
    const cplx ph = std::exp(cplx(0.0, two_pi * df * t));
    Op3 out = rho;
    for (std::size_t j = 0; j < 3; ++j) {
        if (j != 1) {
            out(1, j) *= ph;
            out(j, 1) *= std::conj(ph);
        }
    }
    return out;
}

}  // namespace detail

/// Largest admissible step: min(T1, Tphi, 1/f_R, 1/|delta|, 1/pump, excited
/// lifetime)/20.
inline double max_stable_dt(const PulseSequence& seq, const NVParams& p, const ElectrodeGeometry& g) {
    double shortest = std::min(p.T1, p.Tphi);
    const double frame = detail::reference_frame(seq, p);
    auto consider_rate = [&](double rate) {
        if (rate > 0.0) shortest = std::min(shortest, 1.0 / rate);
    };
    for (const auto& s : seq.segments) {
        if (const auto* mw = std::get_if<MicrowavePulse>(&s)) {
            const double fr = rabi_frequency(p, g, mw->electrode, mw->power);
            const double det = detail::transition_detuning(p, mw->frequency);
            consider_rate(std::hypot(fr, det));
        } else if (const auto* op = std::get_if<OpticalPump>(&s)) {
            consider_rate(op->pump_rate);
        } else if (const auto* ro = std::get_if<Readout>(&s)) {
            consider_rate(ro->pump_rate);
        }
    }
    consider_rate(std::abs(detail::transition_detuning(p, frame)));
    consider_rate(p.gamma_rad());
    return shortest / 20.0;
}

/// Integrates the sequence from rho0. Throws DynamicsError if dt exceeds
/// max_stable_dt or a density-matrix invariant fails during integration.
inline EvolveResult evolve(const DensityState& rho0, const PulseSequence& seq, const NVParams& p,
                           const ElectrodeGeometry& g, double dt, const StepObserver& observer = {}) {
    p.validate();
    seq.validate();
    if (!(dt > 0.0)) throw DynamicsError("evolve: dt must be > 0");
    const double bound = max_stable_dt(seq, p, g);
    if (dt > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "evolve: dt = " << dt << " s exceeds the stability bound " << bound << " s";
        throw DynamicsError(os.str());
    }

    EvolveResult result;
    Op3 rho = rho0.rho;
    rho.set_basis(Basis::LEVELS_012);
    double t = 0.0;
    const double frame = detail::reference_frame(seq, p);
    const double gamma_rad = p.gamma_rad();

    // |2> keeps decaying between optical segments, with the branching of
    // the most recent one
    auto dark = collapse_set(p, OpticalPumping{0.0, 0.5});

    auto check = [&](const Op3& r, double time) {
        DensityState s{r};
        if (auto err = check_invariants(s)) {
            std::ostringstream os;
            os << "evolve: " << *err << " at t = " << time << " s";
            throw DynamicsError(os.str());
        }
    };

    auto rk4 = [&](const Op3& h, const std::vector<Collapse>& cs, double step) {
        const Op3 k1 = lindblad_rhs(h, cs, rho);
        const Op3 k2 = lindblad_rhs(h, cs, rho + k1 * (0.5 * step));
        const Op3 k3 = lindblad_rhs(h, cs, rho + k2 * (0.5 * step));
        const Op3 k4 = lindblad_rhs(h, cs, rho + k3 * step);
        rho += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (step / 6.0);
    };

    // Integrates `duration` in `n` equal steps, returning the time average of
    // Gamma_rad * rho_22 (trapezoid rule).
    auto run = [&](const Op3& h, const std::vector<Collapse>& cs, double duration, double time_shift_df,
                   bool in_shifted_frame) {
        if (duration <= 0.0) return gamma_rad * rho(2, 2).real();
        const auto n = static_cast<long>(std::ceil(duration / dt - 1e-9));
        const double step = duration / static_cast<double>(std::max(1L, n));
        double acc = 0.5 * rho(2, 2).real();
        for (long i = 0; i < std::max(1L, n); ++i) {
            rk4(h, cs, step);
            t += step;
            check(rho, t);
            acc += (i + 1 == std::max(1L, n) ? 0.5 : 1.0) * rho(2, 2).real();
            if (observer) {
                const Op3 view = in_shifted_frame ? detail::shift_frame(rho, -time_shift_df, t) : rho;
                observer(t, DensityState{view});
            }
        }
        return gamma_rad * acc / static_cast<double>(std::max(1L, n));
    };

    if (observer) observer(t, DensityState{rho});
    const Op3 h_free = rotating_frame_hamiltonian(detail::transition_detuning(p, frame), 0.0);

    for (std::size_t idx = 0; idx < seq.segments.size(); ++idx) {
        const auto& seg = seq.segments[idx];
        if (const auto* w = std::get_if<Wait>(&seg)) {
            run(h_free, dark, w->duration, 0.0, false);
        } else if (const auto* mw = std::get_if<MicrowavePulse>(&seg)) {
            const double df = mw->frequency - frame;
            const double fr = rabi_frequency(p, g, mw->electrode, mw->power);
            const Op3 h = rotating_frame_hamiltonian(detail::transition_detuning(p, mw->frequency), fr, mw->phase);
            rho = detail::shift_frame(rho, df, t);
            run(h, dark, mw->duration, df, df != 0.0);
            rho = detail::shift_frame(rho, -df, t);
        } else if (const auto* op = std::get_if<OpticalPump>(&seg)) {
            const auto cs = collapse_set(p, OpticalPumping{op->pump_rate, op->branching_back});
            dark = collapse_set(p, OpticalPumping{0.0, op->branching_back});
            if (op->duration <= 0.0) continue;
            const auto n = static_cast<long>(std::ceil(op->duration / dt - 1e-9));
            const double step = op->duration / static_cast<double>(n);
            for (long i = 0; i < n; ++i) {
                result.trace.bin_times.push_back(t);
                result.trace.segment.push_back(idx);
                result.trace.counts_rate.push_back(run(h_free, cs, step, 0.0, false));
            }
        } else if (const auto* ro = std::get_if<Readout>(&seg)) {
            const auto cs = collapse_set(p, OpticalPumping{ro->pump_rate, ro->branching_back});
            dark = collapse_set(p, OpticalPumping{0.0, ro->branching_back});
            double remaining = ro->duration;
            while (remaining > 1e-18) {
                const double len = std::min(ro->bin_width, remaining);
                result.trace.bin_times.push_back(t);
                result.trace.segment.push_back(idx);
                result.trace.counts_rate.push_back(run(h_free, cs, len, 0.0, false));
                remaining -= len;
                if (remaining < 1e-6 * ro->bin_width) break;
            }
        }
    }
    result.rho_final = DensityState{rho};
    return result;
}

// ---- steady state ----------------------------------------------------------

/// Stationary state of the driven, optically pumped system (rotating frame
/// of the drive). Solves L(rho) = 0 with tr(rho) = 1.
inline DensityState steady_state(const NVParams& p, double detuning, double rabi,
                                 const std::optional<OpticalPumping>& optical) {
    const Op3 h = rotating_frame_hamiltonian(detuning, rabi);
    const auto cs = collapse_set(p, optical ? optical : std::optional<OpticalPumping>(OpticalPumping{0.0, 0.5}));
    std::array<std::array<cplx, 9>, 9> m{};
    for (std::size_t col = 0; col < 9; ++col) {
        Op3 basis(Basis::LEVELS_012);
        basis(col / 3, col % 3) = 1.0;
        const Op3 d = lindblad_rhs(h, cs, basis);
        for (std::size_t row = 0; row < 9; ++row) m[row][col] = d(row / 3, row % 3);
    }
    std::array<cplx, 9> rhs{};
    // replace the rho_00 balance equation by the trace condition
    for (std::size_t col = 0; col < 9; ++col) m[0][col] = (col % 4 == 0) ? 1.0 : 0.0;
    rhs[0] = 1.0;
    const auto x = solve_dense<9, cplx>(m, rhs);
    DensityState s;
    for (std::size_t k = 0; k < 9; ++k) s.rho(k / 3, k % 3) = x[k];
    return s;
}

// ---- inhomogeneous broadening -------------------------------------------

struct Quadrature {
    std::vector<double> nodes;    // standard-normal abscissae
    std::vector<double> weights;  // probability weights, sum 1
};

/// Gauss-Hermite rule for a standard normal distribution (probabilists'
/// weight), from the eigen-decomposition of the symmetric tridiagonal Jacobi
/// matrix: nodes are its eigenvalues, weights the squared first components of
/// the normalized eigenvectors. Implicit QL iteration; only the first row of
/// the eigenvector matrix is accumulated.
inline Quadrature gauss_hermite(std::size_t n) {
    if (n == 0) throw ParamError("gauss_hermite: n must be positive");
    std::vector<double> d(n, 0.0), e(n, 0.0), z(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) e[k] = std::sqrt(static_cast<double>(k + 1));
    z[0] = 1.0;
    const int nn = static_cast<int>(n);
    for (int l = 0; l < nn; ++l) {
        int iter = 0;
        int m = l;
        do {
            for (m = l; m < nn - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (++iter > 60) throw ParamError("gauss_hermite: QL iteration did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double sn = 1.0, c = 1.0, p = 0.0;
                int i = m - 1;
                for (; i >= l; --i) {
                    double f = sn * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    sn = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * sn + 2.0 * c * b;
                    p = sn * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = sn * z[i] + c * f;
                    z[i] = c * z[i] - sn * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        q.nodes[i] = d[order[i]];
        q.weights[i] = z[order[i]] * z[order[i]];
        sum += q.weights[i];
    }
    for (auto& w : q.weights) w /= sum;
    // exact symmetry: the Jacobi matrix has zero diagonal
    for (std::size_t i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (q.nodes[n - 1 - i] - q.nodes[i]);
        const double w = 0.5 * (q.weights[i] + q.weights[n - 1 - i]);
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        q.weights[i] = q.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    return q;
}

inline double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

/// Averages run(offset) over a static Gaussian distribution of detuning
/// offsets with the given FWHM. fwhm = 0 returns run(0) exactly.
template <typename Run>
auto inhomogeneous_average(Run&& run, double fwhm, std::size_t n_nodes) -> decltype(run(0.0)) {
    if (n_nodes < 3 || n_nodes % 2 == 0) {
        std::ostringstream os;
        os << "inhomogeneous_average: n_nodes must be odd and >= 3, got " << n_nodes;
        throw ParamError(os.str());
    }
    if (!(fwhm >= 0.0)) throw ParamError("inhomogeneous_average: fwhm must be >= 0");
    if (fwhm == 0.0) return run(0.0);
    const auto q = gauss_hermite(n_nodes);
    const double sigma = fwhm_to_sigma(fwhm);
    using R = decltype(run(0.0));
    R acc{};
    bool first = true;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (q.weights[i] == 0.0) continue;
        R v = run(sigma * q.nodes[i]);
        if constexpr (std::is_arithmetic_v<R>) {
            acc += q.weights[i] * v;
        } else {
            if (first) acc.assign(v.size(), 0.0);
            for (std::size_t k = 0; k < v.size(); ++k) acc[k] += q.weights[i] * v[k];
        }
        first = false;
    }
    return acc;
}

}  // namespace nv0

#endif  // NV0_DYNAMICS_HPP
