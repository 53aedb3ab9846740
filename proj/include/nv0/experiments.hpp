// Measurement protocols: dc PLE shift, T1 recovery, ODER, Autler-Townes
// splitting map, Rabi and Ramsey scans. Each returns a Dataset; the fit_*
// helpers run the matching model with heuristic starting values.

#ifndef NV0_EXPERIMENTS_HPP
#define NV0_EXPERIMENTS_HPP

#include "nv0/dataset.hpp"
#include "nv0/dynamics.hpp"
#include "nv0/estimation.hpp"
#include "nv0/fields.hpp"
#include "nv0/hamiltonian.hpp"
#include "nv0/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nv0 {

/// Timing and optical settings shared by the pulsed protocols.
struct ProtocolSettings {
    double pump_rate = 200.0 * units::MHz;  // init and readout laser, |0> -> |2>
    double branching_back = 0.5;
    double init_duration = 500.0 * units::ns;
    double settle = 100.0 * units::ns;  // dark time after init so |2> empties
    double readout_duration = 20.0 * units::ns;
    double bin_width = 2.0 * units::ns;
    double initial_p0 = 0.5;    // thermal |0> population before the first pulse
    double dt_fraction = 0.5;   // of max_stable_dt
    std::string electrode = "ac";

    double oder_pump_rate = 20.0 * units::MHz;  // must beat 1/T1 for a PL peak
    std::size_t oder_nodes = 401;
    double probe_rate = 1.0 * units::MHz;

    std::optional<std::uint64_t> seed;  // Poisson noise only when set
    double counts_scale = 1e6;          // detected photons per (Hz * s) of PL rate

    void validate() const {
        auto fail = [](const std::string& m) { throw ParamError("ProtocolSettings: " + m); };
        if (!(pump_rate > 0.0)) fail("pump_rate must be > 0");
        if (!(branching_back >= 0.0 && branching_back <= 1.0)) fail("branching_back must lie in [0, 1]");
        if (!(init_duration >= 0.0) || !(settle >= 0.0)) fail("durations must be >= 0");
        if (!(readout_duration > 0.0) || !(bin_width > 0.0)) fail("readout and bin width must be > 0");
        if (!(initial_p0 >= 0.0 && initial_p0 <= 1.0)) fail("initial_p0 must lie in [0, 1]");
        if (!(dt_fraction > 0.0 && dt_fraction <= 1.0)) fail("dt_fraction must lie in (0, 1]");
        if (!(oder_pump_rate > 0.0) || !(probe_rate > 0.0)) fail("optical rates must be > 0");
        if (oder_nodes < 3 || oder_nodes % 2 == 0) fail("oder_nodes must be odd and >= 3");
        if (!(counts_scale > 0.0)) fail("counts_scale must be > 0");
    }
};

namespace detail {

inline void snapshot_params(Dataset& d, const NVParams& p) {
    d.set_meta("lambda_so_Hz", text::format_double(p.lambda_so));
    d.set_meta("eps_perp_Hz", text::format_double(p.eps_perp));
    d.set_meta("d_par_Hz_per_V_per_m", text::format_double(p.d_par));
    d.set_meta("d_perp_Hz_per_V_per_m", text::format_double(p.d_perp));
    d.set_meta("d_perp_dc_Hz_per_V_per_m", text::format_double(p.d_perp_dc));
    d.set_meta("T1_s", text::format_double(p.T1));
    d.set_meta("Tphi_s", text::format_double(p.Tphi));
    d.set_meta("optical_linewidth_fwhm_Hz", text::format_double(p.optical_linewidth_fwhm));
    d.set_meta("transition_Hz", text::format_double(transition_frequency(p)));
}

inline void snapshot_settings(Dataset& d, const ProtocolSettings& s) {
    d.set_meta("seed", s.seed ? std::to_string(*s.seed) : std::string("none"));
}

/// Noisy counts for an expected PL rate: Poisson(rate * bin * scale), mapped
/// back to a rate so noisy and noiseless traces share units.
inline double noisy_rate(double rate, double bin, const ProtocolSettings& s, std::mt19937_64& rng) {
    const double mean = std::max(0.0, rate) * bin * s.counts_scale;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<double>(dist(rng)) / (bin * s.counts_scale);
}

inline std::mt19937_64 point_rng(const ProtocolSettings& s, std::size_t index) {
    return std::mt19937_64(splitmix64(*s.seed + index));
}

inline Readout readout_segment(const ProtocolSettings& s, double duration) {
    return Readout{duration, s.pump_rate, s.branching_back, s.bin_width};
}

/// State after the initializing readout (and optional settle time) plus the
/// first-bin PL of that readout, the reference A. Shared by every sweep
/// point. The pump is incoherent and the initial mixture diagonal, so the
/// prepared state has no 0-1 coherence and is valid in any rotating frame.
struct Prepared {
    DensityState rho;
    double reference = 0.0;
};

inline Prepared prepare(const NVParams& p, const ElectrodeGeometry& g, const ProtocolSettings& s, bool settle) {
    PulseSequence seq;
    seq.add(readout_segment(s, s.init_duration));
    if (settle) seq.add(Wait{s.settle});
    const double dt = s.dt_fraction * max_stable_dt(seq, p, g);
    const auto res = evolve(DensityState::mixture(s.initial_p0), seq, p, g, dt);
    return {res.rho_final, res.trace.first_bin_of_optical(0)};
}

/// Runs `body` (ending in a Readout) from the prepared state and returns B/A,
/// the first-bin PL of the final readout over the reference.
inline double normalized_pl(const Prepared& prep, const PulseSequence& body, const NVParams& p,
                            const ElectrodeGeometry& g, const ProtocolSettings& s, std::size_t point) {
    const double dt = s.dt_fraction * max_stable_dt(body, p, g);
    const auto res = evolve(prep.rho, body, p, g, dt);
    std::size_t n_optical = 0;
    for (const auto& seg : body.segments)
        if (std::holds_alternative<Readout>(seg) || std::holds_alternative<OpticalPump>(seg)) ++n_optical;
    double a = prep.reference;
    double b = res.trace.first_bin_of_optical(n_optical - 1);
    if (s.seed) {
        auto rng = point_rng(s, point);
        a = noisy_rate(a, s.bin_width, s, rng);
        b = noisy_rate(b, s.bin_width, s, rng);
    }
    if (!(a > 0.0)) throw DynamicsError("normalized_pl: reference readout recorded no photons");
    return b / a;
}

inline std::vector<double> finite_check(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw ParamError(std::string(what) + ": values must be finite");
    return v;
}

}  // namespace detail

// ---- dc PLE --------------------------------------------------------------------

/// Branch frequencies E+ and E- versus dc voltage on `electrode`. Uses the
/// dc transverse susceptibility.
inline Dataset ple_scan(const NVParams& params, const ElectrodeGeometry& geom, const std::string& electrode,
                        const std::vector<double>& volts) {
    params.validate();
    geom.validate();
    detail::finite_check(volts, "ple_scan volts");
    const NVParams p = params.dc_view();
    const FieldVectorLab& per_volt = geom.per_volt(electrode);
    const auto rows = parallel_map(volts.size(), [&](std::size_t i) {
        const FieldVectorNV e = lab_to_nv(per_volt * volts[i], geom);
        return eigen_closed_form(p, e);
    });
    Dataset d;
    d.x_name = "voltage";
    d.x_unit = "V";
    d.x = volts;
    std::vector<double> ep, em, diff, mean;
    for (const auto& r : rows) {
        ep.push_back(r.E_plus);
        em.push_back(r.E_minus);
        diff.push_back(r.E_plus - r.E_minus);
        mean.push_back(0.5 * (r.E_plus + r.E_minus));
    }
    d.add_column("E_plus", "Hz", ep);
    d.add_column("E_minus", "Hz", em);
    d.add_column("difference", "Hz", diff);
    d.add_column("mean", "Hz", mean);
    d.set_meta("protocol", "ple_scan");
    d.set_meta("electrode", electrode);
    detail::snapshot_params(d, params);
    return d;
}

// ---- T1 ------------------------------------------------------------------------

/// Pump into |1>, wait, read out. B/A against the dark delay.
inline Dataset t1_protocol(const NVParams& params, const std::vector<double>& delays,
                           const ProtocolSettings& s = {}, const ElectrodeGeometry& geom = {}) {
    params.validate();
    s.validate();
    for (double t : detail::finite_check(delays, "t1_protocol delays"))
        if (t < 0.0) throw ParamError("t1_protocol: delays must be >= 0");
    const auto prep = detail::prepare(params, geom, s, false);
    const auto y = parallel_map(delays.size(), [&](std::size_t i) {
        PulseSequence seq;
        seq.add(Wait{delays[i]});
        seq.add(detail::readout_segment(s, s.readout_duration));
        return detail::normalized_pl(prep, seq, params, geom, s, i);
    });
    Dataset d;
    d.x_name = "delay";
    d.x_unit = "s";
    d.x = delays;
    d.add_column("normalized_pl", "1", y);
    d.set_meta("protocol", "t1");
    detail::snapshot_params(d, params);
    detail::snapshot_settings(d, s);
    return d;
}

// ---- ODER ----------------------------------------------------------------------

/// Steady-state PL under weak readout and a microwave of `power` watts swept
/// over `freqs`, averaged over the static inhomogeneous distribution.
inline Dataset oder_scan(const NVParams& params, const ElectrodeGeometry& geom, double power,
                         const std::vector<double>& freqs, const ProtocolSettings& s = {}) {
    params.validate();
    geom.validate();
    s.validate();
    for (double f : detail::finite_check(freqs, "oder_scan freqs"))
        if (!(f > 0.0)) throw ParamError("oder_scan: frequencies must be > 0");
    const double fr = rabi_frequency(params, geom, s.electrode, power);
    const double nu = transition_frequency(params);
    const OpticalPumping optical{s.oder_pump_rate, s.branching_back};
    const double gamma = params.gamma_rad();
    const double bin = s.readout_duration;
    const auto y = parallel_map(freqs.size(), [&](std::size_t i) {
        auto run = [&](double offset) {
            return gamma * steady_state(params, nu + offset - freqs[i], fr, optical).population(2);
        };
        double rate = inhomogeneous_average(run, params.optical_linewidth_fwhm, s.oder_nodes);
        if (s.seed) {
            auto rng = detail::point_rng(s, i);
            rate = detail::noisy_rate(rate, bin, s, rng);
        }
        return rate;
    });
    Dataset d;
    d.x_name = "frequency";
    d.x_unit = "Hz";
    d.x = freqs;
    d.add_column("pl_rate", "Hz", y);
    d.set_meta("protocol", "oder");
    d.set_meta("power_W", text::format_double(power));
    d.set_meta("rabi_frequency_Hz", text::format_double(fr));
    detail::snapshot_params(d, params);
    detail::snapshot_settings(d, s);
    return d;
}

// ---- Autler-Townes splitting map --------------------------------------------------

struct SplittingMap {
    Dataset map;        // probe detuning vs PL, one column per power
    Dataset splitting;  // sqrt(power) vs extracted peak separation
    double slope = 0.0;       // Hz per sqrt(W), resolved points only
    double r_squared = 0.0;
    std::size_t n_resolved = 0;
};

struct PeakPair {
    double separation = 0.0;
    double fwhm = 0.0;
    bool resolved = false;
};

/// Two-Gaussian peak extraction with a shared width. Peaks closer than the
/// fitted FWHM count as unresolved.
inline PeakPair extract_peak_pair(const std::vector<double>& x, const std::vector<double>& y) {
    const auto single = guess::gaussian_line(x, y);
    // local maxima above half height, highest two
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] - single[3] > 0.5 * single[0]) peaks.push_back(i);
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    double c1 = single[1] - 0.25 * single[2], c2 = single[1] + 0.25 * single[2];
    double w = 0.5 * single[2];
    if (peaks.size() >= 2) {
        c1 = x[std::min(peaks[0], peaks[1])];
        c2 = x[std::max(peaks[0], peaks[1])];
        w = std::min(single[2], c2 - c1);
    }
    const auto model = models::double_gaussian();
    const double a = 0.5 * single[0] + (peaks.size() >= 2 ? 0.5 * single[0] : 0.0);
    PeakPair out;
    try {
        const auto r = fit(model, x, y, {a, c1, a, c2, w, single[3]});
        out.separation = std::abs(r.theta[3] - r.theta[1]);
        out.fwhm = std::abs(r.theta[4]);
        out.resolved = r.converged && out.separation >= out.fwhm && std::min(r.theta[0], r.theta[2]) > 0.0;
    } catch (const FitError&) {
        out.resolved = false;
    }
    if (!out.resolved) out.separation = 0.0;
    return out;
}

/// Probe-laser spectrum of the microwave-dressed ground states. With the
/// drive resonant, the states (|0> +- |1>)/sqrt(2) sit at +-f_R/2 and the
/// probe reads their |0> content through the inhomogeneous optical line.
inline SplittingMap splitting_map(const NVParams& params, const ElectrodeGeometry& geom,
                                  const std::vector<double>& powers, const std::vector<double>& freqs,
                                  const ProtocolSettings& s = {}) {
    params.validate();
    geom.validate();
    s.validate();
    for (double pw : detail::finite_check(powers, "splitting_map powers"))
        if (pw < 0.0) throw ParamError("splitting_map: powers must be >= 0");
    detail::finite_check(freqs, "splitting_map freqs");
    if (freqs.size() < 8) throw ParamError("splitting_map: need at least 8 probe frequencies");
    const double fwhm = params.optical_linewidth_fwhm > 0.0 ? params.optical_linewidth_fwhm
                                                            : 1.0 / (std::numbers::pi * params.T2_star());
    const double k = 4.0 * std::numbers::ln2 / (fwhm * fwhm);
    const OpticalPumping probe{s.probe_rate, s.branching_back};

    struct Row {
        std::vector<double> spectrum;
        PeakPair peaks;
    };
    const auto rows = parallel_map(powers.size(), [&](std::size_t ip) {
        const double fr = rabi_frequency(params, geom, s.electrode, powers[ip]);
        const Op3 h3 = rotating_frame_hamiltonian(0.0, fr);
        Op2 h(Basis::LEVELS_012);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) h(i, j) = h3(i, j);
        const auto es = hermitian_eig(h);
        const DensityState ss = steady_state(params, 0.0, fr, probe);
        std::array<double, 2> weight{};
        for (std::size_t kk = 0; kk < 2; ++kk) {
            cplx pk = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) pk += std::conj(es.vectors(i, kk)) * ss.rho(i, j) * es.vectors(j, kk);
            weight[kk] = pk.real() * std::norm(es.vectors(0, kk));
        }
        Row row;
        row.spectrum.resize(freqs.size());
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            double v = 0.0;
            for (std::size_t kk = 0; kk < 2; ++kk) {
                const double u = freqs[i] - es.values[kk];
                v += weight[kk] * std::exp(-k * u * u);
            }
            row.spectrum[i] = params.gamma_rad() * v;
        }
        if (s.seed) {
            auto rng = detail::point_rng(s, ip);
            for (auto& v : row.spectrum) v = detail::noisy_rate(v, s.readout_duration, s, rng);
        }
        row.peaks = extract_peak_pair(freqs, row.spectrum);
        return row;
    });

    SplittingMap out;
    out.map.x_name = "probe_detuning";
    out.map.x_unit = "Hz";
    out.map.x = freqs;
    for (std::size_t ip = 0; ip < powers.size(); ++ip)
        out.map.add_column("pl@" + text::format_double(powers[ip]) + "W", "Hz", rows[ip].spectrum);
    out.map.set_meta("protocol", "splitting_map");
    detail::snapshot_params(out.map, params);
    detail::snapshot_settings(out.map, s);

    out.splitting.x_name = "sqrt_power";
    out.splitting.x_unit = "W^0.5";
    std::vector<double> sep, fw, res, xr, yr;
    for (std::size_t ip = 0; ip < powers.size(); ++ip) {
        const double sp = std::sqrt(powers[ip]);
        out.splitting.x.push_back(sp);
        sep.push_back(rows[ip].peaks.separation);
        fw.push_back(rows[ip].peaks.fwhm);
        res.push_back(rows[ip].peaks.resolved ? 1.0 : 0.0);
        if (rows[ip].peaks.resolved) {
            xr.push_back(sp);
            yr.push_back(rows[ip].peaks.separation);
        }
    }
    out.splitting.add_column("separation", "Hz", sep);
    out.splitting.add_column("fitted_fwhm", "Hz", fw);
    out.splitting.add_column("resolved", "1", res);
    out.n_resolved = xr.size();
    if (xr.size() >= 2) {
        const auto r = fit(models::linear_origin(), xr, yr, guess::linear_origin(xr, yr));
        out.slope = r.theta[0];
        double mean = 0.0;
        for (double v : yr) mean += v;
        mean /= static_cast<double>(yr.size());
        double ss_res = 0.0, ss_tot = 0.0;
        for (std::size_t i = 0; i < xr.size(); ++i) {
            ss_res += (yr[i] - out.slope * xr[i]) * (yr[i] - out.slope * xr[i]);
            ss_tot += (yr[i] - mean) * (yr[i] - mean);
        }
        out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
    out.splitting.set_meta("protocol", "splitting_map");
    out.splitting.set_meta("slope_Hz_per_sqrtW", text::format_double(out.slope));
    out.splitting.set_meta("r_squared", text::format_double(out.r_squared));
    out.splitting.set_meta("resolved_points", std::to_string(out.n_resolved));
    return out;
}

// ---- Rabi -------------------------------------------------------------------------

/// Init, resonant pulse of each width, readout.
inline Dataset rabi_scan(const NVParams& params, const ElectrodeGeometry& geom, double power,
                         const std::vector<double>& widths, const ProtocolSettings& s = {}) {
    params.validate();
    geom.validate();
    s.validate();
    for (double w : detail::finite_check(widths, "rabi_scan widths"))
        if (w < 0.0) throw ParamError("rabi_scan: widths must be >= 0");
    const double nu = transition_frequency(params);
    const auto prep = detail::prepare(params, geom, s, true);
    const auto y = parallel_map(widths.size(), [&](std::size_t i) {
        PulseSequence seq;
        seq.add(MicrowavePulse{widths[i], power, nu, 0.0, s.electrode});
        seq.add(detail::readout_segment(s, s.readout_duration));
        return detail::normalized_pl(prep, seq, params, geom, s, i);
    });
    Dataset d;
    d.x_name = "width";
    d.x_unit = "s";
    d.x = widths;
    d.add_column("normalized_pl", "1", y);
    d.set_meta("protocol", "rabi");
    d.set_meta("power_W", text::format_double(power));
    d.set_meta("rabi_frequency_Hz", text::format_double(rabi_frequency(params, geom, s.electrode, power)));
    detail::snapshot_params(d, params);
    detail::snapshot_settings(d, s);
    return d;
}

// ---- Ramsey -----------------------------------------------------------------------

/// Two pi/2 pulses, each 1/(4 f_R) long at `power`, with the drive set
/// `detuning` below the transition.
inline Dataset ramsey_scan(const NVParams& params, const ElectrodeGeometry& geom, double detuning,
                           const std::vector<double>& delays, double power, const ProtocolSettings& s = {}) {
    params.validate();
    geom.validate();
    s.validate();
    for (double t : detail::finite_check(delays, "ramsey_scan delays"))
        if (t < 0.0) throw ParamError("ramsey_scan: delays must be >= 0");
    const double nu = transition_frequency(params);
    const double f_drive = nu - detuning;
    if (!(f_drive > 0.0)) throw ParamError("ramsey_scan: detuning exceeds the transition frequency");
    const double fr = rabi_frequency(params, geom, s.electrode, power);
    if (!(fr > 0.0)) throw ParamError("ramsey_scan: drive power gives no Rabi frequency");
    const double half_pi = 1.0 / (4.0 * fr);
    const auto prep = detail::prepare(params, geom, s, true);
    const auto y = parallel_map(delays.size(), [&](std::size_t i) {
        PulseSequence seq;
        seq.add(MicrowavePulse{half_pi, power, f_drive, 0.0, s.electrode});
        seq.add(Wait{delays[i]});
        seq.add(MicrowavePulse{half_pi, power, f_drive, 0.0, s.electrode});
        seq.add(detail::readout_segment(s, s.readout_duration));
        return detail::normalized_pl(prep, seq, params, geom, s, i);
    });
    Dataset d;
    d.x_name = "delay";
    d.x_unit = "s";
    d.x = delays;
    d.add_column("normalized_pl", "1", y);
    d.set_meta("protocol", "ramsey");
    d.set_meta("detuning_Hz", text::format_double(detuning));
    d.set_meta("power_W", text::format_double(power));
    d.set_meta("half_pi_s", text::format_double(half_pi));
    detail::snapshot_params(d, params);
    detail::snapshot_settings(d, s);
    return d;
}

// ---- protocol fits ----------------------------------------------------------------

struct ProtocolFit {
    FitModel model;
    FitResult result;
};

/// Delays below `min_delay` are left out: right after the pump the excited
/// state is still emptying, which adds a transient on the excited-lifetime
/// scale that the recovery model does not describe.
inline ProtocolFit fit_t1(const Dataset& d, double min_delay = 0.0) {
    const auto& yall = d.first_column().values;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < d.x.size(); ++i)
        if (d.x[i] >= min_delay) {
            x.push_back(d.x[i]);
            y.push_back(yall[i]);
        }
    ProtocolFit f{models::t1_recovery(), {}};
    if (x.size() < 4) throw FitError("fit_t1: fewer than 4 delays at or above the minimum delay");
    f.result = fit(f.model, x, y, guess::t1_recovery(x, y));
    return f;
}

inline ProtocolFit fit_damped_sine(const Dataset& d) {
    const auto& y = d.first_column().values;
    ProtocolFit f{models::damped_sine(), {}};
    f.result = fit(f.model, d.x, y, guess::damped_sine(d.x, y));
    // fold to a positive amplitude and frequency
    auto& th = f.result.theta;
    if (th[1] < 0.0) {
        th[1] = -th[1];
        th[2] = std::numbers::pi - th[2];
    }
    if (th[0] < 0.0) {
        th[0] = -th[0];
        th[2] += std::numbers::pi;
    }
    th[2] = std::remainder(th[2], two_pi);
    return f;
}

inline ProtocolFit fit_gaussian_line(const Dataset& d) {
    const auto& y = d.first_column().values;
    ProtocolFit f{models::gaussian_line(), {}};
    f.result = fit(f.model, d.x, y, guess::gaussian_line(d.x, y));
    f.result.theta[2] = std::abs(f.result.theta[2]);
    return f;
}

/// Branch difference against voltage with lambda held at params.lambda_so.
inline ProtocolFit fit_ple(const Dataset& d, const NVParams& params, const ElectrodeGeometry& geom,
                           const std::string& electrode) {
    const auto& y = d.column("difference").values;
    ProtocolFit f{models::splitting_hyperbola(geom, electrode, params.strain_axis_angle), {}};
    f.result = fit(f.model, d.x, y, guess::splitting_hyperbola(d.x, y, params.lambda_so, geom, electrode));
    return f;
}

}  // namespace nv0

#endif  // NV0_EXPERIMENTS_HPP
