// nv0sim command-line front end. Kept in a header so tests can drive it in
// process.
//
// Exit codes: 0 success, 2 invalid input (flags, configuration, failed
// validation), 1 runtime failure.

#ifndef NV0_CLI_HPP
#define NV0_CLI_HPP

#include "nv0/config.hpp"
#include "nv0/dataset.hpp"
#include "nv0/estimation.hpp"
#include "nv0/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nv0::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int runtime = 1;
inline constexpr int invalid = 2;
}  // namespace exit_code

struct Options {
    std::string config = "default";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::vector<std::string> sets;
    std::optional<std::size_t> bootstrap;
    // sweep flags
    std::string volts, delays, freqs, widths, powers, power, detuning, electrode;
    // fit
    std::string model, data, column, p0;
    std::vector<std::string> fixes;
};

namespace detail {

inline std::string strip_extension(std::string path) {
    for (const char* ext : {".csv", ".json"}) {
        const std::string e(ext);
        if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
            return path.substr(0, path.size() - e.size());
    }
    return path;
}

inline std::vector<KeyValue> overrides_for(const std::string& cmd, const Options& o) {
    std::vector<KeyValue> kv;
    int line = 0;
    auto add = [&](const std::string& key, const std::string& value) {
        if (!value.empty()) kv.push_back({key, value, ++line});
    };
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        kv.push_back({std::string(text::trim(s.substr(0, eq))), std::string(text::trim(s.substr(eq + 1))), ++line});
    }
    if (o.seed) add("run.seed", std::to_string(*o.seed));
    add("run.format", o.format);
    if (o.bootstrap) add("run.bootstrap", std::to_string(*o.bootstrap));
    if (cmd == "ple-scan") {
        add("sweep.ple.volts", o.volts);
        add("sweep.ple.electrode", o.electrode);
    } else if (cmd == "t1") {
        add("sweep.t1.delays", o.delays);
    } else if (cmd == "oder") {
        add("sweep.oder.power", o.power);
        add("sweep.oder.freqs", o.freqs);
    } else if (cmd == "rabi") {
        add("sweep.rabi.power", o.power);
        add("sweep.rabi.widths", o.widths);
    } else if (cmd == "splitting-map") {
        add("sweep.splitting.powers", o.powers);
        add("sweep.splitting.freqs", o.freqs);
    } else if (cmd == "ramsey") {
        add("sweep.ramsey.detuning", o.detuning);
        add("sweep.ramsey.power", o.power);
        add("sweep.ramsey.delays", o.delays);
    }
    return kv;
}

inline std::string serialize(const Dataset& d, const std::string& format) {
    return format == "json" ? to_json(d).dump(2) + "\n" : to_csv(d);
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

struct Emitter {
    std::string base;
    std::string format;
    std::ostream& out;
    std::vector<std::string> written;

    void dataset(const Dataset& d, const std::string& suffix = "") {
        const std::string path = base + suffix + "." + format;
        write_file(path, serialize(d, format));
        written.push_back(path);
        out << "wrote " << path << "\n";
    }
    void fit(const nlohmann::ordered_json& j) {
        const std::string path = base + ".fit.json";
        write_json(path, j);
        written.push_back(path);
        out << "wrote " << path << "\n";
    }
};

inline nlohmann::ordered_json report(const std::string& protocol, const FitModel& model, const FitResult& r,
                                     const std::vector<double>& x, const std::vector<double>& y, const RunConfig& cfg) {
    std::optional<BootstrapReport> boot;
    if (cfg.bootstrap > 0) boot = bootstrap(model, x, y, r.theta, cfg.bootstrap, cfg.seed.value_or(0));
    auto j = fit_report_json(model, r, boot ? &*boot : nullptr);
    nlohmann::ordered_json top;
    top["protocol"] = protocol;
    top["seed"] = cfg.seed ? nlohmann::ordered_json(*cfg.seed) : nlohmann::ordered_json(nullptr);
    for (auto it = j.begin(); it != j.end(); ++it) top[it.key()] = it.value();
    return top;
}

inline std::vector<double> column_of(const Dataset& d) { return d.first_column().values; }

inline int run_protocol(const std::string& cmd, const RunConfig& cfg, Emitter& em) {
    const auto& p = cfg.params;
    const auto& g = cfg.geometry;
    const auto& s = cfg.protocol;
    const auto& sw = cfg.sweep;
    if (cmd == "ple-scan") {
        const Dataset d = ple_scan(p, g, sw.ple_electrode, sw.ple_volts);
        em.dataset(d);
        if (d.x.size() >= 3 && (p.d_perp_dc != 0.0)) {
            const auto f = fit_ple(d, p, g, sw.ple_electrode);
            auto j = report("ple-scan", f.model, f.result, d.x, d.column("difference").values, cfg);
            j["derived"] = {{"eps_perp_Hz", f.result.value("eps_perp")},
                            {"d_perp_dc_kHz_per_V_per_cm", f.result.value("d_perp") / units::kHz_per_V_per_cm}};
            em.fit(j);
            em.out << "eps_perp = " << f.result.value("eps_perp") << " Hz, d_perp = "
                   << f.result.value("d_perp") / units::kHz_per_V_per_cm << " kHz/(V/cm)\n";
        } else {
            em.out << "transverse dc susceptibility is zero: no hyperbola fit\n";
        }
    } else if (cmd == "t1") {
        const Dataset d = t1_protocol(p, sw.t1_delays, s, g);
        em.dataset(d);
        const auto f = fit_t1(d, sw.t1_fit_min_delay);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < d.x.size(); ++i)
            if (d.x[i] >= sw.t1_fit_min_delay) x.push_back(d.x[i]), y.push_back(d.first_column().values[i]);
        auto j = report("t1", f.model, f.result, x, y, cfg);
        j["derived"] = {{"T1_s", f.result.value("T1")}, {"fit_min_delay_s", sw.t1_fit_min_delay}};
        em.fit(j);
        em.out << "T1 = " << f.result.value("T1") << " s\n";
    } else if (cmd == "oder") {
        const Dataset d = oder_scan(p, g, sw.oder_power, sw.oder_freqs, s);
        em.dataset(d);
        const auto f = fit_gaussian_line(d);
        auto j = report("oder", f.model, f.result, d.x, column_of(d), cfg);
        j["derived"] = {{"center_Hz", f.result.value("center")}, {"fwhm_Hz", f.result.value("fwhm")}};
        em.fit(j);
        em.out << "center = " << f.result.value("center") << " Hz, FWHM = " << f.result.value("fwhm") << " Hz\n";
    } else if (cmd == "rabi") {
        const Dataset d = rabi_scan(p, g, sw.rabi_power, sw.rabi_widths, s);
        em.dataset(d);
        const auto f = fit_damped_sine(d);
        auto j = report("rabi", f.model, f.result, d.x, column_of(d), cfg);
        const double fr = f.result.value("omega") / two_pi;
        j["derived"] = {{"rabi_frequency_Hz", fr},
                        {"model_rabi_frequency_Hz", rabi_frequency(p, g, s.electrode, sw.rabi_power)},
                        {"slope_MHz_per_sqrt_uW", fr / units::MHz / std::sqrt(sw.rabi_power / units::uW)}};
        em.fit(j);
        em.out << "Rabi frequency = " << fr << " Hz\n";
    } else if (cmd == "splitting-map") {
        const auto m = splitting_map(p, g, sw.splitting_powers, sw.splitting_freqs, s);
        em.dataset(m.map);
        em.dataset(m.splitting, ".splitting");
        nlohmann::ordered_json j;
        j["protocol"] = "splitting-map";
        j["seed"] = cfg.seed ? nlohmann::ordered_json(*cfg.seed) : nlohmann::ordered_json(nullptr);
        j["model"] = "linear_origin";
        j["resolved_points"] = m.n_resolved;
        j["slope_Hz_per_sqrt_W"] = m.slope;
        j["slope_MHz_per_sqrt_uW"] = m.slope / units::MHz * std::sqrt(units::uW);
        j["r_squared"] = m.r_squared;
        em.fit(j);
        em.out << "splitting slope = " << m.slope / units::MHz * std::sqrt(units::uW) << " MHz/uW^0.5 (R^2 "
               << m.r_squared << ", " << m.n_resolved << " resolved)\n";
    } else if (cmd == "ramsey") {
        const Dataset d = ramsey_scan(p, g, sw.ramsey_detuning, sw.ramsey_delays, sw.ramsey_power, s);
        em.dataset(d);
        const auto f = fit_damped_sine(d);
        auto j = report("ramsey", f.model, f.result, d.x, column_of(d), cfg);
        j["derived"] = {{"fringe_frequency_Hz", f.result.value("omega") / two_pi},
                        {"T2star_s", f.result.value("T2star")},
                        {"set_detuning_Hz", sw.ramsey_detuning}};
        em.fit(j);
        em.out << "fringe frequency = " << f.result.value("omega") / two_pi << " Hz, T2* = " << f.result.value("T2star")
               << " s\n";
    }
    return exit_code::ok;
}

inline Dataset load_dataset(const std::string& path) {
    const std::string content = read_file(path);
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        try {
            return dataset_from_json(nlohmann::ordered_json::parse(content));
        } catch (const nlohmann::json::parse_error& e) {
            throw DatasetError(path + ": " + e.what());
        }
    }
    return from_csv(content);
}

inline int run_fit(const RunConfig& cfg, const Options& o, Emitter& em) {
    const Dataset d = load_dataset(o.data);
    const auto& col = o.column.empty() ? d.first_column() : d.column(o.column);
    const std::string electrode = o.electrode.empty() ? cfg.sweep.ple_electrode : o.electrode;
    FitModel model;
    if (o.model == "double_gaussian") {
        model = models::double_gaussian();
    } else if (o.model == "splitting_hyperbola") {
        model = models::splitting_hyperbola(cfg.geometry, electrode, cfg.params.strain_axis_angle);
    } else {
        auto lib = model_library(cfg.geometry, electrode);
        const auto it = lib.find(o.model);
        if (it == lib.end()) throw ConfigError("unknown model '" + o.model + "'");
        model = it->second;
    }
    std::vector<double> theta0;
    if (!o.p0.empty()) {
        theta0 = parse_values(o.p0, Dim::Dimensionless, "--p0");
    } else if (o.model == "t1_recovery") {
        theta0 = guess::t1_recovery(d.x, col.values);
    } else if (o.model == "damped_sine") {
        theta0 = guess::damped_sine(d.x, col.values);
    } else if (o.model == "gaussian_line") {
        theta0 = guess::gaussian_line(d.x, col.values);
    } else if (o.model == "linear_origin") {
        theta0 = guess::linear_origin(d.x, col.values);
    } else if (o.model == "splitting_hyperbola") {
        theta0 = guess::splitting_hyperbola(d.x, col.values, cfg.params.lambda_so, cfg.geometry, electrode);
    } else {
        throw ConfigError("model '" + o.model + "' needs --p0");
    }
    if (theta0.size() != model.n_params())
        throw ConfigError("--p0 has " + std::to_string(theta0.size()) + " values, model '" + o.model + "' takes " +
                          std::to_string(model.n_params()));
    for (const auto& fx : o.fixes) {
        const auto eq = fx.find('=');
        const std::string name(text::trim(fx.substr(0, eq)));
        std::size_t idx = 0;
        try {
            idx = model.index_of(name);
        } catch (const FitError& e) {
            throw ConfigError(e.what());
        }
        model.fix(name);
        if (eq != std::string::npos) theta0[idx] = parse_scalar(fx.substr(eq + 1), Dim::Dimensionless, "--fix " + name);
    }
    const auto r = fit(model, d.x, col.values, theta0);
    em.fit(report("fit", model, r, d.x, col.values, cfg));
    for (std::size_t i = 0; i < r.theta.size(); ++i) em.out << r.names[i] << " = " << r.theta[i] << "\n";
    return r.converged ? exit_code::ok : exit_code::runtime;
}

/// Invariant self-check on the loaded configuration.
inline int run_validate(const RunConfig& cfg, std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
        out << (ok ? "PASS " : "FAIL ") << name << (detail.empty() ? "" : " (" + detail + ")") << "\n";
        if (!ok) ++failures;
    };
    check("configuration", true);

    std::mt19937_64 rng(cfg.seed.value_or(1));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        NVParams q = cfg.params;
        q.lambda_so = 1e9 + 5e9 * std::abs(u(rng));
        q.eps_perp = 5e9 * std::abs(u(rng));
        const FieldVectorNV e{1e5 * u(rng), 1e5 * u(rng), 1e5 * u(rng)};
        const auto cf = eigen_closed_form(q, e);
        const auto es = hermitian_eig(h_strain_dc(q, e));
        const double scale = std::max(std::abs(cf.E_plus), std::abs(cf.E_minus));
        worst = std::max({worst, std::abs(cf.E_minus - es.values[0]) / scale, std::abs(cf.E_plus - es.values[1]) / scale});
    }
    check("closed-form eigenvalues match Jacobi", worst < 1e-9, "max rel " + text::format_double(worst));

    bool norms = true;
    for (const auto& [name, v] : cfg.geometry.electrodes) {
        const double a = v.norm(), b = lab_to_nv(v, cfg.geometry).norm();
        if (std::abs(a - b) > 1e-9 * std::max(a, 1.0)) norms = false;
    }
    check("frame rotation preserves norms", norms);

    const auto q = gauss_hermite(cfg.protocol.oder_nodes);
    double wsum = 0.0;
    for (double w : q.weights) wsum += w;
    check("quadrature weights sum to 1", std::abs(wsum - 1.0) < 1e-12);

    try {
        PulseSequence seq;
        seq.add(Readout{cfg.protocol.init_duration, cfg.protocol.pump_rate, cfg.protocol.branching_back,
                        cfg.protocol.bin_width});
        seq.add(MicrowavePulse{20e-9, cfg.sweep.rabi_power, transition_frequency(cfg.params), 0.0,
                               cfg.protocol.electrode});
        seq.add(Wait{100e-9});
        const double dt = max_stable_dt(seq, cfg.params, cfg.geometry);
        const auto res = evolve(DensityState::mixture(cfg.protocol.initial_p0), seq, cfg.params, cfg.geometry, dt);
        const auto err = check_invariants(res.rho_final);
        check("density-matrix invariants through a pulse sequence", !err, err.value_or(""));
    } catch (const std::exception& e) {
        check("density-matrix invariants through a pulse sequence", false, e.what());
    }
    return failures == 0 ? exit_code::ok : exit_code::invalid;
}

}  // namespace detail

/// Parses arguments and runs. Output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"nv0sim: NV0 orbital dynamics simulator and fitter"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "configuration file or name (default: built-in)");
    app.add_option("--seed", o.seed, "64-bit seed; enables Poisson noise");
    app.add_option("--out", o.out, "output path stem");
    app.add_option("--format", o.format, "csv or json");
    app.add_option("--set", o.sets, "override a configuration key, key=value");
    app.add_option("--bootstrap", o.bootstrap, "bootstrap resamples for the fit (>= 100)");

    auto* ple = app.add_subcommand("ple-scan", "dc PLE branch frequencies vs voltage");
    ple->add_option("--volts", o.volts, "lo:hi:step in V");
    ple->add_option("--electrode", o.electrode, "electrode name");
    auto* t1 = app.add_subcommand("t1", "orbital relaxation protocol");
    t1->add_option("--delays", o.delays, "lo:hi:step in s");
    auto* oder = app.add_subcommand("oder", "optically detected electrical resonance");
    oder->add_option("--power", o.power, "microwave power in W");
    oder->add_option("--freqs", o.freqs, "lo:hi:step in Hz");
    auto* rabi = app.add_subcommand("rabi", "Rabi oscillation vs pulse width");
    rabi->add_option("--power", o.power, "microwave power in W");
    rabi->add_option("--widths", o.widths, "lo:hi:step in s");
    auto* smap = app.add_subcommand("splitting-map", "Autler-Townes splitting vs power");
    smap->add_option("--powers", o.powers, "list of powers in W");
    smap->add_option("--freqs", o.freqs, "probe detunings lo:hi:step in Hz");
    auto* ramsey = app.add_subcommand("ramsey", "Ramsey interference vs free-evolution time");
    ramsey->add_option("--detuning", o.detuning, "drive detuning in Hz");
    ramsey->add_option("--power", o.power, "pulse power in W");
    ramsey->add_option("--delays", o.delays, "lo:hi:step in s");
    auto* fitc = app.add_subcommand("fit", "fit a model to a CSV or JSON dataset");
    fitc->add_option("--model", o.model, "model name")->required();
    fitc->add_option("--data", o.data, "dataset path")->required();
    fitc->add_option("--column", o.column, "y column (default: first)");
    fitc->add_option("--p0", o.p0, "starting values, comma separated");
    fitc->add_option("--fix", o.fixes, "fix a parameter, name or name=value");
    fitc->add_option("--electrode", o.electrode, "electrode for splitting_hyperbola");
    app.add_subcommand("validate", "check the configuration and run the invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::invalid;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        cfg = load_config(o.config, detail::overrides_for(cmd, o));
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_code::invalid;
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_code::invalid;
    }

    if (cmd == "validate") return detail::run_validate(cfg, out);

    std::string base = detail::strip_extension(o.out);
    if (base.empty()) {
        base = "nv0_" + cmd;
        std::replace(base.begin(), base.end(), '-', '_');
    }
    detail::Emitter em{base, cfg.format, out, {}};
    try {
        if (cmd == "fit") return detail::run_fit(cfg, o, em);
        return detail::run_protocol(cmd, cfg, em);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::invalid;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::invalid;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return exit_code::runtime;
    }
}

}  // namespace nv0::cli

#endif  // NV0_CLI_HPP
