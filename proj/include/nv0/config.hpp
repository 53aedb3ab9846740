// Run configuration: dotted "section.key = value [unit]" text, parsed to SI.
//
// Values are a number, a whitespace or comma separated list, or an inclusive
// range lo:hi:step, optionally followed by one unit token. Bare numbers are
// taken as SI. A unit of the wrong dimension is an error, as is any key not
// listed in the schema below.

#ifndef NV0_CONFIG_HPP
#define NV0_CONFIG_HPP

#include "nv0/experiments.hpp"
#include "nv0/fields.hpp"
#include "nv0/kvfile.hpp"
#include "nv0/params.hpp"
#include "nv0/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nv0 {

enum class Dim { Frequency, Time, Power, Voltage, Susceptibility, Angle, Resistance, Dimensionless };

inline const char* to_string(Dim d) {
    switch (d) {
        case Dim::Frequency: return "frequency (Hz, kHz, MHz, GHz)";
        case Dim::Time: return "time (s, ms, us, ns, ps)";
        case Dim::Power: return "power (W, mW, uW, nW)";
        case Dim::Voltage: return "voltage (V, mV)";
        case Dim::Susceptibility: return "susceptibility (Hz/(V/m), kHz/(V/cm), MHz/(V/cm))";
        case Dim::Angle: return "angle (rad, deg)";
        case Dim::Resistance: return "resistance (ohm)";
        case Dim::Dimensionless: return "dimensionless";
    }
    return "?";
}

namespace detail {

struct UnitDef {
    const char* name;
    Dim dim;
    double scale;
};

inline const std::vector<UnitDef>& unit_table() {
    static const std::vector<UnitDef> t = {
        {"Hz", Dim::Frequency, 1.0},
        {"kHz", Dim::Frequency, units::kHz},
        {"MHz", Dim::Frequency, units::MHz},
        {"GHz", Dim::Frequency, units::GHz},
        {"s", Dim::Time, 1.0},
        {"ms", Dim::Time, units::ms},
        {"us", Dim::Time, units::us},
        {"\xC2\xB5s", Dim::Time, units::us},
        {"ns", Dim::Time, units::ns},
        {"ps", Dim::Time, 1e-12},
        {"W", Dim::Power, 1.0},
        {"mW", Dim::Power, units::mW},
        {"uW", Dim::Power, units::uW},
        {"\xC2\xB5W", Dim::Power, units::uW},
        {"nW", Dim::Power, 1e-9},
        {"V", Dim::Voltage, 1.0},
        {"mV", Dim::Voltage, units::mV},
        {"Hz/(V/m)", Dim::Susceptibility, 1.0},
        {"Hz/(V/cm)", Dim::Susceptibility, 1.0 / units::V_per_cm},
        {"kHz/(V/cm)", Dim::Susceptibility, units::kHz_per_V_per_cm},
        {"MHz/(V/cm)", Dim::Susceptibility, units::MHz_per_V_per_cm},
        {"rad", Dim::Angle, 1.0},
        {"deg", Dim::Angle, std::numbers::pi / 180.0},
        {"ohm", Dim::Resistance, 1.0},
    };
    return t;
}

inline const UnitDef* find_unit(std::string_view name) {
    for (const auto& u : unit_table())
        if (name == u.name) return &u;
    return nullptr;
}

}  // namespace detail

/// Parses "<numbers> [unit]" into SI values. `what` prefixes error messages.
inline std::vector<double> parse_values(std::string_view raw, Dim dim, const std::string& what) {
    std::string s(text::trim(raw));
    for (auto& c : s)
        if (c == ',') c = ' ';
    auto tokens = text::split_ws(s);
    if (tokens.empty()) throw ConfigError(what + ": missing value");
    double scale = 1.0;
    if (!text::parse_double(tokens.back()) && tokens.back().find(':') == std::string::npos) {
        const auto* u = detail::find_unit(tokens.back());
        if (!u) throw ConfigError(what + ": unknown unit '" + tokens.back() + "'");
        if (u->dim != dim)
            throw ConfigError(what + ": unit '" + tokens.back() + "' does not match expected " + to_string(dim));
        scale = u->scale;
        tokens.pop_back();
        if (tokens.empty()) throw ConfigError(what + ": missing number before unit");
    }
    std::vector<double> out;
    for (const auto& tok : tokens) {
        if (tok.find(':') != std::string::npos) {
            const auto parts = text::split(tok, ':');
            if (parts.size() != 3) throw ConfigError(what + ": range must be lo:hi:step, got '" + tok + "'");
            const auto lo = text::parse_double(parts[0]);
            const auto hi = text::parse_double(parts[1]);
            const auto step = text::parse_double(parts[2]);
            if (!lo || !hi || !step) throw ConfigError(what + ": bad number in range '" + tok + "'");
            if (!(*step > 0.0) || !(*hi >= *lo) || !std::isfinite(*hi - *lo))
                throw ConfigError(what + ": range needs step > 0 and hi >= lo, got '" + tok + "'");
            const double count = std::floor((*hi - *lo) / *step + 1e-9) + 1.0;
            if (count > 1e6) throw ConfigError(what + ": range '" + tok + "' has more than 1e6 points");
            const auto n = static_cast<std::size_t>(count);
            for (std::size_t i = 0; i < n; ++i) out.push_back((*lo + static_cast<double>(i) * *step) * scale);
        } else {
            const auto v = text::parse_double(tok);
            if (!v || !std::isfinite(*v)) throw ConfigError(what + ": bad number '" + tok + "'");
            out.push_back(*v * scale);
        }
    }
    return out;
}

inline double parse_scalar(std::string_view raw, Dim dim, const std::string& what) {
    const auto v = parse_values(raw, dim, what);
    if (v.size() != 1) throw ConfigError(what + ": expected a single value");
    return v.front();
}

struct SweepConfig {
    std::string ple_electrode = "dc";
    std::vector<double> ple_volts;
    std::vector<double> t1_delays;
    double t1_fit_min_delay = 0.0;
    double oder_power = 0.0;
    std::vector<double> oder_freqs;
    std::vector<double> splitting_powers;
    std::vector<double> splitting_freqs;
    double rabi_power = 0.0;
    std::vector<double> rabi_widths;
    double ramsey_detuning = 0.0;
    double ramsey_power = 0.0;
    std::vector<double> ramsey_delays;
};

struct RunConfig {
    NVParams params;
    ElectrodeGeometry geometry;
    ProtocolSettings protocol;
    SweepConfig sweep;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
    std::size_t bootstrap = 0;  // resamples for the auto-fit, 0 = off

    void validate() const {
        params.validate();
        geometry.validate();
        protocol.validate();
        geometry.per_volt(sweep.ple_electrode);
        geometry.per_volt(protocol.electrode);
        auto need = [](const std::vector<double>& v, const char* name) {
            if (v.empty()) throw ConfigError(std::string("sweep ") + name + " is empty");
        };
        need(sweep.ple_volts, "ple.volts");
        need(sweep.t1_delays, "t1.delays");
        need(sweep.oder_freqs, "oder.freqs");
        need(sweep.splitting_powers, "splitting.powers");
        need(sweep.splitting_freqs, "splitting.freqs");
        need(sweep.rabi_widths, "rabi.widths");
        need(sweep.ramsey_delays, "ramsey.delays");
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json, got '" + format + "'");
        if (bootstrap != 0 && bootstrap < 100) throw ConfigError("bootstrap needs 0 or >= 100 resamples");
    }
};

/// Built-in configuration, identical to configs/default.cfg.
inline constexpr const char* default_config_text = R"(# nv0sim default configuration
# Values accept a unit suffix; bare numbers are SI.

params.lambda_so = 4.80 GHz
params.eps_perp = 4.06 GHz
params.d_par = 1.08 MHz/(V/cm)
params.d_perp = 961 kHz/(V/cm)
params.d_perp_dc = 363 kHz/(V/cm)
params.T1 = 137 ns
params.t2_star = 30.2 ns
params.optical_linewidth_fwhm = 130 MHz
params.excited_lifetime = 20 ns
params.strain_axis_angle = 0 rad
params.resonance = 12.84 GHz

geometry.sin_theta = 0.5773502691896257
geometry.cos_theta = 0.816496580927726
geometry.impedance = 50 ohm
geometry.axis_sign = 1
geometry.electrode.dc = 12497.6 -26122.3 -7973.57
geometry.electrode.ac = 13763.6 -18844.1 -1079.8

protocol.pump_rate = 200 MHz
protocol.branching_back = 0.5
protocol.init_duration = 500 ns
protocol.settle = 100 ns
protocol.readout_duration = 20 ns
protocol.bin_width = 2 ns
protocol.initial_p0 = 0.5
protocol.dt_fraction = 0.5
protocol.electrode = ac
protocol.oder_pump_rate = 20 MHz
protocol.oder_nodes = 401
protocol.probe_rate = 1 MHz
protocol.counts_scale = 1e6

sweep.ple.electrode = dc
sweep.ple.volts = -50:50:1 V
sweep.t1.delays = 0:1000:10 ns
sweep.t1.fit_min_delay = 200 ns
sweep.oder.power = 1 uW
sweep.oder.freqs = 12.58:13.10:0.004 GHz
sweep.splitting.powers = 0 0.4 6.4 25.6 102.4 230.4 409.6 640 mW
sweep.splitting.freqs = -2:2:0.01 GHz
sweep.rabi.power = 828 uW
sweep.rabi.widths = 0:40:0.25 ns
sweep.ramsey.detuning = 58 MHz
sweep.ramsey.power = 25 mW
sweep.ramsey.delays = 0:150:0.5 ns

run.format = csv
run.bootstrap = 0
)";

namespace detail {

struct ConfigContext {
    std::string origin;
    std::filesystem::path base_dir;
    std::optional<double> t2_star;
    std::optional<double> tphi;
};

inline std::string where(const ConfigContext& c, const KeyValue& kv) {
    return c.origin + ":" + std::to_string(kv.line) + ": '" + kv.key + "'";
}

inline std::size_t parse_count(const std::string& v, const std::string& what) {
    const auto d = text::parse_double(v);
    if (!d || *d < 0.0 || std::floor(*d) != *d || *d > 1e12)
        throw ConfigError(what + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(*d);
}

}  // namespace detail

/// Applies one key to `cfg`. Throws ConfigError on unknown keys, bad values
/// or unit mismatches.
inline void apply_config_key(RunConfig& cfg, const KeyValue& kv, detail::ConfigContext& ctx) {
    const std::string w = detail::where(ctx, kv);
    auto num = [&](Dim d) { return parse_scalar(kv.value, d, w); };
    auto list = [&](Dim d) { return parse_values(kv.value, d, w); };
    auto& p = cfg.params;
    auto& s = cfg.protocol;
    auto& sw = cfg.sweep;
    const std::string& k = kv.key;

    if (k == "params.lambda_so") p.lambda_so = num(Dim::Frequency);
    else if (k == "params.eps_perp") p.eps_perp = num(Dim::Frequency);
    else if (k == "params.d_par") p.d_par = num(Dim::Susceptibility);
    else if (k == "params.d_perp") p.d_perp = num(Dim::Susceptibility);
    else if (k == "params.d_perp_dc") p.d_perp_dc = num(Dim::Susceptibility);
    else if (k == "params.T1") p.T1 = num(Dim::Time);
    else if (k == "params.t2_star") ctx.t2_star = num(Dim::Time), ctx.tphi.reset();
    else if (k == "params.Tphi") ctx.tphi = num(Dim::Time), ctx.t2_star.reset();
    else if (k == "params.optical_linewidth_fwhm") p.optical_linewidth_fwhm = num(Dim::Frequency);
    else if (k == "params.excited_lifetime") p.excited_lifetime = num(Dim::Time);
    else if (k == "params.strain_axis_angle") p.strain_axis_angle = num(Dim::Angle);
    else if (k == "params.resonance") {
        if (text::trim(kv.value) == "formula") p.resonance.reset();
        else p.resonance = num(Dim::Frequency);
    }
    else if (k == "geometry.file") {
        std::filesystem::path path(std::string(text::trim(kv.value)));
        if (path.is_relative()) path = ctx.base_dir / path;
        cfg.geometry = read_geometry(read_file(path.string()), path.string());
    }
    else if (k == "geometry.impedance") cfg.geometry.line_impedance = num(Dim::Resistance);
    else if (k.rfind("geometry.", 0) == 0) {
        KeyValue inner{k.substr(9), kv.value, kv.line};
        if (!apply_geometry_key(cfg.geometry, inner, ctx.origin))
            throw ConfigError(w + ": unknown configuration key");
    }
    else if (k == "protocol.pump_rate") s.pump_rate = num(Dim::Frequency);
    else if (k == "protocol.branching_back") s.branching_back = num(Dim::Dimensionless);
    else if (k == "protocol.init_duration") s.init_duration = num(Dim::Time);
    else if (k == "protocol.settle") s.settle = num(Dim::Time);
    else if (k == "protocol.readout_duration") s.readout_duration = num(Dim::Time);
    else if (k == "protocol.bin_width") s.bin_width = num(Dim::Time);
    else if (k == "protocol.initial_p0") s.initial_p0 = num(Dim::Dimensionless);
    else if (k == "protocol.dt_fraction") s.dt_fraction = num(Dim::Dimensionless);
    else if (k == "protocol.electrode") s.electrode = std::string(text::trim(kv.value));
    else if (k == "protocol.oder_pump_rate") s.oder_pump_rate = num(Dim::Frequency);
    else if (k == "protocol.oder_nodes") s.oder_nodes = detail::parse_count(kv.value, w);
    else if (k == "protocol.probe_rate") s.probe_rate = num(Dim::Frequency);
    else if (k == "protocol.counts_scale") s.counts_scale = num(Dim::Dimensionless);
    else if (k == "sweep.ple.electrode") sw.ple_electrode = std::string(text::trim(kv.value));
    else if (k == "sweep.ple.volts") sw.ple_volts = list(Dim::Voltage);
    else if (k == "sweep.t1.delays") sw.t1_delays = list(Dim::Time);
    else if (k == "sweep.t1.fit_min_delay") sw.t1_fit_min_delay = num(Dim::Time);
    else if (k == "sweep.oder.power") sw.oder_power = num(Dim::Power);
    else if (k == "sweep.oder.freqs") sw.oder_freqs = list(Dim::Frequency);
    else if (k == "sweep.splitting.powers") sw.splitting_powers = list(Dim::Power);
    else if (k == "sweep.splitting.freqs") sw.splitting_freqs = list(Dim::Frequency);
    else if (k == "sweep.rabi.power") sw.rabi_power = num(Dim::Power);
    else if (k == "sweep.rabi.widths") sw.rabi_widths = list(Dim::Time);
    else if (k == "sweep.ramsey.detuning") sw.ramsey_detuning = num(Dim::Frequency);
    else if (k == "sweep.ramsey.power") sw.ramsey_power = num(Dim::Power);
    else if (k == "sweep.ramsey.delays") sw.ramsey_delays = list(Dim::Time);
    else if (k == "run.seed") {
        const std::string v(text::trim(kv.value));
        if (v == "none") {
            cfg.seed.reset();
        } else {
            std::uint64_t seed = 0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), seed);
            if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
                throw ConfigError(w + ": expected an unsigned 64-bit integer or 'none'");
            cfg.seed = seed;
        }
    }
    else if (k == "run.format") cfg.format = std::string(text::trim(kv.value));
    else if (k == "run.bootstrap") cfg.bootstrap = detail::parse_count(kv.value, w);
    else throw ConfigError(w + ": unknown configuration key");
}

/// Resolves T2* or Tphi against the final T1 and validates.
inline void finish_config(RunConfig& cfg, detail::ConfigContext& ctx) {
    if (ctx.t2_star) {
        try {
            cfg.params.Tphi = NVParams::tphi_from_t2star(cfg.params.T1, *ctx.t2_star);
        } catch (const ParamError& e) {
            throw ConfigError(ctx.origin + ": " + e.what());
        }
    } else if (ctx.tphi) {
        cfg.params.Tphi = *ctx.tphi;
    }
    cfg.protocol.seed = cfg.seed;
    cfg.validate();
}

inline RunConfig parse_config(std::string_view content, const std::string& origin = "<config>",
                              const std::filesystem::path& base_dir = ".",
                              const std::vector<KeyValue>& overrides = {}) {
    RunConfig cfg;
    // files are layered over the built-in defaults
    detail::ConfigContext ctx{"<default>", base_dir, {}, {}};
    for (const auto& kv : parse_kv(default_config_text, ctx.origin)) apply_config_key(cfg, kv, ctx);
    ctx.origin = origin;
    for (const auto& kv : parse_kv(content, origin)) apply_config_key(cfg, kv, ctx);
    ctx.origin = "<override>";
    for (const auto& kv : overrides) apply_config_key(cfg, kv, ctx);
    finish_config(cfg, ctx);
    return cfg;
}

/// Finds a configuration by name: an existing path, then NAME or NAME.cfg in
/// $NV0SIM_CONFIG_DIR, then the built-in "default".
inline RunConfig load_config(const std::string& name, const std::vector<KeyValue>& overrides = {}) {
    namespace fs = std::filesystem;
    std::vector<fs::path> candidates{fs::path(name)};
    if (const char* dir = std::getenv("NV0SIM_CONFIG_DIR"); dir && *dir) {
        candidates.emplace_back(fs::path(dir) / name);
        candidates.emplace_back(fs::path(dir) / (name + ".cfg"));
    }
    for (const auto& c : candidates) {
        std::error_code ec;
        if (fs::is_regular_file(c, ec))
            return parse_config(read_file(c.string()), c.string(), c.parent_path(), overrides);
    }
    if (name == "default") return parse_config(default_config_text, "<default>", ".", overrides);
    throw ConfigError("configuration '" + name + "' not found (searched the path and $NV0SIM_CONFIG_DIR)");
}

}  // namespace nv0

#endif  // NV0_CONFIG_HPP
