// Electrode geometry: applied voltage or microwave power to NV-frame fields.
//
// The per-volt laboratory-frame field vectors come from an electrostatic
// simulation of the electrodes and are treated as configuration data.

#ifndef NV0_FIELDS_HPP
#define NV0_FIELDS_HPP

#include "nv0/hamiltonian.hpp"
#include "nv0/kvfile.hpp"
#include "nv0/params.hpp"
#include "nv0/text.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nv0 {

struct ElectrodeGeometry {
    std::map<std::string, FieldVectorLab> electrodes;  // V/m per applied volt
    double sin_theta = std::sqrt(1.0 / 3.0);
    double cos_theta = std::sqrt(2.0 / 3.0);
    double line_impedance = 50.0;  // ohm
    int axis_sign = 1;             // +1: pictured NV orientation, -1: the inverted one

    /// Two-electrode device: "dc" for static bias, "ac" for the microwave drive.
    static ElectrodeGeometry device_default() {
        ElectrodeGeometry g;
        g.electrodes["dc"] = {12497.6, -26122.3, -7973.57};
        g.electrodes["ac"] = {13763.6, -18844.1, -1079.8};
        return g;
    }

    void validate() const {
        if (std::abs(sin_theta * sin_theta + cos_theta * cos_theta - 1.0) > 1e-12)
            throw ParamError("ElectrodeGeometry: sin_theta^2 + cos_theta^2 must equal 1");
        if (!(line_impedance > 0.0)) throw ParamError("ElectrodeGeometry: impedance must be > 0");
        if (axis_sign != 1 && axis_sign != -1)
            throw ParamError("ElectrodeGeometry: axis_sign must be +1 or -1");
        for (const auto& [name, v] : electrodes)
            if (!std::isfinite(v.E_X) || !std::isfinite(v.E_Y) || !std::isfinite(v.E_Z))
                throw ParamError("ElectrodeGeometry: non-finite field for electrode '" + name + "'");
    }

    const FieldVectorLab& per_volt(const std::string& name) const {
        const auto it = electrodes.find(name);
        if (it == electrodes.end()) {
            std::ostringstream os;
            os << "unknown electrode '" << name << "'; known electrodes:";
            for (const auto& [n, v] : electrodes) os << " " << n;
            throw ParamError(os.str());
        }
        return it->second;
    }

    bool operator==(const ElectrodeGeometry&) const = default;
};

/// Laboratory to NV frame. The sign flag inverts x and z, i.e. a rotation by
/// pi about the NV y axis, which is the only ambiguity left by the
/// orientation measurement.
inline FieldVectorNV lab_to_nv(const FieldVectorLab& e, const ElectrodeGeometry& g) {
    const double s = g.sin_theta;
    const double c = g.cos_theta;
    const double sign = static_cast<double>(g.axis_sign);
    return {sign * (e.E_Y * s - e.E_Z * c), e.E_X, sign * (-e.E_Y * c - e.E_Z * s)};
}

inline FieldVectorLab electrode_field(const ElectrodeGeometry& g, const std::string& electrode,
                                      double volts) {
    return g.per_volt(electrode) * volts;
}

/// Voltage amplitude at an open-ended electrode fed with `power` watts:
/// RMS sqrt(P R), times sqrt(2) for the amplitude, times 2 for the open end.
inline double power_to_amplitude(const ElectrodeGeometry& g, double power) {
    if (!(power >= 0.0)) {
        std::ostringstream os;
        os << "power_to_amplitude: power must be >= 0 W, got " << power;
        throw ParamError(os.str());
    }
    return 2.0 * std::sqrt(2.0) * std::sqrt(power * g.line_impedance);
}

/// Transverse drive amplitude seen by the strain-dressed transition.
inline double effective_drive(const FieldVectorNV& e, const MixingCoefficients& mix) {
    const double c = mix.population_contrast();
    return std::sqrt(c * c * e.E_x * e.E_x + e.E_y * e.E_y);
}

/// On-resonance population-oscillation frequency d_perp * E_perp'' for a
/// microwave of `power` watts on `electrode`.
inline double rabi_frequency(const NVParams& p, const ElectrodeGeometry& g,
                             const std::string& electrode, double power) {
    const FieldVectorNV per_volt = lab_to_nv(g.per_volt(electrode), g);
    return std::abs(p.d_perp) * effective_drive(per_volt, strain_mixing(p)) *
           power_to_amplitude(g, power);
}

/// Inverse of rabi_frequency.
inline double power_for_rabi(const NVParams& p, const ElectrodeGeometry& g,
                             const std::string& electrode, double f_rabi) {
    const double per_sqrt_watt = rabi_frequency(p, g, electrode, 1.0);
    if (!(per_sqrt_watt > 0.0)) throw ParamError("power_for_rabi: electrode does not drive the transition");
    const double r = f_rabi / per_sqrt_watt;
    return r * r;
}

// ---- geometry file -------------------------------------------------------

inline std::string write_geometry(const ElectrodeGeometry& g) {
    std::ostringstream os;
    os << "# electrode geometry: per-volt lab-frame fields in V/m\n";
    os << "sin_theta = " << text::format_double(g.sin_theta) << "\n";
    os << "cos_theta = " << text::format_double(g.cos_theta) << "\n";
    os << "impedance = " << text::format_double(g.line_impedance) << "\n";
    os << "axis_sign = " << g.axis_sign << "\n";
    for (const auto& [name, v] : g.electrodes) {
        os << "electrode." << name << " = " << text::format_double(v.E_X) << " "
           << text::format_double(v.E_Y) << " " << text::format_double(v.E_Z) << "\n";
    }
    return os.str();
}

namespace detail {
inline double geometry_number(const KeyValue& kv, const std::string& origin) {
    const auto v = text::parse_double(kv.value);
    if (!v) {
        std::ostringstream os;
        os << origin << ":" << kv.line << ": '" << kv.key << "' expects a number, got '" << kv.value << "'";
        throw ConfigError(os.str());
    }
    return *v;
}
}  // namespace detail

/// Applies one geometry key (without any "geometry." prefix) to `g`.
/// Returns false when the key is not a geometry key.
inline bool apply_geometry_key(ElectrodeGeometry& g, const KeyValue& kv, const std::string& origin) {
    if (kv.key == "sin_theta") {
        g.sin_theta = detail::geometry_number(kv, origin);
    } else if (kv.key == "cos_theta") {
        g.cos_theta = detail::geometry_number(kv, origin);
    } else if (kv.key == "impedance") {
        g.line_impedance = detail::geometry_number(kv, origin);
    } else if (kv.key == "axis_sign") {
        const double s = detail::geometry_number(kv, origin);
        if (s != 1.0 && s != -1.0) {
            std::ostringstream os;
            os << origin << ":" << kv.line << ": axis_sign must be 1 or -1";
            throw ConfigError(os.str());
        }
        g.axis_sign = static_cast<int>(s);
    } else if (kv.key.rfind("electrode.", 0) == 0) {
        const std::string name = kv.key.substr(10);
        const auto parts = text::split_ws(kv.value);
        if (name.empty() || parts.size() != 3) {
            std::ostringstream os;
            os << origin << ":" << kv.line << ": '" << kv.key << "' expects three components in V/m";
            throw ConfigError(os.str());
        }
        FieldVectorLab v;
        double* dst[3] = {&v.E_X, &v.E_Y, &v.E_Z};
        for (int i = 0; i < 3; ++i) {
            const auto d = text::parse_double(parts[i]);
            if (!d) {
                std::ostringstream os;
                os << origin << ":" << kv.line << ": bad component '" << parts[i] << "'";
                throw ConfigError(os.str());
            }
            *dst[i] = *d;
        }
        g.electrodes[name] = v;
    } else {
        return false;
    }
    return true;
}

inline ElectrodeGeometry read_geometry(std::string_view content, const std::string& origin = "<geometry>") {
    ElectrodeGeometry g;
    for (const auto& kv : parse_kv(content, origin)) {
        if (!apply_geometry_key(g, kv, origin)) {
            std::ostringstream os;
            os << origin << ":" << kv.line << ": unknown key '" << kv.key << "'";
            throw ConfigError(os.str());
        }
    }
    g.validate();
    return g;
}

}  // namespace nv0

#endif  // NV0_FIELDS_HPP
