// Physical parameter record and field vectors shared across modules.

#ifndef NV0_PARAMS_HPP
#define NV0_PARAMS_HPP

#include "nv0/units.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nv0 {

class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ground-state orbital parameters of NV0. Frequencies in Hz,
/// susceptibilities in Hz per (V/m), times in seconds.
struct NVParams {
    double lambda_so = 4.80 * units::GHz;
    double eps_perp = 4.06 * units::GHz;
    double d_par = 1.08 * units::MHz_per_V_per_cm;
    double d_perp = 961.0 * units::kHz_per_V_per_cm;     // ac (microwave) response
    double d_perp_dc = 363.0 * units::kHz_per_V_per_cm;  // dc response, reduced by screening
    double T1 = 137.0 * units::ns;
    double Tphi = 1.0 / (1.0 / (30.2 * units::ns) - 1.0 / (2.0 * 137.0 * units::ns));
    double optical_linewidth_fwhm = 130.0 * units::MHz;
    double excited_lifetime = 20.0 * units::ns;
    double strain_axis_angle = 0.0;  // rad, strain eigenaxis relative to NV-frame x
    std::optional<double> resonance;  // measured |0> <-> |1> frequency; formula value if unset

    double T2_star() const { return 1.0 / (1.0 / (2.0 * T1) + 1.0 / Tphi); }
    double gamma_rad() const { return 1.0 / excited_lifetime; }

    /// Tphi that yields the requested T2* for the current T1.
    static double tphi_from_t2star(double T1, double T2_star) {
        const double inv = 1.0 / T2_star - 1.0 / (2.0 * T1);
        if (!(inv > 0.0)) {
            std::ostringstream os;
            os << "T2* = " << T2_star << " s is not shorter than 2*T1 = " << 2.0 * T1 << " s";
            throw ParamError(os.str());
        }
        return 1.0 / inv;
    }

    /// Copy with the dc susceptibility in the transverse slot.
    NVParams dc_view() const {
        NVParams p = *this;
        p.d_perp = d_perp_dc;
        return p;
    }

    void validate() const {
        auto fail = [](const std::string& msg) { throw ParamError("NVParams: " + msg); };
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(lambda_so > 0.0) || !finite(lambda_so)) fail("lambda_so must be > 0");
        if (!(eps_perp >= 0.0) || !finite(eps_perp)) fail("eps_perp must be >= 0");
        if (!finite(d_par) || !finite(d_perp) || !finite(d_perp_dc))
            fail("susceptibilities must be finite");
        if (!(T1 > 0.0) || !finite(T1)) fail("T1 must be > 0");
        if (!(Tphi > 0.0)) fail("Tphi must be > 0");
        if (!(optical_linewidth_fwhm >= 0.0)) fail("optical_linewidth_fwhm must be >= 0");
        if (!(excited_lifetime > 0.0) || !finite(excited_lifetime))
            fail("excited_lifetime must be > 0");
        if (resonance && !(*resonance > 0.0)) fail("resonance must be > 0");
        const double t2 = T2_star();
        if (!(t2 > 0.0) || t2 > 2.0 * T1 * (1.0 + 1e-12)) fail("derived T2* must lie in (0, 2*T1]");
    }
};

/// Laboratory-frame electric field, V/m.
struct FieldVectorLab {
    double E_X = 0.0;
    double E_Y = 0.0;
    double E_Z = 0.0;

    double norm() const { return std::sqrt(E_X * E_X + E_Y * E_Y + E_Z * E_Z); }
    FieldVectorLab operator*(double s) const { return {E_X * s, E_Y * s, E_Z * s}; }
    bool operator==(const FieldVectorLab&) const = default;
};

/// NV-frame electric field, V/m. z is along the NV symmetry axis.
struct FieldVectorNV {
    double E_x = 0.0;
    double E_y = 0.0;
    double E_z = 0.0;

    double norm() const { return std::sqrt(E_x * E_x + E_y * E_y + E_z * E_z); }
    FieldVectorNV operator*(double s) const { return {E_x * s, E_y * s, E_z * s}; }
    bool operator==(const FieldVectorNV&) const = default;
};

/// Strain-dressed eigenbasis |+'> = alpha|+> + beta|->, |-'> = -conj(beta)|+> + conj(alpha)|->.
struct MixingCoefficients {
    std::complex<double> alpha{1.0, 0.0};
    std::complex<double> beta{0.0, 0.0};
    double splitting = 0.0;  // Hz, E+ - E-

    /// |alpha|^2 - |beta|^2
    double population_contrast() const { return std::norm(alpha) - std::norm(beta); }
};

}  // namespace nv0

#endif  // NV0_PARAMS_HPP
