// Ground-state orbital Hamiltonians of NV0 in cyclic frequency units.
//
// Orbital basis ordering is (|+>, |->). Orbital operators:
//   Lz = sigma_z,  L+ + L- = sigma_x,  -i L+ + i L- = sigma_y.

#ifndef NV0_HAMILTONIAN_HPP
#define NV0_HAMILTONIAN_HPP

#include "nv0/linalg.hpp"
#include "nv0/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nv0 {

class DegenerateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Transverse field components relative to the strain eigenaxis.
struct StrainFrameField {
    double parallel = 0.0;       // E_perp, along the strain axis
    double perpendicular = 0.0;  // E'_perp, orthogonal to it and to z
};

inline StrainFrameField strain_frame(const NVParams& p, const FieldVectorNV& e) {
    const double c = std::cos(p.strain_axis_angle);
    const double s = std::sin(p.strain_axis_angle);
    return {c * e.E_x + s * e.E_y, -s * e.E_x + c * e.E_y};
}

/// 2 lambda Lz Sz on |+up>, |-up>, |+down>, |-down>.
inline Op4 h0_full(const NVParams& p) {
    const Op2 sz = 0.5 * pauli::z();
    return (2.0 * p.lambda_so) * kron(sz, pauli::z());
}

/// Spin-up block with strain and a static field; the hydrostatic strain
/// shift is dropped.
inline Op2 h_strain_dc(const NVParams& p, const FieldVectorNV& e, double eps_perp_prime = 0.0) {
    const auto t = strain_frame(p, e);
    Op2 h = p.lambda_so * pauli::z();
    h += (p.d_par * e.E_z) * Op2::identity();
    h += (p.eps_perp + p.d_perp * t.parallel) * pauli::x();
    h += (eps_perp_prime + p.d_perp * t.perpendicular) * pauli::y();
    return h;
}

struct ClosedFormEigen {
    double E_plus = 0.0;
    double E_minus = 0.0;
    MixingCoefficients mix;
};

/// Analytic eigenvalues and normalized eigenvectors of h_strain_dc.
inline ClosedFormEigen eigen_closed_form(const NVParams& p, const FieldVectorNV& e,
                                         double eps_perp_prime = 0.0) {
    const auto t = strain_frame(p, e);
    const double lam = p.lambda_so;
    const double re = p.eps_perp + p.d_perp * t.parallel;
    const double im = eps_perp_prime + p.d_perp * t.perpendicular;
    const double radicand = lam * lam + re * re + im * im;
    if (radicand < 1e-30) {
        std::ostringstream os;
        os << "eigen_closed_form: degenerate point (lambda^2 + transverse^2 = " << radicand
           << " Hz^2), eigenvectors undefined";
        throw DegenerateError(os.str());
    }
    const double root = std::sqrt(radicand);
    const double shift = p.d_par * e.E_z;

    ClosedFormEigen out;
    out.E_plus = shift + root;
    out.E_minus = shift - root;
    out.mix.splitting = 2.0 * root;

    // |+'> ~ ((lambda + R) / (re + i im)) |+> + |->, scaled by (re + i im)
    const cplx coupling(re, im);
    if (lam >= 0.0) {
        const double n = std::sqrt(2.0 * root * (root + lam));
        out.mix.alpha = (lam + root) / n;
        out.mix.beta = coupling / n;
    } else {
        const double n = std::sqrt(2.0 * root * (root - lam));
        out.mix.alpha = std::conj(coupling) / n;
        out.mix.beta = (root - lam) / n;
    }
    return out;
}

/// Mixing of the zero-field strain eigenbasis.
inline MixingCoefficients strain_mixing(const NVParams& p) {
    return eigen_closed_form(p, FieldVectorNV{}).mix;
}

/// Zero-field |0> <-> |1> splitting: the configured resonance if present,
/// otherwise 2 sqrt(lambda^2 + eps_perp^2).
inline double transition_frequency(const NVParams& p) {
    if (p.resonance) return *p.resonance;
    return 2.0 * std::hypot(p.lambda_so, p.eps_perp);
}

/// Rotating-frame drive in the strain eigenbasis: Delta Lz + g (L+ + L-) with
/// Delta = sqrt(lambda^2 + eps^2) - f_drive and g = d_perp E0 / 2.
///
/// The rotating frame is generated by f_drive Lz / 2, so a drive at laboratory
/// frequency f sits on resonance when f_drive = f / 2 equals the half-splitting.
inline Op2 rwa_drive(const NVParams& p, double e_drive_perp_eff, double f_drive) {
    if (!(f_drive > 0.0)) throw ParamError("rwa_drive: f_drive must be > 0");
    const double delta = std::hypot(p.lambda_so, p.eps_perp) - f_drive;
    const double g = 0.5 * p.d_perp * e_drive_perp_eff;
    Op2 h = delta * pauli::z(Basis::PRIMED);
    h += g * pauli::x(Basis::PRIMED);
    return h;
}

}  // namespace nv0

#endif  // NV0_HAMILTONIAN_HPP
