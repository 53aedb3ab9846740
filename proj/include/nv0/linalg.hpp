// Small dense complex-matrix kernel for the NV0 orbital toolkit.
//
// Matrices are fixed-size (2x2 to 4x4) and live on the stack. Hamiltonians
// are stored in cyclic frequency units (Hz); the 2*pi only appears inside
// propagator() and the master-equation right-hand side.

#ifndef NV0_LINALG_HPP
#define NV0_LINALG_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace nv0 {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Basis a matrix is expressed in.
enum class Basis {
    EXY,         // strain eigenstates |e_x>, |e_y>
    PLUS_MINUS,  // orbital angular-momentum states |+>, |->
    PRIMED,      // strain-dressed eigenstates |+'>, |-'>
    LEVELS_012   // effective levels |0>, |1>, |2>
};

inline const char* to_string(Basis b) {
    switch (b) {
        case Basis::EXY: return "EXY";
        case Basis::PLUS_MINUS: return "PLUS_MINUS";
        case Basis::PRIMED: return "PRIMED";
        case Basis::LEVELS_012: return "LEVELS_012";
    }
    return "?";
}

class LinalgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <std::size_t N>
class OperatorMatrix {
    static_assert(N >= 2 && N <= 4, "OperatorMatrix supports dimensions 2..4");

public:
    static constexpr std::size_t dim = N;

    OperatorMatrix() { entries_.fill(cplx{}); }
    explicit OperatorMatrix(Basis basis) : basis_(basis) { entries_.fill(cplx{}); }
    OperatorMatrix(std::array<cplx, N * N> entries, Basis basis)
        : entries_(entries), basis_(basis) {}

    static OperatorMatrix identity(Basis basis = Basis::PLUS_MINUS) {
        OperatorMatrix m(basis);
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    template <typename... Ts>
    static OperatorMatrix diagonal(Basis basis, Ts... values) {
        static_assert(sizeof...(Ts) == N);
        OperatorMatrix m(basis);
        const std::array<double, N> d{static_cast<double>(values)...};
        for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
        return m;
    }

    cplx& operator()(std::size_t r, std::size_t c) { return entries_[r * N + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return entries_[r * N + c]; }

    const std::array<cplx, N * N>& entries() const { return entries_; }
    Basis basis() const { return basis_; }
    void set_basis(Basis b) { basis_ = b; }

    OperatorMatrix adjoint() const {
        OperatorMatrix out(basis_);
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = 0; c < N; ++c) out(r, c) = std::conj((*this)(c, r));
        return out;
    }

    cplx trace() const {
        cplx t{};
        for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& z : entries_) s += std::norm(z);
        return std::sqrt(s);
    }

    /// Largest |M(r,c) - conj(M(c,r))|.
    double max_asymmetry() const {
        double worst = 0.0;
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = r; c < N; ++c)
                worst = std::max(worst, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
        return worst;
    }

    bool is_hermitian(double tol = 1e-12) const { return max_asymmetry() <= tol; }

    OperatorMatrix& operator+=(const OperatorMatrix& o) {
        for (std::size_t i = 0; i < N * N; ++i) entries_[i] += o.entries_[i];
        return *this;
    }
    OperatorMatrix& operator-=(const OperatorMatrix& o) {
        for (std::size_t i = 0; i < N * N; ++i) entries_[i] -= o.entries_[i];
        return *this;
    }
    OperatorMatrix& operator*=(cplx s) {
        for (auto& z : entries_) z *= s;
        return *this;
    }

    friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
    friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
    friend OperatorMatrix operator*(OperatorMatrix a, cplx s) { return a *= s; }
    friend OperatorMatrix operator*(cplx s, OperatorMatrix a) { return a *= s; }
    friend OperatorMatrix operator*(double s, OperatorMatrix a) { return a *= cplx(s); }
    friend OperatorMatrix operator*(OperatorMatrix a, double s) { return a *= cplx(s); }

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        OperatorMatrix out(a.basis_);
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t k = 0; k < N; ++k) {
                const cplx ark = a(r, k);
                if (ark == cplx{}) continue;
                for (std::size_t c = 0; c < N; ++c) out(r, c) += ark * b(k, c);
            }
        return out;
    }

    /// Largest entrywise |a - b|.
    friend double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b) {
        double worst = 0.0;
        for (std::size_t i = 0; i < N * N; ++i)
            worst = std::max(worst, std::abs(a.entries_[i] - b.entries_[i]));
        return worst;
    }

private:
    std::array<cplx, N * N> entries_{};
    Basis basis_ = Basis::PLUS_MINUS;
};

using Op2 = OperatorMatrix<2>;
using Op3 = OperatorMatrix<3>;
using Op4 = OperatorMatrix<4>;

template <std::size_t N>
OperatorMatrix<N> commutator(const OperatorMatrix<N>& a, const OperatorMatrix<N>& b) {
    return a * b - b * a;
}

template <std::size_t N>
OperatorMatrix<N> anticommutator(const OperatorMatrix<N>& a, const OperatorMatrix<N>& b) {
    return a * b + b * a;
}

/// Kronecker product of two 2x2 operators, ordered a (x) b.
inline Op4 kron(const Op2& a, const Op2& b, Basis basis = Basis::PLUS_MINUS) {
    Op4 out(basis);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return out;
}

namespace pauli {
inline Op2 x(Basis b = Basis::PLUS_MINUS) { return Op2({0.0, 1.0, 1.0, 0.0}, b); }
inline Op2 y(Basis b = Basis::PLUS_MINUS) {
    return Op2({cplx{}, cplx(0, -1), cplx(0, 1), cplx{}}, b);
}
inline Op2 z(Basis b = Basis::PLUS_MINUS) { return Op2({1.0, 0.0, 0.0, -1.0}, b); }
}  // namespace pauli

/// Eigenvalues ascending, eigenvectors as the matching columns of `vectors`.
template <std::size_t N>
struct EigenSystem {
    std::array<double, N> values{};
    OperatorMatrix<N> vectors;

    std::array<cplx, N> vector(std::size_t k) const {
        std::array<cplx, N> v{};
        for (std::size_t r = 0; r < N; ++r) v[r] = vectors(r, k);
        return v;
    }
};

namespace detail {

template <std::size_t N>
void require_hermitian(const OperatorMatrix<N>& m, double tol) {
    const double asym = m.max_asymmetry();
    if (!(asym <= tol)) {
        std::ostringstream os;
        os << "matrix is not hermitian: max |M - M^dagger| = " << asym << " (tolerance " << tol
           << ")";
        throw LinalgError(os.str());
    }
}

template <std::size_t N>
double off_diagonal_norm(const OperatorMatrix<N>& a) {
    double s = 0.0;
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < N; ++c)
            if (r != c) s += std::norm(a(r, c));
    return std::sqrt(s);
}

template <std::size_t N>
EigenSystem<N> sorted(const OperatorMatrix<N>& diag, const OperatorMatrix<N>& vecs) {
    std::array<std::size_t, N> order{};
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return diag(a, a).real() < diag(b, b).real();
    });
    EigenSystem<N> es;
    es.vectors = OperatorMatrix<N>(vecs.basis());
    for (std::size_t k = 0; k < N; ++k) {
        es.values[k] = diag(order[k], order[k]).real();
        for (std::size_t r = 0; r < N; ++r) es.vectors(r, k) = vecs(r, order[k]);
    }
    return es;
}

}  // namespace detail

/// Cyclic complex Jacobi diagonalization of a hermitian matrix.
///
/// Each rotation first removes the phase of the pivot element and then
/// applies a real Givens rotation. Sweeps stop once the off-diagonal
/// Frobenius norm drops below 1e-14 of the matrix norm.
template <std::size_t N>
EigenSystem<N> hermitian_eig(const OperatorMatrix<N>& m, double hermitian_tol = 1e-12) {
    detail::require_hermitian(m, hermitian_tol);

    OperatorMatrix<N> a = m;
    // symmetrize away the sub-tolerance asymmetry
    for (std::size_t r = 0; r < N; ++r) {
        a(r, r) = a(r, r).real();
        for (std::size_t c = r + 1; c < N; ++c) {
            const cplx avg = 0.5 * (a(r, c) + std::conj(a(c, r)));
            a(r, c) = avg;
            a(c, r) = std::conj(avg);
        }
    }
    OperatorMatrix<N> v = OperatorMatrix<N>::identity(m.basis());

    const double scale = std::max(m.frobenius_norm(), 1e-300);
    constexpr int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (detail::off_diagonal_norm(a) <= 1e-14 * scale) break;
        for (std::size_t p = 0; p + 1 < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300) continue;
                const cplx phase = std::conj(apq) / mag;  // e^{-i arg a_pq}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // U acts on columns p and q: U_pp = c, U_pq = s, U_qp = -s*phase, U_qq = c*phase
                for (std::size_t k = 0; k < N; ++k) {  // A <- A U
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * phase * akq;
                    a(k, q) = s * akp + c * phase * akq;
                }
                for (std::size_t k = 0; k < N; ++k) {  // A <- U^dagger A
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * std::conj(phase) * aqk;
                    a(q, k) = s * apk + c * std::conj(phase) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t k = 0; k < N; ++k) {  // V <- V U
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * phase * vkq;
                    v(k, q) = s * vkp + c * phase * vkq;
                }
            }
        }
    }
    return detail::sorted(a, v);
}

/// Closed-form eigensystem of a 2x2 hermitian matrix, used to cross-check
/// the Jacobi path.
inline EigenSystem<2> hermitian_eig_2x2(const Op2& m, double hermitian_tol = 1e-12) {
    detail::require_hermitian(m, hermitian_tol);
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const cplx b = m(0, 1);
    const double mean = 0.5 * (a + d);
    const double half = 0.5 * (a - d);
    const double r = std::hypot(half, std::abs(b));

    EigenSystem<2> es;
    es.values = {mean - r, mean + r};
    es.vectors = Op2(m.basis());
    if (r == 0.0) {
        es.vectors = Op2::identity(m.basis());
        return es;
    }
    // Upper eigenvector from whichever row is better conditioned.
    std::array<cplx, 2> up;
    if (half >= 0.0) {
        const double n = std::sqrt(2.0 * r * (r + half));
        up = {(half + r) / n, std::conj(b) / n};
    } else {
        const double n = std::sqrt(2.0 * r * (r - half));
        up = {b / n, (r - half) / n};
    }
    // Lower eigenvector is orthogonal: (-conj(up1), conj(up0)).
    es.vectors(0, 1) = up[0];
    es.vectors(1, 1) = up[1];
    es.vectors(0, 0) = -std::conj(up[1]);
    es.vectors(1, 0) = std::conj(up[0]);
    return es;
}

/// U = exp(-i 2 pi H t) for H in Hz and t in seconds.
template <std::size_t N>
OperatorMatrix<N> propagator(const OperatorMatrix<N>& h, double t) {
    if (!(t >= 0.0)) {
        std::ostringstream os;
        os << "propagator: time must be non-negative, got " << t;
        throw LinalgError(os.str());
    }
    const auto es = hermitian_eig(h);
    OperatorMatrix<N> u(h.basis());
    for (std::size_t k = 0; k < N; ++k) {
        const cplx phase = std::exp(cplx(0.0, -two_pi * es.values[k] * t));
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = 0; c < N; ++c)
                u(r, c) += es.vectors(r, k) * phase * std::conj(es.vectors(c, k));
    }
    return u;
}

/// Gaussian elimination with partial pivoting for small dense systems A x = b.
template <std::size_t N, typename T>
std::array<T, N> solve_dense(std::array<std::array<T, N>, N> a, std::array<T, N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) == 0.0) throw LinalgError("solve_dense: singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const T f = a[r][col] / a[col][col];
            if (f == T{}) continue;
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<T, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        T s = b[i];
        for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace nv0

#endif  // NV0_LINALG_HPP
