#include "nv0/fields.hpp"
#include "nv0/hamiltonian.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace nv0;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testsupport::cplx;

namespace {
NVParams base() {
    NVParams p;
    p.lambda_so = 4.80e9;
    p.eps_perp = 4.06e9;
    return p;
}
}  // namespace

TEST_CASE("h0_full is 2 lambda Lz Sz") {
    auto p = base();
    const Op4 h = h0_full(p);
    const double expect[4] = {4.80e9, -4.80e9, -4.80e9, 4.80e9};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(h(i, j) == (i == j ? cplx(expect[i]) : cplx(0.0)));
    CHECK_THAT(h(0, 0).real() - h(1, 1).real(), WithinRel(9.60e9, 1e-15));
    p.lambda_so = 0.0;
    CHECK(max_abs_diff(h0_full(p), Op4{}) == 0.0);
}

TEST_CASE("h0_full spin-up block equals the lambda Lz part of the strain block") {
    auto p = base();
    p.eps_perp = 0.0;
    const Op4 h4 = h0_full(p);
    const Op2 h2 = h_strain_dc(p, {});
    // spin-up states are indices 0 and 1
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(h4(i, j) == h2(i, j));
}

TEST_CASE("h_strain_dc at zero field is [[lambda, eps], [eps, -lambda]]") {
    const auto p = base();
    const Op2 h = h_strain_dc(p, {});
    CHECK(h(0, 0) == cplx(4.80e9));
    CHECK(h(1, 1) == cplx(-4.80e9));
    CHECK(h(0, 1) == cplx(4.06e9));
    CHECK(h(1, 0) == cplx(4.06e9));
    CHECK(h.is_hermitian());
}

TEST_CASE("axial field shifts both branches") {
    auto p = base();
    const FieldVectorNV e{0.0, 0.0, 1e9 / p.d_par};
    const auto es = hermitian_eig(h_strain_dc(p, e));
    CHECK_THAT(es.values[0], WithinRel(1e9 - 6.28678e9, 1e-5));
    CHECK_THAT(es.values[1], WithinRel(1e9 + 6.28678e9, 1e-5));
}

TEST_CASE("second transverse component alone") {
    NVParams p;
    p.lambda_so = 4e9;
    p.eps_perp = 0.0;
    const FieldVectorNV e{0.0, 3e9 / p.d_perp, 0.0};
    const auto es = hermitian_eig(h_strain_dc(p, e));
    CHECK_THAT(es.values[1] - es.values[0], WithinRel(10e9, 1e-12));
    CHECK_THAT(eigen_closed_form(p, e).mix.splitting, WithinRel(10e9, 1e-12));
}

TEST_CASE("closed-form zero-field splitting and mixing") {
    const auto p = base();
    const auto cf = eigen_closed_form(p, {});
    CHECK_THAT(cf.E_plus - cf.E_minus, WithinRel(12.5736e9, 1e-4));
    CHECK_THAT(cf.mix.population_contrast(), WithinAbs(0.7636, 1e-4));
    CHECK_THAT(cf.mix.population_contrast(), WithinRel(4.80 / std::sqrt(39.5236), 1e-12));
    CHECK(cf.mix.alpha.imag() == 0.0);
    CHECK(cf.mix.beta.imag() == 0.0);

    auto q = base();
    q.eps_perp = 0.0;
    const auto cf0 = eigen_closed_form(q, {});
    CHECK(cf0.mix.alpha == cplx(1.0));
    CHECK(cf0.mix.beta == cplx(0.0));
}

TEST_CASE("closed form rejects the fully degenerate point") {
    NVParams p;
    p.lambda_so = 0.0;
    p.eps_perp = 0.0;
    CHECK_THROWS_AS(eigen_closed_form(p, {}), DegenerateError);
}

TEST_CASE("closed form agrees with Jacobi on random draws") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lam(0.1e9, 10e9), eps(0.0, 10e9), fld(-2e5, 2e5), ang(-3.2, 3.2);
    std::uniform_int_distribution<int> sign(0, 1);
    for (int i = 0; i < 1000; ++i) {
        NVParams p;
        p.lambda_so = lam(rng);
        p.eps_perp = eps(rng);
        p.strain_axis_angle = (i % 4 == 0) ? ang(rng) : 0.0;
        const FieldVectorNV e{fld(rng), fld(rng), fld(rng)};
        const double epp = sign(rng) ? eps(rng) * 0.1 : 0.0;
        const auto cf = eigen_closed_form(p, e, epp);
        const Op2 h = h_strain_dc(p, e, epp);
        const auto es = hermitian_eig(h);
        const double scale = std::max(std::abs(cf.E_plus), std::abs(cf.E_minus));
        CHECK(std::abs(cf.E_minus - es.values[0]) <= 1e-9 * scale);
        CHECK(std::abs(cf.E_plus - es.values[1]) <= 1e-9 * scale);
        CHECK_THAT(std::norm(cf.mix.alpha) + std::norm(cf.mix.beta), WithinAbs(1.0, 1e-12));

        // |+'> = alpha|+> + beta|-> is the upper eigenvector
        const cplx v0 = cf.mix.alpha, v1 = cf.mix.beta;
        CHECK(std::abs(h(0, 0) * v0 + h(0, 1) * v1 - cf.E_plus * v0) <= 1e-9 * scale);
        CHECK(std::abs(h(1, 0) * v0 + h(1, 1) * v1 - cf.E_plus * v1) <= 1e-9 * scale);

        const auto t = strain_frame(p, e);
        const double re = p.eps_perp + p.d_perp * t.parallel;
        const double im = epp + p.d_perp * t.perpendicular;
        const double expected = p.lambda_so / std::sqrt(p.lambda_so * p.lambda_so + re * re + im * im);
        CHECK_THAT(cf.mix.population_contrast(), WithinAbs(expected, 1e-10));
    }
}

TEST_CASE("rwa_drive detuning and coupling") {
    const auto p = base();
    const double half = std::hypot(p.lambda_so, p.eps_perp);
    const Op2 on = rwa_drive(p, 100.0, half);
    CHECK(on(0, 0) == 0.0);
    CHECK(on(1, 1) == 0.0);
    CHECK(on.basis() == Basis::PRIMED);

    const Op2 off = rwa_drive(p, 0.0, 12.84e9);
    CHECK_THAT(off(0, 0).real(), WithinRel(6.28678e9 - 12.84e9, 1e-5));
    CHECK_THAT(off(0, 0).real() / 1e9, WithinAbs(-6.55, 0.005));

    NVParams q = p;
    q.d_perp = 961.0 * units::kHz_per_V_per_cm;
    const Op2 g = rwa_drive(q, 1.0 * units::V_per_cm, half);
    CHECK_THAT(g(0, 1).real(), WithinRel(480.5e3, 1e-12));
    CHECK(g.is_hermitian());
    CHECK_THROWS_AS(rwa_drive(p, 1.0, 0.0), ParamError);
}

TEST_CASE("transition frequency prefers the configured resonance") {
    auto p = base();
    CHECK_THAT(transition_frequency(p), WithinRel(2.0 * 6.28678e9, 1e-5));
    p.resonance = 12.84e9;
    CHECK(transition_frequency(p) == 12.84e9);
}

TEST_CASE("NVParams validation") {
    NVParams p;
    CHECK_NOTHROW(p.validate());
    CHECK_THAT(p.Tphi, WithinRel(33.9e-9, 2e-3));
    CHECK_THAT(p.T2_star(), WithinRel(30.2e-9, 1e-12));
    auto bad = p;
    bad.lambda_so = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = p;
    bad.eps_perp = -1.0;
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = p;
    bad.T1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = p;
    bad.Tphi = -1.0;
    CHECK_THROWS_AS(bad.validate(), ParamError);
    CHECK_THROWS_AS(NVParams::tphi_from_t2star(100e-9, 250e-9), ParamError);
    bad = p;
    bad.Tphi = std::numeric_limits<double>::infinity();
    CHECK_NOTHROW(bad.validate());
    CHECK_THAT(bad.T2_star(), WithinRel(2.0 * bad.T1, 1e-15));
}
