#include "nv0/estimation.hpp"
#include "nv0/hamiltonian.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <memory>

using namespace nv0;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Case {
    FitModel model;
    std::vector<double> x;
    std::vector<double> truth;
    std::vector<double> start;
};

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

std::vector<double> evaluate(const FitModel& m, const std::vector<double>& x, const std::vector<double>& th) {
    std::vector<double> y;
    for (double v : x) y.push_back(m.eval(v, th));
    return y;
}

std::vector<Case> all_cases() {
    const auto g = ElectrodeGeometry::device_default();
    std::vector<Case> c;
    c.push_back({models::t1_recovery(), linspace(0, 1000e-9, 101), {1.7, 137e-9, 0.99}, {1.5, 100e-9, 1.0}});
    c.push_back({models::damped_sine(), linspace(0, 150e-9, 301), {0.17, two_pi * 58e6, -1.3, 30.2e-9, 1.0},
                 {0.15, two_pi * 57e6, -1.2, 25e-9, 1.0}});
    c.push_back({models::gaussian_line(), linspace(12.6e9, 13.1e9, 126), {6e4, 12.84e9, 130e6, 7e6},
                 {5e4, 12.83e9, 110e6, 7.1e6}});
    c.push_back({models::splitting_hyperbola(g, "dc"), linspace(-50, 50, 101), {4.80e9, 4.06e9, 363 * units::kHz_per_V_per_cm},
                 {4.80e9, 3.8e9, 300 * units::kHz_per_V_per_cm}});
    c.push_back({models::linear_origin(), linspace(0, 0.8, 9), {3.0e9}, {1.0e9}});
    return c;
}

}  // namespace

TEST_CASE("exact data at the truth converges immediately") {
    for (const auto& c : all_cases()) {
        const auto y = evaluate(c.model, c.x, c.truth);
        const auto r = fit(c.model, c.x, y, c.truth);
        INFO(c.model.name);
        CHECK(r.converged);
        CHECK(r.n_iterations <= 2);
        CHECK(r.residual_norm == 0.0);
    }
}

TEST_CASE("linear model through exact points") {
    const auto x = linspace(1, 10, 10);
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v);
    const auto r = fit(models::linear_origin(), x, y, {1.0});
    CHECK(r.converged);
    CHECK_THAT(r.theta[0], WithinAbs(2.5, 1e-12));
    CHECK_THAT(guess::linear_origin(x, y)[0], WithinAbs(2.5, 1e-14));
}

TEST_CASE("noiseless round trip for every model") {
    for (const auto& c : all_cases()) {
        const auto y = evaluate(c.model, c.x, c.truth);
        const auto r = fit(c.model, c.x, y, c.start);
        INFO(c.model.name << " " << r.diagnostic);
        REQUIRE(r.converged);
        for (std::size_t i = 0; i < c.truth.size(); ++i) CHECK_THAT(r.theta[i], WithinRel(c.truth[i], 0.02));
    }
}

TEST_CASE("noisy round trip stays within 3 sigma of the reported covariance") {
    for (const auto& c : all_cases()) {
        const auto clean = evaluate(c.model, c.x, c.truth);
        // 1% of the signal's peak-to-peak range
        const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
        const double scale = *hi - *lo;
        int outside = 0, total = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> n(0.0, 0.01 * scale);
            auto y = clean;
            for (auto& v : y) v += n(rng);
            const auto r = fit(c.model, c.x, y, c.start);
            INFO(c.model.name << " seed " << seed);
            REQUIRE(r.converged);
            for (std::size_t i = 0; i < c.truth.size(); ++i) {
                if (c.model.is_fixed(i)) continue;
                ++total;
                if (std::abs(r.theta[i] - c.truth[i]) > 3.0 * r.stderr_of(r.names[i])) ++outside;
            }
        }
        INFO(c.model.name << ": " << outside << " of " << total << " outside 3 sigma");
        // 3 sigma covers 99.7%; allow a couple of strays
        CHECK(outside <= std::max(2, total / 50));
    }
}

TEST_CASE("finite-difference covariance matches the analytic Jacobian") {
    for (const auto& c : all_cases()) {
        auto y = evaluate(c.model, c.x, c.truth);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n(0.0, 1e-3);
        for (auto& v : y) v *= 1.0 + n(rng);
        FitOptions fd, an;
        an.analytic_jacobian = true;
        const auto a = fit(c.model, c.x, y, c.start, fd);
        const auto b = fit(c.model, c.x, y, c.start, an);
        INFO(c.model.name);
        for (std::size_t i = 0; i < c.truth.size(); ++i) {
            if (c.model.is_fixed(i)) continue;
            CHECK_THAT(a.covariance[i][i], WithinRel(b.covariance[i][i], 1e-6));
        }
    }
}

TEST_CASE("covariance is symmetric positive semidefinite") {
    const auto c = all_cases()[1];
    auto y = evaluate(c.model, c.x, c.truth);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.005);
    for (auto& v : y) v += n(rng);
    const auto r = fit(c.model, c.x, y, c.start);
    REQUIRE(r.converged);
    CHECK(r.gradient_norm < 1e-4);
    const std::size_t np = r.theta.size();
    for (std::size_t i = 0; i < np; ++i) {
        CHECK(r.covariance[i][i] >= 0.0);
        for (std::size_t j = 0; j < np; ++j) {
            CHECK(std::abs(r.covariance[i][j] - r.covariance[j][i]) <=
                  1e-8 * std::sqrt(r.covariance[i][i] * r.covariance[j][j]));
            CHECK(r.covariance[i][j] * r.covariance[i][j] <= r.covariance[i][i] * r.covariance[j][j] * (1 + 1e-8));
        }
    }
}

TEST_CASE("fit is invariant to data order") {
    const auto c = all_cases()[0];
    auto y = evaluate(c.model, c.x, c.truth);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.01);
    for (auto& v : y) v += n(rng);
    const auto a = fit(c.model, c.x, y, c.start);
    std::vector<std::size_t> idx(c.x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> xs, ys;
    for (auto i : idx) xs.push_back(c.x[i]), ys.push_back(y[i]);
    const auto b = fit(c.model, xs, ys, c.start);
    for (std::size_t i = 0; i < a.theta.size(); ++i) CHECK_THAT(b.theta[i], WithinRel(a.theta[i], 1e-8));
}

TEST_CASE("fixed parameters stay put") {
    auto m = models::t1_recovery();
    m.fix("b");
    const auto x = linspace(0, 1e-6, 50);
    const auto y = evaluate(models::t1_recovery(), x, {1.0, 150e-9, 0.2});
    const auto r = fit(m, x, y, {0.8, 100e-9, 0.25});
    CHECK(r.theta[2] == 0.25);
    CHECK(r.covariance[2][2] == 0.0);
    CHECK_THROWS_AS(m.fix("c"), FitError);
}

TEST_CASE("model library definitions") {
    const auto lib = model_library();
    REQUIRE(lib.size() == 5);
    const std::vector<double> g{2.0, 5.0, 1.0, 0.5};
    CHECK_THAT(lib.at("gaussian_line").eval(5.0, g), WithinAbs(2.5, 1e-15));
    NVParams p;
    const std::vector<double> h{p.lambda_so, p.eps_perp, p.d_perp_dc};
    CHECK_THAT(lib.at("splitting_hyperbola").eval(0.0, h), WithinRel(2.0 * std::hypot(p.lambda_so, p.eps_perp), 1e-15));
    const std::vector<double> ds{1.0, 3.0, 0.2, 1e300, 0.0};
    CHECK_THAT(lib.at("damped_sine").eval(0.7, ds), WithinAbs(std::sin(2.1 + 0.2), 1e-15));
    CHECK_THAT(lib.at("t1_recovery").eval(0.0, std::vector<double>{0.3, 1.0, 0.1}), WithinAbs(0.8, 1e-15));
    CHECK(lib.at("splitting_hyperbola").is_fixed(0));
}

TEST_CASE("fit input errors") {
    const auto m = models::t1_recovery();
    const auto x = linspace(0, 1, 3);
    const std::vector<double> y{1, 1, 1};
    CHECK_THROWS_AS(fit(m, x, y, {1, 1, 0}), FitError);  // 3 points, 3 free
    CHECK_THROWS_AS(fit(m, linspace(0, 1, 10), std::vector<double>(10, 1.0), {1, 1}), FitError);
    CHECK_THROWS_AS(fit(m, linspace(0, 1, 10), std::vector<double>(9, 1.0), {1, 1, 0}), FitError);
    CHECK_THROWS_AS(fit(m, linspace(0, 1, 10), std::vector<double>(10, 1.0), {NAN, 1, 0}), FitError);
}

TEST_CASE("degenerate parameters give a diagnostic") {
    FitModel m;
    m.name = "redundant";
    m.param_names = {"a", "b"};
    m.param_units = {"1", "1"};
    m.eval = [](double x, std::span<const double> th) { return (th[0] + th[1]) * x; };
    const auto x = linspace(0, 1, 10);
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v + 0.01 * std::sin(40 * v));
    const auto r = fit(m, x, y, {1.0, 1.0});
    CHECK_THAT(r.theta[0] + r.theta[1], WithinRel(3.0, 1e-2));
    CHECK(r.diagnostic.find("rank deficient") != std::string::npos);
    const auto j = fit_report_json(m, r);
    CHECK(j["parameters"][0]["stderr"].is_null());
}

TEST_CASE("initial guesses land near the truth") {
    const auto cases = all_cases();
    {
        const auto& c = cases[0];
        const auto g = guess::t1_recovery(c.x, evaluate(c.model, c.x, c.truth));
        CHECK_THAT(g[1], WithinRel(137e-9, 0.3));
    }
    {
        const auto& c = cases[1];
        const auto y = evaluate(c.model, c.x, c.truth);
        CHECK_THAT(guess::dominant_frequency(c.x, y), WithinRel(58e6, 0.02));
    }
    {
        const auto& c = cases[2];
        const auto g = guess::gaussian_line(c.x, evaluate(c.model, c.x, c.truth));
        CHECK_THAT(g[1], WithinRel(12.84e9, 1e-3));
        CHECK_THAT(g[2], WithinRel(130e6, 0.1));
    }
    {
        const auto& c = cases[3];
        const auto g = guess::splitting_hyperbola(c.x, evaluate(c.model, c.x, c.truth), 4.80e9,
                                                  ElectrodeGeometry::device_default(), "dc");
        CHECK_THAT(g[1], WithinRel(4.06e9, 0.05));
        CHECK_THAT(g[2], WithinRel(c.truth[2], 0.05));
    }
}

TEST_CASE("bootstrap on noiseless data collapses") {
    const auto c = all_cases()[0];
    const auto y = evaluate(c.model, c.x, c.truth);
    const auto rep = bootstrap(c.model, c.x, y, c.start, 100, 5);
    REQUIRE(rep.intervals.size() == 3);
    for (const auto& iv : rep.intervals) CHECK(iv.upper - iv.lower <= 1e-9 * std::abs(iv.median));
    CHECK(rep.n_failed == 0);
}

TEST_CASE("bootstrap interval matches the analytic slope error") {
    const auto x = linspace(0.1, 3.0, 60);
    const double sigma = 0.05, slope = 1.7;
    double sxx = 0.0;
    for (double v : x) sxx += v * v;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, sigma);
    std::vector<double> y;
    for (double v : x) y.push_back(slope * v + n(rng));
    const auto rep = bootstrap(models::linear_origin(), x, y, {1.0}, 2000, 13, 0.6826894921370859);
    const double half = 0.5 * (rep.intervals[0].upper - rep.intervals[0].lower);
    CHECK_THAT(half, WithinRel(sigma / std::sqrt(sxx), 0.2));
}

TEST_CASE("bootstrap is deterministic under a fixed seed") {
    const auto c = all_cases()[2];
    auto y = evaluate(c.model, c.x, c.truth);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 500.0);
    for (auto& v : y) v += n(rng);
    const auto a = bootstrap(c.model, c.x, y, c.start, 150, 99);
    const auto b = bootstrap(c.model, c.x, y, c.start, 150, 99);
    const auto ja = fit_report_json(c.model, a.base, &a).dump();
    const auto jb = fit_report_json(c.model, b.base, &b).dump();
    CHECK(ja == jb);
    const auto d = bootstrap(c.model, c.x, y, c.start, 150, 100);
    CHECK(fit_report_json(c.model, d.base, &d).dump() != ja);
}

TEST_CASE("bootstrap argument and failure handling") {
    const auto c = all_cases()[4];
    const auto y = evaluate(c.model, c.x, c.truth);
    CHECK_THROWS_AS(bootstrap(c.model, c.x, y, c.start, 99, 1), FitError);

    // a model that breaks after the base fit: every refit fails
    auto calls = std::make_shared<std::atomic<long>>(0);
    auto limit = std::make_shared<std::atomic<long>>(-1);
    FitModel m = c.model;
    m.eval = [calls, limit](double x, std::span<const double> th) {
        const long n = ++*calls;
        if (*limit >= 0 && n > *limit) throw FitError("model broke");
        return th[0] * x;
    };
    fit(m, c.x, y, c.start);
    *limit = calls->load() + static_cast<long>(c.x.size());
    *calls = 0;
    try {
        bootstrap(m, c.x, y, c.start, 100, 1);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("100 of 100") != std::string::npos);
    }
}

TEST_CASE("fit report json") {
    const auto c = all_cases()[0];
    const auto y = evaluate(c.model, c.x, c.truth);
    const auto r = fit(c.model, c.x, y, c.start);
    const auto j = fit_report_json(c.model, r);
    CHECK(j["model"] == "t1_recovery");
    CHECK(j["converged"] == true);
    CHECK(j["parameters"].size() == 3);
    CHECK(j["parameters"][1]["name"] == "T1");
    CHECK(j["parameters"][1]["unit"] == "s");
    CHECK(j.contains("residual_norm"));
    CHECK(j.contains("iterations"));
}
