#include "nv0/cli.hpp"
#include "nv0/config.hpp"
#include "nv0/dataset.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <unistd.h>

using namespace nv0;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("nv0_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out, err;
};

Run nv0sim(std::vector<std::string> args) {
    args.insert(args.begin(), "nv0sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

Dataset load(const std::string& path) { return cli::detail::load_dataset(path); }

nlohmann::ordered_json load_json(const std::string& path) { return nlohmann::ordered_json::parse(read_file(path)); }

}  // namespace

// ---- value parsing -------------------------------------------------------------

TEST_CASE("parse_values handles lists, ranges and units") {
    CHECK(parse_values("1 2 3", Dim::Dimensionless, "t") == std::vector<double>{1, 2, 3});
    CHECK(parse_values("1, 2,3", Dim::Dimensionless, "t") == std::vector<double>{1, 2, 3});
    const auto r = parse_values("0:1:0.25", Dim::Voltage, "t");
    REQUIRE(r.size() == 5);
    CHECK(r.back() == 1.0);
    const auto ns = parse_values("0:1000:10 ns", Dim::Time, "t");
    REQUIRE(ns.size() == 101);
    CHECK_THAT(ns.back(), WithinRel(1e-6, 1e-12));
    CHECK_THAT(parse_scalar("4.80 GHz", Dim::Frequency, "t"), WithinRel(4.8e9, 1e-15));
    CHECK_THAT(parse_scalar("363 kHz/(V/cm)", Dim::Susceptibility, "t"), WithinRel(3630.0, 1e-12));
    CHECK_THAT(parse_scalar("828 uW", Dim::Power, "t"), WithinRel(828e-6, 1e-15));
    CHECK_THAT(parse_scalar("-50", Dim::Voltage, "t"), WithinAbs(-50.0, 0.0));
    const auto neg = parse_values("-50:50:25 V", Dim::Voltage, "t");
    CHECK(neg == std::vector<double>{-50, -25, 0, 25, 50});
}

TEST_CASE("parse_values errors") {
    CHECK_THROWS_AS(parse_values("", Dim::Time, "t"), ConfigError);
    CHECK_THROWS_WITH(parse_values("5 furlongs", Dim::Time, "t"), ContainsSubstring("unknown unit"));
    CHECK_THROWS_WITH(parse_values("5 GHz", Dim::Time, "t"), ContainsSubstring("does not match"));
    CHECK_THROWS_WITH(parse_values("1:0:1", Dim::Time, "t"), ContainsSubstring("hi >= lo"));
    CHECK_THROWS_WITH(parse_values("0:1:0", Dim::Time, "t"), ContainsSubstring("step > 0"));
    CHECK_THROWS_WITH(parse_values("0:1", Dim::Time, "t"), ContainsSubstring("lo:hi:step"));
    CHECK_THROWS_WITH(parse_values("0:1e9:1", Dim::Time, "t"), ContainsSubstring("1e6"));
    CHECK_THROWS_WITH(parse_values("abc", Dim::Dimensionless, "t"), ContainsSubstring("unknown unit"));
    CHECK_THROWS_WITH(parse_values("1 x 2", Dim::Dimensionless, "t"), ContainsSubstring("bad number"));
    CHECK_THROWS_WITH(parse_scalar("1 2", Dim::Dimensionless, "t"), ContainsSubstring("single value"));
}

// ---- configuration -----------------------------------------------------------

TEST_CASE("default configuration matches the built-in parameters") {
    const RunConfig cfg = load_config("default");
    const NVParams p;
    CHECK(cfg.params.lambda_so == p.lambda_so);
    CHECK(cfg.params.eps_perp == p.eps_perp);
    CHECK_THAT(cfg.params.d_perp, WithinRel(961.0 * 10.0, 1e-12));
    CHECK_THAT(cfg.params.d_perp_dc, WithinRel(363.0 * 10.0, 1e-12));
    CHECK_THAT(cfg.params.T2_star(), WithinRel(30.2e-9, 1e-12));
    CHECK(cfg.params.resonance.has_value());
    CHECK(cfg.geometry == ElectrodeGeometry::device_default());
    CHECK(cfg.sweep.ple_volts.size() == 101);
    CHECK(cfg.sweep.splitting_powers.size() == 8);
    CHECK_FALSE(cfg.seed.has_value());
    CHECK(cfg.format == "csv");
}

TEST_CASE("shipped default.cfg is the built-in configuration text") {
    const std::string shipped = read_file(std::string(NV0_SOURCE_DIR) + "/configs/default.cfg");
    CHECK(shipped == default_config_text);
}

TEST_CASE("configuration errors carry file and line") {
    CHECK_THROWS_WITH(parse_config("params.T1 = 1 us\nparams.bogus = 3\n", "x.cfg"),
                      ContainsSubstring("x.cfg:2") && ContainsSubstring("unknown configuration key"));
    CHECK_THROWS_WITH(parse_config("params.T1 = 5 GHz\n", "x.cfg"), ContainsSubstring("does not match"));
    CHECK_THROWS_WITH(parse_config("params.T1\n", "x.cfg"), ContainsSubstring("key = value"));
    CHECK_THROWS_WITH(parse_config("run.seed = -3\n"), ContainsSubstring("unsigned 64-bit"));
    CHECK_THROWS_WITH(parse_config("run.format = xml\n"), ContainsSubstring("csv or json"));
    CHECK_THROWS_WITH(parse_config("run.bootstrap = 10\n"), ContainsSubstring(">= 100"));
    CHECK_THROWS_WITH(parse_config("sweep.ple.electrode = nowhere\n"), ContainsSubstring("unknown electrode"));
    // T2* shorter than 2 T1 would need negative pure dephasing
    CHECK_THROWS_AS(parse_config("params.T1 = 10 ns\nparams.t2_star = 30 ns\n"), ConfigError);
    CHECK_THROWS_AS(load_config("no/such/config/file"), ConfigError);
}

TEST_CASE("t2_star and Tphi keys: last one wins, resolved against the final T1") {
    const auto a = parse_config("params.t2_star = 20 ns\nparams.T1 = 1 us\n");
    CHECK_THAT(a.params.T2_star(), WithinRel(20e-9, 1e-12));
    const auto b = parse_config("params.t2_star = 20 ns\nparams.Tphi = 50 ns\n");
    CHECK_THAT(b.params.Tphi, WithinRel(50e-9, 1e-15));
    const auto c = parse_config("params.resonance = formula\n");
    CHECK_FALSE(c.params.resonance.has_value());
}

TEST_CASE("overrides apply after the file and seed reaches the protocol") {
    const auto cfg = parse_config("params.T1 = 1 us\n", "<t>", ".", {{"params.T1", "2 us", 1}, {"run.seed", "42", 2}});
    CHECK_THAT(cfg.params.T1, WithinRel(2e-6, 1e-15));
    REQUIRE(cfg.protocol.seed.has_value());
    CHECK(*cfg.protocol.seed == 42u);
}

TEST_CASE("load_config searches the config directory") {
    TempDir dir;
    write_file(dir / "mine.cfg", "params.T1 = 250 ns\n");
    ::setenv("NV0SIM_CONFIG_DIR", dir.path.c_str(), 1);
    const auto cfg = load_config("mine");
    ::unsetenv("NV0SIM_CONFIG_DIR");
    CHECK_THAT(cfg.params.T1, WithinRel(250e-9, 1e-15));
}

TEST_CASE("geometry file is read relative to the configuration") {
    TempDir dir;
    ElectrodeGeometry g = ElectrodeGeometry::device_default();
    g.axis_sign = -1;
    write_file(dir / "geom.txt", write_geometry(g));
    write_file(dir / "c.cfg", "geometry.file = geom.txt\n");
    const auto cfg = load_config(dir / "c.cfg");
    CHECK(cfg.geometry.axis_sign == -1);
    CHECK(cfg.geometry.electrodes.size() == 2);
}

// ---- dataset formats -------------------------------------------------------------

TEST_CASE("CSV and JSON round trips are exact") {
    Dataset d;
    d.x_name = "delay";
    d.x_unit = "s";
    d.x = {0.0, 1e-9, 2.5e-9, 1.0 / 3.0};
    d.add_column("a", "Hz", {1.0, -2.0, 3.141592653589793, 1e300});
    d.add_column("b", "1", {0.1, 0.2, 0.30000000000000004, -0.0});
    d.set_meta("protocol", "test");
    d.set_meta("note", "a = b");
    CHECK(from_csv(to_csv(d)) == d);
    CHECK(dataset_from_json(to_json(d)) == d);
    CHECK(to_csv(from_csv(to_csv(d))) == to_csv(d));
}

TEST_CASE("CSV header carries units") {
    Dataset d;
    d.x_name = "voltage";
    d.x_unit = "V";
    d.x = {1.0};
    d.add_column("difference", "Hz", {2.0});
    const std::string csv = to_csv(d);
    CHECK_THAT(csv, ContainsSubstring("voltage [V],difference [Hz]\n"));
    const auto plain = from_csv("t,y\n1,2\n");
    CHECK(plain.x_unit == "1");
    CHECK(plain.columns[0].unit == "1");
}

TEST_CASE("dataset errors") {
    CHECK_THROWS_AS(from_csv(""), DatasetError);
    CHECK_THROWS_WITH(from_csv("x,y\n1,2,3\n"), ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(from_csv("x,y\n1,abc\n"), ContainsSubstring("bad number"));
    CHECK_THROWS_AS(dataset_from_json(nlohmann::ordered_json::parse("{\"x\": 1}")), DatasetError);
    Dataset d;
    d.x = {1.0, 2.0};
    d.add_column("y", "1", {1.0});
    CHECK_THROWS_WITH(to_csv(d), ContainsSubstring("has 1 values"));
    Dataset e;
    e.x_unit = "";
    CHECK_THROWS_AS(to_json(e), DatasetError);
    CHECK_THROWS_AS(Dataset{}.first_column(), DatasetError);
    CHECK_THROWS_WITH(d.column("zz"), ContainsSubstring("no column 'zz'"));
}

// ---- command line ------------------------------------------------------------------

TEST_CASE("cli: usage errors exit with 2") {
    CHECK(nv0sim({}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"frobnicate"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"t1", "--delays"}).code == cli::exit_code::invalid);
    const auto r = nv0sim({"t1", "--delays", "0:1:0 ns"});
    CHECK(r.code == cli::exit_code::invalid);
    CHECK_THAT(r.err, ContainsSubstring("step > 0"));
    CHECK(nv0sim({"--set", "params.nope=1", "validate"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"--set", "noequals", "validate"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"--config", "/no/such/file.cfg", "validate"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"--help"}).code == cli::exit_code::ok);
}

TEST_CASE("cli: validate passes on the default configuration") {
    const auto r = nv0sim({"validate"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("PASS closed-form eigenvalues match Jacobi"));
    CHECK_THAT(r.out, !ContainsSubstring("FAIL"));
}

TEST_CASE("cli: ple-scan writes data and a fit") {
    TempDir dir;
    const auto r = nv0sim({"--out", dir / "ple", "ple-scan", "--volts=-50:50:5"});
    REQUIRE(r.code == 0);
    const auto d = load(dir / "ple.csv");
    CHECK(d.x.size() == 21);
    CHECK(d.x.front() == -50.0);
    const auto j = load_json(dir / "ple.fit.json");
    CHECK(j["protocol"] == "ple-scan");
    CHECK_THAT(j["derived"]["eps_perp_Hz"].get<double>(), WithinRel(4.06e9, 1e-4));
    CHECK_THAT(j["derived"]["d_perp_dc_kHz_per_V_per_cm"].get<double>(), WithinRel(363.0, 1e-4));
}

TEST_CASE("cli: ple-scan with zero susceptibilities gives flat branches") {
    TempDir dir;
    const auto r = nv0sim({"--out", dir / "flat", "--set", "params.d_par=0", "--set", "params.d_perp_dc=0", "ple-scan",
                        "--volts", "-5:5:1"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("no hyperbola fit"));
    const auto d = load(dir / "flat.csv");
    for (const auto& c : d.columns)
        for (double v : c.values) CHECK(v == c.values.front());
    CHECK_FALSE(fs::exists(dir / "flat.fit.json"));
}

TEST_CASE("cli: t1 subcommand recovers T1") {
    TempDir dir;
    const auto r = nv0sim({"--out", dir / "t1.csv", "t1"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "t1.csv"));
    const auto j = load_json(dir / "t1.fit.json");
    CHECK_THAT(j["derived"]["T1_s"].get<double>(), WithinRel(137e-9, 0.02));
    CHECK(j["seed"].is_null());
}

TEST_CASE("cli: ramsey with json output") {
    TempDir dir;
    const auto r = nv0sim({"--out", dir / "ram", "--format", "json", "ramsey", "--detuning", "58e6"});
    REQUIRE(r.code == 0);
    const auto d = load(dir / "ram.json");
    CHECK(d.meta_value("protocol") == "ramsey");
    const auto j = load_json(dir / "ram.fit.json");
    CHECK_THAT(j["derived"]["fringe_frequency_Hz"].get<double>(), WithinRel(58e6, 0.01));
}

TEST_CASE("cli: fit subcommand on a written dataset") {
    TempDir dir;
    REQUIRE(nv0sim({"--out", dir / "t1", "t1", "--delays", "200:1000:20 ns"}).code == 0);
    const auto r = nv0sim({"--out", dir / "refit", "fit", "--model", "t1_recovery", "--data", dir / "t1.csv"});
    REQUIRE(r.code == 0);
    const auto j = load_json(dir / "refit.fit.json");
    CHECK(j["protocol"] == "fit");
    CHECK_THAT(r.out, ContainsSubstring("T1 = "));

    const auto fixed =
        nv0sim({"--out", dir / "fixed", "fit", "--model", "t1_recovery", "--data", dir / "t1.csv", "--fix", "b=0"});
    CHECK(fixed.code == 0);
    CHECK(nv0sim({"fit", "--model", "nope", "--data", dir / "t1.csv"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"fit", "--model", "t1_recovery", "--data", dir / "t1.csv", "--p0", "1,2"}).code ==
          cli::exit_code::invalid);
    CHECK(nv0sim({"fit", "--model", "t1_recovery", "--data", dir / "t1.csv", "--fix", "zz"}).code ==
          cli::exit_code::invalid);
    CHECK(nv0sim({"fit", "--model", "double_gaussian", "--data", dir / "t1.csv"}).code == cli::exit_code::invalid);
    CHECK(nv0sim({"fit", "--model", "t1_recovery", "--data", dir / "missing.csv"}).code != 0);
}

TEST_CASE("cli: seeded runs are byte identical") {
    TempDir dir;
    for (const char* stem : {"a", "b"})
        REQUIRE(nv0sim({"--seed", "7", "--out", dir / stem, "oder", "--freqs", "12.7:13.0:0.02 GHz"}).code == 0);
    CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
    CHECK(read_file(dir / "a.fit.json") == read_file(dir / "b.fit.json"));
    REQUIRE(nv0sim({"--seed", "8", "--out", dir / "c", "oder", "--freqs", "12.7:13.0:0.02 GHz"}).code == 0);
    CHECK(read_file(dir / "a.csv") != read_file(dir / "c.csv"));
}

TEST_CASE("cli: bootstrap intervals in the fit report") {
    TempDir dir;
    const auto r = nv0sim({"--seed", "3", "--bootstrap", "100", "--out", dir / "ple", "ple-scan", "--volts=-50:50:10"});
    REQUIRE(r.code == 0);
    const auto j = load_json(dir / "ple.fit.json");
    CHECK(j.contains("bootstrap"));
    CHECK(nv0sim({"--bootstrap", "5", "ple-scan"}).code == cli::exit_code::invalid);
}
