#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using invwave::io::Json;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "invwave");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = invwave::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "invwave_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Json load(const fs::path& p) {
    std::ifstream f(p);
    return Json::parse(f);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST(CheckParams, DefaultSpeedPasses) {
    const Outcome r = cli({"check-params", "--lambda", "0.2", "--K", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_NEAR(j["c_star"].get<double>(), 1.788854, 1e-6);
    EXPECT_NEAR(j["c_evaluated"].get<double>(), 1.788854, 1e-6);
    EXPECT_NEAR(j["lambda_gate"]["bound"].get<double>(), 0.453082, 1e-6);
    EXPECT_TRUE(j["all_ok"].get<bool>());
    EXPECT_TRUE(j["config"]["c"].is_null());
    EXPECT_FALSE(j["origin"]["oscillatory"].get<bool>());
    EXPECT_EQ(j["origin"]["discriminant"].get<double>(), 0.0);
}

TEST(CheckParams, GateFailureAndBadInput) {
    const Outcome g = cli({"check-params", "--lambda", "0.5", "--K", "4"});
    EXPECT_EQ(g.code, 2);
    EXPECT_FALSE(Json::parse(g.out)["lambda_gate"]["ok"].get<bool>());
    EXPECT_EQ(cli({"check-params", "--lambda", "1.2"}).code, 1);
    EXPECT_EQ(cli({"check-params", "--lambda", "abc"}).code, 1);
    EXPECT_EQ(cli({"check-params", "--bogus", "1"}).code, 1);
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(CheckParams, SubcriticalSpeedHasNoDecayGate) {
    const Outcome r = cli({"check-params", "--c", "1.0"});
    EXPECT_EQ(r.code, 2);
    const Json j = Json::parse(r.out);
    EXPECT_FALSE(j["speed_ok"].get<bool>());
    EXPECT_TRUE(j["decay_gate"].is_null());
    EXPECT_TRUE(j["origin"]["oscillatory"].get<bool>());
}

TEST(ConfigFile, CommandLineWins) {
    const fs::path d = scratch("config");
    {
        std::ofstream f(d / "run.ini");
        f << "lambda=0.5\nK=1\nnu=0\n";
    }
    const std::string cfg = (d / "run.ini").string();
    EXPECT_EQ(cli({"check-params", "--config", cfg}).code, 2);
    const Outcome r = cli({"check-params", "--config", cfg, "--lambda", "0.2"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(Json::parse(r.out)["config"]["lambda"].get<double>(), 0.2);
    {
        std::ofstream f(d / "bad.ini");
        f << "lambda=0.2\nbogus=1\n";
    }
    EXPECT_EQ(cli({"check-params", "--config", (d / "bad.ini").string()}).code, 1);
    EXPECT_EQ(cli({"check-params", "--config", (d / "missing.ini").string()}).code, 1);
}

TEST(SolveWave, WritesArtifacts) {
    const fs::path d = scratch("wave");
    const Outcome r = cli({"solve-wave", "--lambda", "0.2", "--K", "1", "--c", "2.0", "--L", "60", "--n", "2400",
                           "--out", d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"profile.csv", "sandwich.csv", "trace.json", "rates.json", "plot.gp"}) {
        EXPECT_TRUE(fs::exists(d / f)) << f;
    }
    const invwave::io::CsvTable t = invwave::io::read_csv(d / "profile.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"xi", "u", "v"}));
    EXPECT_EQ(t.cols[0].size(), 2401u);
    const invwave::io::CsvTable s = invwave::io::read_csv(d / "sandwich.csv");
    EXPECT_EQ(s.header, (std::vector<std::string>{"xi", "u_upper", "v_upper", "u_lower", "v_lower"}));
    const Json rates = load(d / "rates.json");
    EXPECT_TRUE(rates["pass"].get<bool>());
    EXPECT_TRUE(rates["warnings"].empty());
    EXPECT_TRUE(load(d / "trace.json")["trace"]["converged"].get<bool>());

    // The stored profile can be re-analysed.
    const fs::path a = scratch("analyze");
    const Outcome an = cli({"analyze", "--lambda", "0.2", "--K", "1", "--c", "2.0", "--profile",
                            (d / "profile.csv").string(), "--out", a.string()});
    EXPECT_EQ(an.code, 0) << an.err;
    EXPECT_TRUE(fs::exists(a / "analysis.json"));
    EXPECT_TRUE(fs::exists(a / "fit_data.csv"));
}

TEST(SolveWave, SubcriticalRefusedWithoutOutput) {
    const fs::path d = scratch("wave_sub");
    const Outcome r = cli({"solve-wave", "--c", "1.0", "--out", d.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("c*"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(d / "profile.csv"));
}

TEST(SolveWave, CoarseGridWarns) {
    const fs::path d = scratch("wave_coarse");
    const Outcome r = cli({"solve-wave", "--c", "2.0", "--n", "40", "--out", d.string()});
    EXPECT_TRUE(r.code == 0 || r.code == 4) << r.code << " " << r.err;
    EXPECT_NE(r.err.find("residual warning"), std::string::npos);
    const Json rates = load(d / "rates.json");
    bool found = false;
    for (const auto& w : rates["warnings"]) found = found || w.get<std::string>().find("residual") != std::string::npos;
    EXPECT_TRUE(found);
}

TEST(SolveKpp, Deterministic) {
    const fs::path a = scratch("kpp_a"), b = scratch("kpp_b");
    ASSERT_EQ(cli({"solve-kpp", "--c", "2.0", "--out", a.string()}).code, 0);
    ASSERT_EQ(cli({"solve-kpp", "--c", "2.0", "--out", b.string()}).code, 0);
    EXPECT_EQ(slurp(a / "kpp.csv"), slurp(b / "kpp.csv"));
    EXPECT_EQ(cli({"solve-kpp", "--which", "middle"}).code, 1);
}

TEST(BuildSandwich, Passes) {
    const fs::path d = scratch("sandwich");
    EXPECT_EQ(cli({"build-sandwich", "--c", "2.0", "--out", d.string()}).code, 0);
    EXPECT_TRUE(load(d / "sandwich.json")["report"]["pass"].get<bool>());
}

TEST(OutputEnv, OverridesOutFlag) {
    const fs::path env = scratch("env"), flag = scratch("flag");
    ::setenv("INVWAVE_OUT", env.c_str(), 1);
    const Outcome r = cli({"solve-kpp", "--out", flag.string()});
    ::unsetenv("INVWAVE_OUT");
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(fs::exists(env / "kpp.csv"));
    EXPECT_FALSE(fs::exists(flag / "kpp.csv"));
}

TEST(Simulate, SpeedWithinTolerance) {
    const fs::path d = scratch("sim");
    const Outcome r = cli({"simulate", "--lambda", "0.19", "--K", "1", "--x-max", "400", "--t-end", "150", "--out",
                           d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json s = load(d / "summary.json");
    EXPECT_LE(s["rel_error"].get<double>(), 0.10);
    EXPECT_TRUE(fs::exists(d / "fronts.csv"));
    EXPECT_TRUE(fs::exists(d / "snapshots" / "snapshot_000.csv"));
    EXPECT_TRUE(fs::exists(d / "snapshots" / "snapshot_006.csv"));
    EXPECT_EQ(s["snapshots"].back()["t"].get<double>(), 150.0);
}

TEST(Simulate, StabilityAndEmptyFront) {
    const fs::path d = scratch("sim_bad");
    EXPECT_EQ(cli({"simulate", "--dt", "1.0", "--out", d.string()}).code, 3);
    const Outcome z = cli({"simulate", "--ic", "zero", "--x-max", "50", "--t-end", "5", "--out", d.string()});
    EXPECT_EQ(z.code, 2);
    EXPECT_TRUE(load(d / "summary.json")["empty_front"].get<bool>());
    EXPECT_EQ(cli({"simulate", "--ic", "wedge"}).code, 1);
}

TEST(Analyze, SubcriticalDiagnostic) {
    const fs::path d = scratch("analyze_sub");
    const Outcome r = cli({"analyze", "--lambda", "0.75", "--c", "0.8", "--out", d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = load(d / "analysis.json");
    EXPECT_TRUE(j["sign_change"].get<bool>());
    EXPECT_NEAR(j["origin"]["mu_minus"][0].get<double>(), 0.4, 1e-12);
    EXPECT_NEAR(j["quasi_period"].get<double>(), 20.944, 1e-3);
}

TEST(Sweep, NineCellsConverge) {
    const fs::path d = scratch("sweep");
    const Outcome r = cli({"sweep", "--lambdas", "0.1,0.2,0.3", "--Ks", "1", "--c-rel", "1.0,1.1,1.25", "--L", "60",
                           "--n", "1200", "--jobs", "1", "--out", d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    // The status column is text, so count CSV lines and read statuses from the JSON.
    std::ifstream f(d / "sweep.csv");
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) ++lines;
    EXPECT_EQ(lines, 10);
    const Json j = load(d / "sweep.json");
    ASSERT_EQ(j["rows"].size(), 9u);
    for (const auto& row : j["rows"]) EXPECT_EQ(row["status"].get<std::string>(), "CONVERGED");
}

TEST(Sweep, GateFailingCellIsPartial) {
    const fs::path d = scratch("sweep_gate");
    const Outcome r = cli({"sweep", "--lambdas", "0.2,0.5", "--Ks", "4", "--cs", "2.0", "--n", "1200", "--out",
                           d.string()});
    EXPECT_EQ(r.code, 4);
    const Json j = load(d / "sweep.json");
    bool skipped = false;
    for (const auto& row : j["rows"]) skipped = skipped || row["status"].get<std::string>() == "SKIPPED-GATE";
    EXPECT_TRUE(skipped);
    EXPECT_EQ(cli({"sweep", "--Ks", "1", "--cs", "2.0"}).code, 1);
}

TEST(Binary, ExitCodesPropagate) {
    const char* bin = std::getenv("INVWAVE_BIN");
    if (bin == nullptr) GTEST_SKIP() << "INVWAVE_BIN not set";
    const std::string b = bin;
    auto code = [&](const std::string& args) {
        const int st = std::system((b + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    };
    EXPECT_EQ(code("check-params --lambda 0.2 --K 1"), 0);
    EXPECT_EQ(code("check-params --lambda 0.5 --K 4"), 2);
    EXPECT_EQ(code("check-params --lambda 1.2"), 1);
}
