#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "etncs/commands.hpp"
#include "fixtures.hpp"

using namespace etncs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("etncs_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ETNCS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cfg() { return "-c " + fixtures::worked_example_path(); }

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::map<std::string, std::string> kv_file(const fs::path& p) {
    std::ifstream f(p);
    return read_kv(f);
}

}  // namespace

TEST_CASE("config sections, comments and overrides") {
    Config c = Config::from_string(
        "# header\n"
        "top = 1\n"
        "[chan_pc]\n"
        "T0 = 0.5   # trailing\n"
        "dropout.p = 0.25\n"
        "[]\n"
        "sim.h = 2e-3\n");
    CHECK(c.get_double("top", 0) == 1.0);
    CHECK(c.get_double("chan_pc.T0", 0) == 0.5);
    CHECK(c.get_double("chan_pc.dropout.p", 0) == 0.25);
    CHECK(c.get_double("sim.h", 0) == 2e-3);
    c.apply_override("chan_pc.T0=0.9");
    CHECK(c.get_double("chan_pc.T0", 0) == 0.9);
    CHECK(c.echo().find("chan_pc.T0 = 0.9") != std::string::npos);
    CHECK_THROWS_AS(Config::from_string("novalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::from_string("[open\n"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("nokey"), ConfigError);
    CHECK_THROWS_AS(Config::from_string("x = abc\n").get_double("x", 0), ConfigError);
}

TEST_CASE("worked-example config maps onto the design inputs") {
    const Problem pr = fixtures::worked_problem();
    CHECK(pr.params.rho_p == 1.8);
    CHECK(pr.params.nu_c == 0.49);
    CHECK(pr.params.b_p == 2.0);
    CHECK(pr.params.d1 == 0.3);
    CHECK(pr.params.d2 == 0.2);
    CHECK(pr.params.gamma == 250.0);
    CHECK(pr.m11 == 0.16);
    CHECK(pr.m22 * pr.m22 == Catch::Approx(49.46).epsilon(1e-15));
    CHECK(pr.scenario.plant_x0 == Vec{10.0, -14.0});
    CHECK(pr.scenario.chan_cp.delay.T0 == 0.6);
    CHECK(pr.controller_lti.has_value());
}

TEST_CASE("design report carries the worked-example values and the budget note") {
    const DesignOutcome d = run_design(fixtures::worked_problem());
    CHECK(d.exit_code == kExitOk);
    CHECK(d.report.find("rho~_c = 0.7227813091") != std::string::npos);
    CHECK(d.report.find("m21 = -4.865081803") != std::string::npos);
    CHECK(d.report.find("d_p_max              1") != std::string::npos);
    CHECK(d.report.find("d_c_max              1") != std::string::npos);
    CHECK(d.report.find("truncating base and radicand") != std::string::npos);
    CHECK(d.kv.str().find("d_c_rounded = 2") != std::string::npos);
}

TEST_CASE("design exit codes") {
    const auto out = scratch("design");
    CHECK(run_cli("design " + cfg() + " -o " + out.string()) == kExitOk);
    CHECK(fs::exists(out / "design_report.txt"));
    const auto kv = kv_file(out / "design.kv");
    CHECK(kv.at("stability_ok") == "true");
    CHECK(kv.at("d_p_max") == "1");

    CHECK(run_cli("design " + cfg() + " -o " + out.string() + " --set M.m22_squared=30") == kExitDesign);
    CHECK(slurp(out / "design_report.txt").find("violates m22^2 >") != std::string::npos);
    CHECK(run_cli("design " + cfg() + " -o " + out.string() + " --set design.auto_margin=1.0") == kExitDesign);
    CHECK(kv_file(out / "design.kv").at("stability_ok") == "false");
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run_cli("") == kExitUsage);
    CHECK(run_cli("bogus") == kExitUsage);
    CHECK(run_cli("design -c /nonexistent/file.cfg") == kExitUsage);
    const auto out = scratch("usage");
    CHECK(run_cli("design " + cfg() + " -o " + out.string() + " --set M.m11=abc") == kExitUsage);
}

TEST_CASE("simulate writes the trace files") {
    const auto out = scratch("sim_short");
    CHECK(run_cli("simulate " + cfg() + " -o " + out.string() + " --set sim.t_end=0.01") == kExitOk);
    std::ifstream f(out / "trace.csv");
    std::size_t lines = 0;
    for (std::string l; std::getline(f, l);) ++lines;
    CHECK(lines == 12);
    CHECK(fs::exists(out / "events.csv"));
    CHECK(fs::exists(out / "metrics.kv"));
    CHECK(slurp(out / "effective_config.txt").find("sim.t_end = 0.01") != std::string::npos);
}

TEST_CASE("simulate reports divergence with exit 3") {
    const auto out = scratch("sim_div");
    CHECK(run_cli("simulate " + cfg() + " -o " + out.string() +
                  " --set plant.model=first_order --set plant.a=40 --set plant.x0=1 --set plant.rho=0.1"
                  " --set sim.t_end=5") == kExitDivergence);
    CHECK(kv_file(out / "metrics.kv").at("diverged") == "true");
}

TEST_CASE("seed sweeps write isolated, reproducible outputs") {
    const auto a = scratch("sweep_a");
    const auto b = scratch("sweep_b");
    CHECK(run_cli("simulate " + cfg() + " -o " + a.string() + " --set sim.t_end=2 --seed 1:3 -j 3") == kExitOk);
    CHECK(run_cli("simulate " + cfg() + " -o " + b.string() + " --set sim.t_end=2 --seed 1,2,3 -j 1") == kExitOk);
    for (int s = 1; s <= 3; ++s) {
        const std::string d = "seed_" + std::to_string(s);
        REQUIRE(fs::exists(a / d / "trace.csv"));
        CHECK(slurp(a / d / "trace.csv") == slurp(b / d / "trace.csv"));
    }
    CHECK(slurp(a / "seed_1" / "trace.csv") != slurp(a / "seed_2" / "trace.csv"));
}

TEST_CASE("verify passes a clean trace and catches a tampered one") {
    const auto out = scratch("verify");
    const std::string base = cfg() + " -o " + out.string() + " --set sim.t_end=6";
    REQUIRE(run_cli("simulate " + base) == kExitOk);
    CHECK(run_cli("verify " + base) == kExitOk);
    CHECK(kv_file(out / "verify.kv").at("all_pass") == "true");

    // Inject a trigger-rule violation at a sample that is not an attempt.
    TraceLog log = load_trace_dir(out);
    std::size_t target = 0;
    std::vector<bool> attempt_row(log.rows.size(), false);
    for (const auto& e : log.events) attempt_row[e.row] = true;
    for (std::size_t k = log.rows.size() / 2; k < log.rows.size(); ++k) {
        if (!attempt_row[k] && std::abs(log.rows[k].y_p[0]) > 1e-6) {
            target = k;
            break;
        }
    }
    REQUIRE(target > 0);
    log.rows[target].e_p = {10.0 * std::abs(log.rows[target].y_p[0])};
    {
        std::ofstream f(out / "trace.csv");
        write_trace_csv(log, f);
    }
    CHECK(run_cli("verify " + base) == kExitVerify);
    const auto kv = kv_file(out / "verify.kv");
    CHECK(kv.at("trigger_inequality_plant") == "fail");
    CHECK(kv.at("trigger_inequality_controller") == "pass");
}

TEST_CASE("verify rejects empty or malformed traces") {
    const auto out = scratch("verify_empty");
    {
        std::ofstream f(out / "trace.csv");
        std::ofstream e(out / "events.csv");
    }
    CHECK(run_cli("verify " + cfg() + " -o " + out.string()) == kExitUsage);
    {
        std::ofstream f(out / "trace.csv");
        f << "t,x_p[0]\n0,notanumber\n";
    }
    CHECK(run_cli("verify " + cfg() + " -o " + out.string()) == kExitUsage);
    CHECK(run_cli("verify " + cfg() + " -o " + (out / "missing").string()) == kExitUsage);
}

TEST_CASE("report writes two-column plot data") {
    const auto out = scratch("report");
    REQUIRE(run_cli("simulate " + cfg() + " -o " + out.string() + " --set sim.t_end=2") == kExitOk);
    const auto plots = out / "plots";
    CHECK(run_cli("report -o " + plots.string() + " -t " + out.string()) == kExitOk);
    for (const char* f : {"x_p_1.dat", "y_c_0.dat", "inter_event_plant.dat", "dropouts_cp.dat"}) {
        INFO(f);
        REQUIRE(fs::exists(plots / f));
    }
    std::ifstream f(plots / "x_p_1.dat");
    std::string header, line;
    std::getline(f, header);
    std::getline(f, line);
    std::istringstream is(line);
    double a = 0, b = 0, extra = 0;
    CHECK(static_cast<bool>(is >> a >> b));
    CHECK_FALSE(static_cast<bool>(is >> extra));
    CHECK(b == -14.0);
}
