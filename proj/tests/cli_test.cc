// End-to-end tests of the hom executable.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include "hom/config.hpp"
#include "hom/io.hpp"
#include "hom/reproduce.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / fmt::format("hom_cli_{}_{}", getpid(), info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string &name) const { return (dir_ / name).string(); }

    // Runs the CLI with `args`; stdout and stderr go to files in the temp dir.
    int run(const std::string &args, const std::string &env = "") {
        const std::string cmd = fmt::format("{} {} {} >{} 2>{}", env, HOM_CLI_PATH, args, path("stdout.txt"),
                                            path("stderr.txt"));
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const std::string &name) const { return hom::io::read_file(path(name)); }
    json read_json(const std::string &file) const { return json::parse(hom::io::read_file(file)); }

    // A small config: no residuals, no background, given efficiencies.
    std::string write_config(const std::string &name, double eff1, double eff2, double background = 0.0) {
        hom::RunConfig c = hom::repro::paper_config();
        c.emitters[0].efficiency = eff1;
        c.emitters[1].efficiency = eff2;
        c.emitters[0].multiphoton_residual = 0.0;
        c.emitters[1].multiphoton_residual = 0.0;
        c.setup.background_rate = background;
        c.detector.dark_rate_per_ps = 0.0;
        c.simulation.n_pulses = 1000;
        c.simulation.workers = 1;
        c.output_dir = path("configured_out");
        hom::io::write_atomic(path(name), hom::serialize_config(c));
        return path(name);
    }

    fs::path dir_;
};

TEST_F(Cli, SimulateWritesFilesAndSummary) {
    const std::string cfg = write_config("c.json", 0.3, 0.5);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {}", cfg, path("a"))), 0) << read("stderr.txt");
    ASSERT_TRUE(fs::exists(path("a/d3.csv")));
    ASSERT_TRUE(fs::exists(path("a/d4.csv")));
    const json s = read_json(path("a/summary.json"));
    const auto d3 = hom::io::read_tags(path("a/d3.csv"));
    const auto d4 = hom::io::read_tags(path("a/d4.csv"));
    EXPECT_EQ(s["counts"]["D3"].get<size_t>(), d3.tags.size());
    EXPECT_EQ(s["counts"]["D4"].get<size_t>(), d4.tags.size());
    EXPECT_EQ(s["counters"]["pulses"].get<std::uint64_t>(), 1000u);
    EXPECT_EQ(s["seed"]["master_seed"].get<std::uint64_t>(), 1u);
    EXPECT_EQ(hom::parse_config(s["config"].dump()), hom::load_config(cfg));

    // One photon per emitter per pulse, kept with its efficiency.
    const double mean = 1000.0 * (0.3 + 0.5);
    const double sd = std::sqrt(1000.0 * (0.3 * 0.7 + 0.5 * 0.5));
    const double total = static_cast<double>(d3.tags.size() + d4.tags.size());
    EXPECT_NEAR(total, mean, 4.0 * sd);
    // Efficiency thins emission, so each emitter's count is binomial.
    const auto emitted = s["counters"]["photons_emitted"].get<std::vector<double>>();
    ASSERT_EQ(emitted.size(), 2u);
    EXPECT_NEAR(emitted[0], 300.0, 4.0 * std::sqrt(1000.0 * 0.3 * 0.7));
    EXPECT_NEAR(emitted[1], 500.0, 4.0 * std::sqrt(1000.0 * 0.5 * 0.5));
    EXPECT_EQ(s["counters"]["photons_detected"].get<double>(), emitted[0] + emitted[1]);
    EXPECT_EQ(total + s["counters"]["merged"].get<double>() + s["counters"]["out_of_range"].get<double>(),
              s["counters"]["photons_detected"].get<double>());
}

TEST_F(Cli, SimulateIsDeterministic) {
    const std::string cfg = write_config("c.json", 0.5, 0.5, 0.1);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --seed 7", cfg, path("a"))), 0);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --seed 7 --workers 3", cfg, path("b"))), 0);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --seed 8", cfg, path("c"))), 0);
    EXPECT_EQ(read("a/d3.csv"), read("b/d3.csv"));
    EXPECT_EQ(read("a/d4.csv"), read("b/d4.csv"));
    EXPECT_NE(read("a/d3.csv") + read("a/d4.csv"), read("c/d3.csv") + read("c/d4.csv"));
}

TEST_F(Cli, BinaryFormatMatchesCsv) {
    const std::string cfg = write_config("c.json", 0.5, 0.5);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --format csv", cfg, path("a"))), 0);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --format bin", cfg, path("b"))), 0);
    for (const char *ch : {"d3", "d4"}) {
        const auto csv = hom::io::read_tags(path(fmt::format("a/{}.csv", ch)));
        const std::string bin = read(fmt::format("b/{}.bin", ch));
        EXPECT_EQ(bin, hom::io::tags_to_bin(csv));
        EXPECT_EQ(bin.size(), 16 + 8 * csv.tags.size());
    }
}

TEST_F(Cli, EnvironmentSetsDefaultOutput) {
    const std::string cfg = write_config("c.json", 0.5, 0.5);
    ASSERT_EQ(run(fmt::format("simulate --config {}", cfg), fmt::format("HOM_OUT_DIR={}", path("env"))), 0);
    EXPECT_TRUE(fs::exists(path("env/summary.json")));
    EXPECT_FALSE(fs::exists(path("configured_out")));
    // --out takes precedence over the environment.
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {}", cfg, path("flag")),
                  fmt::format("HOM_OUT_DIR={}", path("env2"))),
              0);
    EXPECT_TRUE(fs::exists(path("flag/summary.json")));
    EXPECT_FALSE(fs::exists(path("env2")));
    // Without either, the configured directory is used.
    ASSERT_EQ(run(fmt::format("simulate --config {}", cfg), "HOM_OUT_DIR="), 0);
    EXPECT_TRUE(fs::exists(path("configured_out/summary.json")));
}

TEST_F(Cli, AnalyzeEmptyFilesIsUndefined) {
    hom::io::write_atomic(path("e3.csv"), "channel,timestamp_ps\n");
    hom::io::write_atomic(path("e4.csv"), "");
    ASSERT_EQ(run(fmt::format("analyze --perp {0} {1} --par {0} {1} --out {2}", path("e3.csv"), path("e4.csv"),
                              path("o"))),
              0)
        << read("stderr.txt");
    const json m = read_json(path("o/metrics.json"));
    EXPECT_FALSE(m["defined"].get<bool>());
    EXPECT_TRUE(m["pc"].is_null());
    EXPECT_TRUE(m["pc_post"].is_null());
    EXPECT_TRUE(m["ratio_par_b"].is_null());
    const std::string hist = read("o/histogram_perp.csv");
    EXPECT_EQ(hist.rfind("tau_ps,counts\n", 0), 0u);
    EXPECT_EQ(hist.find(",1"), std::string::npos);
}

TEST_F(Cli, AnalyzeSimulatedRuns) {
    hom::RunConfig c = hom::repro::paper_config();
    c.simulation.n_pulses = 200000;
    c.simulation.workers = 1;
    c.setup.polarization = hom::Polarization::orthogonal;
    hom::io::write_atomic(path("c.json"), hom::serialize_config(c));
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --seed 3", path("c.json"), path("perp"))), 0);
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {} --seed 4 --polarization parallel", path("c.json"),
                              path("par"))),
              0);
    // File order does not matter: channels are read from the files.
    ASSERT_EQ(run(fmt::format("analyze --config {} --perp {} {} --par {} {} --out {}", path("c.json"),
                              path("perp/d4.csv"), path("perp/d3.csv"), path("par/d3.csv"), path("par/d4.csv"),
                              path("o"))),
              0)
        << read("stderr.txt");
    const json m = read_json(path("o/metrics.json"));
    ASSERT_TRUE(m["defined"].get<bool>());
    for (const char *k : {"pc", "pc_post", "ratio_par_b", "ratio_perp_b"}) {
        ASSERT_TRUE(m[k].is_object()) << k;
        EXPECT_GT(m[k]["sigma"].get<double>(), 0.0) << k;
    }
    // Interference suppresses the parallel center peak; the orthogonal one sits near one half.
    EXPECT_GT(m["pc"]["value"].get<double>(), 0.1);
    EXPECT_LT(m["ratio_par_b"]["value"].get<double>(), m["ratio_perp_b"]["value"].get<double>());
    EXPECT_NEAR(m["ratio_perp_b"]["value"].get<double>(), 0.5 * (1.0 + 0.09) * 1.0, 0.1);
}

TEST_F(Cli, AnalyzeRejectsDuplicateChannel) {
    hom::io::write_atomic(path("a.csv"), "channel,timestamp_ps\nD3,10\n");
    hom::io::write_atomic(path("b.csv"), "channel,timestamp_ps\nD3,20\n");
    hom::io::write_atomic(path("c.csv"), "channel,timestamp_ps\nD4,20\n");
    EXPECT_EQ(run(fmt::format("analyze --perp {0} {1} --par {0} {2} --out {3}", path("a.csv"), path("b.csv"),
                              path("c.csv"), path("o"))),
              3);
    EXPECT_NE(read("stderr.txt").find("both files hold channel D3"), std::string::npos);
}

TEST_F(Cli, MalformedRowsReportLineNumbers) {
    hom::io::write_atomic(path("a.csv"), "channel,timestamp_ps\nD3,10\nD3,abc\n");
    hom::io::write_atomic(path("b.csv"), "channel,timestamp_ps\nD4,20\n");
    EXPECT_EQ(run(fmt::format("analyze --perp {0} {1} --par {0} {1} --out {2}", path("a.csv"), path("b.csv"),
                              path("o"))),
              3);
    EXPECT_NE(read("stderr.txt").find("a.csv:3"), std::string::npos) << read("stderr.txt");
}

TEST_F(Cli, ConfigErrorsExitTwo) {
    hom::io::write_atomic(path("bad.json"), "{ not json");
    EXPECT_EQ(run(fmt::format("curve --config {} --out {}", path("bad.json"), path("o"))), 2);

    json j = json::parse(hom::serialize_config(hom::repro::paper_config()));
    j["emitters"][1]["t2_ps"] = 5000.0;
    hom::io::write_atomic(path("t2.json"), j.dump());
    EXPECT_EQ(run(fmt::format("simulate --config {} --out {}", path("t2.json"), path("o"))), 2);
    EXPECT_NE(read("stderr.txt").find("emitters[1].t2_ps"), std::string::npos) << read("stderr.txt");
}

TEST_F(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("simulate --format xml"), 1);
    EXPECT_EQ(run("analyze --perp a.csv"), 1);
    EXPECT_EQ(run("simulate --config /nonexistent/config.json"), 1);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, CurveWithDeltaResponseEqualsBareCurve) {
    hom::RunConfig c = hom::repro::paper_config();
    c.detector.irf_shape = hom::IrfShape::delta;
    c.detector.irf_fwhm_ps = 0.0;
    c.curve.spacing_ps = 16.0;
    hom::io::write_atomic(path("c.json"), hom::serialize_config(c));
    ASSERT_EQ(run(fmt::format("curve --config {} --out {}", path("c.json"), path("o"))), 0) << read("stderr.txt");
    std::ifstream in(path("o/curve.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "tau_ps,perp,par,perp_conv,par_conv");
    int rows = 0;
    while (std::getline(in, line)) {
        double tau, perp, par, perp_c, par_c;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &tau, &perp, &par, &perp_c, &par_c), 5) << line;
        EXPECT_EQ(perp, perp_c);
        EXPECT_EQ(par, par_c);
        EXPECT_LE(par, perp + 1e-15);
        ++rows;
    }
    EXPECT_GT(rows, 1000);
    const json s = read_json(path("o/curve_summary.json"));
    EXPECT_EQ(s["pc"].get<double>(), s["pc_convolved"].get<double>());
}

TEST_F(Cli, CurveWithResponseFillsDipAndKeepsCoalescence) {
    hom::RunConfig c = hom::repro::paper_config();
    c.setup.mode_overlap = 1.0;
    c.curve.spacing_ps = 8.0;
    hom::io::write_atomic(path("c.json"), hom::serialize_config(c));
    ASSERT_EQ(run(fmt::format("curve --config {} --out {}", path("c.json"), path("o"))), 0) << read("stderr.txt");
    const json s = read_json(path("o/curve_summary.json"));
    EXPECT_NEAR(s["pc"].get<double>(), s["pc_convolved"].get<double>(), 1e-3);
    EXPECT_GT(s["pc_post"].get<double>(), s["pc_post_convolved"].get<double>() + 0.1);
}

TEST_F(Cli, FitSpectrumRecoversLinewidth) {
    const hom::SampledCurve spec = hom::repro::synthetic_spectrum(0.55, 0.15, 11);
    hom::io::write_atomic(path("spec.csv"), hom::io::sampled_curve_to_csv(spec, "frequency_ghz", "counts"));
    ASSERT_EQ(run(fmt::format("fit-spectrum --input {} --instrument-fwhm-ghz 0.15 --out {}", path("spec.csv"),
                              path("o"))),
              0)
        << read("stderr.txt");
    const json j = read_json(path("o/fit_spectrum.json"));
    double fwhm = 0.0;
    for (const auto &p : j["parameters"]) {
        if (p["name"] == "fwhm_ghz") fwhm = p["value"].get<double>();
    }
    EXPECT_NEAR(fwhm, 0.55, 0.05);
    EXPECT_NEAR(j["t2_ps"].get<double>(), 1000.0 / (M_PI * fwhm), 1e-9);
    EXPECT_EQ(j["instrument"], "lorentzian");
}

TEST_F(Cli, FitDecayRecoversLifetimeDeterministically) {
    const hom::RunConfig c = hom::repro::paper_config();
    const hom::SampledCurve decay = hom::repro::synthetic_decay(hom::repro::dot1(), c.detector, 5);
    hom::io::write_atomic(path("decay.csv"), hom::io::sampled_curve_to_csv(decay, "time_ps", "counts"));
    const std::string args = fmt::format("fit-decay --input {} --model single_exp --bootstrap 20 --out ", path("decay.csv"));
    ASSERT_EQ(run(args + path("a")), 0) << read("stderr.txt");
    ASSERT_EQ(run(args + path("b")), 0);
    EXPECT_EQ(read("a/fit_decay.json"), read("b/fit_decay.json"));
    const json j = read_json(path("a/fit_decay.json"));
    EXPECT_EQ(j["model"], "single_exp");
    bool found = false;
    for (const auto &p : j["parameters"]) {
        if (p["name"] == "fast_lifetime_ps" || p["name"] == "lifetime_ps") {
            EXPECT_NEAR(p["value"].get<double>(), 610.0, 15.0);
            EXPECT_TRUE(p.contains("bootstrap_sigma"));
            found = true;
        }
    }
    EXPECT_TRUE(found) << j.dump();
}

TEST_F(Cli, FitInputErrorsExitThree) {
    hom::io::write_atomic(path("bad.csv"), "time_ps,counts\n1,2\nx,3\n");
    EXPECT_EQ(run(fmt::format("fit-decay --input {} --out {}", path("bad.csv"), path("o"))), 3);
}

TEST_F(Cli, HbtOfSingleSource) {
    hom::RunConfig c = hom::repro::paper_config();
    c.emitters[1].efficiency = 0.0;
    c.emitters[0].multiphoton_residual = 0.09;
    c.setup.background_rate = 0.0;
    c.simulation.n_pulses = 200000;
    c.simulation.workers = 1;
    hom::io::write_atomic(path("c.json"), hom::serialize_config(c));
    ASSERT_EQ(run(fmt::format("simulate --config {} --out {}", path("c.json"), path("s"))), 0) << read("stderr.txt");
    ASSERT_EQ(run(fmt::format("hbt --config {} --input {} {} --out {}", path("c.json"), path("s/d3.csv"),
                              path("s/d4.csv"), path("o"))),
              0)
        << read("stderr.txt");
    const json j = read_json(path("o/hbt.json"));
    ASSERT_TRUE(j["purity_ratio"].is_object());
    const double r = j["purity_ratio"]["value"].get<double>();
    const double sd = j["purity_ratio"]["sigma"].get<double>();
    EXPECT_NEAR(r, 0.09, std::max(0.01, 3.0 * sd));
    EXPECT_TRUE(fs::exists(path("o/histogram_hbt.csv")));
}

} // namespace
