// hom: simulate, analyze and fit two-source interference data.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "hom/analysis.hpp"
#include "hom/config.hpp"
#include "hom/correlation.hpp"
#include "hom/fitting.hpp"
#include "hom/io.hpp"
#include "hom/montecarlo.hpp"
#include "hom/reproduce.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kTolerance = 4, kRuntime = 5 };

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> pulses;
    std::string out;
    std::optional<std::int64_t> bin_width;
    std::optional<double> window;
    std::string format = "csv";
    std::string polarization;
    std::vector<std::string> perp, par, inputs;
    std::string input;
    std::string model = "single_exp";
    double instrument_fwhm = 0.0;
    std::string instrument = "lorentzian";
    double epoch = 0.0;
    int bootstrap = 0;
    std::optional<unsigned> workers;
};

hom::RunConfig load(const Options &o) {
    hom::RunConfig c = o.config_path.empty() ? hom::repro::paper_config() : hom::load_config(o.config_path);
    if (o.seed) c.simulation.seed = *o.seed;
    if (o.pulses) c.simulation.n_pulses = *o.pulses;
    if (o.workers) c.simulation.workers = *o.workers;
    if (o.bin_width) c.analysis.bin_width_ps = *o.bin_width;
    if (o.window) c.analysis.window_ps = *o.window;
    if (!o.polarization.empty()) {
        try {
            c.setup.polarization = hom::parse_polarization(o.polarization);
        } catch (const hom::ParameterError &e) {
            throw hom::ConfigError(std::string("--polarization: ") + e.what());
        }
    }
    c.validate();
    return c;
}

// --out, then HOM_OUT_DIR, then the configured directory.
std::string out_dir(const Options &o, const std::string &configured) {
    std::string dir = o.out;
    if (dir.empty()) {
        if (const char *env = std::getenv("HOM_OUT_DIR"); env && *env) dir = env;
    }
    if (dir.empty()) dir = configured;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw hom::io::IoError(dir + ": cannot create directory: " + ec.message());
    return dir;
}

std::string path_in(const std::string &dir, const std::string &name) { return (fs::path(dir) / name).string(); }

json measured(const std::optional<hom::Measured> &m) {
    if (!m) return nullptr;
    return {{"value", m->value}, {"sigma", m->sigma}};
}

json fit_json(const hom::fit::FitResult &fr, const std::vector<double> *boot) {
    json j;
    j["model"] = hom::fit::to_string(fr.context.model);
    j["reduced_chi2"] = fr.reduced_chi2;
    j["iterations"] = fr.iterations;
    if (fr.context.model == hom::fit::Model::biexp) j["degenerate"] = fr.degenerate;
    j["parameters"] = json::array();
    const auto names = hom::fit::internal_parameter_names(fr.context.model);
    for (const auto &p : fr.params) {
        json pj{{"name", p.name}, {"unit", p.unit}, {"value", p.value}};
        pj["sigma"] = std::isfinite(p.sigma) ? json(p.sigma) : json("inf");
        if (boot) {
            for (size_t k = 0; k < names.size(); ++k) {
                if (names[k] == p.name) pj["bootstrap_sigma"] = (*boot)[k];
            }
        }
        j["parameters"].push_back(pj);
    }
    return j;
}

int cmd_simulate(const Options &o) {
    const hom::RunConfig c = load(o);
    const auto fmt_kind = hom::io::parse_tag_format(o.format);
    const std::string dir = out_dir(o, c.output_dir);
    const hom::mc::SimulationResult r = hom::mc::generate_streams(c.simulation.n_pulses, c.emitters[0], c.emitters[1],
                                                                  c.setup, c.detector, c.simulation.seed,
                                                                  c.simulation.workers);
    const std::string f3 = path_in(dir, "d3" + hom::io::extension(fmt_kind));
    const std::string f4 = path_in(dir, "d4" + hom::io::extension(fmt_kind));
    hom::io::write_tags(f3, r.d3, fmt_kind);
    hom::io::write_tags(f4, r.d4, fmt_kind);
    json s;
    s["files"] = {f3, f4};
    s["counts"] = {{"D3", r.d3.tags.size()}, {"D4", r.d4.tags.size()}};
    s["duration_ps"] = r.d3.duration_ps;
    s["counters"] = {{"pulses", r.counters.pulses},
                     {"photons_emitted", r.counters.photons_emitted},
                     {"photons_detected", r.counters.photons_detected},
                     {"noise_clicks", r.counters.noise_clicks},
                     {"out_of_range", r.counters.out_of_range},
                     {"merged", r.counters.merged}};
    s["seed"] = {{"generator", r.d3.seed.generator},
                 {"master_seed", r.d3.seed.master_seed},
                 {"pulses_per_batch", r.d3.seed.pulses_per_batch}};
    s["config"] = json::parse(hom::serialize_config(c));
    hom::io::write_atomic(path_in(dir, "summary.json"), s.dump(2) + "\n");
    fmt::print("wrote {} D3 and {} D4 clicks to {}\n", r.d3.tags.size(), r.d4.tags.size(), dir);
    return kOk;
}

// Reads a pair of tag files and orders them (D3 start, D4 stop).
std::pair<hom::mc::TimeTagStream, hom::mc::TimeTagStream> read_pair(const std::vector<std::string> &files,
                                                                    const std::string &what) {
    if (files.size() != 2) throw CLI::ValidationError(what, "expects two files");
    std::array<hom::mc::TimeTagStream, 2> s;
    std::array<bool, 2> declared{};
    for (size_t i = 0; i < 2; ++i) {
        const std::string text = hom::io::read_file(files[i]);
        declared[i] = hom::io::declares_channel(text);
        s[i] = hom::io::parse_tags(text, files[i]);
    }
    if (declared[0] && declared[1] && s[0].channel == s[1].channel) {
        throw hom::io::IoError(fmt::format("{}: both files hold channel {}", what, hom::mc::to_string(s[0].channel)));
    }
    const bool swap = (declared[0] && s[0].channel == hom::mc::Channel::D4) ||
                      (declared[1] && s[1].channel == hom::mc::Channel::D3);
    if (swap) std::swap(s[0], s[1]);
    return {s[0], s[1]};
}

int cmd_analyze(const Options &o) {
    const hom::RunConfig c = load(o);
    const std::string dir = out_dir(o, c.output_dir);
    const auto [p3, p4] = read_pair(o.perp, "--perp");
    const auto [q3, q4] = read_pair(o.par, "--par");
    const auto &a = c.analysis;
    const hom::CorrelationHistogram hp = hom::correlate(p3, p4, a.bin_width_ps, a.max_tau_ps);
    const hom::CorrelationHistogram hq = hom::correlate(q3, q4, a.bin_width_ps, a.max_tau_ps);
    hom::io::write_atomic(path_in(dir, "histogram_perp.csv"), hom::io::histogram_to_csv(hp));
    hom::io::write_atomic(path_in(dir, "histogram_par.csv"), hom::io::histogram_to_csv(hq));
    const hom::PeakAreas ap = hom::integrate_peaks(hp, c.setup.rep_period_ps, a.window_ps);
    const hom::PeakAreas aq = hom::integrate_peaks(hq, c.setup.rep_period_ps, a.window_ps);
    const hom::InterferenceMetrics m = hom::metrics(ap, aq, hp, hq, a.post_window_ps);
    json j;
    j["defined"] = m.defined();
    j["pc"] = measured(m.pc);
    j["pc_post"] = measured(m.pc_post);
    j["ratio_par_b"] = measured(m.ratio_par_b);
    j["ratio_perp_b"] = ap.side_mean.value > 0.0 ? measured(hom::coincidence_ratio(ap)) : json(nullptr);
    j["areas"] = {{"perp_center", ap.center.value},
                  {"par_center", aq.center.value},
                  {"perp_side_mean", ap.side_mean.value},
                  {"par_side_mean", aq.side_mean.value}};
    j["window_ps"] = m.window_ps;
    j["post_window_ps"] = m.post_window_ps;
    j["bin_width_ps"] = a.bin_width_ps;
    hom::io::write_atomic(path_in(dir, "metrics.json"), j.dump(2) + "\n");
    fmt::print("{}\n", j.dump(2));
    return kOk;
}

int cmd_curve(const Options &o) {
    const hom::RunConfig c = load(o);
    const std::string dir = out_dir(o, c.output_dir);
    const hom::TauGrid grid{(c.curve.n_side_peaks + 0.5) * c.setup.rep_period_ps, c.curve.spacing_ps};
    hom::SetupParams sp = c.setup, sq = c.setup;
    sp.polarization = hom::Polarization::orthogonal;
    sq.polarization = hom::Polarization::parallel;
    const auto perp = hom::full_correlation(grid, c.emitters[0], c.emitters[1], sp, c.curve.n_side_peaks);
    const auto par = hom::full_correlation(grid, c.emitters[0], c.emitters[1], sq, c.curve.n_side_peaks);
    const auto perp_c = hom::convolve_with_irf(perp, c.detector);
    const auto par_c = hom::convolve_with_irf(par, c.detector);
    hom::io::write_atomic(path_in(dir, "curve.csv"), hom::io::curves_to_csv(perp, par, perp_c, par_c));
    const double T = c.setup.rep_period_ps;
    const double w = c.analysis.window_ps;
    json j;
    j["pc"] = hom::coalescence_probability(hom::curve_peak_areas(perp, T, w), hom::curve_peak_areas(par, T, w)).value;
    j["pc_convolved"] =
        hom::coalescence_probability(hom::curve_peak_areas(perp_c, T, w), hom::curve_peak_areas(par_c, T, w)).value;
    j["pc_post"] = hom::postselected_coalescence(perp, par, c.analysis.post_window_ps);
    j["pc_post_convolved"] = hom::postselected_coalescence(perp_c, par_c, c.analysis.post_window_ps);
    j["max_coalescence"] = hom::max_coalescence(c.emitters[0], c.emitters[1]);
    hom::io::write_atomic(path_in(dir, "curve_summary.json"), j.dump(2) + "\n");
    fmt::print("{}\n", j.dump(2));
    return kOk;
}

int cmd_fit_spectrum(const Options &o) {
    const hom::SampledCurve s = hom::io::read_sampled_curve(o.input);
    const auto fr = hom::fit::fit_lorentzian(s, o.instrument_fwhm, hom::fit::parse_instrument_shape(o.instrument));
    std::optional<std::vector<double>> boot;
    if (o.bootstrap > 0) boot = hom::fit::bootstrap_uncertainty(fr, s, o.bootstrap, o.seed.value_or(1));
    json j = fit_json(fr, boot ? &*boot : nullptr);
    j["instrument_fwhm_ghz"] = o.instrument_fwhm;
    j["instrument"] = o.instrument;
    j["t2_ps"] = hom::t2_from_linewidth(fr.value("fwhm_ghz"));
    const std::string dir = out_dir(o, "out");
    hom::io::write_atomic(path_in(dir, "fit_spectrum.json"), j.dump(2) + "\n");
    fmt::print("{}\n", j.dump(2));
    return kOk;
}

int cmd_fit_decay(const Options &o) {
    const hom::RunConfig c = load(o);
    const hom::SampledCurve s = hom::io::read_sampled_curve(o.input);
    const auto fr = hom::fit::fit_decay(s, hom::fit::parse_model(o.model), c.detector, o.epoch);
    std::optional<std::vector<double>> boot;
    if (o.bootstrap > 0) boot = hom::fit::bootstrap_uncertainty(fr, s, o.bootstrap, c.simulation.seed);
    json j = fit_json(fr, boot ? &*boot : nullptr);
    j["detector"] = {{"irf_fwhm_ps", c.detector.irf_fwhm_ps}, {"irf_shape", hom::to_string(c.detector.irf_shape)}};
    j["epoch_ps"] = o.epoch;
    const std::string dir = out_dir(o, c.output_dir);
    hom::io::write_atomic(path_in(dir, "fit_decay.json"), j.dump(2) + "\n");
    fmt::print("{}\n", j.dump(2));
    return kOk;
}

int cmd_hbt(const Options &o) {
    const hom::RunConfig c = load(o);
    const std::string dir = out_dir(o, c.output_dir);
    const auto [a, b] = read_pair(o.inputs, "--input");
    const auto h = hom::correlate(a, b, c.analysis.bin_width_ps, c.analysis.max_tau_ps);
    hom::io::write_atomic(path_in(dir, "histogram_hbt.csv"), hom::io::histogram_to_csv(h));
    const hom::PeakAreas areas = hom::integrate_peaks(h, c.setup.rep_period_ps, c.analysis.window_ps);
    json j;
    j["purity_ratio"] = areas.side_mean.value > 0.0 ? measured(hom::coincidence_ratio(areas)) : json(nullptr);
    j["center"] = areas.center.value;
    j["side_mean"] = areas.side_mean.value;
    hom::io::write_atomic(path_in(dir, "hbt.json"), j.dump(2) + "\n");
    fmt::print("{}\n", j.dump(2));
    return kOk;
}

int cmd_reproduce(const Options &o) {
    hom::repro::ReproduceOptions ro;
    if (o.seed) ro.seed = *o.seed;
    if (o.pulses) ro.n_pulses = *o.pulses;
    if (o.workers) ro.workers = *o.workers;
    const std::string dir = out_dir(o, "out");
    const hom::repro::ReproductionReport rep = hom::repro::reproduce_paper(ro);
    hom::io::write_atomic(path_in(dir, "report.json"), rep.to_json());
    hom::io::write_atomic(path_in(dir, "report.txt"), rep.to_table());
    fmt::print("{}", rep.to_table());
    return rep.all_pass() ? kOk : kTolerance;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Two-source photon interference: simulation, correlation analysis and fitting"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory (default: $HOM_OUT_DIR, then the configured one)");
    };
    auto add_analysis = [&](CLI::App *sub) {
        sub->add_option("--bin-width-ps", o.bin_width, "Histogram bin width");
        sub->add_option("--window-ps", o.window, "Peak integration window");
    };

    auto *sim = app.add_subcommand("simulate", "Generate time-tag streams for both detectors");
    add_common(sim);
    sim->add_option("--seed", o.seed, "Master seed");
    sim->add_option("--pulses", o.pulses, "Number of excitation pulses");
    sim->add_option("--workers", o.workers, "Worker threads (results do not depend on it)");
    sim->add_option("--format", o.format, "Tag file format")->check(CLI::IsMember({"csv", "bin"}));
    sim->add_option("--polarization", o.polarization, "Override setup polarization")
        ->check(CLI::IsMember({"parallel", "orthogonal"}));

    auto *ana = app.add_subcommand("analyze", "Correlate orthogonal and parallel tag files into metrics");
    add_common(ana);
    add_analysis(ana);
    ana->add_option("--perp", o.perp, "Orthogonal-polarization D3 and D4 files")->expected(2)->required();
    ana->add_option("--par", o.par, "Parallel-polarization D3 and D4 files")->expected(2)->required();

    auto *crv = app.add_subcommand("curve", "Analytic correlation curves, bare and detector-convolved");
    add_common(crv);
    add_analysis(crv);

    auto *fs_ = app.add_subcommand("fit-spectrum", "Lorentzian linewidth fit");
    fs_->add_option("--input", o.input, "CSV: frequency_ghz, counts[, error]")->required()->check(CLI::ExistingFile);
    fs_->add_option("--instrument-fwhm-ghz", o.instrument_fwhm, "Spectrometer resolution");
    fs_->add_option("--instrument", o.instrument, "Spectrometer line shape")
        ->check(CLI::IsMember({"lorentzian", "gaussian"}));
    fs_->add_option("--bootstrap", o.bootstrap, "Bootstrap resamples (0 = curvature errors only)");
    fs_->add_option("--seed", o.seed, "Bootstrap seed");
    fs_->add_option("--out", o.out, "Output directory");

    auto *fd = app.add_subcommand("fit-decay", "Lifetime fit including the detector response");
    add_common(fd);
    fd->add_option("--input", o.input, "CSV: time_ps, counts[, error]")->required()->check(CLI::ExistingFile);
    fd->add_option("--model", o.model, "Decay model")->check(CLI::IsMember({"single_exp", "biexp"}));
    fd->add_option("--epoch-ps", o.epoch, "Excitation time on the input time axis");
    fd->add_option("--bootstrap", o.bootstrap, "Bootstrap resamples (0 = curvature errors only)");

    auto *hbt = app.add_subcommand("hbt", "Single-source autocorrelation purity");
    add_common(hbt);
    add_analysis(hbt);
    hbt->add_option("--input", o.inputs, "D3 and D4 files")->expected(2)->required();

    auto *rep = app.add_subcommand("reproduce-paper", "Run the built-in comparison against the published values");
    rep->add_option("--seed", o.seed, "Master seed");
    rep->add_option("--pulses", o.pulses, "Pulses per interference run");
    rep->add_option("--workers", o.workers, "Worker threads (results do not depend on it)");
    rep->add_option("--out", o.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*ana) return cmd_analyze(o);
        if (*crv) return cmd_curve(o);
        if (*fs_) return cmd_fit_spectrum(o);
        if (*fd) return cmd_fit_decay(o);
        if (*hbt) return cmd_hbt(o);
        if (*rep) return cmd_reproduce(o);
    } catch (const CLI::ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const hom::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const hom::io::IoError &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
