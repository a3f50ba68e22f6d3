#include "hom/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace hom {

namespace {

using nlohmann::json;

// Reads members of one JSON object, remembering which keys were consumed.
class Reader {
  public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <class T> void get(const char *key, T &out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json &v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError("");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
            }
            out = v.get<T>();
        } catch (const std::exception &) {
            throw ConfigError(field(key) + ": wrong type " + std::string(v.type_name()));
        }
    }

    const json *child(const char *key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : path_; }

    void finish() const {
        for (const auto &[k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError(field(k) + ": unknown field");
        }
    }

  private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F> void rethrow_as_config(F &&f) {
    try {
        f();
    } catch (const ParameterError &e) {
        throw ConfigError(e.what());
    }
}

EmitterParams read_emitter(const json &j, const std::string &path) {
    Reader r(j, path);
    EmitterParams e;
    r.get("t1_ps", e.t1_ps);
    r.get("t2_ps", e.t2_ps);
    r.get("detuning_rad_per_ps", e.detuning_rad_per_ps);
    r.get("efficiency", e.efficiency);
    r.get("multiphoton_residual", e.multiphoton_residual);
    if (const json *d = r.child("dark_state"); d && !d->is_null()) {
        Reader rd(*d, r.field("dark_state"));
        DarkState ds;
        rd.get("slow_lifetime_ps", ds.slow_lifetime_ps);
        rd.get("slow_fraction", ds.slow_fraction);
        rd.finish();
        e.dark_state = ds;
    }
    r.finish();
    return e;
}

json write_emitter(const EmitterParams &e) {
    json j{{"t1_ps", e.t1_ps},
           {"t2_ps", e.t2_ps},
           {"detuning_rad_per_ps", e.detuning_rad_per_ps},
           {"efficiency", e.efficiency},
           {"multiphoton_residual", e.multiphoton_residual}};
    if (e.dark_state) {
        j["dark_state"] = {{"slow_lifetime_ps", e.dark_state->slow_lifetime_ps},
                           {"slow_fraction", e.dark_state->slow_fraction}};
    }
    return j;
}

} // namespace

void RunConfig::validate() const {
    rethrow_as_config([&] {
        emitters[0].validate("emitters[0].");
        emitters[1].validate("emitters[1].");
        setup.validate("setup.");
        detector.validate("detector.");
    });
    if (simulation.n_pulses == 0) throw ConfigError("simulation.n_pulses: must be positive");
    if (analysis.bin_width_ps <= 0) throw ConfigError("analysis.bin_width_ps: must be positive");
    if (!(analysis.window_ps > 0.0) || analysis.window_ps > setup.rep_period_ps) {
        throw ConfigError("analysis.window_ps: must lie in (0, setup.rep_period_ps]");
    }
    if (!(analysis.post_window_ps > 0.0)) throw ConfigError("analysis.post_window_ps: must be positive");
    if (static_cast<double>(analysis.max_tau_ps) < 2.0 * setup.rep_period_ps + 0.5 * analysis.window_ps) {
        throw ConfigError("analysis.max_tau_ps: must cover two complete side peaks on each side");
    }
    if (!(curve.spacing_ps > 0.0)) throw ConfigError("curve.spacing_ps: must be positive");
    if (curve.n_side_peaks < 0) throw ConfigError("curve.n_side_peaks: must be non-negative");
    if (output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

RunConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("config: JSON syntax error at byte ") + std::to_string(e.byte));
    }
    RunConfig c;
    Reader root(j, "");
    const json *em = root.child("emitters");
    if (!em) throw ConfigError("emitters: required");
    if (!em->is_array() || em->size() != 2) throw ConfigError("emitters: expected an array of two emitters");
    for (size_t i = 0; i < 2; ++i) c.emitters[i] = read_emitter((*em)[i], "emitters[" + std::to_string(i) + "]");

    if (const json *s = root.child("setup")) {
        Reader r(*s, "setup");
        r.get("mode_overlap", c.setup.mode_overlap);
        std::string pol = to_string(c.setup.polarization);
        r.get("polarization", pol);
        rethrow_as_config([&] {
            try {
                c.setup.polarization = parse_polarization(pol);
            } catch (const ParameterError &e) {
                throw ParameterError(std::string("setup.") + e.what());
            }
        });
        r.get("rep_period_ps", c.setup.rep_period_ps);
        r.get("background_rate", c.setup.background_rate);
        r.finish();
    }
    if (const json *d = root.child("detector")) {
        Reader r(*d, "detector");
        r.get("irf_fwhm_ps", c.detector.irf_fwhm_ps);
        std::string shape = to_string(c.detector.irf_shape);
        r.get("irf_shape", shape);
        rethrow_as_config([&] {
            try {
                c.detector.irf_shape = parse_irf_shape(shape);
            } catch (const ParameterError &e) {
                throw ParameterError(std::string("detector.") + e.what());
            }
        });
        r.get("dark_rate_per_ps", c.detector.dark_rate_per_ps);
        r.finish();
    }
    if (const json *s = root.child("simulation")) {
        Reader r(*s, "simulation");
        r.get("n_pulses", c.simulation.n_pulses);
        r.get("seed", c.simulation.seed);
        r.get("workers", c.simulation.workers);
        r.finish();
    }
    if (const json *a = root.child("analysis")) {
        Reader r(*a, "analysis");
        r.get("bin_width_ps", c.analysis.bin_width_ps);
        r.get("window_ps", c.analysis.window_ps);
        r.get("post_window_ps", c.analysis.post_window_ps);
        r.get("max_tau_ps", c.analysis.max_tau_ps);
        r.finish();
    }
    if (const json *cv = root.child("curve")) {
        Reader r(*cv, "curve");
        r.get("spacing_ps", c.curve.spacing_ps);
        r.get("n_side_peaks", c.curve.n_side_peaks);
        r.finish();
    }
    if (const json *o = root.child("output")) {
        Reader r(*o, "output");
        r.get("dir", c.output_dir);
        r.finish();
    }
    root.finish();
    c.validate();
    return c;
}

std::string serialize_config(const RunConfig &c) {
    json j;
    j["emitters"] = json::array({write_emitter(c.emitters[0]), write_emitter(c.emitters[1])});
    j["setup"] = {{"mode_overlap", c.setup.mode_overlap},
                  {"polarization", to_string(c.setup.polarization)},
                  {"rep_period_ps", c.setup.rep_period_ps},
                  {"background_rate", c.setup.background_rate}};
    j["detector"] = {{"irf_fwhm_ps", c.detector.irf_fwhm_ps},
                     {"irf_shape", to_string(c.detector.irf_shape)},
                     {"dark_rate_per_ps", c.detector.dark_rate_per_ps}};
    j["simulation"] = {{"n_pulses", c.simulation.n_pulses}, {"seed", c.simulation.seed}, {"workers", c.simulation.workers}};
    j["analysis"] = {{"bin_width_ps", c.analysis.bin_width_ps},
                     {"window_ps", c.analysis.window_ps},
                     {"post_window_ps", c.analysis.post_window_ps},
                     {"max_tau_ps", c.analysis.max_tau_ps}};
    j["curve"] = {{"spacing_ps", c.curve.spacing_ps}, {"n_side_peaks", c.curve.n_side_peaks}};
    j["output"] = {{"dir", c.output_dir}};
    return j.dump(2) + "\n";
}

RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace hom
