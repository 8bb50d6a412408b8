// Python bindings. Structured values cross the boundary as JSON text; the
// acisim package turns them into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "acisim/config.hpp"
#include "acisim/engine.hpp"
#include "acisim/fso_channel.hpp"
#include "acisim/presets.hpp"
#include "acisim/results.hpp"

namespace py = pybind11;
using namespace acisim;

namespace {

ExperimentConfig make_config(const std::string& text, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = parse_config_text(text);
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

std::string simulate(const std::string& text, const std::vector<std::string>& overrides,
                     std::optional<std::uint64_t> seed, const std::string& label,
                     const std::optional<std::filesystem::path>& out_dir) {
    const ExperimentConfig cfg = make_config(text, overrides);
    const std::uint64_t s = seed.value_or(cfg.seed);
    MetricsLog log;
    {
        py::gil_scoped_release release;
        log = run_simulation(cfg, s);
        if (out_dir) write_run(*out_dir, log, cfg, s, label);
    }
    nlohmann::json j = metrics_to_json(log, cfg, s, label);
    const StabilityReport st = stability_probe(log);
    j["stability_probe"] = {{"verdict", std::string(to_string(st.verdict))},
                            {"max_last", st.max_last},
                            {"max_middle", st.max_middle},
                            {"slope", st.slope},
                            {"slope_lower", st.slope_lower}};
    return j.dump();
}

std::vector<std::string> experiment(const std::string& text, const std::vector<std::string>& overrides,
                                    const std::string& label, const std::optional<std::filesystem::path>& out_dir,
                                    int threads) {
    const ExperimentConfig cfg = make_config(text, overrides);
    ExperimentResult r;
    {
        py::gil_scoped_release release;
        r = run_experiment(cfg, label, out_dir, threads);
    }
    std::vector<std::string> out;
    for (const auto& rep : r.replications) out.push_back(rep.metrics.dump());
    return out;
}

std::string preset(const std::string& name, const std::vector<std::string>& overrides,
                   std::optional<std::uint64_t> seed, const std::filesystem::path& out_dir, int threads) {
    PresetOptions opt;
    opt.overrides = overrides;
    opt.seed = seed;
    opt.out_dir = out_dir;
    opt.threads = threads;
    py::gil_scoped_release release;
    return run_preset(name, opt).dump();
}

std::string channel_summary(const std::string& text, const std::vector<std::string>& overrides) {
    const ExperimentConfig cfg = make_config(text, overrides);
    const RadioParams radio = cfg.radio();
    nlohmann::json j;
    j["h_th"] = gain_threshold(radio.min_snr, radio.noise_std, radio.responsivity, radio.tx_power_w);
    j["coherence_time_s"] =
        coherence_time(hv_cn2_profile(cfg.cn2_ground), bufton_wind_profile(), cfg.wavelength, 0.0, cfg.z_master);
    j["slot_len_s"] = cfg.slot_len;
    return j.dump();
}

LinkParams link_at(const std::string& text, const std::vector<std::string>& overrides, double hop2_range_m) {
    LinkParams link = make_config(text, overrides).link();
    link.hop2.distance_m = hop2_range_m;
    return link;
}

} // namespace

PYBIND11_MODULE(_acisim, m) {
    m.doc() = "Slotted single-server scheduler simulator with FSO channels (native core)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

    m.attr("SCHEMA_VERSION") = kSchemaVersion;
    m.def("config_keys", &config_keys);
    m.def("default_config", [] { return emit_config(ExperimentConfig{}); });
    m.def("resolve_config", [](const std::string& text, const std::vector<std::string>& overrides) {
        return emit_config(make_config(text, overrides));
    });
    m.def("simulate", &simulate, py::arg("text"), py::arg("overrides"), py::arg("seed") = std::nullopt,
          py::arg("label") = "", py::arg("out_dir") = std::nullopt);
    m.def("run_experiment", &experiment, py::arg("text"), py::arg("overrides"), py::arg("label"),
          py::arg("out_dir") = std::nullopt, py::arg("threads") = 0);
    m.def("preset_names", &preset_names);
    m.def("run_preset", &preset, py::arg("name"), py::arg("overrides"), py::arg("seed"), py::arg("out_dir"),
          py::arg("threads") = 0);
    m.def("merge_reports", [](const std::vector<std::filesystem::path>& dirs) {
        const MergedReport r = merge_reports(dirs);
        return std::make_pair(r.to_json().dump(), r.to_csv());
    });
    m.def("channel_summary", &channel_summary);
    m.def("sample_gains",
          [](const std::string& text, const std::vector<std::string>& overrides, double range, std::size_t n,
             std::uint64_t seed) { return sample_gains(link_at(text, overrides, range), n, seed); });
    m.def("outage_probability", [](const std::string& text, const std::vector<std::string>& overrides, double range,
                                   double h_th, std::size_t n, std::uint64_t seed) {
        const OutageEstimate e = outage_probability(link_at(text, overrides, range), h_th, n, seed);
        return std::make_pair(e.p_out, e.ci_halfwidth);
    });
    m.def("gain_threshold", &gain_threshold, py::arg("min_snr"), py::arg("noise_std"), py::arg("responsivity"),
          py::arg("tx_power_w"));
    m.def("dbm_to_watts", &dbm_to_watts);
    m.def("git_describe", &git_describe);
}
