#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>  // vendored nlohmann::json

#include "acisim/config.hpp"
#include "acisim/results.hpp"

namespace acisim {

/// One curve or bar of a preset: a label and the config that produces it.
struct PresetSeries {
    std::string label;
    std::string dir;  // sub-directory name
    ExperimentConfig config;
};

struct PresetOptions {
    std::vector<std::string> overrides;  // "key=value", applied before the series are derived
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir;
    int threads = 0;
};

std::vector<std::string> preset_names();

/// Series of a simulation preset (delay-cdf, time-budget, ablation,
/// switching-trace); empty for channel-pdf. Throws ConfigError for unknown names.
std::vector<PresetSeries> preset_series(const std::string& name, const ExperimentConfig& base);

/// Base config after overrides and seed. Throws ConfigError on bad overrides.
ExperimentConfig preset_base(const PresetOptions& opt);

/// Run a preset and write its files plus a manifest. Returns the preset summary.
nlohmann::json run_preset(const std::string& name, const PresetOptions& opt);

/// Single-link channel study: gain PDF, outage-versus-threshold curve and
/// coherence time, written as channel_pdf.csv, outage.csv and metrics.json.
nlohmann::json run_channel_study(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 std::size_t samples = 1000000);

} // namespace acisim
