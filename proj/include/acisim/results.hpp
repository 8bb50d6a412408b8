#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>  // vendored nlohmann::json

#include "acisim/config.hpp"
#include "acisim/engine.hpp"

namespace acisim {

/// Version of every file this module writes. Bump on any column or key change.
inline constexpr int kSchemaVersion = 1;

/// Results directories that cannot be merged (e.g. mixed schema versions).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string git_describe();

/// Deterministic per-run scalars (no timings), so reruns are byte-identical.
nlohmann::json metrics_to_json(const MetricsLog& log, const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::string& label);

/// metrics.json, delays.csv, budget.csv, switches.csv, backlog_trace.csv and,
/// when the config asks for it, audit.csv.
void write_run(const std::filesystem::path& dir, const MetricsLog& log, const ExperimentConfig& cfg,
               std::uint64_t seed, const std::string& label);

/// (slot, slave, range_m, theta_to_current_deg) every `stride` slots; theta is
/// empty while the server points nowhere.
void write_mobility_trace(const std::filesystem::path& file, const ExperimentConfig& cfg, const MetricsLog& log,
                          int stride);

struct ReplicationResult {
    std::uint64_t seed = 0;
    nlohmann::json metrics;
    DelayHistogram delays;
    DelayHistogram residual;
};

struct ExperimentResult {
    std::string label;
    ExperimentConfig config;
    std::vector<ReplicationResult> replications;

    /// Delays pooled over replications.
    DelayHistogram pooled_delays() const;
    std::vector<std::uint64_t> seeds() const;
};

/// Seed of replication r: cfg.seed + r.
std::uint64_t replication_seed(const ExperimentConfig& cfg, int r);

/// Run cfg.replications independent seeds on up to `threads` workers (0 = hardware).
/// With `out_dir`, each replication is written to out_dir/rep_NN plus a config
/// echo. Results are ordered by replication index regardless of threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& label,
                                const std::optional<std::filesystem::path>& out_dir, int threads = 0);

/// Provenance record written next to results.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const std::vector<std::uint64_t>& seeds, double wall_time_s, int threads,
                    const nlohmann::json& extra = nlohmann::json::object());

void write_text(const std::filesystem::path& file, const std::string& text);

// ---------------------------------------------------------------- merging

struct MetricStat {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double ci_halfwidth = 0.0;  // t_{0.975, n-1} s / sqrt(n); 0 for n == 1
};

/// Mean and 95% Student-t interval.
MetricStat summarize(std::span<const double> xs);

struct SeriesSummary {
    std::string label;
    std::map<std::string, MetricStat> stats;
};

struct MetricDelta {
    std::string a;
    std::string b;
    std::string metric;
    double delta = 0.0;         // mean(a) - mean(b)
    double ci_halfwidth = 0.0;  // Welch 95%
};

struct MergedReport {
    int schema_version = kSchemaVersion;
    std::vector<SeriesSummary> series;  // in order of first appearance
    std::vector<MetricDelta> deltas;

    const SeriesSummary& at(const std::string& label) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Scalar metrics summarised across replications (JSON pointers into metrics.json).
const std::vector<std::string>& summary_metrics();

/// Group per-run metrics by label and summarise. Throws SchemaError on mixed versions.
MergedReport merge_metrics(const std::vector<nlohmann::json>& runs);
/// Same, reading every metrics.json found (recursively) under the given directories.
MergedReport merge_reports(const std::vector<std::filesystem::path>& dirs);

} // namespace acisim
