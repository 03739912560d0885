#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "areaprof/config.hpp"

namespace areaprof::pipeline {

/// Process exit codes; no others are produced.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;

/// Counts and warnings a stage reports back for the run summary.
struct StageReport {
    std::string stage;
    std::map<std::string, std::string> counts;
    std::vector<std::string> warnings;
};

// Stage functions throw InputError / GeometryError / DegenerateDataError.
StageReport run_cluster(const RunConfig& cfg);
StageReport run_patterns(const RunConfig& cfg);
StageReport run_evaluate(const RunConfig& cfg);
StageReport run_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir);

// Subcommands: validate, run, print a summary to `log`, map errors to exit codes.
int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_cluster(const RunConfig& cfg, std::ostream& log);
int cmd_patterns(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_run_all(const RunConfig& cfg, std::ostream& log);

/// Output file names inside the run directory.
namespace files {
inline constexpr const char* kEffectiveConfig = "effective_config.ini";
inline constexpr const char* kPoiReport = "poi_report.txt";
inline constexpr const char* kActivityVectors = "activity_vectors.csv";
inline constexpr const char* kAssignment = "assignment.csv";
inline constexpr const char* kSpectrum = "spectrum.csv";
inline constexpr const char* kClusterMeta = "cluster_meta.txt";
inline constexpr const char* kGeoJson = "clusters.geojson";
inline constexpr const char* kCoverage = "coverage.csv";
inline constexpr const char* kCdrReport = "cdr_report.txt";
inline constexpr const char* kClusterSeries = "cluster_series.csv";
inline constexpr const char* kCellSeries = "cell_series.csv";
inline constexpr const char* kPatternsMeta = "patterns_meta.txt";
inline constexpr const char* kProfiles = "profiles.csv";
inline constexpr const char* kStats = "stats.csv";
inline constexpr const char* kAnomalies = "anomalies.csv";
inline constexpr const char* kSilhouette = "silhouette.csv";
inline constexpr const char* kSilhouetteSummary = "silhouette_summary.csv";
inline constexpr const char* kRunReport = "run_report.txt";
inline constexpr const char* kSynthPois = "pois.csv";
inline constexpr const char* kSynthTowers = "towers.csv";
inline constexpr const char* kSynthCdr = "cdr.csv";
inline constexpr const char* kSynthConfig = "synth_run.ini";
}  // namespace files

}  // namespace areaprof::pipeline
