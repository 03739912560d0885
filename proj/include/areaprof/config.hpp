#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "areaprof/evaluation.hpp"
#include "areaprof/geometry.hpp"
#include "areaprof/temporal.hpp"

namespace areaprof {

/// Which dates anomaly detection inspects.
enum class AnomalyDates { holidays, all };

/// Effective run configuration.
///
/// File format is INI; section names only group keys, so `[cluster]
/// neighbors = 8` and a bare `neighbors = 8` are equivalent. Relative paths
/// resolve against the config file's directory. Keys:
///
///   [inputs]   pois, taxonomy, towers, cdr, holidays_file
///   [grid]     cell_size (m), bbox = lon_min,lat_min,lon_max,lat_max
///   [cluster]  neighbors, k_max, seed, restarts, row_normalize, max_nodes
///   [temporal] bin_width (s), alpha, allocation = conserving|paper,
///              period = weekly|daily, holidays = date,date,...,
///              window_start, window_end, anomaly_dates = holidays|all
///   [evaluate] features = weekly|full
struct RunConfig {
    std::filesystem::path pois;
    std::filesystem::path taxonomy;  // empty: built-in seed taxonomy
    std::filesystem::path towers;
    std::filesystem::path cdr;
    std::filesystem::path holidays_file;
    std::filesystem::path out = "out";

    double cell_size = 50.0;
    std::optional<geo::LonLatBox> bbox;

    std::size_t neighbors = 10;
    std::size_t k_max = 30;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    bool row_normalize = true;
    std::size_t max_nodes = 20000;

    std::int64_t bin_width = 3600;
    double alpha = 3.0;
    temporal::AllocationMode allocation = temporal::AllocationMode::conserving;
    temporal::Period period = temporal::Period::weekly;
    std::vector<temporal::Date> holidays;
    std::optional<temporal::Date> window_start;
    std::optional<temporal::Date> window_end;
    AnomalyDates anomaly_dates = AnomalyDates::holidays;

    evaluation::FeatureMode features = evaluation::FeatureMode::weekly;

    /// Sets one key from its textual value; `base` resolves relative paths.
    /// Throws InputError for unknown keys or unparseable values.
    void set(std::string_view key, std::string_view value, const std::filesystem::path& base = {});

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig parse(std::string_view ini_text, const std::filesystem::path& base = {});

    /// Throws InputError unless every numeric parameter is in range.
    void validate() const;

    /// Holidays from both the inline list and the holidays file.
    std::vector<temporal::Date> all_holidays() const;
    temporal::StudyWindow window() const { return {window_start, window_end}; }

    /// Full effective configuration as INI, input paths made absolute. The
    /// output directory is omitted so two runs of one config echo identically.
    std::string to_ini() const;
};

/// Every key accepted by RunConfig::set.
const std::vector<std::string>& run_config_keys();

}  // namespace areaprof
