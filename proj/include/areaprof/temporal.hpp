#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "areaprof/activity.hpp"
#include "areaprof/geometry.hpp"

namespace areaprof::temporal {

using Date = std::chrono::sys_days;

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Accepts `YYYY-MM-DDTHH:MM:SS` with an optional `Z` suffix.
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::string format_timestamp(Timestamp t);
std::optional<Date> parse_date(std::string_view s);
std::string format_date(Date d);
Date date_of(Timestamp t);
/// Monday = 0 ... Sunday = 6.
unsigned weekday_index(Date d);

/// Inclusive calendar-date range; an unset bound is open.
struct StudyWindow {
    std::optional<Date> first;
    std::optional<Date> last;
    bool contains(Timestamp t) const;
};

struct CdrRecord {
    std::string tower_id;
    Timestamp timestamp = 0;
    double duration_s = 0.0;
};

struct CdrParseReport {
    std::size_t accepted = 0;
    std::size_t malformed = 0;
    std::size_t negative_duration = 0;
    std::size_t outside_window = 0;
    std::vector<activity::ParseIssue> issues;
    std::size_t rejected() const { return malformed + negative_duration + outside_window; }
};

struct CdrParseResult {
    std::vector<CdrRecord> records;
    CdrParseReport report;
};

/// Parses `tower_id,timestamp,duration_s` CSV text; bad rows go to the report.
CdrParseResult parse_cdr(std::string_view csv_text, const StudyWindow& window = {});
CdrParseResult parse_cdr_file(const std::filesystem::path& path, const StudyWindow& window = {});

/// Bin width in seconds; must divide a day evenly.
struct BinWidth {
    std::int64_t seconds = 3600;
    std::size_t bins_per_day() const { return static_cast<std::size_t>(86400 / seconds); }
};
void validate_bin_width(BinWidth w);

/// Bin index of a timestamp: floor(t / width), so bins are half-open.
std::int64_t bin_of(Timestamp t, BinWidth w);
/// Index of the first bin of a calendar date.
std::int64_t first_bin_of(Date d, BinWidth w);

using BinnedSeries = std::map<std::int64_t, double>;

struct TowerSeries {
    std::string tower_id;
    BinnedSeries bins;
};

/// Call counts per (tower, bin); towers sorted by id. Durations are ignored.
std::vector<TowerSeries> bin_counts(std::span<const CdrRecord> records, BinWidth width);

enum class AllocationMode { paper, conserving };
std::string_view allocation_mode_name(AllocationMode m);
std::optional<AllocationMode> parse_allocation_mode(std::string_view s);

/// Cluster label of cells without an activity profile.
inline constexpr std::size_t kUnprofiled = 0;
std::string cluster_label(std::size_t cluster);
std::optional<std::size_t> parse_cluster_label(std::string_view s);

struct ClusterSeries {
    std::size_t cluster = kUnprofiled;
    BinnedSeries bins;
};

struct Allocation {
    std::vector<ClusterSeries> clusters;         // ascending label, unprofiled first when present
    std::map<std::size_t, BinnedSeries> cells;   // per grid cell
};

/// Spreads tower counts over grid cells by coverage weight and sums them per
/// cluster. Paper mode uses X/N * w (N = cells the tower touches);
/// conserving mode uses X * w. `cell_cluster` is indexed by grid cell id.
Allocation allocate(std::span<const TowerSeries> series, std::span<const geo::TowerCoverage> coverage,
                    std::span<const std::size_t> cell_cluster, AllocationMode mode);

enum class Period { weekly, daily };
std::string_view period_name(Period p);
std::optional<Period> parse_period(std::string_view s);

struct ProfileOptions {
    Period period = Period::weekly;
    BinWidth width;
    double alpha = 3.0;
};

struct TemporalProfile {
    std::size_t cluster = kUnprofiled;
    Period period = Period::weekly;
    BinWidth width;
    double alpha = 3.0;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<double> low;
    std::vector<double> high;
    std::vector<std::size_t> support;  // non-excluded observations per slot
    std::size_t slot_count() const { return mean.size(); }
    /// Fewer than two observations: no envelope.
    bool insufficient(std::size_t slot) const { return support[slot] < 2; }
    std::size_t slot_of(Date d, std::size_t bin_in_day) const;
};

/// Slot-wise mean and sample standard deviation over `dates` minus
/// `exclusions`; envelope mean +/- alpha * std with the low side floored at 0.
/// Throws InputError when no date survives the exclusions.
TemporalProfile typical_profile(const ClusterSeries& series, std::span<const Date> dates,
                                const std::set<Date>& exclusions, const ProfileOptions& options);

enum class Direction { above, below };

struct Anomaly {
    std::size_t cluster = kUnprofiled;
    Date date;
    std::size_t slot = 0;
    double observed = 0.0;
    double low = 0.0;
    double high = 0.0;
    Direction direction = Direction::above;
};

struct AnomalyReport {
    std::vector<Anomaly> entries;  // sorted by (date, cluster, slot)
    std::size_t skipped_insufficient = 0;
    void merge(AnomalyReport other);
};

/// Flags every (date, slot) strictly outside the envelope.
AnomalyReport detect_anomalies(const ClusterSeries& series, const TemporalProfile& profile,
                               std::span<const Date> dates);

struct ClusterStats {
    std::size_t cluster = kUnprofiled;
    bool defined = false;
    double mean_daily_volume = 0.0;
    double weekend_share = 0.0;
    double distance_to_average = 0.0;
};

/// Per-cluster volume summary over weekly profiles. The reference pattern is
/// the average of the unit-sum weekly mean patterns of the profiled clusters
/// with defined statistics.
std::vector<ClusterStats> profile_stats(std::span<const TemporalProfile> profiles,
                                        std::span<const ClusterSeries> series, std::span<const Date> dates);

/// Dates from `first` to `last` inclusive.
std::vector<Date> date_range(Date first, Date last);

}  // namespace areaprof::temporal
