#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "areaprof/temporal.hpp"

namespace areaprof::evaluation {

/// An area's temporal pattern tagged with its cluster.
struct PatternPoint {
    std::size_t id = 0;
    std::size_t cluster = 0;
    std::vector<double> features;
};

struct PointSilhouette {
    std::size_t id = 0;
    std::size_t cluster = 0;
    double a = 0.0;
    double b = 0.0;
    double s = 0.0;
};

struct ClusterSilhouette {
    std::size_t size = 0;
    double mean_s = 0.0;
    double positive_fraction = 0.0;
};

struct SilhouetteResult {
    std::vector<PointSilhouette> points;  // input order
    std::map<std::size_t, ClusterSilhouette> clusters;
    double mean_s = 0.0;
};

/// Silhouette coefficients with Euclidean distance. Points in singleton
/// clusters get s = 0. Throws InputError with fewer than two clusters or
/// mismatched feature dimensions.
SilhouetteResult silhouette(std::span<const PatternPoint> points);

/// Share of the cluster's points with s > 0. Throws InputError for an
/// unknown cluster.
double quality_fraction(const SilhouetteResult& result, std::size_t cluster);

enum class FeatureMode { weekly, full };
std::string_view feature_mode_name(FeatureMode m);
std::optional<FeatureMode> parse_feature_mode(std::string_view s);

/// Unit-sum temporal pattern of one area over `dates` minus `exclusions`:
/// weekly mode sums volume per weekly slot, full mode concatenates every bin.
/// nullopt when the area has no volume on those dates.
std::optional<std::vector<double>> pattern_features(const temporal::BinnedSeries& series,
                                                    std::span<const temporal::Date> dates,
                                                    const std::set<temporal::Date>& exclusions,
                                                    temporal::BinWidth width, FeatureMode mode);

}  // namespace areaprof::evaluation
