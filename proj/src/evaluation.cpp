#include "areaprof/evaluation.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "areaprof/errors.hpp"

namespace areaprof::evaluation {

namespace {

double euclidean(const std::vector<double>& x, const std::vector<double>& y) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        ss += d * d;
    }
    return std::sqrt(ss);
}

}  // namespace

SilhouetteResult silhouette(std::span<const PatternPoint> points) {
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].features.size() != points.front().features.size()) {
            throw InputError("silhouette: feature dimensions differ");
        }
        members[points[i].cluster].push_back(i);
    }
    if (members.size() < 2) throw InputError("silhouette needs at least two clusters");

    const std::size_t n = points.size();
    // Pairwise distances once; row i holds sums per cluster.
    std::vector<std::map<std::size_t, double>> sums(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [c, _] : members) sums[i][c] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean(points[i].features, points[j].features);
            sums[i][points[j].cluster] += d;
            sums[j][points[i].cluster] += d;
        }
    }

    SilhouetteResult result;
    result.points.reserve(n);
    double total_s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = points[i].cluster;
        const auto own_size = members[own].size();
        PointSilhouette ps{points[i].id, own, 0.0, 0.0, 0.0};
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [c, idx] : members) {
            if (c == own) continue;
            b = std::min(b, sums[i][c] / static_cast<double>(idx.size()));
        }
        ps.b = b;
        if (own_size > 1) {
            ps.a = sums[i][own] / static_cast<double>(own_size - 1);
            const double denom = std::max(ps.a, ps.b);
            ps.s = denom > 0.0 ? (ps.b - ps.a) / denom : 0.0;
        }
        total_s += ps.s;
        result.points.push_back(ps);
    }
    result.mean_s = n > 0 ? total_s / static_cast<double>(n) : 0.0;

    for (const auto& [c, idx] : members) {
        ClusterSilhouette cs;
        cs.size = idx.size();
        std::size_t positive = 0;
        double sum = 0.0;
        for (auto i : idx) {
            sum += result.points[i].s;
            if (result.points[i].s > 0.0) ++positive;
        }
        cs.mean_s = sum / static_cast<double>(idx.size());
        cs.positive_fraction = static_cast<double>(positive) / static_cast<double>(idx.size());
        result.clusters[c] = cs;
    }
    return result;
}

double quality_fraction(const SilhouetteResult& result, std::size_t cluster) {
    const auto it = result.clusters.find(cluster);
    if (it == result.clusters.end()) throw InputError(fmt::format("unknown cluster {}", cluster));
    return it->second.positive_fraction;
}

std::string_view feature_mode_name(FeatureMode m) { return m == FeatureMode::weekly ? "weekly" : "full"; }

std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
    if (s == "weekly") return FeatureMode::weekly;
    if (s == "full") return FeatureMode::full;
    return std::nullopt;
}

std::optional<std::vector<double>> pattern_features(const temporal::BinnedSeries& series,
                                                    std::span<const temporal::Date> dates,
                                                    const std::set<temporal::Date>& exclusions,
                                                    temporal::BinWidth width, FeatureMode mode) {
    const std::size_t per_day = width.bins_per_day();
    std::vector<double> features;
    if (mode == FeatureMode::weekly) features.assign(7 * per_day, 0.0);
    for (const auto d : dates) {
        if (exclusions.contains(d)) continue;
        const auto base = temporal::first_bin_of(d, width);
        for (std::size_t b = 0; b < per_day; ++b) {
            const auto it = series.find(base + static_cast<std::int64_t>(b));
            const double v = it == series.end() ? 0.0 : it->second;
            if (mode == FeatureMode::weekly) {
                features[temporal::weekday_index(d) * per_day + b] += v;
            } else {
                features.push_back(v);
            }
        }
    }
    double total = 0.0;
    for (double v : features) total += v;
    if (!(total > 0.0)) return std::nullopt;
    for (double& v : features) v /= total;
    return features;
}

}  // namespace areaprof::evaluation
