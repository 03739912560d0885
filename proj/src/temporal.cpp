#include "areaprof/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "areaprof/errors.hpp"
#include "areaprof/io.hpp"

namespace areaprof::temporal {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::optional<unsigned> digits(std::string_view s) {
    if (s.empty()) return std::nullopt;
    unsigned v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<unsigned>(c - '0');
    }
    return v;
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
    s = io::trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto y = digits(s.substr(0, 4));
    const auto m = digits(s.substr(5, 2));
    const auto d = digits(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)), std::chrono::month(*m),
                                          std::chrono::day(*d)};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    s = io::trim(s);
    if (s.ends_with('Z')) s.remove_suffix(1);
    if (s.size() != 19 || s[10] != 'T' || s[13] != ':' || s[16] != ':') return std::nullopt;
    const auto date = parse_date(s.substr(0, 10));
    const auto hh = digits(s.substr(11, 2));
    const auto mm = digits(s.substr(14, 2));
    const auto ss = digits(s.substr(17, 2));
    if (!date || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59) return std::nullopt;
    return static_cast<Timestamp>(date->time_since_epoch().count()) * 86400 + *hh * 3600 + *mm * 60 + *ss;
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

std::string format_timestamp(Timestamp t) {
    const Date d = date_of(t);
    const auto sec = t - static_cast<Timestamp>(d.time_since_epoch().count()) * 86400;
    return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(d), sec / 3600, (sec / 60) % 60, sec % 60);
}

Date date_of(Timestamp t) { return Date{std::chrono::days{floor_div(t, 86400)}}; }

unsigned weekday_index(Date d) { return (std::chrono::weekday{d}.c_encoding() + 6) % 7; }

bool StudyWindow::contains(Timestamp t) const {
    const Date d = date_of(t);
    return (!first || d >= *first) && (!last || d <= *last);
}

CdrParseResult parse_cdr(std::string_view csv_text, const StudyWindow& window) {
    const auto table = io::parse_csv(csv_text);
    io::require_header(table, {"tower_id", "timestamp", "duration_s"}, "CDR file");
    CdrParseResult result;
    auto& rep = result.report;
    for (const auto& [line, f] : table.rows) {
        if (f.size() != 3 || f[0].empty()) {
            ++rep.malformed;
            rep.issues.push_back({line, "expected `tower_id,timestamp,duration_s`"});
            continue;
        }
        const auto ts = parse_timestamp(f[1]);
        const auto dur = io::parse_double(f[2]);
        if (!ts || !dur) {
            ++rep.malformed;
            rep.issues.push_back({line, "unparseable timestamp or duration"});
            continue;
        }
        if (*dur < 0.0) {
            ++rep.negative_duration;
            rep.issues.push_back({line, "negative duration"});
            continue;
        }
        if (!window.contains(*ts)) {
            ++rep.outside_window;
            rep.issues.push_back({line, "timestamp outside the study window"});
            continue;
        }
        ++rep.accepted;
        result.records.push_back({f[0], *ts, *dur});
    }
    return result;
}

CdrParseResult parse_cdr_file(const std::filesystem::path& path, const StudyWindow& window) {
    return parse_cdr(io::read_file(path), window);
}

void validate_bin_width(BinWidth w) {
    if (w.seconds <= 0 || 86400 % w.seconds != 0) {
        throw InputError(fmt::format("bin width {} s does not divide a day evenly", w.seconds));
    }
}

std::int64_t bin_of(Timestamp t, BinWidth w) { return floor_div(t, w.seconds); }

std::int64_t first_bin_of(Date d, BinWidth w) {
    return static_cast<std::int64_t>(d.time_since_epoch().count()) * (86400 / w.seconds);
}

std::vector<TowerSeries> bin_counts(std::span<const CdrRecord> records, BinWidth width) {
    validate_bin_width(width);
    std::map<std::string, BinnedSeries> by_tower;
    for (const auto& r : records) by_tower[r.tower_id][bin_of(r.timestamp, width)] += 1.0;
    std::vector<TowerSeries> out;
    out.reserve(by_tower.size());
    for (auto& [id, bins] : by_tower) out.push_back({id, std::move(bins)});
    return out;
}

std::string_view allocation_mode_name(AllocationMode m) {
    return m == AllocationMode::paper ? "paper" : "conserving";
}

std::optional<AllocationMode> parse_allocation_mode(std::string_view s) {
    if (s == "paper") return AllocationMode::paper;
    if (s == "conserving") return AllocationMode::conserving;
    return std::nullopt;
}

std::string cluster_label(std::size_t cluster) {
    return cluster == kUnprofiled ? std::string("unprofiled") : std::to_string(cluster);
}

std::optional<std::size_t> parse_cluster_label(std::string_view s) {
    s = io::trim(s);
    if (s == "unprofiled") return kUnprofiled;
    const auto v = io::parse_int(s);
    if (!v || *v <= 0) return std::nullopt;
    return static_cast<std::size_t>(*v);
}

Allocation allocate(std::span<const TowerSeries> series, std::span<const geo::TowerCoverage> coverage,
                    std::span<const std::size_t> cell_cluster, AllocationMode mode) {
    std::map<std::string_view, const geo::TowerCoverage*> by_id;
    for (const auto& c : coverage) by_id[c.tower_id] = &c;

    Allocation out;
    for (const auto& ts : series) {
        const auto it = by_id.find(ts.tower_id);
        if (it == by_id.end()) {
            throw InputError(fmt::format("tower `{}` has calls but no coverage polygon", ts.tower_id));
        }
        const auto& weights = it->second->cell_weights;
        const double n = static_cast<double>(weights.size());
        for (const auto& cw : weights) {
            if (cw.cell_id >= cell_cluster.size()) {
                throw InputError(fmt::format("coverage references cell {} outside the grid", cw.cell_id));
            }
            const double factor = mode == AllocationMode::paper ? cw.weight / n : cw.weight;
            auto& cell = out.cells[cw.cell_id];
            for (const auto& [bin, count] : ts.bins) cell[bin] += count * factor;
        }
    }
    std::map<std::size_t, BinnedSeries> clusters;
    for (const auto& [cell, bins] : out.cells) {
        auto& dst = clusters[cell_cluster[cell]];
        for (const auto& [bin, v] : bins) dst[bin] += v;
    }
    for (auto& [label, bins] : clusters) out.clusters.push_back({label, std::move(bins)});
    return out;
}

std::string_view period_name(Period p) { return p == Period::weekly ? "weekly" : "daily"; }

std::optional<Period> parse_period(std::string_view s) {
    if (s == "weekly") return Period::weekly;
    if (s == "daily") return Period::daily;
    return std::nullopt;
}

std::size_t TemporalProfile::slot_of(Date d, std::size_t bin_in_day) const {
    const std::size_t per_day = width.bins_per_day();
    return period == Period::weekly ? weekday_index(d) * per_day + bin_in_day : bin_in_day;
}

namespace {

double value_at(const BinnedSeries& bins, std::int64_t bin) {
    const auto it = bins.find(bin);
    return it == bins.end() ? 0.0 : it->second;
}

}  // namespace

TemporalProfile typical_profile(const ClusterSeries& series, std::span<const Date> dates,
                                const std::set<Date>& exclusions, const ProfileOptions& options) {
    validate_bin_width(options.width);
    if (!(options.alpha > 0.0)) throw InputError("alpha must be positive");
    TemporalProfile p;
    p.cluster = series.cluster;
    p.period = options.period;
    p.width = options.width;
    p.alpha = options.alpha;
    const std::size_t per_day = options.width.bins_per_day();
    const std::size_t slots = options.period == Period::weekly ? 7 * per_day : per_day;
    p.mean.assign(slots, 0.0);
    p.stddev.assign(slots, 0.0);
    p.low.assign(slots, 0.0);
    p.high.assign(slots, 0.0);
    p.support.assign(slots, 0);

    std::vector<std::vector<double>> samples(slots);
    std::size_t used_dates = 0;
    for (const Date d : dates) {
        if (exclusions.contains(d)) continue;
        ++used_dates;
        const auto base = first_bin_of(d, options.width);
        for (std::size_t b = 0; b < per_day; ++b) {
            samples[p.slot_of(d, b)].push_back(value_at(series.bins, base + static_cast<std::int64_t>(b)));
        }
    }
    if (used_dates == 0) throw InputError("every date is excluded; no typical profile can be formed");

    for (std::size_t s = 0; s < slots; ++s) {
        const auto& xs = samples[s];
        p.support[s] = xs.size();
        if (xs.empty()) continue;
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mu = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mu) * (x - mu);
        const double sigma = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
        p.mean[s] = mu;
        p.stddev[s] = sigma;
        p.low[s] = std::max(0.0, mu - options.alpha * sigma);
        p.high[s] = mu + options.alpha * sigma;
    }
    return p;
}

void AnomalyReport::merge(AnomalyReport other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    skipped_insufficient += other.skipped_insufficient;
    std::sort(entries.begin(), entries.end(), [](const Anomaly& l, const Anomaly& r) {
        return std::tie(l.date, l.cluster, l.slot) < std::tie(r.date, r.cluster, r.slot);
    });
}

AnomalyReport detect_anomalies(const ClusterSeries& series, const TemporalProfile& profile,
                               std::span<const Date> dates) {
    AnomalyReport report;
    const std::size_t per_day = profile.width.bins_per_day();
    std::vector<Date> sorted(dates.begin(), dates.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (const Date d : sorted) {
        const auto base = first_bin_of(d, profile.width);
        for (std::size_t b = 0; b < per_day; ++b) {
            const std::size_t slot = profile.slot_of(d, b);
            if (profile.insufficient(slot)) {
                ++report.skipped_insufficient;
                continue;
            }
            const double x = value_at(series.bins, base + static_cast<std::int64_t>(b));
            if (x > profile.high[slot]) {
                report.entries.push_back({series.cluster, d, slot, x, profile.low[slot], profile.high[slot], Direction::above});
            } else if (x < profile.low[slot]) {
                report.entries.push_back({series.cluster, d, slot, x, profile.low[slot], profile.high[slot], Direction::below});
            }
        }
    }
    std::sort(report.entries.begin(), report.entries.end(), [](const Anomaly& l, const Anomaly& r) {
        return std::tie(l.date, l.cluster, l.slot) < std::tie(r.date, r.cluster, r.slot);
    });
    return report;
}

std::vector<ClusterStats> profile_stats(std::span<const TemporalProfile> profiles,
                                        std::span<const ClusterSeries> series, std::span<const Date> dates) {
    std::vector<ClusterStats> stats;
    std::vector<std::vector<double>> patterns;
    for (const auto& p : profiles) {
        if (p.period != Period::weekly) throw InputError("profile_stats needs weekly profiles");
        ClusterStats st;
        st.cluster = p.cluster;
        double total = 0.0;
        for (double m : p.mean) total += m;
        std::vector<double> pattern(p.mean.size(), 0.0);
        if (total > 0.0) {
            st.defined = true;
            const std::size_t weekend_start = 5 * p.width.bins_per_day();
            double weekend = 0.0;
            for (std::size_t s = weekend_start; s < p.mean.size(); ++s) weekend += p.mean[s];
            st.weekend_share = weekend / total;
            for (std::size_t s = 0; s < p.mean.size(); ++s) pattern[s] = p.mean[s] / total;

            const auto it = std::find_if(series.begin(), series.end(),
                                         [&](const ClusterSeries& cs) { return cs.cluster == p.cluster; });
            if (it != series.end() && !dates.empty()) {
                double volume = 0.0;
                for (const Date d : dates) {
                    const auto base = first_bin_of(d, p.width);
                    const auto lo = it->bins.lower_bound(base);
                    const auto hi = it->bins.lower_bound(base + static_cast<std::int64_t>(p.width.bins_per_day()));
                    for (auto b = lo; b != hi; ++b) volume += b->second;
                }
                st.mean_daily_volume = volume / static_cast<double>(dates.size());
            }
        }
        stats.push_back(st);
        patterns.push_back(std::move(pattern));
    }

    std::vector<double> average;
    std::size_t contributors = 0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (!stats[i].defined || stats[i].cluster == kUnprofiled) continue;
        if (average.empty()) average.assign(patterns[i].size(), 0.0);
        for (std::size_t s = 0; s < average.size(); ++s) average[s] += patterns[i][s];
        ++contributors;
    }
    for (double& v : average) v /= static_cast<double>(contributors);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (!stats[i].defined || average.empty()) continue;
        double ss = 0.0;
        for (std::size_t s = 0; s < average.size(); ++s) {
            const double diff = patterns[i][s] - average[s];
            ss += diff * diff;
        }
        stats[i].distance_to_average = std::sqrt(ss);
    }
    return stats;
}

std::vector<Date> date_range(Date first, Date last) {
    std::vector<Date> out;
    for (Date d = first; d <= last; d += std::chrono::days{1}) out.push_back(d);
    return out;
}

}  // namespace areaprof::temporal
