#include "areaprof/pipeline.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "areaprof/activity.hpp"
#include "areaprof/errors.hpp"
#include "areaprof/evaluation.hpp"
#include "areaprof/geometry.hpp"
#include "areaprof/io.hpp"
#include "areaprof/outputs.hpp"
#include "areaprof/spectral.hpp"
#include "areaprof/synth.hpp"
#include "areaprof/temporal.hpp"

namespace areaprof::pipeline {

namespace fs = std::filesystem;
using temporal::Date;

namespace {

void require_file(const fs::path& p, std::string_view what) {
    if (p.empty()) throw InputError(fmt::format("no {} configured", what));
    if (!fs::is_regular_file(p)) throw InputError(fmt::format("{} not found: {}", what, p.string()));
}

void prepare_out(const RunConfig& cfg) {
    fs::create_directories(cfg.out);
    io::write_file(cfg.out / files::kEffectiveConfig, cfg.to_ini());
}

std::string read_stage_file(const RunConfig& cfg, const char* name) {
    const auto p = cfg.out / name;
    if (!fs::is_regular_file(p)) {
        throw InputError(fmt::format("missing upstream output {}; run the earlier stage first", p.string()));
    }
    return io::read_file(p);
}

std::string meta_value(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw InputError(fmt::format("{} lacks `{}`", files::kClusterMeta, key));
    return it->second;
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto v = io::parse_double(meta_value(meta, key));
    if (!v) throw InputError(fmt::format("{}: `{}` is not a number", files::kClusterMeta, key));
    return *v;
}

std::size_t meta_count(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto v = io::parse_int(meta_value(meta, key));
    if (!v || *v < 0) throw InputError(fmt::format("{}: `{}` is not a count", files::kClusterMeta, key));
    return static_cast<std::size_t>(*v);
}

geo::StudyFrame frame_from_meta(const std::map<std::string, std::string>& meta) {
    geo::Projection proj({meta_double(meta, "projection_origin_lon"), meta_double(meta, "projection_origin_lat")},
                         meta_double(meta, "projection_reference_lat"));
    geo::Grid grid({meta_double(meta, "grid_origin_x"), meta_double(meta, "grid_origin_y")},
                   meta_double(meta, "grid_cell_size"), meta_count(meta, "grid_nx"), meta_count(meta, "grid_ny"));
    return {proj, grid};
}

/// cell id -> cluster label for every grid cell (unprofiled = 0).
std::vector<std::size_t> read_assignment(const RunConfig& cfg, std::size_t cell_count) {
    const auto table = io::parse_csv(read_stage_file(cfg, files::kAssignment));
    io::require_header(table, {"cell_id", "cluster"}, files::kAssignment);
    std::vector<std::size_t> labels(cell_count, temporal::kUnprofiled);
    for (const auto& [line, f] : table.rows) {
        const auto cell = f.size() == 2 ? io::parse_int(f[0]) : std::nullopt;
        const auto cluster = f.size() == 2 ? temporal::parse_cluster_label(f[1]) : std::nullopt;
        if (!cell || !cluster || *cell < 0 || static_cast<std::size_t>(*cell) >= cell_count) {
            throw InputError(fmt::format("{} line {}: bad row", files::kAssignment, line));
        }
        labels[static_cast<std::size_t>(*cell)] = *cluster;
    }
    return labels;
}

std::string series_csv(std::string_view key_header, const std::vector<std::pair<std::string, const temporal::BinnedSeries*>>& rows,
                       temporal::BinWidth width) {
    std::string out = fmt::format("{},bin_start,volume\n", key_header);
    for (const auto& [key, bins] : rows) {
        for (const auto& [bin, v] : *bins) {
            out += fmt::format("{},{},{}\n", key, temporal::format_timestamp(bin * width.seconds), io::format_double(v));
        }
    }
    return out;
}

std::string format_optional(bool defined, double v) { return defined ? io::format_fixed(v) : std::string(); }

}  // namespace

StageReport run_cluster(const RunConfig& cfg) {
    cfg.validate();
    StageReport report{"cluster", {}, {}};
    require_file(cfg.pois, "POI file");
    activity::Taxonomy taxonomy;
    if (cfg.taxonomy.empty()) {
        taxonomy = activity::Taxonomy::builtin();
    } else {
        require_file(cfg.taxonomy, "taxonomy file");
        taxonomy = activity::Taxonomy::load(cfg.taxonomy);
    }
    std::vector<geo::TowerRecord> towers;
    if (!cfg.towers.empty() && !cfg.bbox) {
        require_file(cfg.towers, "towers file");
        towers = geo::parse_towers(io::read_file(cfg.towers));
    }
    const auto parsed = activity::parse_pois_file(cfg.pois, taxonomy);
    prepare_out(cfg);

    const auto& rep = parsed.report;
    std::string poi_report = io::format_key_values({{"accepted", std::to_string(rep.accepted)},
                                                    {"discarded", std::to_string(rep.discarded)},
                                                    {"unknown_type", std::to_string(rep.unknown_type)},
                                                    {"malformed", std::to_string(rep.malformed)}});
    for (const auto& issue : rep.issues) poi_report += fmt::format("# line {}: {}\n", issue.line, issue.message);
    io::write_file(cfg.out / files::kPoiReport, poi_report);
    report.counts["pois_accepted"] = std::to_string(rep.accepted);
    report.counts["pois_discarded"] = std::to_string(rep.discarded);
    report.counts["pois_unknown_type"] = std::to_string(rep.unknown_type);
    report.counts["pois_malformed"] = std::to_string(rep.malformed);
    if (rep.unknown_type > 0) report.warnings.push_back(fmt::format("{} POIs had types missing from the taxonomy", rep.unknown_type));
    if (rep.malformed > 0) report.warnings.push_back(fmt::format("{} malformed POI rows skipped", rep.malformed));

    if (parsed.records.empty()) throw DegenerateDataError("empty grid: no usable POIs");
    geo::StudyFrame frame = [&] {
        if (cfg.bbox) return geo::frame_from_bbox(*cfg.bbox, cfg.cell_size);
        std::vector<geo::LonLat> pts;
        for (const auto& r : parsed.records) pts.push_back(r.location);
        for (const auto& t : towers) pts.push_back(t.location);
        return geo::frame_from_extent(pts, cfg.cell_size);
    }();

    std::vector<activity::PlacedPoi> placed;
    placed.reserve(parsed.records.size());
    for (const auto& r : parsed.records) placed.push_back({frame.projection.project(r.location), r.category});
    const auto counts = activity::populate_grid(placed, frame.grid);
    report.counts["pois_outside_bbox"] = std::to_string(counts.outside);
    if (counts.outside > 0) report.warnings.push_back(fmt::format("{} POIs fell outside the study bbox", counts.outside));
    if (counts.total() <= 0.0) throw DegenerateDataError("empty grid: no POI falls inside the study bbox");

    const auto weighted = activity::tfidf(counts.cells);
    spectral::ClusterOptions opts;
    opts.neighbors = cfg.neighbors;
    opts.k_max = cfg.k_max;
    opts.seed = cfg.seed;
    opts.normalize_rows = cfg.row_normalize;
    opts.max_nodes = cfg.max_nodes;
    opts.kmeans.restarts = cfg.restarts;
    const auto model = spectral::cluster_areas(weighted.vectors, opts);

    std::string vectors_csv = "cell_id";
    for (std::size_t j = 0; j < activity::kCategoryCount; ++j) {
        vectors_csv += fmt::format(",{}", activity::category_name(static_cast<activity::ActivityCategory>(j)));
    }
    vectors_csv += "\n";
    std::string assignment = "cell_id,cluster\n";
    std::vector<outputs::CellLabel> labelled;
    for (std::size_t i = 0; i < weighted.vectors.size(); ++i) {
        const auto& v = weighted.vectors[i];
        vectors_csv += std::to_string(v.cell_id);
        for (double w : v.weights) vectors_csv += "," + io::format_double(w);
        vectors_csv += "\n";
        if (model.labels[i] == spectral::kUnclustered) continue;
        assignment += fmt::format("{},{}\n", v.cell_id, model.labels[i]);
        labelled.push_back({v.cell_id, model.labels[i]});
    }
    io::write_file(cfg.out / files::kActivityVectors, vectors_csv);
    io::write_file(cfg.out / files::kAssignment, assignment);

    std::string spectrum = "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
        spectrum += fmt::format("{},{}\n", i + 1, io::format_double(model.eigenvalues[i]));
    }
    io::write_file(cfg.out / files::kSpectrum, spectrum);
    io::write_file(cfg.out / files::kGeoJson, outputs::cluster_geojson(labelled, frame));

    std::map<std::string, std::string> meta{
        {"K", std::to_string(model.neighbors_used)},
        {"k_max", std::to_string(model.k_max_used)},
        {"k", std::to_string(model.k)},
        {"seed", std::to_string(model.seed)},
        {"restarts", std::to_string(model.restarts)},
        {"row_normalize", cfg.row_normalize ? "true" : "false"},
        {"kmeans_objective", io::format_double(model.objective)},
        {"tfidf", "tf=count/row_total;idf=ln(nonempty_cells/document_frequency)"},
        {"nonempty_cells", std::to_string(weighted.nonempty_cells)},
        {"zero_vector_cells", std::to_string(weighted.zero_vector_cells.size())},
        {"profiled_cells", std::to_string(weighted.vectors.size())},
        {"isolated_cells", std::to_string(model.isolated.size())},
        {"clustered_cells", std::to_string(labelled.size())},
        {"projection_origin_lon", io::format_double(frame.projection.origin().lon)},
        {"projection_origin_lat", io::format_double(frame.projection.origin().lat)},
        {"projection_reference_lat", io::format_double(frame.projection.reference_lat())},
        {"grid_origin_x", io::format_double(frame.grid.origin().x)},
        {"grid_origin_y", io::format_double(frame.grid.origin().y)},
        {"grid_cell_size", io::format_double(frame.grid.cell_size())},
        {"grid_nx", std::to_string(frame.grid.nx())},
        {"grid_ny", std::to_string(frame.grid.ny())},
    };
    io::write_file(cfg.out / files::kClusterMeta, io::format_key_values(meta));

    report.counts["grid_cells"] = std::to_string(frame.grid.cell_count());
    report.counts["profiled_cells"] = std::to_string(weighted.vectors.size());
    report.counts["clusters"] = std::to_string(model.k);
    if (!weighted.zero_vector_cells.empty()) {
        report.warnings.push_back(fmt::format("{} nonempty cells have an all-zero TF-IDF vector and stay unprofiled",
                                              weighted.zero_vector_cells.size()));
    }
    if (!model.isolated.empty()) {
        report.warnings.push_back(fmt::format("{} cells share no activity with any other cell and stay unprofiled",
                                              model.isolated.size()));
    }
    return report;
}

StageReport run_patterns(const RunConfig& cfg) {
    cfg.validate();
    StageReport report{"patterns", {}, {}};
    const auto meta = io::parse_key_values(read_stage_file(cfg, files::kClusterMeta));
    const auto frame = frame_from_meta(meta);
    const auto cell_cluster = read_assignment(cfg, frame.grid.cell_count());
    const std::size_t k = meta_count(meta, "k");
    require_file(cfg.towers, "towers file");
    require_file(cfg.cdr, "CDR file");
    const auto holidays = cfg.all_holidays();
    const temporal::BinWidth width{cfg.bin_width};

    const auto tower_rows = geo::parse_towers(io::read_file(cfg.towers));
    std::vector<geo::Tower> towers;
    for (const auto& t : tower_rows) towers.push_back({t.id, frame.projection.project(t.location)});
    const auto coverage = geo::compute_coverage(towers, frame.grid);
    std::string coverage_csv = "tower_id,cell_id,weight\n";
    for (const auto& c : coverage) {
        for (const auto& cw : c.cell_weights) {
            coverage_csv += fmt::format("{},{},{}\n", c.tower_id, cw.cell_id, io::format_double(cw.weight));
        }
    }

    const auto parsed = temporal::parse_cdr_file(cfg.cdr, cfg.window());
    prepare_out(cfg);
    io::write_file(cfg.out / files::kCoverage, coverage_csv);
    const auto& rep = parsed.report;
    std::string cdr_report = io::format_key_values({{"accepted", std::to_string(rep.accepted)},
                                                    {"malformed", std::to_string(rep.malformed)},
                                                    {"negative_duration", std::to_string(rep.negative_duration)},
                                                    {"outside_window", std::to_string(rep.outside_window)}});
    for (const auto& issue : rep.issues) cdr_report += fmt::format("# line {}: {}\n", issue.line, issue.message);
    io::write_file(cfg.out / files::kCdrReport, cdr_report);
    report.counts["towers"] = std::to_string(towers.size());
    report.counts["cdr_accepted"] = std::to_string(rep.accepted);
    report.counts["cdr_rejected"] = std::to_string(rep.rejected());
    if (rep.rejected() > 0) report.warnings.push_back(fmt::format("{} CDR rows rejected (see {})", rep.rejected(), files::kCdrReport));

    const auto series = temporal::bin_counts(parsed.records, width);
    const auto allocation = temporal::allocate(series, coverage, cell_cluster, cfg.allocation);

    std::vector<std::pair<std::string, const temporal::BinnedSeries*>> cell_rows;
    for (const auto& [cell, bins] : allocation.cells) cell_rows.emplace_back(std::to_string(cell), &bins);
    io::write_file(cfg.out / files::kCellSeries, series_csv("cell_id", cell_rows, width));

    std::map<std::size_t, temporal::ClusterSeries> clusters;
    for (std::size_t c = 1; c <= k; ++c) clusters[c] = {c, {}};
    for (const auto& cs : allocation.clusters) clusters[cs.cluster] = cs;
    std::vector<std::pair<std::string, const temporal::BinnedSeries*>> cluster_rows;
    for (const auto& [label, cs] : clusters) cluster_rows.emplace_back(temporal::cluster_label(label), &cs.bins);
    io::write_file(cfg.out / files::kClusterSeries, series_csv("cluster", cluster_rows, width));

    std::string profiles_csv = "cluster,slot,mean,std,low,high,support\n";
    std::string stats_csv = "cluster,mean_daily_volume,weekend_share,distance_to_average\n";
    std::string anomalies_csv = "cluster,date,slot,observed,low,high,direction\n";
    std::map<std::string, std::string> patterns_meta{
        {"bin_width", std::to_string(width.seconds)},
        {"period", std::string(temporal::period_name(cfg.period))},
        {"allocation", std::string(temporal::allocation_mode_name(cfg.allocation))},
        {"alpha", io::format_double(cfg.alpha)},
    };

    std::vector<Date> dates;
    if (!parsed.records.empty()) {
        auto [lo, hi] = std::minmax_element(parsed.records.begin(), parsed.records.end(),
                                            [](const auto& l, const auto& r) { return l.timestamp < r.timestamp; });
        dates = temporal::date_range(cfg.window_start.value_or(temporal::date_of(lo->timestamp)),
                                     cfg.window_end.value_or(temporal::date_of(hi->timestamp)));
    } else {
        report.warnings.push_back("CDR input has no usable records; profiles, stats and anomalies are empty");
    }

    if (!dates.empty()) {
        patterns_meta["first_date"] = temporal::format_date(dates.front());
        patterns_meta["last_date"] = temporal::format_date(dates.back());
        const std::set<Date> exclusions(holidays.begin(), holidays.end());
        std::vector<Date> kept;
        std::vector<Date> anomaly_dates;
        for (const Date d : dates) {
            if (!exclusions.contains(d)) kept.push_back(d);
            if (cfg.anomaly_dates == AnomalyDates::all || exclusions.contains(d)) anomaly_dates.push_back(d);
        }
        patterns_meta["excluded_dates"] = std::to_string(dates.size() - kept.size());

        temporal::ProfileOptions popts{cfg.period, width, cfg.alpha};
        temporal::ProfileOptions weekly{temporal::Period::weekly, width, cfg.alpha};
        std::vector<temporal::TemporalProfile> weekly_profiles;
        std::vector<temporal::ClusterSeries> ordered;
        temporal::AnomalyReport anomalies;
        for (const auto& [label, cs] : clusters) {
            const auto profile = temporal::typical_profile(cs, dates, exclusions, popts);
            for (std::size_t s = 0; s < profile.slot_count(); ++s) {
                const bool ok = !profile.insufficient(s);
                profiles_csv += fmt::format("{},{},{},{},{},{},{}\n", temporal::cluster_label(label), s,
                                            format_optional(profile.support[s] > 0, profile.mean[s]),
                                            format_optional(ok, profile.stddev[s]), format_optional(ok, profile.low[s]),
                                            format_optional(ok, profile.high[s]), profile.support[s]);
            }
            io::write_file(cfg.out / fmt::format("profile_{}.svg", temporal::cluster_label(label)),
                           outputs::profile_svg(profile));
            anomalies.merge(temporal::detect_anomalies(cs, profile, anomaly_dates));
            weekly_profiles.push_back(cfg.period == temporal::Period::weekly
                                          ? profile
                                          : temporal::typical_profile(cs, dates, exclusions, weekly));
            ordered.push_back(cs);
        }
        for (const auto& st : temporal::profile_stats(weekly_profiles, ordered, kept)) {
            if (st.defined) {
                stats_csv += fmt::format("{},{},{},{}\n", temporal::cluster_label(st.cluster),
                                         io::format_fixed(st.mean_daily_volume), io::format_fixed(st.weekend_share),
                                         io::format_fixed(st.distance_to_average));
            } else {
                stats_csv += fmt::format("{},undefined,undefined,undefined\n", temporal::cluster_label(st.cluster));
            }
        }
        for (const auto& a : anomalies.entries) {
            anomalies_csv += fmt::format("{},{},{},{},{},{},{}\n", temporal::cluster_label(a.cluster),
                                         temporal::format_date(a.date), a.slot, io::format_fixed(a.observed),
                                         io::format_fixed(a.low), io::format_fixed(a.high),
                                         a.direction == temporal::Direction::above ? "above" : "below");
        }
        report.counts["anomalies"] = std::to_string(anomalies.entries.size());
        report.counts["anomaly_slots_skipped"] = std::to_string(anomalies.skipped_insufficient);
        if (anomalies.skipped_insufficient > 0) {
            report.warnings.push_back(fmt::format("{} anomaly checks skipped for lack of profile support",
                                                  anomalies.skipped_insufficient));
        }
    }
    io::write_file(cfg.out / files::kProfiles, profiles_csv);
    io::write_file(cfg.out / files::kStats, stats_csv);
    io::write_file(cfg.out / files::kAnomalies, anomalies_csv);
    io::write_file(cfg.out / files::kPatternsMeta, io::format_key_values(patterns_meta));
    report.counts["dates"] = std::to_string(dates.size());
    return report;
}

StageReport run_evaluate(const RunConfig& cfg) {
    cfg.validate();
    StageReport report{"evaluate", {}, {}};
    const auto meta = io::parse_key_values(read_stage_file(cfg, files::kClusterMeta));
    const auto frame = frame_from_meta(meta);
    const auto cell_cluster = read_assignment(cfg, frame.grid.cell_count());
    const auto series_table = io::parse_csv(read_stage_file(cfg, files::kCellSeries));
    const auto pmeta = io::parse_key_values(read_stage_file(cfg, files::kPatternsMeta));
    io::require_header(series_table, {"cell_id", "bin_start", "volume"}, files::kCellSeries);

    const auto width_v = pmeta.contains("bin_width") ? io::parse_int(pmeta.at("bin_width")) : std::nullopt;
    if (!width_v) throw InputError(fmt::format("{} lacks bin_width", files::kPatternsMeta));
    const temporal::BinWidth width{*width_v};
    temporal::validate_bin_width(width);
    if (!pmeta.contains("first_date")) throw DegenerateDataError("no call volume available to evaluate");
    const auto first = temporal::parse_date(pmeta.at("first_date"));
    const auto last = temporal::parse_date(pmeta.at("last_date"));
    if (!first || !last) throw InputError(fmt::format("{} has invalid dates", files::kPatternsMeta));
    const auto dates = temporal::date_range(*first, *last);

    std::map<std::size_t, temporal::BinnedSeries> cells;
    for (const auto& [line, f] : series_table.rows) {
        const auto cell = f.size() == 3 ? io::parse_int(f[0]) : std::nullopt;
        const auto ts = f.size() == 3 ? temporal::parse_timestamp(f[1]) : std::nullopt;
        const auto v = f.size() == 3 ? io::parse_double(f[2]) : std::nullopt;
        if (!cell || !ts || !v || *cell < 0) throw InputError(fmt::format("{} line {}: bad row", files::kCellSeries, line));
        cells[static_cast<std::size_t>(*cell)][temporal::bin_of(*ts, width)] += *v;
    }

    const auto holidays = cfg.all_holidays();
    const std::set<Date> exclusions(holidays.begin(), holidays.end());
    std::vector<evaluation::PatternPoint> points;
    std::size_t silent = 0;
    for (std::size_t cell = 0; cell < cell_cluster.size(); ++cell) {
        if (cell_cluster[cell] == temporal::kUnprofiled) continue;
        const auto it = cells.find(cell);
        std::optional<std::vector<double>> features;
        if (it != cells.end()) features = evaluation::pattern_features(it->second, dates, exclusions, width, cfg.features);
        if (!features) {
            ++silent;
            continue;
        }
        points.push_back({cell, cell_cluster[cell], std::move(*features)});
    }
    std::set<std::size_t> distinct;
    for (const auto& p : points) distinct.insert(p.cluster);
    if (distinct.size() < 2) {
        throw DegenerateDataError(fmt::format("silhouette needs at least two clusters with call volume, found {}", distinct.size()));
    }
    const auto result = evaluation::silhouette(points);

    prepare_out(cfg);
    std::string per_point = "cell_id,cluster,a,b,s\n";
    for (const auto& p : result.points) {
        per_point += fmt::format("{},{},{},{},{}\n", p.id, p.cluster, io::format_fixed(p.a, 9), io::format_fixed(p.b, 9),
                                 io::format_fixed(p.s, 9));
    }
    std::string summary = "cluster,mean_s,positive_fraction,size\n";
    for (const auto& [c, cs] : result.clusters) {
        summary += fmt::format("{},{},{},{}\n", c, io::format_fixed(cs.mean_s), io::format_fixed(cs.positive_fraction), cs.size);
    }
    io::write_file(cfg.out / files::kSilhouette, per_point);
    io::write_file(cfg.out / files::kSilhouetteSummary, summary);
    report.counts["evaluated_cells"] = std::to_string(points.size());
    report.counts["mean_silhouette"] = io::format_fixed(result.mean_s);
    if (silent > 0) report.warnings.push_back(fmt::format("{} clustered cells carry no call volume and were skipped", silent));
    return report;
}

StageReport run_synth(const fs::path& spec_path, const fs::path& out_dir) {
    if (!fs::is_regular_file(spec_path)) throw InputError(fmt::format("synth spec not found: {}", spec_path.string()));
    const auto spec = synth::SynthSpec::load(spec_path);
    const auto city = synth::gen_city(spec);
    const auto coverage = geo::compute_coverage(synth::tower_sites(city), city.frame.grid);
    const auto records = synth::gen_cdr(spec, city, coverage);

    fs::create_directories(out_dir);
    io::write_file(out_dir / files::kSynthPois, synth::pois_csv(city));
    io::write_file(out_dir / files::kSynthTowers, synth::towers_csv(city));
    io::write_file(out_dir / files::kSynthCdr, synth::cdr_csv(records));

    RunConfig run;
    run.bbox = city.bbox;
    run.cell_size = spec.cell_size;
    run.window_start = spec.cdr_start;
    run.window_end = spec.cdr_start + std::chrono::days{static_cast<long>(7 * spec.weeks - 1)};
    for (const auto& inj : spec.injections) run.holidays.push_back(inj.date);
    std::sort(run.holidays.begin(), run.holidays.end());
    run.holidays.erase(std::unique(run.holidays.begin(), run.holidays.end()), run.holidays.end());
    // Paths stay relative to the generated directory.
    std::string ini = run.to_ini();
    auto replace_line = [&](const std::string& key, const std::string& value) {
        const auto pos = ini.find(key + " = ");
        const auto end = ini.find('\n', pos);
        ini.replace(pos, end - pos, key + " = " + value);
    };
    replace_line("pois", files::kSynthPois);
    replace_line("towers", files::kSynthTowers);
    replace_line("cdr", files::kSynthCdr);
    io::write_file(out_dir / files::kSynthConfig, ini);

    StageReport report{"synth", {}, {}};
    report.counts["pois"] = std::to_string(city.pois.size());
    report.counts["towers"] = std::to_string(city.towers.size());
    report.counts["cdr_records"] = std::to_string(records.size());
    report.counts["grid_cells"] = std::to_string(city.frame.grid.cell_count());
    if (records.empty()) report.warnings.push_back("rate scale produced no call records");
    return report;
}

namespace {

void print_report(const StageReport& r, std::ostream& log) {
    log << "[" << r.stage << "]\n";
    for (const auto& [k, v] : r.counts) log << "  " << k << " = " << v << "\n";
    for (const auto& w : r.warnings) log << "  warning: " << w << "\n";
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        fn();
        return kExitOk;
    } catch (const DegenerateDataError& e) {
        log << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::ostream& log) {
    return guarded(log, [&] { print_report(run_synth(spec_path, out_dir), log); });
}

int cmd_cluster(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] { print_report(run_cluster(cfg), log); });
}

int cmd_patterns(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] { print_report(run_patterns(cfg), log); });
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] { print_report(run_evaluate(cfg), log); });
}

int cmd_run_all(const RunConfig& cfg, std::ostream& log) {
    const int valid = guarded(log, [&] { cfg.validate(); });
    if (valid != kExitOk) return valid;

    std::vector<StageReport> done;
    auto write_run_report = [&](const std::string& failure) {
        std::string text = "# effective configuration\n" + cfg.to_ini();
        for (const auto& r : done) {
            text += fmt::format("\n[{}]\n", r.stage);
            for (const auto& [k, v] : r.counts) text += fmt::format("{} = {}\n", k, v);
            for (const auto& w : r.warnings) text += fmt::format("# warning: {}\n", w);
        }
        if (!failure.empty()) text += fmt::format("\n# failed: {}\n", failure);
        try {
            fs::create_directories(cfg.out);
            io::write_file(cfg.out / files::kRunReport, text);
        } catch (const std::exception& e) {
            log << "error: cannot write run report: " << e.what() << "\n";
        }
    };

    using Stage = StageReport (*)(const RunConfig&);
    for (Stage stage : {Stage{run_cluster}, Stage{run_patterns}, Stage{run_evaluate}}) {
        std::string failure;
        const int code = guarded(log, [&] {
            try {
                done.push_back(stage(cfg));
            } catch (const std::exception& e) {
                failure = e.what();
                throw;
            }
        });
        if (code != kExitOk) {
            write_run_report(failure);
            return code;
        }
        print_report(done.back(), log);
    }
    write_run_report({});
    return kExitOk;
}

}  // namespace areaprof::pipeline
