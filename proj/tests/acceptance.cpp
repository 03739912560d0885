// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "areaprof/activity.hpp"
#include "areaprof/evaluation.hpp"
#include "areaprof/geometry.hpp"
#include "areaprof/io.hpp"
#include "areaprof/pipeline.hpp"
#include "areaprof/spectral.hpp"
#include "areaprof/synth.hpp"
#include "areaprof/temporal.hpp"
#include "support.hpp"

using namespace areaprof;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kFixture = std::string(AREAPROF_FIXTURES) + "/city4.ini";

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

Eigen::VectorXd eigenvalues_of(const Eigen::MatrixXd& adjacency) {
    return spectral::decompose(spectral::normalized_laplacian(spectral::graph_from_adjacency(adjacency))).eigenvalues;
}

Outcome eigengap_exactness() {
    std::mt19937_64 rng(2024);
    int exact = 0;
    int trials = 0;
    double worst = 0;
    std::size_t largest = 0;
    for (std::size_t c : {2u, 3u, 4u, 5u}) {
        std::uniform_int_distribution<std::size_t> block(10, 500 / c);
        for (int t = 0; t < 20; ++t) {
            const auto a = testsupport::planted_components(c, block(rng), rng, 0.3);
            largest = std::max(largest, static_cast<std::size_t>(a.rows()));
            const auto t0 = Clock::now();
            const auto ev = eigenvalues_of(a);
            const auto k = spectral::eigengap_k(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())), 30);
            worst = std::max(worst, seconds_since(t0));
            ++trials;
            exact += k == c ? 1 : 0;
        }
    }
    return {exact == trials && worst < 1.0,
            fmt::format("{}/{} exact over c in 2..5, extra-edge p 0.3, n <= {}, slowest trial {:.3f} s", exact, trials, largest, worst)};
}

Outcome planted_recovery() {
    auto spec = synth::SynthSpec::load(kFixture);
    int good = 0;
    double worst = 0;
    double min_ari = 1;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        spec.seed = seed;
        const auto t0 = Clock::now();
        const auto city = synth::gen_city(spec);
        const auto tf = activity::tfidf(testsupport::city_counts(city));
        const auto model = spectral::cluster_areas(tf.vectors);
        worst = std::max(worst, seconds_since(t0));
        std::vector<std::size_t> planted;
        for (const auto& v : tf.vectors) planted.push_back(city.planted[v.cell_id]);
        const double ari = testsupport::adjusted_rand_index(model.labels, planted);
        min_ari = std::min(min_ari, ari);
        good += ari >= 0.9 ? 1 : 0;
    }
    return {good >= 9 && worst < 10.0,
            fmt::format("ARI >= 0.9 in {}/10 seeds (min {:.4f}), slowest run {:.3f} s", good, min_ari, worst)};
}

// Brute-force silhouette with explicit loops over every pair.
std::vector<double> oracle_silhouette(const std::vector<evaluation::PatternPoint>& pts) {
    std::set<std::size_t> labels;
    for (const auto& p : pts) labels.insert(p.cluster);
    std::vector<double> s(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::map<std::size_t, double> sum;
        std::map<std::size_t, double> count;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j == i) continue;
            double d2 = 0;
            for (std::size_t f = 0; f < pts[i].features.size(); ++f)
                d2 += (pts[i].features[f] - pts[j].features[f]) * (pts[i].features[f] - pts[j].features[f]);
            sum[pts[j].cluster] += std::sqrt(d2);
            count[pts[j].cluster] += 1;
        }
        const std::size_t own = pts[i].cluster;
        if (count[own] == 0) continue;
        const double a = sum[own] / count[own];
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t l : labels)
            if (l != own) b = std::min(b, sum[l] / count[l]);
        s[i] = (b - a) / std::max(a, b);
    }
    return s;
}

Outcome silhouette_oracle() {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0, 0.7);
    std::uniform_real_distribution<double> centre(-3, 3);
    double max_err = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 5);
        const std::size_t n = 20 + rng() % 181;
        const std::size_t dim = 1 + rng() % 8;
        std::vector<std::vector<double>> centres(k, std::vector<double>(dim));
        for (auto& c : centres)
            for (auto& v : c) v = centre(rng);
        std::vector<evaluation::PatternPoint> pts;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i < k ? i : rng() % k;
            evaluation::PatternPoint p{i, c + 1, std::vector<double>(dim)};
            for (std::size_t f = 0; f < dim; ++f) p.features[f] = centres[c][f] + noise(rng);
            pts.push_back(std::move(p));
        }
        const auto lib = evaluation::silhouette(pts);
        const auto ref = oracle_silhouette(pts);
        for (std::size_t i = 0; i < n; ++i) max_err = std::max(max_err, std::abs(lib.points[i].s - ref[i]));
    }
    return {max_err <= 1e-9, fmt::format("max |s - oracle| = {:.3e} over 20 fixtures", max_err)};
}

Outcome weight_normalization() {
    std::mt19937_64 rng(4);
    double max_dev = 0;
    std::size_t polygons = 0;
    for (int layout = 0; layout < 100; ++layout) {
        const std::size_t nx = 4 + rng() % 20;
        const std::size_t ny = 4 + rng() % 20;
        const double cell = 25.0 + static_cast<double>(rng() % 100);
        const geo::Grid grid({0, 0}, cell, nx, ny);
        std::uniform_real_distribution<double> ux(0, cell * static_cast<double>(nx));
        std::uniform_real_distribution<double> uy(0, cell * static_cast<double>(ny));
        std::vector<geo::Tower> towers;
        const std::size_t count = 1 + rng() % 30;
        for (std::size_t i = 0; i < count; ++i) towers.push_back({"T" + std::to_string(i), {ux(rng), uy(rng)}});
        for (const auto& tc : geo::compute_coverage(towers, grid)) {
            double sum = 0;
            for (const auto& cw : tc.cell_weights) sum += cw.weight;
            max_dev = std::max(max_dev, std::abs(sum - 1.0));
            ++polygons;
        }
    }
    return {max_dev <= 1e-6, fmt::format("max |sum W - 1| = {:.3e} over {} polygons in 100 layouts", max_dev, polygons)};
}

Outcome mass_conservation() {
    using temporal::AllocationMode;
    double max_rel = 0;
    auto check_totals = [&](const std::vector<temporal::TowerSeries>& towers, const temporal::Allocation& a) {
        std::map<std::int64_t, double> expected;
        for (const auto& t : towers)
            for (const auto& [b, v] : t.bins) expected[b] += v;
        std::map<std::int64_t, double> got;
        for (const auto& c : a.clusters)
            for (const auto& [b, v] : c.bins) got[b] += v;
        for (const auto& [b, total] : expected)
            if (total > 0) max_rel = std::max(max_rel, std::abs(got[b] - total) / total);
    };

    // Synthetic fixtures: the committed city and a small single-archetype town.
    auto spec = synth::SynthSpec::load(kFixture);
    spec.weeks = 2;
    spec.injections.clear();
    std::vector<synth::SynthSpec> specs{spec};
    specs.push_back(synth::SynthSpec::parse(
        "seed = 9\n[grid]\nnx = 7\nny = 5\n[archetypes]\ncount = 1\nmix1 = eating:1\n"
        "shape1 = 1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n[towers]\nnx = 2\nny = 2\n[cdr]\nweeks = 1\n"));
    for (const auto& s : specs) {
        const auto city = synth::gen_city(s);
        const auto ps = testsupport::planted_series(s, city);
        check_totals(ps.towers, ps.allocation);
    }

    // One tower over the whole grid: paper mode is conserving divided by the N cells it covers.
    const auto& one = specs.back();
    auto city = synth::gen_city(one);
    city.towers.resize(1);
    const auto cov = geo::compute_coverage(synth::tower_sites(city), city.frame.grid);
    const auto towers = temporal::bin_counts(synth::gen_cdr(one, city, cov), {});
    const auto cons = temporal::allocate(towers, cov, city.planted, AllocationMode::conserving);
    const auto paper = temporal::allocate(towers, cov, city.planted, AllocationMode::paper);
    check_totals(towers, cons);
    const double n_cells = static_cast<double>(cov.at(0).cell_weights.size());
    double max_paper_dev = 0;
    for (const auto& [cell, bins] : cons.cells)
        for (const auto& [b, v] : bins)
            max_paper_dev = std::max(max_paper_dev, std::abs(paper.cells.at(cell).at(b) - v / n_cells));

    // Two half-weight cells, 100 calls: 50 each when conserving, 25 each in paper mode.
    const std::vector<temporal::TowerSeries> two{{"T1", {{0, 100.0}}}};
    const std::vector<geo::TowerCoverage> two_cov{
        {"T1", {0, 0}, geo::ConvexPolygon::from_rect({0, 0, 100, 50}), {{0, 0.5}, {1, 0.5}}}};
    const std::vector<std::size_t> labels{1, 2};
    const auto c2 = temporal::allocate(two, two_cov, labels, AllocationMode::conserving);
    const auto p2 = temporal::allocate(two, two_cov, labels, AllocationMode::paper);
    bool analytic = true;
    for (std::size_t cell = 0; cell < 2; ++cell) {
        analytic = analytic && std::abs(c2.cells.at(cell).at(0) - 50.0) < 1e-12;
        analytic = analytic && std::abs(p2.cells.at(cell).at(0) - 25.0) < 1e-12;
    }

    return {max_rel <= 1e-9 && max_paper_dev <= 1e-9 && analytic,
            fmt::format("max relative bin error {:.3e}; paper vs conserving/N max dev {:.3e}; 2-cell fixture {}",
                        max_rel, max_paper_dev, analytic ? "50/50 vs 25/25" : "mismatch")};
}

Outcome sigma_calibration() {
    // Injected spike in the committed city, ten seeds.
    auto spec = synth::SynthSpec::load(kFixture);
    const auto& inj = spec.injections.at(0);
    int flagged = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        spec.seed = seed;
        const auto city = synth::gen_city(spec);
        const auto ps = testsupport::planted_series(spec, city);
        const auto& cs = testsupport::series_of(ps.allocation, inj.archetype);
        temporal::ProfileOptions opts;
        opts.alpha = 3.0;
        const auto profile = temporal::typical_profile(cs, ps.dates, {inj.date}, opts);
        const std::vector<temporal::Date> eval{inj.date};
        const auto r = temporal::detect_anomalies(cs, profile, eval);
        const bool hit = std::any_of(r.entries.begin(), r.entries.end(), [&](const auto& e) {
            return e.slot == 6 * 24 + inj.hour && e.direction == temporal::Direction::above;
        });
        flagged += hit ? 1 : 0;
    }

    // Clean Gaussian weeks: 52 training weeks, then fresh weeks tested against the envelope.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(200, 15);
    const auto train = temporal::date_range(*temporal::parse_date("2012-01-02"), *temporal::parse_date("2012-12-30"));
    const auto test = temporal::date_range(*temporal::parse_date("2013-01-07"), *temporal::parse_date("2013-06-30"));
    temporal::ClusterSeries cs;
    cs.cluster = 1;
    for (const auto& range : {train, test})
        for (const auto d : range)
            for (std::int64_t b = 0; b < 24; ++b) cs.bins[temporal::first_bin_of(d, {}) + b] = g(rng);
    temporal::ProfileOptions opts;
    opts.alpha = 3.0;
    const auto profile = temporal::typical_profile(cs, train, {}, opts);
    const auto r = temporal::detect_anomalies(cs, profile, test);
    const std::size_t slots = test.size() * 24;
    const double rate = static_cast<double>(r.entries.size()) / static_cast<double>(slots);

    return {flagged == 10 && slots >= 1000 && rate <= 0.01,
            fmt::format("+5 sigma spike flagged in {}/10 seeds; clean rate {:.4f} ({} of {} slots)", flagged, rate,
                        r.entries.size(), slots)};
}

Outcome laplacian_bounds() {
    std::mt19937_64 rng(31);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    int multiplicity_ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 20 + rng() % 100;
        const auto a = testsupport::random_graph(n, 1.5 / static_cast<double>(n), rng);
        const auto ev = eigenvalues_of(a);
        lo = std::min(lo, ev.minCoeff());
        hi = std::max(hi, ev.maxCoeff());
        std::size_t zeros = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i) zeros += std::abs(ev[i]) < 1e-8 ? 1 : 0;
        multiplicity_ok += zeros == testsupport::count_components(a) ? 1 : 0;
    }
    return {lo >= -1e-9 && hi <= 2 + 1e-9 && multiplicity_ok == 20,
            fmt::format("eigenvalues in [{:.3e}, {:.12f}]; zero multiplicity matches components in {}/20",
                        lo, hi, multiplicity_ok)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testsupport::read_text(e.path());
    return out;
}

std::vector<std::size_t> assignment(const fs::path& dir) {
    std::vector<std::size_t> labels;
    for (const auto& [_, row] : io::parse_csv(testsupport::read_text(dir / pipeline::files::kAssignment)).rows)
        labels.push_back(std::stoul(row.at(1)));
    return labels;
}

Outcome determinism() {
    const auto dir = testsupport::scratch_dir("acceptance_determinism");
    const auto inputs = dir / "inputs";
    if (testsupport::run_cli("synth --spec " + q(kFixture) + " --out " + q(inputs)) != 0) return {false, "synth failed"};
    const auto cfg = inputs / pipeline::files::kSynthConfig;
    const int ra = testsupport::run_cli("run-all --config " + q(cfg) + " --out " + q(dir / "a"));
    const int rb = testsupport::run_cli("run-all --config " + q(cfg) + " --out " + q(dir / "b"));
    if (ra != 0 || rb != 0) return {false, fmt::format("run-all exit codes {} and {}", ra, rb)};
    const auto a = dir_contents(dir / "a");
    const auto b = dir_contents(dir / "b");
    const bool identical = a == b;

    std::istringstream in(testsupport::read_text(inputs / pipeline::files::kSynthPois));
    std::string header;
    std::getline(in, header);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    std::mt19937_64 rng(7);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string shuffled = header + "\n";
    for (const auto& l : lines) shuffled += l + "\n";
    testsupport::write_text(dir / "pois_shuffled.csv", shuffled);
    if (testsupport::run_cli("cluster --config " + q(cfg) + " --out " + q(dir / "c") + " --pois " +
                             q(dir / "pois_shuffled.csv")) != 0)
        return {false, "cluster on permuted POIs failed"};
    const double ari = testsupport::adjusted_rand_index(assignment(dir / "a"), assignment(dir / "c"));

    return {identical && ari == 1.0,
            fmt::format("{} files {}; ARI after POI permutation = {:.6f}", a.size(),
                        identical ? "byte-identical" : "differ", ari)};
}

Outcome weekend_share() {
    const auto dates = temporal::date_range(*temporal::parse_date("2013-03-04"), *temporal::parse_date("2013-04-28"));
    auto series = [&](std::size_t cluster, double weekday, double weekend) {
        temporal::ClusterSeries cs;
        cs.cluster = cluster;
        for (const auto d : dates)
            for (std::int64_t b = 0; b < 24; ++b)
                cs.bins[temporal::first_bin_of(d, {}) + b] = temporal::weekday_index(d) < 5 ? weekday : weekend;
        return cs;
    };
    const std::vector<temporal::ClusterSeries> all{series(1, 4.0, 4.0), series(2, 9.0, 3.0)};
    std::vector<temporal::TemporalProfile> profiles;
    for (const auto& cs : all) profiles.push_back(temporal::typical_profile(cs, dates, {}, {}));
    const auto st = temporal::profile_stats(profiles, all, dates);
    const double uniform = st.at(0).weekend_share;
    const double weighted = st.at(1).weekend_share;
    return {std::abs(uniform - 2.0 / 7.0) <= 1e-12 && weighted < 2.0 / 7.0,
            fmt::format("uniform share - 2/7 = {:.3e}; weekday-weighted share {:.6f}", uniform - 2.0 / 7.0, weighted)};
}

template <class F>
void run(int id, const std::string& name, F f) {
    try {
        report(id, name, f());
    } catch (const std::exception& e) {
        report(id, name, {false, std::string("exception: ") + e.what()});
    }
}

}  // namespace

int main() {
    run(1, "eigengap exactness", eigengap_exactness);
    run(2, "planted-partition recovery", planted_recovery);
    run(3, "silhouette oracle equivalence", silhouette_oracle);
    run(4, "weight normalization", weight_normalization);
    run(5, "mass conservation", mass_conservation);
    run(6, "sigma calibration", sigma_calibration);
    run(7, "normalized Laplacian spectrum", laplacian_bounds);
    run(8, "determinism", determinism);
    run(9, "weekend share", weekend_share);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
