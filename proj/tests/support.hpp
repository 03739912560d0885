#pragma once

// Helpers shared by the test binaries. Everything here is written
// independently of the library code it is used to check.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "areaprof/activity.hpp"
#include "areaprof/synth.hpp"
#include "areaprof/temporal.hpp"

namespace testsupport {

inline double choose2(double n) { return n * (n - 1) / 2.0; }

/// Adjusted Rand Index from the contingency table (Hubert and Arabie).
inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> ra;
    std::map<std::size_t, double> rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    double index = 0;
    for (const auto& [_, n] : joint) index += choose2(n);
    double sa = 0;
    double sb = 0;
    for (const auto& [_, n] : ra) sa += choose2(n);
    for (const auto& [_, n] : rb) sb += choose2(n);
    const double total = choose2(static_cast<double>(a.size()));
    const double expected = sa * sb / total;
    const double max_index = (sa + sb) / 2.0;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

/// Fresh, empty scratch directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("areaprof_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the CLI binary, discarding its output; returns the exit status.
inline int run_cli(const std::string& args) {
    const std::string cmd = std::string(AREAPROF_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

/// Random symmetric adjacency made of `components` blocks, each a connected
/// graph: a random spanning path plus extra random edges with random weights.
inline Eigen::MatrixXd planted_components(std::size_t components, std::size_t block_size, std::mt19937_64& rng,
                                          double extra_edge_prob = 0.3) {
    const std::size_t n = components * block_size;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::bernoulli_distribution extra(extra_edge_prob);
    for (std::size_t c = 0; c < components; ++c) {
        std::vector<std::size_t> order(block_size);
        for (std::size_t i = 0; i < block_size; ++i) order[i] = c * block_size + i;
        std::shuffle(order.begin(), order.end(), rng);
        auto link = [&](std::size_t i, std::size_t j, double w) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
            a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
        };
        for (std::size_t i = 0; i + 1 < block_size; ++i) link(order[i], order[i + 1], weight(rng));
        for (std::size_t i = 0; i < block_size; ++i)
            for (std::size_t j = i + 2; j < block_size; ++j)
                if (extra(rng)) link(order[i], order[j], weight(rng));
    }
    return a;
}

/// Connected components by union-find over a dense adjacency.
inline std::size_t count_components(const Eigen::MatrixXd& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0) parent[find(i)] = find(j);
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (find(i) == i) ++roots;
    return roots;
}

/// Random sparse-ish graph with no isolated nodes; component count varies.
inline Eigen::MatrixXd random_graph(std::size_t n, double edge_prob, std::mt19937_64& rng) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::bernoulli_distribution edge(edge_prob);
    std::uniform_real_distribution<double> weight(0.05, 2.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (edge(rng)) {
                const double w = weight(rng);
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
                a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
            }
    for (std::size_t i = 0; i < n; ++i) {
        if (a.row(static_cast<Eigen::Index>(i)).sum() > 0) continue;
        std::size_t j = pick(rng);
        while (j == i) j = pick(rng);
        const double w = weight(rng);
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
    }
    return a;
}

/// Category counts per grid cell of a synthetic city, via the public API.
inline std::vector<areaprof::activity::CategoryCounts> city_counts(const areaprof::synth::City& city) {
    const auto taxonomy = areaprof::activity::Taxonomy::builtin();
    std::vector<areaprof::activity::PlacedPoi> placed;
    for (const auto& poi : city.pois) {
        const auto category = taxonomy.categorize(poi.poi_type);
        if (!category) continue;
        placed.push_back({city.frame.projection.project(poi.location), *category});
    }
    return areaprof::activity::populate_grid(placed, city.frame.grid).cells;
}

/// Synthetic calls for `city`, binned and allocated by planted archetype.
struct PlantedSeries {
    std::vector<areaprof::temporal::CdrRecord> records;
    std::vector<areaprof::temporal::TowerSeries> towers;
    areaprof::temporal::Allocation allocation;
    std::vector<areaprof::temporal::Date> dates;
};

inline PlantedSeries planted_series(const areaprof::synth::SynthSpec& spec, const areaprof::synth::City& city,
                                    areaprof::temporal::AllocationMode mode =
                                        areaprof::temporal::AllocationMode::conserving) {
    using namespace areaprof;
    PlantedSeries out;
    const auto coverage = geo::compute_coverage(synth::tower_sites(city), city.frame.grid);
    out.records = synth::gen_cdr(spec, city, coverage);
    out.towers = temporal::bin_counts(out.records, {});
    out.allocation = temporal::allocate(out.towers, coverage, city.planted, mode);
    out.dates = temporal::date_range(spec.cdr_start,
                                     spec.cdr_start + std::chrono::days{7 * static_cast<int>(spec.weeks) - 1});
    return out;
}

inline const areaprof::temporal::ClusterSeries& series_of(const areaprof::temporal::Allocation& a,
                                                           std::size_t cluster) {
    for (const auto& cs : a.clusters)
        if (cs.cluster == cluster) return cs;
    throw std::runtime_error("no series for cluster " + std::to_string(cluster));
}

}  // namespace testsupport
