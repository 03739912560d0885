#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "areaprof/activity.hpp"
#include "areaprof/geometry.hpp"
#include "areaprof/temporal.hpp"

namespace areaprof::synth {

struct Archetype {
    activity::CategoryCounts mixture{};  // non-negative, sums to 1
    std::array<double, 24> diurnal{};    // hourly call-rate shape
    std::array<double, 7> weekday{1, 1, 1, 1, 1, 1, 1};  // Monday first
};

enum class PoiSampling { random, exact };

struct Injection {
    temporal::Date date;
    unsigned hour = 0;
    std::size_t archetype = 1;  // 1-based
    double magnitude = 5.0;     // in units of the slot's empirical sigma
};

/// Everything needed to regenerate a synthetic city and its call records.
///
/// Config schema (INI):
///
///     seed = 7
///     [grid]       origin_lon, origin_lat, cell_size, nx, ny
///     [archetypes] count, mix<i> = category:share,...; shape<i> = 24 reals;
///                  weekday<i> = 7 reals (optional)
///     [layout]     blocks_x, blocks_y, assign = archetype ids row-major from the south-west
///     [pois]       per_cell, noise (probability of a uniformly random category),
///                  sampling = random|exact
///     [towers]     nx, ny, jitter (fraction of lattice spacing)
///     [cdr]        start (a date), weeks, rate_scale (calls per hour at shape 1)
///     [anomaly<j>] date, hour, archetype, magnitude
struct SynthSpec {
    std::uint64_t seed = 0;
    geo::LonLat origin{11.10, 46.05};
    double cell_size = 50.0;
    std::size_t grid_nx = 20;
    std::size_t grid_ny = 10;
    std::vector<Archetype> archetypes;
    std::size_t blocks_x = 1;
    std::size_t blocks_y = 1;
    std::vector<std::size_t> block_archetype;  // 1-based ids, row-major
    double pois_per_cell = 20.0;
    double poi_noise = 0.0;
    PoiSampling poi_sampling = PoiSampling::random;
    std::size_t towers_x = 4;
    std::size_t towers_y = 2;
    double tower_jitter = 0.25;
    temporal::Date cdr_start;
    std::size_t weeks = 4;
    double rate_scale = 50.0;
    std::vector<Injection> injections;

    /// Throws InputError for any violated invariant.
    void validate() const;
    static SynthSpec load(const std::filesystem::path& path);
    static SynthSpec parse(std::string_view ini_text);
};

struct PoiRow {
    std::string id;
    geo::LonLat location;
    std::string poi_type;
};

struct TowerRow {
    std::string id;
    geo::LonLat location;
};

struct City {
    geo::LonLatBox bbox;
    geo::StudyFrame frame;
    std::vector<std::size_t> planted;  // archetype id (1-based) per grid cell
    std::vector<PoiRow> pois;
    std::vector<TowerRow> towers;
};

/// POIs drawn per cell from its block's archetype; towers on a jittered lattice.
City gen_city(const SynthSpec& spec);

/// Planar tower sites for coverage computation.
std::vector<geo::Tower> tower_sites(const City& city);

/// Poisson call records per tower and hour, with injected spikes. Records
/// are ordered by (timestamp, tower).
std::vector<temporal::CdrRecord> gen_cdr(const SynthSpec& spec, const City& city,
                                         std::span<const geo::TowerCoverage> coverage);

std::string pois_csv(const City& city);
std::string towers_csv(const City& city);
std::string cdr_csv(std::span<const temporal::CdrRecord> records);

}  // namespace areaprof::synth
