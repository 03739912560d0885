#include "areaprof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "areaprof/errors.hpp"
#include "areaprof/io.hpp"

namespace areaprof::synth {

namespace pt = boost::property_tree;
using activity::ActivityCategory;
using activity::kCategoryCount;

namespace {

// POI type tags emitted per category; all are mapped by the seed taxonomy.
const std::array<std::vector<std::string>, kCategoryCount> kPoiTypes{{
    {"restaurant", "cafe", "fast_food", "food_court"},
    {"supermarket", "grocery", "general_store"},
    {"pharmacy", "hospital"},
    {"bar", "cinema", "theatre", "casino"},
    {"school", "university", "library"},
    {"bus_station", "train_station", "parking", "airport"},
    {"attraction", "viewpoint", "place_of_worship", "hairdresser"},
    {"sports_centre", "ski_resort", "motor_racing"},
    {"office", "industrial"},
    {"residential", "hotel", "hostel", "guest_house"},
}};

std::vector<double> parse_reals(const std::string& text, std::string_view what) {
    std::vector<double> out;
    for (auto f : io::split(text)) {
        const auto v = io::parse_double(f);
        if (!v) throw InputError(fmt::format("synth spec: `{}` has a non-numeric entry `{}`", what, f));
        out.push_back(*v);
    }
    return out;
}

template <typename T>
T get_required(const pt::ptree& tree, const std::string& key) {
    try {
        return tree.get<T>(key);
    } catch (const pt::ptree_error&) {
        throw InputError(fmt::format("synth spec: missing or invalid `{}`", key));
    }
}

template <typename T>
T get_or(const pt::ptree& tree, const std::string& key, T fallback) {
    try {
        return tree.get<T>(key, fallback);
    } catch (const pt::ptree_error&) {
        throw InputError(fmt::format("synth spec: invalid `{}`", key));
    }
}

activity::CategoryCounts parse_mixture(const std::string& text, std::string_view what) {
    activity::CategoryCounts mix{};
    for (auto entry : io::split(text)) {
        const auto colon = entry.find(':');
        if (colon == std::string_view::npos) {
            throw InputError(fmt::format("synth spec: `{}` entries must be category:share", what));
        }
        const auto cat = activity::parse_category(io::trim(entry.substr(0, colon)));
        const auto share = io::parse_double(entry.substr(colon + 1));
        if (!cat || !share) throw InputError(fmt::format("synth spec: bad mixture entry `{}`", entry));
        mix[activity::index_of(*cat)] += *share;
    }
    return mix;
}

/// Apportions `total` items over `shares` by largest remainder.
std::array<std::size_t, kCategoryCount> apportion(std::size_t total, const activity::CategoryCounts& shares) {
    std::array<std::size_t, kCategoryCount> counts{};
    std::array<std::pair<double, std::size_t>, kCategoryCount> remainders{};
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < kCategoryCount; ++j) {
        const double exact = shares[j] * static_cast<double>(total);
        counts[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += counts[j];
        remainders[j] = {exact - static_cast<double>(counts[j]), j};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    for (std::size_t i = 0; assigned < total && i < kCategoryCount; ++i, ++assigned) ++counts[remainders[i].second];
    return counts;
}

double meters_per_degree() { return geo::kEarthRadiusM * std::numbers::pi / 180.0; }

}  // namespace

void SynthSpec::validate() const {
    auto fail = [](std::string msg) { throw InputError("synth spec: " + msg); };
    if (!(cell_size > 0.0)) fail("cell_size must be positive");
    if (grid_nx == 0 || grid_ny == 0) fail("grid dimensions must be positive");
    geo::validate_lonlat(origin);
    if (archetypes.empty()) fail("at least one archetype is required");
    for (std::size_t a = 0; a < archetypes.size(); ++a) {
        double sum = 0.0;
        for (double v : archetypes[a].mixture) {
            if (v < 0.0) fail(fmt::format("archetype {} has a negative share", a + 1));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) fail(fmt::format("archetype {} mixture sums to {}, not 1", a + 1, sum));
        for (double v : archetypes[a].diurnal) {
            if (!(v >= 0.0)) fail(fmt::format("archetype {} has a negative diurnal value", a + 1));
        }
        for (double v : archetypes[a].weekday) {
            if (!(v >= 0.0)) fail(fmt::format("archetype {} has a negative weekday factor", a + 1));
        }
    }
    if (blocks_x == 0 || blocks_y == 0 || blocks_x > grid_nx || blocks_y > grid_ny) {
        fail("block layout must be non-empty and no finer than the grid");
    }
    if (block_archetype.size() != blocks_x * blocks_y) {
        fail(fmt::format("layout assigns {} blocks, expected {}", block_archetype.size(), blocks_x * blocks_y));
    }
    for (auto id : block_archetype) {
        if (id == 0 || id > archetypes.size()) fail(fmt::format("layout references unknown archetype {}", id));
    }
    if (!(pois_per_cell >= 0.0)) fail("pois per_cell must be non-negative");
    if (!(poi_noise >= 0.0 && poi_noise <= 1.0)) fail("poi noise must lie in [0, 1]");
    if (towers_x == 0 || towers_y == 0) fail("at least one tower is required");
    if (!(tower_jitter >= 0.0 && tower_jitter < 1.0)) fail("tower jitter must lie in [0, 1)");
    if (weeks == 0) fail("weeks must be positive");
    if (!(rate_scale >= 0.0)) fail("rate_scale must be non-negative");
    const auto end = cdr_start + std::chrono::days{static_cast<long>(7 * weeks)};
    for (const auto& inj : injections) {
        if (inj.archetype == 0 || inj.archetype > archetypes.size()) {
            fail(fmt::format("anomaly references unknown region (archetype {})", inj.archetype));
        }
        if (inj.hour > 23) fail("anomaly hour must be 0..23");
        if (inj.date < cdr_start || inj.date >= end) fail("anomaly date lies outside the CDR period");
        if (!(inj.magnitude > 0.0)) fail("anomaly magnitude must be positive");
    }
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

SynthSpec SynthSpec::parse(std::string_view ini_text) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(ini_text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ptree_error& e) {
        throw InputError(fmt::format("synth spec: {}", e.what()));
    }
    SynthSpec spec;
    spec.seed = get_or<std::uint64_t>(tree, "seed", 0);
    spec.origin = {get_or(tree, "grid.origin_lon", spec.origin.lon), get_or(tree, "grid.origin_lat", spec.origin.lat)};
    spec.cell_size = get_or(tree, "grid.cell_size", spec.cell_size);
    spec.grid_nx = get_required<std::size_t>(tree, "grid.nx");
    spec.grid_ny = get_required<std::size_t>(tree, "grid.ny");

    const auto count = get_required<std::size_t>(tree, "archetypes.count");
    for (std::size_t a = 1; a <= count; ++a) {
        Archetype arch;
        const auto mix_key = fmt::format("archetypes.mix{}", a);
        arch.mixture = parse_mixture(get_required<std::string>(tree, mix_key), mix_key);
        const auto shape_key = fmt::format("archetypes.shape{}", a);
        if (const auto shape = tree.get_optional<std::string>(shape_key)) {
            const auto values = parse_reals(*shape, shape_key);
            if (values.size() != 24) throw InputError(fmt::format("synth spec: `{}` needs 24 values", shape_key));
            std::copy(values.begin(), values.end(), arch.diurnal.begin());
        } else {
            arch.diurnal.fill(1.0);
        }
        const auto weekday_key = fmt::format("archetypes.weekday{}", a);
        if (const auto weekday = tree.get_optional<std::string>(weekday_key)) {
            const auto values = parse_reals(*weekday, weekday_key);
            if (values.size() != 7) throw InputError(fmt::format("synth spec: `{}` needs 7 values", weekday_key));
            std::copy(values.begin(), values.end(), arch.weekday.begin());
        }
        spec.archetypes.push_back(arch);
    }

    spec.blocks_x = get_or<std::size_t>(tree, "layout.blocks_x", 1);
    spec.blocks_y = get_or<std::size_t>(tree, "layout.blocks_y", 1);
    for (double v : parse_reals(get_or<std::string>(tree, "layout.assign", "1"), "layout.assign")) {
        if (v < 1.0 || v != std::floor(v)) throw InputError("synth spec: layout.assign needs positive integer ids");
        spec.block_archetype.push_back(static_cast<std::size_t>(v));
    }

    spec.pois_per_cell = get_or(tree, "pois.per_cell", spec.pois_per_cell);
    spec.poi_noise = get_or(tree, "pois.noise", spec.poi_noise);
    const auto sampling = get_or<std::string>(tree, "pois.sampling", "random");
    if (sampling == "random") {
        spec.poi_sampling = PoiSampling::random;
    } else if (sampling == "exact") {
        spec.poi_sampling = PoiSampling::exact;
    } else {
        throw InputError(fmt::format("synth spec: unknown pois.sampling `{}`", sampling));
    }

    spec.towers_x = get_or(tree, "towers.nx", spec.towers_x);
    spec.towers_y = get_or(tree, "towers.ny", spec.towers_y);
    spec.tower_jitter = get_or(tree, "towers.jitter", spec.tower_jitter);

    const auto start = temporal::parse_date(get_or<std::string>(tree, "cdr.start", "2013-03-04"));
    if (!start) throw InputError("synth spec: cdr.start must be YYYY-MM-DD");
    spec.cdr_start = *start;
    spec.weeks = get_or(tree, "cdr.weeks", spec.weeks);
    spec.rate_scale = get_or(tree, "cdr.rate_scale", spec.rate_scale);

    for (const auto& [name, section] : tree) {
        if (!name.starts_with("anomaly")) continue;
        Injection inj;
        const auto date = temporal::parse_date(get_required<std::string>(section, "date"));
        if (!date) throw InputError(fmt::format("synth spec: [{}] date must be YYYY-MM-DD", name));
        inj.date = *date;
        inj.hour = get_required<unsigned>(section, "hour");
        inj.archetype = get_required<std::size_t>(section, "archetype");
        inj.magnitude = get_or(section, "magnitude", inj.magnitude);
        spec.injections.push_back(inj);
    }
    spec.validate();
    return spec;
}

City gen_city(const SynthSpec& spec) {
    spec.validate();
    const double width = spec.cell_size * static_cast<double>(spec.grid_nx);
    const double height = spec.cell_size * static_cast<double>(spec.grid_ny);
    const double lat_max = spec.origin.lat + height / meters_per_degree();
    const double ref = 0.5 * (spec.origin.lat + lat_max);
    const double lon_max =
        spec.origin.lon + width / (meters_per_degree() * std::cos(ref * std::numbers::pi / 180.0));
    const geo::LonLatBox bbox{spec.origin.lon, spec.origin.lat, lon_max, lat_max};
    City city{bbox, geo::frame_from_bbox(bbox, spec.cell_size), {}, {}, {}};
    const auto& grid = city.frame.grid;
    if (grid.nx() != spec.grid_nx || grid.ny() != spec.grid_ny) {
        throw InputError("synth: generated bbox does not reproduce the requested grid");
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    city.planted.resize(grid.cell_count());
    std::size_t next_id = 1;
    for (std::size_t id = 0; id < grid.cell_count(); ++id) {
        const std::size_t col = id % grid.nx();
        const std::size_t row = id / grid.nx();
        const std::size_t bcol = col * spec.blocks_x / grid.nx();
        const std::size_t brow = row * spec.blocks_y / grid.ny();
        const std::size_t arch_id = spec.block_archetype[brow * spec.blocks_x + bcol];
        city.planted[id] = arch_id;
        const auto& arch = spec.archetypes[arch_id - 1];

        std::vector<std::size_t> categories;
        if (spec.poi_sampling == PoiSampling::exact) {
            activity::CategoryCounts shares{};
            for (std::size_t j = 0; j < kCategoryCount; ++j) {
                shares[j] = (1.0 - spec.poi_noise) * arch.mixture[j] + spec.poi_noise / kCategoryCount;
            }
            const auto counts = apportion(static_cast<std::size_t>(std::llround(spec.pois_per_cell)), shares);
            for (std::size_t j = 0; j < kCategoryCount; ++j) categories.insert(categories.end(), counts[j], j);
        } else {
            const auto n = spec.pois_per_cell > 0.0 ? std::poisson_distribution<int>(spec.pois_per_cell)(rng) : 0;
            std::discrete_distribution<std::size_t> pick(arch.mixture.begin(), arch.mixture.end());
            std::uniform_int_distribution<std::size_t> any(0, kCategoryCount - 1);
            for (int i = 0; i < n; ++i) {
                categories.push_back(unit(rng) < spec.poi_noise ? any(rng) : pick(rng));
            }
        }

        const geo::Rect cell = grid.cell_bounds(id);
        for (std::size_t j : categories) {
            const geo::PlanarPoint p{cell.min_x + (0.05 + 0.9 * unit(rng)) * spec.cell_size,
                                     cell.min_y + (0.05 + 0.9 * unit(rng)) * spec.cell_size};
            const auto& types = kPoiTypes[j];
            const std::size_t t = spec.poi_sampling == PoiSampling::exact
                                      ? 0
                                      : std::min(types.size() - 1, static_cast<std::size_t>(unit(rng) * types.size()));
            city.pois.push_back({std::to_string(next_id++), city.frame.projection.unproject(p), types[t]});
        }
    }

    const double sx = width / static_cast<double>(spec.towers_x);
    const double sy = height / static_cast<double>(spec.towers_y);
    for (std::size_t j = 0; j < spec.towers_y; ++j) {
        for (std::size_t i = 0; i < spec.towers_x; ++i) {
            const double jx = spec.tower_jitter * (unit(rng) - 0.5) * sx;
            const double jy = spec.tower_jitter * (unit(rng) - 0.5) * sy;
            const geo::PlanarPoint site{(static_cast<double>(i) + 0.5) * sx + jx, (static_cast<double>(j) + 0.5) * sy + jy};
            city.towers.push_back({fmt::format("T{:03d}", j * spec.towers_x + i + 1), city.frame.projection.unproject(site)});
        }
    }
    return city;
}

std::vector<geo::Tower> tower_sites(const City& city) {
    std::vector<geo::Tower> out;
    for (const auto& t : city.towers) out.push_back({t.id, city.frame.projection.project(t.location)});
    return out;
}

std::vector<temporal::CdrRecord> gen_cdr(const SynthSpec& spec, const City& city,
                                         std::span<const geo::TowerCoverage> coverage) {
    spec.validate();
    const std::size_t towers = coverage.size();
    const std::size_t days = 7 * spec.weeks;
    const std::size_t hours = 24 * days;
    const std::size_t archetypes = spec.archetypes.size();

    // Share of each tower's coverage inside each archetype region.
    std::vector<std::vector<double>> region_share(towers, std::vector<double>(archetypes + 1, 0.0));
    for (std::size_t t = 0; t < towers; ++t) {
        for (const auto& cw : coverage[t].cell_weights) region_share[t][city.planted.at(cw.cell_id)] += cw.weight;
    }

    std::seed_seq seq{spec.seed, std::uint64_t{0xC0FFEE}};
    std::mt19937_64 rng(seq);
    std::vector<std::vector<std::uint32_t>> counts(towers, std::vector<std::uint32_t>(hours, 0));
    for (std::size_t h = 0; h < hours; ++h) {
        const std::size_t day = h / 24;
        const std::size_t hour = h % 24;
        const unsigned dow = temporal::weekday_index(spec.cdr_start + std::chrono::days{static_cast<long>(day)});
        for (std::size_t t = 0; t < towers; ++t) {
            double rate = 0.0;
            for (const auto& cw : coverage[t].cell_weights) {
                const auto& arch = spec.archetypes[city.planted[cw.cell_id] - 1];
                rate += cw.weight * arch.diurnal[hour] * arch.weekday[dow];
            }
            rate *= spec.rate_scale;
            if (rate > 0.0) counts[t][h] = static_cast<std::uint32_t>(std::poisson_distribution<long>(rate)(rng));
        }
    }

    std::set<std::size_t> injected_days;
    for (const auto& inj : spec.injections) {
        injected_days.insert(static_cast<std::size_t>((inj.date - spec.cdr_start).count()));
    }
    for (const auto& inj : spec.injections) {
        const auto day = static_cast<std::size_t>((inj.date - spec.cdr_start).count());
        auto region_volume = [&](std::size_t h) {
            double v = 0.0;
            for (std::size_t t = 0; t < towers; ++t) v += counts[t][h] * region_share[t][inj.archetype];
            return v;
        };
        std::vector<double> samples;
        for (std::size_t d = day % 7; d < days; d += 7) {
            if (!injected_days.contains(d)) samples.push_back(region_volume(24 * d + inj.hour));
        }
        if (samples.size() < 2) throw InputError("synth: anomaly slot needs at least two clean weeks");
        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(samples.size());
        double ss = 0.0;
        for (double v : samples) ss += (v - mean) * (v - mean);
        const double sigma = std::sqrt(ss / static_cast<double>(samples.size() - 1));

        std::size_t best = towers;
        for (std::size_t t = 0; t < towers; ++t) {
            if (region_share[t][inj.archetype] > 0.0 &&
                (best == towers || region_share[t][inj.archetype] > region_share[best][inj.archetype])) {
                best = t;
            }
        }
        if (best == towers) throw InputError("synth: anomaly region is not covered by any tower");
        const std::size_t h = 24 * day + inj.hour;
        // Lift the region's volume in this slot to mean + magnitude * sigma.
        const double missing = mean + inj.magnitude * sigma - region_volume(h);
        if (missing > 0.0) {
            counts[best][h] += static_cast<std::uint32_t>(std::ceil(missing / region_share[best][inj.archetype]));
        }
    }

    std::vector<temporal::CdrRecord> records;
    std::uniform_int_distribution<int> second(0, 3599);
    std::exponential_distribution<double> duration(1.0 / 90.0);
    const auto start = static_cast<temporal::Timestamp>(spec.cdr_start.time_since_epoch().count()) * 86400;
    for (std::size_t h = 0; h < hours; ++h) {
        for (std::size_t t = 0; t < towers; ++t) {
            for (std::uint32_t c = 0; c < counts[t][h]; ++c) {
                const auto ts = start + static_cast<temporal::Timestamp>(h) * 3600 + second(rng);
                records.push_back({coverage[t].tower_id, ts, std::round(duration(rng))});
            }
        }
    }
    std::stable_sort(records.begin(), records.end(), [](const auto& l, const auto& r) {
        return std::tie(l.timestamp, l.tower_id) < std::tie(r.timestamp, r.tower_id);
    });
    return records;
}

std::string pois_csv(const City& city) {
    std::string out = "id,lon,lat,poi_type\n";
    for (const auto& p : city.pois) {
        out += fmt::format("{},{},{},{}\n", p.id, io::format_double(p.location.lon), io::format_double(p.location.lat),
                           p.poi_type);
    }
    return out;
}

std::string towers_csv(const City& city) {
    std::string out = "tower_id,lon,lat\n";
    for (const auto& t : city.towers) {
        out += fmt::format("{},{},{}\n", t.id, io::format_double(t.location.lon), io::format_double(t.location.lat));
    }
    return out;
}

std::string cdr_csv(std::span<const temporal::CdrRecord> records) {
    std::string out = "tower_id,timestamp,duration_s\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{}\n", r.tower_id, temporal::format_timestamp(r.timestamp),
                           static_cast<long long>(r.duration_s));
    }
    return out;
}

}  // namespace areaprof::synth
