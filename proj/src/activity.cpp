#include "areaprof/activity.hpp"

#include <cmath>

#include <fmt/format.h>

#include "areaprof/errors.hpp"
#include "areaprof/io.hpp"

namespace areaprof::activity {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames{
    "eating",    "shopping", "health_medicine", "entertainment", "education",
    "transport", "outdoor",  "sporting",        "working",       "residential",
};

constexpr std::string_view kBuiltinTaxonomy =
    "poi_type,category\n"
    "fast_food,eating\n"
    "food_court,eating\n"
    "restaurant,eating\n"
    "cafe,eating\n"
    "grocery,shopping\n"
    "general_store,shopping\n"
    "supermarket,shopping\n"
    "hospital,health_medicine\n"
    "pharmacy,health_medicine\n"
    "bar,entertainment\n"
    "casino,entertainment\n"
    "cinema,entertainment\n"
    "theatre,entertainment\n"
    "library,education\n"
    "university,education\n"
    "school,education\n"
    "airport,transport\n"
    "bus_station,transport\n"
    "parking,transport\n"
    "train_station,transport\n"
    "attraction,outdoor\n"
    "viewpoint,outdoor\n"
    "hairdresser,outdoor\n"
    "place_of_worship,outdoor\n"
    "motor_racing,sporting\n"
    "sports_centre,sporting\n"
    "ski_resort,sporting\n"
    "office,working\n"
    "industrial,working\n"
    "guest_house,residential\n"
    "hotel,residential\n"
    "hostel,residential\n"
    "residential,residential\n"
    "bench,DISCARD\n"
    "waste_basket,DISCARD\n"
    "post_box,DISCARD\n"
    "vending_machine,DISCARD\n"
    ;

}  // namespace

std::string_view category_name(ActivityCategory c) { return kCategoryNames.at(index_of(c)); }

std::optional<ActivityCategory> parse_category(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<ActivityCategory>(i);
    }
    return std::nullopt;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

Taxonomy Taxonomy::parse(std::string_view csv_text) {
    const auto table = io::parse_csv(csv_text);
    io::require_header(table, {"poi_type", "category"}, "taxonomy");
    Taxonomy tax;
    for (const auto& [line, fields] : table.rows) {
        if (fields.size() != 2 || fields[0].empty()) {
            throw InputError(fmt::format("taxonomy line {}: expected `poi_type,category`", line));
        }
        if (tax.is_known(fields[0])) {
            throw InputError(fmt::format("taxonomy line {}: `{}` listed twice", line, fields[0]));
        }
        if (fields[1] == "DISCARD") {
            tax.discard(fields[0]);
            continue;
        }
        const auto cat = parse_category(fields[1]);
        if (!cat) {
            throw InputError(fmt::format("taxonomy line {}: unknown category `{}`", line, fields[1]));
        }
        tax.add(fields[0], *cat);
    }
    return tax;
}

Taxonomy Taxonomy::builtin() { return parse(kBuiltinTaxonomy); }

void Taxonomy::add(std::string poi_type, ActivityCategory category) {
    mapping_.insert_or_assign(std::move(poi_type), category);
}

void Taxonomy::discard(std::string poi_type) { discarded_.insert(std::move(poi_type)); }

std::optional<ActivityCategory> Taxonomy::categorize(std::string_view poi_type) const {
    const auto it = mapping_.find(std::string(poi_type));
    if (it == mapping_.end()) return std::nullopt;
    return it->second;
}

bool Taxonomy::is_discarded(std::string_view poi_type) const {
    return discarded_.contains(std::string(poi_type));
}

bool Taxonomy::is_known(std::string_view poi_type) const {
    return mapping_.contains(std::string(poi_type)) || is_discarded(poi_type);
}

PoiParseResult parse_pois(std::string_view csv_text, const Taxonomy& taxonomy) {
    const auto table = io::parse_csv(csv_text);
    io::require_header(table, {"id", "lon", "lat", "poi_type"}, "POI file");
    PoiParseResult result;
    auto& rep = result.report;
    auto reject = [&](std::size_t line, std::string msg) {
        ++rep.malformed;
        rep.issues.push_back({line, std::move(msg)});
    };
    for (const auto& [line, f] : table.rows) {
        if (f.size() != 4) {
            reject(line, fmt::format("expected 4 fields, got {}", f.size()));
            continue;
        }
        const auto lon = io::parse_double(f[1]);
        const auto lat = io::parse_double(f[2]);
        if (f[0].empty() || !lon || !lat) {
            reject(line, "missing id or non-numeric coordinate");
            continue;
        }
        try {
            geo::validate_lonlat({*lon, *lat});
        } catch (const InputError& e) {
            reject(line, e.what());
            continue;
        }
        if (f[3].empty()) {
            reject(line, "empty poi_type");
            continue;
        }
        if (taxonomy.is_discarded(f[3])) {
            ++rep.discarded;
            continue;
        }
        const auto cat = taxonomy.categorize(f[3]);
        if (!cat) {
            ++rep.unknown_type;
            continue;
        }
        ++rep.accepted;
        result.records.push_back({f[0], {*lon, *lat}, f[3], *cat});
    }
    return result;
}

PoiParseResult parse_pois_file(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    return parse_pois(io::read_file(path), taxonomy);
}

double CountMatrix::total() const {
    double t = 0.0;
    for (const auto& row : cells) {
        for (double v : row) t += v;
    }
    return t;
}

CountMatrix populate_grid(std::span<const PlacedPoi> pois, const geo::Grid& grid) {
    CountMatrix m;
    m.cells.assign(grid.cell_count(), CategoryCounts{});
    for (const auto& poi : pois) {
        const auto cell = grid.cell_of(poi.point);
        if (!cell) {
            ++m.outside;
            continue;
        }
        m.cells[*cell][index_of(poi.category)] += 1.0;
    }
    return m;
}

TfIdfResult tfidf(std::span<const CategoryCounts> counts) {
    TfIdfResult out;
    std::array<std::size_t, kCategoryCount> doc_freq{};
    for (const auto& row : counts) {
        double total = 0.0;
        for (double v : row) {
            if (v < 0.0 || !std::isfinite(v)) throw InputError("negative or non-finite POI count");
            total += v;
        }
        if (total <= 0.0) continue;
        ++out.nonempty_cells;
        for (std::size_t j = 0; j < kCategoryCount; ++j) {
            if (row[j] > 0.0) ++doc_freq[j];
        }
    }
    if (out.nonempty_cells == 0) throw InputError("every grid cell is empty; nothing to profile");

    const double n = static_cast<double>(out.nonempty_cells);
    for (std::size_t j = 0; j < kCategoryCount; ++j) {
        out.idf[j] = doc_freq[j] > 0 ? std::log(n / static_cast<double>(doc_freq[j])) : 0.0;
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto& row = counts[i];
        double total = 0.0;
        for (double v : row) total += v;
        if (total <= 0.0) continue;
        ActivityVector vec{i, {}};
        bool nonzero = false;
        for (std::size_t j = 0; j < kCategoryCount; ++j) {
            vec.weights[j] = (row[j] / total) * out.idf[j];
            nonzero = nonzero || vec.weights[j] > 0.0;
        }
        if (nonzero) {
            out.vectors.push_back(vec);
        } else {
            out.zero_vector_cells.push_back(i);
        }
    }
    return out;
}

}  // namespace areaprof::activity
