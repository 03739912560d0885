#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "areaprof/geometry.hpp"

namespace areaprof::activity {

/// Top-level human-activity classes a POI type maps onto.
enum class ActivityCategory : std::size_t {
    eating,
    shopping,
    health_medicine,
    entertainment,
    education,
    transport,
    outdoor,
    sporting,
    working,
    residential,
};

inline constexpr std::size_t kCategoryCount = 10;

std::string_view category_name(ActivityCategory c);
std::optional<ActivityCategory> parse_category(std::string_view name);
inline std::size_t index_of(ActivityCategory c) { return static_cast<std::size_t>(c); }

/// poi_type -> category lookup plus a discard set of irrelevant types.
class Taxonomy {
public:
    Taxonomy() = default;

    /// Reads `poi_type,category` rows; `DISCARD` as the category adds the
    /// type to the discard set. Throws InputError on unreadable files,
    /// unknown categories, or a type mapped twice.
    static Taxonomy load(const std::filesystem::path& path);
    static Taxonomy parse(std::string_view csv_text);

    /// Built-in seed mapping with the exemplar types of each category.
    static Taxonomy builtin();

    void add(std::string poi_type, ActivityCategory category);
    void discard(std::string poi_type);

    /// nullopt for discarded and unknown types.
    std::optional<ActivityCategory> categorize(std::string_view poi_type) const;
    bool is_discarded(std::string_view poi_type) const;
    bool is_known(std::string_view poi_type) const;
    std::size_t size() const { return mapping_.size(); }

private:
    std::unordered_map<std::string, ActivityCategory> mapping_;
    std::unordered_set<std::string> discarded_;
};

struct PoiRecord {
    std::string id;
    geo::LonLat location;
    std::string poi_type;
    ActivityCategory category = ActivityCategory::eating;
};

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct PoiParseReport {
    std::size_t accepted = 0;
    std::size_t discarded = 0;
    std::size_t unknown_type = 0;
    std::size_t malformed = 0;
    std::vector<ParseIssue> issues;
};

struct PoiParseResult {
    std::vector<PoiRecord> records;
    PoiParseReport report;
};

/// Parses `id,lon,lat,poi_type` CSV text. Discarded and unknown types are
/// counted and skipped; malformed rows are reported, never fatal.
PoiParseResult parse_pois(std::string_view csv_text, const Taxonomy& taxonomy);
PoiParseResult parse_pois_file(const std::filesystem::path& path, const Taxonomy& taxonomy);

using CategoryCounts = std::array<double, kCategoryCount>;

struct CountMatrix {
    std::vector<CategoryCounts> cells;  // indexed by grid cell id
    std::size_t outside = 0;            // POIs that fell outside the grid
    double total() const;
};

struct PlacedPoi {
    geo::PlanarPoint point;
    ActivityCategory category = ActivityCategory::eating;
};

CountMatrix populate_grid(std::span<const PlacedPoi> pois, const geo::Grid& grid);

struct ActivityVector {
    std::size_t cell_id = 0;
    CategoryCounts weights{};
};

struct TfIdfResult {
    std::vector<ActivityVector> vectors;  // ascending cell id, all-zero rows dropped
    CategoryCounts idf{};
    std::size_t nonempty_cells = 0;
    /// Nonempty cells whose weighted vector is all zero.
    std::vector<std::size_t> zero_vector_cells;
};

/// tf = within-cell share, idf = ln(|nonempty cells| / document frequency).
/// Throws InputError when every cell is empty.
TfIdfResult tfidf(std::span<const CategoryCounts> counts);

}  // namespace areaprof::activity
