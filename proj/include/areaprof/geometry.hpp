#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace areaprof::geo {

/// Mean Earth radius used by the equirectangular projection.
inline constexpr double kEarthRadiusM = 6371000.0;

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

/// Meters east/north of the study-area origin.
struct PlanarPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Equirectangular projection scaled at a fixed reference latitude.
///
/// x = R * (lon - lon0) * cos(lat_ref) * pi/180
/// y = R * (lat - lat0) * pi/180
class Projection {
public:
    /// Throws InputError for out-of-range coordinates.
    Projection(LonLat origin, double reference_lat);

    const LonLat& origin() const { return origin_; }
    double reference_lat() const { return reference_lat_; }

    PlanarPoint project(LonLat p) const;
    LonLat unproject(PlanarPoint p) const;

private:
    LonLat origin_;
    double reference_lat_;
    double meters_per_deg_lon_;
    double meters_per_deg_lat_;
};

void validate_lonlat(LonLat p);

/// Axis-aligned rectangle [min_x, max_x] x [min_y, max_y].
struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return width() * height(); }
    bool contains(PlanarPoint p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

/// Convex polygon with counter-clockwise vertices and strictly positive area.
///
/// The constructor normalizes orientation, drops repeated and collinear
/// vertices, and throws GeometryError when the result is degenerate or
/// not convex.
class ConvexPolygon {
public:
    explicit ConvexPolygon(std::vector<PlanarPoint> vertices);
    static ConvexPolygon from_rect(const Rect& r);

    std::span<const PlanarPoint> vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    Rect bounds() const;
    bool contains(PlanarPoint p, double tol = 1e-9) const;

private:
    std::vector<PlanarPoint> vertices_;
};

/// Signed shoelace area of an arbitrary vertex ring.
double signed_area(std::span<const PlanarPoint> ring);

/// Shoelace area; always > 0 for a valid polygon.
double polygon_area(const ConvexPolygon& poly);

/// Clips `ring` to the half-plane a*x + b*y <= c (Sutherland-Hodgman step).
std::vector<PlanarPoint> clip_half_plane(std::span<const PlanarPoint> ring, double a, double b,
                                         double c);

/// Intersection of a convex polygon with a rectangle. Empty when the
/// overlap has no area.
std::optional<ConvexPolygon> clip_intersection(const ConvexPolygon& poly, const Rect& rect);

/// Intersection of two convex polygons (used for the commutativity check).
std::optional<ConvexPolygon> clip_intersection(const ConvexPolygon& a, const ConvexPolygon& b);

/// Voronoi cells of `sites` restricted to `bbox`, one per site in input order.
/// Half-plane intersection, O(n^2). Throws InputError on duplicate sites or
/// sites outside the box.
std::vector<ConvexPolygon> voronoi(std::span<const PlanarPoint> sites, const Rect& bbox);

/// Regular square grid whose cells tile its extent. Cell ids are row-major
/// starting at the south-west corner. Membership uses half-open bounds
/// [min, min + side).
class Grid {
public:
    Grid(PlanarPoint origin, double cell_size, std::size_t nx, std::size_t ny);

    /// Smallest grid anchored at `extent`'s min corner that covers it.
    static Grid covering(const Rect& extent, double cell_size);

    PlanarPoint origin() const { return origin_; }
    double cell_size() const { return cell_size_; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t cell_count() const { return nx_ * ny_; }
    Rect extent() const;
    Rect cell_bounds(std::size_t id) const;
    PlanarPoint cell_center(std::size_t id) const;
    std::optional<std::size_t> cell_of(PlanarPoint p) const;

    /// Ids of cells whose closed bounds meet `r`, in ascending order.
    std::vector<std::size_t> cells_overlapping(const Rect& r) const;

private:
    PlanarPoint origin_;
    double cell_size_;
    std::size_t nx_;
    std::size_t ny_;
};

struct CellWeight {
    std::size_t cell_id = 0;
    double weight = 0.0;
};

/// W(p, l) = area(l ∩ p) / area(p) for every grid cell with positive overlap,
/// ascending by cell id.
std::vector<CellWeight> intersection_weights(const ConvexPolygon& poly, const Grid& grid);

struct TowerCoverage {
    std::string tower_id;
    PlanarPoint site;
    ConvexPolygon polygon;
    std::vector<CellWeight> cell_weights;
};

struct Tower {
    std::string id;
    PlanarPoint site;
};

/// Study frame: projection plus the grid tiling the study bbox.
struct LonLatBox {
    double lon_min = 0.0;
    double lat_min = 0.0;
    double lon_max = 0.0;
    double lat_max = 0.0;
};

struct StudyFrame {
    Projection projection;
    Grid grid;
};

/// Projection anchored at the box's south-west corner, scaled at its middle
/// latitude; the grid starts at the corner and covers the box.
StudyFrame frame_from_bbox(const LonLatBox& box, double cell_size);

/// Frame over the extent of `points`, padded by one cell on every side.
StudyFrame frame_from_extent(std::span<const LonLat> points, double cell_size);

struct TowerRecord {
    std::string id;
    LonLat location;
};

/// Parses `tower_id,lon,lat` CSV text. Throws InputError on any bad row or a
/// repeated tower id.
std::vector<TowerRecord> parse_towers(std::string_view csv_text);

/// Voronoi coverage plus grid weights for every tower, in input order.
std::vector<TowerCoverage> compute_coverage(std::span<const Tower> towers, const Grid& grid);

}  // namespace areaprof::geo
