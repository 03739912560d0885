#include "areaprof/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "areaprof/errors.hpp"
#include "areaprof/io.hpp"

namespace areaprof::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double cross(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double coordinate_scale(std::span<const PlanarPoint> ring) {
    double scale = 1.0;
    for (const auto& p : ring) {
        scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    }
    return scale;
}

}  // namespace

void validate_lonlat(LonLat p) {
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || p.lon < -180.0 || p.lon > 180.0 ||
        p.lat <= -90.0 || p.lat >= 90.0) {
        throw InputError(fmt::format("coordinate out of range: lon={} lat={}", p.lon, p.lat));
    }
}

Projection::Projection(LonLat origin, double reference_lat)
    : origin_(origin), reference_lat_(reference_lat) {
    validate_lonlat(origin);
    validate_lonlat({origin.lon, reference_lat});
    meters_per_deg_lat_ = kEarthRadiusM * kDegToRad;
    meters_per_deg_lon_ = meters_per_deg_lat_ * std::cos(reference_lat * kDegToRad);
}

PlanarPoint Projection::project(LonLat p) const {
    validate_lonlat(p);
    return {(p.lon - origin_.lon) * meters_per_deg_lon_, (p.lat - origin_.lat) * meters_per_deg_lat_};
}

LonLat Projection::unproject(PlanarPoint p) const {
    return {origin_.lon + p.x / meters_per_deg_lon_, origin_.lat + p.y / meters_per_deg_lat_};
}

double signed_area(std::span<const PlanarPoint> ring) {
    if (ring.size() < 3) return 0.0;
    // Shoelace relative to the first vertex keeps cancellation small far from the origin.
    const PlanarPoint o = ring[0];
    double twice = 0.0;
    for (std::size_t i = 1; i + 1 < ring.size(); ++i) {
        twice += cross(o, ring[i], ring[i + 1]);
    }
    return 0.5 * twice;
}

ConvexPolygon::ConvexPolygon(std::vector<PlanarPoint> vertices) {
    const double scale = coordinate_scale(vertices);
    const double eps = 1e-12 * scale;

    std::vector<PlanarPoint> ring;
    ring.reserve(vertices.size());
    for (const auto& p : vertices) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw GeometryError("polygon vertex is not finite");
        }
        if (ring.empty() || std::hypot(p.x - ring.back().x, p.y - ring.back().y) > eps) {
            ring.push_back(p);
        }
    }
    while (ring.size() > 1 &&
           std::hypot(ring.front().x - ring.back().x, ring.front().y - ring.back().y) <= eps) {
        ring.pop_back();
    }
    if (signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());

    // Drop vertices that lie on the segment joining their neighbours.
    bool changed = true;
    while (changed && ring.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto& prev = ring[(i + ring.size() - 1) % ring.size()];
            const auto& next = ring[(i + 1) % ring.size()];
            const double len = std::hypot(next.x - prev.x, next.y - prev.y);
            if (std::abs(cross(prev, ring[i], next)) <= eps * std::max(len, 1.0)) {
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    if (ring.size() < 3 || signed_area(ring) <= eps * scale) {
        throw GeometryError("degenerate polygon (collinear or zero area)");
    }
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % ring.size()];
        const auto& c = ring[(i + 2) % ring.size()];
        if (cross(a, b, c) < -eps * scale) throw GeometryError("polygon is not convex");
    }
    vertices_ = std::move(ring);
}

ConvexPolygon ConvexPolygon::from_rect(const Rect& r) {
    return ConvexPolygon({{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y}, {r.min_x, r.max_y}});
}

Rect ConvexPolygon::bounds() const {
    Rect r{vertices_[0].x, vertices_[0].y, vertices_[0].x, vertices_[0].y};
    for (const auto& p : vertices_) {
        r.min_x = std::min(r.min_x, p.x);
        r.min_y = std::min(r.min_y, p.y);
        r.max_x = std::max(r.max_x, p.x);
        r.max_y = std::max(r.max_y, p.y);
    }
    return r;
}

bool ConvexPolygon::contains(PlanarPoint p, double tol) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto& a = vertices_[i];
        const auto& b = vertices_[(i + 1) % vertices_.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (cross(a, b, p) < -tol * len) return false;
    }
    return true;
}

double polygon_area(const ConvexPolygon& poly) { return signed_area(poly.vertices()); }

std::vector<PlanarPoint> clip_half_plane(std::span<const PlanarPoint> ring, double a, double b,
                                         double c) {
    std::vector<PlanarPoint> out;
    if (ring.empty()) return out;
    out.reserve(ring.size() + 1);
    auto side = [&](PlanarPoint p) { return a * p.x + b * p.y - c; };
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const PlanarPoint cur = ring[i];
        const PlanarPoint nxt = ring[(i + 1) % ring.size()];
        const double sc = side(cur);
        const double sn = side(nxt);
        if (sc <= 0.0) out.push_back(cur);
        if ((sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0)) {
            const double t = sc / (sc - sn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

namespace {

std::optional<ConvexPolygon> finish_clip(std::vector<PlanarPoint> ring) {
    if (ring.size() < 3) return std::nullopt;
    try {
        return ConvexPolygon(std::move(ring));
    } catch (const GeometryError&) {
        // Overlap along an edge or at a vertex only.
        return std::nullopt;
    }
}

}  // namespace

std::optional<ConvexPolygon> clip_intersection(const ConvexPolygon& poly, const Rect& rect) {
    const auto v = poly.vertices();
    std::vector<PlanarPoint> ring(v.begin(), v.end());
    ring = clip_half_plane(ring, -1.0, 0.0, -rect.min_x);
    ring = clip_half_plane(ring, 1.0, 0.0, rect.max_x);
    ring = clip_half_plane(ring, 0.0, -1.0, -rect.min_y);
    ring = clip_half_plane(ring, 0.0, 1.0, rect.max_y);
    return finish_clip(std::move(ring));
}

std::optional<ConvexPolygon> clip_intersection(const ConvexPolygon& a, const ConvexPolygon& b) {
    const auto va = a.vertices();
    std::vector<PlanarPoint> ring(va.begin(), va.end());
    const auto vb = b.vertices();
    for (std::size_t i = 0; i < vb.size() && !ring.empty(); ++i) {
        const auto& p = vb[i];
        const auto& q = vb[(i + 1) % vb.size()];
        // Inside of a CCW edge p->q is to its left: (q-p) x (r-p) >= 0.
        const double na = q.y - p.y;
        const double nb = -(q.x - p.x);
        ring = clip_half_plane(ring, na, nb, na * p.x + nb * p.y);
    }
    return finish_clip(std::move(ring));
}

std::vector<ConvexPolygon> voronoi(std::span<const PlanarPoint> sites, const Rect& bbox) {
    if (sites.empty()) throw InputError("voronoi needs at least one site");
    if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) throw InputError("voronoi bbox is empty");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!bbox.contains(sites[i])) {
            throw InputError(fmt::format("site {} ({}, {}) lies outside the study bbox", i,
                                         sites[i].x, sites[i].y));
        }
    }
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return std::tie(sites[l].x, sites[l].y) < std::tie(sites[r].x, sites[r].y);
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (sites[order[i]] == sites[order[i - 1]]) {
            throw InputError(fmt::format("duplicate site at ({}, {})", sites[order[i]].x,
                                         sites[order[i]].y));
        }
    }

    const std::vector<PlanarPoint> box{{bbox.min_x, bbox.min_y},
                                       {bbox.max_x, bbox.min_y},
                                       {bbox.max_x, bbox.max_y},
                                       {bbox.min_x, bbox.max_y}};
    std::vector<ConvexPolygon> cells;
    cells.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const PlanarPoint s = sites[i];
        std::vector<PlanarPoint> ring = box;
        for (std::size_t j = 0; j < sites.size() && !ring.empty(); ++j) {
            if (j == i) continue;
            const PlanarPoint o = sites[j];
            // |p - s|^2 <= |p - o|^2  <=>  2 (o - s) . p <= |o|^2 - |s|^2, written around the
            // midpoint so the constant stays small.
            const double a = o.x - s.x;
            const double b = o.y - s.y;
            const double c = a * 0.5 * (o.x + s.x) + b * 0.5 * (o.y + s.y);
            ring = clip_half_plane(ring, a, b, c);
        }
        cells.emplace_back(std::move(ring));
    }
    return cells;
}

Grid::Grid(PlanarPoint origin, double cell_size, std::size_t nx, std::size_t ny)
    : origin_(origin), cell_size_(cell_size), nx_(nx), ny_(ny) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InputError("grid cell size must be positive");
    if (nx == 0 || ny == 0) throw InputError("grid must have at least one cell");
}

Grid Grid::covering(const Rect& extent, double cell_size) {
    if (!(cell_size > 0.0)) throw InputError("grid cell size must be positive");
    auto count = [&](double span) {
        const double n = std::ceil(span / cell_size - 1e-9);
        return static_cast<std::size_t>(std::max(1.0, n));
    };
    return Grid({extent.min_x, extent.min_y}, cell_size, count(extent.width()), count(extent.height()));
}

Rect Grid::extent() const {
    return {origin_.x, origin_.y, origin_.x + cell_size_ * static_cast<double>(nx_),
            origin_.y + cell_size_ * static_cast<double>(ny_)};
}

Rect Grid::cell_bounds(std::size_t id) const {
    const double col = static_cast<double>(id % nx_);
    const double row = static_cast<double>(id / nx_);
    return {origin_.x + col * cell_size_, origin_.y + row * cell_size_,
            origin_.x + (col + 1.0) * cell_size_, origin_.y + (row + 1.0) * cell_size_};
}

PlanarPoint Grid::cell_center(std::size_t id) const {
    const Rect r = cell_bounds(id);
    return {0.5 * (r.min_x + r.max_x), 0.5 * (r.min_y + r.max_y)};
}

std::optional<std::size_t> Grid::cell_of(PlanarPoint p) const {
    const double fx = std::floor((p.x - origin_.x) / cell_size_);
    const double fy = std::floor((p.y - origin_.y) / cell_size_);
    if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(nx_) && fy < static_cast<double>(ny_))) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(fy) * nx_ + static_cast<std::size_t>(fx);
}

std::vector<std::size_t> Grid::cells_overlapping(const Rect& r) const {
    auto clamp_index = [](double v, std::size_t n) {
        if (v < 0.0) return std::size_t{0};
        if (v >= static_cast<double>(n)) return n - 1;
        return static_cast<std::size_t>(v);
    };
    std::vector<std::size_t> ids;
    const Rect e = extent();
    if (r.max_x < e.min_x || r.min_x > e.max_x || r.max_y < e.min_y || r.min_y > e.max_y) return ids;
    const std::size_t c0 = clamp_index(std::floor((r.min_x - origin_.x) / cell_size_), nx_);
    const std::size_t c1 = clamp_index(std::floor((r.max_x - origin_.x) / cell_size_), nx_);
    const std::size_t r0 = clamp_index(std::floor((r.min_y - origin_.y) / cell_size_), ny_);
    const std::size_t r1 = clamp_index(std::floor((r.max_y - origin_.y) / cell_size_), ny_);
    for (std::size_t row = r0; row <= r1; ++row) {
        for (std::size_t col = c0; col <= c1; ++col) ids.push_back(row * nx_ + col);
    }
    return ids;
}

std::vector<CellWeight> intersection_weights(const ConvexPolygon& poly, const Grid& grid) {
    const double total = polygon_area(poly);
    if (!(total > 0.0)) throw GeometryError("zero-area coverage polygon");
    std::vector<CellWeight> weights;
    for (std::size_t id : grid.cells_overlapping(poly.bounds())) {
        const auto overlap = clip_intersection(poly, grid.cell_bounds(id));
        if (!overlap) continue;
        const double w = std::min(1.0, polygon_area(*overlap) / total);
        if (w > 0.0) weights.push_back({id, w});
    }
    return weights;
}

StudyFrame frame_from_bbox(const LonLatBox& box, double cell_size) {
    validate_lonlat({box.lon_min, box.lat_min});
    validate_lonlat({box.lon_max, box.lat_max});
    if (!(box.lon_max > box.lon_min && box.lat_max > box.lat_min)) {
        throw InputError("study bbox must have lon_max > lon_min and lat_max > lat_min");
    }
    Projection proj({box.lon_min, box.lat_min}, 0.5 * (box.lat_min + box.lat_max));
    const PlanarPoint far = proj.project({box.lon_max, box.lat_max});
    return {proj, Grid::covering({0.0, 0.0, far.x, far.y}, cell_size)};
}

StudyFrame frame_from_extent(std::span<const LonLat> points, double cell_size) {
    if (points.empty()) throw InputError("cannot derive a study area from zero points");
    LonLatBox box{points[0].lon, points[0].lat, points[0].lon, points[0].lat};
    for (const auto& p : points) {
        validate_lonlat(p);
        box.lon_min = std::min(box.lon_min, p.lon);
        box.lat_min = std::min(box.lat_min, p.lat);
        box.lon_max = std::max(box.lon_max, p.lon);
        box.lat_max = std::max(box.lat_max, p.lat);
    }
    Projection proj({box.lon_min, box.lat_min}, 0.5 * (box.lat_min + box.lat_max));
    const PlanarPoint far = proj.project({box.lon_max, box.lat_max});
    const Rect padded{-cell_size, -cell_size, far.x + cell_size, far.y + cell_size};
    return {proj, Grid::covering(padded, cell_size)};
}

std::vector<TowerRecord> parse_towers(std::string_view csv_text) {
    const auto table = io::parse_csv(csv_text);
    io::require_header(table, {"tower_id", "lon", "lat"}, "towers file");
    std::vector<TowerRecord> towers;
    std::set<std::string> seen;
    for (const auto& [line, f] : table.rows) {
        const auto lon = f.size() == 3 ? io::parse_double(f[1]) : std::nullopt;
        const auto lat = f.size() == 3 ? io::parse_double(f[2]) : std::nullopt;
        if (f.size() != 3 || f[0].empty() || !lon || !lat) {
            throw InputError(fmt::format("towers file line {}: expected `tower_id,lon,lat`", line));
        }
        validate_lonlat({*lon, *lat});
        if (!seen.insert(f[0]).second) {
            throw InputError(fmt::format("towers file line {}: duplicate tower id `{}`", line, f[0]));
        }
        towers.push_back({f[0], {*lon, *lat}});
    }
    return towers;
}

std::vector<TowerCoverage> compute_coverage(std::span<const Tower> towers, const Grid& grid) {
    std::vector<PlanarPoint> sites;
    sites.reserve(towers.size());
    for (const auto& t : towers) sites.push_back(t.site);
    auto cells = voronoi(sites, grid.extent());
    std::vector<TowerCoverage> out;
    out.reserve(towers.size());
    for (std::size_t i = 0; i < towers.size(); ++i) {
        auto weights = intersection_weights(cells[i], grid);
        out.push_back({towers[i].id, towers[i].site, std::move(cells[i]), std::move(weights)});
    }
    return out;
}

}  // namespace areaprof::geo
