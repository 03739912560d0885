#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "areaprof/geometry.hpp"
#include "areaprof/temporal.hpp"

namespace areaprof::outputs {

struct CellLabel {
    std::size_t cell_id = 0;
    std::size_t cluster = 0;
};

/// RFC 7946 FeatureCollection of grid-cell squares back-projected to
/// lon/lat, each with `cell_id` and `cluster` properties.
std::string cluster_geojson(std::span<const CellLabel> cells, const geo::StudyFrame& frame);

/// Line chart of a profile's mean with its envelope as a shaded band.
std::string profile_svg(const temporal::TemporalProfile& profile);

}  // namespace areaprof::outputs
