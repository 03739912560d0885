#include "areaprof/outputs.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

namespace areaprof::outputs {

std::string cluster_geojson(std::span<const CellLabel> cells, const geo::StudyFrame& frame) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& c : cells) {
        const geo::Rect r = frame.grid.cell_bounds(c.cell_id);
        nlohmann::json ring = nlohmann::json::array();
        for (const geo::PlanarPoint p : {geo::PlanarPoint{r.min_x, r.min_y}, geo::PlanarPoint{r.max_x, r.min_y},
                                         geo::PlanarPoint{r.max_x, r.max_y}, geo::PlanarPoint{r.min_x, r.max_y},
                                         geo::PlanarPoint{r.min_x, r.min_y}}) {
            const auto ll = frame.projection.unproject(p);
            ring.push_back({ll.lon, ll.lat});
        }
        features.push_back({
            {"type", "Feature"},
            {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}},
            {"properties", {{"cell_id", c.cell_id}, {"cluster", c.cluster}}},
        });
    }
    const nlohmann::json doc{{"type", "FeatureCollection"}, {"features", features}};
    return doc.dump(1) + "\n";
}

std::string profile_svg(const temporal::TemporalProfile& profile) {
    constexpr double kWidth = 840.0;
    constexpr double kHeight = 320.0;
    constexpr double kMargin = 40.0;
    const std::size_t n = profile.slot_count();
    double top = 0.0;
    for (std::size_t s = 0; s < n; ++s) top = std::max({top, profile.high[s], profile.mean[s]});
    if (top <= 0.0) top = 1.0;
    auto x = [&](std::size_t s) {
        return kMargin + (kWidth - 2 * kMargin) * (n > 1 ? static_cast<double>(s) / static_cast<double>(n - 1) : 0.5);
    };
    auto y = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * v / top; };

    std::string band;
    for (std::size_t s = 0; s < n; ++s) band += fmt::format("{:.2f},{:.2f} ", x(s), y(profile.high[s]));
    for (std::size_t s = n; s-- > 0;) band += fmt::format("{:.2f},{:.2f} ", x(s), y(profile.low[s]));
    std::string line;
    for (std::size_t s = 0; s < n; ++s) line += fmt::format("{:.2f},{:.2f} ", x(s), y(profile.mean[s]));
    if (!band.empty()) band.pop_back();
    if (!line.empty()) line.pop_back();

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
        kWidth, kHeight);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += fmt::format("<text x=\"{:.0f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">cluster {} {} profile "
                       "(mean &#177; {} sigma)</text>\n",
                       kMargin, temporal::cluster_label(profile.cluster), temporal::period_name(profile.period),
                       fmt::format("{}", profile.alpha));
    svg += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{2:.0f}\" y2=\"{1:.0f}\" stroke=\"black\"/>\n", kMargin,
                       kHeight - kMargin, kWidth - kMargin);
    svg += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{0:.0f}\" y2=\"{2:.0f}\" stroke=\"black\"/>\n", kMargin,
                       kHeight - kMargin, kMargin);
    svg += fmt::format("<text x=\"4\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"10\">{:.1f}</text>\n",
                       kMargin + 4, top);
    if (profile.period == temporal::Period::weekly && n >= 7) {
        static constexpr const char* kDays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
        const std::size_t per_day = n / 7;
        for (std::size_t d = 0; d < 7; ++d) {
            svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                               x(d * per_day), kHeight - kMargin + 14, kDays[d]);
        }
    }
    svg += fmt::format("<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n", band);
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>\n", line);
    svg += "</svg>\n";
    return svg;
}

}  // namespace areaprof::outputs
