#include "areaprof/config.hpp"

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "areaprof/errors.hpp"
#include "areaprof/io.hpp"

namespace areaprof {

namespace pt = boost::property_tree;

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys{
        "pois",     "taxonomy",      "towers",     "cdr",        "holidays_file", "out",
        "cell_size", "bbox",         "neighbors",  "k_max",      "seed",          "restarts",
        "row_normalize", "max_nodes", "bin_width", "alpha",      "allocation",    "period",
        "holidays", "window_start",  "window_end", "anomaly_dates", "features",
    };
    return keys;
}

namespace {

std::filesystem::path resolve(std::string_view value, const std::filesystem::path& base) {
    std::filesystem::path p{std::string(value)};
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
    const auto v = io::parse_int(value);
    if (!v || *v <= 0) throw InputError(fmt::format("config: `{}` must be a positive integer, got `{}`", key, value));
    return static_cast<std::size_t>(*v);
}

double parse_real(std::string_view key, std::string_view value) {
    const auto v = io::parse_double(value);
    if (!v) throw InputError(fmt::format("config: `{}` must be a number, got `{}`", key, value));
    return *v;
}

temporal::Date parse_date_value(std::string_view key, std::string_view value) {
    const auto d = temporal::parse_date(value);
    if (!d) throw InputError(fmt::format("config: `{}` must be a YYYY-MM-DD date, got `{}`", key, value));
    return *d;
}

std::string absolute_or_empty(const std::filesystem::path& p) {
    if (p.empty()) return {};
    return std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value, const std::filesystem::path& base) {
    value = io::trim(value);
    if (key == "pois") {
        pois = resolve(value, base);
    } else if (key == "taxonomy") {
        taxonomy = resolve(value, base);
    } else if (key == "towers") {
        towers = resolve(value, base);
    } else if (key == "cdr") {
        cdr = resolve(value, base);
    } else if (key == "holidays_file") {
        holidays_file = resolve(value, base);
    } else if (key == "out") {
        out = resolve(value, base);
    } else if (key == "cell_size") {
        cell_size = parse_real(key, value);
    } else if (key == "bbox") {
        if (value.empty()) {
            bbox.reset();
            return;
        }
        const auto parts = io::split(value);
        if (parts.size() != 4) throw InputError("config: bbox needs lon_min,lat_min,lon_max,lat_max");
        bbox = geo::LonLatBox{parse_real(key, parts[0]), parse_real(key, parts[1]), parse_real(key, parts[2]),
                              parse_real(key, parts[3])};
    } else if (key == "neighbors") {
        neighbors = parse_count(key, value);
    } else if (key == "k_max") {
        k_max = parse_count(key, value);
    } else if (key == "seed") {
        const auto v = io::parse_int(value);
        if (!v || *v < 0) throw InputError(fmt::format("config: seed must be a non-negative integer, got `{}`", value));
        seed = static_cast<std::uint64_t>(*v);
    } else if (key == "restarts") {
        restarts = parse_count(key, value);
    } else if (key == "row_normalize") {
        if (value == "true" || value == "1") {
            row_normalize = true;
        } else if (value == "false" || value == "0") {
            row_normalize = false;
        } else {
            throw InputError(fmt::format("config: row_normalize must be true or false, got `{}`", value));
        }
    } else if (key == "max_nodes") {
        max_nodes = parse_count(key, value);
    } else if (key == "bin_width") {
        bin_width = static_cast<std::int64_t>(parse_count(key, value));
    } else if (key == "alpha") {
        alpha = parse_real(key, value);
    } else if (key == "allocation") {
        const auto m = temporal::parse_allocation_mode(value);
        if (!m) throw InputError(fmt::format("config: allocation must be conserving or paper, got `{}`", value));
        allocation = *m;
    } else if (key == "period") {
        const auto p = temporal::parse_period(value);
        if (!p) throw InputError(fmt::format("config: period must be weekly or daily, got `{}`", value));
        period = *p;
    } else if (key == "holidays") {
        holidays.clear();
        if (!value.empty()) {
            for (auto part : io::split(value)) holidays.push_back(parse_date_value(key, part));
        }
    } else if (key == "window_start") {
        window_start = value.empty() ? std::nullopt : std::optional(parse_date_value(key, value));
    } else if (key == "window_end") {
        window_end = value.empty() ? std::nullopt : std::optional(parse_date_value(key, value));
    } else if (key == "anomaly_dates") {
        if (value == "holidays") {
            anomaly_dates = AnomalyDates::holidays;
        } else if (value == "all") {
            anomaly_dates = AnomalyDates::all;
        } else {
            throw InputError(fmt::format("config: anomaly_dates must be holidays or all, got `{}`", value));
        }
    } else if (key == "features") {
        const auto f = evaluation::parse_feature_mode(value);
        if (!f) throw InputError(fmt::format("config: features must be weekly or full, got `{}`", value));
        features = *f;
    } else {
        throw InputError(fmt::format("config: unknown key `{}`", key));
    }
}

RunConfig RunConfig::parse(std::string_view ini_text, const std::filesystem::path& base) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(ini_text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ptree_error& e) {
        throw InputError(fmt::format("config: {}", e.what()));
    }
    RunConfig cfg;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            const auto& keys = run_config_keys();
            // A section without keys parses as an empty leaf.
            if (std::find(keys.begin(), keys.end(), name) != keys.end() || !node.data().empty()) {
                cfg.set(name, node.data(), base);
            }
            continue;
        }
        for (const auto& [key, leaf] : node) cfg.set(key, leaf.data(), base);
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    return parse(io::read_file(path), path.parent_path());
}

void RunConfig::validate() const {
    if (!(cell_size > 0.0)) throw InputError("config: cell_size must be positive");
    if (!(alpha > 0.0)) throw InputError("config: alpha must be positive");
    if (neighbors == 0 || k_max == 0 || restarts == 0 || max_nodes == 0) {
        throw InputError("config: neighbors, k_max, restarts and max_nodes must be positive");
    }
    temporal::validate_bin_width({bin_width});
    if (window_start && window_end && *window_end < *window_start) {
        throw InputError("config: window_end precedes window_start");
    }
    if (bbox) {
        geo::validate_lonlat({bbox->lon_min, bbox->lat_min});
        geo::validate_lonlat({bbox->lon_max, bbox->lat_max});
        if (!(bbox->lon_max > bbox->lon_min && bbox->lat_max > bbox->lat_min)) {
            throw InputError("config: bbox must have positive extent");
        }
    }
}

std::vector<temporal::Date> RunConfig::all_holidays() const {
    std::vector<temporal::Date> out = holidays;
    if (!holidays_file.empty()) {
        const auto text = io::read_file(holidays_file);
        std::size_t start = 0;
        while (start < text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            auto line = io::trim(std::string_view(text).substr(start, end - start));
            start = end + 1;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = io::trim(line.substr(0, hash));
            if (line.empty()) continue;
            out.push_back(parse_date_value("holidays_file", line));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string RunConfig::to_ini() const {
    auto date_or_empty = [](const std::optional<temporal::Date>& d) { return d ? temporal::format_date(*d) : std::string(); };
    std::string holiday_list;
    for (const auto& d : holidays) holiday_list += (holiday_list.empty() ? "" : ",") + temporal::format_date(d);
    std::string box;
    if (bbox) {
        box = fmt::format("{},{},{},{}", io::format_double(bbox->lon_min), io::format_double(bbox->lat_min),
                          io::format_double(bbox->lon_max), io::format_double(bbox->lat_max));
    }
    std::string s;
    s += "[inputs]\n";
    s += fmt::format("pois = {}\n", absolute_or_empty(pois));
    s += fmt::format("taxonomy = {}\n", absolute_or_empty(taxonomy));
    s += fmt::format("towers = {}\n", absolute_or_empty(towers));
    s += fmt::format("cdr = {}\n", absolute_or_empty(cdr));
    s += fmt::format("holidays_file = {}\n", absolute_or_empty(holidays_file));
    s += "\n[grid]\n";
    s += fmt::format("cell_size = {}\n", io::format_double(cell_size));
    s += fmt::format("bbox = {}\n", box);
    s += "\n[cluster]\n";
    s += fmt::format("neighbors = {}\n", neighbors);
    s += fmt::format("k_max = {}\n", k_max);
    s += fmt::format("seed = {}\n", seed);
    s += fmt::format("restarts = {}\n", restarts);
    s += fmt::format("row_normalize = {}\n", row_normalize ? "true" : "false");
    s += fmt::format("max_nodes = {}\n", max_nodes);
    s += "\n[temporal]\n";
    s += fmt::format("bin_width = {}\n", bin_width);
    s += fmt::format("alpha = {}\n", io::format_double(alpha));
    s += fmt::format("allocation = {}\n", temporal::allocation_mode_name(allocation));
    s += fmt::format("period = {}\n", temporal::period_name(period));
    s += fmt::format("holidays = {}\n", holiday_list);
    s += fmt::format("window_start = {}\n", date_or_empty(window_start));
    s += fmt::format("window_end = {}\n", date_or_empty(window_end));
    s += fmt::format("anomaly_dates = {}\n", anomaly_dates == AnomalyDates::holidays ? "holidays" : "all");
    s += "\n[evaluate]\n";
    s += fmt::format("features = {}\n", evaluation::feature_mode_name(features));
    return s;
}

}  // namespace areaprof
