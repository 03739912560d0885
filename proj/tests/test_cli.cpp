#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "areaprof/io.hpp"
#include "areaprof/pipeline.hpp"
#include "support.hpp"

using namespace areaprof;
namespace fs = std::filesystem;
namespace files = areaprof::pipeline::files;
using testsupport::read_text;
using testsupport::run_cli;
using testsupport::write_text;

namespace {

const std::string kFixture = std::string(AREAPROF_FIXTURES) + "/city4.ini";

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Synthetic inputs generated once per process.
const fs::path& synth_dir() {
    static const fs::path dir = [] {
        const auto d = testsupport::scratch_dir("cli_synth");
        if (run_cli("synth --spec " + q(kFixture) + " --out " + q(d)) != 0) throw std::runtime_error("synth failed");
        return d;
    }();
    return dir;
}

fs::path run_config() { return synth_dir() / files::kSynthConfig; }

std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [_, fields] : io::parse_csv(read_text(path)).rows) out.push_back(fields);
    return out;
}

std::vector<std::size_t> assignment(const fs::path& dir) {
    std::vector<std::size_t> labels;
    for (const auto& row : csv_rows(dir / files::kAssignment)) labels.push_back(std::stoul(row.at(1)));
    return labels;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_text(e.path());
    return out;
}

}  // namespace

TEST_CASE("synth writes inputs and a ready run config, deterministically") {
    const auto& dir = synth_dir();
    for (const char* f : {files::kSynthPois, files::kSynthTowers, files::kSynthCdr, files::kSynthConfig})
        CHECK(fs::exists(dir / f));
    const auto again = testsupport::scratch_dir("cli_synth_again");
    REQUIRE(run_cli("synth --spec " + q(kFixture) + " --out " + q(again)) == 0);
    CHECK(read_text(dir / files::kSynthPois) == read_text(again / files::kSynthPois));
    CHECK(read_text(dir / files::kSynthCdr) == read_text(again / files::kSynthCdr));
}

TEST_CASE("synth input errors") {
    const auto out = testsupport::scratch_dir("cli_synth_err");
    CHECK(run_cli("synth --spec /nonexistent/spec.ini --out " + q(out)) == 2);
    write_text(out / "bad.ini", "[grid]\nnx = 0\n");
    CHECK(run_cli("synth --spec " + q(out / "bad.ini") + " --out " + q(out / "o")) == 2);
    CHECK(run_cli("synth") == 2);
    CHECK(run_cli("bogus") == 2);
}

TEST_CASE("cluster recovers the planted blocks and writes GeoJSON") {
    const auto out = testsupport::scratch_dir("cli_cluster");
    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(out)) == 0);
    const auto doc = nlohmann::json::parse(read_text(out / files::kGeoJson));
    std::set<int> clusters;
    for (const auto& f : doc["features"]) clusters.insert(f["properties"]["cluster"].get<int>());
    CHECK(clusters == std::set<int>{1, 2, 3, 4});
    CHECK(assignment(out).size() == 200);
    CHECK(fs::exists(out / files::kEffectiveConfig));
    CHECK(fs::exists(out / files::kSpectrum));
}

TEST_CASE("cluster error exits") {
    const auto out = testsupport::scratch_dir("cli_cluster_err");
    CHECK(run_cli("cluster --config " + q(run_config()) + " --out " + q(out) + " --taxonomy /nonexistent/t.csv") == 2);
    CHECK(run_cli("cluster --config /nonexistent/run.ini --out " + q(out)) == 2);
    CHECK(run_cli("cluster --config " + q(run_config()) + " --out " + q(out) + " --neighbors 0") == 2);
    CHECK(run_cli("cluster --config " + q(run_config()) + " --out " + q(out) + " --colour blue") == 2);

    // Every POI in one cell leaves a single profiled cell.
    std::string pois = "id,lon,lat,poi_type\n";
    for (int i = 0; i < 20; ++i) pois += std::to_string(i) + ",11.1001,46.0501,restaurant\n";
    write_text(out / "one_cell.csv", pois);
    CHECK(run_cli("cluster --config " + q(run_config()) + " --out " + q(out) + " --pois " + q(out / "one_cell.csv")) == 3);
}

TEST_CASE("patterns flags exactly the planted holiday spike") {
    const auto out = testsupport::scratch_dir("cli_patterns");
    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(out)) == 0);
    REQUIRE(run_cli("patterns --config " + q(run_config()) + " --out " + q(out)) == 0);
    const auto rows = csv_rows(out / files::kAnomalies);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][1] == "2013-03-31");
    CHECK(rows[0][2] == std::to_string(6 * 24 + 11));
    CHECK(rows[0][6] == "above");
    // The flagged cluster is the one holding the injected archetype's cells.
    const auto spec = synth::SynthSpec::load(kFixture);
    const auto city = synth::gen_city(spec);
    const auto labels = assignment(out);
    for (std::size_t cell = 0; cell < labels.size(); ++cell)
        if (city.planted[cell] == spec.injections.at(0).archetype) CHECK(rows[0][0] == std::to_string(labels[cell]));
}

TEST_CASE("holidays are excluded from profile support") {
    const auto with = testsupport::scratch_dir("cli_support_with");
    const auto without = testsupport::scratch_dir("cli_support_without");
    for (const auto& out : {with, without}) REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(out)) == 0);
    REQUIRE(run_cli("patterns --config " + q(run_config()) + " --out " + q(with)) == 0);
    REQUIRE(run_cli("patterns --config " + q(run_config()) + " --out " + q(without) + " --holidays ''") == 0);
    auto sunday_support = [](const fs::path& dir) {
        for (const auto& row : csv_rows(dir / files::kProfiles))
            if (row[0] == "1" && row[1] == "155") return std::stoi(row[6]);
        return -1;
    };
    CHECK(sunday_support(without) == 26);
    CHECK(sunday_support(with) == 25);
    CHECK(csv_rows(without / files::kAnomalies).empty());
}

TEST_CASE("an empty call file yields header-only outputs") {
    const auto out = testsupport::scratch_dir("cli_empty_cdr");
    write_text(out / "empty.csv", "tower_id,timestamp,duration_s\n");
    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(out)) == 0);
    CHECK(run_cli("patterns --config " + q(run_config()) + " --out " + q(out) + " --cdr " + q(out / "empty.csv")) == 0);
    CHECK(read_text(out / files::kProfiles) == "cluster,slot,mean,std,low,high,support\n");
    CHECK(csv_rows(out / files::kAnomalies).empty());
}

TEST_CASE("evaluate needs upstream outputs") {
    const auto out = testsupport::scratch_dir("cli_evaluate_err");
    CHECK(run_cli("evaluate --config " + q(run_config()) + " --out " + q(out)) == 2);
    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(out)) == 0);
    CHECK(run_cli("evaluate --config " + q(run_config()) + " --out " + q(out)) == 2);
}

TEST_CASE("run-all produces every output and positive silhouettes") {
    const auto out = testsupport::scratch_dir("cli_run_all");
    REQUIRE(run_cli("run-all --config " + q(run_config()) + " --out " + q(out)) == 0);
    for (const char* f : {files::kEffectiveConfig, files::kPoiReport, files::kActivityVectors, files::kAssignment,
                          files::kSpectrum, files::kClusterMeta, files::kGeoJson, files::kCoverage, files::kCdrReport,
                          files::kClusterSeries, files::kCellSeries, files::kPatternsMeta, files::kProfiles,
                          files::kStats, files::kAnomalies, files::kSilhouette, files::kSilhouetteSummary,
                          files::kRunReport})
        CHECK(fs::exists(out / f));
    for (int c = 1; c <= 4; ++c) CHECK(fs::exists(out / ("profile_" + std::to_string(c) + ".svg")));
    const auto summary = csv_rows(out / files::kSilhouetteSummary);
    CHECK(summary.size() == 4);
    for (const auto& row : summary) CHECK(std::stod(row[1]) > 0.0);
}

TEST_CASE("run-all counts corrupt call rows and keeps going") {
    const auto out = testsupport::scratch_dir("cli_corrupt");
    auto cdr = read_text(synth_dir() / files::kSynthCdr);
    cdr += "T000,not-a-time,10\nT000,2013-03-05T10:00:00,-4\n";
    write_text(out / "cdr.csv", cdr);
    REQUIRE(run_cli("run-all --config " + q(run_config()) + " --out " + q(out / "run") + " --cdr " + q(out / "cdr.csv")) == 0);
    const auto report = io::parse_key_values(read_text(out / "run" / files::kCdrReport));
    CHECK(report.at("malformed") == "1");
    CHECK(report.at("negative_duration") == "1");
}

TEST_CASE("run-all rejects non-positive alpha before doing work") {
    const auto out = testsupport::scratch_dir("cli_alpha");
    CHECK(run_cli("run-all --config " + q(run_config()) + " --out " + q(out / "run") + " --alpha 0") == 2);
    CHECK(run_cli("run-all --config " + q(run_config()) + " --out " + q(out / "run") + " --alpha -1") == 2);
    CHECK_FALSE(fs::exists(out / "run" / files::kAssignment));
}

TEST_CASE("repeated runs are byte-identical") {
    const auto a = testsupport::scratch_dir("cli_repeat_a");
    const auto b = testsupport::scratch_dir("cli_repeat_b");
    REQUIRE(run_cli("run-all --config " + q(run_config()) + " --out " + q(a)) == 0);
    REQUIRE(run_cli("run-all --config " + q(run_config()) + " --out " + q(b)) == 0);
    const auto ca = dir_contents(a);
    const auto cb = dir_contents(b);
    REQUIRE(ca.size() == cb.size());
    for (const auto& [name, text] : ca) {
        CAPTURE(name);
        CHECK(cb.at(name) == text);
    }
}

TEST_CASE("POI row order does not change the partition") {
    const auto dir = testsupport::scratch_dir("cli_permute");
    const auto original = read_text(synth_dir() / files::kSynthPois);
    std::istringstream in(original);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    std::mt19937_64 rng(42);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string shuffled = header + "\n";
    for (const auto& l : lines) shuffled += l + "\n";
    write_text(dir / "pois.csv", shuffled);

    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(dir / "a")) == 0);
    REQUIRE(run_cli("cluster --config " + q(run_config()) + " --out " + q(dir / "b") + " --pois " + q(dir / "pois.csv")) == 0);
    CHECK(testsupport::adjusted_rand_index(assignment(dir / "a"), assignment(dir / "b")) == 1.0);
}
