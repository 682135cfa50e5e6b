#include <doctest.h>

#include "commute/error.hpp"
#include "commute/pipeline.hpp"
#include "test_util.hpp"

using namespace commute;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = testutil::slurp(e.path());
  }
  return out;
}

// A tiny synthetic world written to <dir>/world.
Config world_config(const testutil::TempDir& dir, int agents = 40) {
  Config synth;
  synth.set("synth.agents", std::to_string(agents));
  synth.set("run.output_dir", (dir / "world").string());
  run("synth", synth);
  Config c;
  c.load_file(dir / "world" / "world.conf");
  return c;
}

}  // namespace

TEST_CASE("config: defaults match the published rule values") {
  const auto p = PipelineConfig::from(Config{});
  CHECK(p.stay.dist_threshold_m == 250);
  CHECK(p.stay.time_threshold_s == 900);
  CHECK(p.home.linkage_m == 250);
  CHECK(p.work.linkage_m == 250);
  CHECK(p.home.night.start_s == 20 * 3600);
  CHECK(p.home.night.end_s == 5 * 3600);
  CHECK(p.home.min_night_overlap_s == 3 * 3600);
  CHECK(p.home.long_stay_s == 24 * 3600);
  CHECK(p.work.hours.start_s == 8 * 3600);
  CHECK(p.work.hours.end_s == 18 * 3600);
  CHECK(p.work.walking_distance_m == 800);
  CHECK(p.commute_radius_m == 800);
  CHECK(p.work.min_visits == 2);
  CHECK(p.work.exponent == 1);
  CHECK(p.min_tract_fraction == 0.5);
  CHECK(p.timezone == "America/Chicago");
  CHECK(p.window().weekday_count() == 11);
}

TEST_CASE("config: files, sections, overrides and errors") {
  testutil::TempDir dir;
  testutil::spit(dir / "c.conf",
                 "# comment\n[stay]\ntime_threshold_s = 1200  # trailing\n[input]\npings = \"data/p.csv\"\n"
                 "[]\nwork.exponent = 2\n");
  Config c;
  c.load_file(dir / "c.conf");
  CHECK(c.get_int("stay.time_threshold_s") == 1200);
  CHECK(*c.get_path("input.pings") == (dir / "data/p.csv").lexically_normal());
  CHECK(c.get_int("work.exponent") == 2);
  c.set("work.exponent=3");
  CHECK(c.get("work.exponent") == "3");
  CHECK(c.get_list("sweep.exponents") == std::vector<std::string>{"1", "2", "3"});
  CHECK_FALSE(c.get_path("input.truth"));
  CHECK_THROWS_AS(c.set("no.such_key=1"), ConfigError);
  CHECK_THROWS_AS(c.set("missing_equals"), ConfigError);

  testutil::spit(dir / "bad.conf", "stay.time_threshold_s 5\n");
  try {
    Config b;
    b.load_file(dir / "bad.conf");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  for (const char* bad : {"stay.time_threshold_s=0", "stay.dist_threshold_m=-5", "window.timezone=Mars/Base",
                          "window.end_date=2017-07-01", "validate.pair_selection=all", "routing.modes=walk",
                          "stay.radius_mode=centroid", "home.night_start=24:30", "synth.p_commute=2"}) {
    Config b;
    b.set(bad);
    CHECK_THROWS_AS(PipelineConfig::from(b), ConfigError);
  }
}

TEST_CASE("config: echo is sorted, complete and omits execution-only keys") {
  Config c;
  c.set("run.workers=8");
  const auto echo = c.echo();
  CHECK(echo.find("run.workers") == std::string::npos);
  CHECK(echo.find("run.output_dir") == std::string::npos);
  CHECK(echo.find("stay.time_threshold_s = 900\n") != std::string::npos);
  std::istringstream lines(echo);
  std::string line, prev;
  while (std::getline(lines, line)) {
    CHECK(prev < line);
    prev = line;
  }
}

TEST_CASE("artifact CSVs round-trip") {
  testutil::TempDir dir;
  std::vector<DeviceStays> devices(1);
  devices[0].device_id = "d1";
  devices[0].stays.push_back(testutil::stay_at({29.123456789012345, -95.1}, 100, 2000));
  write_stays_csv(dir / "s.csv", devices);
  const auto stays = read_stays_csv(dir / "s.csv");
  REQUIRE(stays.at("d1").size() == 1);
  CHECK(stays.at("d1")[0].centroid == devices[0].stays[0].centroid);
  CHECK(stays.at("d1")[0].departure_utc == 2000);

  ODMatrix od;
  od.cells[{"A", "B"}] = 1.0 / 3.0;
  write_od_csv(dir / "od.csv", od);
  CHECK(read_od_csv(dir / "od.csv").cells == od.cells);

  CommuterRecord c{"d1", {1, 2}, {3, 4}, 5, 11, 5.0 / 11, "A", "B"};
  write_commuters_csv(dir / "c.csv", std::vector<CommuterRecord>{c});
  const auto back = read_commuters_csv(dir / "c.csv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].avg_daily_trips == c.avg_daily_trips);
  CHECK(back[0].work_tract == "B");

  testutil::spit(dir / "broken.csv", "device_id,lat,lon,arrival_utc,departure_utc,member_count\nd,x,1,2,3,4\n");
  CHECK_THROWS_AS(read_stays_csv(dir / "broken.csv"), DataError);
}

TEST_CASE("sha256_file") {
  testutil::TempDir dir;
  testutil::spit(dir / "abc", "abc");
  CHECK(sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("artifact set: commit renames, failure quarantines without clobbering") {
  testutil::TempDir dir;
  testutil::spit(dir / "good.csv", "previous\n");
  {
    ArtifactSet a(dir.path());
    a.write("good.csv", "half-written\n");
  }
  CHECK(testutil::slurp(dir / "good.csv") == "previous\n");
  CHECK(testutil::slurp(dir / "good.csv.quarantine") == "half-written\n");
  {
    ArtifactSet a(dir.path());
    a.write("good.csv", "new\n");
    a.commit();
  }
  CHECK(testutil::slurp(dir / "good.csv") == "new\n");
  CHECK_FALSE(fs::exists(dir / "good.csv.quarantine"));
  CHECK_FALSE(fs::exists(dir / "good.csv.partial"));
}

TEST_CASE("stages name their missing inputs") {
  testutil::TempDir dir;
  Config c;
  c.set("run.output_dir", dir.path().string());
  try {
    run("infer-places", c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("extract-stays") != std::string::npos);
  }
  try {
    run("extract-stays", c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("input.pings") != std::string::npos);
  }
  CHECK_THROWS_AS(run("bogus", c), ConfigError);
}

TEST_CASE("build-od runs from a hand-written places file alone") {
  testutil::TempDir dir;
  testutil::spit(dir / "tracts.geojson", R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"GEOID":"A"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
    {"type":"Feature","properties":{"GEOID":"B"},"geometry":{"type":"Polygon","coordinates":[[[1,0],[2,0],[2,1],[1,1],[1,0]]]}}]})");
  testutil::spit(dir / "city.geojson", R"({"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[2,1],[0,1],[0,0]]]}})");
  fs::create_directories(dir / "out");
  testutil::spit(dir / "out" / "places.csv",
                 "device_id,home_lat,home_lon,work_lat,work_lon,n,d,avg_daily_trips\n"
                 "u1,0.5,0.5,0.5,1.5,4,111000,0.5\n"
                 "u2,0.5,0.2,0.5,1.7,6,160000,0.25\n"
                 "u3,0.5,0.5,,,,,\n");
  Config c;
  c.set("input.tracts", (dir / "tracts.geojson").string());
  c.set("input.city", (dir / "city.geojson").string());
  c.set("run.output_dir", (dir / "out").string());
  run("build-od", c);
  CHECK(testutil::slurp(dir / "out" / "od.csv") == "origin_tract,dest_tract,avg_daily_trips\nA,B,0.75\n");
  CHECK(fs::exists(dir / "out" / "run_manifest.json"));
  CHECK(fs::exists(dir / "out" / "config.resolved"));
}

TEST_CASE("all: re-running from the echoed config reproduces the artifacts") {
  testutil::TempDir dir;
  auto c = world_config(dir);
  c.set("run.output_dir", (dir / "a").string());
  run("all", c);
  const auto first = read_dir(dir / "a");
  for (const char* name : {"stays.csv", "places.csv", "funnel.json", "od.csv", "validation.json", "routes.csv",
                           "commute_summary.json", "recovery.json", "run_manifest.json", "config.resolved"}) {
    CHECK_MESSAGE(first.count(name), name);
  }
  Config echo;
  echo.load_file(dir / "a" / "config.resolved");
  echo.set("run.output_dir", (dir / "b").string());
  echo.set("run.workers", "3");
  run("all", echo);
  CHECK(read_dir(dir / "b") == first);
}

TEST_CASE("stage-by-stage equals all, and sweep covers the grid") {
  testutil::TempDir dir;
  auto c = world_config(dir, 25);
  c.set("run.output_dir", (dir / "all").string());
  run("all", c);
  c.set("run.output_dir", (dir / "staged").string());
  for (const char* stage : {"extract-stays", "infer-places", "build-od", "validate", "route-stats"}) run(stage, c);
  const auto all = read_dir(dir / "all");
  const auto staged = read_dir(dir / "staged");
  for (const char* name : {"stays.csv", "places.csv", "od.csv", "validation.json", "routes.csv"}) {
    CHECK_MESSAGE(all.at(name) == staged.at(name), name);
  }

  c.set("run.output_dir", (dir / "sweep").string());
  c.set("sweep.time_thresholds_s", "600,1800");
  c.set("sweep.exponents", "1,2");
  run("sweep", c);
  const auto sweep = testutil::slurp(dir / "sweep" / "sweep.csv");
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 5);
  CHECK(sweep.find("\n600,1,25,") != std::string::npos);
}
