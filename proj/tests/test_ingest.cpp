#include <doctest.h>

#include "proxsim/error.hpp"
#include "proxsim/ingest.hpp"

#include "temp_dir.hpp"

using namespace proxsim;

namespace {

const std::string kFixtures = PROXSIM_FIXTURE_DIR;

LogSchema fixture_schema() { return LogSchema::load(kFixtures + "/ingest/schema.json"); }

DomainPtr fixture_domain() { return domain_from_json(*fixture_schema().domain); }

}  // namespace

TEST_CASE("two-file join reproduces the fixture") {
  const auto r = ingest_logs(fixture_schema(), fixture_domain());
  REQUIRE(r.training.size() == 3);
  CHECK(r.keys == std::vector<std::string>{"r1", "r2", "r3"});
  // demand, capacity, runway one-hot (single, dual)
  Eigen::MatrixXd X(3, 4);
  X << 40, 50, 1, 0,
       80, 50, 1, 0,
       60, 40, 0, 1;
  Eigen::MatrixXd Y(3, 2);
  Y << 0, 40,
       6.75, 50,
       5, 40;
  CHECK(r.training.X == X);
  CHECK(r.training.Y == Y);
  REQUIRE(r.report.dropped.size() == 1);
  CHECK(r.report.dropped[0].key == "r4");
  CHECK(r.report.dropped[0].reason.rfind("unmatched key", 0) == 0);
  CHECK(r.report.rows_joined == 3);
  const auto j = r.report.to_json();
  CHECK(j["rows_dropped"] == 1);
  CHECK(j["files"][0]["rows_read"] == 4);
  CHECK(j["files"][1]["rows_read"] == 3);
}

TEST_CASE("ingestion ignores file order and row order") {
  TempDir tmp;
  tmp.write("a.csv", "run_id,rwy,capacity,demand\nr4,2,20,30\nr2,1,50,80\nr1,1,50,40\nr3,2,40,60\n");
  tmp.write("b.csv", "throughput,run_id,avg_delay\n40,r3,5\n50,r2,6.75\n40,r1,0\n");
  auto schema = fixture_schema();
  std::swap(schema.files[0], schema.files[1]);
  schema.files[0].path = (tmp.path / "b.csv").string();
  schema.files[1].path = (tmp.path / "a.csv").string();
  const auto shuffled = ingest_logs(schema, fixture_domain());
  const auto base = ingest_logs(fixture_schema(), fixture_domain());
  CHECK(shuffled.keys == base.keys);
  CHECK(shuffled.training.X == base.training.X);
  CHECK(shuffled.training.Y == base.training.Y);
}

TEST_CASE("categorical value outside the level map") {
  TempDir tmp;
  tmp.write("in.csv", "run_id,demand,capacity,rwy\nr1,40,50,1\nr2,80,50,9\n");
  tmp.write("out.csv", "run_id,avg_delay,throughput\nr1,0,40\nr2,6.75,50\n");
  auto schema = fixture_schema();
  schema.files[0].path = (tmp.path / "in.csv").string();
  schema.files[1].path = (tmp.path / "out.csv").string();
  try {
    ingest_logs(schema, fixture_domain());
    FAIL("expected UnmappableValue");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unmappable_value);
    CHECK(e.variable() == "rwy");
    CHECK(e.index() == std::optional<std::size_t>(2));
  }
}

TEST_CASE("ingestion errors") {
  auto code = [](const LogSchema& s) {
    try {
      ingest_logs(s, fixture_domain());
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invalid_config;
  };
  TempDir tmp;
  auto schema = fixture_schema();
  schema.files[1].path = (tmp.path / "absent.csv").string();
  CHECK(code(schema) == Errc::missing_file);

  schema = fixture_schema();
  schema.files[1].path =
      tmp.write("dup.csv", "run_id,avg_delay,throughput\nr1,0,40\nr1,0,41\n");
  CHECK(code(schema) == Errc::key_collision);

  schema = fixture_schema();
  schema.files[1].path = tmp.write("nocol.csv", "run_id,avg_delay\nr1,0\n");
  CHECK(code(schema) == Errc::missing_column);

  schema = fixture_schema();
  schema.files[1].path = tmp.write("nan.csv", "run_id,avg_delay,throughput\nr1,abc,40\n");
  CHECK(code(schema) == Errc::unmappable_value);

  CHECK_THROWS_AS(LogSchema::load(tmp.path.string() + "/none.json"), Error);
}

TEST_CASE("out-of-domain rows are dropped with a reason") {
  TempDir tmp;
  auto schema = fixture_schema();
  schema.files[0].path =
      tmp.write("in.csv", "run_id,demand,capacity,rwy\nr1,40,50,1\nr2,500,50,1\n");
  schema.files[1].path =
      tmp.write("out.csv", "run_id,avg_delay,throughput\nr1,0,40\nr2,1,50\n");
  const auto r = ingest_logs(schema, fixture_domain());
  CHECK(r.training.size() == 1);
  REQUIRE(r.report.dropped.size() == 1);
  CHECK(r.report.dropped[0].key == "r2");
}
