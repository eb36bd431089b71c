#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "pce/csv.hpp"
#include "pce/errors.hpp"
#include "pce/rng.hpp"

using namespace pce;

namespace {

const char* kHeader = "subject_id,sequence,x_baseline,t_p1,t_p2,a_p1,a_p2,y_p1,y_p2\n";

CrossoverData parse(const std::string& text) {
  std::istringstream in(text);
  return read_crossover_csv(in);
}

}  // namespace

TEST_CASE("single valid crossover row") {
  const auto d = parse(std::string(kHeader) + "s1,CF,41.5,0,1,1,0,-3.25,7\n");
  REQUIRE(d.records.size() == 1);
  CHECK(d.covariate_names == std::vector<std::string>{"baseline"});
  const auto& r = d.records[0];
  CHECK(r.subject_id == "s1");
  CHECK(r.sequence == Sequence::ControlFirst);
  CHECK(r.covariates[0] == 41.5);
  CHECK(*r.a_under(0) == 1);
  CHECK(*r.y_under(0) == -3.25);
  CHECK(*r.y_under(1) == 7.0);
}

TEST_CASE("missing values from empty field or NA") {
  const auto d = parse(std::string(kHeader) + "s1,EF,1,1,0,NA,,2,\n");
  const auto& r = d.records[0];
  CHECK(r.sequence == Sequence::ExperimentalFirst);
  CHECK_FALSE(r.periods[0].a.has_value());
  CHECK_FALSE(r.periods[1].a.has_value());
  CHECK_FALSE(r.periods[1].y.has_value());
  CHECK(*r.periods[0].y == 2.0);
}

TEST_CASE("malformed input reports the line") {
  SUBCASE("duplicate id names the subject") {
    try {
      parse(std::string(kHeader) + "s1,CF,1,0,1,0,0,1,1\ns1,CF,1,0,1,0,0,1,1\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("s1") != std::string::npos);
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("same treatment twice") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "s1,CF,1,0,0,0,0,1,1\n"), ParseError);
  }
  SUBCASE("sequence inconsistent with treatments") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "s1,EF,1,0,1,0,0,1,1\n"), ParseError);
  }
  SUBCASE("bad number") {
    try {
      parse(std::string(kHeader) + "s1,CF,1,0,1,0,0,1,1\ns2,CF,abc,0,1,0,0,1,1\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("a outside {0,1}") { CHECK_THROWS_AS(parse(std::string(kHeader) + "s1,CF,1,0,1,2,0,1,1\n"), ParseError); }
  SUBCASE("wrong field count") { CHECK_THROWS_AS(parse(std::string(kHeader) + "s1,CF,1,0,1\n"), ParseError); }
  SUBCASE("unknown column") {
    CHECK_THROWS_AS(parse("subject_id,sequence,z,t_p1,t_p2,a_p1,a_p2,y_p1,y_p2\n"), ParseError);
  }
  SUBCASE("missing column") { CHECK_THROWS_AS(parse("subject_id,sequence,t_p1,t_p2,a_p1,a_p2,y_p1\n"), ParseError); }
}

TEST_CASE("columns are matched by name and covariates keep header order") {
  const auto d = parse("y_p2,x_b,subject_id,sequence,t_p1,t_p2,a_p1,a_p2,y_p1,x_a\n9,2,s1,CF,0,1,0,1,8,1\n");
  CHECK(d.covariate_names == std::vector<std::string>{"b", "a"});
  CHECK(d.records[0].covariates == std::vector<double>{2.0, 1.0});
  CHECK(*d.records[0].periods[1].y == 9.0);
}

TEST_CASE("round trip is bit exact for finite reals") {
  Xoshiro256 rng(99);
  CrossoverData d;
  d.covariate_names = {"u", "v"};
  for (int i = 0; i < 200; ++i) {
    SubjectRecord r;
    r.subject_id = "id" + std::to_string(i);
    r.covariates = {rng.normal() * 1e3, std::ldexp(rng.uniform(), -40)};
    r.sequence = i % 2 ? Sequence::ExperimentalFirst : Sequence::ControlFirst;
    r.periods[0].treatment = i % 2 ? 1 : 0;
    r.periods[1].treatment = i % 2 ? 0 : 1;
    r.periods[0].a = i % 3 ? std::optional<int>(i % 2) : std::nullopt;
    r.periods[1].a = 1;
    r.periods[0].y = rng.normal() * 25.0;
    r.periods[1].y = i % 7 ? std::optional<double>(std::numeric_limits<double>::denorm_min() * i) : std::nullopt;
    d.records.push_back(r);
  }
  std::ostringstream out;
  write_crossover_csv(out, d);
  std::istringstream in(out.str());
  const auto back = read_crossover_csv(in);
  REQUIRE(back.records.size() == d.records.size());
  CHECK(back.covariate_names == d.covariate_names);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto &a = d.records[i], &b = back.records[i];
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.covariates == b.covariates);
    CHECK(a.sequence == b.sequence);
    for (int p = 0; p < 2; ++p) {
      CHECK(a.periods[p].treatment == b.periods[p].treatment);
      CHECK(a.periods[p].a == b.periods[p].a);
      CHECK(a.periods[p].y == b.periods[p].y);
    }
  }
  std::ostringstream again;
  write_crossover_csv(again, back);
  CHECK(again.str() == out.str());
  CHECK(out.str().find("NA") != std::string::npos);
}

TEST_CASE("parallel schema and kind detection") {
  std::istringstream in("subject_id,treatment,x_baseline,a,y\ns1,0,3,1,2.5\ns1,1,3,NA,\n");
  const auto p = read_parallel_csv(in);
  REQUIRE(p.observations.size() == 2);
  CHECK(p.observations[1].treatment == 1);
  CHECK_FALSE(p.observations[1].a.has_value());
  CHECK(p.observations[1].r() == 0);

  const auto dir = std::filesystem::temp_directory_path() / "pce_csv_test";
  std::filesystem::create_directories(dir);
  save_parallel_csv(dir / "par.csv", p);
  CHECK(detect_csv_kind(dir / "par.csv") == CsvKind::Parallel);
  const auto again = load_parallel_csv(dir / "par.csv");
  CHECK(again.observations.size() == 2);
  CHECK(*again.observations[0].y == 2.5);

  std::ofstream(dir / "cross.csv") << kHeader << "s1,CF,1,0,1,0,0,1,1\n";
  CHECK(detect_csv_kind(dir / "cross.csv") == CsvKind::Crossover);
  CHECK(load_crossover_csv(dir / "cross.csv").records.size() == 1);
  CHECK_THROWS_AS(load_crossover_csv(dir / "does_not_exist.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_real") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-3.0) == "-3");
  CHECK(format_optional(std::nullopt) == "NA");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}
