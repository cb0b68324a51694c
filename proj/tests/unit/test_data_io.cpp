#include <string>

#include "bmameta/data_io.hpp"
#include "bmameta/errors.hpp"
#include "doctest.h"

using namespace bmameta;

TEST_SUITE("data_io") {
  TEST_CASE("honey file") {
    auto d = ingest(std::string(BMAMETA_TEST_DATA) + "/honey.csv", Measure::LogOR);
    REQUIRE(d.has_tables());
    REQUIRE(d.size() == 2);
    CHECK(d.labels[0] == "Paul 2007");
    CHECK(d.tables[0].a == 5);
    CHECK(d.tables[0].b == 30);
    CHECK(d.tables[0].c == 0);
    CHECK(d.tables[0].d == 39);
    CHECK(d.tables[1].a == 2);
    CHECK(d.tables[1].d == 40);
  }

  TEST_CASE("csv lexing") {
    auto t = parse_csv("\xEF\xBB\xBFStudy,Y,SE\r\n\"Smith, J \"\"A\"\"\",0.5,0.2\r\n\r\nB,1,2\n");
    CHECK(t.header == std::vector<std::string>{"study", "y", "se"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "Smith, J \"A\"");
    CHECK(t.line_numbers[1] == 4);
    CHECK_THROWS_AS(parse_csv(""), ParseError);
    CHECK_THROWS_AS(parse_csv("a,b\n\"x,1\n"), ParseError);
    CHECK_THROWS_AS(parse_csv("a,b\nx\"y,1\n"), ParseError);
  }

  TEST_CASE("row errors") {
    CHECK_THROWS_WITH_AS(dataset_from_csv("study,y,se\n", Measure::LogOR), doctest::Contains("no data rows"),
                         ParseError);
    CHECK_THROWS_WITH_AS(dataset_from_csv("study,y,se\nA,0.1,0.2\nB,0.3,0\n", Measure::LogOR),
                         doctest::Contains("line 3"), InvalidEstimateError);
    CHECK_THROWS_AS(dataset_from_csv("study,a,b,c,d,y,se\nA,1,2,3,4,0.1,0.2\n", Measure::LogOR),
                    MixedSchemaError);
    CHECK_THROWS_AS(dataset_from_csv("study,a,b,c,d\nA,1,x,3,4\n", Measure::LogOR), ParseError);
    CHECK_THROWS_AS(dataset_from_csv("study,a,b,c,d\nA,1,-2,3,4\n", Measure::LogOR), InvalidTableError);
    CHECK_THROWS_AS(dataset_from_csv("study,q\nA,1\n", Measure::LogOR), ParseError);
    try {
      dataset_from_csv("study,y,se\nA,0.1,-1\nB,0.3,0.2\nC,x,0.1\n", Measure::LogOR);
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string m = e.what();
      CHECK(m.find("line 2") != std::string::npos);
      CHECK(m.find("line 4") != std::string::npos);
    }
  }

  TEST_CASE("study column is optional") {
    auto d = dataset_from_csv("y,se\n0.1,0.2\n0.3,0.4\n", Measure::LogRR);
    CHECK(d.size() == 2);
    CHECK(d.labels[1] == "Study 2");
    CHECK(d.estimates[1].study_label == "Study 2");
    CHECK(d.measure == Measure::LogRR);
  }

  TEST_CASE("round trip for both schemas") {
    auto tables = dataset_from_csv("study,a,b,c,d\n\"Doe, 1999\",5,30,0,39\nX,2,38,0,40\n", Measure::LogOR);
    auto t2 = dataset_from_csv(dataset_to_csv(tables), Measure::LogOR);
    CHECK(t2.labels == tables.labels);
    REQUIRE(t2.tables.size() == 2);
    CHECK(t2.tables[0].a == 5);
    CHECK(t2.tables[1].d == 40);

    auto est = dataset_from_csv("study,y,se\nA,0.1,0.30000000000000004\nB,-1e-7,2.5\n", Measure::LogHR);
    auto e2 = dataset_from_csv(dataset_to_csv(est), Measure::LogHR);
    CHECK(e2.labels == est.labels);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(e2.estimates[i].y == est.estimates[i].y);
      CHECK(e2.estimates[i].se == est.estimates[i].se);
    }
    CHECK(dataset_to_csv(e2) == dataset_to_csv(est));
  }

  TEST_CASE("corpus files") {
    auto c = corpus_from_csv("comparison,study,y,se\nB,s1,0.1,0.2\nA,s2,0.2,0.3\nB,s3,0.3,0.4\n", Measure::LogOR);
    REQUIRE(c.size() == 2);
    CHECK(c[0].size() == 2);
    CHECK(c[1].size() == 1);
    CHECK(c[0].labels[1] == "s3");
    CHECK_THROWS_AS(corpus_from_csv("study,y,se\nA,0.1,0.2\n", Measure::LogOR), ParseError);
  }

  TEST_CASE("value columns") {
    CHECK(values_from_csv("value\n0.1\n0.2\n") == std::vector<double>{0.1, 0.2});
    CHECK(values_from_csv("tau\n0.3\n") == std::vector<double>{0.3});
    CHECK(values_from_csv("id,value\na,1.5\n") == std::vector<double>{1.5});
    CHECK_THROWS_AS(values_from_csv("a,b\n1,2\n"), ParseError);
  }

  TEST_CASE("missing file") {
    CHECK_THROWS_AS(read_file("/nonexistent/file.csv"), Error);
  }
}
