#include "doctest.h"

#include <sstream>

#include "recur/oeis.hpp"

using namespace recur;

namespace {

// Stripped-format line of 2^n mod 100 computed by repeated doubling.
std::string powers_line(int count) {
  std::string line = "A000855 ,";
  long v = 1;
  for (int i = 0; i < count; ++i) {
    line += std::to_string(v) + ",";
    v = (2 * v) % 100;
  }
  return line;
}

std::string counting_line(const std::string& id, int count) {
  std::string line = id + " ,";
  for (int i = 0; i < count; ++i) {
    line += std::to_string(i) + ",";
  }
  return line;
}

FunctionPredictor relation_predictor(const std::string& prefix) {
  return FunctionPredictor(Task::symbolic, [prefix](const SequenceData&, int) {
    return std::vector<Candidate>{{encode_relation(parse_relation(prefix, Mode::integer)), 0.0}};
  });
}

}  // namespace

TEST_SUITE("oeis") {

TEST_CASE("stripped parsing") {
  std::istringstream in(
      "# comment line\n"
      "A000045 ,0,1,1,2,3,5,8,\n"
      "A000001 ,1,x,2,\n"
      "B000002 ,1,2,\n"
      "\n"
      "A000027 ,1,2,3,123456789012345678901234567890,\n");
  const auto file = parse_stripped(in);
  REQUIRE(file.records.size() == 2);
  CHECK(file.records[0].id == "A000045");
  CHECK(file.records[0].terms == std::vector<BigInt>{0, 1, 1, 2, 3, 5, 8});
  CHECK(file.records[1].terms.back() == BigInt("123456789012345678901234567890"));
  REQUIRE(file.diagnostics.size() == 2);
  CHECK(file.diagnostics[0].line == 3);
  CHECK(file.diagnostics[1].line == 4);
  CHECK_THROWS_AS(parse_stripped(std::filesystem::path("/nonexistent/stripped")), std::runtime_error);
  CHECK(valid_anumber("A123456"));
  CHECK_FALSE(valid_anumber("A12345"));
}

TEST_CASE("keyword parsing and easy selection") {
  std::istringstream kw("A000003 easy,nonn\nA000001 nonn,core\nA000002 easy\nA000004 easy\nbad line\n");
  const auto keywords = parse_keywords(kw);
  CHECK(keywords.keywords.size() == 4);
  CHECK(keywords.diagnostics.size() == 1);
  std::istringstream data(counting_line("A000004", 30) + "\n" + counting_line("A000003", 30) + "\n" +
                          counting_line("A000002", 12) + "\n" + counting_line("A000001", 30) + "\n" +
                          counting_line("A000009", 30) + "\n");
  const auto file = parse_stripped(data);
  const auto set = select_easy(file.records, keywords.keywords, 10, 25);
  REQUIRE(set.records.size() == 2);
  CHECK(set.records[0].id == "A000003");
  CHECK(set.records[1].id == "A000004");
  REQUIRE(set.diagnostics.size() == 1);
  CHECK(set.diagnostics[0].message.find("A000009") != std::string::npos);
  CHECK(select_easy(file.records, keywords.keywords, 1, 25).records.size() == 1);
  CHECK(bench_manifest(set).dump() == bench_manifest(select_easy(file.records, keywords.keywords, 10, 25)).dump());
}

TEST_CASE("catalog relation scores on its record") {
  std::istringstream data(powers_line(40) + "\n" + counting_line("A000027", 40) + "\n");
  std::istringstream kw("A000855 easy\nA000027 easy\n");
  const auto file = parse_stripped(data);
  const auto keywords = parse_keywords(kw);
  OeisBenchConfig cfg;
  cfg.n_input = 25;
  const auto set = select_easy(file.records, keywords.keywords, cfg.subset_size, 35);
  REQUIRE(set.records.size() == 2);
  const auto report = run_bench(relation_predictor("mod mul 2 u1 mul 10 10"), set, cfg);
  REQUIRE(report.items.size() == 2);
  CHECK(report.items[0].detail["label"] == "A000027");
  CHECK_FALSE(report.items[0].correct);
  CHECK(report.items[1].detail["label"] == "A000855");
  CHECK(report.items[1].correct);
  CHECK(report.accuracy == 0.5);
  CHECK(report.n_pred_curve.front().second >= report.n_pred_curve.back().second);
}

TEST_CASE("grid has the table layout") {
  std::istringstream data(powers_line(40) + "\n" + counting_line("A000027", 40) + "\n");
  std::istringstream kw("A000855 easy\nA000027 easy\n");
  const auto file = parse_stripped(data);
  const auto keywords = parse_keywords(kw);
  const auto powers = relation_predictor("mod mul 2 u1 mul 10 10");
  // Right on the first 30 counting terms only: n_pred = 1 beats n_pred = 10 at n_input 25.
  const auto clipped = relation_predictor("mod n add mul 3 10 1");
  const auto grid = bench_grid({{"powers", &powers}, {"clipped", &clipped}}, file.records, keywords.keywords, {});
  CHECK(grid.column_groups == std::vector<std::string>{"n_input=15", "n_input=25"});
  CHECK(grid.columns == std::vector<std::string>{"n_pred=1", "n_pred=10", "n_pred=1", "n_pred=10"});
  CHECK(grid.row_labels == std::vector<std::string>{"powers", "clipped"});
  REQUIRE(grid.cells.size() == 2);
  CHECK(grid.cells[0] == std::vector<double>{50, 50, 50, 50});
  CHECK(grid.cells[1][2] > grid.cells[1][3]);
  for (const auto& row : grid.cells) {
    CHECK(row[0] >= row[1]);
    CHECK(row[2] >= row[3]);
  }
  CHECK(grid.to_text().find("n_input=25") != std::string::npos);
}

TEST_CASE("catalog examples replay under their index origins") {
  std::map<std::string, std::int64_t> origin;
  for (const auto& ex : catalog_examples()) {
    const auto rel = parse_relation(ex.relation, Mode::integer);
    std::vector<BigInt> terms(ex.printed.begin(), ex.printed.end());
    for (std::int64_t o = -5; o <= 5 && !origin.contains(ex.id); ++o) {
      if (!replay_mismatch(rel, terms, o)) {
        origin[ex.id] = o;
      }
    }
  }
  CHECK(origin.at("A000792") == -5);  // index-free relation: every origin works
  CHECK(origin.at("A000855") == -5);
  CHECK(origin.at("A008954") == 0);
  CHECK(origin.at("A074062") == -5);
  CHECK(origin.at("A026741") == 1);
  CHECK(origin.at("A035327") == 1);
  CHECK(origin.at("A062050") == 1);
  CHECK_FALSE(origin.contains("A006257"));
}

}  // TEST_SUITE
