// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <reinfer/dataset.hpp>

using namespace reinfer;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "reinfer_dataset_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

Question make_question(const std::string& id, const std::string& subject,
                       int k, int gold) {
  Question q;
  q.id = id;
  q.subject = subject;
  q.stem = "Stem for " + id;
  for (int i = 0; i < k; ++i)
    q.options.push_back("option " + std::to_string(i) + " of " + id);
  q.gold = gold;
  return q;
}

}  // namespace

// ============================================================================
// Validation
// ============================================================================

TEST_CASE("dataset: duplicate ids are rejected") {
  std::vector<Question> qs = {make_question("x", "law", 4, 0),
                              make_question("x", "law", 4, 1)};
  CHECK_THROWS_AS(Dataset::from_questions(qs), Error);
}

TEST_CASE("dataset: invalid records are rejected with a reason") {
  auto bad_gold = make_question("g", "law", 4, 4);
  CHECK_THROWS_AS(Dataset::from_questions({bad_gold}), Error);
  auto empty_subject = make_question("s", "", 4, 0);
  CHECK_THROWS_AS(Dataset::from_questions({empty_subject}), Error);
  auto one_option = make_question("o", "law", 4, 0);
  one_option.options.resize(1);
  CHECK_THROWS_AS(Dataset::from_questions({one_option}), Error);
  auto empty_option = make_question("e", "law", 4, 0);
  empty_option.options[2].clear();
  CHECK_THROWS_AS(Dataset::from_questions({empty_option}), Error);
  CHECK_THROWS_AS(Dataset::from_questions({}), Error);
}

TEST_CASE("dataset: k_mode is the dominant option count") {
  std::vector<Question> qs;
  for (int i = 0; i < 5; ++i)
    qs.push_back(make_question("ten" + std::to_string(i), "math", 10, 0));
  for (int i = 0; i < 2; ++i)
    qs.push_back(make_question("four" + std::to_string(i), "math", 4, 0));
  const auto d = Dataset::from_questions(qs);
  CHECK(d.k_mode() == 10);
  CHECK(d.size() == 7);
}

// ============================================================================
// Canonical round-trip
// ============================================================================

TEST_CASE("dataset: canonical load/save round-trips byte for byte") {
  std::vector<Question> qs = {make_question("q1", "law", 10, 3),
                              make_question("q2", "math", 4, 1),
                              make_question("q3", "law", 10, 9)};
  qs[0].stem = "What is \"quoted\" and\nweird?";  // exercises escaping
  const auto d = Dataset::from_questions(qs);
  const auto path = temp_file("roundtrip.jsonl");
  save_dataset(d, path.string());

  const auto loaded = load_dataset(path.string(), DatasetFormat::CanonicalLines);
  CHECK(loaded.size() == 3);
  CHECK(serialize_dataset(loaded) == read_file(path));
  CHECK(dataset_digest(loaded) == dataset_digest(d));

  // Second generation serialization is stable.
  const auto path2 = temp_file("roundtrip2.jsonl");
  save_dataset(loaded, path2.string());
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("dataset: canonical loader reports line numbers") {
  const auto path = temp_file("broken.jsonl");
  write_file(path,
             canonical_line(make_question("ok", "law", 4, 0)) + "\n" +
                 "{not json}\n");
  try {
    load_dataset(path.string(), DatasetFormat::CanonicalLines);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("dataset: duplicate id across lines fails the whole load") {
  const auto path = temp_file("dup.jsonl");
  const std::string line = canonical_line(make_question("same", "law", 4, 0));
  write_file(path, line + "\n" + line + "\n");
  CHECK_THROWS_AS(load_dataset(path.string(), DatasetFormat::CanonicalLines),
                  Error);
}

TEST_CASE("dataset: answer letter out of option range is rejected") {
  const auto path = temp_file("badletter.jsonl");
  write_file(path,
             R"({"id":"q","subject":"law","question":"s","options":["a","b"],"answer":"E"})"
             "\n");
  CHECK_THROWS_AS(load_dataset(path.string(), DatasetFormat::CanonicalLines),
                  Error);
}

// ============================================================================
// Delimited import
// ============================================================================

TEST_CASE("dataset: delimited import with explicit column mapping") {
  const auto path = temp_file("table.csv");
  write_file(path,
             "id,subject,question,A,B,C,D,answer\n"
             "m1,math,\"What is 1+1, really?\",1,2,3,4,B\n"
             "m2,law,\"Pick the \"\"best\"\" one\",x,y,,,0\n");
  DelimitedMapping m;
  m.delimiter = ',';
  m.has_header = true;
  m.id_col = 0;
  m.subject_col = 1;
  m.question_col = 2;
  m.options_first = 3;
  m.options_last = 6;
  m.answer_col = 7;
  const auto d = load_dataset(path.string(), DatasetFormat::DelimitedTable, m);
  REQUIRE(d.size() == 2);
  CHECK(d.questions()[0].stem == "What is 1+1, really?");
  CHECK(d.questions()[0].option_count() == 4);
  CHECK(d.questions()[0].gold == 1);
  CHECK(d.questions()[1].stem == "Pick the \"best\" one");
  CHECK(d.questions()[1].option_count() == 2);  // trailing empties dropped
  CHECK(d.questions()[1].gold == 0);
}

TEST_CASE("dataset: empty option inside the range is rejected") {
  const auto path = temp_file("gap.tsv");
  write_file(path, "q\tfirst\t\tthird\tA\n");
  DelimitedMapping m;
  m.question_col = 0;
  m.options_first = 1;
  m.options_last = 3;
  m.answer_col = 4;
  CHECK_THROWS_AS(load_dataset(path.string(), DatasetFormat::DelimitedTable, m),
                  Error);
}

// ============================================================================
// Subject partition
// ============================================================================

TEST_CASE("dataset: single subject gives a single covering group") {
  std::vector<Question> qs;
  for (int i = 0; i < 6; ++i)
    qs.push_back(make_question("q" + std::to_string(i), "logic", 4, 0));
  const auto d = Dataset::from_questions(qs);
  const auto part = subject_partition(d);
  REQUIRE(part.size() == 1);
  CHECK(part[0].first == "logic");
  CHECK(part[0].second.size() == 6);
}

TEST_CASE("dataset: partition sizes match a benchmark-shaped layout") {
  // Subject sizes mirroring a published per-subject table.
  const std::vector<std::pair<std::string, int>> layout = {
      {"biology", 717}, {"law", 1101}, {"math", 1351}, {"history", 381}};
  std::vector<Question> qs;
  int i = 0;
  for (const auto& [subject, n] : layout)
    for (int j = 0; j < n; ++j)
      qs.push_back(make_question("q" + std::to_string(i++), subject, 10, 0));
  const auto d = Dataset::from_questions(qs);
  const auto part = subject_partition(d);
  REQUIRE(part.size() == 4);
  CHECK(part[0].first == "biology");
  CHECK(part[0].second.size() == 717);
  CHECK(part[1].second.size() == 1101);
  CHECK(part[2].second.size() == 1351);
  CHECK(part[3].second.size() == 381);

  // Disjoint cover in first-appearance order.
  std::size_t covered = 0;
  for (const auto& [subject, members] : part) covered += members.size();
  CHECK(covered == d.size());
  CHECK(d.subjects() ==
        std::vector<std::string>{"biology", "law", "math", "history"});
}

TEST_CASE("dataset: gold stays behind the view type") {
  const auto q = make_question("leak", "law", 4, 2);
  const QuestionView v = gold_free(q);
  CHECK(v.id == "leak");
  CHECK(v.option_count() == 4);
  // QuestionView carries no gold member; this is enforced at compile time.
  static_assert(!requires(QuestionView view) { view.gold; });
}
