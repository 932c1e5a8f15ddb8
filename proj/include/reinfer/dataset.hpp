#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file dataset.hpp
 * @brief Multiple-choice benchmark ingestion and validation.
 *
 * Two on-disk formats are supported:
 *
 * - canonical lines: one JSON object per line with fields
 *   {"id", "subject", "question", "options", "answer"} where answer is the
 *   gold option letter. This is the format the library writes; loading and
 *   re-serializing a canonical file is byte-stable.
 * - delimited table: CSV/TSV import driven by an explicit column mapping
 *   (see DelimitedMapping), covering benchmarks published as spreadsheets.
 *
 * Loads are all-or-nothing: any invalid record rejects the whole file with
 * a line-numbered diagnostic. Option counts may vary per record (2..26);
 * metrics downstream always use the record's own K.
 */

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include <reinfer/error.hpp>
#include <reinfer/hash.hpp>
#include <reinfer/metrics.hpp>

namespace reinfer {

// ============================================================================
// Records
// ============================================================================

struct Question {
  std::string id;
  std::string subject;
  std::string stem;
  std::vector<std::string> options;
  int gold = 0;  ///< index into options

  int option_count() const noexcept { return static_cast<int>(options.size()); }
};

/// Gold-free view of a question. Prompt builders accept only this type, so
/// the gold label can never flow into any prompt input.
struct QuestionView {
  const std::string& id;
  const std::string& subject;
  const std::string& stem;
  const std::vector<std::string>& options;

  int option_count() const noexcept { return static_cast<int>(options.size()); }
};

inline QuestionView gold_free(const Question& q) {
  return QuestionView{q.id, q.subject, q.stem, q.options};
}

inline char option_letter(int index) { return static_cast<char>('A' + index); }

inline std::optional<int> option_index_from_letter(char c, int k) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  const int idx = c - 'A';
  if (idx < 0 || idx >= k) return std::nullopt;
  return idx;
}

// ============================================================================
// Dataset
// ============================================================================

class Dataset {
 public:
  /// Validates every record; throws ValidationError / EmptyDataset.
  static Dataset from_questions(std::vector<Question> questions) {
    if (questions.empty())
      fail(ErrorCode::EmptyDataset, "dataset contains no questions");
    Dataset d;
    d.questions_ = std::move(questions);
    std::unordered_set<std::string> seen_subjects;
    std::unordered_map<int, std::size_t> k_counts;
    for (std::size_t i = 0; i < d.questions_.size(); ++i) {
      const Question& q = d.questions_[i];
      validate_question(q);
      if (!d.by_id_.emplace(q.id, i).second)
        fail(ErrorCode::ValidationError, "duplicate question id '" + q.id + "'");
      if (seen_subjects.insert(q.subject).second)
        d.subjects_.push_back(q.subject);
      ++k_counts[q.option_count()];
    }
    std::size_t best = 0;
    for (const auto& [k, n] : k_counts)
      if (n > best || (n == best && k < d.k_mode_)) {
        best = n;
        d.k_mode_ = k;
      }
    return d;
  }

  const std::vector<Question>& questions() const noexcept { return questions_; }
  std::size_t size() const noexcept { return questions_.size(); }

  /// Subjects in first-appearance order.
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }

  /// Dominant option count across records.
  int k_mode() const noexcept { return k_mode_; }

  const Question* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &questions_[it->second];
  }

 private:
  static void validate_question(const Question& q) {
    auto reject = [&](const std::string& why) {
      fail(ErrorCode::ValidationError, "question '" + q.id + "': " + why);
    };
    if (q.id.empty()) fail(ErrorCode::ValidationError, "question with empty id");
    if (q.subject.empty()) reject("empty subject");
    if (q.stem.empty()) reject("empty question text");
    const int k = q.option_count();
    if (k < kMinOptions || k > kMaxOptions)
      reject("option count " + std::to_string(k) + " out of [2, 26]");
    for (const std::string& o : q.options)
      if (o.empty()) reject("empty option text");
    if (q.gold < 0 || q.gold >= k)
      reject("gold index " + std::to_string(q.gold) + " out of range");
  }

  std::vector<Question> questions_;
  std::vector<std::string> subjects_;
  std::unordered_map<std::string, std::size_t> by_id_;
  int k_mode_ = 0;
};

// ============================================================================
// Canonical line format
// ============================================================================

inline std::string canonical_line(const Question& q) {
  nlohmann::ordered_json j;
  j["id"] = q.id;
  j["subject"] = q.subject;
  j["question"] = q.stem;
  j["options"] = q.options;
  j["answer"] = std::string(1, option_letter(q.gold));
  return j.dump();
}

inline std::string serialize_dataset(const Dataset& d) {
  std::string out;
  for (const Question& q : d.questions()) {
    out += canonical_line(q);
    out += '\n';
  }
  return out;
}

/// Content digest over the canonical serialization; recorded in run
/// manifests and checked on resume.
inline std::string dataset_digest(const Dataset& d) {
  std::uint64_t h = fnv1a64("reinfer.dataset.v1");
  for (const Question& q : d.questions()) {
    h = fnv1a64_append(h, canonical_line(q));
    h = fnv1a64_append(h, "\n");
  }
  return hex_digest(h);
}

inline void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for write");
  out << serialize_dataset(d);
  out.flush();
  if (!out) fail(ErrorCode::IOFailure, "write to '" + path + "' failed");
}

// ============================================================================
// Loading
// ============================================================================

enum class DatasetFormat { CanonicalLines, DelimitedTable };

/// Column mapping for delimited-table import. Column indices are 0-based;
/// -1 for id_col synthesizes row ids, -1 for subject_col uses "all".
/// Options occupy the inclusive column range [options_first, options_last];
/// trailing empty cells shrink K for that record.
struct DelimitedMapping {
  char delimiter = '\t';
  bool has_header = false;
  int id_col = -1;
  int subject_col = -1;
  int question_col = 0;
  int options_first = 1;
  int options_last = 4;
  int answer_col = 5;
};

namespace detail {

inline std::vector<std::string> split_delimited_row(const std::string& line,
                                                    char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"' && cell.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline Question question_from_json_line(const std::string& line, int line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line_no) + ": " + e.what());
  }
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!j.contains(field))
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                      ": missing field '" + field + "'");
    return j.at(field);
  };
  Question q;
  try {
    q.id = require("id").get<std::string>();
    q.subject = require("subject").get<std::string>();
    q.stem = require("question").get<std::string>();
    q.options = require("options").get<std::vector<std::string>>();
    const auto& ans = require("answer");
    if (ans.is_string()) {
      const std::string s = ans.get<std::string>();
      auto idx = s.size() == 1
                     ? option_index_from_letter(s[0], q.option_count())
                     : std::nullopt;
      if (!idx)
        fail(ErrorCode::ValidationError,
             "line " + std::to_string(line_no) + ": answer letter '" + s +
                 "' out of range for " + std::to_string(q.option_count()) +
                 " options");
      q.gold = *idx;
    } else if (ans.is_number_integer()) {
      q.gold = ans.get<int>();
    } else {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                      ": answer must be a letter or index");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line_no) + ": " + e.what());
  }
  return q;
}

inline Question question_from_row(const std::vector<std::string>& cells,
                                  const DelimitedMapping& m, int line_no,
                                  int row_index) {
  auto cell = [&](int col) -> const std::string& {
    static const std::string empty;
    if (col < 0 || col >= static_cast<int>(cells.size())) return empty;
    return cells[static_cast<size_t>(col)];
  };
  Question q;
  q.id = m.id_col >= 0 ? cell(m.id_col) : "row-" + std::to_string(row_index);
  q.subject = m.subject_col >= 0 ? cell(m.subject_col) : "all";
  q.stem = cell(m.question_col);
  for (int c = m.options_first; c <= m.options_last; ++c)
    q.options.push_back(cell(c));
  while (!q.options.empty() && q.options.back().empty()) q.options.pop_back();
  for (const std::string& o : q.options)
    if (o.empty())
      fail(ErrorCode::ValidationError,
           "line " + std::to_string(line_no) +
               ": empty option cell inside the option range");
  const std::string& ans = cell(m.answer_col);
  if (ans.empty())
    fail(ErrorCode::ValidationError,
         "line " + std::to_string(line_no) + ": empty answer cell");
  if (ans.size() == 1 && std::isalpha(static_cast<unsigned char>(ans[0]))) {
    auto idx = option_index_from_letter(ans[0], q.option_count());
    if (!idx)
      fail(ErrorCode::ValidationError,
           "line " + std::to_string(line_no) + ": answer letter '" + ans +
               "' out of range");
    q.gold = *idx;
  } else {
    try {
      q.gold = std::stoi(ans);
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "line " + std::to_string(line_no) +
                                           ": unparseable answer '" + ans +
                                           "'");
    }
  }
  return q;
}

}  // namespace detail

inline Dataset load_dataset(const std::string& path, DatasetFormat format,
                            const DelimitedMapping& mapping = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOFailure, "cannot open dataset '" + path + "'");
  std::vector<Question> questions;
  std::string line;
  int line_no = 0;
  int row_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == DatasetFormat::CanonicalLines) {
      questions.push_back(detail::question_from_json_line(line, line_no));
    } else {
      if (mapping.has_header && line_no == 1) continue;
      questions.push_back(detail::question_from_row(
          detail::split_delimited_row(line, mapping.delimiter), mapping,
          line_no, row_index));
      ++row_index;
    }
  }
  return Dataset::from_questions(std::move(questions));
}

// ============================================================================
// Subject partition
// ============================================================================

/// Disjoint partition covering all questions, iterated in first-appearance
/// order of the subjects.
using SubjectPartition =
    std::vector<std::pair<std::string, std::vector<const Question*>>>;

inline SubjectPartition subject_partition(const Dataset& d) {
  SubjectPartition out;
  std::unordered_map<std::string, std::size_t> index;
  for (const Question& q : d.questions()) {
    auto [it, inserted] = index.emplace(q.subject, out.size());
    if (inserted) out.push_back({q.subject, {}});
    out[it->second].second.push_back(&q);
  }
  return out;
}

}  // namespace reinfer
