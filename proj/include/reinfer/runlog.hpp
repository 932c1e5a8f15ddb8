#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file runlog.hpp
 * @brief Durable, replayable persistence of inference traces.
 *
 * File layout: one manifest line followed by one JSON record per line,
 * UTF-8, schema-versioned. Appends are serialized and flushed line-wise, so
 * a crash leaves at most one torn final line, which load skips with a
 * warning. Existing lines are never mutated or reordered; resumption works
 * off question ids, not file positions.
 */

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <reinfer/dataset.hpp>
#include <reinfer/error.hpp>
#include <reinfer/record.hpp>

namespace reinfer {

// ============================================================================
// Writer
// ============================================================================

/// Append-only log writer. Many producers may call append(); writes are
/// serialized internally.
class RunLog {
 public:
  /// Start a fresh log (truncates); writes the manifest line immediately.
  static RunLog create(const std::string& path, RunManifest manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IOFailure, "cannot create run log '" + path + "'");
    out << manifest_to_line(manifest) << '\n';
    out.flush();
    if (!out) fail(ErrorCode::IOFailure, "write to '" + path + "' failed");
    return RunLog(path, std::move(manifest), /*append=*/true);
  }

  /// Reopen an existing log for appending. The stored manifest must be
  /// compatible with the expected one.
  static RunLog open_append(const std::string& path,
                            const RunManifest& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IOFailure, "cannot open run log '" + path + "'");
    std::string first_line;
    if (!std::getline(in, first_line))
      fail(ErrorCode::CorruptManifest, "run log '" + path + "' is empty");
    RunManifest stored = manifest_from_line(first_line);
    if (!stored.compatible_with(expected))
      fail(ErrorCode::ManifestMismatch,
           "existing run log '" + path + "' was written under a different "
           "configuration");
    return RunLog(path, std::move(stored), /*append=*/true);
  }

  /// Validate the record against the manifest and append one line.
  void append(const InferenceRecord& r) {
    validate_record_shape(manifest_.mode, r);
    if (!(r.thresholds_used == manifest_.thresholds))
      fail(ErrorCode::ManifestMismatch,
           "record '" + r.question_id +
               "' carries thresholds different from the manifest");
    const std::string line = record_to_line(r);
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line << '\n';
    out_.flush();
    if (!out_) fail(ErrorCode::IOFailure, "append to run log failed");
    ++count_;
  }

  const RunManifest& manifest() const noexcept { return manifest_; }
  std::size_t appended() const noexcept { return count_; }
  const std::string& path() const noexcept { return path_; }

  RunLog(RunLog&& other) noexcept
      : path_(std::move(other.path_)),
        manifest_(std::move(other.manifest_)),
        out_(std::move(other.out_)),
        count_(other.count_) {}

 private:
  RunLog(std::string path, RunManifest manifest, bool append)
      : path_(std::move(path)), manifest_(std::move(manifest)) {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) fail(ErrorCode::IOFailure, "cannot append to '" + path_ + "'");
    (void)append;
  }

  std::string path_;
  RunManifest manifest_;
  std::ofstream out_;
  std::mutex mu_;
  std::size_t count_ = 0;
};

// ============================================================================
// Loader
// ============================================================================

struct LoadedRunLog {
  RunManifest manifest;
  std::vector<InferenceRecord> records;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool metrics_consistent(const PassTrace& t, int k, int gold,
                               double tol = 1e-9) {
  if (!t.distribution.has_value()) return true;
  const AnswerDistribution& d = *t.distribution;
  if (d.option_count() != k) return false;
  const UncertaintyMetrics m = compute_metrics(d);
  const ScoringValues s = compute_scoring(d, gold);
  auto close = [tol](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
    return std::abs(a - b) <= tol;
  };
  return close(m.entropy_nats, t.metrics.entropy_nats) &&
         close(m.normalized_entropy, t.metrics.normalized_entropy) &&
         close(m.msp, t.metrics.msp) && close(s.brier, t.scoring.brier) &&
         close(s.nll, t.scoring.nll);
}

}  // namespace detail

/**
 * Load manifest plus records. With check_consistency on, every record's
 * stored metrics are recomputed from its stored distribution and must match
 * within 1e-9. A torn final line is skipped with a warning; corruption
 * anywhere else is an IntegrityFailure.
 */
inline LoadedRunLog load_runlog(const std::string& path,
                                bool check_consistency = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOFailure, "cannot open run log '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::CorruptManifest, "run log '" + path + "' is empty");
  LoadedRunLog log;
  log.manifest = manifest_from_line(line);

  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      log.records.push_back(record_from_line(lines[i]));
    } catch (const Error&) {
      if (i + 1 == lines.size()) {
        log.warnings.push_back("skipped torn final line " +
                               std::to_string(i + 2));
        break;
      }
      fail(ErrorCode::IntegrityFailure,
           "corrupt record at line " + std::to_string(i + 2) + " of '" +
               path + "'");
    }
    if (check_consistency) {
      const InferenceRecord& r = log.records.back();
      if (!detail::metrics_consistent(r.pass1, r.k, r.gold) ||
          (r.pass2.has_value() &&
           !detail::metrics_consistent(*r.pass2, r.k, r.gold)))
        fail(ErrorCode::IntegrityFailure,
             "stored metrics for record '" + r.question_id +
                 "' do not match the stored distribution");
    }
  }
  return log;
}

// ============================================================================
// Resume planning
// ============================================================================

/// Question ids still to run: dataset order minus completed records. The
/// manifest's dataset digest must match the dataset.
inline std::vector<std::string> resume_plan(
    const RunManifest& manifest, const std::vector<InferenceRecord>& records,
    const Dataset& dataset) {
  if (manifest.dataset_digest != dataset_digest(dataset))
    fail(ErrorCode::DatasetDigestMismatch,
         "run log was recorded against a different dataset");
  std::unordered_set<std::string> done;
  done.reserve(records.size());
  for (const InferenceRecord& r : records) done.insert(r.question_id);
  std::vector<std::string> pending;
  for (const Question& q : dataset.questions())
    if (!done.contains(q.id)) pending.push_back(q.id);
  return pending;
}

// ============================================================================
// Integrity verification
// ============================================================================

struct VerifyReport {
  std::size_t records = 0;
  std::size_t warnings = 0;
  std::vector<std::string> problems;

  bool ok() const noexcept { return problems.empty(); }
};

/// Full integrity pass: metric recomputation, per-mode record shape, and
/// answer/correctness cross-checks.
inline VerifyReport verify_runlog(const std::string& path) {
  VerifyReport report;
  LoadedRunLog log = load_runlog(path, /*check_consistency=*/true);
  report.records = log.records.size();
  report.warnings = log.warnings.size();
  for (const InferenceRecord& r : log.records) {
    auto problem = [&](const std::string& why) {
      report.problems.push_back("record '" + r.question_id + "': " + why);
    };
    try {
      validate_record_shape(log.manifest.mode, r);
    } catch (const Error& e) {
      report.problems.push_back(e.what());
    }
    const bool baseline = r.pass1.extracted_answer.has_value() &&
                          *r.pass1.extracted_answer == r.gold;
    if (baseline != r.baseline_correct)
      problem("baseline_correct does not match the first-pass answer");
    const bool final_ok =
        r.final_answer.has_value() && *r.final_answer == r.gold;
    if (final_ok != r.final_correct)
      problem("final_correct does not match the final answer");
    const std::optional<int> expected_final =
        r.pass2.has_value() && r.pass2->extracted_answer.has_value()
            ? r.pass2->extracted_answer
            : r.pass1.extracted_answer;
    if (expected_final != r.final_answer)
      problem("final answer is not the expected pass selection");
  }
  return report;
}

}  // namespace reinfer
