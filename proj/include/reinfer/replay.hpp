#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file replay.hpp
 * @brief Offline policy evaluation over uniform re-ask logs.
 *
 * With deterministic decoding the second pass is a fixed function of the
 * question, so a cached uniform-re-ask (UR) log contains everything needed
 * to evaluate any threshold pair exactly: for each record, take the
 * second-pass answer iff the trigger would have fired on the stored
 * first-pass metrics, otherwise keep the first-pass answer. A whole
 * threshold sweep therefore costs zero extra inference.
 */

#include <cstddef>
#include <span>
#include <vector>

#include <reinfer/error.hpp>
#include <reinfer/policy.hpp>
#include <reinfer/record.hpp>

namespace reinfer {

namespace detail {

/// Final answer a TR run at thresholds `t` would have produced for this
/// record. A second pass whose answer failed to parse keeps the first-pass
/// answer, matching the live-run policy.
inline std::optional<int> replay_final_answer(const InferenceRecord& r,
                                              const TriggerThresholds& t,
                                              bool& reasked) {
  reasked = should_reask(r.pass1.metrics, t);
  if (reasked && r.pass2.has_value() && r.pass2->extracted_answer.has_value())
    return r.pass2->extracted_answer;
  return r.pass1.extracted_answer;
}

}  // namespace detail

/// Replay one threshold pair over a UR log. Every record must carry a
/// second pass; the result is deterministic and independent of record
/// order or partitioning (it only merges counts).
inline SweepPoint evaluate_policy_offline(
    std::span<const InferenceRecord> ur_log, const TriggerThresholds& t) {
  if (ur_log.empty())
    fail(ErrorCode::IncompleteLog, "cannot replay an empty log");
  SweepPoint point;
  point.thresholds = t;
  point.total = ur_log.size();
  for (const InferenceRecord& r : ur_log) {
    if (!r.pass2.has_value())
      fail(ErrorCode::IncompleteLog,
           "record '" + r.question_id +
               "' has no second pass; offline replay requires a UR log");
    bool reasked = false;
    const auto final_answer = detail::replay_final_answer(r, t, reasked);
    if (reasked) ++point.reasked;
    if (final_answer.has_value() && *final_answer == r.gold)
      ++point.final_correct;
  }
  point.reask_rate =
      static_cast<double>(point.reasked) / static_cast<double>(point.total);
  point.final_accuracy = static_cast<double>(point.final_correct) /
                         static_cast<double>(point.total);
  return point;
}

/// Replay every pair of a grid; one SweepPoint per pair, grid order.
inline std::vector<SweepPoint> sweep_policies_offline(
    std::span<const InferenceRecord> ur_log,
    const std::vector<TriggerThresholds>& grid) {
  if (grid.empty()) fail(ErrorCode::EmptyGrid, "sweep grid is empty");
  std::vector<SweepPoint> points;
  points.reserve(grid.size());
  for (const TriggerThresholds& t : grid)
    points.push_back(evaluate_policy_offline(ur_log, t));
  return points;
}

}  // namespace reinfer
