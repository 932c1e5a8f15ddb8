#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

// Shared fabrication helpers for the test suites: hand-built records with
// prescribed distributions, and small synthetic logs.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <reinfer/metrics.hpp>
#include <reinfer/record.hpp>

namespace test_helpers {

using namespace reinfer;

/// Distribution with `mass` on `target` and the rest spread evenly.
inline AnswerDistribution peaked(int k, int target, double mass) {
  std::vector<double> p(static_cast<size_t>(k),
                        (1.0 - mass) / static_cast<double>(k - 1));
  p[static_cast<size_t>(target)] = mass;
  return AnswerDistribution::from_probs(p);
}

inline PassTrace make_trace(const AnswerDistribution& dist, int gold,
                            std::optional<int> answer,
                            const std::string& output = "The answer is (A)") {
  PassTrace t;
  t.prompt_hash = "0000000000000000";
  t.output_text = output;
  t.extracted_answer = answer;
  t.distribution = dist;
  t.metrics = compute_metrics(dist);
  t.scoring = compute_scoring(dist, gold);
  t.timestamp_ms = 1;
  t.latency_ms = 0.5;
  return t;
}

/// Two-pass record with prescribed answers and first-pass distribution.
inline InferenceRecord make_record(const std::string& id, int k, int gold,
                                   const AnswerDistribution& first_dist,
                                   int first_answer,
                                   std::optional<int> second_answer,
                                   const TriggerThresholds& thresholds,
                                   bool trigger_fired) {
  InferenceRecord r;
  r.question_id = id;
  r.subject = "all";
  r.k = k;
  r.gold = gold;
  r.pass1 = make_trace(first_dist, gold, first_answer);
  r.trigger_fired = trigger_fired;
  r.thresholds_used = thresholds;
  if (second_answer.has_value()) {
    const auto second_dist = peaked(k, *second_answer, 0.9);
    r.pass2 = make_trace(second_dist, gold, second_answer);
    r.final_answer = second_answer;
  } else {
    r.final_answer = first_answer;
  }
  r.baseline_correct = first_answer == gold;
  r.final_correct = r.final_answer.has_value() && *r.final_answer == gold;
  return r;
}

/// Random UR-style log: every record has both passes; first-pass
/// uncertainty varies so triggers split both ways under mid thresholds.
inline std::vector<InferenceRecord> random_ur_log(std::mt19937_64& eng,
                                                  std::size_t n, int k = 10) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TriggerThresholds t{0.8, 0.6};
  std::vector<InferenceRecord> log;
  log.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int gold = static_cast<int>(eng() % static_cast<std::uint64_t>(k));
    const bool confident = u(eng) < 0.5;
    const double mass = confident ? 0.75 + 0.24 * u(eng) : 0.12 + 0.2 * u(eng);
    const int first_answer =
        u(eng) < (confident ? 0.9 : 0.35)
            ? gold
            : static_cast<int>((gold + 1 + eng() % (k - 1)) % k);
    const auto dist = peaked(k, first_answer, mass);
    const int second_answer =
        u(eng) < 0.6 ? gold
                     : static_cast<int>((gold + 1 + eng() % (k - 1)) % k);
    log.push_back(make_record("q" + std::to_string(i), k, gold, dist,
                              first_answer, second_answer, t,
                              should_reask(compute_metrics(dist), t)));
  }
  return log;
}

}  // namespace test_helpers
