#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file record.hpp
 * @brief Per-question trace records and the run manifest.
 *
 * One InferenceRecord captures a question's full trace: first pass, trigger
 * decision, optional second pass, final answer and correctness. The gold
 * index is stored for post-hoc scoring but is structurally separated from
 * all prompt inputs (prompt builders only ever see QuestionView).
 *
 * JSON mapping lives here so the run log, replay and analysis all agree on
 * one schema. Doubles serialize with shortest round-trip precision.
 */

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <reinfer/backend.hpp>
#include <reinfer/error.hpp>
#include <reinfer/metrics.hpp>
#include <reinfer/policy.hpp>
#include <reinfer/prompts.hpp>

namespace reinfer {

inline constexpr int kRunLogSchemaVersion = 1;

// ============================================================================
// Enums
// ============================================================================

enum class RunMode { Baseline, TR, UR, PromptOnly };

inline const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Baseline: return "baseline";
    case RunMode::TR: return "tr";
    case RunMode::UR: return "ur";
    case RunMode::PromptOnly: return "prompt_only";
  }
  return "baseline";
}

inline RunMode run_mode_from(const std::string& s) {
  if (s == "baseline") return RunMode::Baseline;
  if (s == "tr") return RunMode::TR;
  if (s == "ur") return RunMode::UR;
  if (s == "prompt_only") return RunMode::PromptOnly;
  fail(ErrorCode::ParseError, "unknown run mode '" + s + "'");
}

enum class ExtractionFlag {
  Pass1ParseFailed,
  Pass1DistributionFallback,
  Pass2ParseFailed,
  Pass2DistributionFallback,
  FinalFromPass1,
};

inline const char* extraction_flag_name(ExtractionFlag f) {
  switch (f) {
    case ExtractionFlag::Pass1ParseFailed: return "pass1_parse_failed";
    case ExtractionFlag::Pass1DistributionFallback:
      return "pass1_distribution_fallback";
    case ExtractionFlag::Pass2ParseFailed: return "pass2_parse_failed";
    case ExtractionFlag::Pass2DistributionFallback:
      return "pass2_distribution_fallback";
    case ExtractionFlag::FinalFromPass1: return "final_from_pass1";
  }
  return "unknown";
}

inline ExtractionFlag extraction_flag_from(const std::string& s) {
  if (s == "pass1_parse_failed") return ExtractionFlag::Pass1ParseFailed;
  if (s == "pass1_distribution_fallback")
    return ExtractionFlag::Pass1DistributionFallback;
  if (s == "pass2_parse_failed") return ExtractionFlag::Pass2ParseFailed;
  if (s == "pass2_distribution_fallback")
    return ExtractionFlag::Pass2DistributionFallback;
  if (s == "final_from_pass1") return ExtractionFlag::FinalFromPass1;
  fail(ErrorCode::ParseError, "unknown extraction flag '" + s + "'");
}

// ============================================================================
// Traces
// ============================================================================

/// Everything recorded for one model pass. Metrics are recomputable from
/// the stored distribution (within 1e-9); scoring is computed post hoc and
/// never shown to any prompt.
struct PassTrace {
  std::string prompt_hash;
  std::string output_text;
  std::optional<int> extracted_answer;
  std::optional<AnswerDistribution> distribution;
  bool distribution_fallback = false;
  UncertaintyMetrics metrics;
  ScoringValues scoring;
  std::int64_t timestamp_ms = 0;
  double latency_ms = 0.0;
};

struct InferenceRecord {
  std::string question_id;
  std::string subject;
  int k = 0;
  int gold = 0;
  PassTrace pass1;
  bool trigger_fired = false;
  TriggerThresholds thresholds_used;
  std::optional<PassTrace> pass2;
  std::optional<int> final_answer;
  bool final_correct = false;
  bool baseline_correct = false;
  std::vector<ExtractionFlag> flags;
};

struct RunManifest {
  int schema_version = kRunLogSchemaVersion;
  std::string run_id;
  RunMode mode = RunMode::Baseline;
  InferenceParams params;
  TriggerThresholds thresholds;
  std::string dataset_digest;
  TemplateHashes template_hashes;
  std::uint64_t seed = 0;
  std::string backend_kind = "sim";

  bool compatible_with(const RunManifest& other) const {
    return schema_version == other.schema_version && mode == other.mode &&
           params == other.params && thresholds == other.thresholds &&
           dataset_digest == other.dataset_digest &&
           template_hashes == other.template_hashes && seed == other.seed &&
           backend_kind == other.backend_kind;
  }
};

// ============================================================================
// Mode-shape validation
// ============================================================================

/// Enforce the per-mode pass2 contract: tr has a second pass iff the
/// trigger fired, ur always, baseline and prompt_only never.
inline void validate_record_shape(RunMode mode, const InferenceRecord& r) {
  auto mismatch = [&](const std::string& why) {
    fail(ErrorCode::ManifestMismatch,
         "record '" + r.question_id + "': " + why);
  };
  switch (mode) {
    case RunMode::Baseline:
    case RunMode::PromptOnly:
      if (r.pass2.has_value()) mismatch("second pass in a single-pass mode");
      if (r.trigger_fired) mismatch("trigger fired in a single-pass mode");
      break;
    case RunMode::TR:
      if (r.pass2.has_value() != r.trigger_fired)
        mismatch("second pass must be present exactly when the trigger fired");
      break;
    case RunMode::UR:
      if (!r.pass2.has_value()) mismatch("uniform mode requires a second pass");
      break;
  }
}

// ============================================================================
// JSON mapping
// ============================================================================

namespace detail {

using ordered_json = nlohmann::ordered_json;

/// +inf (the NLL sentinel) serializes as null; JSON has no infinity.
inline ordered_json json_from_double(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

inline double double_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

inline ordered_json to_json(const TriggerThresholds& t) {
  return ordered_json{{"tau_h", t.tau_h}, {"tau_msp", t.tau_msp}};
}

inline TriggerThresholds thresholds_from_json(const nlohmann::json& j) {
  return TriggerThresholds{j.at("tau_h").get<double>(),
                           j.at("tau_msp").get<double>()};
}

inline ordered_json to_json(const InferenceParams& p) {
  return ordered_json{{"model", p.model_name},
                      {"temperature", p.temperature},
                      {"max_tokens", p.max_tokens},
                      {"top_p", p.top_p},
                      {"frequency_penalty", p.frequency_penalty},
                      {"presence_penalty", p.presence_penalty},
                      {"logprobs", p.logprobs_enabled},
                      {"top_logprobs", p.top_logprobs}};
}

inline InferenceParams params_from_json(const nlohmann::json& j) {
  InferenceParams p;
  p.model_name = j.at("model").get<std::string>();
  p.temperature = j.at("temperature").get<double>();
  p.max_tokens = j.at("max_tokens").get<int>();
  p.top_p = j.at("top_p").get<double>();
  p.frequency_penalty = j.at("frequency_penalty").get<double>();
  p.presence_penalty = j.at("presence_penalty").get<double>();
  p.logprobs_enabled = j.at("logprobs").get<bool>();
  p.top_logprobs = j.at("top_logprobs").get<int>();
  return p;
}

inline ordered_json to_json(const PassTrace& t) {
  ordered_json j;
  j["prompt_hash"] = t.prompt_hash;
  j["output"] = t.output_text;
  j["answer"] = t.extracted_answer.has_value()
                    ? ordered_json(*t.extracted_answer)
                    : ordered_json(nullptr);
  j["distribution"] = t.distribution.has_value()
                          ? ordered_json(t.distribution->probs())
                          : ordered_json(nullptr);
  j["distribution_fallback"] = t.distribution_fallback;
  j["entropy_nats"] = t.metrics.entropy_nats;
  j["normalized_entropy"] = t.metrics.normalized_entropy;
  j["msp"] = t.metrics.msp;
  j["brier"] = json_from_double(t.scoring.brier);
  j["nll"] = json_from_double(t.scoring.nll);
  j["timestamp_ms"] = t.timestamp_ms;
  j["latency_ms"] = t.latency_ms;
  return j;
}

inline PassTrace pass_trace_from_json(const nlohmann::json& j) {
  PassTrace t;
  t.prompt_hash = j.at("prompt_hash").get<std::string>();
  t.output_text = j.at("output").get<std::string>();
  if (!j.at("answer").is_null()) t.extracted_answer = j.at("answer").get<int>();
  if (!j.at("distribution").is_null())
    t.distribution = AnswerDistribution::from_probs(
        j.at("distribution").get<std::vector<double>>());
  t.distribution_fallback = j.at("distribution_fallback").get<bool>();
  t.metrics.entropy_nats = j.at("entropy_nats").get<double>();
  t.metrics.normalized_entropy = j.at("normalized_entropy").get<double>();
  t.metrics.msp = j.at("msp").get<double>();
  t.scoring.brier = double_from_json(j.at("brier"));
  t.scoring.nll = double_from_json(j.at("nll"));
  t.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  t.latency_ms = j.at("latency_ms").get<double>();
  return t;
}

}  // namespace detail

inline std::string record_to_line(const InferenceRecord& r) {
  detail::ordered_json j;
  j["id"] = r.question_id;
  j["subject"] = r.subject;
  j["k"] = r.k;
  j["gold"] = r.gold;
  j["pass1"] = detail::to_json(r.pass1);
  j["trigger_fired"] = r.trigger_fired;
  j["thresholds"] = detail::to_json(r.thresholds_used);
  j["pass2"] = r.pass2.has_value() ? detail::to_json(*r.pass2)
                                   : detail::ordered_json(nullptr);
  j["final_answer"] = r.final_answer.has_value()
                          ? detail::ordered_json(*r.final_answer)
                          : detail::ordered_json(nullptr);
  j["final_correct"] = r.final_correct;
  j["baseline_correct"] = r.baseline_correct;
  auto flags = nlohmann::ordered_json::array();
  for (ExtractionFlag f : r.flags) flags.push_back(extraction_flag_name(f));
  j["flags"] = flags;
  return j.dump();
}

inline InferenceRecord record_from_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("record line: ") + e.what());
  }
  InferenceRecord r;
  try {
    r.question_id = j.at("id").get<std::string>();
    r.subject = j.at("subject").get<std::string>();
    r.k = j.at("k").get<int>();
    r.gold = j.at("gold").get<int>();
    r.pass1 = detail::pass_trace_from_json(j.at("pass1"));
    r.trigger_fired = j.at("trigger_fired").get<bool>();
    r.thresholds_used = detail::thresholds_from_json(j.at("thresholds"));
    if (!j.at("pass2").is_null())
      r.pass2 = detail::pass_trace_from_json(j.at("pass2"));
    if (!j.at("final_answer").is_null())
      r.final_answer = j.at("final_answer").get<int>();
    r.final_correct = j.at("final_correct").get<bool>();
    r.baseline_correct = j.at("baseline_correct").get<bool>();
    for (const auto& f : j.at("flags"))
      r.flags.push_back(extraction_flag_from(f.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("record line: ") + e.what());
  }
  return r;
}

inline std::string manifest_to_line(const RunManifest& m) {
  detail::ordered_json j;
  j["schema_version"] = m.schema_version;
  j["run_id"] = m.run_id;
  j["mode"] = run_mode_name(m.mode);
  j["params"] = detail::to_json(m.params);
  j["thresholds"] = detail::to_json(m.thresholds);
  j["dataset_digest"] = m.dataset_digest;
  j["template_hashes"] =
      detail::ordered_json{{"first_pass_system", m.template_hashes.first_pass_system},
                           {"prompt_only_system", m.template_hashes.prompt_only_system},
                           {"reask_instruction", m.template_hashes.reask_instruction}};
  j["seed"] = m.seed;
  j["backend"] = m.backend_kind;
  return j.dump();
}

inline RunManifest manifest_from_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptManifest, e.what());
  }
  RunManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kRunLogSchemaVersion)
      fail(ErrorCode::SchemaVersionUnsupported,
           "run log schema version " + std::to_string(m.schema_version) +
               " is not supported");
    m.run_id = j.at("run_id").get<std::string>();
    m.mode = run_mode_from(j.at("mode").get<std::string>());
    m.params = detail::params_from_json(j.at("params"));
    m.thresholds = detail::thresholds_from_json(j.at("thresholds"));
    m.dataset_digest = j.at("dataset_digest").get<std::string>();
    const auto& th = j.at("template_hashes");
    m.template_hashes =
        TemplateHashes{th.at("first_pass_system").get<std::string>(),
                       th.at("prompt_only_system").get<std::string>(),
                       th.at("reask_instruction").get<std::string>()};
    m.seed = j.at("seed").get<std::uint64_t>();
    m.backend_kind = j.at("backend").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptManifest, e.what());
  }
  return m;
}

}  // namespace reinfer
