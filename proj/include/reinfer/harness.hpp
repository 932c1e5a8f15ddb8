#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file harness.hpp
 * @brief Orchestration of the four run modes plus the offline tools.
 *
 * Modes:
 * - baseline:    first pass only, its answer is final.
 * - tr:          first pass, uncertainty check, one conditional second pass.
 * - ur:          unconditional second pass for every question.
 * - prompt_only: single pass under the re-ask wording, no first attempt.
 *
 * Questions are processed by a work-stealing pool up to the configured
 * parallelism; a question's two passes stay strictly sequential. Completed
 * records go through the single serialized log appender, so partial
 * progress always survives for resumption.
 */

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <reinfer/analysis.hpp>
#include <reinfer/backend.hpp>
#include <reinfer/dataset.hpp>
#include <reinfer/error.hpp>
#include <reinfer/extract.hpp>
#include <reinfer/policy.hpp>
#include <reinfer/prompts.hpp>
#include <reinfer/record.hpp>
#include <reinfer/replay.hpp>
#include <reinfer/runlog.hpp>
#include <reinfer/simulator.hpp>

namespace reinfer {

// ============================================================================
// Configuration
// ============================================================================

struct RunConfig {
  RunMode mode = RunMode::TR;
  TriggerThresholds thresholds{0.8, 0.6};
  InferenceParams params;
  std::string dataset_path;
  DatasetFormat dataset_format = DatasetFormat::CanonicalLines;
  DelimitedMapping mapping;
  std::string backend = "sim";  ///< "sim" or "live"
  std::string endpoint;
  std::string api_key_env = "RI_API_KEY";
  SimConfig sim;
  int parallelism = 4;
  std::size_t budget = 0;  ///< 0 -> 2 * dataset size + 10%
  std::uint64_t seed = 0;
  std::string out_path;
  bool quiet = false;
  RetryPolicy retry;
  double prob_floor = kDefaultProbFloor;
};

struct RunSummary {
  std::size_t total = 0;
  std::size_t completed = 0;
  std::size_t resumed = 0;
  std::size_t reasked = 0;
  std::size_t baseline_correct = 0;
  std::size_t final_correct = 0;
  std::size_t backend_calls = 0;
  double baseline_accuracy = 0.0;
  double final_accuracy = 0.0;
  double reask_rate = 0.0;
};

// ============================================================================
// Internals
// ============================================================================

namespace detail {

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline PassTrace run_pass(CompletionClient& client, const PromptPair& prompt,
                          const InferenceParams& params, const Question& q,
                          double prob_floor, bool second_pass,
                          std::vector<ExtractionFlag>& flags) {
  PassTrace trace;
  trace.prompt_hash = prompt_hash(prompt);
  const auto t0 = std::chrono::steady_clock::now();
  const ModelOutput out = client.complete(prompt, params);
  trace.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  trace.timestamp_ms = now_ms();
  trace.output_text = out.text;
  trace.extracted_answer = extract_answer(out.text, q.option_count());
  if (!trace.extracted_answer.has_value())
    flags.push_back(second_pass ? ExtractionFlag::Pass2ParseFailed
                                : ExtractionFlag::Pass1ParseFailed);
  DistributionExtraction de = [&] {
    try {
      return extract_option_distribution(out, trace.extracted_answer,
                                         q.option_count(), prob_floor);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingLogprobs) throw;
      // No usable candidate list: fall back to the honest no-information
      // distribution rather than aborting a long run.
      return DistributionExtraction{
          AnswerDistribution::uniform(q.option_count()), true};
    }
  }();
  if (de.uniform_fallback)
    flags.push_back(second_pass ? ExtractionFlag::Pass2DistributionFallback
                                : ExtractionFlag::Pass1DistributionFallback);
  trace.distribution_fallback = de.uniform_fallback;
  trace.metrics = compute_metrics(de.distribution);
  trace.scoring = compute_scoring(de.distribution, q.gold, prob_floor);
  trace.distribution = std::move(de.distribution);
  return trace;
}

inline InferenceRecord process_question(const Question& q,
                                        const RunConfig& config,
                                        CompletionClient& client) {
  InferenceRecord r;
  r.question_id = q.id;
  r.subject = q.subject;
  r.k = q.option_count();
  r.gold = q.gold;
  r.thresholds_used = config.thresholds;

  const QuestionView view = gold_free(q);
  if (config.mode == RunMode::PromptOnly) {
    r.pass1 = run_pass(client, build_prompt_only_prompt(view, q.subject),
                       config.params, q, config.prob_floor,
                       /*second_pass=*/false, r.flags);
  } else {
    r.pass1 = run_pass(client, build_first_pass_prompt(view, q.subject),
                       config.params, q, config.prob_floor,
                       /*second_pass=*/false, r.flags);
    const bool triggered = should_reask(r.pass1.metrics, config.thresholds);
    const bool do_second = config.mode == RunMode::UR ||
                           (config.mode == RunMode::TR && triggered);
    r.trigger_fired = config.mode == RunMode::TR
                          ? triggered
                          : (config.mode == RunMode::UR && triggered);
    if (do_second) {
      const std::string& first_output =
          r.pass1.output_text.empty() ? "[empty first-pass output]"
                                      : r.pass1.output_text;
      r.pass2 = run_pass(client, build_reask_prompt(view, first_output, q.subject),
                         config.params, q, config.prob_floor,
                         /*second_pass=*/true, r.flags);
    }
  }

  if (r.pass2.has_value()) {
    if (r.pass2->extracted_answer.has_value()) {
      r.final_answer = r.pass2->extracted_answer;
    } else {
      r.final_answer = r.pass1.extracted_answer;
      r.flags.push_back(ExtractionFlag::FinalFromPass1);
    }
  } else {
    r.final_answer = r.pass1.extracted_answer;
  }
  r.baseline_correct = r.pass1.extracted_answer.has_value() &&
                       *r.pass1.extracted_answer == q.gold;
  r.final_correct = r.final_answer.has_value() && *r.final_answer == q.gold;
  return r;
}

}  // namespace detail

// ============================================================================
// Backend construction
// ============================================================================

/// Build the backend named by the config. The live backend is constructed
/// lazily by the CLI (it drags in the HTTP stack); library callers inject
/// their own ModelBackend for anything beyond the simulator.
inline std::unique_ptr<ModelBackend> make_sim_backend(const RunConfig& config,
                                                      const Dataset& dataset) {
  return std::make_unique<SimBackend>(config.sim, config.seed, dataset);
}

// ============================================================================
// Run
// ============================================================================

inline RunManifest build_manifest(const RunConfig& config,
                                  const Dataset& dataset) {
  RunManifest m;
  m.mode = config.mode;
  m.params = config.params;
  m.thresholds = config.thresholds;
  m.dataset_digest = dataset_digest(dataset);
  m.template_hashes = template_hashes();
  m.seed = config.seed;
  m.backend_kind = config.backend;
  std::uint64_t h = fnv1a64(run_mode_name(m.mode));
  h = fnv1a64_append(h, m.dataset_digest);
  h = fnv1a64_append(h, std::to_string(m.seed));
  h = fnv1a64_append(h, std::to_string(m.thresholds.tau_h));
  h = fnv1a64_append(h, std::to_string(m.thresholds.tau_msp));
  m.run_id = hex_digest(mix64(h));
  return m;
}

/**
 * Execute a run over the dataset with the given backend. Resumes an
 * existing output log when its manifest matches; preserves partial
 * progress on any failure. Returns the summary over the records appended
 * by this invocation plus any resumed ones.
 */
inline RunSummary run_with_backend(const RunConfig& config,
                                   const Dataset& dataset,
                                   ModelBackend& backend,
                                   std::ostream* progress = nullptr) {
  validate_thresholds(config.thresholds);
  if (config.parallelism < 1)
    fail(ErrorCode::InvalidArgument, "parallelism must be at least 1");
  if (config.out_path.empty())
    fail(ErrorCode::InvalidArgument, "run requires an output path");

  const RunManifest manifest = build_manifest(config, dataset);

  std::vector<std::string> pending;
  std::size_t resumed = 0;
  std::size_t resumed_reasked = 0, resumed_base_correct = 0,
              resumed_final_correct = 0;
  std::optional<RunLog> log;
  std::error_code fs_err;
  if (std::filesystem::exists(config.out_path, fs_err) &&
      std::filesystem::file_size(config.out_path, fs_err) > 0) {
    LoadedRunLog existing = load_runlog(config.out_path,
                                        /*check_consistency=*/false);
    if (!existing.manifest.compatible_with(manifest))
      fail(ErrorCode::ManifestMismatch,
           "existing run log '" + config.out_path +
               "' was produced by a different configuration");
    pending = resume_plan(existing.manifest, existing.records, dataset);
    resumed = existing.records.size();
    for (const InferenceRecord& r : existing.records) {
      if (r.pass2.has_value()) ++resumed_reasked;
      if (r.baseline_correct) ++resumed_base_correct;
      if (r.final_correct) ++resumed_final_correct;
    }
    log.emplace(RunLog::open_append(config.out_path, manifest));
  } else {
    for (const Question& q : dataset.questions()) pending.push_back(q.id);
    log.emplace(RunLog::create(config.out_path, manifest));
  }

  const std::size_t budget_cap =
      config.budget > 0 ? config.budget
                        : 2 * dataset.size() + dataset.size() / 5;
  CallBudget budget(budget_cap);
  CompletionClient client(backend, config.retry, &budget);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<std::size_t> reasked{0}, base_correct{0}, final_correct{0};
  std::mutex failure_mu;
  std::exception_ptr failure;
  std::atomic<bool> stop{false};
  std::mutex progress_mu;

  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= pending.size()) return;
      const Question* q = dataset.find(pending[i]);
      try {
        InferenceRecord r = detail::process_question(*q, config, client);
        if (r.pass2.has_value()) reasked.fetch_add(1);
        if (r.baseline_correct) base_correct.fetch_add(1);
        if (r.final_correct) final_correct.fetch_add(1);
        log->append(r);
        const std::size_t n = done.fetch_add(1) + 1;
        if (!config.quiet && progress != nullptr && n % 100 == 0) {
          std::lock_guard<std::mutex> lock(progress_mu);
          const double acc = static_cast<double>(final_correct.load()) /
                             static_cast<double>(n);
          const double rate = static_cast<double>(reasked.load()) /
                              static_cast<double>(n);
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "[%zu/%zu] running accuracy %.2f%%, trigger rate "
                        "%.2f%%\n",
                        n, pending.size(), 100.0 * acc, 100.0 * rate);
          (*progress) << buf << std::flush;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const int n_workers = std::min<std::size_t>(
      static_cast<std::size_t>(config.parallelism), std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) workers.emplace_back(worker);
  for (std::thread& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);

  RunSummary summary;
  summary.total = dataset.size();
  summary.completed = resumed + done.load();
  summary.resumed = resumed;
  summary.reasked = resumed_reasked + reasked.load();
  summary.baseline_correct = resumed_base_correct + base_correct.load();
  summary.final_correct = resumed_final_correct + final_correct.load();
  summary.backend_calls = budget.used();
  if (summary.completed > 0) {
    summary.baseline_accuracy = static_cast<double>(summary.baseline_correct) /
                                static_cast<double>(summary.completed);
    summary.final_accuracy = static_cast<double>(summary.final_correct) /
                             static_cast<double>(summary.completed);
    summary.reask_rate = static_cast<double>(summary.reasked) /
                         static_cast<double>(summary.completed);
  }
  return summary;
}

/// Convenience entry point for simulator runs: loads the dataset, builds
/// the sim backend, runs.
inline RunSummary run(const RunConfig& config, std::ostream* progress = nullptr) {
  const Dataset dataset =
      load_dataset(config.dataset_path, config.dataset_format, config.mapping);
  if (config.backend != "sim")
    fail(ErrorCode::InvalidArgument,
         "run() builds only the simulated backend; construct a live backend "
         "explicitly and call run_with_backend()");
  auto backend = make_sim_backend(config, dataset);
  return run_with_backend(config, dataset, *backend, progress);
}

// ============================================================================
// Offline tools
// ============================================================================

struct SweepResult {
  std::vector<SweepPoint> points;  ///< grid order
  ParetoFrontier frontier;
};

/// Replay a full threshold grid over a UR log.
inline SweepResult sweep(const std::vector<InferenceRecord>& ur_records,
                         const std::vector<double>& tau_h_values,
                         const std::vector<double>& tau_msp_values) {
  SweepResult result;
  result.points = sweep_policies_offline(
      ur_records, build_sweep_grid(tau_h_values, tau_msp_values));
  result.frontier = pareto_frontier(result.points);
  return result;
}

inline std::string render_sweep_table(const SweepResult& result) {
  std::ostringstream out;
  out << "tau_h   tau_msp  reask%   acc%     frontier\n";
  auto on_frontier = [&](const SweepPoint& p) {
    for (const SweepPoint& f : result.frontier.points)
      if (f.thresholds == p.thresholds &&
          f.reask_rate == p.reask_rate &&
          f.final_accuracy == p.final_accuracy)
        return true;
    return false;
  };
  for (const SweepPoint& p : result.points) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "%-7.3f %-8.3f %-8.2f %-8.2f %s\n",
                  p.thresholds.tau_h, p.thresholds.tau_msp,
                  100.0 * p.reask_rate, 100.0 * p.final_accuracy,
                  on_frontier(p) ? "*" : "");
    out << buf;
  }
  out << "\nPareto frontier (reask% -> acc%):";
  for (const SweepPoint& p : result.frontier.points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " (%.2f, %.2f)", 100.0 * p.reask_rate,
                  100.0 * p.final_accuracy);
    out << buf;
  }
  out << "\n";
  return out.str();
}

/// Plot-friendly export: one row per swept pair, full precision.
inline std::string render_sweep_tsv(const SweepResult& result) {
  std::ostringstream out;
  out << "tau_h\ttau_msp\treask_rate\tfinal_accuracy\ton_frontier\n";
  for (const SweepPoint& p : result.points) {
    bool on = false;
    for (const SweepPoint& f : result.frontier.points)
      if (f.thresholds == p.thresholds && f.reask_rate == p.reask_rate &&
          f.final_accuracy == p.final_accuracy)
        on = true;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.10g\t%.10g\t%.10g\t%.10g\t%d\n",
                  p.thresholds.tau_h, p.thresholds.tau_msp, p.reask_rate,
                  p.final_accuracy, on ? 1 : 0);
    out << buf;
  }
  return out.str();
}

/// Full analysis of a stored run log.
inline Report analyze(const std::string& log_path) {
  LoadedRunLog log = load_runlog(log_path, /*check_consistency=*/true);
  return accuracy_report(log.records, log.manifest.mode);
}

/// Write a synthetic canonical dataset; byte-identical for identical
/// (cfg, n, k, subjects, seed).
inline Dataset synth_dataset(const SimConfig& cfg, std::size_t n, int k,
                             int n_subjects, std::uint64_t seed,
                             const std::string& out_path) {
  validate_sim_config(cfg);
  Dataset d = Dataset::from_questions(synth_questions(n, k, n_subjects, seed));
  save_dataset(d, out_path);
  return d;
}

}  // namespace reinfer
