// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

// End-to-end harness tests on the simulated backend.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <reinfer/harness.hpp>

using namespace reinfer;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "reinfer_harness_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path fresh(const std::string& name) {
  auto p = temp_dir() / name;
  std::filesystem::remove(p);
  return p;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

RunConfig base_config(const std::string& dataset, const std::string& out,
                      RunMode mode, std::uint64_t seed = 42) {
  RunConfig c;
  c.mode = mode;
  c.dataset_path = dataset;
  c.out_path = out;
  c.seed = seed;
  c.parallelism = 4;
  c.quiet = true;
  c.retry.sleeper = [](std::chrono::milliseconds) {};
  return c;
}

std::map<std::string, InferenceRecord> by_id(
    const std::vector<InferenceRecord>& records) {
  std::map<std::string, InferenceRecord> m;
  for (const auto& r : records) m.emplace(r.question_id, r);
  return m;
}

}  // namespace

// ============================================================================
// Mode shapes
// ============================================================================

TEST_CASE("harness: per-mode pass2 shape over a small sim dataset") {
  const auto data = fresh("shape_data.jsonl");
  synth_dataset(SimConfig{}, 120, 10, 14, 7, data.string());

  for (RunMode mode : {RunMode::Baseline, RunMode::TR, RunMode::UR,
                       RunMode::PromptOnly}) {
    const auto out = fresh(std::string("shape_") + run_mode_name(mode) +
                           ".jsonl");
    const auto summary =
        run(base_config(data.string(), out.string(), mode));
    CHECK(summary.completed == 120);

    const auto log = load_runlog(out.string());
    CHECK(log.records.size() == 120);
    std::size_t pass2_count = 0, trigger_count = 0;
    for (const auto& r : log.records) {
      if (r.pass2.has_value()) ++pass2_count;
      if (r.trigger_fired) ++trigger_count;
    }
    switch (mode) {
      case RunMode::Baseline:
      case RunMode::PromptOnly:
        CHECK(pass2_count == 0);
        CHECK(summary.backend_calls == 120);
        break;
      case RunMode::UR:
        CHECK(pass2_count == 120);
        CHECK(summary.backend_calls == 240);
        break;
      case RunMode::TR:
        CHECK(pass2_count == trigger_count);
        CHECK(pass2_count == summary.reasked);
        CHECK(pass2_count > 0);
        CHECK(pass2_count < 120);
        CHECK(summary.backend_calls == 120 + pass2_count);
        break;
    }
  }
}

// ============================================================================
// Determinism
// ============================================================================

TEST_CASE("harness: same seed gives field-identical logs modulo timing") {
  const auto data = fresh("det_data.jsonl");
  synth_dataset(SimConfig{}, 150, 10, 14, 3, data.string());
  const auto out1 = fresh("det1.jsonl");
  const auto out2 = fresh("det2.jsonl");
  auto c1 = base_config(data.string(), out1.string(), RunMode::TR, 11);
  auto c2 = base_config(data.string(), out2.string(), RunMode::TR, 11);
  c1.parallelism = 1;
  c2.parallelism = 8;  // scheduling must not matter
  (void)run(c1);
  (void)run(c2);
  auto a = load_runlog(out1.string()).records;
  auto b = load_runlog(out2.string()).records;
  REQUIRE(a.size() == b.size());
  const auto bm = by_id(b);
  for (auto& ra : a) {
    auto rb = bm.at(ra.question_id);
    // Scrub wall-clock fields, then demand byte equality.
    auto scrub = [](InferenceRecord& r) {
      r.pass1.timestamp_ms = 0;
      r.pass1.latency_ms = 0;
      if (r.pass2.has_value()) {
        r.pass2->timestamp_ms = 0;
        r.pass2->latency_ms = 0;
      }
    };
    scrub(ra);
    scrub(rb);
    CHECK(record_to_line(ra) == record_to_line(rb));
  }
}

TEST_CASE("harness: synthesized dataset files are byte-identical per seed") {
  const auto p1 = fresh("synth1.jsonl");
  const auto p2 = fresh("synth2.jsonl");
  synth_dataset(SimConfig{}, 1000, 10, 14, 7, p1.string());
  synth_dataset(SimConfig{}, 1000, 10, 14, 7, p2.string());
  CHECK(read_file(p1) == read_file(p2));
  const auto p3 = fresh("synth3.jsonl");
  synth_dataset(SimConfig{}, 1000, 10, 14, 8, p3.string());
  CHECK(read_file(p1) != read_file(p3));
}

// ============================================================================
// TR / UR relations and replay equivalence
// ============================================================================

TEST_CASE("harness: TR matches UR-log replay exactly and bounds compute") {
  const auto data = fresh("trur_data.jsonl");
  synth_dataset(SimConfig{}, 800, 10, 14, 5, data.string());
  const auto tr_out = fresh("tr.jsonl");
  const auto ur_out = fresh("ur.jsonl");
  const auto tr =
      run(base_config(data.string(), tr_out.string(), RunMode::TR, 99));
  const auto ur =
      run(base_config(data.string(), ur_out.string(), RunMode::UR, 99));

  CHECK(tr.reasked < 800);
  // Identical first passes under the per-question seed scheme.
  CHECK(tr.baseline_accuracy == doctest::Approx(ur.baseline_accuracy));

  // TR cannot beat UR by more than the flip protection it gets on the
  // confident set; the closed-form slack is eps * P(confident) plus noise.
  CHECK(tr.final_accuracy <=
        ur.final_accuracy + SimConfig{}.flip_epsilon + 0.02);

  // Replaying the UR log at the TR thresholds reproduces TR record by
  // record.
  const auto ur_log = load_runlog(ur_out.string());
  const auto tr_log = load_runlog(tr_out.string());
  const auto point = evaluate_policy_offline(ur_log.records,
                                             TriggerThresholds{0.8, 0.6});
  CHECK(point.reasked == tr.reasked);
  CHECK(point.final_correct == tr.final_correct);

  const auto tr_by_id = by_id(tr_log.records);
  for (const auto& r : ur_log.records) {
    const auto& trr = tr_by_id.at(r.question_id);
    const bool fire = should_reask(r.pass1.metrics, TriggerThresholds{0.8, 0.6});
    CHECK(fire == trr.trigger_fired);
    const auto expected_final =
        fire && r.pass2->extracted_answer.has_value()
            ? r.pass2->extracted_answer
            : r.pass1.extracted_answer;
    CHECK(expected_final == trr.final_answer);
  }
}

TEST_CASE("harness: singleton sweep equals a direct TR evaluation") {
  const auto data = fresh("sweep_data.jsonl");
  synth_dataset(SimConfig{}, 600, 10, 14, 17, data.string());
  const auto ur_out = fresh("sweep_ur.jsonl");
  (void)run(base_config(data.string(), ur_out.string(), RunMode::UR, 5));
  const auto ur_log = load_runlog(ur_out.string());

  const auto tr_out = fresh("sweep_tr.jsonl");
  auto tr_config = base_config(data.string(), tr_out.string(), RunMode::TR, 5);
  tr_config.thresholds = TriggerThresholds{1.3, 0.4};
  const auto tr = run(tr_config);

  const auto result = sweep(ur_log.records, {1.3}, {0.4});
  REQUIRE(result.points.size() == 1);
  CHECK(result.points[0].reasked == tr.reasked);
  CHECK(result.points[0].final_correct == tr.final_correct);
  REQUIRE(result.frontier.points.size() == 1);
}

TEST_CASE("harness: paper-shaped grid yields 16 rows and a sane frontier") {
  const auto data = fresh("grid_data.jsonl");
  synth_dataset(SimConfig{}, 500, 10, 14, 23, data.string());
  const auto ur_out = fresh("grid_ur.jsonl");
  (void)run(base_config(data.string(), ur_out.string(), RunMode::UR, 7));
  const auto ur_log = load_runlog(ur_out.string());

  const auto result =
      sweep(ur_log.records, {0.7, 0.9, 1.1, 1.3}, {0.3, 0.4, 0.5, 0.6});
  CHECK(result.points.size() == 16);
  // Frontier is non-dominated and ordered.
  for (std::size_t i = 1; i < result.frontier.points.size(); ++i) {
    CHECK(result.frontier.points[i].reask_rate >
          result.frontier.points[i - 1].reask_rate);
    CHECK(result.frontier.points[i].final_accuracy >
          result.frontier.points[i - 1].final_accuracy);
  }
  const auto table = render_sweep_table(result);
  CHECK(table.find("frontier") != std::string::npos);
  const auto tsv = render_sweep_tsv(result);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 17);  // header + 16 rows
}

TEST_CASE("harness: sweeping a baseline log is an IncompleteLog error") {
  const auto data = fresh("inc_data.jsonl");
  synth_dataset(SimConfig{}, 50, 10, 14, 29, data.string());
  const auto out = fresh("inc_base.jsonl");
  (void)run(base_config(data.string(), out.string(), RunMode::Baseline, 1));
  const auto log = load_runlog(out.string());
  CHECK_THROWS_AS(sweep(log.records, {0.8}, {0.6}), Error);
}

// ============================================================================
// Vacuous thresholds and prompt-only ablation
// ============================================================================

TEST_CASE("harness: vacuous thresholds reproduce the baseline row") {
  const auto data = fresh("vac_data.jsonl");
  synth_dataset(SimConfig{}, 400, 10, 14, 31, data.string());
  const auto ur_out = fresh("vac_ur.jsonl");
  (void)run(base_config(data.string(), ur_out.string(), RunMode::UR, 13));
  const auto ur_log = load_runlog(ur_out.string());
  // tau_h above ln K and tau_msp at chance level: nothing triggers.
  const auto result = sweep(ur_log.records, {2.4}, {0.09});
  CHECK(result.points[0].reasked == 0);
  std::size_t base_correct = 0;
  for (const auto& r : ur_log.records)
    if (r.baseline_correct) ++base_correct;
  CHECK(result.points[0].final_correct == base_correct);
}

TEST_CASE("harness: prompt-only underperforms the baseline on the simulator") {
  const auto data = fresh("po_data.jsonl");
  synth_dataset(SimConfig{}, 3000, 10, 14, 37, data.string());
  const auto b_out = fresh("po_base.jsonl");
  const auto p_out = fresh("po_prompt.jsonl");
  const auto baseline =
      run(base_config(data.string(), b_out.string(), RunMode::Baseline, 3));
  const auto prompt_only =
      run(base_config(data.string(), p_out.string(), RunMode::PromptOnly, 3));
  CHECK(prompt_only.final_accuracy < baseline.final_accuracy);
}

// ============================================================================
// Budget and resume
// ============================================================================

TEST_CASE("harness: budget cap aborts the run and preserves progress") {
  const auto data = fresh("budget_data.jsonl");
  synth_dataset(SimConfig{}, 100, 10, 14, 41, data.string());
  const auto out = fresh("budget.jsonl");
  auto config = base_config(data.string(), out.string(), RunMode::UR, 2);
  config.parallelism = 2;
  config.budget = 50;  // well below the 200 calls a UR run needs
  CHECK_THROWS_AS(run(config), Error);

  const auto partial = load_runlog(out.string());
  CHECK(partial.records.size() > 0);
  CHECK(partial.records.size() < 100);

  // Resume with an adequate budget completes exactly the remainder.
  config.budget = 0;
  const auto summary = run(config);
  CHECK(summary.completed == 100);
  CHECK(summary.resumed == partial.records.size());
  const auto full = load_runlog(out.string());
  CHECK(full.records.size() == 100);
  std::unordered_set<std::string> ids;
  for (const auto& r : full.records) ids.insert(r.question_id);
  CHECK(ids.size() == 100);
}

TEST_CASE("harness: a finished log resumes to a no-op with identical analysis") {
  const auto data = fresh("resume_data.jsonl");
  synth_dataset(SimConfig{}, 80, 10, 14, 43, data.string());
  const auto out = fresh("resume.jsonl");
  const auto first = run(base_config(data.string(), out.string(), RunMode::TR, 9));
  const auto again = run(base_config(data.string(), out.string(), RunMode::TR, 9));
  CHECK(again.completed == first.completed);
  CHECK(again.backend_calls == 0);  // nothing left to do
  CHECK(again.final_correct == first.final_correct);
}

TEST_CASE("harness: resuming under a different config is refused") {
  const auto data = fresh("mm_data.jsonl");
  synth_dataset(SimConfig{}, 30, 10, 14, 47, data.string());
  const auto out = fresh("mm.jsonl");
  (void)run(base_config(data.string(), out.string(), RunMode::TR, 9));
  auto other = base_config(data.string(), out.string(), RunMode::UR, 9);
  CHECK_THROWS_AS(run(other), Error);
}

// ============================================================================
// Analysis over harness output
// ============================================================================

TEST_CASE("harness: analyze() over a TR log satisfies all identities") {
  const auto data = fresh("an_data.jsonl");
  synth_dataset(SimConfig{}, 500, 10, 14, 53, data.string());
  const auto out = fresh("an_tr.jsonl");
  const auto summary = run(base_config(data.string(), out.string(), RunMode::TR, 21));
  const auto rep = analyze(out.string());
  CHECK(rep.total == 500);
  CHECK(rep.identities.all_ok());
  CHECK(rep.final_correct == summary.final_correct);
  CHECK(rep.reasked == summary.reasked);
  REQUIRE(rep.transitions.has_value());
  CHECK(rep.transitions->total() == rep.reasked);
  // The simulated separation shows up in the grouped stats.
  const auto& correct_h = rep.first_round_stats.cell(true, MetricKind::Entropy);
  const auto& incorrect_h =
      rep.first_round_stats.cell(false, MetricKind::Entropy);
  REQUIRE(correct_h.mean.has_value());
  REQUIRE(incorrect_h.mean.has_value());
  CHECK(*correct_h.mean < *incorrect_h.mean);
}
