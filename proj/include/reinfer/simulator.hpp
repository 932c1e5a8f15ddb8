#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file simulator.hpp
 * @brief Deterministic simulated backend for desk-scale verification.
 *
 * Behavior model, per question with hidden difficulty d in [0, 1]:
 *
 * - First pass: with probability p_know(d) = logistic(a - b*d) the model
 *   "knows" the item and emits a distribution peaked on the gold letter
 *   (MSP drawn from a high band); otherwise it emits a diffuse
 *   Dirichlet-style distribution whose argmax hits gold only at chance.
 * - Re-ask pass: a first-pass-correct item flips to a confidently wrong
 *   answer with probability flip_epsilon, else repeats its first pass; a
 *   first-pass-wrong item becomes confidently correct with probability
 *   reask_uplift, else repeats its first pass. So per re-asked item the
 *   expected gain is exactly u*P(wrong) - eps*P(correct).
 * - Prompt-only pass: like a first pass, but a knowing item is derailed
 *   with probability prompt_only_penalty. The uplift only ever applies when
 *   the prompt carries a previous answer, so prompt-only runs cannot beat
 *   the baseline in expectation.
 *
 * Every draw is keyed by hash(run_seed, question_id, pass_kind), so outputs
 * are identical regardless of execution order, concurrency, or which mode
 * requested the pass. Difficulty and gold derive from the question id alone
 * (synthesized ids embed the dataset seed).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <reinfer/backend.hpp>
#include <reinfer/dataset.hpp>
#include <reinfer/error.hpp>
#include <reinfer/extract.hpp>
#include <reinfer/hash.hpp>
#include <reinfer/prompts.hpp>

namespace reinfer {

// ============================================================================
// Configuration
// ============================================================================

struct SimConfig {
  double know_intercept = 2.5;  ///< a in p_know(d) = logistic(a - b*d)
  double know_slope = 4.0;      ///< b
  double peaked_msp_min = 0.75;
  double peaked_msp_max = 0.99;
  double diffuse_concentration = 1.0;  ///< Dirichlet alpha for guessing items
  double reask_uplift = 0.6;           ///< u: P(wrong -> correct | re-ask)
  double flip_epsilon = 0.015;         ///< eps: P(correct -> wrong | re-ask)
  double prompt_only_penalty = 0.08;

  bool operator==(const SimConfig&) const = default;
};

inline void validate_sim_config(const SimConfig& c) {
  auto bad = [](const std::string& why) {
    fail(ErrorCode::InvalidSimConfig, why);
  };
  if (!std::isfinite(c.know_intercept) || !std::isfinite(c.know_slope))
    bad("know_intercept/know_slope must be finite");
  if (!(c.peaked_msp_min > 0.5 && c.peaked_msp_max <= 0.999 &&
        c.peaked_msp_min <= c.peaked_msp_max))
    bad("peaked MSP band must satisfy 0.5 < min <= max <= 0.999");
  if (!(c.diffuse_concentration > 0.0))
    bad("diffuse_concentration must be positive");
  if (!(c.reask_uplift >= 0.0 && c.reask_uplift <= 1.0))
    bad("reask_uplift must lie in [0, 1]");
  if (!(c.flip_epsilon >= 0.0 && c.flip_epsilon <= 1.0))
    bad("flip_epsilon must lie in [0, 1]");
  if (!(c.prompt_only_penalty >= 0.0 && c.prompt_only_penalty <= 1.0))
    bad("prompt_only_penalty must lie in [0, 1]");
}

enum class SimPass { First, Reask, PromptOnly };

inline const char* sim_pass_name(SimPass p) {
  switch (p) {
    case SimPass::First: return "first";
    case SimPass::Reask: return "reask";
    case SimPass::PromptOnly: return "prompt_only";
  }
  return "first";
}

// ============================================================================
// Deterministic draws
// ============================================================================

namespace detail {

/// Deterministic RNG over mt19937_64 with hand-rolled conversions, so the
/// same seed yields the same draws on every standard library.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : eng_(seed) {}

  double u01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return u01() < p; }

  double exponential() { return -std::log(1.0 - u01()); }

  double normal() {
    const double u = std::max(u01(), 1e-300);
    const double v = u01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }

  /// Marsaglia-Tsang for alpha >= 1, boosted for alpha < 1.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double boost = std::pow(std::max(u01(), 1e-300), 1.0 / alpha);
      return gamma(alpha + 1.0) * boost;
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t uniform_int(std::uint64_t n) {
    // Modulo bias is irrelevant at these ranges (n <= 26).
    return eng_() % n;
  }

 private:
  std::mt19937_64 eng_;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

/// Per-question seed; independent of execution order and concurrency.
inline std::uint64_t question_seed(std::uint64_t run_seed,
                                   std::string_view question_id,
                                   SimPass pass) {
  std::uint64_t h = fnv1a64(question_id);
  h = fnv1a64_append(h, "#");
  h = fnv1a64_append(h, sim_pass_name(pass));
  return mix64(h ^ mix64(run_seed));
}

/// Hidden difficulty in [0, 1], a pure function of the question id.
inline double question_difficulty(std::string_view question_id) {
  std::uint64_t h = fnv1a64(question_id);
  h = fnv1a64_append(h, "/difficulty");
  return static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
}

inline double p_know(const SimConfig& cfg, double difficulty) {
  return detail::logistic(cfg.know_intercept - cfg.know_slope * difficulty);
}

// ============================================================================
// Generation
// ============================================================================

namespace detail {

struct SimDraw {
  std::vector<double> probs;
  int answer = 0;
};

/// Peaked distribution: MSP on the target letter, 90% of the tail on one
/// runner-up, the rest spread evenly. The tail shape keeps entropy below
/// typical tau_h for any MSP in the high band.
inline SimDraw peaked_draw(DetRng& rng, int k, int target,
                           const SimConfig& cfg) {
  SimDraw draw;
  draw.answer = target;
  draw.probs.assign(static_cast<size_t>(k), 0.0);
  const double msp = cfg.peaked_msp_min +
                     (cfg.peaked_msp_max - cfg.peaked_msp_min) * rng.u01();
  const double tail = 1.0 - msp;
  const int runner =
      static_cast<int>((target + 1 + rng.uniform_int(
                            static_cast<std::uint64_t>(k - 1))) % k);
  draw.probs[static_cast<size_t>(target)] = msp;
  if (k == 2) {
    draw.probs[static_cast<size_t>(runner)] = tail;
  } else {
    draw.probs[static_cast<size_t>(runner)] = 0.9 * tail;
    const double rest = 0.1 * tail / static_cast<double>(k - 2);
    for (int i = 0; i < k; ++i)
      if (i != target && i != runner) draw.probs[static_cast<size_t>(i)] = rest;
  }
  return draw;
}

/// Diffuse Dirichlet draw; by symmetry the argmax hits any given letter
/// with probability 1/K.
inline SimDraw diffuse_draw(DetRng& rng, int k, const SimConfig& cfg) {
  SimDraw draw;
  draw.probs.resize(static_cast<size_t>(k));
  double sum = 0.0;
  for (double& p : draw.probs) {
    p = cfg.diffuse_concentration == 1.0 ? rng.exponential()
                                         : rng.gamma(cfg.diffuse_concentration);
    p = std::max(p, 1e-12);
    sum += p;
  }
  for (double& p : draw.probs) p /= sum;
  draw.answer = static_cast<int>(std::distance(
      draw.probs.begin(),
      std::max_element(draw.probs.begin(), draw.probs.end())));
  return draw;
}

inline SimDraw first_pass_draw(const Question& q, const SimConfig& cfg,
                               std::uint64_t run_seed, SimPass pass) {
  DetRng rng(question_seed(run_seed, q.id, pass));
  const double d = question_difficulty(q.id);
  bool knows = rng.bernoulli(p_know(cfg, d));
  if (pass == SimPass::PromptOnly && knows)
    knows = !rng.bernoulli(cfg.prompt_only_penalty);
  const int k = q.option_count();
  return knows ? peaked_draw(rng, k, q.gold, cfg) : diffuse_draw(rng, k, cfg);
}

inline SimDraw reask_draw(const Question& q, const SimConfig& cfg,
                          std::uint64_t run_seed) {
  const SimDraw first = first_pass_draw(q, cfg, run_seed, SimPass::First);
  DetRng rng(question_seed(run_seed, q.id, SimPass::Reask));
  const int k = q.option_count();
  if (first.answer == q.gold) {
    if (rng.bernoulli(cfg.flip_epsilon)) {
      const int wrong =
          static_cast<int>((q.gold + 1 + rng.uniform_int(
                                static_cast<std::uint64_t>(k - 1))) % k);
      return peaked_draw(rng, k, wrong, cfg);
    }
    return first;
  }
  if (rng.bernoulli(cfg.reask_uplift)) return peaked_draw(rng, k, q.gold, cfg);
  return first;
}

inline ModelOutput output_from_draw(const SimDraw& draw) {
  ModelOutput out;
  const char letter = option_letter(draw.answer);
  out.text = std::string("Reviewing each option step by step.\n") +
             "The answer is (" + letter + ")";
  TokenLogprobs tl;
  tl.token = std::string(1, letter);
  tl.logprob = std::log(draw.probs[static_cast<size_t>(draw.answer)]);
  for (std::size_t i = 0; i < draw.probs.size(); ++i)
    tl.top.push_back(TokenCandidate{std::string(1, option_letter(static_cast<int>(i))),
                                    std::log(draw.probs[i])});
  std::stable_sort(tl.top.begin(), tl.top.end(),
                   [](const TokenCandidate& a, const TokenCandidate& b) {
                     return a.logprob > b.logprob;
                   });
  out.token_logprobs.push_back(std::move(tl));
  out.finish_reason = FinishReason::Stop;
  return out;
}

}  // namespace detail

/// Deterministic completion for one question and pass kind.
inline ModelOutput sim_generate(const Question& q, SimPass pass,
                                const SimConfig& cfg, std::uint64_t run_seed) {
  validate_sim_config(cfg);
  const detail::SimDraw draw =
      pass == SimPass::Reask
          ? detail::reask_draw(q, cfg, run_seed)
          : detail::first_pass_draw(q, cfg, run_seed, pass);
  return detail::output_from_draw(draw);
}

// ============================================================================
// Synthetic datasets
// ============================================================================

namespace detail {

inline const std::vector<std::string>& sim_subject_pool() {
  static const std::vector<std::string> pool = {
      "algebra",   "astronomy",  "biology",    "chemistry", "economics",
      "engineering", "geography", "history",   "law",       "logic",
      "medicine",  "philosophy", "physics",    "psychology"};
  return pool;
}

}  // namespace detail

/// N synthetic questions whose hidden sim parameters (difficulty, gold) are
/// deterministic functions of (seed, index); the seed is embedded in the
/// question id so downstream draws depend only on the id.
inline std::vector<Question> synth_questions(std::size_t n, int k,
                                             int n_subjects,
                                             std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::EmptyDataset, "cannot synthesize 0 questions");
  if (k < kMinOptions || k > kMaxOptions)
    fail(ErrorCode::InvalidOptionCount,
         "option count must be in [2, 26], got " + std::to_string(k));
  const auto& pool = detail::sim_subject_pool();
  if (n_subjects < 1 || n_subjects > static_cast<int>(pool.size()))
    fail(ErrorCode::InvalidArgument,
         "subject count must be in [1, " + std::to_string(pool.size()) + "]");
  std::vector<Question> questions;
  questions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Question q;
    char idbuf[40];
    std::snprintf(idbuf, sizeof idbuf, "sim%016llx-%06zu",
                  static_cast<unsigned long long>(seed), i);
    q.id = idbuf;
    q.subject = pool[i % static_cast<std::size_t>(n_subjects)];
    const std::string tag = hex_digest(mix64(fnv1a64(q.id)));
    q.stem = "Synthetic item " + std::to_string(i) + " (" + q.subject +
             "): select the designated option for case " + tag.substr(0, 8) +
             ".";
    q.gold = static_cast<int>(mix64(fnv1a64_append(fnv1a64(q.id), "/gold")) %
                              static_cast<std::uint64_t>(k));
    for (int o = 0; o < k; ++o)
      q.options.push_back("Candidate " + std::string(1, option_letter(o)) +
                          " for case " + tag.substr(0, 8));
    questions.push_back(std::move(q));
  }
  return questions;
}

// ============================================================================
// Backend
// ============================================================================

/**
 * ModelBackend over sim_generate. Questions are recovered from the prompt
 * by their stem (prompts are gold-free, so the backend holds the dataset as
 * its side channel), and the pass kind is recognized structurally: a
 * previous-answer header means a re-ask, the uncertainty cue alone means
 * prompt-only.
 */
class SimBackend : public ModelBackend {
 public:
  SimBackend(SimConfig cfg, std::uint64_t run_seed, const Dataset& dataset)
      : cfg_(cfg), run_seed_(run_seed) {
    validate_sim_config(cfg_);
    for (const Question& q : dataset.questions()) {
      if (!by_stem_.emplace(q.stem, &q).second)
        fail(ErrorCode::InvalidArgument,
             "simulated backend requires unique question stems");
    }
  }

  ModelOutput complete(const PromptPair& prompt,
                       const InferenceParams& params) override {
    const Question& q = lookup(prompt.user);
    ModelOutput out = sim_generate(q, classify(prompt), cfg_, run_seed_);
    // Honor the requested candidate-list cap like a real endpoint.
    for (TokenLogprobs& tl : out.token_logprobs)
      if (static_cast<int>(tl.top.size()) > params.top_logprobs)
        tl.top.resize(static_cast<size_t>(params.top_logprobs));
    return out;
  }

  const char* kind() const override { return "sim"; }

 private:
  static SimPass classify(const PromptPair& prompt) {
    const std::string header =
        std::string("\n") + std::string(templates::kPreviousAnswerHeader);
    if (prompt.user.find(header) != std::string::npos) return SimPass::Reask;
    if (prompt.system.find("high entropy") != std::string::npos)
      return SimPass::PromptOnly;
    return SimPass::First;
  }

  const Question& lookup(const std::string& user) const {
    constexpr std::string_view prefix = "Question: ";
    if (user.rfind(prefix, 0) != 0)
      fail(ErrorCode::InvalidArgument,
           "simulated backend got a prompt without a question block");
    const auto stem_end = user.find("\nOptions:");
    if (stem_end == std::string::npos)
      fail(ErrorCode::InvalidArgument,
           "simulated backend got a prompt without an options block");
    const std::string stem = user.substr(prefix.size(), stem_end - prefix.size());
    auto it = by_stem_.find(stem);
    if (it == by_stem_.end())
      fail(ErrorCode::InvalidArgument,
           "simulated backend does not know this question");
    return *it->second;
  }

  SimConfig cfg_;
  std::uint64_t run_seed_;
  std::unordered_map<std::string, const Question*> by_stem_;
};

}  // namespace reinfer
