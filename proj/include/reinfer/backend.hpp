#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file backend.hpp
 * @brief Model-backend abstraction and the completion client.
 *
 * A ModelBackend turns one PromptPair into one ModelOutput. The
 * CompletionClient wraps a backend with the operational policy: transient
 * transport failures retry with exponential backoff (never 4xx-class
 * semantic errors), and an optional CallBudget caps the total number of
 * backend calls a run may issue.
 *
 * Backends must be safe for concurrent request issuance.
 */

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <reinfer/error.hpp>
#include <reinfer/prompts.hpp>

namespace reinfer {

// ============================================================================
// Request / response types
// ============================================================================

/// Decoding and logprob settings sent with every request.
struct InferenceParams {
  std::string model_name = "deepseek-v3.2";
  double temperature = 0.0;
  int max_tokens = 4000;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  bool logprobs_enabled = true;
  int top_logprobs = 20;

  bool operator==(const InferenceParams&) const = default;
};

enum class FinishReason { Stop, Length, Other };

inline const char* finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Other: return "other";
  }
  return "other";
}

struct TokenCandidate {
  std::string token;
  double logprob = 0.0;
};

/// One generated position: the sampled token and its top-k alternatives.
struct TokenLogprobs {
  std::string token;
  double logprob = 0.0;
  std::vector<TokenCandidate> top;
};

struct ModelOutput {
  std::string text;
  std::vector<TokenLogprobs> token_logprobs;  ///< empty in logprob-less modes
  FinishReason finish_reason = FinishReason::Stop;
};

// ============================================================================
// Backend interface
// ============================================================================

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual ModelOutput complete(const PromptPair& prompt,
                               const InferenceParams& params) = 0;
  virtual const char* kind() const = 0;
};

// ============================================================================
// Retry policy and call budget
// ============================================================================

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
  /// Injectable for tests; defaults to a real sleep.
  std::function<void(std::chrono::milliseconds)> sleeper =
      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

/// Thread-safe hard cap on total backend calls. Refuses further calls with
/// BudgetExceeded once the cap is reached.
class CallBudget {
 public:
  explicit CallBudget(std::size_t cap) : cap_(cap) {}

  void consume() {
    std::size_t current = used_.load(std::memory_order_relaxed);
    while (true) {
      if (current >= cap_)
        fail(ErrorCode::BudgetExceeded,
             "call budget of " + std::to_string(cap_) + " exhausted");
      if (used_.compare_exchange_weak(current, current + 1,
                                      std::memory_order_relaxed))
        return;
    }
  }

  std::size_t used() const noexcept {
    return used_.load(std::memory_order_relaxed);
  }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::atomic<std::size_t> used_{0};
  std::size_t cap_;
};

// ============================================================================
// Completion client
// ============================================================================

class CompletionClient {
 public:
  explicit CompletionClient(ModelBackend& backend, RetryPolicy retry = {},
                            CallBudget* budget = nullptr)
      : backend_(backend), retry_(std::move(retry)), budget_(budget) {}

  /// Issues the request, retrying TransportError up to max_attempts with
  /// exponential backoff. Semantic failures (ProtocolError) and budget
  /// exhaustion propagate immediately. Every attempt counts against the
  /// budget.
  ModelOutput complete(const PromptPair& prompt, const InferenceParams& params) {
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      if (budget_ != nullptr) budget_->consume();
      try {
        return backend_.complete(prompt, params);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TransportError ||
            attempt >= retry_.max_attempts)
          throw;
      }
      retry_.sleeper(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(backoff.count()) * retry_.backoff_multiplier));
    }
  }

  ModelBackend& backend() noexcept { return backend_; }

 private:
  ModelBackend& backend_;
  RetryPolicy retry_;
  CallBudget* budget_;
};

}  // namespace reinfer
