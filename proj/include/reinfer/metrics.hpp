#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file metrics.hpp
 * @brief Uncertainty metrics over multiple-choice answer distributions.
 *
 * Everything here operates on AnswerDistribution, a validated probability
 * vector over K answer options (letters A.. of a multiple-choice question).
 * Provided metrics:
 *
 * - entropy (nats), normalized entropy H/ln(K), maximum softmax probability
 * - proper scoring rules against the labeled option: Brier score and NLL
 * - the greedy decision argmax_option
 *
 * All functions are pure and operate on immutable values; they are safe for
 * unrestricted concurrent use. Arithmetic is double precision throughout.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <reinfer/error.hpp>

namespace reinfer {

// ============================================================================
// Constants
// ============================================================================

inline constexpr int kMinOptions = 2;
inline constexpr int kMaxOptions = 26;  // option letters A..Z

/// Probability assigned to option letters absent from returned top-logprobs.
/// Keeps NLL finite and distributions strictly positive where flooring is on.
inline constexpr double kDefaultProbFloor = 1e-10;

/// Tolerance on sum(probs) == 1 for a valid distribution.
inline constexpr double kSumTolerance = 1e-9;

// ============================================================================
// AnswerDistribution
// ============================================================================

/**
 * Normalized probability vector over K answer options.
 *
 * Invariants, enforced at construction:
 * - 2 <= K <= 26
 * - every entry in [0, 1]
 * - entries sum to 1 within 1e-9
 */
class AnswerDistribution {
 public:
  static AnswerDistribution from_probs(std::vector<double> probs) {
    validate(probs);
    return AnswerDistribution(std::move(probs));
  }

  static AnswerDistribution uniform(int k) {
    if (k < kMinOptions || k > kMaxOptions)
      fail(ErrorCode::InvalidOptionCount,
           "option count must be in [2, 26], got " + std::to_string(k));
    return AnswerDistribution(
        std::vector<double>(static_cast<size_t>(k), 1.0 / k));
  }

  int option_count() const noexcept { return static_cast<int>(probs_.size()); }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double operator[](int i) const { return probs_[static_cast<size_t>(i)]; }

  bool operator==(const AnswerDistribution& other) const = default;

 private:
  explicit AnswerDistribution(std::vector<double> p) : probs_(std::move(p)) {}

  static void validate(const std::vector<double>& probs) {
    const int k = static_cast<int>(probs.size());
    if (k < kMinOptions || k > kMaxOptions)
      fail(ErrorCode::InvalidOptionCount,
           "distribution must have between 2 and 26 entries, got " +
               std::to_string(k));
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        fail(ErrorCode::InvalidArgument,
             "probability out of [0, 1]: " + std::to_string(p));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      fail(ErrorCode::InvalidArgument,
           "probabilities sum to " + std::to_string(sum) + ", expected 1");
  }

  std::vector<double> probs_;
};

// ============================================================================
// Derived value types
// ============================================================================

/// Entropy family plus MSP for one distribution. See compute_metrics().
struct UncertaintyMetrics {
  double entropy_nats = 0.0;        ///< H in [0, ln K]
  double normalized_entropy = 0.0;  ///< H / ln(K) in [0, 1]
  double msp = 0.0;                 ///< max_i P_i in (0, 1]
};

/// Proper scoring rules against the labeled option. NLL may be +inf when the
/// labeled option has probability 0 and the floor is configured off.
struct ScoringValues {
  double brier = 0.0;  ///< in [0, 2]
  double nll = 0.0;    ///< nats, >= 0
};

// ============================================================================
// Construction from raw option weights
// ============================================================================

/**
 * Normalize non-negative option weights into an AnswerDistribution.
 *
 * Weights are divided by their sum; entries that are exactly zero (option
 * letters absent from the model's top-logprobs) are then raised to `floor`
 * and the vector is renormalized, so the result is scale invariant in the
 * input: normalize(c*w) == normalize(w) for any c > 0.
 *
 * An all-zero input yields the uniform distribution when `floor` > 0 (no
 * information about any option) and DegenerateDistribution when it is 0.
 */
inline AnswerDistribution normalize_option_weights(
    const std::vector<double>& raw_weights, int k,
    double floor = kDefaultProbFloor) {
  if (k < kMinOptions || k > kMaxOptions)
    fail(ErrorCode::InvalidOptionCount,
         "option count must be in [2, 26], got " + std::to_string(k));
  if (static_cast<int>(raw_weights.size()) != k)
    fail(ErrorCode::InvalidOptionCount,
         "weight vector length " + std::to_string(raw_weights.size()) +
             " does not match option count " + std::to_string(k));
  if (!std::isfinite(floor) || floor < 0.0 || floor >= 1.0 / k)
    fail(ErrorCode::InvalidArgument, "probability floor out of range");

  double sum = 0.0;
  for (double w : raw_weights) {
    if (!std::isfinite(w) || w < 0.0)
      fail(ErrorCode::InvalidArgument,
           "weights must be finite and non-negative");
    sum += w;
  }
  if (sum == 0.0) {
    if (floor > 0.0) return AnswerDistribution::uniform(k);
    fail(ErrorCode::DegenerateDistribution,
         "all option weights are zero and no floor is configured");
  }

  std::vector<double> probs(raw_weights.size());
  size_t zeros = 0;
  for (size_t i = 0; i < raw_weights.size(); ++i) {
    probs[i] = raw_weights[i] / sum;
    if (probs[i] == 0.0) ++zeros;
  }
  if (floor > 0.0 && zeros > 0) {
    const double z = 1.0 + static_cast<double>(zeros) * floor;
    for (double& p : probs) p = (p == 0.0 ? floor : p) / z;
  }
  return AnswerDistribution::from_probs(std::move(probs));
}

// ============================================================================
// Metrics
// ============================================================================

/// Shannon entropy in nats; terms with P_i = 0 contribute 0.
inline double entropy_nats(const AnswerDistribution& p) {
  double h = 0.0;
  for (double pi : p.probs())
    if (pi > 0.0) h -= pi * std::log(pi);
  return std::max(h, 0.0);
}

/// Entropy rescaled by its maximum ln(K); comparable across option counts.
inline double normalized_entropy(const AnswerDistribution& p) {
  const int k = p.option_count();
  if (k < kMinOptions)
    fail(ErrorCode::InvalidOptionCount,
         "normalized entropy requires at least 2 options");
  return entropy_nats(p) / std::log(static_cast<double>(k));
}

/// Maximum softmax probability: the model's confidence in its top choice.
inline double msp(const AnswerDistribution& p) {
  return *std::max_element(p.probs().begin(), p.probs().end());
}

/// Greedy decision. Ties break toward the lowest option index so replays
/// are deterministic.
inline int argmax_option(const AnswerDistribution& p) {
  const auto& v = p.probs();
  return static_cast<int>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

inline UncertaintyMetrics compute_metrics(const AnswerDistribution& p) {
  const double h = entropy_nats(p);
  return UncertaintyMetrics{
      h, h / std::log(static_cast<double>(p.option_count())), msp(p)};
}

// ============================================================================
// Proper scoring rules
// ============================================================================

inline void check_label(const AnswerDistribution& p, int y) {
  if (y < 0 || y >= p.option_count())
    fail(ErrorCode::InvalidLabel,
         "label " + std::to_string(y) + " out of range for K=" +
             std::to_string(p.option_count()));
}

/// Brier score: squared error between the vector and the one-hot label.
inline double brier(const AnswerDistribution& p, int y) {
  check_label(p, y);
  double s = 0.0;
  for (int i = 0; i < p.option_count(); ++i) {
    const double d = p[i] - (i == y ? 1.0 : 0.0);
    s += d * d;
  }
  return s;
}

/// Negative log-likelihood of the labeled option, -ln P_y. Probabilities
/// below `floor` clamp to -ln(floor); with floor 0 a zero-probability label
/// yields +inf.
inline double nll(const AnswerDistribution& p, int y,
                  double floor = kDefaultProbFloor) {
  check_label(p, y);
  const double py = p[y];
  if (py < floor) return -std::log(floor);
  if (py == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(-std::log(py), 0.0);
}

inline ScoringValues compute_scoring(const AnswerDistribution& p, int y,
                                     double floor = kDefaultProbFloor) {
  return ScoringValues{brier(p, y), nll(p, y, floor)};
}

}  // namespace reinfer
