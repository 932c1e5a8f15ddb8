#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file policy.hpp
 * @brief Re-ask trigger criterion, threshold transfer, sweep grids, and
 *        Pareto-frontier extraction.
 *
 * The trigger re-asks when either signal indicates hesitation:
 *
 *     trigger = [ H > tau_h  or  MSP < tau_msp ]       (strict inequalities)
 *
 * equivalently, the first answer is accepted iff H <= tau_h and
 * MSP >= tau_msp. Offline policy replay over recorded runs lives in
 * replay.hpp.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <reinfer/error.hpp>
#include <reinfer/metrics.hpp>

namespace reinfer {

// ============================================================================
// Thresholds and trigger
// ============================================================================

/// The policy pair governing re-asking. tau_h is in nats, tau_msp is a
/// probability. Vacuous pairs (tau_h > ln K, tau_msp <= 1/K) are legal and
/// reproduce the single-pass baseline.
struct TriggerThresholds {
  double tau_h = 0.8;
  double tau_msp = 0.6;

  bool operator==(const TriggerThresholds&) const = default;
};

inline void validate_thresholds(const TriggerThresholds& t) {
  if (!std::isfinite(t.tau_h) || t.tau_h <= 0.0)
    fail(ErrorCode::InvalidArgument,
         "tau_h must be finite and positive, got " + std::to_string(t.tau_h));
  if (!std::isfinite(t.tau_msp) || t.tau_msp <= 0.0 || t.tau_msp >= 1.0)
    fail(ErrorCode::InvalidArgument,
         "tau_msp must lie in (0, 1), got " + std::to_string(t.tau_msp));
}

/// True iff a second, more deliberate pass should be made.
inline bool should_reask(const UncertaintyMetrics& m,
                         const TriggerThresholds& t) noexcept {
  return m.entropy_nats > t.tau_h || m.msp < t.tau_msp;
}

/// Acceptance form of the same criterion; always the exact negation of
/// should_reask().
inline bool accepts_first_answer(const UncertaintyMetrics& m,
                                 const TriggerThresholds& t) noexcept {
  return m.entropy_nats <= t.tau_h && m.msp >= t.tau_msp;
}

// ============================================================================
// Threshold transfer across option counts
// ============================================================================

/// Map an entropy threshold between tasks with different option counts by
/// holding the normalized threshold tau_h / ln(K) fixed.
inline double transfer_entropy_threshold(double tau_h, int k_src, int k_dst) {
  if (k_src < kMinOptions || k_dst < kMinOptions)
    fail(ErrorCode::InvalidOptionCount,
         "threshold transfer requires option counts >= 2");
  if (!std::isfinite(tau_h) || tau_h <= 0.0)
    fail(ErrorCode::InvalidArgument, "tau_h must be finite and positive");
  return tau_h * std::log(static_cast<double>(k_dst)) /
         std::log(static_cast<double>(k_src));
}

// ============================================================================
// Sweep grid
// ============================================================================

/// Cartesian product of the two threshold lists in row-major order with
/// tau_h as the outer loop.
inline std::vector<TriggerThresholds> build_sweep_grid(
    const std::vector<double>& tau_h_values,
    const std::vector<double>& tau_msp_values) {
  if (tau_h_values.empty() || tau_msp_values.empty())
    fail(ErrorCode::EmptyGrid, "sweep grid axes must be non-empty");
  std::vector<TriggerThresholds> grid;
  grid.reserve(tau_h_values.size() * tau_msp_values.size());
  for (double h : tau_h_values)
    for (double m : tau_msp_values) {
      TriggerThresholds t{h, m};
      validate_thresholds(t);
      grid.push_back(t);
    }
  return grid;
}

// ============================================================================
// Sweep points and the Pareto frontier
// ============================================================================

/// One threshold pair's outcome on a fixed log. Rates are exact ratios of
/// the stored counts.
struct SweepPoint {
  TriggerThresholds thresholds;
  std::size_t total = 0;
  std::size_t reasked = 0;
  std::size_t final_correct = 0;
  double reask_rate = 0.0;
  double final_accuracy = 0.0;
};

/// Non-dominated subset of swept points, ordered by strictly increasing
/// re-ask rate and strictly increasing accuracy.
struct ParetoFrontier {
  std::vector<SweepPoint> points;
};

/**
 * Extract the Pareto frontier under the dominance order
 * (r1 <= r2 and a1 >= a2, strict in at least one).
 *
 * Points are sorted by increasing re-ask rate (ties: higher accuracy first)
 * and a point is retained iff its accuracy strictly exceeds the best
 * accuracy seen at any lower-or-equal rate. For equal rates only the
 * max-accuracy point can survive.
 */
inline ParetoFrontier pareto_frontier(std::vector<SweepPoint> points) {
  if (points.empty())
    fail(ErrorCode::EmptyGrid, "cannot take the frontier of zero points");
  std::stable_sort(points.begin(), points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) {
                     if (a.reask_rate != b.reask_rate)
                       return a.reask_rate < b.reask_rate;
                     return a.final_accuracy > b.final_accuracy;
                   });
  ParetoFrontier frontier;
  double best = -1.0;
  for (const SweepPoint& p : points) {
    if (p.final_accuracy > best) {
      frontier.points.push_back(p);
      best = p.final_accuracy;
    }
  }
  return frontier;
}

}  // namespace reinfer
