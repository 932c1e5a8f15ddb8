#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file analysis.hpp
 * @brief Post-hoc statistics over inference records.
 *
 * Transition counting over re-asked items, McNemar's paired test with
 * continuity correction, Cohen's h effect size, grouped mean/sd summaries
 * of the uncertainty metrics and scoring rules, per-subject accuracy
 * tables, and the exact count identities every evaluated log must satisfy.
 *
 * All aggregation is pure and order-independent.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <reinfer/error.hpp>
#include <reinfer/record.hpp>

namespace reinfer {

// ============================================================================
// Transitions
// ============================================================================

/// Paired first-vs-final outcomes over re-asked records.
struct TransitionCounts {
  std::size_t wrong_to_correct = 0;  ///< b
  std::size_t correct_to_wrong = 0;  ///< c
  std::size_t stayed_correct = 0;
  std::size_t stayed_wrong = 0;

  std::size_t total() const noexcept {
    return wrong_to_correct + correct_to_wrong + stayed_correct + stayed_wrong;
  }
};

/// Exact transition counts; every input record must carry a second pass.
inline TransitionCounts count_transitions(
    std::span<const InferenceRecord> records) {
  TransitionCounts counts;
  for (const InferenceRecord& r : records) {
    if (!r.pass2.has_value())
      fail(ErrorCode::IncompleteLog,
           "record '" + r.question_id + "' has no second pass");
    if (r.baseline_correct && r.final_correct)
      ++counts.stayed_correct;
    else if (r.baseline_correct && !r.final_correct)
      ++counts.correct_to_wrong;
    else if (!r.baseline_correct && r.final_correct)
      ++counts.wrong_to_correct;
    else
      ++counts.stayed_wrong;
  }
  return counts;
}

// ============================================================================
// McNemar's test
// ============================================================================

struct McNemarResult {
  double chi_square = 0.0;
  double p_value = 1.0;
};

/**
 * McNemar's test with continuity correction over discordant counts b and c:
 * chi^2 = (max(|b-c|-1, 0))^2 / (b+c). The clamp keeps b == c at exactly
 * chi^2 = 0 instead of a spurious positive statistic. The p-value is the
 * chi-square(1) upper tail, p = erfc(sqrt(chi^2 / 2)).
 */
inline McNemarResult mcnemar(std::size_t b, std::size_t c) {
  if (b + c == 0)
    fail(ErrorCode::UndefinedStatistic,
         "McNemar's test requires at least one discordant pair");
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c));
  const double corrected = std::max(diff - 1.0, 0.0);
  const double chi = corrected * corrected / static_cast<double>(b + c);
  return McNemarResult{chi, std::erfc(std::sqrt(chi / 2.0))};
}

// ============================================================================
// Cohen's h
// ============================================================================

/// Arcsine effect size between two proportions,
/// h = 2*asin(sqrt(p2)) - 2*asin(sqrt(p1)). Sign preserved.
inline double cohens_h(double p1, double p2) {
  for (double p : {p1, p2})
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      fail(ErrorCode::InvalidProportion,
           "proportion out of [0, 1]: " + std::to_string(p));
  return 2.0 * std::asin(std::sqrt(p2)) - 2.0 * std::asin(std::sqrt(p1));
}

// ============================================================================
// Grouped metric statistics
// ============================================================================

enum class MetricKind { Entropy, Msp, Brier, Nll };

inline const char* metric_kind_name(MetricKind m) {
  switch (m) {
    case MetricKind::Entropy: return "entropy";
    case MetricKind::Msp: return "msp";
    case MetricKind::Brier: return "brier";
    case MetricKind::Nll: return "nll";
  }
  return "entropy";
}

enum class Round { First, Final };

/// Mean and sample (n-1) standard deviation for one (group, metric) cell.
/// n == 0 reports null stats; n == 1 reports sd = 0 with the single_sample
/// flag.
struct GroupStats {
  bool correct_group = false;
  MetricKind metric = MetricKind::Entropy;
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t n = 0;
  bool single_sample = false;
};

struct GroupedStats {
  std::vector<GroupStats> stats;
  std::size_t excluded_fallback = 0;  ///< traces skipped as uniform fallbacks

  const GroupStats& cell(bool correct, MetricKind m) const {
    for (const GroupStats& g : stats)
      if (g.correct_group == correct && g.metric == m) return g;
    fail(ErrorCode::InvalidArgument, "no such stats cell");
  }
};

namespace detail {

/// Trace that produced the answer of the requested round. For the final
/// round that is the parsed second pass when present, else the first pass.
inline const PassTrace& round_trace(const InferenceRecord& r, Round round) {
  if (round == Round::Final && r.pass2.has_value() &&
      r.pass2->extracted_answer.has_value())
    return *r.pass2;
  return r.pass1;
}

inline bool round_correct(const InferenceRecord& r, Round round) {
  return round == Round::First ? r.baseline_correct : r.final_correct;
}

inline double metric_value(const PassTrace& t, MetricKind m) {
  switch (m) {
    case MetricKind::Entropy: return t.metrics.entropy_nats;
    case MetricKind::Msp: return t.metrics.msp;
    case MetricKind::Brier: return t.scoring.brier;
    case MetricKind::Nll: return t.scoring.nll;
  }
  return 0.0;
}

}  // namespace detail

/// Mean and sample sd per (correct/incorrect group, metric) for the chosen
/// round. Uniform-fallback traces carry no model signal and are excluded;
/// their count is reported.
inline GroupedStats grouped_metric_stats(
    std::span<const InferenceRecord> records, Round round) {
  GroupedStats out;
  constexpr MetricKind kinds[] = {MetricKind::Entropy, MetricKind::Msp,
                                  MetricKind::Brier, MetricKind::Nll};
  std::vector<double> values[2][4];
  for (const InferenceRecord& r : records) {
    const PassTrace& t = detail::round_trace(r, round);
    if (t.distribution_fallback || !t.distribution.has_value()) {
      ++out.excluded_fallback;
      continue;
    }
    const int g = detail::round_correct(r, round) ? 1 : 0;
    for (int m = 0; m < 4; ++m)
      values[g][m].push_back(detail::metric_value(t, kinds[m]));
  }
  for (int g = 0; g < 2; ++g)
    for (int m = 0; m < 4; ++m) {
      const auto& v = values[g][m];
      GroupStats cell;
      cell.correct_group = g == 1;
      cell.metric = kinds[m];
      cell.n = v.size();
      if (!v.empty()) {
        double sum = 0.0;
        for (double x : v) sum += x;
        const double mean = sum / static_cast<double>(v.size());
        cell.mean = mean;
        if (v.size() == 1) {
          cell.sd = 0.0;
          cell.single_sample = true;
        } else {
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          cell.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
      }
      out.stats.push_back(cell);
    }
  return out;
}

// ============================================================================
// Round-level means
// ============================================================================

struct RoundMeans {
  double mean_entropy = 0.0;
  double mean_msp = 0.0;
  std::size_t n = 0;
};

inline RoundMeans first_round_means(std::span<const InferenceRecord> records) {
  RoundMeans out;
  double he = 0.0, hm = 0.0;
  for (const InferenceRecord& r : records) {
    he += r.pass1.metrics.entropy_nats;
    hm += r.pass1.metrics.msp;
    ++out.n;
  }
  if (out.n > 0) {
    out.mean_entropy = he / static_cast<double>(out.n);
    out.mean_msp = hm / static_cast<double>(out.n);
  }
  return out;
}

/// Final-round means. The mixed aggregate uses the final-answer trace of
/// every record (second pass where re-asked, first pass elsewhere); the
/// reasked_only aggregate restricts to records with a second pass. Both are
/// reported because round-level summaries are ambiguous between them.
inline RoundMeans final_round_means(std::span<const InferenceRecord> records,
                                    bool reasked_only) {
  RoundMeans out;
  double he = 0.0, hm = 0.0;
  for (const InferenceRecord& r : records) {
    if (reasked_only && !r.pass2.has_value()) continue;
    const PassTrace& t = detail::round_trace(r, Round::Final);
    he += t.metrics.entropy_nats;
    hm += t.metrics.msp;
    ++out.n;
  }
  if (out.n > 0) {
    out.mean_entropy = he / static_cast<double>(out.n);
    out.mean_msp = hm / static_cast<double>(out.n);
  }
  return out;
}

// ============================================================================
// Accuracy report
// ============================================================================

struct SubjectRow {
  std::string subject;
  std::size_t total = 0;
  std::size_t reasked = 0;
  double reasked_pct = 0.0;
  double first_acc_pct = 0.0;
  double final_acc_pct = 0.0;
  double change_pp = 0.0;
};

/// Exact count identities. decomposition_blend carries the recomputed
/// (1-r)*acc_confident + r*acc_reasked value for display.
struct IdentityChecks {
  bool count_identity = true;
  bool net_change_identity = true;
  bool decomposition_identity = true;
  double decomposition_blend = 0.0;

  bool all_ok() const noexcept {
    return count_identity && net_change_identity && decomposition_identity;
  }
};

/// The blended accuracy (n_conf*acc_conf + n_reask*acc_reask) / total used
/// by the report's identity checker.
inline double decomposition_accuracy(std::size_t n_confident,
                                     double acc_confident,
                                     std::size_t n_reasked, double acc_reasked,
                                     std::size_t total) {
  if (total == 0 || n_confident + n_reasked != total)
    fail(ErrorCode::InvalidArgument,
         "decomposition groups must partition the total");
  return (static_cast<double>(n_confident) * acc_confident +
          static_cast<double>(n_reasked) * acc_reasked) /
         static_cast<double>(total);
}

struct Report {
  RunMode mode = RunMode::Baseline;
  std::size_t total = 0;
  std::size_t reasked = 0;
  std::size_t baseline_correct = 0;
  std::size_t final_correct = 0;
  double baseline_accuracy = 0.0;
  double final_accuracy = 0.0;
  double reask_rate = 0.0;
  std::vector<SubjectRow> subjects;

  // Present only when the log contains second passes.
  std::optional<TransitionCounts> transitions;
  std::optional<McNemarResult> mcnemar_result;
  std::optional<double> effect_size;       ///< Cohen's h on the re-asked subset
  std::optional<double> reasked_first_acc;
  std::optional<double> reasked_final_acc;

  GroupedStats first_round_stats;
  std::optional<GroupedStats> final_round_stats;
  RoundMeans first_means;
  std::optional<RoundMeans> final_means_mixed;
  std::optional<RoundMeans> final_means_reasked;

  IdentityChecks identities;
};

/// Full post-hoc report. Subject rows follow first-appearance order of the
/// records.
inline Report accuracy_report(std::span<const InferenceRecord> records,
                              RunMode mode) {
  Report rep;
  rep.mode = mode;
  rep.total = records.size();

  std::vector<std::string> subject_order;
  std::map<std::string, SubjectRow> by_subject;
  std::map<std::string, std::pair<std::size_t, std::size_t>> subject_correct;

  std::size_t confident_correct = 0;
  std::size_t reasked_first_correct = 0, reasked_final_correct = 0;

  for (const InferenceRecord& r : records) {
    if (r.baseline_correct) ++rep.baseline_correct;
    if (r.final_correct) ++rep.final_correct;
    const bool reasked = r.pass2.has_value();
    if (reasked) {
      ++rep.reasked;
      if (r.baseline_correct) ++reasked_first_correct;
      if (r.final_correct) ++reasked_final_correct;
    } else if (r.final_correct) {
      ++confident_correct;
    }
    auto [it, inserted] = by_subject.try_emplace(r.subject);
    if (inserted) {
      it->second.subject = r.subject;
      subject_order.push_back(r.subject);
    }
    SubjectRow& row = it->second;
    ++row.total;
    if (reasked) ++row.reasked;
    auto& [sc_first, sc_final] = subject_correct[r.subject];
    if (r.baseline_correct) ++sc_first;
    if (r.final_correct) ++sc_final;
  }

  if (rep.total > 0) {
    rep.baseline_accuracy =
        static_cast<double>(rep.baseline_correct) / static_cast<double>(rep.total);
    rep.final_accuracy =
        static_cast<double>(rep.final_correct) / static_cast<double>(rep.total);
    rep.reask_rate =
        static_cast<double>(rep.reasked) / static_cast<double>(rep.total);
  }

  for (const std::string& s : subject_order) {
    SubjectRow row = by_subject[s];
    const auto& [sc_first, sc_final] = subject_correct[s];
    row.reasked_pct = 100.0 * static_cast<double>(row.reasked) /
                      static_cast<double>(row.total);
    row.first_acc_pct =
        100.0 * static_cast<double>(sc_first) / static_cast<double>(row.total);
    row.final_acc_pct =
        100.0 * static_cast<double>(sc_final) / static_cast<double>(row.total);
    row.change_pp = row.final_acc_pct - row.first_acc_pct;
    rep.subjects.push_back(row);
  }

  if (rep.reasked > 0) {
    std::vector<InferenceRecord> reasked_records;
    for (const InferenceRecord& r : records)
      if (r.pass2.has_value()) reasked_records.push_back(r);
    rep.transitions = count_transitions(reasked_records);
    const auto& tc = *rep.transitions;
    if (tc.wrong_to_correct + tc.correct_to_wrong > 0)
      rep.mcnemar_result = mcnemar(tc.wrong_to_correct, tc.correct_to_wrong);
    rep.reasked_first_acc = static_cast<double>(reasked_first_correct) /
                            static_cast<double>(rep.reasked);
    rep.reasked_final_acc = static_cast<double>(reasked_final_correct) /
                            static_cast<double>(rep.reasked);
    rep.effect_size = cohens_h(*rep.reasked_first_acc, *rep.reasked_final_acc);
    rep.final_round_stats = grouped_metric_stats(records, Round::Final);
    rep.final_means_mixed = final_round_means(records, /*reasked_only=*/false);
    rep.final_means_reasked = final_round_means(records, /*reasked_only=*/true);
  }
  rep.first_round_stats = grouped_metric_stats(records, Round::First);
  rep.first_means = first_round_means(records);

  // Exact identities over integer counts.
  IdentityChecks id;
  if (rep.transitions.has_value()) {
    const auto& tc = *rep.transitions;
    id.count_identity = tc.total() == rep.reasked;
    id.net_change_identity =
        rep.final_correct ==
        rep.baseline_correct - tc.correct_to_wrong + tc.wrong_to_correct;
  } else {
    id.count_identity = rep.reasked == 0;
    id.net_change_identity = rep.final_correct == rep.baseline_correct;
  }
  id.decomposition_identity =
      rep.final_correct == confident_correct + reasked_final_correct;
  if (rep.total > 0) {
    const std::size_t n_conf = rep.total - rep.reasked;
    const double acc_conf =
        n_conf == 0 ? 0.0
                    : static_cast<double>(confident_correct) /
                          static_cast<double>(n_conf);
    const double acc_reask =
        rep.reasked == 0 ? 0.0
                         : static_cast<double>(reasked_final_correct) /
                               static_cast<double>(rep.reasked);
    id.decomposition_blend = decomposition_accuracy(n_conf, acc_conf,
                                                    rep.reasked, acc_reask,
                                                    rep.total);
  }
  rep.identities = id;
  return rep;
}

// ============================================================================
// Rendering
// ============================================================================

namespace detail {

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string p_value_text(double p) {
  if (p < 1e-6) return "< 1e-06";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", p);
  return buf;
}

inline std::string group_stats_line(const GroupedStats& gs, MetricKind m) {
  auto cell_text = [&](bool correct) {
    const GroupStats& c = gs.cell(correct, m);
    if (!c.mean.has_value()) return std::string("n/a (n=0)");
    std::string s = fixed6(*c.mean) + " +/- " + fixed6(*c.sd) +
                    " (n=" + std::to_string(c.n) + ")";
    if (c.single_sample) s += " [single sample]";
    return s;
  };
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-8s", metric_kind_name(m));
  return std::string(buf) + " correct " + cell_text(true) + "  incorrect " +
         cell_text(false);
}

}  // namespace detail

/// Plain-text rendering with all percentages at 2 decimals.
inline std::string render_text(const Report& rep) {
  std::ostringstream out;
  out << "Run report (mode=" << run_mode_name(rep.mode) << ")\n";
  out << "  Questions:      " << rep.total << "\n";
  out << "  Re-asked:       " << rep.reasked << " ("
      << detail::fixed2(100.0 * rep.reask_rate) << "%)\n";
  out << "  Accuracy:       " << detail::fixed2(100.0 * rep.baseline_accuracy)
      << "% -> " << detail::fixed2(100.0 * rep.final_accuracy) << "% ("
      << (rep.final_accuracy >= rep.baseline_accuracy ? "+" : "")
      << detail::fixed2(100.0 * (rep.final_accuracy - rep.baseline_accuracy))
      << "pp)\n";

  out << "\nSubjects:\n";
  out << "  subject         total  reasked  reasked%   first%   final%  "
         "change(pp)\n";
  for (const SubjectRow& row : rep.subjects) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "  %-14s %6zu  %7zu  %8.2f  %7.2f  %7.2f  %+10.2f\n",
                  row.subject.c_str(), row.total, row.reasked, row.reasked_pct,
                  row.first_acc_pct, row.final_acc_pct, row.change_pp);
    out << buf;
  }

  if (rep.transitions.has_value()) {
    const TransitionCounts& tc = *rep.transitions;
    const double n = static_cast<double>(tc.total());
    auto pct = [&](std::size_t c) {
      return detail::fixed2(n == 0 ? 0.0 : 100.0 * static_cast<double>(c) / n);
    };
    out << "\nTransitions (re-asked subset, n=" << tc.total() << "):\n";
    out << "  wrong->correct  " << tc.wrong_to_correct << " ("
        << pct(tc.wrong_to_correct) << "%)\n";
    out << "  correct->wrong  " << tc.correct_to_wrong << " ("
        << pct(tc.correct_to_wrong) << "%)\n";
    out << "  stayed correct  " << tc.stayed_correct << " ("
        << pct(tc.stayed_correct) << "%)\n";
    out << "  stayed wrong    " << tc.stayed_wrong << " ("
        << pct(tc.stayed_wrong) << "%)\n";
  }

  if (rep.mcnemar_result.has_value()) {
    out << "\nStatistics (re-asked subset):\n";
    out << "  McNemar chi^2 = " << detail::fixed2(rep.mcnemar_result->chi_square)
        << ", p " << (rep.mcnemar_result->p_value < 1e-6 ? "" : "= ")
        << detail::p_value_text(rep.mcnemar_result->p_value) << "\n";
    if (rep.effect_size.has_value())
      out << "  Cohen's h = " << detail::fixed2(*rep.effect_size) << " ("
          << detail::fixed2(100.0 * *rep.reasked_first_acc) << "% -> "
          << detail::fixed2(100.0 * *rep.reasked_final_acc) << "%)\n";
  }

  out << "\nUncertainty metrics (first round";
  if (rep.first_round_stats.excluded_fallback > 0)
    out << ", " << rep.first_round_stats.excluded_fallback
        << " fallback traces excluded";
  out << "):\n";
  for (MetricKind m : {MetricKind::Entropy, MetricKind::Msp, MetricKind::Brier,
                       MetricKind::Nll})
    out << "  " << detail::group_stats_line(rep.first_round_stats, m) << "\n";
  if (rep.final_round_stats.has_value()) {
    out << "Uncertainty metrics (final round";
    if (rep.final_round_stats->excluded_fallback > 0)
      out << ", " << rep.final_round_stats->excluded_fallback
          << " fallback traces excluded";
    out << "):\n";
    for (MetricKind m : {MetricKind::Entropy, MetricKind::Msp,
                         MetricKind::Brier, MetricKind::Nll})
      out << "  " << detail::group_stats_line(*rep.final_round_stats, m)
          << "\n";
  }

  out << "\nRound means:\n";
  out << "  first pass          entropy " << detail::fixed6(rep.first_means.mean_entropy)
      << "  msp " << detail::fixed6(rep.first_means.mean_msp) << "  (n="
      << rep.first_means.n << ")\n";
  if (rep.final_means_mixed.has_value())
    out << "  final (mixed)       entropy "
        << detail::fixed6(rep.final_means_mixed->mean_entropy) << "  msp "
        << detail::fixed6(rep.final_means_mixed->mean_msp) << "  (n="
        << rep.final_means_mixed->n << ")\n";
  if (rep.final_means_reasked.has_value())
    out << "  final (reasked only) entropy "
        << detail::fixed6(rep.final_means_reasked->mean_entropy) << "  msp "
        << detail::fixed6(rep.final_means_reasked->mean_msp) << "  (n="
        << rep.final_means_reasked->n << ")\n";

  out << "\nIdentity checks: "
      << (rep.identities.all_ok() ? "OK" : "FAILED") << " (blend = "
      << detail::fixed6(100.0 * rep.identities.decomposition_blend) << "%)\n";
  return out.str();
}

/// Machine-readable subject table. Columns: subject, total, reasked,
/// reasked_pct, first_acc_pct, final_acc_pct, change_pp. The last row
/// aggregates all records under the subject name "ALL".
inline std::string render_tsv(const Report& rep) {
  std::ostringstream out;
  out << "subject\ttotal\treasked\treasked_pct\tfirst_acc_pct\tfinal_acc_pct\t"
         "change_pp\n";
  auto row_text = [&](const SubjectRow& row) {
    out << row.subject << '\t' << row.total << '\t' << row.reasked << '\t'
        << detail::fixed2(row.reasked_pct) << '\t'
        << detail::fixed2(row.first_acc_pct) << '\t'
        << detail::fixed2(row.final_acc_pct) << '\t'
        << detail::fixed2(row.change_pp) << '\n';
  };
  for (const SubjectRow& row : rep.subjects) row_text(row);
  SubjectRow all;
  all.subject = "ALL";
  all.total = rep.total;
  all.reasked = rep.reasked;
  all.reasked_pct = 100.0 * rep.reask_rate;
  all.first_acc_pct = 100.0 * rep.baseline_accuracy;
  all.final_acc_pct = 100.0 * rep.final_accuracy;
  all.change_pp = all.final_acc_pct - all.first_acc_pct;
  row_text(all);
  return out.str();
}

}  // namespace reinfer
