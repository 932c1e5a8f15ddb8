#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file extract.hpp
 * @brief Answer-letter extraction from transcripts and option-distribution
 *        readout from token logprobs.
 *
 * The scaffold pattern is `The answer is (X)`: the scaffold matches
 * case-insensitively, the parentheses are optional, and the LAST occurrence
 * wins (models frequently revise mid-transcript). A bare letter must be a
 * capital in range; a parenthesized letter may be either case. When no
 * scaffold matches, the fallback is the last standalone capital option
 * letter on the final line.
 *
 * ExtractionFailure is a value (std::nullopt), not a fault — the caller
 * decides policy.
 */

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <reinfer/backend.hpp>
#include <reinfer/error.hpp>
#include <reinfer/metrics.hpp>

namespace reinfer {

namespace detail {

inline bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline bool iequal_at(std::string_view text, std::size_t pos,
                      std::string_view needle) {
  if (pos + needle.size() > text.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != needle[i])
      return false;
  return true;
}

}  // namespace detail

/// Scaffold match: the chosen option plus the byte offset of its letter.
struct AnswerMatch {
  int option = 0;
  std::size_t letter_pos = 0;
};

/// Locate the LAST `The answer is (X)` scaffold with a letter inside A..K.
inline std::optional<AnswerMatch> find_final_answer(std::string_view text,
                                                    int k) {
  constexpr std::string_view scaffold = "the answer is";
  std::optional<AnswerMatch> last;
  for (std::size_t i = 0; i + scaffold.size() <= text.size(); ++i) {
    if (!detail::iequal_at(text, i, scaffold)) continue;
    std::size_t j = i + scaffold.size();
    while (j < text.size() && (text[j] == ' ' || text[j] == '*')) ++j;
    if (j < text.size() && text[j] == ':') ++j;
    while (j < text.size() && (text[j] == ' ' || text[j] == '*')) ++j;
    bool parenthesized = false;
    if (j < text.size() && (text[j] == '(' || text[j] == '[')) {
      parenthesized = true;
      ++j;
    }
    if (j >= text.size()) continue;
    char c = text[j];
    // A bare lowercase letter is almost always prose ("the answer is a ...").
    if (!parenthesized && !(c >= 'A' && c <= 'Z')) continue;
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    const int idx = c - 'A';
    if (idx < 0 || idx >= k) continue;
    if (j + 1 < text.size() && detail::is_alnum(text[j + 1])) continue;
    last = AnswerMatch{idx, j};
  }
  return last;
}

/// Fallback: last standalone capital option letter on the final non-empty
/// line.
inline std::optional<int> last_standalone_letter(std::string_view text, int k) {
  std::size_t end = text.size();
  while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == '\r')) --end;
  if (end == 0) return std::nullopt;
  std::size_t begin = text.rfind('\n', end - 1);
  begin = begin == std::string_view::npos ? 0 : begin + 1;
  for (std::size_t j = end; j-- > begin;) {
    const char c = text[j];
    if (c < 'A' || c >= static_cast<char>('A' + k)) continue;
    const bool left_ok = j == begin || !detail::is_alnum(text[j - 1]);
    const bool right_ok = j + 1 >= end || !detail::is_alnum(text[j + 1]);
    if (left_ok && right_ok) return c - 'A';
  }
  return std::nullopt;
}

/// Parse the final answer letter out of a transcript; nullopt on failure.
inline std::optional<int> extract_answer(std::string_view text, int k) {
  if (auto m = find_final_answer(text, k)) return m->option;
  return last_standalone_letter(text, k);
}

// ============================================================================
// Token-to-option mapping
// ============================================================================

/// Map a candidate token to an option letter. The characters space, '(',
/// ')', '.', ':' are stripped; what remains must be a single capital letter
/// inside A..K. Anything else is discarded.
inline std::optional<int> token_to_option(std::string_view token, int k) {
  std::string stripped;
  for (char c : token) {
    if (c == ' ' || c == '(' || c == ')' || c == '.' || c == ':' ||
        c == '\n' || c == '\t')
      continue;
    stripped += c;
  }
  if (stripped.size() != 1) return std::nullopt;
  const char c = stripped[0];
  if (c < 'A' || c > 'Z') return std::nullopt;
  const int idx = c - 'A';
  if (idx >= k) return std::nullopt;
  return idx;
}

// ============================================================================
// Option-distribution readout
// ============================================================================

struct DistributionExtraction {
  AnswerDistribution distribution;
  bool uniform_fallback = false;  ///< no scaffold matched; forces the trigger
};

namespace detail {

/// Position of the final answer letter inside the token stream. Exact byte
/// mapping is used when the sampled tokens concatenate to the transcript;
/// otherwise the last position whose sampled token maps to the target
/// letter wins (covers backends that report logprobs for selected positions
/// only).
inline const TokenLogprobs* locate_answer_position(
    const ModelOutput& out, const std::optional<AnswerMatch>& match,
    int target, int k) {
  if (out.token_logprobs.empty()) return nullptr;
  if (match.has_value()) {
    std::size_t offset = 0;
    bool exact = true;
    const TokenLogprobs* holder = nullptr;
    for (const TokenLogprobs& tl : out.token_logprobs) {
      if (offset + tl.token.size() > out.text.size() ||
          out.text.compare(offset, tl.token.size(), tl.token) != 0) {
        exact = false;
        break;
      }
      const std::size_t next = offset + tl.token.size();
      if (match->letter_pos >= offset && match->letter_pos < next) holder = &tl;
      offset = next;
    }
    if (exact && offset == out.text.size() && holder != nullptr) return holder;
  }
  for (auto it = out.token_logprobs.rbegin(); it != out.token_logprobs.rend();
       ++it)
    if (token_to_option(it->token, k) == std::optional<int>(target)) return &*it;
  return nullptr;
}

}  // namespace detail

/**
 * Read the option distribution at the final answer position.
 *
 * Candidates at that position are mapped to option letters (max logprob
 * wins on duplicate mappings), exponentiated, floored for absent letters
 * and normalized. When no `The answer is (X)` scaffold matches at all, the
 * result is the uniform distribution with uniform_fallback set, which
 * forces the trigger by construction. A located answer without a usable
 * candidate list raises MissingLogprobs.
 */
inline DistributionExtraction extract_option_distribution(
    const ModelOutput& out, std::optional<int> answer_hint, int k,
    double floor = kDefaultProbFloor) {
  const auto match = find_final_answer(out.text, k);
  std::optional<int> target = match ? std::optional<int>(match->option)
                                    : answer_hint;
  if (!target.has_value())
    return DistributionExtraction{AnswerDistribution::uniform(k), true};

  const TokenLogprobs* position =
      detail::locate_answer_position(out, match, *target, k);
  if (position == nullptr || (position->top.empty() && position->token.empty()))
    fail(ErrorCode::MissingLogprobs,
         "no logprob candidates at the final answer position");

  constexpr double kAbsent = -std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<size_t>(k), kAbsent);
  auto consider = [&](const std::string& token, double logprob) {
    if (auto idx = token_to_option(token, k))
      best[static_cast<size_t>(*idx)] =
          std::max(best[static_cast<size_t>(*idx)], logprob);
  };
  consider(position->token, position->logprob);
  for (const TokenCandidate& cand : position->top)
    consider(cand.token, cand.logprob);

  std::vector<double> weights(static_cast<size_t>(k), 0.0);
  bool any = false;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (best[i] != kAbsent) {
      weights[i] = std::exp(best[i]);
      any = true;
    }
  }
  if (!any)
    fail(ErrorCode::MissingLogprobs,
         "no candidate at the answer position maps to an option letter");
  return DistributionExtraction{normalize_option_weights(weights, k, floor),
                                false};
}

}  // namespace reinfer
