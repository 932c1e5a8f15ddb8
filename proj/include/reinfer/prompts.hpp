#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file prompts.hpp
 * @brief Prompt construction for both passes.
 *
 * The template texts are the contract: they are mirrored verbatim under
 * assets/prompts/ and their content hashes are recorded in every run
 * manifest. Builders are pure functions of their inputs and accept only the
 * gold-free QuestionView, so no prompt can ever contain the gold label.
 */

#include <string>
#include <string_view>

#include <reinfer/dataset.hpp>
#include <reinfer/error.hpp>
#include <reinfer/hash.hpp>

namespace reinfer {

struct PromptPair {
  std::string system;
  std::string user;

  bool operator==(const PromptPair&) const = default;
};

// ============================================================================
// Templates (mirrored under assets/prompts/)
// ============================================================================

namespace templates {

/// First-pass system prompt; "{}" is replaced by the subject.
inline constexpr std::string_view kFirstPassSystem =
    "The following are multiple choice questions (with answers) about {}. "
    "Think step by step and then output the answer in the format of "
    "\"The answer is (X)\" at the end.";

/// System prompt of the prompt-only ablation: the re-ask wording without any
/// prior attempt.
inline constexpr std::string_view kPromptOnlySystem =
    "The following are multiple choice questions (with answers) about {}. "
    "Your last output had high entropy, indicating uncertainty. Discard the "
    "prior answer and recompute the solution from first principles. Think "
    "step by step and then output the answer in the format of \"The answer "
    "is (X)\" at the end.";

/// Fixed second-pass instruction appended after the Instruction: header.
inline constexpr std::string_view kReaskInstruction =
    "Your last output had high entropy, indicating uncertainty. Discard the "
    "prior answer and recompute the solution from first principles. Think "
    "step by step and then output the answer in the format of \"The answer "
    "is (X)\" at the end.";

inline constexpr std::string_view kPreviousAnswerHeader =
    "Your previous answer was:";
inline constexpr std::string_view kInstructionHeader = "Instruction:";

}  // namespace templates

/// Content hashes of the template texts, recorded in run manifests.
struct TemplateHashes {
  std::string first_pass_system;
  std::string prompt_only_system;
  std::string reask_instruction;

  bool operator==(const TemplateHashes&) const = default;
};

inline TemplateHashes template_hashes() {
  return TemplateHashes{hex_digest(fnv1a64(templates::kFirstPassSystem)),
                        hex_digest(fnv1a64(templates::kPromptOnlySystem)),
                        hex_digest(fnv1a64(templates::kReaskInstruction))};
}

// ============================================================================
// Builders
// ============================================================================

namespace detail {

inline std::string substitute_subject(std::string_view tmpl,
                                      std::string_view subject) {
  std::string out(tmpl);
  const auto pos = out.find("{}");
  if (pos != std::string::npos) out.replace(pos, 2, subject);
  return out;
}

}  // namespace detail

/// "Question: ..." block followed by the lettered "Options:" block.
inline std::string question_block(const QuestionView& q) {
  std::string out = "Question: " + q.stem + "\nOptions:";
  for (int i = 0; i < q.option_count(); ++i) {
    out += '\n';
    out += option_letter(i);
    out += ". ";
    out += q.options[static_cast<size_t>(i)];
  }
  return out;
}

inline PromptPair build_first_pass_prompt(const QuestionView& q,
                                          std::string_view subject) {
  return PromptPair{
      detail::substitute_subject(templates::kFirstPassSystem, subject),
      question_block(q)};
}

/**
 * Second-pass prompt: the original question block, the full first-pass
 * output under the "Your previous answer was:" header, then the fixed
 * uncertainty instruction under "Instruction:". Carries no correctness
 * information.
 */
inline PromptPair build_reask_prompt(const QuestionView& q,
                                     std::string_view first_output,
                                     std::string_view subject) {
  if (first_output.empty())
    fail(ErrorCode::PromptConstruction,
         "re-ask prompt requires the first-pass output");
  std::string user = question_block(q);
  user += "\n\n";
  user += templates::kPreviousAnswerHeader;
  user += '\n';
  user += first_output;
  user += "\n\n";
  user += templates::kInstructionHeader;
  user += '\n';
  user += templates::kReaskInstruction;
  return PromptPair{
      detail::substitute_subject(templates::kFirstPassSystem, subject),
      std::move(user)};
}

/// Prompt-only ablation: single pass, re-ask wording in the system prompt,
/// no prior answer and no uncertainty measurement.
inline PromptPair build_prompt_only_prompt(const QuestionView& q,
                                           std::string_view subject) {
  return PromptPair{
      detail::substitute_subject(templates::kPromptOnlySystem, subject),
      question_block(q)};
}

inline std::string prompt_hash(const PromptPair& p) {
  std::uint64_t h = fnv1a64(p.system);
  h = fnv1a64_append(h, "\x1e");
  h = fnv1a64_append(h, p.user);
  return hex_digest(h);
}

}  // namespace reinfer
