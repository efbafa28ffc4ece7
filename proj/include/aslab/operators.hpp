#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aslab/backend.hpp"
#include "aslab/core.hpp"
#include "aslab/diversity.hpp"

namespace aslab::operators {

enum class DiversityInstruction { EncourageDifferent, RequestSimilar, None };

// The three prompt-level diversity mechanisms. Baseline agents keep all of
// them; ablated agents drop the complexity schedule and ask for similar ideas
// instead of different ones.
struct DiversityConfig {
  bool sibling_memory = true;
  bool adaptive_complexity = true;
  DiversityInstruction instruction = DiversityInstruction::EncourageDifferent;

  static DiversityConfig baseline() { return {true, true, DiversityInstruction::EncourageDifferent}; }
  static DiversityConfig ablated() { return {true, false, DiversityInstruction::RequestSimilar}; }
  static DiversityConfig for_mode(core::DiversityMode mode) {
    return mode == core::DiversityMode::Baseline ? baseline() : ablated();
  }
};

enum class ComplexityCue { Minimal, Moderate, Advanced };

// Draft 1 -> Minimal, drafts 2-3 -> Moderate, drafts 4-5 -> Advanced.
ComplexityCue complexity_cue(int draft_index);

// Versioned prompt templates with named placeholders {task_description,
// complexity_cue, diversity_clause, sibling_blocks, target_code, exec_log}.
// Templates are data: researchers can swap the file without code changes.
struct PromptTemplates {
  std::string version;
  std::string cue_minimal, cue_moderate, cue_advanced;
  std::string clause_different, clause_similar;
  std::string sibling_block;
  std::string response_format;
  std::string draft_system, draft_user;
  std::string debug_system, debug_user;
  std::string improve_system, improve_user;

  static const PromptTemplates& builtin();
  static PromptTemplates from_json(const std::string& text);
  static PromptTemplates from_file(const std::string& path);
};

struct OperatorContext {
  const core::TaskSpec* task = nullptr;
  std::optional<core::SolutionNode> target;     // Debug/Improve
  std::vector<std::string> sibling_summaries;   // only when sibling_memory
  int draft_index = 1;
  DiversityConfig diversity;
};

struct Prompt {
  std::string system;
  std::string user;
};

// Pure functions of the context: identical context -> identical bytes.
Prompt build_draft_prompt(const OperatorContext& ctx,
                          const PromptTemplates& templates = PromptTemplates::builtin());
Prompt build_debug_prompt(const OperatorContext& ctx,
                          const PromptTemplates& templates = PromptTemplates::builtin());
Prompt build_improve_prompt(const OperatorContext& ctx,
                            const PromptTemplates& templates = PromptTemplates::builtin());

// Completion schema: a "PLAN:" section then exactly one fenced code block.
struct ParsedCompletion {
  bool ok = false;
  std::string plan;
  std::string code;
  std::string error;
};

ParsedCompletion parse_completion(const std::string& text);

inline constexpr size_t kDebugLogTailChars = 4000;
inline constexpr size_t kSummaryMaxChars = 1000;

inline constexpr int kDefaultContextTokens = 131072;  // 128K window

// Draft/Debug/Improve: prompt assembly + backend call + parsing. The returned
// node is unexecuted (ExecStatus::NotRun); a completion that fails to parse
// yields a Buggy node with empty code so the search can continue.
core::SolutionNode draft(const OperatorContext& ctx, backend::Backend& be,
                         const std::string& node_id, double created_at, double temperature,
                         const PromptTemplates& templates = PromptTemplates::builtin(),
                         int max_context_tokens = kDefaultContextTokens);
core::SolutionNode debug(const OperatorContext& ctx, backend::Backend& be,
                         const std::string& node_id, double created_at, double temperature,
                         const PromptTemplates& templates = PromptTemplates::builtin(),
                         int max_context_tokens = kDefaultContextTokens);
core::SolutionNode improve(const OperatorContext& ctx, backend::Backend& be,
                           const std::string& node_id, double created_at, double temperature,
                           const PromptTemplates& templates = PromptTemplates::builtin(),
                           int max_context_tokens = kDefaultContextTokens);

// <= 1000-char sibling-memory summary: first sentence of the plan plus the
// extracted model family when one is recognized.
std::string summarize_node(const core::SolutionNode& node,
                           const diversity::ArchTaxonomy& taxonomy =
                               diversity::ArchTaxonomy::builtin());

}  // namespace aslab::operators
