#include "aslab/operators.hpp"

#include <json.hpp>

#include "aslab/embedded_data.hpp"
#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::operators {

ComplexityCue complexity_cue(int draft_index) {
  switch (draft_index) {
    case 1: return ComplexityCue::Minimal;
    case 2:
    case 3: return ComplexityCue::Moderate;
    case 4:
    case 5: return ComplexityCue::Advanced;
    default:
      raise(ErrorCode::OutOfRange, "draft_index " + std::to_string(draft_index) + " not in [1,5]");
  }
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates instance = PromptTemplates::from_json(embedded::kTemplatesJson);
  return instance;
}

PromptTemplates PromptTemplates::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PromptTemplates t;
  t.version = j.at("version").get<std::string>();
  t.cue_minimal = j.at("cue_minimal").get<std::string>();
  t.cue_moderate = j.at("cue_moderate").get<std::string>();
  t.cue_advanced = j.at("cue_advanced").get<std::string>();
  t.clause_different = j.at("clause_different").get<std::string>();
  t.clause_similar = j.at("clause_similar").get<std::string>();
  t.sibling_block = j.at("sibling_block").get<std::string>();
  t.response_format = j.at("response_format").get<std::string>();
  t.draft_system = j.at("draft_system").get<std::string>();
  t.draft_user = j.at("draft_user").get<std::string>();
  t.debug_system = j.at("debug_system").get<std::string>();
  t.debug_user = j.at("debug_user").get<std::string>();
  t.improve_system = j.at("improve_system").get<std::string>();
  t.improve_user = j.at("improve_user").get<std::string>();
  return t;
}

PromptTemplates PromptTemplates::from_file(const std::string& path) {
  return from_json(util::read_file(path));
}

namespace {

std::string cue_text(const PromptTemplates& t, ComplexityCue cue) {
  switch (cue) {
    case ComplexityCue::Minimal: return t.cue_minimal;
    case ComplexityCue::Moderate: return t.cue_moderate;
    case ComplexityCue::Advanced: return t.cue_advanced;
  }
  return {};
}

std::string render_sibling_blocks(const OperatorContext& ctx, const PromptTemplates& t) {
  if (!ctx.diversity.sibling_memory) return {};
  std::string out;
  for (size_t i = 0; i < ctx.sibling_summaries.size(); ++i) {
    std::string block = t.sibling_block;
    block = util::replace_all(std::move(block), "{sibling_index}", std::to_string(i + 1));
    block = util::replace_all(std::move(block), "{summary}", ctx.sibling_summaries[i]);
    out += block;
  }
  return out;
}

std::string fill(std::string tmpl, const OperatorContext& ctx, const PromptTemplates& t) {
  tmpl = util::replace_all(std::move(tmpl), "{response_format}", t.response_format);
  tmpl = util::replace_all(std::move(tmpl), "{task_description}",
                           ctx.task ? ctx.task->description : "");
  tmpl = util::replace_all(std::move(tmpl), "{draft_index}", std::to_string(ctx.draft_index));
  return tmpl;
}

}  // namespace

Prompt build_draft_prompt(const OperatorContext& ctx, const PromptTemplates& t) {
  if (ctx.target) raise(ErrorCode::PreconditionViolation, "draft context must have no target");
  if (!ctx.task) raise(ErrorCode::PreconditionViolation, "draft context needs a task");
  if (!ctx.diversity.sibling_memory && !ctx.sibling_summaries.empty())
    raise(ErrorCode::InvariantViolation,
          "sibling summaries supplied with sibling_memory disabled");

  std::string cue;
  if (ctx.diversity.adaptive_complexity) cue = cue_text(t, complexity_cue(ctx.draft_index));

  std::string clause;
  switch (ctx.diversity.instruction) {
    case DiversityInstruction::EncourageDifferent: clause = t.clause_different; break;
    case DiversityInstruction::RequestSimilar: clause = t.clause_similar; break;
    case DiversityInstruction::None: break;
  }

  Prompt p;
  p.system = t.draft_system;
  p.system = util::replace_all(std::move(p.system), "{complexity_cue}", cue);
  p.system = util::replace_all(std::move(p.system), "{diversity_clause}", clause);
  p.system = util::replace_all(std::move(p.system), "{sibling_blocks}",
                               render_sibling_blocks(ctx, t));
  p.system = fill(std::move(p.system), ctx, t);
  p.user = fill(t.draft_user, ctx, t);
  return p;
}

namespace {

Prompt build_target_prompt(const OperatorContext& ctx, const PromptTemplates& t,
                           const std::string& system_tmpl, const std::string& user_tmpl) {
  if (!ctx.task) raise(ErrorCode::PreconditionViolation, "context needs a task");
  if (!ctx.target) raise(ErrorCode::PreconditionViolation, "context needs a target node");

  std::string log_tail = ctx.target->exec.log_excerpt;
  if (log_tail.size() > kDebugLogTailChars)
    log_tail = log_tail.substr(log_tail.size() - kDebugLogTailChars);

  Prompt p;
  p.system = system_tmpl;
  p.system = util::replace_all(std::move(p.system), "{target_code}", ctx.target->code);
  p.system = util::replace_all(std::move(p.system), "{exec_log}", log_tail);
  p.system = util::replace_all(std::move(p.system), "{target_score}",
                               ctx.target->score ? util::format_double(*ctx.target->score)
                                                 : "unscored");
  p.system = fill(std::move(p.system), ctx, t);
  p.user = fill(user_tmpl, ctx, t);
  return p;
}

}  // namespace

Prompt build_debug_prompt(const OperatorContext& ctx, const PromptTemplates& t) {
  if (ctx.target && !ctx.target->exec.failed())
    raise(ErrorCode::PreconditionViolation, "debug target must have failed");
  return build_target_prompt(ctx, t, t.debug_system, t.debug_user);
}

Prompt build_improve_prompt(const OperatorContext& ctx, const PromptTemplates& t) {
  if (ctx.target && ctx.target->exec.status != core::ExecStatus::Success)
    raise(ErrorCode::PreconditionViolation, "improve target must be a Success node");
  return build_target_prompt(ctx, t, t.improve_system, t.improve_user);
}

// ---------------------------------------------------------------------------
// Completion parsing
// ---------------------------------------------------------------------------

ParsedCompletion parse_completion(const std::string& text) {
  ParsedCompletion out;

  // Fence lines are lines whose trimmed content starts with ```.
  std::vector<size_t> fence_starts;  // offsets of fence line beginnings
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    const size_t end = eol == std::string::npos ? text.size() : eol;
    const std::string line = util::trim(text.substr(pos, end - pos));
    if (line.rfind("```", 0) == 0) fence_starts.push_back(pos);
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }

  if (fence_starts.size() < 2) {
    out.error = "missing code block";
    return out;
  }
  if (fence_starts.size() > 2) {
    out.error = "multiple code blocks";
    return out;
  }

  const size_t open_eol = text.find('\n', fence_starts[0]);
  if (open_eol == std::string::npos || open_eol >= fence_starts[1]) {
    out.error = "malformed code fence";
    return out;
  }
  std::string code = text.substr(open_eol + 1, fence_starts[1] - open_eol - 1);
  if (!code.empty() && code.back() == '\n') code.pop_back();

  std::string head = text.substr(0, fence_starts[0]);
  const size_t plan_pos = head.find("PLAN:");
  std::string plan = plan_pos == std::string::npos ? head : head.substr(plan_pos + 5);

  out.ok = true;
  out.plan = util::trim(plan);
  out.code = code;
  return out;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

namespace {

core::SolutionNode node_from_completion(const Prompt& prompt, backend::Backend& be,
                                        const std::string& node_id, double created_at,
                                        double temperature, int max_context_tokens) {
  backend::CompletionRequest req;
  req.system_prompt = prompt.system;
  req.user_prompt = prompt.user;
  req.temperature = temperature;
  req.max_context_tokens = max_context_tokens;

  const backend::CompletionResult res = be.complete(req);
  const ParsedCompletion parsed = parse_completion(res.text);

  core::SolutionNode node;
  node.node_id = node_id;
  node.created_at = created_at;
  if (parsed.ok) {
    node.plan = parsed.plan;
    node.code = parsed.code;
    node.exec.status = core::ExecStatus::NotRun;
  } else {
    // Parse failures become Buggy nodes, not crashes: the search continues.
    node.exec.status = core::ExecStatus::Buggy;
    node.exec.log_excerpt = "completion parse failure: " + parsed.error;
  }
  return node;
}

}  // namespace

core::SolutionNode draft(const OperatorContext& ctx, backend::Backend& be,
                         const std::string& node_id, double created_at, double temperature,
                         const PromptTemplates& templates, int max_context_tokens) {
  if (ctx.target) raise(ErrorCode::PreconditionViolation, "draft takes no target");
  const Prompt prompt = build_draft_prompt(ctx, templates);
  core::SolutionNode node = node_from_completion(prompt, be, node_id, created_at,
                                                 temperature, max_context_tokens);
  node.op = core::OperatorKind::Draft;
  node.draft_index = ctx.draft_index;
  return node;
}

core::SolutionNode debug(const OperatorContext& ctx, backend::Backend& be,
                         const std::string& node_id, double created_at, double temperature,
                         const PromptTemplates& templates, int max_context_tokens) {
  if (!ctx.target) raise(ErrorCode::PreconditionViolation, "debug needs a target");
  if (!ctx.target->exec.failed())
    raise(ErrorCode::PreconditionViolation,
          "debug target must be Buggy/Timeout/InvalidSubmission");
  const Prompt prompt = build_debug_prompt(ctx, templates);
  core::SolutionNode node = node_from_completion(prompt, be, node_id, created_at,
                                                 temperature, max_context_tokens);
  node.op = core::OperatorKind::Debug;
  node.parent_id = ctx.target->node_id;
  return node;
}

core::SolutionNode improve(const OperatorContext& ctx, backend::Backend& be,
                           const std::string& node_id, double created_at, double temperature,
                           const PromptTemplates& templates, int max_context_tokens) {
  if (!ctx.target) raise(ErrorCode::PreconditionViolation, "improve needs a target");
  if (ctx.target->exec.status != core::ExecStatus::Success)
    raise(ErrorCode::PreconditionViolation, "improve target must be a Success node");
  const Prompt prompt = build_improve_prompt(ctx, templates);
  core::SolutionNode node = node_from_completion(prompt, be, node_id, created_at,
                                                 temperature, max_context_tokens);
  node.op = core::OperatorKind::Improve;
  node.parent_id = ctx.target->node_id;
  return node;
}

std::string summarize_node(const core::SolutionNode& node,
                           const diversity::ArchTaxonomy& taxonomy) {
  if (node.plan.empty()) return {};

  size_t sentence_end = node.plan.find_first_of(".!?");
  std::string first_sentence = sentence_end == std::string::npos
                                   ? node.plan
                                   : node.plan.substr(0, sentence_end + 1);
  std::string summary = util::trim(first_sentence);

  const auto label = taxonomy.extract(node.plan);
  if (label.family != diversity::kFamilyUnknown &&
      !util::contains(summary, label.family)) {
    summary += " [model family: " + label.family + "]";
  }
  if (summary.size() > kSummaryMaxChars) summary.resize(kSummaryMaxChars);
  return summary;
}

}  // namespace aslab::operators
