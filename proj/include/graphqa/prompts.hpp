#pragma once

#include <string>
#include <string_view>

#include "graphqa/llm_client.hpp"
#include "graphqa/types.hpp"

namespace graphqa {

// Prompt templates are versioned constants: output files record the version
// so regenerated datasets and judge runs stay reproducible.

inline constexpr std::string_view kTriplePromptVersion = "triple_prompt_v1";
inline constexpr std::string_view kJudgePromptVersion = "judge_prompt_v1";

// Default system prompt for answering runs; overridable everywhere.
inline constexpr std::string_view kDefaultSystemPrompt =
    "あなたは河川・砂防分野の技術基準に精通した専門家です。"
    "根拠となる章・節や技術概念を挙げながら、正確で実務的な回答を日本語で行ってください。";

// Deterministic QA-generation prompt for one graph triple: names both
// entities, states the relation's role, and asks for exactly three QA pairs
// as a JSON array of {"question","answer"} objects.
PromptParts triple_prompt(const Node& src, RelationKind rel, const Node& dst);

// Judge prompt embedding the four-level rubric; requests a single integer.
PromptParts judge_prompt(const std::string& question, const std::string& answer);

}  // namespace graphqa
