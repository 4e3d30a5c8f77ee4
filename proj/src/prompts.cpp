#include "graphqa/prompts.hpp"

namespace graphqa {

PromptParts triple_prompt(const Node& src, RelationKind rel, const Node& dst) {
    PromptParts parts;
    parts.system =
        "あなたは技術基準の知識グラフから学習用のQAペアを作成するアシスタントです。";

    std::string user;
    user += "次の知識グラフの関係に基づいて、日本語の質問と回答のペアをちょうど 3 件作成してください。\n\n";
    user += "関係: ";
    user += src.name;
    user += " -[";
    user += to_string(rel);
    user += "]-> ";
    user += dst.name;
    user += "\n関係の意味: ";
    user += relation_constraint(rel).role;
    user += "\n";
    if (!src.description.empty()) {
        user += src.name;
        user += ": ";
        user += src.description;
        user += "\n";
    }
    if (!dst.description.empty()) {
        user += dst.name;
        user += ": ";
        user += dst.description;
        user += "\n";
    }
    user +=
        "\n出力は {\"question\", \"answer\"} オブジェクトからなる JSON 配列のみとし、"
        "配列の前後に説明文を付けないでください。";
    parts.user = std::move(user);
    return parts;
}

PromptParts judge_prompt(const std::string& question, const std::string& answer) {
    PromptParts parts;
    parts.system =
        "あなたは技術基準に関する回答を採点する独立した審査員です。"
        "以下の基準で 0〜3 の整数 1 つだけを返してください。\n"
        "3: 技術的に正確かつ具体的で、基準名・章番号・技術概念を正しく挙げている\n"
        "2: おおむね正しいが、根拠や具体性に欠ける\n"
        "1: 部分的に正しいが、重要な誤りや欠落がある\n"
        "0: 回答がない、または技術的に誤っている";

    std::string user;
    user += "質問:\n";
    user += question;
    user += "\n\n回答:\n";
    user += answer;
    user += "\n\nスコア (0-3 の整数 1 つのみ):";
    parts.user = std::move(user);
    return parts;
}

}  // namespace graphqa
