#include "flipeval/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flipeval/cache.hpp"

namespace flipeval {

namespace {

// --- Instruction reconstruction -------------------------------------------

const char* kFlipSystemV1 = R"(### Task Description

Please act as an instruction reconstructor. You will receive a model-generated response. Read it carefully and infer the instruction or prompt that produced it.

Notes:

- Reconstruct a single instruction that would most plausibly generate the given response.

- Specify the user's intent, required output format, and any constraints.

- Be concise and concrete.

- Do not add information or assumptions beyond what appears in the response.

- Do not overfit to the specific phrasing or examples used in this response.

- Begin with a brief explanation of your reasoning.

- Please respond in the following JSON format: {"REASONING": "<explanation>", "INFERRED INSTRUCTION": "<instruction>"})";

const char* kFlipSystemV2 = R"(### Task Description

Act as an instruction reverse-engineer. You will be given a response generated by a model. Carefully analyze the response and infer the most likely instruction or prompt that led to it.

Notes:

- Reconstruct a single, plausible instruction.

- Clearly capture the user's intent, expected output format, and constraints.

- Keep the instruction concise and specific.

- Do not introduce assumptions or details not supported by the response.

- Start with a short explanation of how you derived the instruction.

- Please respond in the following JSON format: {"REASONING": "<explanation>", "INFERRED INSTRUCTION": "<instruction>"})";

const char* kFlipSystemV3 = R"(### Task Description

Assume the role of an instruction reverse engineer. You will receive a model-generated response and must analyze it to deduce the most likely prompt that produced it.

Notes:

- Infer one coherent and plausible instruction.

- Accurately reflect the user's intent, required output structure, and any constraints.

- Be concise and precise.

- Avoid adding assumptions or information not evidenced by the response.

- Do not tailor the instruction too closely to the exact examples in the response.

- Begin with a brief explanation describing how the instruction was inferred.

- Please respond in the following JSON format: {"REASONING": "<explanation>", "INFERRED INSTRUCTION": "<instruction>"})";

const char* kFlipUser = R"([Response]

{response}

[Your Inferred Instruction]

Respond in JSON format. {"REASONING": "<explanation>", "INFERRED INSTRUCTION": "<instruction>"})";

// --- Pointwise rating -------------------------------------------------------

const char* kPointwiseSystemV1 = R"(### Task Description

Please act as an impartial judge and evaluate the quality of the answer provided by an AI assistant to the user query displayed below. Judge whether the provided answer is good.

Notes:

- Your evaluation should consider factors such as the helpfulness, relevance, accuracy, depth, creativity, and appropriate level of detail of the response.

- Begin your evaluation by providing a short explanation.

- Be as objective as possible. After providing your short explanation, please output a score on a scale of 1 to 10.

- Please respond in the following JSON format: {"REASONING": "[...]", "SCORE": "<your-score>"})";

const char* kPointwiseSystemV2 = R"(### Task Description

Please act as an impartial evaluator and assess the quality of the AI assistant's response to the user query shown below. Determine whether the response is effective.

Notes:

- Your evaluation should take into account factors such as helpfulness, relevance, accuracy, depth, creativity, and whether the level of detail is appropriate.

- Start your evaluation with a brief explanation.

- Remain as objective as possible. After the explanation, assign a score on a scale from 1 to 10.

- Please respond in the following JSON format: {"REASONING": "[...]", "SCORE": "<your-score>"})";

const char* kPointwiseSystemV3 = R"(### Task Description

Please serve as an unbiased reviewer and evaluate the quality of the AI assistant's answer to the user query provided below. Decide whether the response meets an acceptable standard.

Notes:

- Consider criteria such as usefulness, relevance, correctness, thoroughness, creativity, and the appropriateness of the level of detail.

- Begin with a brief justification of your assessment.

- Maintain objectivity throughout the evaluation. After the justification, assign a numerical score from 1 to 10.

- Please respond in the following JSON format: {"REASONING": "[...]", "SCORE": "<your-score>"})";

const char* kPointwiseUser = R"([Query]

{prompt}

[AI Answer]

{response}

[Your judgement]

Respond in JSON format. {"REASONING": "[...]", "SCORE": "<your-score>"})";

// --- Listwise ranking --------------------------------------------------------

const char* kListwiseSystemV1 = R"(### Task Description

Please act as an impartial judge and evaluate the quality of the answers provided by AI assistants to the user query displayed below.

Notes:

- Your evaluation should consider factors such as the helpfulness, relevance, accuracy, depth, creativity, and appropriate level of detail of the response.

- Begin your evaluation by briefly explaining your reasoning for selecting the best response.

- Be as objective as possible. After providing your short explanation, output the index (starting from 0) of the best response.

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BEST_RESPONSE_INDEX": <index-of-best-response>
})";

const char* kListwiseSystemV2 = R"(### Task Description

You are asked to serve as a neutral evaluator and judge the quality of multiple AI-generated responses to the user prompt provided below.

Notes:

- Base your judgment on criteria such as usefulness, relevance to the question, factual correctness, thoroughness, originality, and suitability of detail.

- Begin with a concise justification explaining why one response stands out as superior.

- Maintain objectivity throughout the assessment. After your justification, indicate which response is the best by providing its zero-based index.

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BEST_RESPONSE_INDEX": <index-of-best-response>
})";

const char* kListwiseSystemV3 = R"(### Task Description

Assume the role of an independent reviewer responsible for comparing several AI assistant replies to the same user question.

Instructions:

- Evaluate each reply using criteria such as practical value, alignment with the prompt, correctness, level of insight, originality, and completeness.

- Open with a short rationale explaining why one reply outperforms the others.

- Keep your judgment fair and unbiased. After the rationale, specify the winning reply by providing its position number, starting from 0.

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BEST_RESPONSE_INDEX": <index-of-best-response>
})";

const char* kListwiseUser = R"([Query]

{prompt}

[AI Answers]

{response_list}

[Your judgement]

Respond in JSON format. {"REASONING": "[...your explanation of why the chosen response is best...]", "BEST_RESPONSE_INDEX": <index-of-best-response>})";

// --- Pairwise ranking --------------------------------------------------------

const char* kPairwiseSystemV1 = R"(### Task Description

Please act as an impartial judge and evaluate the quality of the answers provided by AI assistants to the user query displayed below.

Notes:

- Your evaluation should consider factors such as the helpfulness, relevance, accuracy, depth, creativity, and appropriate level of detail of the response.

- Begin your evaluation by briefly explaining your reasoning for selecting the best response.

- Be as objective as possible. After providing your short explanation, output either "A" or "B" depending on which response is better.

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BETTER_RESPONSE": "A" or "B"
})";

const char* kPairwiseSystemV2 = R"(### Task Description

Assume the role of an unbiased reviewer and determine which of the two AI-generated answers best addresses the user's question.

Criteria to consider:

- Usefulness and relevance to the question

- Factual accuracy

- Completeness and depth of explanation

- Originality or insight where appropriate

- Suitability of the response length and detail

Process:

- Begin with a concise justification explaining why one response outperforms the other.

- Remain neutral and evidence-based in your judgment.

- Conclude by selecting either "A" or "B" as the superior answer.

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BETTER_RESPONSE": "A" or "B"
})";

const char* kPairwiseSystemV3 = R"(### Task Description

You are asked to objectively compare two AI assistant replies to a given user prompt and decide which one is superior.

Assessment considerations:

- How well each response addresses the user's intent

- Accuracy and reliability of the information

- Clarity, structure, and depth of the explanation

- Added value, insight, or creativity when relevant

- Whether the amount of detail is appropriate

Instructions:

- First, provide a short rationale explaining why the better response stands out.

- Keep the evaluation fair, neutral, and concise.

- Then clearly indicate your choice by selecting "A" or "B".

- Please respond in the following JSON format:
{
  "REASONING": "[...your explanation of why the chosen response is best...]",
  "BETTER_RESPONSE": "A" or "B"
})";

const char* kPairwiseUser = R"([Query]

{prompt}

[AI Response A]

{response1}

[AI Response B]

{response2}

[Your judgement]

Respond in JSON format. {"REASONING": "[...your explanation of why the chosen response is best...]", "BETTER_RESPONSE":"A" or "B"})";

// --- Instruction-to-instruction similarity ----------------------------------

const char* kSimilaritySystem = R"(### Task Description

You will receive two instructions. Rate how similar they are in intent, requested content, required output format, and constraints.

Notes:

- Output a similarity score between 0 and 1, where 1 means the two instructions request the same thing and 0 means they are unrelated.

- Begin with a brief explanation of your reasoning.

- Please respond in the following JSON format: {"REASONING": "<explanation>", "SIMILARITY": <score>})";

const char* kSimilarityUser = R"([Instruction A]

{instruction_a}

[Instruction B]

{instruction_b}

[Your Similarity Score]

Respond in JSON format. {"REASONING": "<explanation>", "SIMILARITY": <score>})";

std::string kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::flip_infer: return "flip_infer";
        case PromptKind::pointwise: return "pointwise";
        case PromptKind::listwise: return "listwise";
        case PromptKind::pairwise: return "pairwise";
        case PromptKind::lm_similarity: return "lm_similarity";
    }
    return "?";
}

}  // namespace

PromptVariant prompt_variant_from_string(const std::string& name) {
    if (name == "v1") return PromptVariant::v1;
    if (name == "v2") return PromptVariant::v2;
    if (name == "v3") return PromptVariant::v3;
    throw std::invalid_argument("unknown prompt variant: " + name);
}

std::string to_string(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::v1: return "v1";
        case PromptVariant::v2: return "v2";
        case PromptVariant::v3: return "v3";
    }
    return "?";
}

PromptLibrary::PromptLibrary() {
    auto put = [&](PromptKind kind, PromptVariant variant, const char* system,
                   const char* user) {
        templates_[{kind, variant}] = PromptTemplate{system, user};
    };
    put(PromptKind::flip_infer, PromptVariant::v1, kFlipSystemV1, kFlipUser);
    put(PromptKind::flip_infer, PromptVariant::v2, kFlipSystemV2, kFlipUser);
    put(PromptKind::flip_infer, PromptVariant::v3, kFlipSystemV3, kFlipUser);
    put(PromptKind::pointwise, PromptVariant::v1, kPointwiseSystemV1, kPointwiseUser);
    put(PromptKind::pointwise, PromptVariant::v2, kPointwiseSystemV2, kPointwiseUser);
    put(PromptKind::pointwise, PromptVariant::v3, kPointwiseSystemV3, kPointwiseUser);
    put(PromptKind::listwise, PromptVariant::v1, kListwiseSystemV1, kListwiseUser);
    put(PromptKind::listwise, PromptVariant::v2, kListwiseSystemV2, kListwiseUser);
    put(PromptKind::listwise, PromptVariant::v3, kListwiseSystemV3, kListwiseUser);
    put(PromptKind::pairwise, PromptVariant::v1, kPairwiseSystemV1, kPairwiseUser);
    put(PromptKind::pairwise, PromptVariant::v2, kPairwiseSystemV2, kPairwiseUser);
    put(PromptKind::pairwise, PromptVariant::v3, kPairwiseSystemV3, kPairwiseUser);
    for (auto variant : {PromptVariant::v1, PromptVariant::v2, PromptVariant::v3}) {
        put(PromptKind::lm_similarity, variant, kSimilaritySystem, kSimilarityUser);
    }
}

void PromptLibrary::load_overrides(const std::filesystem::path& dir) {
    auto read_file = [](const std::filesystem::path& path)
        -> std::optional<std::string> {
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    for (auto& [key, tmpl] : templates_) {
        auto base = kind_name(key.first) + "." + to_string(key.second);
        if (auto text = read_file(dir / (base + ".system.txt"))) {
            tmpl.system = *text;
        }
        if (auto text = read_file(dir / (base + ".user.txt"))) {
            tmpl.user = *text;
        }
    }
}

const PromptTemplate& PromptLibrary::get(PromptKind kind,
                                         PromptVariant variant) const {
    return templates_.at({kind, variant});
}

std::string PromptLibrary::content_hash() const {
    std::string all;
    for (const auto& [key, tmpl] : templates_) {
        all += kind_name(key.first);
        all += '/';
        all += to_string(key.second);
        all += '\x1f';
        all += tmpl.system;
        all += '\x1f';
        all += tmpl.user;
        all += '\x1e';
    }
    return sha256_hex(all);
}

std::string render_template(std::string text,
                            const std::map<std::string, std::string>& vars) {
    for (const auto& [name, value] : vars) {
        const std::string needle = "{" + name + "}";
        size_t pos = 0;
        while ((pos = text.find(needle, pos)) != std::string::npos) {
            text.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return text;
}

}  // namespace flipeval
