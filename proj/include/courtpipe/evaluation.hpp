#pragma once

#include <optional>
#include <string>
#include <vector>

#include "courtpipe/case_model.hpp"
#include "courtpipe/llm_backend.hpp"
#include "courtpipe/prompts.hpp"

namespace courtpipe {

struct MatchCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    bool operator==(const MatchCounts&) const = default;
};

/// Strict matching of citation lists under canonical equality. Both sides are
/// deduplicated defensively; order never matters.
MatchCounts match_articles(const std::vector<LegalArticleRef>& generated,
                           const std::vector<LegalArticleRef>& reference);

struct MicroScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Pools tp/fp/fn across cases, then P = tp/(tp+fp), R = tp/(tp+fn),
/// F1 = 2PR/(P+R); every 0/0 is defined as 0.
MicroScores micro_prf(const std::vector<MatchCounts>& counts);

/// The four counters of the key-point protocol: K standard key points,
/// M of them matched, G generated results, A of them accurate.
struct KeypointCounters {
    long long standard_key_points = 0;  // K
    long long match_score = 0;          // M
    long long generated_count = 0;      // G
    long long accuracy_score = 0;       // A

    /// tp = A, fp = G - A, fn = K - M. Single-case precision A/G always falls
    /// out; recall M/K falls out exactly when A == M.
    MatchCounts to_match_counts() const;
    bool mismatch_warning() const { return accuracy_score != match_score; }

    bool operator==(const KeypointCounters&) const = default;
};

/// Deterministic matcher: a generated result matches a key point when every
/// monetary amount of the key point occurs in the result and the key point's
/// salient tokens are mostly contained in it. M counts matched key points,
/// A counts generated results matching at least one key point.
KeypointCounters eval_keypoints_fallback(const ResultList& generated,
                                         const ResultList& reference);

/// Judge-backed key-point scoring; `judge == nullptr` selects the fallback
/// matcher. The judge prompt carries a worked demonstration and demands the
/// counters on one machine-readable line; a reply without them raises
/// JudgeParseError, as do impossible counters (A > G or M > K).
KeypointCounters eval_keypoints(const ResultList& generated, const ResultList& reference,
                                ChatBackend* judge, const TemplateRegistry& templates,
                                const std::string& model_id = "", int max_tokens = 512);

struct CriminalScore {
    bool charge_correct = false;
    bool term_correct = false;
    bool fine_correct = false;
};

/// Element-wise accuracy: exact normalized charge, exact months, exact yuan.
/// Absent-vs-absent counts correct; absent-vs-present never does.
CriminalScore eval_criminal(const CriminalVerdict& generated, const CriminalVerdict& reference);

struct HumanAnnotation {
    std::string case_id;
    std::string annotator_id;
    bool correctness = false;
    bool logicality = false;
    bool concision = false;
};

std::vector<HumanAnnotation> load_annotations_jsonl(const std::string& content);

struct PerCaseEval {
    std::string case_id;
    Instance instance = Instance::First;
    CaseType case_type = CaseType::Criminal;
    MatchCounts articles;
    std::optional<KeypointCounters> keypoints;  // civil/administrative
    std::optional<CriminalScore> criminal;      // criminal
    std::optional<long long> term_delta_months; // |generated - reference|
    std::optional<long long> fine_delta_yuan;
};

/// Scores one generated decision against the case's reference block.
PerCaseEval evaluate_case(const CaseDocument& doc, const JudgmentDecision& generated,
                          ChatBackend* judge, const TemplateRegistry& templates,
                          const std::string& judge_model_id = "");

struct GroupMetrics {
    int cases = 0;
    MatchCounts article_counts;
    MicroScores articles;
    MatchCounts keypoint_counts;
    MicroScores keypoints;
    int criminal_cases = 0;
    double charge_accuracy = 0.0;
    double term_accuracy = 0.0;
    double fine_accuracy = 0.0;
    std::optional<double> mean_abs_term_delta_months;
    std::optional<double> mean_abs_fine_delta_yuan;
};

struct HumanMeans {
    int annotations = 0;
    double correctness = 0.0;
    double logicality = 0.0;
    double concision = 0.0;
};

struct EvaluationReport {
    GroupMetrics overall;
    std::map<std::string, GroupMetrics> by_instance;   // "first", "second"
    std::map<std::string, GroupMetrics> by_case_type;  // "criminal", ...
    std::optional<HumanMeans> human;
    int keypoint_mismatch_warnings = 0;  // cases where A != M
};

EvaluationReport aggregate_report(const std::vector<PerCaseEval>& per_case,
                                  const std::vector<HumanAnnotation>& annotations = {});

json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const json& j);

/// Aligned text table with the article / judgement-results / case-analysis
/// column groups.
std::string report_table(const EvaluationReport& report);

}  // namespace courtpipe
