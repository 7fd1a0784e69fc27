#include "courtpipe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "courtpipe/errors.hpp"
#include "courtpipe/text.hpp"
#include "courtpipe/tokenize.hpp"

namespace courtpipe {

MatchCounts match_articles(const std::vector<LegalArticleRef>& generated,
                           const std::vector<LegalArticleRef>& reference) {
    const auto gen = dedupe_articles(generated);
    const auto ref = dedupe_articles(reference);
    const std::set<LegalArticleRef> ref_set(ref.begin(), ref.end());
    const std::set<LegalArticleRef> gen_set(gen.begin(), gen.end());

    MatchCounts c;
    for (const auto& g : gen) {
        if (ref_set.count(g)) {
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    for (const auto& r : ref) {
        if (!gen_set.count(r)) ++c.fn;
    }
    return c;
}

MicroScores micro_prf(const std::vector<MatchCounts>& counts) {
    long long tp = 0, fp = 0, fn = 0;
    for (const auto& c : counts) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    MicroScores s;
    s.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    s.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

MatchCounts KeypointCounters::to_match_counts() const {
    MatchCounts c;
    c.tp = accuracy_score;
    c.fp = generated_count - accuracy_score;
    c.fn = standard_key_points - match_score;
    return c;
}

// ---------------------------------------------------------------------------
// Key-point matching
// ---------------------------------------------------------------------------

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kStop = {
        "the", "a",  "an",  "of",   "to",    "and", "or", "in",
        "on",  "at", "by",  "for",  "with",  "from","is", "are",
        "be",  "shall", "will", "may", "within", "this", "that",
    };
    return kStop;
}

std::set<std::string> salient_tokens(const std::string& s) {
    std::set<std::string> out;
    for (const auto& t : tokenize(s)) {
        if (!stopwords().count(t)) out.insert(t);
    }
    return out;
}

// Fraction of the key point's salient tokens a generated result must contain.
constexpr double kTokenOverlapThreshold = 0.6;

bool keypoint_matches(const std::set<std::string>& kp_tokens,
                      const std::vector<long long>& kp_amounts,
                      const std::set<std::string>& gen_tokens,
                      const std::set<long long>& gen_amounts) {
    for (long long amount : kp_amounts) {
        if (!gen_amounts.count(amount)) return false;
    }
    if (kp_tokens.empty()) return !kp_amounts.empty();
    std::size_t hits = 0;
    for (const auto& t : kp_tokens) {
        if (gen_tokens.count(t)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(kp_tokens.size()) >=
           kTokenOverlapThreshold;
}

const std::vector<std::string>& reference_key_points(const ResultList& reference) {
    return reference.key_points.empty() ? reference.results : reference.key_points;
}

}  // namespace

KeypointCounters eval_keypoints_fallback(const ResultList& generated,
                                         const ResultList& reference) {
    const auto& key_points = reference_key_points(reference);

    KeypointCounters k;
    k.standard_key_points = static_cast<long long>(key_points.size());
    k.generated_count = static_cast<long long>(generated.results.size());

    struct GenView {
        std::set<std::string> tokens;
        std::set<long long> amounts;
    };
    std::vector<GenView> gens;
    gens.reserve(generated.results.size());
    for (const auto& g : generated.results) {
        auto amounts = extract_money_amounts(g);
        gens.push_back({salient_tokens(g), {amounts.begin(), amounts.end()}});
    }

    std::vector<bool> gen_hit(gens.size(), false);
    for (const auto& kp : key_points) {
        const auto kp_tokens = salient_tokens(kp);
        const auto kp_amounts = extract_money_amounts(kp);
        bool matched = false;
        for (std::size_t i = 0; i < gens.size(); ++i) {
            if (keypoint_matches(kp_tokens, kp_amounts, gens[i].tokens, gens[i].amounts)) {
                matched = true;
                gen_hit[i] = true;
            }
        }
        if (matched) ++k.match_score;
    }
    k.accuracy_score = static_cast<long long>(
        std::count(gen_hit.begin(), gen_hit.end(), true));
    return k;
}

namespace {

long long parse_counter(const std::string& reply, const char* label) {
    const std::regex re(std::string(label) + R"(\s*[:=]?\s*(\d+))", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(reply, m, re)) {
        throw JudgeParseError(std::string("judge reply lacks counter '") + label + "'");
    }
    return std::stoll(m[1].str());
}

std::string numbered_list(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out << "Result " << (i + 1) << ": " << items[i] << "\n";
    }
    return out.str();
}

std::string bulleted_list(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (const auto& item : items) out << "- " << item << "\n";
    return out.str();
}

}  // namespace

KeypointCounters eval_keypoints(const ResultList& generated, const ResultList& reference,
                                ChatBackend* judge, const TemplateRegistry& templates,
                                const std::string& model_id, int max_tokens) {
    if (!judge) return eval_keypoints_fallback(generated, reference);

    const auto& key_points = reference_key_points(reference);
    ChatRequest req;
    req.model_id = model_id;
    req.max_tokens = max_tokens;
    req.messages.push_back(
        {ChatRole::User,
         templates.render("keypoint_judge",
                          {{"reference_results", numbered_list(reference.results)},
                           {"key_points", bulleted_list(key_points)},
                           {"generated_results", numbered_list(generated.results)}})});
    const std::string reply = complete(*judge, req);

    KeypointCounters k;
    k.standard_key_points = parse_counter(reply, "Standard Key Points Count");
    k.match_score = parse_counter(reply, "Key Point Match Score");
    k.generated_count = parse_counter(reply, "Generated Answer Results Count");
    k.accuracy_score = parse_counter(reply, "Answer Accuracy Score");
    if (k.accuracy_score > k.generated_count || k.match_score > k.standard_key_points) {
        throw JudgeParseError("judge counters are inconsistent (A > G or M > K)");
    }
    return k;
}

CriminalScore eval_criminal(const CriminalVerdict& generated, const CriminalVerdict& reference) {
    CriminalScore s;
    s.charge_correct = normalize_charge(generated.charge) == normalize_charge(reference.charge);
    s.term_correct = generated.prison_term_months == reference.prison_term_months;
    s.fine_correct = generated.fine_yuan == reference.fine_yuan;
    return s;
}

std::vector<HumanAnnotation> load_annotations_jsonl(const std::string& content) {
    std::vector<HumanAnnotation> out;
    std::istringstream lines(content);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("annotation line " + std::to_string(lineno) + ": " + e.what());
        }
        HumanAnnotation a;
        a.case_id = j.at("case_id").get<std::string>();
        a.annotator_id = j.at("annotator_id").get<std::string>();
        for (const char* field : {"correctness", "logicality", "concision"}) {
            if (!j.contains(field)) throw SchemaError(field);
        }
        a.correctness = j.at("correctness").get<bool>();
        a.logicality = j.at("logicality").get<bool>();
        a.concision = j.at("concision").get<bool>();
        out.push_back(std::move(a));
    }
    return out;
}

PerCaseEval evaluate_case(const CaseDocument& doc, const JudgmentDecision& generated,
                          ChatBackend* judge, const TemplateRegistry& templates,
                          const std::string& judge_model_id) {
    if (!doc.reference) throw Error("case '" + doc.id + "' has no reference decision");
    PerCaseEval e;
    e.case_id = doc.id;
    e.instance = doc.instance;
    e.case_type = doc.case_type;
    e.articles = match_articles(generated.articles, doc.reference->articles);

    if (doc.case_type == CaseType::Criminal) {
        const CriminalVerdict* gen = std::get_if<CriminalVerdict>(&generated.verdict);
        const CriminalVerdict* ref =
            std::get_if<CriminalVerdict>(&doc.reference->judgment.verdict);
        static const CriminalVerdict kEmpty;
        const CriminalVerdict& g = gen ? *gen : kEmpty;
        const CriminalVerdict& r = ref ? *ref : kEmpty;
        e.criminal = eval_criminal(g, r);
        if (g.prison_term_months && r.prison_term_months) {
            e.term_delta_months = std::llabs(
                static_cast<long long>(*g.prison_term_months) - *r.prison_term_months);
        }
        if (g.fine_yuan && r.fine_yuan) {
            e.fine_delta_yuan = std::llabs(*g.fine_yuan - *r.fine_yuan);
        }
    } else {
        static const ResultList kEmptyList;
        const ResultList* gen = std::get_if<ResultList>(&generated.verdict);
        const ResultList* ref = std::get_if<ResultList>(&doc.reference->judgment.verdict);
        e.keypoints = eval_keypoints(gen ? *gen : kEmptyList, ref ? *ref : kEmptyList,
                                     judge, templates, judge_model_id);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

void accumulate(GroupMetrics& g, const PerCaseEval& e, long long& charge_hits,
                long long& term_hits, long long& fine_hits, long long& term_delta_sum,
                int& term_delta_n, long long& fine_delta_sum, int& fine_delta_n) {
    ++g.cases;
    g.article_counts.tp += e.articles.tp;
    g.article_counts.fp += e.articles.fp;
    g.article_counts.fn += e.articles.fn;
    if (e.keypoints) {
        const MatchCounts mc = e.keypoints->to_match_counts();
        g.keypoint_counts.tp += mc.tp;
        g.keypoint_counts.fp += mc.fp;
        g.keypoint_counts.fn += mc.fn;
    }
    if (e.criminal) {
        ++g.criminal_cases;
        charge_hits += e.criminal->charge_correct ? 1 : 0;
        term_hits += e.criminal->term_correct ? 1 : 0;
        fine_hits += e.criminal->fine_correct ? 1 : 0;
        if (e.term_delta_months) {
            term_delta_sum += *e.term_delta_months;
            ++term_delta_n;
        }
        if (e.fine_delta_yuan) {
            fine_delta_sum += *e.fine_delta_yuan;
            ++fine_delta_n;
        }
    }
}

GroupMetrics finalize_group(GroupMetrics g, long long charge_hits, long long term_hits,
                            long long fine_hits, long long term_delta_sum, int term_delta_n,
                            long long fine_delta_sum, int fine_delta_n) {
    g.articles = micro_prf({g.article_counts});
    g.keypoints = micro_prf({g.keypoint_counts});
    if (g.criminal_cases > 0) {
        g.charge_accuracy = static_cast<double>(charge_hits) / g.criminal_cases;
        g.term_accuracy = static_cast<double>(term_hits) / g.criminal_cases;
        g.fine_accuracy = static_cast<double>(fine_hits) / g.criminal_cases;
    }
    if (term_delta_n > 0) {
        g.mean_abs_term_delta_months = static_cast<double>(term_delta_sum) / term_delta_n;
    }
    if (fine_delta_n > 0) {
        g.mean_abs_fine_delta_yuan = static_cast<double>(fine_delta_sum) / fine_delta_n;
    }
    return g;
}

struct GroupAccumulator {
    GroupMetrics metrics;
    long long charge_hits = 0, term_hits = 0, fine_hits = 0;
    long long term_delta_sum = 0, fine_delta_sum = 0;
    int term_delta_n = 0, fine_delta_n = 0;

    void add(const PerCaseEval& e) {
        accumulate(metrics, e, charge_hits, term_hits, fine_hits, term_delta_sum,
                   term_delta_n, fine_delta_sum, fine_delta_n);
    }
    GroupMetrics finish() const {
        return finalize_group(metrics, charge_hits, term_hits, fine_hits, term_delta_sum,
                              term_delta_n, fine_delta_sum, fine_delta_n);
    }
};

}  // namespace

EvaluationReport aggregate_report(const std::vector<PerCaseEval>& per_case,
                                  const std::vector<HumanAnnotation>& annotations) {
    EvaluationReport report;
    GroupAccumulator overall;
    std::map<std::string, GroupAccumulator> by_instance;
    std::map<std::string, GroupAccumulator> by_type;

    for (const auto& e : per_case) {
        overall.add(e);
        by_instance[to_string(e.instance)].add(e);
        by_type[to_string(e.case_type)].add(e);
        if (e.keypoints && e.keypoints->mismatch_warning()) {
            ++report.keypoint_mismatch_warnings;
        }
    }
    report.overall = overall.finish();
    for (const auto& [key, acc] : by_instance) report.by_instance[key] = acc.finish();
    for (const auto& [key, acc] : by_type) report.by_case_type[key] = acc.finish();

    if (!annotations.empty()) {
        HumanMeans h;
        h.annotations = static_cast<int>(annotations.size());
        for (const auto& a : annotations) {
            h.correctness += a.correctness ? 1.0 : 0.0;
            h.logicality += a.logicality ? 1.0 : 0.0;
            h.concision += a.concision ? 1.0 : 0.0;
        }
        h.correctness /= h.annotations;
        h.logicality /= h.annotations;
        h.concision /= h.annotations;
        report.human = h;
    }
    return report;
}

namespace {

json group_to_json(const GroupMetrics& g) {
    json j;
    j["cases"] = g.cases;
    j["articles"] = {
        {"tp", g.article_counts.tp},    {"fp", g.article_counts.fp},
        {"fn", g.article_counts.fn},    {"precision", g.articles.precision},
        {"recall", g.articles.recall},  {"f1", g.articles.f1},
    };
    j["keypoints"] = {
        {"tp", g.keypoint_counts.tp},   {"fp", g.keypoint_counts.fp},
        {"fn", g.keypoint_counts.fn},   {"precision", g.keypoints.precision},
        {"recall", g.keypoints.recall}, {"f1", g.keypoints.f1},
    };
    json crim;
    crim["cases"] = g.criminal_cases;
    crim["charge_accuracy"] = g.charge_accuracy;
    crim["term_accuracy"] = g.term_accuracy;
    crim["fine_accuracy"] = g.fine_accuracy;
    if (g.mean_abs_term_delta_months) {
        crim["mean_abs_term_delta_months"] = *g.mean_abs_term_delta_months;
    }
    if (g.mean_abs_fine_delta_yuan) {
        crim["mean_abs_fine_delta_yuan"] = *g.mean_abs_fine_delta_yuan;
    }
    j["criminal"] = crim;
    return j;
}

}  // namespace

namespace {

GroupMetrics group_from_json(const json& j) {
    GroupMetrics g;
    g.cases = j.value("cases", 0);
    const json& a = j.at("articles");
    g.article_counts = {a.at("tp").get<long long>(), a.at("fp").get<long long>(),
                        a.at("fn").get<long long>()};
    g.articles = {a.at("precision").get<double>(), a.at("recall").get<double>(),
                  a.at("f1").get<double>()};
    const json& k = j.at("keypoints");
    g.keypoint_counts = {k.at("tp").get<long long>(), k.at("fp").get<long long>(),
                         k.at("fn").get<long long>()};
    g.keypoints = {k.at("precision").get<double>(), k.at("recall").get<double>(),
                   k.at("f1").get<double>()};
    const json& c = j.at("criminal");
    g.criminal_cases = c.value("cases", 0);
    g.charge_accuracy = c.value("charge_accuracy", 0.0);
    g.term_accuracy = c.value("term_accuracy", 0.0);
    g.fine_accuracy = c.value("fine_accuracy", 0.0);
    if (c.contains("mean_abs_term_delta_months")) {
        g.mean_abs_term_delta_months = c.at("mean_abs_term_delta_months").get<double>();
    }
    if (c.contains("mean_abs_fine_delta_yuan")) {
        g.mean_abs_fine_delta_yuan = c.at("mean_abs_fine_delta_yuan").get<double>();
    }
    return g;
}

}  // namespace

EvaluationReport report_from_json(const json& j) {
    EvaluationReport report;
    report.overall = group_from_json(j.at("overall"));
    if (j.contains("by_instance")) {
        for (const auto& [key, g] : j.at("by_instance").items()) {
            report.by_instance[key] = group_from_json(g);
        }
    }
    if (j.contains("by_case_type")) {
        for (const auto& [key, g] : j.at("by_case_type").items()) {
            report.by_case_type[key] = group_from_json(g);
        }
    }
    if (j.contains("human")) {
        HumanMeans h;
        h.annotations = j.at("human").value("annotations", 0);
        h.correctness = j.at("human").value("correctness", 0.0);
        h.logicality = j.at("human").value("logicality", 0.0);
        h.concision = j.at("human").value("concision", 0.0);
        report.human = h;
    }
    report.keypoint_mismatch_warnings = j.value("keypoint_mismatch_warnings", 0);
    return report;
}

json report_to_json(const EvaluationReport& report) {
    json j;
    j["overall"] = group_to_json(report.overall);
    json instances = json::object();
    for (const auto& [key, g] : report.by_instance) instances[key] = group_to_json(g);
    j["by_instance"] = instances;
    json types = json::object();
    for (const auto& [key, g] : report.by_case_type) types[key] = group_to_json(g);
    j["by_case_type"] = types;
    if (report.human) {
        j["human"] = {
            {"annotations", report.human->annotations},
            {"correctness", report.human->correctness},
            {"logicality", report.human->logicality},
            {"concision", report.human->concision},
        };
    }
    j["keypoint_mismatch_warnings"] = report.keypoint_mismatch_warnings;
    return j;
}

std::string report_table(const EvaluationReport& report) {
    std::ostringstream out;
    out << "Group            |    Legal Articles     |  Judgement Results (Civ+Adm) "
           "|      Criminal        \n";
    out << "                 |   P      R      F1    |    P      R      F1         "
           "| Charge  Term   Fine  \n";
    const auto row = [&](const std::string& name, const GroupMetrics& g) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%-16s | %6.4f %6.4f %6.4f | %6.4f %6.4f %6.4f       | "
                      "%5.3f  %5.3f  %5.3f\n",
                      name.c_str(), g.articles.precision, g.articles.recall, g.articles.f1,
                      g.keypoints.precision, g.keypoints.recall, g.keypoints.f1,
                      g.charge_accuracy, g.term_accuracy, g.fine_accuracy);
        out << buf;
    };
    row("overall", report.overall);
    for (const auto& [key, g] : report.by_instance) row("instance:" + key, g);
    for (const auto& [key, g] : report.by_case_type) row("type:" + key, g);
    if (report.human) {
        char buf[120];
        std::snprintf(buf, sizeof(buf),
                      "Case Analysis (human, n=%d): correctness %.3f  logicality %.3f  "
                      "concision %.3f\n",
                      report.human->annotations, report.human->correctness,
                      report.human->logicality, report.human->concision);
        out << buf;
    }
    if (report.overall.mean_abs_term_delta_months || report.overall.mean_abs_fine_delta_yuan) {
        out << "Diagnostics:";
        if (report.overall.mean_abs_term_delta_months) {
            out << " mean |term delta| = " << *report.overall.mean_abs_term_delta_months
                << " months;";
        }
        if (report.overall.mean_abs_fine_delta_yuan) {
            out << " mean |fine delta| = " << *report.overall.mean_abs_fine_delta_yuan
                << " yuan";
        }
        out << "\n";
    }
    if (report.keypoint_mismatch_warnings > 0) {
        out << "Warning: " << report.keypoint_mismatch_warnings
            << " case(s) with accuracy != match counters\n";
    }
    return out.str();
}

}  // namespace courtpipe
