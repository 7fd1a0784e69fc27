#include "courtpipe/adjudication.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "courtpipe/text.hpp"

namespace courtpipe {

std::string to_string(DecisionStage s) {
    return s == DecisionStage::Preliminary ? "preliminary" : "final";
}

// ---------------------------------------------------------------------------
// Section splitting
// ---------------------------------------------------------------------------

namespace {

enum class SectionKind { Analysis, Articles, Judgment };

struct LabelAlias {
    const char* label;
    SectionKind kind;
};

// Longest aliases first so "legal articles" wins over "articles".
const LabelAlias kAliases[] = {
    {"case analysis", SectionKind::Analysis},
    {"案件分析", SectionKind::Analysis},   // 案件分析
    {"本院认为", SectionKind::Analysis},   // 本院认为
    {"analysis", SectionKind::Analysis},
    {"legal articles", SectionKind::Articles},
    {"legal article", SectionKind::Articles},
    {"legal provisions", SectionKind::Articles},
    {"法律条文", SectionKind::Articles},   // 法律条文
    {"法律依据", SectionKind::Articles},   // 法律依据
    {"articles", SectionKind::Articles},
    {"judgement", SectionKind::Judgment},
    {"judgment", SectionKind::Judgment},
    {"verdict", SectionKind::Judgment},
    {"判决结果", SectionKind::Judgment},   // 判决结果
    {"判决", SectionKind::Judgment},               // 判决
};

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Strips markdown decorations a model may wrap a heading in.
std::string_view strip_heading_decor(std::string_view line) {
    std::size_t b = 0;
    while (b < line.size() &&
           (line[b] == '#' || line[b] == '*' || line[b] == '-' || line[b] == '>' ||
            std::isspace(static_cast<unsigned char>(line[b])))) {
        ++b;
    }
    return line.substr(b);
}

// If `line` opens a labelled section, returns its kind and the content after
// the separator.
std::optional<std::pair<SectionKind, std::string>> match_label(std::string_view raw) {
    std::string_view line = strip_heading_decor(raw);
    const std::string lower = text::to_lower_ascii(line);
    for (const auto& alias : kAliases) {
        const std::string label = alias.label;
        if (lower.rfind(label, 0) != 0) continue;
        std::size_t pos = label.size();
        // Optional "**" closing a bold heading, then the separator.
        while (pos < line.size() && (line[pos] == '*' || line[pos] == ' ')) ++pos;
        bool separated = false;
        if (pos < line.size() && line[pos] == ':') {
            ++pos;
            separated = true;
        } else if (line.substr(pos).rfind("：", 0) == 0) {  // fullwidth colon
            pos += 3;
            separated = true;
        }
        if (!separated && pos != line.size()) continue;  // label must own the heading
        return std::make_pair(alias.kind, trimmed(line.substr(pos)));
    }
    return std::nullopt;
}

std::vector<std::string> lines_of(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) {
            lines.emplace_back(s.substr(start));
            break;
        }
        lines.emplace_back(s.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace

DecisionSections split_decision_sections(std::string_view input, bool require_all) {
    std::optional<SectionKind> current;
    std::map<SectionKind, std::string> sections;
    bool any_label = false;

    for (const auto& line : lines_of(input)) {
        if (auto label = match_label(line)) {
            any_label = true;
            current = label->first;
            std::string& slot = sections[label->first];
            if (!slot.empty()) slot += "\n";
            slot += label->second;
            continue;
        }
        if (current) {
            std::string& slot = sections[*current];
            if (!slot.empty()) slot += "\n";
            slot += line;
        }
    }

    DecisionSections out;
    if (!any_label) {
        // A reply with no recognizable labels is taken as a bare judgment
        // block (reference fixtures often carry only result statements).
        out.judgment = trimmed(input);
        if (out.judgment.empty()) throw ParseError("judgement");
        if (require_all) throw ParseError("case_analysis");
        return out;
    }
    const auto take = [&](SectionKind kind, const char* name) {
        auto it = sections.find(kind);
        std::string value = it == sections.end() ? "" : trimmed(it->second);
        if (value.empty() && (require_all || kind == SectionKind::Judgment)) {
            throw ParseError(name);
        }
        return value;
    };
    out.analysis = take(SectionKind::Analysis, "case_analysis");
    out.articles = take(SectionKind::Articles, "legal_articles");
    out.judgment = take(SectionKind::Judgment, "judgement");
    return out;
}

// ---------------------------------------------------------------------------
// Verdict parsing / rendering
// ---------------------------------------------------------------------------

namespace {

const std::regex& charge_pattern() {
    static const std::regex kRe(
        R"((?:convicted of|found guilty of|guilty of)\s+(?:the crime of\s+)?([^;,.\n]+))",
        std::regex::icase);
    return kRe;
}

const std::regex& result_marker_pattern() {
    static const std::regex kRe(R"(result\s*(\d*)\s*:)", std::regex::icase);
    return kRe;
}

// std::regex classes are byte-based, so fullwidth colons are folded to ASCII
// before marker matching.
std::string ascii_colons(std::string s) {
    std::size_t pos;
    while ((pos = s.find("：")) != std::string::npos) s.replace(pos, 3, ":");
    return s;
}

CriminalVerdict parse_criminal_verdict(const std::string& judgment) {
    CriminalVerdict v;
    std::smatch m;
    if (std::regex_search(judgment, m, charge_pattern())) {
        v.charge = normalize_charge(m[1].str());
    }
    v.prison_term_months = normalize_prison_term(judgment);
    v.fine_yuan = normalize_money(judgment);
    return v;
}

ResultList parse_result_list(const std::string& raw_judgment) {
    ResultList out;
    const std::string judgment = ascii_colons(raw_judgment);
    std::vector<std::pair<std::size_t, std::size_t>> markers;  // (start, content_begin)
    for (auto it = std::sregex_iterator(judgment.begin(), judgment.end(),
                                        result_marker_pattern());
         it != std::sregex_iterator(); ++it) {
        markers.emplace_back(it->position(0), it->position(0) + it->length(0));
    }
    if (markers.empty()) {
        std::string whole = trimmed(judgment);
        if (!whole.empty()) out.results.push_back(std::move(whole));
        return out;
    }
    for (std::size_t i = 0; i < markers.size(); ++i) {
        const std::size_t begin = markers[i].second;
        const std::size_t end = i + 1 < markers.size() ? markers[i + 1].first : judgment.size();
        std::string item = trimmed(judgment.substr(begin, end - begin));
        while (!item.empty() && (item.back() == ';' || item.back() == '.')) {
            item.pop_back();
            item = trimmed(item);
        }
        if (!item.empty()) out.results.push_back(std::move(item));
    }
    return out;
}

JudgmentDecision assemble_decision(const DecisionSections& sections, CaseType case_type) {
    JudgmentDecision d;
    d.analysis = sections.analysis;
    d.articles = parse_article_citations(sections.articles);
    if (case_type == CaseType::Criminal) {
        d.verdict = parse_criminal_verdict(sections.judgment);
    } else {
        d.verdict = parse_result_list(sections.judgment);
    }
    return d;
}

}  // namespace

JudgmentDecision parse_decision(std::string_view input, CaseType case_type) {
    return assemble_decision(split_decision_sections(input, /*require_all=*/false),
                             case_type);
}

std::string render_decision(const JudgmentDecision& d, CaseType case_type) {
    std::ostringstream out;
    out << "Case Analysis: " << d.analysis << "\n";
    out << "Legal Articles: ";
    if (d.articles.empty()) {
        out << "none";
    } else {
        for (std::size_t i = 0; i < d.articles.size(); ++i) {
            if (i) out << "; ";
            out << to_citation_string(d.articles[i]);
        }
    }
    out << "\n";
    out << "Judgement: ";
    if (case_type == CaseType::Criminal) {
        const auto& v = std::get<CriminalVerdict>(d.verdict);
        out << "The defendant is convicted of " << v.charge;
        if (v.prison_term_months) {
            const int years = *v.prison_term_months / 12;
            const int months = *v.prison_term_months % 12;
            out << "; sentenced to ";
            if (years > 0 && months > 0) {
                out << years << " years and " << months << " months";
            } else if (years > 0) {
                out << years << " years";
            } else {
                out << months << " months";
            }
            out << " in prison";
        }
        if (v.fine_yuan) {
            out << "; fined " << *v.fine_yuan << " yuan";
        }
        out << ".";
    } else {
        const auto& rl = std::get<ResultList>(d.verdict);
        for (std::size_t i = 0; i < rl.results.size(); ++i) {
            if (i) out << "\n";
            out << "Result " << (i + 1) << ": " << rl.results[i];
        }
    }
    out << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Draft stages
// ---------------------------------------------------------------------------

namespace {

DraftDecision draft_from_sections(const DecisionSections& sections, CaseType case_type,
                                  DecisionStage stage) {
    DraftDecision d;
    d.analysis_text = sections.analysis;
    d.articles_text = sections.articles;
    d.judgment_text = sections.judgment;
    d.parsed = assemble_decision(sections, case_type);
    d.stage = stage;
    return d;
}

// Sends the request; on an unparseable reply, asks once more with the
// reformat instruction appended, then gives up.
DecisionSections complete_sections(ChatBackend& backend, ChatRequest req,
                                   const TemplateRegistry& templates) {
    std::string reply = complete(backend, req);
    try {
        return split_decision_sections(reply, /*require_all=*/true);
    } catch (const ParseError&) {
        ChatRequest retry = req;
        retry.messages.push_back({ChatRole::Assistant, reply});
        retry.messages.push_back(
            {ChatRole::User, templates.render("reformat_instruction", {})});
        std::string second = complete(backend, retry);
        return split_decision_sections(second, /*require_all=*/true);
    }
}

}  // namespace

DraftDecision preliminary_judgment(const CaseDocument& doc, const CourtTranscript* transcript,
                                   ChatBackend& backend, const TemplateRegistry& templates,
                                   const DecisionConfig& config) {
    std::map<std::string, std::string> vars = {
        {"case_type", to_string(doc.case_type)},
        {"cause_of_action", doc.cause_of_action},
        {"facts", doc.determined_facts},
        {"transcript", transcript ? render_transcript(*transcript) : ""},
        {"verdict_instructions", doc.case_type == CaseType::Criminal
                                     ? std::string("State the charge, the prison term and "
                                                   "the fine, one sentence each.")
                                     : std::string("State each outcome as \"Result N: "
                                                   "...\" on its own line.")},
    };
    ChatRequest req;
    req.model_id = config.model_id;
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    req.messages.push_back({ChatRole::System, templates.render("judge_persona", vars)});
    req.messages.push_back({ChatRole::User, templates.render("preliminary_judgment", vars)});

    auto sections = complete_sections(backend, std::move(req), templates);
    return draft_from_sections(sections, doc.case_type, DecisionStage::Preliminary);
}

DraftDecision refine_judgment(const DraftDecision& preliminary, const RetrievalBundle& bundle,
                              ChatBackend& backend, const TemplateRegistry& templates,
                              const DecisionConfig& config, CaseType case_type) {
    if (preliminary.stage != DecisionStage::Preliminary) {
        throw PreconditionError("refine_judgment requires a preliminary draft");
    }

    DecisionSections prelim_sections{preliminary.analysis_text, preliminary.articles_text,
                                     preliminary.judgment_text};
    if (bundle.empty()) {
        // Nothing retrieved (all evidence channels ablated or unavailable):
        // the final decision is the preliminary content re-parsed.
        DraftDecision d = draft_from_sections(prelim_sections, case_type, DecisionStage::Final);
        d.evidence = bundle;
        return d;
    }

    std::string precedent_block;
    if (bundle.precedent) {
        const auto& p = *bundle.precedent;
        std::ostringstream block;
        block << "Title: " << p.title << "\n";
        if (!p.facts.empty()) block << "Facts: " << p.facts << "\n";
        if (!p.analysis.empty()) block << "Analysis: " << p.analysis << "\n";
        if (!p.articles_text.empty()) block << "Articles: " << p.articles_text << "\n";
        if (!p.judgment_text.empty()) block << "Judgement: " << p.judgment_text << "\n";
        precedent_block = block.str();
    }
    std::string related;
    for (std::size_t i = 0; i < bundle.related_articles.size(); ++i) {
        if (i) related += "\n";
        related += "- " + to_citation_string(bundle.related_articles[i]);
    }
    std::string web_block;
    if (!bundle.web.items.empty() || !bundle.web.summary.empty()) {
        std::ostringstream block;
        for (const auto& item : bundle.web.items) {
            block << "- " << item.title << ": " << item.snippet << "\n";
        }
        if (!bundle.web.summary.empty()) block << "Summary: " << bundle.web.summary << "\n";
        web_block = block.str();
    }

    std::map<std::string, std::string> vars = {
        {"case_type", to_string(case_type)},
        {"preliminary", render_decision(preliminary.parsed, case_type)},
        {"precedent", precedent_block},
        {"related_articles", related},
        {"web_digest", web_block},
        {"verdict_instructions", case_type == CaseType::Criminal
                                     ? std::string("State the charge, the prison term and "
                                                   "the fine, one sentence each.")
                                     : std::string("State each outcome as \"Result N: "
                                                   "...\" on its own line.")},
    };
    ChatRequest req;
    req.model_id = config.model_id;
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    req.messages.push_back({ChatRole::System, templates.render("judge_persona", vars)});
    req.messages.push_back({ChatRole::User, templates.render("refine_judgment", vars)});

    auto sections = complete_sections(backend, std::move(req), templates);
    DraftDecision d = draft_from_sections(sections, case_type, DecisionStage::Final);
    d.evidence = bundle;
    return d;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json bundle_to_json(const RetrievalBundle& b) {
    json j;
    if (b.predicted_case_type) j["predicted_case_type"] = to_string(*b.predicted_case_type);
    if (b.precedent) {
        json p;
        p["doc_id"] = b.precedent->doc_id;
        p["title"] = b.precedent->title;
        p["facts"] = b.precedent->facts;
        p["analysis"] = b.precedent->analysis;
        p["articles"] = b.precedent->articles_text;
        p["judgment"] = b.precedent->judgment_text;
        j["precedent"] = p;
    } else {
        j["precedent"] = nullptr;
    }
    json related = json::array();
    for (const auto& r : b.related_articles) related.push_back(article_to_json(r));
    j["related_articles"] = related;
    j["web"] = search_digest_to_json(b.web);
    return j;
}

RetrievalBundle bundle_from_json(const json& j) {
    RetrievalBundle b;
    if (j.contains("predicted_case_type") && !j.at("predicted_case_type").is_null()) {
        b.predicted_case_type =
            case_type_from_string(j.at("predicted_case_type").get<std::string>());
    }
    if (j.contains("precedent") && !j.at("precedent").is_null()) {
        const json& p = j.at("precedent");
        PrecedentEvidence ev;
        ev.doc_id = p.value("doc_id", "");
        ev.title = p.value("title", "");
        ev.facts = p.value("facts", "");
        ev.analysis = p.value("analysis", "");
        ev.articles_text = p.value("articles", "");
        ev.judgment_text = p.value("judgment", "");
        b.precedent = std::move(ev);
    }
    if (j.contains("related_articles")) {
        for (const auto& r : j.at("related_articles")) {
            b.related_articles.push_back(article_from_json(r));
        }
    }
    if (j.contains("web")) b.web = search_digest_from_json(j.at("web"));
    return b;
}

json draft_to_json(const DraftDecision& d) {
    json j;
    j["stage"] = to_string(d.stage);
    j["analysis"] = d.analysis_text;
    j["articles_text"] = d.articles_text;
    j["judgment_text"] = d.judgment_text;
    j["parsed"] = decision_to_json(d.parsed);
    if (d.stage == DecisionStage::Final) j["evidence"] = bundle_to_json(d.evidence);
    return j;
}

DraftDecision draft_from_json(const json& j, CaseType case_type) {
    DraftDecision d;
    d.stage = j.at("stage").get<std::string>() == "final" ? DecisionStage::Final
                                                          : DecisionStage::Preliminary;
    d.analysis_text = j.value("analysis", "");
    d.articles_text = j.value("articles_text", "");
    d.judgment_text = j.value("judgment_text", "");
    d.parsed = decision_from_json(j.at("parsed"));
    if (!verdict_matches_case_type(d.parsed, case_type)) {
        throw SchemaError("parsed", "decision verdict does not match case type");
    }
    if (j.contains("evidence")) d.evidence = bundle_from_json(j.at("evidence"));
    return d;
}

}  // namespace courtpipe
