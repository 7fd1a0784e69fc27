#include "courtpipe/case_model.hpp"

#include <algorithm>
#include <cctype>

#include "courtpipe/errors.hpp"
#include "courtpipe/text.hpp"

namespace courtpipe {

std::string to_string(Instance v) {
    return v == Instance::First ? "first" : "second";
}

std::string to_string(CaseType v) {
    switch (v) {
        case CaseType::Criminal: return "criminal";
        case CaseType::Civil: return "civil";
        default: return "administrative";
    }
}

std::string to_string(PartyRole v) {
    switch (v) {
        case PartyRole::Plaintiff: return "plaintiff";
        case PartyRole::Defendant: return "defendant";
        case PartyRole::Appellant: return "appellant";
        default: return "appellee";
    }
}

Instance instance_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "first") return Instance::First;
    if (v == "second") return Instance::Second;
    throw SchemaError("instance", "unknown value '" + std::string(s) + "'");
}

CaseType case_type_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "criminal") return CaseType::Criminal;
    if (v == "civil") return CaseType::Civil;
    if (v == "administrative") return CaseType::Administrative;
    throw SchemaError("case_type", "unknown value '" + std::string(s) + "'");
}

PartyRole party_role_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "plaintiff") return PartyRole::Plaintiff;
    if (v == "defendant") return PartyRole::Defendant;
    if (v == "appellant") return PartyRole::Appellant;
    if (v == "appellee") return PartyRole::Appellee;
    throw SchemaError("parties", "unknown role '" + std::string(s) + "'");
}

bool verdict_matches_case_type(const JudgmentDecision& d, CaseType t) {
    bool criminal = std::holds_alternative<CriminalVerdict>(d.verdict);
    return criminal == (t == CaseType::Criminal);
}

// ---------------------------------------------------------------------------
// Free-text normalizers
// ---------------------------------------------------------------------------

namespace {

bool is_unit_year(const std::string& t) { return t == "year" || t == "years"; }
bool is_unit_month(const std::string& t) { return t == "month" || t == "months"; }

bool is_currency_suffix(const std::string& t) {
    return t == "yuan" || t == "rmb" || t == "cny" || t == "元";
}
bool is_currency_prefix(const std::string& t) {
    return t == "¥" || t == "￥";
}

// Maximal run of number tokens ending just before `i`.
std::size_t number_run_start(const std::vector<std::string>& toks, std::size_t i) {
    std::size_t j = i;
    while (j > 0 && text::is_number_token(toks[j - 1])) --j;
    return j;
}

}  // namespace

std::optional<int> normalize_prison_term(std::string_view input) {
    const auto toks = text::word_tokens(input);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const bool years = is_unit_year(toks[i]);
        const bool months = is_unit_month(toks[i]);
        if (!years && !months) continue;
        std::size_t j = number_run_start(toks, i);
        if (j == i) continue;  // bare unit ("in recent years")
        auto value = text::parse_number_tokens(toks, j, i);
        if (!value || *value < 0) continue;
        if (months) return static_cast<int>(*value);
        long long total = *value * 12;
        // Optional "and M months" tail.
        std::size_t k = i + 1;
        if (k < toks.size() && toks[k] == "and") ++k;
        std::size_t m = k;
        while (m < toks.size() && text::is_number_token(toks[m])) ++m;
        if (m > k && m < toks.size() && is_unit_month(toks[m])) {
            if (auto extra = text::parse_number_tokens(toks, k, m)) total += *extra;
        }
        return static_cast<int>(total);
    }
    return std::nullopt;
}

std::vector<long long> extract_money_amounts(std::string_view input) {
    const auto toks = text::word_tokens(input);
    std::vector<long long> amounts;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (is_currency_suffix(toks[i])) {
            std::size_t j = number_run_start(toks, i);
            if (j == i) continue;
            if (auto v = text::parse_number_tokens(toks, j, i); v && *v >= 0) {
                amounts.push_back(*v);
            }
        } else if (is_currency_prefix(toks[i])) {
            std::size_t k = i + 1;
            while (k < toks.size() && text::is_number_token(toks[k])) ++k;
            if (k == i + 1) continue;
            if (auto v = text::parse_number_tokens(toks, i + 1, k); v && *v >= 0) {
                amounts.push_back(*v);
            }
        }
    }
    return amounts;
}

std::optional<long long> normalize_money(std::string_view input) {
    auto amounts = extract_money_amounts(input);
    if (amounts.empty()) return std::nullopt;
    return amounts.front();
}

std::string normalize_charge(std::string_view raw) {
    std::string s = text::collapse_whitespace(text::to_lower_ascii(raw));
    const std::string punct = ".,;:!?\"'";
    while (!s.empty() && punct.find(s.back()) != std::string::npos) s.pop_back();
    while (!s.empty() && punct.find(s.front()) != std::string::npos) s.erase(0, 1);
    const std::string prefix = "the crime of ";
    if (s.rfind(prefix, 0) == 0) s.erase(0, prefix.size());
    return s;
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

json article_to_json(const LegalArticleRef& ref) {
    json j;
    j["law"] = ref.law_title;
    j["article"] = ref.article_number;
    if (ref.paragraph) j["paragraph"] = *ref.paragraph;
    return j;
}

LegalArticleRef article_from_json(const json& j) {
    if (j.is_string()) {
        auto refs = parse_article_citations(j.get<std::string>());
        if (refs.size() != 1) {
            throw SchemaError("articles", "citation '" + j.get<std::string>() +
                                              "' did not parse to one reference");
        }
        return refs.front();
    }
    if (!j.is_object() || !j.contains("law") || !j.contains("article")) {
        throw SchemaError("articles", "expected citation string or {law, article}");
    }
    LegalArticleRef ref;
    ref.law_title = normalize_law_title(j.at("law").get<std::string>());
    ref.article_number = j.at("article").get<int>();
    if (j.contains("paragraph") && !j.at("paragraph").is_null()) {
        ref.paragraph = j.at("paragraph").get<int>();
    }
    if (ref.article_number < 1 || (ref.paragraph && *ref.paragraph < 1)) {
        throw SchemaError("articles", "article/paragraph numbers must be positive");
    }
    return ref;
}

namespace {

std::vector<LegalArticleRef> articles_from_json(const json& j, const char* field) {
    if (!j.is_array()) throw SchemaError(field, "expected an array of citations");
    std::vector<LegalArticleRef> refs;
    refs.reserve(j.size());
    for (const auto& item : j) refs.push_back(article_from_json(item));
    return dedupe_articles(std::move(refs));
}

json articles_to_json(const std::vector<LegalArticleRef>& refs) {
    json arr = json::array();
    for (const auto& r : refs) arr.push_back(article_to_json(r));
    return arr;
}

std::string require_string(const json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_string()) throw SchemaError(field);
    return j.at(field).get<std::string>();
}

std::string optional_string(const json& j, const char* field) {
    if (!j.contains(field) || j.at(field).is_null()) return "";
    return j.at(field).get<std::string>();
}

CriminalVerdict criminal_verdict_from_json(const json& j) {
    CriminalVerdict v;
    v.charge = normalize_charge(optional_string(j, "charge"));
    if (j.contains("prison_term_months") && !j.at("prison_term_months").is_null()) {
        v.prison_term_months = j.at("prison_term_months").get<int>();
        if (*v.prison_term_months < 0) {
            throw SchemaError("prison_term_months", "must be non-negative");
        }
    } else if (j.contains("prison_term")) {
        v.prison_term_months = normalize_prison_term(optional_string(j, "prison_term"));
    }
    if (j.contains("fine_yuan") && !j.at("fine_yuan").is_null()) {
        v.fine_yuan = j.at("fine_yuan").get<long long>();
        if (*v.fine_yuan < 0) throw SchemaError("fine_yuan", "must be non-negative");
    } else if (j.contains("fine")) {
        v.fine_yuan = normalize_money(optional_string(j, "fine"));
    }
    return v;
}

ResultList result_list_from_json(const json& j) {
    ResultList r;
    if (j.contains("results")) {
        for (const auto& item : j.at("results")) r.results.push_back(item.get<std::string>());
    }
    if (j.contains("key_points")) {
        for (const auto& item : j.at("key_points")) {
            r.key_points.push_back(item.get<std::string>());
        }
    }
    return r;
}

json verdict_to_json(const JudgmentDecision& d) {
    json j;
    if (const auto* cv = std::get_if<CriminalVerdict>(&d.verdict)) {
        j["charge"] = cv->charge;
        if (cv->prison_term_months) j["prison_term_months"] = *cv->prison_term_months;
        if (cv->fine_yuan) j["fine_yuan"] = *cv->fine_yuan;
    } else {
        const auto& rl = std::get<ResultList>(d.verdict);
        j["results"] = rl.results;
        if (!rl.key_points.empty()) j["key_points"] = rl.key_points;
    }
    return j;
}

}  // namespace

json decision_to_json(const JudgmentDecision& d) {
    json j;
    j["analysis"] = d.analysis;
    j["articles"] = articles_to_json(d.articles);
    j["verdict"] = verdict_to_json(d);
    j["verdict"]["kind"] =
        std::holds_alternative<CriminalVerdict>(d.verdict) ? "criminal" : "results";
    return j;
}

JudgmentDecision decision_from_json(const json& j) {
    JudgmentDecision d;
    d.analysis = optional_string(j, "analysis");
    if (j.contains("articles")) d.articles = articles_from_json(j.at("articles"), "articles");
    const json& v = j.contains("verdict") ? j.at("verdict") : j;
    if (optional_string(v, "kind") == "criminal" || v.contains("charge") ||
        v.contains("prison_term_months") || v.contains("prison_term")) {
        d.verdict = criminal_verdict_from_json(v);
    } else {
        d.verdict = result_list_from_json(v);
    }
    return d;
}

namespace {

json party_to_json(const Party& p) {
    json j;
    j["role"] = to_string(p.role);
    j["name"] = p.name;
    if (!p.background.empty()) j["background"] = p.background;
    return j;
}

json prior_to_json(const PriorInstanceRecord& p) {
    json j;
    j["facts"] = p.facts;
    j["analysis"] = p.analysis;
    j["articles"] = articles_to_json(p.articles);
    j["judgment"] = p.judgment;
    return j;
}

PriorInstanceRecord prior_from_json(const json& j) {
    PriorInstanceRecord p;
    p.facts = optional_string(j, "facts");
    p.analysis = optional_string(j, "analysis");
    if (j.contains("articles")) p.articles = articles_from_json(j.at("articles"), "prior_instance");
    p.judgment = optional_string(j, "judgment");
    return p;
}

json reference_to_json(const ReferenceDecision& r) {
    json j;
    j["analysis"] = r.analysis;
    j["articles"] = articles_to_json(r.articles);
    j["judgment"] = verdict_to_json(r.judgment);
    return j;
}

ReferenceDecision reference_from_json(const json& j, CaseType case_type) {
    ReferenceDecision r;
    r.analysis = optional_string(j, "analysis");
    if (j.contains("articles")) r.articles = articles_from_json(j.at("articles"), "reference");
    r.judgment.analysis = r.analysis;
    r.judgment.articles = r.articles;
    if (j.contains("judgment")) {
        const json& v = j.at("judgment");
        if (case_type == CaseType::Criminal) {
            r.judgment.verdict = criminal_verdict_from_json(v);
        } else {
            r.judgment.verdict = result_list_from_json(v);
        }
    } else if (case_type != CaseType::Criminal) {
        r.judgment.verdict = ResultList{};
    }
    return r;
}

}  // namespace

json case_to_json(const CaseDocument& doc) {
    json j;
    j["id"] = doc.id;
    j["instance"] = to_string(doc.instance);
    j["case_type"] = to_string(doc.case_type);
    j["cause_of_action"] = doc.cause_of_action;
    json parties = json::array();
    for (const auto& p : doc.parties) parties.push_back(party_to_json(p));
    j["parties"] = parties;
    j["indictment_or_petition"] = doc.indictment_or_petition;
    json statements = json::object();
    for (const auto& [role, text] : doc.party_statements) {
        statements[to_string(role)] = text;
    }
    j["party_statements"] = statements;
    j["determined_facts"] = doc.determined_facts;
    if (doc.prior_instance) j["prior_instance"] = prior_to_json(*doc.prior_instance);
    if (doc.reference) j["reference"] = reference_to_json(*doc.reference);
    return j;
}

CaseDocument case_from_json(const json& j) {
    CaseDocument doc;
    doc.id = require_string(j, "id");
    doc.instance = instance_from_string(require_string(j, "instance"));
    doc.case_type = case_type_from_string(require_string(j, "case_type"));
    doc.cause_of_action = require_string(j, "cause_of_action");

    if (j.contains("parties")) {
        for (const auto& pj : j.at("parties")) {
            Party p;
            p.role = party_role_from_string(require_string(pj, "role"));
            p.name = optional_string(pj, "name");
            p.background = optional_string(pj, "background");
            doc.parties.push_back(std::move(p));
        }
    }

    if (j.contains("indictment_or_petition")) {
        doc.indictment_or_petition = j.at("indictment_or_petition").get<std::string>();
    } else if (j.contains("indictment")) {
        doc.indictment_or_petition = j.at("indictment").get<std::string>();
    } else if (j.contains("petition_for_appeal")) {
        doc.indictment_or_petition = j.at("petition_for_appeal").get<std::string>();
    } else {
        throw SchemaError("indictment_or_petition");
    }

    if (j.contains("party_statements")) {
        for (const auto& [key, value] : j.at("party_statements").items()) {
            doc.party_statements[party_role_from_string(key)] = value.get<std::string>();
        }
    }
    // Representatives are folded into the party they speak for.
    if (j.contains("representative_statements")) {
        for (const auto& [key, value] : j.at("representative_statements").items()) {
            auto role = party_role_from_string(key);
            std::string& slot = doc.party_statements[role];
            if (!slot.empty()) slot += "\n";
            slot += value.get<std::string>();
        }
    }

    doc.determined_facts = optional_string(j, "determined_facts");

    if (j.contains("prior_instance") && !j.at("prior_instance").is_null()) {
        doc.prior_instance = prior_from_json(j.at("prior_instance"));
    }
    if (j.contains("reference") && !j.at("reference").is_null()) {
        doc.reference = reference_from_json(j.at("reference"), doc.case_type);
    }

    validate(doc);
    return doc;
}

void validate(const CaseDocument& doc) {
    if (doc.id.empty()) throw SchemaError("id");
    if (doc.determined_facts.empty()) throw SchemaError("determined_facts");
    const bool second = doc.instance == Instance::Second;
    if (second != doc.prior_instance.has_value()) {
        throw SchemaError("prior_instance",
                          second ? "required for second instance"
                                 : "only allowed for second instance");
    }
    const auto legal = [&](PartyRole r) {
        if (second) return r == PartyRole::Appellant || r == PartyRole::Appellee;
        return r == PartyRole::Plaintiff || r == PartyRole::Defendant;
    };
    for (const auto& p : doc.parties) {
        if (!legal(p.role)) {
            throw SchemaError("parties", "role '" + to_string(p.role) +
                                             "' is not legal for a " +
                                             to_string(doc.instance) + "-instance case");
        }
    }
    for (const auto& [role, text] : doc.party_statements) {
        if (!legal(role)) {
            throw SchemaError("party_statements",
                              "role '" + to_string(role) + "' is not legal for a " +
                                  to_string(doc.instance) + "-instance case");
        }
    }
    if (doc.reference && !verdict_matches_case_type(doc.reference->judgment, doc.case_type)) {
        throw SchemaError("reference", "verdict variant does not match case_type");
    }
}

CaseDocument parse_case_file(const std::string& raw) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("case file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("case file must hold a JSON object");
    try {
        return case_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("case file field has wrong type: ") + e.what());
    }
}

std::string serialize_case(const CaseDocument& doc) {
    return case_to_json(doc).dump(2) + "\n";
}

}  // namespace courtpipe
