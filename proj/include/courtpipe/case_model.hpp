#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "courtpipe/articles.hpp"
#include "courtpipe/json_util.hpp"

namespace courtpipe {

enum class Instance { First, Second };
enum class CaseType { Criminal, Civil, Administrative };
enum class PartyRole { Plaintiff, Defendant, Appellant, Appellee };

std::string to_string(Instance v);
std::string to_string(CaseType v);
std::string to_string(PartyRole v);
Instance instance_from_string(std::string_view s);
CaseType case_type_from_string(std::string_view s);
PartyRole party_role_from_string(std::string_view s);

struct Party {
    PartyRole role;
    std::string name;
    std::string background;
};

/// Criminal sentence triple. Absent term/fine means the verdict text carried
/// no such element.
struct CriminalVerdict {
    std::string charge;  // normalized, see normalize_charge
    std::optional<int> prison_term_months;
    std::optional<long long> fine_yuan;

    bool operator==(const CriminalVerdict&) const = default;
};

/// Civil/administrative outcome: ordered result statements. References may
/// additionally carry annotated key points (the match units for scoring).
struct ResultList {
    std::vector<std::string> results;
    std::vector<std::string> key_points;

    bool operator==(const ResultList&) const = default;
};

struct JudgmentDecision {
    std::string analysis;
    std::vector<LegalArticleRef> articles;  // deduplicated, canonical
    std::variant<CriminalVerdict, ResultList> verdict;

    bool operator==(const JudgmentDecision&) const = default;
};

/// True when the verdict variant is the right one for the case type.
bool verdict_matches_case_type(const JudgmentDecision& d, CaseType t);

/// First-instance record embedded in a second-instance case.
struct PriorInstanceRecord {
    std::string facts;
    std::string analysis;
    std::vector<LegalArticleRef> articles;
    std::string judgment;
};

/// Ground-truth decision used by evaluation.
struct ReferenceDecision {
    std::string analysis;
    std::vector<LegalArticleRef> articles;
    JudgmentDecision judgment;
};

struct CaseDocument {
    std::string id;
    Instance instance = Instance::First;
    CaseType case_type = CaseType::Criminal;
    std::string cause_of_action;
    std::vector<Party> parties;
    std::string indictment_or_petition;
    std::map<PartyRole, std::string> party_statements;
    std::string determined_facts;
    std::optional<PriorInstanceRecord> prior_instance;
    std::optional<ReferenceDecision> reference;
};

/// Throws SchemaError naming the offending field when an invariant fails:
/// non-empty determined_facts, prior_instance iff second instance, party
/// roles legal for the instance.
void validate(const CaseDocument& doc);

/// Parses one UTF-8 JSON case file. Throws FormatError for unparseable input
/// and SchemaError for missing/invalid fields. Article lists accept either
/// citation strings or {law, article, paragraph} objects; verdict term/fine
/// accept either normalized integers or free-text phrases.
CaseDocument parse_case_file(const std::string& raw);

/// Canonical serialization; parse_case_file(serialize_case(d)) == d and the
/// form is a fixed point of parse-then-serialize.
std::string serialize_case(const CaseDocument& doc);

json case_to_json(const CaseDocument& doc);
CaseDocument case_from_json(const json& j);

json decision_to_json(const JudgmentDecision& d);
JudgmentDecision decision_from_json(const json& j);
json article_to_json(const LegalArticleRef& ref);
LegalArticleRef article_from_json(const json& j);

/// First prison-term phrase in `text` as total months (years*12 + months).
/// Recognizes digit and spelled-out numbers, year-only, month-only and
/// combined phrasings. nullopt when no term phrase occurs.
std::optional<int> normalize_prison_term(std::string_view text);

/// First monetary amount in `text`, in integer yuan. Handles digit groups
/// with thousands separators and spelled-out numbers next to a currency
/// marker (yuan / RMB / CNY and the CJK equivalents). nullopt when absent.
std::optional<long long> normalize_money(std::string_view text);

/// Every currency-marked amount in order of appearance.
std::vector<long long> extract_money_amounts(std::string_view text);

/// Lowercases, collapses whitespace, strips surrounding punctuation and a
/// leading "the crime of".
std::string normalize_charge(std::string_view raw);

}  // namespace courtpipe
