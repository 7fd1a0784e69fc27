#pragma once

#include <optional>
#include <string>
#include <vector>

#include "courtpipe/case_model.hpp"
#include "courtpipe/courtroom.hpp"
#include "courtpipe/retrieval.hpp"

namespace courtpipe {

/// The optimal precedent's sections, copied out of the knowledge base so the
/// refinement prompt and the persisted bundle are self-contained.
struct PrecedentEvidence {
    std::string doc_id;
    std::string title;
    std::string facts;
    std::string analysis;
    std::string articles_text;
    std::string judgment_text;
};

/// Everything the judge assistant gathered for refinement. All three channels
/// are optional; ablation toggles simply leave them empty.
struct RetrievalBundle {
    std::optional<PrecedentEvidence> precedent;
    std::vector<LegalArticleRef> related_articles;
    SearchDigest web;
    std::optional<CaseType> predicted_case_type;

    bool empty() const {
        return !precedent && related_articles.empty() && web.items.empty() &&
               web.summary.empty();
    }
};

json bundle_to_json(const RetrievalBundle& b);
RetrievalBundle bundle_from_json(const json& j);

enum class DecisionStage { Preliminary, Final };

std::string to_string(DecisionStage s);

struct DraftDecision {
    std::string analysis_text;
    std::string articles_text;
    std::string judgment_text;
    JudgmentDecision parsed;
    DecisionStage stage = DecisionStage::Preliminary;
    RetrievalBundle evidence;  // empty while stage == Preliminary
};

json draft_to_json(const DraftDecision& d);
DraftDecision draft_from_json(const json& j, CaseType case_type);

struct DecisionConfig {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 1024;
};

/// Labelled sections of a decision reply.
struct DecisionSections {
    std::string analysis;
    std::string articles;
    std::string judgment;
};

/// Splits "Case Analysis / Legal Articles / Judgement" labelled text
/// (bilingual label aliases accepted). With `require_all`, any absent section
/// raises ParseError naming it; otherwise a reply with no labels at all is
/// treated as a bare judgment block.
DecisionSections split_decision_sections(std::string_view text, bool require_all);

/// Free text -> structured decision. Articles come from citation parsing;
/// criminal judgments yield the charge/term/fine triple, the rest an ordered
/// result list.
JudgmentDecision parse_decision(std::string_view text, CaseType case_type);

/// Canonical three-section rendering; parse_decision inverts it.
std::string render_decision(const JudgmentDecision& d, CaseType case_type);

/// First stage of refinement: facts plus the rendered transcript (when court
/// simulation ran) and nothing else. One reformat retry on an unparseable
/// reply, then ParseError.
DraftDecision preliminary_judgment(const CaseDocument& doc,
                                   const CourtTranscript* transcript, ChatBackend& backend,
                                   const TemplateRegistry& templates,
                                   const DecisionConfig& config = {});

/// Second stage: the preliminary decision plus the retrieved evidence. A
/// completely empty bundle short-circuits to a re-parse of the preliminary
/// content (no backend call), so ablated runs always complete.
DraftDecision refine_judgment(const DraftDecision& preliminary, const RetrievalBundle& bundle,
                              ChatBackend& backend, const TemplateRegistry& templates,
                              const DecisionConfig& config, CaseType case_type);

}  // namespace courtpipe
