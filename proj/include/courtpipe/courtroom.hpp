#pragma once

#include <string>
#include <vector>

#include "courtpipe/case_model.hpp"
#include "courtpipe/errors.hpp"
#include "courtpipe/llm_backend.hpp"
#include "courtpipe/prompts.hpp"

namespace courtpipe {

enum class Speaker { Judge, Plaintiff, Defendant };

std::string to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

/// One debate participant. Second-instance cases map the appellant onto the
/// plaintiff slot and the appellee onto the defendant slot.
struct AgentRole {
    Speaker role;
    std::string persona_template_id;
    std::string starting_statement;  // the party's recorded statement
};

struct TranscriptEntry {
    Speaker speaker;
    std::string text;
    int turn_index = 0;
};

/// Ordered debate record: one judge opening followed by strictly alternating
/// plaintiff/defendant turns, |entries| == 1 + 2 * rounds.
struct CourtTranscript {
    std::string case_id;
    std::vector<TranscriptEntry> entries;
    int rounds = 0;
};

/// Throws Error when a transcript violates its shape invariants.
void validate(const CourtTranscript& t);

/// Plaintiff-slot and defendant-slot agents for a case, starting statements
/// drawn from the recorded party statements (representatives already merged
/// at parse time). The plaintiff slot falls back to the indictment/petition
/// when no statement was recorded.
std::pair<AgentRole, AgentRole> make_debate_agents(const CaseDocument& doc);

/// Template-rendered judge opening: determined facts, party background when
/// any is recorded, and the fixed discipline clause ending with the statement
/// invitation. No backend call; identical cases give identical entries.
TranscriptEntry opening_remarks(const CaseDocument& doc, const TemplateRegistry& templates);

struct DebateBackends {
    ChatBackend* plaintiff = nullptr;
    ChatBackend* defendant = nullptr;
};

struct DebateConfig {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens_per_turn = 512;
};

/// Raised when a backend fails mid-debate; carries whatever was recorded.
class DebateError : public Error {
public:
    DebateError(const std::string& detail, CourtTranscript partial)
        : Error("debate aborted: " + detail), partial_(std::move(partial)) {}

    const CourtTranscript& partial_transcript() const { return partial_; }

private:
    CourtTranscript partial_;
};

/// Runs `rounds` rounds of alternating plaintiff/defendant turns after the
/// opening. Round-1 prompts seed each side with its recorded statement; every
/// turn prompt carries the full transcript so far verbatim.
CourtTranscript run_debate(const CaseDocument& doc, const TemplateRegistry& templates,
                           const DebateBackends& backends, int rounds,
                           const DebateConfig& config = {});

/// Speaker-labelled plain text, unambiguous: lines that would collide with an
/// entry header are space-stuffed, so split_rendered_transcript inverts the
/// rendering exactly (entry texts are recorded trimmed).
std::string render_transcript(const CourtTranscript& t);
std::vector<TranscriptEntry> split_rendered_transcript(std::string_view rendered);

json transcript_to_json(const CourtTranscript& t);
CourtTranscript transcript_from_json(const json& j);

}  // namespace courtpipe
