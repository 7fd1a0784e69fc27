#include "courtpipe/courtroom.hpp"

#include <regex>
#include <sstream>

#include "courtpipe/text.hpp"

namespace courtpipe {

std::string to_string(Speaker s) {
    switch (s) {
        case Speaker::Judge: return "judge";
        case Speaker::Plaintiff: return "plaintiff";
        default: return "defendant";
    }
}

Speaker speaker_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "judge") return Speaker::Judge;
    if (v == "plaintiff") return Speaker::Plaintiff;
    if (v == "defendant") return Speaker::Defendant;
    throw SchemaError("speaker", "unknown speaker '" + std::string(s) + "'");
}

void validate(const CourtTranscript& t) {
    if (t.rounds < 0) throw Error("transcript rounds must be >= 0");
    if (t.entries.size() != static_cast<std::size_t>(1 + 2 * t.rounds)) {
        throw Error("transcript must hold 1 + 2*rounds entries, got " +
                    std::to_string(t.entries.size()));
    }
    if (t.entries.empty() || t.entries.front().speaker != Speaker::Judge) {
        throw Error("transcript must open with the judge");
    }
    for (std::size_t i = 1; i < t.entries.size(); ++i) {
        const Speaker expected = (i % 2 == 1) ? Speaker::Plaintiff : Speaker::Defendant;
        if (t.entries[i].speaker != expected) {
            throw Error("transcript speakers must alternate plaintiff/defendant");
        }
    }
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
        if (t.entries[i].text.empty()) throw Error("transcript entries must be non-empty");
        if (t.entries[i].turn_index != static_cast<int>(i)) {
            throw Error("transcript turn indexes must be consecutive from 0");
        }
    }
}

namespace {

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string statement_for(const CaseDocument& doc, PartyRole role) {
    auto it = doc.party_statements.find(role);
    if (it != doc.party_statements.end()) return it->second;
    return "";
}

std::pair<std::string, std::string> side_labels(const CaseDocument& doc) {
    if (doc.instance == Instance::Second) return {"appellant", "appellee"};
    return {"plaintiff", "defendant"};
}

}  // namespace

std::pair<AgentRole, AgentRole> make_debate_agents(const CaseDocument& doc) {
    const bool second = doc.instance == Instance::Second;
    AgentRole plaintiff;
    plaintiff.role = Speaker::Plaintiff;
    plaintiff.persona_template_id = "plaintiff_persona";
    plaintiff.starting_statement =
        statement_for(doc, second ? PartyRole::Appellant : PartyRole::Plaintiff);
    if (plaintiff.starting_statement.empty()) {
        plaintiff.starting_statement = doc.indictment_or_petition;
    }

    AgentRole defendant;
    defendant.role = Speaker::Defendant;
    defendant.persona_template_id = "defendant_persona";
    defendant.starting_statement =
        statement_for(doc, second ? PartyRole::Appellee : PartyRole::Defendant);
    return {plaintiff, defendant};
}

TranscriptEntry opening_remarks(const CaseDocument& doc, const TemplateRegistry& templates) {
    std::string background;
    for (const auto& p : doc.parties) {
        if (p.background.empty()) continue;
        if (!background.empty()) background += "\n";
        background += p.name.empty() ? to_string(p.role) : p.name;
        background += " (" + to_string(p.role) + "): " + p.background;
    }
    auto [side_a, side_b] = side_labels(doc);
    std::string body = templates.render("judge_opening",
                                        {{"facts", doc.determined_facts},
                                         {"background", background},
                                         {"side_a", side_a},
                                         {"side_b", side_b}});
    return TranscriptEntry{Speaker::Judge, trimmed(body), 0};
}

CourtTranscript run_debate(const CaseDocument& doc, const TemplateRegistry& templates,
                           const DebateBackends& backends, int rounds,
                           const DebateConfig& config) {
    if (rounds < 1) throw Error("rounds must be >= 1");
    if (!backends.plaintiff || !backends.defendant) {
        throw Error("plaintiff and defendant backends must be configured");
    }

    CourtTranscript t;
    t.case_id = doc.id;
    t.rounds = rounds;
    t.entries.push_back(opening_remarks(doc, templates));

    auto [plaintiff, defendant] = make_debate_agents(doc);
    auto [side_a, side_b] = side_labels(doc);

    const auto take_turn = [&](const AgentRole& agent, ChatBackend& backend, int round) {
        const bool is_plaintiff = agent.role == Speaker::Plaintiff;
        const std::string turn_template = is_plaintiff ? "plaintiff_turn" : "defendant_turn";
        std::map<std::string, std::string> vars = {
            {"case_type", to_string(doc.case_type)},
            {"cause_of_action", doc.cause_of_action},
            {"side", is_plaintiff ? side_a : side_b},
            {"opponent", is_plaintiff ? side_b : side_a},
            {"starting_statement", agent.starting_statement},
            {"facts", doc.determined_facts},
            {"transcript", render_transcript(t)},
            {"round", std::to_string(round)},
            {"rounds", std::to_string(rounds)},
        };
        ChatRequest req;
        req.model_id = config.model_id;
        req.temperature = config.temperature;
        req.max_tokens = config.max_tokens_per_turn;
        req.messages.push_back(
            {ChatRole::System, templates.render(agent.persona_template_id, vars)});
        req.messages.push_back({ChatRole::User, templates.render(turn_template, vars)});

        std::string reply;
        try {
            reply = complete(backend, req);
        } catch (const BackendError& e) {
            throw DebateError(e.what(), t);
        }
        t.entries.push_back(TranscriptEntry{agent.role, trimmed(reply),
                                            static_cast<int>(t.entries.size())});
    };

    for (int round = 1; round <= rounds; ++round) {
        take_turn(plaintiff, *backends.plaintiff, round);
        take_turn(defendant, *backends.defendant, round);
    }
    validate(t);
    return t;
}

namespace {

const std::regex& header_pattern() {
    static const std::regex kRe(R"(^=== (JUDGE|PLAINTIFF|DEFENDANT) #(\d+) ===$)");
    return kRe;
}

// Lines that could be mistaken for a header once a space is removed.
const std::regex& stuffable_pattern() {
    static const std::regex kRe(R"(^ *=== .* ===$)");
    return kRe;
}

std::string header_line(const TranscriptEntry& e) {
    std::string role = text::to_lower_ascii(to_string(e.speaker));
    for (char& c : role) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return "=== " + role + " #" + std::to_string(e.turn_index) + " ===";
}

std::vector<std::string> split_lines(std::string_view s) {
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

std::string render_transcript(const CourtTranscript& t) {
    std::ostringstream out;
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
        const auto& e = t.entries[i];
        out << header_line(e) << "\n";
        for (const auto& line : split_lines(e.text)) {
            if (std::regex_match(line, stuffable_pattern())) out << ' ';
            out << line << "\n";
        }
    }
    return out.str();
}

std::vector<TranscriptEntry> split_rendered_transcript(std::string_view rendered) {
    std::vector<TranscriptEntry> entries;
    std::vector<std::string> current;
    bool open = false;
    const auto flush = [&] {
        if (!open) return;
        std::string text;
        for (std::size_t i = 0; i < current.size(); ++i) {
            if (i) text += "\n";
            text += current[i];
        }
        entries.back().text = text;
        current.clear();
    };
    for (auto& line : split_lines(rendered)) {
        std::smatch m;
        if (std::regex_match(line, m, header_pattern())) {
            flush();
            TranscriptEntry e;
            e.speaker = speaker_from_string(text::to_lower_ascii(m[1].str()));
            e.turn_index = std::stoi(m[2].str());
            entries.push_back(std::move(e));
            open = true;
            continue;
        }
        if (!open) continue;  // preamble before first header
        if (std::regex_match(line, stuffable_pattern()) && !line.empty() &&
            line.front() == ' ') {
            line.erase(0, 1);
        }
        current.push_back(line);
    }
    flush();
    // Rendering ends each entry with a newline; drop the trailing blank line
    // that split_lines therefore produced.
    for (auto& e : entries) {
        if (!e.text.empty() && e.text.back() == '\n') e.text.pop_back();
    }
    return entries;
}

json transcript_to_json(const CourtTranscript& t) {
    json j;
    j["case_id"] = t.case_id;
    j["rounds"] = t.rounds;
    json entries = json::array();
    for (const auto& e : t.entries) {
        json ej;
        ej["speaker"] = to_string(e.speaker);
        ej["turn_index"] = e.turn_index;
        ej["text"] = e.text;
        entries.push_back(ej);
    }
    j["entries"] = entries;
    return j;
}

CourtTranscript transcript_from_json(const json& j) {
    CourtTranscript t;
    t.case_id = j.at("case_id").get<std::string>();
    t.rounds = j.at("rounds").get<int>();
    for (const auto& ej : j.at("entries")) {
        t.entries.push_back({speaker_from_string(ej.at("speaker").get<std::string>()),
                             ej.at("text").get<std::string>(),
                             ej.at("turn_index").get<int>()});
    }
    return t;
}

}  // namespace courtpipe
