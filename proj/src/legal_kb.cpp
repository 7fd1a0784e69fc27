#include "courtpipe/legal_kb.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "courtpipe/errors.hpp"
#include "courtpipe/hash.hpp"
#include "courtpipe/text.hpp"
#include "courtpipe/tokenize.hpp"

namespace fs = std::filesystem;

namespace courtpipe {

std::string to_string(DocKind k) {
    switch (k) {
        case DocKind::LawOrRegulation: return "law_or_regulation";
        case DocKind::JournalArticle: return "journal_article";
        default: return "precedent";
    }
}

DocKind doc_kind_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "law_or_regulation") return DocKind::LawOrRegulation;
    if (v == "journal_article") return DocKind::JournalArticle;
    if (v == "precedent") return DocKind::Precedent;
    throw SchemaError("kind", "unknown value '" + std::string(s) + "'");
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void finalize_document(KbDocument& d) {
    d.length_chars = text::utf8_length(d.body);
}

KbDocument law_from_json(const json& j, DocKind kind) {
    KbDocument d;
    d.kind = kind;
    if (!j.contains("id")) throw SchemaError("id");
    d.id = j.at("id").get<std::string>();
    d.title = j.contains("title") ? j.at("title").get<std::string>() : "";
    d.body = j.contains("body") ? j.at("body").get<std::string>() : "";
    finalize_document(d);
    return d;
}

KbDocument precedent_from_json(const json& j) {
    KbDocument d;
    d.kind = DocKind::Precedent;
    if (!j.contains("id")) throw SchemaError("id");
    d.id = j.at("id").get<std::string>();
    d.title = j.contains("title") ? j.at("title").get<std::string>() : "";
    if (!j.contains("cause_of_action")) throw SchemaError("cause_of_action");
    d.cause_of_action = j.at("cause_of_action").get<std::string>();
    if (!j.contains("case_type")) throw SchemaError("case_type");
    d.case_type = case_type_from_string(j.at("case_type").get<std::string>());

    const auto text_field = [&](const char* name) {
        return j.contains(name) ? j.at(name).get<std::string>() : std::string();
    };
    d.facts = text_field("facts");
    d.analysis = text_field("analysis");
    d.articles_text = text_field("articles");
    d.judgment_text = text_field("judgment");
    if (j.contains("body")) {
        d.body = j.at("body").get<std::string>();
    } else {
        std::string parts;
        for (const std::string* s : {&d.facts, &d.analysis, &d.articles_text, &d.judgment_text}) {
            if (s->empty()) continue;
            if (!parts.empty()) parts += "\n";
            parts += *s;
        }
        d.body = parts;
    }
    d.cited_articles = parse_article_citations(
        d.articles_text.empty() ? d.body : d.articles_text);
    finalize_document(d);
    return d;
}

json parse_json_or_throw(const std::string& raw, const std::string& origin) {
    try {
        return json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(origin + ": " + e.what());
    }
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string kb_version_hash(const std::map<std::string, KbDocument>& docs) {
    std::uint64_t h = fnv1a64(kTokenizerId);
    h = fnv1a64("kb-format/1", h);
    for (const auto& [id, d] : docs) {
        h = fnv1a64(id, h);
        h = fnv1a64(to_string(d.kind), h);
        h = fnv1a64(d.body, h);
    }
    return to_hex(h);
}

}  // namespace

void recompute_manifest(KnowledgeBase& kb) {
    kb.manifest.per_kind.clear();
    for (const auto& [id, d] : kb.documents) {
        auto& stats = kb.manifest.per_kind[d.kind];
        stats.num += 1;
        stats.tokens += static_cast<std::int64_t>(tokenize(d.body).size());
    }
    kb.manifest.tokenizer_id = kTokenizerId;
    kb.manifest.version = kb_version_hash(kb.documents);
    kb.version = kb.manifest.version;
}

KnowledgeBase ingest_corpus(const fs::path& source_dir, const IngestConfig& config,
                            IngestDiagnostics* diag) {
    if (!fs::exists(source_dir)) {
        throw IoError("corpus directory does not exist: " + source_dir.string());
    }
    IngestDiagnostics local;
    IngestDiagnostics& d = diag ? *diag : local;

    KnowledgeBase kb;
    const auto add_doc = [&](KbDocument doc, const std::string& origin) {
        if (kb.documents.count(doc.id)) {
            d.errors.push_back({origin, "duplicate document id '" + doc.id + "'"});
            return;
        }
        kb.documents.emplace(doc.id, std::move(doc));
    };

    for (const auto& file : sorted_files(source_dir / "laws", ".json")) {
        try {
            json j = parse_json_or_throw(read_file(file), file.string());
            if (config.exclude_ineffective && j.contains("effective") &&
                !j.at("effective").get<bool>()) {
                continue;
            }
            add_doc(law_from_json(j, DocKind::LawOrRegulation), file.string());
        } catch (const Error& e) {
            d.errors.push_back({file.string(), e.what()});
        }
    }
    for (const auto& file : sorted_files(source_dir / "journal", ".json")) {
        try {
            json j = parse_json_or_throw(read_file(file), file.string());
            add_doc(law_from_json(j, DocKind::JournalArticle), file.string());
        } catch (const Error& e) {
            d.errors.push_back({file.string(), e.what()});
        }
    }
    for (const auto& file : sorted_files(source_dir / "precedents", ".jsonl")) {
        std::istringstream lines(read_file(file));
        std::string line;
        int lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string origin = file.string() + ":" + std::to_string(lineno);
            try {
                add_doc(precedent_from_json(parse_json_or_throw(line, origin)), origin);
            } catch (const Error& e) {
                d.errors.push_back({origin, e.what()});
            }
        }
    }

    if (kb.documents.empty()) {
        throw FormatError("no documents loaded from " + source_dir.string());
    }

    if (config.precedent_cap > 0) {
        std::vector<KbDocument> precedents;
        for (const auto& [id, doc] : kb.documents) {
            if (doc.kind == DocKind::Precedent) precedents.push_back(doc);
        }
        auto kept = cap_long_tail(std::move(precedents), config.precedent_cap);
        std::erase_if(kb.documents, [](const auto& kv) {
            return kv.second.kind == DocKind::Precedent;
        });
        for (auto& doc : kept) kb.documents.emplace(doc.id, std::move(doc));
    }

    recompute_manifest(kb);
    return kb;
}

std::vector<KbDocument> cap_long_tail(std::vector<KbDocument> docs, int cap) {
    if (cap < 1) throw Error("cap must be >= 1");
    std::map<std::string, std::vector<std::size_t>> by_cause;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        by_cause[docs[i].cause_of_action.value_or("")].push_back(i);
    }
    std::vector<bool> keep(docs.size(), true);
    for (auto& [cause, indices] : by_cause) {
        if (indices.size() <= static_cast<std::size_t>(cap)) continue;
        auto ranked = indices;
        std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            if (docs[a].length_chars != docs[b].length_chars) {
                return docs[a].length_chars > docs[b].length_chars;
            }
            return docs[a].id < docs[b].id;
        });
        for (std::size_t r = cap; r < ranked.size(); ++r) keep[ranked[r]] = false;
    }
    std::vector<KbDocument> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (keep[i]) out.push_back(std::move(docs[i]));
    }
    return out;
}

StatsReport corpus_stats(const KnowledgeBase& kb) {
    if (kb.documents.empty()) throw Error("knowledge base is empty");
    StatsReport report;
    std::map<std::string, std::int64_t> causes;
    std::int64_t precedent_total = 0;
    for (const auto& [id, d] : kb.documents) {
        auto& stats = report.per_kind[d.kind];
        stats.num += 1;
        stats.tokens += static_cast<std::int64_t>(tokenize(d.body).size());
        if (d.kind == DocKind::Precedent) {
            ++causes[d.cause_of_action.value_or("")];
            ++precedent_total;
        }
    }
    report.cause_histogram.assign(causes.begin(), causes.end());
    std::sort(report.cause_histogram.begin(), report.cause_histogram.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    std::int64_t top15 = 0;
    for (std::size_t i = 0; i < report.cause_histogram.size() && i < 15; ++i) {
        top15 += report.cause_histogram[i].second;
    }
    if (precedent_total > 0) {
        report.top15_share_percent = 100.0 * static_cast<double>(top15) / precedent_total;
    }
    return report;
}

std::string stats_table(const StatsReport& report) {
    std::ostringstream out;
    out << "Type                  Num      Tokens   Avg. Tokens\n";
    const auto row = [&](const char* label, const KindStats& s) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-20s %6lld %11lld %13.1f\n", label,
                      static_cast<long long>(s.num), static_cast<long long>(s.tokens),
                      s.avg_tokens());
        out << buf;
    };
    static const std::pair<DocKind, const char*> kKinds[] = {
        {DocKind::LawOrRegulation, "Laws and Regulations"},
        {DocKind::JournalArticle, "Journal Articles"},
        {DocKind::Precedent, "Precedents"},
    };
    for (const auto& [kind, label] : kKinds) {
        if (auto it = report.per_kind.find(kind); it != report.per_kind.end()) {
            row(label, it->second);
        }
    }
    if (!report.cause_histogram.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "Top-15 causes: %.1f%% of precedents\n",
                      report.top15_share_percent);
        out << buf;
    }
    return out.str();
}

json kb_document_to_json(const KbDocument& d) {
    json j;
    j["id"] = d.id;
    j["kind"] = to_string(d.kind);
    j["title"] = d.title;
    j["body"] = d.body;
    if (d.cause_of_action) j["cause_of_action"] = *d.cause_of_action;
    if (d.case_type) j["case_type"] = to_string(*d.case_type);
    if (!d.cited_articles.empty()) {
        json arr = json::array();
        for (const auto& r : d.cited_articles) arr.push_back(article_to_json(r));
        j["cited_articles"] = arr;
    }
    j["length_chars"] = d.length_chars;
    if (!d.facts.empty()) j["facts"] = d.facts;
    if (!d.analysis.empty()) j["analysis"] = d.analysis;
    if (!d.articles_text.empty()) j["articles"] = d.articles_text;
    if (!d.judgment_text.empty()) j["judgment"] = d.judgment_text;
    return j;
}

KbDocument kb_document_from_json(const json& j) {
    KbDocument d;
    d.id = j.at("id").get<std::string>();
    d.kind = doc_kind_from_string(j.at("kind").get<std::string>());
    d.title = j.contains("title") ? j.at("title").get<std::string>() : "";
    d.body = j.at("body").get<std::string>();
    if (j.contains("cause_of_action")) d.cause_of_action = j.at("cause_of_action").get<std::string>();
    if (j.contains("case_type")) d.case_type = case_type_from_string(j.at("case_type").get<std::string>());
    if (j.contains("cited_articles")) {
        for (const auto& a : j.at("cited_articles")) {
            d.cited_articles.push_back(article_from_json(a));
        }
    }
    const auto text_field = [&](const char* name) {
        return j.contains(name) ? j.at(name).get<std::string>() : std::string();
    };
    d.facts = text_field("facts");
    d.analysis = text_field("analysis");
    d.articles_text = text_field("articles");
    d.judgment_text = text_field("judgment");
    d.length_chars = text::utf8_length(d.body);
    return d;
}

void save_kb(const KnowledgeBase& kb, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "documents.jsonl", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (dir / "documents.jsonl").string());
        for (const auto& [id, d] : kb.documents) {
            out << kb_document_to_json(d).dump() << "\n";
        }
    }
    json manifest;
    manifest["version"] = kb.manifest.version;
    manifest["tokenizer_id"] = kb.manifest.tokenizer_id;
    json kinds = json::object();
    for (const auto& [kind, stats] : kb.manifest.per_kind) {
        json k;
        k["num"] = stats.num;
        k["tokens"] = stats.tokens;
        k["avg_tokens"] = stats.avg_tokens();
        kinds[to_string(kind)] = k;
    }
    manifest["per_kind"] = kinds;
    std::ofstream out(dir / "kb_manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "kb_manifest.json").string());
    out << manifest.dump(2) << "\n";
}

KnowledgeBase load_kb(const fs::path& dir) {
    const auto docs_path = dir / "documents.jsonl";
    std::ifstream in(docs_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + docs_path.string());
    KnowledgeBase kb;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string origin = docs_path.string() + ":" + std::to_string(lineno);
        KbDocument d = kb_document_from_json(parse_json_or_throw(line, origin));
        kb.documents.emplace(d.id, std::move(d));
    }
    if (kb.documents.empty()) throw FormatError("knowledge base at " + dir.string() + " is empty");
    recompute_manifest(kb);
    return kb;
}

}  // namespace courtpipe
