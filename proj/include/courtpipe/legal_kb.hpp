#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "courtpipe/case_model.hpp"

namespace courtpipe {

enum class DocKind { LawOrRegulation, JournalArticle, Precedent };

std::string to_string(DocKind k);
DocKind doc_kind_from_string(std::string_view s);

struct KbDocument {
    std::string id;
    DocKind kind = DocKind::Precedent;
    std::string title;
    std::string body;
    std::optional<std::string> cause_of_action;  // precedents only
    std::optional<CaseType> case_type;           // precedents only
    std::vector<LegalArticleRef> cited_articles; // extracted at ingest
    std::int64_t length_chars = 0;               // codepoints of body

    // Precedent sections, kept so prompts and re-ranking can target them.
    std::string facts;
    std::string analysis;
    std::string articles_text;
    std::string judgment_text;
};

struct KindStats {
    std::int64_t num = 0;
    std::int64_t tokens = 0;

    double avg_tokens() const { return num == 0 ? 0.0 : static_cast<double>(tokens) / num; }
};

struct KbManifest {
    std::map<DocKind, KindStats> per_kind;
    std::string tokenizer_id;
    std::string version;  // content hash; index rebuilds key off it
};

struct KnowledgeBase {
    std::map<std::string, KbDocument> documents;  // id-keyed
    KbManifest manifest;
    std::string version;  // mirrors manifest.version
};

struct IngestConfig {
    bool exclude_ineffective = true;  // drop statutes flagged no longer in effect
    int precedent_cap = 100;          // per-cause ceiling; <= 0 disables capping
};

struct IngestDiagnostics {
    struct FileError {
        std::string file;
        std::string message;
    };
    std::vector<FileError> errors;
};

/// Loads a corpus directory (laws/*.json, journal/*.json, precedents/*.jsonl).
/// Per-file format errors are collected in `diag` and skipped; the call fails
/// only when nothing loads at all. Precedent citations are extracted from the
/// articles section during ingest.
KnowledgeBase ingest_corpus(const std::filesystem::path& source_dir,
                            const IngestConfig& config = {},
                            IngestDiagnostics* diag = nullptr);

/// Per-cause ceiling: when a cause of action holds more than `cap` documents,
/// only the longest `cap` (ties broken by ascending id) survive. Relative
/// input order is preserved; documents are never altered. Idempotent.
std::vector<KbDocument> cap_long_tail(std::vector<KbDocument> docs, int cap);

void recompute_manifest(KnowledgeBase& kb);

struct StatsReport {
    std::map<DocKind, KindStats> per_kind;
    std::vector<std::pair<std::string, std::int64_t>> cause_histogram;  // count desc
    double top15_share_percent = 0.0;  // share of precedents in the top 15 causes
};

StatsReport corpus_stats(const KnowledgeBase& kb);
std::string stats_table(const StatsReport& report);

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& dir);
KnowledgeBase load_kb(const std::filesystem::path& dir);

json kb_document_to_json(const KbDocument& d);
KbDocument kb_document_from_json(const json& j);

}  // namespace courtpipe
