#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "courtpipe/legal_kb.hpp"
#include "courtpipe/llm_backend.hpp"
#include "courtpipe/prompts.hpp"
#include "courtpipe/tokenize.hpp"

namespace courtpipe {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Inverted index over the knowledge base. Okapi BM25 with
/// idf = ln((N - df + 0.5) / (df + 0.5) + 1), which is strictly positive.
struct Bm25Index {
    // term -> [(doc_id, term frequency)], doc ids ascending
    std::map<std::string, std::vector<std::pair<std::string, int>>> postings;
    std::map<std::string, int> doc_lengths;
    double avg_doc_length = 0.0;
    int doc_count = 0;
    Bm25Params params;
    std::string tokenizer_id = kTokenizerId;
    std::string kb_version;  // rebuild trigger

    double idf(const std::string& term) const;
};

struct IndexBuildOptions {
    Bm25Params params;
    std::set<DocKind> kinds = {DocKind::Precedent};  // which kinds to index
};

Bm25Index build_index(const KnowledgeBase& kb, const IndexBuildOptions& options = {});

void save_index(const Bm25Index& index, const std::filesystem::path& dir);
Bm25Index load_index(const std::filesystem::path& dir);

struct RankedCandidate {
    std::string doc_id;
    double rough_score = 0.0;
    std::optional<double> rerank_score;  // cosine, in [-1, 1]
    int rank = 0;                        // 1-based, no gaps
};

using DocFilter = std::function<bool(const std::string& doc_id)>;

/// Top-k by BM25 score descending, ties by ascending doc id; zero-score
/// documents never appear. Throws EmptyQuery when the query tokenizes to
/// nothing. Query term multiplicity counts: a term occurring twice in the
/// query contributes twice.
std::vector<RankedCandidate> rough_retrieve(const Bm25Index& index,
                                            std::string_view query_text, int k,
                                            const DocFilter& filter = {});

/// Pluggable text-embedding contract; output length equals dimension() and is
/// deterministic for a fixed (id, text).
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual int dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Offline default: signed feature hashing of tokens, weighted
/// (1 + ln tf) * idf from the index, L2-normalized. No model download needed,
/// fully deterministic.
class HashedTfidfEmbedder : public Embedder {
public:
    explicit HashedTfidfEmbedder(const Bm25Index& index, int dimension = 384);
    std::string id() const override { return id_; }
    int dimension() const override { return dimension_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    int dimension_;
    int doc_count_;
    std::map<std::string, int> doc_freq_;
    std::string id_;
};

/// Production adapter speaking a JSON embeddings endpoint
/// (POST {base_url}/embeddings with {model, input}).
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(std::string base_url, std::string model, int dimension,
                 std::string api_key_env = kEnvApiKey);
    std::string id() const override;
    int dimension() const override { return dimension_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::string base_url_;
    std::string model_;
    int dimension_;
    std::string api_key_env_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

/// Reorders candidates by cosine similarity between the query embedding and
/// each document embedding (descending); ties fall back to rough score then
/// doc id. Output is a permutation of the input with rerank_score populated
/// and ranks reassigned.
std::vector<RankedCandidate> rerank(
    std::vector<RankedCandidate> candidates, std::string_view query_text,
    const Embedder& embedder,
    const std::function<std::string(const std::string&)>& doc_text);

/// Asks the assistant backend which of the three case types the facts
/// describe; one retry with a stricter instruction before giving up.
CaseType predict_case_type(std::string_view facts, ChatBackend& backend,
                           const TemplateRegistry& templates,
                           const std::string& model_id, int max_tokens = 16);

/// Rank-1 candidate = the optimal precedent.
std::string select_precedent(const std::vector<RankedCandidate>& reranked);

/// Union of the cited articles of the top-n candidates, deduplicated, ordered
/// by citation frequency descending then first occurrence.
std::vector<LegalArticleRef> extract_related_articles(
    const std::vector<RankedCandidate>& reranked, int n,
    const std::function<std::vector<LegalArticleRef>(const std::string&)>& citations_of);

struct SearchItem {
    std::string title;
    std::string snippet;
    std::string url;
};

struct SearchDigest {
    std::vector<SearchItem> items;
    std::string summary;
    bool unavailable = false;
};

json search_digest_to_json(const SearchDigest& d);
SearchDigest search_digest_from_json(const json& j);

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    virtual std::vector<SearchItem> search(const std::string& query, int max_items) = 0;
};

/// GET {base_url}/search?q=...&count=N expecting {"results": [{title, snippet,
/// url}]}; the key env var goes out as a bearer token when set.
class HttpSearchProvider : public SearchProvider {
public:
    HttpSearchProvider(std::string base_url, std::string api_key_env);
    std::vector<SearchItem> search(const std::string& query, int max_items) override;

private:
    std::string base_url_;
    std::string api_key_env_;
};

class ScriptedSearchProvider : public SearchProvider {
public:
    explicit ScriptedSearchProvider(std::vector<SearchItem> items)
        : items_(std::move(items)) {}
    static ScriptedSearchProvider from_file(const std::filesystem::path& script);
    std::vector<SearchItem> search(const std::string& query, int max_items) override;

private:
    std::vector<SearchItem> items_;
};

struct WebResearchOptions {
    int max_items = 5;
    std::string model_id;
    int max_tokens = 512;
};

/// Collects open-web context for the judge assistant. A null provider or any
/// provider/backend failure degrades to an empty digest flagged unavailable;
/// this never aborts a run. The summary is produced by `summarizer` from the
/// returned snippets.
SearchDigest web_research(const std::string& query, SearchProvider* provider,
                          ChatBackend* summarizer, const TemplateRegistry& templates,
                          const WebResearchOptions& options = {});

}  // namespace courtpipe
