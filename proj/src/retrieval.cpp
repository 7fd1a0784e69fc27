#include "courtpipe/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "courtpipe/errors.hpp"
#include "courtpipe/hash.hpp"
#include "courtpipe/text.hpp"

namespace fs = std::filesystem;

namespace courtpipe {

double Bm25Index::idf(const std::string& term) const {
    auto it = postings.find(term);
    const double df = it == postings.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(doc_count);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

Bm25Index build_index(const KnowledgeBase& kb, const IndexBuildOptions& options) {
    if (kb.documents.empty()) throw Error("cannot index an empty knowledge base");
    Bm25Index index;
    index.params = options.params;
    index.kb_version = kb.version;

    std::int64_t total_len = 0;
    for (const auto& [id, doc] : kb.documents) {
        if (!options.kinds.empty() && !options.kinds.count(doc.kind)) continue;
        const auto tokens = tokenize(doc.body);
        index.doc_lengths[id] = static_cast<int>(tokens.size());
        total_len += static_cast<std::int64_t>(tokens.size());
        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            index.postings[term].emplace_back(id, count);
        }
    }
    index.doc_count = static_cast<int>(index.doc_lengths.size());
    index.avg_doc_length =
        index.doc_count == 0 ? 0.0 : static_cast<double>(total_len) / index.doc_count;
    // Documents were visited in ascending id order, so postings are sorted.
    return index;
}

std::vector<RankedCandidate> rough_retrieve(const Bm25Index& index,
                                            std::string_view query_text, int k,
                                            const DocFilter& filter) {
    if (k < 1) throw Error("k must be >= 1");
    const auto query_tokens = tokenize(query_text);
    if (query_tokens.empty()) throw EmptyQuery();

    const double k1 = index.params.k1;
    const double b = index.params.b;
    std::map<std::string, double> scores;
    for (const auto& term : query_tokens) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double idf = index.idf(term);
        for (const auto& [doc_id, tf] : it->second) {
            if (filter && !filter(doc_id)) continue;
            const double len = static_cast<double>(index.doc_lengths.at(doc_id));
            const double norm = 1.0 - b + b * len / index.avg_doc_length;
            scores[doc_id] += idf * (tf * (k1 + 1.0)) / (tf + k1 * norm);
        }
    }

    std::vector<RankedCandidate> ranked;
    ranked.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        if (score <= 0.0) continue;
        ranked.push_back({doc_id, score, std::nullopt, 0});
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) {
                  if (a.rough_score != b.rough_score) return a.rough_score > b.rough_score;
                  return a.doc_id < b.doc_id;
              });
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(k);
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = static_cast<int>(i + 1);
    return ranked;
}

// ---------------------------------------------------------------------------
// Index persistence
// ---------------------------------------------------------------------------

void save_index(const Bm25Index& index, const fs::path& dir) {
    fs::create_directories(dir);
    {
        json params;
        params["k1"] = index.params.k1;
        params["b"] = index.params.b;
        params["tokenizer_id"] = index.tokenizer_id;
        params["kb_version"] = index.kb_version;
        params["doc_count"] = index.doc_count;
        params["avg_doc_length"] = index.avg_doc_length;
        std::ofstream out(dir / "params.json", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (dir / "params.json").string());
        out << params.dump(2) << "\n";
    }
    std::ofstream out(dir / "postings.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "postings.jsonl").string());
    {
        json lengths;
        lengths["doc_lengths"] = json::object();
        for (const auto& [id, len] : index.doc_lengths) lengths["doc_lengths"][id] = len;
        out << lengths.dump() << "\n";
    }
    for (const auto& [term, postings] : index.postings) {
        json row;
        row["t"] = term;
        json plist = json::array();
        for (const auto& [doc_id, tf] : postings) plist.push_back(json::array({doc_id, tf}));
        row["p"] = plist;
        out << row.dump() << "\n";
    }
}

Bm25Index load_index(const fs::path& dir) {
    std::ifstream params_in(dir / "params.json", std::ios::binary);
    if (!params_in) throw IoError("cannot read " + (dir / "params.json").string());
    json params;
    params_in >> params;

    Bm25Index index;
    index.params.k1 = params.at("k1").get<double>();
    index.params.b = params.at("b").get<double>();
    index.tokenizer_id = params.at("tokenizer_id").get<std::string>();
    index.kb_version = params.at("kb_version").get<std::string>();
    index.doc_count = params.at("doc_count").get<int>();
    index.avg_doc_length = params.at("avg_doc_length").get<double>();
    if (index.tokenizer_id != kTokenizerId) {
        throw FormatError("index tokenizer '" + index.tokenizer_id +
                          "' does not match this build ('" + kTokenizerId + "')");
    }

    std::ifstream in(dir / "postings.jsonl", std::ios::binary);
    if (!in) throw IoError("cannot read " + (dir / "postings.jsonl").string());
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (first) {
            first = false;
            for (const auto& [id, len] : j.at("doc_lengths").items()) {
                index.doc_lengths[id] = len.get<int>();
            }
            continue;
        }
        auto& plist = index.postings[j.at("t").get<std::string>()];
        for (const auto& p : j.at("p")) {
            plist.emplace_back(p.at(0).get<std::string>(), p.at(1).get<int>());
        }
    }
    return index;
}

// ---------------------------------------------------------------------------
// Embedders and re-ranking
// ---------------------------------------------------------------------------

HashedTfidfEmbedder::HashedTfidfEmbedder(const Bm25Index& index, int dimension)
    : dimension_(dimension), doc_count_(index.doc_count) {
    for (const auto& [term, postings] : index.postings) {
        doc_freq_[term] = static_cast<int>(postings.size());
    }
    std::uint64_t h = fnv1a64("hashed-tfidf/1");
    h = fnv1a64(std::to_string(dimension_), h);
    h = fnv1a64(std::to_string(doc_count_), h);
    for (const auto& [term, df] : doc_freq_) {
        h = fnv1a64(term, h);
        h = fnv1a64(std::to_string(df), h);
    }
    id_ = "hashed-tfidf/1:d" + std::to_string(dimension_) + ":" + to_hex(h);
}

std::vector<double> HashedTfidfEmbedder::embed(std::string_view text) const {
    std::vector<double> v(dimension_, 0.0);
    std::map<std::string, int> tf;
    for (const auto& t : tokenize(text)) ++tf[t];
    const double n = static_cast<double>(doc_count_);
    for (const auto& [term, count] : tf) {
        auto it = doc_freq_.find(term);
        const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        const double weight = (1.0 + std::log(static_cast<double>(count))) * idf;
        const std::uint64_t h = fnv1a64(term);
        const std::size_t slot =
            static_cast<std::size_t>(h % static_cast<std::uint64_t>(dimension_));
        const double sign = (fnv1a64(term, 0x9e3779b97f4a7c15ULL) & 1) ? 1.0 : -1.0;
        v[slot] += sign * weight;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, int dimension,
                           std::string api_key_env)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      dimension_(dimension),
      api_key_env_(std::move(api_key_env)) {}

std::string HttpEmbedder::id() const { return "http:" + model_; }

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
    auto scheme_end = base_url_.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url_.find('/', host_start);
    std::string origin =
        path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    std::string prefix =
        path_start == std::string::npos ? "" : base_url_.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    json body;
    body["model"] = model_;
    body["input"] = std::string(text);
    auto res = client.Post(prefix + "/embeddings", headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw EmbedderError("embedding endpoint failed" +
                            (res ? " with status " + std::to_string(res->status) : ""));
    }
    try {
        json reply = json::parse(res->body);
        std::vector<double> v =
            reply.at("data").at(0).at("embedding").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != dimension_) {
            throw EmbedderError("embedding has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dimension_));
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw EmbedderError(std::string("bad embedding reply: ") + e.what());
    }
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw EmbedderError("cosine over mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RankedCandidate> rerank(
    std::vector<RankedCandidate> candidates, std::string_view query_text,
    const Embedder& embedder,
    const std::function<std::string(const std::string&)>& doc_text) {
    if (candidates.empty()) throw EmptyCandidates();
    const auto query_vec = embedder.embed(query_text);
    for (auto& c : candidates) {
        c.rerank_score = cosine_similarity(query_vec, embedder.embed(doc_text(c.doc_id)));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) {
                  if (*a.rerank_score != *b.rerank_score) {
                      return *a.rerank_score > *b.rerank_score;
                  }
                  if (a.rough_score != b.rough_score) return a.rough_score > b.rough_score;
                  return a.doc_id < b.doc_id;
              });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        candidates[i].rank = static_cast<int>(i + 1);
    }
    return candidates;
}

// ---------------------------------------------------------------------------
// Assistant operations
// ---------------------------------------------------------------------------

namespace {

std::optional<CaseType> find_case_type_word(const std::string& reply) {
    const std::string lower = text::to_lower_ascii(reply);
    int hits = 0;
    std::optional<CaseType> found;
    const auto probe = [&](const char* word, CaseType t) {
        if (lower.find(word) != std::string::npos) {
            ++hits;
            found = t;
        }
    };
    probe("criminal", CaseType::Criminal);
    probe("civil", CaseType::Civil);
    probe("administrative", CaseType::Administrative);
    if (hits != 1) return std::nullopt;
    return found;
}

}  // namespace

CaseType predict_case_type(std::string_view facts, ChatBackend& backend,
                           const TemplateRegistry& templates, const std::string& model_id,
                           int max_tokens) {
    if (facts.empty()) throw Error("facts must be non-empty to predict a case type");
    ChatRequest req;
    req.model_id = model_id;
    req.max_tokens = max_tokens;
    req.messages.push_back(
        {ChatRole::User, templates.render("case_type_predictor",
                                          {{"facts", std::string(facts)}})});
    std::string reply = complete(backend, req);
    if (auto t = find_case_type_word(reply)) return *t;

    ChatRequest retry = req;
    retry.messages.push_back({ChatRole::Assistant, reply});
    retry.messages.push_back(
        {ChatRole::User,
         "Answer with exactly one word: criminal, civil, or administrative."});
    reply = complete(backend, retry);
    if (auto t = find_case_type_word(reply)) return *t;
    throw BackendError("invalid_reply", 2,
                       "case-type prediction was not one of the three types: '" +
                           reply.substr(0, 80) + "'");
}

std::string select_precedent(const std::vector<RankedCandidate>& reranked) {
    if (reranked.empty()) throw EmptyCandidates();
    return reranked.front().doc_id;
}

std::vector<LegalArticleRef> extract_related_articles(
    const std::vector<RankedCandidate>& reranked, int n,
    const std::function<std::vector<LegalArticleRef>(const std::string&)>& citations_of) {
    if (n < 1) throw Error("n must be >= 1");
    struct Tally {
        int freq = 0;
        std::size_t first_seen = 0;
    };
    std::map<LegalArticleRef, Tally> tallies;
    std::size_t order = 0;
    const std::size_t top = std::min<std::size_t>(n, reranked.size());
    for (std::size_t i = 0; i < top; ++i) {
        for (const auto& ref : dedupe_articles(citations_of(reranked[i].doc_id))) {
            auto [it, inserted] = tallies.try_emplace(ref, Tally{0, order});
            if (inserted) ++order;
            ++it->second.freq;
        }
    }
    std::vector<std::pair<LegalArticleRef, Tally>> rows(tallies.begin(), tallies.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second.freq != b.second.freq) return a.second.freq > b.second.freq;
        return a.second.first_seen < b.second.first_seen;
    });
    std::vector<LegalArticleRef> out;
    out.reserve(rows.size());
    for (auto& [ref, tally] : rows) out.push_back(ref);
    return out;
}

// ---------------------------------------------------------------------------
// Web research
// ---------------------------------------------------------------------------

json search_digest_to_json(const SearchDigest& d) {
    json j;
    json items = json::array();
    for (const auto& item : d.items) {
        json ij;
        ij["title"] = item.title;
        ij["snippet"] = item.snippet;
        ij["url"] = item.url;
        items.push_back(ij);
    }
    j["items"] = items;
    j["summary"] = d.summary;
    j["unavailable"] = d.unavailable;
    return j;
}

SearchDigest search_digest_from_json(const json& j) {
    SearchDigest d;
    if (j.contains("items")) {
        for (const auto& ij : j.at("items")) {
            d.items.push_back({ij.at("title").get<std::string>(),
                               ij.at("snippet").get<std::string>(),
                               ij.at("url").get<std::string>()});
        }
    }
    d.summary = j.contains("summary") ? j.at("summary").get<std::string>() : "";
    d.unavailable = j.contains("unavailable") && j.at("unavailable").get<bool>();
    return d;
}

HttpSearchProvider::HttpSearchProvider(std::string base_url, std::string api_key_env)
    : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)) {}

std::vector<SearchItem> HttpSearchProvider::search(const std::string& query, int max_items) {
    auto scheme_end = base_url_.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url_.find('/', host_start);
    std::string origin =
        path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    std::string prefix =
        path_start == std::string::npos ? "" : base_url_.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    httplib::Params params{{"q", query}, {"count", std::to_string(max_items)}};
    auto res = client.Get(prefix + "/search", params, headers);
    if (!res || res->status != 200) {
        throw ProviderError("search endpoint failed" +
                            (res ? " with status " + std::to_string(res->status) : ""));
    }
    try {
        json reply = json::parse(res->body);
        std::vector<SearchItem> items;
        for (const auto& r : reply.at("results")) {
            items.push_back({r.value("title", ""), r.value("snippet", ""),
                             r.value("url", "")});
            if (static_cast<int>(items.size()) >= max_items) break;
        }
        return items;
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("bad search reply: ") + e.what());
    }
}

ScriptedSearchProvider ScriptedSearchProvider::from_file(const fs::path& script) {
    std::ifstream in(script, std::ios::binary);
    if (!in) throw IoError("cannot read search script " + script.string());
    json j;
    in >> j;
    std::vector<SearchItem> items;
    for (const auto& ij : j.at("items")) {
        items.push_back({ij.value("title", ""), ij.value("snippet", ""),
                         ij.value("url", "")});
    }
    return ScriptedSearchProvider(std::move(items));
}

std::vector<SearchItem> ScriptedSearchProvider::search(const std::string& query,
                                                       int max_items) {
    std::vector<SearchItem> out = items_;
    if (static_cast<int>(out.size()) > max_items) out.resize(max_items);
    return out;
}

SearchDigest web_research(const std::string& query, SearchProvider* provider,
                          ChatBackend* summarizer, const TemplateRegistry& templates,
                          const WebResearchOptions& options) {
    SearchDigest digest;
    if (!provider) {
        digest.unavailable = true;
        return digest;
    }
    try {
        digest.items = provider->search(query, options.max_items);
    } catch (const Error&) {
        digest.items.clear();
        digest.unavailable = true;
        return digest;
    }
    if (digest.items.empty() || !summarizer) return digest;

    std::string snippets;
    for (const auto& item : digest.items) {
        snippets += "- " + item.title + ": " + item.snippet + "\n";
    }
    try {
        ChatRequest req;
        req.model_id = options.model_id;
        req.max_tokens = options.max_tokens;
        req.messages.push_back(
            {ChatRole::User,
             templates.render("web_summary", {{"query", query}, {"snippets", snippets}})});
        digest.summary = complete(*summarizer, req);
    } catch (const Error&) {
        digest.summary.clear();  // itemized digest still usable
    }
    return digest;
}

}  // namespace courtpipe
