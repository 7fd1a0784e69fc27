#include "courtpipe/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "courtpipe/hash.hpp"
#include "courtpipe/text.hpp"

namespace fs = std::filesystem;

namespace courtpipe {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    std::string v = text::to_lower_ascii(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("config key '" + key + "' expects a boolean, got '" + value + "'");
}

int parse_int(const std::string& value, const std::string& key) {
    try {
        return std::stoi(value);
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\''))) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& raw_value) {
    const std::string value = strip_quotes(raw_value);
    if (key == "corpus_dir") c.corpus_dir = value;
    else if (key == "kb_dir") c.kb_dir = value;
    else if (key == "cache_dir") c.cache_dir = value;
    else if (key == "templates_dir") c.templates_dir = value;
    else if (key == "runs_dir") c.runs_dir = value;
    else if (key == "model_id") c.model_id = value;
    else if (key == "rounds") c.rounds = parse_int(value, key);
    else if (key == "max_tokens") c.max_tokens = parse_int(value, key);
    else if (key == "seed") c.seed = std::stoll(value);
    else if (key == "jobs") c.jobs = parse_int(value, key);
    else if (key == "embed_dimension") c.embed_dimension = parse_int(value, key);
    else if (key == "rerank_text") c.rerank_text = value;
    else if (key == "search_provider") c.search_provider = value;
    else if (key == "retrieval.k") c.retrieval.k = parse_int(value, key);
    else if (key == "retrieval.top_n") c.retrieval.top_n = parse_int(value, key);
    else if (key == "toggles.court_sim") c.toggles.court_sim = parse_bool(value, key);
    else if (key == "toggles.knowledge_base") c.toggles.knowledge_base = parse_bool(value, key);
    else if (key == "toggles.web_search") c.toggles.web_search = parse_bool(value, key);
    else if (key.rfind("backend.", 0) == 0) c.backends[key.substr(8)] = value;
    else throw Error("unknown config key '" + key + "'");
}

RunConfig load_config_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    RunConfig config;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string t = text::collapse_whitespace(line);
        if (t.empty()) continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        std::string key = text::collapse_whitespace(t.substr(0, eq));
        std::string value = text::collapse_whitespace(t.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        apply_config_entry(config, key, value);
    }
    return config;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["corpus_dir"] = c.corpus_dir.string();
    j["kb_dir"] = c.kb_dir.string();
    j["cache_dir"] = c.cache_dir.string();
    j["templates_dir"] = c.templates_dir.string();
    j["runs_dir"] = c.runs_dir.string();
    json backends = json::object();
    for (const auto& [role, spec] : c.backends) backends[role] = spec;
    j["backends"] = backends;
    j["search_provider"] = c.search_provider;
    j["model_id"] = c.model_id;
    j["rounds"] = c.rounds;
    j["max_tokens"] = c.max_tokens;
    j["retrieval"] = {{"k", c.retrieval.k}, {"top_n", c.retrieval.top_n}};
    j["toggles"] = {{"court_sim", c.toggles.court_sim},
                    {"knowledge_base", c.toggles.knowledge_base},
                    {"web_search", c.toggles.web_search}};
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["embed_dimension"] = c.embed_dimension;
    j["rerank_text"] = c.rerank_text;
    return j;
}

std::string config_hash(const RunConfig& c) { return content_digest(config_to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Runtime assembly
// ---------------------------------------------------------------------------

std::shared_ptr<ChatBackend> make_backend(const std::string& spec, const fs::path& cache_dir) {
    std::shared_ptr<ChatBackend> inner;
    if (spec.rfind("scripted:", 0) == 0) {
        inner = std::make_shared<ScriptedMockBackend>(
            ScriptedMockBackend::from_file(spec.substr(9)));
    } else if (spec == "http" || spec.rfind("http:", 0) == 0) {
        HttpBackendConfig cfg;
        if (spec.size() > 5 && spec.rfind("http:", 0) == 0) cfg.base_url = spec.substr(5);
        inner = std::make_shared<HttpChatBackend>(cfg);
    } else {
        throw Error("unknown backend spec '" + spec + "'");
    }
    if (!cache_dir.empty()) return std::make_shared<CachedBackend>(cache_dir, inner);
    return inner;
}

ChatBackend& PipelineRuntime::backend_for(const std::string& role) const {
    if (auto it = backends.find(role); it != backends.end()) return *it->second;
    if (auto it = backends.find("default"); it != backends.end()) return *it->second;
    throw Error("no backend configured for role '" + role + "' and no default");
}

PipelineRuntime build_runtime(RunConfig config) {
    PipelineRuntime rt;
    rt.templates = TemplateRegistry::load_dir(config.templates_dir);

    for (const auto& [role, spec] : config.backends) {
        rt.backends[role] = make_backend(spec, config.cache_dir);
    }

    if (!config.search_provider.empty()) {
        const std::string& spec = config.search_provider;
        if (spec.rfind("scripted:", 0) == 0) {
            rt.search = std::make_unique<ScriptedSearchProvider>(
                ScriptedSearchProvider::from_file(spec.substr(9)));
        } else if (spec.rfind("http:", 0) == 0) {
            rt.search = std::make_unique<HttpSearchProvider>(spec.substr(5),
                                                             "COURTPIPE_SEARCH_API_KEY");
        } else {
            throw Error("unknown search provider spec '" + spec + "'");
        }
    }

    if (config.toggles.knowledge_base) {
        rt.kb = load_kb(config.kb_dir);
        const fs::path index_dir = config.kb_dir / "index";
        bool rebuild = true;
        if (fs::exists(index_dir / "params.json")) {
            Bm25Index index = load_index(index_dir);
            if (index.kb_version == rt.kb->version) {
                rt.index = std::move(index);
                rebuild = false;
            }
        }
        if (rebuild) {
            rt.index = build_index(*rt.kb);
            save_index(*rt.index, index_dir);
        }
        rt.embedder = std::make_unique<HashedTfidfEmbedder>(*rt.index, config.embed_dimension);
    }

    rt.config = std::move(config);
    return rt;
}

// ---------------------------------------------------------------------------
// Per-case pipeline
// ---------------------------------------------------------------------------

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

json candidates_to_json(const std::vector<RankedCandidate>& cands) {
    json arr = json::array();
    for (const auto& c : cands) {
        json j;
        j["rank"] = c.rank;
        j["doc_id"] = c.doc_id;
        j["rough_score"] = c.rough_score;
        if (c.rerank_score) j["rerank_score"] = *c.rerank_score;
        arr.push_back(j);
    }
    return arr;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

RunArtifacts run_case(const CaseDocument& doc, PipelineRuntime& rt) {
    const RunConfig& cfg = rt.config;
    RunArtifacts artifacts;
    artifacts.run_dir = cfg.runs_dir / doc.id;
    fs::create_directories(artifacts.run_dir);

    if (cfg.toggles.court_sim) {
        artifacts.transcript = stage("court_debate", [&] {
            DebateBackends backends{&rt.backend_for("plaintiff"), &rt.backend_for("defendant")};
            DebateConfig dc;
            dc.model_id = cfg.model_id;
            dc.max_tokens_per_turn = cfg.max_tokens;
            return run_debate(doc, rt.templates, backends, cfg.rounds, dc);
        });
        write_file(artifacts.run_dir / "transcript.json",
                   transcript_to_json(*artifacts.transcript).dump(2) + "\n");
        write_file(artifacts.run_dir / "transcript.txt",
                   render_transcript(*artifacts.transcript));
    }

    if (cfg.toggles.knowledge_base) {
        stage("retrieval", [&] {
            if (!rt.index || !rt.kb) throw Error("knowledge base and index are not loaded");
            CaseType predicted =
                predict_case_type(doc.determined_facts, rt.backend_for("assistant"),
                                  rt.templates, cfg.model_id);
            artifacts.bundle.predicted_case_type = predicted;

            const KnowledgeBase& kb = *rt.kb;
            DocFilter filter = [&kb, predicted](const std::string& doc_id) {
                auto it = kb.documents.find(doc_id);
                return it != kb.documents.end() && it->second.case_type &&
                       *it->second.case_type == predicted;
            };
            artifacts.rough_candidates =
                rough_retrieve(*rt.index, doc.determined_facts, cfg.retrieval.k, filter);
            if (artifacts.rough_candidates.empty()) return;

            const auto doc_text = [&kb, &cfg](const std::string& doc_id) {
                const KbDocument& d = kb.documents.at(doc_id);
                if (cfg.rerank_text == "facts" && !d.facts.empty()) return d.facts;
                return d.body;
            };
            artifacts.reranked_candidates = rerank(artifacts.rough_candidates,
                                                   doc.determined_facts, *rt.embedder,
                                                   doc_text);

            const std::string best = select_precedent(artifacts.reranked_candidates);
            const KbDocument& p = kb.documents.at(best);
            artifacts.bundle.precedent = PrecedentEvidence{
                p.id, p.title, p.facts, p.analysis, p.articles_text, p.judgment_text};
            artifacts.bundle.related_articles = extract_related_articles(
                artifacts.reranked_candidates, cfg.retrieval.top_n,
                [&kb](const std::string& doc_id) {
                    return kb.documents.at(doc_id).cited_articles;
                });
        });
    }

    if (cfg.toggles.web_search) {
        stage("web_research", [&] {
            const std::string query =
                doc.cause_of_action + " " + to_string(doc.case_type) + " case public opinion";
            WebResearchOptions options;
            options.model_id = cfg.model_id;
            artifacts.bundle.web = web_research(query, rt.search.get(),
                                                &rt.backend_for("assistant"), rt.templates,
                                                options);
        });
    } else {
        artifacts.bundle.web.unavailable = true;
    }

    write_file(artifacts.run_dir / "retrieval_bundle.json",
               bundle_to_json(artifacts.bundle).dump(2) + "\n");

    artifacts.preliminary = stage("preliminary_judgment", [&] {
        DecisionConfig dc{cfg.model_id, 0.0, cfg.max_tokens};
        const CourtTranscript* transcript =
            artifacts.transcript ? &*artifacts.transcript : nullptr;
        return preliminary_judgment(doc, transcript, rt.backend_for("judge"), rt.templates,
                                    dc);
    });
    write_file(artifacts.run_dir / "decision_preliminary.json",
               draft_to_json(artifacts.preliminary).dump(2) + "\n");

    artifacts.final_decision = stage("refine_judgment", [&] {
        DecisionConfig dc{cfg.model_id, 0.0, cfg.max_tokens};
        return refine_judgment(artifacts.preliminary, artifacts.bundle,
                               rt.backend_for("refiner"), rt.templates, dc, doc.case_type);
    });
    write_file(artifacts.run_dir / "decision_final.json",
               draft_to_json(artifacts.final_decision).dump(2) + "\n");

    json meta;
    meta["case_id"] = doc.id;
    meta["config_hash"] = config_hash(cfg);
    meta["seed"] = cfg.seed;
    meta["rounds"] = cfg.rounds;
    meta["retrieval"] = {{"k", cfg.retrieval.k}, {"top_n", cfg.retrieval.top_n}};
    meta["toggles"] = {{"court_sim", cfg.toggles.court_sim},
                       {"knowledge_base", cfg.toggles.knowledge_base},
                       {"web_search", cfg.toggles.web_search}};
    meta["model_id"] = cfg.model_id;
    json backend_kinds = json::object();
    for (const auto& [role, backend] : rt.backends) backend_kinds[role] = backend->kind();
    meta["backends"] = backend_kinds;
    json templates = json::object();
    for (const auto& [id, version] : rt.templates.versions()) templates[id] = version;
    meta["templates"] = templates;
    if (!artifacts.rough_candidates.empty()) {
        meta["rough_candidates"] = candidates_to_json(artifacts.rough_candidates);
        meta["reranked_candidates"] = candidates_to_json(artifacts.reranked_candidates);
    }
    write_file(artifacts.run_dir / "run_meta.json", meta.dump(2) + "\n");

    return artifacts;
}

std::vector<fs::path> run_batch(const std::vector<CaseDocument>& docs, PipelineRuntime& rt) {
    std::vector<fs::path> dirs(docs.size());
    const int jobs = std::max(1, rt.config.jobs);
    if (jobs == 1 || docs.size() <= 1) {
        for (std::size_t i = 0; i < docs.size(); ++i) dirs[i] = run_case(docs[i], rt).run_dir;
        return dirs;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(docs.size());
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < docs.size(); i = next.fetch_add(1)) {
                try {
                    dirs[i] = run_case(docs[i], rt).run_dir;
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) {
            throw StageError("run_batch", "case '" + docs[i].id + "': " + errors[i]);
        }
    }
    return dirs;
}

// ---------------------------------------------------------------------------
// Command-level operations
// ---------------------------------------------------------------------------

IngestSummary cmd_ingest(const fs::path& corpus_dir, const fs::path& kb_dir,
                         const IngestConfig& config) {
    IngestDiagnostics diag;
    KnowledgeBase kb = ingest_corpus(corpus_dir, config, &diag);
    save_kb(kb, kb_dir);
    IngestSummary summary;
    summary.per_kind = kb.manifest.per_kind;
    summary.file_errors = diag.errors;
    summary.kb_version = kb.version;
    return summary;
}

void cmd_index(const fs::path& kb_dir, const Bm25Params& params) {
    KnowledgeBase kb = load_kb(kb_dir);
    IndexBuildOptions options;
    options.params = params;
    Bm25Index index = build_index(kb, options);
    save_index(index, kb_dir / "index");
}

std::vector<CaseDocument> load_cases_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read case file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();

    std::vector<CaseDocument> docs;
    if (path.extension() == ".jsonl") {
        std::istringstream lines(content);
        std::string line;
        int lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                docs.push_back(parse_case_file(line));
            } catch (const Error& e) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " +
                                  e.what());
            }
        }
    } else {
        docs.push_back(parse_case_file(content));
    }
    return docs;
}

EvaluationReport cmd_evaluate(const std::vector<fs::path>& run_dirs,
                              const std::map<std::string, CaseDocument>& cases,
                              ChatBackend* judge, const TemplateRegistry& templates,
                              const std::vector<HumanAnnotation>& annotations,
                              std::vector<std::string>* warnings) {
    std::vector<PerCaseEval> evals;
    const auto warn = [&](const std::string& message) {
        if (warnings) warnings->push_back(message);
    };
    for (const auto& dir : run_dirs) {
        const fs::path decision_path = dir / "decision_final.json";
        std::ifstream in(decision_path, std::ios::binary);
        if (!in) {
            warn("skipping " + dir.string() + ": no decision_final.json");
            continue;
        }
        json dj;
        try {
            in >> dj;
        } catch (const nlohmann::json::exception& e) {
            warn("skipping " + dir.string() + ": " + e.what());
            continue;
        }
        std::string case_id;
        {
            std::ifstream meta_in(dir / "run_meta.json", std::ios::binary);
            if (meta_in) {
                try {
                    json meta;
                    meta_in >> meta;
                    case_id = meta.value("case_id", "");
                } catch (const nlohmann::json::exception&) {
                }
            }
        }
        if (case_id.empty()) case_id = dir.filename().string();
        auto it = cases.find(case_id);
        if (it == cases.end()) {
            warn("skipping " + dir.string() + ": no reference case '" + case_id + "'");
            continue;
        }
        if (!it->second.reference) {
            warn("skipping " + dir.string() + ": case '" + case_id + "' has no reference");
            continue;
        }
        try {
            DraftDecision draft = draft_from_json(dj, it->second.case_type);
            evals.push_back(
                evaluate_case(it->second, draft.parsed, judge, templates, ""));
        } catch (const Error& e) {
            warn("skipping " + dir.string() + ": " + e.what());
        }
    }
    return aggregate_report(evals, annotations);
}

}  // namespace courtpipe
