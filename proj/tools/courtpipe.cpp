#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "courtpipe/pipeline.hpp"

namespace fs = std::filesystem;
using namespace courtpipe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStageFailure = 2;

std::string read_file_or_die(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
}

std::map<std::string, CaseDocument> load_reference_cases(
    const std::vector<std::string>& case_files, const std::string& cases_dir) {
    std::map<std::string, CaseDocument> cases;
    const auto add_all = [&](const fs::path& file) {
        for (auto& doc : load_cases_file(file)) cases[doc.id] = std::move(doc);
    };
    for (const auto& f : case_files) add_all(f);
    if (!cases_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(cases_dir)) {
            if (!entry.is_regular_file()) continue;
            auto ext = entry.path().extension();
            if (ext == ".json" || ext == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) add_all(f);
    }
    return cases;
}

void apply_backend_flags(RunConfig& config, const std::vector<std::string>& specs) {
    for (const auto& spec : specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw Error("--backend expects role=spec, got '" + spec + "'");
        }
        config.backends[spec.substr(0, eq)] = spec.substr(eq + 1);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"courtpipe: court-debate simulation, precedent retrieval and "
                 "judgment evaluation pipeline"};
    app.require_subcommand(1);

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "Build the knowledge base from a corpus");
    std::string ingest_corpus, ingest_kb = "kb";
    int ingest_cap = 100;
    bool include_ineffective = false;
    ingest->add_option("--corpus", ingest_corpus, "Corpus directory")->required();
    ingest->add_option("--kb", ingest_kb, "Knowledge-base output directory");
    ingest->add_option("--cap", ingest_cap, "Per-cause precedent ceiling (0 disables)");
    ingest->add_flag("--include-ineffective", include_ineffective,
                     "Keep statutes flagged as no longer effective");

    // --- index ---
    auto* index_cmd = app.add_subcommand("index", "Build the retrieval index");
    std::string index_kb = "kb";
    double index_k1 = 1.2, index_b = 0.75;
    index_cmd->add_option("--kb", index_kb, "Knowledge-base directory");
    index_cmd->add_option("--k1", index_k1, "BM25 k1");
    index_cmd->add_option("--b", index_b, "BM25 b");

    // --- run ---
    auto* run = app.add_subcommand("run", "Run the pipeline over cases");
    std::vector<std::string> run_cases;
    std::string run_config_file;
    std::vector<std::string> run_backends;
    std::string run_kb, run_templates, run_cache, run_out, run_model, run_search;
    int run_rounds = -1, run_k = -1, run_top_n = -1, run_jobs = -1;
    long long run_seed = -1;
    bool no_court_sim = false, no_knowledge_base = false, no_web_search = false;
    run->add_option("--case,--cases", run_cases, "Case file (.json) or batch (.jsonl)")
        ->required();
    run->add_option("--config", run_config_file, "Config file (key = value lines)");
    run->add_option("--backend", run_backends, "role=spec backend override (repeatable)");
    run->add_option("--kb", run_kb, "Knowledge-base directory");
    run->add_option("--templates", run_templates, "Prompt template directory");
    run->add_option("--cache", run_cache, "Response cache directory");
    run->add_option("--out", run_out, "Run output directory");
    run->add_option("--model", run_model, "Model id sent to backends");
    run->add_option("--search-provider", run_search, "Search provider spec");
    run->add_option("--rounds", run_rounds, "Debate rounds (default 2)");
    run->add_option("--k", run_k, "Rough-retrieval depth (default 100)");
    run->add_option("--top-n", run_top_n, "Precedents mined for articles (default 5)");
    run->add_option("--jobs", run_jobs, "Concurrent cases");
    run->add_option("--seed", run_seed, "Run seed recorded in metadata");
    run->add_flag("--no-court-sim", no_court_sim, "Disable the court-debate channel");
    run->add_flag("--no-knowledge-base", no_knowledge_base, "Disable the retrieval channel");
    run->add_flag("--no-web-search", no_web_search, "Disable the web channel");

    // --- evaluate ---
    auto* evaluate = app.add_subcommand("evaluate", "Score run directories against references");
    std::vector<std::string> eval_runs, eval_case_files;
    std::string eval_runs_root, eval_cases_dir, eval_annotations, eval_out;
    std::string eval_judge, eval_templates = "templates";
    evaluate->add_option("--run", eval_runs, "Run directory (repeatable)");
    evaluate->add_option("--runs-root", eval_runs_root, "Directory holding run directories");
    evaluate->add_option("--cases", eval_case_files, "Reference case file (repeatable)");
    evaluate->add_option("--cases-dir", eval_cases_dir, "Directory of reference case files");
    evaluate->add_option("--annotations", eval_annotations, "Human annotations (.jsonl)");
    evaluate->add_option("--judge-backend", eval_judge,
                         "Backend spec for the key-point judge (default: fallback matcher)");
    evaluate->add_option("--templates", eval_templates, "Prompt template directory");
    evaluate->add_option("--out", eval_out, "Write the report JSON here");

    // --- report ---
    auto* report_cmd = app.add_subcommand("report", "Render a stored report as a table");
    std::string report_in;
    report_cmd->add_option("--in", report_in, "Report JSON file")->required();

    // --- stats ---
    auto* stats_cmd = app.add_subcommand("stats", "Knowledge-base statistics");
    std::string stats_kb = "kb";
    stats_cmd->add_option("--kb", stats_kb, "Knowledge-base directory");

    // --- retrieve ---
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Two-stage retrieval for one case");
    std::string retr_case, retr_kb = "kb", retr_templates = "templates", retr_assistant;
    int retr_k = 100, retr_top_n = 5;
    retrieve_cmd->add_option("--case", retr_case, "Case file")->required();
    retrieve_cmd->add_option("--kb", retr_kb, "Knowledge-base directory");
    retrieve_cmd->add_option("--k", retr_k, "Rough-retrieval depth");
    retrieve_cmd->add_option("--top-n", retr_top_n, "Precedents mined for articles");
    retrieve_cmd->add_option("--templates", retr_templates, "Prompt template directory");
    retrieve_cmd->add_option("--assistant", retr_assistant,
                             "Backend spec for type prediction (default: case file's type)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) {
            IngestConfig config;
            config.precedent_cap = ingest_cap;
            config.exclude_ineffective = !include_ineffective;
            auto summary = cmd_ingest(ingest_corpus, ingest_kb, config);
            for (const auto& [kind, stats] : summary.per_kind) {
                std::cout << to_string(kind) << ": " << stats.num << " documents, "
                          << stats.tokens << " tokens\n";
            }
            for (const auto& err : summary.file_errors) {
                std::cerr << "warning: " << err.file << ": " << err.message << "\n";
            }
            std::cout << "kb version " << summary.kb_version << " written to " << ingest_kb
                      << "\n";
        } else if (*index_cmd) {
            cmd_index(index_kb, Bm25Params{index_k1, index_b});
            std::cout << "index written to " << (fs::path(index_kb) / "index").string()
                      << "\n";
        } else if (*run) {
            RunConfig config;
            if (!run_config_file.empty()) config = load_config_file(run_config_file);
            if (!run_kb.empty()) config.kb_dir = run_kb;
            if (!run_templates.empty()) config.templates_dir = run_templates;
            if (!run_cache.empty()) config.cache_dir = run_cache;
            if (!run_out.empty()) config.runs_dir = run_out;
            if (!run_model.empty()) config.model_id = run_model;
            if (!run_search.empty()) config.search_provider = run_search;
            if (run_rounds >= 0) config.rounds = run_rounds;
            if (run_k >= 0) config.retrieval.k = run_k;
            if (run_top_n >= 0) config.retrieval.top_n = run_top_n;
            if (run_jobs >= 0) config.jobs = run_jobs;
            if (run_seed >= 0) config.seed = run_seed;
            if (no_court_sim) config.toggles.court_sim = false;
            if (no_knowledge_base) config.toggles.knowledge_base = false;
            if (no_web_search) config.toggles.web_search = false;
            apply_backend_flags(config, run_backends);

            std::vector<CaseDocument> docs;
            for (const auto& file : run_cases) {
                for (auto& doc : load_cases_file(file)) docs.push_back(std::move(doc));
            }
            PipelineRuntime rt = build_runtime(std::move(config));
            auto dirs = run_batch(docs, rt);
            for (const auto& dir : dirs) std::cout << dir.string() << "\n";
        } else if (*evaluate) {
            std::vector<fs::path> run_dirs;
            for (const auto& r : eval_runs) run_dirs.emplace_back(r);
            if (!eval_runs_root.empty()) {
                std::vector<fs::path> found;
                for (const auto& entry : fs::directory_iterator(eval_runs_root)) {
                    if (entry.is_directory()) found.push_back(entry.path());
                }
                std::sort(found.begin(), found.end());
                run_dirs.insert(run_dirs.end(), found.begin(), found.end());
            }
            auto cases = load_reference_cases(eval_case_files, eval_cases_dir);
            std::vector<HumanAnnotation> annotations;
            if (!eval_annotations.empty()) {
                annotations = load_annotations_jsonl(read_file_or_die(eval_annotations));
            }
            TemplateRegistry templates = TemplateRegistry::load_dir(eval_templates);
            std::shared_ptr<ChatBackend> judge;
            if (!eval_judge.empty()) judge = make_backend(eval_judge, "");
            std::vector<std::string> warnings;
            EvaluationReport report = cmd_evaluate(run_dirs, cases, judge.get(), templates,
                                                   annotations, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            if (!eval_out.empty()) {
                write_file(eval_out, report_to_json(report).dump(2) + "\n");
            }
            std::cout << report_table(report);
        } else if (*report_cmd) {
            json j = json::parse(read_file_or_die(report_in));
            std::cout << report_table(report_from_json(j));
        } else if (*stats_cmd) {
            KnowledgeBase kb = load_kb(stats_kb);
            std::cout << stats_table(corpus_stats(kb));
        } else if (*retrieve_cmd) {
            CaseDocument doc = parse_case_file(read_file_or_die(retr_case));
            KnowledgeBase kb = load_kb(retr_kb);
            const fs::path index_dir = fs::path(retr_kb) / "index";
            Bm25Index index;
            if (fs::exists(index_dir / "params.json")) {
                index = load_index(index_dir);
                if (index.kb_version != kb.version) index = build_index(kb);
            } else {
                index = build_index(kb);
            }
            CaseType type = doc.case_type;
            if (!retr_assistant.empty()) {
                auto backend = make_backend(retr_assistant, "");
                TemplateRegistry templates = TemplateRegistry::load_dir(retr_templates);
                type = predict_case_type(doc.determined_facts, *backend, templates, "cli");
            }
            DocFilter filter = [&kb, type](const std::string& doc_id) {
                auto it = kb.documents.find(doc_id);
                return it != kb.documents.end() && it->second.case_type &&
                       *it->second.case_type == type;
            };
            auto rough = rough_retrieve(index, doc.determined_facts, retr_k, filter);
            json out;
            out["predicted_case_type"] = to_string(type);
            json rough_json = json::array();
            for (const auto& c : rough) {
                rough_json.push_back({{"rank", c.rank},
                                      {"doc_id", c.doc_id},
                                      {"score", c.rough_score}});
            }
            out["rough"] = rough_json;
            if (!rough.empty()) {
                HashedTfidfEmbedder embedder(index);
                auto reranked = rerank(rough, doc.determined_facts, embedder,
                                       [&kb](const std::string& doc_id) {
                                           const KbDocument& d = kb.documents.at(doc_id);
                                           return d.facts.empty() ? d.body : d.facts;
                                       });
                json rr = json::array();
                for (const auto& c : reranked) {
                    rr.push_back({{"rank", c.rank},
                                  {"doc_id", c.doc_id},
                                  {"rerank_score", *c.rerank_score},
                                  {"rough_score", c.rough_score}});
                }
                out["reranked"] = rr;
                out["precedent_id"] = select_precedent(reranked);
                json arts = json::array();
                for (const auto& ref : extract_related_articles(
                         reranked, retr_top_n, [&kb](const std::string& doc_id) {
                             return kb.documents.at(doc_id).cited_articles;
                         })) {
                    arts.push_back(to_citation_string(ref));
                }
                out["related_articles"] = arts;
            }
            std::cout << out.dump(2) << "\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    }
    return kExitOk;
}
