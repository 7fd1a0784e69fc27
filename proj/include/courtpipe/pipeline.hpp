#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "courtpipe/adjudication.hpp"
#include "courtpipe/evaluation.hpp"

namespace courtpipe {

struct RetrievalRunConfig {
    int k = 100;      // rough-retrieval depth
    int top_n = 5;    // precedents mined for related articles
};

/// Ablation switches; each removes exactly one evidence channel from the
/// prompts, never the stages around it.
struct Toggles {
    bool court_sim = true;
    bool knowledge_base = true;
    bool web_search = true;
};

struct RunConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path kb_dir = "kb";
    std::filesystem::path cache_dir;  // empty disables the response cache
    std::filesystem::path templates_dir = "templates";
    std::filesystem::path runs_dir = "runs";

    // role -> backend spec ("scripted:<path>", "http", "http:<base_url>").
    // Roles: judge, plaintiff, defendant, assistant, refiner, judge_evaluator;
    // "default" backs any unset role.
    std::map<std::string, std::string> backends;
    std::string search_provider;  // "", "scripted:<path>" or "http:<base_url>"

    std::string model_id = "default-model";
    int rounds = 2;
    int max_tokens = 1024;
    RetrievalRunConfig retrieval;
    Toggles toggles;
    long long seed = 0;
    int jobs = 1;
    int embed_dimension = 384;
    std::string rerank_text = "facts";  // "facts" (fall back to body) or "body"
};

/// Parses a flat key = value config file ('#' comments, [section] headers
/// prefix the keys that follow). Unknown keys raise Error.
RunConfig load_config_file(const std::filesystem::path& path);
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

json config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

/// Everything shared across cases in one batch: templates, the knowledge base
/// and index (when retrieval is on), backends per role, the search provider.
struct PipelineRuntime {
    RunConfig config;
    TemplateRegistry templates;
    std::optional<KnowledgeBase> kb;
    std::optional<Bm25Index> index;
    std::unique_ptr<Embedder> embedder;
    std::map<std::string, std::shared_ptr<ChatBackend>> backends;
    std::unique_ptr<SearchProvider> search;

    ChatBackend& backend_for(const std::string& role) const;
};

/// Loads templates, backends, and (when the knowledge-base toggle is on) the
/// persisted KB; the index is rebuilt and re-saved when its recorded KB
/// version does not match.
PipelineRuntime build_runtime(RunConfig config);

std::shared_ptr<ChatBackend> make_backend(const std::string& spec,
                                          const std::filesystem::path& cache_dir);

struct RunArtifacts {
    std::filesystem::path run_dir;
    std::optional<CourtTranscript> transcript;
    RetrievalBundle bundle;
    DraftDecision preliminary;
    DraftDecision final_decision;
    std::vector<RankedCandidate> rough_candidates;
    std::vector<RankedCandidate> reranked_candidates;
};

/// End-to-end pipeline for one case; artifacts are persisted under
/// runs_dir/<case_id>/ and the directory is self-describing. Failures carry
/// the stage name via StageError.
RunArtifacts run_case(const CaseDocument& doc, PipelineRuntime& rt);

/// run_case over many cases with config.jobs workers. Returns the run
/// directories in input order; a failed case aborts the batch.
std::vector<std::filesystem::path> run_batch(const std::vector<CaseDocument>& docs,
                                             PipelineRuntime& rt);

struct IngestSummary {
    std::map<DocKind, KindStats> per_kind;
    std::vector<IngestDiagnostics::FileError> file_errors;
    std::string kb_version;
};

IngestSummary cmd_ingest(const std::filesystem::path& corpus_dir,
                         const std::filesystem::path& kb_dir, const IngestConfig& config = {});

void cmd_index(const std::filesystem::path& kb_dir, const Bm25Params& params = {});

/// Loads final decisions from run directories, pairs them with reference
/// cases by id, and aggregates the report. Runs without a usable reference
/// are skipped with a warning collected into `warnings`.
EvaluationReport cmd_evaluate(const std::vector<std::filesystem::path>& run_dirs,
                              const std::map<std::string, CaseDocument>& cases,
                              ChatBackend* judge, const TemplateRegistry& templates,
                              const std::vector<HumanAnnotation>& annotations,
                              std::vector<std::string>* warnings = nullptr);

/// Reads one case per line (JSONL) or a whole-file JSON object.
std::vector<CaseDocument> load_cases_file(const std::filesystem::path& path);

}  // namespace courtpipe
