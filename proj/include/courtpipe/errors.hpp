#pragma once

#include <stdexcept>
#include <string>

namespace courtpipe {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input bytes could not be parsed at all (bad JSON, bad encoding, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A structurally valid document is missing or violating a required field.
class SchemaError : public Error {
public:
    explicit SchemaError(std::string field, const std::string& detail = "")
        : Error("schema error: " + field + (detail.empty() ? "" : " (" + detail + ")")),
          field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Query tokenized to nothing; there is nothing to score.
class EmptyQuery : public Error {
public:
    EmptyQuery() : Error("query produced no tokens") {}
};

class EmptyCandidates : public Error {
public:
    EmptyCandidates() : Error("candidate list is empty") {}
};

class EmbedderError : public Error {
public:
    using Error::Error;
};

/// Chat backend failure. `kind` is a short machine-readable tag
/// ("http_status_429", "connect", "invalid_reply", ...).
class BackendError : public Error {
public:
    BackendError(std::string kind, int attempts, const std::string& detail = "")
        : Error("backend error [" + kind + "] after " + std::to_string(attempts) +
                " attempt(s)" + (detail.empty() ? "" : ": " + detail)),
          kind_(std::move(kind)),
          attempts_(attempts) {}

    const std::string& kind() const { return kind_; }
    int attempts() const { return attempts_; }

private:
    std::string kind_;
    int attempts_;
};

/// The scripted mock has no entry for a request. This is a test-authoring
/// error, not a runtime condition.
class ScriptMiss : public Error {
public:
    explicit ScriptMiss(const std::string& request_hash)
        : Error("scripted mock has no reply for request " + request_hash) {}
};

/// A model reply could not be parsed into the expected structure.
class ParseError : public Error {
public:
    explicit ParseError(std::string missing, const std::string& detail = "")
        : Error("parse error: missing section '" + missing + "'" +
                (detail.empty() ? "" : ": " + detail)),
          missing_(std::move(missing)) {}

    const std::string& missing_section() const { return missing_; }

private:
    std::string missing_;
};

/// The judge backend reply lacks the required counters.
class JudgeParseError : public Error {
public:
    using Error::Error;
};

/// Search provider failure (network, bad response). Never fatal to a run.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// An operation was called out of order (e.g. refining a Final draft).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Wraps any error raised inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& detail)
        : Error("stage '" + stage + "' failed: " + detail), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace courtpipe
