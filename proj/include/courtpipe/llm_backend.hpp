#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "courtpipe/json_util.hpp"

namespace courtpipe {

inline constexpr const char* kEnvBaseUrl = "COURTPIPE_LLM_BASE_URL";
inline constexpr const char* kEnvApiKey = "COURTPIPE_LLM_API_KEY";
inline constexpr const char* kEnvModel = "COURTPIPE_LLM_MODEL";

enum class ChatRole { System, User, Assistant };

std::string to_string(ChatRole r);
ChatRole chat_role_from_string(std::string_view s);

struct ChatMessage {
    ChatRole role;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 1024;

    /// Digest of the fields above over a canonical serialization; the cache
    /// key. Stable under serialize/parse round-trips.
    std::string request_hash() const;
};

json chat_request_to_json(const ChatRequest& r);
ChatRequest chat_request_from_json(const json& j);

/// Chat-completion contract every agent speaks. Implementations must be safe
/// for concurrent complete() calls.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string kind() const = 0;
};

/// Validates the request and the reply (both non-empty) around backend
/// dispatch. All pipeline call sites go through here.
std::string complete(ChatBackend& backend, const ChatRequest& request);

struct HttpBackendConfig {
    std::string base_url;                       // e.g. http://host:port/v1
    std::string api_key_env = kEnvApiKey;       // name of the env var, not the key
    int max_attempts = 4;
    int backoff_ms = 250;                       // doubled after each failure
    int timeout_seconds = 60;
};

/// Speaks the JSON chat-completion wire protocol
/// (POST {base_url}/chat/completions) with exponential-backoff retries on
/// 429/5xx/transport failures.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);
    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "http"; }

private:
    HttpBackendConfig config_;
};

/// Deterministic mock: replies are a pure function of the request. Rules are
/// tried in order (exact request-hash match or substring-of-prompt match);
/// a request no rule covers raises ScriptMiss unless a default reply is set.
/// Every request is captured for test inspection.
class ScriptedMockBackend : public ChatBackend {
public:
    ScriptedMockBackend() = default;
    // Moves happen during setup, before the mock is shared across threads.
    ScriptedMockBackend(ScriptedMockBackend&& other) noexcept
        : rules_(std::move(other.rules_)),
          default_reply_(std::move(other.default_reply_)),
          captured_(std::move(other.captured_)) {}

    static ScriptedMockBackend from_file(const std::filesystem::path& script);

    void add_hash_reply(std::string request_hash, std::string reply);
    void add_contains_reply(std::string needle, std::string reply);
    void set_default_reply(std::string reply);

    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "scripted_mock"; }

    std::vector<ChatRequest> captured() const;
    void clear_captured();

private:
    struct Rule {
        bool by_hash;
        std::string pattern;
        std::string reply;
    };
    std::vector<Rule> rules_;
    std::optional<std::string> default_reply_;
    mutable std::mutex mu_;
    std::vector<ChatRequest> captured_;
};

/// Persistent response cache in front of any backend. Hit -> stored reply,
/// no inner call; miss -> delegate and store. Cache IO problems degrade to
/// uncached operation; corrupted entries are recomputed and rewritten.
class CachedBackend : public ChatBackend {
public:
    CachedBackend(std::filesystem::path cache_dir, std::shared_ptr<ChatBackend> inner);
    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "cached+" + inner_->kind(); }

private:
    std::filesystem::path cache_dir_;
    std::shared_ptr<ChatBackend> inner_;
};

/// One cache round-trip: returns the stored reply for the request hash, or
/// delegates to `backend` and stores the result under cache_dir/<h2>/<hash>.json.
std::string cached_complete(const std::filesystem::path& cache_dir, ChatBackend& backend,
                            const ChatRequest& request);

}  // namespace courtpipe
