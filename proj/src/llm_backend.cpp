#include "courtpipe/llm_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "courtpipe/errors.hpp"
#include "courtpipe/hash.hpp"
#include "courtpipe/text.hpp"

namespace fs = std::filesystem;

namespace courtpipe {

std::string to_string(ChatRole r) {
    switch (r) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        default: return "assistant";
    }
}

ChatRole chat_role_from_string(std::string_view s) {
    std::string v = text::to_lower_ascii(s);
    if (v == "system") return ChatRole::System;
    if (v == "user") return ChatRole::User;
    if (v == "assistant") return ChatRole::Assistant;
    throw SchemaError("role", "unknown chat role '" + std::string(s) + "'");
}

json chat_request_to_json(const ChatRequest& r) {
    json j;
    json msgs = json::array();
    for (const auto& m : r.messages) {
        json mj;
        mj["role"] = to_string(m.role);
        mj["content"] = m.content;
        msgs.push_back(mj);
    }
    j["messages"] = msgs;
    j["model_id"] = r.model_id;
    j["temperature"] = r.temperature;
    j["max_tokens"] = r.max_tokens;
    j["request_hash"] = r.request_hash();
    return j;
}

ChatRequest chat_request_from_json(const json& j) {
    ChatRequest r;
    for (const auto& mj : j.at("messages")) {
        r.messages.push_back({chat_role_from_string(mj.at("role").get<std::string>()),
                              mj.at("content").get<std::string>()});
    }
    r.model_id = j.at("model_id").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    return r;
}

std::string ChatRequest::request_hash() const {
    json j;
    json msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back(json::array({to_string(m.role), m.content}));
    }
    j["messages"] = msgs;
    j["model_id"] = model_id;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    return content_digest(j.dump());
}

std::string complete(ChatBackend& backend, const ChatRequest& request) {
    if (request.messages.empty()) {
        throw BackendError("empty_request", 0, "request has no messages");
    }
    std::string reply = backend.complete(request);
    if (reply.empty()) {
        throw BackendError("empty_reply", 1, "backend returned an empty completion");
    }
    return reply;
}

// ---------------------------------------------------------------------------
// HTTP adapter
// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        const char* env = std::getenv(kEnvBaseUrl);
        if (env) config_.base_url = env;
    }
    if (config_.base_url.empty()) {
        throw BackendError("config", 0,
                           std::string("no base URL configured (set ") + kEnvBaseUrl + ")");
    }
}

namespace {

// Splits "http://host:port/prefix" into client origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base) {
    auto scheme_end = base.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base.find('/', host_start);
    if (path_start == std::string::npos) return {base, ""};
    std::string prefix = base.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base.substr(0, path_start), prefix};
}

}  // namespace

std::string HttpChatBackend::complete(const ChatRequest& request) {
    auto [origin, prefix] = split_base_url(config_.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = request.model_id;
    json msgs = json::array();
    for (const auto& m : request.messages) {
        json mj;
        mj["role"] = to_string(m.role);
        mj["content"] = m.content;
        msgs.push_back(mj);
    }
    body["messages"] = msgs;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();
    const std::string path = prefix + "/chat/completions";

    std::string last_kind = "connect";
    int backoff = config_.backoff_ms;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_kind = "connect";
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_kind = "http_status_" + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("http_status_" + std::to_string(res->status), attempt,
                               res->body.substr(0, 200));
        }
        try {
            json reply = json::parse(res->body);
            std::string content =
                reply.at("choices").at(0).at("message").at("content").get<std::string>();
            if (content.empty()) {
                throw BackendError("empty_reply", attempt, "completion content is empty");
            }
            return content;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("invalid_reply", attempt, e.what());
        }
    }
    throw BackendError(last_kind, config_.max_attempts, "retries exhausted");
}

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

ScriptedMockBackend ScriptedMockBackend::from_file(const fs::path& script) {
    std::ifstream in(script, std::ios::binary);
    if (!in) throw IoError("cannot read mock script " + script.string());
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("mock script " + script.string() + ": " + e.what());
    }
    ScriptedMockBackend mock;
    if (j.contains("rules")) {
        for (const auto& rule : j.at("rules")) {
            const std::string reply = rule.at("reply").get<std::string>();
            if (rule.contains("hash")) {
                mock.add_hash_reply(rule.at("hash").get<std::string>(), reply);
            } else if (rule.contains("contains")) {
                mock.add_contains_reply(rule.at("contains").get<std::string>(), reply);
            } else {
                throw FormatError("mock rule needs a 'hash' or 'contains' matcher");
            }
        }
    }
    if (j.contains("default")) mock.set_default_reply(j.at("default").get<std::string>());
    return mock;
}

void ScriptedMockBackend::add_hash_reply(std::string request_hash, std::string reply) {
    rules_.push_back({true, std::move(request_hash), std::move(reply)});
}

void ScriptedMockBackend::add_contains_reply(std::string needle, std::string reply) {
    rules_.push_back({false, std::move(needle), std::move(reply)});
}

void ScriptedMockBackend::set_default_reply(std::string reply) {
    default_reply_ = std::move(reply);
}

std::string ScriptedMockBackend::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        captured_.push_back(request);
    }
    const std::string hash = request.request_hash();
    std::string all_content;
    for (const auto& m : request.messages) {
        all_content += m.content;
        all_content += "\n";
    }
    for (const auto& rule : rules_) {
        if (rule.by_hash ? (hash == rule.pattern)
                         : (all_content.find(rule.pattern) != std::string::npos)) {
            return rule.reply;
        }
    }
    if (default_reply_) return *default_reply_;
    throw ScriptMiss(hash);
}

std::vector<ChatRequest> ScriptedMockBackend::captured() const {
    std::lock_guard<std::mutex> lock(mu_);
    return captured_;
}

void ScriptedMockBackend::clear_captured() {
    std::lock_guard<std::mutex> lock(mu_);
    captured_.clear();
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

namespace {

fs::path cache_entry_path(const fs::path& cache_dir, const std::string& hash) {
    return cache_dir / hash.substr(0, 2) / (hash + ".json");
}

std::optional<std::string> try_load_cached_reply(const fs::path& entry) {
    std::ifstream in(entry, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        json j;
        in >> j;
        if (!j.contains("reply") || !j.at("reply").is_string()) return std::nullopt;
        std::string reply = j.at("reply").get<std::string>();
        if (reply.empty()) return std::nullopt;
        return reply;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // corrupted entry; recompute and rewrite
    }
}

void try_store_cached_reply(const fs::path& entry, const ChatRequest& request,
                            const std::string& reply) {
    try {
        fs::create_directories(entry.parent_path());
        json j;
        j["request"] = chat_request_to_json(request);
        j["reply"] = reply;
        j["timestamp"] = static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
        // Write-then-rename keeps concurrent writers from exposing torn files.
        fs::path tmp = entry;
        tmp += ".tmp." + std::to_string(
                             std::hash<std::thread::id>{}(std::this_thread::get_id()));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) return;
            out << j.dump(2) << "\n";
        }
        fs::rename(tmp, entry);
    } catch (const std::exception&) {
        // Cache IO problems are non-fatal; operate uncached.
    }
}

}  // namespace

std::string cached_complete(const fs::path& cache_dir, ChatBackend& backend,
                            const ChatRequest& request) {
    const fs::path entry = cache_entry_path(cache_dir, request.request_hash());
    if (auto hit = try_load_cached_reply(entry)) return *hit;
    std::string reply = complete(backend, request);
    try_store_cached_reply(entry, request, reply);
    return reply;
}

CachedBackend::CachedBackend(fs::path cache_dir, std::shared_ptr<ChatBackend> inner)
    : cache_dir_(std::move(cache_dir)), inner_(std::move(inner)) {}

std::string CachedBackend::complete(const ChatRequest& request) {
    return cached_complete(cache_dir_, *inner_, request);
}

}  // namespace courtpipe
