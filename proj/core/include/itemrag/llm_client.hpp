#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

namespace itemrag {

struct LlmRequest {
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 512;
    std::string model;  // empty = client default
};

struct LlmUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct LlmResponse {
    std::string text;
    LlmUsage usage;
    std::int64_t latency_ms = 0;
};

/// Chat-completion client abstraction. Implementations must be shareable
/// across worker threads.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

/// One HTTP POST attempt. Exists so tests can count and script transport
/// behaviour without a network.
class HttpTransport {
public:
    struct Result {
        int status = 0;        // 0 = no response (connection-level failure)
        std::string body;
        bool timed_out = false;
        std::string error;
    };

    virtual ~HttpTransport() = default;
    virtual Result post_json(const std::string& path, const std::string& body,
                             const std::string& bearer_token, int timeout_ms) = 0;
};

struct HttpLlmConfig {
    std::string api_base;  // falls back to ITEMRAG_API_BASE
    std::string api_key;   // falls back to ITEMRAG_API_KEY
    std::string default_model = "gpt-4.1-mini";
    int max_retries = 3;
    int timeout_ms = 60'000;
    int backoff_initial_ms = 500;  // doubles per retry, capped at 8s
    unsigned max_in_flight = 8;
};

/// Client for a chat-completions-compatible endpoint. Retries 429 and 5xx
/// responses (and connection failures) with exponential backoff; 4xx auth
/// failures surface immediately. The credential never appears in errors,
/// logs, or dumps.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpLlmConfig config,
                           std::unique_ptr<HttpTransport> transport = nullptr);
    ~HttpLlmClient() override;

    LlmResponse complete(const LlmRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Deterministic in-memory client: identical requests produce byte-identical
/// responses and no network activity. Thread-safe; counts completions.
class MockLlmClient : public LlmClient {
public:
    using Rule = std::function<std::string(const LlmRequest&)>;

    /// Exact-match table keyed by the request's user text. A miss returns
    /// `fallback` when given, otherwise throws.
    static MockLlmClient scripted(std::unordered_map<std::string, std::string> responses,
                                  std::optional<std::string> fallback = std::nullopt);

    /// Derives the completion from the request via `fn`.
    static MockLlmClient rule(Rule fn);

    /// Understands the pipeline's two prompt shapes: summary prompts get a
    /// deterministic digest of the listed titles; ranking prompts are
    /// answered by predicting the successor of the last history item
    /// (descriptions ending in an integer) and ranking its candidate first.
    static MockLlmClient oracle_ranker();

    /// Loads a mock description: {"mode": "scripted"|"oracle-ranker"|
    /// "echo-upper"|"fixed", ...}.
    static MockLlmClient from_script_file(const std::filesystem::path& path);

    LlmResponse complete(const LlmRequest& request) override;

    std::int64_t call_count() const { return calls_->load(); }

private:
    explicit MockLlmClient(Rule fn);

    Rule rule_;
    std::shared_ptr<std::atomic<std::int64_t>> calls_;
};

/// Records every request/response pair of an inner client to a JSONL replay
/// file, so a live run can later be re-executed offline.
class RecordingLlmClient : public LlmClient {
public:
    RecordingLlmClient(LlmClient& inner, const std::filesystem::path& replay_path);
    ~RecordingLlmClient() override;

    LlmResponse complete(const LlmRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves completions from a replay file; unknown requests throw.
class ReplayLlmClient : public LlmClient {
public:
    explicit ReplayLlmClient(const std::filesystem::path& replay_path);

    LlmResponse complete(const LlmRequest& request) override;

private:
    std::unordered_map<std::string, LlmResponse> by_hash_;
};

/// Stable hash of a request's content; keys replay files.
std::string llm_request_hash(const LlmRequest& request);

}  // namespace itemrag
