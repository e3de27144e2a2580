#include "itemrag/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <thread>
#include <vector>

#ifdef ITEMRAG_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "itemrag/errors.hpp"
#include "itemrag/rng.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string env_or(const char* name, std::string fallback) {
    const char* value = std::getenv(name);
    return value != nullptr && *value != '\0' ? std::string(value) : std::move(fallback);
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

ordered_json request_to_json(const LlmRequest& request) {
    ordered_json j;
    j["model"] = request.model;
    j["system"] = request.system;
    j["user"] = request.user;
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    return j;
}

/// Splits "http(s)://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_base(const std::string& api_base) {
    const auto scheme_end = api_base.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("llm: api_base must start with http:// or https://");
    }
    const auto path_start = api_base.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {api_base, ""};
    std::string prefix = api_base.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {api_base.substr(0, path_start), prefix};
}

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(const std::string& api_base) {
        std::tie(origin_, prefix_) = split_base(api_base);
    }

    Result post_json(const std::string& path, const std::string& body,
                     const std::string& bearer_token, int timeout_ms) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }
        auto result = client.Post(prefix_ + path, headers, body, "application/json");
        Result out;
        if (!result) {
            const auto err = result.error();
            out.timed_out = err == httplib::Error::ConnectionTimeout;
            out.error = httplib::to_string(err);
            return out;
        }
        out.status = result->status;
        out.body = result->body;
        return out;
    }

private:
    std::string origin_;
    std::string prefix_;
};

}  // namespace

struct HttpLlmClient::Impl {
    HttpLlmConfig config;
    std::unique_ptr<HttpTransport> transport;
    std::counting_semaphore<> in_flight;

    Impl(HttpLlmConfig cfg, std::unique_ptr<HttpTransport> tp)
        : config(std::move(cfg)),
          transport(std::move(tp)),
          in_flight(static_cast<std::ptrdiff_t>(std::max(1u, config.max_in_flight))) {}
};

HttpLlmClient::HttpLlmClient(HttpLlmConfig config, std::unique_ptr<HttpTransport> transport) {
    if (config.api_base.empty()) config.api_base = env_or("ITEMRAG_API_BASE", "");
    if (config.api_key.empty()) config.api_key = env_or("ITEMRAG_API_KEY", "");
    if (config.api_base.empty()) {
        throw ConfigError("llm: no endpoint configured (set ITEMRAG_API_BASE)");
    }
    if (!transport) transport = std::make_unique<HttplibTransport>(config.api_base);
    impl_ = std::make_unique<Impl>(std::move(config), std::move(transport));
}

HttpLlmClient::~HttpLlmClient() = default;

LlmResponse HttpLlmClient::complete(const LlmRequest& request) {
    if (request.user.empty()) throw std::invalid_argument("llm: empty user message");
    const auto& cfg = impl_->config;
    if (cfg.api_key.empty()) {
        throw AuthenticationError("llm: no credential for " + cfg.api_base +
                                  " (set ITEMRAG_API_KEY)");
    }

    json body;
    body["model"] = request.model.empty() ? cfg.default_model : request.model;
    auto messages = json::array();
    if (!request.system.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    const auto started = std::chrono::steady_clock::now();
    HttpTransport::Result last;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const int shift = std::min(attempt - 1, 10);
            const int delay = std::min(cfg.backoff_initial_ms << shift, 8'000);
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        impl_->in_flight.acquire();
        try {
            last = impl_->transport->post_json("/chat/completions", payload, cfg.api_key,
                                               cfg.timeout_ms);
        } catch (...) {
            impl_->in_flight.release();
            throw;
        }
        impl_->in_flight.release();

        if (last.status == 401 || last.status == 403) {
            throw AuthenticationError("llm: " + cfg.api_base + " rejected the credential (HTTP " +
                                      std::to_string(last.status) + ")");
        }
        const bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
        if (retryable) continue;

        if (last.status != 200) {
            throw TransportError("llm: " + cfg.api_base + " returned HTTP " +
                                 std::to_string(last.status));
        }
        json parsed;
        try {
            parsed = json::parse(last.body);
        } catch (const json::exception& ex) {
            throw ResponseFormatError(std::string("llm: response is not JSON: ") + ex.what());
        }
        try {
            LlmResponse response;
            response.text = parsed.at("choices").at(0).at("message").at("content")
                                .get<std::string>();
            if (parsed.contains("usage")) {
                response.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
                response.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
            }
            response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::steady_clock::now() - started)
                                      .count();
            return response;
        } catch (const json::exception&) {
            throw ResponseFormatError("llm: response lacks choices[0].message.content");
        }
    }

    const std::string detail = last.error.empty() ? "HTTP " + std::to_string(last.status)
                                                  : last.error;
    if (last.timed_out) {
        throw TimeoutError("llm: " + cfg.api_base + " timed out after " +
                           std::to_string(1 + cfg.max_retries) + " attempts");
    }
    throw TransportError("llm: " + cfg.api_base + " failed after " +
                         std::to_string(1 + cfg.max_retries) + " attempts (" + detail + ")");
}

// --- mock client ------------------------------------------------------------

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string::size_type start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

/// Base description: the rendered text with any appended co-purchase summary
/// stripped off.
std::string base_description(const std::string& rendered) {
    const auto pos = rendered.find(" | Frequently co-purchased:");
    return pos == std::string::npos ? rendered : rendered.substr(0, pos);
}

std::optional<std::string> successor_of(const std::string& description) {
    auto end = description.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(description[end - 1]))) --end;
    if (end == description.size()) return std::nullopt;
    const auto digits = description.substr(end);
    if (digits.size() > 18) return std::nullopt;
    const auto next = std::stoull(digits) + 1;
    return description.substr(0, end) + std::to_string(next);
}

std::string oracle_summary(const std::string& prompt) {
    std::vector<std::string> titles;
    for (const auto& line : split_lines(prompt)) {
        if (line.rfind("- ", 0) == 0) titles.push_back(line.substr(2));
        if (titles.size() == 3) break;
    }
    std::string out = "Commonly bought together:";
    for (std::size_t n = 0; n < titles.size(); ++n) {
        out += (n == 0 ? " " : "; ") + titles[n];
    }
    return out;
}

std::string oracle_ranking(const std::string& prompt) {
    std::string last_history;
    std::vector<std::pair<char, std::string>> candidates;
    for (const auto& line : split_lines(prompt)) {
        if (line.size() > 2 && std::isdigit(static_cast<unsigned char>(line[0]))) {
            const auto dot = line.find(". ");
            if (dot != std::string::npos && dot <= 8) last_history = line.substr(dot + 2);
        } else if (line.size() > 3 && line[0] >= 'A' && line[0] <= 'Z' && line[1] == ')' &&
                   line[2] == ' ') {
            candidates.emplace_back(line[0], base_description(line.substr(3)));
        }
    }
    std::optional<std::string> predicted;
    if (!last_history.empty()) predicted = successor_of(base_description(last_history));

    std::string best;
    for (const auto& [label, desc] : candidates) {
        if (predicted && desc == *predicted) {
            best.push_back(label);
            break;
        }
    }
    std::string out;
    if (!best.empty()) out = best;
    for (const auto& [label, _] : candidates) {
        if (!best.empty() && label == best[0]) continue;
        if (!out.empty()) out += ", ";
        out.push_back(label);
    }
    return out;
}

}  // namespace

MockLlmClient::MockLlmClient(Rule fn)
    : rule_(std::move(fn)), calls_(std::make_shared<std::atomic<std::int64_t>>(0)) {}

MockLlmClient MockLlmClient::scripted(std::unordered_map<std::string, std::string> responses,
                                      std::optional<std::string> fallback) {
    auto table = std::make_shared<std::unordered_map<std::string, std::string>>(
        std::move(responses));
    return MockLlmClient([table, fallback](const LlmRequest& request) -> std::string {
        auto it = table->find(request.user);
        if (it != table->end()) return it->second;
        if (fallback) return *fallback;
        throw Error("mock llm: no scripted response for request");
    });
}

MockLlmClient MockLlmClient::rule(Rule fn) { return MockLlmClient(std::move(fn)); }

MockLlmClient MockLlmClient::oracle_ranker() {
    return MockLlmClient([](const LlmRequest& request) -> std::string {
        if (request.user.rfind("The following products are frequently purchased together", 0) ==
            0) {
            return oracle_summary(request.user);
        }
        if (request.user.rfind("You are a recommender system.", 0) == 0) {
            return oracle_ranking(request.user);
        }
        return "OK";
    });
}

MockLlmClient MockLlmClient::from_script_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mock script " + path.string());
    json script;
    try {
        script = json::parse(in);
    } catch (const json::exception& ex) {
        throw ParseError("mock script " + path.string() + ": " + ex.what());
    }
    const std::string mode = script.value("mode", "");
    if (mode == "oracle-ranker") return oracle_ranker();
    if (mode == "echo-upper") {
        return MockLlmClient([](const LlmRequest& request) {
            std::string out = request.user;
            std::transform(out.begin(), out.end(), out.begin(),
                           [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
            return out;
        });
    }
    if (mode == "fixed") {
        std::string text = script.value("text", "");
        return MockLlmClient([text](const LlmRequest&) { return text; });
    }
    if (mode == "scripted") {
        std::unordered_map<std::string, std::string> responses;
        if (script.contains("responses")) {
            for (const auto& [key, value] : script.at("responses").items()) {
                responses.emplace(key, value.get<std::string>());
            }
        }
        std::optional<std::string> fallback;
        if (script.contains("default")) fallback = script.at("default").get<std::string>();
        return scripted(std::move(responses), std::move(fallback));
    }
    throw ConfigError("mock script " + path.string() + ": unknown mode \"" + mode + "\"");
}

LlmResponse MockLlmClient::complete(const LlmRequest& request) {
    if (request.user.empty()) throw std::invalid_argument("llm: empty user message");
    calls_->fetch_add(1);
    LlmResponse response;
    response.text = rule_(request);
    response.usage.prompt_tokens = static_cast<std::int64_t>(request.user.size() / 4);
    response.usage.completion_tokens = static_cast<std::int64_t>(response.text.size() / 4);
    response.latency_ms = 0;
    return response;
}

// --- replay -----------------------------------------------------------------

std::string llm_request_hash(const LlmRequest& request) {
    return hex64(fnv1a64(request_to_json(request).dump()));
}

struct RecordingLlmClient::Impl {
    LlmClient* inner;
    std::ofstream out;
    std::mutex mu;
};

RecordingLlmClient::RecordingLlmClient(LlmClient& inner, const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
    impl_->inner = &inner;
    impl_->out.open(path, std::ios::app);
    if (!impl_->out) throw Error("cannot write replay file " + path.string());
}

RecordingLlmClient::~RecordingLlmClient() = default;

LlmResponse RecordingLlmClient::complete(const LlmRequest& request) {
    LlmResponse response = impl_->inner->complete(request);
    ordered_json record;
    record["request_hash"] = llm_request_hash(request);
    record["request"] = request_to_json(request);
    record["response"] = {{"text", response.text},
                          {"prompt_tokens", response.usage.prompt_tokens},
                          {"completion_tokens", response.usage.completion_tokens},
                          {"latency_ms", response.latency_ms}};
    std::lock_guard lock(impl_->mu);
    impl_->out << record.dump() << '\n';
    impl_->out.flush();
    return response;
}

ReplayLlmClient::ReplayLlmClient(const std::filesystem::path& path) {
    jsonl::for_each_record(path, [&](std::size_t lineno, const json& record) {
        const auto hash = jsonl::require_string(record, "request_hash", lineno, "replay");
        if (!record.contains("response")) throw ParseError("replay: missing response", lineno);
        const auto& r = record.at("response");
        LlmResponse response;
        response.text = r.value("text", "");
        response.usage.prompt_tokens = r.value("prompt_tokens", 0);
        response.usage.completion_tokens = r.value("completion_tokens", 0);
        response.latency_ms = r.value("latency_ms", 0);
        by_hash_[hash] = std::move(response);
    });
}

LlmResponse ReplayLlmClient::complete(const LlmRequest& request) {
    auto it = by_hash_.find(llm_request_hash(request));
    if (it == by_hash_.end()) {
        throw Error("replay: no recorded response for request hash " + llm_request_hash(request));
    }
    return it->second;
}

}  // namespace itemrag
