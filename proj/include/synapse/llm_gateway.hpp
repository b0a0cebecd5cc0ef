#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace synapse {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    int max_tokens = 512;
    double temperature = 0.0;  // routing must be reproducible round to round
};

enum class ProviderKind { mock, http };

struct ChatResponse {
    std::string content;
    ProviderKind provider = ProviderKind::mock;
    double latency_ms = 0.0;
    int token_estimate = 0;  // ceil(chars/4), metrics only
};

// Ordered first-match-wins rules over the concatenation of all message
// contents. The default response makes the script a total function. A
// response of "$ECHO$" returns the concatenated user messages verbatim
// (used by the echo attacker).
struct MockRule {
    std::string match;
    bool is_regex = false;
    std::string response;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::string default_response;

    static MockScript from_json_text(const std::string& text);
};

// Uniform chat-completion interface. All experiment code talks to this; the
// mock provider keeps the whole system a deterministic function of
// (config, seed, fixtures).
class Gateway {
public:
    virtual ~Gateway() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::size_t call_count() const = 0;
};

struct BatchItem {
    bool ok = false;
    ChatResponse response;
    std::string error_kind;
    std::string error_message;
};

// Positionally aligned results; per-item failures are isolated. In-flight
// concurrency is bounded by max_inflight.
std::vector<BatchItem> complete_batch(Gateway& gateway, const std::vector<ChatRequest>& requests,
                                      std::size_t max_inflight = 8);

class MockGateway : public Gateway {
public:
    explicit MockGateway(MockScript script);
    ChatResponse complete(const ChatRequest& request) override;
    std::size_t call_count() const override { return calls_.load(); }

private:
    MockScript script_;
    std::vector<std::optional<std::regex>> compiled_;
    std::atomic<std::size_t> calls_{0};
};

struct HttpConfig {
    std::string endpoint;    // base URL, e.g. http://localhost:8080
    std::string api_key;
    std::string model;
    int timeout_seconds = 30;
    int max_attempts = 3;
    int backoff_ms = 100;    // doubled per retry
};

// OpenAI-compatible /chat/completions client with bearer auth and
// exponential-backoff retries. Wire format in docs/gateway.md.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpConfig config);
    ChatResponse complete(const ChatRequest& request) override;
    std::size_t call_count() const override { return calls_.load(); }

    static HttpConfig config_from_env();

private:
    HttpConfig config_;
    std::atomic<std::size_t> calls_{0};
};

// Test-mode provider: any completion attempt throws. Wiring this in asserts
// that a code path never reaches the network.
class PanicGateway : public Gateway {
public:
    ChatResponse complete(const ChatRequest& request) override;
    std::size_t call_count() const override { return 0; }
};

// Wrapper that records every request it forwards; lets tests grep all
// rendered prompts of a full run.
class RecordingGateway : public Gateway {
public:
    explicit RecordingGateway(Gateway& inner) : inner_(inner) {}
    ChatResponse complete(const ChatRequest& request) override;
    std::size_t call_count() const override { return inner_.call_count(); }

    std::vector<ChatRequest> requests() const;

private:
    Gateway& inner_;
    mutable std::mutex mutex_;
    std::vector<ChatRequest> requests_;
};

int estimate_tokens(const std::string& content);

}  // namespace synapse
