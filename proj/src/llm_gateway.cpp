#include "synapse/llm_gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"

namespace synapse {

using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw DomainError("unknown role: " + s);
}

int estimate_tokens(const std::string& content) {
    return static_cast<int>((content.size() + 3) / 4);
}

MockScript MockScript::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid mock script JSON: ") + e.what());
    }
    MockScript script;
    script.default_response = doc.value("default_response", std::string{});
    if (doc.contains("rules")) {
        for (const auto& r : doc["rules"]) {
            MockRule rule;
            rule.match = r.at("match").get<std::string>();
            rule.is_regex = r.value("regex", false);
            rule.response = r.at("response").get<std::string>();
            script.rules.push_back(std::move(rule));
        }
    }
    return script;
}

MockGateway::MockGateway(MockScript script) : script_(std::move(script)) {
    compiled_.reserve(script_.rules.size());
    for (const auto& rule : script_.rules) {
        compiled_.emplace_back(rule.is_regex
                                   ? std::optional<std::regex>(std::regex(
                                         rule.match, std::regex::ECMAScript | std::regex::optimize))
                                   : std::nullopt);
    }
}

namespace {

std::string concat_messages(const ChatRequest& request) {
    std::string all;
    for (const auto& m : request.messages) {
        if (!all.empty()) all += "\n";
        all += m.content;
    }
    return all;
}

std::string concat_user_messages(const ChatRequest& request) {
    std::string all;
    for (const auto& m : request.messages) {
        if (m.role != Role::user) continue;
        if (!all.empty()) all += "\n";
        all += m.content;
    }
    return all;
}

void validate_request(const ChatRequest& request) {
    if (request.messages.empty()) {
        throw DomainError("chat request must contain at least one message");
    }
}

}  // namespace

ChatResponse MockGateway::complete(const ChatRequest& request) {
    validate_request(request);
    calls_.fetch_add(1);
    const std::string haystack = concat_messages(request);
    std::string content = script_.default_response;
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const auto& rule = script_.rules[i];
        bool matched = false;
        if (compiled_[i]) {
            matched = std::regex_search(haystack, *compiled_[i]);
        } else {
            matched = haystack.find(rule.match) != std::string::npos;
        }
        if (matched) {
            content = rule.response;
            break;
        }
    }
    if (content == "$ECHO$") content = concat_user_messages(request);
    ChatResponse response;
    response.content = content;
    response.provider = ProviderKind::mock;
    response.latency_ms = 0.0;
    response.token_estimate = estimate_tokens(content);
    return response;
}

HttpGateway::HttpGateway(HttpConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ConfigError("http gateway requires an endpoint");
    }
}

HttpConfig HttpGateway::config_from_env() {
    HttpConfig config;
    if (const char* e = std::getenv("SYNAPSE_LLM_ENDPOINT")) config.endpoint = e;
    if (const char* k = std::getenv("SYNAPSE_LLM_API_KEY")) config.api_key = k;
    if (const char* m = std::getenv("SYNAPSE_LLM_MODEL")) config.model = m;
    return config;
}

ChatResponse HttpGateway::complete(const ChatRequest& request) {
    validate_request(request);
    calls_.fetch_add(1);

    json body;
    body["model"] = request.model.empty() ? config_.model : request.model;
    body["messages"] = json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;

    const auto start = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto result = client.Post("/chat/completions", headers, body.dump(), "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            // Retry server-side failures; client errors are final.
            if (result->status >= 500 && attempt + 1 < config_.max_attempts) {
                last_error = "status " + std::to_string(result->status);
                continue;
            }
            throw ProviderError(result->status, result->body);
        }
        json reply;
        try {
            reply = json::parse(result->body);
        } catch (const json::parse_error& e) {
            throw ProviderError(result->status, std::string("unparseable body: ") + e.what());
        }
        ChatResponse response;
        try {
            response.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(result->status, std::string("unexpected shape: ") + e.what());
        }
        response.provider = ProviderKind::http;
        response.latency_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
        response.token_estimate = estimate_tokens(response.content);
        return response;
    }
    throw TransportError("all attempts failed: " + last_error);
}

ChatResponse PanicGateway::complete(const ChatRequest&) {
    throw TransportError("network use is disabled in this configuration");
}

ChatResponse RecordingGateway::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        requests_.push_back(request);
    }
    return inner_.complete(request);
}

std::vector<ChatRequest> RecordingGateway::requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
}

std::vector<BatchItem> complete_batch(Gateway& gateway, const std::vector<ChatRequest>& requests,
                                      std::size_t max_inflight) {
    if (requests.empty()) throw DomainError("complete_batch on empty request list");
    std::vector<BatchItem> results(requests.size());

    auto run_one = [&](std::size_t i) {
        try {
            results[i].response = gateway.complete(requests[i]);
            results[i].ok = true;
        } catch (const SynapseError& e) {
            results[i].ok = false;
            results[i].error_kind = e.kind();
            results[i].error_message = e.what();
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error_kind = "TransportError";
            results[i].error_message = e.what();
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(max_inflight, 1), requests.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) break;
                run_one(i);
            }
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace synapse
