// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "chop/backends/http.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::backends {

namespace {

std::string env_or(const char* name, const std::string& fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

bool retryable(int status)
{
    return status == 429 || status >= 500;
}

}  // namespace

HttpConfig HttpConfig::from_environment()
{
    HttpConfig c;
    c.base_url = env_or("CHOP_API_BASE", "https://api.openai.com");
    c.api_key = env_or("CHOP_API_KEY", "");
    c.model = env_or("CHOP_MODEL", c.model);
    if (auto retries = text::parse_int(env_or("CHOP_MAX_RETRIES", "")))
        c.max_retries = static_cast<int>(*retries);
    return c;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config))
{
    if (config_.base_url.empty())
        throw Error(ErrorCode::BackendError, "HTTP backend needs a base URL");
    if (config_.max_retries < 0)
        throw Error(ErrorCode::BackendError, "max_retries must be non-negative");
}

std::string HttpBackend::request_body(const BackendRequest& request) const
{
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
    return body.dump();
}

std::string HttpBackend::complete(const BackendRequest& request)
{
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    const auto body = request_body(request);

    const int attempts = 1 + config_.max_retries;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        last_attempts_ = attempt;
        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            try {
                auto j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::BackendError, std::string("malformed completion response: ") + e.what());
            }
        } else if (retryable(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
        } else {
            throw Error(ErrorCode::TransportError,
                        "HTTP " + std::to_string(res->status) + " (not retried, attempt " + std::to_string(attempt) + ")");
        }
        if (attempt < attempts && config_.retry_backoff_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms * attempt));
    }
    throw Error(ErrorCode::TransportError,
                last_error + " after " + std::to_string(attempts) + " attempts (" + std::to_string(config_.max_retries)
                    + " retries)");
}

}  // namespace chop::backends
