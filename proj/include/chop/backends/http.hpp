// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <string>

#include "chop/backends/backend.hpp"

namespace chop::backends {

// OpenAI-compatible chat completions endpoint.
struct HttpConfig {
    std::string base_url;  // e.g. https://api.openai.com
    std::string api_key;
    std::string model = "gpt-4o";
    std::string path = "/v1/chat/completions";
    double temperature = 0.0;
    int max_tokens = 4096;
    int max_retries = 2;  // attempts = 1 + max_retries
    int retry_backoff_ms = 500;
    int timeout_seconds = 120;

    // CHOP_API_BASE, CHOP_API_KEY, CHOP_MODEL, CHOP_MAX_RETRIES.
    static HttpConfig from_environment();
};

class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpConfig config);

    std::string complete(const BackendRequest& request) override;

    // The JSON request body sent for `request`.
    std::string request_body(const BackendRequest& request) const;

    int attempts_made() const { return last_attempts_; }

private:
    HttpConfig config_;
    std::atomic<int> last_attempts_{0};
};

}  // namespace chop::backends
