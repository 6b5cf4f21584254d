// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>

namespace chop::backends {

enum class Role { Plan, Action, Summarize, Judge };

std::string_view to_string(Role role);
Role parse_role(std::string_view s);

struct BackendRequest {
    Role role = Role::Plan;
    std::string prompt;
    // Routing keys: "task_id", "subtask", "turn". Not part of the fingerprint.
    std::map<std::string, std::string> metadata;

    std::string task_id() const;
};

// A completion model. Implementations must be safe to call from several
// episode runners at once.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const BackendRequest& request) = 0;
};

// Stable content hash (SHA-256, hex) over the role and the prompt with
// whitespace runs collapsed. Case is preserved.
std::string fingerprint(const BackendRequest& request);

}  // namespace chop::backends
