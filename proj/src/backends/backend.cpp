// SPDX-License-Identifier: Apache-2.0
#include "chop/backends/backend.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::backends {

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::Plan: return "plan";
    case Role::Action: return "action";
    case Role::Summarize: return "summarize";
    case Role::Judge: return "judge";
    }
    return "plan";
}

Role parse_role(std::string_view s)
{
    for (auto r : {Role::Plan, Role::Action, Role::Summarize, Role::Judge})
        if (to_string(r) == s)
            return r;
    throw Error(ErrorCode::SchemaError, "unknown role '" + std::string(s) + "'");
}

std::string BackendRequest::task_id() const
{
    auto it = metadata.find("task_id");
    return it == metadata.end() ? std::string() : it->second;
}

std::string fingerprint(const BackendRequest& request)
{
    std::string material = std::string(to_string(request.role)) + "\n" + text::collapse_whitespace(request.prompt);

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(material.data(), material.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::BackendError, "SHA-256 digest failed");

    std::string hex;
    hex.reserve(length * 2);
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        hex.append(buf, 2);
    }
    return hex;
}

}  // namespace chop::backends
