// SPDX-License-Identifier: Apache-2.0
#include "chop/backends/scripted.hpp"

#include <algorithm>

#include "chop/core/serialize.hpp"
#include "chop/error.hpp"

namespace chop::backends {

namespace fs = std::filesystem;

void ScriptedBackend::add(Role role, const std::string& task_id, Entry entry, const std::string& subtask)
{
    std::lock_guard lock(mutex_);
    queues_[{role, task_id, subtask}].entries.push_back(std::move(entry));
}

void ScriptedBackend::load(const fs::path& file_or_dir)
{
    std::vector<fs::path> files;
    if (fs::is_directory(file_or_dir)) {
        for (const auto& e : fs::directory_iterator(file_or_dir))
            if (e.is_regular_file() && e.path().extension() == ".json")
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(file_or_dir);
    }

    for (const auto& file : files) {
        auto root = io::parse_json_file(file);
        const std::string path = file.string();
        auto task_id = io::require_string(root, "task_id", path);
        const auto& entries = io::require(root, "entries", path);
        if (!entries.is_array())
            throw Error(ErrorCode::SchemaError, path + ".entries: expected an array");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto p = path + ".entries[" + std::to_string(i) + "]";
            Role role = parse_role(io::require_string(entries[i], "role", p));
            add(role, task_id,
                Entry{io::require_string(entries[i], "response", p), io::optional_bool(entries[i], "repeat", false, p)},
                io::optional_string(entries[i], "subtask", "", p));
        }
    }
}

std::string ScriptedBackend::complete(const BackendRequest& request)
{
    std::lock_guard lock(mutex_);
    auto subtask = request.metadata.find("subtask");
    auto it = queues_.end();
    if (subtask != request.metadata.end())
        it = queues_.find({request.role, request.task_id(), subtask->second});
    if (it == queues_.end())
        it = queues_.find({request.role, request.task_id(), std::string()});
    if (it == queues_.end())
        throw Error(ErrorCode::ScriptExhausted,
                    "no script for role '" + std::string(to_string(request.role)) + "' of '" + request.task_id() + "'");
    auto& q = it->second;
    if (q.next >= q.entries.size()) {
        if (!q.entries.empty() && q.entries.back().repeat)
            return q.entries.back().response;
        throw Error(ErrorCode::ScriptExhausted,
                    "script for role '" + std::string(to_string(request.role)) + "' of '" + request.task_id()
                        + "' exhausted after " + std::to_string(q.entries.size()) + " responses");
    }
    const auto& entry = q.entries[q.next];
    if (!entry.repeat)
        ++q.next;
    return entry.response;
}

}  // namespace chop::backends
