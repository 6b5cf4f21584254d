// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "chop/backends/backend.hpp"

namespace chop::backends {

// Hand-authored responses dispensed in order from one queue per
// (role, task_id). Entries carrying a "subtask" key form their own queue and
// take precedence for requests whose "subtask" metadata matches. An entry
// marked `repeat` is returned forever once reached, which is how looping
// agents are scripted.
//
// Script file:
//   { "task_id": "mail_search_bob",
//     "entries": [ { "role": "plan", "response": "1. Search Item (Bob)" },
//                  { "role": "action", "response": "...", "repeat": true } ] }
class ScriptedBackend : public CompletionBackend {
public:
    struct Entry {
        std::string response;
        bool repeat = false;
    };

    ScriptedBackend() = default;

    void add(Role role, const std::string& task_id, Entry entry, const std::string& subtask = {});
    void load(const std::filesystem::path& file_or_dir);

    std::string complete(const BackendRequest& request) override;

private:
    struct Queue {
        std::vector<Entry> entries;
        std::size_t next = 0;
    };

    std::mutex mutex_;
    std::map<std::tuple<Role, std::string, std::string>, Queue> queues_;
};

}  // namespace chop::backends
