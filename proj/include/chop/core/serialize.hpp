// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chop/core/types.hpp"

// JSON file formats shared by every module: golden task files, mining
// corpora, basis-subtask libraries and episode archives. Readers throw
// Error(SchemaError) with a field path such as "tasks[3].golden_actions[1]".
namespace chop::io {

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
json parse_json_file(const std::filesystem::path& path);
std::string dump(const json& j);  // 2-space indent, trailing newline

// Typed field access with schema errors naming the offending path.
const json& require(const json& j, std::string_view key, const std::string& path);
std::string require_string(const json& j, std::string_view key, const std::string& path);
int require_int(const json& j, std::string_view key, const std::string& path);
bool optional_bool(const json& j, std::string_view key, bool fallback, const std::string& path);
std::string optional_string(const json& j, std::string_view key, const std::string& fallback, const std::string& path);
std::vector<std::string> string_list(const json& j, std::string_view key, const std::string& path, bool required = true);

json to_json(const Task& task);
Task task_from_json(const json& j, const std::string& path);
std::vector<Task> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, const std::vector<Task>& tasks);

json to_json(const TrajectoryRecord& record);
TrajectoryRecord trajectory_from_json(const json& j, const std::string& path);
std::vector<TrajectoryRecord> load_corpus(const std::filesystem::path& path);

json to_json(const BasisSubtask& subtask);
BasisSubtask subtask_from_json(const json& j, const std::string& path);
json library_to_json(const Library& library);
Library library_from_json(const json& j, const std::string& path = "library");
Library load_library(const std::filesystem::path& path);
void save_library(const std::filesystem::path& path, const Library& library);

json to_json(const Episode& episode);
Episode episode_from_json(const json& j, const std::string& path = "episode");
Episode load_episode(const std::filesystem::path& path);
void save_episode(const std::filesystem::path& path, const Episode& episode);
std::vector<Episode> load_episodes(const std::filesystem::path& dir);

}  // namespace chop::io
