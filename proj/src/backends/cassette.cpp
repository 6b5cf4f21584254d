// SPDX-License-Identifier: Apache-2.0
#include "chop/backends/cassette.hpp"

#include <algorithm>

#include "chop/core/serialize.hpp"
#include "chop/error.hpp"

namespace chop::backends {

namespace fs = std::filesystem;
using json = io::json;

void Cassette::record(CassetteEntry entry)
{
    auto same = [&](const CassetteEntry& e) { return e.fingerprint == entry.fingerprint && e.response == entry.response; };
    if (std::none_of(entries.begin(), entries.end(), same))
        entries.push_back(std::move(entry));
}

Cassette load_cassette(const fs::path& file)
{
    auto root = io::parse_json_file(file);
    const std::string path = file.string();
    const auto& entries = io::require(root, "entries", path);
    if (!entries.is_array())
        throw Error(ErrorCode::SchemaError, path + ".entries: expected an array");
    Cassette c;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto p = path + ".entries[" + std::to_string(i) + "]";
        CassetteEntry e;
        e.role = parse_role(io::require_string(entries[i], "role", p));
        e.task_id = io::optional_string(entries[i], "task_id", "", p);
        e.prompt = io::optional_string(entries[i], "prompt", "", p);
        e.response = io::require_string(entries[i], "response", p);
        e.fingerprint = io::optional_string(entries[i], "fingerprint", "", p);
        if (e.fingerprint.empty()) {
            if (e.prompt.empty())
                throw Error(ErrorCode::SchemaError, p + ": needs a fingerprint or a prompt");
            e.fingerprint = fingerprint(BackendRequest{e.role, e.prompt, {}});
        }
        c.entries.push_back(std::move(e));
    }
    return c;
}

void save_cassette(const fs::path& file, const Cassette& cassette)
{
    json entries = json::array();
    for (const auto& e : cassette.entries) {
        json j;
        j["fingerprint"] = e.fingerprint;
        j["role"] = to_string(e.role);
        j["task_id"] = e.task_id;
        j["prompt"] = e.prompt;
        j["response"] = e.response;
        entries.push_back(std::move(j));
    }
    json root;
    root["version"] = 1;
    root["entries"] = entries;
    io::write_file(file, io::dump(root));
}

Cassette load_cassettes(const fs::path& file_or_dir)
{
    if (!fs::exists(file_or_dir))
        throw Error(ErrorCode::IoError, "no cassette at '" + file_or_dir.string() + "'");
    if (!fs::is_directory(file_or_dir))
        return load_cassette(file_or_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(file_or_dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    Cassette all;
    for (const auto& f : files) {
        auto c = load_cassette(f);
        all.entries.insert(all.entries.end(), c.entries.begin(), c.entries.end());
    }
    return all;
}

std::string cassette_file_name(const std::string& task_id)
{
    std::string name = task_id.empty() ? std::string("default") : task_id;
    for (auto& ch : name) {
        bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_'
                  || ch == '-' || ch == '.';
        if (!ok)
            ch = '_';
    }
    return name + ".json";
}

ReplayBackend::ReplayBackend(Cassette cassette, CassetteMode mode)
    : mode_(mode), cassette_(std::move(cassette)), consumed_(cassette_.entries.size(), false)
{
    if (mode_ == CassetteMode::Record)
        throw Error(ErrorCode::BackendError, "ReplayBackend cannot record");
    for (std::size_t i = 0; i < cassette_.entries.size(); ++i) {
        auto& slots = by_fingerprint_[cassette_.entries[i].fingerprint];
        if (mode_ == CassetteMode::ReplayStrict && !slots.empty())
            throw Error(ErrorCode::BackendError,
                        "duplicate fingerprint " + cassette_.entries[i].fingerprint + " in strict replay cassette");
        slots.push_back(i);
    }
}

std::string ReplayBackend::complete(const BackendRequest& request)
{
    std::lock_guard lock(mutex_);
    auto fp = fingerprint(request);
    auto it = by_fingerprint_.find(fp);
    if (it != by_fingerprint_.end()) {
        auto& n = dispensed_[fp];
        auto slot = it->second[std::min(n, it->second.size() - 1)];
        ++n;
        consumed_[slot] = true;
        return cassette_.entries[slot].response;
    }
    if (mode_ == CassetteMode::Replay) {
        auto task = request.task_id();
        for (std::size_t i = 0; i < cassette_.entries.size(); ++i) {
            const auto& e = cassette_.entries[i];
            if (!consumed_[i] && e.task_id == task && e.role == request.role) {
                consumed_[i] = true;
                return e.response;
            }
        }
    }
    throw Error(ErrorCode::CassetteMiss, "no recorded response for " + std::string(to_string(request.role))
                                             + " request of '" + request.task_id() + "' (fingerprint " + fp + ")");
}

RecordingBackend::RecordingBackend(std::shared_ptr<CompletionBackend> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir))
{
    if (!inner_)
        throw Error(ErrorCode::BackendError, "recording backend needs an inner backend");
}

std::string RecordingBackend::complete(const BackendRequest& request)
{
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    auto task = request.task_id();
    auto& cassette = cassettes_[task];
    cassette.record(CassetteEntry{fingerprint(request), request.role, task, request.prompt, response});
    save_cassette(dir_ / cassette_file_name(task), cassette);
    return response;
}

}  // namespace chop::backends
