// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "chop/backends/backend.hpp"

namespace chop::backends {

enum class CassetteMode { Record, Replay, ReplayStrict };

struct CassetteEntry {
    std::string fingerprint;
    Role role = Role::Plan;
    std::string task_id;
    std::string prompt;
    std::string response;

    bool operator==(const CassetteEntry&) const = default;
};

// Request/response pairs in request order. The file form is readable JSON
// with the prompt kept alongside its fingerprint; an entry may omit the
// fingerprint and it is computed from role + prompt on load.
struct Cassette {
    std::vector<CassetteEntry> entries;

    // Appends unless an identical (fingerprint, response) pair is present.
    void record(CassetteEntry entry);
};

Cassette load_cassette(const std::filesystem::path& file);
void save_cassette(const std::filesystem::path& file, const Cassette& cassette);
// Concatenates every *.json cassette in a directory (sorted by name), or
// loads a single file.
Cassette load_cassettes(const std::filesystem::path& file_or_dir);

std::string cassette_file_name(const std::string& task_id);

// Replay:       lookup by fingerprint; duplicates are dispensed in recorded
//               order and the last one repeats. A miss falls back to the next
//               unconsumed entry of the same task, then raises CassetteMiss.
// ReplayStrict: fingerprints must be unique; any miss raises CassetteMiss.
class ReplayBackend : public CompletionBackend {
public:
    ReplayBackend(Cassette cassette, CassetteMode mode);

    std::string complete(const BackendRequest& request) override;

private:
    std::mutex mutex_;
    CassetteMode mode_;
    Cassette cassette_;
    std::vector<bool> consumed_;
    std::map<std::string, std::vector<std::size_t>> by_fingerprint_;
    std::map<std::string, std::size_t> dispensed_;
};

// Forwards to `inner` and writes every exchange to
// <dir>/<task_id>.json, rewriting the file after each call.
class RecordingBackend : public CompletionBackend {
public:
    RecordingBackend(std::shared_ptr<CompletionBackend> inner, std::filesystem::path dir);

    std::string complete(const BackendRequest& request) override;

private:
    std::shared_ptr<CompletionBackend> inner_;
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<std::string, Cassette> cassettes_;
};

}  // namespace chop::backends
