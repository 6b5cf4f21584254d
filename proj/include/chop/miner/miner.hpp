// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chop/backends/backend.hpp"
#include "chop/core/types.hpp"

// Basis-subtask mining: segment a demonstration corpus, reduce each
// instruction to its head verb, merge verbs sharing a synset, summarize each
// cluster with the completion backend, keep the most frequent clusters and
// assemble the library.
namespace chop::miner {

struct DemoSegment {
    std::string source_id;
    std::string instruction;
    std::string app_id;
    std::vector<AnnotatedStep> steps;

    bool operator==(const DemoSegment&) const = default;
};

// word -> synset ids. Text form, one word per line:
//   search  s.search s.look
//   lookup  s.look
// Blank lines and lines starting with '#' are ignored.
struct SynonymTable {
    std::map<std::string, std::set<std::string>> entries;

    static SynonymTable parse(std::string_view text);
    static SynonymTable load(const std::filesystem::path& path);
};

// One verb per line; '#' comments.
struct VerbLexicon {
    std::set<std::string> verbs;
    bool fallback_to_first_token = true;

    static VerbLexicon parse(std::string_view text);
    static VerbLexicon load(const std::filesystem::path& path);
    bool contains(std::string_view word) const;
};

struct VerbCluster {
    std::string canonical_verb;
    std::set<std::string> members;
    std::map<std::string, int> member_frequency;
    std::vector<DemoSegment> segments;
    int frequency = 0;

    bool operator==(const VerbCluster&) const = default;
};

std::vector<DemoSegment> segment_corpus(const std::vector<TrajectoryRecord>& records, int k = 3);

std::string extract_verb(std::string_view instruction, const VerbLexicon& lexicon);

// Connected components of the shared-synset graph. `segments`, when given,
// is parallel to `verbs` and is distributed into the clusters. Output is
// sorted by canonical verb.
std::vector<VerbCluster> cluster_synonyms(const std::vector<std::string>& verbs, const SynonymTable& table,
                                          const std::vector<DemoSegment>& segments = {});

inline constexpr std::string_view kSummarizePrompt =
    "Please summarize the following {{action_sequence}} into a standardized process and specify boundary "
    "conditions.";

// The action sequences of a cluster as they are substituted into the prompt.
std::string render_action_sequences(const VerbCluster& cluster);
std::string build_summarize_prompt(const VerbCluster& cluster, std::string_view prompt_template = kSummarizePrompt);

// Numbered lines after a "Standardized process" heading become process steps;
// numbered or bulleted lines after a "Boundary conditions" heading become
// boundary conditions. Numbered lines before any heading count as process.
SubtaskDoc parse_summary(std::string_view text);

SubtaskDoc summarize_cluster(const VerbCluster& cluster, backends::CompletionBackend& backend,
                             std::string_view prompt_template = kSummarizePrompt);

std::vector<VerbCluster> filter_top_k(std::vector<VerbCluster> clusters, int k = 10);

// The reviewed mapping from clusters to named, parameterized subtasks.
//   { "subtasks": [ { "verbs": ["search"], "name": "Search Item",
//                     "parameter_roles": ["search term"], "fixed_flow": true,
//                     "description": "..." } ],
//     "exclude": ["launch"] }
struct OverlayEntry {
    std::vector<std::string> verbs;
    std::string name;
    std::vector<std::string> parameter_roles;
    bool fixed_flow = false;
    std::string description;
};

struct LibraryOverlay {
    std::vector<OverlayEntry> subtasks;
    std::set<std::string> exclude;

    static LibraryOverlay load(const std::filesystem::path& path);
    const OverlayEntry* match(const VerbCluster& cluster) const;
    bool excluded(const VerbCluster& cluster) const;
};

Library build_library(const std::vector<VerbCluster>& clusters, const std::map<std::string, SubtaskDoc>& docs,
                      const LibraryOverlay& overlay = {});

struct MinerConfig {
    int min_steps = 3;  // K
    int top_k = 10;     // k
    std::string prompt_template = std::string(kSummarizePrompt);
};

struct MiningResult {
    std::vector<DemoSegment> segments;
    std::vector<VerbCluster> clusters;  // after review exclusions, before filtering
    std::vector<VerbCluster> retained;
    std::map<std::string, SubtaskDoc> docs;
    Library library;
};

MiningResult mine_library(const std::vector<TrajectoryRecord>& records, const VerbLexicon& lexicon,
                          const SynonymTable& table, const LibraryOverlay& overlay,
                          backends::CompletionBackend& backend, const MinerConfig& config = {});

}  // namespace chop::miner
