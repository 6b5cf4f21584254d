// SPDX-License-Identifier: Apache-2.0
#include "chop/miner/miner.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "chop/core/prompt_template.hpp"
#include "chop/core/serialize.hpp"
#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::miner {

namespace {

std::vector<std::string> content_lines(std::string_view text)
{
    std::vector<std::string> out;
    for (const auto& line : text::split_lines(text)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        out.emplace_back(t);
    }
    return out;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// "1. text", "2) text", "- text", "* text"; returns the item text.
std::optional<std::string> list_item(std::string_view line, bool allow_bullet)
{
    auto t = text::trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])))
        ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
        auto rest = std::string(text::trim(t.substr(i + 1)));
        if (!rest.empty())
            return rest;
        return std::nullopt;
    }
    if (allow_bullet && i == 0 && t.size() > 1 && (t[0] == '-' || t[0] == '*') && t[1] == ' ')
        return std::string(text::trim(t.substr(2)));
    return std::nullopt;
}

// Strips markdown emphasis and heading marks so "**Boundary conditions:**"
// and "## Boundary conditions" are recognized.
std::string heading_text(std::string_view line)
{
    std::string s;
    for (char c : line)
        if (c != '*' && c != '#')
            s.push_back(c);
    return std::string(text::trim(s));
}

enum class Section { None, Process, Boundary };

// Returns the section a heading line opens plus whatever follows the colon.
std::optional<std::pair<Section, std::string>> match_heading(std::string_view line)
{
    static const std::vector<std::pair<std::string, Section>> headings = {
        {"standardized process", Section::Process},
        {"standardised process", Section::Process},
        {"标准流程", Section::Process},
        {"boundary conditions", Section::Boundary},
        {"boundary condition", Section::Boundary},
        {"边界条件", Section::Boundary},
    };
    auto h = heading_text(line);
    for (const auto& [word, section] : headings) {
        if (!text::starts_with_ci(h, word))
            continue;
        auto rest = std::string_view(h).substr(word.size());
        rest = text::trim(rest);
        if (!rest.empty() && (rest.front() == ':' || rest.front() == '.'))
            rest = text::trim(rest.substr(1));
        else if (text::starts_with_ci(rest, "："))
            rest = text::trim(rest.substr(std::string_view("：").size()));
        else if (!rest.empty())
            continue;  // a sentence that merely starts with the words
        return std::make_pair(section, std::string(rest));
    }
    return std::nullopt;
}

}  // namespace

SynonymTable SynonymTable::parse(std::string_view body)
{
    SynonymTable table;
    for (const auto& line : content_lines(body)) {
        auto words = text::split_whitespace(line);
        auto word = text::lower(words.front());
        if (words.size() < 2)
            throw Error(ErrorCode::SchemaError, "synonym table: word '" + word + "' has no synset");
        for (std::size_t i = 1; i < words.size(); ++i)
            table.entries[word].insert(words[i]);
    }
    return table;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path)
{
    return parse(io::read_file(path));
}

VerbLexicon VerbLexicon::parse(std::string_view body)
{
    VerbLexicon lexicon;
    for (const auto& line : content_lines(body))
        lexicon.verbs.insert(text::lower(line));
    return lexicon;
}

VerbLexicon VerbLexicon::load(const std::filesystem::path& path)
{
    return parse(io::read_file(path));
}

bool VerbLexicon::contains(std::string_view word) const
{
    return verbs.count(text::lower(word)) > 0;
}

std::vector<DemoSegment> segment_corpus(const std::vector<TrajectoryRecord>& records, int k)
{
    if (k < 1)
        throw Error(ErrorCode::InvalidInput, "segment length threshold must be at least 1");
    if (records.empty())
        throw Error(ErrorCode::EmptyCorpus, "no trajectory records");
    std::vector<DemoSegment> out;
    for (const auto& r : records)
        if (static_cast<int>(r.steps.size()) >= k)
            out.push_back({r.id, r.instruction, r.app_id, r.steps});
    return out;
}

std::string extract_verb(std::string_view instruction, const VerbLexicon& lexicon)
{
    auto tokens = text::word_tokens(instruction);
    if (tokens.empty())
        throw Error(ErrorCode::NoVerbFound, "empty instruction");
    for (const auto& t : tokens)
        if (lexicon.contains(t))
            return t;
    if (!lexicon.fallback_to_first_token)
        throw Error(ErrorCode::NoVerbFound, "no lexicon verb in '" + std::string(instruction) + "'");
    return tokens.front();
}

std::vector<VerbCluster> cluster_synonyms(const std::vector<std::string>& verbs, const SynonymTable& table,
                                          const std::vector<DemoSegment>& segments)
{
    if (!segments.empty() && segments.size() != verbs.size())
        throw Error(ErrorCode::InvalidInput, "segments must be parallel to verbs");

    std::vector<std::string> distinct;
    std::map<std::string, std::size_t> index;
    for (const auto& v : verbs)
        if (index.emplace(v, distinct.size()).second)
            distinct.push_back(v);

    UnionFind uf(distinct.size());
    std::map<std::string, std::size_t> synset_owner;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        auto it = table.entries.find(distinct[i]);
        if (it == table.entries.end())
            continue;
        for (const auto& synset : it->second) {
            auto [owner, inserted] = synset_owner.emplace(synset, i);
            if (!inserted)
                uf.unite(i, owner->second);
        }
    }

    std::map<std::size_t, VerbCluster> by_root;
    for (std::size_t i = 0; i < verbs.size(); ++i) {
        auto& c = by_root[uf.find(index.at(verbs[i]))];
        c.members.insert(verbs[i]);
        c.member_frequency[verbs[i]] += 1;
        c.frequency += 1;
        if (!segments.empty())
            c.segments.push_back(segments[i]);
    }

    std::vector<VerbCluster> out;
    for (auto& [root, c] : by_root) {
        // member_frequency iterates in lexicographic order, so the first
        // strict maximum is the smallest tied verb.
        int best = -1;
        for (const auto& [verb, n] : c.member_frequency) {
            if (n > best) {
                best = n;
                c.canonical_verb = verb;
            }
        }
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(),
              [](const VerbCluster& a, const VerbCluster& b) { return a.canonical_verb < b.canonical_verb; });
    return out;
}

std::string render_action_sequences(const VerbCluster& cluster)
{
    std::string out = "action sequences:\n";
    for (std::size_t i = 0; i < cluster.segments.size(); ++i) {
        const auto& seg = cluster.segments[i];
        out += "\nSequence " + std::to_string(i + 1) + ": " + seg.instruction + "\n";
        for (std::size_t j = 0; j < seg.steps.size(); ++j) {
            out += std::to_string(j + 1) + ". " + render_action(seg.steps[j].action);
            if (!seg.steps[j].thought.empty())
                out += " | thought: " + seg.steps[j].thought;
            out += "\n";
        }
    }
    out += "\n";
    return out;
}

std::string build_summarize_prompt(const VerbCluster& cluster, std::string_view prompt_template)
{
    PromptTemplate tpl{std::string(prompt_template)};
    return tpl.render({{"action_sequence", render_action_sequences(cluster)}});
}

SubtaskDoc parse_summary(std::string_view body)
{
    SubtaskDoc doc;
    Section section = Section::None;
    auto add = [&](Section s, std::string_view line) {
        if (s == Section::Boundary) {
            if (auto item = list_item(line, true))
                doc.boundary_conditions.push_back(*item);
        } else if (auto item = list_item(line, false)) {
            doc.standardized_process.push_back(*item);
        }
    };
    for (const auto& line : text::split_lines(body)) {
        if (text::trim(line).empty())
            continue;
        if (auto h = match_heading(line)) {
            section = h->first;
            if (!h->second.empty())
                add(section, h->second);
            continue;
        }
        add(section, line);
    }
    if (doc.standardized_process.empty())
        throw Error(ErrorCode::UnparseableSummary, "summary has no numbered process steps");
    return doc;
}

SubtaskDoc summarize_cluster(const VerbCluster& cluster, backends::CompletionBackend& backend,
                             std::string_view prompt_template)
{
    if (cluster.segments.empty())
        throw Error(ErrorCode::InvalidInput, "cluster '" + cluster.canonical_verb + "' has no segments");
    backends::BackendRequest req;
    req.role = backends::Role::Summarize;
    req.prompt = build_summarize_prompt(cluster, prompt_template);
    req.metadata = {{"task_id", "miner"}, {"subtask", cluster.canonical_verb}};
    return parse_summary(backend.complete(req));
}

std::vector<VerbCluster> filter_top_k(std::vector<VerbCluster> clusters, int k)
{
    if (k < 1)
        throw Error(ErrorCode::InvalidInput, "k must be at least 1");
    std::stable_sort(clusters.begin(), clusters.end(), [](const VerbCluster& a, const VerbCluster& b) {
        if (a.frequency != b.frequency)
            return a.frequency > b.frequency;
        return a.canonical_verb < b.canonical_verb;
    });
    if (clusters.size() > static_cast<std::size_t>(k))
        clusters.resize(static_cast<std::size_t>(k));
    return clusters;
}

LibraryOverlay LibraryOverlay::load(const std::filesystem::path& path)
{
    auto root = io::parse_json_file(path);
    LibraryOverlay overlay;
    const auto& subtasks = io::require(root, "subtasks", "overlay");
    if (!subtasks.is_array())
        throw Error(ErrorCode::SchemaError, "overlay.subtasks: expected an array");
    for (std::size_t i = 0; i < subtasks.size(); ++i) {
        auto p = "overlay.subtasks[" + std::to_string(i) + "]";
        OverlayEntry e;
        e.verbs = io::string_list(subtasks[i], "verbs", p);
        for (auto& v : e.verbs)
            v = text::lower(v);
        e.name = io::require_string(subtasks[i], "name", p);
        e.parameter_roles = io::string_list(subtasks[i], "parameter_roles", p);
        e.fixed_flow = io::optional_bool(subtasks[i], "fixed_flow", false, p);
        e.description = io::optional_string(subtasks[i], "description", "", p);
        overlay.subtasks.push_back(std::move(e));
    }
    for (auto& v : io::string_list(root, "exclude", "overlay", false))
        overlay.exclude.insert(text::lower(v));
    return overlay;
}

const OverlayEntry* LibraryOverlay::match(const VerbCluster& cluster) const
{
    for (const auto& e : subtasks)
        if (std::find(e.verbs.begin(), e.verbs.end(), cluster.canonical_verb) != e.verbs.end())
            return &e;
    for (const auto& e : subtasks)
        for (const auto& v : e.verbs)
            if (cluster.members.count(v))
                return &e;
    return nullptr;
}

bool LibraryOverlay::excluded(const VerbCluster& cluster) const
{
    return exclude.count(cluster.canonical_verb) > 0;
}

Library build_library(const std::vector<VerbCluster>& clusters, const std::map<std::string, SubtaskDoc>& docs,
                      const LibraryOverlay& overlay)
{
    Library library;
    for (const auto& c : clusters) {
        auto doc = docs.find(c.canonical_verb);
        if (doc == docs.end())
            throw Error(ErrorCode::MissingDoc, "no summary for cluster '" + c.canonical_verb + "'");
        BasisSubtask s;
        s.doc = doc->second;
        s.frequency = c.frequency;
        s.verbs.assign(c.members.begin(), c.members.end());
        if (const auto* e = overlay.match(c)) {
            s.name = e->name;
            s.parameter_roles = e->parameter_roles;
            s.fixed_flow = e->fixed_flow;
            s.description = e->description;
        } else {
            s.name = c.canonical_verb;
            if (!s.name.empty())
                s.name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s.name[0])));
            s.parameter_roles = {"parameter"};
        }
        s.arity = static_cast<int>(s.parameter_roles.size());
        library.push_back(std::move(s));
    }
    validate_library(library);
    return library;
}

MiningResult mine_library(const std::vector<TrajectoryRecord>& records, const VerbLexicon& lexicon,
                          const SynonymTable& table, const LibraryOverlay& overlay,
                          backends::CompletionBackend& backend, const MinerConfig& config)
{
    MiningResult result;
    result.segments = segment_corpus(records, config.min_steps);
    if (result.segments.empty())
        throw Error(ErrorCode::EmptyCorpus, "no record reaches " + std::to_string(config.min_steps) + " steps");

    std::vector<std::string> verbs;
    for (const auto& s : result.segments)
        verbs.push_back(extract_verb(s.instruction, lexicon));

    for (auto& c : cluster_synonyms(verbs, table, result.segments))
        if (!overlay.excluded(c))
            result.clusters.push_back(std::move(c));

    for (const auto& c : result.clusters)
        result.docs[c.canonical_verb] = summarize_cluster(c, backend, config.prompt_template);

    result.retained = filter_top_k(result.clusters, config.top_k);
    result.library = build_library(result.retained, result.docs, overlay);
    return result;
}

}  // namespace chop::miner
