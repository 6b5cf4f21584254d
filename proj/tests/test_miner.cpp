// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>
#include <random>

#include "chop/backends/scripted.hpp"
#include "chop/core/serialize.hpp"
#include "chop/error.hpp"
#include "chop/miner/miner.hpp"
#include "oracles.hpp"

using namespace chop;
using namespace chop::miner;

namespace {

const std::string kMiner = std::string(CHOP_DATA_DIR) + "/miner";

const char* kSearchSummary = R"(Basis subtask: Search Item (parameter: search term)
Standardized process: 1. Click on the search bar located at the designated area of the screen.
2. Type in the content specified by the search term parameter.
3. If applicable, select a search suggestion from the dropdown list that appears after typing.
4. Press enter or click on the search button to execute the search.
Boundary conditions:
1. If the search term is not found, check for spelling errors.
2. If selecting a suggestion, ensure it is the correct item before proceeding.
3. If navigating to a specific website, ensure the URL is entered correctly in the address bar.)";

VerbCluster cluster(const std::string& verb, int freq)
{
    VerbCluster c;
    c.canonical_verb = verb;
    c.members = {verb};
    c.member_frequency[verb] = freq;
    c.frequency = freq;
    return c;
}

// Brute-force top-k: repeatedly take the best remaining cluster.
std::vector<std::string> brute_top_k(std::vector<VerbCluster> pool, int k)
{
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < k && !pool.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool.size(); ++i) {
            const auto& a = pool[i];
            const auto& b = pool[best];
            if (a.frequency > b.frequency || (a.frequency == b.frequency && a.canonical_verb < b.canonical_verb))
                best = i;
        }
        out.push_back(pool[best].canonical_verb);
        pool.erase(pool.begin() + static_cast<long>(best));
    }
    return out;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected chop::Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("miner")
{
    TEST_CASE("segmentation keeps records with at least K steps")
    {
        auto records = io::load_corpus(kMiner + "/corpus.json");
        for (int k = 1; k <= 6; ++k) {
            auto segs = segment_corpus(records, k);
            std::size_t expected = 0;
            for (const auto& r : records)
                expected += r.steps.size() >= static_cast<std::size_t>(k);
            CHECK(segs.size() == expected);
            for (const auto& s : segs)
                CHECK(s.steps.size() >= static_cast<std::size_t>(k));
        }
        CHECK(code_of([] { segment_corpus({}, 3); }) == ErrorCode::EmptyCorpus);
        CHECK(code_of([&] { segment_corpus(records, 0); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("verb extraction takes the first lexicon word")
    {
        auto lex = VerbLexicon::parse("# verbs\nsearch\nsend\nshare\n");
        CHECK(extract_verb("Please send Bob a note", lex) == "send");
        CHECK(extract_verb("Share then send", lex) == "share");
        CHECK(extract_verb("Ring Alice", lex) == "ring");
        lex.fallback_to_first_token = false;
        CHECK(code_of([&] { extract_verb("Ring Alice", lex); }) == ErrorCode::NoVerbFound);
        CHECK(code_of([&] { extract_verb("   ", lex); }) == ErrorCode::NoVerbFound);
    }

    TEST_CASE("clusters equal the connected components of the synset graph")
    {
        auto table = SynonymTable::load(kMiner + "/synonyms.txt");
        std::vector<std::string> vocab;
        for (const auto& [w, s] : table.entries)
            vocab.push_back(w);
        vocab.push_back("unlisted");
        std::mt19937 rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::string> verbs;
            int n = 1 + static_cast<int>(rng() % 40);
            for (int i = 0; i < n; ++i)
                verbs.push_back(vocab[rng() % vocab.size()]);

            std::vector<std::string> nodes(verbs.begin(), verbs.end());
            std::sort(nodes.begin(), nodes.end());
            nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
            auto linked = [&](const std::string& a, const std::string& b) {
                auto ia = table.entries.find(a), ib = table.entries.find(b);
                if (ia == table.entries.end() || ib == table.entries.end())
                    return false;
                for (const auto& s : ia->second)
                    if (ib->second.count(s))
                        return true;
                return false;
            };
            auto comps = oracle::components(nodes, linked);

            auto clusters = cluster_synonyms(verbs, table);
            REQUIRE(clusters.size() == comps.size());
            std::set<std::set<std::string>> got, want(comps.begin(), comps.end());
            for (const auto& c : clusters) {
                got.insert(c.members);
                int freq = 0;
                std::string canon;
                int best = -1;
                for (const auto& m : c.members) {
                    int f = static_cast<int>(std::count(verbs.begin(), verbs.end(), m));
                    CHECK(c.member_frequency.at(m) == f);
                    freq += f;
                    if (f > best) {
                        best = f;
                        canon = m;
                    }
                }
                CHECK(c.frequency == freq);
                CHECK(c.canonical_verb == canon);
            }
            CHECK(got == want);
            for (std::size_t i = 1; i < clusters.size(); ++i)
                CHECK(clusters[i - 1].canonical_verb < clusters[i].canonical_verb);
        }
    }

    TEST_CASE("top-k matches a brute-force frequency sort")
    {
        std::mt19937 rng(9);
        const char* names[] = {"add", "call", "check", "open", "play", "send", "share", "view", "like", "go", "zip", "edit"};
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<VerbCluster> pool;
            for (const char* n : names)
                if (rng() % 4)
                    pool.push_back(cluster(n, 1 + static_cast<int>(rng() % 4)));
            std::shuffle(pool.begin(), pool.end(), rng);
            int k = 1 + static_cast<int>(rng() % 12);
            std::vector<std::string> got;
            for (const auto& c : filter_top_k(pool, k))
                got.push_back(c.canonical_verb);
            CHECK(got == brute_top_k(pool, k));
        }
    }

    TEST_CASE("the example summary parses into four steps and three boundary conditions")
    {
        auto doc = parse_summary(kSearchSummary);
        REQUIRE(doc.standardized_process.size() == 4);
        REQUIRE(doc.boundary_conditions.size() == 3);
        CHECK(doc.standardized_process[0] == "Click on the search bar located at the designated area of the screen.");
        CHECK(doc.standardized_process[3] == "Press enter or click on the search button to execute the search.");
        CHECK(doc.boundary_conditions[2]
              == "If navigating to a specific website, ensure the URL is entered correctly in the address bar.");
    }

    TEST_CASE("summary parsing handles markdown, bullets and Chinese headings")
    {
        auto md = parse_summary("**Standardized Process**\n1. Open it\n2) Tap go\n\n## Boundary Conditions\n- none left\n* maybe\n");
        CHECK(md.standardized_process == std::vector<std::string>{"Open it", "Tap go"});
        CHECK(md.boundary_conditions == std::vector<std::string>{"none left", "maybe"});
        auto zh = parse_summary("标准流程：\n1. 点击搜索栏\n2. 输入内容\n边界条件：\n1. 检查拼写");
        CHECK(zh.standardized_process.size() == 2);
        CHECK(zh.boundary_conditions.size() == 1);
        CHECK(code_of([] { parse_summary("I cannot help with that."); }) == ErrorCode::UnparseableSummary);
    }

    TEST_CASE("summarize prompt embeds the rendered sequences")
    {
        VerbCluster c = cluster("search", 1);
        DemoSegment s{"d1", "Search Bob", "mail", {{parse_action("CLICK(Search Bar)"), "tap"}, {Exit{}, "done"}}};
        c.segments = {s};
        auto prompt = build_summarize_prompt(c);
        CHECK(prompt.rfind("Please summarize the following ", 0) == 0);
        CHECK(prompt.find("Sequence 1: Search Bob") != std::string::npos);
        CHECK(prompt.find("1. CLICK(Search Bar) | thought: tap") != std::string::npos);
        CHECK(prompt.find("{{") == std::string::npos);
    }

    TEST_CASE("mined library from the bundled corpus")
    {
        auto records = io::load_corpus(kMiner + "/corpus.json");
        auto lexicon = VerbLexicon::load(kMiner + "/lexicon.txt");
        auto table = SynonymTable::load(kMiner + "/synonyms.txt");
        auto overlay = LibraryOverlay::load(kMiner + "/overlay.json");
        backends::ScriptedBackend backend;
        backend.load(kMiner + "/summaries.json");
        auto result = mine_library(records, lexicon, table, overlay, backend);

        CHECK(result.segments.size() >= 30);
        CHECK(result.clusters.size() >= 12);
        REQUIRE(result.library.size() == 10);
        std::vector<std::string> names;
        for (const auto& s : result.library)
            names.push_back(s.name);
        std::sort(names.begin(), names.end());
        CHECK(names == std::vector<std::string>{"Check Notifications", "Create or Edit Entry", "Interact",
                                                "Manage Collections", "Modify Settings", "Open Section",
                                                "Search Item", "Send Text Message", "Share Content", "View Content"});
        const auto* search = find_subtask(result.library, "search item");
        REQUIRE(search);
        CHECK(search->fixed_flow);
        CHECK(search->doc == parse_summary(kSearchSummary));
        for (const auto& c : result.clusters)
            CHECK_FALSE(overlay.excluded(c));

        // Identical input, identical library.
        backends::ScriptedBackend again;
        again.load(kMiner + "/summaries.json");
        auto second = mine_library(records, lexicon, table, overlay, again);
        CHECK(io::dump(io::library_to_json(second.library)) == io::dump(io::library_to_json(result.library)));
    }

    TEST_CASE("clusters without an overlay entry get a default name")
    {
        auto c = cluster("ring", 3);
        c.segments.push_back({"d", "Ring Bob", "phone", {{Exit{}, ""}}});
        auto lib = build_library({c}, {{"ring", SubtaskDoc{{"Dial"}, {}}}});
        REQUIRE(lib.size() == 1);
        CHECK(lib[0].name == "Ring");
        CHECK(lib[0].parameter_roles == std::vector<std::string>{"parameter"});
        CHECK(code_of([&] { build_library({c}, {}); }) == ErrorCode::MissingDoc);
    }
}
