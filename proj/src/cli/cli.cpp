// SPDX-License-Identifier: Apache-2.0
#include "chop/cli/cli.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "chop/agents/agents.hpp"
#include "chop/backends/cassette.hpp"
#include "chop/backends/http.hpp"
#include "chop/backends/scripted.hpp"
#include "chop/core/prompt_template.hpp"
#include "chop/core/serialize.hpp"
#include "chop/core/text.hpp"
#include "chop/error.hpp"
#include "chop/eval/eval.hpp"
#include "chop/miner/miner.hpp"
#include "chop/simenv/app.hpp"
#include "chop/simenv/device.hpp"

#ifndef CHOP_DEFAULT_PROMPTS
#define CHOP_DEFAULT_PROMPTS "data/prompts"
#endif

namespace fs = std::filesystem;

namespace chop::cli {

namespace {

struct Options {
    BackendOptions backend;
    fs::path tasks, bundles, library, out, archives, prompts = CHOP_DEFAULT_PROMPTS;
    fs::path corpus, lexicon, synonyms, overlay;
    std::string language = "en";
    std::vector<std::string> only_tasks;
    int max_rounds = 20;
    int max_turns = 8;
    int jobs = 1;
    int k = 10;
    int min_steps = 3;
    int max_n = 4;
    bool no_batching = false;
    bool per_app = false;
};

std::string utc_now()
{
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path sibling(const fs::path& given, const fs::path& anchor, const char* name)
{
    return given.empty() ? anchor.parent_path() / name : given;
}

void add_backend_flags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--backend", o.backend.kind, "Completion backend")
        ->check(CLI::IsMember({"scripted", "replay", "replay-strict", "record", "http"}));
    cmd->add_option("--scripts", o.backend.scripts, "Scripted responses (file or directory)");
    cmd->add_option("--cassettes", o.backend.cassettes, "Cassette directory (read for replay, written for record)");
}

std::vector<Task> select_tasks(std::vector<Task> tasks, const std::vector<std::string>& only)
{
    if (only.empty())
        return tasks;
    std::vector<Task> out;
    for (auto& t : tasks)
        if (std::find(only.begin(), only.end(), t.id) != only.end())
            out.push_back(std::move(t));
    return out;
}

int cmd_extract(const Options& o, std::ostream& out)
{
    auto records = io::load_corpus(o.corpus);
    auto lexicon = miner::VerbLexicon::load(sibling(o.lexicon, o.corpus, "lexicon.txt"));
    auto table = miner::SynonymTable::load(sibling(o.synonyms, o.corpus, "synonyms.txt"));
    auto overlay_path = sibling(o.overlay, o.corpus, "overlay.json");
    auto overlay = fs::exists(overlay_path) ? miner::LibraryOverlay::load(overlay_path) : miner::LibraryOverlay{};

    miner::MinerConfig config;
    config.top_k = o.k;
    config.min_steps = o.min_steps;
    auto summarize = o.prompts / o.language / "summarize.txt";
    if (fs::exists(summarize))
        config.prompt_template = io::read_file(summarize);

    auto backend = make_backend(o.backend);
    auto result = miner::mine_library(records, lexicon, table, overlay, *backend, config);
    io::save_library(o.out, result.library);

    out << records.size() << " records, " << result.segments.size() << " segments with at least " << o.min_steps
        << " steps, " << result.clusters.size() << " clusters\n";
    std::set<std::string> kept;
    for (const auto& c : result.retained)
        kept.insert(c.canonical_verb);
    for (const auto& c : miner::filter_top_k(result.clusters, static_cast<int>(result.clusters.size()) + 1)) {
        out << (kept.count(c.canonical_verb) ? "  * " : "    ") << c.canonical_verb << " " << c.frequency << " ["
            << text::join(std::vector<std::string>(c.members.begin(), c.members.end()), " ") << "]\n";
    }
    out << "wrote " << result.library.size() << " basis subtasks to " << o.out.string() << "\n";
    return kOk;
}

int cmd_run(const Options& o, std::ostream& out)
{
    auto tasks = select_tasks(io::load_tasks(o.tasks), o.only_tasks);
    auto bundles = sim::load_app_bundles(o.bundles);
    auto library = io::load_library(o.library);
    auto prompts = PromptSet::load(o.prompts, parse_language(o.language));
    auto backend = make_backend(o.backend);

    agents::RunnerConfig config;
    config.max_rounds = o.max_rounds;
    config.max_turns_per_subtask = o.max_turns;
    config.allow_batching = !o.no_batching;
    config.language = prompts.language;

    std::vector<Episode> episodes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (auto i = next++; i < tasks.size(); i = next++) {
            try {
                episodes[i] = agents::run_episode(tasks[i], bundles, library, *backend, prompts, config);
                io::save_episode(o.out / (tasks[i].id + ".json"), episodes[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> threads;
    for (int j = 1; j < jobs; ++j)
        threads.emplace_back(worker);
    worker();
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    int status = kOk;
    int successes = 0;
    for (const auto& ep : episodes) {
        out << ep.task_id << " " << (ep.success ? "success" : "failure") << " " << to_string(ep.terminal_reason)
            << " actions=" << ep.executed_actions.size() << " action_calls=" << ep.action_agent_calls
            << " api_calls=" << ep.api_calls_total << "\n";
        successes += ep.success ? 1 : 0;
        if (ep.terminal_reason == TerminalReason::BackendError)
            status = kInfrastructure;
    }
    out << successes << "/" << episodes.size() << " tasks succeeded\n";
    return status;
}

int cmd_eval(const Options& o, std::ostream& out)
{
    auto goldens = io::load_tasks(o.tasks);
    auto episodes = io::load_episodes(o.archives);

    eval::ReportConfig config;
    config.per_app = o.per_app;
    config.bleu_max_n = o.max_n;
    eval::RegistryMap registries;
    if (!o.bundles.empty()) {
        auto bundles = sim::load_app_bundles(o.bundles);
        registries = eval::registries_for(goldens, bundles);
        config.registries = &registries;
        for (const auto& t : goldens) {
            std::vector<sim::AppDefinition> apps;
            for (const auto& b : bundles)
                if (std::find(t.apps.begin(), t.apps.end(), b.app_id) != t.apps.end() || b.app_id == t.app_id)
                    apps.push_back(b);
            config.vocabularies[t.id] = eval::app_vocabulary(apps);
        }
    }
    auto report = eval::aggregate_report(episodes, goldens, config);
    auto text = eval::report_to_text(report, o.per_app);
    if (!o.out.empty()) {
        io::write_file(o.out / "report.json", io::dump(eval::report_to_json(report, utc_now())));
        io::write_file(o.out / "report.txt", text);
        io::write_file(o.out / "report.csv", eval::report_to_csv(report, o.per_app));
    }
    out << text;
    return kOk;
}

int cmd_replay(const Options& o, std::ostream& out)
{
    auto tasks = io::load_tasks(o.tasks);
    auto bundles = sim::load_app_bundles(o.bundles);
    auto episodes = io::load_episodes(o.archives);
    int problems = 0;
    for (const auto& ep : episodes) {
        auto it = std::find_if(tasks.begin(), tasks.end(), [&](const Task& t) { return t.id == ep.task_id; });
        if (it == tasks.end())
            throw Error(ErrorCode::MissingGolden, "no task '" + ep.task_id + "'");
        auto env = sim::environment_for(*it, bundles);
        auto issues = agents::audit_episode(env, ep);
        out << ep.task_id << ": " << ep.executed_actions.size() << " actions, "
            << (issues.empty() ? "consistent" : std::to_string(issues.size()) + " problems") << "\n";
        for (const auto& i : issues)
            out << "  " << i << "\n";
        problems += static_cast<int>(issues.size());
    }
    return problems == 0 ? kOk : kValidation;
}

int cmd_validate(const Options& o, std::ostream& out)
{
    std::vector<std::string> violations;
    std::vector<sim::AppDefinition> bundles;
    int checked = 0;

    if (!o.bundles.empty()) {
        std::vector<fs::path> files;
        if (fs::is_directory(o.bundles)) {
            for (const auto& e : fs::directory_iterator(o.bundles))
                if (e.is_regular_file() && e.path().extension() == ".json")
                    files.push_back(e.path());
            std::sort(files.begin(), files.end());
        } else {
            files.push_back(o.bundles);
        }
        for (const auto& f : files) {
            ++checked;
            try {
                auto app = sim::load_app_bundle(f);
                for (const auto& s : sim::unreachable_screens(app))
                    violations.push_back(f.string() + ": screen '" + s + "' is unreachable from the home screen");
                bundles.push_back(std::move(app));
            } catch (const std::exception& e) {
                violations.push_back(f.string() + ": " + e.what());
            }
        }
    }

    if (!o.tasks.empty()) {
        ++checked;
        try {
            for (const auto& t : io::load_tasks(o.tasks)) {
                try {
                    validate_task(t);
                    if (bundles.empty())
                        continue;
                    auto env = sim::environment_for(t, bundles);
                    auto r = sim::replay(env, t.golden_actions);
                    if (r.failed_at)
                        violations.push_back("task '" + t.id + "': golden action " + std::to_string(*r.failed_at) +
                                             " (" + render_action(t.golden_actions[*r.failed_at]) + ") fails: " +
                                             r.error);
                    else if (!r.exited)
                        violations.push_back("task '" + t.id + "': golden actions do not end in EXIT");
                } catch (const std::exception& e) {
                    violations.push_back("task '" + t.id + "': " + e.what());
                }
            }
        } catch (const std::exception& e) {
            violations.push_back(o.tasks.string() + ": " + e.what());
        }
    }

    if (!o.library.empty()) {
        ++checked;
        try {
            validate_library(io::load_library(o.library));
        } catch (const std::exception& e) {
            violations.push_back(o.library.string() + ": " + e.what());
        }
    }

    if (!o.backend.cassettes.empty()) {
        ++checked;
        try {
            backends::load_cassettes(o.backend.cassettes);
        } catch (const std::exception& e) {
            violations.push_back(o.backend.cassettes.string() + ": " + e.what());
        }
    }

    if (!o.backend.scripts.empty()) {
        ++checked;
        try {
            backends::ScriptedBackend s;
            s.load(o.backend.scripts);
        } catch (const std::exception& e) {
            violations.push_back(o.backend.scripts.string() + ": " + e.what());
        }
    }

    if (checked == 0)
        throw Error(ErrorCode::InvalidInput, "nothing to validate; pass --bundles, --tasks, --library, --cassettes "
                                             "or --scripts");
    for (const auto& v : violations)
        out << v << "\n";
    out << (violations.empty() ? "ok" : std::to_string(violations.size()) + " violations") << "\n";
    return violations.empty() ? kOk : kValidation;
}

}  // namespace

std::shared_ptr<backends::CompletionBackend> make_backend(const BackendOptions& options)
{
    using namespace backends;
    auto scripted = [&] {
        if (options.scripts.empty())
            throw Error(ErrorCode::InvalidInput, "--scripts is required for the scripted backend");
        auto b = std::make_shared<ScriptedBackend>();
        b->load(options.scripts);
        return b;
    };
    if (options.kind == "scripted")
        return scripted();
    if (options.kind == "replay" || options.kind == "replay-strict") {
        if (options.cassettes.empty())
            throw Error(ErrorCode::InvalidInput, "--cassettes is required for replay");
        return std::make_shared<ReplayBackend>(load_cassettes(options.cassettes),
                                               options.kind == "replay" ? CassetteMode::Replay
                                                                        : CassetteMode::ReplayStrict);
    }
    if (options.kind == "record") {
        if (options.cassettes.empty())
            throw Error(ErrorCode::InvalidInput, "--cassettes is required for recording");
        std::shared_ptr<CompletionBackend> inner;
        if (!options.scripts.empty())
            inner = scripted();
        else
            inner = std::make_shared<HttpBackend>(HttpConfig::from_environment());
        return std::make_shared<RecordingBackend>(inner, options.cassettes);
    }
    if (options.kind == "http")
        return std::make_shared<HttpBackend>(HttpConfig::from_environment());
    throw Error(ErrorCode::InvalidInput, "unknown backend '" + options.kind + "'");
}

int exit_status_for(const std::exception& e)
{
    const auto* err = dynamic_cast<const Error*>(&e);
    if (!err)
        return kInfrastructure;
    switch (err->code()) {
    case ErrorCode::InvalidInput: return kUsage;
    case ErrorCode::IoError:
    case ErrorCode::BackendError:
    case ErrorCode::ScriptExhausted:
    case ErrorCode::CassetteMiss:
    case ErrorCode::TransportError: return kInfrastructure;
    default: return kValidation;
    }
}

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"CHOP benchmarking harness"};
    app.require_subcommand(1);

    auto* extract = app.add_subcommand("extract", "Mine a basis-subtask library from a demonstration corpus");
    extract->add_option("--corpus", o.corpus, "Trajectory corpus")->required()->check(CLI::ExistingFile);
    extract->add_option("--lexicon", o.lexicon, "Verb lexicon (default: lexicon.txt beside the corpus)");
    extract->add_option("--synonyms", o.synonyms, "Synonym table (default: synonyms.txt beside the corpus)");
    extract->add_option("--overlay", o.overlay, "Library overlay (default: overlay.json beside the corpus)");
    extract->add_option("--out", o.out, "Library file to write")->required();
    extract->add_option("--k", o.k, "Basis subtasks to keep")->check(CLI::PositiveNumber);
    extract->add_option("--min-steps", o.min_steps, "Minimum demonstration length")->check(CLI::PositiveNumber);
    extract->add_option("--prompts", o.prompts, "Prompt template directory");
    extract->add_option("--language", o.language)->check(CLI::IsMember({"en", "zh"}));
    add_backend_flags(extract, o);

    auto* run = app.add_subcommand("run", "Run episodes and write one archive per task");
    run->add_option("--tasks", o.tasks, "Golden task file")->required()->check(CLI::ExistingFile);
    run->add_option("--bundles", o.bundles, "App bundle directory")->required()->check(CLI::ExistingPath);
    run->add_option("--library", o.library, "Basis-subtask library")->required()->check(CLI::ExistingFile);
    run->add_option("--out", o.out, "Archive directory")->required();
    run->add_option("--max-rounds", o.max_rounds, "Executed-action cap per episode")->check(CLI::PositiveNumber);
    run->add_option("--max-turns", o.max_turns, "Action-agent turns per subtask")->check(CLI::NonNegativeNumber);
    run->add_option("--jobs", o.jobs, "Concurrent episodes")->check(CLI::PositiveNumber);
    run->add_option("--language", o.language)->check(CLI::IsMember({"en", "zh"}));
    run->add_option("--prompts", o.prompts, "Prompt template directory")->check(CLI::ExistingDirectory);
    run->add_option("--task", o.only_tasks, "Run only these task ids");
    run->add_flag("--no-batching", o.no_batching, "Treat every subtask as single-action");
    add_backend_flags(run, o);

    auto* ev = app.add_subcommand("eval", "Score episode archives against golden tasks");
    ev->add_option("--tasks", o.tasks, "Golden task file")->required()->check(CLI::ExistingFile);
    ev->add_option("--archives", o.archives, "Episode archive directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--bundles", o.bundles, "App bundles, for click matching and error classification")
        ->check(CLI::ExistingPath);
    ev->add_option("--out", o.out, "Directory for report.json, report.txt and report.csv");
    ev->add_option("--max-n", o.max_n, "Highest BLEU n-gram order")->check(CLI::PositiveNumber);
    ev->add_flag("--per-app", o.per_app, "Add a per-app breakdown");

    auto* replay = app.add_subcommand("replay", "Re-execute archived episodes through the simulator");
    replay->add_option("--tasks", o.tasks, "Golden task file")->required()->check(CLI::ExistingFile);
    replay->add_option("--bundles", o.bundles, "App bundle directory")->required()->check(CLI::ExistingPath);
    replay->add_option("--archives", o.archives, "Episode archive directory")->required()->check(CLI::ExistingDirectory);

    auto* validate = app.add_subcommand("validate", "Schema-check bundles, tasks, libraries, cassettes and scripts");
    validate->add_option("--bundles", o.bundles)->check(CLI::ExistingPath);
    validate->add_option("--tasks", o.tasks)->check(CLI::ExistingFile);
    validate->add_option("--library", o.library)->check(CLI::ExistingFile);
    validate->add_option("--cassettes", o.backend.cassettes)->check(CLI::ExistingPath);
    validate->add_option("--scripts", o.backend.scripts)->check(CLI::ExistingPath);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "chop: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (extract->parsed())
            return cmd_extract(o, out);
        if (run->parsed())
            return cmd_run(o, out);
        if (ev->parsed())
            return cmd_eval(o, out);
        if (replay->parsed())
            return cmd_replay(o, out);
        return cmd_validate(o, out);
    } catch (const std::exception& e) {
        err << "chop: " << e.what() << "\n";
        return exit_status_for(e);
    }
}

int run_main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_main(args, std::cout, std::cerr);
}

}  // namespace chop::cli
