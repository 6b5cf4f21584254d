// SPDX-License-Identifier: Apache-2.0
#include "chop/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chop/core/text.hpp"
#include "chop/error.hpp"
#include "chop/simenv/device.hpp"

namespace chop::eval {

namespace {

const Task& golden_for(const Episode& ep, const std::map<std::string, const Task*>& index)
{
    auto it = index.find(ep.task_id);
    if (it == index.end())
        throw Error(ErrorCode::MissingGolden, "no golden task for episode '" + ep.task_id + "'");
    return *it->second;
}

std::map<std::string, const Task*> index_goldens(const std::vector<Task>& goldens)
{
    std::map<std::string, const Task*> index;
    for (const auto& t : goldens)
        index.emplace(t.id, &t);
    return index;
}

EqualityPolicy policy_for(const EqualityPolicy& base, const RegistryMap* registries, const std::string& task_id)
{
    auto p = base;
    if (registries && !p.registry) {
        auto it = registries->find(task_id);
        if (it != registries->end())
            p.registry = &it->second;
    }
    return p;
}

Ratio checked(long long num, long long den, const char* what)
{
    if (den == 0)
        throw Error(ErrorCode::DivisionByZero, std::string(what) + ": zero denominator");
    return {num, den};
}

template <typename T, typename Eq>
int lcs_length(const std::vector<T>& a, const std::vector<T>& b, Eq eq)
{
    std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = eq(a[i - 1], b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, int n)
{
    std::map<std::vector<std::string>, int> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                          tokens.begin() + static_cast<long>(i) + n)];
    return counts;
}

std::optional<double> ratio_or_empty(long long num, long long den)
{
    if (den == 0)
        return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json metric_json(const std::optional<double>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json bucket_json(const Bucket& b)
{
    nlohmann::ordered_json j;
    j["episodes"] = b.episodes;
    j["successes"] = b.successes;
    j["golden_actions"] = b.golden_actions;
    j["agent_actions"] = b.agent_actions;
    j["correct_actions"] = b.correct_actions;
    j["action_agent_calls"] = b.action_agent_calls;
    j["api_calls"] = b.api_calls;
    j["sr"] = metric_json(b.sr());
    j["cr"] = metric_json(b.cr());
    j["me"] = metric_json(b.me());
    j["ae"] = metric_json(b.ae());
    j["aac"] = metric_json(b.aac());
    return j;
}

std::string fmt(const std::optional<double>& v)
{
    if (!v)
        return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

std::string bucket_row(const std::string& label, const Bucket& b)
{
    return pad(label, 14) + pad(std::to_string(b.episodes), 10) + pad(fmt(b.sr()), 9) + pad(fmt(b.cr()), 9) +
           pad(fmt(b.me()), 9) + pad(fmt(b.ae()), 9) + fmt(b.aac()) + "\n";
}

std::string csv_row(const std::string& scope, const std::string& label, const Bucket& b)
{
    auto f = [](const std::optional<double>& v) { return v ? fmt(v) : std::string(); };
    return scope + "," + label + "," + std::to_string(b.episodes) + "," + f(b.sr()) + "," + f(b.cr()) + "," +
           f(b.me()) + "," + f(b.ae()) + "," + f(b.aac()) + "\n";
}

}  // namespace

RegistryMap registries_for(const std::vector<Task>& tasks, const std::vector<sim::AppDefinition>& bundles)
{
    RegistryMap out;
    for (const auto& t : tasks)
        out.emplace(t.id, sim::environment_for(t, bundles).registry());
    return out;
}

int lcs_intersection(const std::vector<Action>& human, const std::vector<Action>& agent, const EqualityPolicy& policy)
{
    return lcs_length(human, agent, [&](const Action& a, const Action& b) { return actions_equal(a, b, policy); });
}

Ratio compute_cr(const std::vector<Episode>& episodes, const std::vector<Task>& goldens, const EqualityPolicy& policy,
                 const RegistryMap* registries)
{
    auto index = index_goldens(goldens);
    long long num = 0, den = 0;
    for (const auto& ep : episodes) {
        const auto& g = golden_for(ep, index);
        num += lcs_intersection(g.golden_actions, ep.executed_actions, policy_for(policy, registries, ep.task_id));
        den += static_cast<long long>(g.golden_actions.size());
    }
    return checked(num, den, "CR");
}

Ratio compute_sr(const std::vector<Episode>& episodes)
{
    long long ok = 0;
    for (const auto& ep : episodes)
        ok += ep.success ? 1 : 0;
    return checked(ok, static_cast<long long>(episodes.size()), "SR");
}

Ratio compute_me(const std::vector<Task>& goldens, const std::vector<Episode>& episodes)
{
    auto index = index_goldens(goldens);
    long long num = 0, den = 0;
    for (const auto& ep : episodes) {
        num += static_cast<long long>(golden_for(ep, index).golden_actions.size());
        den += ep.action_agent_calls;
    }
    return checked(num, den, "ME");
}

Ratio compute_ae(const std::vector<Task>& goldens, const std::vector<Episode>& episodes)
{
    auto index = index_goldens(goldens);
    long long num = 0, den = 0;
    for (const auto& ep : episodes) {
        num += static_cast<long long>(golden_for(ep, index).golden_actions.size());
        den += static_cast<long long>(ep.executed_actions.size());
    }
    return checked(num, den, "AE");
}

Ratio compute_aac(const std::vector<Episode>& episodes, const std::vector<Task>& goldens,
                  const EqualityPolicy& policy, const RegistryMap* registries)
{
    auto index = index_goldens(goldens);
    long long num = 0, den = 0;
    for (const auto& ep : episodes) {
        const auto& g = golden_for(ep, index);
        num += ep.api_calls_total;
        den += lcs_intersection(g.golden_actions, ep.executed_actions, policy_for(policy, registries, ep.task_id));
    }
    return checked(num, den, "AAC");
}

double compute_bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int max_n)
{
    if (reference.empty())
        throw Error(ErrorCode::EmptyReference, "BLEU reference is empty");
    if (max_n < 1)
        throw Error(ErrorCode::InvalidInput, "max_n must be at least 1");
    if (candidate.empty())
        return 0.0;
    const int orders = std::min<int>(max_n, static_cast<int>(reference.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= orders; ++n) {
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        long long matched = 0, total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end())
                matched += std::min(count, it->second);
        }
        if (matched == 0)
            return 0.0;
        log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / orders);
}

double compute_rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference)
{
    if (reference.empty())
        throw Error(ErrorCode::EmptyReference, "ROUGE-L reference is empty");
    if (candidate.empty())
        return 0.0;
    const int l = lcs_length(candidate, reference, std::equal_to<>{});
    if (l == 0)
        return 0.0;
    const double p = static_cast<double>(l) / static_cast<double>(candidate.size());
    const double r = static_cast<double>(l) / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

std::vector<std::string> plan_tokens(const std::vector<SubtaskCall>& plan)
{
    std::vector<std::string> tokens;
    for (const auto& call : plan)
        for (auto& t : text::split_whitespace(render_subtask_call(call)))
            tokens.push_back(std::move(t));
    return tokens;
}

std::string_view to_string(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::Hallucination: return "Hallucination";
    case ErrorCategory::PoorGraphicalRecognition: return "PoorGraphicalRecognition";
    case ErrorCategory::MisinterpretationOfTaskContext: return "MisinterpretationOfTaskContext";
    case ErrorCategory::ExceedsMaxIterations: return "ExceedsMaxIterations";
    case ErrorCategory::OutputParseError: return "OutputParseError";
    }
    return "Unknown";
}

std::set<std::string> app_vocabulary(const std::vector<sim::AppDefinition>& apps)
{
    std::set<std::string> vocab;
    auto add = [&](std::string_view s) {
        for (auto& t : text::word_tokens(s))
            vocab.insert(std::move(t));
    };
    for (const auto& app : apps) {
        add(app.title);
        for (const auto& screen : app.screens) {
            add(screen.title);
            for (const auto& e : screen.elements)
                add(e.name);
            for (const auto& f : screen.text_fields)
                add(f.value);
        }
    }
    return vocab;
}

ErrorCategory classify_error(const Episode& episode, const Task& golden, const std::set<std::string>& vocabulary)
{
    if (episode.success)
        throw Error(ErrorCode::NotAFailure, "episode '" + episode.task_id + "' succeeded");
    if (episode.terminal_reason == TerminalReason::ParseError)
        return ErrorCategory::OutputParseError;
    if (episode.terminal_reason == TerminalReason::MaxRounds)
        return ErrorCategory::ExceedsMaxIterations;
    for (const auto& t : episode.transcripts)
        for (const auto& e : t.errors)
            if (e.find(to_string(ErrorCode::NoSuchElement)) != std::string::npos)
                return ErrorCategory::PoorGraphicalRecognition;

    auto known = vocabulary;
    for (auto& t : text::word_tokens(golden.instruction))
        known.insert(std::move(t));
    for (const auto& call : episode.plan) {
        for (const auto& p : call.parameters) {
            auto words = text::word_tokens(p);
            if (words.empty())
                continue;
            bool grounded = std::any_of(words.begin(), words.end(), [&](const std::string& w) { return known.count(w); });
            if (!grounded)
                return ErrorCategory::Hallucination;
        }
    }
    return ErrorCategory::MisinterpretationOfTaskContext;
}

std::optional<double> Bucket::sr() const { return ratio_or_empty(successes, episodes); }
std::optional<double> Bucket::cr() const { return ratio_or_empty(correct_actions, golden_actions); }
std::optional<double> Bucket::me() const { return ratio_or_empty(golden_actions, action_agent_calls); }
std::optional<double> Bucket::ae() const { return ratio_or_empty(golden_actions, agent_actions); }
std::optional<double> Bucket::aac() const { return ratio_or_empty(api_calls, correct_actions); }

void Bucket::add(const Bucket& o)
{
    episodes += o.episodes;
    successes += o.successes;
    golden_actions += o.golden_actions;
    agent_actions += o.agent_actions;
    correct_actions += o.correct_actions;
    action_agent_calls += o.action_agent_calls;
    api_calls += o.api_calls;
}

MetricsReport aggregate_report(const std::vector<Episode>& episodes, const std::vector<Task>& goldens,
                               const ReportConfig& config)
{
    MetricsReport report;
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard})
        report.per_difficulty[std::string(to_string(d))] = {};
    for (auto c : kAllCategories)
        report.error_histogram[std::string(to_string(c))] = 0;

    auto index = index_goldens(goldens);
    double bleu_sum = 0.0, rouge_sum = 0.0;
    for (const auto& ep : episodes) {
        const auto& g = golden_for(ep, index);
        Bucket b;
        b.episodes = 1;
        b.successes = ep.success ? 1 : 0;
        b.golden_actions = static_cast<long long>(g.golden_actions.size());
        b.agent_actions = static_cast<long long>(ep.executed_actions.size());
        b.correct_actions =
            lcs_intersection(g.golden_actions, ep.executed_actions, policy_for(config.policy, config.registries, ep.task_id));
        b.action_agent_calls = ep.action_agent_calls;
        b.api_calls = ep.api_calls_total;

        report.overall.add(b);
        report.per_difficulty[std::string(to_string(g.difficulty))].add(b);
        if (config.per_app)
            report.per_app[g.app_id].add(b);

        if (g.golden_plan && !g.golden_plan->empty()) {
            auto ref = plan_tokens(*g.golden_plan);
            auto cand = plan_tokens(ep.plan);
            bleu_sum += compute_bleu(cand, ref, config.bleu_max_n);
            rouge_sum += compute_rouge_l(cand, ref);
            ++report.plans_scored;
        }

        if (!ep.success) {
            auto vocab = config.vocabularies.find(ep.task_id);
            static const std::set<std::string> none;
            auto category = classify_error(ep, g, vocab == config.vocabularies.end() ? none : vocab->second);
            report.error_histogram[std::string(to_string(category))] += 1;
            report.episode_errors[ep.task_id] = std::string(to_string(category));
        }
    }
    if (report.plans_scored > 0) {
        report.subtask_bleu = bleu_sum / report.plans_scored;
        report.subtask_rouge_l = rouge_sum / report.plans_scored;
    }
    return report;
}

nlohmann::ordered_json report_to_json(const MetricsReport& report, const std::string& generated_at)
{
    nlohmann::ordered_json j;
    j["generated_at"] = generated_at;
    j["overall"] = bucket_json(report.overall);
    nlohmann::ordered_json diff = nlohmann::ordered_json::object();
    for (const auto& [k, b] : report.per_difficulty)
        diff[k] = bucket_json(b);
    j["per_difficulty"] = diff;
    if (!report.per_app.empty()) {
        nlohmann::ordered_json apps = nlohmann::ordered_json::object();
        for (const auto& [k, b] : report.per_app)
            apps[k] = bucket_json(b);
        j["per_app"] = apps;
    }
    j["plans_scored"] = report.plans_scored;
    j["subtask_bleu"] = metric_json(report.subtask_bleu);
    j["subtask_rouge_l"] = metric_json(report.subtask_rouge_l);
    j["error_histogram"] = report.error_histogram;
    j["episode_errors"] = report.episode_errors;
    j["notes"] = "AAC counts plan and action model calls; element grounding is a registry lookup and costs no API "
                 "call. Error categories come from a fixed rule cascade.";
    return j;
}

std::string report_to_text(const MetricsReport& report, bool per_app)
{
    std::string out = pad("bucket", 14) + pad("episodes", 10) + pad("SR", 9) + pad("CR", 9) + pad("ME", 9) +
                      pad("AE", 9) + "AAC\n";
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
        auto key = std::string(to_string(d));
        out += bucket_row(key, report.per_difficulty.at(key));
    }
    out += bucket_row("overall", report.overall);
    if (per_app && !report.per_app.empty()) {
        out += "\nper app\n";
        for (const auto& [k, b] : report.per_app)
            out += bucket_row(k, b);
    }
    out += "\nsubtask BLEU " + fmt(report.subtask_bleu) + "  ROUGE-L " + fmt(report.subtask_rouge_l) + " (" +
           std::to_string(report.plans_scored) + " plans)\n";
    out += "errors:";
    for (const auto& [k, n] : report.error_histogram)
        out += " " + k + "=" + std::to_string(n);
    out += "\n";
    return out;
}

std::string report_to_csv(const MetricsReport& report, bool per_app)
{
    std::string out = "scope,bucket,episodes,sr,cr,me,ae,aac\n";
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
        auto key = std::string(to_string(d));
        out += csv_row("difficulty", key, report.per_difficulty.at(key));
    }
    out += csv_row("overall", "all", report.overall);
    if (per_app)
        for (const auto& [k, b] : report.per_app)
            out += csv_row("app", k, b);
    return out;
}

}  // namespace chop::eval
