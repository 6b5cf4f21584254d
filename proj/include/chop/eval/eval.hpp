// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chop/core/action.hpp"
#include "chop/core/types.hpp"
#include "chop/simenv/app.hpp"

namespace chop::eval {

// An exact ratio. Metrics keep their raw sums so buckets can be recombined.
struct Ratio {
    long long numerator = 0;
    long long denominator = 0;

    double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
    bool operator==(const Ratio&) const = default;
};

// Element registries per task id, used to match coordinate clicks against
// named golden clicks.
using RegistryMap = std::map<std::string, ElementRegistry>;

RegistryMap registries_for(const std::vector<Task>& tasks, const std::vector<sim::AppDefinition>& bundles);

// Longest common subsequence length under actions_equal.
int lcs_intersection(const std::vector<Action>& human, const std::vector<Action>& agent,
                     const EqualityPolicy& policy = {});

// Each episode is matched to the golden task with its task_id
// (MissingGolden otherwise). Sums run over episodes.
Ratio compute_cr(const std::vector<Episode>& episodes, const std::vector<Task>& goldens,
                 const EqualityPolicy& policy = {}, const RegistryMap* registries = nullptr);
Ratio compute_sr(const std::vector<Episode>& episodes);
Ratio compute_me(const std::vector<Task>& goldens, const std::vector<Episode>& episodes);
Ratio compute_ae(const std::vector<Task>& goldens, const std::vector<Episode>& episodes);
Ratio compute_aac(const std::vector<Episode>& episodes, const std::vector<Task>& goldens,
                  const EqualityPolicy& policy = {}, const RegistryMap* registries = nullptr);

// BLEU over token sequences: clipped n-gram precisions for n = 1..N with
// N = min(max_n, |reference|), uniform weights, brevity penalty. A zero
// precision gives 0.
double compute_bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                    int max_n = 4);
// LCS-based F1.
double compute_rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

// Rendered subtask calls joined and split on whitespace.
std::vector<std::string> plan_tokens(const std::vector<SubtaskCall>& plan);

enum class ErrorCategory {
    Hallucination,
    PoorGraphicalRecognition,
    MisinterpretationOfTaskContext,
    ExceedsMaxIterations,
    OutputParseError,
};

std::string_view to_string(ErrorCategory c);
inline constexpr ErrorCategory kAllCategories[] = {
    ErrorCategory::Hallucination, ErrorCategory::PoorGraphicalRecognition,
    ErrorCategory::MisinterpretationOfTaskContext, ErrorCategory::ExceedsMaxIterations,
    ErrorCategory::OutputParseError,
};

// Lower-cased word tokens of every screen title, element name and text
// field value in the bundles.
std::set<std::string> app_vocabulary(const std::vector<sim::AppDefinition>& apps);

// First matching rule: parse_error -> OutputParseError; max_rounds ->
// ExceedsMaxIterations; a NoSuchElement note in any transcript ->
// PoorGraphicalRecognition; a plan parameter none of whose words occur in the
// instruction or the app vocabulary -> Hallucination; otherwise
// MisinterpretationOfTaskContext.
ErrorCategory classify_error(const Episode& episode, const Task& golden, const std::set<std::string>& vocabulary = {});

struct Bucket {
    int episodes = 0;
    int successes = 0;
    long long golden_actions = 0;
    long long agent_actions = 0;
    long long correct_actions = 0;  // summed LCS
    long long action_agent_calls = 0;
    long long api_calls = 0;

    // Undefined metrics (zero denominators) are empty.
    std::optional<double> sr() const;
    std::optional<double> cr() const;
    std::optional<double> me() const;
    std::optional<double> ae() const;
    std::optional<double> aac() const;

    void add(const Bucket& other);
    bool operator==(const Bucket&) const = default;
};

struct MetricsReport {
    Bucket overall;
    std::map<std::string, Bucket> per_difficulty;  // always easy, medium, hard
    std::map<std::string, Bucket> per_app;
    int plans_scored = 0;
    std::optional<double> subtask_bleu;  // mean over episodes whose task has a golden plan
    std::optional<double> subtask_rouge_l;
    std::map<std::string, int> error_histogram;        // every category, zero when absent
    std::map<std::string, std::string> episode_errors;  // task_id -> category of failed episodes
};

struct ReportConfig {
    EqualityPolicy policy;
    const RegistryMap* registries = nullptr;
    std::map<std::string, std::set<std::string>> vocabularies;  // task_id -> app vocabulary
    bool per_app = false;
    int bleu_max_n = 4;
};

MetricsReport aggregate_report(const std::vector<Episode>& episodes, const std::vector<Task>& goldens,
                               const ReportConfig& config = {});

// `generated_at` is the only field that varies between identical runs.
nlohmann::ordered_json report_to_json(const MetricsReport& report, const std::string& generated_at);
std::string report_to_text(const MetricsReport& report, bool per_app);
// SR, CR, ME, AE, AAC per difficulty plus the overall row.
std::string report_to_csv(const MetricsReport& report, bool per_app);

}  // namespace chop::eval
