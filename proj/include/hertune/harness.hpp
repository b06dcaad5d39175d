#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hertune/agent.hpp"
#include "hertune/envs.hpp"
#include "hertune/ga.hpp"

namespace hertune::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunConfig {
  std::string env = "reach";
  envs::EnvOverrides env_overrides;
  agent::HyperParams params;
  agent::TrainConfig train;
  ga::GaConfig ga;
  std::uint64_t seed = 1;
  fs::path out_dir = "runs";
  std::string label = "run";
  bool early_stop = false;

  void validate() const;
};

// Flat key/value form. Learning parameters use the names gamma, polyak,
// lr_critic, lr_actor, random_eps and noise_eps; GA settings live under "ga".
// Every default is materialised, so the result fully describes a run.
json to_json(const RunConfig& config);
// Keys missing from j keep their value from `defaults`; unknown keys are an
// error.
RunConfig run_config_from_json(const json& j, const RunConfig& defaults = {});
RunConfig load_run_config(const fs::path& path);
// Applies "key=value" overrides; values are parsed as JSON when possible.
void apply_overrides(json& j, const std::vector<std::string>& assignments);

struct LearningCurve {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> points;  // (epoch, success rate)
  bool failed = false;
  std::string failure_reason;

  std::optional<int> epochs_to_threshold(double threshold) const;
};

// Writes <out>/<label>/{run.csv, manifest.json, actor.ckpt, critic.ckpt}.
// run.csv gains one "epoch,success_rate" row per finished epoch.
LearningCurve run_training(const RunConfig& config);

struct ComparisonReport {
  std::vector<LearningCurve> curves_a, curves_b;
  std::vector<double> mean_a, mean_b;
  // Median epochs-to-threshold; runs that never reach it count as
  // max_epochs + 1, and the median is empty when it lands on such a run.
  std::optional<double> median_epochs_a, median_epochs_b;
};

// Runs both configs on the same n_seeds seeds (derived from config_a.seed).
// Writes comparison.csv (label,seed,epoch,success_rate),
// comparison_mean.csv (label,epoch,mean_success_rate) and summary.json
// under out_dir.
ComparisonReport run_comparison(const RunConfig& config_a, const RunConfig& config_b, int n_seeds,
                                const fs::path& out_dir, int workers);

struct CampaignReport {
  ga::FitnessRecord best;
  std::vector<ga::GenerationStats> history;
  std::vector<ga::FitnessRecord> population;
  bool finished = false;
};

struct TuneOptions {
  bool resume = true;
  std::optional<int> stop_after_generation;
};

// GA campaign over config.params' six fields, using config.train (with
// max_epochs as the fitness budget) for every inner run. Persists
// campaign.json after every generation and resumes from it when present.
// Writes campaign.csv (generation,best,mean,worst,polyak,gamma,lr_critic,
// lr_actor,random_eps,noise_eps) and report.json under <out>/<label>.
CampaignReport run_tuning(const RunConfig& config, const TuneOptions& options = {});

// Reads run.csv, comparison_mean.csv, comparison.csv or campaign.csv files
// and writes tidy "series,x,y" rows. Optionally renders an SVG line chart.
std::size_t emit_plot_data(const std::vector<fs::path>& inputs, const fs::path& out_csv,
                           const std::optional<fs::path>& svg = std::nullopt);

// Greedy success rate of a saved actor checkpoint.
double evaluate_checkpoint(const fs::path& actor_checkpoint, const std::string& env,
                           const envs::EnvOverrides& overrides, int episodes, std::uint64_t seed);

json to_json(const ga::FitnessRecord& r);
ga::FitnessRecord fitness_record_from_json(const json& j);
json to_json(const ga::CampaignState& state);
ga::CampaignState campaign_state_from_json(const json& j);

}  // namespace hertune::harness
