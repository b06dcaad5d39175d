#include "hertune/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hertune/error.hpp"
#include "hertune/parallel.hpp"
#include "hertune/seeding.hpp"

namespace hertune::harness {

namespace {

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    auto out = open_for_write(tmp);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

json params_json(const agent::HyperParams& p) {
  return {{"gamma", p.gamma},         {"polyak", p.tau},         {"lr_critic", p.alpha_critic},
          {"lr_actor", p.alpha_actor}, {"random_eps", p.epsilon}, {"noise_eps", p.eta}};
}

agent::HyperParams params_from_json(const json& j) {
  agent::HyperParams p;
  p.gamma = j.at("gamma").get<double>();
  p.tau = j.at("polyak").get<double>();
  p.alpha_critic = j.at("lr_critic").get<double>();
  p.alpha_actor = j.at("lr_actor").get<double>();
  p.epsilon = j.at("random_eps").get<double>();
  p.eta = j.at("noise_eps").get<double>();
  return p;
}

json ga_json(const ga::GaConfig& g) {
  return {{"population_size", g.population_size}, {"generations", g.generations},
          {"mutation_rate", g.mutation_rate},     {"elitism_count", g.elitism_count},
          {"fitness_seeds", g.fitness_seeds},     {"seed_with_original", g.seed_with_original}};
}

void ga_from_json(const json& j, ga::GaConfig& g) {
  require(j.is_object(), "config key 'ga' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "population_size") g.population_size = value.get<int>();
    else if (key == "generations") g.generations = value.get<int>();
    else if (key == "mutation_rate") g.mutation_rate = value.get<double>();
    else if (key == "elitism_count") g.elitism_count = value.get<int>();
    else if (key == "fitness_seeds") g.fitness_seeds = value.get<int>();
    else if (key == "seed_with_original") g.seed_with_original = value.get<bool>();
    else throw ContractViolation("unknown config key 'ga." + key + "'");
  }
}

std::string format_rate(double v) { return fmt::format("{}", v); }

std::optional<double> median_epochs(const std::vector<LearningCurve>& curves, double threshold,
                                    int max_epochs) {
  if (curves.empty()) return std::nullopt;
  std::vector<double> epochs;
  for (const auto& c : curves) {
    const auto e = c.epochs_to_threshold(threshold);
    epochs.push_back(e ? static_cast<double>(*e) : static_cast<double>(max_epochs + 1));
  }
  std::sort(epochs.begin(), epochs.end());
  const std::size_t n = epochs.size();
  const double median = n % 2 == 1 ? epochs[n / 2] : 0.5 * (epochs[n / 2 - 1] + epochs[n / 2]);
  if (median > max_epochs) return std::nullopt;
  return median;
}

// Per-epoch mean over seeds. Shorter curves (early stop or failure) hold
// their last value; a curve with no epochs contributes zero.
std::vector<double> mean_curve(const std::vector<LearningCurve>& curves) {
  std::size_t length = 0;
  for (const auto& c : curves) length = std::max(length, c.points.size());
  std::vector<double> mean(length, 0.0);
  if (curves.empty()) return mean;
  for (std::size_t e = 0; e < length; ++e) {
    double sum = 0.0;
    for (const auto& c : curves) {
      if (c.points.empty()) continue;
      sum += e < c.points.size() ? c.points[e].second : c.points.back().second;
    }
    mean[e] = sum / static_cast<double>(curves.size());
  }
  return mean;
}

std::string campaign_csv_header() {
  return "generation,best,mean,worst,polyak,gamma,lr_critic,lr_actor,random_eps,noise_eps\n";
}

std::string campaign_csv_row(const ga::GenerationStats& s) {
  const auto& p = s.best_params;
  return fmt::format("{},{},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f}\n", s.generation,
                     s.best, s.mean, s.worst, p.tau, p.gamma, p.alpha_critic, p.alpha_actor,
                     p.epsilon, p.eta);
}

json stats_json(const ga::GenerationStats& s) {
  return {{"generation", s.generation}, {"best", s.best},
          {"mean", s.mean},             {"worst", s.worst},
          {"best_params", params_json(s.best_params)}};
}

ga::GenerationStats stats_from_json(const json& j) {
  ga::GenerationStats s;
  s.generation = j.at("generation").get<int>();
  s.best = j.at("best").get<double>();
  s.mean = j.at("mean").get<double>();
  s.worst = j.at("worst").get<double>();
  s.best_params = params_from_json(j.at("best_params"));
  return s;
}

// Configuration identity for resume checks; the output location may move.
json campaign_fingerprint(const RunConfig& config) {
  json j = to_json(config);
  j.erase("out");
  return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void write_svg(const std::vector<Series>& series, const fs::path& path) {
  double x_min = std::numeric_limits<double>::max(), x_max = std::numeric_limits<double>::lowest();
  double y_min = 0.0, y_max = 1.0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_min > x_max) x_min = 0.0, x_max = 1.0;
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  constexpr double kWidth = 640, kHeight = 400, kMargin = 50;
  auto px = [&](double x) { return kMargin + (x - x_min) / (x_max - x_min) * (kWidth - 2 * kMargin); };
  auto py = [&](double y) {
    return kHeight - kMargin - (y - y_min) / (y_max - y_min) * (kHeight - 2 * kMargin);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  auto out = open_for_write(path);
  fmt::print(out,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
             "viewBox=\"0 0 {0} {1}\">\n",
             kWidth, kHeight);
  fmt::print(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  fmt::print(out,
             "<polyline fill=\"none\" stroke=\"black\" points=\"{},{} {},{} {},{}\"/>\n",
             kMargin, kMargin, kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin);
  fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{:.3g}</text>\n", 5, py(y_max) + 4, y_max);
  fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{:.3g}</text>\n", 5, py(y_min) + 4, y_min);
  fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{:.3g}</text>\n", px(x_min),
             kHeight - kMargin + 18, x_min);
  fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{:.3g}</text>\n", px(x_max) - 20,
             kHeight - kMargin + 18, x_max);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string pts;
    for (const auto& [x, y] : series[i].points) pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    fmt::print(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
               color, pts);
    fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>\n",
               kWidth - kMargin - 120, kMargin + 14 * static_cast<double>(i), color,
               series[i].label);
  }
  fmt::print(out, "</svg>\n");
}

}  // namespace

// ------------------------------------------------------------ configuration

void RunConfig::validate() const {
  require(envs::is_registered(env), "unknown environment '" + env + "'");
  params.validate();
  train.validate();
  ga.validate();
  require(!label.empty(), "run label must not be empty");
}

json to_json(const RunConfig& c) {
  const auto env = envs::make_env(c.env, c.env_overrides);
  json j = params_json(c.params);
  j["env"] = c.env;
  j["seed"] = c.seed;
  j["label"] = c.label;
  j["out"] = c.out_dir.string();
  j["early_stop"] = c.early_stop;
  j["success_distance"] = env->spec().success_distance;
  j["horizon"] = env->spec().horizon;
  j["polyak_convention"] = agent::to_string(c.train.polyak_convention);
  j["cycles_per_epoch"] = c.train.cycles_per_epoch;
  j["episodes_per_cycle"] = c.train.episodes_per_cycle;
  j["optimize_steps_per_cycle"] = c.train.optimize_steps_per_cycle;
  j["batch_size"] = c.train.batch_size;
  j["eval_episodes"] = c.train.eval_episodes;
  j["max_epochs"] = c.train.max_epochs;
  j["success_threshold"] = c.train.success_threshold;
  j["target_clip"] = c.train.target_clip;
  j["her_k"] = c.train.her_k;
  j["her_strategy"] = replay::to_string(c.train.her_strategy);
  j["buffer_capacity"] = c.train.buffer_capacity;
  j["hidden_layers"] = c.train.hidden_layers;
  j["ga"] = ga_json(c.ga);
  return j;
}

RunConfig run_config_from_json(const json& j, const RunConfig& defaults) {
  require(j.is_object(), "configuration must be a JSON object");
  RunConfig c = defaults;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "env") c.env = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "label") c.label = v.get<std::string>();
      else if (key == "out") c.out_dir = v.get<std::string>();
      else if (key == "early_stop") c.early_stop = v.get<bool>();
      else if (key == "gamma") c.params.gamma = v.get<double>();
      else if (key == "polyak") c.params.tau = v.get<double>();
      else if (key == "lr_critic") c.params.alpha_critic = v.get<double>();
      else if (key == "lr_actor") c.params.alpha_actor = v.get<double>();
      else if (key == "random_eps") c.params.epsilon = v.get<double>();
      else if (key == "noise_eps") c.params.eta = v.get<double>();
      else if (key == "success_distance") c.env_overrides.success_distance = v.get<double>();
      else if (key == "horizon") c.env_overrides.horizon = v.get<int>();
      else if (key == "polyak_convention")
        c.train.polyak_convention = agent::polyak_convention_from_string(v.get<std::string>());
      else if (key == "cycles_per_epoch") c.train.cycles_per_epoch = v.get<int>();
      else if (key == "episodes_per_cycle") c.train.episodes_per_cycle = v.get<int>();
      else if (key == "optimize_steps_per_cycle") c.train.optimize_steps_per_cycle = v.get<int>();
      else if (key == "batch_size") c.train.batch_size = v.get<int>();
      else if (key == "eval_episodes") c.train.eval_episodes = v.get<int>();
      else if (key == "max_epochs") c.train.max_epochs = v.get<int>();
      else if (key == "success_threshold") c.train.success_threshold = v.get<double>();
      else if (key == "target_clip") c.train.target_clip = v.get<bool>();
      else if (key == "her_k") c.train.her_k = v.get<int>();
      else if (key == "her_strategy")
        c.train.her_strategy = replay::her_strategy_from_string(v.get<std::string>());
      else if (key == "buffer_capacity") c.train.buffer_capacity = v.get<std::size_t>();
      else if (key == "hidden_layers") c.train.hidden_layers = v.get<std::vector<int>>();
      else if (key == "ga") ga_from_json(v, c.ga);
      else throw ContractViolation("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("bad configuration value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ContractViolation("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

void apply_overrides(json& j, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like key=value: " + a);
    const std::string key = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      j[key] = value;
    } else {
      j[key.substr(0, dot)][key.substr(dot + 1)] = value;
    }
  }
}

// ------------------------------------------------------------ training runs

std::optional<int> LearningCurve::epochs_to_threshold(double threshold) const {
  for (const auto& [epoch, rate] : points)
    if (rate >= threshold) return epoch;
  return std::nullopt;
}

LearningCurve run_training(const RunConfig& config) {
  config.validate();
  const fs::path dir = config.out_dir / config.label;
  ensure_directory(dir);

  json manifest;
  manifest["config"] = to_json(config);
  manifest["seeds"] = {
      {"master", config.seed},
      {"agent_init", derive_seed(config.seed, {stream::kAgentInit})},
      {"exploration", derive_seed(config.seed, {stream::kExploration})},
      {"evaluation", "epoch e evaluates with derive_seed(master, [3, e]); episode i of that "
                     "evaluation resets with derive_seed(epoch seed, [i])"},
  };
  manifest["status"] = "running";
  write_text_atomically(dir / "manifest.json", manifest.dump(2) + "\n");

  auto csv = open_for_write(dir / "run.csv");
  csv << "epoch,success_rate\n";
  csv.flush();

  LearningCurve curve;
  curve.label = config.label;
  curve.seed = config.seed;
  agent::TrainingSession session(config.env, config.env_overrides, config.params, config.train,
                                 config.seed);
  const auto outcome =
      agent::train(session, config.train, config.early_stop, [&](int epoch, double rate) {
        curve.points.emplace_back(epoch, rate);
        csv << epoch << ',' << format_rate(rate) << '\n';
        csv.flush();
        if (!csv) throw std::runtime_error("failed writing " + (dir / "run.csv").string());
      });
  curve.failed = outcome.failed;
  curve.failure_reason = outcome.failure_reason;

  nn::save_checkpoint(session.agent().actor(), (dir / "actor.ckpt").string());
  nn::save_checkpoint(session.agent().critic(), (dir / "critic.ckpt").string());

  manifest["status"] = outcome.failed ? "failed" : "complete";
  if (outcome.failed) manifest["failure_reason"] = outcome.failure_reason;
  manifest["epochs_completed"] = curve.points.size();
  const auto reached = curve.epochs_to_threshold(config.train.success_threshold);
  manifest["epochs_to_threshold"] = reached ? json(*reached) : json(nullptr);
  write_text_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
  return curve;
}

ComparisonReport run_comparison(const RunConfig& config_a, const RunConfig& config_b, int n_seeds,
                                const fs::path& out_dir, int workers) {
  require(n_seeds >= 1, "comparison needs at least one seed");
  require(config_a.env == config_b.env, "compared configurations must use the same environment");
  require(config_a.label != config_b.label, "compared configurations need distinct labels");
  config_a.validate();
  config_b.validate();
  ensure_directory(out_dir);

  const auto n = static_cast<std::size_t>(n_seeds);
  std::vector<RunConfig> jobs;
  for (const RunConfig* base : {&config_a, &config_b}) {
    for (std::size_t k = 0; k < n; ++k) {
      RunConfig job = *base;
      job.seed = derive_seed(config_a.seed, {stream::kComparison, k});
      job.out_dir = out_dir;
      job.label = fmt::format("{}-seed{}", base->label, k);
      jobs.push_back(std::move(job));
    }
  }
  std::vector<LearningCurve> curves(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) { curves[i] = run_training(jobs[i]); });

  ComparisonReport report;
  report.curves_a.assign(curves.begin(), curves.begin() + static_cast<std::ptrdiff_t>(n));
  report.curves_b.assign(curves.begin() + static_cast<std::ptrdiff_t>(n), curves.end());
  report.mean_a = mean_curve(report.curves_a);
  report.mean_b = mean_curve(report.curves_b);
  report.median_epochs_a = median_epochs(report.curves_a, config_a.train.success_threshold,
                                         config_a.train.max_epochs);
  report.median_epochs_b = median_epochs(report.curves_b, config_b.train.success_threshold,
                                         config_b.train.max_epochs);

  auto csv = open_for_write(out_dir / "comparison.csv");
  csv << "label,seed,epoch,success_rate\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& label = i < n ? config_a.label : config_b.label;
    for (const auto& [epoch, rate] : curves[i].points)
      csv << label << ',' << jobs[i].seed << ',' << epoch << ',' << format_rate(rate) << '\n';
  }
  auto mean_csv = open_for_write(out_dir / "comparison_mean.csv");
  mean_csv << "label,epoch,mean_success_rate\n";
  for (const auto& [label, mean] :
       {std::pair{config_a.label, &report.mean_a}, std::pair{config_b.label, &report.mean_b}})
    for (std::size_t e = 0; e < mean->size(); ++e)
      mean_csv << label << ',' << e + 1 << ',' << format_rate((*mean)[e]) << '\n';

  auto to_j = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json summary = {
      {"seeds", n_seeds},
      {"a", {{"label", config_a.label}, {"median_epochs_to_threshold", to_j(report.median_epochs_a)}, {"config", to_json(config_a)}}},
      {"b", {{"label", config_b.label}, {"median_epochs_to_threshold", to_j(report.median_epochs_b)}, {"config", to_json(config_b)}}},
  };
  write_text_atomically(out_dir / "summary.json", summary.dump(2) + "\n");
  return report;
}

// ------------------------------------------------------------ GA campaigns

json to_json(const ga::FitnessRecord& r) {
  return {{"chromosome", ga::to_string(r.chromosome)},
          {"params", params_json(r.params)},
          {"fitness", r.fitness},
          {"epochs_to_threshold", r.epochs_to_threshold ? json(*r.epochs_to_threshold) : json(nullptr)},
          {"best_success", r.best_success},
          {"seed", r.seed},
          {"failed", r.failed}};
}

ga::FitnessRecord fitness_record_from_json(const json& j) {
  ga::FitnessRecord r;
  r.chromosome = ga::chromosome_from_string(j.at("chromosome").get<std::string>());
  r.params = params_from_json(j.at("params"));
  r.fitness = j.at("fitness").get<double>();
  if (!j.at("epochs_to_threshold").is_null())
    r.epochs_to_threshold = j.at("epochs_to_threshold").get<int>();
  r.best_success = j.at("best_success").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.failed = j.at("failed").get<bool>();
  return r;
}

json to_json(const ga::CampaignState& state) {
  json population = json::array();
  for (const auto& r : state.population) population.push_back(to_json(r));
  json history = json::array();
  for (const auto& s : state.history) history.push_back(stats_json(s));
  return {{"generation", state.generation},
          {"population", population},
          {"history", history},
          {"best", to_json(state.best)}};
}

ga::CampaignState campaign_state_from_json(const json& j) {
  ga::CampaignState state;
  state.generation = j.at("generation").get<int>();
  for (const auto& r : j.at("population")) state.population.push_back(fitness_record_from_json(r));
  for (const auto& s : j.at("history")) state.history.push_back(stats_from_json(s));
  state.best = fitness_record_from_json(j.at("best"));
  return state;
}

CampaignReport run_tuning(const RunConfig& config, const TuneOptions& options) {
  config.validate();
  const fs::path dir = config.out_dir / config.label;
  ensure_directory(dir);
  const fs::path state_path = dir / "campaign.json";
  const fs::path csv_path = dir / "campaign.csv";

  ga::EvolveOptions evolve_options;
  evolve_options.stop_after_generation = options.stop_after_generation;
  if (options.resume && fs::exists(state_path)) {
    std::ifstream in(state_path);
    json saved;
    try {
      saved = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("campaign file " + state_path.string() + " is corrupt: " + e.what());
    }
    if (saved.at("config") != campaign_fingerprint(config))
      throw ContractViolation("campaign in " + dir.string() +
                              " was started with a different configuration; use a new "
                              "output directory or disable resume");
    evolve_options.resume_from = campaign_state_from_json(saved.at("state"));
  }

  // Rebuild the CSV from persisted history so a resumed campaign matches an
  // uninterrupted one row for row.
  auto csv = open_for_write(csv_path);
  csv << campaign_csv_header();
  if (evolve_options.resume_from)
    for (const auto& s : evolve_options.resume_from->history) csv << campaign_csv_row(s);
  csv.flush();

  const json fingerprint = campaign_fingerprint(config);
  evolve_options.on_generation = [&](const ga::CampaignState& state) {
    csv << campaign_csv_row(state.history.back());
    csv.flush();
    if (!csv) throw std::runtime_error("failed writing " + csv_path.string());
    json saved = {{"config", fingerprint}, {"state", to_json(state)}};
    write_text_atomically(state_path, saved.dump(2) + "\n");
  };

  const ga::FitnessFn fitness_fn = [&config](const agent::HyperParams& params,
                                             std::uint64_t seed) {
    return ga::fitness_multi_seed(params, config.env, config.env_overrides, config.train, seed,
                                  config.ga.fitness_seeds);
  };
  const auto result = ga::evolve(config.ga, fitness_fn, config.seed, evolve_options);

  CampaignReport report;
  report.best = result.best;
  report.history = result.history;
  report.population = result.state.population;
  report.finished = result.finished;

  json history = json::array();
  for (const auto& s : report.history) history.push_back(stats_json(s));
  json population = json::array();
  for (const auto& r : report.population) population.push_back(to_json(r));
  json out = {{"finished", report.finished},
              {"generation", result.state.generation},
              {"best", to_json(report.best)},
              {"history", history},
              {"population", population}};
  write_text_atomically(dir / "report.json", out.dump(2) + "\n");
  return report;
}

// ------------------------------------------------------------ plot data

std::size_t emit_plot_data(const std::vector<fs::path>& inputs, const fs::path& out_csv,
                           const std::optional<fs::path>& svg) {
  require(!inputs.empty(), "plot needs at least one input file");
  std::vector<std::string> missing;
  for (const auto& p : inputs)
    if (!fs::is_regular_file(p)) missing.push_back(p.string());
  if (!missing.empty()) {
    std::string msg = "missing plot input(s); expected run.csv, comparison.csv, "
                      "comparison_mean.csv or campaign.csv files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::runtime_error(msg);
  }

  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  auto add = [&](const std::string& label, double x, double y) {
    auto [it, inserted] = index.try_emplace(label, series.size());
    if (inserted) series.push_back({label, {}});
    series[it->second].points.emplace_back(x, y);
  };

  for (const auto& path : inputs) {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    const std::string name = path.has_parent_path() && !path.parent_path().filename().empty()
                                 ? path.parent_path().filename().string()
                                 : path.stem().string();
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      try {
        if (header == "epoch,success_rate") {
          add(name, std::stod(cells.at(0)), std::stod(cells.at(1)));
        } else if (header == "label,epoch,mean_success_rate") {
          add(cells.at(0), std::stod(cells.at(1)), std::stod(cells.at(2)));
        } else if (header == "label,seed,epoch,success_rate") {
          add(cells.at(0) + "/" + cells.at(1), std::stod(cells.at(2)), std::stod(cells.at(3)));
        } else if (header.rfind("generation,best,mean,worst", 0) == 0) {
          const double g = std::stod(cells.at(0));
          add("best", g, std::stod(cells.at(1)));
          add("mean", g, std::stod(cells.at(2)));
          add("worst", g, std::stod(cells.at(3)));
        } else {
          throw std::runtime_error("unrecognised CSV header in " + path.string() + ": '" +
                                   header + "'");
        }
      } catch (const std::logic_error&) {
        throw std::runtime_error("malformed row in " + path.string() + ": '" + line + "'");
      }
    }
  }

  if (out_csv.has_parent_path()) ensure_directory(out_csv.parent_path());
  auto out = open_for_write(out_csv);
  out << "series,x,y\n";
  std::size_t rows = 0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      out << s.label << ',' << fmt::format("{}", x) << ',' << fmt::format("{}", y) << '\n';
      ++rows;
    }
  if (svg) write_svg(series, *svg);
  return rows;
}

double evaluate_checkpoint(const fs::path& actor_checkpoint, const std::string& env_name,
                           const envs::EnvOverrides& overrides, int episodes, std::uint64_t seed) {
  auto actor = nn::load_checkpoint(actor_checkpoint.string());
  auto env = envs::make_env(env_name, overrides);
  const auto& spec = env->spec();
  require(actor.input_size() == spec.observation_dim + spec.goal_dim &&
              actor.output_size() == spec.action_dim,
          "checkpoint network does not fit environment '" + env_name + "'");
  agent::TrainConfig train;
  train.hidden_layers.assign(actor.layer_sizes.begin() + 1, actor.layer_sizes.end() - 1);
  agent::DdpgAgent policy(spec, agent::HyperParams::original(), train, 0);
  policy.actor() = std::move(actor);
  return agent::evaluate(policy, *env, episodes, seed);
}

}  // namespace hertune::harness
