// hertune: train, compare, tune, plot and evaluate DDPG+HER agents.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hertune/error.hpp"
#include "hertune/harness.hpp"

namespace {

using hertune::harness::json;
namespace harness = hertune::harness;

int default_workers() {
  if (const char* env = std::getenv("HERTUNE_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid HERTUNE_WORKERS='" << env << "'\n";
  }
  return 1;
}

// Options shared by every subcommand that builds a RunConfig.
struct RunOptions {
  std::string config_path;
  std::optional<std::string> env;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> label;
  std::optional<double> gamma, polyak, lr_critic, lr_actor, random_eps, noise_eps;
  std::optional<int> max_epochs;
  std::vector<std::string> set;

  void attach(CLI::App* app, bool with_config = true) {
    if (with_config) app->add_option("--config", config_path, "JSON configuration file");
    app->add_option("--env", env, "Environment: reach | push | slide");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--out", out, "Output directory");
    app->add_option("--label", label, "Run label (sub-directory name)");
    app->add_option("--gamma", gamma, "Discount factor");
    app->add_option("--polyak", polyak, "Polyak coefficient");
    app->add_option("--lr-critic", lr_critic, "Critic learning rate");
    app->add_option("--lr-actor", lr_actor, "Actor learning rate");
    app->add_option("--random-eps", random_eps, "Probability of a random action");
    app->add_option("--noise-eps", noise_eps, "Gaussian noise std as a fraction of the action bound");
    app->add_option("--max-epochs", max_epochs, "Epoch budget");
    app->add_option("--set", set, "Extra key=value override (repeatable), e.g. her_k=0 or ga.generations=5");
  }

  harness::RunConfig resolve(const std::string& path) const {
    json j = json::object();
    if (!path.empty()) {
      j = harness::to_json(harness::load_run_config(path));
    }
    auto put = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    put("env", env);
    put("seed", seed);
    put("out", out);
    put("label", label);
    put("gamma", gamma);
    put("polyak", polyak);
    put("lr_critic", lr_critic);
    put("lr_actor", lr_actor);
    put("random_eps", random_eps);
    put("noise_eps", noise_eps);
    put("max_epochs", max_epochs);
    // Changing env must not drag along the old env's resolved constants
    // unless they were given explicitly.
    if (env && !path.empty()) {
      j.erase("success_distance");
      j.erase("horizon");
    }
    harness::apply_overrides(j, set);
    return harness::run_config_from_json(j);
  }

  harness::RunConfig resolve() const { return resolve(config_path); }
};

void print_curve(const harness::LearningCurve& curve) {
  for (const auto& [epoch, rate] : curve.points) fmt::print("epoch {:3d}  success {:.3f}\n", epoch, rate);
  if (curve.failed) fmt::print("run failed: {}\n", curve.failure_reason);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDPG + hindsight experience replay with genetic-algorithm parameter tuning"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run one training run");
  RunOptions train_opts;
  bool early_stop = false;
  train_opts.attach(train);
  train->add_flag("--early-stop", early_stop, "Stop at the first epoch that meets the success threshold");

  // compare
  auto* compare = app.add_subcommand("compare", "A/B comparison of two configurations over seeds");
  RunOptions compare_opts;
  std::string config_a, config_b;
  int n_seeds = 3;
  int compare_workers = default_workers();
  compare_opts.attach(compare, false);
  compare->add_option("--config-a", config_a, "Configuration A (default: original parameters)");
  compare->add_option("--config-b", config_b, "Configuration B (default: tuned parameters)");
  compare->add_option("--seeds", n_seeds, "Seeds per configuration");
  compare->add_option("--workers", compare_workers, "Parallel runs (env HERTUNE_WORKERS)");

  // tune
  auto* tune = app.add_subcommand("tune", "Genetic-algorithm campaign over the six learning parameters");
  RunOptions tune_opts;
  std::optional<int> population, generations, stop_after;
  bool no_resume = false;
  bool seed_original = false;
  int tune_workers = default_workers();
  tune_opts.attach(tune);
  tune->add_option("--population", population, "Population size");
  tune->add_option("--generations", generations, "Number of generations");
  tune->add_option("--workers", tune_workers, "Parallel fitness evaluations (env HERTUNE_WORKERS)");
  tune->add_option("--stop-after-generation", stop_after, "Persist and exit after this generation");
  tune->add_flag("--no-resume", no_resume, "Ignore an existing campaign file");
  tune->add_flag("--seed-original", seed_original, "Seed the initial population with the original parameters");

  // plot
  auto* plot = app.add_subcommand("plot", "Emit tidy plot data from run/comparison/campaign CSVs");
  std::vector<std::string> plot_inputs;
  std::string plot_out = "plot.csv";
  std::optional<std::string> plot_svg;
  plot->add_option("inputs", plot_inputs, "CSV files to read")->required();
  plot->add_option("--out", plot_out, "Tidy CSV output (series,x,y)");
  plot->add_option("--svg", plot_svg, "Also write a minimal SVG line chart");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a saved actor checkpoint");
  std::string checkpoint;
  std::string eval_env = "reach";
  int episodes = 100;
  std::uint64_t eval_seed = 1;
  eval->add_option("--checkpoint", checkpoint, "actor.ckpt written by train")->required();
  eval->add_option("--env", eval_env, "Environment: reach | push | slide");
  eval->add_option("--episodes", episodes, "Evaluation episodes");
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto config = train_opts.resolve();
      if (early_stop) config.early_stop = true;
      const auto curve = harness::run_training(config);
      print_curve(curve);
      fmt::print("wrote {}\n", (config.out_dir / config.label).string());
      return curve.failed ? 2 : 0;
    }
    if (*compare) {
      auto resolve_side = [&](const std::string& path, const hertune::agent::HyperParams& preset,
                              const std::string& label) {
        auto c = compare_opts.resolve(path);
        if (path.empty()) c.params = preset;
        if (!compare_opts.label || path.empty()) c.label = label;
        return c;
      };
      const auto a = resolve_side(config_a, hertune::agent::HyperParams::original(), "a");
      const auto b = resolve_side(config_b, hertune::agent::HyperParams::tuned(), "b");
      const std::string out = compare_opts.out.value_or("compare");
      const auto report = harness::run_comparison(a, b, n_seeds, out, compare_workers);
      auto show = [](const std::optional<double>& m) {
        return m ? fmt::format("{:.1f}", *m) : std::string("not reached");
      };
      fmt::print("median epochs to threshold: {} = {}, {} = {}\n", a.label,
                 show(report.median_epochs_a), b.label, show(report.median_epochs_b));
      fmt::print("wrote {}\n", out);
      return 0;
    }
    if (*tune) {
      auto config = tune_opts.resolve();
      if (population) config.ga.population_size = *population;
      if (generations) config.ga.generations = *generations;
      if (seed_original) config.ga.seed_with_original = true;
      config.ga.workers = tune_workers;
      config.validate();
      harness::TuneOptions options;
      options.resume = !no_resume;
      options.stop_after_generation = stop_after;
      const auto report = harness::run_tuning(config, options);
      for (const auto& s : report.history)
        fmt::print("generation {:3d}  best {:.4f}  mean {:.4f}  worst {:.4f}\n", s.generation,
                   s.best, s.mean, s.worst);
      const auto& p = report.best.params;
      fmt::print(
          "best: polyak={:.3f} gamma={:.3f} lr_critic={:.3f} lr_actor={:.3f} random_eps={:.3f} "
          "noise_eps={:.3f} fitness={:.4f}{}\n",
          p.tau, p.gamma, p.alpha_critic, p.alpha_actor, p.epsilon, p.eta, report.best.fitness,
          report.finished ? "" : " (campaign paused)");
      return 0;
    }
    if (*plot) {
      std::vector<harness::fs::path> inputs(plot_inputs.begin(), plot_inputs.end());
      std::optional<harness::fs::path> svg;
      if (plot_svg) svg = *plot_svg;
      const auto rows = harness::emit_plot_data(inputs, plot_out, svg);
      fmt::print("wrote {} rows to {}\n", rows, plot_out);
      return 0;
    }
    if (*eval) {
      const double rate = harness::evaluate_checkpoint(checkpoint, eval_env, {}, episodes, eval_seed);
      fmt::print("success rate {:.3f} over {} episodes\n", rate, episodes);
      return 0;
    }
  } catch (const hertune::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
