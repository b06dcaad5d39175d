#pragma once

#include <bitset>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hertune/agent.hpp"
#include "hertune/envs.hpp"
#include "hertune/seeding.hpp"

namespace hertune::ga {

inline constexpr int kGeneBits = 11;
inline constexpr int kGeneCount = 6;
inline constexpr int kChromosomeBits = kGeneBits * kGeneCount;
inline constexpr int kGeneMax = (1 << kGeneBits) - 1;  // 2047

// Bit i of the chromosome is character i of its string form. Genes are laid
// out tau, gamma, alpha_critic, alpha_actor, epsilon, eta; each gene is
// stored most significant bit first.
using Chromosome = std::bitset<kChromosomeBits>;

std::string to_string(const Chromosome& c);
// Throws ContractViolation unless bits is exactly 66 characters of '0'/'1'.
Chromosome chromosome_from_string(std::string_view bits);

std::uint32_t gene_value(const Chromosome& c, int gene);
void set_gene_value(Chromosome& c, int gene, std::uint32_t value);

// Each gene v in [0, 2047] maps to round(v / 2047) at three decimals.
agent::HyperParams decode(const Chromosome& c);
agent::HyperParams decode(std::string_view bits);
// Each gene = round(param * 2047). Throws ContractViolation if a field is
// outside [0, 1].
Chromosome encode(const agent::HyperParams& params);

double round3(double v);

// Linear ranking: worst gets rank 1, best rank n, ties ordered by index.
std::vector<double> rank_probabilities(std::span<const double> fitnesses);
std::pair<std::size_t, std::size_t> rank_select(std::span<const double> fitnesses, Rng& rng);

// Children take (a, b) where the mask bit is set and (b, a) where it is clear.
std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b,
                                                    const Chromosome& mask);
std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b,
                                                    Rng& rng);

Chromosome flip_mutate(const Chromosome& c, double rate, Rng& rng);

struct FitnessRecord {
  Chromosome chromosome;
  agent::HyperParams params;
  double fitness = 0.0;
  std::optional<int> epochs_to_threshold;
  double best_success = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
};

// 1/e when the threshold is first met at epoch e, otherwise
// 1 / (max_epochs + 1 + (1 - best_success)).
double fitness_value(std::optional<int> epochs_to_threshold, int max_epochs, double best_success);

// Full DDPG+HER training with early stop at the threshold.
FitnessRecord fitness(const agent::HyperParams& params, const std::string& env_name,
                      const envs::EnvOverrides& overrides, const agent::TrainConfig& train,
                      std::uint64_t seed);

// Median over n_seeds training runs (seeds derived from seed); n_seeds = 1
// is a single run with the given seed.
FitnessRecord fitness_multi_seed(const agent::HyperParams& params, const std::string& env_name,
                                 const envs::EnvOverrides& overrides,
                                 const agent::TrainConfig& train, std::uint64_t seed, int n_seeds);

using FitnessFn = std::function<FitnessRecord(const agent::HyperParams&, std::uint64_t seed)>;

struct GaConfig {
  int population_size = 30;
  int generations = 30;
  double mutation_rate = 0.1;
  int elitism_count = 1;
  int fitness_seeds = 1;
  bool seed_with_original = false;
  int workers = 1;

  void validate() const;
};

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double worst = 0.0;
  agent::HyperParams best_params;
};

// Everything needed to continue a campaign after generation `generation`.
struct CampaignState {
  int generation = 0;
  std::vector<FitnessRecord> population;
  std::vector<GenerationStats> history;
  FitnessRecord best;
};

struct EvolveResult {
  FitnessRecord best;
  std::vector<GenerationStats> history;
  CampaignState state;
  bool finished = false;
};

using GenerationCallback = std::function<void(const CampaignState&)>;

struct EvolveOptions {
  std::optional<CampaignState> resume_from;
  // Stop (unfinished) once this generation has been evaluated.
  std::optional<int> stop_after_generation;
  GenerationCallback on_generation;
};

// Generation 0 is the random initial population; each later generation keeps
// elitism_count elites and fills the rest by rank_select, uniform_crossover
// and flip_mutate. Candidate (g, i) is evaluated with
// derive_seed(seed, {fitness stream, g, i}); the operators of generation g
// draw from derive_seed(seed, {GA stream, g}).
EvolveResult evolve(const GaConfig& config, const FitnessFn& fitness_fn, std::uint64_t seed,
                    const EvolveOptions& options = {});

GenerationStats summarize(int generation, std::span<const FitnessRecord> population);

}  // namespace hertune::ga
