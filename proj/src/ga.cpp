#include "hertune/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hertune/error.hpp"
#include "hertune/parallel.hpp"

namespace hertune::ga {

namespace {

// Gene order inside the chromosome.
double& field(agent::HyperParams& p, int gene) {
  switch (gene) {
    case 0:
      return p.tau;
    case 1:
      return p.gamma;
    case 2:
      return p.alpha_critic;
    case 3:
      return p.alpha_actor;
    case 4:
      return p.epsilon;
    default:
      return p.eta;
  }
}

double field(const agent::HyperParams& p, int gene) {
  return field(const_cast<agent::HyperParams&>(p), gene);
}

Chromosome random_chromosome(Rng& rng) {
  Chromosome c;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < kChromosomeBits; ++i) c[i] = coin(rng);
  return c;
}

}  // namespace

std::string to_string(const Chromosome& c) {
  std::string s(kChromosomeBits, '0');
  for (int i = 0; i < kChromosomeBits; ++i)
    if (c[i]) s[i] = '1';
  return s;
}

Chromosome chromosome_from_string(std::string_view bits) {
  require(bits.size() == kChromosomeBits,
          fmt::format("chromosome must have {} bits, got {}", kChromosomeBits, bits.size()));
  Chromosome c;
  for (int i = 0; i < kChromosomeBits; ++i) {
    require(bits[i] == '0' || bits[i] == '1', "chromosome may only contain '0' and '1'");
    c[i] = bits[i] == '1';
  }
  return c;
}

std::uint32_t gene_value(const Chromosome& c, int gene) {
  require(gene >= 0 && gene < kGeneCount, "gene index out of range");
  std::uint32_t v = 0;
  for (int b = 0; b < kGeneBits; ++b) v = (v << 1) | (c[gene * kGeneBits + b] ? 1u : 0u);
  return v;
}

void set_gene_value(Chromosome& c, int gene, std::uint32_t value) {
  require(gene >= 0 && gene < kGeneCount, "gene index out of range");
  require(value <= static_cast<std::uint32_t>(kGeneMax), "gene value exceeds 11 bits");
  for (int b = 0; b < kGeneBits; ++b)
    c[gene * kGeneBits + b] = (value >> (kGeneBits - 1 - b)) & 1u;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

agent::HyperParams decode(const Chromosome& c) {
  agent::HyperParams p;
  for (int g = 0; g < kGeneCount; ++g)
    field(p, g) = round3(static_cast<double>(gene_value(c, g)) / kGeneMax);
  return p;
}

agent::HyperParams decode(std::string_view bits) { return decode(chromosome_from_string(bits)); }

Chromosome encode(const agent::HyperParams& params) {
  params.validate();
  Chromosome c;
  for (int g = 0; g < kGeneCount; ++g)
    set_gene_value(c, g, static_cast<std::uint32_t>(std::lround(field(params, g) * kGeneMax)));
  return c;
}

std::vector<double> rank_probabilities(std::span<const double> fitnesses) {
  const std::size_t n = fitnesses.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitnesses[a] < fitnesses[b]; });
  const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
  std::vector<double> probs(n);
  for (std::size_t r = 0; r < n; ++r) probs[order[r]] = static_cast<double>(r + 1) / total;
  return probs;
}

std::pair<std::size_t, std::size_t> rank_select(std::span<const double> fitnesses, Rng& rng) {
  require(!fitnesses.empty(), "rank_select needs a non-empty population");
  for (double f : fitnesses) require(std::isfinite(f), "fitness values must be finite");
  const auto probs = rank_probabilities(fitnesses);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  const std::size_t first = pick(rng);
  const std::size_t second = pick(rng);
  return {first, second};
}

std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b,
                                                    const Chromosome& mask) {
  return {(a & mask) | (b & ~mask), (b & mask) | (a & ~mask)};
}

std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b,
                                                    Rng& rng) {
  return uniform_crossover(a, b, random_chromosome(rng));
}

Chromosome flip_mutate(const Chromosome& c, double rate, Rng& rng) {
  require(rate >= 0.0 && rate <= 1.0, "mutation rate must lie in [0, 1]");
  Chromosome out = c;
  std::bernoulli_distribution flip(rate);
  for (int i = 0; i < kChromosomeBits; ++i)
    if (flip(rng)) out.flip(i);
  return out;
}

double fitness_value(std::optional<int> epochs_to_threshold, int max_epochs,
                     double best_success) {
  if (epochs_to_threshold) return 1.0 / static_cast<double>(*epochs_to_threshold);
  return 1.0 / (static_cast<double>(max_epochs) + 1.0 + (1.0 - best_success));
}

FitnessRecord fitness(const agent::HyperParams& params, const std::string& env_name,
                      const envs::EnvOverrides& overrides, const agent::TrainConfig& train,
                      std::uint64_t seed) {
  FitnessRecord record;
  record.params = params;
  record.seed = seed;
  agent::TrainingSession session(env_name, overrides, params, train, seed);
  const auto outcome = agent::train(session, train, /*stop_at_threshold=*/true);
  record.epochs_to_threshold = outcome.epochs_to_threshold;
  record.best_success = outcome.best_success;
  record.failed = outcome.failed;
  record.fitness = fitness_value(outcome.epochs_to_threshold, train.max_epochs,
                                 outcome.best_success);
  return record;
}

FitnessRecord fitness_multi_seed(const agent::HyperParams& params, const std::string& env_name,
                                 const envs::EnvOverrides& overrides,
                                 const agent::TrainConfig& train, std::uint64_t seed,
                                 int n_seeds) {
  require(n_seeds >= 1, "fitness needs at least one seed");
  if (n_seeds == 1) return fitness(params, env_name, overrides, train, seed);
  std::vector<FitnessRecord> runs;
  for (int k = 0; k < n_seeds; ++k)
    runs.push_back(fitness(params, env_name, overrides, train,
                           derive_seed(seed, {static_cast<std::uint64_t>(k)})));
  std::stable_sort(runs.begin(), runs.end(),
                   [](const auto& a, const auto& b) { return a.fitness < b.fitness; });
  FitnessRecord median = runs[static_cast<std::size_t>(n_seeds - 1) / 2];
  median.seed = seed;
  return median;
}

void GaConfig::validate() const {
  require(population_size >= 2, "population_size must be at least 2");
  require(generations >= 0, "generations must be non-negative");
  require(mutation_rate >= 0.0 && mutation_rate <= 1.0, "mutation_rate must lie in [0, 1]");
  require(elitism_count >= 0 && elitism_count < population_size,
          "elitism_count must lie in [0, population_size)");
  require(fitness_seeds >= 1, "fitness_seeds must be positive");
}

GenerationStats summarize(int generation, std::span<const FitnessRecord> population) {
  require(!population.empty(), "cannot summarize an empty population");
  GenerationStats s;
  s.generation = generation;
  std::size_t best = 0, worst = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    sum += population[i].fitness;
    if (population[i].fitness > population[best].fitness) best = i;
    if (population[i].fitness < population[worst].fitness) worst = i;
  }
  s.best = population[best].fitness;
  s.worst = population[worst].fitness;
  s.mean = sum / static_cast<double>(population.size());
  s.best_params = population[best].params;
  return s;
}

namespace {

std::vector<FitnessRecord> evaluate_all(const std::vector<Chromosome>& chromosomes,
                                        std::size_t index_offset, int generation,
                                        const FitnessFn& fitness_fn, std::uint64_t seed,
                                        int workers) {
  std::vector<FitnessRecord> records(chromosomes.size());
  parallel_for(chromosomes.size(), workers, [&](std::size_t i) {
    const auto params = decode(chromosomes[i]);
    const auto eval_seed =
        derive_seed(seed, {stream::kFitness, static_cast<std::uint64_t>(generation),
                           static_cast<std::uint64_t>(index_offset + i)});
    FitnessRecord r = fitness_fn(params, eval_seed);
    r.chromosome = chromosomes[i];
    r.params = params;
    r.seed = eval_seed;
    records[i] = std::move(r);
  });
  return records;
}

void record_generation(CampaignState& state, const EvolveOptions& options) {
  state.history.push_back(summarize(state.generation, state.population));
  const auto top = std::max_element(
      state.population.begin(), state.population.end(),
      [](const FitnessRecord& a, const FitnessRecord& b) { return a.fitness < b.fitness; });
  if (state.history.size() == 1 || top->fitness > state.best.fitness) state.best = *top;
  if (options.on_generation) options.on_generation(state);
}

}  // namespace

EvolveResult evolve(const GaConfig& config, const FitnessFn& fitness_fn, std::uint64_t seed,
                    const EvolveOptions& options) {
  config.validate();
  CampaignState state;
  if (options.resume_from) {
    state = *options.resume_from;
    require(static_cast<int>(state.population.size()) == config.population_size,
            "resumed population size does not match the configuration");
  } else {
    Rng rng(derive_seed(seed, {stream::kGeneticAlgorithm, 0}));
    std::vector<Chromosome> initial;
    for (int i = 0; i < config.population_size; ++i) initial.push_back(random_chromosome(rng));
    if (config.seed_with_original) initial.front() = encode(agent::HyperParams::original());
    state.generation = 0;
    state.population = evaluate_all(initial, 0, 0, fitness_fn, seed, config.workers);
    record_generation(state, options);
  }

  const auto n = static_cast<std::size_t>(config.population_size);
  const auto elites = static_cast<std::size_t>(config.elitism_count);
  while (state.generation < config.generations) {
    if (options.stop_after_generation && state.generation >= *options.stop_after_generation)
      return {state.best, state.history, state, false};

    const int generation = state.generation + 1;
    Rng rng(derive_seed(seed, {stream::kGeneticAlgorithm, static_cast<std::uint64_t>(generation)}));
    std::vector<double> fitnesses;
    for (const auto& r : state.population) fitnesses.push_back(r.fitness);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitnesses[a] > fitnesses[b]; });

    std::vector<Chromosome> children;
    while (children.size() < n - elites) {
      const auto [i, j] = rank_select(fitnesses, rng);
      auto [first, second] =
          uniform_crossover(state.population[i].chromosome, state.population[j].chromosome, rng);
      children.push_back(flip_mutate(first, config.mutation_rate, rng));
      const auto mutated_second = flip_mutate(second, config.mutation_rate, rng);
      if (children.size() < n - elites) children.push_back(mutated_second);
    }

    std::vector<FitnessRecord> next;
    for (std::size_t e = 0; e < elites; ++e) next.push_back(state.population[order[e]]);
    auto evaluated = evaluate_all(children, elites, generation, fitness_fn, seed, config.workers);
    next.insert(next.end(), std::make_move_iterator(evaluated.begin()),
                std::make_move_iterator(evaluated.end()));
    state.population = std::move(next);
    state.generation = generation;
    record_generation(state, options);
  }
  return {state.best, state.history, state, true};
}

}  // namespace hertune::ga
