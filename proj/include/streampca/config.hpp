#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streampca/learners.hpp"
#include "streampca/stream_model.hpp"

namespace streampca {

// How a learner's step sizes are chosen: derived from the model statistics
// by one of the two parameter recipes, or set directly.
enum class HyperMode { theorem1, theorem2, manual };

struct LearnerConfig {
  std::string name;
  LearnerKind kind = LearnerKind::nonconvex_oga;
  std::int64_t block_len = 1;
  HyperMode mode = HyperMode::manual;
  double eta = 0.0;    // manual mode
  double alpha = 0.0;  // manual mode
};

// Parsed experiment description. See parse_config for the file format.
struct ExperimentConfig {
  Eigen::Index d = 0;
  Vector model_eigenvalues;
  DistributionKind model_kind = DistributionKind::bounded_uniform_mixture;
  bool random_basis = true;
  AdversarySpec adversary;
  std::int64_t n_samples = 0;
  double warm_fraction = 0.0;
  int replicates = 1;
  std::uint64_t base_seed = 1;
  double p = 0.05;
  int threads = 1;
  std::vector<LearnerConfig> learners;
};

// Records reserved for the warm-start estimate: floor(warm_fraction * n).
std::int64_t warm_sample_count(const ExperimentConfig& cfg);

// Parses the flat `key = value` format: UTF-8 text, `#` starts a comment,
// dotted keys group settings. Keys:
//   model.d, model.kind (gaussian|truncated_gaussian|bounded),
//   model.spectrum (geometric(a,r) | list(v1,...)), model.basis
//   (random|identity),
//   adversary.kind (none|fixed_vector|rotating|greedy_orthogonal|
//   gaussian_noise), adversary.v_bound, adversary.spectrum,
//   adversary.rotation_period,
//   run.n, run.warm_fraction, run.replicates, run.seed, run.p, run.threads,
//   learner.<name>.kind (nonconvex_oga|rank_one_oga|convex_oga|fixed),
//   learner.<name>.block_len, learner.<name>.mode
//   (theorem1|theorem2|manual), learner.<name>.eta, learner.<name>.alpha.
// Duplicate or unknown keys raise ParseError with the line number.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

// Semantic checks (dimensions, ranges, learner name uniqueness, warm-start
// budget within n). Raises InvalidInput naming the violated rule.
void validate_config(const ExperimentConfig& cfg);

}  // namespace streampca
