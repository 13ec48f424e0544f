#include "streampca/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "streampca/errors.hpp"

namespace streampca {

namespace {

std::string trim(std::string_view s) {
  size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return std::string(s.substr(lo, hi - lo));
}

double parse_f64(const std::string& value, long line) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ParseError("expected a number, got '" + value + "'", line);
  }
  return out;
}

std::int64_t parse_i64(const std::string& value, long line) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ParseError("expected an integer, got '" + value + "'", line);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& value, long line) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ParseError("expected a non-negative integer, got '" + value + "'", line);
  }
  return out;
}

// Either geometric(first, ratio) or list(v1, v2, ...).
struct SpectrumSpec {
  bool geometric = false;
  double first = 0, ratio = 0;
  std::vector<double> values;
  long line = 0;
  bool set = false;
};

std::vector<std::string> split_args(const std::string& inner, long line) {
  std::vector<std::string> parts;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  if (parts.empty() || inner.empty()) {
    throw ParseError("expected at least one value in (...)", line);
  }
  return parts;
}

SpectrumSpec parse_spectrum(const std::string& value, long line) {
  SpectrumSpec spec;
  spec.line = line;
  spec.set = true;
  if (value.starts_with("geometric(") && value.ends_with(")")) {
    auto args = split_args(value.substr(10, value.size() - 11), line);
    if (args.size() != 2) {
      throw ParseError("geometric(...) takes exactly (first, ratio)", line);
    }
    spec.geometric = true;
    spec.first = parse_f64(args[0], line);
    spec.ratio = parse_f64(args[1], line);
    if (!(spec.first > 0) || !(spec.ratio > 0) || !(spec.ratio < 1)) {
      throw ParseError("geometric spectrum needs first > 0 and ratio in (0,1)", line);
    }
    return spec;
  }
  if (value.starts_with("list(") && value.ends_with(")")) {
    for (const std::string& a : split_args(value.substr(5, value.size() - 6), line)) {
      spec.values.push_back(parse_f64(a, line));
    }
    return spec;
  }
  throw ParseError("expected geometric(a, r) or list(...), got '" + value + "'",
                   line);
}

Vector materialize(const SpectrumSpec& spec, Eigen::Index d, const char* what) {
  if (spec.geometric) {
    Vector out(d);
    double v = spec.first;
    for (Eigen::Index i = 0; i < d; ++i) {
      out[i] = v;
      v *= spec.ratio;
    }
    return out;
  }
  if (static_cast<Eigen::Index>(spec.values.size()) != d) {
    throw ParseError(std::string(what) + " lists " +
                         std::to_string(spec.values.size()) +
                         " values but model.d = " + std::to_string(d),
                     spec.line);
  }
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = spec.values[static_cast<size_t>(i)];
  return out;
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::int64_t warm_sample_count(const ExperimentConfig& cfg) {
  return static_cast<std::int64_t>(
      std::floor(cfg.warm_fraction * static_cast<double>(cfg.n_samples) + 1e-9));
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  SpectrumSpec model_spectrum;
  SpectrumSpec noise_spectrum;
  SpectrumSpec direction;
  std::map<std::string, size_t> learner_index;
  std::set<std::string> seen;

  std::stringstream ss(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (value.empty()) throw ParseError("empty value for key '" + key + "'", line_no);
    if (!seen.insert(key).second) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }

    if (key == "model.d") {
      cfg.d = static_cast<Eigen::Index>(parse_i64(value, line_no));
    } else if (key == "model.kind") {
      if (value == "gaussian") {
        cfg.model_kind = DistributionKind::raw_gaussian;
      } else if (value == "truncated_gaussian") {
        cfg.model_kind = DistributionKind::truncated_gaussian;
      } else if (value == "bounded") {
        cfg.model_kind = DistributionKind::bounded_uniform_mixture;
      } else {
        throw ParseError("model.kind must be gaussian, truncated_gaussian or bounded",
                         line_no);
      }
    } else if (key == "model.spectrum") {
      model_spectrum = parse_spectrum(value, line_no);
    } else if (key == "model.basis") {
      if (value == "random") {
        cfg.random_basis = true;
      } else if (value == "identity") {
        cfg.random_basis = false;
      } else {
        throw ParseError("model.basis must be random or identity", line_no);
      }
    } else if (key == "adversary.kind") {
      if (value == "none") {
        cfg.adversary.kind = AdversaryKind::none;
      } else if (value == "fixed_vector") {
        cfg.adversary.kind = AdversaryKind::fixed_vector;
      } else if (value == "rotating") {
        cfg.adversary.kind = AdversaryKind::rotating;
      } else if (value == "greedy_orthogonal") {
        cfg.adversary.kind = AdversaryKind::greedy_orthogonal;
      } else if (value == "gaussian_noise") {
        cfg.adversary.kind = AdversaryKind::gaussian_noise;
      } else {
        throw ParseError("unknown adversary.kind '" + value + "'", line_no);
      }
    } else if (key == "adversary.v_bound") {
      cfg.adversary.v_bound = parse_f64(value, line_no);
    } else if (key == "adversary.spectrum") {
      noise_spectrum = parse_spectrum(value, line_no);
    } else if (key == "adversary.direction") {
      direction = parse_spectrum(value, line_no);
      if (direction.geometric) {
        throw ParseError("adversary.direction must be list(...)", line_no);
      }
    } else if (key == "adversary.rotation_period") {
      cfg.adversary.rotation_period = static_cast<long>(parse_i64(value, line_no));
    } else if (key == "run.n") {
      cfg.n_samples = parse_i64(value, line_no);
    } else if (key == "run.warm_fraction") {
      cfg.warm_fraction = parse_f64(value, line_no);
    } else if (key == "run.replicates") {
      cfg.replicates = static_cast<int>(parse_i64(value, line_no));
    } else if (key == "run.seed") {
      cfg.base_seed = parse_u64(value, line_no);
    } else if (key == "run.p") {
      cfg.p = parse_f64(value, line_no);
    } else if (key == "run.threads") {
      cfg.threads = static_cast<int>(parse_i64(value, line_no));
    } else if (key.starts_with("learner.")) {
      const std::string rest = key.substr(8);
      const size_t dot = rest.find('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size()) {
        throw ParseError("learner keys look like learner.<name>.<field>", line_no);
      }
      const std::string name = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      if (!valid_name(name)) {
        throw ParseError("learner name '" + name +
                             "' may only use letters, digits, '_' and '-'",
                         line_no);
      }
      auto [it, inserted] = learner_index.try_emplace(name, cfg.learners.size());
      if (inserted) {
        LearnerConfig lc;
        lc.name = name;
        cfg.learners.push_back(lc);
      }
      LearnerConfig& lc = cfg.learners[it->second];
      if (field == "kind") {
        if (value == "nonconvex_oga") {
          lc.kind = LearnerKind::nonconvex_oga;
        } else if (value == "rank_one_oga") {
          lc.kind = LearnerKind::rank_one_oga;
        } else if (value == "convex_oga") {
          lc.kind = LearnerKind::convex_oga;
        } else if (value == "fixed") {
          lc.kind = LearnerKind::fixed;
        } else {
          throw ParseError("unknown learner kind '" + value + "'", line_no);
        }
      } else if (field == "block_len") {
        lc.block_len = parse_i64(value, line_no);
      } else if (field == "mode") {
        if (value == "theorem1") {
          lc.mode = HyperMode::theorem1;
        } else if (value == "theorem2") {
          lc.mode = HyperMode::theorem2;
        } else if (value == "manual") {
          lc.mode = HyperMode::manual;
        } else {
          throw ParseError("learner mode must be theorem1, theorem2 or manual",
                           line_no);
        }
      } else if (field == "eta") {
        lc.eta = parse_f64(value, line_no);
      } else if (field == "alpha") {
        lc.alpha = parse_f64(value, line_no);
      } else {
        throw ParseError("unknown learner field '" + field + "'", line_no);
      }
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }

  if (cfg.d <= 0) throw ParseError("model.d is required", line_no);
  if (!model_spectrum.set) throw ParseError("model.spectrum is required", line_no);
  cfg.model_eigenvalues = materialize(model_spectrum, cfg.d, "model.spectrum");
  if (noise_spectrum.set) {
    cfg.adversary.noise_eigenvalues =
        materialize(noise_spectrum, cfg.d, "adversary.spectrum");
  }
  if (direction.set) {
    cfg.adversary.direction = materialize(direction, cfg.d, "adversary.direction");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.d < 2) throw InvalidInput("config: model.d must be at least 2");
  if (cfg.model_eigenvalues.size() != cfg.d) {
    throw InvalidInput("config: spectrum size does not match model.d");
  }
  if (cfg.n_samples < 1) throw InvalidInput("config: run.n must be at least 1");
  if (!(cfg.warm_fraction >= 0.0 && cfg.warm_fraction <= 1.0)) {
    throw InvalidInput("config: run.warm_fraction must lie in [0, 1]");
  }
  if (warm_sample_count(cfg) > cfg.n_samples) {
    throw InvalidInput("config: warm-start samples exceed run.n");
  }
  if (cfg.replicates < 1) throw InvalidInput("config: run.replicates must be >= 1");
  if (cfg.threads < 1) throw InvalidInput("config: run.threads must be >= 1");
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) {
    throw InvalidInput("config: run.p must lie in (0, 1)");
  }
  if (cfg.learners.empty()) {
    throw InvalidInput("config: at least one learner.<name>.kind is required");
  }
  for (const LearnerConfig& lc : cfg.learners) {
    const std::string where = "config: learner." + lc.name;
    if (lc.block_len < 1) throw InvalidInput(where + ".block_len must be >= 1");
    if (lc.kind == LearnerKind::fixed) {
      if (lc.mode != HyperMode::manual) {
        throw InvalidInput(where + ": fixed learners take mode = manual");
      }
      continue;
    }
    if (lc.mode == HyperMode::manual) {
      if (!(lc.eta > 0.0) || !std::isfinite(lc.eta)) {
        throw InvalidInput(where + ".eta must be positive in manual mode");
      }
      if (lc.alpha < 0.0 || !std::isfinite(lc.alpha)) {
        throw InvalidInput(where + ".alpha must be non-negative");
      }
    }
  }
  if (cfg.adversary.v_bound < 0.0 || !std::isfinite(cfg.adversary.v_bound)) {
    throw InvalidInput("config: adversary.v_bound must be non-negative");
  }
  if (cfg.adversary.kind == AdversaryKind::rotating &&
      cfg.adversary.rotation_period < 1) {
    throw InvalidInput("config: adversary.rotation_period must be >= 1");
  }
  if (cfg.adversary.kind == AdversaryKind::gaussian_noise &&
      cfg.adversary.noise_eigenvalues.size() == 0) {
    throw InvalidInput("config: gaussian_noise adversary needs adversary.spectrum");
  }
}

}  // namespace streampca
