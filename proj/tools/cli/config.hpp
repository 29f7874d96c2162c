#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autopk/evaluation.hpp"
#include "autopk/llm_gateway.hpp"
#include "autopk/postprocess.hpp"
#include "autopk/preprocess.hpp"
#include "autopk/prompts.hpp"
#include "autopk/similarity.hpp"
#include "autopk/variant_pipeline.hpp"

namespace autopk::cli {

struct LlmConfig {
  std::string api_base;
  std::string api_key;
  std::map<PromptRole, std::string> models;
  GenerationSettings generation;
  std::size_t shots = kDefaultShotCount;
  std::optional<std::filesystem::path> shots_dir;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  double requests_per_minute = 0.0;
};

struct EmbeddingConfig {
  std::string provider = "hashed";  // hashed | http
  std::string model;                // http only
  std::size_t dim = 512;
  std::uint64_t seed = 17;
  std::size_t ngram = 3;
  std::optional<std::filesystem::path> cache;
};

struct SweepConfig {
  double step = 0.1;
  std::vector<double> taus = {0.5, 0.55, 0.6, 0.65, 0.69, 0.75, 0.8, 0.85, 0.9};
};

struct Config {
  std::vector<PkParameter> parameters;
  PreprocessOptions preprocess;
  SimilarityWeights weights;
  SimilarityOptions similarity;
  bool case_insensitive_em = false;
  std::size_t max_validation_exemplars = 10;
  EvalThresholds thresholds;
  ComparatorMap comparators = default_comparators();
  LlmConfig llm;
  EmbeddingConfig embedding;
  std::optional<std::filesystem::path> abbreviations;
  PostprocessOptions postprocess;
  std::size_t max_input_chars = 60000;
  SweepConfig sweep;
  std::size_t jobs = 1;

  // Effective settings without secrets; hashed into run manifests.
  nlohmann::ordered_json effective;
};

// Relative paths resolve against the config file's directory. AUTOPK_API_BASE
// and AUTOPK_API_KEY override the llm section. Throws InvalidConfig.
Config load_config(const std::optional<std::filesystem::path>& path);
Config parse_config(const nlohmann::json& doc,
                    const std::filesystem::path& base_dir);

const PkParameter& find_parameter(const Config& config, const std::string& name);

std::string model_for(const Config& config, PromptRole role);

// Default template for the role with shots loaded from shots_dir/<role>.json
// (when present) and cut to the configured count.
PromptTemplate prompt_for(const Config& config, PromptRole role);

}  // namespace autopk::cli
