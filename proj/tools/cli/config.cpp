#include "config.hpp"

#include <cstdlib>
#include <fstream>

#include <spdlog/spdlog.h>

#include "autopk/error.hpp"

namespace autopk::cli {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
void read(const json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

std::vector<std::string> strings(const json& section, const char* key) {
  std::vector<std::string> out;
  if (section.contains(key)) out = section.at(key).get<std::vector<std::string>>();
  return out;
}

PkField field_from_name(const std::string& name) {
  return pk_field_from_string(name);
}

}  // namespace

Config parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Config c;
  try {
    for (const auto& p : doc.value("parameters", json::array())) {
      PkParameter param;
      param.canonical_name = p.at("canonical_name").get<std::string>();
      param.display_name = p.value("display_name", param.canonical_name);
      param.alias_hints = strings(p, "alias_hints");
      param.exclusion_hints = strings(p, "exclusion_hints");
      c.parameters.push_back(std::move(param));
    }

    const auto pre = doc.value("preprocess", json::object());
    if (pre.contains("header_join_order")) {
      c.preprocess.join_order = header_join_order_from_string(
          pre.at("header_join_order").get<std::string>());
    }

    const auto sim = doc.value("similarity", json::object());
    read(sim, "alpha", c.weights.alpha);
    read(sim, "beta", c.weights.beta);
    read(sim, "gamma", c.weights.gamma);
    read(sim, "tau", c.weights.tau);
    read(sim, "lev_case_sensitive", c.similarity.lev_case_sensitive);
    validate(c.weights);

    const auto p1 = doc.value("pipeline1", json::object());
    read(p1, "case_insensitive_em", c.case_insensitive_em);
    read(p1, "max_validation_exemplars", c.max_validation_exemplars);

    const auto ev = doc.value("eval", json::object());
    read(ev, "delta", c.thresholds.delta);
    read(ev, "theta", c.thresholds.theta);
    read(ev, "kappa", c.thresholds.kappa);
    validate(c.thresholds);
    const auto comparators = ev.value("comparators", json::object());
    for (const auto& item : comparators.items()) {
      c.comparators[item.key()] =
          comparator_from_string(item.value().get<std::string>());
    }

    const auto llm = doc.value("llm", json::object());
    read(llm, "api_base", c.llm.api_base);
    read(llm, "temperature", c.llm.generation.temperature);
    read(llm, "top_p", c.llm.generation.top_p);
    read(llm, "shots", c.llm.shots);
    read(llm, "requests_per_minute", c.llm.requests_per_minute);
    read(llm, "max_attempts", c.llm.retry.max_attempts);
    if (llm.contains("initial_backoff_ms")) {
      c.llm.retry.initial_backoff =
          std::chrono::milliseconds(llm.at("initial_backoff_ms").get<long>());
    }
    if (llm.contains("timeout_s")) {
      c.llm.timeout = std::chrono::seconds(llm.at("timeout_s").get<long>());
    }
    if (llm.contains("shots_dir")) {
      c.llm.shots_dir = resolve(base_dir, llm.at("shots_dir").get<std::string>());
    }
    const auto models = llm.value("models", json::object());
    for (const auto& item : models.items()) {
      c.llm.models[prompt_role_from_string(item.key())] =
          item.value().get<std::string>();
    }
    if (c.llm.retry.max_attempts < 1) {
      throw Error(ErrorCode::kInvalidConfig, "llm.max_attempts must be >= 1");
    }

    const auto emb = doc.value("embedding", json::object());
    read(emb, "provider", c.embedding.provider);
    read(emb, "model", c.embedding.model);
    read(emb, "dim", c.embedding.dim);
    read(emb, "seed", c.embedding.seed);
    read(emb, "ngram", c.embedding.ngram);
    if (emb.contains("cache")) {
      c.embedding.cache = resolve(base_dir, emb.at("cache").get<std::string>());
    }
    if (c.embedding.provider != "hashed" && c.embedding.provider != "http") {
      throw Error(ErrorCode::kInvalidConfig,
                  "embedding.provider must be 'hashed' or 'http'");
    }

    const auto post = doc.value("postprocess", json::object());
    if (post.contains("abbreviations")) {
      c.abbreviations = resolve(base_dir, post.at("abbreviations").get<std::string>());
      c.postprocess.abbreviations = load_abbreviations(*c.abbreviations);
    }
    if (post.contains("abbreviation_fields")) {
      c.postprocess.abbreviation_fields.clear();
      for (const auto& f : strings(post, "abbreviation_fields")) {
        c.postprocess.abbreviation_fields.insert(field_from_name(f));
      }
    }
    if (post.contains("numeric_rules")) {
      c.postprocess.numeric_rules.clear();
      for (const auto& r : strings(post, "numeric_rules")) {
        c.postprocess.numeric_rules.push_back(numeric_rule_from_string(r));
      }
    }

    const auto base = doc.value("baseline", json::object());
    read(base, "max_input_chars", c.max_input_chars);

    const auto sw = doc.value("sweep", json::object());
    read(sw, "step", c.sweep.step);
    read(sw, "taus", c.sweep.taus);

    read(doc, "jobs", c.jobs);
    if (c.jobs == 0) c.jobs = 1;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }

  if (const char* v = std::getenv("AUTOPK_API_BASE"); v && *v) c.llm.api_base = v;
  if (const char* v = std::getenv("AUTOPK_API_KEY"); v && *v) c.llm.api_key = v;

  c.effective = nlohmann::ordered_json::parse(doc.dump());
  if (c.effective.contains("llm")) c.effective["llm"].erase("api_key");
  return c;
}

Config load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return parse_config(json::object(), std::filesystem::current_path());
  std::ifstream in(*path);
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig, "cannot read config " + path->string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path->string() + ": " + e.what());
  }
  return parse_config(doc, path->parent_path());
}

const PkParameter& find_parameter(const Config& config, const std::string& name) {
  for (const auto& p : config.parameters) {
    if (p.canonical_name == name) return p;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "parameter '" + name + "' is not defined in the config");
}

std::string model_for(const Config& config, PromptRole role) {
  if (auto it = config.llm.models.find(role); it != config.llm.models.end()) {
    return it->second;
  }
  if (auto it = config.llm.models.find(PromptRole::kVariantExtraction);
      it != config.llm.models.end()) {
    return it->second;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "no model configured for role " + std::string(to_string(role)));
}

PromptTemplate prompt_for(const Config& config, PromptRole role) {
  auto prompt = default_template(role);
  if (config.llm.shots_dir) {
    const auto path =
        *config.llm.shots_dir / (std::string(to_string(role)) + ".json");
    if (std::filesystem::exists(path)) {
      prompt.shots = load_shots(path);
    } else if (config.llm.shots > 0) {
      spdlog::warn("no shots file {}, prompting zero-shot", path.string());
    }
  }
  return with_shot_count(std::move(prompt), config.llm.shots);
}

}  // namespace autopk::cli
