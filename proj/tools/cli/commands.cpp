#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "autopk/concurrency.hpp"
#include "autopk/digest.hpp"
#include "autopk/embedding.hpp"
#include "autopk/error.hpp"
#include "autopk/evaluation.hpp"
#include "autopk/preprocess.hpp"
#include "autopk/reconstruction.hpp"
#include "autopk/sweep.hpp"
#include "autopk/variant_pipeline.hpp"
#include "config.hpp"

#ifndef AUTOPK_VERSION
#define AUTOPK_VERSION "0.0.0"
#endif

namespace autopk::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void write_json(const fs::path& path, const ojson& doc) {
  write_text(path, doc.dump(2) + "\n");
}

bool is_table_file(const fs::path& p) {
  const auto name = p.filename().string();
  if (name == "manifest.json") return false;
  if (name.size() >= 10 && name.compare(name.size() - 10, 10, ".meta.json") == 0) {
    return false;
  }
  return p.extension() == ".csv" || p.extension() == ".json";
}

struct CorpusEntry {
  RawTable raw;
  NormalizedTable table;
};

struct Corpus {
  std::vector<CorpusEntry> entries;  // sorted by id
  std::size_t failures = 0;
};

Corpus load_corpus(const fs::path& dir, const PreprocessOptions& options) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_table_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus;
  for (const auto& path : files) {
    try {
      auto raw = parse_table_file(path);
      auto table = preprocess(raw, options);
      corpus.entries.push_back({std::move(raw), std::move(table)});
    } catch (const Error& e) {
      spdlog::error("{}: {}", path.string(), e.what());
      ++corpus.failures;
    }
  }
  std::sort(corpus.entries.begin(), corpus.entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) {
              return a.raw.id < b.raw.id;
            });
  for (std::size_t i = 1; i < corpus.entries.size(); ++i) {
    if (corpus.entries[i].raw.id == corpus.entries[i - 1].raw.id) {
      throw Error(ErrorCode::kMalformedInput,
                  "duplicate table id '" + corpus.entries[i].raw.id + "'");
    }
  }
  return corpus;
}

std::vector<NormalizedTable> tables_of(const Corpus& corpus) {
  std::vector<NormalizedTable> out;
  for (const auto& e : corpus.entries) out.push_back(e.table);
  return out;
}

Config effective_config(const CommonFlags& common) {
  Config config = load_config(common.config);
  if (common.shots) {
    config.llm.shots = *common.shots;
    config.effective["llm"]["shots"] = *common.shots;
  }
  if (common.jobs) config.jobs = std::max<std::size_t>(1, *common.jobs);
  return config;
}

std::unique_ptr<LlmGateway> make_gateway(const Config& config,
                                         const GatewayFlags& flags) {
  GatewayOptions options;
  options.retry = config.llm.retry;
  options.requests_per_minute = config.llm.requests_per_minute;
  if (flags.replay) {
    if (!fs::is_directory(*flags.replay)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "replay store " + flags.replay->string() + " does not exist");
    }
    options.mode = GatewayMode::kReplay;
    options.store_dir = *flags.replay;
    return std::make_unique<LlmGateway>(options, nullptr);
  }
  std::shared_ptr<ChatTransport> transport;
  if (flags.script) {
    transport = ScriptedChatTransport::from_file(*flags.script);
  } else {
    if (config.llm.api_base.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "no llm.api_base configured; set AUTOPK_API_BASE or pass "
                  "--replay DIR");
    }
    transport = std::make_shared<HttpChatTransport>(
        HttpEndpoint{config.llm.api_base, config.llm.api_key, config.llm.timeout});
  }
  options.mode = GatewayMode::kLive;
  if (flags.record) options.store_dir = *flags.record;
  return std::make_unique<LlmGateway>(options, transport);
}

std::shared_ptr<EmbeddingProvider> make_embedder(const Config& config) {
  std::shared_ptr<EmbeddingProvider> inner;
  const auto& e = config.embedding;
  if (e.provider == "http") {
    if (config.llm.api_base.empty() || e.model.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "http embeddings need llm.api_base and embedding.model");
    }
    inner = std::make_shared<HttpEmbeddingProvider>(
        HttpEndpoint{config.llm.api_base, config.llm.api_key, config.llm.timeout},
        e.model, config.llm.retry);
  } else {
    inner = std::make_shared<HashedNgramEmbedder>(e.dim, e.seed, e.ngram);
  }
  return std::make_shared<CachingEmbeddingProvider>(
      inner, e.cache.value_or(fs::path()));
}

LlmRoleSettings role_settings(const Config& config, PromptRole role) {
  return {model_for(config, role), config.llm.generation};
}

std::string prompt_hash(const PromptTemplate& prompt) {
  ojson doc;
  doc["body"] = prompt.body;
  auto shots = ojson::array();
  for (const auto& s : prompt.shots) shots.push_back({{"input", s.input}, {"output", s.output}});
  doc["shots"] = std::move(shots);
  return sha256_hex(doc.dump());
}

ojson manifest(const std::string& command, const Config& config,
               const std::vector<PromptRole>& roles,
               const std::vector<std::string>& corpus_ids,
               const GatewayFlags& gateway, const std::string& embedding_model) {
  ojson doc;
  doc["tool"] = "autopk";
  doc["version"] = AUTOPK_VERSION;
  doc["command"] = command;
  doc["config_sha256"] = sha256_hex(config.effective.dump());
  doc["config"] = config.effective;
  if (!roles.empty()) doc["gateway_mode"] = gateway.replay ? "replay" : "live";
  if (!embedding_model.empty()) doc["embedding_model"] = embedding_model;
  ojson models = ojson::object();
  ojson prompts = ojson::object();
  for (auto role : roles) {
    const std::string name(to_string(role));
    models[name] = model_for(config, role);
    const auto prompt = prompt_for(config, role);
    prompts[name] = {{"sha256", prompt_hash(prompt)},
                     {"shots", prompt.shots.size()}};
  }
  if (!roles.empty()) {
    doc["models"] = std::move(models);
    doc["prompts"] = std::move(prompts);
    doc["generation"] = {{"temperature", config.llm.generation.temperature},
                         {"top_p", config.llm.generation.top_p}};
  }
  doc["corpus"] = corpus_ids;
  return doc;
}

std::vector<std::string> ids_of(const Corpus& corpus) {
  std::vector<std::string> ids;
  for (const auto& e : corpus.entries) ids.push_back(e.raw.id);
  return ids;
}

std::string jsonl(const std::vector<ojson>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

VariantRegistry seeds_only(const VariantRegistry& registry) {
  VariantRegistry seeds(registry.parameter());
  for (const auto& e : registry.entries()) {
    if (e.provenance == VariantProvenance::kSeed) seeds.add(e, "seeded");
  }
  return seeds;
}

}  // namespace

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::kInvalidConfig ? kExitConfig : kExitPartial;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitPartial;
  }
}

int cmd_preprocess(const CommonFlags& common, const PreprocessArgs& args) {
  Config config = effective_config(common);
  if (args.join_order) {
    config.preprocess.join_order = header_join_order_from_string(*args.join_order);
  }
  const auto corpus = load_corpus(args.in_dir, config.preprocess);
  if (corpus.entries.empty() && corpus.failures == 0) {
    std::cerr << "no tables in " << args.in_dir.string() << "\n";
    return kExitPartial;
  }
  fs::create_directories(args.out_dir);
  for (const auto& e : corpus.entries) {
    RawTable out = to_raw(e.table);
    out.caption = e.raw.caption;
    out.footnote = e.raw.footnote;
    out.article_title = e.raw.article_title;
    out.article_abstract = e.raw.article_abstract;
    write_text(args.out_dir / (e.raw.id + ".csv"), serialize_csv(e.table));
    write_text(args.out_dir / (e.raw.id + ".meta.json"), sidecar_json(out));
  }
  ojson extra = manifest("preprocess", config, {}, ids_of(corpus), common.gateway, "");
  extra["header_join_order"] = to_string(config.preprocess.join_order);
  extra["failed_files"] = corpus.failures;
  write_json(args.out_dir / "manifest.json", extra);
  std::cout << "preprocessed " << corpus.entries.size() << " table(s), "
            << corpus.failures << " file error(s)\n";
  if (corpus.entries.empty()) return kExitPartial;
  return corpus.failures > 0 ? kExitPartial : kExitOk;
}

int cmd_variants(const CommonFlags& common, const VariantsArgs& args) {
  const Config config = effective_config(common);
  const PkParameter& param = find_parameter(config, args.param);
  const auto corpus = load_corpus(args.corpus_dir, config.preprocess);
  if (corpus.entries.empty()) {
    std::cerr << "no tables in " << args.corpus_dir.string() << "\n";
    return kExitPartial;
  }
  auto gateway = make_gateway(config, common.gateway);
  auto embed = make_embedder(config);

  Pipeline1Options options;
  options.weights = config.weights;
  options.similarity = config.similarity;
  options.disable_hybrid = args.em_only;
  options.disable_validation = args.no_validate;
  options.case_insensitive_em = config.case_insensitive_em;
  options.max_validation_exemplars = config.max_validation_exemplars;

  const auto extract_prompt = prompt_for(config, PromptRole::kVariantExtraction);
  const auto validate_prompt = prompt_for(config, PromptRole::kVariantValidation);
  const auto seeds = llm_seed_extractor(
      *gateway, param, extract_prompt,
      role_settings(config, PromptRole::kVariantExtraction));
  const auto validator = llm_validator(
      *gateway, validate_prompt, role_settings(config, PromptRole::kVariantValidation),
      options.max_validation_exemplars);

  const auto& name = param.canonical_name;
  const fs::path checkpoint = args.out_dir / ("checkpoint_" + name + ".json");
  Pipeline1State state;
  state.registry = VariantRegistry(param);
  if (fs::exists(checkpoint)) {
    spdlog::info("resuming from {}", checkpoint.string());
    state = state_from_json(nlohmann::json::parse(read_text(checkpoint)), param);
  } else if (args.registry) {
    state.registry = VariantRegistry::from_json(
        nlohmann::json::parse(read_text(*args.registry)), param);
    state.seeded = true;
  }

  ReviewHook review;
  if (args.review) {
    review = [](VariantRegistry& registry) {
      review_registry(registry, std::cin, std::cerr);
    };
  }

  fs::create_directories(args.out_dir);
  try {
    run_pipeline1(tables_of(corpus), options, seeds, validator, *embed, state,
                  review, nullptr, config.jobs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kProviderUnavailable &&
        e.code() != ErrorCode::kReplayMiss) {
      throw;
    }
    write_json(checkpoint, state_to_json(state));
    spdlog::error("{}; progress saved to {}", e.what(), checkpoint.string());
    return kExitPartial;
  }
  if (fs::exists(checkpoint)) fs::remove(checkpoint);

  write_json(args.out_dir / ("registry_" + name + ".json"), state.registry.to_json());
  write_json(args.out_dir / ("matches_" + name + ".json"),
             matches_to_json(state.matches));
  write_json(args.out_dir / ("candidates_" + name + ".json"),
             candidate_log_to_json(state.candidate_log));
  auto doc = manifest("variants", config,
                      {PromptRole::kVariantExtraction, PromptRole::kVariantValidation},
                      ids_of(corpus), common.gateway, embed->model_id());
  doc["parameter"] = name;
  doc["em_only"] = args.em_only;
  doc["no_validate"] = args.no_validate;
  doc["reviewed"] = args.review;
  write_json(args.out_dir / ("manifest_" + name + ".json"), doc);

  std::size_t matched = 0;
  for (const auto& [id, list] : state.matches) matched += list.size();
  std::cout << name << ": " << state.registry.size() << " variant(s), "
            << matched << " matched cell(s) in " << state.matches.size()
            << " table(s), " << state.candidate_log.size() << " candidate(s)\n";
  return corpus.failures > 0 ? kExitPartial : kExitOk;
}

int cmd_extract(const CommonFlags& common, const ExtractArgs& args) {
  const Config config = effective_config(common);
  const bool baseline = args.mode == "baseline";
  if (!baseline && args.mode != "autopk") {
    throw Error(ErrorCode::kInvalidConfig, "--mode must be autopk or baseline");
  }
  std::map<std::string, std::vector<VariantMatch>> matches;
  if (!baseline) {
    if (args.matches.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "autopk mode needs --matches FILE");
    }
    for (const auto& path : args.matches) {
      for (auto& [id, list] :
           matches_from_json(nlohmann::json::parse(read_text(path)))) {
        auto& all = matches[id];
        all.insert(all.end(), list.begin(), list.end());
      }
    }
  }
  const auto corpus = load_corpus(args.corpus_dir, config.preprocess);
  if (corpus.entries.empty()) {
    std::cerr << "no tables in " << args.corpus_dir.string() << "\n";
    return kExitPartial;
  }
  auto gateway = make_gateway(config, common.gateway);

  const PromptRole role =
      baseline ? PromptRole::kDirectBaseline : PromptRole::kTableReconstruction;
  ReconstructionSettings settings;
  settings.reconstruction = prompt_for(config, PromptRole::kTableReconstruction);
  settings.baseline = prompt_for(config, PromptRole::kDirectBaseline);
  settings.role = role_settings(config, role);
  settings.postprocess = config.postprocess;
  settings.max_input_chars = config.max_input_chars;

  const auto& entries = corpus.entries;
  std::vector<ExtractionOutcome> outcomes(entries.size());
  std::vector<int> failed(entries.size(), 0);
  parallel_for(entries.size(), config.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    try {
      if (baseline) {
        outcomes[i] = run_direct_baseline(e.table, meta_of(e.raw), *gateway, settings);
      } else {
        static const std::vector<VariantMatch> kNone;
        const auto it = matches.find(e.raw.id);
        outcomes[i] = run_pipeline2(e.table, it == matches.end() ? kNone : it->second,
                                    meta_of(e.raw), *gateway, settings);
      }
    } catch (const Error& err) {
      spdlog::error("{}: {}", e.raw.id, err.what());
      outcomes[i].diagnostics.push_back(
          {e.raw.id, std::string(to_string(err.code())), err.what()});
      failed[i] = 1;
    }
  });

  fs::create_directories(args.out_dir);
  std::vector<ojson> record_lines, diagnostic_lines;
  std::size_t record_count = 0, failures = corpus.failures;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& id = entries[i].raw.id;
    const auto& outcome = outcomes[i];
    failures += failed[i];
    if (!failed[i]) write_text(args.out_dir / (id + ".csv"), records_to_csv(outcome.records));
    for (const auto& r : outcome.records) {
      ojson line;
      line["table_id"] = id;
      const auto fields = record_to_json(r);
      for (const auto& item : fields.items()) line[item.key()] = item.value();
      record_lines.push_back(std::move(line));
    }
    record_count += outcome.records.size();
    for (const auto& d : outcome.diagnostics) {
      diagnostic_lines.push_back(
          {{"table_id", d.table_id}, {"kind", d.kind}, {"message", d.message}});
    }
  }
  write_text(args.out_dir / "records.jsonl", jsonl(record_lines));
  write_text(args.out_dir / "diagnostics.jsonl", jsonl(diagnostic_lines));
  auto doc = manifest("extract", config, {role}, ids_of(corpus), common.gateway, "");
  doc["mode"] = args.mode;
  std::vector<std::string> match_files;
  for (const auto& m : args.matches) match_files.push_back(m.filename().string());
  doc["matches"] = match_files;
  write_json(args.out_dir / "manifest.json", doc);

  std::cout << "extracted " << record_count << " record(s) from "
            << entries.size() << " table(s), " << diagnostic_lines.size()
            << " diagnostic(s), " << failures << " failure(s)\n";
  return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_eval(const CommonFlags& common, const EvalArgs& args) {
  const Config config = effective_config(common);
  const auto entries = load_gold_dir(args.gold_dir, args.param.value_or(""));
  if (entries.empty()) {
    throw Error(ErrorCode::kMissingGold, "no gold entries in " + args.gold_dir.string());
  }
  auto embed = make_embedder(config);
  fs::create_directories(args.out_dir);

  std::map<std::string, NormalizedTable> gold, predicted;
  for (const auto& g : entries) {
    if (!g.gold_table || gold.count(g.table_id)) continue;
    gold.emplace(g.table_id,
                 normalized_from_csv(read_text(*g.gold_table), g.table_id));
    const auto pred = args.pred_dir / (g.table_id + ".csv");
    if (fs::exists(pred)) {
      predicted.emplace(g.table_id, normalized_from_csv(read_text(pred), g.table_id));
    } else {
      spdlog::warn("no prediction for '{}', scoring as empty", g.table_id);
    }
  }

  auto doc = manifest("eval", config, {}, {}, common.gateway, embed->model_id());
  doc["thresholds"] = {{"delta", config.thresholds.delta},
                       {"theta", config.thresholds.theta},
                       {"kappa", config.thresholds.kappa}};
  if (!gold.empty()) {
    const auto report = evaluate_corpus(predicted, gold, config.thresholds, *embed,
                                        config.comparators);
    write_json(args.out_dir / "report.json", to_json(report));
    write_text(args.out_dir / "per_table.csv", per_table_csv(report));
    const auto& t = report.total;
    std::cout << "tables: P=" << t.precision << " R=" << t.recall << " F1=" << t.f1
              << " hallucination=" << t.hallucination_rate << "\n";
  }
  if (!args.matches.empty()) {
    std::map<std::string, std::vector<VariantMatch>> matches;
    for (const auto& path : args.matches) {
      for (auto& [id, list] :
           matches_from_json(nlohmann::json::parse(read_text(path)))) {
        auto& all = matches[id];
        all.insert(all.end(), list.begin(), list.end());
      }
    }
    const auto report =
        eval_pipeline1(predicted_variants(matches), gold_variant_sets(entries));
    write_json(args.out_dir / "pipeline1_report.json", to_json(report));
    write_text(args.out_dir / "pipeline1_per_table.csv", per_table_csv(report));
    const auto& t = report.total;
    std::cout << "variants: P=" << t.precision << " R=" << t.recall
              << " F1=" << t.f1 << "\n";
  }
  write_json(args.out_dir / "manifest.json", doc);
  return kExitOk;
}

int cmd_sweep(const CommonFlags& common, const SweepArgs& args) {
  const Config config = effective_config(common);
  if (args.params.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one --param");
  }
  const auto corpus = load_corpus(args.corpus_dir, config.preprocess);
  const auto tables = tables_of(corpus);
  auto gateway = make_gateway(config, common.gateway);
  auto embed = make_embedder(config);
  const auto grid = simplex_grid(args.step.value_or(config.sweep.step),
                                 args.taus.empty() ? config.sweep.taus : args.taus);

  const bool replay = common.gateway.replay.has_value();
  std::vector<SweepTask> tasks;
  for (const auto& name : args.params) {
    const auto& param = find_parameter(config, name);
    SweepTask task;
    const auto registry_file =
        args.registry_dir ? *args.registry_dir / ("registry_" + name + ".json")
                          : fs::path();
    if (args.registry_dir && fs::exists(registry_file)) {
      task.seeds = seeds_only(VariantRegistry::from_json(
          nlohmann::json::parse(read_text(registry_file)), param));
    } else {
      task.seeds = extract_seed_variants(
          tables, param,
          llm_seed_extractor(*gateway, param,
                             prompt_for(config, PromptRole::kVariantExtraction),
                             role_settings(config, PromptRole::kVariantExtraction)),
          config.jobs);
    }
    task.gold = gold_variant_sets(load_gold_dir(args.gold_dir, name));
    task.validator = llm_validator(
        *gateway, prompt_for(config, PromptRole::kVariantValidation),
        role_settings(config, PromptRole::kVariantValidation),
        config.max_validation_exemplars, replay);
    tasks.push_back(std::move(task));
  }

  Pipeline1Options base;
  base.similarity = config.similarity;
  base.case_insensitive_em = config.case_insensitive_em;
  base.max_validation_exemplars = config.max_validation_exemplars;
  const auto rows = sweep(tables, tasks, grid, base, *embed, config.jobs);
  write_text(args.out_file, sweep_csv(rows, args.params));
  const auto& best = rows.front();
  std::cout << grid.size() << " configuration(s); best alpha=" << best.weights.alpha
            << " beta=" << best.weights.beta << " gamma=" << best.weights.gamma
            << " tau=" << best.weights.tau << " mean F1=" << best.mean_f1 << "\n";
  return kExitOk;
}

}  // namespace autopk::cli
