#include "autopk/variant_pipeline.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "autopk/concurrency.hpp"
#include "autopk/error.hpp"
#include "autopk/response_parsing.hpp"
#include "autopk/text.hpp"

namespace autopk {
namespace {

using AdmitFn =
    std::function<std::optional<VariantProvenance>(const Candidate&)>;

bool equal_ci(std::string_view a, std::string_view b) {
  return text::to_lower(a) == text::to_lower(b);
}

std::string joined_or_none(const std::vector<std::string>& items) {
  if (items.empty()) return std::string(kNoneLiteral);
  return text::join(items, ", ");
}

std::string display_name(const PkParameter& p) {
  return p.display_name.empty() ? p.canonical_name : p.display_name;
}

ScanResult scan_impl(const NormalizedTable& table,
                     const VariantRegistry& registry,
                     const Pipeline1Options& options, EmbeddingProvider& embed,
                     ComponentCache* cache, const AdmitFn* admit) {
  ScanResult result;
  auto visit = [&](std::string_view raw, CellRef location) {
    const std::string cell(text::trim(raw));
    if (cell.empty()) return;
    if (registry.find_exact(cell, options.case_insensitive_em)) {
      result.matches.push_back({cell, location, VariantProvenance::kExact, 1.0});
      return;
    }
    if (options.disable_hybrid || registry.empty()) return;

    double best = 0.0;
    for (const auto& entry : registry.entries()) {
      const SimilarityComponents components =
          cache ? cache->get(cell, entry.text, embed, options.similarity)
                : similarity_components(cell, entry.text, embed,
                                        options.similarity);
      best = std::max(best, combine(components, options.weights));
    }
    if (best < options.weights.tau) return;

    Candidate candidate{cell, location, best};
    result.candidates.push_back(candidate);
    if (admit) {
      if (auto provenance = (*admit)(candidate)) {
        result.matches.push_back({cell, location, *provenance, best});
      }
    }
  };

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto fragments = text::split(table.header[c], '^');
    for (std::size_t f = 0; f < fragments.size(); ++f) {
      visit(fragments[f], {f, c, CellAxis::kHeader});
    }
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      visit(table.rows[r][c], {r, c, CellAxis::kBody});
    }
  }
  return result;
}

}  // namespace

std::string_view to_string(VariantProvenance provenance) {
  switch (provenance) {
    case VariantProvenance::kSeed: return "seed";
    case VariantProvenance::kExact: return "exact";
    case VariantProvenance::kHybridValidated: return "hybrid_validated";
    case VariantProvenance::kHybridUnvalidated: return "hybrid_unvalidated";
  }
  return "unknown";
}

VariantProvenance variant_provenance_from_string(std::string_view s) {
  for (auto p : {VariantProvenance::kSeed, VariantProvenance::kExact,
                 VariantProvenance::kHybridValidated,
                 VariantProvenance::kHybridUnvalidated}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::kMalformedInput,
              "unknown variant provenance '" + std::string(s) + "'");
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kYes: return "yes";
    case Verdict::kNo: return "no";
    case Verdict::kUnparseable: return "unparseable";
  }
  return "unknown";
}

VariantRegistry::VariantRegistry(PkParameter parameter)
    : parameter_(std::move(parameter)) {}

std::vector<std::string> VariantRegistry::variants() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.text);
  return out;
}

std::optional<std::string> VariantRegistry::find_exact(
    std::string_view cell, bool case_insensitive) const {
  const auto trimmed = text::trim(cell);
  for (const auto& e : entries_) {
    if (e.text == trimmed || (case_insensitive && equal_ci(e.text, trimmed))) {
      return e.text;
    }
  }
  return std::nullopt;
}

bool VariantRegistry::contains(std::string_view variant) const {
  return find_exact(variant).has_value();
}

bool VariantRegistry::add(RegistryEntry entry, std::string decision) {
  entry.text = std::string(text::trim(entry.text));
  if (entry.text.empty() || contains(entry.text)) return false;
  audit_.push_back({entry.text, entry.origin_table, std::move(decision)});
  entries_.push_back(std::move(entry));
  return true;
}

bool VariantRegistry::remove(std::string_view variant, std::string decision) {
  const auto trimmed = text::trim(variant);
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const RegistryEntry& e) { return e.text == trimmed; });
  if (it == entries_.end()) return false;
  audit_.push_back({it->text, it->origin_table, std::move(decision)});
  entries_.erase(it);
  return true;
}

void VariantRegistry::log(AuditRecord record) { audit_.push_back(std::move(record)); }

nlohmann::ordered_json VariantRegistry::to_json() const {
  nlohmann::ordered_json doc;
  doc["parameter"] = parameter_.canonical_name;
  auto variants = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    nlohmann::ordered_json v;
    v["text"] = e.text;
    v["provenance"] = to_string(e.provenance);
    v["score"] = e.score;
    v["origin_table"] = e.origin_table;
    variants.push_back(std::move(v));
  }
  doc["variants"] = std::move(variants);
  auto audit = nlohmann::ordered_json::array();
  for (const auto& a : audit_) {
    nlohmann::ordered_json v;
    v["variant"] = a.variant;
    v["origin_table"] = a.origin_table;
    v["decision"] = a.decision;
    audit.push_back(std::move(v));
  }
  doc["audit_log"] = std::move(audit);
  return doc;
}

VariantRegistry VariantRegistry::from_json(const nlohmann::json& doc,
                                           PkParameter parameter) {
  try {
    if (doc.contains("parameter") && !parameter.canonical_name.empty() &&
        doc.at("parameter").get<std::string>() != parameter.canonical_name) {
      throw Error(ErrorCode::kMalformedInput,
                  "registry is for parameter '" +
                      doc.at("parameter").get<std::string>() + "', expected '" +
                      parameter.canonical_name + "'");
    }
    if (parameter.canonical_name.empty()) {
      parameter.canonical_name = doc.value("parameter", std::string());
    }
    VariantRegistry registry(std::move(parameter));
    for (const auto& v : doc.at("variants")) {
      RegistryEntry e;
      e.text = std::string(text::trim(v.at("text").get<std::string>()));
      e.provenance = variant_provenance_from_string(
          v.value("provenance", std::string("seed")));
      e.score = v.value("score", 1.0);
      e.origin_table = v.value("origin_table", std::string());
      if (!e.text.empty() && !registry.contains(e.text)) {
        registry.entries_.push_back(std::move(e));
      }
    }
    for (const auto& a : doc.value("audit_log", nlohmann::json::array())) {
      registry.audit_.push_back({a.value("variant", std::string()),
                                 a.value("origin_table", std::string()),
                                 a.value("decision", std::string())});
    }
    return registry;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                std::string("malformed registry: ") + e.what());
  }
}

SimilarityComponents ComponentCache::get(const std::string& cell,
                                         const std::string& variant,
                                         EmbeddingProvider& embed,
                                         const SimilarityOptions& options) {
  std::string key;
  key.reserve(cell.size() + variant.size() + 1);
  key.append(cell).push_back('\0');
  key.append(variant);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  const auto components = similarity_components(cell, variant, embed, options);
  std::lock_guard lock(mutex_);
  entries_.emplace(std::move(key), components);
  return components;
}

std::size_t ComponentCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

ScanResult scan_table(const NormalizedTable& table,
                      const VariantRegistry& registry,
                      const Pipeline1Options& options, EmbeddingProvider& embed,
                      ComponentCache* cache) {
  return scan_impl(table, registry, options, embed, cache, nullptr);
}

Bindings seed_prompt_bindings(const NormalizedTable& table,
                              const PkParameter& parameter) {
  Bindings b;
  b.emplace(slot::kTableCsv, serialize_csv(table));
  b.emplace(slot::kPkParameter, display_name(parameter));
  b.emplace(slot::kAliases, joined_or_none(parameter.alias_hints));
  b.emplace(slot::kNonVariants, joined_or_none(parameter.exclusion_hints));
  return b;
}

Bindings validation_prompt_bindings(const std::string& candidate,
                                    const VariantRegistry& registry,
                                    std::size_t max_exemplars) {
  std::vector<std::string> exemplars;
  for (const auto& e : registry.entries()) {
    if (exemplars.size() >= max_exemplars) break;
    exemplars.push_back("$" + e.text + "$");
  }
  Bindings b;
  b.emplace(slot::kPkParameter, display_name(registry.parameter()));
  b.emplace(slot::kKnownVariants, joined_or_none(exemplars));
  b.emplace(slot::kCandidate, candidate);
  return b;
}

SeedExtractor llm_seed_extractor(LlmGateway& gateway, PkParameter parameter,
                                 PromptTemplate prompt, LlmRoleSettings role) {
  return [&gateway, parameter = std::move(parameter), prompt = std::move(prompt),
          role = std::move(role)](const NormalizedTable& table) {
    auto messages = render(prompt, seed_prompt_bindings(table, parameter));
    const auto response = gateway.complete(
        make_request(role.model, std::move(messages), role.generation));
    return parse_variant_list(response.text);
  };
}

CandidateValidator llm_validator(LlmGateway& gateway, PromptTemplate prompt,
                                 LlmRoleSettings role, std::size_t max_exemplars,
                                 bool replay_miss_rejects) {
  return [&gateway, prompt = std::move(prompt), role = std::move(role),
          max_exemplars, replay_miss_rejects](const std::string& candidate,
                                              const VariantRegistry& registry) {
    auto messages = render(
        prompt, validation_prompt_bindings(candidate, registry, max_exemplars));
    std::string answer;
    try {
      answer = gateway
                   .complete(make_request(role.model, std::move(messages),
                                          role.generation))
                   .text;
    } catch (const Error& e) {
      if (!replay_miss_rejects || e.code() != ErrorCode::kReplayMiss) throw;
      spdlog::warn("no recorded verdict for candidate '{}', rejecting", candidate);
      return Verdict::kUnparseable;
    }
    const auto verdict = parse_verdict(answer);
    if (!verdict) return Verdict::kUnparseable;
    return *verdict ? Verdict::kYes : Verdict::kNo;
  };
}

std::vector<NormalizedTable> sorted_by_id(std::vector<NormalizedTable> corpus) {
  std::stable_sort(corpus.begin(), corpus.end(),
                   [](const NormalizedTable& a, const NormalizedTable& b) {
                     return a.provenance_id < b.provenance_id;
                   });
  return corpus;
}

void extract_seed_variants_into(const std::vector<NormalizedTable>& corpus,
                                const SeedExtractor& extractor,
                                VariantRegistry& registry, std::size_t jobs) {
  const auto ordered = sorted_by_id(corpus);
  std::vector<std::optional<std::vector<std::string>>> answers(ordered.size());
  std::exception_ptr failure;
  try {
    parallel_for(ordered.size(), jobs,
                 [&](std::size_t i) { answers[i] = extractor(ordered[i]); });
  } catch (...) {
    failure = std::current_exception();
  }
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!answers[i]) break;  // keep the union a prefix of corpus order
    for (const auto& variant : *answers[i]) {
      registry.add({variant, VariantProvenance::kSeed, 1.0,
                    ordered[i].provenance_id},
                   "seeded");
    }
  }
  if (failure) std::rethrow_exception(failure);
}

VariantRegistry extract_seed_variants(const std::vector<NormalizedTable>& corpus,
                                      const PkParameter& parameter,
                                      const SeedExtractor& extractor,
                                      std::size_t jobs) {
  VariantRegistry registry(parameter);
  extract_seed_variants_into(corpus, extractor, registry, jobs);
  return registry;
}

bool validate_candidate(const Candidate& candidate, const std::string& table_id,
                        VariantRegistry& registry,
                        const CandidateValidator& validator,
                        bool disable_validation) {
  if (disable_validation) {
    return registry.add({candidate.text, VariantProvenance::kHybridUnvalidated,
                         candidate.score, table_id},
                        "admitted_unvalidated");
  }
  const Verdict verdict = validator(candidate.text, registry);
  switch (verdict) {
    case Verdict::kYes:
      return registry.add({candidate.text, VariantProvenance::kHybridValidated,
                           candidate.score, table_id},
                          "admitted");
    case Verdict::kNo:
      registry.log({candidate.text, table_id, "rejected"});
      return false;
    case Verdict::kUnparseable:
      spdlog::warn("unparseable validation verdict for '{}', rejecting",
                   candidate.text);
      registry.log({candidate.text, table_id, "rejected_unparseable"});
      return false;
  }
  return false;
}

void review_registry(VariantRegistry& registry, std::istream& in,
                     std::ostream& out) {
  const auto snapshot = registry.entries();
  for (const auto& entry : snapshot) {
    out << "keep '" << entry.text << "' (from " << entry.origin_table
        << ")? [Y/n] " << std::flush;
    std::string answer;
    if (!std::getline(in, answer)) {
      out << '\n';
      break;
    }
    auto a = text::to_lower(text::trim(answer));
    if (a == "n" || a == "no" || a == "d" || a == "drop") {
      registry.remove(entry.text, "pruned");
    }
  }
}

void run_pipeline1(const std::vector<NormalizedTable>& corpus,
                   const Pipeline1Options& options, const SeedExtractor& seeds,
                   const CandidateValidator& validator, EmbeddingProvider& embed,
                   Pipeline1State& state, const ReviewHook& review,
                   ComponentCache* cache, std::size_t jobs) {
  validate(options.weights);
  const auto ordered = sorted_by_id(corpus);
  if (!state.seeded) {
    extract_seed_variants_into(ordered, seeds, state.registry, jobs);
    if (review) review(state.registry);
    state.seeded = true;
  }
  if (state.registry.empty()) {
    spdlog::warn("variant registry for '{}' is empty; no table will match",
                 state.registry.parameter().canonical_name);
  }

  for (const auto& table : ordered) {
    const auto& id = table.provenance_id;
    if (state.matches.count(id)) continue;
    AdmitFn admit = [&](const Candidate& candidate)
        -> std::optional<VariantProvenance> {
      if (state.rejected.count(candidate.text)) {
        state.candidate_log.push_back({id, candidate, "skipped_rejected"});
        return std::nullopt;
      }
      const bool admitted = validate_candidate(
          candidate, id, state.registry, validator, options.disable_validation);
      if (!admitted) {
        state.rejected.insert(candidate.text);
        state.candidate_log.push_back({id, candidate, "rejected"});
        return std::nullopt;
      }
      state.candidate_log.push_back({id, candidate, "admitted"});
      return options.disable_validation ? VariantProvenance::kHybridUnvalidated
                                        : VariantProvenance::kHybridValidated;
    };
    auto scan = scan_impl(table, state.registry, options, embed, cache, &admit);
    state.matches.emplace(id, std::move(scan.matches));
  }
}

nlohmann::ordered_json matches_to_json(
    const std::map<std::string, std::vector<VariantMatch>>& matches) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [table_id, list] : matches) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : list) {
      nlohmann::ordered_json v;
      v["variant_text"] = m.variant_text;
      v["row"] = m.location.row;
      v["col"] = m.location.col;
      v["axis"] = to_string(m.location.axis);
      v["score"] = m.score;
      v["provenance"] = to_string(m.provenance);
      arr.push_back(std::move(v));
    }
    doc[table_id] = std::move(arr);
  }
  return doc;
}

std::map<std::string, std::vector<VariantMatch>> matches_from_json(
    const nlohmann::json& doc) {
  std::map<std::string, std::vector<VariantMatch>> out;
  try {
    for (const auto& [table_id, list] : doc.items()) {
      auto& matches = out[table_id];
      for (const auto& v : list) {
        VariantMatch m;
        m.variant_text = v.at("variant_text").get<std::string>();
        m.location.row = v.at("row").get<std::size_t>();
        m.location.col = v.at("col").get<std::size_t>();
        m.location.axis = cell_axis_from_string(v.at("axis").get<std::string>());
        m.score = v.value("score", 1.0);
        m.provenance = variant_provenance_from_string(
            v.value("provenance", std::string("exact")));
        matches.push_back(std::move(m));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                std::string("malformed matches document: ") + e.what());
  }
  return out;
}

nlohmann::ordered_json candidate_log_to_json(
    const std::vector<CandidateLogEntry>& log) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& entry : log) {
    nlohmann::ordered_json v;
    v["table_id"] = entry.table_id;
    v["text"] = entry.candidate.text;
    v["row"] = entry.candidate.location.row;
    v["col"] = entry.candidate.location.col;
    v["axis"] = to_string(entry.candidate.location.axis);
    v["score"] = entry.candidate.score;
    v["decision"] = entry.decision;
    arr.push_back(std::move(v));
  }
  return arr;
}

std::map<std::string, std::set<std::string>> predicted_variants(
    const std::map<std::string, std::vector<VariantMatch>>& matches) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [table_id, list] : matches) {
    auto& set = out[table_id];
    for (const auto& m : list) set.insert(m.variant_text);
  }
  return out;
}

nlohmann::ordered_json state_to_json(const Pipeline1State& state) {
  nlohmann::ordered_json doc;
  doc["registry"] = state.registry.to_json();
  doc["seeded"] = state.seeded;
  doc["matches"] = matches_to_json(state.matches);
  doc["candidate_log"] = candidate_log_to_json(state.candidate_log);
  doc["rejected"] = state.rejected;
  return doc;
}

Pipeline1State state_from_json(const nlohmann::json& doc,
                               const PkParameter& parameter) {
  Pipeline1State state;
  try {
    state.registry = VariantRegistry::from_json(doc.at("registry"), parameter);
    state.seeded = doc.value("seeded", false);
    state.matches = matches_from_json(doc.value("matches", nlohmann::json::object()));
    for (const auto& e : doc.value("candidate_log", nlohmann::json::array())) {
      CandidateLogEntry entry;
      entry.table_id = e.at("table_id").get<std::string>();
      entry.candidate.text = e.at("text").get<std::string>();
      entry.candidate.location = {e.at("row").get<std::size_t>(),
                                  e.at("col").get<std::size_t>(),
                                  cell_axis_from_string(e.at("axis").get<std::string>())};
      entry.candidate.score = e.at("score").get<double>();
      entry.decision = e.at("decision").get<std::string>();
      state.candidate_log.push_back(std::move(entry));
    }
    state.rejected = doc.value("rejected", std::set<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                std::string("malformed checkpoint: ") + e.what());
  }
  return state;
}

}  // namespace autopk
