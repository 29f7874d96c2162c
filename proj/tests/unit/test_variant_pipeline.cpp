#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "autopk/embedding.hpp"
#include "autopk/error.hpp"
#include "autopk/variant_pipeline.hpp"
#include "oracles.hpp"

using namespace autopk;

namespace {

PkParameter half_life() { return {"half_life", "half-life", {"t1/2"}, {"shelf-life"}}; }

NormalizedTable table(std::string id, std::vector<std::string> header, csv::Grid rows) {
  return {std::move(header), std::move(rows), std::move(id)};
}

SeedExtractor fixed_seeds(std::map<std::string, std::vector<std::string>> by_table) {
  return [by_table](const NormalizedTable& t) {
    auto it = by_table.find(t.provenance_id);
    return it == by_table.end() ? std::vector<std::string>{} : it->second;
  };
}

CandidateValidator accept_if(std::function<bool(const std::string&)> pred) {
  return [pred](const std::string& c, const VariantRegistry&) {
    return pred(c) ? Verdict::kYes : Verdict::kNo;
  };
}

std::set<std::pair<std::string, std::string>> flat(const Pipeline1State& s) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [id, ms] : s.matches) {
    for (const auto& m : ms) out.insert({id, m.variant_text});
  }
  return out;
}

}  // namespace

TEST(Registry, AddTrimsAndDeduplicates) {
  VariantRegistry r(half_life());
  EXPECT_TRUE(r.add({" T1/2 ", VariantProvenance::kSeed, 1.0, "t1"}, "seeded"));
  EXPECT_FALSE(r.add({"T1/2", VariantProvenance::kSeed, 1.0, "t2"}, "seeded"));
  EXPECT_FALSE(r.add({"  ", VariantProvenance::kSeed, 1.0, "t2"}, "seeded"));
  EXPECT_TRUE(r.add({"Half-life", VariantProvenance::kSeed, 1.0, "t2"}, "seeded"));
  EXPECT_EQ(r.variants(), (std::vector<std::string>{"T1/2", "Half-life"}));
  EXPECT_EQ(r.find_exact(" t1/2"), std::nullopt);
  EXPECT_EQ(r.find_exact(" t1/2", true), "T1/2");
  EXPECT_EQ(r.audit_log().size(), 2u);
  EXPECT_TRUE(r.remove("T1/2", "pruned"));
  EXPECT_FALSE(r.remove("T1/2", "pruned"));
  EXPECT_EQ(r.audit_log().back().decision, "pruned");
}

TEST(Registry, JsonRoundTrip) {
  VariantRegistry r(half_life());
  r.add({"T1/2", VariantProvenance::kSeed, 1.0, "t1"}, "seeded");
  r.add({"T1/2 el", VariantProvenance::kHybridValidated, 0.75, "t3"}, "admitted");
  r.log({"Shelf-life", "t7", "rejected"});
  const auto back = VariantRegistry::from_json(r.to_json(), half_life());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.entries()[1].provenance, VariantProvenance::kHybridValidated);
}

TEST(Scan, HeaderFragmentsThenBodyRowMajor) {
  VariantRegistry r(half_life());
  r.add({"T1/2", VariantProvenance::kSeed, 1.0, ""}, "seeded");
  HashedNgramEmbedder embed;
  Pipeline1Options opts;
  const auto t = table("x", {"Chicken^T1/2", "Dose"}, {{"T1/2", "1"}, {"x", "T1/2"}});
  const auto res = scan_table(t, r, opts, embed);
  ASSERT_EQ(res.matches.size(), 3u);
  EXPECT_EQ(res.matches[0].location, (CellRef{1, 0, CellAxis::kHeader}));
  EXPECT_EQ(res.matches[1].location, (CellRef{0, 0, CellAxis::kBody}));
  EXPECT_EQ(res.matches[2].location, (CellRef{1, 1, CellAxis::kBody}));
  for (const auto& m : res.matches) {
    EXPECT_EQ(m.provenance, VariantProvenance::kExact);
    EXPECT_EQ(m.score, 1.0);
  }
}

TEST(Scan, CandidatesRespectTau) {
  VariantRegistry r(half_life());
  r.add({"Half-life", VariantProvenance::kSeed, 1.0, ""}, "seeded");
  HashedNgramEmbedder embed;
  Pipeline1Options opts;
  const auto t = table("x", {"Parameter"}, {{"Half-life (h)"}, {"Clearance"}});
  auto res = scan_table(t, r, opts, embed);
  ASSERT_EQ(res.candidates.size(), 1u);
  EXPECT_EQ(res.candidates[0].text, "Half-life (h)");
  EXPECT_GE(res.candidates[0].score, opts.weights.tau);
  EXPECT_NEAR(res.candidates[0].score,
              hybrid_similarity("Half-life (h)", "Half-life", opts.weights, embed), 1e-12);
  opts.disable_hybrid = true;
  EXPECT_TRUE(scan_table(t, r, opts, embed).candidates.empty());
  opts.disable_hybrid = false;
  opts.weights.tau = 1.0;
  EXPECT_TRUE(scan_table(t, r, opts, embed).candidates.empty());
}

TEST(Validation, VerdictOutcomes) {
  VariantRegistry r(half_life());
  const Candidate c{"T1/2 el", {}, 0.8};
  auto verdict = [](Verdict v) {
    return [v](const std::string&, const VariantRegistry&) { return v; };
  };
  EXPECT_FALSE(validate_candidate(c, "t", r, verdict(Verdict::kNo)));
  EXPECT_FALSE(validate_candidate(c, "t", r, verdict(Verdict::kUnparseable)));
  EXPECT_TRUE(r.empty());
  EXPECT_TRUE(validate_candidate(c, "t", r, verdict(Verdict::kYes)));
  EXPECT_EQ(r.entries()[0].provenance, VariantProvenance::kHybridValidated);
  VariantRegistry u(half_life());
  EXPECT_TRUE(validate_candidate(c, "t", u, verdict(Verdict::kNo), true));
  EXPECT_EQ(u.entries()[0].provenance, VariantProvenance::kHybridUnvalidated);
}

TEST(Validation, PromptBindings) {
  VariantRegistry r(half_life());
  for (int i = 0; i < 4; ++i) {
    r.add({"v" + std::to_string(i), VariantProvenance::kSeed, 1.0, ""}, "seeded");
  }
  const auto b = validation_prompt_bindings("cand", r, 2);
  EXPECT_EQ(b.at(std::string(slot::kCandidate)), "cand");
  EXPECT_NE(b.at(std::string(slot::kKnownVariants)).find("$v1$"), std::string::npos);
  EXPECT_EQ(b.at(std::string(slot::kKnownVariants)).find("$v2$"), std::string::npos);
  const auto s = seed_prompt_bindings(table("x", {"a"}, {{"1"}}), half_life());
  EXPECT_EQ(s.at(std::string(slot::kPkParameter)), "half-life");
  EXPECT_EQ(s.at(std::string(slot::kNonVariants)), "shelf-life");
}

TEST(Seeds, ParallelMatchesSerialAndKeepsPrefixOnFailure) {
  std::vector<NormalizedTable> corpus;
  std::map<std::string, std::vector<std::string>> answers;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "t" + std::to_string(10 + i);
    corpus.push_back(table(id, {"a"}, {{"1"}}));
    answers[id] = {"v" + std::to_string(i % 5), "w" + std::to_string(i % 3)};
  }
  const auto serial = extract_seed_variants(corpus, half_life(), fixed_seeds(answers), 1);
  const auto parallel = extract_seed_variants(corpus, half_life(), fixed_seeds(answers), 6);
  EXPECT_EQ(serial.variants(), parallel.variants());
  EXPECT_EQ(serial.size(), 8u);

  VariantRegistry partial(half_life());
  auto failing = [&](const NormalizedTable& t) -> std::vector<std::string> {
    if (t.provenance_id == "t13") throw Error(ErrorCode::kProviderUnavailable, "down");
    return answers.at(t.provenance_id);
  };
  EXPECT_THROW(extract_seed_variants_into(corpus, failing, partial, 1), Error);
  EXPECT_EQ(partial.variants(), (std::vector<std::string>{"v0", "w0", "v1", "w1", "v2", "w2"}));
}

TEST(Review, DropsOnNo) {
  VariantRegistry r(half_life());
  for (const char* v : {"a", "b", "c", "d"}) r.add({v, VariantProvenance::kSeed, 1.0, ""}, "seeded");
  std::istringstream in("y\nn\ndrop\n");
  std::ostringstream out;
  review_registry(r, in, out);
  EXPECT_EQ(r.variants(), (std::vector<std::string>{"a", "d"}));
  EXPECT_FALSE(out.str().empty());
}

TEST(Pipeline1, AdmittedVariantIsExactLater) {
  HashedNgramEmbedder embed;
  const std::vector<NormalizedTable> corpus{
      table("a", {"Parameter"}, {{"Half-life"}}),
      table("b", {"Parameter"}, {{"Half-life (h)"}, {"Shelf-life"}}),
      table("c", {"Parameter"}, {{"Half-life (h)"}, {"Shelf-life"}}),
  };
  int calls = 0;
  auto validator = [&](const std::string& c, const VariantRegistry&) {
    ++calls;
    return c == "Half-life (h)" ? Verdict::kYes : Verdict::kNo;
  };
  Pipeline1State state;
  state.registry = VariantRegistry(half_life());
  run_pipeline1(corpus, {}, fixed_seeds({{"a", {"Half-life"}}}), validator, embed, state);
  ASSERT_EQ(state.matches.at("c").size(), 1u);
  EXPECT_EQ(state.matches.at("c")[0].provenance, VariantProvenance::kExact);
  EXPECT_EQ(state.matches.at("b")[0].provenance, VariantProvenance::kHybridValidated);
  // the rejected "Shelf-life" is not asked twice
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(state.registry.variants(),
            (std::vector<std::string>{"Half-life", "Half-life (h)"}));

  // resuming from the checkpoint form changes nothing
  const auto restored = state_from_json(state_to_json(state), half_life());
  EXPECT_EQ(state_to_json(restored), state_to_json(state));
  Pipeline1State again = restored;
  run_pipeline1(corpus, {}, fixed_seeds({}), validator, embed, again);
  EXPECT_EQ(flat(again), flat(state));
  EXPECT_EQ(calls, 2);
}

TEST(Pipeline1, MatchesJsonRoundTrip) {
  std::map<std::string, std::vector<VariantMatch>> m{
      {"t", {{"T1/2", {2, 1, CellAxis::kHeader}, VariantProvenance::kExact, 1.0},
             {"HL", {0, 3, CellAxis::kBody}, VariantProvenance::kHybridValidated, 0.7125}}}};
  EXPECT_EQ(matches_from_json(matches_to_json(m)), m);
  EXPECT_EQ(predicted_variants(m).at("t"), (std::set<std::string>{"HL", "T1/2"}));
}

TEST(Pipeline1, DisablingValidationGivesSuperset) {
  HashedNgramEmbedder embed;
  std::mt19937 rng(21);
  const std::vector<std::string> pool{"Half-life", "half life", "T1/2", "T1/2 el", "t1/2 (h)",
                                      "Half-life (h)", "HL", "Shelf-life", "Cmax", "AUC",
                                      "Elimination half-life", "T 1/2"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<NormalizedTable> corpus;
    for (int t = 0; t < 5; ++t) {
      csv::Grid rows;
      for (int r = 0; r < 4; ++r) rows.push_back({pool[pick(rng)], "1.0"});
      corpus.push_back(table("t" + std::to_string(t), {"Parameter", "Value"}, rows));
    }
    const auto salt = rng();
    auto validator = accept_if([salt](const std::string& c) {
      return (std::hash<std::string>{}(c) ^ salt) % 2 == 0;
    });
    auto seeds = fixed_seeds({{"t0", {"Half-life", "T1/2"}}});
    Pipeline1State on, off;
    on.registry = off.registry = VariantRegistry(half_life());
    Pipeline1Options opts;
    run_pipeline1(corpus, opts, seeds, validator, embed, on);
    opts.disable_validation = true;
    run_pipeline1(corpus, opts, seeds, validator, embed, off);
    const auto a = flat(on), b = flat(off);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    const auto ra = on.registry.variants(), rb = off.registry.variants();
    EXPECT_TRUE(std::all_of(ra.begin(), ra.end(), [&](const std::string& v) {
      return std::find(rb.begin(), rb.end(), v) != rb.end();
    }));
  }
}

TEST(Pipeline1, RejectsBadWeights) {
  HashedNgramEmbedder embed;
  Pipeline1Options opts;
  opts.weights.alpha = 0.9;
  Pipeline1State state;
  try {
    run_pipeline1({}, opts, fixed_seeds({}), accept_if([](auto&) { return true; }), embed, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}
