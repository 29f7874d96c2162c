#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "autopk/similarity.hpp"
#include "autopk/variant_pipeline.hpp"

namespace autopk {

// Every (alpha, beta, gamma) on the simplex with the given step, crossed
// with every tau. Throws InvalidConfig for a step outside (0, 1] or an
// empty tau list.
std::vector<SimilarityWeights> simplex_grid(double step,
                                            const std::vector<double>& taus);

struct SweepTask {
  VariantRegistry seeds;  // registry after seeding (and review)
  std::map<std::string, std::set<std::string>> gold;
  CandidateValidator validator;
};

struct SweepRow {
  SimilarityWeights weights;
  double mean_f1 = 0.0;
  std::vector<double> per_parameter_f1;  // in task order
};

// Runs the variant pipeline for each configuration and task from the given
// seeds, scoring with exact-match F1. Rows are ranked by mean F1, ties kept
// in grid order.
std::vector<SweepRow> sweep(const std::vector<NormalizedTable>& corpus,
                            const std::vector<SweepTask>& tasks,
                            const std::vector<SimilarityWeights>& grid,
                            const Pipeline1Options& base,
                            EmbeddingProvider& embed, std::size_t jobs = 1);

// alpha,beta,gamma,tau,mean_f1,f1_<param>...
std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::vector<std::string>& parameter_names);

}  // namespace autopk
