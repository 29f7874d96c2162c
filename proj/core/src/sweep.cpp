#include "autopk/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "autopk/concurrency.hpp"
#include "autopk/error.hpp"
#include "autopk/evaluation.hpp"

namespace autopk {

std::vector<SimilarityWeights> simplex_grid(double step,
                                            const std::vector<double>& taus) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "sweep step must lie in (0, 1]");
  }
  if (taus.empty()) throw Error(ErrorCode::kInvalidConfig, "empty tau grid");
  const int n = static_cast<int>(std::lround(1.0 / step));
  if (std::abs(n * step - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "sweep step must divide 1");
  }
  std::vector<SimilarityWeights> grid;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      const int g = n - a - b;
      for (double tau : taus) {
        SimilarityWeights w{static_cast<double>(a) / n,
                            static_cast<double>(b) / n,
                            static_cast<double>(g) / n, tau};
        validate(w);
        grid.push_back(w);
      }
    }
  }
  return grid;
}

std::vector<SweepRow> sweep(const std::vector<NormalizedTable>& corpus,
                            const std::vector<SweepTask>& tasks,
                            const std::vector<SimilarityWeights>& grid,
                            const Pipeline1Options& base,
                            EmbeddingProvider& embed, std::size_t jobs) {
  if (grid.empty() || tasks.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep needs a grid and a parameter");
  }
  for (const auto& w : grid) validate(w);
  const auto ordered = sorted_by_id(corpus);
  ComponentCache cache;
  std::vector<SweepRow> rows(grid.size());
  const SeedExtractor no_seeds = [](const NormalizedTable&) {
    return std::vector<std::string>{};
  };
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    SweepRow row;
    row.weights = grid[i];
    Pipeline1Options options = base;
    options.weights = grid[i];
    double sum = 0.0;
    for (const auto& task : tasks) {
      Pipeline1State state;
      state.registry = task.seeds;
      state.seeded = true;
      run_pipeline1(ordered, options, no_seeds, task.validator, embed, state,
                    {}, &cache);
      const auto report =
          eval_pipeline1(predicted_variants(state.matches), task.gold);
      row.per_parameter_f1.push_back(report.total.f1);
      sum += report.total.f1;
    }
    row.mean_f1 = sum / static_cast<double>(tasks.size());
    rows[i] = std::move(row);
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return a.mean_f1 > b.mean_f1;
                   });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::vector<std::string>& parameter_names) {
  std::ostringstream out;
  out.precision(6);
  out << "alpha,beta,gamma,tau,mean_f1";
  for (const auto& p : parameter_names) out << ",f1_" << p;
  out << '\n';
  for (const auto& r : rows) {
    out << r.weights.alpha << ',' << r.weights.beta << ',' << r.weights.gamma
        << ',' << r.weights.tau << ',' << r.mean_f1;
    for (double f : r.per_parameter_f1) out << ',' << f;
    out << '\n';
  }
  return out.str();
}

}  // namespace autopk
