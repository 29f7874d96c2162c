#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace autopk::cli {

enum ExitCode { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

struct GatewayFlags {
  std::optional<std::filesystem::path> replay;  // replay-only store
  std::optional<std::filesystem::path> record;  // live mode, persist answers
  std::optional<std::filesystem::path> script;  // scripted transport rules
};

struct CommonFlags {
  std::optional<std::filesystem::path> config;
  GatewayFlags gateway;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> jobs;
};

struct PreprocessArgs {
  std::filesystem::path in_dir;
  std::filesystem::path out_dir;
  std::optional<std::string> join_order;
};

struct VariantsArgs {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  std::string param;
  bool em_only = false;
  bool no_validate = false;
  bool review = false;
  std::optional<std::filesystem::path> registry;  // skip seeding
};

struct ExtractArgs {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> matches;
  std::string mode = "autopk";
};

struct EvalArgs {
  std::filesystem::path pred_dir;
  std::filesystem::path gold_dir;
  std::filesystem::path out_dir;
  std::optional<std::string> param;
  std::vector<std::filesystem::path> matches;
};

struct SweepArgs {
  std::filesystem::path corpus_dir;
  std::filesystem::path gold_dir;
  std::filesystem::path out_file;
  std::vector<std::string> params;
  std::optional<std::filesystem::path> registry_dir;
  std::optional<double> step;
  std::vector<double> taus;
};

int cmd_preprocess(const CommonFlags& common, const PreprocessArgs& args);
int cmd_variants(const CommonFlags& common, const VariantsArgs& args);
int cmd_extract(const CommonFlags& common, const ExtractArgs& args);
int cmd_eval(const CommonFlags& common, const EvalArgs& args);
int cmd_sweep(const CommonFlags& common, const SweepArgs& args);

// Runs `fn`, mapping InvalidConfig to exit 2 and other failures to 1.
int guarded(const std::function<int()>& fn);

}  // namespace autopk::cli
