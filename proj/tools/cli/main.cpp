#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

using namespace autopk::cli;

namespace {

void add_common(CLI::App* cmd, CommonFlags& common, bool llm) {
  cmd->add_option("--config", common.config, "JSON config file");
  cmd->add_option("--jobs", common.jobs, "worker threads");
  if (!llm) return;
  cmd->add_option("--replay", common.gateway.replay,
                  "answer LLM calls from this response store only");
  cmd->add_option("--record", common.gateway.record,
                  "persist live LLM answers into this response store");
  cmd->add_option("--script", common.gateway.script,
                  "scripted chat transport rules (offline authoring)");
  cmd->add_option("--shots", common.shots, "few-shot examples per prompt");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("autopk"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"AutoPK: pharmacokinetic table extraction"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonFlags common;

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "normalize raw tables");
  p->add_option("in_dir", pre.in_dir)->required();
  p->add_option("out_dir", pre.out_dir)->required();
  p->add_option("--join-order", pre.join_order, "top_down or bottom_up");
  add_common(p, common, false);

  VariantsArgs var;
  auto* v = app.add_subcommand("variants", "find parameter variants (pipeline 1)");
  v->add_option("corpus_dir", var.corpus_dir)->required();
  v->add_option("--param", var.param)->required();
  v->add_option("--out", var.out_dir)->required();
  v->add_flag("--em-only", var.em_only, "exact matching only");
  v->add_flag("--no-validate", var.no_validate, "admit hybrid candidates unvalidated");
  v->add_flag("--review", var.review, "prune seed variants interactively");
  v->add_option("--registry", var.registry, "start from this registry, skip seeding");
  add_common(v, common, true);

  ExtractArgs ext;
  auto* x = app.add_subcommand("extract", "reconstruct PK tables (pipeline 2)");
  x->add_option("corpus_dir", ext.corpus_dir)->required();
  x->add_option("--out", ext.out_dir)->required();
  x->add_option("--matches", ext.matches, "matches file from 'variants'");
  x->add_option("--mode", ext.mode)->check(CLI::IsMember({"autopk", "baseline"}));
  add_common(x, common, true);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score predictions against gold");
  e->add_option("--pred", ev.pred_dir)->required();
  e->add_option("--gold", ev.gold_dir)->required();
  e->add_option("--out", ev.out_dir)->required();
  e->add_option("--param", ev.param);
  e->add_option("--matches", ev.matches, "also score variant matches");
  add_common(e, common, false);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "grid-search similarity weights");
  s->add_option("corpus_dir", sw.corpus_dir)->required();
  s->add_option("--gold", sw.gold_dir)->required();
  s->add_option("--out", sw.out_file)->required();
  s->add_option("--param", sw.params)->required();
  s->add_option("--registry-dir", sw.registry_dir, "reuse seeds from 'variants' output");
  s->add_option("--step", sw.step);
  s->add_option("--tau", sw.taus);
  add_common(s, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  if (*p) return guarded([&] { return cmd_preprocess(common, pre); });
  if (*v) return guarded([&] { return cmd_variants(common, var); });
  if (*x) return guarded([&] { return cmd_extract(common, ext); });
  if (*e) return guarded([&] { return cmd_eval(common, ev); });
  return guarded([&] { return cmd_sweep(common, sw); });
}
