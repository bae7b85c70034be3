/* Copyright 2026 The FilTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "filtag/cli.h"

#include <algorithm>
#include <exception>
#include <functional>
#include <map>

#include "CLI11.hpp"
#include "commands.h"
#include "filtag/errors.h"

namespace filtag {
namespace {

void AddMethodFlags(CLI::App* sub, cli::RunConfig& cfg, bool lists) {
  auto* k = sub->add_option("--k", cfg.k, lists ? "k-best values" : "k-best: filters per class and layer")
                ->delimiter(',');
  auto* q = sub->add_option("--q", cfg.q, lists ? "q-quantile values" : "q-quantile: fraction of filters in (0, 1]")
                ->delimiter(',');
  if (!lists) {
    k->expected(1);
    q->expected(1);
    k->excludes(q);
  }
}

void AddNFlag(CLI::App* sub, cli::RunConfig& cfg) {
  sub->add_option("--n", cfg.n, "Hits@n cutoffs, comma separated")
      ->delimiter(',');
}

void AddSplitFlags(CLI::App* sub, cli::RunConfig& cfg) {
  sub->add_option("--split-fraction", cfg.split_fraction,
                  "tagging share of each class")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--seed", cfg.seed, "split seed");
}

void AddCommon(CLI::App* sub, cli::RunConfig& cfg) {
  sub->add_option("--out", cfg.out_dir,
                  "output directory (default: runs/<config hash>)");
  sub->add_option("--threads", cfg.threads, "worker threads")
      ->check(CLI::Range(1, 256));
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  cli::RunConfig cfg;
  CLI::App app{"Tag convolutional filters with class labels and explain "
               "classifications with the tags.",
               "filtag"};
  app.require_subcommand(1);
  std::map<CLI::App*, std::function<int(const cli::RunConfig&, cli::Streams)>>
      handlers;

  auto* make = app.add_subcommand(
      "make-edge-world", "write the synthetic stripe model and image set");
  make->add_option("--per-class", cfg.per_class, "images per class");
  make->add_option("--classes", cfg.stripe_classes,
                   "stripe kinds: vertical,horizontal,diagonal,anti-diagonal")
      ->delimiter(',');
  make->add_option("--label-noise", cfg.label_noise,
                   "probability of relabeling an image")
      ->check(CLI::Range(0.0, 1.0));
  make->add_option("--noise", cfg.noise, "pixel noise amplitude");
  make->add_option("--seed", cfg.seed, "generator seed");
  AddCommon(make, cfg);
  handlers[make] = cli::CmdMakeEdgeWorld;

  auto* dump = app.add_subcommand(
      "dump-activations", "run a model over an image set and dump feature maps");
  dump->add_option("--model", cfg.model, "model manifest (JSON)")->required();
  dump->add_option("--images", cfg.images, "image set directory")->required();
  dump->add_option("--dump", cfg.dump, "output dump directory");
  AddCommon(dump, cfg);
  handlers[dump] = cli::CmdDumpActivations;

  auto* tag = app.add_subcommand("tag", "build a tag store from a dump");
  tag->add_option("--dump", cfg.dump, "dump directory")->required();
  tag->add_option("--store", cfg.store, "output tag store path");
  AddMethodFlags(tag, cfg, false);
  AddSplitFlags(tag, cfg);
  AddCommon(tag, cfg);
  handlers[tag] = cli::CmdTag;

  auto* explain = app.add_subcommand("explain", "explain one image");
  explain->add_option("--dump", cfg.dump, "dump directory")->required();
  explain->add_option("--store", cfg.store, "tag store")->required();
  explain->add_option("--image", cfg.image, "image id")->required();
  explain->add_option("--format", cfg.format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));
  AddNFlag(explain, cfg);
  AddMethodFlags(explain, cfg, false);
  AddCommon(explain, cfg);
  handlers[explain] = cli::CmdExplain;

  auto* evaluate = app.add_subcommand("evaluate", "Hits@n on the test split");
  evaluate->add_option("--dump", cfg.dump, "dump directory")->required();
  evaluate->add_option("--store", cfg.store, "tag store")->required();
  evaluate->add_option("--format", cfg.format, "json|csv|text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  AddNFlag(evaluate, cfg);
  AddMethodFlags(evaluate, cfg, false);
  AddSplitFlags(evaluate, cfg);
  AddCommon(evaluate, cfg);
  handlers[evaluate] = cli::CmdEvaluate;

  auto* sweep = app.add_subcommand("sweep", "Hits@n over a grid of k / q");
  sweep->add_option("--dump", cfg.dump, "dump directory")->required();
  sweep->add_option("--format", cfg.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  AddNFlag(sweep, cfg);
  AddMethodFlags(sweep, cfg, true);
  AddSplitFlags(sweep, cfg);
  AddCommon(sweep, cfg);
  handlers[sweep] = cli::CmdSweep;

  auto* analyze = app.add_subcommand(
      "analyze-errors", "report on misclassified test images");
  analyze->add_option("--dump", cfg.dump, "dump directory")->required();
  analyze->add_option("--store", cfg.store, "tag store")->required();
  analyze->add_option("--image", cfg.image,
                      "image id (default: every misclassified test image)");
  analyze->add_option("--format", cfg.format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));
  AddNFlag(analyze, cfg);
  AddMethodFlags(analyze, cfg, false);
  AddSplitFlags(analyze, cfg);
  AddCommon(analyze, cfg);
  handlers[analyze] = cli::CmdAnalyzeErrors;

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& [sub, handler] : handlers) {
    if (!sub->parsed()) continue;
    cfg.subcommand = sub->get_name();
    try {
      return handler(cfg, cli::Streams{out, err});
    } catch (const Error& e) {
      err << "filtag " << cfg.subcommand << ": " << ErrorCodeName(e.code())
          << " error: " << e.what() << "\n";
      return e.code() == ErrorCode::kContamination ? kExitContract : kExitUsage;
    } catch (const std::exception& e) {
      err << "filtag " << cfg.subcommand << ": internal error: " << e.what()
          << "\n";
      return kExitInternal;
    }
  }
  err << "filtag: no subcommand\n";
  return kExitUsage;
}

}  // namespace filtag
