// Copyright 2026 The assignkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// assignkit command line: assignment experiments over COCO annotations,
// NMS over COCO results files, raw matching, timing and synthetic data.
//
// Exit codes: 0 success, 1 I/O or schema error, 2 invalid flags.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "assignkit.hpp"

namespace {

using namespace assignkit;

// Bad flag combination discovered after parsing.
struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<int> ParseBalanceK(const std::string& v) {
  if (v == "inf" || v == "none" || v == "unbounded") return std::nullopt;
  std::size_t pos = 0;
  int k = 0;
  try {
    k = std::stoi(v, &pos);
  } catch (const std::exception&) {
    throw FlagError("--balance-k expects a positive integer or 'inf', got '" + v + "'");
  }
  if (pos != v.size() || k < 1) {
    throw FlagError("--balance-k expects a positive integer or 'inf', got '" + v + "'");
  }
  return k;
}

std::optional<double> ParseGamma(const std::string& v) {
  if (v == "none" || v == "off") return std::nullopt;
  std::size_t pos = 0;
  double g = 0.0;
  try {
    g = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw FlagError("--gamma expects a number in (0, 1] or 'none', got '" + v + "'");
  }
  if (pos != v.size() || !(g > 0.0 && g <= 1.0)) {
    throw FlagError("--gamma expects a number in (0, 1] or 'none', got '" + v + "'");
  }
  return g;
}

StrategyKind ParseStrategy(const std::string& v) {
  if (v == "hungarian") return StrategyKind::kHungarian;
  if (v == "bmatch") return StrategyKind::kBMatch;
  if (v == "iou") return StrategyKind::kIou;
  if (v == "iou-balanced") return StrategyKind::kIouBalanced;
  throw FlagError("unknown strategy '" + v + "'");
}

std::string Slug(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------- assign

struct AssignFlags {
  std::string ann;
  std::string pred;
  bool anchors = false;
  bool proposals = false;
  std::vector<int> strides = {8, 16, 32, 64};
  std::vector<std::string> strategies = {"iou-balanced"};
  std::string stage;
  double tau = -1.0;
  std::string balance_k = "4";
  std::string gamma;
  int b = 1;
  bool fallback = true;
  std::string order = "balance-then-sample";
  std::vector<std::string> sweep_k;
  JitterSpec jitter;
  std::string out = ".";
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

void AddAssign(CLI::App& app, AssignFlags& f) {
  auto* cmd = app.add_subcommand("assign", "Run label assignment strategies over COCO scenes");
  cmd->add_option("--ann", f.ann, "COCO annotation JSON")->required();
  auto* pred = cmd->add_option("--pred", f.pred, "COCO results JSON used as predictions");
  auto* anchors = cmd->add_flag("--anchors", f.anchors, "Assign the dense initial boxes");
  auto* proposals = cmd->add_flag(
      "--proposals", f.proposals, "Assign synthetic proposals regressed from the dense grid");
  pred->excludes(anchors)->excludes(proposals);
  anchors->excludes(proposals);
  cmd->add_option("--strides", f.strides, "Feature strides for --anchors/--proposals")
      ->delimiter(',');
  cmd->add_option("--strategy", f.strategies,
                  "hungarian | bmatch | iou | iou-balanced (comma list allowed)")
      ->delimiter(',');
  cmd->add_option("--stage", f.stage, "first | second; picks tau/gamma defaults")
      ->check(CLI::IsMember({"first", "second"}));
  cmd->add_option("--tau", f.tau, "IoU threshold")->envname("ASSIGNKIT_TAU");
  cmd->add_option("--balance-k", f.balance_k, "Max positives per object, or 'inf'")
      ->envname("ASSIGNKIT_BALANCE_K");
  cmd->add_option("--gamma", f.gamma, "Foreground ratio in (0, 1], or 'none'")
      ->envname("ASSIGNKIT_GAMMA");
  cmd->add_option("--b", f.b, "Matches per object for bmatch");
  cmd->add_option("--fallback", f.fallback, "Keep the closest box for unmatched objects");
  cmd->add_option("--order", f.order, "balance-then-sample | sample-then-balance")
      ->check(CLI::IsMember({"balance-then-sample", "sample-then-balance"}));
  cmd->add_option("--sweep-k", f.sweep_k, "Run iou-balanced once per K, e.g. 1,4,8,16,inf")
      ->delimiter(',');
  cmd->add_option("--dup", f.jitter.dup_count, "Synthetic copies per object");
  cmd->add_option("--center-sigma", f.jitter.center_sigma, "Synthetic center jitter");
  cmd->add_option("--scale-sigma", f.jitter.scale_sigma, "Synthetic log-size jitter");
  cmd->add_option("--fp-rate", f.jitter.fp_rate, "Synthetic false positives per object");
  cmd->add_option("--score-noise", f.jitter.score_noise, "Synthetic score noise");
  cmd->add_option("--out", f.out, "Output directory")->envname("ASSIGNKIT_OUT");
  cmd->add_option("--seed", f.seed, "Random seed")->envname("ASSIGNKIT_SEED");
  cmd->add_option("--workers", f.workers, "Worker threads, 0 = all cores")
      ->envname("ASSIGNKIT_WORKERS");
}

int RunAssign(const AssignFlags& f) {
  const bool first_stage = f.stage.empty() ? f.anchors : f.stage == "first";
  AssignConfig base = first_stage ? AssignConfig::FirstStage() : AssignConfig::SecondStage();
  if (f.tau >= 0.0) base.tau = f.tau;
  if (!(base.tau > 0.0 && base.tau <= 1.0)) throw FlagError("--tau must lie in (0, 1]");
  base.balance_k = ParseBalanceK(f.balance_k);
  if (!f.gamma.empty()) base.fg_ratio = ParseGamma(f.gamma);
  base.fallback_enabled = f.fallback;
  base.seed = f.seed;
  base.order = f.order == "sample-then-balance" ? SampleOrder::kSampleThenBalance
                                                : SampleOrder::kBalanceThenSample;
  if (f.b < 1) throw FlagError("--b must be a positive integer");
  for (int s : f.strides) {
    if (s < 1) throw FlagError("--strides must be positive");
  }
  try {
    f.jitter.Validate();
  } catch (const InvalidArgument& e) {
    throw FlagError(e.what());
  }

  std::vector<Strategy> strategies;
  for (const std::string& name : f.strategies) {
    Strategy s;
    s.kind = ParseStrategy(name);
    s.cfg = base;
    s.b = f.b;
    s.label = name;
    if (s.kind == StrategyKind::kBMatch) s.label = "bmatch-b" + std::to_string(f.b);
    if (s.kind == StrategyKind::kIouBalanced) {
      s.label = "iou-balanced-k" +
                (base.balance_k ? std::to_string(*base.balance_k) : std::string("inf"));
    }
    strategies.push_back(s);
  }
  for (const std::string& k : f.sweep_k) {
    Strategy s;
    s.kind = StrategyKind::kIouBalanced;
    s.cfg = base;
    s.cfg.balance_k = ParseBalanceK(k);
    s.label = "iou-balanced-k" + k;
    strategies.push_back(s);
  }

  const CocoDataset ds = LoadCocoAnnotations(f.ann);
  const std::size_t num_classes = std::max<std::size_t>(1, ds.categories.size());
  PredictionSource source;
  std::string source_desc;
  if (!f.pred.empty()) {
    source = LoadedSource(LoadPredictions(f.pred, ds.categories));
    source_desc = "predictions=" + f.pred;
  } else if (f.anchors) {
    source = AnchorSource(f.strides, num_classes);
    source_desc = "predictions=anchors";
  } else if (f.proposals) {
    source = DenseProposalSource(f.strides, f.jitter, f.seed, num_classes);
    source_desc = "predictions=dense-proposals";
  } else {
    source = SynthSource(f.jitter, f.seed, num_classes);
    source_desc = "predictions=synthetic";
  }
  if (f.anchors || f.proposals) {
    std::ostringstream os;
    os << " strides=";
    for (std::size_t i = 0; i < f.strides.size(); ++i) os << (i ? "," : "") << f.strides[i];
    source_desc += os.str();
  }
  if (f.pred.empty() && !f.anchors) {
    std::ostringstream os;
    os << " dup=" << f.jitter.dup_count << " center_sigma=" << f.jitter.center_sigma
       << " scale_sigma=" << f.jitter.scale_sigma << " fp_rate=" << f.jitter.fp_rate
       << " score_noise=" << f.jitter.score_noise;
    source_desc += os.str();
  }

  const std::vector<AssignReport> reports =
      CompareStrategies(ds.scenes, strategies, source, f.workers);

  std::filesystem::create_directories(f.out);
  const std::vector<std::string> header = {
      "assignkit assign",
      "annotations=" + f.ann + " images=" + std::to_string(ds.scenes.size()) +
          " categories=" + std::to_string(ds.categories.size()) +
          " dropped_boxes=" + std::to_string(ds.dropped_boxes),
      source_desc + " seed=" + std::to_string(f.seed),
      "counts pooled over all images; buckets by box area: small < 32^2 <= medium < 96^2 <= "
      "large"};
  WriteText(std::filesystem::path(f.out) / "assign_report.csv", ReportsCsv(reports, header));
  for (const AssignReport& r : reports) {
    WriteText(std::filesystem::path(f.out) / ("hist_" + Slug(r.strategy) + ".svg"),
              PositiveCountHistogramSvg(r));
  }
  for (const std::string& h : header) std::cout << "# " << h << "\n";
  for (const AssignReport& r : reports) std::cout << "# " << r.strategy << ": " << r.config << "\n";
  std::cout << SummaryTable(reports);
  return 0;
}

// ---------------------------------------------------------------- nms

struct NmsFlags {
  std::string pred;
  std::string out;
  double iou_thresh = 0.7;
  std::size_t topk = 10000;
  bool class_aware = true;
  std::uint64_t seed = 0;
};

void AddNms(CLI::App& app, NmsFlags& f) {
  auto* cmd = app.add_subcommand("nms", "Per-image top-k and greedy NMS over a results file");
  cmd->add_option("--pred", f.pred, "COCO results JSON")->required();
  cmd->add_option("--out", f.out, "Output results JSON")->required();
  cmd->add_option("--iou-thresh", f.iou_thresh, "Suppress IoU strictly above this")
      ->envname("ASSIGNKIT_IOU_THRESH");
  cmd->add_option("--topk", f.topk, "Keep this many highest scores per image before NMS")
      ->envname("ASSIGNKIT_TOPK");
  cmd->add_flag("--class-aware,!--class-agnostic", f.class_aware,
                "Suppress only within a class (default) or across classes");
  cmd->add_option("--seed", f.seed, "Echoed into the header; nms is deterministic")
      ->envname("ASSIGNKIT_SEED");
}

int RunNms(const NmsFlags& f) {
  if (!(f.iou_thresh > 0.0 && f.iou_thresh <= 1.0)) {
    throw FlagError("--iou-thresh must lie in (0, 1]");
  }
  if (f.topk < 1) throw FlagError("--topk must be positive");
  const std::vector<CocoResult> results = LoadResults(f.pred);
  std::map<std::int64_t, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < results.size(); ++i) by_image[results[i].image_id].push_back(i);

  std::vector<CocoResult> kept;
  std::size_t prefiltered = 0;
  for (const auto& [image_id, idx] : by_image) {
    std::vector<ScoredBox> dets;
    dets.reserve(idx.size());
    for (std::size_t i : idx) {
      dets.push_back({results[i].box, results[i].score,
                      static_cast<int>(results[i].category_id), std::nullopt});
    }
    const std::vector<std::size_t> top = TopkIndices(dets, f.topk, false);
    prefiltered += dets.size() - top.size();
    std::vector<ScoredBox> cand;
    cand.reserve(top.size());
    for (std::size_t t : top) cand.push_back(dets[t]);
    for (std::size_t k : Nms(cand, f.iou_thresh, f.class_aware)) {
      kept.push_back(results[idx[top[k]]]);
    }
  }
  WriteResults(f.out, kept);
  std::cout << "# assignkit nms iou_thresh=" << f.iou_thresh << " topk=" << f.topk
            << " class_aware=" << (f.class_aware ? "true" : "false") << " seed=" << f.seed
            << "\n";
  std::cout << "input=" << results.size() << " prefiltered=" << prefiltered
            << " suppressed=" << results.size() - prefiltered - kept.size()
            << " kept=" << kept.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- match

struct MatchFlags {
  std::string cost;
  int b = 1;
  std::uint64_t seed = 0;
};

void AddMatch(CLI::App& app, MatchFlags& f) {
  auto* cmd = app.add_subcommand(
      "match", "Optimal one-to-one (or b-) matching of a CSV cost matrix, rows = predictions");
  cmd->add_option("--cost", f.cost, "CSV cost matrix")->required();
  cmd->add_option("--b", f.b, "Matches per column");
  cmd->add_option("--seed", f.seed, "Echoed into the output; matching is deterministic")
      ->envname("ASSIGNKIT_SEED");
}

MatrixD ReadCsvMatrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return MatrixD::FromRows(rows);
}

int RunMatch(const MatchFlags& f) {
  if (f.b < 1) throw FlagError("--b must be a positive integer");
  const MatrixD cost = ReadCsvMatrix(f.cost);
  const MatchResult m = f.b == 1 ? SolveAssignment(cost) : SolveBMatching(cost, f.b);
  nlohmann::json out;
  out["labels"] = m.assignment.labels;
  out["total_cost"] = m.total_cost;
  out["b"] = f.b;
  out["seed"] = f.seed;
  std::cout << out.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
  BenchOptions opt;
  std::string out;
};

void AddBench(CLI::App& app, BenchFlags& f) {
  auto* cmd = app.add_subcommand("bench", "Median wall-clock time of core operations");
  cmd->add_option("--sizes", f.opt.sizes, "Input sizes")->delimiter(',');
  cmd->add_option("--ops", f.opt.ops, "nms, hungarian, iou_assign")->delimiter(',');
  cmd->add_option("--runs", f.opt.runs, "Repetitions per measurement (>= 20)");
  cmd->add_option("--gts", f.opt.num_gts, "Ground truths for hungarian and iou_assign");
  cmd->add_option("--seed", f.opt.seed, "Random seed")->envname("ASSIGNKIT_SEED");
  cmd->add_option("--out", f.out, "Also write the CSV here");
}

int RunBenchCmd(const BenchFlags& f) {
  std::vector<BenchRow> rows;
  try {
    rows = RunBench(f.opt);
  } catch (const InvalidArgument& e) {
    throw FlagError(e.what());
  }
  std::ostringstream header;
  header << "# assignkit bench runs=" << f.opt.runs << " gts=" << f.opt.num_gts
         << " seed=" << f.opt.seed << "\n";
  const std::string csv = header.str() + BenchCsv(rows);
  std::cout << csv;
  if (!f.out.empty()) WriteText(f.out, csv);
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
  std::string ann;
  std::string out;
  int random_scenes = 0;
  int width = 640;
  int height = 480;
  int gts_per_image = 8;
  int classes = 3;
  JitterSpec jitter;
  std::uint64_t seed = 0;
};

void AddSynth(CLI::App& app, SynthFlags& f) {
  auto* cmd = app.add_subcommand(
      "synth", "Write synthetic predictions for --ann, or a random annotation file");
  cmd->add_option("--ann", f.ann, "COCO annotations to jitter into predictions");
  cmd->add_option("--out", f.out, "Output JSON")->required();
  cmd->add_option("--random-scenes", f.random_scenes, "Write this many random scenes instead");
  cmd->add_option("--width", f.width, "Random scene width");
  cmd->add_option("--height", f.height, "Random scene height");
  cmd->add_option("--gts-per-image", f.gts_per_image, "Objects per random scene");
  cmd->add_option("--classes", f.classes, "Categories in random scenes");
  cmd->add_option("--dup", f.jitter.dup_count, "Copies per object");
  cmd->add_option("--center-sigma", f.jitter.center_sigma, "Center jitter");
  cmd->add_option("--scale-sigma", f.jitter.scale_sigma, "Log-size jitter");
  cmd->add_option("--fp-rate", f.jitter.fp_rate, "False positives per object");
  cmd->add_option("--score-noise", f.jitter.score_noise, "Score noise");
  cmd->add_option("--seed", f.seed, "Random seed")->envname("ASSIGNKIT_SEED");
}

int RunSynth(const SynthFlags& f) {
  if (f.ann.empty() == (f.random_scenes == 0)) {
    throw FlagError("synth needs exactly one of --ann or --random-scenes");
  }
  if (f.random_scenes < 0) throw FlagError("--random-scenes must be positive");
  if (f.random_scenes > 0) {
    if (f.width < 1 || f.height < 1 || f.gts_per_image < 0 || f.classes < 1) {
      throw FlagError("random scenes need positive size and class count");
    }
    CocoDataset ds;
    for (int c = 0; c < f.classes; ++c) ds.categories.Add(c + 1, "class" + std::to_string(c + 1));
    for (int i = 0; i < f.random_scenes; ++i) {
      ds.scenes.push_back(RandomScene(i + 1, f.width, f.height, f.gts_per_image, f.classes,
                                      MixSeed(f.seed, static_cast<std::uint64_t>(i + 1))));
    }
    WriteText(f.out, ToCocoJson(ds));
    std::cout << "scenes=" << ds.scenes.size() << " objects="
              << static_cast<long long>(f.random_scenes) * f.gts_per_image << "\n";
    return 0;
  }
  try {
    f.jitter.Validate();
  } catch (const InvalidArgument& e) {
    throw FlagError(e.what());
  }
  const CocoDataset ds = LoadCocoAnnotations(f.ann);
  const std::size_t num_classes = std::max<std::size_t>(1, ds.categories.size());
  std::vector<CocoResult> results;
  for (const Scene& s : ds.scenes) {
    const auto preds = SynthesizePredictions(
        s, f.jitter, MixSeed(f.seed, static_cast<std::uint64_t>(s.image_id)), num_classes);
    for (const Prediction& p : preds) {
      const auto best = std::max_element(p.scores.begin(), p.scores.end());
      const int cls = static_cast<int>(best - p.scores.begin());
      results.push_back({s.image_id, ds.categories.size() ? ds.categories.CocoId(cls) : 1,
                         p.box, *best});
    }
  }
  WriteResults(f.out, results);
  std::cout << "images=" << ds.scenes.size() << " predictions=" << results.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"assignkit: label assignment, matching and NMS toolkit"};
  app.require_subcommand(1);
  AssignFlags assign_flags;
  NmsFlags nms_flags;
  MatchFlags match_flags;
  BenchFlags bench_flags;
  SynthFlags synth_flags;
  AddAssign(app, assign_flags);
  AddNms(app, nms_flags);
  AddMatch(app, match_flags);
  AddBench(app, bench_flags);
  AddSynth(app, synth_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("assign")) return RunAssign(assign_flags);
    if (app.got_subcommand("nms")) return RunNms(nms_flags);
    if (app.got_subcommand("match")) return RunMatch(match_flags);
    if (app.got_subcommand("bench")) return RunBenchCmd(bench_flags);
    if (app.got_subcommand("synth")) return RunSynth(synth_flags);
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
