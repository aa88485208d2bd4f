#include "trinuseg/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trinuseg/checkpoint.hpp"
#include "trinuseg/config.hpp"
#include "trinuseg/image_io.hpp"
#include "trinuseg/training.hpp"

namespace trinuseg {
namespace {

namespace fs = std::filesystem;

// Explicit --seed wins, then TRINUSEG_SEED, then whatever the config says.
std::optional<unsigned long long> resolve_seed(const std::optional<unsigned long long>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("TRINUSEG_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("TRINUSEG_SEED must be an unsigned integer, got '") + env + "'");
  }
  return std::nullopt;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path);
}

void load_configs(const std::string& path, ModelConfig& mc, TrainConfig& tc) {
  if (!path.empty()) {
    require_file(path);
    apply_config(read_key_values_file(path), mc, tc);
  }
}

void apply_seed(const std::optional<unsigned long long>& seed, ModelConfig& mc, TrainConfig& tc) {
  if (seed) mc.seed = tc.seed = *seed;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

struct Options {
  std::optional<unsigned long long> seed;
  std::string out, config, checkpoint, data, image;
  int n = 8, size = 128, flops_size = 512, epochs = 0;
  double cluster_probability = 0.5;
  std::string split = "all";
  bool overlays = false;
};

int cmd_synth(const Options& o, std::ostream& out) {
  if (o.n < 0) throw ConfigError("--n must be >= 0");
  const unsigned long long seed = resolve_seed(o.seed).value_or(0);
  const Dataset d = make_synthetic_dataset(o.n, o.size, o.cluster_probability, seed);
  save_dataset(o.out, d);
  out << "wrote " << d.size() << " samples to " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  ModelConfig mc;
  TrainConfig tc;
  load_configs(o.config, mc, tc);
  apply_seed(resolve_seed(o.seed), mc, tc);
  if (o.epochs > 0) tc.epochs = o.epochs;
  mc.validate();
  tc.validate();
  const Dataset data = dataset_for(tc);
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << " total=" << r.loss.total << " l_n=" << r.loss.l_n
        << " l_e=" << r.loss.l_e << " l_c=" << r.loss.l_c << " l_sd=" << r.loss.l_sd
        << " gamma_sd=" << r.loss.gamma_sd_used;
    if (r.evaluated) out << " test_dsc=" << r.eval.dsc;
    out << "\n" << std::flush;
  };
  const TrainResult tr = train(mc, tc, data, cb);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.bin", tr.checkpoint);
  write_text(dir / "history.csv", history_csv(tr.checkpoint.history));
  write_text(dir / "config.cfg", to_key_values(mc) + to_key_values(tc));
  out << "checkpoint " << (dir / "checkpoint.bin").string() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require_file(o.checkpoint);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Model<float> model = model_from_checkpoint(ckpt);
  const Dataset data = load_dataset(o.data);
  std::vector<int> indices;
  if (o.split == "all") {
    for (int i = 0; i < int(data.size()); ++i) indices.push_back(i);
  } else {
    const unsigned long long seed = resolve_seed(o.seed).value_or(ckpt.train_config.seed);
    const Split s = split_dataset(int(data.size()), ckpt.train_config.train_fraction, seed);
    indices = o.split == "train" ? s.train : s.test;
  }
  const Evaluation ev = evaluate(model, data, indices);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  csv.precision(10);
  csv << "seed,split,dsc,f1,acc,iou,ercnt\n"
      << ckpt.train_config.seed << ',' << o.split << ',' << ev.report.dsc << ',' << ev.report.f1
      << ',' << ev.report.acc << ',' << ev.report.iou << ',' << ev.report.ercnt << '\n';
  write_text(dir / "metrics.csv", csv.str());
  std::ostringstream extra;
  extra.precision(10);
  extra << "edge_dsc=" << ev.edge_dsc << "\ncluster_dsc=" << ev.cluster_dsc
        << "\nconsistency_overlap=" << ev.mean_overlap << "\n";
  write_text(dir / "metrics.txt", to_key_values(ev.report) + extra.str());
  if (o.overlays) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      write_image_png(dir / "overlays" / (data.samples[indices[i]].id + ".png"), ev.overlap[i].overlay);
    }
  }
  out << to_key_values(ev.report) << extra.str();
  return 0;
}

int cmd_complexity(const Options& o, std::ostream& out) {
  ModelConfig mc;
  TrainConfig tc;
  load_configs(o.config, mc, tc);
  out << complexity_table_text(complexity_table(mc, o.flops_size));
  return 0;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  ModelConfig mc;
  TrainConfig tc;
  load_configs(o.config, mc, tc);
  apply_seed(resolve_seed(o.seed), mc, tc);
  if (o.epochs > 0) tc.epochs = o.epochs;
  mc.validate();
  tc.validate();
  const AblationResult r = run_ablation_grid(mc, tc, dataset_for(tc));
  const fs::path dir = o.out;
  write_text(dir / "ablation.csv", ablation_csv(r));
  write_text(dir / "complexity.txt", complexity_table_text(r.complexity));
  out << ablation_csv(r) << complexity_table_text(r.complexity);
  return 0;
}

int cmd_overlay(const Options& o, std::ostream& out) {
  require_file(o.checkpoint);
  require_file(o.image);
  const Model<float> model = model_from_checkpoint(load_checkpoint(o.checkpoint));
  const BranchMasks m = predict_image(model, read_image_png(o.image));
  const ConsistencyOverlap c = consistency_overlap(m.nuclei, m.edge);
  write_image_png(o.out, c.overlay);
  out << "edge_only=" << c.frac_edge_only << " contour_only=" << c.frac_nuclei_contour_only
      << " overlap=" << c.frac_overlap << (c.degenerate ? " degenerate" : "") << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tri-decoder nuclei segmentation: data, training, evaluation and complexity"};
  app.name("trinuseg");
  app.require_subcommand(1);
  Options o;

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "global seed (falls back to TRINUSEG_SEED)");
  };

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--n", o.n, "number of images")->check(CLI::NonNegativeNumber);
  synth->add_option("--size", o.size, "image side in pixels (>= 64)");
  synth->add_option("--cluster-probability", o.cluster_probability, "chance of touching placement");
  seed_opt(synth);

  CLI::App* trn = app.add_subcommand("train", "train and write checkpoint + history");
  trn->add_option("--config", o.config, "key=value config file")->required();
  trn->add_option("--out", o.out, "output directory")->required();
  trn->add_option("--epochs", o.epochs, "override epochs");
  seed_opt(trn);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  ev->add_option("--data", o.data, "dataset directory")->required();
  ev->add_option("--out", o.out, "output directory")->required();
  ev->add_option("--split", o.split, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  ev->add_flag("--overlays", o.overlays, "write consistency overlays");
  seed_opt(ev);

  CLI::App* cx = app.add_subcommand("complexity", "parameter/FLOP table for the MLP x AS variants");
  cx->add_option("--config", o.config, "key=value config file");
  cx->add_option("--flops-size", o.flops_size, "input side used for FLOPs");
  seed_opt(cx);

  CLI::App* ab = app.add_subcommand("ablate", "train all MLP/AS/SD combinations");
  ab->add_option("--config", o.config, "key=value config file")->required();
  ab->add_option("--out", o.out, "output directory")->required();
  ab->add_option("--epochs", o.epochs, "override epochs");
  seed_opt(ab);

  CLI::App* ov = app.add_subcommand("overlay", "edge vs nuclei-contour overlay for one image");
  ov->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  ov->add_option("--image", o.image, "input PNG")->required();
  ov->add_option("--out", o.out, "output PNG")->required();
  seed_opt(ov);

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (trn->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (cx->parsed()) return cmd_complexity(o, out);
    if (ab->parsed()) return cmd_ablate(o, out);
    if (ov->parsed()) return cmd_overlay(o, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << msg << "\n";
    return 1;
  }
  return 1;
}

}  // namespace trinuseg
