#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "trinuseg/checkpoint.hpp"
#include "trinuseg/training.hpp"

using namespace trinuseg;

namespace {

// 64x64 input so the synthetic generator can feed it; sides 16/8/4, bottleneck 2.
ModelConfig small_model() {
  ModelConfig c = fixtures::tiny_config();
  c.input_size = 64;
  return c;
}

TrainConfig small_train(int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 2;
  t.synthetic_count = 5;
  t.synthetic_size = 64;
  t.train_fraction = 0.8;
  t.seed = 3;
  return t;
}

const Dataset& small_data() {
  static const Dataset d = make_synthetic_dataset(5, 64, 0.5, 3);
  return d;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trinuseg_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("split is a seeded 80/20 partition") {
  const Split s = split_dataset(10, 0.8, 1);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 10);
  const Split again = split_dataset(10, 0.8, 1);
  CHECK(again.train == s.train);
  bool differs = false;
  for (std::uint64_t seed = 2; seed < 10 && !differs; ++seed) differs = split_dataset(10, 0.8, seed).test != s.test;
  CHECK(differs);
  CHECK(split_dataset(8, 1.0, 0).test.empty());
  CHECK(split_dataset(0, 0.8, 0).train.empty());
}

TEST_CASE("synthetic dataset is deterministic and round-trips through disk") {
  const Dataset a = make_synthetic_dataset(3, 64, 0.5, 9), b = make_synthetic_dataset(3, 64, 0.5, 9);
  REQUIRE(a.size() == 3);
  CHECK(a.samples[2].image.data == b.samples[2].image.data);
  CHECK(a.samples[0].id == "0000");
  const auto dir = scratch("dataset");
  save_dataset(dir, a);
  const Dataset c = load_dataset(dir);
  REQUIRE(c.size() == 3);
  CHECK(c.samples[1].instances == a.samples[1].instances);
  CHECK(c.samples[1].labels.cluster_edge == a.samples[1].labels.cluster_edge);
  CHECK_THROWS_AS(load_dataset(dir / "nope"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("batching converts channels and stacks targets") {
  const Dataset& d = small_data();
  const Tensor<float> x = batch_images(d, {0, 2}, 3);
  CHECK(x.shape == std::vector<int>{2, 64, 64, 3});
  CHECK(x.data[3 * 64 * 64 * 3 / 2] == x.data[3 * 64 * 64 * 3 / 2 + 1]);
  const TargetMaps<float> t = batch_targets(d, {1});
  CHECK(t[kEdge].shape == std::vector<int>{1, 64, 64});
  CHECK(t[kNuclei].data[0] == float(d.samples[1].labels.nuclei.data[0]));
}

TEST_CASE("training: history, schedule, determinism") {
  const TrainConfig tc = small_train(3);
  const TrainResult a = train(small_model(), tc, small_data());
  const TrainResult b = train(small_model(), tc, small_data());
  REQUIRE(a.checkpoint.history.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto& ra = a.checkpoint.history[e];
    CHECK(ra.epoch == int(e));
    CHECK(ra.loss.gamma_sd_used == gamma_sd_schedule(int(e)));
    CHECK(ra.loss.total == b.checkpoint.history[e].loss.total);
    CHECK(std::isfinite(ra.loss.total));
  }
  CHECK(a.split.train.size() == 4);
  const auto wa = export_weights(a.model), wb = export_weights(b.model);
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK(wa[i].data == wb[i].data);

  TrainConfig off = tc;
  off.sd_enabled = false;
  const TrainResult c = train(small_model(), off, small_data());
  for (const auto& r : c.checkpoint.history) CHECK(r.loss.gamma_sd_used == 0.0);
}

TEST_CASE("training evaluates the held-out split when asked") {
  TrainConfig tc = small_train(2);
  tc.eval_every = 1;
  const TrainResult r = train(small_model(), tc, small_data());
  for (const auto& e : r.checkpoint.history) {
    CHECK(e.evaluated);
    CHECK(e.eval.n_images == 1);
  }
  const std::string csv = history_csv(r.checkpoint.history);
  CHECK(csv.rfind("epoch,l_n,l_e,l_c,l_sd,gamma_sd,total,dsc,f1,acc,iou,ercnt\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("divergence names the first non-finite term") {
  TrainCallbacks cb;
  cb.on_start = [](Model<float>& m) {
    m.find("decoders.edge.head.bias")->value[0] = std::numeric_limits<float>::quiet_NaN();
  };
  try {
    train(small_model(), small_train(1), small_data(), cb);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    const std::string msg = e.what();
    CHECK(msg.find("l_e") != std::string::npos);
    CHECK(msg.find("epoch 0") != std::string::npos);
  }
}

TEST_CASE("evaluation is read-only and repeatable") {
  const TrainResult r = train(small_model(), small_train(1), small_data());
  const auto before = export_weights(r.model);
  const Evaluation a = evaluate(r.model, small_data(), {0, 1, 2, 3, 4});
  const Evaluation b = evaluate(r.model, small_data(), {0, 1, 2, 3, 4});
  const auto after = export_weights(r.model);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].data == after[i].data);
  CHECK(a.report.dsc == b.report.dsc);
  CHECK(a.report.ercnt == b.report.ercnt);
  CHECK(a.report.n_images == 5);
  CHECK(a.mean_overlap == b.mean_overlap);
}

TEST_CASE("checkpoint round trip reproduces forward outputs exactly") {
  TrainConfig tc = small_train(2);
  tc.eval_every = 1;
  const TrainResult r = train(small_model(), tc, small_data());
  const auto path = scratch("ckpt") / "model.bin";
  save_checkpoint(path, r.checkpoint);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(to_key_values(loaded.model_config) == to_key_values(r.checkpoint.model_config));
  CHECK(loaded.model_config.seed == r.checkpoint.model_config.seed);
  CHECK(to_key_values(loaded.train_config) == to_key_values(r.checkpoint.train_config));
  CHECK(loaded.epoch == 2);
  REQUIRE(loaded.history.size() == 2);
  CHECK(loaded.history[1].loss.total == r.checkpoint.history[1].loss.total);
  CHECK(loaded.history[1].eval.dsc == r.checkpoint.history[1].eval.dsc);

  const Model<float> m = model_from_checkpoint(loaded);
  const Tensor<float> x = batch_images(small_data(), {0, 1}, 1);
  const auto p0 = r.model.forward(x), p1 = m.forward(x);
  for (int b = 0; b < kNumBranches; ++b) CHECK(fixtures::same_tensor(p0.logits[b], p1.logits[b]));

  // corrupt and mismatched files are rejected
  {
    std::ofstream(path.parent_path() / "bad.bin") << "garbage";
  }
  CHECK_THROWS_AS(load_checkpoint(path.parent_path() / "bad.bin"), IoError);
  Checkpoint wrong = loaded;
  wrong.weights.pop_back();
  CHECK_THROWS_AS(model_from_checkpoint(wrong), IoError);
  wrong = loaded;
  wrong.weights[0].shape = {1};
  CHECK_THROWS_AS(model_from_checkpoint(wrong), IoError);
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("training rejects mismatched inputs") {
  ModelConfig m = small_model();
  m.input_size = 32;
  CHECK_THROWS_AS(train(m, small_train(1), small_data()), ConfigError);
  TrainConfig t = small_train(1);
  t.epochs = 0;
  CHECK_THROWS_AS(train(small_model(), t, small_data()), ConfigError);
  t = small_train(1);
  t.learning_rate = 0;
  CHECK_THROWS_AS(train(small_model(), t, small_data()), ConfigError);
  CHECK_THROWS_AS(train(small_model(), small_train(1), Dataset{}), ConfigError);
}

TEST_CASE("ablation grid smoke run") {
  TrainConfig tc = small_train(1);
  const AblationResult r = run_ablation_grid(small_model(), tc, small_data());
  REQUIRE(r.rows.size() == 8);
  std::set<std::tuple<bool, bool, bool>> combos;
  for (const auto& row : r.rows) combos.insert({row.mlp, row.as, row.sd});
  CHECK(combos.size() == 8);
  REQUIRE(r.complexity.size() == 4);
  const auto p = [&](int i) { return long(r.complexity[i].report.total_params); };
  CHECK(p(0) > p(1));
  CHECK(p(1) > p(2));
  CHECK(p(2) > p(3));
  CHECK(p(0) - p(1) == p(2) - p(3));
  CHECK(p(0) - p(2) == p(1) - p(3));
  const std::string csv = ablation_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
