#include "trinuseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "trinuseg/image_io.hpp"
#include "trinuseg/simd/kernels.hpp"

namespace trinuseg {
namespace fs = std::filesystem;

Dataset make_synthetic_dataset(int count, int size, double cluster_probability, std::uint64_t seed) {
  Dataset d;
  const int width = std::max(4, int(std::to_string(std::max(count - 1, 0)).size()));
  for (int i = 0; i < count; ++i) {
    SyntheticSample s = generate_synthetic_sample(seed * 1000003ULL + std::uint64_t(i), size,
                                                  default_instance_count(size), cluster_probability);
    std::string id = std::to_string(i);
    id.insert(0, std::size_t(std::max(0, width - int(id.size()))), '0');
    LabelTriplet labels = derive_label_triplet(s.instances);
    d.samples.push_back({id, std::move(s.image), std::move(s.instances), std::move(labels)});
  }
  return d;
}

Dataset load_dataset(const fs::path& root) {
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw IoError("missing dataset directory " + images.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  Dataset d;
  for (const std::string& id : ids) {
    const fs::path inst = root / "instances" / (id + ".png");
    if (!fs::exists(inst)) throw IoError("missing instance mask " + inst.string());
    Sample s;
    s.id = id;
    s.image = read_image_png(images / (id + ".png"));
    s.instances = compact_instances(read_instances_png(inst));
    if (s.instances.height != s.image.height || s.instances.width != s.image.width) {
      throw IoError("instance mask size differs from image for " + id);
    }
    s.labels = derive_label_triplet(s.instances);
    d.samples.push_back(std::move(s));
  }
  return d;
}

void save_dataset(const fs::path& root, const Dataset& dataset) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "instances");
  fs::create_directories(root / "labels");
  for (const Sample& s : dataset.samples) write_dataset_sample(root, s.id, s.image, s.instances, s.labels);
}

Split split_dataset(int n, double train_fraction, std::uint64_t seed) {
  std::vector<int> order(std::size_t(std::max(n, 0)));
  for (int i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % std::uint64_t(i + 1)]);
  int n_train = int(std::lround(train_fraction * n));
  n_train = std::clamp(n_train, n > 0 ? 1 : 0, n);
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.test.assign(order.begin() + n_train, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

void copy_image(const Image& img, int channels, float* dst) {
  const std::size_t pixels = std::size_t(img.height) * img.width;
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* src = &img.data[p * img.channels];
    if (img.channels == channels) {
      std::copy_n(src, channels, dst + p * channels);
    } else if (channels == 1) {
      float sum = 0;
      for (int c = 0; c < img.channels; ++c) sum += src[c];
      dst[p] = sum / float(img.channels);
    } else {
      for (int c = 0; c < channels; ++c) dst[p * channels + c] = src[std::min(c, img.channels - 1)];
    }
  }
}

BinaryMask argmax_mask(const Tensor<float>& logits, int n) {
  const int h = logits.dim(1), w = logits.dim(2);
  BinaryMask m(h, w);
  const float* p = logits.ptr() + std::size_t(n) * h * w * 2;
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = p[2 * i + 1] > p[2 * i] ? 1 : 0;
  return m;
}

const char* first_non_finite(const LossBreakdown& l) {
  if (!std::isfinite(l.l_n)) return "l_n";
  if (!std::isfinite(l.l_e)) return "l_e";
  if (!std::isfinite(l.l_c)) return "l_c";
  if (!std::isfinite(l.l_sd)) return "l_sd";
  if (!std::isfinite(l.total)) return "total";
  return nullptr;
}

}  // namespace

Tensor<float> batch_images(const Dataset& data, const std::vector<int>& indices, int channels) {
  if (indices.empty()) throw ShapeError("batch_images: empty batch");
  const Image& first = data.samples.at(indices[0]).image;
  Tensor<float> out({int(indices.size()), first.height, first.width, channels});
  const std::size_t per = std::size_t(first.height) * first.width * channels;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Image& img = data.samples.at(indices[b]).image;
    if (img.height != first.height || img.width != first.width) {
      throw ShapeError("batch_images: sample '" + data.samples[indices[b]].id + "' is " +
                       std::to_string(img.height) + "x" + std::to_string(img.width) +
                       ", batch is " + std::to_string(first.height) + "x" + std::to_string(first.width));
    }
    copy_image(img, channels, out.ptr() + per * b);
  }
  return out;
}

TargetMaps<float> batch_targets(const Dataset& data, const std::vector<int>& indices) {
  const LabelTriplet& first = data.samples.at(indices.at(0)).labels;
  const int h = first.nuclei.height, w = first.nuclei.width;
  TargetMaps<float> t;
  for (auto& m : t) m = Tensor<float>({int(indices.size()), h, w});
  const std::size_t per = std::size_t(h) * w;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const LabelTriplet& l = data.samples.at(indices[b]).labels;
    const BinaryMask* masks[kNumBranches] = {&l.nuclei, &l.edge, &l.cluster_edge};
    for (int br = 0; br < kNumBranches; ++br) {
      if (masks[br]->height != h || masks[br]->width != w) throw ShapeError("batch_targets: mixed sizes");
      std::copy(masks[br]->data.begin(), masks[br]->data.end(), t[br].ptr() + per * b);
    }
  }
  return t;
}

std::vector<BranchMasks> predict(const Model<float>& model, const Dataset& data,
                                 const std::vector<int>& indices, int batch_size) {
  std::vector<BranchMasks> out;
  for (std::size_t start = 0; start < indices.size(); start += std::size_t(batch_size)) {
    const std::vector<int> batch(indices.begin() + start,
                                 indices.begin() + std::min(indices.size(), start + batch_size));
    const TriPrediction<float> pred =
        model.forward(batch_images(data, batch, model.config().in_channels));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out.push_back({argmax_mask(pred.nuclei(), int(b)), argmax_mask(pred.edge(), int(b)),
                     argmax_mask(pred.cluster(), int(b))});
    }
  }
  return out;
}

BranchMasks predict_image(const Model<float>& model, const Image& image) {
  Dataset d;
  d.samples.push_back({"image", image, {}, {}});
  return predict(model, d, {0}, 1).at(0);
}

Evaluation evaluate(const Model<float>& model, const Dataset& data, const std::vector<int>& indices) {
  Evaluation ev;
  const std::vector<BranchMasks> preds = predict(model, data, indices);
  double overlap_sum = 0;
  int overlap_n = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Sample& s = data.samples[indices[i]];
    ev.per_image.push_back(image_metrics(preds[i].nuclei, preds[i].cluster_edge, s.instances));
    ev.edge_dsc += pixel_metrics(preds[i].edge, s.labels.edge).dsc;
    ev.cluster_dsc += pixel_metrics(preds[i].cluster_edge, s.labels.cluster_edge).dsc;
    ev.overlap.push_back(consistency_overlap(preds[i].nuclei, preds[i].edge));
    if (!ev.overlap.back().degenerate) {
      overlap_sum += ev.overlap.back().frac_overlap;
      ++overlap_n;
    }
  }
  ev.report = aggregate(ev.per_image);
  ev.mean_overlap = overlap_n ? overlap_sum / overlap_n : 0.0;
  if (!indices.empty()) {
    ev.edge_dsc /= double(indices.size());
    ev.cluster_dsc /= double(indices.size());
  }
  return ev;
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& tc, const Dataset& dataset,
                  const TrainCallbacks& callbacks) {
  model_config.validate();
  tc.validate();
  if (dataset.size() == 0) throw ConfigError("training needs a non-empty dataset");
  const Image& first = dataset.samples[0].image;
  if (first.height != model_config.input_size || first.width != model_config.input_size) {
    throw ConfigError("dataset images are " + std::to_string(first.height) + "x" +
                      std::to_string(first.width) + " but input_size is " +
                      std::to_string(model_config.input_size));
  }
  TrainResult result{Model<float>(model_config), {}, split_dataset(int(dataset.size()), tc.train_fraction, tc.seed)};
  Model<float>& model = result.model;
  const std::vector<NamedParam<float>>& params = model.parameters();
  std::vector<std::vector<float>> adam_m, adam_v;
  for (const auto& p : params) {
    adam_m.emplace_back(p.param->size(), 0.0f);
    adam_v.emplace_back(p.param->size(), 0.0f);
  }
  LossOptions options;
  options.sd_enabled = tc.sd_enabled;
  options.sd_stop_grad_nuclei = tc.sd_stop_grad_nuclei;

  std::mt19937_64 order_rng(tc.seed ^ 0x0de4ULL);
  std::vector<int> order = result.split.train;
  long step = 0;
  if (callbacks.on_start) callbacks.on_start(model);
  Checkpoint& ckpt = result.checkpoint;
  ckpt.model_config = model_config;
  ckpt.train_config = tc;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    for (int i = int(order.size()) - 1; i > 0; --i) std::swap(order[i], order[order_rng() % std::uint64_t(i + 1)]);
    EpochRecord rec;
    rec.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(tc.batch_size)) {
      const std::vector<int> batch(order.begin() + start,
                                   order.begin() + std::min(order.size(), start + tc.batch_size));
      ModelCache<float> cache;
      const TriPrediction<float> pred =
          model.forward(batch_images(dataset, batch, model_config.in_channels), &cache);
      std::array<Tensor<float>, kNumBranches> dlogits;
      const LossBreakdown lb = total_loss(pred, batch_targets(dataset, batch), epoch, options, &dlogits);
      if (const char* bad = first_non_finite(lb)) {
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batches) + ": first non-finite term is " + bad);
      }
      model.zero_grad();
      model.backward(dlogits, cache);
      ++step;
      const simd::AdamStep adam{tc.learning_rate, tc.beta1, tc.beta2, tc.adam_eps,
                                1.0 - std::pow(tc.beta1, double(step)),
                                1.0 - std::pow(tc.beta2, double(step))};
      for (std::size_t p = 0; p < params.size(); ++p) {
        Param<float>& prm = *params[p].param;
        simd::adam_update(prm.value.data(), prm.grad.data(), adam_m[p].data(), adam_v[p].data(),
                          prm.size(), adam);
      }
      rec.loss.l_n += lb.l_n;
      rec.loss.l_e += lb.l_e;
      rec.loss.l_c += lb.l_c;
      rec.loss.l_sd += lb.l_sd;
      rec.loss.total += lb.total;
      rec.loss.gamma_sd_used = lb.gamma_sd_used;
      ++batches;
    }
    rec.loss.l_n /= batches;
    rec.loss.l_e /= batches;
    rec.loss.l_c /= batches;
    rec.loss.l_sd /= batches;
    rec.loss.total /= batches;
    if (tc.eval_every > 0 && (epoch + 1) % tc.eval_every == 0 && !result.split.test.empty()) {
      rec.evaluated = true;
      rec.eval = evaluate(model, dataset, result.split.test).report;
    }
    ckpt.history.push_back(rec);
    if (callbacks.on_epoch) callbacks.on_epoch(rec);
  }
  ckpt.epoch = tc.epochs;
  ckpt.weights = export_weights(model);
  return result;
}

Dataset dataset_for(const TrainConfig& tc) {
  if (!tc.data_dir.empty()) return load_dataset(tc.data_dir);
  return make_synthetic_dataset(tc.synthetic_count, tc.synthetic_size, tc.cluster_probability, tc.seed);
}

std::vector<ComplexityRow> complexity_table(const ModelConfig& base, int flops_input_size) {
  std::vector<ComplexityRow> rows;
  const struct {
    const char* label;
    bool mlp, as;
  } combos[] = {{"w/o MLP & w/o AS", false, false},
                {"w/o MLP", false, true},
                {"w/o AS", true, false},
                {"full", true, true}};
  for (const auto& c : combos) {
    ModelConfig cfg = base;
    cfg.bottleneck = c.mlp ? BottleneckKind::kTokenMlp : BottleneckKind::kSwin;
    cfg.attention_sharing = c.as;
    cfg.validate();
    ComplexityReport r = estimate_flops(cfg, flops_input_size);
    r.label = c.label;
    rows.push_back({c.label, c.mlp, c.as, r});
  }
  return rows;
}

std::string complexity_table_text(const std::vector<ComplexityRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %4s %4s %14s %10s %14s\n", "variant", "MLP", "AS",
                "params", "params(M)", "GFLOPs@");
  os << line;
  for (const ComplexityRow& r : rows) {
    std::snprintf(line, sizeof line, "%-18s %4s %4s %14zu %10.3f %10.3f@%d\n", r.label.c_str(),
                  r.mlp ? "yes" : "no", r.as ? "yes" : "no", r.report.total_params,
                  r.report.total_params / 1e6, r.report.flops / 1e9, r.report.input_size);
    os << line;
  }
  return os.str();
}

AblationResult run_ablation_grid(const ModelConfig& model_config, const TrainConfig& train_config,
                                 const Dataset& dataset) {
  AblationResult result;
  result.complexity = complexity_table(model_config, model_config.input_size);
  for (int mlp = 0; mlp < 2; ++mlp) {
    for (int as = 0; as < 2; ++as) {
      for (int sd = 0; sd < 2; ++sd) {
        ModelConfig mc = model_config;
        mc.bottleneck = mlp ? BottleneckKind::kTokenMlp : BottleneckKind::kSwin;
        mc.attention_sharing = as != 0;
        TrainConfig tc = train_config;
        tc.sd_enabled = sd != 0;
        TrainResult tr = train(mc, tc, dataset);
        const std::vector<int>& held = tr.split.test.empty() ? tr.split.train : tr.split.test;
        const Evaluation ev = evaluate(tr.model, dataset, held);
        const ComplexityReport cx = estimate_flops(mc, mc.input_size);
        result.rows.push_back({mlp != 0, as != 0, sd != 0, ev.report, ev.mean_overlap,
                               cx.total_params, cx.flops});
      }
    }
  }
  return result;
}

std::string ablation_csv(const AblationResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "mlp,as,sd,dsc,f1,acc,iou,ercnt,consistency_overlap,params,flops\n";
  for (const AblationRow& r : result.rows) {
    os << r.mlp << ',' << r.as << ',' << r.sd << ',' << r.report.dsc << ',' << r.report.f1 << ','
       << r.report.acc << ',' << r.report.iou << ',' << r.report.ercnt << ',' << r.mean_overlap
       << ',' << r.params << ',' << r.flops << '\n';
  }
  return os.str();
}

}  // namespace trinuseg
