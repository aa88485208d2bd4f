#include "trinuseg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "trinuseg/image_io.hpp"

namespace trinuseg {
namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'T', 'N', 'S', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is, const std::string& where) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw IoError("truncated checkpoint: " + where);
  return v;
}

json loss_json(const LossBreakdown& l) {
  return {{"l_n", l.l_n}, {"l_e", l.l_e}, {"l_c", l.l_c},
          {"l_sd", l.l_sd}, {"gamma_sd", l.gamma_sd_used}, {"total", l.total}};
}

json history_json(const std::vector<EpochRecord>& history) {
  json arr = json::array();
  for (const EpochRecord& r : history) {
    json j = {{"epoch", r.epoch}, {"loss", loss_json(r.loss)}, {"evaluated", r.evaluated}};
    if (r.evaluated) {
      j["eval"] = {{"dsc", r.eval.dsc}, {"f1", r.eval.f1},       {"acc", r.eval.acc},
                   {"iou", r.eval.iou}, {"ercnt", r.eval.ercnt}, {"n_images", r.eval.n_images}};
    }
    arr.push_back(j);
  }
  return arr;
}

std::vector<EpochRecord> history_from_json(const json& arr) {
  std::vector<EpochRecord> out;
  for (const json& j : arr) {
    EpochRecord r;
    r.epoch = j.at("epoch");
    const json& l = j.at("loss");
    r.loss = {l.at("l_n"), l.at("l_e"), l.at("l_c"), l.at("l_sd"), l.at("gamma_sd"), l.at("total")};
    r.evaluated = j.at("evaluated");
    if (r.evaluated) {
      const json& e = j.at("eval");
      r.eval = {e.at("dsc"), e.at("f1"), e.at("acc"), e.at("iou"), e.at("ercnt"), e.at("n_images")};
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  const json meta = {{"model_config", to_key_values(ckpt.model_config)},
                     {"model_seed", ckpt.model_config.seed},
                     {"train_config", to_key_values(ckpt.train_config)},
                     {"epoch", ckpt.epoch},
                     {"history", history_json(ckpt.history)}};
  const std::string text = meta.dump();
  os.write(kMagic, 8);
  put_u32(os, kVersion);
  put_u32(os, std::uint32_t(text.size()));
  os.write(text.data(), std::streamsize(text.size()));
  put_u32(os, std::uint32_t(ckpt.weights.size()));
  for (const NamedArray& a : ckpt.weights) {
    put_u32(os, std::uint32_t(a.name.size()));
    os.write(a.name.data(), std::streamsize(a.name.size()));
    put_u32(os, std::uint32_t(a.shape.size()));
    for (int d : a.shape) put_u32(os, std::uint32_t(d));
    os.write(reinterpret_cast<const char*>(a.data.data()), std::streamsize(a.data.size() * 4));
  }
  if (!os) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a checkpoint: " + path.string());
  }
  const std::uint32_t version = get_u32(is, path.string());
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  }
  std::string text(get_u32(is, path.string()), '\0');
  if (!is.read(text.data(), std::streamsize(text.size()))) throw IoError("truncated checkpoint: " + path.string());
  Checkpoint ckpt;
  try {
    const json meta = json::parse(text);
    apply_config(parse_key_values(meta.at("model_config").get<std::string>()), ckpt.model_config,
                 ckpt.train_config);
    apply_config(parse_key_values(meta.at("train_config").get<std::string>()), ckpt.model_config,
                 ckpt.train_config);
    ckpt.model_config.seed = meta.at("model_seed").get<unsigned long long>();
    ckpt.epoch = meta.at("epoch");
    ckpt.history = history_from_json(meta.at("history"));
  } catch (const json::exception& e) {
    throw IoError("bad checkpoint metadata in " + path.string() + ": " + e.what());
  }
  const std::uint32_t count = get_u32(is, path.string());
  for (std::uint32_t t = 0; t < count; ++t) {
    NamedArray a;
    a.name.resize(get_u32(is, path.string()));
    if (!is.read(a.name.data(), std::streamsize(a.name.size()))) throw IoError("truncated checkpoint: " + path.string());
    const std::uint32_t ndim = get_u32(is, path.string());
    for (std::uint32_t d = 0; d < ndim; ++d) a.shape.push_back(int(get_u32(is, path.string())));
    a.data.resize(Tensor<float>::element_count(a.shape));
    if (!is.read(reinterpret_cast<char*>(a.data.data()), std::streamsize(a.data.size() * 4))) {
      throw IoError("truncated checkpoint: " + path.string());
    }
    ckpt.weights.push_back(std::move(a));
  }
  return ckpt;
}

std::vector<NamedArray> export_weights(const Model<float>& model) {
  std::vector<NamedArray> out;
  for (const NamedParam<float>& p : model.parameters()) {
    out.push_back({p.name, p.param->shape, p.param->value});
  }
  return out;
}

void import_weights(Model<float>& model, const std::vector<NamedArray>& weights) {
  if (weights.size() != model.parameters().size()) {
    throw IoError("checkpoint has " + std::to_string(weights.size()) + " arrays, model expects " +
                  std::to_string(model.parameters().size()));
  }
  for (const NamedArray& a : weights) {
    ParamPtr<float> p = model.find(a.name);
    if (!p) throw IoError("checkpoint array '" + a.name + "' has no matching parameter");
    if (p->shape != a.shape) {
      throw IoError("checkpoint array '" + a.name + "' has shape " + shape_string(a.shape) +
                    ", model expects " + shape_string(p->shape));
    }
    p->value = a.data;
  }
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Model<float> model(ckpt.model_config);
  import_weights(model, ckpt.weights);
  return model;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,l_n,l_e,l_c,l_sd,gamma_sd,total,dsc,f1,acc,iou,ercnt\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << r.loss.l_n << ',' << r.loss.l_e << ',' << r.loss.l_c << ','
       << r.loss.l_sd << ',' << r.loss.gamma_sd_used << ',' << r.loss.total;
    if (r.evaluated) {
      os << ',' << r.eval.dsc << ',' << r.eval.f1 << ',' << r.eval.acc << ',' << r.eval.iou << ','
         << r.eval.ercnt;
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace trinuseg
