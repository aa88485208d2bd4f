#include "trinuseg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace trinuseg {
namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

long long to_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, std::string value) {
  std::transform(value.begin(), value.end(), value.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<int> to_int_list(const std::string& key, std::string value) {
  value = trim(value);
  if (!value.empty() && value.front() == '[') value.erase(value.begin());
  if (!value.empty() && value.back() == ']') value.pop_back();
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(int(to_integer(key, item)));
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(BottleneckKind kind) {
  return kind == BottleneckKind::kSwin ? "swin" : "token_mlp";
}

BottleneckKind parse_bottleneck(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "token_mlp" || t == "mlp") return BottleneckKind::kTokenMlp;
  if (t == "swin") return BottleneckKind::kSwin;
  throw ConfigError("bottleneck must be 'token_mlp' or 'swin', got '" + text + "'");
}

int ModelConfig::shared_heads(int stage) const {
  if (!attention_sharing) return 0;
  return int(std::lround(shared_head_fraction * heads_per_stage.at(stage)));
}

int effective_window(int configured, int side) {
  if (side <= configured) return side;
  for (int w = configured; w > 1; --w) {
    if (side % w == 0) return w;
  }
  return 1;
}

int effective_shift(int configured, int side) {
  const int w = effective_window(configured, side);
  return side > w ? w / 2 : 0;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid model config: " + msg); };
  if (input_size <= 0) fail("input_size must be positive");
  if (in_channels <= 0) fail("in_channels must be positive");
  if (patch_size <= 0) fail("patch_size must be positive");
  if (embed_dim <= 0) fail("embed_dim must be positive");
  if (window_size <= 0) fail("window_size must be positive");
  if (mlp_ratio <= 0) fail("mlp_ratio must be positive");
  if (bottleneck_depth <= 0) fail("bottleneck_depth must be positive");
  if (encoder_depths.empty()) fail("encoder_depths must not be empty");
  const int stages = num_stages();
  if (int(decoder_depths.size()) != stages) {
    fail("decoder_depths must have the same length as encoder_depths (" +
         std::to_string(stages) + ")");
  }
  if (int(heads_per_stage.size()) != stages) {
    fail("heads_per_stage must have one entry per encoder stage (" + std::to_string(stages) + ")");
  }
  for (int d : encoder_depths) if (d <= 0) fail("encoder_depths entries must be positive");
  for (int d : decoder_depths) if (d <= 0) fail("decoder_depths entries must be positive");
  const long long divisor = (long long)patch_size << stages;
  if (input_size % divisor != 0) {
    fail("input_size " + std::to_string(input_size) + " must be divisible by patch_size x 2^" +
         std::to_string(stages) + " = " + std::to_string(divisor));
  }
  for (int s = 0; s < stages; ++s) {
    const int h = heads_per_stage[s];
    if (h <= 0 || stage_width(s) % h != 0) {
      fail("heads_per_stage[" + std::to_string(s) + "] = " + std::to_string(h) +
           " must divide stage width " + std::to_string(stage_width(s)));
    }
  }
  if (bottleneck == BottleneckKind::kSwin && bottleneck_width() % bottleneck_heads() != 0) {
    fail("bottleneck heads " + std::to_string(bottleneck_heads()) +
         " must divide bottleneck width " + std::to_string(bottleneck_width()));
  }
  if (!(shared_head_fraction >= 0.0 && shared_head_fraction <= 1.0)) {
    fail("shared_head_fraction must lie in [0, 1]");
  }
  if (shift_groups <= 0 || shift_groups > bottleneck_width()) {
    fail("shift_groups must lie in [1, bottleneck width]");
  }
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid train config: " + msg); };
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("Adam betas must lie in [0, 1)");
  if (!(train_fraction > 0 && train_fraction <= 1)) fail("train_fraction must lie in (0, 1]");
  if (eval_every < 0) fail("eval_every must be >= 0");
  if (data_dir.empty() && synthetic_count < 1) fail("synthetic_count must be >= 1 without data_dir");
  if (!(cluster_probability >= 0 && cluster_probability <= 1)) fail("cluster_probability must lie in [0, 1]");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // TOML section headers are ignored
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = unquote(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void apply_config(const KeyValues& kv, ModelConfig& m, TrainConfig& t) {
  for (const auto& [key, value] : kv) {
    if (key == "input_size") m.input_size = int(to_integer(key, value));
    else if (key == "in_channels") m.in_channels = int(to_integer(key, value));
    else if (key == "patch_size") m.patch_size = int(to_integer(key, value));
    else if (key == "embed_dim") m.embed_dim = int(to_integer(key, value));
    else if (key == "encoder_depths") m.encoder_depths = to_int_list(key, value);
    else if (key == "decoder_depths") m.decoder_depths = to_int_list(key, value);
    else if (key == "heads_per_stage") m.heads_per_stage = to_int_list(key, value);
    else if (key == "window_size") m.window_size = int(to_integer(key, value));
    else if (key == "shared_head_fraction") m.shared_head_fraction = to_real(key, value);
    else if (key == "bottleneck") m.bottleneck = parse_bottleneck(value);
    else if (key == "attention_sharing") m.attention_sharing = to_bool(key, value);
    else if (key == "mlp_ratio") m.mlp_ratio = int(to_integer(key, value));
    else if (key == "bottleneck_depth") m.bottleneck_depth = int(to_integer(key, value));
    else if (key == "shift_groups") m.shift_groups = int(to_integer(key, value));
    else if (key == "num_classes_per_branch") {
      if (to_integer(key, value) != kNumClasses) throw ConfigError("num_classes_per_branch is fixed at 2");
    }
    else if (key == "learning_rate") t.learning_rate = to_real(key, value);
    else if (key == "beta1") t.beta1 = to_real(key, value);
    else if (key == "beta2") t.beta2 = to_real(key, value);
    else if (key == "adam_eps") t.adam_eps = to_real(key, value);
    else if (key == "batch_size") t.batch_size = int(to_integer(key, value));
    else if (key == "epochs") t.epochs = int(to_integer(key, value));
    else if (key == "seed") {
      t.seed = (unsigned long long)to_integer(key, value);
      m.seed = t.seed;
    }
    else if (key == "sd_enabled") t.sd_enabled = to_bool(key, value);
    else if (key == "sd_stop_grad_nuclei") t.sd_stop_grad_nuclei = to_bool(key, value);
    else if (key == "eval_every") t.eval_every = int(to_integer(key, value));
    else if (key == "train_fraction") t.train_fraction = to_real(key, value);
    else if (key == "data_dir") t.data_dir = value;
    else if (key == "synthetic_count") t.synthetic_count = int(to_integer(key, value));
    else if (key == "synthetic_size") t.synthetic_size = int(to_integer(key, value));
    else if (key == "cluster_probability") t.cluster_probability = to_real(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string to_key_values(const ModelConfig& m) {
  std::ostringstream os;
  os << "input_size = " << m.input_size << "\n"
     << "in_channels = " << m.in_channels << "\n"
     << "patch_size = " << m.patch_size << "\n"
     << "embed_dim = " << m.embed_dim << "\n"
     << "encoder_depths = " << join(m.encoder_depths) << "\n"
     << "decoder_depths = " << join(m.decoder_depths) << "\n"
     << "heads_per_stage = " << join(m.heads_per_stage) << "\n"
     << "window_size = " << m.window_size << "\n"
     << "shared_head_fraction = " << real(m.shared_head_fraction) << "\n"
     << "bottleneck = " << to_string(m.bottleneck) << "\n"
     << "attention_sharing = " << (m.attention_sharing ? "true" : "false") << "\n"
     << "mlp_ratio = " << m.mlp_ratio << "\n"
     << "bottleneck_depth = " << m.bottleneck_depth << "\n"
     << "shift_groups = " << m.shift_groups << "\n";
  return os.str();
}

std::string to_key_values(const TrainConfig& t) {
  std::ostringstream os;
  os << "learning_rate = " << real(t.learning_rate) << "\n"
     << "beta1 = " << real(t.beta1) << "\n"
     << "beta2 = " << real(t.beta2) << "\n"
     << "adam_eps = " << real(t.adam_eps) << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "epochs = " << t.epochs << "\n"
     << "seed = " << t.seed << "\n"
     << "sd_enabled = " << (t.sd_enabled ? "true" : "false") << "\n"
     << "sd_stop_grad_nuclei = " << (t.sd_stop_grad_nuclei ? "true" : "false") << "\n"
     << "eval_every = " << t.eval_every << "\n"
     << "train_fraction = " << real(t.train_fraction) << "\n"
     << "data_dir = " << t.data_dir << "\n"
     << "synthetic_count = " << t.synthetic_count << "\n"
     << "synthetic_size = " << t.synthetic_size << "\n"
     << "cluster_probability = " << real(t.cluster_probability) << "\n";
  return os.str();
}

}  // namespace trinuseg
