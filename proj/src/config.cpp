#include "sand/config.hpp"

#include <fstream>
#include <sstream>

#include "sand/model_io.hpp"  // fnv1a64, MissingArtifact

namespace sand {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t idx = 0;
    unsigned long long x = std::stoull(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t idx = 0;
    double x = std::stod(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw Error("config: key '" + key + "' expects 0/1, got '" + v + "'");
}

std::vector<size_t> parse_size_list(const std::string& key, const std::string& v) {
  std::vector<size_t> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_u64(key, item));
  }
  if (out.empty()) throw Error("config: key '" + key + "' expects a comma list of integers");
  return out;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw Error("config: " + what);
}

}  // namespace

void apply_override(PipelineConfig& c, const std::string& key, const std::string& value) {
  if (key == "bench_dir") c.bench_dir = value;
  else if (key == "dataset_dir") c.dataset_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "model_path") c.model_path = value;
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "n_pos") c.augment.n_pos = parse_u64(key, value);
  else if (key == "n_neg") c.augment.n_neg = parse_u64(key, value);
  else if (key == "trigger_width") c.augment.trigger_width = parse_u64(key, value);
  else if (key == "rarity_threshold") c.augment.rarity_threshold = parse_f64(key, value);
  else if (key == "profile_vectors") c.augment.profile_vectors = parse_u64(key, value);
  else if (key == "demorgan_max_count") c.augment.demorgan_max_count = parse_u64(key, value);
  else if (key == "retry_budget") c.augment.retry_budget = parse_u64(key, value);
  else if (key == "cert_vectors") c.augment.cert_vectors = parse_u64(key, value);
  else if (key == "reallocate_uninjectable") c.augment.reallocate_uninjectable = parse_bool(key, value);
  else if (key == "margin") c.ssl.margin = parse_f64(key, value);
  else if (key == "lambda_pos") c.ssl.lambda_pos = parse_f64(key, value);
  else if (key == "lambda_neg") c.ssl.lambda_neg = parse_f64(key, value);
  else if (key == "lambda_global") c.ssl.lambda_global = parse_f64(key, value);
  else if (key == "encoder_epochs") c.ssl.epochs = parse_u64(key, value);
  else if (key == "groups_per_batch") c.ssl.groups_per_batch = parse_u64(key, value);
  else if (key == "encoder_lr") c.ssl.opt.lr = parse_f64(key, value);
  else if (key == "plain_sgd") c.ssl.opt.plain_sgd = parse_bool(key, value);
  else if (key == "d1") c.ssl.dims.d1 = parse_u64(key, value);
  else if (key == "d2") c.ssl.dims.d2 = parse_u64(key, value);
  else if (key == "d3") c.ssl.dims.d3 = parse_u64(key, value);
  else if (key == "dz") c.ssl.dims.dz = parse_u64(key, value);
  else if (key == "supernet_epochs") c.supernet.epochs = parse_u64(key, value);
  else if (key == "supernet_batch") c.supernet.batch_size = parse_u64(key, value);
  else if (key == "supernet_lr") c.supernet.opt.lr = parse_f64(key, value);
  else if (key == "val_fraction") c.supernet.val_fraction = parse_f64(key, value);
  else if (key == "n_permutations") c.n_permutations = parse_u64(key, value);
  else if (key == "prune_tau") c.prune_tau = parse_f64(key, value);
  else if (key == "finetune_epochs") c.finetune_epochs = parse_u64(key, value);
  else if (key == "test_fraction") c.test_fraction = parse_f64(key, value);
  else if (key == "snapshot_epochs") c.snapshot_epochs = parse_size_list(key, value);
  else if (key == "stability_trials") c.stability_trials = parse_u64(key, value);
  else if (key == "corpus_synth") c.corpus_synth = parse_u64(key, value);
  else if (key == "corpus_gates_min") c.corpus_gates_min = parse_u64(key, value);
  else if (key == "corpus_gates_max") c.corpus_gates_max = parse_u64(key, value);
  else if (key == "corpus_inputs") c.corpus_inputs = parse_u64(key, value);
  else if (key == "corpus_outputs") c.corpus_outputs = parse_u64(key, value);
  else throw Error("config: unknown key '" + key + "'");
}

namespace {

void validate_config(const PipelineConfig& c) {
  check(c.augment.n_pos >= 1, "n_pos must be >= 1");
  check(c.augment.n_neg >= 1, "n_neg must be >= 1");
  check(c.augment.trigger_width >= 2 && c.augment.trigger_width <= 6, "trigger_width must be in [2, 6]");
  check(c.augment.rarity_threshold > 0.0 && c.augment.rarity_threshold < 1.0,
        "rarity_threshold must be in (0, 1)");
  check(c.augment.profile_vectors >= 1, "profile_vectors must be >= 1");
  check(c.ssl.margin > 0.0, "margin must be positive");
  check(c.ssl.lambda_pos >= 0.0 && c.ssl.lambda_neg >= 0.0 && c.ssl.lambda_global >= 0.0,
        "loss weights must be non-negative");
  check(c.ssl.opt.lr > 0.0 && c.supernet.opt.lr > 0.0, "learning rates must be positive");
  check(c.ssl.dims.d1 >= 1 && c.ssl.dims.d2 >= 1 && c.ssl.dims.d3 >= 1 && c.ssl.dims.dz >= 8,
        "encoder dims must be >= 1 and dz >= 8");
  check(c.supernet.val_fraction > 0.0 && c.supernet.val_fraction < 1.0, "val_fraction must be in (0, 1)");
  check(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction must be in (0, 1)");
  check(c.n_permutations >= 1, "n_permutations must be >= 1");
  check(c.stability_trials >= 2, "stability_trials must be >= 2");
  check(c.corpus_gates_min >= 10 && c.corpus_gates_max >= c.corpus_gates_min,
        "corpus gate bounds must satisfy 10 <= min <= max");
  check(c.corpus_inputs >= 4 && c.corpus_outputs >= 1, "corpus needs >= 4 inputs and >= 1 output");
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string raw;
  size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    apply_override(c, key, value);
  }
  validate_config(c);
  return c;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingArtifact("missing config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "bench_dir = " << c.bench_dir << "\n";
  out << "dataset_dir = " << c.dataset_dir << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  out << "model_path = " << c.model_path << "\n";
  out << "seed = " << c.seed << "\n";
  out << "n_pos = " << c.augment.n_pos << "\n";
  out << "n_neg = " << c.augment.n_neg << "\n";
  out << "trigger_width = " << c.augment.trigger_width << "\n";
  out << "rarity_threshold = " << c.augment.rarity_threshold << "\n";
  out << "profile_vectors = " << c.augment.profile_vectors << "\n";
  out << "demorgan_max_count = " << c.augment.demorgan_max_count << "\n";
  out << "retry_budget = " << c.augment.retry_budget << "\n";
  out << "cert_vectors = " << c.augment.cert_vectors << "\n";
  out << "reallocate_uninjectable = " << (c.augment.reallocate_uninjectable ? 1 : 0) << "\n";
  out << "margin = " << c.ssl.margin << "\n";
  out << "lambda_pos = " << c.ssl.lambda_pos << "\n";
  out << "lambda_neg = " << c.ssl.lambda_neg << "\n";
  out << "lambda_global = " << c.ssl.lambda_global << "\n";
  out << "encoder_epochs = " << c.ssl.epochs << "\n";
  out << "groups_per_batch = " << c.ssl.groups_per_batch << "\n";
  out << "encoder_lr = " << c.ssl.opt.lr << "\n";
  out << "plain_sgd = " << (c.ssl.opt.plain_sgd ? 1 : 0) << "\n";
  out << "d1 = " << c.ssl.dims.d1 << "\n";
  out << "d2 = " << c.ssl.dims.d2 << "\n";
  out << "d3 = " << c.ssl.dims.d3 << "\n";
  out << "dz = " << c.ssl.dims.dz << "\n";
  out << "supernet_epochs = " << c.supernet.epochs << "\n";
  out << "supernet_batch = " << c.supernet.batch_size << "\n";
  out << "supernet_lr = " << c.supernet.opt.lr << "\n";
  out << "val_fraction = " << c.supernet.val_fraction << "\n";
  out << "n_permutations = " << c.n_permutations << "\n";
  out << "prune_tau = " << c.prune_tau << "\n";
  out << "finetune_epochs = " << c.finetune_epochs << "\n";
  out << "test_fraction = " << c.test_fraction << "\n";
  out << "snapshot_epochs = ";
  for (size_t i = 0; i < c.snapshot_epochs.size(); ++i)
    out << (i ? "," : "") << c.snapshot_epochs[i];
  out << "\n";
  out << "stability_trials = " << c.stability_trials << "\n";
  out << "corpus_synth = " << c.corpus_synth << "\n";
  out << "corpus_gates_min = " << c.corpus_gates_min << "\n";
  out << "corpus_gates_max = " << c.corpus_gates_max << "\n";
  out << "corpus_inputs = " << c.corpus_inputs << "\n";
  out << "corpus_outputs = " << c.corpus_outputs << "\n";
  return out.str();
}

uint64_t config_hash(const PipelineConfig& config) {
  std::string text = config_to_text(config);
  return fnv1a64(reinterpret_cast<const uint8_t*>(text.data()), text.size());
}

}  // namespace sand
