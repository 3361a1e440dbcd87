#include "sand/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sand/bench_io.hpp"
#include "sand/circuit_graph.hpp"
#include "sand/rng.hpp"

namespace fs = std::filesystem;

namespace sand {

Dataset dataset_from_sampleset(SampleSet set) {
  Dataset ds;
  ds.set = std::move(set);
  ds.graphs.resize(ds.set.records.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(ds.set.records.size()); ++i) {
    const SampleRecord& r = ds.set.records[static_cast<size_t>(i)];
    ds.graphs[static_cast<size_t>(i)] = {build_graph(r.circuit), r.label, r.id};
  }

  AnchorGroup* cur = nullptr;
  for (size_t i = 0; i < ds.set.records.size(); ++i) {
    const SampleRecord& r = ds.set.records[i];
    if (r.role == SampleRole::Anchor) {
      ds.groups.push_back({i, {}, {}});
      cur = &ds.groups.back();
    } else if (cur) {
      (r.role == SampleRole::Positive ? cur->positives : cur->negatives).push_back(i);
    }
  }
  return ds;
}

namespace {

std::string assignment_to_text(const FrameAssignment& fa) {
  std::vector<std::string> keys;
  keys.reserve(fa.size());
  for (const auto& [k, v] : fa) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::ostringstream out;
  for (size_t i = 0; i < keys.size(); ++i) {
    if (i) out << ";";
    out << keys[i] << "=" << static_cast<int>(fa.at(keys[i]) ? 1 : 0);
  }
  return out.str();
}

FrameAssignment assignment_from_text(const std::string& text) {
  FrameAssignment fa;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    size_t eq = item.find('=');
    if (eq == std::string::npos) continue;
    fa[item.substr(0, eq)] = item.substr(eq + 1) == "1" ? 1 : 0;
  }
  return fa;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::ostringstream out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << sep;
    out << v[i];
  }
  return out.str();
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

void write_dataset(const SampleSet& set, const std::string& dir) {
  make_dirs(dir);
  for (const SampleRecord& r : set.records) save_bench_file(r.circuit, dir + "/" + r.id + ".bench");
  write_text_file(dir + "/manifest.csv", manifest_csv(set, dir));

  std::ostringstream tj;
  tj << "sample_id,trigger_nets,polarities,payload_net,flipped_output,fire_count,rarity_seed,"
        "rarity_vectors,assignment\n";
  for (const SampleRecord& r : set.records) {
    if (!r.trojan) continue;
    const TrojanInfo& t = *r.trojan;
    std::string pols;
    for (uint8_t p : t.trigger_polarity) pols += p ? '1' : '0';
    tj << r.id << "," << join(t.trigger_nets, ';') << "," << pols << "," << t.payload_net << ","
       << t.flipped_output << "," << t.fire_count << "," << t.rarity_seed << "," << t.rarity_vectors
       << "," << assignment_to_text(t.distinguishing) << "\n";
  }
  write_text_file(dir + "/trojans.csv", tj.str());
}

SampleSet read_dataset(const std::string& dir) {
  std::string manifest = read_text_file(dir + "/manifest.csv");
  SampleSet set;
  std::istringstream in(manifest);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split_on(line, ',');
    if (cols.size() != 7) throw Error("manifest.csv: malformed row '" + line + "'");
    SampleRecord r;
    r.id = cols[0];
    r.origin = cols[1];
    if (cols[2] == "anchor") r.role = SampleRole::Anchor;
    else if (cols[2] == "pos") r.role = SampleRole::Positive;
    else if (cols[2] == "neg") r.role = SampleRole::Negative;
    else throw Error("manifest.csv: unknown role '" + cols[2] + "'");
    r.transform = cols[3];
    r.seed = std::stoull(cols[4]);
    r.label = std::stoi(cols[5]);
    r.circuit = load_bench_file(cols[6]);
    r.circuit.name = r.id;
    set.records.push_back(std::move(r));
  }

  if (file_exists(dir + "/trojans.csv")) {
    std::istringstream tin(read_text_file(dir + "/trojans.csv"));
    std::getline(tin, line);
    while (std::getline(tin, line)) {
      if (line.empty()) continue;
      auto cols = split_on(line, ',');
      if (cols.size() != 9) throw Error("trojans.csv: malformed row");
      for (SampleRecord& r : set.records) {
        if (r.id != cols[0]) continue;
        TrojanInfo t;
        t.trigger_nets = split_on(cols[1], ';');
        for (char c : cols[2]) t.trigger_polarity.push_back(c == '1' ? 1 : 0);
        t.trigger_width = t.trigger_nets.size();
        t.payload_net = cols[3];
        t.flipped_output = cols[4];
        t.fire_count = std::stoull(cols[5]);
        t.rarity_seed = std::stoull(cols[6]);
        t.rarity_vectors = std::stoull(cols[7]);
        t.distinguishing = assignment_from_text(cols[8]);
        r.trojan = std::move(t);
        break;
      }
    }
  }
  return set;
}

SplitView dataset_split(const SampleSet& set, double test_fraction, uint64_t seed) {
  SplitView view;
  view.is_test.assign(set.records.size(), 0);

  // Per anchor and role, a seeded shuffle sends the first
  // floor(test_fraction * n) samples to the test side.
  size_t group_index = 0;
  std::vector<size_t> pos, neg;
  auto flush = [&](std::vector<size_t>& idx, uint64_t tag) {
    if (idx.empty()) return;
    Rng rng(derive_seed(seed, 0x53504C54 + tag, group_index));
    rng.shuffle(idx);
    size_t n_test = static_cast<size_t>(std::floor(test_fraction * static_cast<double>(idx.size())));
    for (size_t i = 0; i < n_test; ++i) view.is_test[idx[i]] = 1;
    idx.clear();
  };

  bool any = false;
  for (size_t i = 0; i < set.records.size(); ++i) {
    const SampleRecord& r = set.records[i];
    if (r.role == SampleRole::Anchor) {
      if (any) {
        flush(pos, 0);
        flush(neg, 1);
        ++group_index;
      }
      any = true;
    } else {
      (r.role == SampleRole::Positive ? pos : neg).push_back(i);
    }
  }
  flush(pos, 0);
  flush(neg, 1);

  for (size_t i = 0; i < set.records.size(); ++i)
    (view.is_test[i] ? view.test : view.train).push_back(i);
  return view;
}

std::vector<AnchorGroup> train_groups(const Dataset& dataset, const SplitView& split) {
  std::vector<AnchorGroup> out;
  for (const AnchorGroup& g : dataset.groups) {
    AnchorGroup t;
    t.anchor = g.anchor;
    for (size_t p : g.positives)
      if (!split.is_test[p]) t.positives.push_back(p);
    for (size_t n : g.negatives)
      if (!split.is_test[n]) t.negatives.push_back(n);
    out.push_back(std::move(t));
  }
  return out;
}

Matrix embed_all(const EncoderModel& model, const Dataset& dataset) {
  Matrix z(dataset.graphs.size(), model.dims.dz, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(dataset.graphs.size()); ++i) {
    Matrix zi = embed(dataset.graphs[static_cast<size_t>(i)].graph, model);
    for (size_t j = 0; j < z.cols; ++j) z.at(static_cast<size_t>(i), j) = zi.data[j];
  }
  return z;
}

LabeledEmbeddings select_embeddings(const Matrix& z, const Dataset& dataset,
                                    const std::vector<size_t>& idx) {
  LabeledEmbeddings out;
  out.z = Matrix(idx.size(), z.cols, 0.0);
  out.labels.reserve(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    for (size_t j = 0; j < z.cols; ++j) out.z.at(i, j) = z.at(idx[i], j);
    out.labels.push_back(dataset.set.records[idx[i]].label);
  }
  return out;
}

std::string embeddings_to_csv(const Dataset& dataset, const SplitView& split, const Matrix& z) {
  std::ostringstream out;
  out << "sample_id,label,role,split";
  for (size_t j = 0; j < z.cols; ++j) out << ",z" << j;
  out << "\n";
  out.precision(17);
  for (size_t i = 0; i < dataset.set.records.size(); ++i) {
    const SampleRecord& r = dataset.set.records[i];
    out << r.id << "," << r.label << "," << sample_role_name(r.role) << ","
        << (split.is_test[i] ? "test" : "train");
    for (size_t j = 0; j < z.cols; ++j) out << "," << z.at(i, j);
    out << "\n";
  }
  return out.str();
}

EmbeddingRows read_embeddings_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error("embeddings csv empty");
  auto header = split_on(line, ',');
  if (header.size() < 5) throw Error("embeddings csv: bad header");
  size_t dz = header.size() - 4;

  EmbeddingRows rows;
  std::vector<double> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split_on(line, ',');
    if (cols.size() != 4 + dz) throw Error("embeddings csv: malformed row");
    rows.ids.push_back(cols[0]);
    rows.labels.push_back(std::stoi(cols[1]));
    rows.roles.push_back(cols[2]);
    rows.is_test.push_back(cols[3] == "test" ? 1 : 0);
    for (size_t j = 0; j < dz; ++j) data.push_back(std::stod(cols[4 + j]));
  }
  rows.z = Matrix(rows.ids.size(), dz);
  rows.z.data = std::move(data);
  return rows;
}

LabeledEmbeddings EmbeddingRows::select(bool test_side) const {
  LabeledEmbeddings out;
  std::vector<size_t> idx;
  for (size_t i = 0; i < ids.size(); ++i)
    if ((is_test[i] != 0) == test_side) idx.push_back(i);
  out.z = Matrix(idx.size(), z.cols, 0.0);
  for (size_t i = 0; i < idx.size(); ++i) {
    for (size_t j = 0; j < z.cols; ++j) out.z.at(i, j) = z.at(idx[i], j);
    out.labels.push_back(labels[idx[i]]);
  }
  return out;
}

void make_dirs(const std::string& path) { fs::create_directories(path); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifact("missing file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

bool file_exists(const std::string& path) { return fs::exists(path); }

void ensure_run_dir(const PipelineConfig& config) {
  make_dirs(config.out_dir);
  std::string snapshot = config_to_text(config);
  std::string marker = config.out_dir + "/run_config.txt";
  if (file_exists(marker)) {
    if (read_text_file(marker) != snapshot)
      throw Error("out_dir '" + config.out_dir + "' belongs to a different config; refusing to overwrite");
    return;
  }
  write_text_file(marker, snapshot);
}

std::string metrics_to_csv(const Metrics& m) {
  std::ostringstream out;
  out.precision(17);
  out << "accuracy,recall,precision,f1,tp,fp,tn,fn,recall_defined,precision_defined,f1_defined\n";
  out << m.accuracy << "," << m.recall << "," << m.precision << "," << m.f1 << "," << m.tp << ","
      << m.fp << "," << m.tn << "," << m.fn << "," << (m.recall_defined ? 1 : 0) << ","
      << (m.precision_defined ? 1 : 0) << "," << (m.f1_defined ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace sand
