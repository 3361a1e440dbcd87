// Command-line surface for the detection pipeline: dataset generation,
// encoder/classifier training, SHAP pruning, detection and the
// experiment runners. Every stage reads and writes only its declared
// artifacts so runs are restartable and reproducible.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>

#include "sand/bench_io.hpp"
#include "sand/experiments.hpp"
#include "sand/pipeline.hpp"
#include "sand/rng.hpp"
#include "sand/shapley.hpp"

namespace fs = std::filesystem;
using namespace sand;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
};

PipelineConfig resolve_config(const CommonOpts& opts) {
  PipelineConfig cfg = opts.config_path.empty() ? PipelineConfig{} : load_config_file(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::string hash_tag(const PipelineConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return std::string(buf) + "_s" + std::to_string(cfg.seed);
}

std::vector<Netlist> load_anchor_dir(const std::string& dir) {
  std::vector<std::string> paths;
  if (!fs::exists(dir)) throw MissingArtifact("missing benchmark directory '" + dir + "'");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".bench") paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw MissingArtifact("no .bench files in '" + dir + "'");
  std::vector<Netlist> anchors;
  for (const std::string& p : paths) anchors.push_back(load_bench_file(p));
  return anchors;
}

Dataset load_dataset(const PipelineConfig& cfg) {
  return dataset_from_sampleset(read_dataset(cfg.dataset_dir));
}

EncoderModel load_encoder(const PipelineConfig& cfg) {
  ModelContainer c = load_model(cfg.model_path);
  const ModelSection* s = c.find_section("encoder");
  if (!s) throw MissingArtifact("model '" + cfg.model_path + "' has no encoder section; run train-encoder");
  return encoder_from_section(*s);
}

SuperNet load_supernet(const PipelineConfig& cfg) {
  ModelContainer c = load_model(cfg.model_path);
  const ModelSection* s = c.find_section("supernet");
  if (!s) throw MissingArtifact("model '" + cfg.model_path + "' has no supernet section; run train-supernet");
  return supernet_from_section(*s);
}

void store_section(const PipelineConfig& cfg, ModelSection section) {
  ModelContainer c;
  if (file_exists(cfg.model_path)) c = load_model(cfg.model_path);
  c.config_snapshot = config_to_text(cfg);
  c.put_section(std::move(section));
  save_model(c, cfg.model_path);
}

int cmd_parse(const std::string& path) {
  Netlist nl = load_bench_file(path);
  std::cout << nl.name << ": " << nl.inputs.size() << " inputs, " << nl.outputs.size() << " outputs, "
            << nl.gates.size() << " gates, " << nl.frame_inputs().size() << " frame inputs\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  std::string text = read_text_file(path);
  Netlist nl;
  try {
    nl = parse_bench(text, path);
  } catch (const Error& e) {
    std::cout << "invalid: " << e.what() << "\n";
    return 1;
  }
  auto violations = validate(nl);
  if (violations.empty()) {
    std::cout << "valid\n";
    return 0;
  }
  for (const Violation& v : violations)
    std::cout << v.rule << " " << v.subject << ": " << v.detail << "\n";
  return 1;
}

int cmd_dataset(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  std::vector<Netlist> anchors = load_anchor_dir(cfg.bench_dir);
  SampleSet set = make_dataset(anchors, cfg.augment, cfg.seed);
  write_dataset(set, cfg.dataset_dir);

  make_dirs(cfg.dataset_dir + "/profiles");
  for (size_t i = 0; i < set.anchor_profiles.size(); ++i)
    write_text_file(cfg.dataset_dir + "/profiles/" + set.anchor_profiles[i].first + ".csv",
                    profile_to_csv(set.anchor_profiles[i].second, anchors[i]));

  size_t pos = 0, neg = 0;
  for (const auto& r : set.records) {
    pos += r.role == SampleRole::Positive;
    neg += r.role == SampleRole::Negative;
  }
  std::cout << "dataset: " << anchors.size() << " anchors, " << pos << " positives, " << neg
            << " negatives -> " << cfg.dataset_dir << "\n";
  return 0;
}

int cmd_train_encoder(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  Dataset ds = load_dataset(cfg);
  SplitView split = dataset_split(ds.set, cfg.test_fraction, derive_seed(cfg.seed, kSeedTagSplit));
  SslHyper ssl = cfg.ssl;
  ssl.seed = derive_seed(cfg.seed, kSeedTagEncoder);
  EncoderTrainResult res = train_encoder(ds.graphs, train_groups(ds, split), ssl);
  store_section(cfg, encoder_to_section(res.model));
  write_text_file(cfg.out_dir + "/encoder_history.csv", history_to_csv(res.history));
  std::cout << "train-encoder: " << res.history.size() << " epochs, final loss "
            << res.history.back().total << " -> " << cfg.model_path << "\n";
  return 0;
}

int cmd_embed(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  Dataset ds = load_dataset(cfg);
  EncoderModel enc = load_encoder(cfg);
  SplitView split = dataset_split(ds.set, cfg.test_fraction, derive_seed(cfg.seed, kSeedTagSplit));
  Matrix z = embed_all(enc, ds);
  write_text_file(cfg.out_dir + "/embeddings.csv", embeddings_to_csv(ds, split, z));
  std::cout << "embed: " << z.rows << " samples x " << z.cols << " dims -> " << cfg.out_dir
            << "/embeddings.csv\n";
  return 0;
}

int cmd_train_supernet(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  EmbeddingRows rows = read_embeddings_csv(cfg.out_dir + "/embeddings.csv");
  LabeledEmbeddings train = rows.select(false);
  SupernetHyper sup = cfg.supernet;
  sup.seed = derive_seed(cfg.seed, kSeedTagSupernet);
  SuperNet net = build_supernet(rows.z.cols, sup.seed);
  SupernetTrainResult res = train_supernet(net, train, sup);
  store_section(cfg, supernet_to_section(net));

  std::ostringstream csv;
  csv << "epoch,loss,train_acc,val_acc\n";
  csv.precision(17);
  for (size_t e = 0; e < res.history.size(); ++e)
    csv << (e + 1) << "," << res.history[e].loss << "," << res.history[e].train_acc << ","
        << res.history[e].val_acc << "\n";
  write_text_file(cfg.out_dir + "/supernet_history.csv", csv.str());
  std::cout << "train-supernet: " << res.history.size() << " epochs, val acc "
            << (res.history.empty() ? 0.0 : res.history.back().val_acc) << "\n";
  return 0;
}

int cmd_shap(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  SuperNet net = load_supernet(cfg);
  EmbeddingRows rows = read_embeddings_csv(cfg.out_dir + "/embeddings.csv");
  LabeledEmbeddings train = rows.select(false), tr, val;
  split_labeled(train, cfg.supernet.val_fraction, derive_seed(cfg.seed, kSeedTagSupernet), tr, val);
  if (val.size() == 0) val = train;
  ShapleyReport report = shapley_estimate(net, val, cfg.n_permutations, derive_seed(cfg.seed, kSeedTagShap));
  write_text_file(cfg.out_dir + "/shapley.csv", shapley_to_csv(report, net));
  std::cout << "shap: " << cfg.n_permutations << " permutations, v(full)=" << report.v_full
            << " v(empty)=" << report.v_empty << " -> " << cfg.out_dir << "/shapley.csv\n";
  return 0;
}

ShapleyReport report_from_csv(const std::string& text) {
  ShapleyReport report;
  report.phi.assign(kSupernetLayers, std::vector<double>(kCellsPerLayer, 0.0));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string l, c, kind, phi;
    std::getline(row, l, ',');
    std::getline(row, c, ',');
    std::getline(row, kind, ',');
    std::getline(row, phi, ',');
    report.phi.at(std::stoul(l)).at(std::stoul(c)) = std::stod(phi);
  }
  return report;
}

int cmd_prune(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  SuperNet net = load_supernet(cfg);
  ShapleyReport report = report_from_csv(read_text_file(cfg.out_dir + "/shapley.csv"));
  PrunePolicy policy;
  policy.tau = cfg.prune_tau;
  SuperNet sub = prune(net, report, policy);
  store_section(cfg, supernet_to_section(sub));
  write_text_file(cfg.out_dir + "/mask.txt", mask_to_text(sub.active_mask));
  size_t kept = 0;
  for (const auto& row : sub.active_mask)
    for (uint8_t b : row) kept += b;
  std::cout << "prune: tau=" << cfg.prune_tau << ", kept " << kept << "/" << sub.cell_count()
            << " cells -> " << cfg.out_dir << "/mask.txt\n";
  return 0;
}

int cmd_finetune(const PipelineConfig& cfg, const std::string& new_dataset_dir) {
  ensure_run_dir(cfg);
  EncoderModel enc = load_encoder(cfg);
  SuperNet net = load_supernet(cfg);
  Dataset ds = dataset_from_sampleset(read_dataset(new_dataset_dir));
  SplitView split = dataset_split(ds.set, cfg.test_fraction, derive_seed(cfg.seed, kSeedTagSplit));
  Matrix z = embed_all(enc, ds);
  LabeledEmbeddings train = select_embeddings(z, ds, split.train);
  LabeledEmbeddings test = select_embeddings(z, ds, split.test);

  double pre = supernet_accuracy(net, test);
  SupernetHyper ft = cfg.supernet;
  ft.seed = derive_seed(cfg.seed, kSeedTagFinetune);
  SupernetTrainResult res = finetune(net, train, cfg.finetune_epochs, ft);
  double post = supernet_accuracy(net, test);
  store_section(cfg, supernet_to_section(net));

  std::ostringstream csv;
  csv << "epoch,loss,train_acc,val_acc\n";
  csv.precision(17);
  for (size_t e = 0; e < res.history.size(); ++e)
    csv << (e + 1) << "," << res.history[e].loss << "," << res.history[e].train_acc << ","
        << res.history[e].val_acc << "\n";
  write_text_file(cfg.out_dir + "/finetune_history.csv", csv.str());
  std::cout << "finetune: " << cfg.finetune_epochs << " epochs, held-out acc " << pre << " -> " << post
            << "\n";
  return 0;
}

int cmd_detect(const PipelineConfig& cfg, const std::vector<std::string>& paths) {
  ensure_run_dir(cfg);
  EncoderModel enc = load_encoder(cfg);
  SuperNet net = load_supernet(cfg);

  std::ostringstream out;
  out << "bench_path,label,score\n";
  out.precision(17);
  for (const std::string& p : paths) {
    Netlist nl = load_bench_file(p);
    CircuitGraph g = build_graph(nl);
    Matrix z = embed(g, enc);
    Classification c = classify(net, z);
    out << p << "," << c.label << "," << c.score << "\n";
  }
  std::cout << out.str();
  write_text_file(cfg.out_dir + "/detections.csv", out.str());
  return 0;
}

int cmd_eval(const PipelineConfig& cfg) {
  ensure_run_dir(cfg);
  SuperNet net = load_supernet(cfg);
  EmbeddingRows rows = read_embeddings_csv(cfg.out_dir + "/embeddings.csv");
  LabeledEmbeddings test = rows.select(true);
  if (test.size() == 0) throw Error("eval: no test rows in embeddings.csv");

  std::vector<int> preds;
  for (size_t i = 0; i < test.size(); ++i) {
    Matrix zi(1, test.z.cols);
    for (size_t j = 0; j < test.z.cols; ++j) zi.data[j] = test.z.at(i, j);
    preds.push_back(classify(net, zi).label);
  }
  Metrics m = compute_metrics(preds, test.labels);
  write_text_file(cfg.out_dir + "/eval_metrics.csv", metrics_to_csv(m));
  std::cout << "eval: acc=" << m.accuracy << " rec=" << m.recall << " pre=" << m.precision
            << " f1=" << m.f1 << " (tp=" << m.tp << " fp=" << m.fp << " tn=" << m.tn << " fn=" << m.fn
            << ")\n";
  return 0;
}

int cmd_experiment(const PipelineConfig& cfg, const std::string& which) {
  ensure_run_dir(cfg);
  std::string dir = cfg.out_dir + "/experiments";
  make_dirs(dir);
  std::string tag = hash_tag(cfg);

  if (which == "ablation") {
    AblationReport r = ablation_global_loss(cfg, cfg.seed);
    std::ostringstream csv;
    csv << "arm,lambda_global,silhouette,accuracy,manifest_hash\n";
    csv.precision(17);
    csv << "with_global," << cfg.ssl.lambda_global << "," << r.with_global.silhouette << ","
        << r.with_global.accuracy << "," << r.manifest_hash_with << "\n";
    csv << "without_global,0," << r.without_global.silhouette << "," << r.without_global.accuracy
        << "," << r.manifest_hash_without << "\n";
    write_text_file(dir + "/ablation_" + tag + ".csv", csv.str());
    std::cout << "ablation: silhouette " << r.with_global.silhouette << " (lambda3>0) vs "
              << r.without_global.silhouette << " (lambda3=0), acc " << r.with_global.accuracy
              << " vs " << r.without_global.accuracy << "\n";
    return 0;
  }
  if (which == "stability") {
    StabilityReport r = stability_trials(cfg, cfg.stability_trials);
    write_text_file(dir + "/stability_" + tag + ".csv", stability_to_csv(r));
    std::ostringstream summary;
    summary.precision(17);
    summary << "trials = " << r.accuracies.size() << "\nmean = " << r.mean << "\nstddev = " << r.stddev
            << "\n";
    write_text_file(dir + "/stability_summary_" + tag + ".txt", summary.str());
    std::cout << "stability: " << r.accuracies.size() << " trials, mean " << r.mean << ", stddev "
              << r.stddev << "\n";
    return 0;
  }
  if (which == "adaptability") {
    AdaptabilityReport r = adaptability_experiment(cfg);
    std::ostringstream csv;
    csv << "seen,unseen,perf_drop,epochs\n";
    csv.precision(17);
    csv << r.seen << "," << r.unseen_post << "," << r.drop << "," << r.epochs << "\n";
    write_text_file(dir + "/adaptability_" + tag + ".csv", csv.str());
    std::cout << "adaptability: seen " << r.seen << ", unseen " << r.unseen_post << " (pre-finetune "
              << r.unseen_pre << "), drop " << r.drop << ", epochs " << r.epochs << "\n";
    return 0;
  }
  if (which == "snapshots") {
    auto snaps = embedding_snapshots(cfg, cfg.seed, cfg.snapshot_epochs);
    for (const auto& s : snaps) {
      write_text_file(dir + "/snapshot_e" + std::to_string(s.epoch) + "_" + tag + ".csv", s.csv);
      std::cout << "snapshot epoch " << s.epoch << ": silhouette " << s.silhouette_full
                << ", explained " << s.pca.explained[0] << "/" << s.pca.explained[1] << "\n";
    }
    return 0;
  }
  throw Error("unknown experiment '" + which + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gate-level hardware-trojan detection pipeline"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "config file (key = value lines)");
  app.add_option("--set", common.overrides, "override a config key, e.g. --set seed=7")
      ->take_all()
      ->expected(-1);

  std::string bench_path;
  auto* parse_cmd = app.add_subcommand("parse", "parse a .bench file and print a summary");
  parse_cmd->add_option("file", bench_path, "path to .bench")->required();

  auto* validate_cmd = app.add_subcommand("validate", "structural validation report");
  validate_cmd->add_option("file", bench_path, "path to .bench")->required();

  app.add_subcommand("dataset", "generate the contrastive dataset from bench_dir");
  app.add_subcommand("train-encoder", "train the SSL encoder on the dataset");
  app.add_subcommand("embed", "embed every dataset sample with the trained encoder");
  app.add_subcommand("train-supernet", "train the classifier SuperNet on train embeddings");
  app.add_subcommand("shap", "estimate per-cell Shapley values");
  app.add_subcommand("prune", "prune the SuperNet with the shapley report");

  std::string finetune_dir;
  auto* finetune_cmd = app.add_subcommand("finetune", "fine-tune the pruned net on a new dataset");
  finetune_cmd->add_option("--finetune-dataset", finetune_dir, "dataset dir of the new family")->required();

  std::vector<std::string> detect_paths;
  auto* detect_cmd = app.add_subcommand("detect", "classify .bench files (bench_path,label,score)");
  detect_cmd->add_option("files", detect_paths, "paths to .bench files")->required();

  app.add_subcommand("eval", "metrics on the held-out embeddings");

  std::string experiment_kind;
  auto* exp_cmd = app.add_subcommand("experiment", "run an experiment suite");
  exp_cmd->add_option("kind", experiment_kind, "ablation | stability | adaptability | snapshots")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) return cmd_parse(bench_path);
    if (validate_cmd->parsed()) return cmd_validate(bench_path);

    PipelineConfig cfg = resolve_config(common);
    if (app.got_subcommand("dataset")) return cmd_dataset(cfg);
    if (app.got_subcommand("train-encoder")) return cmd_train_encoder(cfg);
    if (app.got_subcommand("embed")) return cmd_embed(cfg);
    if (app.got_subcommand("train-supernet")) return cmd_train_supernet(cfg);
    if (app.got_subcommand("shap")) return cmd_shap(cfg);
    if (app.got_subcommand("prune")) return cmd_prune(cfg);
    if (finetune_cmd->parsed()) return cmd_finetune(cfg, finetune_dir);
    if (detect_cmd->parsed()) return cmd_detect(cfg, detect_paths);
    if (app.got_subcommand("eval")) return cmd_eval(cfg);
    if (exp_cmd->parsed()) return cmd_experiment(cfg, experiment_kind);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
