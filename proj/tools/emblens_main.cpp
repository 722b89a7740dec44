// emblens: linear probes, sparse autoencoders and activation mining over
// dense embedding spaces.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emblens/core.hpp"
#include "emblens/errors.hpp"
#include "emblens/io.hpp"
#include "emblens/mining.hpp"
#include "emblens/probe.hpp"
#include "emblens/rng.hpp"
#include "emblens/sae.hpp"
#include "emblens/synth.hpp"

namespace {

using emblens::DataError;
using emblens::NumericError;
using emblens::UsageError;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

// Collects everything a run manifest needs while a subcommand executes.
class RunManifest {
 public:
  RunManifest(std::string subcommand, uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["artifact_version"] = kVersion;
    doc_["seed"] = seed;
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::object();
    doc_["outputs"] = ordered_json::array();
  }

  template <typename T>
  void config(const std::string& key, const T& value) {
    doc_["config"][key] = value;
  }

  void input(const std::string& path) {
    doc_["inputs"][path] = emblens::io::file_digest(path);
  }

  void output(const std::string& path) { doc_["outputs"].push_back(path); }

  void write(const std::string& path) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    doc_["wall_clock_ms"] = elapsed.count();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out << doc_.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
  }

 private:
  ordered_json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string default_sibling(const std::string& out, const std::string& suffix) {
  return out + suffix;
}

emblens::EmbeddingMatrix load_embeddings(const std::string& path) {
  return emblens::io::read_embeddings(path, emblens::io::format_from_path(path));
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad numeric list entry: '" + tok + "'");
    }
  }
  return out;
}

std::vector<size_t> parse_dim_list(const std::string& csv, size_t n_dims) {
  std::vector<size_t> out;
  if (csv == "all") {
    out.resize(n_dims);
    for (size_t i = 0; i < n_dims; ++i) out[i] = i;
    return out;
  }
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      size_t pos = 0;
      const long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("bad dimension list entry: '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError("empty dimension list");
  return out;
}

// Flat key=value config file for sae training; CLI flags override.
std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + " is not key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("config key " + key + " wants a boolean, got '" + v + "'");
}

struct SaeCommonOpts {
  std::string embeddings;
  std::string config_file;
  emblens::sae::SaeTrainConfig cfg;
};

void apply_config_file(CLI::App* cmd, SaeCommonOpts& opts) {
  if (opts.config_file.empty()) return;
  const auto kv = read_kv_config(opts.config_file);
  auto& cfg = opts.cfg;
  const auto flag_given = [&](const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw("--" + name);
    return opt != nullptr && opt->count() > 0;
  };
  for (const auto& [key, value] : kv) {
    try {
      if (key == "expansion") {
        if (!flag_given("expansion")) cfg.expansion = std::stoull(value);
      } else if (key == "lambda") {
        if (!flag_given("lambda")) cfg.lambda = std::stod(value);
      } else if (key == "epochs") {
        if (!flag_given("epochs")) cfg.epochs = std::stoull(value);
      } else if (key == "batch_size") {
        if (!flag_given("batch-size")) cfg.batch_size = std::stoull(value);
      } else if (key == "lr") {
        if (!flag_given("lr")) cfg.lr = std::stod(value);
      } else if (key == "seed") {
        if (!flag_given("seed")) cfg.seed = std::stoull(value);
      } else if (key == "normalize_decoder") {
        if (!flag_given("normalize-decoder"))
          cfg.normalize_decoder = parse_bool(value, key);
      } else if (key == "center_inputs") {
        if (!flag_given("center-inputs")) cfg.center_inputs = parse_bool(value, key);
      } else {
        throw UsageError("unknown config key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw UsageError("bad value for config key " + key + ": '" + value + "'");
    } catch (const std::out_of_range&) {
      throw UsageError("bad value for config key " + key + ": '" + value + "'");
    }
  }
}

// ---------------------------------------------------------------------------

int run_probe_fit(const std::string& embeddings_path, const std::string& targets_path,
                  const std::string& target, const std::string& reg, double alpha,
                  double test_frac, uint64_t seed, const std::string& out,
                  std::string report_path, std::string manifest_path) {
  if (report_path.empty()) report_path = default_sibling(out, ".report.txt");
  if (manifest_path.empty()) manifest_path = default_sibling(out, ".manifest.json");
  if (reg != "l1" && reg != "l2") throw UsageError("--reg must be l1 or l2");
  if (alpha < 0.0) throw UsageError("--alpha must be nonnegative");

  RunManifest manifest("probe-fit", seed);
  manifest.input(embeddings_path);
  manifest.input(targets_path);
  manifest.config("target", target);
  manifest.config("reg", reg);
  manifest.config("alpha", alpha);
  manifest.config("test_frac", test_frac);

  const emblens::EmbeddingMatrix embeddings = load_embeddings(embeddings_path);
  const emblens::TargetTable targets = emblens::io::read_targets(targets_path);

  emblens::probe::RegSpec reg_spec;
  reg_spec.kind = reg == "l1" ? emblens::probe::RegKind::l1 : emblens::probe::RegKind::l2;
  reg_spec.alpha = alpha;

  emblens::probe::LinearProbe fitted;
  const emblens::probe::ProbeReport report = emblens::probe::probe_experiment(
      embeddings, targets, target, reg_spec, {test_frac, seed}, {}, &fitted);

  emblens::io::ModelArtifact art = emblens::probe::probe_to_artifact(fitted);
  art.meta["seed"] = seed;
  art.meta["n_train"] = report.n_train;
  emblens::io::save_model(art, out);
  emblens::probe::write_probe_report(report, report_path);
  manifest.output(out);
  manifest.output(report_path);
  manifest.write(manifest_path);

  std::cout << "probe-fit: target=" << target << " r_test=" << report.pearson_r_test
            << " nonzero=" << report.n_nonzero << "/" << embeddings.n_dims
            << " train=" << report.n_train << " test=" << report.n_test << "\n"
            << "model: " << out << "\nreport: " << report_path << "\n";
  return 0;
}

int run_probe_eval(const std::string& model_path, const std::string& embeddings_path,
                   const std::string& targets_path, std::string target,
                   std::string report_path, std::string manifest_path) {
  if (report_path.empty()) report_path = default_sibling(model_path, ".eval.txt");
  if (manifest_path.empty()) manifest_path = default_sibling(report_path, ".manifest.json");

  RunManifest manifest("probe-eval", 0);
  manifest.input(model_path);
  manifest.input(embeddings_path);
  manifest.input(targets_path);

  const emblens::probe::LinearProbe probe = emblens::probe::probe_from_artifact(
      emblens::io::load_model(model_path, emblens::io::ModelArtifact::Kind::probe));
  if (target.empty()) target = probe.target_name;
  if (target.empty()) throw UsageError("probe has no stored target; pass --target");
  manifest.config("target", target);

  const emblens::EmbeddingMatrix embeddings = load_embeddings(embeddings_path);
  const emblens::TargetTable targets = emblens::io::read_targets(targets_path);
  const emblens::probe::ProbeReport report =
      emblens::probe::cross_domain_eval(probe, embeddings, targets, target);

  emblens::probe::write_probe_report(report, report_path);
  manifest.output(report_path);
  manifest.write(manifest_path);

  std::cout << "probe-eval: target=" << target << " r=" << report.pearson_r_test
            << " rows=" << report.n_test << "\nreport: " << report_path << "\n";
  return 0;
}

int run_sae_train(CLI::App* cmd, SaeCommonOpts& opts, const std::string& out,
                  std::string stats_path, std::string manifest_path) {
  apply_config_file(cmd, opts);
  if (stats_path.empty()) stats_path = default_sibling(out, ".stats.csv");
  if (manifest_path.empty()) manifest_path = default_sibling(out, ".manifest.json");

  RunManifest manifest("sae-train", opts.cfg.seed);
  manifest.input(opts.embeddings);
  manifest.config("expansion", opts.cfg.expansion);
  manifest.config("lambda", opts.cfg.lambda);
  manifest.config("epochs", opts.cfg.epochs);
  manifest.config("batch_size", opts.cfg.batch_size);
  manifest.config("lr", opts.cfg.lr);
  manifest.config("normalize_decoder", opts.cfg.normalize_decoder);
  manifest.config("center_inputs", opts.cfg.center_inputs);

  const emblens::EmbeddingMatrix data = load_embeddings(opts.embeddings);
  const auto [model, stats] = emblens::sae::sae_train(data, opts.cfg);

  emblens::io::ModelArtifact art = emblens::sae::sae_to_artifact(model);
  art.meta["seed"] = opts.cfg.seed;
  art.meta["epochs"] = opts.cfg.epochs;
  emblens::io::save_model(art, out);
  emblens::sae::write_train_stats_csv(stats, stats_path);
  manifest.output(out);
  manifest.output(stats_path);
  manifest.write(manifest_path);

  const auto& fin = stats.final_epoch();
  std::cout << "sae-train: H=" << model.hidden_dim << " lambda=" << opts.cfg.lambda
            << " ev=" << fin.explained_variance << " avg_l0=" << fin.avg_l0
            << " dead=" << fin.dead_fraction << "\nmodel: " << out
            << "\nstats: " << stats_path << "\n";
  return 0;
}

int run_sae_sweep(CLI::App* cmd, SaeCommonOpts& opts, const std::string& lambdas_csv,
                  const std::string& out, std::string manifest_path) {
  apply_config_file(cmd, opts);
  if (manifest_path.empty()) manifest_path = default_sibling(out, ".manifest.json");
  const std::vector<double> lambdas = parse_double_list(lambdas_csv);

  RunManifest manifest("sae-sweep", opts.cfg.seed);
  manifest.input(opts.embeddings);
  manifest.config("lambdas", lambdas);
  manifest.config("expansion", opts.cfg.expansion);
  manifest.config("epochs", opts.cfg.epochs);
  manifest.config("batch_size", opts.cfg.batch_size);
  manifest.config("lr", opts.cfg.lr);

  const emblens::EmbeddingMatrix data = load_embeddings(opts.embeddings);
  const auto sweep = emblens::sae::lambda_sweep(data, opts.cfg, lambdas);
  emblens::sae::write_sweep_csv(sweep, out);
  manifest.output(out);
  manifest.write(manifest_path);

  std::cout << "sae-sweep: " << lambdas.size() << " runs -> " << out << "\n";
  for (const auto& run : sweep) {
    const auto& fin = run.final_epoch();
    std::cout << "  lambda=" << run.config.lambda << " ev=" << fin.explained_variance
              << " avg_l0=" << fin.avg_l0 << " dead=" << fin.dead_fraction << "\n";
  }
  return 0;
}

int run_mine(const std::string& embeddings_path, const std::string& sae_path,
             const std::string& dims_csv, const std::string& mode, double low_pct,
             double high_pct, size_t sample_k, size_t top_k, uint64_t seed,
             const std::string& out, std::string manifest_path) {
  if (manifest_path.empty()) manifest_path = default_sibling(out, ".manifest.json");
  if (mode != "extremes" && mode != "topk")
    throw UsageError("--mode must be extremes or topk");

  RunManifest manifest("mine", seed);
  manifest.input(embeddings_path);
  manifest.config("mode", mode);
  manifest.config("dims", dims_csv);

  emblens::EmbeddingMatrix activations = load_embeddings(embeddings_path);
  std::string source = "embedding";
  if (!sae_path.empty()) {
    manifest.input(sae_path);
    const emblens::sae::SaeModel model = emblens::sae::sae_from_artifact(
        emblens::io::load_model(sae_path, emblens::io::ModelArtifact::Kind::sae));
    activations = emblens::sae::feature_activations(model, activations);
    source = "sae_feature";
  }
  manifest.config("source", source);
  if (mode == "extremes") {
    manifest.config("low_pct", low_pct);
    manifest.config("high_pct", high_pct);
    manifest.config("sample_k", sample_k);
  } else {
    manifest.config("k", top_k);
  }

  const std::vector<size_t> dims = parse_dim_list(dims_csv, activations.n_dims);
  std::vector<emblens::mining::ActivationReport> reports;
  reports.reserve(dims.size());
  for (size_t dim : dims) {
    if (mode == "extremes") {
      reports.push_back(emblens::mining::percentile_extremes(
          activations, dim, low_pct, high_pct, sample_k, seed, source));
    } else {
      reports.push_back(
          emblens::mining::top_k_activations(activations, dim, top_k, source));
    }
  }
  emblens::mining::emit_report(reports, out);
  manifest.output(out);
  manifest.write(manifest_path);

  std::cout << "mine: " << reports.size() << " dimension report(s) (" << source << ") -> "
            << out << "\n";
  return 0;
}

int run_synth(const std::string& kind, size_t n, size_t d, size_t sparsity,
              size_t k_features, double activation_prob, double snr, double noise_sigma,
              bool noise_given, uint64_t seed, uint64_t axes_seed,
              const std::string& out_prefix, std::string manifest_path) {
  if (manifest_path.empty()) manifest_path = out_prefix + ".manifest.json";

  RunManifest manifest("synth", seed);
  manifest.config("kind", kind);
  manifest.config("n", n);
  manifest.config("d", d);

  ordered_json truth;
  truth["kind"] = kind;
  truth["seed"] = seed;
  truth["n"] = n;
  truth["d"] = d;

  const std::string emb_path = out_prefix + ".embd";
  const std::string truth_path = out_prefix + "_truth.json";

  if (kind == "planted") {
    emblens::synth::PlantedLinearSpec spec;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    // support and weights come from axes_seed so separate domains (different
    // data seeds) can share the same planted axes
    emblens::Rng rng(axes_seed ^ 0xfeedface12345678ull);
    std::vector<size_t> all(d);
    for (size_t j = 0; j < d; ++j) all[j] = j;
    rng.shuffle(all);
    if (sparsity > d) throw UsageError("--sparsity exceeds --d");
    spec.support.assign(all.begin(), all.begin() + sparsity);
    std::sort(spec.support.begin(), spec.support.end());
    spec.true_weights.resize(sparsity);
    for (double& w : spec.true_weights)
      w = rng.uniform(1.0, 2.0) * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    spec.noise_sigma = noise_given
                           ? noise_sigma
                           : emblens::synth::noise_sigma_for_snr(spec.true_weights, snr);
    manifest.config("sparsity", sparsity);
    manifest.config("noise_sigma", spec.noise_sigma);

    const emblens::synth::PlantedLinearData data = emblens::synth::gen_planted_linear(spec);
    const std::string targets_path = out_prefix + "_targets.csv";
    emblens::io::write_embeddings(data.embeddings, emb_path,
                                  emblens::io::EmbeddingFormat::bin);
    emblens::io::write_targets(data.targets, targets_path);

    truth["axes_seed"] = axes_seed;
    truth["support"] = spec.support;
    truth["true_weights"] = spec.true_weights;
    truth["noise_sigma"] = spec.noise_sigma;
    truth["target_name"] = spec.target_name;
    manifest.output(targets_path);
  } else if (kind == "superposition") {
    emblens::synth::SuperpositionSpec spec;
    spec.n = n;
    spec.d = d;
    spec.n_features = k_features;
    spec.activation_prob = activation_prob;
    spec.noise_sigma = noise_given ? noise_sigma : 0.0;
    spec.seed = seed;
    manifest.config("k_features", k_features);
    manifest.config("activation_prob", activation_prob);
    manifest.config("noise_sigma", spec.noise_sigma);

    const emblens::synth::SuperpositionData data = emblens::synth::gen_superposition(spec);
    emblens::io::write_embeddings(data.embeddings, emb_path,
                                  emblens::io::EmbeddingFormat::bin);

    // the dictionary goes through the same binary format, ids f000000...
    std::vector<std::string> ids(k_features);
    std::vector<float> dir_values(k_features * d);
    for (size_t f = 0; f < k_features; ++f) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "f%06zu", f);
      ids[f] = buf;
      for (size_t j = 0; j < d; ++j)
        dir_values[f * d + j] = static_cast<float>(data.directions(f, j));
    }
    const std::string dirs_path = out_prefix + "_dirs.embd";
    emblens::io::write_embeddings(emblens::validate_embedding_matrix(ids, dir_values, d),
                                  dirs_path, emblens::io::EmbeddingFormat::bin);
    truth["n_features"] = k_features;
    truth["activation_prob"] = activation_prob;
    truth["scale_min"] = spec.scale_min;
    truth["scale_max"] = spec.scale_max;
    truth["noise_sigma"] = spec.noise_sigma;
    truth["directions_path"] = dirs_path;
    manifest.output(dirs_path);
  } else {
    throw UsageError("--kind must be planted or superposition");
  }

  std::ofstream tf(truth_path, std::ios::trunc);
  if (!tf) throw DataError("cannot open file for writing: " + truth_path);
  tf << truth.dump(2) << '\n';
  manifest.output(emb_path);
  manifest.output(truth_path);
  manifest.write(manifest_path);

  std::cout << "synth: " << kind << " n=" << n << " d=" << d << " -> " << emb_path
            << "\ntruth: " << truth_path << "\n";
  return 0;
}

int run_convert(const std::string& in_path, const std::string& out_path,
                std::string manifest_path) {
  if (manifest_path.empty()) manifest_path = default_sibling(out_path, ".manifest.json");
  RunManifest manifest("convert", 0);
  manifest.input(in_path);

  const emblens::EmbeddingMatrix m = load_embeddings(in_path);
  emblens::io::write_embeddings(m, out_path, emblens::io::format_from_path(out_path));
  manifest.output(out_path);
  manifest.write(manifest_path);

  std::cout << "convert: " << in_path << " -> " << out_path << " (" << m.n_rows << "x"
            << m.n_dims << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emblens: probes, sparse autoencoders and activation mining for "
               "embedding spaces"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads,
                 "worker threads (0 = all cores; any count is bit-deterministic)")
      ->capture_default_str();

  // probe-fit
  auto* fit = app.add_subcommand("probe-fit", "fit a regularized linear probe");
  std::string fit_emb, fit_targets, fit_target, fit_reg = "l1", fit_out, fit_report,
              fit_manifest;
  double fit_alpha = 0.1, fit_test_frac = 0.2;
  uint64_t fit_seed = 0;
  fit->add_option("--embeddings", fit_emb, "embedding file (.embd or .csv)")->required();
  fit->add_option("--targets", fit_targets, "targets csv")->required();
  fit->add_option("--target", fit_target, "target column name")->required();
  fit->add_option("--reg", fit_reg, "regularization: l1 or l2")->capture_default_str();
  fit->add_option("--alpha", fit_alpha, "regularization strength")->capture_default_str();
  fit->add_option("--test-frac", fit_test_frac, "held-out test fraction")
      ->capture_default_str();
  fit->add_option("--seed", fit_seed, "split seed")->capture_default_str();
  fit->add_option("--out", fit_out, "output model path")->required();
  fit->add_option("--report", fit_report, "report path (default <out>.report.txt)");
  fit->add_option("--manifest", fit_manifest, "manifest path (default <out>.manifest.json)");

  // probe-eval
  auto* eval = app.add_subcommand("probe-eval", "evaluate a frozen probe on a domain");
  std::string eval_model, eval_emb, eval_targets, eval_target, eval_report, eval_manifest;
  eval->add_option("--model", eval_model, "probe model path")->required();
  eval->add_option("--embeddings", eval_emb, "embedding file")->required();
  eval->add_option("--targets", eval_targets, "targets csv")->required();
  eval->add_option("--target", eval_target, "target column (default: from the model)");
  eval->add_option("--report", eval_report, "report path (default <model>.eval.txt)");
  eval->add_option("--manifest", eval_manifest, "manifest path");

  // sae-train
  auto* train = app.add_subcommand("sae-train", "train a sparse autoencoder");
  SaeCommonOpts train_opts;
  std::string train_out, train_stats, train_manifest;
  train->add_option("--embeddings", train_opts.embeddings, "embedding file")->required();
  train->add_option("--expansion", train_opts.cfg.expansion, "hidden width / input dim")
      ->capture_default_str();
  train->add_option("--lambda", train_opts.cfg.lambda, "sparsity penalty")
      ->capture_default_str();
  train->add_option("--epochs", train_opts.cfg.epochs, "training epochs")
      ->capture_default_str();
  train->add_option("--batch-size", train_opts.cfg.batch_size, "minibatch size")
      ->capture_default_str();
  train->add_option("--lr", train_opts.cfg.lr, "adam learning rate")->capture_default_str();
  train->add_option("--seed", train_opts.cfg.seed, "init/shuffle seed")
      ->capture_default_str();
  train->add_flag("--normalize-decoder,!--no-normalize-decoder",
                  train_opts.cfg.normalize_decoder,
                  "renormalize decoder rows after each step")
      ->capture_default_str();
  train->add_flag("--center-inputs", train_opts.cfg.center_inputs,
                  "subtract the global data mean before training");
  train->add_option("--config", train_opts.config_file, "key=value config file");
  train->add_option("--out", train_out, "output model path")->required();
  train->add_option("--stats", train_stats, "per-epoch stats csv (default <out>.stats.csv)");
  train->add_option("--manifest", train_manifest, "manifest path");

  // sae-sweep
  auto* sweep = app.add_subcommand("sae-sweep", "train across a lambda grid");
  SaeCommonOpts sweep_opts;
  std::string sweep_lambdas = "0.1,0.5,2.0", sweep_out, sweep_manifest;
  sweep->add_option("--embeddings", sweep_opts.embeddings, "embedding file")->required();
  sweep->add_option("--lambdas", sweep_lambdas, "comma-separated lambda grid (>= 2)")
      ->capture_default_str();
  sweep->add_option("--expansion", sweep_opts.cfg.expansion, "hidden width / input dim")
      ->capture_default_str();
  sweep->add_option("--epochs", sweep_opts.cfg.epochs, "training epochs")
      ->capture_default_str();
  sweep->add_option("--batch-size", sweep_opts.cfg.batch_size, "minibatch size")
      ->capture_default_str();
  sweep->add_option("--lr", sweep_opts.cfg.lr, "adam learning rate")->capture_default_str();
  sweep->add_option("--seed", sweep_opts.cfg.seed, "shared seed across the grid")
      ->capture_default_str();
  sweep->add_option("--config", sweep_opts.config_file, "key=value config file");
  sweep->add_option("--out", sweep_out, "sweep csv output")->required();
  sweep->add_option("--manifest", sweep_manifest, "manifest path");

  // mine
  auto* mine = app.add_subcommand("mine", "rank samples by activation per dimension");
  std::string mine_emb, mine_sae, mine_dims = "all", mine_mode = "extremes", mine_out,
              mine_manifest;
  double mine_low = 5.0, mine_high = 5.0;
  size_t mine_sample_k = 3, mine_top_k = 16;
  uint64_t mine_seed = 0;
  mine->add_option("--embeddings", mine_emb, "embedding file")->required();
  mine->add_option("--sae", mine_sae, "sae model: mine its feature activations instead");
  mine->add_option("--dims", mine_dims, "comma-separated dims or 'all'")
      ->capture_default_str();
  mine->add_option("--mode", mine_mode, "extremes or topk")->capture_default_str();
  mine->add_option("--low-pct", mine_low, "low tail percentile")->capture_default_str();
  mine->add_option("--high-pct", mine_high, "high tail percentile")->capture_default_str();
  mine->add_option("--sample-k", mine_sample_k, "samples drawn per tail")
      ->capture_default_str();
  mine->add_option("--k", mine_top_k, "top-k size for topk mode")->capture_default_str();
  mine->add_option("--seed", mine_seed, "tail sampling seed")->capture_default_str();
  mine->add_option("--out", mine_out, "JSON-lines report path")->required();
  mine->add_option("--manifest", mine_manifest, "manifest path");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic oracle datasets");
  std::string synth_kind = "planted", synth_prefix, synth_manifest;
  size_t synth_n = 10000, synth_d = 64, synth_sparsity = 8, synth_k = 256;
  double synth_p = 0.02, synth_snr = 10.0, synth_noise = 0.0;
  uint64_t synth_seed = 0;
  synth_cmd->add_option("--kind", synth_kind, "planted or superposition")
      ->capture_default_str();
  synth_cmd->add_option("--n", synth_n, "sample count")->capture_default_str();
  synth_cmd->add_option("--d", synth_d, "embedding dimension")->capture_default_str();
  synth_cmd->add_option("--sparsity", synth_sparsity, "planted support size")
      ->capture_default_str();
  synth_cmd->add_option("--k-features", synth_k, "superposition dictionary size")
      ->capture_default_str();
  synth_cmd->add_option("--activation-prob", synth_p, "superposition activation prob")
      ->capture_default_str();
  synth_cmd->add_option("--snr", synth_snr, "planted signal-to-noise ratio")
      ->capture_default_str();
  auto* noise_opt =
      synth_cmd->add_option("--noise-sigma", synth_noise, "explicit noise sigma");
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  uint64_t synth_axes_seed = 0;
  auto* axes_opt = synth_cmd->add_option(
      "--axes-seed", synth_axes_seed,
      "seed for planted support/weights (default: --seed; lets domains share axes)");
  synth_cmd->add_option("--out-prefix", synth_prefix, "output path prefix")->required();
  synth_cmd->add_option("--manifest", synth_manifest, "manifest path");

  // convert
  auto* convert = app.add_subcommand("convert", "convert embeddings between csv and bin");
  std::string conv_in, conv_out, conv_manifest;
  convert->add_option("--in", conv_in, "input embedding file (.embd or .csv)")->required();
  convert->add_option("--out", conv_out, "output embedding file (.embd or .csv)")
      ->required();
  convert->add_option("--manifest", conv_manifest, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=usage msg=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    if (threads < 0) throw UsageError("--threads must be >= 0");
    omp_set_num_threads(threads == 0 ? omp_get_num_procs() : threads);

    if (fit->parsed()) {
      return run_probe_fit(fit_emb, fit_targets, fit_target, fit_reg, fit_alpha,
                           fit_test_frac, fit_seed, fit_out, fit_report, fit_manifest);
    }
    if (eval->parsed()) {
      return run_probe_eval(eval_model, eval_emb, eval_targets, eval_target, eval_report,
                            eval_manifest);
    }
    if (train->parsed()) {
      return run_sae_train(train, train_opts, train_out, train_stats, train_manifest);
    }
    if (sweep->parsed()) {
      return run_sae_sweep(sweep, sweep_opts, sweep_lambdas, sweep_out, sweep_manifest);
    }
    if (mine->parsed()) {
      return run_mine(mine_emb, mine_sae, mine_dims, mine_mode, mine_low, mine_high,
                      mine_sample_k, mine_top_k, mine_seed, mine_out, mine_manifest);
    }
    if (synth_cmd->parsed()) {
      return run_synth(synth_kind, synth_n, synth_d, synth_sparsity, synth_k, synth_p,
                       synth_snr, synth_noise, noise_opt->count() > 0, synth_seed,
                       axes_opt->count() > 0 ? synth_axes_seed : synth_seed,
                       synth_prefix, synth_manifest);
    }
    if (convert->parsed()) {
      return run_convert(conv_in, conv_out, conv_manifest);
    }
    std::cerr << "error kind=usage msg=\"no subcommand\"\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error kind=usage msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error kind=data msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error kind=numeric msg=\"" << e.what() << "\"\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal msg=\"" << e.what() << "\"\n";
    return 4;
  }
}
