#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gami/error.hpp"
#include "gami/filter.hpp"
#include "gami/gami.hpp"
#include "gami/io.hpp"
#include "gami/metrics.hpp"
#include "gami/parallel.hpp"
#include "gami/purify.hpp"
#include "gami/report.hpp"
#include "gami/simgen.hpp"

namespace gami::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Output sink: a file, or `fallback` when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::size_t resolve_threads(std::size_t requested) { return requested == 0 ? default_threads() : requested; }

// Options describing where data comes from and how it is split.
struct DataOptions {
  std::string path;
  std::string response;
  std::string delimiter = ",";
  std::string split = "0.5,0.25,0.25";
  std::uint64_t seed = 0;
  std::size_t max_bins = kDefaultMaxBins;
  bool binary = false;

  void add(CLI::App& app, bool required) {
    auto* d = app.add_option("--data", path, "CSV file with a header row");
    if (required) d->required();
    app.add_option("--response", response, "Response column name");
    app.add_option("--delimiter", delimiter, "Field delimiter");
    app.add_option("--split", split, "Train,validation,test fractions");
    app.add_option("--seed", seed, "Split and subsampling seed");
    app.add_option("--max-bins", max_bins, "Maximum bins per feature");
    app.add_flag("--binary", binary, "Require a 0/1 response");
  }

  // Fills unset values from a model's provenance.
  void inherit(const GamiModel& model, const CLI::App& app) {
    auto take = [&](const char* flag, const char* key, auto& target) {
      if (app.count(flag) > 0) return;
      const auto it = model.metadata.find(key);
      if (it == model.metadata.end()) return;
      std::istringstream in(it->second);
      using T = std::decay_t<decltype(target)>;
      if constexpr (std::is_same_v<T, std::string>) {
        target = it->second;
      } else {
        in >> target;
      }
    };
    take("--response", "response", response);
    take("--delimiter", "delimiter", delimiter);
    take("--split", "split", split);
    take("--seed", "split_seed", seed);
    take("--max-bins", "max_bins", max_bins);
  }

  CsvOptions csv() const {
    if (delimiter.size() != 1) throw UsageError("delimiter must be a single character");
    return {delimiter[0], true, binary};
  }

  Dataset load_split() const {
    if (response.empty()) throw UsageError("--response is required");
    const Dataset raw = load_csv(path, response, csv());
    return gami::split(raw, parse_fractions(split), seed);
  }
};

struct FitOptions {
  std::string loss = "squared";
  std::size_t rounds = 5;
  std::size_t q = 10;
  double learning_rate = 0.2;
  std::size_t max_iterations = 1000;
  std::size_t patience = 10;
  int max_depth = 2;
  std::size_t min_leaf = 0;
  double ridge = 1.0;
  std::size_t knots = kDefaultKnots;
  std::size_t subsample_cap = kDefaultSubsampleCap;
  std::size_t threads = 0;
  bool no_purify = false;

  void add(CLI::App& app) {
    app.add_option("--loss", loss, "squared or logloss")->check(CLI::IsMember({"squared", "logloss"}));
    app.add_option("--rounds", rounds, "Maximum rounds");
    app.add_option("--q", q, "Interaction pairs screened per round");
    app.add_option("--learning-rate", learning_rate, "Learning rate of both stages");
    app.add_option("--max-iterations", max_iterations, "Maximum trees per stage");
    app.add_option("--patience", patience, "Early-stopping patience");
    app.add_option("--max-depth", max_depth, "Tree depth");
    app.add_option("--min-leaf", min_leaf, "Minimum rows per leaf (0 = max(20, n/200))");
    app.add_option("--ridge", ridge, "Ridge penalty on standardized leaf designs");
    app.add_option("--knots", knots, "Spline knots, boundary included");
    app.add_option("--subsample-cap", subsample_cap, "Row cap for interaction screening");
    app.add_option("--threads", threads, "Worker threads (0 = GAMI_THREADS or all cores)");
    app.add_flag("--no-purify", no_purify, "Skip purification");
  }

  GamiConfig config(std::uint64_t seed) const {
    GamiConfig c;
    c.rounds = rounds;
    c.q = q;
    c.loss = loss == "logloss" ? LossSpec::logloss() : LossSpec::squared();
    c.main_stage = {learning_rate, max_iterations, patience};
    c.interaction_stage = c.main_stage;
    c.main_tree = {max_depth, min_leaf, ridge};
    c.interaction_tree = c.main_tree;
    c.knots = knots;
    c.subsample_cap = subsample_cap;
    c.seed = seed;
    c.threads = resolve_threads(threads);
    c.purify = !no_purify;
    return c;
  }
};

void record_provenance(GamiModel& model, const DataOptions& d) {
  model.metadata["data"] = d.path;
  model.metadata["response"] = d.response;
  model.metadata["delimiter"] = d.delimiter;
  model.metadata["split"] = d.split;
  model.metadata["split_seed"] = std::to_string(d.seed);
  model.metadata["max_bins"] = std::to_string(d.max_bins);
}

void print_rounds(const GamiModel& model, std::ostream& out) {
  for (std::size_t r = 0; r < model.rounds.size(); ++r) {
    const auto& s = model.rounds[r];
    out << "round " << r + 1 << ": main trees " << s.main_stop << ", interaction trees " << s.interaction_stop
        << ", pairs";
    for (const auto& [a, b] : s.selected_pairs) {
      out << ' ' << term_label(TermId::pair(a, b), model.feature_names);
    }
    out << '\n';
  }
}

// Expands "--config file.json" into ordinary flags placed before the user's
// own arguments, so command-line values win.
std::vector<std::string> expand_config(const std::vector<std::string>& argv) {
  std::vector<std::string> args(argv.begin(), argv.end());
  std::optional<std::string> config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path) return rest;
  json doc;
  try {
    doc = json::parse(read_file(*config_path));
  } catch (const json::exception& e) {
    throw UsageError("config file " + *config_path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      injected.push_back(flag);
      injected.push_back(joined);
    } else {
      injected.push_back(flag);
      injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  // Subcommand name is the first argument after the program name.
  if (rest.size() < 2) throw UsageError("--config requires a subcommand");
  rest.insert(rest.begin() + 2, injected.begin(), injected.end());
  return rest;
}

// ---------------------------------------------------------------------------

int cmd_fit(const DataOptions& d, const FitOptions& f, const std::string& out_path, std::ostream& out) {
  const Dataset data = d.load_split();
  const BinMap bins = BinMap::build(data, d.max_bins);
  GamiModel model = fit(data, bins, f.config(d.seed));
  record_provenance(model, d);
  save_model(model, out_path);

  print_rounds(model, out);
  const auto validation = data.rows_with(SplitTag::validation);
  const auto test = data.rows_with(SplitTag::test);
  auto report = [&](const char* name, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return;
    std::vector<double> y, g;
    for (auto r : rows) y.push_back(data.response()[r]);
    g = model.predict(data, rows);
    if (model.loss.kind == LossKind::squared) {
      out << name << " mse " << fmt_short(mse(y, g)) << '\n';
    } else {
      out << name << " auc " << fmt_short(auc(y, g)) << " logloss " << fmt_short(mean_logloss(y, g)) << '\n';
    }
  };
  report("validation", validation);
  report("test", test);
  out << "trees " << model.trees.size() << ", model written to " << out_path << '\n';
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, std::string response,
                const std::string& delimiter, const std::string& out_path, std::ostream& out) {
  const GamiModel model = load_model(model_path);
  if (delimiter.size() != 1) throw UsageError("delimiter must be a single character");
  const std::string text = read_file(data_path);

  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      lines.push_back(line);
    }
  }
  if (lines.empty()) throw DataError(data_path + ": empty file");
  if (response.empty()) {
    const auto it = model.metadata.find("response");
    if (it != model.metadata.end() && lines.front().find(it->second) != std::string::npos) {
      // Only drop the column when it is a whole header field.
      const Dataset probe = parse_csv(lines.front() + "\n", "", {delimiter[0], true, false});
      const auto& names = probe.feature_names();
      if (std::find(names.begin(), names.end(), it->second) != names.end()) response = it->second;
    }
  }
  const Dataset data = parse_csv(text, response, {delimiter[0], true, false}, data_path);
  if (data.feature_names() != model.feature_names) {
    throw DataError(data_path + ": feature columns do not match the model");
  }
  if (lines.size() != data.rows() + 1) {
    throw DataError(data_path + ": multi-line fields are not supported when appending predictions");
  }
  const auto scores = model.predict(data);
  Sink sink(out_path, out);
  const bool binary = model.loss.kind == LossKind::logloss;
  *sink << lines[0] << delimiter << "prediction" << (binary ? delimiter + "probability" : "") << '\n';
  for (std::size_t i = 0; i < scores.size(); ++i) {
    *sink << lines[i + 1] << delimiter << fmt(scores[i]);
    if (binary) *sink << delimiter << fmt(sigmoid(scores[i]));
    *sink << '\n';
  }
  return kOk;
}

int cmd_filter(const DataOptions& d, const std::string& model_path, const std::string& method,
               std::size_t q, std::size_t grid, const FitOptions& f, const std::string& out_path,
               std::ostream& out) {
  DataOptions opts = d;
  std::optional<GamiModel> model;
  if (!model_path.empty()) model = load_model(model_path);
  const Dataset data = opts.load_split();
  const auto train = data.rows_with(SplitTag::train);
  if (train.empty()) throw UsageError("training split is empty");

  const GamiConfig cfg = f.config(opts.seed);
  LossSpec loss = model ? model->loss : cfg.loss;
  std::vector<double> scores;
  if (model) {
    if (data.features() != model->features()) throw DataError("feature count does not match the model");
    scores = model->predict(data);
  } else {
    std::vector<double> y;
    for (auto r : train) y.push_back(data.response()[r]);
    scores.assign(data.rows(), initial_score(loss, y));
  }

  FilterOptions options;
  const std::size_t pairs = data.features() * (data.features() - 1) / 2;
  options.q = std::min(q, pairs);
  options.subsample_cap = cfg.subsample_cap;
  options.seed = cfg.seed;
  options.threads = cfg.threads;
  options.tree = cfg.interaction_tree;
  if (options.tree.min_leaf == 0) options.tree.min_leaf = default_min_leaf(train.size());
  options.knots = cfg.knots;

  Sink sink(out_path, out);
  *sink << "method,rank,first,second,sse_jk,sse_kj,score,selected\n";
  auto emit = [&](const char* name, const FilterResult& result) {
    const auto& names = data.feature_names();
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
      const auto& p = result.ranked[i];
      *sink << name << ',' << i + 1 << ',' << names[p.first] << ',' << names[p.second] << ','
            << fmt(p.sse_forward) << ',' << fmt(p.sse_backward) << ',' << fmt(p.score) << ','
            << (i < options.q ? 1 : 0) << '\n';
    }
  };
  if (method == "tree" || method == "both") {
    const BinMap bins = BinMap::build(data, opts.max_bins);
    emit("tree", filter_int(data, bins, train, loss, scores, options));
  }
  if (method == "fast" || method == "both") {
    emit("fast", fast_filter(data, train, loss, scores, options, grid));
  }
  return kOk;
}

struct ModelData {
  GamiModel model;
  Dataset data;
  std::vector<std::size_t> train;
};

ModelData load_model_data(const std::string& model_path, DataOptions d, const CLI::App& app) {
  ModelData md{load_model(model_path), {}, {}};
  d.inherit(md.model, app);
  if (d.path.empty()) {
    const auto it = md.model.metadata.find("data");
    if (it == md.model.metadata.end()) throw UsageError("--data is required");
    d.path = it->second;
  }
  md.data = d.load_split();
  if (md.data.feature_names() != md.model.feature_names) {
    throw DataError(d.path + ": feature columns do not match the model");
  }
  md.train = md.data.rows_with(SplitTag::train);
  if (md.train.empty()) throw UsageError("training split is empty");
  return md;
}

int cmd_purify(ModelData md, std::size_t knots, const std::string& out_path, std::ostream& out) {
  if (knots == 0) knots = md.model.config.knots;
  md.model.effects = purify(md.model, md.data, md.train, knots);
  save_model(md.model, out_path);
  const auto ranked = term_importance(md.model, md.data, md.train);
  out << "rank,term,importance\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out << i + 1 << ',' << term_label(ranked[i].term, md.model.feature_names) << ','
        << fmt_short(ranked[i].importance) << '\n';
  }
  return kOk;
}

int cmd_verify(const ModelData& md, std::size_t knots, double tolerance, std::ostream& out) {
  if (!md.model.effects) throw UsageError("model has no effect store; run purify first");
  if (knots == 0) knots = md.model.config.knots;
  const EffectStore& store = *md.model.effects;
  const auto report = verify_orthogonality(store, md.model.trees, md.data, md.train, knots, tolerance);

  double worst_invariance = 0.0;
  for (std::size_t i = 0; i < md.data.rows(); ++i) {
    const double raw = md.model.predict_row(md.data, i);
    const double decomposed = store.predict_row(md.model.trees, md.data, i);
    worst_invariance = std::max(worst_invariance, std::abs(raw - decomposed) / std::max(1.0, std::abs(raw)));
  }
  double worst_mean = 0.0;
  for (const auto& m : store.mains) {
    double mean = 0.0, scale = 0.0;
    for (auto r : md.train) {
      const double v = store.main_value(m, md.model.trees, md.data.at(r, m.feature));
      mean += v;
      scale = std::max(scale, std::abs(v));
    }
    mean /= static_cast<double>(md.train.size());
    worst_mean = std::max(worst_mean, std::abs(mean) / std::max(1.0, scale));
  }

  out << "pair,max_inner_product,scale,ratio,passed\n";
  for (const auto& p : report.pairs) {
    out << term_label(TermId::pair(p.first, p.second), md.model.feature_names) << ','
        << fmt_short(p.max_inner_product) << ',' << fmt_short(p.scale) << ',' << fmt_short(p.ratio) << ','
        << (p.passed ? "yes" : "no") << '\n';
  }
  const bool ok = report.passed() && worst_invariance <= 1e-8 && worst_mean <= 1e-8;
  out << "orthogonality worst ratio " << fmt_short(report.worst_ratio()) << " (tolerance "
      << fmt_short(tolerance) << ")\n"
      << "prediction invariance " << fmt_short(worst_invariance) << "\n"
      << "main-effect mean " << fmt_short(worst_mean) << "\n"
      << (ok ? "verify: PASS" : "verify: FAIL") << '\n';
  return ok ? kOk : kCheckFailed;
}

int cmd_simulate(const sim::SimConfig& config, const std::string& out_path, std::ostream& out) {
  const sim::Simulation s = sim::generate(config);
  {
    std::ofstream csv(out_path, std::ios::binary);
    if (!csv) throw DataError("cannot write " + out_path);
    const auto& names = s.data.feature_names();
    for (const auto& n : names) csv << n << ',';
    csv << "y\n";
    for (std::size_t i = 0; i < s.data.rows(); ++i) {
      for (std::size_t j = 0; j < names.size(); ++j) csv << fmt(s.data.at(i, j)) << ',';
      csv << fmt(s.data.response()[i]) << '\n';
    }
  }
  json truth;
  truth["model"] = config.model_id;
  truth["n"] = config.n;
  truth["rho"] = config.rho;
  truth["response"] = config.response == sim::Response::binary ? "binary" : "continuous";
  truth["seed"] = config.seed;
  truth["noise_sd"] = config.noise_sd;
  truth["intercept"] = s.intercept;
  json mains = json::array();
  for (auto f : s.truth.main_features()) mains.push_back(s.data.feature_names()[f]);
  json pairs = json::array();
  for (const auto& [a, b] : s.truth.pairs()) {
    pairs.push_back({s.data.feature_names()[a], s.data.feature_names()[b]});
  }
  truth["main_features"] = mains;
  truth["pairs"] = pairs;
  fs::path sidecar(out_path);
  sidecar.replace_extension(".truth.json");
  std::ofstream side(sidecar, std::ios::binary);
  if (!side) throw DataError("cannot write " + sidecar.string());
  side << truth.dump(2) << '\n';
  out << "wrote " << s.data.rows() << " rows to " << out_path << " and truth to " << sidecar.string() << '\n';
  return kOk;
}

int cmd_report(const ModelData& md, const std::string& dir, std::ostream& out) {
  const auto files = write_report(md.model, md.data, md.train, dir);
  for (const auto& f : files.written) out << f.string() << '\n';
  return kOk;
}

int cmd_benchmark(sim::SimConfig config, std::size_t repeats, const FitOptions& f, bool q_set,
                  std::ostream& out) {
  if (repeats == 0) throw UsageError("--repeats must be positive");
  const bool binary = config.response == sim::Response::binary;
  FitOptions options = f;
  if (binary) options.loss = "logloss";
  if (!q_set) options.q = config.model_id == 1 ? 45 : 10;
  std::vector<std::vector<double>> metrics;  // per repeat: mse or (auc, logloss)
  const std::uint64_t base_seed = config.seed;
  for (std::size_t r = 0; r < repeats; ++r) {
    config.seed = base_seed + r;
    const sim::Simulation s = sim::generate(config);
    const Dataset data = split(s.data, {0.5, 0.25, 0.25}, config.seed);
    const BinMap bins = BinMap::build(data, kDefaultMaxBins);
    const GamiModel model = fit(data, bins, options.config(config.seed));
    const auto test = data.rows_with(SplitTag::test);
    std::vector<double> y;
    for (auto i : test) y.push_back(data.response()[i]);
    const auto g = model.predict(data, test);
    out << "repeat " << r + 1 << " seed " << config.seed << ": ";
    if (binary) {
      metrics.push_back({auc(y, g), mean_logloss(y, g)});
      out << "test auc " << fmt_short(metrics.back()[0]) << " logloss " << fmt_short(metrics.back()[1]);
    } else {
      metrics.push_back({mse(y, g)});
      out << "test mse " << fmt_short(metrics.back()[0]);
    }
    out << " (" << model.trees.size() << " trees, " << model.rounds.size() << " rounds)\n";
  }
  auto summary = [&](std::size_t k, const char* name) {
    double mean = 0.0;
    for (const auto& m : metrics) mean += m[k];
    mean /= static_cast<double>(metrics.size());
    double var = 0.0;
    for (const auto& m : metrics) var += (m[k] - mean) * (m[k] - mean);
    const double sd = metrics.size() > 1 ? std::sqrt(var / static_cast<double>(metrics.size() - 1)) : 0.0;
    out << name << " mean " << fmt_short(mean) << " sd " << fmt_short(sd) << '\n';
  };
  if (binary) {
    summary(0, "test auc");
    summary(1, "test logloss");
  } else {
    summary(0, "test mse");
  }
  return kOk;
}

void set_policy(CLI::App& app) {
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

}  // namespace

int run(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-order functional ANOVA models with boosted model-based trees", "gami"};
  set_policy(app);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  // Accepted everywhere; expanded before parsing.
  std::string unused_config;
  app.add_option("--config", unused_config, "JSON file supplying flags (command line wins)");

  DataOptions data_opts;
  FitOptions fit_opts;
  std::string model_path, out_path, out_dir, method = "tree", response_opt, delimiter = ",";
  std::size_t grid = kDefaultFastGrid, knots = 0, repeats = 10;
  double tolerance = 1e-6;
  sim::SimConfig sim_config;
  std::string sim_response = "continuous";

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and save it as JSON");
  set_policy(*fit_cmd);
  data_opts.add(*fit_cmd, true);
  fit_opts.add(*fit_cmd);
  fit_cmd->add_option("--out", out_path, "Model file")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Append predictions to a CSV");
  set_policy(*predict_cmd);
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--data", data_opts.path, "CSV to score")->required();
  predict_cmd->add_option("--response", response_opt, "Column to ignore when scoring");
  predict_cmd->add_option("--delimiter", delimiter, "Field delimiter");
  predict_cmd->add_option("--out", out_path, "Output CSV (default stdout)");

  auto* filter_cmd = app.add_subcommand("filter", "Rank interaction pairs");
  set_policy(*filter_cmd);
  data_opts.add(*filter_cmd, true);
  fit_opts.add(*filter_cmd);
  filter_cmd->add_option("--model", model_path, "Score the residuals of this model");
  filter_cmd->add_option("--method", method, "tree, fast or both")->check(CLI::IsMember({"tree", "fast", "both"}));
  filter_cmd->add_option("--grid", grid, "Quantile cuts per axis for the fast method");
  filter_cmd->add_option("--out", out_path, "Output CSV (default stdout)");

  auto* purify_cmd = app.add_subcommand("purify", "Recompute the purified effect store");
  set_policy(*purify_cmd);
  purify_cmd->add_option("--model", model_path, "Model file")->required();
  data_opts.add(*purify_cmd, false);
  purify_cmd->add_option("--knots", knots, "Spline knots (default: the model's)");
  purify_cmd->add_option("--out", out_path, "Output model file")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Check purification properties");
  set_policy(*verify_cmd);
  verify_cmd->add_option("--model", model_path, "Model file")->required();
  data_opts.add(*verify_cmd, false);
  verify_cmd->add_option("--knots", knots, "Spline knots (default: the model's)");
  verify_cmd->add_option("--tolerance", tolerance, "Relative orthogonality tolerance");

  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a benchmark dataset");
  set_policy(*simulate_cmd);
  simulate_cmd->add_option("--model", sim_config.model_id, "Generator 1-4")->required();
  simulate_cmd->add_option("--n", sim_config.n, "Rows");
  simulate_cmd->add_option("--rho", sim_config.rho, "Within-block correlation");
  simulate_cmd->add_option("--response", sim_response, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}));
  simulate_cmd->add_option("--seed", sim_config.seed, "Seed");
  simulate_cmd->add_option("--out", out_path, "Output CSV")->required();

  auto* report_cmd = app.add_subcommand("report", "Write plot-ready effect tables");
  set_policy(*report_cmd);
  report_cmd->add_option("--model", model_path, "Model file")->required();
  data_opts.add(*report_cmd, false);
  report_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* bench_cmd = app.add_subcommand("benchmark", "Rerun a simulation scenario");
  set_policy(*bench_cmd);
  bench_cmd->add_option("--model", sim_config.model_id, "Generator 1-4")->required();
  bench_cmd->add_option("--n", sim_config.n, "Rows");
  bench_cmd->add_option("--rho", sim_config.rho, "Within-block correlation");
  bench_cmd->add_option("--response", sim_response, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}));
  bench_cmd->add_option("--seed", sim_config.seed, "First seed; repeat r uses seed + r");
  bench_cmd->add_option("--repeats", repeats, "Number of data draws and splits");
  fit_opts.add(*bench_cmd);

  try {
    std::vector<std::string> argv = expand_config(argv_in);
    std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      std::ostringstream o, er;
      const int code = app.exit(e, o, er);
      out << o.str();
      err << er.str();
      return code == 0 ? kOk : kUsage;
    }
    sim_config.response = sim_response == "binary" ? sim::Response::binary : sim::Response::continuous;

    if (*fit_cmd) return cmd_fit(data_opts, fit_opts, out_path, out);
    if (*predict_cmd) return cmd_predict(model_path, data_opts.path, response_opt, delimiter, out_path, out);
    if (*filter_cmd) {
      return cmd_filter(data_opts, model_path, method, fit_opts.q, grid, fit_opts, out_path, out);
    }
    if (*purify_cmd) return cmd_purify(load_model_data(model_path, data_opts, *purify_cmd), knots, out_path, out);
    if (*verify_cmd) return cmd_verify(load_model_data(model_path, data_opts, *verify_cmd), knots, tolerance, out);
    if (*simulate_cmd) {
      sim_config.validate();
      return cmd_simulate(sim_config, out_path, out);
    }
    if (*report_cmd) return cmd_report(load_model_data(model_path, data_opts, *report_cmd), out_dir, out);
    if (*bench_cmd) {
      sim_config.validate();
      return cmd_benchmark(sim_config, repeats, fit_opts, bench_cmd->count("--q") > 0, out);
    }
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ModelFormatError& e) {
    err << "model format error: " << e.what() << '\n';
    return kModelFormat;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gami::cli
