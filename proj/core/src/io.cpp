#include "gami/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gami/error.hpp"

namespace gami {

using nlohmann::json;

namespace {

json design_json(const Design& d) {
  json j;
  j["kind"] = d.kind() == DesignKind::spline ? "spline" : "raw_linear";
  j["penalty"] = d.penalty();
  if (d.has_basis()) j["knots"] = d.basis().knots();
  return j;
}

DesignKind design_kind(const std::string& s) {
  if (s == "spline") return DesignKind::spline;
  if (s == "raw_linear") return DesignKind::raw_linear;
  throw ModelFormatError("unknown design kind '" + s + "'");
}

Design design_from(const json& j) {
  const DesignKind kind = design_kind(j.at("kind").get<std::string>());
  std::optional<SplineBasis> basis;
  if (j.contains("knots")) basis = SplineBasis(j.at("knots").get<std::vector<double>>());
  auto penalty = j.at("penalty").get<std::vector<double>>();
  if (kind == DesignKind::spline && (!basis || basis->size() != penalty.size())) {
    throw ModelFormatError("spline design without matching knots");
  }
  if (kind == DesignKind::raw_linear && penalty.size() != 2) {
    throw ModelFormatError("linear design must have two coordinates");
  }
  return Design::from_parts(kind, std::move(penalty), std::move(basis));
}

json params_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}, {"ridge", p.ridge}};
}

TreeParams params_from(const json& j) {
  return {j.at("max_depth").get<int>(), j.at("min_leaf").get<std::size_t>(), j.at("ridge").get<double>()};
}

json tree_json(const ModelTree& t) {
  const auto& spec = t.tree.spec();
  json nodes = json::array();
  for (const auto& n : t.tree.nodes()) {
    nodes.push_back({{"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"bin_lo", n.bin_lo},
                     {"bin_hi", n.bin_hi},
                     {"rows", n.rows},
                     {"sse", n.sse},
                     {"beta", n.beta}});
  }
  return {{"model_var", spec.model_var},
          {"split_var", spec.split_var},
          {"design", design_json(spec.design)},
          {"params", params_json(spec.params)},
          {"scale", t.scale},
          {"round", t.round},
          {"stage", t.stage == StageKind::main ? "main" : "interaction"},
          {"nodes", nodes}};
}

ModelTree tree_from(const json& j, std::size_t features) {
  TreeSpec spec;
  spec.model_var = j.at("model_var").get<std::size_t>();
  spec.split_var = j.at("split_var").get<std::size_t>();
  if (spec.model_var >= features || spec.split_var >= features) {
    throw ModelFormatError("tree references a feature outside the model");
  }
  spec.design = design_from(j.at("design"));
  spec.params = params_from(j.at("params"));
  std::vector<TreeNode> nodes;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.bin_lo = n.at("bin_lo").get<std::size_t>();
    node.bin_hi = n.at("bin_hi").get<std::size_t>();
    node.rows = n.at("rows").get<std::size_t>();
    node.sse = n.at("sse").get<double>();
    node.beta = n.at("beta").get<std::vector<double>>();
    nodes.push_back(std::move(node));
  }
  if (nodes.empty()) throw ModelFormatError("tree without nodes");
  const int count = static_cast<int>(nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.beta.size() != spec.design.dim()) {
      throw ModelFormatError("coefficient count mismatch in tree node " + std::to_string(i));
    }
    if (n.leaf()) {
      if (n.right >= 0) {
        throw ModelFormatError("malformed leaf in tree node " + std::to_string(i));
      }
    } else if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
      throw ModelFormatError("bad child index in tree node " + std::to_string(i));
    }
  }
  const std::string stage = j.at("stage").get<std::string>();
  if (stage != "main" && stage != "interaction") throw ModelFormatError("unknown stage '" + stage + "'");
  ModelTree t{FittedTree(std::move(spec), std::move(nodes)), j.at("scale").get<double>(),
              j.at("round").get<std::size_t>(), stage == "main" ? StageKind::main : StageKind::interaction};
  return t;
}

json correction_json(const Correction& c) {
  json j = {{"kind", c.kind == DesignKind::spline ? "spline" : "raw_linear"}, {"coef", c.coef}};
  if (c.basis) j["knots"] = c.basis->knots();
  return j;
}

Correction correction_from(const json& j) {
  Correction c;
  c.kind = design_kind(j.at("kind").get<std::string>());
  c.coef = j.at("coef").get<std::vector<double>>();
  if (j.contains("knots")) c.basis = SplineBasis(j.at("knots").get<std::vector<double>>());
  if (!c.coef.empty()) {
    const std::size_t want = c.kind == DesignKind::spline ? (c.basis ? c.basis->size() : 0) : 2;
    if (c.coef.size() != want) throw ModelFormatError("correction coefficients do not match basis");
  }
  return c;
}

std::vector<std::size_t> tree_ids(const json& j, std::size_t tree_count) {
  auto ids = j.get<std::vector<std::size_t>>();
  for (auto id : ids) {
    if (id >= tree_count) throw ModelFormatError("effect references a missing tree");
  }
  return ids;
}

json effects_json(const EffectStore& s) {
  json mains = json::array();
  for (const auto& m : s.mains) {
    mains.push_back({{"feature", m.feature},
                     {"trees", m.trees},
                     {"correction", correction_json(m.correction)},
                     {"offset", m.offset},
                     {"importance", m.importance}});
  }
  json inter = json::array();
  for (const auto& e : s.interactions) {
    inter.push_back({{"first", e.first},
                     {"second", e.second},
                     {"trees", e.trees},
                     {"first_correction", correction_json(e.first_correction)},
                     {"second_correction", correction_json(e.second_correction)},
                     {"offset", e.offset},
                     {"importance", e.importance}});
  }
  return {{"intercept", s.intercept}, {"purified", s.purified}, {"mains", mains}, {"interactions", inter}};
}

EffectStore effects_from(const json& j, std::size_t features, std::size_t tree_count) {
  EffectStore s;
  s.intercept = j.at("intercept").get<double>();
  s.purified = j.at("purified").get<bool>();
  for (const auto& m : j.at("mains")) {
    MainEffect e;
    e.feature = m.at("feature").get<std::size_t>();
    if (e.feature >= features) throw ModelFormatError("main effect feature out of range");
    e.trees = tree_ids(m.at("trees"), tree_count);
    e.correction = correction_from(m.at("correction"));
    e.offset = m.at("offset").get<double>();
    e.importance = m.at("importance").get<double>();
    s.mains.push_back(std::move(e));
  }
  for (const auto& m : j.at("interactions")) {
    InteractionEffect e;
    e.first = m.at("first").get<std::size_t>();
    e.second = m.at("second").get<std::size_t>();
    if (e.first >= e.second || e.second >= features) throw ModelFormatError("bad interaction pair");
    e.trees = tree_ids(m.at("trees"), tree_count);
    e.first_correction = correction_from(m.at("first_correction"));
    e.second_correction = correction_from(m.at("second_correction"));
    e.offset = m.at("offset").get<double>();
    e.importance = m.at("importance").get<double>();
    s.interactions.push_back(std::move(e));
  }
  return s;
}

json stage_json(const StageConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"max_iterations", c.max_iterations}, {"patience", c.patience}};
}

StageConfig stage_from(const json& j) {
  return {j.at("learning_rate").get<double>(), j.at("max_iterations").get<std::size_t>(),
          j.at("patience").get<std::size_t>()};
}

json config_json(const GamiConfig& c) {
  return {{"rounds", c.rounds},
          {"main_stage", stage_json(c.main_stage)},
          {"interaction_stage", stage_json(c.interaction_stage)},
          {"q", c.q},
          {"loss", to_string(c.loss.kind)},
          {"hessian_floor", c.loss.hessian_floor},
          {"main_tree", params_json(c.main_tree)},
          {"interaction_tree", params_json(c.interaction_tree)},
          {"knots", c.knots},
          {"subsample_cap", c.subsample_cap},
          {"seed", c.seed},
          {"threads", c.threads},
          {"purify", c.purify}};
}

GamiConfig config_from(const json& j) {
  GamiConfig c;
  c.rounds = j.at("rounds").get<std::size_t>();
  c.main_stage = stage_from(j.at("main_stage"));
  c.interaction_stage = stage_from(j.at("interaction_stage"));
  c.q = j.at("q").get<std::size_t>();
  c.loss = {loss_kind_from_string(j.at("loss").get<std::string>()), j.at("hessian_floor").get<double>()};
  c.main_tree = params_from(j.at("main_tree"));
  c.interaction_tree = params_from(j.at("interaction_tree"));
  c.knots = j.at("knots").get<std::size_t>();
  c.subsample_cap = j.at("subsample_cap").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<std::size_t>();
  c.purify = j.at("purify").get<bool>();
  return c;
}

}  // namespace

std::string model_to_json(const GamiModel& model) {
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(tree_json(t));
  json rounds = json::array();
  for (const auto& r : model.rounds) {
    json pairs = json::array();
    for (const auto& [a, b] : r.selected_pairs) pairs.push_back({a, b});
    rounds.push_back({{"main_stop", r.main_stop},
                      {"interaction_stop", r.interaction_stop},
                      {"selected_pairs", pairs},
                      {"main_trace", r.main_trace},
                      {"interaction_trace", r.interaction_trace}});
  }
  json doc = {{"format_version", kModelFormatVersion},
              {"loss", {{"kind", to_string(model.loss.kind)}, {"hessian_floor", model.loss.hessian_floor}}},
              {"intercept", model.intercept},
              {"feature_names", model.feature_names},
              {"bin_edges", model.bin_edges},
              {"trees", trees},
              {"rounds", rounds},
              {"config", config_json(model.config)},
              {"metadata", model.metadata}};
  doc["effects"] = model.effects ? effects_json(*model.effects) : json(nullptr);
  return doc.dump(1, '\t') + "\n";
}

GamiModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model document is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version")) {
      throw ModelFormatError("model document has no format_version");
    }
    const auto& version = doc.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
      throw ModelFormatError("unsupported model format version " + version.dump());
    }
    GamiModel m;
    m.loss = {loss_kind_from_string(doc.at("loss").at("kind").get<std::string>()),
              doc.at("loss").at("hessian_floor").get<double>()};
    m.intercept = doc.at("intercept").get<double>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.bin_edges = doc.at("bin_edges").get<std::vector<std::vector<double>>>();
    for (const auto& t : doc.at("trees")) m.trees.push_back(tree_from(t, m.features()));
    for (const auto& r : doc.at("rounds")) {
      RoundSummary s;
      s.main_stop = r.at("main_stop").get<std::size_t>();
      s.interaction_stop = r.at("interaction_stop").get<std::size_t>();
      for (const auto& p : r.at("selected_pairs")) {
        s.selected_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
      }
      s.main_trace = r.at("main_trace").get<std::vector<double>>();
      s.interaction_trace = r.at("interaction_trace").get<std::vector<double>>();
      m.rounds.push_back(std::move(s));
    }
    m.config = config_from(doc.at("config"));
    m.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
    if (!doc.at("effects").is_null()) {
      m.effects = effects_from(doc.at("effects"), m.features(), m.trees.size());
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  } catch (const UsageError& e) {
    throw ModelFormatError(std::string("invalid model content: ") + e.what());
  }
}

void save_model(const GamiModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw DataError("failed writing " + path.string());
}

GamiModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace gami
