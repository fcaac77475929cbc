#include "ibug/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "ibug/error.hpp"
#include "json.hpp"

namespace ibug {

using nlohmann::json;

DumpFormat parse_dump_format(std::string_view tag) {
  if (tag == "lightgbm-text") return DumpFormat::kLightGbmText;
  if (tag == "xgboost-json") return DumpFormat::kXgboostJson;
  if (tag == "native-json") return DumpFormat::kNativeJson;
  throw InvalidInput("unknown model format '" + std::string(tag) + "'");
}

std::string_view to_string(DumpFormat format) {
  switch (format) {
    case DumpFormat::kLightGbmText: return "lightgbm-text";
    case DumpFormat::kXgboostJson: return "xgboost-json";
    case DumpFormat::kNativeJson: return "native-json";
  }
  return "unknown";
}

Ensemble parse_model(std::string_view bytes, DumpFormat format) {
  switch (format) {
    case DumpFormat::kLightGbmText: return parse_lightgbm_text(bytes);
    case DumpFormat::kXgboostJson: return parse_xgboost_json(bytes);
    case DumpFormat::kNativeJson: return parse_native_json(bytes);
  }
  throw InvalidInput("unknown model format");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

namespace {

// Child indices of a source tree, before conversion to pre-order.
struct RawNode {
  bool leaf = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool missing_goes_left = true;
  std::int64_t left = -1;   // raw ids, meaning depends on the source format
  std::int64_t right = -1;
  double value = 0.0;
  double gain = 0.0;
  std::int64_t source_leaf = -1;
};

// Walks a source tree from `root` and emits pre-order nodes with dense leaf ids.
Tree to_preorder(const std::function<const RawNode&(std::int64_t)>& lookup, std::int64_t root) {
  std::vector<TreeNode> nodes;
  std::vector<std::int64_t> source_ids;
  std::function<std::int32_t(std::int64_t, int)> visit = [&](std::int64_t raw,
                                                             int depth) -> std::int32_t {
    if (depth > 10000) throw InvalidInput("tree is cyclic or too deep");
    const RawNode& r = lookup(raw);
    const auto id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    if (r.leaf) {
      nodes[id].leaf_id = static_cast<std::int32_t>(source_ids.size());
      nodes[id].value = r.value;
      source_ids.push_back(r.source_leaf);
      return id;
    }
    nodes[id].feature = r.feature;
    nodes[id].threshold = r.threshold;
    nodes[id].missing_goes_left = r.missing_goes_left;
    nodes[id].gain = r.gain;
    const std::int32_t l = visit(r.left, depth + 1);
    const std::int32_t rr = visit(r.right, depth + 1);
    nodes[id].left = l;
    nodes[id].right = rr;
    return id;
  };
  visit(root, 0);
  return Tree(std::move(nodes), std::move(source_ids));
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_and_column(text, byte);
    throw ParseError(std::string("malformed JSON: ") + e.what(), line, col);
  }
}

// ---------------------------------------------------------------------------
// LightGBM text format

struct LgbStanza {
  std::size_t line = 0;
  std::map<std::string, std::pair<std::string, std::size_t>> fields;  // value, line
};

template <typename T>
std::vector<T> parse_list(const LgbStanza& st, const std::string& key, std::size_t expected) {
  auto it = st.fields.find(key);
  if (it == st.fields.end())
    throw ParseError("tree stanza is missing '" + key + "'", st.line, 0);
  const auto& [text, line] = it->second;
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(' ', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) {
      std::string_view tok(text.data() + pos, end - pos);
      T v{};
      if constexpr (std::is_floating_point_v<T>) {
        // from_chars has no inf spelling that LightGBM uses; fall back to strtod.
        std::string s(tok);
        char* stop = nullptr;
        v = std::strtod(s.c_str(), &stop);
        if (stop != s.c_str() + s.size())
          throw ParseError("bad number '" + s + "' in '" + key + "'", line, pos + key.size() + 2);
      } else {
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
          throw ParseError("bad integer '" + std::string(tok) + "' in '" + key + "'", line,
                           pos + key.size() + 2);
      }
      out.push_back(v);
    }
    pos = end + 1;
  }
  if (out.size() != expected)
    throw ParseError("'" + key + "' has " + std::to_string(out.size()) + " entries, expected " +
                         std::to_string(expected),
                     line, 0);
  return out;
}

bool supported_lightgbm_objective(const std::string& objective) {
  std::string name = objective.substr(0, objective.find(' '));
  return name == "regression" || name == "regression_l2" || name == "l2" ||
         name == "mean_squared_error" || name == "mse" || name == "l2_root" ||
         name == "root_mean_squared_error" || name == "rmse";
}

Tree convert_lightgbm_tree(const LgbStanza& st) {
  auto count_field = st.fields.find("num_leaves");
  if (count_field == st.fields.end()) throw ParseError("tree stanza is missing 'num_leaves'", st.line, 0);
  const auto num_leaves = parse_list<std::int64_t>(st, "num_leaves", 1)[0];
  if (num_leaves < 1) throw ParseError("num_leaves must be positive", count_field->second.second, 0);
  if (auto it = st.fields.find("num_cat"); it != st.fields.end() && it->second.first != "0")
    throw UnsupportedModel("categorical splits are not supported");
  if (auto it = st.fields.find("is_linear"); it != st.fields.end() && it->second.first != "0")
    throw UnsupportedModel("linear trees are not supported");

  const auto leaf_value = parse_list<double>(st, "leaf_value", static_cast<std::size_t>(num_leaves));
  if (num_leaves == 1) {
    RawNode leaf;
    leaf.leaf = true;
    leaf.value = leaf_value[0];
    leaf.source_leaf = 0;
    return to_preorder([&](std::int64_t) -> const RawNode& { return leaf; }, 0);
  }

  const auto n_internal = static_cast<std::size_t>(num_leaves - 1);
  const auto split_feature = parse_list<std::int32_t>(st, "split_feature", n_internal);
  const auto threshold = parse_list<double>(st, "threshold", n_internal);
  const auto decision_type = parse_list<std::int32_t>(st, "decision_type", n_internal);
  const auto left_child = parse_list<std::int64_t>(st, "left_child", n_internal);
  const auto right_child = parse_list<std::int64_t>(st, "right_child", n_internal);
  std::vector<double> split_gain(n_internal, 0.0);
  if (st.fields.count("split_gain")) split_gain = parse_list<double>(st, "split_gain", n_internal);

  // Internal nodes keep their index; leaf j becomes n_internal + j.
  std::vector<RawNode> raw(n_internal + static_cast<std::size_t>(num_leaves));
  auto child = [&](std::int64_t c) -> std::int64_t {
    if (c >= 0) {
      if (static_cast<std::size_t>(c) >= n_internal) throw ParseError("child index out of range", st.line, 0);
      return c;
    }
    const std::int64_t leaf = ~c;
    if (leaf >= num_leaves) throw ParseError("leaf index out of range", st.line, 0);
    return static_cast<std::int64_t>(n_internal) + leaf;
  };
  for (std::size_t i = 0; i < n_internal; ++i) {
    const int dt = decision_type[i];
    if (dt & 1) throw UnsupportedModel("categorical splits are not supported");
    const bool default_left = (dt & 2) != 0;
    const int missing_type = (dt >> 2) & 3;
    RawNode& r = raw[i];
    r.feature = split_feature[i];
    r.threshold = threshold[i];
    r.gain = split_gain[i];
    r.left = child(left_child[i]);
    r.right = child(right_child[i]);
    if (r.feature < 0) throw ParseError("negative split feature", st.line, 0);
    switch (missing_type) {
      case 0:  // NaN is treated as 0.0
        r.missing_goes_left = 0.0 <= r.threshold;
        break;
      case 1: {  // zero and NaN take the default side
        if ((0.0 <= r.threshold) != default_left)
          throw UnsupportedModel("zero-as-missing split sends 0 against its threshold");
        r.missing_goes_left = default_left;
        break;
      }
      case 2:
        r.missing_goes_left = default_left;
        break;
      default:
        throw ParseError("unknown missing type in decision_type", st.line, 0);
    }
  }
  for (std::int64_t j = 0; j < num_leaves; ++j) {
    RawNode& r = raw[n_internal + static_cast<std::size_t>(j)];
    r.leaf = true;
    r.value = leaf_value[static_cast<std::size_t>(j)];
    r.source_leaf = j;
  }
  return to_preorder([&](std::int64_t i) -> const RawNode& { return raw.at(static_cast<std::size_t>(i)); }, 0);
}

}  // namespace

Ensemble parse_lightgbm_text(std::string_view text) {
  std::map<std::string, std::string> header;
  std::vector<LgbStanza> stanzas;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool in_trees = false;
  bool saw_magic = false;
  bool saw_end = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "tree") throw ParseError("not a LightGBM text model (expected 'tree')", 1, 0);
      saw_magic = true;
      continue;
    }
    if (line == "end of trees") {
      saw_end = true;
      break;
    }
    if (line.empty()) continue;
    if (line.rfind("Tree=", 0) == 0) {
      in_trees = true;
      stanzas.push_back(LgbStanza{line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (in_trees) throw ParseError("expected key=value", line_no, 0);
      continue;  // header flags such as "average_output"
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (in_trees) {
      stanzas.back().fields[key] = {value, line_no};
    } else {
      header[key] = value;
    }
    if (end == text.size()) break;
  }
  if (!saw_magic) throw ParseError("empty model file", 1, 0);
  if (!saw_end) throw ParseError("truncated model: missing 'end of trees'", line_no, 0);

  if (auto it = header.find("num_class"); it != header.end() && it->second != "1")
    throw UnsupportedModel("multi-class LightGBM models are not supported");
  if (auto it = header.find("num_tree_per_iteration"); it != header.end() && it->second != "1")
    throw UnsupportedModel("multi-output LightGBM models are not supported");
  auto obj = header.find("objective");
  if (obj == header.end() || !supported_lightgbm_objective(obj->second))
    throw UnsupportedModel("only squared-error regression models are supported (objective '" +
                           (obj == header.end() ? std::string("?") : obj->second) + "')");
  if (header.count("average_output"))
    throw UnsupportedModel("averaged (random forest) LightGBM models are not supported");
  auto mfi = header.find("max_feature_idx");
  if (mfi == header.end()) throw ParseError("header is missing 'max_feature_idx'", 1, 0);
  const std::size_t n_features = std::stoul(mfi->second) + 1;

  std::vector<Tree> trees;
  trees.reserve(stanzas.size());
  for (const auto& st : stanzas) trees.push_back(convert_lightgbm_tree(st));
  return Ensemble(n_features, 0.0, 1.0, 0.0, std::move(trees));
}

// ---------------------------------------------------------------------------
// XGBoost JSON (save_model schema)

namespace {

double json_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (!s.empty() && s.front() == '[') s = s.substr(1, s.size() - 2);
    if (s.find(',') != std::string::npos)
      throw UnsupportedModel("vector-valued base_score (multi-output) is not supported");
    return std::stod(s);
  }
  throw InvalidInput("expected a number");
}

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string("XGBoost model is missing '") + key + "'", 1, 0);
  return obj.at(key);
}

}  // namespace

Ensemble parse_xgboost_json(std::string_view text) {
  const json doc = parse_json_document(text);
  try {
    const json& learner = require(doc, "learner");
    const json& param = require(learner, "learner_model_param");
    const std::string objective = require(require(learner, "objective"), "name").get<std::string>();
    if (objective != "reg:squarederror" && objective != "reg:linear")
      throw UnsupportedModel("only reg:squarederror models are supported (objective '" + objective + "')");
    if (param.contains("num_class") && json_number(param.at("num_class")) > 1)
      throw UnsupportedModel("multi-class XGBoost models are not supported");
    if (param.contains("num_target") && json_number(param.at("num_target")) > 1)
      throw UnsupportedModel("multi-output XGBoost models are not supported");
    const double base_score = json_number(require(param, "base_score"));
    const auto n_features = static_cast<std::size_t>(json_number(require(param, "num_feature")));

    const json& booster = require(learner, "gradient_booster");
    const std::string booster_name = require(booster, "name").get<std::string>();
    if (booster_name != "gbtree")
      throw UnsupportedModel("booster '" + booster_name + "' is not supported");
    const json& model = require(booster, "model");

    std::vector<Tree> trees;
    for (const json& t : require(model, "trees")) {
      const auto left = require(t, "left_children").get<std::vector<std::int64_t>>();
      const auto right = require(t, "right_children").get<std::vector<std::int64_t>>();
      const auto index = require(t, "split_indices").get<std::vector<std::int64_t>>();
      const auto cond = require(t, "split_conditions").get<std::vector<double>>();
      const json& dl = require(t, "default_left");
      std::vector<bool> default_left;
      for (const json& v : dl) default_left.push_back(v.is_boolean() ? v.get<bool>() : v.get<int>() != 0);
      std::vector<double> loss_chg(left.size(), 0.0);
      if (t.contains("loss_changes")) loss_chg = t.at("loss_changes").get<std::vector<double>>();
      if (t.contains("split_type")) {
        for (const json& v : t.at("split_type"))
          if (v.get<int>() != 0) throw UnsupportedModel("categorical splits are not supported");
      }
      if (t.contains("tree_param") && t.at("tree_param").contains("size_leaf_vector") &&
          json_number(t.at("tree_param").at("size_leaf_vector")) > 1)
        throw UnsupportedModel("vector-leaf trees are not supported");
      const std::size_t n = left.size();
      if (right.size() != n || index.size() != n || cond.size() != n || default_left.size() != n ||
          loss_chg.size() != n)
        throw ParseError("XGBoost tree arrays have inconsistent lengths", 1, 0);

      std::vector<RawNode> raw(n);
      for (std::size_t i = 0; i < n; ++i) {
        RawNode& r = raw[i];
        if (left[i] == -1) {
          r.leaf = true;
          r.value = cond[i];
          r.source_leaf = static_cast<std::int64_t>(i);
          continue;
        }
        if (left[i] < 0 || right[i] < 0 || static_cast<std::size_t>(left[i]) >= n ||
            static_cast<std::size_t>(right[i]) >= n)
          throw ParseError("XGBoost child index out of range", 1, 0);
        r.feature = static_cast<std::int32_t>(index[i]);
        // XGBoost sends x < c left on float32 values; x <= prev(c) is the same rule.
        const auto c = static_cast<float>(cond[i]);
        r.threshold = std::nextafter(static_cast<double>(c), -std::numeric_limits<double>::infinity());
        r.missing_goes_left = default_left[i];
        r.left = left[i];
        r.right = right[i];
        r.gain = loss_chg[i];
      }
      if (n == 0) throw ParseError("XGBoost tree has no nodes", 1, 0);
      trees.push_back(to_preorder([&](std::int64_t i) -> const RawNode& { return raw.at(static_cast<std::size_t>(i)); }, 0));
    }
    return Ensemble(n_features, base_score, 1.0, 0.0, std::move(trees), Accumulation::kFloat32);
  } catch (const json::exception& e) {
    throw ParseError(std::string("unexpected XGBoost JSON structure: ") + e.what(), 1, 0);
  }
}

// ---------------------------------------------------------------------------
// Native JSON

namespace {

constexpr int kNativeVersion = 1;

// JSON numbers cannot hold infinities, which external dumps use for splits
// that only separate missing values.
json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

double threshold_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("bad threshold '" + s + "'", 1, 0);
  }
  return j.get<double>();
}

void write_node(const Tree& tree, std::int32_t i, json& out) {
  const TreeNode& n = tree.nodes()[i];
  if (n.is_leaf()) {
    out.push_back({{"leaf", n.leaf_id}, {"value", n.value}});
    return;
  }
  out.push_back({{"feature", n.feature},
                 {"threshold", threshold_to_json(n.threshold)},
                 {"missing_left", n.missing_goes_left},
                 {"gain", n.gain}});
  write_node(tree, n.left, out);
  write_node(tree, n.right, out);
}

}  // namespace

std::string to_native_json(const Ensemble& model) {
  json doc;
  doc["format"] = "ibug-native";
  doc["version"] = kNativeVersion;
  doc["n_features"] = model.n_features();
  doc["base_score"] = model.base_score();
  doc["learning_rate"] = model.learning_rate();
  doc["lambda"] = model.lambda();
  if (model.accumulation() == Accumulation::kFloat32) doc["accumulation"] = "float32";
  json trees = json::array();
  for (const Tree& t : model.trees()) {
    json nodes = json::array();
    write_node(t, 0, nodes);
    json jt = {{"nodes", std::move(nodes)}};
    if (!t.source_leaf_ids().empty()) jt["source_leaf_ids"] = t.source_leaf_ids();
    trees.push_back(std::move(jt));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

Ensemble parse_native_json(std::string_view text) {
  const json doc = parse_json_document(text);
  try {
    const int version = require(doc, "version").get<int>();
    if (version != kNativeVersion)
      throw ParseError("unsupported native model version " + std::to_string(version), 1, 0);
    std::vector<Tree> trees;
    for (const json& jt : require(doc, "trees")) {
      const json& nodes = require(jt, "nodes");
      std::vector<TreeNode> out;
      std::size_t cursor = 0;
      std::function<std::int32_t()> read = [&]() -> std::int32_t {
        if (cursor >= nodes.size()) throw ParseError("native tree is truncated", 1, 0);
        const json& jn = nodes[cursor++];
        const auto id = static_cast<std::int32_t>(out.size());
        out.emplace_back();
        if (jn.contains("leaf")) {
          out[id].leaf_id = jn.at("leaf").get<std::int32_t>();
          out[id].value = jn.at("value").get<double>();
          return id;
        }
        out[id].feature = jn.at("feature").get<std::int32_t>();
        out[id].threshold = threshold_from_json(jn.at("threshold"));
        out[id].missing_goes_left = jn.at("missing_left").get<bool>();
        out[id].gain = jn.value("gain", 0.0);
        const std::int32_t l = read();
        const std::int32_t r = read();
        out[id].left = l;
        out[id].right = r;
        return id;
      };
      read();
      if (cursor != nodes.size()) throw ParseError("native tree has trailing nodes", 1, 0);
      std::vector<std::int64_t> source;
      if (jt.contains("source_leaf_ids")) source = jt.at("source_leaf_ids").get<std::vector<std::int64_t>>();
      trees.emplace_back(std::move(out), std::move(source));
    }
    Accumulation accumulation = Accumulation::kDouble;
    if (doc.contains("accumulation")) {
      const auto mode = doc.at("accumulation").get<std::string>();
      if (mode == "float32") {
        accumulation = Accumulation::kFloat32;
      } else if (mode != "double") {
        throw ParseError("unknown accumulation mode '" + mode + "'", 1, 0);
      }
    }
    return Ensemble(require(doc, "n_features").get<std::size_t>(),
                    require(doc, "base_score").get<double>(),
                    require(doc, "learning_rate").get<double>(), require(doc, "lambda").get<double>(),
                    std::move(trees), accumulation);
  } catch (const json::exception& e) {
    throw ParseError(std::string("unexpected native model structure: ") + e.what(), 1, 0);
  }
}

}  // namespace ibug
