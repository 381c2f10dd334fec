#include "replaykit/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "replaykit/errors.hpp"

namespace replaykit::detector {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "replaykit-model";

json vectors_to_json(const std::vector<FeatureVector>& vs) {
  json out = json::array();
  for (const auto& v : vs) {
    auto values = v.values();
    out.push_back(std::vector<double>(values.begin(), values.end()));
  }
  return out;
}

std::vector<FeatureVector> vectors_from_json(const json& j) {
  std::vector<FeatureVector> out;
  for (const auto& row : j) {
    auto values = row.get<std::vector<double>>();
    if (values.size() != kFeatureDims) throw FormatError("feature vector has wrong dimensionality");
    std::array<double, kFeatureDims> a{};
    std::copy(values.begin(), values.end(), a.begin());
    out.push_back(FeatureVector::from_values(a));
  }
  return out;
}

}  // namespace

std::string serialize_model(const NoveltyModel& model) {
  json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kModelFormatVersion;
  doc["kind"] = std::string(to_string(model.kind()));
  doc["feature_layout"] = "length,entropy,printable_ratio,hist0..hist15";

  if (model.kind() == ModelKind::Lof) {
    const auto& m = model.lof();
    doc["training_vectors"] = vectors_to_json(m.training());
    doc["standardization"] = {{"kept_dims", m.standardizer().kept_dims},
                              {"mean", m.standardizer().mean},
                              {"stddev", m.standardizer().stddev}};
    doc["lof"] = {{"k", m.k()}, {"k_eff", m.k_eff()}, {"threshold", m.threshold()}};
  } else {
    const auto& m = model.isolation_forest();
    doc["training_vectors"] = vectors_to_json(m.training());
    json trees = json::array();
    for (const auto& t : m.trees()) {
      json nodes = json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
      }
      trees.push_back(std::move(nodes));
    }
    doc["isolation_forest"] = {{"subsample", m.subsample()},
                               {"seed", m.seed()},
                               {"anomaly_cutoff", m.anomaly_cutoff()},
                               {"trees", std::move(trees)}};
  }
  return doc.dump(2);
}

NoveltyModel deserialize_model(const std::string& text) {
  try {
    json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormatTag) throw FormatError("not a model document");
    int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("unsupported model format version " + std::to_string(version));
    }
    auto kind = model_kind_from_string(doc.at("kind").get<std::string>());
    auto training = vectors_from_json(doc.at("training_vectors"));

    if (kind == ModelKind::Lof) {
      const auto& st = doc.at("standardization");
      Standardizer s;
      s.kept_dims = st.at("kept_dims").get<std::vector<std::size_t>>();
      s.mean = st.at("mean").get<std::vector<double>>();
      s.stddev = st.at("stddev").get<std::vector<double>>();
      const auto& lof = doc.at("lof");
      LofModel m(std::move(training), std::move(s), lof.at("k").get<std::size_t>(),
                 lof.at("threshold").get<double>());
      if (lof.contains("k_eff") && lof.at("k_eff").get<std::size_t>() != m.k_eff()) {
        throw FormatError("stored k_eff disagrees with training size");
      }
      return NoveltyModel(std::move(m));
    }

    const auto& f = doc.at("isolation_forest");
    std::vector<IsolationTree> trees;
    for (const auto& jt : f.at("trees")) {
      IsolationTree t;
      for (const auto& jn : jt) {
        IsolationNode n;
        n.feature = jn.at(0).get<int>();
        n.split = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.size = jn.at(4).get<std::size_t>();
        t.nodes.push_back(n);
      }
      trees.push_back(std::move(t));
    }
    return NoveltyModel(IsolationForestModel(std::move(training), std::move(trees),
                                             f.at("subsample").get<std::size_t>(),
                                             f.at("seed").get<std::uint64_t>(),
                                             f.at("anomaly_cutoff").get<double>()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("invalid model parameters: ") + e.what());
  }
}

void save_model(const NoveltyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  out << serialize_model(model) << '\n';
}

NoveltyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace replaykit::detector
