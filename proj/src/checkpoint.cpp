#include "pda/checkpoint.hpp"

#include <fstream>

#include "pda/errors.hpp"

namespace pda::networks {
namespace {

using nlohmann::json;

json net_to_json(const MlpParams& net) {
  json j;
  j["widths"] = net.spec.widths;
  json acts = json::array();
  for (Activation a : net.spec.hidden_activations) acts.push_back(to_string(a));
  j["hidden_activations"] = acts;
  j["head"] = to_string(net.spec.head);
  json weights = json::array();
  for (const Tensor& w : net.weights) {
    json rows = json::array();
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const auto row = w.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    weights.push_back(rows);
  }
  j["weights"] = weights;
  json biases = json::array();
  for (const Tensor& b : net.biases) biases.push_back(b.data());
  j["biases"] = biases;
  return j;
}

MlpParams net_from_json(const json& j) {
  MlpSpec spec;
  spec.widths = j.at("widths").get<std::vector<std::size_t>>();
  for (const auto& a : j.at("hidden_activations")) spec.hidden_activations.push_back(parse_activation(a.get<std::string>()));
  spec.head = parse_head(j.at("head").get<std::string>());
  MlpParams params = zero_network(spec);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != spec.layers() || biases.size() != spec.layers()) {
    throw DimensionError("checkpoint: layer count does not match widths");
  }
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const auto rows = weights[l].get<std::vector<std::vector<double>>>();
    Tensor w = Tensor::from_rows(rows);
    if (w.shape() != params.weights[l].shape()) throw DimensionError("checkpoint: weight shape mismatch");
    params.weights[l] = std::move(w);
    Tensor b = Tensor::vector(biases[l].get<std::vector<double>>());
    if (b.shape() != params.biases[l].shape()) throw DimensionError("checkpoint: bias shape mismatch");
    params.biases[l] = std::move(b);
  }
  return params;
}

}  // namespace

json to_json(const ModelBundle& model, long step) {
  json doc;
  doc["format"] = "pda-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["step"] = step;
  doc["networks"] = {{"feature", net_to_json(model.feature)},
                     {"classifier", net_to_json(model.classifier)},
                     {"discriminator", net_to_json(model.discriminator)}};
  return doc;
}

ModelBundle bundle_from_json(const json& doc) {
  try {
    if (doc.at("format") != "pda-checkpoint") throw UsageError("not a pda checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw UsageError("unsupported checkpoint version " + doc.at("version").dump());
    }
    const auto& nets = doc.at("networks");
    ModelBundle model{net_from_json(nets.at("feature")), net_from_json(nets.at("classifier")),
                      net_from_json(nets.at("discriminator"))};
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model, long step) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << to_json(model, step).dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return bundle_from_json(doc);
}

}  // namespace pda::networks
