#include "costyle/nn/checkpoint.hpp"

#include <fstream>

namespace costyle::nn {

using nlohmann::json;

namespace {

json grads_to_json(const MlpGrads& g) {
  return json{{"weights", g.weights}, {"biases", g.biases}};
}

MlpGrads grads_from_json(const json& doc, const MlpParams& params) {
  MlpGrads g = MlpGrads::zeros_like(params);
  g.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
  g.biases = doc.at("biases").get<std::vector<std::vector<double>>>();
  if (g.weights.size() != params.weights.size() ||
      g.biases.size() != params.biases.size()) {
    throw ShapeError("optimizer state does not match network");
  }
  return g;
}

}  // namespace

json mlp_to_json(const MlpParams& params, const AdamWState* optimizer) {
  json doc{
      {"schema_version", kCheckpointSchemaVersion},
      {"layer_dims", params.layer_dims},
      {"hidden_activation", to_string(params.hidden_activation)},
      {"leaky_slope", params.leaky_slope},
      {"output_activation", to_string(params.output_activation)},
      {"weights", params.weights},
      {"biases", params.biases},
  };
  if (optimizer) {
    doc["optimizer_state"] = json{
        {"step_count", optimizer->step_count},
        {"first_moment", grads_to_json(optimizer->first_moment)},
        {"second_moment", grads_to_json(optimizer->second_moment)},
        {"hyper",
         json{{"lr", optimizer->hyper.lr},
              {"beta1", optimizer->hyper.beta1},
              {"beta2", optimizer->hyper.beta2},
              {"eps", optimizer->hyper.eps},
              {"weight_decay", optimizer->hyper.weight_decay}}},
    };
  }
  return doc;
}

MlpParams mlp_from_json(const json& doc, AdamWState* optimizer) {
  const int version = doc.at("schema_version").get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw DataError("unsupported checkpoint schema version " +
                    std::to_string(version));
  }
  MlpParams p;
  p.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
  p.hidden_activation =
      hidden_act_from_string(doc.at("hidden_activation").get<std::string>());
  p.leaky_slope = doc.value("leaky_slope", 0.01);
  p.output_activation =
      output_act_from_string(doc.at("output_activation").get<std::string>());
  p.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
  p.biases = doc.at("biases").get<std::vector<std::vector<double>>>();
  validate_shapes(p);
  require_finite(p);

  if (optimizer) {
    if (!doc.contains("optimizer_state")) {
      throw DataError("checkpoint has no optimizer state");
    }
    const json& os = doc.at("optimizer_state");
    optimizer->step_count = os.at("step_count").get<long>();
    optimizer->first_moment = grads_from_json(os.at("first_moment"), p);
    optimizer->second_moment = grads_from_json(os.at("second_moment"), p);
    const json& h = os.at("hyper");
    optimizer->hyper.lr = h.at("lr").get<double>();
    optimizer->hyper.beta1 = h.at("beta1").get<double>();
    optimizer->hyper.beta2 = h.at("beta2").get<double>();
    optimizer->hyper.eps = h.at("eps").get<double>();
    optimizer->hyper.weight_decay = h.at("weight_decay").get<double>();
  }
  return p;
}

void save_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in '" + path.string() + "': " + e.what());
  }
  return doc;
}

}  // namespace costyle::nn
