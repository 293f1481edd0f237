#include "ecgnet/models.hpp"

namespace ecgnet {

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::BaselineLstm: return "baseline";
    case Scheme::ConcatA: return "concat";
    case Scheme::CascadeB: return "cascade";
  }
  throw InvariantError("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "baseline") return Scheme::BaselineLstm;
  if (name == "concat") return Scheme::ConcatA;
  if (name == "cascade") return Scheme::CascadeB;
  throw Error("unknown scheme '" + name + "' (expected baseline, concat or cascade)");
}

std::size_t CnnBackboneConfig::sequence_length(std::size_t input_length) const {
  std::size_t len = input_length;
  for (const auto& l : layers) {
    if (!l.pool) continue;
    require(len >= 2, "input too short for the CNN pooling stages");
    len = (len - 2) / 2 + 1;
  }
  return len;
}

void ModelConfig::validate() const {
  require(num_classes >= 2, "model needs at least two classes");
  require(lstm_hidden >= 1, "LSTM hidden size must be positive");
  require(input_length >= 1, "input length must be positive");
  require(lstm_dropout >= 0.0 && lstm_dropout < 1.0, "LSTM dropout must be in [0, 1)");
  if (scheme != Scheme::BaselineLstm) {
    require(!cnn.layers.empty(), "CNN backbone needs at least one layer");
    require(cnn.dropout >= 0.0 && cnn.dropout < 1.0, "CNN dropout must be in [0, 1)");
    for (const auto& l : cnn.layers) require(l.out_channels >= 1 && l.kernel >= 1, "invalid CNN layer");
    require(cnn.sequence_length(input_length) >= 1, "input too short for the CNN");
  }
}

std::size_t ModelConfig::fusion_width() const {
  return scheme == Scheme::ConcatA ? cnn.feature_dim() + lstm_hidden : lstm_hidden;
}

std::size_t ModelConfig::parameter_count() const {
  std::size_t n = 0;
  if (scheme != Scheme::BaselineLstm) {
    std::size_t in = 1;
    for (const auto& l : cnn.layers) {
      n += l.out_channels * in * l.kernel + l.out_channels;  // conv
      n += 2 * l.out_channels;                               // batch norm affine
      in = l.out_channels;
    }
  }
  const std::size_t f = scheme == Scheme::CascadeB ? cnn.feature_dim() : 1;
  const std::size_t h = lstm_hidden;
  n += 2 * (4 * h * f + 4 * h * h + 4 * h);
  n += num_classes * fusion_width() + num_classes;
  return n;
}

ModelConfig ModelConfig::tiny(Scheme scheme) {
  ModelConfig cfg;
  cfg.scheme = scheme;
  cfg.cnn.layers = {{8, 7, true}, {16, 5, true}, {32, 5, false}, {64, 3, false}};
  cfg.lstm_hidden = 32;
  return cfg;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : cfg.cnn.layers) {
    layers.push_back({{"out_channels", l.out_channels}, {"kernel", l.kernel}, {"pool", l.pool}});
  }
  return {{"scheme", scheme_name(cfg.scheme)},
          {"cnn", {{"layers", layers}, {"dropout", cfg.cnn.dropout}}},
          {"lstm_hidden", cfg.lstm_hidden},
          {"lstm_dropout", cfg.lstm_dropout},
          {"num_classes", cfg.num_classes},
          {"input_length", cfg.input_length}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig cfg;
    cfg.scheme = parse_scheme(j.at("scheme").get<std::string>());
    cfg.cnn.layers.clear();
    for (const auto& l : j.at("cnn").at("layers")) {
      cfg.cnn.layers.push_back(
          {l.at("out_channels").get<std::size_t>(), l.at("kernel").get<std::size_t>(), l.at("pool").get<bool>()});
    }
    cfg.cnn.dropout = j.at("cnn").at("dropout").get<double>();
    cfg.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    cfg.lstm_dropout = j.at("lstm_dropout").get<double>();
    cfg.num_classes = j.at("num_classes").get<std::size_t>();
    cfg.input_length = j.at("input_length").get<std::size_t>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid model config: ") + e.what());
  }
}

}  // namespace ecgnet
