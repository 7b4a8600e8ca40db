#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "gridsafe/error.hpp"
#include "gridsafe/io.hpp"
#include "gridsafe/learner/safety_sac.hpp"

namespace gridsafe {

inline constexpr int checkpoint_version = 1;

namespace detail {

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline nlohmann::json mlp_to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) {
    nlohmann::json w = nlohmann::json::array(), b = nlohmann::json::array();
    for (Eigen::Index i = 0; i < l.w.rows(); ++i)
      for (Eigen::Index j = 0; j < l.w.cols(); ++j) w.push_back(l.w(i, j));
    for (Eigen::Index i = 0; i < l.b.size(); ++i) b.push_back(l.b(i));
    layers.push_back({{"rows", l.w.rows()}, {"cols", l.w.cols()}, {"w", w}, {"b", b}});
  }
  return {{"hidden", activation_name(m.hidden_activation())},
          {"output", activation_name(m.output_activation())},
          {"layers", layers}};
}

/// Loads parameters into `m`, whose shapes must already match.
inline void mlp_from_json(const nlohmann::json& j, Mlp& m, const std::string& name) {
  const auto& layers = j.at("layers");
  if (layers.size() != m.layers().size()) throw ParseError("checkpoint " + name + ": layer count mismatch");
  if (j.at("hidden").get<std::string>() != activation_name(m.hidden_activation()) ||
      j.at("output").get<std::string>() != activation_name(m.output_activation()))
    throw ParseError("checkpoint " + name + ": activation mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    DenseLayer& l = m.layers()[k];
    const auto& lj = layers[k];
    if (lj.at("rows").get<Eigen::Index>() != l.w.rows() || lj.at("cols").get<Eigen::Index>() != l.w.cols())
      throw ParseError("checkpoint " + name + ": layer " + std::to_string(k) + " shape mismatch");
    const auto& w = lj.at("w");
    const auto& b = lj.at("b");
    if (static_cast<Eigen::Index>(w.size()) != l.w.size() || static_cast<Eigen::Index>(b.size()) != l.b.size())
      throw ParseError("checkpoint " + name + ": layer " + std::to_string(k) + " size mismatch");
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < l.w.rows(); ++i)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(i, c) = w[n++].get<double>();
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = b[static_cast<std::size_t>(i)].get<double>();
  }
}

}  // namespace detail

/// JSON text of every parameter array, lambda and the step counter.
/// Doubles are written in shortest round-trip form, so loading restores
/// bit-identical values.
inline std::string save_checkpoint(const SafetySac& learner) {
  const SacNetworks& n = learner.networks();
  nlohmann::json j = {
      {"format", "gridsafe-checkpoint"},
      {"version", checkpoint_version},
      {"steps", learner.steps()},
      {"lambda", learner.lambda()},
      {"networks",
       {{"encoder", detail::mlp_to_json(n.encoder)},
        {"q1", detail::mlp_to_json(n.q1)},
        {"q2", detail::mlp_to_json(n.q2)},
        {"qc", detail::mlp_to_json(n.qc)},
        {"policy", detail::mlp_to_json(n.policy)},
        {"q1_target", detail::mlp_to_json(n.q1_target)},
        {"q2_target", detail::mlp_to_json(n.q2_target)},
        {"qc_target", detail::mlp_to_json(n.qc_target)}}}};
  return j.dump();
}

/// Restores parameters into a learner built with the same case and config.
inline void load_checkpoint(const std::string& text, SafetySac& learner) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "gridsafe-checkpoint") throw ParseError("checkpoint: unknown format");
    if (j.at("version").get<int>() != checkpoint_version)
      throw ParseError("checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
    SacNetworks& n = learner.networks();
    const auto& nj = j.at("networks");
    detail::mlp_from_json(nj.at("encoder"), n.encoder, "encoder");
    detail::mlp_from_json(nj.at("q1"), n.q1, "q1");
    detail::mlp_from_json(nj.at("q2"), n.q2, "q2");
    detail::mlp_from_json(nj.at("qc"), n.qc, "qc");
    detail::mlp_from_json(nj.at("policy"), n.policy, "policy");
    detail::mlp_from_json(nj.at("q1_target"), n.q1_target, "q1_target");
    detail::mlp_from_json(nj.at("q2_target"), n.q2_target, "q2_target");
    detail::mlp_from_json(nj.at("qc_target"), n.qc_target, "qc_target");
    learner.set_lambda(j.at("lambda").get<double>());
    learner.set_steps(j.at("steps").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace gridsafe
