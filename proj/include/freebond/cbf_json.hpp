#pragma once

#include <string>

#include <json.hpp>

#include "freebond/cbf.hpp"

// Custom specs parse from {"a": ..., "b": ..., "atoms": [[x, m], ...]}.

namespace freebond {

inline CbfSpec cbf_spec_from_json(const nlohmann::json& j) {
  CbfSpec spec;
  if (!j.is_object()) throw std::invalid_argument("cbf spec: expected a JSON object");
  spec.a = j.value("a", 0.0);
  spec.b = j.value("b", 0.0);
  if (j.contains("atoms")) {
    if (!j["atoms"].is_array()) {
      throw std::invalid_argument("cbf spec: \"atoms\" must be an array of [x, m] pairs");
    }
    for (const auto& pair : j["atoms"]) {
      if (!pair.is_array() || pair.size() != 2) {
        throw std::invalid_argument("cbf spec: each atom must be a [x, m] pair");
      }
      spec.atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
  }
  spec.validate();
  return spec;
}

inline CbfSpec cbf_spec_from_json_text(const std::string& text) {
  return cbf_spec_from_json(nlohmann::json::parse(text));
}

inline nlohmann::json cbf_spec_to_json(const CbfSpec& spec) {
  nlohmann::json j;
  j["a"] = spec.a;
  j["b"] = spec.b;
  auto arr = nlohmann::json::array();
  for (const auto& at : spec.atoms) arr.push_back({at.location, at.mass});
  j["atoms"] = arr;
  return j;
}

}  // namespace freebond
