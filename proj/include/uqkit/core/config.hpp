#ifndef UQKIT_CORE_CONFIG_HPP_
#define UQKIT_CORE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uqkit/core/error.hpp"

namespace uqkit {

/*
 * Run-level settings shared by the pipelines. Method blocks are kept as raw
 * JSON objects; each pipeline interprets its own block.
 *
 *   {"seed": 7, "surrogate_size": 500, "residual_extra_size": 1000,
 *    "density_size": 100000, "quantile": {"alpha": 0.95}}
 */
struct RunConfig {
  std::uint64_t seed = 0;
  std::int64_t surrogate_size = 500;         // L_n
  std::int64_t residual_extra_size = 1000;   // N_{1,n}
  std::int64_t density_size = 100000;        // N_{2,n}
  nlohmann::json methods = nlohmann::json::object();

  // Lists every offending field instead of stopping at the first one.
  std::vector<std::string> validation_errors() const {
    std::vector<std::string> errors;
    if (surrogate_size < 1) errors.emplace_back("surrogate_size must be >= 1");
    if (residual_extra_size < 1) {
      errors.emplace_back("residual_extra_size must be >= 1");
    }
    if (density_size < 1) errors.emplace_back("density_size must be >= 1");
    if (!methods.is_object()) errors.emplace_back("method blocks must be objects");
    return errors;
  }

  void validate() const {
    const auto errors = validation_errors();
    if (errors.empty()) return;
    std::string message = "invalid run config:";
    for (const auto &e : errors) message += " " + e + ";";
    throw DomainError(message);
  }

  nlohmann::json method(const std::string &name) const {
    const auto it = methods.find(name);
    return it == methods.end() ? nlohmann::json::object() : *it;
  }
};

inline RunConfig run_config_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw DataError("run config must be a JSON object");
  RunConfig config;
  std::vector<std::string> errors;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &key = it.key();
    const auto &value = it.value();
    auto read_int = [&](std::int64_t *dst) {
      if (value.is_number_integer()) {
        *dst = value.get<std::int64_t>();
      } else {
        errors.push_back(key + " must be an integer");
      }
    };
    if (key == "seed") {
      if (value.is_number_unsigned() ||
          (value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        config.seed = value.get<std::uint64_t>();
      } else {
        errors.emplace_back("seed must be a non-negative integer");
      }
    } else if (key == "surrogate_size") {
      read_int(&config.surrogate_size);
    } else if (key == "residual_extra_size") {
      read_int(&config.residual_extra_size);
    } else if (key == "density_size") {
      read_int(&config.density_size);
    } else if (value.is_object()) {
      config.methods[key] = value;
    } else {
      // flat scalars (threads, out_dir, ...) belong to the caller
      config.methods["global"][key] = value;
    }
  }
  for (const auto &e : config.validation_errors()) errors.push_back(e);
  if (!errors.empty()) {
    std::string message = "invalid run config:";
    for (const auto &e : errors) message += " " + e + ";";
    throw DomainError(message);
  }
  return config;
}

inline nlohmann::json to_json(const RunConfig &config) {
  nlohmann::json j = config.methods;
  j.erase("global");
  if (config.methods.contains("global")) {
    for (auto it = config.methods["global"].begin();
         it != config.methods["global"].end(); ++it) {
      j[it.key()] = it.value();
    }
  }
  j["seed"] = config.seed;
  j["surrogate_size"] = config.surrogate_size;
  j["residual_extra_size"] = config.residual_extra_size;
  j["density_size"] = config.density_size;
  return j;
}

}  // namespace uqkit

#endif  // UQKIT_CORE_CONFIG_HPP_
