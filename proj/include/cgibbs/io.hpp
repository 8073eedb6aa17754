#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgibbs/bonds.hpp"
#include "cgibbs/model.hpp"
#include "cgibbs/transform.hpp"
#include "cgibbs/verify.hpp"

namespace cg {

inline constexpr int schema_version = 1;

// Malformed or schema-violating input file. what() names the file and the line/column or field path.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

// {window_r, interior: [[x0, x1, spin], ...], boundary: [...]}; doubles round-trip exactly.
Json to_json(const Configuration& config);
Configuration configuration_from_json(const Json& j, const std::string& where = "configuration");
// Hex FNV-1a of the compact serialization.
std::string config_hash(const Configuration& config);

// {config_hash, scope, edges: [[a, b], ...]}.
Json to_json(const BondSet& bonds, const Configuration& config);
// Throws SchemaError when the stored hash does not match config.
BondSet bonds_from_json(const Json& j, const Configuration& config, const std::string& where = "bonds");

Json to_json(const TaperParams& p);
Json to_json(const TransformResult& r);
Json to_json(const SuiteReport& r);

// Parses text; parse errors report the line and column.
Json parse_json(const std::string& text, const std::string& where);
Json read_json_file(const std::string& path);
// One JSON value per nonempty line.
std::vector<Json> read_json_lines(const std::string& path);

// Model file: schema_version, name, norm, spins, activity, xi, eps, mollify_width,
// interactions [{spins: [a, b], kind, ...}], default, window, sampler {burn_in, thinning, move_sigma}.
Model model_from_json(const Json& j, const std::string& where);
Model load_model(const std::string& path);
Json to_json(const Model& m);

// "tau,R,n,nprime,delta".
TaperParams parse_taper(const std::string& spec, const DecomposedPotential& dec);

} // namespace cg
