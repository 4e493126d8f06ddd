#pragma once

#include <dsr/model.hpp>

#include <filesystem>
#include <string>

namespace dsr {

/// Topology file schema (JSON object, unknown keys rejected):
///
///   {
///     "name":   "optional label",
///     "nodes":  [1, 2, 3, 4, 5],
///     "links":  [{"from": 1, "to": 2, "cost": {"kind": "linear", "coeffs": [1]}}, ...],
///     "failed": 4,
///     "new":    5,
///     "M":      4,
///     "k":      2
///   }
///
/// Cost kinds: "linear" with coeffs [c]; "quadratic" with coeffs [a, b]
/// meaning a*z^2 + b*z. Coefficients are JSON integers or strings holding
/// exact rationals ("3/2", "0.25").
RepairInstance parse_instance(const std::string& json_text);
RepairInstance load_instance(const std::filesystem::path& path);
std::string instance_to_json(const RepairInstance& instance);

}  // namespace dsr
