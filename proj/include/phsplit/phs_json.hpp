#pragma once

#include <string>

#include <json.hpp>

#include "phsplit/phs.hpp"

namespace phsplit {

/// Parses JSON text, mapping parse failures to ConfigError with a
/// line/column diagnostic.
[[nodiscard]] nlohmann::json parse_json_text(const std::string& text);

/// Dense matrix from a row-major nested array. Throws ConfigError on ragged
/// rows or non-numeric entries.
[[nodiscard]] Matrix matrix_from_json(const nlohmann::json& v, const std::string& name);

/// Coupled-system description:
///
///   { "J1": [[..]], "J2": [[..]], "Jtilde": [[..]],
///     "R1": [[..]], "R2": [[..]], "Q1": [[..]], "Q2": [[..]],
///     "Qco": 50.0,                       // optional coupling-coordinate weight
///     "B": [[..]],                       // optional, default no ports
///     "u": {"kind": "zero"}              // or {"kind": "constant", "value": [..]}
///   }
///
/// When "Qco" is present, block 1's energy weight is blkdiag(Q1, Qco) and J1
/// must be one dimension larger than Q1 (the extra coordinate is the stored
/// coupling displacement). Unknown keys are rejected. Structural validation
/// (skewness, PSD-ness, symmetry) happens in make_coupled_phs.
[[nodiscard]] CoupledLinearPhs coupled_phs_from_json(const nlohmann::json& v);

}  // namespace phsplit
