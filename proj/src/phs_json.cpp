#include "phsplit/phs_json.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace phsplit {

using nlohmann::json;

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is a 1-based offset into the input; derive line/column for the
    // diagnostic the CLI surfaces with exit code 2.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("JSON parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
}

Matrix matrix_from_json(const json& v, const std::string& name) {
  if (!v.is_array()) {
    throw ConfigError(name + " must be an array of rows");
  }
  const Index rows = static_cast<Index>(v.size());
  if (rows == 0) {
    throw ConfigError(name + " must have at least one row");
  }
  Index cols = -1;
  Matrix m;
  for (Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array()) {
      throw ConfigError(name + " row " + std::to_string(i) + " is not an array");
    }
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw ConfigError(name + " row " + std::to_string(i) + " has " +
                        std::to_string(row.size()) + " entries, expected " +
                        std::to_string(cols));
    }
    for (Index j = 0; j < cols; ++j) {
      const json& e = row[static_cast<std::size_t>(j)];
      if (!e.is_number()) {
        throw ConfigError(name + " entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") is not a number");
      }
      m(i, j) = e.get<double>();
    }
  }
  ensure_finite(m, name);
  return m;
}

namespace {

Vector vector_from_json(const json& v, const std::string& name) {
  if (!v.is_array()) {
    throw ConfigError(name + " must be an array");
  }
  Vector out(static_cast<Index>(v.size()));
  for (Index i = 0; i < out.size(); ++i) {
    const json& e = v[static_cast<std::size_t>(i)];
    if (!e.is_number()) {
      throw ConfigError(name + " entry " + std::to_string(i) + " is not a number");
    }
    out(i) = e.get<double>();
  }
  ensure_finite(out, name);
  return out;
}

InputSignal input_from_json(const json& v, Index d) {
  if (!v.is_object()) {
    throw ConfigError("u must be an object with a \"kind\" field");
  }
  for (const auto& [key, _] : v.items()) {
    if (key != "kind" && key != "value") {
      throw ConfigError("u has unknown key \"" + key + "\"");
    }
  }
  if (!v.contains("kind") || !v["kind"].is_string()) {
    throw ConfigError("u.kind must be a string");
  }
  const std::string kind = v["kind"].get<std::string>();
  if (kind == "zero") {
    if (v.contains("value")) {
      throw ConfigError("u of kind \"zero\" takes no value");
    }
    return InputSignal::zero(d);
  }
  if (kind == "constant") {
    if (!v.contains("value")) {
      throw ConfigError("u of kind \"constant\" requires a value array");
    }
    Vector value = vector_from_json(v["value"], "u.value");
    if (value.size() != d) {
      throw ConfigError("u.value has size " + std::to_string(value.size()) +
                        " but B has " + std::to_string(d) + " columns");
    }
    return InputSignal::constant(std::move(value));
  }
  throw ConfigError("u.kind must be \"zero\" or \"constant\", got \"" + kind + "\"");
}

}  // namespace

CoupledLinearPhs coupled_phs_from_json(const json& v) {
  if (!v.is_object()) {
    throw ConfigError("system description must be a JSON object");
  }
  static const std::set<std::string> kKnown = {"J1", "J2", "Jtilde", "R1", "R2",
                                               "Q1", "Q2", "Qco",    "B",  "u"};
  for (const auto& [key, _] : v.items()) {
    if (kKnown.find(key) == kKnown.end()) {
      throw ConfigError("system description has unknown key \"" + key + "\"");
    }
  }
  for (const char* req : {"J1", "J2", "Jtilde", "R1", "R2", "Q1", "Q2"}) {
    if (!v.contains(req)) {
      throw ConfigError(std::string("system description is missing \"") + req + "\"");
    }
  }

  const Matrix j1 = matrix_from_json(v["J1"], "J1");
  const Matrix j2 = matrix_from_json(v["J2"], "J2");
  const Matrix jt = matrix_from_json(v["Jtilde"], "Jtilde");
  const Matrix r1 = matrix_from_json(v["R1"], "R1");
  const Matrix r2 = matrix_from_json(v["R2"], "R2");
  Matrix q1 = matrix_from_json(v["Q1"], "Q1");
  const Matrix q2 = matrix_from_json(v["Q2"], "Q2");

  if (v.contains("Qco")) {
    if (!v["Qco"].is_number()) {
      throw ConfigError("Qco must be a scalar");
    }
    const Index m = q1.rows();
    if (j1.rows() != m + 1) {
      throw ConfigError("with Qco present, J1 must be one dimension larger than Q1 (got J1 " +
                        std::to_string(j1.rows()) + ", Q1 " + std::to_string(m) + ")");
    }
    Matrix q1ext = Matrix::Zero(m + 1, m + 1);
    q1ext.topLeftCorner(m, m) = q1;
    q1ext(m, m) = v["Qco"].get<double>();
    q1 = std::move(q1ext);
  }

  const Index n = j1.rows() + j2.rows();
  Matrix b(n, 0);
  if (v.contains("B")) {
    b = matrix_from_json(v["B"], "B");
  }
  InputSignal u = InputSignal::zero(b.cols());
  if (v.contains("u")) {
    u = input_from_json(v["u"], b.cols());
  }
  return make_coupled_phs(j1, j2, jt, r1, r2, q1, q2, std::move(b), std::move(u));
}

}  // namespace phsplit
