#pragma once

#include <string>

#include <json.hpp>

#include "crvb/fields.hpp"

namespace crvb {

/// Contents of a field container: a chart plus one or more r x r components.
/// kind is "matrix" (one component) or "form" (n-1 components).
struct FieldFile {
  ChartPtr chart;
  std::string kind = "matrix";
  std::vector<MatrixField> components;
  /// Header tag: the values were sampled from exact polynomial data.
  bool sampled_exact = false;

  static FieldFile from(const MatrixField& f);
  static FieldFile from(const ConnectionForm& w);
  MatrixField matrix() const;
  ConnectionForm form() const;
};

/// Binary container "CRVB1": little-endian header then (re, im) float64 pairs,
/// point-major (x^n fastest), component, then column-major entries. Points
/// outside the defined set are written as NaN. Writes are atomic.
void save_field(const std::string& path, const FieldFile& f);
FieldFile load_field(const std::string& path);

/// Polynomial <-> JSON: {"m", "rank", "terms": [{"exponent", "re", "im"}]}
/// with terms in lexicographic exponent order.
nlohmann::json polynomial_to_json(const MatrixPolynomial& p);
MatrixPolynomial polynomial_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);
/// Atomic text write (temp file + rename).
void write_text(const std::string& path, const std::string& text);

}  // namespace crvb
