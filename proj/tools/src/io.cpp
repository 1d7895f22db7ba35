#include "qcgain/cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcgain/errors.hpp"

namespace qcgain::cli {

namespace {

using nlohmann::json;

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(source + ":" + std::to_string(line_of(text, e.byte)) + ": malformed JSON (" + e.what() + ")");
  }
}

Eigen::MatrixXd read_matrix(const json& doc, const char* key, const std::string& source) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(source + ": missing field \"" + key + "\"");
  const json& rows = *it;
  const std::string where = source + ": field \"" + key + "\"";
  if (!rows.is_array() || rows.empty()) throw ParseError(where + " must be a non-empty array of rows");
  const std::size_t ncols = rows.front().is_array() ? rows.front().size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_array()) throw ParseError(where + " row " + std::to_string(i) + " is not an array");
    if (row.size() != ncols) throw ParseError(where + " row " + std::to_string(i) + " has the wrong length");
    for (std::size_t j = 0; j < ncols; ++j) {
      if (!row[j].is_number()) {
        throw ParseError(where + " entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is not a number");
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return out;
}

double read_number(const json& doc, const char* key, const std::string& source) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(source + ": missing field \"" + key + "\"");
  if (!it->is_number()) throw ParseError(source + ": field \"" + key + "\" is not a number");
  return it->get<double>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(v))
    throw ParseError(std::string(what) + ": \"" + copy + "\" is not a number");
  return v;
}

}  // namespace

std::vector<double> SweepGrid::points() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    out[static_cast<std::size_t>(k)] = beta_min + (beta_max - beta_min) * k / (count - 1);
  return out;
}

void RunConfig::validate() const {
  if (classes.empty()) throw ParseError("no multiplier class selected");
  if (sweep) {
    if (sweep->count < 2) throw ParseError("sweep count must be at least 2");
    if (sweep->beta_min > sweep->beta_max) throw ParseError("sweep minimum exceeds maximum");
  }
  if (command != Command::kVerify && system_path.empty()) throw ParseError("a system file is required");
  if (command == Command::kSweep && !sweep) throw ParseError("sweep needs --sweep MIN:MAX:COUNT");
  if (!(resolution > 0.0)) throw ParseError("resolution must be positive");
  if (eps < 0.0) throw ParseError("eps must be nonnegative");
  if (alpha > beta && command == Command::kAnalyze) throw ParseError("alpha exceeds beta");
  if (jobs < 0) throw ParseError("jobs must be nonnegative");
}

StateSpace parse_system_json(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
  StateSpaceData d;
  d.A = read_matrix(doc, "A", source);
  d.B1 = read_matrix(doc, "B1", source);
  d.B2 = read_matrix(doc, "B2", source);
  d.C1 = read_matrix(doc, "C1", source);
  d.C2 = read_matrix(doc, "C2", source);
  d.D11 = read_matrix(doc, "D11", source);
  d.D12 = read_matrix(doc, "D12", source);
  d.D21 = read_matrix(doc, "D21", source);
  d.D22 = read_matrix(doc, "D22", source);
  return StateSpace(std::move(d));
}

StateSpace parse_system_file(const std::string& path) { return parse_system_json(read_file(path), path); }

SweepGrid parse_sweep_grid(std::string_view spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : spec.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw ParseError("sweep must look like MIN:MAX:COUNT");
  SweepGrid g;
  g.beta_min = parse_double(spec.substr(0, c1), "sweep minimum");
  g.beta_max = parse_double(spec.substr(c1 + 1, c2 - c1 - 1), "sweep maximum");
  const std::string_view cnt = spec.substr(c2 + 1);
  const auto [ptr, ec] = std::from_chars(cnt.data(), cnt.data() + cnt.size(), g.count);
  if (ec != std::errc() || ptr != cnt.data() + cnt.size()) throw ParseError("sweep count must be an integer");
  if (g.count < 2) throw ParseError("sweep count must be at least 2");
  if (g.beta_min > g.beta_max) throw ParseError("sweep minimum exceeds maximum");
  return g;
}

std::vector<MultiplierTag> parse_classes(std::string_view spec) {
  std::vector<MultiplierTag> out;
  auto add = [&](MultiplierTag t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string_view tok = spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start);
    if (tok == "all") {
      add(MultiplierTag::kDiagonal);
      add(MultiplierTag::kVertexConvex);
      add(MultiplierTag::kIncrementalComplete);
    } else if (tok == "md") {
      add(MultiplierTag::kDiagonal);
    } else if (tok == "mc") {
      add(MultiplierTag::kVertexConvex);
    } else if (tok == "minc") {
      add(MultiplierTag::kIncrementalComplete);
    } else {
      throw ParseError("unknown multiplier class \"" + std::string(tok) + "\" (expected md, mc, minc or all)");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

Mutant parse_mutant_file(const std::string& path) {
  const std::string text = read_file(path);
  const json doc = parse_json(text, path);
  if (!doc.is_object()) throw ParseError(path + ": top level must be an object");
  const Eigen::MatrixXd m = read_matrix(doc, "M", path);
  if (m.rows() != m.cols() || m.rows() % 2 != 0) throw DimensionMismatch(path + ": M must be 2m x 2m");
  Mutant out{SymMatrix::from_dense(m, 1e-9), Sector(read_number(doc, "alpha", path), read_number(doc, "beta", path))};
  return out;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace qcgain::cli
