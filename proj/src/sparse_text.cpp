#include "asiplab/sparse_text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace asiplab {

namespace {

Scalar parse_label(const std::string& token, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "unreadable label '" + token + "'");
  }
  if (used != token.size())
    throw ParseError(line, "unreadable label '" + token + "'");
  if (v == -1.0 || v == 0.0) return -1.0;
  if (v == 1.0) return 1.0;
  throw ParseError(line, "label must be -1, 0, or +1");
}

std::pair<Index, Scalar> parse_feature(const std::string& token,
                                       std::size_t line) {
  const std::size_t colon = token.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
    throw ParseError(line, "feature must be written index:value, got '" +
                               token + "'");
  long idx = 0;
  std::size_t used = 0;
  try {
    idx = std::stol(token.substr(0, colon), &used);
  } catch (const std::exception&) {
    throw ParseError(line, "unreadable feature index in '" + token + "'");
  }
  if (used != colon || idx < 1)
    throw ParseError(line, "feature indices are 1-based positive integers");
  double val = 0;
  const std::string vtok = token.substr(colon + 1);
  try {
    val = std::stod(vtok, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "unreadable feature value in '" + token + "'");
  }
  if (used != vtok.size())
    throw ParseError(line, "unreadable feature value in '" + token + "'");
  if (!std::isfinite(val))
    throw ParseError(line, "feature value must be finite");
  return {static_cast<Index>(idx - 1), val};
}

}  // namespace

std::vector<Record> load_sparse_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);

  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line

    const Scalar label = parse_label(token, line_no);
    std::vector<std::pair<Index, Scalar>> features;
    while (tokens >> token) features.push_back(parse_feature(token, line_no));

    std::sort(features.begin(), features.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Index> indices;
    std::vector<Scalar> values;
    indices.reserve(features.size());
    values.reserve(features.size());
    Index dim = 0;
    for (const auto& [idx, val] : features) {
      if (!indices.empty() && indices.back() == idx)
        throw ParseError(line_no, "duplicate feature index " +
                                      std::to_string(idx + 1));
      indices.push_back(idx);
      values.push_back(val);
      dim = idx + 1;
    }
    records.emplace_back(
        FeatureVector::sparse(dim, std::move(indices), std::move(values)),
        label);
  }
  if (records.empty())
    throw std::invalid_argument(path + " holds no records");
  return records;
}

void save_sparse_text(const std::string& path,
                      const std::vector<Record>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  for (const Record& r : records) {
    out << (r.label > 0 ? "+1" : "-1");
    auto emit = [&](Index idx, Scalar val) {
      if (val == 0.0) return;
      std::snprintf(buf, sizeof(buf), "%.17g", val);
      out << ' ' << (idx + 1) << ':' << buf;
    };
    if (r.features.is_sparse()) {
      const auto& idx = r.features.sparse_indices();
      const auto& val = r.features.sparse_values();
      for (std::size_t k = 0; k < idx.size(); ++k) emit(idx[k], val[k]);
    } else {
      const auto& v = r.features.dense_values();
      for (Index i = 0; i < v.size(); ++i) emit(i, v[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace asiplab
