#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "gpmpc/gp/dataset.hpp"
#include "gpmpc/gp/hyperparams.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::gp {

inline std::string format_hyperparams(const Hyperparams& h) {
  util::KeyValues kv;
  kv["dim"] = std::to_string(h.dim());
  kv["signal_std"] = util::format_double(h.signal_std);
  kv["noise_std"] = util::format_double(h.noise_std);
  kv["mean_offset"] = util::format_double(h.mean_offset);
  for (Index i = 0; i < h.dim(); ++i) {
    kv["lengthscale." + std::to_string(i + 1)] = util::format_double(h.lengthscales[i]);
    kv["mean_slope." + std::to_string(i + 1)] = util::format_double(h.mean_slope[i]);
  }
  return util::format_key_values(kv);
}

inline Hyperparams parse_hyperparams(const std::string& text) {
  const auto kv = util::parse_key_values(text, "hyperparameter file");
  const double dim = util::kv_double(kv, "dim");
  if (dim < 0 || dim != static_cast<double>(static_cast<Index>(dim)))
    throw ParseError("hyperparameter file: invalid dim");
  const Index d = static_cast<Index>(dim);
  Hyperparams h = Hyperparams::isotropic(d, 1.0, 1.0, 1.0);
  h.signal_std = util::kv_double(kv, "signal_std");
  h.noise_std = util::kv_double(kv, "noise_std");
  h.mean_offset = util::kv_double(kv, "mean_offset");
  for (Index i = 0; i < d; ++i) {
    h.lengthscales[i] = util::kv_double(kv, "lengthscale." + std::to_string(i + 1));
    h.mean_slope[i] = util::kv_double(kv, "mean_slope." + std::to_string(i + 1));
  }
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("hyperparameter file: ") + e.what());
  }
  return h;
}

/// Feature columns followed by one label column, with a header row.
inline std::string format_dataset_csv(const Dataset& ds, const std::vector<std::string>& feature_names = {},
                                      const std::string& label_name = "label") {
  std::ostringstream out;
  for (Index j = 0; j < ds.dim(); ++j)
    out << (j < static_cast<Index>(feature_names.size()) ? feature_names[j] : "x" + std::to_string(j + 1)) << ",";
  out << label_name << "\n";
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) out << util::format_double(ds.X(i, j)) << ",";
    out << util::format_double(ds.y[i]) << "\n";
  }
  return out.str();
}

inline Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset CSV: missing header", 1);
  const auto header = util::split(util::trim(line), ',');
  if (header.size() < 2) throw ParseError("dataset CSV: need at least one feature and a label", 1);
  const Index d = static_cast<Index>(header.size()) - 1;
  std::vector<double> values;
  std::size_t row = 1;
  Index n = 0;
  while (std::getline(in, line)) {
    ++row;
    if (util::trim(line).empty()) continue;
    const auto cells = util::split(util::trim(line), ',');
    if (static_cast<Index>(cells.size()) != d + 1) throw ParseError("dataset CSV: wrong number of columns", row);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      if (!util::parse_double(cells[c], v)) throw ParseError("dataset CSV: not a number", row, c + 1);
      values.push_back(v);
    }
    ++n;
  }
  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.X(i, j) = values[i * (d + 1) + j];
    ds.y[i] = values[i * (d + 1) + d];
  }
  return ds;
}

}  // namespace gpmpc::gp
