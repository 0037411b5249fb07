#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dagprobit/errors.hpp"
#include "dagprobit/io.hpp"
#include "dagprobit/mcmc.hpp"

namespace dagprobit {

// Columnar trace file: one row per kept iteration. Columns are
//   iter, theta,
//   e<k>_<i>_<j>   edge indicator i -> j per group (q x q block, row major),
//   rho<k>_<i>_<j> upper-triangle partial correlations (when recorded),
//   eff<k>_<s>     post-intervention effect per recorded target s,
// with 1-based node labels.
inline void write_trace_csv(std::ostream& os, const ChainTrace& trace,
                            const std::string& header_comment) {
  if (!header_comment.empty()) os << header_comment << '\n';
  const int q = trace.q;
  const bool partials = !trace.partials[0].empty();
  os << "iter,theta";
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= q; ++i)
      for (int j = 1; j <= q; ++j) os << ",e" << k << '_' << i << '_' << j;
  if (partials)
    for (int k = 1; k <= 2; ++k)
      for (int i = 1; i <= q; ++i)
        for (int j = i + 1; j <= q; ++j) os << ",rho" << k << '_' << i << '_' << j;
  for (int k = 1; k <= 2; ++k)
    for (int s : trace.effect_targets) os << ",eff" << k << '_' << (s + 1);
  os << '\n';

  for (int t = 0; t < trace.kept(); ++t) {
    os << (trace.burnin + t + 1) << ',' << format_double(trace.theta[t]);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) os << ',' << static_cast<int>(trace.edges[k][t](i, j));
    if (partials)
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < q; ++i)
          for (int j = i + 1; j < q; ++j)
            os << ',' << format_double(trace.partials[k][t](i, j));
    for (int k = 0; k < 2; ++k)
      for (int c = 0; c < trace.effects[k][t].size(); ++c)
        os << ',' << format_double(trace.effects[k][t](c));
    os << '\n';
  }
}

// Rebuild a ChainTrace from its file form. Acceptance counters and x_tilde
// live in the fit metadata, not here; the caller fills x_tilde.
inline ChainTrace read_trace_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split_csv_line(line))
      row.push_back(parse_double(cell, "trace"));
    if (row.size() != header.size()) throw IoError("trace: row width differs from header");
    rows.push_back(std::move(row));
  }
  if (header.size() < 2 || header[0] != "iter" || header[1] != "theta")
    throw IoError("trace: unexpected header");
  if (rows.empty()) throw IoError("trace: no kept iterations");

  std::size_t e1 = 0;
  std::size_t rho1 = 0;
  std::vector<int> targets;
  for (const auto& col : header) {
    if (col.rfind("e1_", 0) == 0) ++e1;
    if (col.rfind("rho1_", 0) == 0) ++rho1;
    if (col.rfind("eff1_", 0) == 0)
      targets.push_back(std::stoi(col.substr(5)) - 1);
  }
  const int q = static_cast<int>(std::lround(std::sqrt(static_cast<double>(e1))));
  if (static_cast<std::size_t>(q) * q != e1) throw IoError("trace: edge block is not square");
  const std::size_t expected =
      2 + 2 * e1 + 2 * rho1 + 2 * targets.size();
  if (header.size() != expected) throw IoError("trace: unexpected column count");

  ChainTrace trace;
  trace.q = q;
  trace.effect_targets = targets;
  trace.burnin = static_cast<int>(rows.front()[0]) - 1;
  trace.iters = static_cast<int>(rows.back()[0]);
  for (const auto& row : rows) {
    std::size_t c = 1;
    trace.theta.push_back(row[c++]);
    for (int k = 0; k < 2; ++k) {
      AdjacencyMatrix adj(q, q);
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) adj(i, j) = row[c++] != 0.0 ? 1 : 0;
      trace.edges[k].push_back(std::move(adj));
    }
    if (rho1 > 0) {
      for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(q, q);
        for (int i = 0; i < q; ++i)
          for (int j = i + 1; j < q; ++j) {
            rho(i, j) = row[c];
            rho(j, i) = row[c];
            ++c;
          }
        trace.partials[k].push_back(std::move(rho));
      }
    }
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd eff(static_cast<int>(targets.size()));
      for (int s = 0; s < eff.size(); ++s) eff(s) = row[c++];
      trace.effects[k].push_back(std::move(eff));
    }
  }
  return trace;
}

}  // namespace dagprobit
