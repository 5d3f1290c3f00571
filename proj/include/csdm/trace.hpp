#pragma once
// Iteration trace serialization. CSV layout, one row per iterate:
//
//   k,J,d_norm,t,I_A,I_W,x1,...,xn
//
// Numbers use shortest round-trip decimal form (std::to_chars), so writing
// and re-parsing reproduces the exact doubles and identical runs produce
// byte-identical files. Index sets are ascending labels joined by ';', empty
// cell for the empty set. The t cell is empty on the first record.

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "csdm/core.hpp"

namespace csdm {

namespace detail {

inline std::string shortest_decimal(double v) {
  char buf[64];
  std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& cell, int lineno) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  std::from_chars_result r = std::from_chars(begin, end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ParseError("trace line " + std::to_string(lineno) +
                         ": malformed number '" + cell + "'",
                     lineno);
  return v;
}

inline std::string join_labels(const IndexSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(s[i]);
  }
  return out;
}

inline IndexSet split_labels(const std::string& cell, int lineno) {
  IndexSet out;
  std::istringstream ss(cell);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty())
      throw ParseError("trace line " + std::to_string(lineno) +
                           ": malformed index set '" + cell + "'",
                       lineno);
    out.push_back(std::stoi(part));
  }
  return out;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os,
                            const std::vector<IterateRecord>& trace, int dim) {
  os << "k,J,d_norm,t,I_A,I_W";
  for (int i = 1; i <= dim; ++i) os << ",x" << i;
  os << "\n";
  for (const IterateRecord& rec : trace) {
    os << rec.k << ',' << detail::shortest_decimal(rec.J) << ','
       << detail::shortest_decimal(rec.d_norm) << ',';
    if (rec.t) os << detail::shortest_decimal(*rec.t);
    os << ',' << detail::join_labels(rec.active) << ','
       << detail::join_labels(rec.working);
    for (Eigen::Index i = 0; i < rec.u.size(); ++i)
      os << ',' << detail::shortest_decimal(rec.u(i));
    os << "\n";
  }
}

inline std::vector<IterateRecord> parse_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("trace: missing header line", 1);
  int dim = 0;
  {
    std::istringstream hs(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.size() < 7 || cols[0] != "k" || cols[1] != "J" ||
        cols[2] != "d_norm" || cols[3] != "t" || cols[4] != "I_A" ||
        cols[5] != "I_W")
      throw ParseError("trace: unexpected header '" + line + "'", 1);
    dim = static_cast<int>(cols.size()) - 6;
  }

  std::vector<IterateRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (static_cast<int>(cells.size()) != 6 + dim)
      throw ParseError("trace line " + std::to_string(lineno) +
                           ": expected " + std::to_string(6 + dim) + " cells",
                       lineno);
    IterateRecord rec;
    rec.k = std::stoi(cells[0]);
    rec.J = detail::parse_double(cells[1], lineno);
    rec.d_norm = detail::parse_double(cells[2], lineno);
    if (!cells[3].empty()) rec.t = detail::parse_double(cells[3], lineno);
    rec.active = detail::split_labels(cells[4], lineno);
    rec.working = detail::split_labels(cells[5], lineno);
    rec.u.resize(dim);
    for (int i = 0; i < dim; ++i)
      rec.u(i) = detail::parse_double(cells[static_cast<std::size_t>(6 + i)],
                                      lineno);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace csdm
