#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "freebond/duality.hpp"
#include "freebond/free_semigroup.hpp"
#include "freebond/kendall.hpp"

// Report serialization. All floating point goes out with 17 significant
// digits so runs are byte-reproducible and round-trip exactly; CSV follows
// RFC 4180 (header row, quoting only where needed) after a single comment
// line recording the command and seed.

namespace freebond {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string report_header_comment(const std::string& command,
                                         std::uint64_t seed) {
  std::ostringstream os;
  os << "# freebond command=" << command << " seed=0x" << std::hex << seed << "\n";
  return os.str();
}

// --- duality -----------------------------------------------------------

inline std::string to_csv(const VerificationReport& rep, const std::string& command,
                          std::uint64_t seed) {
  std::ostringstream os;
  os << report_header_comment(command, seed);
  os << "family,t,w,lhs,rhs,residual,lhs_method,rhs_method,testable,pass\n";
  for (const auto& r : rep.rows) {
    os << csv_field(r.family) << ',' << format_double(r.t) << ',' << format_double(r.w)
       << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
       << format_double(r.residual) << ',' << csv_field(r.lhs_method) << ','
       << csv_field(r.rhs_method) << ',' << (r.testable ? "true" : "false") << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const VerificationReport& rep,
                              const std::string& command, std::uint64_t seed) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = seed;
  j["max_residual"] = rep.max_residual;
  j["testable_fraction"] = rep.testable_fraction;
  j["all_pass"] = rep.all_pass;
  j["enough_testable"] = rep.enough_testable;
  auto rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"family", r.family},
                    {"t", r.t},
                    {"w", r.w},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"residual", r.residual},
                    {"lhs_method", r.lhs_method},
                    {"rhs_method", r.rhs_method},
                    {"testable", r.testable},
                    {"tolerance", r.tolerance},
                    {"pass", r.pass}});
  }
  j["rows"] = rows;
  return j;
}

inline std::string to_csv(std::span<const CorollaryRow> rows, const std::string& command,
                          std::uint64_t seed) {
  std::ostringstream os;
  os << report_header_comment(command, seed);
  os << "family,t,w,cdf,derivative,residual,h,pass\n";
  for (const auto& r : rows) {
    os << csv_field(r.family) << ',' << format_double(r.t) << ',' << format_double(r.w)
       << ',' << format_double(r.cdf) << ',' << format_double(r.derivative) << ','
       << format_double(r.residual) << ',' << format_double(r.h) << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(std::span<const CorollaryRow> rows,
                              const std::string& command, std::uint64_t seed) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = seed;
  auto arr = nlohmann::json::array();
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    arr.push_back({{"family", r.family},
                   {"t", r.t},
                   {"w", r.w},
                   {"cdf", r.cdf},
                   {"derivative", r.derivative},
                   {"residual", r.residual},
                   {"h", r.h},
                   {"pass", r.pass}});
  }
  j["rows"] = arr;
  j["all_pass"] = all;
  return j;
}

// --- kendall -----------------------------------------------------------

inline nlohmann::json to_json(const Family& fam,
                              std::span<const KendallCellReport> cells,
                              const RenewalEstimate& renewal, std::uint64_t seed) {
  nlohmann::json j;
  j["family"] = family_name(fam);
  j["seed"] = seed;
  j["n_paths"] = cells.empty() ? renewal.n_paths : cells.front().n_paths;
  auto carr = nlohmann::json::array();
  for (const auto& c : cells) {
    carr.push_back({{"s_lo", c.s_lo},
                    {"s_hi", c.s_hi},
                    {"y_lo", c.y_lo},
                    {"y_hi", c.y_hi},
                    {"lhs", c.lhs},
                    {"rhs", c.rhs},
                    {"stderr", c.stderr_combined},
                    {"pass", c.pass}});
  }
  j["cells"] = carr;
  auto uarr = nlohmann::json::array();
  for (std::size_t i = 0; i < renewal.s_grid.size(); ++i) {
    uarr.push_back({{"s", renewal.s_grid[i]},
                    {"u_hat", renewal.u_hat.empty() ? 0.0 : renewal.u_hat[i]},
                    {"stderr", renewal.std_err.empty() ? 0.0 : renewal.std_err[i]},
                    {"u_formula", renewal.u_formula.empty() ? 0.0 : renewal.u_formula[i]}});
  }
  j["u"] = uarr;
  j["y_max"] = renewal.y_max;
  j["y_max_ok"] = renewal.y_max_ok;
  return j;
}

// --- tabulations ---------------------------------------------------------

inline std::string classical_table_csv(const Family& fam, std::span<const double> ts,
                                       std::span<const double> ys,
                                       std::uint64_t seed) {
  std::ostringstream os;
  os << report_header_comment("tabulate-classical", seed);
  os << "family,t,y,cdf,pdf\n";
  for (double t : ts) {
    const ClassicalLaw law(fam, t);
    for (double y : ys) {
      const double cdf = classical_cdf(law, y);
      const double pdf = y > 0.0 ? classical_pdf(law, y) : 0.0;
      os << csv_field(family_name(fam)) << ',' << format_double(t) << ','
         << format_double(y) << ',' << format_double(cdf) << ',' << format_double(pdf)
         << '\n';
    }
  }
  return os.str();
}

/// Free-side table: one JSON header line (atoms and support per t), then CSV.
inline std::string free_table_csv(const Family& fam, std::span<const double> ts,
                                  std::span<const double> xs, std::uint64_t seed) {
  std::ostringstream os;
  os << report_header_comment("tabulate-free", seed);
  nlohmann::json meta;
  meta["family"] = family_name(fam);
  auto laws = nlohmann::json::array();
  std::vector<MeasureDecomposition> measures;
  for (double t : ts) {
    const FreeLaw law(fam, t);
    measures.push_back(free_measure(law));
    const auto& m = measures.back();
    auto atoms = nlohmann::json::array();
    for (const auto& a : m.atoms) atoms.push_back({a.location, a.mass});
    laws.push_back({{"t", t},
                    {"atoms", atoms},
                    {"support_lo", m.support_lo},
                    {"support_hi", std::isfinite(m.support_hi)
                                       ? nlohmann::json(m.support_hi)
                                       : nlohmann::json("inf")}});
  }
  meta["laws"] = laws;
  os << "# " << meta.dump() << "\n";
  os << "family,t,x,density\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (double x : xs) {
      os << csv_field(family_name(fam)) << ',' << format_double(ts[i]) << ','
         << format_double(x) << ',' << format_double(measures[i].density(x)) << '\n';
    }
  }
  return os.str();
}

}  // namespace freebond
