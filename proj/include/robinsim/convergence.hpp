#pragma once

#include <robinsim/errors.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace robinsim {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct ConvergenceRow {
  double dt = 0.0;
  double estimate = 0.0;
  double reference = 0.0;
  double bias = 0.0;    ///< reference - estimate
  double std_error = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  ///< previous bias / this bias
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
};

/// One ensemble per dt (strictly decreasing), compared with a fixed reference.
inline ConvergenceTable run_convergence(const std::vector<double>& dts, double reference,
                                        const std::function<Estimate(double dt)>& engine) {
  if (dts.empty()) throw ConfigError("convergence study needs at least one dt");
  for (std::size_t i = 1; i < dts.size(); ++i) {
    if (!(dts[i] < dts[i - 1])) throw ConfigError("dt list must be strictly decreasing");
  }
  ConvergenceTable table;
  for (double dt : dts) {
    const Estimate e = engine(dt);
    ConvergenceRow row{dt, e.value, reference, reference - e.value, e.std_error};
    if (!table.rows.empty()) row.ratio = table.rows.back().bias / row.bias;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace robinsim
