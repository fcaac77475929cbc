#pragma once

#include <functional>
#include <vector>

namespace ibug {

struct SimplexOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;
  double initial_step = 0.1;  // relative to |x0[i]|, absolute when x0[i] == 0
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex minimization. Converged when both the spread
/// of function values and the simplex diameter fall below rel_tol relative to
/// the best vertex. Non-finite objective values are treated as +infinity.
SimplexResult minimize_simplex(const std::function<double(const std::vector<double>&)>& f,
                               std::vector<double> x0, const SimplexOptions& opts = {});

}  // namespace ibug
