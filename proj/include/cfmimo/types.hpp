/**
 * @file types.hpp
 * @brief Common aliases and unit conversions shared by all cfmimo headers.
 */
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

namespace cfmimo {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Complex = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Sticky degradation flags raised by estimators and scaling rules.
struct Flags {
  bool degenerate = false;          // zero-signal estimate, zero-norm combiner, ...
  bool bisection_failed = false;    // dual search hit its iteration cap
  bool indefinite_matrix = false;   // pilot-domain regularized matrix not PSD

  void merge(const Flags& other) {
    degenerate |= other.degenerate;
    bisection_failed |= other.bisection_failed;
    indefinite_matrix |= other.indefinite_matrix;
  }
  bool any() const { return degenerate || bisection_failed || indefinite_matrix; }
};

}  // namespace cfmimo
