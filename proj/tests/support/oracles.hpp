#pragma once

// Independent re-implementations used as test oracles. They share no code
// with the library beyond plain structs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace vrd::testing {

/// Unicycle update written with complex numbers and atan2 wrapping.
struct OracleState {
  std::complex<double> p;
  double psi;
  double v;
};

inline double oracle_wrap(double a) {
  double w = std::atan2(std::sin(a), std::cos(a));
  if (w == -std::numbers::pi) w = std::numbers::pi;
  return w;
}

inline OracleState oracle_step(OracleState s, double a, double w, double dt) {
  OracleState n;
  n.v = s.v + a * dt;
  if (n.v < 0.0) n.v = 0.0;
  n.psi = oracle_wrap(s.psi + w * dt);
  n.p = s.p + std::polar(n.v * dt, n.psi);
  return n;
}

struct OraclePoint {
  double x, y;
};

/// preds[k][t], gt[t]; returns {minADE, minFDE} for one agent by exhaustive search.
inline std::pair<double, double> oracle_min_errors(const std::vector<std::vector<OraclePoint>>& preds,
                                                   const std::vector<OraclePoint>& gt) {
  double best_ade = std::numeric_limits<double>::infinity();
  double best_fde = std::numeric_limits<double>::infinity();
  for (const auto& p : preds) {
    long double total = 0.0L;
    for (std::size_t t = 0; t < gt.size(); ++t) total += std::hypot(p[t].x - gt[t].x, p[t].y - gt[t].y);
    best_ade = std::min(best_ade, static_cast<double>(total / gt.size()));
    best_fde = std::min(best_fde, std::hypot(p.back().x - gt.back().x, p.back().y - gt.back().y));
  }
  return {best_ade, best_fde};
}

}  // namespace vrd::testing
