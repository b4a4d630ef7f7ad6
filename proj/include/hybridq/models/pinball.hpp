#pragma once

#include <string>

#include "hybridq/error.hpp"

namespace hybridq {

inline void check_level(double q) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("quantile level " + std::to_string(q) + " outside (0, 1)");
}

// rho_q(y - yhat): q * u for u >= 0, (q - 1) * u otherwise.
template <typename T>
inline T pinball_unchecked(T q, T y, T yhat) {
  const T u = y - yhat;
  return u >= T(0) ? q * u : (q - T(1)) * u;
}

inline double pinball_loss(double q, double y, double yhat) {
  check_level(q);
  return pinball_unchecked(q, y, yhat);
}

// d rho_q(y - yhat) / d yhat, with the subgradient at the kink fixed to the
// u >= 0 branch.
template <typename T>
inline T pinball_grad(T q, T y, T yhat) {
  return y >= yhat ? -q : T(1) - q;
}

}  // namespace hybridq
