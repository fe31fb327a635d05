#pragma once

#include "malab/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

// Exponent arithmetic of the estimates. Every gate is an exact comparison;
// callers that need a hard failure use the require_* variants.
namespace malab::exponents {

/// n/2 < q <= n.
inline bool q_admissible(Real q, int n = kDim) { return q > 0.5 * n && q <= n; }

/// nq/(n - q); +inf at q = n.
inline Real sobolev_limit(Real q, int n = kDim) {
  return q == n ? std::numeric_limits<Real>::infinity() : n * q / (n - q);
}

/// 1 <= p < nq/(n - q), for admissible q.
inline bool p_admissible(Real p, Real q, int n = kDim) {
  return q_admissible(q, n) && p >= 1 && p < sobolev_limit(q, n);
}

/// q' = q / (q - 1).
inline Real conjugate(Real q) { return q / (q - 1); }

/// n/(n - 2); +inf for n <= 2.
inline Real green_integrability_limit(int n = kDim) {
  return n <= 2 ? std::numeric_limits<Real>::infinity() : static_cast<Real>(n) / (n - 2);
}

/// q' < n/(n - 2) for the conjugate of q.
inline bool conjugate_admissible(Real q, int n = kDim) { return q > 1 && conjugate(q) < green_integrability_limit(n); }

/// alpha0 = min{alpha, (3/8)(2 - n/q)}.
inline Real boundary_alpha(Real alpha, Real q, int n = kDim) { return std::min(alpha, 0.375 * (2 - n / q)); }

/// alpha0 / (alpha0 + 3n).
inline Real boundary_holder_exponent(Real alpha0, int n = kDim) { return alpha0 / (alpha0 + 3 * n); }

/// 2/n - 1/q, the volume power in the maximum principles.
inline Real volume_exponent(Real q, int n = kDim) { return 2.0 / n - 1 / q; }

/// (3/4)(2/n - 1/q), the volume power on boundary balls.
inline Real ball_volume_exponent(Real q, int n = kDim) { return 0.75 * volume_exponent(q, n); }

/// 1 - n/(2q), the height power of the forcing term in the oscillation bound.
inline Real oscillation_height_exponent(Real q, int n = kDim) { return 1 - n / (2 * q); }

/// (1 - n/q + n/p) / 2; lies in (0, 1) exactly when p is admissible.
inline Real default_alpha(Real q, Real p, int n = kDim) { return 0.5 * (1 - n / q + n / p); }

/// (n/2 + q) / 2.
inline Real default_qprime(Real q, int n = kDim) { return 0.5 * (0.5 * n + q); }

/// (1 - alpha) / 2, the height power in the N functional.
inline Real n_functional_power(Real alpha) { return 0.5 * (1 - alpha); }

inline void require_q(Real q, int n = kDim) {
  if (!q_admissible(q, n))
    throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need n/2 < q <= n, got q = " + std::to_string(q));
}

inline void require_p(Real p, Real q, int n = kDim) {
  require_q(q, n);
  if (!p_admissible(p, q, n))
    throw Error(ErrorCode::ExponentOutOfRange,
                "exponent out of range: need 1 <= p < nq/(n-q), got p = " + std::to_string(p));
}

inline void require_alpha(Real alpha) {
  if (!(alpha > 0 && alpha < 1))
    throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need 0 < alpha < 1");
}

}  // namespace malab::exponents
