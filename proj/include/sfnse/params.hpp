#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sfnse/errors.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

/// Coefficients of  i du - [(-Delta)^alpha u + lambda |u|^{2 sigma} u] dt = eps u o dW.
struct ModelParams {
  double alpha = 0.6;
  double lambda = 1.0;
  double sigma = 1.0;
  double epsilon = 0.01;

  void validate() const {
    check_alpha(alpha);
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw DomainError("sigma must be finite and >= 0");
    }
    if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw DomainError("epsilon must be finite and >= 0");
    }
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Parameter combinations outside the admissible nonlinearity range in one
/// space dimension. These are warnings; the schemes still run.
inline std::vector<std::string> assumption_warnings(const ModelParams& m) {
  std::vector<std::string> out;
  if (m.lambda < 0.0 && !(m.sigma < 2.0 * m.alpha)) {
    out.push_back("focusing nonlinearity (lambda < 0) with sigma >= 2*alpha: "
                  "global existence is not guaranteed");
  }
  if (m.lambda != 0.0 && std::abs(m.lambda) != 1.0) {
    out.push_back("lambda is usually +1 (defocusing) or -1 (focusing)");
  }
  return out;
}

struct SchemeParams {
  double dt = 0.01;
  double fp_tol = 1e-12;   // fixed-point tolerance, discrete l2 norm
  int fp_max_iter = 50;
  bool nonlinear_splitting = false;  // allow sigma > 0 in the splitting scheme

  void validate() const {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw DomainError("dt must be >= 0");
    if (!(fp_tol > 0.0)) throw DomainError("fp_tol must be > 0");
    if (fp_max_iter < 1) throw DomainError("fp_max_iter must be >= 1");
  }

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

}  // namespace sfnse
