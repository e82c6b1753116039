#pragma once

// Independent long-double reference formulas and analytic fixtures shared by
// the unit tests and the acceptance binary.

#include <cmath>

#include "gx/explainer.hpp"

namespace gx::testing {

// Frozen from mpmath at 30 digits / scipy.
inline constexpr double kExpHalf = 0.606530659712633423603799534991;
inline constexpr double kExp4_5 = 0.0111089965382423064961431342869;
inline constexpr double kCbrt0_6561 = 0.868940446145066782073939505992;
inline constexpr double kSigmoid10 = 0.999954602131297565605495223767;
inline constexpr double kEulerGamma = 0.577215664901532860606512090082;
inline constexpr double kPi2Over6 = 1.64493406684822643647241516665;
/// chi-square 0.99 quantile, 4 degrees of freedom.
inline constexpr double kChi2Df4Q99 = 13.276704135987622;

inline long double oracle_degree(long double x, long double mu, long double sigma) {
  const long double z = (x - mu) / sigma;
  return expl(-z * z / 2.0L);
}

inline long double oracle_validation(long double s, long double p, long double d) {
  return powl(s * p * d, 1.0L / 3.0L);
}

inline long double oracle_granularity(long double b, long double a) { return 1.0L - fminl(1.0L, b / a); }

inline long double oracle_lambda(long double t, const ExplainerConfig& c) {
  const long double r = (t / c.iterations - c.p_ramp) / (1.0L - c.p_ramp);
  const long double s = 1.0L / (1.0L + expl(-c.k_sched * (2.0L * r - 1.0L)));
  return c.lambda_min + (c.lambda_max - c.lambda_min) * s;
}

/// D(x) = <W_a, A_i> + <W_f, F_i> per sample; its input gradient has norm
/// sqrt(|W_a|^2 + |W_f|^2) everywhere.
inline Critic linear_critic(const Matrix& wa, const Matrix& wf, int batch) {
  return [wa, wf, batch](const GraphBatch& b) {
    Matrix ta(wa.rows * batch, wa.cols), tf(wf.rows * batch, wf.cols);
    for (int k = 0; k < batch; ++k) {
      for (int r = 0; r < wa.rows; ++r)
        for (int c = 0; c < wa.cols; ++c) ta(k * wa.rows + r, c) = wa(r, c);
      for (int r = 0; r < wf.rows; ++r)
        for (int c = 0; c < wf.cols; ++c) tf(k * wf.rows + r, c) = wf(r, c);
    }
    ad::Var d = ad::block_sum(ad::row_sum(ad::mul(b.adjacency[0], ad::constant(ta))), batch);
    return ad::add(d, ad::block_sum(ad::row_sum(ad::mul(b.features, ad::constant(tf))), batch));
  };
}

/// Worst per-entry relative error between the analytic gradient of the
/// combined generator loss and central differences, for a generator with
/// n_max = 4 feeding a classifier and a critic through relaxed
/// Gumbel-Softmax samples with fixed noise.
double generator_gradient_error(std::uint64_t seed, double lambda = 0.4);

}  // namespace gx::testing
