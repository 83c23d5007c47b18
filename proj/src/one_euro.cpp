#include "omnikit/one_euro.hpp"

#include <cmath>

namespace omnikit {

namespace {

double smoothing_alpha(double dt, double cutoff_hz) {
  const double tau = 1.0 / (2.0 * M_PI * cutoff_hz);
  return 1.0 / (1.0 + tau / dt);
}

}  // namespace

double one_euro_step(OneEuroState& state, double x, double dt, const OneEuroParams& params) {
  if (!state.initialized) {
    state.initialized = true;
    state.x = x;
    state.dx = 0.0;
    return x;
  }
  const double raw_dx = (x - state.x) / dt;
  const double ad = smoothing_alpha(dt, params.d_cutoff);
  state.dx = ad * raw_dx + (1.0 - ad) * state.dx;
  const double cutoff = params.f_min + params.beta * std::abs(state.dx);
  const double a = smoothing_alpha(dt, cutoff);
  state.x = a * x + (1.0 - a) * state.x;
  return state.x;
}

}  // namespace omnikit
