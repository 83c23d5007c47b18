#pragma once

namespace omnikit {

struct OneEuroParams {
  double f_min = 1.0;     // Hz
  double beta = 0.007;
  double d_cutoff = 1.0;  // Hz, derivative low-pass
};

struct OneEuroState {
  bool initialized = false;
  double x = 0.0;
  double dx = 0.0;

  void reset() { *this = OneEuroState{}; }
};

// First sample after a reset passes through unchanged.
double one_euro_step(OneEuroState& state, double x, double dt, const OneEuroParams& params = {});

}  // namespace omnikit
