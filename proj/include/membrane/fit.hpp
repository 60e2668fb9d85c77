#pragma once

// Exponential-rate fitting of positive time series.

#include <vector>

namespace membrane {

struct DecayFit {
  double rate;       // -slope of log(value)
  double intercept;  // log(value) at t = 0
  double r2;
};

struct DecayFitOptions {
  // Window as fractions of [t_first, t_last].
  double window_lo = 0.5;
  double window_hi = 1.0;
  // Fit only local maxima of the windowed samples.
  bool envelope = false;
  // Samples at or below the floor are dropped before fitting.
  double floor = 0.0;
};

// Least-squares fit of log(value) = intercept - rate * t. Throws
// InsufficientData with fewer than 10 samples in the window and
// NonpositiveValue on a nonpositive sample.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& value,
                   const DecayFitOptions& opt = {});

}  // namespace membrane
