#include "membrane/fit.hpp"

#include <cmath>
#include <string>

#include "membrane/errors.hpp"

namespace membrane {

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& value,
                   const DecayFitOptions& opt) {
  if (t.size() != value.size()) throw ValidationError("decay_fit: time and value lengths differ");
  if (t.empty()) throw InsufficientData("decay_fit: empty series");
  const double t0 = t.front(), span = t.back() - t.front();
  const double lo = t0 + opt.window_lo * span, hi = t0 + opt.window_hi * span;

  std::vector<double> ts, vs;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo - 1e-12 * std::abs(span) || t[i] > hi + 1e-12 * std::abs(span)) continue;
    if (!(value[i] > 0.0))
      throw NonpositiveValue("decay_fit: nonpositive value " + std::to_string(value[i]) + " at t = " +
                             std::to_string(t[i]));
    ts.push_back(t[i]);
    vs.push_back(value[i]);
  }
  if (ts.size() < 10)
    throw InsufficientData("decay_fit: " + std::to_string(ts.size()) + " samples in window, need 10");

  if (opt.envelope) {
    std::vector<double> pt, pv;
    for (std::size_t i = 1; i + 1 < vs.size(); ++i)
      if (vs[i] >= vs[i - 1] && vs[i] > vs[i + 1]) {
        pt.push_back(ts[i]);
        pv.push_back(vs[i]);
      }
    if (pt.size() < 2) throw InsufficientData("decay_fit: fewer than two peaks in window");
    ts.swap(pt);
    vs.swap(pv);
  }

  std::vector<double> x, y;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (vs[i] > opt.floor) {
      x.push_back(ts[i]);
      y.push_back(std::log(vs[i]));
    }
  if (x.size() < 2) throw InsufficientData("decay_fit: fewer than two samples above the floor");

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientData("decay_fit: all samples at one time");
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {-slope, my - slope * mx, r2};
}

}  // namespace membrane
