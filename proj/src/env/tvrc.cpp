#include "uvls/env/tvrc.hpp"

#include <algorithm>
#include <limits>

namespace uvls::env {

double TvrcEnvelope::threshold(double dt_since_clear) const {
  double value = stages.front().threshold;
  for (const auto& s : stages) {
    if (dt_since_clear + kEnvelopeTimeSlack >= s.offset) value = s.threshold;
  }
  return value;
}

double tvrc_threshold(double dt_since_clear) { return TvrcEnvelope{}.threshold(dt_since_clear); }

double Observation::min_delta() const {
  if (deltas.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(deltas.begin(), deltas.end());
}

bool Observation::violated() const {
  return std::any_of(deltas.begin(), deltas.end(), [](double d) { return d < 0.0; });
}

Observation compute_deltas(std::span<const double> voltage_magnitudes, double t, double t_clear,
                           const TvrcEnvelope& envelope) {
  Observation obs;
  obs.t = t;
  const double threshold = envelope.threshold(t - t_clear);
  obs.deltas.reserve(voltage_magnitudes.size());
  for (double v : voltage_magnitudes) obs.deltas.push_back(v - threshold);
  return obs;
}

}  // namespace uvls::env
