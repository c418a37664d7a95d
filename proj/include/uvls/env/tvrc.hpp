#pragma once

#include <array>
#include <span>
#include <vector>

namespace uvls::env {

// Minimum-voltage envelope after fault clearance: a right-continuous step
// function of the time elapsed since clearing.
struct TvrcEnvelope {
  struct Stage {
    double offset;     // s after clearance
    double threshold;  // p.u. of nominal
  };
  std::array<Stage, 4> stages{{{0.0, 0.7}, {0.33, 0.8}, {0.5, 0.9}, {1.5, 0.95}}};

  // Before clearance (dt < 0) the first-stage threshold applies.
  double threshold(double dt_since_clear) const;
};

// Time comparisons against stage offsets tolerate this much rounding from
// step-grid arithmetic.
inline constexpr double kEnvelopeTimeSlack = 1e-9;

double tvrc_threshold(double dt_since_clear);

struct Observation {
  double t = 0.0;
  std::vector<double> deltas;  // one per monitored bus, p.u.

  double min_delta() const;
  bool violated() const;
};

// Delta_j = V_j - threshold(t - T_fc) for each monitored magnitude.
Observation compute_deltas(std::span<const double> voltage_magnitudes, double t, double t_clear,
                           const TvrcEnvelope& envelope = {});

}  // namespace uvls::env
