#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uvls/env/tvrc.hpp"
#include "uvls/learn/dqn.hpp"

namespace uvls::harness {

// `episode,R_k,alpha_k,joint_reward,epsilon,scenario_id,remaining_load_pct,mean_loss`
void write_curve_csv(std::ostream& out, std::span<const learn::CurvePoint> curve);
std::vector<learn::CurvePoint> read_curve_csv(std::istream& in);

// Trailing mean over up to `window` values ending at each index.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

// `episode,joint_reward,moving_avg`
void write_learning_curve_figure(std::ostream& out, std::span<const learn::CurvePoint> curve,
                                 std::size_t window);

struct VoltageTable {
  std::vector<std::string> columns;  // after t
  std::vector<double> t;
  std::vector<std::vector<double>> rows;  // rows[k][column]
  double t_clear = 0.0;
};

// Reads a `t,bus_<id>_vm,...[,tvrc]` export. `# t_clear=<s>` comment lines set
// the clearing time.
VoltageTable read_voltage_csv(std::istream& in);

// Voltage columns plus one envelope column per stage (empty outside the
// stage's interval) and the active threshold.
void write_trajectory_figure(std::ostream& out, const VoltageTable& table,
                             const env::TvrcEnvelope& envelope = {});

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Single-file line plot.
void write_svg(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, std::span<const Series> series);

}  // namespace uvls::harness
