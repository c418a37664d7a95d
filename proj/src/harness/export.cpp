#include "uvls/harness/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "uvls/harness/manifest.hpp"

namespace uvls::harness {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad number '" + s + "'");
  }
}

}  // namespace

void write_curve_csv(std::ostream& out, std::span<const learn::CurvePoint> curve) {
  out << "episode,R_k,alpha_k,joint_reward,epsilon,scenario_id,remaining_load_pct,mean_loss\n";
  out.precision(17);
  for (const auto& p : curve) {
    out << p.episode << ',' << p.total_reward << ',' << p.success << ',' << p.joint_reward << ','
        << p.epsilon << ',' << p.scenario_id << ',' << p.remaining_load_pct << ',' << p.mean_loss
        << '\n';
  }
}

std::vector<learn::CurvePoint> read_curve_csv(std::istream& in) {
  std::vector<learn::CurvePoint> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("episode,R_k,alpha_k,joint_reward,epsilon", 0) != 0) {
        throw ConfigError("not a learning-curve file");
      }
      header = true;
      continue;
    }
    const auto c = split(line);
    if (c.size() < 5) throw ConfigError("short learning-curve row");
    learn::CurvePoint p;
    p.episode = static_cast<std::size_t>(number(c[0]));
    p.total_reward = number(c[1]);
    p.success = static_cast<int>(number(c[2]));
    p.joint_reward = number(c[3]);
    p.epsilon = number(c[4]);
    if (c.size() >= 8) {
      p.scenario_id = static_cast<std::uint64_t>(number(c[5]));
      p.remaining_load_pct = number(c[6]);
      p.mean_loss = number(c[7]);
    }
    out.push_back(p);
  }
  if (!header) throw ConfigError("learning-curve file has no header");
  return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw ConfigError("moving-average window must be positive");
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    // Shifted by the window's first value: a constant run averages exactly.
    const double base = values[first];
    double dev = 0.0;
    for (std::size_t k = first; k <= i; ++k) dev += values[k] - base;
    out.push_back(base + dev / static_cast<double>(i + 1 - first));
  }
  return out;
}

void write_learning_curve_figure(std::ostream& out, std::span<const learn::CurvePoint> curve,
                                 std::size_t window) {
  std::vector<double> joint;
  for (const auto& p : curve) joint.push_back(p.joint_reward);
  const auto avg = moving_average(joint, window);
  out << "episode,joint_reward,moving_avg\n";
  out.precision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve[i].episode << ',' << joint[i] << ',' << avg[i] << '\n';
  }
}

VoltageTable read_voltage_csv(std::istream& in) {
  VoltageTable t;
  std::string line;
  bool header = false;
  std::size_t keep = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (auto p = line.find("t_clear="); p != std::string::npos) {
        std::istringstream ss(line.substr(p + 8));
        ss >> t.t_clear;
      }
      continue;
    }
    const auto c = split(line);
    if (!header) {
      if (c.empty() || c[0] != "t") throw ConfigError("voltage file must start with a t column");
      for (std::size_t k = 1; k < c.size(); ++k) {
        if (c[k].rfind("bus_", 0) == 0) t.columns.push_back(c[k]);
      }
      keep = t.columns.size();
      header = true;
      continue;
    }
    if (c.size() < keep + 1) throw ConfigError("short voltage row");
    t.t.push_back(number(c[0]));
    std::vector<double> row;
    for (std::size_t k = 1; k <= keep; ++k) row.push_back(number(c[k]));
    t.rows.push_back(std::move(row));
  }
  if (!header) throw ConfigError("voltage file has no header");
  return t;
}

void write_trajectory_figure(std::ostream& out, const VoltageTable& table,
                             const env::TvrcEnvelope& envelope) {
  out << "# t_clear=" << table.t_clear << " switches=";
  for (std::size_t s = 0; s < envelope.stages.size(); ++s) {
    out << (s ? ";" : "") << table.t_clear + envelope.stages[s].offset;
  }
  out << '\n' << 't';
  for (const auto& c : table.columns) out << ',' << c;
  char name[32];
  for (const auto& s : envelope.stages) {
    std::snprintf(name, sizeof name, ",tvrc_%.2f", s.threshold);
    out << name;
  }
  out << ",tvrc\n";
  out.precision(17);
  for (std::size_t k = 0; k < table.t.size(); ++k) {
    const double dt = table.t[k] - table.t_clear;
    out << table.t[k];
    for (double v : table.rows[k]) out << ',' << v;
    const double active = envelope.threshold(dt);
    for (std::size_t s = 0; s < envelope.stages.size(); ++s) {
      const double lo = s == 0 ? -1e300 : envelope.stages[s].offset;
      const double hi = s + 1 < envelope.stages.size() ? envelope.stages[s + 1].offset : 1e300;
      out << ',';
      if (dt + env::kEnvelopeTimeSlack >= lo && dt + env::kEnvelopeTimeSlack < hi) {
        out << envelope.stages[s].threshold;
      }
    }
    out << ',' << active << '\n';
  }
}

void write_svg(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, std::span<const Series> series) {
  constexpr double W = 720, H = 420, L = 70, R = 160, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  char buf[128];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" ", L, T,
                W - L - R, H - T - B);
  out << buf << "fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n",
                  px(xv), H - B + 16, xv);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  L - 6, py(yv) + 4, yv);
    out << buf;
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << x_label << "</text>\n";
  out << "<text transform=\"translate(16," << (T + H - B) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = palette[s % 10];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series[s].x[i]), py(series[s].y[i]));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = T + 14 + 16 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>",
                  W - R + 10, ly - 4, W - R + 30, ly - 4, colour);
    out << buf << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << series[s].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace uvls::harness
