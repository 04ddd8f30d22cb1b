#include "ibplab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ibplab {

namespace {
Json check_to_json(const FunctionCheck& c) {
  return Json{{"name", c.name},
              {"lhs_mean", c.lhs_mean},
              {"lhs_se", c.lhs_se},
              {"rhs_mean", c.rhs_mean},
              {"rhs_se", c.rhs_se},
              {"diff_mean", c.diff_mean},
              {"diff_se", c.diff_se},
              {"z", c.z},
              {"diff_mean_half", c.diff_mean_half},
              {"diff_se_half", c.diff_se_half},
              {"kappa", c.kappa},
              {"pass", c.pass}};
}

FunctionCheck check_from_json(const Json& j) {
  FunctionCheck c;
  c.name = j.at("name").get<std::string>();
  c.lhs_mean = j.at("lhs_mean");
  c.lhs_se = j.at("lhs_se");
  c.rhs_mean = j.at("rhs_mean");
  c.rhs_se = j.at("rhs_se");
  c.diff_mean = j.at("diff_mean");
  c.diff_se = j.at("diff_se");
  c.z = j.at("z");
  c.diff_mean_half = j.at("diff_mean_half");
  c.diff_se_half = j.at("diff_se_half");
  c.kappa = j.at("kappa");
  c.pass = j.at("pass");
  return c;
}
}  // namespace

Json MCReport::to_json() const {
  Json j;
  j["model"] = model;
  j["paths"] = paths;
  j["seed"] = seed;
  j["T"] = T;
  j["dt"] = dt;
  j["dt_half"] = dt_half;
  j["z_max"] = z_max;
  j["kappa_min"] = kappa_min;
  j["config_hash"] = config_hash;
  j["checks"] = Json::array();
  for (const auto& c : checks) j["checks"].push_back(check_to_json(c));
  j["weight"] = Json{{"mean", weight_mean},
                     {"se", weight_se},
                     {"sq_mean", weight_sq_mean},
                     {"sq_se", weight_sq_se}};
  if (weight_l2_bound >= 0) {
    j["weight"]["l2_bound"] = weight_l2_bound;
    j["weight"]["l2_ok"] = weight_l2_ok;
  }
  if (!girsanov.empty()) {
    j["girsanov"] = Json::array();
    for (const auto& g : girsanov) {
      j["girsanov"].push_back(Json{{"epsilon", g.epsilon},
                                   {"r_mean", g.r_mean},
                                   {"r_se", g.r_se},
                                   {"r_z", g.r_z},
                                   {"dev_mean", g.dev_mean},
                                   {"dev_se", g.dev_se},
                                   {"clamped", g.clamped},
                                   {"pass", g.pass}});
    }
  }
  if (!shift_checks.empty()) {
    j["shift_checks"] = Json::array();
    for (const auto& s : shift_checks) {
      j["shift_checks"].push_back(Json{{"epsilon", s.epsilon},
                                       {"terminal_err", s.terminal_err},
                                       {"nodewise_err", s.nodewise_err},
                                       {"bound", s.bound},
                                       {"pass", s.pass}});
    }
  }
  if (has_theta_diagnostic) {
    j["theta_diagnostic"] = Json{{"weight_mean", theta_weight_mean},
                                 {"weight_se", theta_weight_se},
                                 {"diff_z", theta_diff_z}};
  }
  j["all_pass"] = all_pass;
  return j;
}

MCReport MCReport::from_json(const Json& j) {
  MCReport r;
  r.model = j.at("model").get<std::string>();
  r.paths = j.at("paths");
  r.seed = j.at("seed");
  r.T = j.at("T");
  r.dt = j.at("dt");
  r.dt_half = j.at("dt_half");
  r.z_max = j.at("z_max");
  r.kappa_min = j.at("kappa_min");
  r.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
  const Json& w = j.at("weight");
  r.weight_mean = w.at("mean");
  r.weight_se = w.at("se");
  r.weight_sq_mean = w.at("sq_mean");
  r.weight_sq_se = w.at("sq_se");
  if (w.contains("l2_bound")) {
    r.weight_l2_bound = w.at("l2_bound");
    r.weight_l2_ok = w.at("l2_ok");
  }
  if (j.contains("girsanov")) {
    for (const auto& g : j["girsanov"]) {
      GirsanovCheck gc;
      gc.epsilon = g.at("epsilon");
      gc.r_mean = g.at("r_mean");
      gc.r_se = g.at("r_se");
      gc.r_z = g.at("r_z");
      gc.dev_mean = g.at("dev_mean");
      gc.dev_se = g.at("dev_se");
      gc.clamped = g.at("clamped");
      gc.pass = g.at("pass");
      r.girsanov.push_back(gc);
    }
  }
  if (j.contains("shift_checks")) {
    for (const auto& s : j["shift_checks"]) {
      ShiftIdentityCheck sc;
      sc.epsilon = s.at("epsilon");
      sc.terminal_err = s.at("terminal_err");
      sc.nodewise_err = s.at("nodewise_err");
      sc.bound = s.at("bound");
      sc.pass = s.at("pass");
      r.shift_checks.push_back(sc);
    }
  }
  if (j.contains("theta_diagnostic")) {
    r.has_theta_diagnostic = true;
    r.theta_weight_mean = j["theta_diagnostic"].at("weight_mean");
    r.theta_weight_se = j["theta_diagnostic"].at("weight_se");
    r.theta_diff_z = j["theta_diagnostic"].at("diff_z").get<std::vector<double>>();
  }
  r.all_pass = j.at("all_pass");
  return r;
}

namespace {
struct Frame {
  double w = 720, h = 420;
  double left = 70, right = 20, top = 40, bottom = 50;
  double px(double t, double lo, double hi) const {
    return left + (t - lo) / (hi - lo) * (w - left - right);
  }
  double py(double v, double lo, double hi) const {
    return h - bottom - (v - lo) / (hi - lo) * (h - top - bottom);
  }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
}  // namespace

std::string svg_line_chart(const std::string& title, const std::vector<double>& xs,
                           const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  Frame f;
  double lo_x = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
  double hi_x = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
  double lo_y = 0, hi_y = 1;
  bool first = true;
  for (const auto& [name, ys] : series) {
    for (double v : ys) {
      if (first) {
        lo_y = hi_y = v;
        first = false;
      }
      lo_y = std::min(lo_y, v);
      hi_y = std::max(hi_y, v);
    }
  }
  if (hi_y == lo_y) hi_y = lo_y + 1;
  const double pad = 0.05 * (hi_y - lo_y);
  lo_y -= pad;
  hi_y += pad;
  if (hi_x == lo_x) hi_x = lo_x + 1;

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << f.w << "' height='" << f.h << "'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  s << "<text x='" << f.w / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
    << "</text>\n";
  s << "<rect x='" << f.left << "' y='" << f.top << "' width='" << f.w - f.left - f.right
    << "' height='" << f.h - f.top - f.bottom << "' fill='none' stroke='#444'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double ty = lo_y + (hi_y - lo_y) * k / 4.0;
    const double tx = lo_x + (hi_x - lo_x) * k / 4.0;
    s << "<text x='" << f.left - 6 << "' y='" << f.py(ty, lo_y, hi_y) + 4
      << "' text-anchor='end' font-size='11'>" << ty << "</text>\n";
    s << "<text x='" << f.px(tx, lo_x, hi_x) << "' y='" << f.h - f.bottom + 16
      << "' text-anchor='middle' font-size='11'>" << tx << "</text>\n";
  }
  int color = 0;
  double legend_y = f.top + 14;
  for (const auto& [name, ys] : series) {
    s << "<polyline fill='none' stroke='" << kPalette[color % 8] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
      s << f.px(xs[i], lo_x, hi_x) << "," << f.py(ys[i], lo_y, hi_y) << " ";
    }
    s << "'/>\n";
    s << "<text x='" << f.w - f.right - 8 << "' y='" << legend_y
      << "' text-anchor='end' font-size='12' fill='" << kPalette[color % 8] << "'>" << name
      << "</text>\n";
    legend_y += 15;
    ++color;
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double marker) {
  Frame f;
  double hi = 1e-12, lo = 0.0;
  for (double v : values) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  hi = std::max(hi, marker) * 1.1;
  lo = std::min(lo, 0.0) * 1.1;
  if (hi == lo) hi = lo + 1;

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << f.w << "' height='" << f.h << "'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  s << "<text x='" << f.w / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
    << "</text>\n";
  const double span = f.w - f.left - f.right;
  const double bw = span / std::max<std::size_t>(1, values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = f.left + bw * i + 0.15 * bw;
    const double y0 = f.py(0.0, lo, hi);
    const double y1 = f.py(values[i], lo, hi);
    s << "<rect x='" << x << "' y='" << std::min(y0, y1) << "' width='" << 0.7 * bw << "' height='"
      << std::abs(y0 - y1) << "' fill='" << kPalette[i % 8] << "'/>\n";
    s << "<text x='" << x + 0.35 * bw << "' y='" << f.h - f.bottom + 16
      << "' text-anchor='middle' font-size='10'>"
      << (i < labels.size() ? labels[i] : std::to_string(i)) << "</text>\n";
  }
  if (marker != 0.0) {
    const double y = f.py(marker, lo, hi);
    s << "<line x1='" << f.left << "' y1='" << y << "' x2='" << f.w - f.right << "' y2='" << y
      << "' stroke='#d62728' stroke-dasharray='5,4'/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string report_csv(const MCReport& r) {
  std::ostringstream s;
  s << "name,lhs_mean,lhs_se,rhs_mean,rhs_se,diff_mean,diff_se,z,diff_mean_half,kappa,pass\n";
  s.precision(17);
  for (const auto& c : r.checks) {
    s << c.name << ',' << c.lhs_mean << ',' << c.lhs_se << ',' << c.rhs_mean << ',' << c.rhs_se
      << ',' << c.diff_mean << ',' << c.diff_se << ',' << c.z << ',' << c.diff_mean_half << ','
      << c.kappa << ',' << (c.pass ? 1 : 0) << '\n';
  }
  return s.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace ibplab
