#include "binctl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace binctl::io {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void header_block(std::ostream& os, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) os << ',' << prefix << i;
}

void value_block(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt(v[i]);
}

Json correlations_to_json(const std::vector<stats::Correlation>& cs) {
  Json a = Json::array();
  for (const auto& c : cs) a.push_back({{"rho", c.rho}, {"p_positive", c.p_positive}, {"p_two_sided", c.p_two_sided}});
  return a;
}

std::vector<stats::Correlation> correlations_from_json(const Json& j) {
  std::vector<stats::Correlation> out;
  for (const auto& c : j) out.push_back({c.at("rho").get<double>(), c.at("p_positive").get<double>(), c.at("p_two_sided").get<double>()});
  return out;
}

}  // namespace

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), what + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_array() && j[i].size() == cols, what + ": row " + std::to_string(i) + " has the wrong length");
    for (std::size_t k = 0; k < cols; ++k) {
      require(j[i][k].is_number(), what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  require(j.is_array(), what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), what + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json plant_to_json(const PlantParams& p) {
  Json coupling = Json::array();
  for (const auto& q : p.coupling) coupling.push_back(matrix_to_json(q));
  return {
      {"schema_version", kSchemaVersion},
      {"name", p.name},
      {"n", p.K.rows()},
      {"m", p.A.cols()},
      {"A", matrix_to_json(p.A)},
      {"K", matrix_to_json(p.K)},
      {"C", matrix_to_json(p.C)},
      {"M", matrix_to_json(p.M)},
      {"gamma", p.gamma},
      {"coupling", coupling},
      {"noise_sigma", vector_to_json(p.noise_sigma)},
      {"x_rest", vector_to_json(p.x_rest)},
      {"isotropic", p.isotropic},
      {"dispersion_target", vector_to_json(p.dispersion_target)},
  };
}

PlantParams plant_from_json(const Json& j) {
  require(j.is_object(), "plant: expected an object");
  require(j.contains("schema_version"), "plant: missing schema_version");
  require(j.at("schema_version") == kSchemaVersion,
          "plant: unsupported schema_version " + j.at("schema_version").dump());
  PlantParams p;
  p.name = j.value("name", std::string("custom"));
  for (const char* key : {"A", "K", "C", "M", "noise_sigma", "x_rest"})
    require(j.contains(key), std::string("plant: missing field '") + key + "'");
  p.A = matrix_from_json(j.at("A"), "plant.A");
  p.K = matrix_from_json(j.at("K"), "plant.K");
  p.C = matrix_from_json(j.at("C"), "plant.C");
  p.M = matrix_from_json(j.at("M"), "plant.M");
  p.gamma = j.value("gamma", 0.0);
  if (j.contains("coupling"))
    for (std::size_t i = 0; i < j.at("coupling").size(); ++i)
      p.coupling.push_back(matrix_from_json(j.at("coupling")[i], "plant.coupling[" + std::to_string(i) + "]"));
  p.noise_sigma = vector_from_json(j.at("noise_sigma"), "plant.noise_sigma");
  p.x_rest = vector_from_json(j.at("x_rest"), "plant.x_rest");
  p.isotropic = j.value("isotropic", false);
  if (j.contains("dispersion_target")) p.dispersion_target = vector_from_json(j.at("dispersion_target"), "plant.dispersion_target");
  if (j.contains("n")) require(j.at("n") == p.K.rows(), "plant: n does not match K");
  if (j.contains("m")) require(j.at("m") == p.A.cols(), "plant: m does not match A");
  return p;
}

PlantModel load_plant(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plant file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return PlantModel(plant_from_json(j));
}

void save_plant(const PlantParams& p, const std::string& path) { write_file(path, plant_to_json(p).dump(2) + "\n"); }

Json calibration_to_json(const CalibrationReport& r) {
  Json disp;
  if (r.dispersion.is_shared()) {
    disp = {{"mode", "shared"}, {"sigma", vector_to_json(*r.dispersion.shared_sigma())}};
  } else {
    disp = {{"mode", "per_actuator"}, {"sigma", matrix_to_json(r.dispersion.per_actuator_sigma())}};
  }
  Json bins = Json::array();
  for (const auto& b : r.residual_stats)
    bins.push_back({{"switches", b.switches}, {"count", b.count}, {"mean_abs", vector_to_json(b.mean_abs)},
                    {"rms", vector_to_json(b.rms)}});
  Json j = {
      {"schema_version", kSchemaVersion},
      {"J", matrix_to_json(r.J.columns)},
      {"x0", vector_to_json(r.x0)},
      {"dispersion", disp},
      {"sample_count", r.sample_count},
      {"fitted_sigma", vector_to_json(r.fitted_sigma)},
      {"per_actuator_mode", r.per_actuator_mode},
      {"correlation_vs_switches", correlations_to_json(r.vs_switches)},
      {"correlation_vs_distance", correlations_to_json(r.vs_distance)},
      {"correlation_vs_on_count", correlations_to_json(r.vs_on_count)},
      {"residual_bins", bins},
  };
  if (r.F) j["F"] = matrix_to_json(r.F->columns);
  return j;
}

CalibrationReport calibration_from_json(const Json& j) {
  require(j.is_object() && j.value("schema_version", -1) == kSchemaVersion, "calibration: bad or missing schema_version");
  CalibrationReport r;
  r.J = {matrix_from_json(j.at("J"), "calibration.J"), InfluenceKind::displacement};
  if (j.contains("F")) r.F = InfluenceMatrix{matrix_from_json(j.at("F"), "calibration.F"), InfluenceKind::force};
  r.x0 = vector_from_json(j.at("x0"), "calibration.x0");
  const Json& d = j.at("dispersion");
  if (d.at("mode") == "shared") {
    r.dispersion = DispersionModel::shared(vector_from_json(d.at("sigma"), "calibration.dispersion.sigma"),
                                           static_cast<std::size_t>(r.J.actuators()));
  } else {
    r.dispersion = DispersionModel::per_actuator(matrix_from_json(d.at("sigma"), "calibration.dispersion.sigma"));
  }
  r.sample_count = j.value("sample_count", std::size_t{0});
  r.fitted_sigma = vector_from_json(j.at("fitted_sigma"), "calibration.fitted_sigma");
  r.per_actuator_mode = j.value("per_actuator_mode", false);
  r.vs_switches = correlations_from_json(j.value("correlation_vs_switches", Json::array()));
  r.vs_distance = correlations_from_json(j.value("correlation_vs_distance", Json::array()));
  r.vs_on_count = correlations_from_json(j.value("correlation_vs_on_count", Json::array()));
  for (const auto& b : j.value("residual_bins", Json::array()))
    r.residual_stats.push_back({b.at("switches").get<std::size_t>(), b.at("count").get<std::size_t>(),
                                vector_from_json(b.at("mean_abs"), "bin.mean_abs"), vector_from_json(b.at("rms"), "bin.rms")});
  return r;
}

void write_dispersion_csv(std::ostream& os, const CalibrationReport& r) {
  os << "trial,s_n";
  header_block(os, "eps_a_", r.J.dofs());
  os << '\n';
  for (const auto& s : r.samples) {
    os << s.trial << ',' << s.switches;
    value_block(os, s.eps_a);
    os << '\n';
  }
}

void write_static_trace_csv(std::ostream& os, const TargetResult& t, const Vector& weights) {
  const Eigen::Index n = weights.size();
  os << "n";
  header_block(os, "x_", n);
  header_block(os, "x_e_", n);
  os << ",s_n,cost,eps_r_norm";
  header_block(os, "sigma_", n);
  header_block(os, "eps_a_", n);
  os << ",sim_time\n";
  for (const auto& r : t.records) {
    os << r.index;
    value_block(os, r.x);
    value_block(os, r.x_e);
    os << ',' << r.b.count() << ',' << fmt(r.cost) << ',' << fmt(weighted_norm(r.eps_r, weights));
    value_block(os, r.sigma);
    value_block(os, r.eps_a);
    os << ',' << fmt(r.sim_time) << '\n';
  }
}

void write_dynamic_trace_csv(std::ostream& os, const DynamicTrace& trace) {
  const Eigen::Index n = trace.weights.size();
  os << "t";
  header_block(os, "x_", n);
  header_block(os, "x_d_", n);
  header_block(os, "x_e_", n);
  header_block(os, "s_", n);
  os << ",u,switches\n";
  for (const auto& s : trace.samples) {
    os << fmt(s.t);
    value_block(os, s.x);
    value_block(os, s.x_d);
    value_block(os, s.x_e);
    value_block(os, s.s);
    os << ',' << s.u.str() << ',' << s.switches << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "scenario,run,target,fault_scenario,n_f,final_error,on_target,limit_cycle,switch_activity,sim_time\n";
  for (const auto& r : rows)
    os << r.scenario << ',' << r.run << ',' << r.target << ',' << r.fault_scenario << ',' << r.n_f << ','
       << fmt(r.final_error) << ',' << (r.on_target ? 1 : 0) << ',' << (r.limit_cycle ? 1 : 0) << ','
       << r.switch_activity << ',' << fmt(r.sim_time) << '\n';
}

std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  os << "<path d=\"M" << L << ' ' << T << " V" << H - B << " H" << W - R << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    char xb[32], yb[32];
    std::snprintf(xb, sizeof xb, "%.3g", xv);
    std::snprintf(yb, sizeof yb, "%.3g", yv);
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xb << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yb << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % std::size(palette)];
    os << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"";
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      char pt[64];
      std::snprintf(pt, sizeof pt, "%c%.2f %.2f ", pen ? 'L' : 'M', px(s.x[i]), py(s.y[i]));
      os << pt;
      pen = true;
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\"" << color << "\">"
       << escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write '" + path + "'");
  out << content;
  if (!out) throw RuntimeAbort("write failed for '" + path + "'");
}

}  // namespace binctl::io
