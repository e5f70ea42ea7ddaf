// JSON documents for plants and calibration reports, CSV traces, and minimal
// SVG line plots.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "binctl/calibration.hpp"
#include "binctl/dynamic_controller.hpp"
#include "binctl/static_controller.hpp"

namespace binctl::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json matrix_to_json(const Matrix& m);  ///< row-major nested arrays
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

Json plant_to_json(const PlantParams& p);
PlantParams plant_from_json(const Json& j);
PlantModel load_plant(const std::string& path);
void save_plant(const PlantParams& p, const std::string& path);

Json calibration_to_json(const CalibrationReport& r);
CalibrationReport calibration_from_json(const Json& j);

/// Shortest decimal text that round-trips the double.
std::string fmt(double v);

void write_dispersion_csv(std::ostream& os, const CalibrationReport& r);

/// One row per iteration; ||eps_r|| is weighted like the cost.
void write_static_trace_csv(std::ostream& os, const TargetResult& t, const Vector& weights);

void write_dynamic_trace_csv(std::ostream& os, const DynamicTrace& trace);

struct SummaryRow {
  std::string scenario;
  std::string run;
  std::string target;
  std::string fault_scenario;
  std::size_t n_f = 0;
  double final_error = 0.0;
  bool on_target = false;
  bool limit_cycle = false;
  std::size_t switch_activity = 0;
  double sim_time = 0.0;
};

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with axes, tick labels and a legend.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& content);

}  // namespace binctl::io
