#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace critlab {

// Regularly sampled path; one row per sample, one column per component.
struct TimeSeries {
  double dt = 1.0;
  Eigen::MatrixXd values;
  std::vector<std::string> labels;  // empty, or one per column

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// CSV with header "t,<label0>,<label1>,..." (labels default to x0,x1,...)
// and t = i*dt. Values are written at full round-trip precision.
std::string to_csv(const TimeSeries& ts);
void write_csv(const TimeSeries& ts, const std::string& path);

}  // namespace critlab
