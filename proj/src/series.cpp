#include "critlab/series.hpp"

#include <stdexcept>

#include "critlab/csv.hpp"

namespace critlab {

std::string to_csv(const TimeSeries& ts) {
  if (!ts.labels.empty() &&
      static_cast<Eigen::Index>(ts.labels.size()) != ts.cols())
    throw std::invalid_argument("TimeSeries: labels must match column count");

  std::string out;
  out.reserve(static_cast<std::size_t>(ts.rows()) * (ts.cols() + 1) * 12 + 64);
  out += "t";
  for (Eigen::Index c = 0; c < ts.cols(); ++c) {
    out += ',';
    if (ts.labels.empty())
      out += "x" + std::to_string(c);
    else
      out += ts.labels[static_cast<std::size_t>(c)];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < ts.rows(); ++i) {
    append_double(out, static_cast<double>(i) * ts.dt);
    for (Eigen::Index c = 0; c < ts.cols(); ++c) {
      out += ',';
      append_double(out, ts.values(i, c));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const TimeSeries& ts, const std::string& path) {
  write_text_file(path, to_csv(ts));
}

}  // namespace critlab
