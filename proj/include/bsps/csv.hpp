#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bsps/agents.hpp"

namespace bsps {

// Input data in the fit schema. Gaussian header: s1,s2[,y],a_1,b_1,...,a_J,b_J;
// Bernoulli header: s1,s2[,y],a_1,...,a_J. UTF-8, '.' decimal separator.
struct DatasetCsv {
  ForecastKind kind = ForecastKind::Gaussian;
  bool has_y = false;
  Eigen::MatrixX2d coords;
  Eigen::VectorXd y;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;  // empty for Bernoulli

  int n() const { return static_cast<int>(coords.rows()); }
  int num_agents() const { return static_cast<int>(a.cols()); }
  AgentForecastSet forecasts() const {
    return kind == ForecastKind::Gaussian ? AgentForecastSet::gaussian(a, b)
                                          : AgentForecastSet::bernoulli(a);
  }
};

// Throws SchemaError naming the offending row/column.
DatasetCsv read_dataset_csv(const std::string& path, bool expect_y);

// Deterministic float formatting (shortest round-trip is not needed; %.17g
// reproduces bits on read-back).
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace bsps
