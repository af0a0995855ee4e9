#include "bsps/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bsps/errors.hpp"

namespace bsps {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw SchemaError("row " + std::to_string(row) + ", column " + col +
                      ": not a number: '" + cell + "'");
  return v;
}

}  // namespace

DatasetCsv read_dataset_csv(const std::string& path, bool expect_y) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);

  std::size_t col = 0;
  auto expect_col = [&](const std::string& name) {
    if (col >= header.size() || header[col] != name)
      throw SchemaError(path + ": expected header column '" + name + "' at position " +
                        std::to_string(col + 1));
    ++col;
  };
  expect_col("s1");
  expect_col("s2");
  if (expect_y) expect_col("y");

  DatasetCsv ds;
  ds.has_y = expect_y;
  // remaining columns decide the forecast kind
  const std::size_t rest = header.size() - col;
  if (rest == 0) throw SchemaError(path + ": no agent forecast columns");
  const bool gaussian = header[col] == "a_1" && rest >= 2 && header[col + 1] == "b_1";
  int J;
  if (gaussian) {
    if (rest % 2 != 0)
      throw SchemaError(path + ": Gaussian schema needs a_j,b_j column pairs");
    J = static_cast<int>(rest / 2);
    for (int j = 1; j <= J; ++j) {
      expect_col("a_" + std::to_string(j));
      expect_col("b_" + std::to_string(j));
    }
    ds.kind = ForecastKind::Gaussian;
  } else {
    J = static_cast<int>(rest);
    for (int j = 1; j <= J; ++j) expect_col("a_" + std::to_string(j));
    ds.kind = ForecastKind::Bernoulli;
  }

  std::vector<std::vector<double>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw SchemaError(path + ": row " + std::to_string(row_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k)
      vals[k] = parse_cell(cells[k], row_no, header[k]);
    rows.push_back(std::move(vals));
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw SchemaError(path + ": no data rows");

  ds.coords.resize(n, 2);
  if (expect_y) ds.y.resize(n);
  ds.a.resize(n, J);
  if (gaussian) ds.b.resize(n, J);
  for (int i = 0; i < n; ++i) {
    std::size_t k = 0;
    ds.coords(i, 0) = rows[i][k++];
    ds.coords(i, 1) = rows[i][k++];
    if (expect_y) ds.y(i) = rows[i][k++];
    for (int j = 0; j < J; ++j) {
      ds.a(i, j) = rows[i][k++];
      if (gaussian) {
        ds.b(i, j) = rows[i][k++];
        if (!(ds.b(i, j) > 0.0))
          throw SchemaError(path + ": row " + std::to_string(i + 2) + ", column b_" +
                            std::to_string(j + 1) + ": variance must be positive");
      } else if (ds.a(i, j) < 0.0 || ds.a(i, j) > 1.0) {
        throw SchemaError(path + ": row " + std::to_string(i + 2) + ", column a_" +
                          std::to_string(j + 1) + ": probability outside [0,1]");
      }
    }
  }
  return ds;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  for (std::size_t k = 0; k < header.size(); ++k)
    out << header[k] << (k + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw LengthMismatch("write_csv: ragged row");
    for (std::size_t k = 0; k < row.size(); ++k)
      out << row[k] << (k + 1 < row.size() ? "," : "\n");
  }
  if (!out) throw SchemaError("write failed: " + path);
}

}  // namespace bsps
