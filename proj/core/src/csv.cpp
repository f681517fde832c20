#include "taulasso/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace taulasso {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

CsvDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path, 0, 0);

  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file: " + path, 1, 1);
  CsvDataset out;
  out.column_names = split_line(line);
  const std::size_t ncol = out.column_names.size();
  if (ncol < 2)
    throw CsvError("need a response column and at least one predictor", 1, 1);
  for (auto& name : out.column_names) name = trimmed(name);

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncol)
      throw CsvError("expected " + std::to_string(ncol) + " cells, found " +
                         std::to_string(cells.size()),
                     lineno, static_cast<int>(cells.size()));
    std::vector<double> row(ncol);
    for (std::size_t c = 0; c < ncol; ++c) {
      const std::string cell = trimmed(cells[c]);
      char* end = nullptr;
      row[c] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw CsvError("non-numeric cell '" + cell + "'", lineno, static_cast<int>(c + 1));
      if (!std::isfinite(row[c]))
        throw CsvError("non-finite cell", lineno, static_cast<int>(c + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("no data rows", lineno, 1);

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(ncol - 1);
  out.data.y.resize(n);
  out.data.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.data.y(i) = rows[static_cast<std::size_t>(i)][0];
    for (Eigen::Index j = 0; j < p; ++j)
      out.data.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + 1)];
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::vector<std::string>* column_names) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open " + path, 0, 0);

  if (column_names) {
    for (std::size_t c = 0; c < column_names->size(); ++c)
      out << (c ? "," : "") << (*column_names)[c];
  } else {
    out << "y";
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x" << j + 1;
  }
  out << "\n";

  char buf[40];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", data.y(i));
    out << buf;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.12g", data.X(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace taulasso
