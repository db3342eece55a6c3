#include "spord/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spord {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

int SurveyDataset::total_sampled() const {
  int n = 0;
  for (int c : area_sample_sizes) n += c;
  return n;
}

int SurveyDataset::num_observed() const {
  int n = 0;
  for (int i = 0; i < num_respondents; ++i)
    for (int k = 0; k < num_variables; ++k) n += !is_missing(i, k);
  return n;
}

void SurveyDataset::finalize_and_validate() {
  if (num_respondents < 0 || num_variables <= 0 || num_categories < 2 || num_cells <= 0 ||
      num_areas <= 0) {
    throw std::invalid_argument("dataset: invalid dimensions");
  }
  if (responses.rows() != num_respondents || responses.cols() != num_variables ||
      static_cast<int>(cell_index.size()) != num_respondents ||
      static_cast<int>(area_index.size()) != num_respondents) {
    throw std::invalid_argument("dataset: field sizes inconsistent with n, K");
  }
  area_sample_sizes.assign(num_areas, 0);
  for (int i = 0; i < num_respondents; ++i) {
    if (cell_index[i] < 0 || cell_index[i] >= num_cells)
      throw std::invalid_argument("dataset: cell index out of range for respondent " +
                                  std::to_string(i));
    if (area_index[i] < 0 || area_index[i] >= num_areas)
      throw std::invalid_argument("dataset: area index out of range for respondent " +
                                  std::to_string(i));
    ++area_sample_sizes[area_index[i]];
    for (int k = 0; k < num_variables; ++k) {
      const int y = responses(i, k);
      if (y != kMissingResponse && (y < 1 || y > num_categories))
        throw std::invalid_argument("dataset: response out of range for respondent " +
                                    std::to_string(i) + ", variable " + std::to_string(k + 1));
    }
  }
}

SurveyDataset load_dataset_csv(const std::string& path, int num_areas, int num_categories,
                               int num_cells) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || trim(header[0]) != "respondent_id" || trim(header[1]) != "cell" ||
      trim(header[2]) != "area") {
    throw std::runtime_error("dataset: expected header respondent_id,cell,area,y1,...,yK in " +
                             path);
  }
  const int k_vars = static_cast<int>(header.size()) - 3;
  for (int k = 0; k < k_vars; ++k) {
    if (trim(header[3 + k]) != "y" + std::to_string(k + 1))
      throw std::runtime_error("dataset: unexpected response column name '" + header[3 + k] + "'");
  }

  SurveyDataset d;
  d.num_variables = k_vars;
  std::vector<std::array<int, 2>> meta;  // cell, area (1-based as read)
  std::vector<std::vector<int>> rows;
  int lineno = 1;
  int max_cell = 0, max_area = 0, max_cat = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 3 + k_vars)
      throw std::runtime_error("dataset: line " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(3 + k_vars));
    try {
      const int cell = std::stoi(trim(fields[1]));
      const int area = std::stoi(trim(fields[2]));
      std::vector<int> y(k_vars, kMissingResponse);
      for (int k = 0; k < k_vars; ++k) {
        const std::string f = trim(fields[3 + k]);
        if (f.empty() || f == "NA") continue;
        y[k] = std::stoi(f);
        max_cat = std::max(max_cat, y[k]);
      }
      meta.push_back({cell, area});
      rows.push_back(std::move(y));
      max_cell = std::max(max_cell, cell);
      max_area = std::max(max_area, area);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("dataset: malformed line " + std::to_string(lineno) + " in " + path);
    }
  }

  d.num_respondents = static_cast<int>(rows.size());
  d.num_cells = num_cells > 0 ? num_cells : max_cell;
  d.num_areas = num_areas > 0 ? num_areas : max_area;
  d.num_categories = num_categories > 0 ? num_categories : std::max(max_cat, 2);
  d.responses.resize(d.num_respondents, k_vars);
  d.cell_index.resize(d.num_respondents);
  d.area_index.resize(d.num_respondents);
  for (int i = 0; i < d.num_respondents; ++i) {
    d.cell_index[i] = meta[i][0] - 1;
    d.area_index[i] = meta[i][1] - 1;
    for (int k = 0; k < k_vars; ++k) d.responses(i, k) = rows[i][k];
  }
  d.finalize_and_validate();
  return d;
}

void save_dataset_csv(const std::string& path, const SurveyDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  out << "respondent_id,cell,area";
  for (int k = 0; k < data.num_variables; ++k) out << ",y" << (k + 1);
  out << "\n";
  for (int i = 0; i < data.num_respondents; ++i) {
    out << (i + 1) << "," << (data.cell_index[i] + 1) << "," << (data.area_index[i] + 1);
    for (int k = 0; k < data.num_variables; ++k) {
      out << ",";
      if (!data.is_missing(i, k)) out << data.responses(i, k);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("dataset: write failed for " + path);
}

}  // namespace spord
