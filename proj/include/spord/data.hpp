#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace spord {

inline constexpr int kMissingResponse = 0;

/// Survey respondents with covariate cell, area and K ordinal responses.
/// Cells and areas are 0-based internally; the CSV interchange format and
/// response categories are 1-based.
struct SurveyDataset {
  int num_respondents = 0;  // n
  int num_variables = 0;    // K
  int num_categories = 0;   // J
  int num_cells = 0;        // Z
  int num_areas = 0;        // M
  Eigen::MatrixXi responses;         // n x K, values in {1..J}, kMissingResponse for NA
  std::vector<int> cell_index;       // size n, in {0..Z-1}
  std::vector<int> area_index;       // size n, in {0..M-1}
  std::vector<int> area_sample_sizes;  // size M, counts per area

  bool is_missing(int i, int k) const { return responses(i, k) == kMissingResponse; }
  int total_sampled() const;
  int num_observed() const;  // non-missing (respondent, variable) pairs

  // Recomputes area_sample_sizes and checks all invariants; throws on violation.
  void finalize_and_validate();
};

// CSV with header "respondent_id,cell,area,y1,...,yK"; cells/areas 1-based,
// missing responses empty or "NA". Pass 0 to infer a dimension from the data.
SurveyDataset load_dataset_csv(const std::string& path, int num_areas = 0,
                               int num_categories = 0, int num_cells = 0);

void save_dataset_csv(const std::string& path, const SurveyDataset& data);

}  // namespace spord
