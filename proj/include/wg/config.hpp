#pragma once

#include <string>
#include <vector>

#include "wg/geometry.hpp"
#include "wg/numeric.hpp"

namespace wg::config {

enum class CachePolicy { On, Off, Refresh };

struct RunConfig {
  geometry::DomainSpec domain;

  int eigenvalue_count = 1000;  // M
  int modes_per_port = 20;      // P_k
  double aux_lambda = -1.0;
  int fem_order = 2;
  int threads = 1;

  std::vector<int> sheet_labels = {1};  // distinct-threshold labels (1-based)
  std::vector<int> sheet_modes;         // alternative: explicit modes (1-based)

  std::string output_dir = ".";
  std::string cache_dir;  // defaults to output_dir
  CachePolicy cache = CachePolicy::On;

  // smatrix
  std::vector<cplx> lambdas;
  int deriv_order = 0;
  bool truncation_check = false;

  // resonances / sheetgrid region
  double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;
  double margin = 1e-3;
  double axis_clip = 1e-5;
  int max_depth = 40;

  // embedded
  double interval_from = 0.0, interval_to = 0.0;
  double scan_step = 1e-3;

  // timedelay
  std::vector<double> lambda_grid;
  bool with_scattering_length = true;

  // sheetgrid
  int grid_rows = 0, grid_cols = 0;

  // sweep
  std::string sweep_param;  // obstacle_offset | obstacle_radius | stub_width
  std::vector<double> sweep_values;

  void validate() const;  // throws ConfigError on out-of-range parameters
};

// Line-oriented `key = value` file with `[section]` headers and '#' comments.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Applies one "section.key=value" override (the CLI --set form).
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace wg::config
