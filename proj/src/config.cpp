#include "wg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wg/errors.hpp"

namespace wg::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_numbers(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    // allow comma separators
    std::replace(tok.begin(), tok.end(), ',', ' ');
    std::istringstream tin(tok);
    double x;
    while (tin >> x) out.push_back(x);
  }
  if (out.empty()) throw ConfigError("no numeric values for key '" + key + "'");
  return out;
}

double parse_one(const std::string& v, const std::string& key) {
  auto xs = parse_numbers(v, key);
  if (xs.size() != 1) throw ConfigError("expected one value for key '" + key + "'");
  return xs[0];
}

std::vector<int> to_ints(const std::vector<double>& xs, const std::string& key) {
  std::vector<int> out;
  for (double x : xs) {
    if (x != std::floor(x)) throw ConfigError("expected integers for key '" + key + "'");
    out.push_back((int)x);
  }
  return out;
}

void set_key(RunConfig& c, const std::string& full_key, const std::string& value) {
  const std::string& k = full_key;
  auto& d = c.domain;
  if (k == "domain.kind") {
    if (value == "channel")
      d.kind = geometry::DomainKind::ChannelWithObstacle;
    else if (value == "disc")
      d.kind = geometry::DomainKind::DiscWithStubs;
    else if (value == "external")
      d.kind = geometry::DomainKind::ExternalMesh;
    else
      throw ConfigError("unknown domain kind '" + value + "'");
  } else if (k == "domain.channel_width")
    d.channel_width = parse_one(value, k);
  else if (k == "domain.channel_length")
    d.channel_length = parse_one(value, k);
  else if (k == "domain.obstacle_radius")
    d.obstacle_radius = parse_one(value, k);
  else if (k == "domain.obstacle_offset")
    d.obstacle_offset = parse_one(value, k);
  else if (k == "domain.disc_radius")
    d.disc_radius = parse_one(value, k);
  else if (k == "domain.stub") {
    auto xs = parse_numbers(value, k);
    if (xs.size() != 3) throw ConfigError("stub takes: width length attach_angle");
    d.stubs.push_back({xs[0], xs[1], xs[2]});
  } else if (k == "domain.mesh_path")
    d.mesh_path = value;
  else if (k == "domain.refinement")
    d.refinement = (int)parse_one(value, k);
  else if (k == "numerics.eigenvalue_count")
    c.eigenvalue_count = (int)parse_one(value, k);
  else if (k == "numerics.modes_per_port")
    c.modes_per_port = (int)parse_one(value, k);
  else if (k == "numerics.aux_lambda")
    c.aux_lambda = parse_one(value, k);
  else if (k == "numerics.fem_order")
    c.fem_order = (int)parse_one(value, k);
  else if (k == "numerics.threads")
    c.threads = (int)parse_one(value, k);
  else if (k == "sheet.thresholds")
    c.sheet_labels = to_ints(parse_numbers(value, k), k);
  else if (k == "sheet.modes") {
    c.sheet_modes = to_ints(parse_numbers(value, k), k);
    c.sheet_labels.clear();
  } else if (k == "output.dir")
    c.output_dir = value;
  else if (k == "output.cache_dir")
    c.cache_dir = value;
  else if (k == "output.cache") {
    if (value == "on")
      c.cache = CachePolicy::On;
    else if (value == "off")
      c.cache = CachePolicy::Off;
    else if (value == "refresh")
      c.cache = CachePolicy::Refresh;
    else
      throw ConfigError("cache policy must be on|off|refresh");
  } else if (k == "smatrix.lambda") {
    auto xs = parse_numbers(value, k);
    if (xs.size() % 2 != 0) throw ConfigError("smatrix.lambda takes re/im pairs");
    for (size_t i = 0; i + 1 < xs.size(); i += 2) c.lambdas.emplace_back(xs[i], xs[i + 1]);
  } else if (k == "smatrix.order")
    c.deriv_order = (int)parse_one(value, k);
  else if (k == "smatrix.truncation_check")
    c.truncation_check = value == "on" || value == "true" || value == "1";
  else if (k == "resonances.re_min" || k == "sheetgrid.re_min")
    c.re_min = parse_one(value, k);
  else if (k == "resonances.re_max" || k == "sheetgrid.re_max")
    c.re_max = parse_one(value, k);
  else if (k == "resonances.im_min" || k == "sheetgrid.im_min")
    c.im_min = parse_one(value, k);
  else if (k == "resonances.im_max" || k == "sheetgrid.im_max")
    c.im_max = parse_one(value, k);
  else if (k == "resonances.margin")
    c.margin = parse_one(value, k);
  else if (k == "resonances.axis_clip")
    c.axis_clip = parse_one(value, k);
  else if (k == "resonances.max_depth")
    c.max_depth = (int)parse_one(value, k);
  else if (k == "embedded.from")
    c.interval_from = parse_one(value, k);
  else if (k == "embedded.to")
    c.interval_to = parse_one(value, k);
  else if (k == "embedded.step")
    c.scan_step = parse_one(value, k);
  else if (k == "timedelay.lambda") {
    for (double x : parse_numbers(value, k)) c.lambda_grid.push_back(x);
  } else if (k == "timedelay.grid") {
    auto xs = parse_numbers(value, k);
    if (xs.size() != 3 || xs[2] < 2) throw ConfigError("timedelay.grid takes: start stop count");
    int cnt = (int)xs[2];
    for (int i = 0; i < cnt; ++i)
      c.lambda_grid.push_back(xs[0] + (xs[1] - xs[0]) * i / (cnt - 1));
  } else if (k == "timedelay.scattering_length")
    c.with_scattering_length = value == "on" || value == "true" || value == "1";
  else if (k == "sheetgrid.rows")
    c.grid_rows = (int)parse_one(value, k);
  else if (k == "sheetgrid.cols")
    c.grid_cols = (int)parse_one(value, k);
  else if (k == "sweep.param")
    c.sweep_param = value;
  else if (k == "sweep.values")
    c.sweep_values = parse_numbers(value, k);
  else
    throw ConfigError("unknown configuration key '" + k + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (eigenvalue_count < 1 || eigenvalue_count > 200000)
    throw ConfigError("eigenvalue_count out of range [1, 200000]");
  if (modes_per_port < 1 || modes_per_port > 400)
    throw ConfigError("modes_per_port out of range [1, 400]");
  if (domain.refinement < 4 || domain.refinement > 400)
    throw ConfigError("refinement out of range [4, 400]");
  if (fem_order != 1 && fem_order != 2) throw ConfigError("fem_order must be 1 or 2");
  if (threads < 1 || threads > 256) throw ConfigError("threads out of range [1, 256]");
  if (aux_lambda >= 0.0)
    throw ConfigError("aux_lambda must be negative (coercive auxiliary problem)");
  if (!sheet_modes.empty())
    for (int g : sheet_modes)
      if (g < 1) throw ConfigError("sheet modes are 1-based positive indices");
  if (sheet_modes.empty())
    for (int lab : sheet_labels)
      if (lab < 1) throw ConfigError("sheet threshold labels are 1-based positive indices");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("empty key or value at line " + std::to_string(lineno));
    std::string full = section.empty() ? key : section + "." + key;
    set_key(cfg, full, value);
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like section.key=value");
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  set_key(cfg, key, value);
}

}  // namespace wg::config
