#include "wg/commands.hpp"

#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "wg/errors.hpp"
#include "wg/timedelay.hpp"

namespace wg::commands {

namespace fs = std::filesystem;
using config::CachePolicy;
using config::RunConfig;

namespace {

// principal square root with nonnegative real part, for the dual reporting
cplx sqrt_report(cplx lambda) {
  cplx s = std::sqrt(lambda);
  return s.real() < 0.0 ? -s : s;
}

std::string csv_complex(cplx z) { return fmt17(z.real()) + "," + fmt17(z.imag()); }

class FileLock {
 public:
  explicit FileLock(const std::string& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace

std::string basis_cache_path(const RunConfig& cfg, const geometry::Mesh& mesh) {
  std::string dir = cfg.cache_dir.empty() ? cfg.output_dir : cfg.cache_dir;
  char name[160];
  std::snprintf(name, sizeof(name), "basis_%s_M%d_P%d_o%d.wgb", mesh.fingerprint().c_str(),
                cfg.eigenvalue_count, cfg.modes_per_port, cfg.fem_order);
  return (fs::path(dir) / name).string();
}

modes::SheetIndex resolve_sheet(const RunConfig& cfg, const modes::TransverseBasis& tb) {
  if (!cfg.sheet_modes.empty()) {
    std::vector<int> zero_based;
    for (int g : cfg.sheet_modes) zero_based.push_back(g - 1);
    return modes::SheetIndex::from_modes(zero_based, tb);
  }
  return modes::SheetIndex::from_threshold_labels(cfg.sheet_labels, tb);
}

Workspace prepare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  Workspace ws;
  ws.mesh = geometry::build_domain(cfg.domain);
  std::vector<double> widths;
  for (const auto& p : ws.mesh.ports) widths.push_back(p.width);
  ws.tbasis = modes::TransverseBasis(widths, cfg.modes_per_port);

  std::string dir = cfg.cache_dir.empty() ? cfg.output_dir : cfg.cache_dir;
  fs::create_directories(dir);
  ws.basis_path = basis_cache_path(cfg, ws.mesh);

  bool loaded = false;
  if (cfg.cache == CachePolicy::On && fs::exists(ws.basis_path)) {
    fem::EigenBasis eb = fem::read_basis(ws.basis_path);
    if (eb.meta.mesh_fingerprint != ws.mesh.fingerprint() || eb.meta.M != cfg.eigenvalue_count ||
        eb.meta.P_tot != ws.tbasis.total() || eb.meta.order != cfg.fem_order)
      throw Error("basis cache '" + ws.basis_path + "' does not match its configuration");
    ws.ebasis = std::move(eb);
    ws.cache_hit = true;
    loaded = true;
    log << "basis cache hit: " << ws.basis_path << "\n";
  }

  fem::SparseOperatorPair ops = fem::assemble(ws.mesh, cfg.fem_order);
  if (!loaded) {
    log << "solving " << cfg.eigenvalue_count << " Neumann eigenpairs on "
        << ops.dof_count() << " dofs\n";
    fem::EigenSolveOptions eopts;
    ws.ebasis = fem::solve_neumann_eigenbasis(ops, ws.mesh, ws.tbasis, cfg.eigenvalue_count, eopts);
    char params[160];
    std::snprintf(params, sizeof(params), "refinement=%d;modes_per_port=%d;aux=%g",
                  cfg.domain.refinement, cfg.modes_per_port, cfg.aux_lambda);
    ws.ebasis.meta.params = params;
    if (cfg.cache != CachePolicy::Off) {
      FileLock lock(ws.basis_path + ".lock");
      std::string tmp = ws.basis_path + ".tmp";
      fem::write_basis(ws.ebasis, tmp);
      fs::rename(tmp, ws.basis_path);
      log << "basis written: " << ws.basis_path << "\n";
    }
  }
  Eigen::MatrixXd direct = fem::direct_ndmap(ops, ws.mesh, ws.tbasis, cfg.aux_lambda);
  ws.engine = std::make_unique<scattering::Engine>(ws.tbasis, ws.ebasis, direct, cfg.aux_lambda);
  return ws;
}

void cmd_basis(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  RunConfig c = cfg;
  if (c.cache == CachePolicy::Off) c.cache = CachePolicy::On;
  Workspace ws = prepare(c, log);
  out << "# wgscatter basis v1\n";
  out << "path,cache_hit,mesh_fingerprint,M,P_tot,order\n";
  out << ws.basis_path << "," << (ws.cache_hit ? 1 : 0) << "," << ws.ebasis.meta.mesh_fingerprint
      << "," << ws.ebasis.meta.M << "," << ws.ebasis.meta.P_tot << "," << ws.ebasis.meta.order
      << "\n";
}

void cmd_smatrix(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Workspace ws = prepare(cfg, log);
  modes::SheetIndex J = resolve_sheet(cfg, ws.tbasis);
  out << "# wgscatter smatrix v1\n";
  out << "lambda_re,lambda_im,sqrt_lambda_re,sqrt_lambda_im,sheet,j,k,p,value_re,value_im,"
         "kernel_gap,tau_cond,truncation_defect\n";
  std::vector<scattering::ScatteringDerivatives> results(cfg.lambdas.size());
  std::vector<double> trunc(cfg.lambdas.size(), -1.0);
  parallel_for(
      cfg.lambdas.size(),
      [&](size_t i) {
        results[i] = ws.engine->s_derivatives(cfg.lambdas[i], J, cfg.deriv_order);
        if (cfg.truncation_check)
          trunc[i] = ws.engine->truncation_defect(cfg.lambdas[i], J);
      },
      cfg.threads);
  for (size_t i = 0; i < cfg.lambdas.size(); ++i) {
    const auto& sd = results[i];
    cplx rt = sqrt_report(sd.lambda);
    for (int p = 0; p <= cfg.deriv_order; ++p) {
      const Eigen::MatrixXcd& Sp = p == 0 ? sd.S : sd.derivs[p - 1];
      for (int j = 0; j < Sp.rows(); ++j)
        for (int k = 0; k < Sp.cols(); ++k) {
          out << csv_complex(sd.lambda) << "," << csv_complex(rt) << "," << J.label() << ","
              << j + 1 << "," << k + 1 << "," << p << "," << csv_complex(Sp(j, k)) << ","
              << fmt17(sd.diag.kernel_gap) << "," << fmt17(sd.diag.tau_cond) << ","
              << fmt17(trunc[i]) << "\n";
        }
    }
  }
}

namespace {

void emit_resonance_rows(std::ostream& out, const std::vector<resonance::ResonanceResult>& rs,
                         const std::string& prefix) {
  for (const auto& r : rs) {
    cplx rt = sqrt_report(r.lambda0);
    out << prefix << csv_complex(r.lambda0) << "," << csv_complex(rt) << "," << r.order << ","
        << r.J.label() << "," << fmt17(r.newton_residual) << ","
        << csv_complex(r.count_integral_value) << "," << (r.cluster ? 1 : 0) << "\n";
  }
}

}  // namespace

void cmd_resonances(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Workspace ws = prepare(cfg, log);
  modes::SheetIndex J = resolve_sheet(cfg, ws.tbasis);
  resonance::SearchOptions opts;
  opts.margin = cfg.margin;
  opts.axis_clip = cfg.axis_clip;
  opts.max_depth = cfg.max_depth;
  opts.threads = cfg.threads;
  auto rs = resonance::locate_resonances(*ws.engine, {cfg.re_min, cfg.im_min},
                                         {cfg.re_max, cfg.im_max}, J, opts);
  out << "# wgscatter resonances v1\n";
  out << "lambda_re,lambda_im,sqrt_lambda_re,sqrt_lambda_im,order,sheet,newton_residual,"
         "count_re,count_im,cluster\n";
  emit_resonance_rows(out, rs, "");
  log << rs.size() << " resonances found\n";
}

void cmd_embedded(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Workspace ws = prepare(cfg, log);
  modes::SheetIndex J = cfg.sheet_modes.empty() && cfg.sheet_labels.empty()
                            ? modes::SheetIndex::propagating(
                                  0.5 * (cfg.interval_from + cfg.interval_to), ws.tbasis)
                            : resolve_sheet(cfg, ws.tbasis);
  resonance::EmbeddedScanOptions opts;
  opts.threads = cfg.threads;
  auto xs = resonance::embedded_scan(*ws.engine, cfg.interval_from, cfg.interval_to, J,
                                     cfg.scan_step, opts);
  out << "# wgscatter embedded v1\n";
  out << "lambda,sqrt_lambda,indicator,sheet\n";
  for (double x : xs)
    out << fmt17(x) << "," << fmt17(std::sqrt(x)) << "," << fmt17(ws.engine->embedded_indicator(x, J))
        << "," << J.label() << "\n";
  log << xs.size() << " embedded eigenvalues found\n";
}

void cmd_timedelay(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Workspace ws = prepare(cfg, log);
  modes::SheetIndex J = modes::SheetIndex::from_threshold_labels({1}, ws.tbasis);
  out << "# wgscatter timedelay v1\n";
  out << "lambda,trace_re,trace_im,trace_raw_re,trace_raw_im,hermiticity_defect\n";
  std::vector<timedelay::TimeDelayResult> res(cfg.lambda_grid.size());
  parallel_for(
      cfg.lambda_grid.size(),
      [&](size_t i) { res[i] = timedelay::time_delay(*ws.engine, cfg.lambda_grid[i], J); },
      cfg.threads);
  for (const auto& td : res) {
    out << fmt17(td.lambda) << "," << csv_complex(td.trace) << ","
        << csv_complex(td.T_raw.trace()) << "," << fmt17(td.hermiticity_defect) << "\n";
  }
  if (cfg.with_scattering_length && ws.tbasis.num_ports() == 1) {
    auto sl = timedelay::scattering_length(*ws.engine, J);
    out << "0," << fmt17(sl.value) << "," << fmt17(sl.imag_defect) << ",0,0,0\n";
    if (sl.warned) log << "scattering length imaginary defect above 1e-6\n";
    log << "scattering length " << sl.value << " (2 area / width = "
        << 2.0 * ws.mesh.area() / ws.tbasis.width(0) << ")\n";
  }
}

void cmd_sheetgrid(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Workspace ws = prepare(cfg, log);
  modes::SheetIndex J = resolve_sheet(cfg, ws.tbasis);
  if (cfg.grid_rows < 1 || cfg.grid_cols < 1) throw ConfigError("sheetgrid needs rows and cols");
  out << "# wgscatter sheetgrid v1\n";
  out << "lambda_re,lambda_im,abs_det_s,log10_abs_det_s\n";
  std::vector<double> dets((size_t)cfg.grid_rows * cfg.grid_cols,
                           std::numeric_limits<double>::quiet_NaN());
  auto point = [&](int r, int c2) {
    double x = cfg.re_min + (cfg.re_max - cfg.re_min) * (cfg.grid_cols == 1 ? 0.5 : (double)c2 / (cfg.grid_cols - 1));
    double y = cfg.im_min + (cfg.im_max - cfg.im_min) * (cfg.grid_rows == 1 ? 0.5 : (double)r / (cfg.grid_rows - 1));
    return cplx(x, y);
  };
  parallel_for(
      dets.size(),
      [&](size_t i) {
        int r = (int)(i / cfg.grid_cols), c2 = (int)(i % cfg.grid_cols);
        try {
          auto sd = ws.engine->s_matrix(point(r, c2), J);
          dets[i] = std::abs(sd.S.determinant());
        } catch (const Error&) {
        }
      },
      cfg.threads);
  for (int r = 0; r < cfg.grid_rows; ++r)
    for (int c2 = 0; c2 < cfg.grid_cols; ++c2) {
      cplx z = point(r, c2);
      double d = dets[(size_t)r * cfg.grid_cols + c2];
      out << csv_complex(z) << "," << fmt17(d) << "," << fmt17(std::log10(d)) << "\n";
    }
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.sweep_values.empty()) throw ConfigError("sweep needs values");
  out << "# wgscatter sweep v1\n";
  out << "param,value,lambda_re,lambda_im,sqrt_lambda_re,sqrt_lambda_im,order,sheet,"
         "newton_residual,count_re,count_im,cluster\n";
  for (double v : cfg.sweep_values) {
    RunConfig c = cfg;
    if (cfg.sweep_param == "obstacle_offset")
      c.domain.obstacle_offset = v;
    else if (cfg.sweep_param == "obstacle_radius")
      c.domain.obstacle_radius = v;
    else if (cfg.sweep_param == "stub_width") {
      if (c.domain.stubs.empty()) throw ConfigError("stub_width sweep needs a stub");
      c.domain.stubs[0].width = v;
    } else
      throw ConfigError("sweep.param must be obstacle_offset|obstacle_radius|stub_width");
    log << "sweep " << cfg.sweep_param << " = " << v << "\n";
    Workspace ws = prepare(c, log);
    modes::SheetIndex J = resolve_sheet(c, ws.tbasis);
    resonance::SearchOptions opts;
    opts.margin = c.margin;
    opts.axis_clip = c.axis_clip;
    opts.max_depth = c.max_depth;
    opts.threads = c.threads;
    auto rs = resonance::locate_resonances(*ws.engine, {c.re_min, c.im_min},
                                           {c.re_max, c.im_max}, J, opts);
    emit_resonance_rows(out, rs, cfg.sweep_param + "," + fmt17(v) + ",");
  }
}

}  // namespace wg::commands
