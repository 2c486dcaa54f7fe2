#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "wg/config.hpp"
#include "wg/fem.hpp"
#include "wg/resonance.hpp"
#include "wg/scattering.hpp"

namespace wg::commands {

// Mesh + transverse basis + eigendata + acceleration map for one configuration.
struct Workspace {
  geometry::Mesh mesh;
  modes::TransverseBasis tbasis;
  fem::EigenBasis ebasis;
  std::unique_ptr<scattering::Engine> engine;
  std::string basis_path;
  bool cache_hit = false;
};

std::string basis_cache_path(const config::RunConfig& cfg, const geometry::Mesh& mesh);

// Builds (or loads from cache) everything needed to evaluate S matrices.
Workspace prepare(const config::RunConfig& cfg, std::ostream& log);

modes::SheetIndex resolve_sheet(const config::RunConfig& cfg, const modes::TransverseBasis& tb);

// Subcommand bodies; each writes one CSV document to `out` and
// human-readable progress to `log`.
void cmd_basis(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_smatrix(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_resonances(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_embedded(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_timedelay(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_sheetgrid(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_sweep(const config::RunConfig& cfg, std::ostream& out, std::ostream& log);

}  // namespace wg::commands
