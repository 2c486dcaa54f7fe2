#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wg/commands.hpp"
#include "wg/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "configuration file (key = value sections)");
  cmd->add_option("-s,--set", args.overrides,
                  "override a configuration key, e.g. --set domain.refinement=40");
  cmd->add_option("-o,--out", args.out_path, "CSV output path (default: stdout)");
}

wg::config::RunConfig load(const CommonArgs& args) {
  wg::config::RunConfig cfg;
  if (!args.config_path.empty()) cfg = wg::config::parse_config_file(args.config_path);
  for (const auto& ov : args.overrides) wg::config::apply_override(cfg, ov);
  cfg.validate();
  return cfg;
}

int run(const CommonArgs& args,
        void (*fn)(const wg::config::RunConfig&, std::ostream&, std::ostream&)) {
  try {
    wg::config::RunConfig cfg = load(args);
    std::filesystem::create_directories(cfg.output_dir);
    if (!args.out_path.empty()) {
      std::ofstream f(args.out_path);
      if (!f) throw wg::Error("cannot open output file '" + args.out_path + "'");
      fn(cfg, f, std::cerr);
    } else {
      fn(cfg, std::cout, std::cerr);
    }
    return 0;
  } catch (const wg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const wg::Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "wgscatter: scattering matrices, resonances, embedded eigenvalues and time delay\n"
      "for planar waveguides with cylindrical ends"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(const wg::config::RunConfig&, std::ostream&, std::ostream&);
  };
  const Sub subs[] = {
      {"basis", "build or refresh the cached interior eigenbasis", wg::commands::cmd_basis},
      {"smatrix", "evaluate S and its derivatives at given lambda values",
       wg::commands::cmd_smatrix},
      {"resonances", "locate scattering poles inside a rectangle", wg::commands::cmd_resonances},
      {"embedded", "scan a real interval for embedded eigenvalues", wg::commands::cmd_embedded},
      {"timedelay", "time delay on a lambda grid plus the scattering length",
       wg::commands::cmd_timedelay},
      {"sheetgrid", "|det S| over a rectangular grid on a chosen sheet",
       wg::commands::cmd_sheetgrid},
      {"sweep", "repeat the resonance search over a family of domains", wg::commands::cmd_sweep},
  };

  std::vector<std::pair<CommonArgs, const Sub*>> bound;
  bound.reserve(std::size(subs));
  for (const Sub& s : subs) {
    bound.emplace_back(CommonArgs{}, &s);
  }
  for (size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(cmd, bound[i].first);
    cmd->callback([&, i] { std::exit(run(bound[i].first, bound[i].second->fn)); });
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
