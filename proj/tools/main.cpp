#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ibplab/config.hpp"
#include "ibplab/experiment.hpp"
#include "ibplab/report.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string format = "json";
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t dt_steps = 0;
  int threads = 0;
};

void attach_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment configuration (JSON)")->required();
  cmd->add_option("--out", o.out_dir, "output directory for reports and dumps");
  cmd->add_option("--format", o.format, "report format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--paths", o.paths, "override mc.paths");
  cmd->add_option("--seed", o.seed, "override mc.seed");
  cmd->add_option("--dt-steps", o.dt_steps, "override time.steps");
  cmd->add_option("--threads", o.threads, "worker count (0 = hardware)");
}

ibplab::ExperimentConfig load_with_overrides(const CLI::App* cmd, const CommonOpts& o) {
  ibplab::Json j = ibplab::load_config_file(o.config_path).raw;
  if (cmd->count("--paths") > 0) j["mc"]["paths"] = o.paths;
  if (cmd->count("--seed") > 0) j["mc"]["seed"] = o.seed;
  if (cmd->count("--dt-steps") > 0) j["time"]["steps"] = o.dt_steps;
  if (cmd->count("--threads") > 0) j["mc"]["workers"] = o.threads;
  return ibplab::parse_config(j);
}

void emit(const ibplab::Json& report, const CommonOpts& o, const std::string& stem) {
  const std::string text = report.dump(2) + "\n";
  if (o.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(o.out_dir);
  ibplab::write_text_file(o.out_dir + "/" + stem + ".json", text);
  std::cout << "wrote " << o.out_dir << "/" << stem << ".json\n";
}

void emit_mc_report(const ibplab::MCReport& rep, const ibplab::ExperimentConfig& cfg,
                    const CommonOpts& o, const std::string& stem) {
  emit(rep.to_json(), o, stem);
  if (!o.out_dir.empty()) {
    if (o.format == "csv") {
      ibplab::write_text_file(o.out_dir + "/" + stem + ".csv", ibplab::report_csv(rep));
    }
    ibplab::write_text_file(o.out_dir + "/" + stem + "_ingredients.csv",
                            ibplab::ingredient_csv(ibplab::ingredient_table(cfg)));
    for (int p = 0; p < cfg.dump_paths; ++p) {
      ibplab::write_text_file(o.out_dir + "/" + stem + "_path" + std::to_string(p) + ".csv",
                              ibplab::sample_path_csv(cfg, static_cast<std::uint64_t>(p)));
    }
  }
  for (const auto& c : rep.checks) {
    std::cerr << (c.pass ? "pass" : "FAIL") << " " << c.name << ": diff " << c.diff_mean
              << " (se " << c.diff_se << ", z " << c.z << ")\n";
  }
}

int run_mc(const CLI::App* cmd, const CommonOpts& o, const std::string& model) {
  ibplab::ExperimentConfig cfg = load_with_overrides(cmd, o);
  if (cfg.model != model) {
    throw ibplab::ConfigError("config model is '" + cfg.model + "', expected '" + model + "'");
  }
  const ibplab::MCReport rep = ibplab::run_ibp_experiment(cfg);
  emit_mc_report(rep, cfg, o, "report");
  return rep.all_pass ? 0 : 1;
}

int run_json(const CLI::App* cmd, const CommonOpts& o, const std::string& model,
             ibplab::Json (*runner)(const ibplab::ExperimentConfig&)) {
  ibplab::ExperimentConfig cfg = load_with_overrides(cmd, o);
  if (model != "*" && cfg.model != model) {
    throw ibplab::ConfigError("config model is '" + cfg.model + "', expected '" + model + "'");
  }
  const ibplab::Json rep = runner(cfg);
  emit(rep, o, "report");
  return ibplab::report_passes(rep) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification lab for stochastic-weight derivative identities"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string report_path;

  CLI::App* semi = app.add_subcommand("ibp-semilinear", "paired run for the semilinear model");
  CLI::App* ham = app.add_subcommand("ibp-hamiltonian", "paired run for the two-component model");
  CLI::App* del = app.add_subcommand("ibp-delay", "paired run for the delay model");
  CLI::App* inv = app.add_subcommand("invariance", "invariant-measure oracles and z-tests");
  CLI::App* fom = app.add_subcommand("fomin", "derivative bounds of the invariant measure");
  CLI::App* con = app.add_subcommand("contraction", "synchronous-coupling decay check");
  CLI::App* ora = app.add_subcommand("oracle", "analytic stationary-measure deciders");
  CLI::App* plot = app.add_subcommand("plot", "SVG plots of ingredients and report z-scores");
  CLI::App* chk = app.add_subcommand("check-config", "validate a configuration file");
  for (CLI::App* cmd : {semi, ham, del, inv, fom, con, ora, plot, chk}) attach_common(cmd, o);
  plot->add_option("--report", report_path, "report JSON to summarize");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (semi->parsed()) return run_mc(semi, o, "semilinear");
    if (ham->parsed()) return run_mc(ham, o, "hamiltonian");
    if (del->parsed()) return run_mc(del, o, "delay");
    if (inv->parsed()) return run_json(inv, o, "invariance", ibplab::run_invariance);
    if (fom->parsed()) return run_json(fom, o, "fomin", ibplab::run_fomin);
    if (con->parsed()) return run_json(con, o, "contraction", ibplab::run_contraction);
    if (ora->parsed()) return run_json(ora, o, "*", ibplab::run_oracle);
    if (chk->parsed()) {
      const ibplab::ExperimentConfig cfg = load_with_overrides(chk, o);
      std::cout << "ok " << ibplab::config_hash(cfg.raw) << "\n";
      return 0;
    }
    if (plot->parsed()) {
      const ibplab::ExperimentConfig cfg = load_with_overrides(plot, o);
      const std::string dir = o.out_dir.empty() ? "." : o.out_dir;
      std::filesystem::create_directories(dir);
      const ibplab::IngredientTable table = ibplab::ingredient_table(cfg);
      ibplab::write_text_file(dir + "/ingredients.svg",
                              ibplab::svg_line_chart("weight ingredients", table.times,
                                                     table.series));
      ibplab::write_text_file(dir + "/ingredients.csv", ibplab::ingredient_csv(table));
      if (!report_path.empty()) {
        std::ifstream in(report_path);
        if (!in) throw ibplab::ConfigError("cannot open report: " + report_path);
        ibplab::Json j;
        in >> j;
        const ibplab::MCReport rep = ibplab::MCReport::from_json(j);
        std::vector<std::string> labels;
        std::vector<double> zs;
        for (const auto& c : rep.checks) {
          labels.push_back(c.name);
          zs.push_back(std::abs(c.z));
        }
        ibplab::write_text_file(dir + "/report_z.svg",
                                ibplab::svg_bar_chart("per-function |z|", labels, zs, rep.z_max));
      }
      std::cout << "wrote plots to " << dir << "\n";
      return 0;
    }
  } catch (const ibplab::ConfigError& e) {
    std::cerr << "config-error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
