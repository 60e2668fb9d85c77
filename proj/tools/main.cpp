#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "membrane/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral membrane simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", resume;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;

  const std::map<std::string, std::string> about{
      {"simulate", "nonlinear evolution with CSV samples and checkpoints"},
      {"linear", "exact modewise solution of the linearized problem"},
      {"split", "split a linear solution into (Y, c, v)"},
      {"breather", "radial ODE r'' = -2r + 2/r"},
      {"spectrum", "eigenvalues of a linear operator on coefficients"},
      {"smoothing-axioms", "measure smoothing-operator constants"},
      {"nash-moser", "smoothed Newton iteration for the Cauchy problem"},
      {"lifespan-scan", "time to reach a norm threshold versus amplitude"}};
  for (const auto& name : membrane::command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--set", overrides, "section.key=value override (repeatable)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed for the initial perturbation");
    if (name == "simulate") sub->add_option("--resume", resume, "checkpoint to resume from");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : membrane::kExitValidation;
  }

  membrane::RunRequest req;
  req.command = app.get_subcommands().front()->get_name();
  req.out_dir = out_dir;
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) req.config = membrane::Config::load(config_path);
    for (const auto& o : overrides) req.config.set(o);
  } catch (const membrane::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    membrane::RunManifest man;
    man.command = req.command;
    man.termination = "invalid";
    man.error = e.what();
    man.exit_code = membrane::kExitValidation;
    try {
      std::filesystem::create_directories(req.out_dir);
      membrane::write_manifest(man, req.out_dir / "manifest.json");
    } catch (const std::exception&) {
    }
    return membrane::kExitValidation;
  }
  if (sub->count("--seed")) req.seed = seed;
  if (!resume.empty()) req.resume = resume;
  return membrane::run(req, std::cerr);
}
