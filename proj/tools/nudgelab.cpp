#include <iostream>

#include <CLI11.hpp>

#include "nudgelab/cli.hpp"

int main(int argc, char** argv) {
  using namespace nudgelab;
  CLI::App app{"Nudging data assimilation with noisy observations"};
  app.require_subcommand(1);
  cli::Options opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "run configuration file")->required();
    sub->add_option("-o,--out-dir", opt.out_dir, "output directory (default: output.dir, $NUDGELAB_OUT_DIR, ./nudgelab_out)");
    sub->add_option("--members", opt.members, "ensemble size override")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_flag("--check", opt.check, "exit with code 3 when the run's check fails");
  };
  auto* sim = app.add_subcommand("simulate", "run the reference/assimilated pair or an ensemble");
  add_common(sim);
  auto* swp = app.add_subcommand("sweep", "gamma and floor over a (mu, delta) grid");
  add_common(swp);
  swp->add_option("--grid", opt.grid, "grid such as \"mu=1,10,100;delta=0.125,0.0625\"");
  auto* ver = app.add_subcommand("verify", "estimate the structural constants and check the assumptions");
  add_common(ver);
  auto* conv = app.add_subcommand("convolution-check", "Monte Carlo check of the stochastic convolution");
  add_common(conv);
  conv->add_option("--paths", opt.paths, "number of Monte Carlo paths")->check(CLI::Range(2, 100000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::config_error;
  }
  if (*sim) return cli::simulate(opt, std::cout, std::cerr);
  if (*swp) return cli::sweep(opt, std::cout, std::cerr);
  if (*ver) return cli::verify(opt, std::cout, std::cerr);
  return cli::convolution_check(opt, std::cout, std::cerr);
}
