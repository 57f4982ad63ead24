// mwt: simulate, reconstruct and evaluate microwave tomography runs.
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mwt/app.hpp"

namespace {

// Flags are held as optionals so that only explicitly given ones override the config file.
struct Flags {
  std::optional<std::string> config, phantom, method, prior, weights, input, gt, out;
  std::optional<int> grid_n, ntx, nrx, nmax, threads, t_start;
  std::optional<double> freq, radius, noise, lambda, lr, tv_weight;
  std::optional<std::uint64_t> seed;
  std::optional<bool> no_flips;
  std::vector<std::string> recons;
};

template <class T, class U>
void overlay(const std::optional<T>& flag, U& field) {
  if (flag) field = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microwave tomography with single-step diffusion regularisation"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file (flags override it)")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (default: $MWT_DATA_DIR/...)");
    sub->add_option("--threads", f.threads, "worker threads for per-transmitter solves")->check(CLI::PositiveNumber);
  };
  auto geometry = [&](CLI::App* sub) {
    sub->add_option("--grid-n", f.grid_n, "collocation points per axis (even, >= 8)");
    sub->add_option("--freq", f.freq, "frequency in Hz");
    sub->add_option("--radius", f.radius, "antenna circle radius in m");
    sub->add_option("--ntx", f.ntx, "number of transmitters");
    sub->add_option("--nrx", f.nrx, "number of receivers");
  };

  auto* simulate = app.add_subcommand("simulate", "synthesise a dataset bundle");
  common(simulate);
  geometry(simulate);
  simulate->add_option("--phantom", f.phantom, "austria | disk | shapes:<seed>");
  simulate->add_option("--noise", f.noise, "noise level in percent of the RMS field");
  simulate->add_option("--seed", f.seed, "noise seed");

  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct a bundle");
  common(reconstruct);
  reconstruct->add_option("--input", f.input, "bundle directory");
  reconstruct->add_option("--method", f.method, "bp | ssd | tv | none")
      ->check(CLI::IsMember({"bp", "ssd", "tv", "none"}));
  reconstruct->add_option("--prior", f.prior, "zero | smooth | weights")
      ->check(CLI::IsMember({"zero", "smooth", "weights"}));
  reconstruct->add_option("--weights", f.weights, "SSDW weight file (or $MWT_PRIOR_WEIGHTS)");
  reconstruct->add_option("--lambda", f.lambda, "SSD weight");
  reconstruct->add_option("--tv-weight", f.tv_weight, "TV weight");
  reconstruct->add_option("--lr", f.lr, "Adam learning rate");
  reconstruct->add_option("--nmax", f.nmax, "maximum iterations");
  reconstruct->add_option("--t-start", f.t_start, "first diffusion timestep of the anneal (ends at 1)");
  reconstruct->add_option("--seed", f.seed, "RNG seed for diffusion noise and flips");
  reconstruct->add_flag("--no-flips{true}", f.no_flips, "disable random flips");

  auto* eval = app.add_subcommand("eval", "SSIM / PSNR / composite score against ground truth");
  common(eval);
  eval->add_option("--input", f.input, "bundle directory (GT and recon_* subdirectories)");
  eval->add_option("--gt", f.gt, "ground-truth raster (.mwti)");
  eval->add_option("--recon", f.recons, "name=path.mwti, repeatable");

  auto* dump = app.add_subcommand("dump-kernel", "write the periodised kernel coefficients");
  common(dump);
  geometry(dump);

  auto* selftest = app.add_subcommand("selftest", "adjoint, Born, kernel, schedule and disk checks");
  common(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mwt::kExitUsage;  // --help exits 0
  }

  mwt::RunConfig c;
  c.command = app.get_subcommands().front()->get_name();
  try {
    if (f.config) {
      std::ifstream in(*f.config);
      mwt::apply_json(c, nlohmann::json::parse(in));
      c.command = app.get_subcommands().front()->get_name();
    }
    overlay(f.phantom, c.phantom);
    overlay(f.method, c.method);
    overlay(f.prior, c.prior);
    overlay(f.weights, c.weights);
    overlay(f.input, c.input);
    overlay(f.gt, c.gt);
    overlay(f.out, c.out);
    overlay(f.grid_n, c.grid_n);
    overlay(f.ntx, c.n_tx);
    overlay(f.nrx, c.n_rx);
    overlay(f.nmax, c.recon.n_max);
    overlay(f.t_start, c.recon.t_start);
    overlay(f.threads, c.threads);
    overlay(f.freq, c.frequency_hz);
    overlay(f.radius, c.radius);
    overlay(f.noise, c.noise_percent);
    overlay(f.lambda, c.recon.lambda);
    overlay(f.lr, c.recon.learning_rate);
    overlay(f.tv_weight, c.recon.tv_weight);
    overlay(f.seed, c.recon.seed);
    if (f.no_flips && *f.no_flips) c.recon.random_flips = false;
    if (!f.recons.empty()) c.recons = f.recons;
    if (c.recon.n_max < c.recon.stop_window_start) c.recon.stop_window_start = c.recon.n_max;

    const std::map<std::string, std::function<int(const mwt::RunConfig&, std::ostream&)>> commands{
        {"simulate", mwt::cmd_simulate}, {"reconstruct", mwt::cmd_reconstruct}, {"eval", mwt::cmd_eval},
        {"dump-kernel", mwt::cmd_dump_kernel}, {"selftest", mwt::cmd_selftest}};
    return commands.at(c.command)(c, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "mwt " << c.command << ": " << e.what() << "\n";
    return mwt::kExitUsage;
  }
}
