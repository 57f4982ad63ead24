#include "mwt/app.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "mwt/denoiser.hpp"
#include "mwt/io.hpp"
#include "mwt/metrics.hpp"
#include "mwt/phantoms.hpp"
#include "mwt/selfcheck.hpp"

#ifndef MWT_VERSION
#define MWT_VERSION "unknown"
#endif

namespace mwt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return MWT_VERSION; }

json to_json(const RunConfig& c) {
  const auto& r = c.recon;
  return json{{"command", c.command},
              {"phantom", c.phantom},
              {"grid_n", c.grid_n},
              {"frequency_hz", c.frequency_hz},
              {"half_side", c.half_side},
              {"radius", c.radius},
              {"n_tx", c.n_tx},
              {"n_rx", c.n_rx},
              {"noise_percent", c.noise_percent},
              {"method", c.method},
              {"prior", c.prior},
              {"weights", c.weights},
              {"input", c.input},
              {"gt", c.gt},
              {"recons", c.recons},
              {"out", c.out},
              {"threads", c.threads},
              {"lambda", r.lambda},
              {"learning_rate", r.learning_rate},
              {"n_max", r.n_max},
              {"t_start", r.t_start},
              {"t_end", r.t_end},
              {"a_refresh_period", r.a_refresh_period},
              {"stop_window_start", r.stop_window_start},
              {"stop_delta", r.stop_delta},
              {"adam_beta1", r.adam_beta1},
              {"adam_beta2", r.adam_beta2},
              {"adam_eps", r.adam_eps},
              {"seed", r.seed},
              {"random_flips", r.random_flips},
              {"chi_max", r.chi_max},
              {"tv_weight", r.tv_weight},
              {"schedule_t_max", r.schedule_t_max},
              {"schedule_beta_min", r.schedule_beta_min},
              {"schedule_beta_max", r.schedule_beta_max}};
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  auto& r = c.recon;
  for (const auto& [key, v] : j.items()) {
    if (key == "command") c.command = v.get<std::string>();
    else if (key == "phantom") c.phantom = v.get<std::string>();
    else if (key == "grid_n") c.grid_n = v.get<int>();
    else if (key == "frequency_hz") c.frequency_hz = v.get<double>();
    else if (key == "half_side") c.half_side = v.get<double>();
    else if (key == "radius") c.radius = v.get<double>();
    else if (key == "n_tx") c.n_tx = v.get<int>();
    else if (key == "n_rx") c.n_rx = v.get<int>();
    else if (key == "noise_percent") c.noise_percent = v.get<double>();
    else if (key == "method") c.method = v.get<std::string>();
    else if (key == "prior") c.prior = v.get<std::string>();
    else if (key == "weights") c.weights = v.get<std::string>();
    else if (key == "input") c.input = v.get<std::string>();
    else if (key == "gt") c.gt = v.get<std::string>();
    else if (key == "recons") c.recons = v.get<std::vector<std::string>>();
    else if (key == "out") c.out = v.get<std::string>();
    else if (key == "threads") c.threads = v.get<int>();
    else if (key == "lambda") r.lambda = v.get<double>();
    else if (key == "learning_rate") r.learning_rate = v.get<double>();
    else if (key == "n_max") r.n_max = v.get<int>();
    else if (key == "t_start") r.t_start = v.get<int>();
    else if (key == "t_end") r.t_end = v.get<int>();
    else if (key == "a_refresh_period") r.a_refresh_period = v.get<int>();
    else if (key == "stop_window_start") r.stop_window_start = v.get<int>();
    else if (key == "stop_delta") r.stop_delta = v.get<double>();
    else if (key == "adam_beta1") r.adam_beta1 = v.get<double>();
    else if (key == "adam_beta2") r.adam_beta2 = v.get<double>();
    else if (key == "adam_eps") r.adam_eps = v.get<double>();
    else if (key == "seed") r.seed = v.get<std::uint64_t>();
    else if (key == "random_flips") r.random_flips = v.get<bool>();
    else if (key == "chi_max") r.chi_max = v.get<double>();
    else if (key == "tv_weight") r.tv_weight = v.get<double>();
    else if (key == "schedule_t_max") r.schedule_t_max = v.get<int>();
    else if (key == "schedule_beta_min") r.schedule_beta_min = v.get<double>();
    else if (key == "schedule_beta_max") r.schedule_beta_max = v.get<double>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

fs::path resolve_output(const RunConfig& c, const std::string& fallback) {
  if (!c.out.empty()) return c.out;
  if (const char* root = std::getenv("MWT_DATA_DIR"); root && *root) return fs::path(root) / fallback;
  return fs::path("mwt_data") / fallback;
}

namespace {

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_manifest(const fs::path& dir, const RunConfig& c, const json& extra = json::object()) {
  // The output location is left out so that identical runs give identical bundles.
  json params = to_json(c);
  params.erase("out");
  json m{{"code_version", code_version()}, {"parameters", params}};
  if (!extra.empty()) m["result"] = extra;
  write_json(dir / "manifest.json", m);
}

MeasurementSetup setup_from(const RunConfig& c) {
  return circular_setup(c.radius, c.n_tx, c.n_rx, PhysicsParams::make(c.frequency_hz, c.half_side));
}

std::string bundle_name(const RunConfig& c) {
  std::string p = c.phantom;
  for (auto& ch : p)
    if (ch == ':') ch = '_';
  std::ostringstream s;
  s << p << "_n" << c.noise_percent << "_s" << c.recon.seed;
  return s.str();
}

std::unique_ptr<NoisePredictor> make_prior(const RunConfig& c) {
  const DiffusionSchedule schedule = c.recon.schedule();
  if (c.prior == "zero") return std::make_unique<ZeroPrior>();
  if (c.prior == "smooth") return std::make_unique<SmoothingPrior>(schedule);
  if (c.prior != "weights") throw std::invalid_argument("unknown prior '" + c.prior + "' (zero|smooth|weights)");
  std::string path = c.weights;
  if (path.empty())
    if (const char* env = std::getenv("MWT_PRIOR_WEIGHTS")) path = env;
  if (path.empty() || !fs::exists(path))
    throw std::runtime_error("denoiser weights not found" + (path.empty() ? std::string() : " at '" + path + "'") +
                             "; pass --weights PATH, or --prior smooth / --prior zero for a stand-in denoiser");
  return std::make_unique<DenoiserModel>(DenoiserModel::load(path));
}

}  // namespace

int cmd_simulate(const RunConfig& c, std::ostream& log) {
  const MeasurementSetup setup = setup_from(c);
  const DiscreteGrid grid = build_grid(c.half_side, c.frequency_hz, c.grid_n);
  const Phantom phantom = phantom_by_name(c.phantom, c.half_side);
  phantom.validate(c.half_side);
  const ContrastField chi = phantom.rasterize(grid);

  SolverOptions options;
  options.threads = c.threads;
  const ForwardModel model(grid, setup, options);
  const ScatterMatrix clean = model.forward(chi.values()).scatter;
  if (c.noise_percent < 0.0) throw std::invalid_argument("noise percent must be >= 0");
  std::mt19937_64 rng(c.recon.seed);
  const ScatterMatrix noisy = add_noise(clean, c.noise_percent, rng);

  const fs::path dir = resolve_output(c, bundle_name(c));
  fs::create_directories(dir);
  write_image(dir / "phantom.mwti", chi.image());
  write_pgm(dir / "phantom.pgm", chi.image(), 0.0, c.recon.chi_max);
  write_measurements(dir / "meas_clean.mwtm", {c.frequency_hz, setup.tx_positions, setup.rx_positions, clean});
  write_measurements(dir / "meas.mwtm", {c.frequency_hz, setup.tx_positions, setup.rx_positions, noisy});
  write_json(dir / "meta.json", json{{"phantom", c.phantom},
                                     {"seed", c.recon.seed},
                                     {"noise_percent", c.noise_percent},
                                     {"noise_reference", "whole-matrix RMS, circular complex Gaussian"},
                                     {"grid_n", c.grid_n},
                                     {"n_doi", grid.n_doi()},
                                     {"half_side", c.half_side},
                                     {"frequency_hz", c.frequency_hz},
                                     {"radius", c.radius},
                                     {"n_tx", c.n_tx},
                                     {"n_rx", c.n_rx}});
  write_manifest(dir, c);
  log << "wrote bundle " << dir.string() << " (" << setup.n_rx() << " x " << setup.n_tx() << " measurements, "
      << grid.n_doi() << "x" << grid.n_doi() << " DOI)\n";
  return kExitOk;
}

int cmd_reconstruct(const RunConfig& c, std::ostream& log) {
  if (c.input.empty()) throw std::invalid_argument("reconstruct needs --input BUNDLE_DIR");
  const fs::path in = c.input;
  const json meta = json::parse(std::ifstream(in / "meta.json"), nullptr, true);
  if (meta.is_discarded() || !meta.is_object()) throw FormatError("cannot read " + (in / "meta.json").string());
  const MeasurementFile meas = read_measurements(in / "meas.mwtm");
  const double half_side = meta.at("half_side").get<double>();
  const int grid_n = meta.at("grid_n").get<int>();
  const PhysicsParams physics = PhysicsParams::make(meas.frequency_hz, half_side);
  const MeasurementSetup setup{meas.transmitters, meas.receivers, physics};
  const DiscreteGrid grid(physics, grid_n);
  SolverOptions options;
  options.threads = c.threads;
  const ForwardModel model(grid, setup, options);

  const fs::path dir = c.out.empty() ? in / ("recon_" + c.method) : fs::path(c.out);
  fs::create_directories(dir);
  json result;
  int code = kExitOk;
  RealImage image;
  if (c.method == "bp") {
    const BackPropagation bp = reconstruct_bp(meas.data, model);
    image = bp.chi.image();
    result = {{"termination", "closed_form"}, {"gamma", bp.gamma}};
  } else {
    ReconstructionConfig rc = c.recon;
    rc.regularizer = regularizer_from_string(c.method);
    std::unique_ptr<NoisePredictor> prior;
    if (rc.regularizer == Regularizer::ssd) prior = make_prior(c);
    const Reconstruction r = reconstruct(meas.data, model, rc, prior.get());
    image = r.chi.image();
    std::ofstream trace(dir / "trace.jsonl");
    r.trace.write_jsonl(trace);
    result = {{"termination", to_string(r.trace.termination)},
              {"iterations", r.trace.iterations()},
              {"message", r.trace.message},
              {"final_loss_dc", r.trace.records.empty() ? 0.0 : r.trace.records.back().loss_dc},
              {"stop_rule", "relative |L_i - L_{i-1}| / max(L_{i-1}, 1e-12) < stop_delta after stop_window_start"}};
    if (prior) result["prior"] = prior->name();
    if (r.trace.termination == Termination::solver_failure) code = kExitSolverFailure;
  }
  write_image(dir / "recon.mwti", image);
  write_pgm(dir / "recon.pgm", image, 0.0, c.recon.chi_max);
  write_manifest(dir, c, result);
  log << c.method << ": " << result.value("termination", std::string()) << ", wrote " << dir.string() << "\n";
  return code;
}

int cmd_eval(const RunConfig& c, std::ostream& log) {
  const fs::path gt_path = !c.gt.empty() ? fs::path(c.gt) : fs::path(c.input) / "phantom.mwti";
  if (c.gt.empty() && c.input.empty()) throw std::invalid_argument("eval needs --gt FILE or --input BUNDLE_DIR");
  if (!fs::exists(gt_path)) throw FormatError("ground truth not found: " + gt_path.string());
  const RealImage gt = read_image(gt_path);

  std::vector<std::pair<std::string, fs::path>> recons;
  for (const auto& spec : c.recons) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) recons.emplace_back(fs::path(spec).parent_path().filename().string(), spec);
    else recons.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
  }
  if (recons.empty() && !c.input.empty())
    for (const auto& entry : fs::directory_iterator(c.input))
      if (entry.is_directory() && fs::exists(entry.path() / "recon.mwti"))
        recons.emplace_back(entry.path().filename().string(), entry.path() / "recon.mwti");
  std::sort(recons.begin(), recons.end());
  if (recons.empty()) throw std::invalid_argument("eval found no reconstructions (use --recon name=path)");

  std::vector<MethodMetrics> metrics;
  for (const auto& [name, path] : recons) {
    const RealImage img = read_image(path);
    if (img.rows() != gt.rows() || img.cols() != gt.cols())
      throw std::invalid_argument("shape mismatch between ground truth and '" + name + "'");
    metrics.push_back({name, ssim(gt, img), psnr(gt, img)});
  }
  json report{{"ground_truth", gt_path.string()},
              {"score_note", "composite score = mean of min-max normalised SSIM and PSNR; LPIPS not included"}};
  json rows = json::array();
  std::optional<CompositeScores> scores;
  if (metrics.size() >= 2) scores = composite_score(metrics);
  log << std::left << std::setw(16) << "method" << std::setw(10) << "SSIM" << std::setw(10) << "PSNR" << "S\n";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    json row{{"method", metrics[i].method}, {"ssim", metrics[i].ssim}, {"psnr_db", metrics[i].psnr_db}};
    if (scores) row["score"] = scores->score[i];
    rows.push_back(row);
    log << std::left << std::setw(16) << metrics[i].method << std::setw(10) << std::setprecision(4) << metrics[i].ssim
        << std::setw(10) << metrics[i].psnr_db;
    if (scores) log << scores->score[i];
    log << "\n";
  }
  report["methods"] = rows;
  if (scores)
    report["bounds"] = {{"ssim", {scores->ssim_min, scores->ssim_max}}, {"psnr_db", {scores->psnr_min, scores->psnr_max}}};
  const fs::path dir = c.out.empty() ? (c.input.empty() ? gt_path.parent_path() : fs::path(c.input)) : fs::path(c.out);
  fs::create_directories(dir);
  write_json(dir / "metrics.json", report);
  write_manifest(dir, c);
  return kExitOk;
}

int cmd_dump_kernel(const RunConfig& c, std::ostream& log) {
  const DiscreteGrid grid = build_grid(c.half_side, c.frequency_hz, c.grid_n);
  const PeriodizedKernel kernel = kernel_hat(grid);
  const int n = kernel.size();
  RealImage re(n, n), im(n, n);
  // Centred layout: row/column index = j + N/2.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const Complex v = kernel.at(a - n / 2, b - n / 2);
      re(a, b) = v.real();
      im(a, b) = v.imag();
    }
  const fs::path dir = resolve_output(c, "kernel_n" + std::to_string(c.grid_n));
  fs::create_directories(dir);
  write_image(dir / "kernel_re.mwti", re);
  write_image(dir / "kernel_im.mwti", im);
  write_manifest(dir, c, {{"kappa", grid.kappa()}, {"n_doi", grid.n_doi()}, {"step", grid.step()}});
  log << "kappa = " << std::setprecision(10) << grid.kappa() << ", wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_selftest(const RunConfig& c, std::ostream& log) {
  (void)c;
  std::vector<CheckResult> results{check_kernel_oracle(), check_schedule(), check_adjoint_identity(),
                                   check_born_limit(), check_gradient_fd(), check_disk_oracle(182, 2.0, 0.4)};
  bool ok = true;
  for (const auto& r : results) {
    log << format_check(r) << "\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace mwt
