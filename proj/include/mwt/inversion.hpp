#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mwt/regularizers.hpp"
#include "mwt/sensitivity.hpp"

namespace mwt {

enum class Regularizer { ssd, tv, none };

std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& name);

struct ReconstructionConfig {
  double lambda = 0.5;
  double learning_rate = 0.1;
  int n_max = 500;
  int t_start = 500;
  int t_end = 1;
  int a_refresh_period = 5;
  int stop_window_start = 200;
  double stop_delta = 1e-3;  // on |L_i - L_{i-1}| / max(L_{i-1}, 1e-12)
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  Regularizer regularizer = Regularizer::ssd;
  bool random_flips = true;
  double chi_max = 2.5;
  double tv_weight = 1e-6;  // tuned on held-out shape phantoms
  int schedule_t_max = 1000;
  double schedule_beta_min = 1e-4;
  double schedule_beta_max = 0.02;
  /// Recompute A every iteration alongside the stale one and record <g_stale, g_fresh>.
  bool audit_stale_gradient = false;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  DiffusionSchedule schedule() const { return DiffusionSchedule(schedule_t_max, schedule_beta_min, schedule_beta_max); }
};

enum class Termination { converged, max_iters, solver_failure };

std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double loss_dc = 0.0;
  double reg_grad_norm = 0.0;
  double dc_grad_norm = 0.0;
  int timestep = 0;
  bool a_refreshed = false;
  double stale_fresh_inner = 0.0;  // only with audit_stale_gradient on stale iterations
  double seconds = 0.0;
};

struct ReconstructionTrace {
  std::vector<IterationRecord> records;
  RealVector final_chi;
  Termination termination = Termination::max_iters;
  std::string message;

  int iterations() const { return int(records.size()); }
  /// One JSON object per line; `seconds` is the only non-deterministic field.
  void write_jsonl(std::ostream& out) const;
};

struct AdamState {
  RealVector first_moment;
  RealVector second_moment;
  int step = 0;

  explicit AdamState(Eigen::Index size = 0)
      : first_moment(RealVector::Zero(size)), second_moment(RealVector::Zero(size)) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, RealVector& params, const RealVector& gradient, double learning_rate,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// t = round(t_start + (t_end - t_start)(i - 1)/(n_max - 1)) clamped to [t_end, t_start].
int anneal_timestep(const ReconstructionConfig& config, int iteration);

/// True when iteration > stop_window_start and the relative change of L_DC is below stop_delta.
bool should_stop(const ReconstructionConfig& config, int iteration, double previous_loss, double current_loss);

struct Reconstruction {
  ContrastField chi;
  ReconstructionTrace trace;
};

/// Data-consistency descent with Adam; the regulariser (SSD, TV or none) is chosen
/// by config.regularizer. `denoiser` is required for SSD only.
Reconstruction reconstruct(const ScatterMatrix& measurements, const ForwardModel& model,
                           const ReconstructionConfig& config, const NoisePredictor* denoiser = nullptr);

/// SSD-regularised reconstruction (config.regularizer is forced to ssd).
Reconstruction reconstruct_ssd(const ScatterMatrix& measurements, const ForwardModel& model,
                               ReconstructionConfig config, const NoisePredictor& denoiser);

struct BackPropagation {
  ContrastField chi;    // clipped to chi >= 0
  RealVector unclipped;  // gamma * direction
  double gamma = 0.0;
};

/// One adjoint application at chi = 0 with a closed-form step minimising the Born misfit.
BackPropagation reconstruct_bp(const ScatterMatrix& measurements, const ForwardModel& model);

}  // namespace mwt
