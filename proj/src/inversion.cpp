#include "mwt/inversion.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

namespace mwt {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::ssd:
      return "ssd";
    case Regularizer::tv:
      return "tv";
    case Regularizer::none:
      return "none";
  }
  return "?";
}

Regularizer regularizer_from_string(const std::string& name) {
  if (name == "ssd") return Regularizer::ssd;
  if (name == "tv") return Regularizer::tv;
  if (name == "none") return Regularizer::none;
  throw std::invalid_argument("unknown regularizer '" + name + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged:
      return "converged";
    case Termination::max_iters:
      return "max_iters";
    case Termination::solver_failure:
      return "solver_failure";
  }
  return "?";
}

void ReconstructionConfig::validate() const {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (n_max < stop_window_start) throw std::invalid_argument("n_max must be >= stop_window_start");
  if (!(t_start >= t_end && t_end >= 1)) throw std::invalid_argument("need t_start >= t_end >= 1");
  if (t_start > schedule_t_max) throw std::invalid_argument("t_start exceeds the schedule length");
  if (!(learning_rate > 0.0 && chi_max > 0.0 && stop_delta > 0.0 && adam_eps > 0.0))
    throw std::invalid_argument("rates, chi_max, stop_delta and adam_eps must be positive");
  if (lambda < 0.0 || tv_weight < 0.0) throw std::invalid_argument("regularisation weights must be non-negative");
  if (a_refresh_period < 1) throw std::invalid_argument("a_refresh_period must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
}

void ReconstructionTrace::write_jsonl(std::ostream& out) const {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << "{\"iteration\":" << r.iteration << ",\"loss_dc\":" << r.loss_dc << ",\"reg_grad_norm\":" << r.reg_grad_norm
        << ",\"dc_grad_norm\":" << r.dc_grad_norm << ",\"t\":" << r.timestep
        << ",\"a_refreshed\":" << (r.a_refreshed ? "true" : "false");
    if (r.stale_fresh_inner != 0.0) out << ",\"stale_fresh_inner\":" << r.stale_fresh_inner;
    out << ",\"seconds\":" << r.seconds << "}\n";
  }
  out.flags(flags);
  out.precision(precision);
}

void adam_step(AdamState& state, RealVector& params, const RealVector& gradient, double learning_rate, double beta1,
               double beta2, double eps) {
  if (gradient.size() != params.size() || state.first_moment.size() != params.size())
    throw std::invalid_argument("Adam state dimensions do not match");
  ++state.step;
  state.first_moment = beta1 * state.first_moment + (1.0 - beta1) * gradient;
  state.second_moment = beta2 * state.second_moment + (1.0 - beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, state.step);
  const double c2 = 1.0 - std::pow(beta2, state.step);
  params.array() -= learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + eps);
}

int anneal_timestep(const ReconstructionConfig& config, int iteration) {
  if (iteration < 1 || iteration > config.n_max) throw std::out_of_range("iteration outside [1, n_max]");
  if (config.n_max == 1) return config.t_start;
  const double frac = double(iteration - 1) / double(config.n_max - 1);
  const int t = int(std::lround(config.t_start + (config.t_end - config.t_start) * frac));
  return std::clamp(t, config.t_end, config.t_start);
}

bool should_stop(const ReconstructionConfig& config, int iteration, double previous_loss, double current_loss) {
  if (iteration <= config.stop_window_start) return false;
  return std::abs(current_loss - previous_loss) / std::max(previous_loss, 1e-12) < config.stop_delta;
}

Reconstruction reconstruct(const ScatterMatrix& measurements, const ForwardModel& model,
                           const ReconstructionConfig& config, const NoisePredictor* denoiser) {
  config.validate();
  if (measurements.rows() != model.setup().n_rx() || measurements.cols() != model.setup().n_tx())
    throw std::invalid_argument("measurement shape does not match the antenna setup");
  if (config.regularizer == Regularizer::ssd && !denoiser)
    throw std::invalid_argument("SSD regularisation needs a denoiser (network or stand-in)");

  const int n = model.grid().n_doi();
  const DiffusionSchedule schedule = config.schedule();
  std::mt19937_64 rng(config.seed);
  const auto start = std::chrono::steady_clock::now();

  RealVector chi = RealVector::Zero(model.n_doi_points());
  AdamState adam(chi.size());
  JacobianFactors factors;
  ComplexMatrix warm_scattered;
  ComplexMatrix warm_adjoint;
  ReconstructionTrace trace;
  double previous_loss = 0.0;

  for (int i = 1; i <= config.n_max; ++i) {
    IterationRecord rec;
    rec.iteration = i;
    rec.timestep = anneal_timestep(config, i);

    ForwardSolution sol;
    try {
      sol = model.forward(chi, warm_scattered.size() ? &warm_scattered : nullptr);
    } catch (const SolverFailure& e) {
      trace.termination = Termination::solver_failure;
      trace.message = e.what();
      break;
    }
    warm_scattered = sol.scattered;
    const ScatterMatrix residual = sol.scatter - measurements;
    rec.loss_dc = data_consistency_loss(sol.scatter, measurements);

    if (i > 1 && should_stop(config, i, previous_loss, rec.loss_dc)) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      trace.records.push_back(rec);
      trace.termination = Termination::converged;
      break;
    }
    previous_loss = rec.loss_dc;

    try {
      factors.b = build_B(sol);
      factors.b_stamp = i;
      if (i == 1 || i % config.a_refresh_period == 0) {
        factors.a = build_A(model, chi, &warm_adjoint);
        factors.a_stamp = i;
        rec.a_refreshed = true;
      }
    } catch (const SolverFailure& e) {
      trace.termination = Termination::solver_failure;
      trace.message = e.what();
      break;
    }
    const RealVector grad_dc = adjoint_gradient(factors, residual);
    rec.dc_grad_norm = grad_dc.norm();

    if (config.audit_stale_gradient && !rec.a_refreshed) {
      ComplexMatrix scratch = warm_adjoint;
      const JacobianFactors fresh{build_A(model, chi, &scratch), factors.b, i, i};
      rec.stale_fresh_inner = grad_dc.dot(adjoint_gradient(fresh, residual));
    }

    RealVector grad_reg = RealVector::Zero(chi.size());
    const Eigen::Map<const RealImage> chi_image(chi.data(), n, n);
    switch (config.regularizer) {
      case Regularizer::ssd: {
        const Image x0 = normalize_contrast(chi_image, config.chi_max);
        const SsdResult ssd = ssd_gradient(denoiser, schedule, x0, rec.timestep, config.lambda, rng, config.random_flips);
        const Image g = denormalize_gradient(ssd.gradient, chi_image, config.chi_max);
        grad_reg = Eigen::Map<const RealVector>(g.data(), g.size());
        break;
      }
      case Regularizer::tv: {
        const Image g = tv_gradient(chi_image, config.tv_weight);
        grad_reg = Eigen::Map<const RealVector>(g.data(), g.size());
        break;
      }
      case Regularizer::none:
        break;
    }
    rec.reg_grad_norm = grad_reg.norm();

    adam_step(adam, chi, grad_dc + grad_reg, config.learning_rate, config.adam_beta1, config.adam_beta2,
              config.adam_eps);
    chi = chi.cwiseMax(-1.0).cwiseMin(config.chi_max);

    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(rec);
  }

  trace.final_chi = chi;
  if (trace.termination == Termination::max_iters && trace.message.empty())
    trace.message = "reached n_max = " + std::to_string(config.n_max);
  return {ContrastField(n, chi), std::move(trace)};
}

Reconstruction reconstruct_ssd(const ScatterMatrix& measurements, const ForwardModel& model,
                               ReconstructionConfig config, const NoisePredictor& denoiser) {
  config.regularizer = Regularizer::ssd;
  return reconstruct(measurements, model, config, &denoiser);
}

BackPropagation reconstruct_bp(const ScatterMatrix& measurements, const ForwardModel& model) {
  if (measurements.rows() != model.setup().n_rx() || measurements.cols() != model.setup().n_tx())
    throw std::invalid_argument("measurement shape does not match the antenna setup");
  const int n = model.grid().n_doi();
  const JacobianFactors born{model.measurement(), model.incident(), 0, 0};
  // Gradient of the Born misfit at chi = 0 is adjoint(-u_meas); descend along it.
  const RealVector direction = -adjoint_gradient(born, -measurements);
  const ScatterMatrix predicted = derivative_apply(born, direction);
  const double denom = predicted.squaredNorm();
  BackPropagation bp;
  bp.gamma = denom > 0.0 ? (predicted.conjugate().cwiseProduct(measurements)).sum().real() / denom : 0.0;
  bp.unclipped = bp.gamma * direction;
  bp.chi = ContrastField(n, bp.unclipped.cwiseMax(0.0));
  return bp;
}

}  // namespace mwt
