#pragma once
// Frozen-domain particle chain, the averaged drift bbar(r) and the deterministic
// growth ODE dr/dt = bbar(r).

#include <optional>
#include <string>
#include <vector>

#include "growth/rules.hpp"

namespace growth {

// Embedded chain x_{i+1} = H(r, xi_i), xi_i ~ F(r, x_i, .) on a frozen domain.
// Returns the len post-burn-in positions.
std::vector<Vec> frozen_chain_run(const RuleEngine& engine, const RadialField& r, Vec x0, std::size_t burn,
                                  std::size_t len, Stream& rng);

enum class EstimatorKind {
  closed_form,
  chain,            // ergodic average along one long chain
  transfer_matrix,  // stationary law of the chain restricted to grid hits
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::closed_form;
  std::size_t burn = 1000;
  std::size_t len = 100000;
  std::size_t batches = 32;
  std::size_t starts = 1;  // chains from distinct starting points (dispersion diagnostic)
  double tm_tol = 1e-13;
  std::size_t tm_max_iter = 20000;
};

EstimatorKind estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorKind kind);

struct BbarEstimate {
  RadialField mean;
  std::optional<RadialField> stderr_field;  // chain only
  // chain with starts > 1: largest L2 distance between per-start means
  double dispersion = 0.0;
  std::string method;
};

// Closed form when the rule set is in the registry, nullopt otherwise.
std::optional<RadialField> closed_form_bbar(const RuleEngine& engine, const RadialField& r);
bool has_closed_form(const RuleSet& rules);

// b(r, x) = omega_n F(r, x, .) / y_{r,x}
RadialField drift_at(const RuleEngine& engine, const Domain& d, const Vec& x, Stream* rng = nullptr);

// Throws InvalidArgument when closed_form is requested for an unregistered rule set.
BbarEstimate bbar(const RuleEngine& engine, const RadialField& r, const EstimatorConfig& cfg, Stream& rng);

enum class Integrator { euler, rk4 };

struct OdeOptions {
  double T = 1.0;
  double dt = 0.0;  // 0 picks 1e-3 (1 + Leb(r0))
  std::optional<Integrator> integrator;  // default: rk4 for deterministic bbar, euler for chain
  std::size_t record_every = 1;
};

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<RadialField> states;
  std::vector<std::optional<RadialField>> stderrs;  // bbar stderr at the recorded step (chain)
  Integrator integrator = Integrator::euler;
  double dt = 0.0;
};

OdeTrajectory integrate_ode(const RuleEngine& engine, const RadialField& r0, const OdeOptions& opts,
                            const EstimatorConfig& est, Stream& rng);

// Held value of an ODE trajectory at time t (last recorded state at or before t).
const RadialField& ode_state_at(const OdeTrajectory& ode, double t);

struct Residual {
  double value = 0.0;
  std::optional<double> stderr_value;  // L2 norm of the bbar stderr field
};

// || bbar(psi) - psi / (n Leb(psi)) ||_2
Residual invariant_residual(const RuleEngine& engine, const RadialField& psi, const EstimatorConfig& est,
                            Stream& rng);

// r / (leb0 + t)^{1/n}
RadialField normalized_profile(const RadialField& r, double t, double leb0);

// ode_trajectory.csv and, for chain runs, bbar_stderr.csv
void write_ode(const std::string& dir, const OdeTrajectory& ode);

}  // namespace growth
