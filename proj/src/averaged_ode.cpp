#include "growth/averaged_ode.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "growth/errors.hpp"
#include "growth/io.hpp"

namespace growth {

namespace {

constexpr std::size_t kSubcells = 4;

RadialField axpy(const RadialField& r, double a, const RadialField& k) {
  std::vector<double> v(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) v[j] = r[j] + a * k[j];
  return RadialField(r.grid_ptr(), std::move(v));
}

Vec statistical_center(const Domain& d) {
  const SphereGrid& g = d.smooth.grid();
  Vec c{0, 0, 0};
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = d.smooth[j] * g.weight(j);
    for (int k = 0; k < 3; ++k) c[k] += w * g.node(j)[k];
  }
  return c;
}

BbarEstimate chain_estimate(const RuleEngine& engine, const RadialField& r, const EstimatorConfig& cfg,
                            Stream& rng) {
  if (cfg.len == 0 || cfg.batches == 0 || cfg.starts == 0) throw InvalidArgument("chain estimator needs len, batches, starts > 0");
  const std::size_t M = r.size();
  const std::size_t nb = std::min(cfg.batches, cfg.len);
  const Domain d = engine.domain(r);
  std::vector<std::vector<double>> start_means;
  std::vector<std::vector<double>> batch_means;

  for (std::size_t s = 0; s < cfg.starts; ++s) {
    Stream chain = rng.derive("chain", s);
    Vec x0{0, 0, 0};
    if (s > 0) {
      const double a = 2.0 * std::numbers::pi * chain.uniform();
      Vec xi{std::cos(a), std::sin(a), 0.0};
      if (r.grid().dim() == 3) {
        const double z = 2.0 * chain.uniform() - 1.0;
        const double q = std::sqrt(1.0 - z * z);
        xi = {q * std::cos(a), q * std::sin(a), z};
      }
      x0 = scaled(xi, (0.9 * s / cfg.starts) * d.smooth.at(xi));
    }
    const std::vector<Vec> xs = frozen_chain_run(engine, r, x0, cfg.burn, cfg.len, chain);
    std::vector<double> total(M, 0.0);
    std::vector<double> batch(M, 0.0);
    std::size_t in_batch = 0, b = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const RadialField drift = drift_at(engine, d, xs[i], &chain);
      for (std::size_t j = 0; j < M; ++j) batch[j] += drift[j];
      ++in_batch;
      const std::size_t end = (b + 1) * xs.size() / nb;
      if (i + 1 == end) {
        for (std::size_t j = 0; j < M; ++j) {
          total[j] += batch[j];
          batch[j] /= static_cast<double>(in_batch);
        }
        batch_means.push_back(batch);
        std::fill(batch.begin(), batch.end(), 0.0);
        in_batch = 0;
        ++b;
      }
    }
    for (double& v : total) v /= static_cast<double>(xs.size());
    start_means.push_back(std::move(total));
  }

  BbarEstimate est;
  est.method = "chain";
  std::vector<double> mean(M, 0.0);
  for (const auto& m : start_means)
    for (std::size_t j = 0; j < M; ++j) mean[j] += m[j] / static_cast<double>(start_means.size());
  std::vector<double> se(M, 0.0);
  const double k = static_cast<double>(batch_means.size());
  if (k > 1) {
    for (std::size_t j = 0; j < M; ++j) {
      double ss = 0.0;
      for (const auto& bm : batch_means) ss += (bm[j] - mean[j]) * (bm[j] - mean[j]);
      se[j] = std::sqrt(ss / (k - 1) / k);
    }
  }
  for (std::size_t a = 0; a < start_means.size(); ++a)
    for (std::size_t b = a + 1; b < start_means.size(); ++b)
      est.dispersion = std::max(est.dispersion, l2_distance(RadialField(r.grid_ptr(), start_means[a]),
                                                            RadialField(r.grid_ptr(), start_means[b])));
  est.mean = RadialField(r.grid_ptr(), std::move(mean));
  est.stderr_field = RadialField(r.grid_ptr(), std::move(se));
  return est;
}

BbarEstimate transfer_matrix_estimate(const RuleEngine& engine, const RadialField& r, const EstimatorConfig& cfg) {
  if (!engine.rules().exact_density()) throw InvalidArgument("transfer-matrix estimator needs an exact hitting density");
  const SphereGrid& g = r.grid();
  if (g.dim() != 2) throw InvalidArgument("transfer-matrix estimator is implemented for n = 2");
  const std::size_t M = g.size();
  const Domain d = engine.domain(r);
  // row j: law of the next hit cell given a hit uniformly inside cell j
  std::vector<double> P(M * M, 0.0);
  std::vector<double> drift(M * M, 0.0);
  for (std::size_t j = 0; j < M; ++j) {
    for (std::size_t s = 0; s < kSubcells; ++s) {
      const double a = g.angle(j) + ((static_cast<double>(s) + 0.5) / kSubcells - 0.5) * g.spacing();
      const Vec xi{std::cos(a), std::sin(a), 0.0};
      const Vec x = engine.transport(d, xi).x;
      const RadialField f = engine.eval_density(d, x).values;
      const double y = y_factor(r, f);
      for (std::size_t k = 0; k < M; ++k) {
        P[j * M + k] += f[k] * g.weight(k) / kSubcells;
        drift[j * M + k] += g.area() * f[k] / y / kSubcells;
      }
    }
  }
  std::vector<double> pi(M, 1.0 / static_cast<double>(M)), next(M);
  std::size_t it = 0;
  for (; it < cfg.tm_max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < M; ++j) {
      const double p = pi[j];
      const double* row = &P[j * M];
      for (std::size_t k = 0; k < M; ++k) next[k] += p * row[k];
    }
    double sum = 0.0;
    for (double v : next) sum += v;
    double change = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      next[k] /= sum;
      change += std::abs(next[k] - pi[k]);
    }
    pi.swap(next);
    if (change < cfg.tm_tol) break;
  }
  if (it == cfg.tm_max_iter) throw GrowthError("transfer-matrix power iteration did not converge");
  std::vector<double> mean(M, 0.0);
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t k = 0; k < M; ++k) mean[k] += pi[j] * drift[j * M + k];
  BbarEstimate est;
  est.method = "transfer-matrix";
  est.mean = RadialField(r.grid_ptr(), std::move(mean));
  return est;
}

}  // namespace

std::vector<Vec> frozen_chain_run(const RuleEngine& engine, const RadialField& r, Vec x0, std::size_t burn,
                                  std::size_t len, Stream& rng) {
  if (len == 0) throw InvalidArgument("frozen_chain_run: len must be >= 1");
  const Domain d = engine.domain(r);
  engine.check_interior(d, x0);
  std::vector<Vec> out;
  out.reserve(len);
  Vec x = x0;
  for (std::size_t i = 0; i < burn + len; ++i) {
    const Vec xi = engine.sample_angle(d, x, rng);
    x = engine.transport(d, xi).x;
    if (i >= burn) out.push_back(x);
  }
  return out;
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "closed-form") return EstimatorKind::closed_form;
  if (name == "chain") return EstimatorKind::chain;
  if (name == "transfer-matrix") return EstimatorKind::transfer_matrix;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::closed_form:
      return "closed-form";
    case EstimatorKind::chain:
      return "chain";
    case EstimatorKind::transfer_matrix:
      return "transfer-matrix";
  }
  return "?";
}

bool has_closed_form(const RuleSet& rules) {
  if (std::holds_alternative<BoundaryProportionalHit>(rules.F) || std::holds_alternative<UniformHit>(rules.F))
    return true;
  if (!rules.exact_density()) return false;
  return std::holds_alternative<ToOrigin>(rules.H) || std::holds_alternative<StatisticalCenter>(rules.H);
}

RadialField drift_at(const RuleEngine& engine, const Domain& d, const Vec& x, Stream* rng) {
  return drift_b(d.r, engine.eval_density(d, x, rng).values);
}

std::optional<RadialField> closed_form_bbar(const RuleEngine& engine, const RadialField& r) {
  const RuleSet& rules = engine.rules();
  const SphereGrid& g = r.grid();
  const int n = g.dim();
  if (std::holds_alternative<BoundaryProportionalHit>(rules.F)) {
    return r.scaled(1.0 / (n * leb_volume(r)));
  }
  if (std::holds_alternative<UniformHit>(rules.F)) {
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += std::pow(r[j], n - 1) * g.weight(j);
    return RadialField(r.grid_ptr(), 1.0 / s);
  }
  const auto* dp = std::get_if<DistancePowerHit>(&rules.F);
  if (dp && dp->is_power() && rules.bypass_smoother && std::holds_alternative<ToOrigin>(rules.H)) {
    const double q = n - 1 + dp->beta;
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += std::pow(r[j], q) * g.weight(j);
    std::vector<double> v(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) v[j] = std::pow(r[j], dp->beta) / s;
    return RadialField(r.grid_ptr(), std::move(v));
  }
  if (!rules.exact_density()) return std::nullopt;
  if (std::holds_alternative<ToOrigin>(rules.H)) {
    const Domain d = engine.domain(r);
    return drift_at(engine, d, Vec{0, 0, 0});
  }
  if (std::holds_alternative<StatisticalCenter>(rules.H)) {
    const Domain d = engine.domain(r);
    return drift_at(engine, d, statistical_center(d));
  }
  return std::nullopt;
}

BbarEstimate bbar(const RuleEngine& engine, const RadialField& r, const EstimatorConfig& cfg, Stream& rng) {
  switch (cfg.kind) {
    case EstimatorKind::closed_form: {
      auto cf = closed_form_bbar(engine, r);
      if (!cf) throw InvalidArgument("no closed form registered for rules " + engine.rules().describe());
      BbarEstimate est;
      est.mean = std::move(*cf);
      est.method = "closed-form";
      return est;
    }
    case EstimatorKind::chain:
      return chain_estimate(engine, r, cfg, rng);
    case EstimatorKind::transfer_matrix:
      return transfer_matrix_estimate(engine, r, cfg);
  }
  throw InvalidArgument("unknown estimator");
}

OdeTrajectory integrate_ode(const RuleEngine& engine, const RadialField& r0, const OdeOptions& opts,
                            const EstimatorConfig& est, Stream& rng) {
  if (!(r0.min() > 0)) throw InvalidArgument("integrate_ode: r0 must be positive");
  if (!(opts.T > 0)) throw InvalidArgument("integrate_ode: T must be positive");
  const double leb0 = leb_volume(r0);
  double dt = opts.dt > 0 ? opts.dt : 1e-3 * (1.0 + leb0);
  if (dt > 0.05 * leb0) throw InvalidArgument("integrate_ode: dt must be <= 0.05 Leb(r0)");
  const std::size_t steps = static_cast<std::size_t>(std::ceil(opts.T / dt - 1e-9));
  dt = opts.T / static_cast<double>(steps);

  OdeTrajectory ode;
  ode.dt = dt;
  ode.integrator = opts.integrator.value_or(est.kind == EstimatorKind::chain ? Integrator::euler : Integrator::rk4);
  const std::size_t every = std::max<std::size_t>(opts.record_every, 1);

  RadialField r = r0;
  ode.times.push_back(0.0);
  ode.states.push_back(r);
  ode.stderrs.emplace_back();
  std::optional<RadialField> last_se;
  for (std::size_t i = 0; i < steps; ++i) {
    Stream step_rng = rng.derive("ode-step", i);
    auto f = [&](const RadialField& s) {
      BbarEstimate b = bbar(engine, s, est, step_rng);
      last_se = b.stderr_field;
      return b.mean;
    };
    if (ode.integrator == Integrator::euler) {
      r = axpy(r, dt, f(r));
    } else {
      const RadialField k1 = f(r);
      const RadialField k2 = f(axpy(r, dt / 2, k1));
      const RadialField k3 = f(axpy(r, dt / 2, k2));
      const RadialField k4 = f(axpy(r, dt, k3));
      std::vector<double> v(r.size());
      for (std::size_t j = 0; j < r.size(); ++j) v[j] = r[j] + dt / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
      r = RadialField(r.grid_ptr(), std::move(v));
    }
    if (!(r.min() > 0)) throw DegenerateDomain("ODE state lost positivity");
    if ((i + 1) % every == 0 || i + 1 == steps) {
      ode.times.push_back(static_cast<double>(i + 1) * dt);
      ode.states.push_back(r);
      ode.stderrs.push_back(last_se);
    }
  }
  return ode;
}

const RadialField& ode_state_at(const OdeTrajectory& ode, double t) {
  if (ode.times.empty() || t < ode.times.front()) throw InvalidArgument("time precedes the ODE start");
  const auto it = std::upper_bound(ode.times.begin(), ode.times.end(), t + 1e-12 * (1.0 + std::abs(t)));
  return ode.states[static_cast<std::size_t>(it - ode.times.begin()) - 1];
}

Residual invariant_residual(const RuleEngine& engine, const RadialField& psi, const EstimatorConfig& est,
                            Stream& rng) {
  if (!(psi.min() > 0)) throw InvalidArgument("invariant_residual: psi must be positive");
  const BbarEstimate b = bbar(engine, psi, est, rng);
  const RadialField target = psi.scaled(1.0 / (psi.grid().dim() * leb_volume(psi)));
  Residual res;
  res.value = l2_distance(b.mean, target);
  if (b.stderr_field) res.stderr_value = lp_norm(*b.stderr_field, 2.0);
  return res;
}

RadialField normalized_profile(const RadialField& r, double t, double leb0) {
  if (!(leb0 > 0)) throw InvalidArgument("normalized_profile: leb0 must be positive");
  return r.scaled(std::pow(leb0 + t, -1.0 / r.grid().dim()));
}

void write_ode(const std::string& dir, const OdeTrajectory& ode) {
  io::ensure_directory(dir);
  const std::filesystem::path root(dir);
  std::string traj = "t,theta_index,r\n";
  std::string se = "t,theta_index,stderr\n";
  bool any_se = false;
  for (std::size_t k = 0; k < ode.times.size(); ++k) {
    const std::string t = io::format_double(ode.times[k]);
    for (std::size_t j = 0; j < ode.states[k].size(); ++j)
      traj += t + "," + std::to_string(j) + "," + io::format_double(ode.states[k][j]) + "\n";
    if (ode.stderrs[k]) {
      any_se = true;
      for (std::size_t j = 0; j < ode.stderrs[k]->size(); ++j)
        se += t + "," + std::to_string(j) + "," + io::format_double((*ode.stderrs[k])[j]) + "\n";
    }
  }
  io::write_atomic((root / "ode_trajectory.csv").string(), traj);
  if (any_se) io::write_atomic((root / "bbar_stderr.csv").string(), se);
}

}  // namespace growth
