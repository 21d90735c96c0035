#include "growth/sphere.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include "json.hpp"
#include <sstream>

#include "growth/errors.hpp"
#include "growth/io.hpp"
#include "growth/kernels.hpp"

namespace growth {

using std::numbers::pi;

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
Vec scaled(const Vec& a, double c) { return {a[0] * c, a[1] * c, a[2] * c}; }

double sphere_area(int n) {
  return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

double half_chord2(const Vec& a, const Vec& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return 0.5 * (dx * dx + dy * dy + dz * dz);
}

std::size_t wrap(long long j, std::size_t m) {
  const long long mm = static_cast<long long>(m);
  return static_cast<std::size_t>(((j % mm) + mm) % mm);
}

}  // namespace

// ---------------------------------------------------------------------------
// SphereGrid

SphereGrid::SphereGrid(int dim, std::vector<Vec> nodes, std::vector<double> weights)
    : dim_(dim), nodes_(std::move(nodes)), weights_(std::move(weights)) {
  xs_.reserve(nodes_.size());
  ys_.reserve(nodes_.size());
  zs_.reserve(nodes_.size());
  for (const Vec& v : nodes_) {
    xs_.push_back(v[0]);
    ys_.push_back(v[1]);
    zs_.push_back(v[2]);
  }
  for (double w : weights_) area_ += w;
  const double m = static_cast<double>(nodes_.size());
  spacing_ = dim_ == 2 ? 2.0 * pi / m : std::sqrt(4.0 * pi / m);
}

double SphereGrid::angle(std::size_t j) const {
  return 2.0 * pi * static_cast<double>(j) / static_cast<double>(size());
}

std::size_t SphereGrid::nearest_node(const Vec& d) const {
  if (dim_ == 2) {
    double a = std::atan2(d[1], d[0]);
    if (a < 0) a += 2.0 * pi;
    return wrap(std::llround(a / spacing_), size());
  }
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t j = 0; j < size(); ++j) {
    const double c = dot(nodes_[j], d);
    if (c > best_dot) {
      best_dot = c;
      best = j;
    }
  }
  return best;
}

bool SphereGrid::same_as(const SphereGrid& other) const {
  return this == &other || (dim_ == other.dim_ && size() == other.size());
}

GridPtr make_grid(int n, std::size_t M) {
  if (n != 2 && n != 3) throw InvalidArgument("make_grid: unsupported dimension " + std::to_string(n));
  if (n == 2 && M < 4) throw InvalidArgument("make_grid: a circle grid needs at least 4 nodes");
  if (n == 3 && M < 16) throw InvalidArgument("make_grid: a sphere grid needs at least 16 nodes");
  std::vector<Vec> nodes(M);
  const double m = static_cast<double>(M);
  if (n == 2) {
    for (std::size_t j = 0; j < M; ++j) {
      const double a = 2.0 * pi * static_cast<double>(j) / m;
      nodes[j] = {std::cos(a), std::sin(a), 0.0};
    }
    // exact quarter turns, so that e.g. M = 4 gives the axis points
    if (M % 4 == 0) {
      nodes[0] = {1, 0, 0};
      nodes[M / 4] = {0, 1, 0};
      nodes[M / 2] = {-1, 0, 0};
      nodes[3 * M / 4] = {0, -1, 0};
    }
  } else {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (std::size_t j = 0; j < M; ++j) {
      const double z = 1.0 - (2.0 * static_cast<double>(j) + 1.0) / m;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(j);
      nodes[j] = {rho * std::cos(a), rho * std::sin(a), z};
    }
  }
  std::vector<double> weights(M, sphere_area(n) / m);
  return std::make_shared<const SphereGrid>(n, std::move(nodes), std::move(weights));
}

// ---------------------------------------------------------------------------
// RadialField

RadialField::RadialField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidArgument("RadialField: null grid");
  if (values_.size() != grid_->size()) throw GridMismatch("RadialField: value count does not match grid");
}

RadialField::RadialField(GridPtr grid, double constant)
    : grid_(std::move(grid)), values_(grid_->size(), constant) {}

RadialField RadialField::from_function(GridPtr grid, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(grid->size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid->node(j));
  return RadialField(std::move(grid), std::move(v));
}

double RadialField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double RadialField::min() const { return *std::min_element(values_.begin(), values_.end()); }

RadialField RadialField::scaled(double c) const {
  RadialField out = *this;
  for (double& v : out.values_) v *= c;
  return out;
}

double RadialField::at(const Vec& d) const {
  const SphereGrid& g = *grid_;
  if (g.dim() != 2) return values_[g.nearest_node(d)];
  double a = std::atan2(d[1], d[0]);
  if (a < 0) a += 2.0 * pi;
  const double s = a / g.spacing();
  const double fl = std::floor(s);
  const double frac = s - fl;
  const std::size_t j = wrap(static_cast<long long>(fl), size());
  const std::size_t k = (j + 1) % size();
  return values_[j] + frac * (values_[k] - values_[j]);
}

void require_same_grid(const RadialField& a, const RadialField& b) {
  if (!a.grid().same_as(b.grid())) throw GridMismatch("fields live on different grids");
}

double lp_norm(const RadialField& f, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("lp_norm: exponent must be >= 1");
  const auto v = f.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  const auto w = f.grid().weights();
  double acc = 0.0;
  if (p == 2.0) {
    for (std::size_t j = 0; j < v.size(); ++j) acc += v[j] * v[j] * w[j];
    return std::sqrt(acc);
  }
  for (std::size_t j = 0; j < v.size(); ++j) acc += std::pow(std::abs(v[j]), p) * w[j];
  return std::pow(acc, 1.0 / p);
}

double l2_distance(const RadialField& a, const RadialField& b) {
  require_same_grid(a, b);
  const auto w = a.grid().weights();
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d * w[j];
  }
  return std::sqrt(acc);
}

double integrate(const RadialField& f) {
  return kernels::dot(f.values(), f.grid().weights());
}

double leb_volume(const RadialField& r) {
  const int n = r.grid().dim();
  const auto w = r.grid().weights();
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (r[j] < 0) throw InvalidArgument("leb_volume: negative radius");
    acc += std::pow(r[j], n) * w[j];
  }
  return acc / n;
}

double oscillation(const RadialField& r) { return r.max() - r.min(); }

// ---------------------------------------------------------------------------
// Profiles and kernels

Profile cosine_profile() {
  return {"cosine", [](double s) { return std::abs(s) > 1.0 ? 0.0 : 0.5 * (1.0 + std::cos(pi * s)); }};
}

Profile tabulated_profile(std::string name, std::vector<double> samples) {
  if (samples.size() < 2) throw InvalidArgument("tabulated_profile: need at least two samples");
  double top = 0.0;
  for (double v : samples) {
    if (!(v >= 0.0)) throw InvalidArgument("tabulated_profile: samples must be nonnegative");
    top = std::max(top, v);
  }
  if (top <= 0.0) throw InvalidArgument("tabulated_profile: profile is identically zero");
  for (double& v : samples) v /= top;
  auto table = std::make_shared<const std::vector<double>>(std::move(samples));
  return {std::move(name), [table](double s) {
            if (s < -1.0 || s > 1.0) return 0.0;
            const auto& t = *table;
            const double pos = (s + 1.0) * 0.5 * static_cast<double>(t.size() - 1);
            const std::size_t i = std::min(static_cast<std::size_t>(pos), t.size() - 2);
            const double f = pos - static_cast<double>(i);
            return t[i] + f * (t[i + 1] - t[i]);
          }};
}

double BumpKernel::at_gap(double gap) const {
  const double s = 1.0 - std::max(gap, 0.0) / (eta_ * eta_);
  if (s < -1.0) return 0.0;
  return prefactor_ * profile_.fn(s);
}

double BumpKernel::max_value() const { return prefactor_; }

BumpKernel make_bump_kernel(double eta, GridPtr grid, Profile profile) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("make_bump_kernel: eta must lie in (0, 1]");
  if (!grid) throw InvalidArgument("make_bump_kernel: null grid");
  BumpKernel k;
  k.eta_ = eta;
  k.dim_ = grid->dim();
  k.profile_ = std::move(profile);
  k.grid_ = grid;
  const int n = k.dim_;
  const double omega = grid->area();
  const double omega_lower = sphere_area(n - 1);
  const double raw_prefactor = std::pow(eta, -(n - 1)) / omega_lower;
  k.prefactor_ = raw_prefactor;  // provisional, c = 1
  const double cap_gap = 2.0 * eta * eta;
  const std::size_t M = grid->size();

  if (n == 2) {
    // nodes at offset m have half-chord^2 = 2 sin^2(pi m / M)
    const double h = pi / static_cast<double>(M);
    std::size_t K = 0;
    while (K + 1 <= (M - 1) / 2) {
      const double s = std::sin(h * static_cast<double>(K + 1));
      if (2.0 * s * s > cap_gap) break;
      ++K;
    }
    if (2 * K + 1 < 3) {
      throw ResolutionError("make_bump_kernel: cap of radius 2*eta = " + io::format_double(2 * eta) +
                            " holds fewer than 3 grid nodes; increase M");
    }
    std::vector<double> taps(2 * K + 1);
    double mass = 0.0;
    for (std::size_t m = 0; m <= 2 * K; ++m) {
      const double off = static_cast<double>(m) - static_cast<double>(K);
      const double s = std::sin(h * off);
      taps[m] = k.at_gap(2.0 * s * s) * grid->weight(0) / omega;
      mass += taps[m];
    }
    const double c = 1.0 / mass;
    for (double& t : taps) t *= c;
    k.c_eta_ = c;
    k.taps_ = std::move(taps);
    k.half_width_ = K;
  } else {
    double mass = 0.0;
    std::size_t in_cap = 0;
    std::vector<double> rows(M);
    for (std::size_t i = 0; i < M; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        const double gap = half_chord2(grid->node(i), grid->node(j));
        if (gap <= cap_gap) {
          row += k.at_gap(gap) * grid->weight(j);
          if (i == 0) ++in_cap;
        }
      }
      rows[i] = row / omega;
      mass += rows[i];
    }
    if (in_cap < 3) throw ResolutionError("make_bump_kernel: cap holds fewer than 3 grid nodes; increase M");
    k.c_eta_ = static_cast<double>(M) / mass;
    k.row_scale_.resize(M);
    for (std::size_t i = 0; i < M; ++i) k.row_scale_[i] = 1.0 / (rows[i] * k.c_eta_);
  }
  k.prefactor_ = raw_prefactor * k.c_eta_;
  return k;
}

double continuum_c_eta(double eta, int n, const Profile& profile) {
  // s = u^2 removes the s^{(n-3)/2} endpoint singularity at n = 2
  auto integrand = [&](double u) {
    const double s = u * u;
    return 2.0 * std::pow(u, n - 2) * profile.fn(1.0 - 2.0 * s) *
           std::pow(1.0 - eta * eta * s, 0.5 * (n - 3));
  };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-14);
  const double inv_c = std::pow(2.0, n - 2) / sphere_area(n) * integral;
  return 1.0 / inv_c;
}

RadialField spherical_convolve(const RadialField& f, const BumpKernel& k) {
  if (!f.grid().same_as(*k.grid_ptr())) throw GridMismatch("spherical_convolve: kernel built for another grid");
  if (f.grid().dim() != 2) return spherical_convolve_direct(f, k);
  const std::size_t M = f.size();
  const std::size_t K = k.half_width();
  std::vector<double> padded(M + 2 * K);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    padded[i] = f[wrap(static_cast<long long>(i) - static_cast<long long>(K), M)];
  }
  std::vector<double> out(M);
  kernels::circulant_conv(padded, k.taps(), out);
  return RadialField(f.grid_ptr(), std::move(out));
}

RadialField spherical_convolve_direct(const RadialField& f, const BumpKernel& k) {
  if (!f.grid().same_as(*k.grid_ptr())) throw GridMismatch("spherical_convolve: kernel built for another grid");
  const SphereGrid& g = f.grid();
  const std::size_t M = g.size();
  const double omega = g.area();
  std::vector<double> fw(M), row(M), out(M);
  for (std::size_t j = 0; j < M; ++j) fw[j] = f[j] * g.weight(j) / omega;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) row[j] = k.at_gap(half_chord2(g.node(i), g.node(j)));
    out[i] = kernels::dot(row, fw);
    if (!k.row_scale_.empty()) out[i] *= k.row_scale_[i];
  }
  return RadialField(f.grid_ptr(), std::move(out));
}

void add_bump_inplace(RadialField& r, const Vec& xi, double amplitude, const BumpKernel& k,
                      double* dleb) {
  if (!r.grid().same_as(*k.grid_ptr())) throw GridMismatch("add_bump: kernel built for another grid");
  if (amplitude < 0.0) throw InvalidArgument("add_bump: amplitude must be nonnegative");
  const SphereGrid& g = r.grid();
  const int n = g.dim();
  const double cap_gap = 2.0 * k.eta() * k.eta();
  double added = 0.0;
  auto deposit = [&](std::size_t j) {
    const double gap = half_chord2(xi, g.node(j));
    if (gap > cap_gap) return;
    const double before = r[j];
    const double after = before + amplitude * k.at_gap(gap);
    r[j] = after;
    if (dleb) {
      added += (n == 2 ? (after - before) * (after + before)
                       : (after - before) * (after * after + after * before + before * before)) *
               g.weight(j) / n;
    }
  };
  const std::size_t M = g.size();
  if (n == 2) {
    const long long reach = static_cast<long long>(std::ceil(2.0 * k.eta() / g.spacing() * 1.1)) + 2;
    if (2 * reach + 1 >= static_cast<long long>(M)) {
      for (std::size_t j = 0; j < M; ++j) deposit(j);
    } else {
      const long long centre = static_cast<long long>(g.nearest_node(xi));
      for (long long o = -reach; o <= reach; ++o) deposit(wrap(centre + o, M));
    }
  } else {
    for (std::size_t j = 0; j < M; ++j) deposit(j);
  }
  if (dleb) *dleb = added;
}

RadialField add_bump(const RadialField& r, const Vec& xi, double amplitude, const BumpKernel& k) {
  RadialField out = r;
  add_bump_inplace(out, xi, amplitude, k);
  return out;
}

// ---------------------------------------------------------------------------
// CSV serialization

namespace {
std::filesystem::path sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".json");
  return p;
}
}  // namespace

void write_field_csv(const std::string& path, const RadialField& f, const std::string& quantity) {
  const SphereGrid& g = f.grid();
  std::ostringstream csv;
  csv << "theta_index,theta,value\n";
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double theta = g.dim() == 2 ? g.angle(j) : std::acos(std::clamp(g.node(j)[2], -1.0, 1.0));
    csv << j << ',' << io::format_double(theta) << ',' << io::format_double(f[j]) << '\n';
  }
  io::write_atomic(path, csv.str());
  nlohmann::ordered_json meta = {{"n", g.dim()}, {"M", g.size()}, {"quantity", quantity}};
  io::write_atomic(sidecar_path(path).string(), meta.dump(2) + "\n");
}

RadialField read_field_csv(const std::string& path, std::string* quantity) {
  const auto meta = nlohmann::json::parse(io::read_file(sidecar_path(path).string()));
  const int n = meta.at("n").get<int>();
  const std::size_t M = meta.at("M").get<std::size_t>();
  if (quantity) *quantity = meta.value("quantity", "");
  auto grid = make_grid(n, M);
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "theta_index,theta,value") throw GrowthError("read_field_csv: unexpected header in " + path);
  std::vector<double> values(M, std::numeric_limits<double>::quiet_NaN());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw GrowthError("read_field_csv: malformed row");
    const std::size_t idx = std::stoull(line.substr(0, c1));
    if (idx >= M) throw GrowthError("read_field_csv: index out of range");
    values[idx] = std::strtod(line.c_str() + c2 + 1, nullptr);
    ++rows;
  }
  if (rows != M) throw GrowthError("read_field_csv: expected " + std::to_string(M) + " rows");
  return RadialField(std::move(grid), std::move(values));
}

}  // namespace growth
