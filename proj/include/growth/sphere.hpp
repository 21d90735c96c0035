#pragma once
// Grid functions on the unit sphere S^{n-1} (n = 2, 3), quadrature, volumes,
// and the compactly supported zonal kernels used both to deposit bumps and to
// smooth domains.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace growth {

// Points of R^n; components past n are zero.
using Vec = std::array<double, 3>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec scaled(const Vec& a, double c);

// Surface area of S^{n-1}: 2 pi^{n/2} / Gamma(n/2).
double sphere_area(int n);

class SphereGrid {
 public:
  SphereGrid(int dim, std::vector<Vec> nodes, std::vector<double> weights);

  int dim() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }
  const Vec& node(std::size_t j) const { return nodes_[j]; }
  std::span<const Vec> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t j) const { return weights_[j]; }
  double area() const { return area_; }

  // Typical distance between neighbouring nodes.
  double spacing() const { return spacing_; }

  // Coordinates as separate arrays (x, y, z) for vector kernels.
  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::span<const double> zs() const { return zs_; }

  // n = 2 only: node j sits at angle 2 pi j / M.
  double angle(std::size_t j) const;
  bool is_circle() const { return dim_ == 2; }

  std::size_t nearest_node(const Vec& direction) const;

  bool same_as(const SphereGrid& other) const;

 private:
  int dim_;
  std::vector<Vec> nodes_;
  std::vector<double> weights_;
  std::vector<double> xs_, ys_, zs_;
  double area_ = 0.0;
  double spacing_ = 0.0;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

// n = 2: equispaced angles with equal weights 2 pi / M (M >= 4).
// n = 3: Fibonacci (equal-area spiral) nodes with equal weights 4 pi / M (M >= 16).
GridPtr make_grid(int n, std::size_t M);

// A real function sampled at the nodes of a grid.
class RadialField {
 public:
  RadialField() = default;
  RadialField(GridPtr grid, std::vector<double> values);
  RadialField(GridPtr grid, double constant);

  static RadialField from_function(GridPtr grid, const std::function<double(const Vec&)>& f);

  const GridPtr& grid_ptr() const { return grid_; }
  const SphereGrid& grid() const { return *grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }

  double max() const;
  double min() const;

  RadialField scaled(double c) const;

  // Value in an arbitrary direction: linear in angle for n = 2, nearest node for n = 3.
  double at(const Vec& direction) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

void require_same_grid(const RadialField& a, const RadialField& b);

// (sum_j |f_j|^p w_j)^{1/p}; p = infinity gives max |f_j|.
double lp_norm(const RadialField& f, double p);
double l2_distance(const RadialField& a, const RadialField& b);
double integrate(const RadialField& f);

// Volume n^{-1} sum_j r_j^n w_j of the star-shaped domain with boundary r.
double leb_volume(const RadialField& r);

double oscillation(const RadialField& r);

// Continuous profile on [-1, 1], nonnegative, sup 1.
struct Profile {
  std::string name;
  std::function<double(double)> fn;
};

// (1 + cos pi s) / 2 on [-1, 1].
Profile cosine_profile();

// Piecewise-linear profile through equispaced samples on [-1, 1]; rescaled to sup 1.
Profile tabulated_profile(std::string name, std::vector<double> samples);

// Zonal kernel g(t) = c/omega_{n-1} * eta^{-(n-1)} * phi(1 - (1-t)/eta^2), supported on
// t >= 1 - 2 eta^2, i.e. a cap of chord radius 2 eta. The constant c is fixed by the
// grid so that (1 * g) = 1 at the nodes; on sphere grids c is the node average and
// convolution rescales each row to keep the identity exact.
class BumpKernel {
 public:
  double eta() const { return eta_; }
  double c_eta() const { return c_eta_; }
  int dim() const { return dim_; }
  const Profile& profile() const { return profile_; }
  const GridPtr& grid_ptr() const { return grid_; }

  // g evaluated at t = 1 - gap; gap = |z - theta|^2 / 2 keeps precision near t = 1.
  double at_gap(double gap) const;
  double operator()(double t) const { return at_gap(1.0 - t); }
  double max_value() const;

  // Circle grids: g(<z_i, z_{i+m}>) w / omega_n for m = -K..K.
  std::span<const double> taps() const { return taps_; }
  std::size_t half_width() const { return half_width_; }

 private:
  friend BumpKernel make_bump_kernel(double, GridPtr, Profile);
  double eta_ = 0.0;
  double c_eta_ = 1.0;
  double prefactor_ = 1.0;  // c / omega_{n-1} * eta^{-(n-1)}
  int dim_ = 2;
  Profile profile_;
  GridPtr grid_;
  std::vector<double> taps_;
  std::size_t half_width_ = 0;
  // n = 3: per-node factors that make (1 * g) = 1 at every node of an irregular grid
  std::vector<double> row_scale_;
  friend RadialField spherical_convolve_direct(const RadialField&, const BumpKernel&);
};

BumpKernel make_bump_kernel(double eta, GridPtr grid, Profile profile = cosine_profile());

// Normalization constant from the continuum integral, for cross-checking the grid value.
double continuum_c_eta(double eta, int n, const Profile& profile);

// (f * g)(z_i) = omega_n^{-1} sum_j f_j g(<z_i, theta_j>) w_j.
// Circle grids use the circulant path; n = 3 uses the direct sum.
RadialField spherical_convolve(const RadialField& f, const BumpKernel& k);
RadialField spherical_convolve_direct(const RadialField& f, const BumpKernel& k);

// r + amplitude * g(<xi, .>). Returns the volume added when dleb is non-null.
RadialField add_bump(const RadialField& r, const Vec& xi, double amplitude, const BumpKernel& k);
void add_bump_inplace(RadialField& r, const Vec& xi, double amplitude, const BumpKernel& k,
                      double* dleb = nullptr);

// CSV rows `theta_index,theta,value` plus `<path>.json` sidecar {n, M, quantity}.
void write_field_csv(const std::string& path, const RadialField& f, const std::string& quantity);
RadialField read_field_csv(const std::string& path, std::string* quantity = nullptr);

}  // namespace growth
