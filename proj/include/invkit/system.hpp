#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invkit/expr.hpp"
#include "invkit/interval.hpp"
#include "invkit/paving.hpp"

namespace invkit {

struct Mode {
  std::string name;
  std::vector<Expr> update;  // one expression per state coordinate
};

enum class InclusionStrategy { Natural, MeanValue };

/// Finite, ordered set of modes x+ = f_p(x) over a common state dimension.
/// Partial derivatives of every differentiable mode are computed once at
/// construction.
class SwitchedSystem {
 public:
  SwitchedSystem(std::size_t n, std::vector<Mode> modes);

  std::size_t dim() const noexcept { return n_; }
  std::size_t mode_count() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  const Mode& mode(std::size_t p) const { return modes_.at(p); }
  std::vector<std::string> mode_names() const;

  bool differentiable(std::size_t p) const { return !jacobian_.at(p).empty(); }
  /// d f_p,i / d x_j; throws NonDifferentiable for modes containing abs.
  const Expr& partial(std::size_t p, std::size_t i, std::size_t j) const;

  /// Point image f_p(x).
  std::vector<double> step(std::size_t p, std::span<const double> x) const;

 private:
  std::size_t n_;
  std::vector<Mode> modes_;
  std::vector<std::vector<Expr>> jacobian_;  // row-major n*n per mode; empty if not differentiable
};

/// Inclusion function [f_p](b). MeanValue is f_p(m) + [J_p](b)(b - m) with m
/// the midpoint; modes containing abs fall back to the natural extension.
/// DomainError messages name the mode and the box.
Box include(const SwitchedSystem& sys, std::size_t p, const Box& b, InclusionStrategy strategy,
            RoundingPolicy rounding = RoundingPolicy::Outward);

struct LipschitzEstimate {
  double rho1 = 0.0;
  Box domain;
};

/// Infinity-norm bound of the interval Jacobian over the domain, maximised
/// over modes.
LipschitzEstimate estimate_rho1(const SwitchedSystem& sys, const Box& domain);
/// Uses the hull of the region's IN leaves.
LipschitzEstimate estimate_rho1(const SwitchedSystem& sys, const Region& domain);

/// exp(M) by scaling and squaring with a truncated Taylor series.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

struct AffineMap {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// Exact sampling of x' = Ax + b over tau via the augmented exponential.
AffineMap discretize_affine_map(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tau);
/// Mode whose coordinates are the linear-affine expressions of the sampled map.
Mode discretize_linear_affine(std::string name, const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tau);
/// Mode x + tau * field(x).
Mode discretize_euler(std::string name, const std::vector<Expr>& field, double tau);

/// Builds sum_j a_ij x_j + b_i expressions, skipping zero coefficients.
std::vector<Expr> affine_exprs(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

struct LyapunovMargin {
  Eigen::MatrixXd p;
  double gamma = 0.0;
  double r = 0.0;
};

/// Quadratic level-set candidate for x+ = Ax inside omega and the smallest
/// infinity-norm distance from A(boundary) to the level-set complement.
LyapunovMargin lyapunov_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, const Box& omega,
                               std::size_t samples = 10000);

}  // namespace invkit
