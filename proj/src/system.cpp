#include "invkit/system.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>

namespace invkit {

SwitchedSystem::SwitchedSystem(std::size_t n, std::vector<Mode> modes) : n_(n), modes_(std::move(modes)) {
  if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "state dimension must be positive");
  if (modes_.empty()) throw Error(ErrorCode::InvalidArgument, "a switched system needs at least one mode");
  if (modes_.size() > ModeSet::kMaxModes) throw Error(ErrorCode::InvalidArgument, "at most 64 modes are supported");
  std::set<std::string> names;
  for (const auto& m : modes_) {
    if (!names.insert(m.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate mode name '" + m.name + "'");
    if (m.update.size() != n_) {
      throw Error(ErrorCode::InvalidArgument, "mode '" + m.name + "' has " + std::to_string(m.update.size()) +
                                                  " coordinates, expected " + std::to_string(n_));
    }
    for (const auto& e : m.update) {
      if (variable_count(e) > n_) throw Error(ErrorCode::UnknownVariable, "mode '" + m.name + "' references x" +
                                                                              std::to_string(variable_count(e)));
    }
  }
  jacobian_.resize(modes_.size());
  for (std::size_t p = 0; p < modes_.size(); ++p) {
    bool smooth = true;
    for (const auto& e : modes_[p].update) smooth = smooth && !contains_abs(e);
    if (!smooth) continue;
    auto& jac = jacobian_[p];
    jac.reserve(n_ * n_);
    for (const auto& e : modes_[p].update) {
      for (std::size_t j = 0; j < n_; ++j) jac.push_back(differentiate(e, j));
    }
  }
}

std::vector<std::string> SwitchedSystem::mode_names() const {
  std::vector<std::string> out;
  for (const auto& m : modes_) out.push_back(m.name);
  return out;
}

const Expr& SwitchedSystem::partial(std::size_t p, std::size_t i, std::size_t j) const {
  if (!differentiable(p)) throw Error(ErrorCode::NonDifferentiable, "mode '" + mode(p).name + "' contains abs");
  return jacobian_[p].at(i * n_ + j);
}

std::vector<double> SwitchedSystem::step(std::size_t p, std::span<const double> x) const {
  const auto& m = mode(p);
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = eval_real(m.update[i], x);
  return out;
}

namespace {

Box include_unchecked(const SwitchedSystem& sys, std::size_t p, const Box& b, InclusionStrategy strategy,
                      RoundingPolicy r) {
  const std::size_t n = sys.dim();
  const auto& f = sys.mode(p).update;
  std::vector<Interval> out(n);
  if (strategy == InclusionStrategy::Natural || !sys.differentiable(p)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = eval_interval(f[i], b, r);
    return Box(std::move(out));
  }
  const auto m = b.midpoint();
  const Box mbox = Box::point(m);
  std::vector<Interval> delta(n);
  for (std::size_t j = 0; j < n; ++j) delta[j] = sub(b[j], Interval(m[j]), r);
  for (std::size_t i = 0; i < n; ++i) {
    Interval acc = eval_interval(f[i], mbox, r);
    for (std::size_t j = 0; j < n; ++j) {
      const Expr& d = sys.partial(p, i, j);
      if (d.is_const(0.0)) continue;
      acc = add(acc, mul(eval_interval(d, b, r), delta[j], r), r);
    }
    out[i] = acc;
  }
  return Box(std::move(out));
}

}  // namespace

Box include(const SwitchedSystem& sys, std::size_t p, const Box& b, InclusionStrategy strategy,
            RoundingPolicy rounding) {
  if (b.dim() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "box dimension does not match the system");
  try {
    return include_unchecked(sys, p, b, strategy, rounding);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DomainError) throw;
    throw Error(ErrorCode::DomainError,
                std::string(e.what()) + " (mode '" + sys.mode(p).name + "', box " + to_string(b) + ")");
  }
}

LipschitzEstimate estimate_rho1(const SwitchedSystem& sys, const Box& domain) {
  if (domain.dim() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "domain dimension does not match the system");
  const std::size_t n = sys.dim();
  double rho = 0.0;
  for (std::size_t p = 0; p < sys.mode_count(); ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      Interval row(0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double m = eval_interval(sys.partial(p, i, j), domain, RoundingPolicy::Outward).mag();
        row = add(row, Interval(m), RoundingPolicy::Outward);
      }
      rho = std::max(rho, row.hi());
    }
  }
  return {rho, domain};
}

LipschitzEstimate estimate_rho1(const SwitchedSystem& sys, const Region& domain) {
  return estimate_rho1(sys, domain.hull());
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "expm needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "expm needs finite entries");
  const auto inf_norm = [](const Eigen::MatrixXd& x) { return x.cwiseAbs().rowwise().sum().maxCoeff(); };
  int squarings = 0;
  double norm = m.size() == 0 ? 0.0 : inf_norm(m);
  while (norm >= 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd s = m / std::ldexp(1.0, squarings);
  const auto n = m.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  // With ||s|| < 0.5 the tail after a term of norm t is below t.
  for (int k = 1; k < 64; ++k) {
    term = term * s / static_cast<double>(k);
    sum += term;
    if (n == 0 || inf_norm(term) < 1e-16) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

AffineMap discretize_affine_map(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "sampling time must be positive");
  const auto n = a.rows();
  if (a.cols() != n || b.size() != n) throw Error(ErrorCode::InvalidArgument, "A must be n x n and b of length n");
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = a * tau;
  aug.topRightCorner(n, 1) = b * tau;
  const Eigen::MatrixXd e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
}

std::vector<Expr> affine_exprs(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  std::vector<Expr> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::optional<Expr> acc;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double c = a(i, j);
      if (c == 0.0) continue;
      Expr term = simplify::mul(Expr::constant(c), Expr::variable(static_cast<std::size_t>(j)));
      acc = acc ? simplify::add(*acc, term) : term;
    }
    if (b(i) != 0.0 || !acc) {
      const Expr c = Expr::constant(b(i));
      acc = acc ? simplify::add(*acc, c) : c;
    }
    out.push_back(*acc);
  }
  return out;
}

Mode discretize_linear_affine(std::string name, const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tau) {
  const AffineMap map = discretize_affine_map(a, b, tau);
  return Mode{std::move(name), affine_exprs(map.a, map.b)};
}

Mode discretize_euler(std::string name, const std::vector<Expr>& field, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "sampling time must be positive");
  Mode mode{std::move(name), {}};
  const Expr step = Expr::constant(tau);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Expr x = Expr::variable(i);
    const Expr& f = field[i];
    // x - tau*u evaluates identically to x + tau*(-u) and reads better.
    if (f.kind() == ExprKind::Neg) {
      mode.update.push_back(Expr::binary(ExprKind::Sub, x, Expr::binary(ExprKind::Mul, step, f.child())));
    } else {
      mode.update.push_back(Expr::binary(ExprKind::Add, x, Expr::binary(ExprKind::Mul, step, f)));
    }
  }
  return mode;
}

LyapunovMargin lyapunov_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, const Box& omega,
                               std::size_t samples) {
  const auto n = a.rows();
  if (n == 0 || a.cols() != n || q.rows() != n || q.cols() != n || omega.dim() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InvalidArgument, "A, Q and omega must share the dimension");
  }
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "at least one boundary sample is required");
  for (const auto& d : omega.intervals()) {
    if (!(d.lo() < 0.0 && d.hi() > 0.0)) throw Error(ErrorCode::OriginOutside, "omega must contain the origin in its interior");
  }
  const auto inf_norm = [](const Eigen::MatrixXd& x) { return x.cwiseAbs().rowwise().sum().maxCoeff(); };

  // P = sum_k (A^T)^k Q A^k
  Eigen::MatrixXd p = q;
  Eigen::MatrixXd term = q;
  constexpr int kMaxTerms = 200000;
  int k = 0;
  for (; k < kMaxTerms; ++k) {
    term = a.transpose() * term * a;
    p += term;
    const double t = inf_norm(term);
    if (!std::isfinite(t) || t > 1e300) break;
    if (t < 1e-12) break;
  }
  if (k == kMaxTerms || !p.allFinite() || !(inf_norm(term) < 1e-12)) {
    throw Error(ErrorCode::NotConverging, "Lyapunov series does not converge; spectral radius of A is not below 1");
  }
  p = 0.5 * (p + p.transpose());

  const Eigen::MatrixXd pinv = p.inverse();
  double gamma = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double bound = std::min(omega[i].hi(), -omega[i].lo());
    gamma = std::min(gamma, bound / std::sqrt(pinv(i, i)));
  }
  const double gamma2 = gamma * gamma;

  // Boundary points x = gamma * L^{-T} u for unit u, with P = L L^T.
  const Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "Q must be symmetric positive definite");
  const Eigen::MatrixXd lt = llt.matrixU();  // L^T

  std::vector<Eigen::VectorXd> vertices;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = (mask >> i) & 1U ? 1.0 : -1.0;
    vertices.push_back(v);
  }
  // Infinity-norm distance from y to the complement of {x'Px <= gamma^2}:
  // the quadratic is convex, so its maximum over the cube y + t[-1,1]^n sits
  // at a vertex and the distance is the smallest root over vertex rays.
  const auto distance = [&](const Eigen::VectorXd& y) {
    const double c = y.dot(p * y) - gamma2;
    if (c >= 0.0) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) {
      const double qa = v.dot(p * v);
      const double qb = 2.0 * v.dot(p * y);
      const double t = (-qb + std::sqrt(qb * qb - 4.0 * qa * c)) / (2.0 * qa);
      best = std::min(best, t);
    }
    return best;
  };

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd u(n);
    if (n == 2) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(samples);
      u << std::cos(th), std::sin(th);
    } else if (n == 1) {
      u << (s % 2 == 0 ? 1.0 : -1.0);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) u(i) = gauss(rng);
      u.normalize();
    }
    const Eigen::VectorXd x = gamma * lt.triangularView<Eigen::Upper>().solve(u);
    r = std::min(r, distance(a * x));
  }
  return {p, gamma, r};
}

}  // namespace invkit
