#pragma once

#include "dfrc/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <vector>

namespace dfrc {

// ---------------------------------------------------------------------------
// Complex <-> real lifting. Complex coordinate j occupies the interleaved
// real pair x(2j) = Re z_j, x(2j+1) = Im z_j.
// ---------------------------------------------------------------------------

inline Vec lift_point(const CVec& z) {
  Vec x(2 * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x(2 * j) = z(j).real();
    x(2 * j + 1) = z(j).imag();
  }
  return x;
}

inline CVec unlift_point(const Vec& x) {
  CVec z(x.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = Complex{x(2 * j), x(2 * j + 1)};
  return z;
}

/// Re{a^H z} = lift_linear(a) . lift_point(z).
inline Vec lift_linear(const CVec& a) {
  Vec x(2 * a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    x(2 * j) = a(j).real();
    x(2 * j + 1) = a(j).imag();
  }
  return x;
}

/// Real symmetric form of a Hermitian quadratic: z^H M z = x^T out x.
/// PSD-ness carries over. Rejects non-Hermitian input.
inline Mat lift_hermitian(const CMat& m, double herm_tol = 1e-9) {
  if (m.rows() != m.cols()) throw std::invalid_argument("lift_hermitian: square input required");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.adjoint()).cwiseAbs().maxCoeff()) > herm_tol * scale)
    throw std::invalid_argument("lift_hermitian: matrix is not Hermitian");
  const Eigen::Index d = m.rows();
  Mat out(2 * d, 2 * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double a = m(j, k).real();
      const double b = m(j, k).imag();
      out(2 * j, 2 * k) = a;
      out(2 * j, 2 * k + 1) = -b;
      out(2 * j + 1, 2 * k) = b;
      out(2 * j + 1, 2 * k + 1) = a;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem description
// ---------------------------------------------------------------------------

/// One convex inequality (1/2) x^T A x + b^T x + c <= 0 with A PSD.
/// A zero-sized `quad` denotes a linear constraint.
struct QuadConstraint {
  Mat quad;
  Vec lin;
  double constant = 0.0;

  double value(const Vec& x) const {
    double v = constant + lin.dot(x);
    if (quad.size() > 0) v += 0.5 * x.dot(quad * x);
    return v;
  }
  Vec gradient(const Vec& x) const {
    if (quad.size() > 0) return quad * x + lin;
    return lin;
  }
};

/// Maximize obj_constant + obj_lin.x + (1/2) x^T obj_quad x (obj_quad NSD)
/// subject to quadratic inequalities and optional box bounds. Quadratic
/// terms are certified at solve time: eigenvalues on the wrong side within
/// 1e-9 (relative) are clipped to zero, anything worse is rejected.
struct ConvexQcqp {
  int dim = 0;
  double obj_constant = 0.0;
  Vec obj_lin;   // zero-sized means zero
  Mat obj_quad;  // zero-sized means zero
  std::vector<QuadConstraint> constraints;
  Vec lower, upper;  // zero-sized means unbounded; +-inf entries allowed

  double objective(const Vec& x) const {
    double v = obj_constant;
    if (obj_lin.size() > 0) v += obj_lin.dot(x);
    if (obj_quad.size() > 0) v += 0.5 * x.dot(obj_quad * x);
    return v;
  }
};

enum class SolveStatus { optimal, infeasible, max_iter };

struct SolveReport {
  SolveStatus status = SolveStatus::max_iter;
  Vec solution;
  double objective = 0.0;
  double max_violation = 0.0;  // relative to per-constraint scale
  int newton_steps = 0;
};

// ---------------------------------------------------------------------------
// Log-barrier interior-point solver
// ---------------------------------------------------------------------------

namespace qcqp_detail {

/// Clip spectrum to one side. `psd=true` floors eigenvalues at 0 (rejecting
/// anything below -tol*scale); `psd=false` caps them at 0 likewise.
inline void certify_side(Mat& m, bool psd, double tol = 1e-9) {
  if (m.size() == 0) return;
  m = 0.5 * (m + m.transpose()).eval();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  // Diagonal fast path covers ball and separable-curvature constraints.
  bool diagonal = true;
  for (Eigen::Index i = 0; i < m.rows() && diagonal; ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double& d = m(i, i);
      const double bad = psd ? -d : d;
      if (bad > tol * scale) throw std::invalid_argument("quadratic term fails PSD/NSD check");
      if (bad > 0.0) d = 0.0;
    }
    return;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double bad = psd ? -ev(i) : ev(i);
    if (bad > tol * scale) throw std::invalid_argument("quadratic term fails PSD/NSD check");
    if (bad > 0.0) ev(i) = 0.0;
  }
  m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Barrier-side problem: minimize (1/2) x^T P x + q.x subject to the listed
/// inequalities, all assumed certified and scale-normalized.
struct BarrierProblem {
  Mat p;  // PSD (may be zero-sized)
  Vec q;
  std::vector<QuadConstraint> cons;

  double f0(const Vec& x) const {
    double v = q.dot(x);
    if (p.size() > 0) v += 0.5 * x.dot(p * x);
    return v;
  }
};

struct NewtonResult {
  Vec x;
  int steps = 0;
  bool early_exit = false;
};

/// Largest step that keeps every constraint strictly negative; each
/// constraint is quadratic along the ray, so the boundary crossing is a
/// root of a scalar quadratic.
inline double max_feasible_step(const BarrierProblem& bp, const Vec& x, const Vec& d,
                                const std::vector<double>& fvals) {
  double amax = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bp.cons.size(); ++i) {
    const auto& c = bp.cons[i];
    double qa = 0.0;
    double qb = c.lin.dot(d);
    if (c.quad.size() > 0) {
      const Vec qd = c.quad * d;
      qa = 0.5 * d.dot(qd);
      qb += x.dot(qd);
    }
    const double qc = fvals[i];  // < 0
    double root = std::numeric_limits<double>::infinity();
    if (qa <= 1e-300) {
      if (qb > 0.0) root = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      // qc < 0 and qa > 0 guarantee one positive root
      root = (-qb + std::sqrt(std::max(0.0, disc))) / (2.0 * qa);
    }
    if (root > 0.0) amax = std::min(amax, root);
  }
  return amax;
}

template <typename EarlyExit>
NewtonResult newton_centering(const BarrierProblem& bp, double t, Vec x, int max_steps,
                              EarlyExit early) {
  const Eigen::Index n = x.size();
  const std::size_t m = bp.cons.size();
  std::vector<double> fvals(m);
  NewtonResult res;

  auto eval_fvals = [&](const Vec& xx) {
    for (std::size_t i = 0; i < m; ++i) fvals[i] = bp.cons[i].value(xx);
  };
  auto psi = [&](const Vec& xx) {
    double v = t * bp.f0(xx);
    for (std::size_t i = 0; i < m; ++i) {
      const double fi = bp.cons[i].value(xx);
      if (fi >= 0.0) return std::numeric_limits<double>::infinity();
      v -= std::log(-fi);
    }
    return v;
  };

  for (int it = 0; it < max_steps; ++it) {
    eval_fvals(x);
    Vec g = t * bp.q;
    if (bp.p.size() > 0) g += t * (bp.p * x);
    Mat h = Mat::Zero(n, n);
    if (bp.p.size() > 0) h = t * bp.p;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec gi = bp.cons[i].gradient(x);
      const double inv = -1.0 / fvals[i];  // > 0
      g += inv * gi;
      h.noalias() += (inv * inv) * (gi * gi.transpose());
      if (bp.cons[i].quad.size() > 0) h += inv * bp.cons[i].quad;
    }

    // Regularized Newton direction
    double reg = 0.0;
    Vec d;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Mat hr = h;
      if (reg > 0.0) hr.diagonal().array() += reg;
      Eigen::LDLT<Mat> ldlt(hr);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-g);
        if (d.allFinite() && g.dot(d) < 0.0) break;
      }
      reg = (reg == 0.0) ? 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff()) : reg * 100.0;
      d.resize(0);
    }
    if (d.size() == 0) break;  // numerical dead end; return best iterate

    const double decrement = -g.dot(d);
    if (decrement * 0.5 <= 1e-12 * (1.0 + std::abs(t * bp.f0(x)))) break;

    double alpha = std::min(1.0, 0.99 * max_feasible_step(bp, x, d, fvals));
    const double psi0 = psi(x);
    int bt = 0;
    for (; bt < 60; ++bt) {
      if (psi(x + alpha * d) <= psi0 + 0.01 * alpha * g.dot(d)) break;
      alpha *= 0.5;
    }
    if (bt == 60) break;
    x += alpha * d;
    ++res.steps;
    if (early(x)) {
      res.early_exit = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

struct BarrierOutcome {
  Vec x;
  int steps = 0;
  bool converged = false;
  bool early_exit = false;
};

/// Outer barrier loop; `early` short-circuits (used by phase I).
template <typename EarlyExit>
BarrierOutcome barrier_minimize(const BarrierProblem& bp, Vec x, double gap_rel,
                                EarlyExit early) {
  BarrierOutcome out;
  const double m = static_cast<double>(bp.cons.size());
  if (m == 0.0) {
    out.x = std::move(x);
    out.converged = true;
    return out;
  }
  double t = m / std::max(std::abs(bp.f0(x)), 1.0);
  const int max_stages = 64;
  for (int stage = 0; stage < max_stages; ++stage) {
    auto res = newton_centering(bp, t, x, 250, early);
    x = std::move(res.x);
    out.steps += res.steps;
    if (res.early_exit) {
      out.early_exit = true;
      break;
    }
    const double gap_target = gap_rel * (1.0 + std::abs(bp.f0(x)));
    if (m / t <= gap_target) {
      out.converged = true;
      break;
    }
    t *= 20.0;
  }
  out.x = std::move(x);
  return out;
}

inline double constraint_scale(const QuadConstraint& c) {
  double s = std::abs(c.constant);
  s = std::max(s, c.lin.cwiseAbs().maxCoeff());
  if (c.quad.size() > 0) s = std::max(s, c.quad.cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}

}  // namespace qcqp_detail

/// Interior-point solve. Maintains strict feasibility throughout, so an
/// `optimal` report satisfies every constraint exactly (violation 0). A
/// phase-I pass finds the interior when the warm start `x0` is absent,
/// infeasible, or sits on the boundary.
inline SolveReport solve(const ConvexQcqp& p, double tol, const Vec* x0 = nullptr) {
  using namespace qcqp_detail;
  const Eigen::Index n = p.dim;
  SolveReport rep;

  // Assemble the minimization-side problem with normalized constraints.
  BarrierProblem bp;
  if (p.obj_quad.size() > 0) {
    bp.p = -p.obj_quad;
    certify_side(bp.p, /*psd=*/true);
  }
  bp.q = (p.obj_lin.size() > 0) ? Vec(-p.obj_lin) : Vec(Vec::Zero(n));
  for (const auto& c : p.constraints) {
    QuadConstraint nc = c;
    if (nc.quad.size() > 0) certify_side(nc.quad, /*psd=*/true);
    const double s = 1.0 / constraint_scale(nc);
    if (nc.quad.size() > 0) nc.quad *= s;
    nc.lin *= s;
    nc.constant *= s;
    bp.cons.push_back(std::move(nc));
  }
  if (p.lower.size() > 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(p.lower(i))) {
        QuadConstraint c;
        c.lin = Vec::Zero(n);
        c.lin(i) = -1.0;
        c.constant = p.lower(i);
        const double s = 1.0 / constraint_scale(c);
        c.lin *= s;
        c.constant *= s;
        bp.cons.push_back(std::move(c));
      }
      if (std::isfinite(p.upper(i))) {
        QuadConstraint c;
        c.lin = Vec::Zero(n);
        c.lin(i) = 1.0;
        c.constant = -p.upper(i);
        const double s = 1.0 / constraint_scale(c);
        c.lin *= s;
        c.constant *= s;
        bp.cons.push_back(std::move(c));
      }
    }
  }

  Vec x = (x0 != nullptr && x0->size() == n) ? *x0 : Vec(Vec::Zero(n));

  // Unconstrained: a single regularized Newton solve.
  if (bp.cons.empty()) {
    if (bp.p.size() == 0 || bp.p.cwiseAbs().maxCoeff() == 0.0) {
      if (bp.q.cwiseAbs().maxCoeff() > 0.0) {
        rep.status = SolveStatus::max_iter;  // unbounded direction
        rep.solution = x;
        rep.objective = p.objective(x);
        return rep;
      }
      rep.status = SolveStatus::optimal;
      rep.solution = x;
      rep.objective = p.objective(x);
      return rep;
    }
    Mat reg = bp.p;
    reg.diagonal().array() += 1e-12 * (1.0 + bp.p.diagonal().cwiseAbs().maxCoeff());
    x = Eigen::LDLT<Mat>(reg).solve(-bp.q);
    rep.status = SolveStatus::optimal;
    rep.solution = x;
    rep.objective = p.objective(x);
    return rep;
  }

  // Phase I if the start is not strictly interior.
  const double interior_margin = 1e-9;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : bp.cons) worst = std::max(worst, c.value(x));
  int steps = 0;
  if (worst > -interior_margin) {
    BarrierProblem ph;
    const Eigen::Index np = n + 1;
    ph.q = Vec::Zero(np);
    ph.q(n) = 1.0;  // minimize the shared slack
    for (const auto& c : bp.cons) {
      QuadConstraint e;
      if (c.quad.size() > 0) {
        e.quad = Mat::Zero(np, np);
        e.quad.topLeftCorner(n, n) = c.quad;
      }
      e.lin = Vec::Zero(np);
      e.lin.head(n) = c.lin;
      e.lin(n) = -1.0;
      e.constant = c.constant;
      ph.cons.push_back(std::move(e));
    }
    Vec xs(np);
    xs.head(n) = x;
    xs(n) = worst + std::max(1.0, 0.1 * std::abs(worst));
    auto out = barrier_minimize(ph, xs, 1e-10, [&](const Vec& z) {
      double w = -std::numeric_limits<double>::infinity();
      for (const auto& c : bp.cons) w = std::max(w, c.value(z.head(n)));
      return w < -10.0 * interior_margin;
    });
    steps += out.steps;
    double w = -std::numeric_limits<double>::infinity();
    for (const auto& c : bp.cons) w = std::max(w, c.value(out.x.head(n)));
    if (w > -interior_margin) {
      rep.status = SolveStatus::infeasible;
      rep.solution = out.x.head(n);
      rep.objective = p.objective(rep.solution);
      rep.max_violation = std::max(0.0, w);
      rep.newton_steps = steps;
      return rep;
    }
    x = out.x.head(n);
  }

  auto out = barrier_minimize(bp, x, tol, [](const Vec&) { return false; });
  steps += out.steps;
  rep.solution = out.x;
  rep.objective = p.objective(out.x);
  rep.newton_steps = steps;
  double w = -std::numeric_limits<double>::infinity();
  for (const auto& c : bp.cons) w = std::max(w, c.value(out.x));
  rep.max_violation = std::max(0.0, w);
  rep.status = out.converged ? SolveStatus::optimal : SolveStatus::max_iter;
  return rep;
}

}  // namespace dfrc
