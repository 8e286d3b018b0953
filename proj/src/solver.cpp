#include "druopf/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <Eigen/OrderingMethods>

#include "druopf/error.hpp"

namespace druopf {

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::Unbounded: return "unbounded";
    case SolverStatus::MaxIter: return "max_iter";
    case SolverStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

void SolverSettings::validate() const {
  if (!(feas_tol > 0.0) || !(gap_tol > 0.0)) throw Error(ErrorKind::Usage, "solver tolerances must be positive");
  if (max_iter < 1) throw Error(ErrorKind::Usage, "solver max_iter must be >= 1");
}

SolverSettings SolverSettings::from_env() {
  SolverSettings s;
  auto env_number = [](const char* name, double& out) {
    if (const char* v = std::getenv(name)) {
      char* end = nullptr;
      const double d = std::strtod(v, &end);
      if (end == v || *end != '\0') throw Error(ErrorKind::Usage, std::string(name) + ": not a number");
      out = d;
    }
  };
  env_number("DRUOPF_SOLVER_FEAS_TOL", s.feas_tol);
  env_number("DRUOPF_SOLVER_GAP_TOL", s.gap_tol);
  double it = s.max_iter;
  env_number("DRUOPF_SOLVER_MAX_ITER", it);
  s.max_iter = static_cast<int>(it);
  if (const char* v = std::getenv("DRUOPF_SOLVER_SCALING")) {
    const std::string m = v;
    if (m == "none") {
      s.scaling = Scaling::None;
    } else if (m == "ruiz") {
      s.scaling = Scaling::Ruiz;
    } else {
      throw Error(ErrorKind::Usage, "DRUOPF_SOLVER_SCALING must be none or ruiz");
    }
  }
  s.validate();
  return s;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Orthant of size l followed by second-order cones.
struct Cones {
  Eigen::Index l = 0;
  std::vector<Eigen::Index> q;     // cone sizes (scalar included)
  std::vector<Eigen::Index> qoff;  // start offsets

  Eigen::Index size() const { return qoff.empty() ? l : qoff.back() + q.back(); }
  double degree() const { return static_cast<double>(l + static_cast<Eigen::Index>(q.size())); }

  VectorXd identity() const {
    VectorXd e = VectorXd::Zero(size());
    e.head(l).setOnes();
    for (Eigen::Index off : qoff) e(off) = 1.0;
    return e;
  }
};

VectorXd jordan(const Cones& K, const VectorXd& u, const VectorXd& v) {
  VectorXd w(u.size());
  w.head(K.l) = u.head(K.l).cwiseProduct(v.head(K.l));
  for (std::size_t k = 0; k < K.q.size(); ++k) {
    const auto off = K.qoff[k], n = K.q[k];
    w(off) = u.segment(off, n).dot(v.segment(off, n));
    w.segment(off + 1, n - 1) = u(off) * v.segment(off + 1, n - 1) + v(off) * u.segment(off + 1, n - 1);
  }
  return w;
}

// x with lambda o x = v.
VectorXd jordan_solve(const Cones& K, const VectorXd& lam, const VectorXd& v) {
  VectorXd x(v.size());
  x.head(K.l) = v.head(K.l).cwiseQuotient(lam.head(K.l));
  for (std::size_t k = 0; k < K.q.size(); ++k) {
    const auto off = K.qoff[k], n = K.q[k];
    const double l0 = lam(off);
    const auto l1 = lam.segment(off + 1, n - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * v(off) - l1.dot(v.segment(off + 1, n - 1))) / det;
    x(off) = x0;
    x.segment(off + 1, n - 1) = (v.segment(off + 1, n - 1) - x0 * l1) / l0;
  }
  return x;
}

// Largest alpha with lambda + alpha d in the cone (infinity if unbounded).
// Evaluated on the scaled iterate, which stays well centred, instead of on
// s or z directly where the boundary distance cancels.
double max_step(const Cones& K, const VectorXd& lam, const VectorXd& d) {
  double amax = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < K.l; ++i) {
    if (d(i) < 0.0) amax = std::min(amax, -lam(i) / d(i));
  }
  for (std::size_t k = 0; k < K.q.size(); ++k) {
    const auto off = K.qoff[k], n = K.q[k];
    const auto l1 = lam.segment(off + 1, n - 1);
    const auto d1 = d.segment(off + 1, n - 1);
    const double lkn = std::sqrt(std::max((lam(off) - l1.norm()) * (lam(off) + l1.norm()), 1e-300));
    const double lb0 = lam(off) / lkn;
    const double rho0 = (lb0 * d(off) - l1.dot(d1) / lkn) / lkn;
    const double factor = (rho0 + d(off) / lkn) / (lb0 + 1.0);
    const double rho1 = (d1 / lkn - factor * l1 / lkn).norm();
    const double top = rho1 - rho0;
    if (top > 0.0) amax = std::min(amax, 1.0 / top);
  }
  return amax;
}

// Nesterov-Todd scaling: W z = W^{-1} s = lambda, W symmetric block diagonal.
struct NtScaling {
  VectorXd d;                  // orthant: sqrt(s / z)
  std::vector<MatrixXd> w;     // per second-order cone
  std::vector<MatrixXd> winv;
  VectorXd lambda;

  bool compute(const Cones& K, const VectorXd& s, const VectorXd& z) {
    d = (s.head(K.l).cwiseQuotient(z.head(K.l))).cwiseSqrt();
    w.resize(K.q.size());
    winv.resize(K.q.size());
    for (std::size_t k = 0; k < K.q.size(); ++k) {
      const auto off = K.qoff[k], n = K.q[k];
      const VectorXd sk = s.segment(off, n), zk = z.segment(off, n);
      const double sres = (sk(0) - sk.tail(n - 1).norm()) * (sk(0) + sk.tail(n - 1).norm());
      const double zres = (zk(0) - zk.tail(n - 1).norm()) * (zk(0) + zk.tail(n - 1).norm());
      if (!(sres > 0.0) || !(zres > 0.0)) return false;
      const double sn = std::sqrt(sres), zn = std::sqrt(zres);
      const VectorXd sb = sk / sn, zb = zk / zn;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      VectorXd wb(n);
      wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      wb.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
      const double eta = std::sqrt(sn / zn);
      MatrixXd m(n, n);
      m(0, 0) = wb(0);
      m.block(0, 1, 1, n - 1) = wb.tail(n - 1).transpose();
      m.block(1, 0, n - 1, 1) = wb.tail(n - 1);
      m.block(1, 1, n - 1, n - 1) =
          MatrixXd::Identity(n - 1, n - 1) + wb.tail(n - 1) * wb.tail(n - 1).transpose() / (1.0 + wb(0));
      w[k] = eta * m;
      m.block(0, 1, 1, n - 1) *= -1.0;
      m.block(1, 0, n - 1, 1) *= -1.0;
      winv[k] = m / eta;
    }
    lambda = apply(K, z, false);
    return lambda.allFinite();
  }

  VectorXd apply(const Cones& K, const VectorXd& v, bool inverse) const {
    VectorXd r(v.size());
    if (inverse) {
      r.head(K.l) = v.head(K.l).cwiseQuotient(d);
    } else {
      r.head(K.l) = v.head(K.l).cwiseProduct(d);
    }
    for (std::size_t k = 0; k < K.q.size(); ++k) {
      const auto off = K.qoff[k], n = K.q[k];
      r.segment(off, n) = (inverse ? winv[k] : w[k]) * v.segment(off, n);
    }
    return r;
  }
};

// Solves [[0, A', G'], [A, 0, 0], [G, 0, -W^2]] with a sparse LU of the
// statically regularized matrix plus iterative refinement against the
// unregularized one. (A pivot-free LDL' broke down near the optimum where W^2
// spans twenty orders of magnitude.)
class KktSolver {
 public:
  KktSolver(const MatrixXd& a, const MatrixXd& g, const Cones& k)
      : a_(a.sparseView()), g_(g.sparseView()), at_(a_.transpose()), gt_(g_.transpose()), k_(k) {
    a_.makeCompressed();
    g_.makeCompressed();
    n_ = g.cols();
    p_ = a.rows();
    m_ = g.rows();
    fill_pattern();
  }

  bool factor(const NtScaling& sc) {
    sc_ = &sc;
    std::size_t pos = w2_start_;
    const Eigen::Index off = n_ + p_;
    for (Eigen::Index i = 0; i < k_.l; ++i) trip_[pos++] = {static_cast<int>(off + i), static_cast<int>(off + i), -sc.d(i) * sc.d(i) - kDelta};
    for (std::size_t c = 0; c < k_.q.size(); ++c) {
      const MatrixXd w2 = sc.w[c] * sc.w[c];
      const auto o = k_.qoff[c], q = k_.q[c];
      for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index i = j; i < q; ++i) {
          trip_[pos++] = {static_cast<int>(off + o + i), static_cast<int>(off + o + j), -w2(i, j) - (i == j ? kDelta : 0.0)};
          if (i != j) trip_[pos++] = {static_cast<int>(off + o + j), static_cast<int>(off + o + i), -w2(i, j)};
        }
      }
    }
    kmat_.setFromTriplets(trip_.begin(), trip_.end());
    if (!analyzed_) {
      lu_.analyzePattern(kmat_);
      analyzed_ = true;
    }
    lu_.factorize(kmat_);
    return lu_.info() == Eigen::Success;
  }

  bool solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& x, VectorXd& y,
             VectorXd& z) const {
    VectorXd rhs(n_ + p_ + m_);
    rhs << r1, r2, r3;
    VectorXd sol = lu_.solve(rhs);
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < 8; ++it) {
      const VectorXd e = rhs - apply(sol);
      if (!e.allFinite()) return false;
      if (e.lpNorm<Eigen::Infinity>() <= 1e-14 * scale) break;
      sol += lu_.solve(e);
    }
    x = sol.head(n_);
    y = sol.segment(n_, p_);
    z = sol.tail(m_);
    return sol.allFinite();
  }

 private:
  static constexpr double kDelta = 1e-9;

  void fill_pattern() {
    trip_.clear();
    for (Eigen::Index i = 0; i < n_; ++i) trip_.emplace_back(i, i, kDelta);
    for (Eigen::Index i = 0; i < p_; ++i) trip_.emplace_back(n_ + i, n_ + i, -kDelta);
    for (Eigen::Index j = 0; j < a_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) {
        trip_.emplace_back(n_ + it.row(), j, it.value());
        trip_.emplace_back(j, n_ + it.row(), it.value());
      }
    }
    for (Eigen::Index j = 0; j < g_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(g_, j); it; ++it) {
        trip_.emplace_back(n_ + p_ + it.row(), j, it.value());
        trip_.emplace_back(j, n_ + p_ + it.row(), it.value());
      }
    }
    w2_start_ = trip_.size();
    std::size_t extra = static_cast<std::size_t>(k_.l);
    for (auto q : k_.q) extra += static_cast<std::size_t>(q * q);
    trip_.resize(w2_start_ + extra);
    kmat_.resize(n_ + p_ + m_, n_ + p_ + m_);
  }

  // Unregularized K times v.
  VectorXd apply(const VectorXd& v) const {
    const VectorXd x = v.head(n_), y = v.segment(n_, p_), z = v.tail(m_);
    VectorXd out(v.size());
    out.head(n_) = at_ * y + gt_ * z;
    out.segment(n_, p_) = a_ * x;
    out.tail(m_) = g_ * x - sc_->apply(k_, sc_->apply(k_, z, false), false);
    return out;
  }

  Eigen::SparseMatrix<double> a_, g_, at_, gt_;
  const Cones& k_;
  Eigen::Index n_ = 0, p_ = 0, m_ = 0;
  const NtScaling* sc_ = nullptr;
  std::vector<Eigen::Triplet<double>> trip_;
  std::size_t w2_start_ = 0;
  Eigen::SparseMatrix<double> kmat_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

struct Standard {
  MatrixXd a, g;
  VectorXd b, h, c;
  double c0 = 0.0;
  Cones cones;
  std::vector<Eigen::Index> eq_rows, le_rows;  // program row -> A / G row
  std::vector<int> row_kind;                   // 0 = A, 1 = G
};

Standard to_standard(const ConicProgram& prog) {
  Standard st;
  const auto n = static_cast<Eigen::Index>(prog.n_variables());
  Eigen::Index p = 0, l = 0;
  for (const auto& r : prog.rows) (r.relation == Relation::Equal ? p : l)++;
  Eigen::Index m = l;
  for (const auto& c : prog.cones) {
    st.cones.qoff.push_back(m);
    st.cones.q.push_back(static_cast<Eigen::Index>(c.vec.size()) + 1);
    m += st.cones.q.back();
  }
  st.cones.l = l;
  st.a = MatrixXd::Zero(p, n);
  st.b = VectorXd::Zero(p);
  st.g = MatrixXd::Zero(m, n);
  st.h = VectorXd::Zero(m);
  st.c = VectorXd::Zero(n);
  for (const auto& [i, v] : prog.objective.terms) st.c(static_cast<Eigen::Index>(i)) += v;
  st.c0 = prog.objective.constant;
  Eigen::Index ia = 0, ig = 0;
  for (const auto& r : prog.rows) {
    if (r.relation == Relation::Equal) {
      for (const auto& [i, v] : r.expr.terms) st.a(ia, static_cast<Eigen::Index>(i)) += v;
      st.b(ia) = r.rhs - r.expr.constant;
      st.row_kind.push_back(0);
      st.eq_rows.push_back(ia++);
    } else {
      for (const auto& [i, v] : r.expr.terms) st.g(ig, static_cast<Eigen::Index>(i)) += v;
      st.h(ig) = r.rhs - r.expr.constant;
      st.row_kind.push_back(1);
      st.le_rows.push_back(ig++);
    }
  }
  for (std::size_t k = 0; k < prog.cones.size(); ++k) {
    const auto& cone = prog.cones[k];
    Eigen::Index row = st.cones.qoff[k];
    auto put = [&](const AffineExpr& e) {
      for (const auto& [i, v] : e.terms) st.g(row, static_cast<Eigen::Index>(i)) -= v;
      st.h(row) = e.constant;
      ++row;
    };
    put(cone.scalar);
    for (const auto& e : cone.vec) put(e);
  }
  return st;
}

// Ruiz equilibration of [A; G]; second-order cone rows share one factor.
void ruiz(const Standard& st, VectorXd& dcol, VectorXd& ea, VectorXd& eg) {
  const auto n = st.a.cols();
  dcol = VectorXd::Ones(n);
  ea = VectorXd::Ones(st.a.rows());
  eg = VectorXd::Ones(st.g.rows());
  const Cones& K = st.cones;
  for (int pass = 0; pass < 25; ++pass) {
    const MatrixXd as = ea.asDiagonal() * st.a * dcol.asDiagonal();
    const MatrixXd gs = eg.asDiagonal() * st.g * dcol.asDiagonal();
    VectorXd colmax = VectorXd::Zero(n);
    if (as.rows() > 0) colmax = as.cwiseAbs().colwise().maxCoeff().transpose();
    if (gs.rows() > 0) colmax = colmax.cwiseMax(gs.cwiseAbs().colwise().maxCoeff().transpose());
    double spread = 0.0;
    auto factor = [&spread](double v) {
      if (!(v > 0.0)) return 1.0;
      spread = std::max(spread, std::abs(std::log(v)));
      return 1.0 / std::sqrt(v);
    };
    for (Eigen::Index j = 0; j < n; ++j) dcol(j) *= factor(colmax(j));
    for (Eigen::Index i = 0; i < as.rows(); ++i) ea(i) *= factor(as.row(i).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < K.l; ++i) eg(i) *= factor(gs.row(i).cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < K.q.size(); ++k) {
      const double v = gs.middleRows(K.qoff[k], K.q[k]).cwiseAbs().maxCoeff();
      eg.segment(K.qoff[k], K.q[k]) *= factor(v);
    }
    if (spread < 1e-3) break;
  }
}

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Shift v into the cone interior when needed (initial point).
void push_interior(const Cones& K, VectorXd& v) {
  double alpha = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < K.l; ++i) alpha = std::max(alpha, -v(i));
  for (std::size_t k = 0; k < K.q.size(); ++k) {
    alpha = std::max(alpha, v.segment(K.qoff[k] + 1, K.q[k] - 1).norm() - v(K.qoff[k]));
  }
  if (alpha >= -1e-8 * std::max(1.0, v.norm())) v += (1.0 + alpha) * K.identity();
}

}  // namespace

SolverResult solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  settings.validate();
  const auto t_start = std::chrono::steady_clock::now();
  SolverResult res;
  const Standard st = to_standard(program);
  const Cones& K = st.cones;
  const auto n = st.a.cols();
  const auto p = st.a.rows();
  const auto m = st.g.rows();

  VectorXd dcol, ea, eg;
  if (settings.scaling == Scaling::Ruiz) {
    ruiz(st, dcol, ea, eg);
  } else {
    dcol = VectorXd::Ones(n);
    ea = VectorXd::Ones(p);
    eg = VectorXd::Ones(m);
  }
  const MatrixXd a = ea.asDiagonal() * st.a * dcol.asDiagonal();
  const MatrixXd g = eg.asDiagonal() * st.g * dcol.asDiagonal();
  const VectorXd b = ea.cwiseProduct(st.b);
  const VectorXd h = eg.cwiseProduct(st.h);
  const VectorXd c = dcol.cwiseProduct(st.c);

  const double bh_norm = std::max(inf_norm(st.b), inf_norm(st.h));
  const double c_norm = inf_norm(st.c);

  auto finish = [&](SolverStatus status, const VectorXd& x, const VectorXd& y, const VectorXd& z, double scale) {
    res.status = status;
    const VectorXd xu = dcol.cwiseProduct(x) / scale;
    const VectorXd yu = ea.cwiseProduct(y) / scale;
    const VectorXd zu = eg.cwiseProduct(z) / scale;
    res.primal.assign(xu.data(), xu.data() + n);
    res.objective = st.c.dot(xu) + st.c0;
    res.row_duals.assign(program.rows.size(), 0.0);
    std::size_t ie = 0, il = 0;
    for (std::size_t r = 0; r < program.rows.size(); ++r) {
      res.row_duals[r] = st.row_kind[r] == 0 ? yu(st.eq_rows[ie++]) : zu(st.le_rows[il++]);
    }
    res.cone_duals.clear();
    for (std::size_t k = 0; k < K.q.size(); ++k) {
      const VectorXd blk = zu.segment(K.qoff[k], K.q[k]);
      res.cone_duals.emplace_back(blk.data(), blk.data() + blk.size());
    }
    res.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
  };

  // Initial point.
  NtScaling sc;
  sc.d = VectorXd::Ones(K.l);
  for (auto qk : K.q) {
    sc.w.push_back(MatrixXd::Identity(qk, qk));
    sc.winv.push_back(MatrixXd::Identity(qk, qk));
  }
  KktSolver kkt(a, g, K);
  VectorXd x, y, z, s;
  {
    kkt.factor(sc);
    VectorXd xx, yy, zz;
    if (!kkt.solve(VectorXd::Zero(n), b, h, x, y, zz)) {
      res.message = "initial factorization failed";
      return finish(SolverStatus::NumericalError, VectorXd::Zero(n), VectorXd::Zero(p), VectorXd::Zero(m), 1.0);
    }
    s = -zz;
    if (!kkt.solve(-c, VectorXd::Zero(p), VectorXd::Zero(m), xx, yy, z)) {
      res.message = "initial factorization failed";
      return finish(SolverStatus::NumericalError, VectorXd::Zero(n), VectorXd::Zero(p), VectorXd::Zero(m), 1.0);
    }
    y = yy;
    push_interior(K, s);
    push_interior(K, z);
  }
  double tau = 1.0, kappa = 1.0;
  const VectorXd e = K.identity();

  // Best iterate seen so far. Close to the solution the KKT solves lose
  // accuracy; when that ends the run, an iterate within kInexact times the
  // tolerances is returned as optimal at reduced accuracy.
  constexpr double kInexact = 10.0;
  struct Best {
    double score = std::numeric_limits<double>::infinity();
    VectorXd x, y, z;
    double tau = 1.0, pres = 0.0, dres = 0.0, gap = 0.0, gap_scale = 1.0;
  } best;
  auto bail = [&](SolverStatus status, const VectorXd& x, const VectorXd& y, const VectorXd& z, double scale) {
    if (std::isfinite(best.score) && best.pres <= kInexact * settings.feas_tol &&
        best.dres <= kInexact * settings.feas_tol && best.gap <= kInexact * settings.gap_tol * best.gap_scale) {
      res.message += "; returned best iterate at reduced accuracy";
      res.primal_residual = best.pres;
      res.dual_residual = best.dres;
      res.gap = best.gap;
      return finish(SolverStatus::Optimal, best.x, best.y, best.z, best.tau);
    }
    return finish(status, x, y, z, scale);
  };
  const double degree = K.degree();

  for (int iter = 0;; ++iter) {
    res.iterations = iter;
    // Residuals of the homogeneous embedding (scaled space).
    const VectorXd rx = a.transpose() * y + g.transpose() * z + c * tau;
    const VectorXd ry = b * tau - a * x;
    const VectorXd rz = s + g * x - h * tau;
    const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1.0);

    // Convergence checks on the unscaled iterate.
    const VectorXd xu = dcol.cwiseProduct(x), yu = ea.cwiseProduct(y), zu = eg.cwiseProduct(z);
    const VectorXd su = s.cwiseQuotient(eg);
    const double pres =
        std::max(inf_norm(st.a * xu - st.b * tau), inf_norm(st.g * xu + su - st.h * tau)) / tau / (1.0 + bh_norm);
    const double dres = inf_norm(st.a.transpose() * yu + st.g.transpose() * zu + st.c * tau) / tau / (1.0 + c_norm);
    const double pcost = st.c.dot(xu) / tau;
    const double gap = su.dot(zu) / (tau * tau);
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = gap;
    const double gap_scale = std::max(1.0, std::abs(pcost));
    if (pres <= settings.feas_tol && dres <= settings.feas_tol && gap <= settings.gap_tol * gap_scale) {
      return finish(SolverStatus::Optimal, x, y, z, tau);
    }
    const double score = std::max({pres / settings.feas_tol, dres / settings.feas_tol,
                                   gap / (settings.gap_tol * gap_scale)});
    if (std::isfinite(score) && score < best.score) best = {score, x, y, z, tau, pres, dres, gap, gap_scale};
    if (kappa > tau) {
      const double btyhz = st.b.dot(yu) + st.h.dot(zu);
      if (btyhz < 0.0) {
        const double cert = inf_norm(st.a.transpose() * yu + st.g.transpose() * zu) / (-btyhz);
        if (cert <= settings.feas_tol) {
          res.message = "primal infeasibility certificate";
          return finish(SolverStatus::Infeasible, x, y, z, -btyhz);
        }
      }
      const double ctx = st.c.dot(xu);
      if (ctx < 0.0) {
        const double cert = std::max(inf_norm(st.a * xu), inf_norm(st.g * xu + su)) / (-ctx);
        if (cert <= settings.feas_tol) {
          res.message = "dual infeasibility certificate";
          return finish(SolverStatus::Unbounded, x, y, z, -ctx);
        }
      }
    }
    if (iter >= settings.max_iter) {
      res.message = "iteration limit";
      return bail(SolverStatus::MaxIter, x, y, z, tau);
    }

    if (!sc.compute(K, s, z) || !kkt.factor(sc)) {
      res.message = "scaling or factorization failed";
      return bail(SolverStatus::NumericalError, x, y, z, tau);
    }
    const VectorXd& lam = sc.lambda;

    VectorXd x1, y1, z1;
    if (!kkt.solve(-c, b, h, x1, y1, z1)) {
      res.message = "linear solve failed";
      return bail(SolverStatus::NumericalError, x, y, z, tau);
    }
    const double denom_base = kappa / tau - (c.dot(x1) + b.dot(y1) + h.dot(z1));

    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const VectorXd& rhs_c, double rhs_k, Dir& d) {
      const VectorXd q = jordan_solve(K, lam, rhs_c);
      VectorXd x2, y2, z2;
      if (!kkt.solve(-eta * rx, eta * ry, -eta * rz - sc.apply(K, q, false), x2, y2, z2)) return false;
      d.dtau = (eta * rt + rhs_k / tau + c.dot(x2) + b.dot(y2) + h.dot(z2)) / denom_base;
      d.dx = x2 + d.dtau * x1;
      d.dy = y2 + d.dtau * y1;
      d.dz = z2 + d.dtau * z1;
      d.ds = sc.apply(K, q - sc.apply(K, d.dz, false), false);
      d.dkappa = (rhs_k - kappa * d.dtau) / tau;
      return std::isfinite(d.dtau) && d.dx.allFinite() && d.ds.allFinite();
    };
    auto step_to_boundary = [&](const Dir& d) {
      double amax = std::min(max_step(K, lam, sc.apply(K, d.ds, true)), max_step(K, lam, sc.apply(K, d.dz, false)));
      if (d.dtau < 0.0) amax = std::min(amax, -tau / d.dtau);
      if (d.dkappa < 0.0) amax = std::min(amax, -kappa / d.dkappa);
      return amax;
    };

    Dir aff;
    if (!direction(1.0, -jordan(K, lam, lam), -tau * kappa, aff)) {
      res.message = "predictor failed";
      return bail(SolverStatus::NumericalError, x, y, z, tau);
    }
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    const VectorXd corr = jordan(K, sc.apply(K, aff.ds, true), sc.apply(K, aff.dz, false));
    Dir dir;
    if (!direction(1.0 - sigma, -jordan(K, lam, lam) + sigma * mu * e - corr,
                   -tau * kappa + sigma * mu - aff.dtau * aff.dkappa, dir)) {
      res.message = "corrector failed";
      return bail(SolverStatus::NumericalError, x, y, z, tau);
    }
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(dir));
    if (!(alpha > 1e-12)) {
      res.message = "step length collapsed";
      return bail(SolverStatus::NumericalError, x, y, z, tau);
    }
    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }
}

}  // namespace druopf
