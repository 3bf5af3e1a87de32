#include "walkplan/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace walkplan {

int compute_steps(double from_x, double from_y, double to_x, double to_y,
                  const MpcConfig& config) {
  const double dist = std::hypot(to_x - from_x, to_y - from_y);
  const int n = static_cast<int>(std::ceil(dist / config.l_nominal));
  return std::clamp(n, config.n_min, config.n_max);
}

Eigen::VectorXd default_initial_guess(const MpcProblem& p,
                                      const MpcConfig& c) {
  const StepMatrices sm = step_matrices(p.params);
  const double a12 = sm.A(0, 1), a22 = sm.A(1, 1);
  const double b1 = sm.B(0), b2 = sm.B(1);
  const int N = p.horizon;
  Eigen::VectorXd u(2 * N);
  double sx = p.initial_state.x, sy = p.initial_state.y;
  double vx = p.initial_state.xdot, vy = p.initial_state.ydot;
  const double dx0 = p.goal_x - sx, dy0 = p.goal_y - sy;
  const double dist = std::hypot(dx0, dy0);
  const double ux = dist > 1e-9 ? dx0 / dist : 0.0;
  const double uy = dist > 1e-9 ? dy0 / dist : 1.0;
  for (int k = 0; k < N; ++k) {
    const double along = std::min(dist, c.l_nominal * (k + 1));
    const double tx = p.initial_state.x + ux * along;
    const double ty = p.initial_state.y + uy * along;
    // Invert the position row so the CoM lands on the segment, then shift
    // laterally to the step's band midpoint.
    double px = (tx - sx - a12 * vx) / b1;
    double py = (ty - sy - a12 * vy) / b1;
    const double mid =
        0.5 * (p.bounds_sequence[k].lb_yb + p.bounds_sequence[k].ub_yb);
    px += -uy * mid;
    py += ux * mid;
    u(2 * k) = px;
    u(2 * k + 1) = py;
    const double nx = sx + a12 * vx + b1 * px;
    vx = a22 * vx + b2 * px;
    sx = nx;
    const double ny = sy + a12 * vy + b1 * py;
    vy = a22 * vy + b2 * py;
    sy = ny;
  }
  return u;
}

namespace {

constexpr double kSmoothEps = 1e-9;
constexpr int kMaxOuter = 40;
constexpr int kMaxLineSearch = 30;

class AugLagSolver {
 public:
  AugLagSolver(const MpcProblem& p, const MpcConfig& c)
      : p_(p),
        c_(c),
        n_(2 * p.horizon),
        m_(p.horizon * (6 + static_cast<int>(p.barriers.size()))) {
    if (p.horizon < 1) throw std::invalid_argument("solve_mpc: horizon < 1");
    if (static_cast<int>(p.bounds_sequence.size()) != p.horizon) {
      throw std::invalid_argument("solve_mpc: bounds_sequence length");
    }
    const StepMatrices sm = step_matrices(p.params);
    a12_ = sm.A(0, 1);
    a22_ = sm.A(1, 1);
    b1_ = sm.B(0);
    b2_ = sm.B(1);
    const int N = p.horizon;
    x_.resize(N + 1);
    xd_.resize(N + 1);
    y_.resize(N + 1);
    yd_.resize(N + 1);
    h0_.resize(p.barriers.size());
    for (std::size_t j = 0; j < p.barriers.size(); ++j) {
      h0_[j] =
          barrier_value(p.barriers[j], p.initial_state.x, p.initial_state.y);
    }
    prev_h_.resize(p.barriers.size());
    pos_sens_.resize(N);
    vel_sens_.resize(N);
    Eigen::Matrix2d ak = Eigen::Matrix2d::Identity();
    for (int k = N - 1; k >= 0; --k) {
      const Eigen::Vector2d s = ak * sm.B;
      pos_sens_[k] = s(0);
      vel_sens_[k] = s(1);
      ak = sm.A * ak;
    }
  }

  MpcSolution run(const Eigen::VectorXd* guess, const MpcTraceSink& trace) {
    Eigen::VectorXd u =
        guess != nullptr ? *guess : default_initial_guess(p_, c_);
    if (u.size() != n_) {
      throw std::invalid_argument("solve_mpc: initial guess size mismatch");
    }

    Eigen::VectorXd lam = Eigen::VectorXd::Zero(m_);
    Eigen::VectorXd g(m_);
    double mu = 10.0;
    double omega = 1e-2;
    double prev_viol = std::numeric_limits<double>::infinity();
    // One stubborn round must not starve the rest: later rounds get a larger
    // penalty instead of this round's leftover budget.
    const int round_cap =
        std::min(c_.max_iterations, std::max(25, c_.max_iterations / 6));

    for (int outer = 0; outer < kMaxOuter; ++outer) {
      const bool inner_converged = inner_minimize(u, lam, mu, omega, round_cap, g);
      const double viol = violation(g);
      if (trace) {
        rollout(u);
        trace(MpcTraceRecord{outer, objective(), viol});
      }
      if (viol <= c_.feasibility_tol && inner_converged && omega <= 1e-6 + 1e-12) {
        break;
      }
      if (iters_used_ >= c_.max_iterations || fun_evals_ >= c_.max_fun_evals) {
        break;
      }
      for (int i = 0; i < m_; ++i) {
        lam(i) = std::max(0.0, lam(i) + mu * g(i));
      }
      if (viol > 0.25 * prev_viol && viol > c_.feasibility_tol) {
        mu = std::min(mu * 8.0, 1e8);
      }
      prev_viol = viol;
      omega = std::max(0.1 * omega, 1e-6);
    }

    MpcSolution sol;
    rollout(u);
    constraints(u, g);
    sol.states.resize(p_.horizon);
    sol.inputs.resize(p_.horizon);
    for (int k = 0; k < p_.horizon; ++k) {
      sol.states[k] = LipState{x_[k + 1], xd_[k + 1], y_[k + 1], yd_[k + 1]};
      sol.inputs[k] = FootPlacement{u(2 * k), u(2 * k + 1)};
    }
    sol.terminal_cost = objective();
    sol.max_violation = violation(g);
    sol.is_feasible = sol.max_violation <= c_.feasibility_tol;
    return sol;
  }

 private:
  void rollout(const Eigen::VectorXd& u) {
    x_[0] = p_.initial_state.x;
    xd_[0] = p_.initial_state.xdot;
    y_[0] = p_.initial_state.y;
    yd_[0] = p_.initial_state.ydot;
    for (int k = 0; k < p_.horizon; ++k) {
      const double px = u(2 * k), py = u(2 * k + 1);
      x_[k + 1] = x_[k] + a12_ * xd_[k] + b1_ * px;
      xd_[k + 1] = a22_ * xd_[k] + b2_ * px;
      y_[k + 1] = y_[k] + a12_ * yd_[k] + b1_ * py;
      yd_[k + 1] = a22_ * yd_[k] + b2_ * py;
    }
  }

  double objective() const {
    const int N = p_.horizon;
    const double dx = x_[N] - p_.goal_x, dy = y_[N] - p_.goal_y;
    return c_.w1 * (xd_[N] * xd_[N] + yd_[N] * yd_[N]) +
           c_.w2 * (dx * dx + dy * dy);
  }

  // Constraint stack at the current rollout; g_i <= 0 is satisfied.
  void constraints(const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    const int nobs = static_cast<int>(p_.barriers.size());
    prev_h_ = h0_;
    int idx = 0;
    for (int k = 0; k < p_.horizon; ++k) {
      const ReachableBounds& rb = p_.bounds_sequence[k];
      const double ddx = x_[k + 1] - x_[k], ddy = y_[k + 1] - y_[k];
      const double norm =
          std::sqrt(ddx * ddx + ddy * ddy + kSmoothEps * kSmoothEps);
      const double sth = ddx / norm, cth = ddy / norm;
      const double rx = u(2 * k), ry = u(2 * k + 1);
      const double lon = sth * rx + cth * ry;
      const double lat = -cth * rx + sth * ry;
      g(idx++) = lon - rb.ub_xb;
      g(idx++) = rb.lb_xb - lon;
      g(idx++) = lat - rb.ub_yb;
      g(idx++) = rb.lb_yb - lat;
      const double len2 = ddx * ddx + ddy * ddy;
      g(idx++) = len2 - p_.limits.l_max * p_.limits.l_max;
      g(idx++) = p_.limits.l_min * p_.limits.l_min - len2;
      for (int j = 0; j < nobs; ++j) {
        const double h1 = barrier_value(p_.barriers[j], x_[k + 1], y_[k + 1]);
        g(idx++) = (1.0 - p_.gamma) * prev_h_[j] - h1;
        prev_h_[j] = h1;
      }
    }
  }

  static double violation(const Eigen::VectorXd& g) {
    double v = 0.0;
    for (int i = 0; i < g.size(); ++i) v = std::max(v, g(i));
    return std::max(v, 0.0);
  }

  double merit(const Eigen::VectorXd& u, const Eigen::VectorXd& lam, double mu,
               Eigen::VectorXd& g) {
    rollout(u);
    constraints(u, g);
    ++fun_evals_;
    double pen = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double t = std::max(0.0, lam(i) + mu * g(i));
      pen += t * t - lam(i) * lam(i);
    }
    return objective() + pen / (2.0 * mu);
  }

  void merit_grad(const Eigen::VectorXd& u, const Eigen::VectorXd& lam,
                  double mu, const Eigen::VectorXd& g_base,
                  Eigen::VectorXd& grad) {
    rollout(u);
    const int N = p_.horizon;
    const double gx = 2.0 * c_.w2 * (x_[N] - p_.goal_x);
    const double gy = 2.0 * c_.w2 * (y_[N] - p_.goal_y);
    const double gvx = 2.0 * c_.w1 * xd_[N];
    const double gvy = 2.0 * c_.w1 * yd_[N];
    for (int k = 0; k < N; ++k) {
      grad(2 * k) = gx * pos_sens_[k] + gvx * vel_sens_[k];
      grad(2 * k + 1) = gy * pos_sens_[k] + gvy * vel_sens_[k];
    }
    sigma_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      sigma_(i) = std::max(0.0, lam(i) + mu * g_base(i));
    }
    if (g_probe_.size() != m_) g_probe_.resize(m_);
    if (g_probe_lo_.size() != m_) g_probe_lo_.resize(m_);
    Eigen::VectorXd up = u;
    for (int d = 0; d < n_; ++d) {
      up(d) = u(d) + c_.fd_step;
      rollout(up);
      constraints(up, g_probe_);
      up(d) = u(d) - c_.fd_step;
      rollout(up);
      constraints(up, g_probe_lo_);
      up(d) = u(d);
      double acc = 0.0;
      for (int i = 0; i < m_; ++i) {
        acc += sigma_(i) * (g_probe_(i) - g_probe_lo_(i));
      }
      grad(d) += acc / (2.0 * c_.fd_step);
    }
  }

  // Damped BFGS with Armijo backtracking on the merit; returns true when the
  // gradient dropped below omega. `g` carries the constraints at the final u.
  bool inner_minimize(Eigen::VectorXd& u, const Eigen::VectorXd& lam,
                      double mu, double omega, int round_cap,
                      Eigen::VectorXd& g) {
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n_, n_);
    double lval = merit(u, lam, mu, g);
    if (!std::isfinite(lval) || !u.allFinite()) {
      throw NonFiniteIterate("solve_mpc: non-finite start");
    }
    Eigen::VectorXd grad(n_), grad_new(n_), d(n_), u_try(n_), g_try(m_);
    merit_grad(u, lam, mu, g, grad);

    int round_iters = 0;
    while (round_iters < round_cap && iters_used_ < c_.max_iterations &&
           fun_evals_ < c_.max_fun_evals) {
      if (grad.lpNorm<Eigen::Infinity>() <= omega) return true;
      ++iters_used_;
      ++round_iters;
      d.noalias() = -(hinv * grad);
      double gtd = grad.dot(d);
      if (!(gtd < 0.0)) {
        hinv.setIdentity();
        d = -grad;
        gtd = grad.dot(d);
        if (gtd == 0.0) return true;
      }
      // Cap the first trial displacement: after a multiplier update the raw
      // gradient step can be meters long and would waste the backtracking
      // budget.
      const double dnorm = d.norm();
      double t = dnorm > 0.25 ? 0.25 / dnorm : 1.0;
      double lnew = 0.0;
      bool accepted = false;
      for (int ls = 0; ls < kMaxLineSearch && fun_evals_ < c_.max_fun_evals;
           ++ls) {
        u_try = u + t * d;
        lnew = merit(u_try, lam, mu, g_try);
        if (std::isfinite(lnew) && lnew <= lval + 1e-4 * t * gtd) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        // Restore the constraint stack of the accepted iterate.
        rollout(u);
        constraints(u, g);
        return grad.lpNorm<Eigen::Infinity>() <= omega;
      }
      if (!u_try.allFinite()) {
        throw NonFiniteIterate("solve_mpc: non-finite iterate");
      }
      merit_grad(u_try, lam, mu, g_try, grad_new);
      const Eigen::VectorXd s = u_try - u;
      const Eigen::VectorXd yv = grad_new - grad;
      const double sy = s.dot(yv);
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::VectorXd hy = hinv * yv;
        const double yhy = yv.dot(hy);
        hinv.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
        hinv.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
      }
      u = u_try;
      lval = lnew;
      grad.swap(grad_new);
      g = g_try;
    }
    return false;
  }

  const MpcProblem& p_;
  const MpcConfig& c_;
  int n_;
  int m_;
  double a12_ = 0.0, a22_ = 0.0, b1_ = 0.0, b2_ = 0.0;
  std::vector<double> x_, xd_, y_, yd_;
  std::vector<double> h0_, prev_h_;
  std::vector<double> pos_sens_, vel_sens_;
  Eigen::VectorXd sigma_, g_probe_, g_probe_lo_;
  int iters_used_ = 0;
  long fun_evals_ = 0;
};

}  // namespace

MpcSolution solve_mpc(const MpcProblem& problem, const MpcConfig& config,
                      const Eigen::VectorXd* initial_guess,
                      const MpcTraceSink& trace) {
  AugLagSolver solver(problem, config);
  return solver.run(initial_guess, trace);
}

ExpandResult dcbf_mpc_expand(const LipState& from, StanceSide stance,
                             double target_x, double target_y,
                             const BarrierSpec& barriers,
                             const WalkerModel& walker,
                             const MpcConfig& config) {
  MpcProblem problem;
  problem.initial_state = from;
  problem.goal_x = target_x;
  problem.goal_y = target_y;
  problem.horizon = compute_steps(from.x, from.y, target_x, target_y, config);
  StanceSide s = stance;
  problem.bounds_sequence.reserve(problem.horizon);
  for (int k = 0; k < problem.horizon; ++k) {
    problem.bounds_sequence.push_back(bounds_for(walker, s));
    s = other_side(s);
  }
  problem.limits = walker.limits;
  problem.barriers = active_obstacles(barriers, from.x, from.y);
  problem.gamma = config.gamma;
  problem.params = walker.params;

  MpcSolution sol = solve_mpc(problem, config);
  ExpandResult r;
  r.state = sol.states.front();
  r.input = sol.inputs.front();
  r.stance = other_side(stance);
  r.is_feasible = sol.is_feasible;
  r.horizon = problem.horizon;
  r.solution = std::move(sol);
  return r;
}

}  // namespace walkplan
