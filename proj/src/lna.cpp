#include "srn/lna.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace srn {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

LnaState LnaState::make(Eigen::VectorXd mean, Eigen::MatrixXd cov, double time) {
  const auto J = mean.size();
  if (cov.rows() != J || cov.cols() != J)
    throw std::invalid_argument("covariance shape does not match state dimension");
  LnaState st;
  st.mean = std::move(mean);
  st.pert_mean = Eigen::VectorXd::Zero(J);
  st.cov = std::move(cov);
  st.time = time;
  return st;
}

Sensitivities Sensitivities::zero(int state_dim, int param_dim) {
  Sensitivities s;
  s.state_dim = state_dim;
  s.d_mean.setZero(state_dim, param_dim);
  s.d_cov.setZero(state_dim, state_dim * param_dim);
  return s;
}

int SolverConfig::steps_for(double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("interval length must be positive");
  if (dz_target > 0.0)
    return std::max(1, static_cast<int>(std::ceil(dt / dz_target - 1e-9)));
  return std::max(1, substeps);
}

KalmanUpdateResult kalman_update(LnaState& state, Sensitivities* sens,
                                 const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& G,
                                 const Eigen::VectorXd& noise_diag,
                                 const std::vector<std::vector<int>>& noise_positions_per_param,
                                 double jitter, Eigen::VectorXd* grad_log_pred,
                                 bool apply_posterior) {
  KalmanUpdateResult res;
  const auto d = y.size();
  if (G.rows() != d || G.cols() != state.mean.size() || noise_diag.size() != d)
    throw std::invalid_argument("observation operator shape mismatch");
  if (grad_log_pred && !sens)
    throw std::invalid_argument("gradient of the predictive density needs sensitivities");

  const Eigen::VectorXd m = state.mean + state.pert_mean;
  const Eigen::VectorXd e = y - G * m;
  const Eigen::MatrixXd PGt = state.cov * G.transpose();
  Eigen::MatrixXd S = G * PGt;
  S.diagonal() += noise_diag;

  // Symmetric factorization with escalating diagonal inflation.
  Eigen::LLT<Eigen::MatrixXd> llt;
  const Eigen::VectorXd base_diag = S.diagonal();
  bool factored = false;
  for (int attempt = -1; attempt <= 5; ++attempt) {
    if (attempt >= 0)
      S.diagonal() = base_diag * (1.0 + jitter * std::pow(2.0, attempt));
    llt.compute(S);
    if (llt.info() == Eigen::Success) {
      factored = true;
      break;
    }
  }
  if (!factored) return res;  // degenerate innovation covariance

  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  const Eigen::VectorXd sol_e = llt.solve(e);
  res.log_pred = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet + e.dot(sol_e));
  res.ok = true;

  // W = S^{-1} G cov; shared by the posterior covariance and its derivative.
  Eigen::MatrixXd W;
  if (apply_posterior || sens) W = llt.solve(PGt.transpose());

  if (sens) {
    const int L = sens->param_dim();
    if (noise_positions_per_param.size() != static_cast<std::size_t>(L))
      throw std::invalid_argument("noise-position table does not match parameter count");
    if (grad_log_pred) grad_log_pred->setZero(L);
    Eigen::MatrixXd dS(d, d), dPGt, dW, dbeta;
    Eigen::VectorXd dm, dsol_e, dalpha;
    for (int l = 0; l < L; ++l) {
      const auto dcov = sens->cov_slice(l);
      dm = sens->d_mean.col(l);
      dPGt = dcov * G.transpose();
      dS = G * dPGt;
      for (int pos : noise_positions_per_param[l]) dS(pos, pos) += 1.0;

      if (grad_log_pred) {
        const double tr = llt.solve(dS).trace();
        (*grad_log_pred)(l) = -0.5 * tr + dm.dot(G.transpose() * sol_e) +
                              0.5 * sol_e.dot(dS * sol_e);
      }
      if (apply_posterior) {
        dsol_e = -llt.solve(G * dm + dS * sol_e);
        dalpha = dm + dPGt * sol_e + PGt * dsol_e;
        dW = llt.solve(dPGt.transpose() - dS * W);
        dbeta = dcov - dPGt * W - PGt * dW;
        sens->d_mean.col(l) = dalpha;
        sens->cov_slice(l) = 0.5 * (dbeta + dbeta.transpose());
      }
    }
  }

  if (apply_posterior) {
    state.mean = m + PGt * sol_e;
    state.pert_mean.setZero();
    Eigen::MatrixXd beta = state.cov - PGt * W;
    state.cov = 0.5 * (beta + beta.transpose());
  }
  return res;
}

LnaPropagator::LnaPropagator(const ReactionNetwork& net, int param_dim)
    : net_(&net),
      J_(net.species_count()),
      K_(net.reaction_count()),
      N_(net.param_count()),
      L_(param_dim),
      rates_(net.make_rate_eval()) {
  if (L_ < N_) throw std::invalid_argument("parameter dimension below kinetic-constant count");
  const Eigen::MatrixXd& C = net.stoichiometry();
  outer_.reserve(K_);
  for (int k = 0; k < K_; ++k) outer_.push_back(C.col(k) * C.col(k).transpose());
  second_order_.resize(K_);
  param_of_.resize(K_);
  for (int k = 0; k < K_; ++k) {
    second_order_[k] = net.reactions()[k].reactants.sum() >= 2 ? 1 : 0;
    param_of_[k] = net.reactions()[k].rate_param;
  }
  mu_.setZero(J_);
  gcol_.setZero(J_);
  tcol_.setZero(J_);
  A_.setZero(J_, J_);
  D_.setZero(J_, J_);
  T1_.setZero(J_, J_);
  sym_.setZero(J_, J_);
  U_.setZero(J_, J_);
  DVe_.setZero(K_, L_);
  T1all_.setZero(J_, J_ * L_);
  MK_.assign(K_, Eigen::MatrixXd::Zero(J_, L_));
}

void LnaPropagator::predict(LnaState& state, Sensitivities* sens,
                            const Eigen::VectorXd& theta, double dt,
                            int substeps) {
  if (!(dt > 0.0)) throw std::invalid_argument("interval length must be positive");
  if (substeps < 1) throw std::invalid_argument("need at least one substep");
  if (sens && (sens->state_dim != J_ || sens->param_dim() != L_))
    throw std::invalid_argument("sensitivity block sizes do not match propagator");
  const double dz = dt / substeps;
  const Eigen::MatrixXd& C = net_->stoichiometry();

  for (int step = 0; step < substeps; ++step) {
    net_->eval_rates(state.mean, theta, sens ? 2 : 1, rates_);
    A_.noalias() = C * rates_.jac_state;
    mu_.noalias() = C * rates_.value;
    D_.setZero();
    for (int k = 0; k < K_; ++k) D_.noalias() += rates_.value(k) * outer_[k];

    if (sens) propagate_sensitivities(state, *sens, dz);

    T1_.noalias() = A_ * state.cov;
    state.cov += dz * (T1_ + T1_.transpose() + D_);
    sym_ = state.cov.transpose();
    state.cov = 0.5 * (state.cov + sym_);
    state.mean += dz * mu_;
  }
  state.time += dt;
}

// Derivative of one Euler substep, applied to every tracked parameter: the
// rate Jacobian and diffusion derivatives chain through both the explicit
// kinetic constants and the accumulated mean sensitivity. Written against
// raw column-major storage; the dimensions here are tiny and this runs
// inside the innermost filter loop.
void LnaPropagator::propagate_sensitivities(const LnaState& state,
                                            Sensitivities& sens, double dz) {
  const int J = J_, K = K_, L = L_;
  const double* A = A_.data();               // J x J
  const double* cov = state.cov.data();      // J x J, symmetric
  const double* jac = rates_.jac_state.data();            // K x J
  const double* jacdp = rates_.jac_state_dparam.data();   // K x J
  double* dmean = sens.d_mean.data();        // J x L
  double* dcov = sens.d_cov.data();          // J x (J*L)

  // total rate derivative per parameter, explicit part included
  double* DVe = DVe_.data();  // K x L
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      double acc = param_of_[k] == l ? rates_.dparam(k) : 0.0;
      for (int j = 0; j < J; ++j) acc += jac[k + j * K] * dmean[j + l * J];
      DVe[k + l * K] = acc;
    }

  // rate Hessians applied to the mean sensitivities (second-order reactions)
  for (int k = 0; k < K; ++k) {
    if (!second_order_[k]) continue;
    const double* H = rates_.hess_state[k].data();  // J x J
    double* MK = MK_[k].data();                     // J x L
    for (int l = 0; l < L; ++l)
      for (int j = 0; j < J; ++j) {
        double acc = 0.0;
        for (int i = 0; i < J; ++i) acc += H[j + i * J] * dmean[i + l * J];
        MK[j + l * J] = acc;
      }
  }

  // T1 = A * dcov, batched over all parameter slices (column-wise so the
  // inner loop runs down contiguous storage)
  double* T1 = T1all_.data();  // J x (J*L)
  const int cols = J * L;
  for (int c = 0; c < cols; ++c) {
    double* out = T1 + c * J;
    for (int i = 0; i < J; ++i) out[i] = 0.0;
    for (int m = 0; m < J; ++m) {
      const double x = dcov[m + c * J];
      const double* Acol = A + m * J;
      for (int i = 0; i < J; ++i) out[i] += Acol[i] * x;
    }
  }

  const Eigen::MatrixXd& C = net_->stoichiometry();
  double* U = U_.data();
  double* g = gcol_.data();
  double* t = tcol_.data();
  for (int l = 0; l < L; ++l) {
    bool has_rank_one = false;
    for (int k = 0; k < K; ++k) {
      const bool own_param = l < N_ && param_of_[k] == l;
      if (!second_order_[k] && !own_param) continue;
      for (int j = 0; j < J; ++j) {
        double v = second_order_[k] ? MK_[k].data()[j + l * J] : 0.0;
        if (own_param) v += jacdp[k + j * K];
        g[j] = v;
      }
      for (int j = 0; j < J; ++j) {
        double acc = 0.0;
        for (int m = 0; m < J; ++m) acc += cov[j + m * J] * g[m];
        t[j] = acc;
      }
      const double* ck = C.data() + k * J;
      if (!has_rank_one) {
        for (int j = 0; j < J; ++j)
          for (int i = 0; i < J; ++i) U[i + j * J] = ck[i] * t[j];
        has_rank_one = true;
      } else {
        for (int j = 0; j < J; ++j)
          for (int i = 0; i < J; ++i) U[i + j * J] += ck[i] * t[j];
      }
    }

    // slice update, upper triangle mirrored for exact symmetry
    double* dc = dcov + l * J * J;
    const double* T1l = T1 + l * J * J;
    for (int j = 0; j < J; ++j)
      for (int i = 0; i <= j; ++i) {
        double dd = 0.0;
        for (int k = 0; k < K; ++k) dd += DVe[k + l * K] * outer_[k].data()[i + j * J];
        double inc = T1l[i + j * J] + T1l[j + i * J] + dd;
        if (has_rank_one) inc += U[i + j * J] + U[j + i * J];
        const double v = dc[i + j * J] + dz * inc;
        dc[i + j * J] = v;
        dc[j + i * J] = v;
      }
  }

  // mean sensitivities advance with the total drift derivative
  const double* Cd = C.data();
  for (int l = 0; l < L; ++l)
    for (int i = 0; i < J; ++i) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += Cd[i + k * J] * DVe[k + l * K];
      dmean[i + l * J] += dz * acc;
    }
}

void lna_predict(const ReactionNetwork& net, LnaState& state, Sensitivities* sens,
                 const Eigen::VectorXd& theta, double dt, int substeps) {
  const int L = sens ? sens->param_dim() : net.param_count();
  LnaPropagator prop(net, L);
  prop.predict(state, sens, theta, dt, substeps);
}

LnaFilter::LnaFilter(const ReactionNetwork& net, const ObservationModel& model)
    : net_(&net),
      model_(model),
      propagator_(net, net.param_count() +
                           static_cast<int>(model.observed_union().size())),
      J_(net.species_count()),
      N_(net.param_count()),
      jy_(model.observed_union()) {
  model_.validate(J_);
  L_ = N_ + static_cast<int>(jy_.size());
  const int H1 = model_.time_count();
  G_.reserve(H1);
  noise_positions_.resize(H1);
  for (int h = 0; h < H1; ++h) {
    G_.push_back(model_.selection_matrix(h, J_));
    noise_positions_[h].assign(L_, {});
    const auto& set = model_.observed[h];
    const int dh = static_cast<int>(set.size());
    for (int m = 0; m < model_.batch; ++m)
      for (int i = 0; i < dh; ++i) {
        const auto it = std::find(jy_.begin(), jy_.end(), set[i]);
        const int l = N_ + static_cast<int>(it - jy_.begin());
        noise_positions_[h][l].push_back(m * dh + i);
      }
  }
}

FilterOutput LnaFilter::log_likelihood(const Dataset& ds,
                                       const ParameterVector& params,
                                       const LnaState& init,
                                       const SolverConfig& cfg,
                                       LikelihoodVariant variant, bool want_grad,
                                       bool want_diagnostics) {
  if (!(ds.model == model_))
    throw std::invalid_argument("dataset observation model does not match filter");
  ds.validate();
  if (params.theta.size() != N_ ||
      params.sigma.size() != static_cast<Eigen::Index>(jy_.size()))
    throw std::invalid_argument("parameter block sizes do not match network/model");
  if (init.mean.size() != J_)
    throw std::invalid_argument("initial state dimension mismatch");

  FilterOutput out;
  LnaState state = init;
  state.time = model_.times(0);
  Sensitivities sens;
  Eigen::VectorXd grad_h;
  if (want_grad) {
    sens = Sensitivities::zero(J_, L_);
    out.grad.setZero(L_);
  }

  const bool updating = variant == LikelihoodVariant::bayesian_updating;
  const int H1 = model_.time_count();
  for (int h = 0; h < H1; ++h) {
    if (h > 0) {
      const double dt = model_.times(h) - model_.times(h - 1);
      propagator_.predict(state, want_grad ? &sens : nullptr, params.theta, dt,
                          cfg.steps_for(dt));
      if (!state.mean.allFinite() || !state.cov.allFinite()) return out;
    }
    FilterStepRecord rec;
    if (want_diagnostics) {
      rec.time = model_.times(h);
      rec.prior_mean = state.mean + state.pert_mean;
      rec.prior_cov = state.cov;
    }
    Eigen::VectorXd noise_diag(model_.obs_dim(h));
    for (int l = N_; l < L_; ++l)
      for (int pos : noise_positions_[h][l]) noise_diag(pos) = params.sigma(l - N_);
    const KalmanUpdateResult res = kalman_update(
        state, want_grad ? &sens : nullptr, ds.y[h], G_[h], noise_diag,
        noise_positions_[h], cfg.jitter, want_grad ? &grad_h : nullptr, updating);
    if (!res.ok) return out;
    out.loglik += res.log_pred;
    if (want_grad) out.grad += grad_h;
    if (want_diagnostics) {
      rec.post_mean = state.mean + state.pert_mean;
      rec.post_cov = state.cov;
      rec.log_pred = res.log_pred;
      out.steps.push_back(std::move(rec));
    }
  }

  out.final_state = state;
  out.finite = std::isfinite(out.loglik) && (!want_grad || out.grad.allFinite());
  return out;
}

}  // namespace srn
