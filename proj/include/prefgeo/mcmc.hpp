#ifndef PREFGEO_MCMC_HPP
#define PREFGEO_MCMC_HPP

// Metropolis-within-Gibbs samplers for the standard geostatistical model
// and the preferential (log-Gaussian Cox design) model.
//
// Update cycle per iteration:
//   mu, tau^-2, sigma^-2   Gibbs (conjugate conditionals)
//   phi                    Metropolis, lognormal proposal
//   S                      Gibbs (standard) / whole-vector random walk
//                          Metropolis (preferential)
//   alpha, beta            random-walk Metropolis (preferential only)

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prefgeo/common.hpp"
#include "prefgeo/gp.hpp"
#include "prefgeo/rng.hpp"
#include "prefgeo/simulate.hpp"
#include "prefgeo/stats.hpp"

namespace prefgeo {

enum class ModelKind { Standard, Preferential };

inline std::string to_string(ModelKind m) {
  return m == ModelKind::Standard ? "standard" : "preferential";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "standard") return ModelKind::Standard;
  if (s == "preferential") return ModelKind::Preferential;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

struct PriorSpec {
  double mu_var = 1e3;                       // mu ~ N(0, k)
  double tau_shape = 2.0, tau_rate = 0.5;    // tau^-2 ~ G(a, b), shape-rate
  double sigma_shape = 2.0, sigma_rate = 0.5;
  double phi_shape = 2.0, phi_rate = 0.05;   // prior mean phi = 40
  double alpha_var = 1e3, beta_var = 1e3;

  void validate() const {
    for (double v : {mu_var, tau_shape, tau_rate, sigma_shape, sigma_rate, phi_shape,
                     phi_rate, alpha_var, beta_var})
      require(v > 0.0, "prior: all hyperparameters must be positive");
  }
};

struct ChainConfig {
  long iterations = 20000;
  long burn_in = 5000;
  long thin = 5;
  double delta_phi = 0.5;   // lognormal proposal variance
  double step_s = 0.0;      // 0 -> 0.05 * prior scale of sigma
  double step_alpha = 0.3;
  double step_beta = 0.3;
  bool adapt = true;        // Robbins-Monro proposal tuning during burn-in
  // Interweaving-style auxiliary moves. The centered cycle alone mixes
  // very slowly across the mu/S level and sigma2/S amplitude ridges on
  // sparse datasets; these Metropolis moves translate along the ridges
  // and leave the posterior invariant.
  bool aux_moves = true;
  double step_level = 0.25;
  double step_scale = 0.25;
  // Random-walk S moves cost O(M^2) against the O(M^3) phi step, so the
  // preferential sampler runs several per cycle to keep the field from
  // lagging the scalar parameters.
  int s_substeps = 10;
  std::uint64_t seed = 0;

  void validate() const {
    require(iterations > 0, "chain config: iterations must be positive");
    require(burn_in >= 0 && burn_in < iterations,
            "chain config: burn_in must be below iterations");
    require(thin > 0, "chain config: thin must be positive");
    require(delta_phi > 0.0, "chain config: delta_phi must be positive");
    require(step_s >= 0.0 && step_alpha > 0.0 && step_beta > 0.0,
            "chain config: proposal steps must be positive");
    require(step_level > 0.0 && step_scale > 0.0,
            "chain config: auxiliary steps must be positive");
    require(s_substeps > 0, "chain config: s_substeps must be positive");
  }
};

struct ChainState {
  double mu = 0.0, tau2 = 1.0, sigma2 = 1.0, phi = 1.0;
  double alpha = 0.0, beta = 0.0;
  Eigen::VectorXd s;
};

struct ParamDraw {
  double mu, tau2, sigma2, phi, alpha, beta;
};

struct AcceptanceStats {
  long attempts = 0;
  long accepts = 0;
  long numerical_rejects = 0;
  double rate() const { return attempts == 0 ? 0.0 : double(accepts) / double(attempts); }
};

struct Chain {
  ModelKind model = ModelKind::Standard;
  std::vector<ParamDraw> params;
  Eigen::MatrixXd s_draws;  // L x M
  std::map<std::string, AcceptanceStats> acceptance;
  long size() const { return static_cast<long>(params.size()); }
};

class McmcSampler {
 public:
  McmcSampler(const Dataset& data, ModelKind model, const PriorSpec& prior,
              const ChainConfig& config)
      : data_(data),
        model_(model),
        prior_(prior),
        config_(config),
        rng_(config.seed),
        dist_(pairwise_distances(data.grid)),
        m_(data.grid.cell_count()) {
    prior_.validate();
    config_.validate();
    data_.validate();
    n_total_ = data_.n();
    occ_ = data_.occupied_cells();
    unocc_.clear();
    for (int i = 0; i < m_; ++i)
      if (data_.counts[i] == 0) unocc_.push_back(i);
    volumes_.resize(m_);
    for (int i = 0; i < m_; ++i) volumes_[i] = data_.grid.volume(i);
    if (config_.step_s <= 0.0)
      config_.step_s = 0.05 * std::sqrt(prior_.sigma_shape / prior_.sigma_rate);
    step_s_iid_ = config_.step_s;
    init_state();
    set_phi_cache(state_.phi);
  }

  const ChainState& state() const { return state_; }
  const ChainConfig& config() const { return config_; }

  void set_state(const ChainState& s) {
    require(s.s.size() == m_, "set_state: field length must equal cell count");
    require(s.tau2 > 0.0 && s.sigma2 > 0.0 && s.phi > 0.0,
            "set_state: variance and range parameters must be positive");
    state_ = s;
    set_phi_cache(state_.phi);
  }

  // ---- conjugate conditionals -------------------------------------------

  /// (mean, variance) of [mu | rest].
  std::pair<double, double> mu_conditional() const {
    double resid = 0.0;
    for (int i : occ_) resid += data_.y_sum[i] - data_.counts[i] * state_.s[i];
    const double v = 1.0 / (static_cast<double>(n_total_) / state_.tau2 + 1.0 / prior_.mu_var);
    return {v * resid / state_.tau2, v};
  }

  /// (shape, rate) of [tau^-2 | rest].
  std::pair<double, double> tau_precision_conditional() const {
    return {prior_.tau_shape + 0.5 * static_cast<double>(n_total_),
            prior_.tau_rate + 0.5 * obs_squared_residual(state_.mu, state_.s)};
  }

  /// (shape, rate) of [sigma^-2 | rest].
  std::pair<double, double> sigma_precision_conditional() const {
    return {prior_.sigma_shape + 0.5 * static_cast<double>(m_),
            prior_.sigma_rate + 0.5 * quad_form_r_inv(state_.s)};
  }

  void update_conjugate() {
    const auto [mu_mean, mu_var] = mu_conditional();
    if (!std::isfinite(mu_mean) || !std::isfinite(mu_var))
      throw NumericalError("mcmc: non-finite sufficient statistics in mu update");
    state_.mu = rng_.normal(mu_mean, std::sqrt(mu_var));

    const auto [ta, tb] = tau_precision_conditional();
    if (!std::isfinite(tb)) throw NumericalError("mcmc: non-finite tau^-2 rate");
    state_.tau2 = 1.0 / rng_.gamma(ta, tb);

    const auto [sa, sb] = sigma_precision_conditional();
    if (!std::isfinite(sb)) throw NumericalError("mcmc: non-finite sigma^-2 rate");
    state_.sigma2 = 1.0 / rng_.gamma(sa, sb);
  }

  // ---- phi (range) -------------------------------------------------------

  /// Log acceptance ratio for phi -> phi_prop including the lognormal
  /// proposal correction. Returns nullopt when the proposed correlation
  /// cannot be factorized.
  std::optional<double> log_accept_phi(double phi_prop) const {
    const auto ev = eval_phi_proposal(phi_prop);
    if (!ev) return std::nullopt;
    return ev->log_ratio;
  }

  bool update_phi() {
    auto& st = stats_["phi"];
    ++st.attempts;
    const double d = config_.delta_phi;
    const double phi_prop =
        std::exp(rng_.normal(std::log(state_.phi) - 0.5 * d, std::sqrt(d)));
    auto ev = eval_phi_proposal(phi_prop);
    bool accepted = false;
    if (!ev) {
      ++st.numerical_rejects;
    } else if (ev->log_ratio >= 0.0 || rng_.uniform() < std::exp(ev->log_ratio)) {
      state_.phi = phi_prop;
      phi_r_ = std::move(ev->r);
      phi_llt_ = std::move(ev->llt);
      phi_logdet_ = ev->logdet;
      std_cache_ready_ = false;
      ++st.accepts;
      accepted = true;
    }
    return accepted;
  }

  // ---- S ------------------------------------------------------------------

  /// Log acceptance ratio for the preferential whole-vector random walk.
  /// nullopt encodes intensity overflow (automatic rejection).
  std::optional<double> log_accept_s(const Eigen::VectorXd& s_prop) const {
    const auto integral_prop = poisson_integral(state_.alpha, state_.beta, s_prop);
    if (!integral_prop) return std::nullopt;
    const double integral_cur = *poisson_integral(state_.alpha, state_.beta, state_.s);

    // Observation term: -(1/2tau2)[sum n_i (s'^2 - s^2) - 2 (s' - s)(ys - n mu)]
    double obs = 0.0;
    for (int i : occ_) {
      const double np = data_.counts[i];
      obs += np * (s_prop[i] * s_prop[i] - state_.s[i] * state_.s[i]) -
             2.0 * (s_prop[i] - state_.s[i]) * (data_.y_sum[i] - np * state_.mu);
    }
    obs = -obs / (2.0 * state_.tau2);

    double point = 0.0;
    for (int i : occ_) point += data_.counts[i] * (s_prop[i] - state_.s[i]);
    point *= state_.beta;

    const double q_cur = quad_form_r_inv(state_.s);
    const double q_prop = quad_form_r_inv(s_prop);
    return obs + point + (integral_cur - *integral_prop) -
           (q_prop - q_cur) / (2.0 * state_.sigma2);
  }

  bool update_s() {
    if (model_ == ModelKind::Standard) {
      gibbs_update_s_standard();
      return true;
    }
    auto& st = stats_["s"];
    ++st.attempts;
    // Symmetric Gaussian random walk centered at the current field. Half
    // the proposals draw increments with covariance (step^2 sigma2) R so
    // moves follow the smoothness of the field; the other half use iid
    // increments so short-range structure stays reachable when the
    // current phi is large. Each flavor carries its own tuned step.
    Eigen::VectorXd z(m_);
    for (int i = 0; i < m_; ++i) z[i] = rng_.normal();
    const bool correlated = rng_.uniform() < 0.5;
    Eigen::VectorXd s_prop;
    if (correlated) {
      const Eigen::VectorXd increment = phi_llt_.matrixL() * z;
      s_prop = state_.s + (config_.step_s * std::sqrt(state_.sigma2)) * increment;
    } else {
      s_prop = state_.s + (step_s_iid_ * std::sqrt(state_.sigma2)) * z;
    }
    const auto la = log_accept_s(s_prop);
    bool accepted = false;
    if (!la) {
      ++st.numerical_rejects;
    } else if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      state_.s = std::move(s_prop);
      ++st.accepts;
      accepted = true;
    }
    last_s_correlated_ = correlated;
    return accepted;
  }

  // ---- auxiliary ridge moves -------------------------------------------

  /// Shift level between mu and S: mu' = mu + eps, S' = S - eps. The
  /// observation likelihood is invariant; only the GP prior, the point
  /// process, and the mu prior change.
  std::optional<double> log_accept_level(double eps) const {
    const Eigen::VectorXd r_inv_s = phi_llt_.solve(state_.s);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m_);
    const Eigen::VectorXd r_inv_1 = phi_llt_.solve(ones);
    const double quad_delta = -2.0 * eps * r_inv_s.sum() + eps * eps * r_inv_1.sum();
    double out = -quad_delta / (2.0 * state_.sigma2);
    const double mu_prop = state_.mu + eps;
    out += (state_.mu * state_.mu - mu_prop * mu_prop) / (2.0 * prior_.mu_var);
    if (model_ == ModelKind::Preferential) {
      const auto integral_cur = poisson_integral(state_.alpha, state_.beta, state_.s);
      if (!integral_cur) return std::nullopt;
      const double scale = -state_.beta * eps;
      if (scale > 690.0) return std::nullopt;
      const double integral_prop = *integral_cur * std::exp(scale);
      out += -state_.beta * eps * static_cast<double>(n_total_) +
             (*integral_cur - integral_prop);
    }
    return out;
  }

  bool update_level() {
    auto& st = stats_["level"];
    ++st.attempts;
    const double eps = config_.step_level * rng_.normal();
    const auto la = log_accept_level(eps);
    if (!la) {
      ++st.numerical_rejects;
      return false;
    }
    if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      state_.mu += eps;
      state_.s.array() -= eps;
      ++st.accepts;
      return true;
    }
    return false;
  }

  /// Rescale the field and its variance together: S' = c S,
  /// sigma2' = c^2 sigma2 with c = exp(eta). The GP quadratic form is
  /// invariant along this ridge; the ratio keeps the sigma^-2 prior, the
  /// likelihood terms, and the transform Jacobian.
  std::optional<double> log_accept_scale(double eta) const {
    const double c = std::exp(eta);
    const Eigen::VectorXd s_prop = c * state_.s;
    const double u = 1.0 / state_.sigma2;
    double out = -2.0 * prior_.sigma_shape * eta -
                 prior_.sigma_rate * u * (std::exp(-2.0 * eta) - 1.0);
    out -= (obs_squared_residual(state_.mu, s_prop) -
            obs_squared_residual(state_.mu, state_.s)) /
           (2.0 * state_.tau2);
    if (model_ == ModelKind::Preferential) {
      const auto integral_prop = poisson_integral(state_.alpha, state_.beta, s_prop);
      if (!integral_prop) return std::nullopt;
      const double integral_cur = *poisson_integral(state_.alpha, state_.beta, state_.s);
      double sn = 0.0;
      for (int i : occ_) sn += state_.s[i] * data_.counts[i];
      out += state_.beta * (c - 1.0) * sn + (integral_cur - *integral_prop);
    }
    return out;
  }

  bool update_scale() {
    auto& st = stats_["scale"];
    ++st.attempts;
    const double eta = config_.step_scale * rng_.normal();
    const auto la = log_accept_scale(eta);
    if (!la) {
      ++st.numerical_rejects;
      return false;
    }
    if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      state_.s *= std::exp(eta);
      state_.sigma2 *= std::exp(2.0 * eta);
      ++st.accepts;
      return true;
    }
    return false;
  }

  /// Trade field amplitude against the coupling: S' = c S, beta' = beta/c
  /// with c = exp(eta). Every beta * S product is unchanged, so the whole
  /// point-process likelihood drops out of the ratio.
  std::optional<double> log_accept_beta_scale(double eta) const {
    const double c = std::exp(eta);
    const Eigen::VectorXd s_prop = c * state_.s;
    const double beta_prop = state_.beta / c;
    const double quad = quad_form_r_inv(state_.s);
    double out = -(c * c - 1.0) * quad / (2.0 * state_.sigma2);
    out -= (obs_squared_residual(state_.mu, s_prop) -
            obs_squared_residual(state_.mu, state_.s)) /
           (2.0 * state_.tau2);
    out += (state_.beta * state_.beta - beta_prop * beta_prop) / (2.0 * prior_.beta_var);
    out += (static_cast<double>(m_) - 1.0) * eta;  // transform Jacobian
    return out;
  }

  bool update_beta_scale() {
    auto& st = stats_["beta_scale"];
    ++st.attempts;
    const double eta = step_beta_scale_ * rng_.normal();
    const auto la = log_accept_beta_scale(eta);
    if (!la) {
      ++st.numerical_rejects;
      return false;
    }
    if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      const double c = std::exp(eta);
      state_.s *= c;
      state_.beta /= c;
      ++st.accepts;
      return true;
    }
    return false;
  }

  /// Involution (S, beta) -> (-S, -beta). The point process and the GP
  /// prior are invariant; only the observation likelihood decides, which
  /// lets the chain leave a sign-flipped mode while the field is weak.
  bool update_sign_flip() {
    auto& st = stats_["sign_flip"];
    ++st.attempts;
    const Eigen::VectorXd s_prop = -state_.s;
    const double la = -(obs_squared_residual(state_.mu, s_prop) -
                        obs_squared_residual(state_.mu, state_.s)) /
                      (2.0 * state_.tau2);
    if (la >= 0.0 || rng_.uniform() < std::exp(la)) {
      state_.s = -state_.s;
      state_.beta = -state_.beta;
      ++st.accepts;
      return true;
    }
    return false;
  }

  // ---- alpha, beta ---------------------------------------------------------

  std::optional<double> log_accept_alpha(double alpha_prop) const {
    const auto integral_prop = poisson_integral(alpha_prop, state_.beta, state_.s);
    if (!integral_prop) return std::nullopt;
    const double integral_cur = *poisson_integral(state_.alpha, state_.beta, state_.s);
    return (alpha_prop - state_.alpha) * static_cast<double>(n_total_) +
           (integral_cur - *integral_prop) +
           (state_.alpha * state_.alpha - alpha_prop * alpha_prop) / (2.0 * prior_.alpha_var);
  }

  std::optional<double> log_accept_beta(double beta_prop) const {
    const auto integral_prop = poisson_integral(state_.alpha, beta_prop, state_.s);
    if (!integral_prop) return std::nullopt;
    const double integral_cur = *poisson_integral(state_.alpha, state_.beta, state_.s);
    double sn = 0.0;
    for (int i : occ_) sn += state_.s[i] * data_.counts[i];
    return (beta_prop - state_.beta) * sn + (integral_cur - *integral_prop) +
           (state_.beta * state_.beta - beta_prop * beta_prop) / (2.0 * prior_.beta_var);
  }

  bool update_alpha() {
    auto& st = stats_["alpha"];
    ++st.attempts;
    const double prop = state_.alpha + config_.step_alpha * rng_.normal();
    const auto la = log_accept_alpha(prop);
    if (!la) {
      ++st.numerical_rejects;
      return false;
    }
    if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      state_.alpha = prop;
      ++st.accepts;
      return true;
    }
    return false;
  }

  bool update_beta() {
    auto& st = stats_["beta"];
    ++st.attempts;
    const double prop = state_.beta + config_.step_beta * rng_.normal();
    const auto la = log_accept_beta(prop);
    if (!la) {
      ++st.numerical_rejects;
      return false;
    }
    if (*la >= 0.0 || rng_.uniform() < std::exp(*la)) {
      state_.beta = prop;
      ++st.accepts;
      return true;
    }
    return false;
  }

  // ---- driver ---------------------------------------------------------------

  void step() {
    update_conjugate();
    const bool acc_phi = update_phi();
    bool acc_s = update_s();
    if (model_ == ModelKind::Preferential) {
      for (int k = 1; k < config_.s_substeps; ++k) {
        const bool acc = update_s();
        if (config_.adapt && iteration_ < config_.burn_in) {
          if (last_s_correlated_)
            adapt_scale(config_.step_s, acc, 0.25);
          else
            adapt_scale(step_s_iid_, acc, 0.25);
        }
        acc_s = acc;
      }
    }
    bool acc_alpha = false, acc_beta = false;
    if (model_ == ModelKind::Preferential) {
      acc_alpha = update_alpha();
      acc_beta = update_beta();
    }
    bool acc_level = false, acc_scale = false, acc_bscale = false;
    if (config_.aux_moves) {
      acc_level = update_level();
      acc_scale = update_scale();
      if (model_ == ModelKind::Preferential) {
        acc_bscale = update_beta_scale();
        update_sign_flip();
      }
    }
    ++iteration_;
    if (config_.adapt && iteration_ <= config_.burn_in) {
      adapt_scale(config_.delta_phi, acc_phi, 0.44);
      if (model_ == ModelKind::Preferential) {
        if (last_s_correlated_)
          adapt_scale(config_.step_s, acc_s, 0.25);
        else
          adapt_scale(step_s_iid_, acc_s, 0.25);
        adapt_scale(config_.step_alpha, acc_alpha, 0.44);
        adapt_scale(config_.step_beta, acc_beta, 0.44);
      }
      if (config_.aux_moves) {
        adapt_scale(config_.step_level, acc_level, 0.44);
        adapt_scale(config_.step_scale, acc_scale, 0.44);
        if (model_ == ModelKind::Preferential)
          adapt_scale(step_beta_scale_, acc_bscale, 0.44);
      }
    }
    if (iteration_ % 500 == 0) check_numerical_health();
  }

  Chain run() {
    Chain chain;
    chain.model = model_;
    const long retained = (config_.iterations - config_.burn_in) / config_.thin;
    chain.params.reserve(retained);
    chain.s_draws.resize(retained, m_);
    long kept = 0;
    for (long it = 1; it <= config_.iterations; ++it) {
      step();
      if (it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0 &&
          kept < retained) {
        chain.params.push_back({state_.mu, state_.tau2, state_.sigma2, state_.phi,
                                state_.alpha, state_.beta});
        chain.s_draws.row(kept) = state_.s.transpose();
        ++kept;
      }
    }
    check_numerical_health();
    chain.acceptance = stats_;
    return chain;
  }

  const std::map<std::string, AcceptanceStats>& acceptance_stats() const { return stats_; }

  // Exact total exp(alpha) * sum_i Delta_i exp(beta s_i); nullopt on overflow.
  std::optional<double> poisson_integral(double alpha, double beta,
                                         const Eigen::VectorXd& s) const {
    double total = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double e = alpha + beta * s[i] + std::log(volumes_[i]);
      if (e > 690.0) return std::nullopt;
      total += std::exp(e);
    }
    return total;
  }

  /// S' R^-1 S at the cached phi factorization.
  double quad_form_r_inv(const Eigen::VectorXd& s) const {
    return phi_llt_.solve(s).dot(s);
  }

  double obs_squared_residual(double mu, const Eigen::VectorXd& s) const {
    double total = 0.0;
    for (int i : occ_) {
      const double c = mu + s[i];
      total += data_.y_sq_sum[i] - 2.0 * c * data_.y_sum[i] + data_.counts[i] * c * c;
    }
    return total;
  }

 private:
  struct PhiProposalEval {
    double log_ratio;
    Eigen::MatrixXd r;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double logdet;
  };

  std::optional<PhiProposalEval> eval_phi_proposal(double phi_prop) const {
    if (!(phi_prop > 0.0)) return std::nullopt;
    PhiProposalEval ev;
    ev.r = build_correlation(dist_, phi_prop);
    ev.llt.compute(ev.r);
    if (ev.llt.info() != Eigen::Success) return std::nullopt;
    ev.logdet = 2.0 * ev.llt.matrixLLT().diagonal().array().log().sum();
    const double q_prop = ev.llt.solve(state_.s).dot(state_.s);
    const double q_cur = quad_form_r_inv(state_.s);
    const double lr = std::log(phi_prop) - std::log(state_.phi);
    const double d = config_.delta_phi;
    const double prop_corr = -((-lr + 0.5 * d) * (-lr + 0.5 * d) -
                               (lr + 0.5 * d) * (lr + 0.5 * d)) /
                             (2.0 * d);
    ev.log_ratio = -0.5 * (ev.logdet - phi_logdet_) + prior_.phi_shape * lr -
                   (q_prop - q_cur) / (2.0 * state_.sigma2) +
                   prior_.phi_rate * (state_.phi - phi_prop) + prop_corr;
    return ev;
  }

  void init_state() {
    const double n = static_cast<double>(n_total_);
    const double total_volume = data_.grid.total_volume();
    state_.mu = n > 0 ? data_.y_sum.sum() / n : 0.0;
    double var = 1.0;
    if (n > 1) {
      const double ss = data_.y_sq_sum.sum() - n * state_.mu * state_.mu;
      var = std::max(ss / (n - 1.0), 1e-6);
    }
    state_.tau2 = 0.5 * var;
    state_.sigma2 = 0.5 * var;
    state_.phi = prior_.phi_shape / prior_.phi_rate;
    state_.alpha = std::log(std::max(n, 1.0) / total_volume);
    state_.beta = 0.0;
    // Start the field at a prior draw rather than exactly zero: a flat
    // start drives the first sigma^-2 Gibbs draw to a near-zero variance
    // and the chain can take a long time to climb back out.
    Rng init_rng = rng_.stream(0x5eed);
    FieldSample f =
        sample_gaussian_field(data_.grid, state_.sigma2, state_.phi, init_rng);
    state_.s = std::move(f.values);
  }

  void set_phi_cache(double phi) {
    phi_r_ = build_correlation(dist_, phi);
    Eigen::LLT<Eigen::MatrixXd> llt(phi_r_);
    if (llt.info() != Eigen::Success) {
      const auto guarded = cholesky_with_jitter(phi_r_);
      if (!guarded)
        throw NumericalError("mcmc: correlation factorization failed at phi = " +
                             std::to_string(phi));
      llt = *guarded;
    }
    phi_llt_ = std::move(llt);
    phi_logdet_ = 2.0 * phi_llt_.matrixLLT().diagonal().array().log().sum();
    std_cache_ready_ = false;
  }

  // Standard-model S update: draw the occupied block from its Gaussian
  // full conditional, then the unobserved block from the prior
  // conditional given the occupied block.
  void gibbs_update_s_standard() {
    if (occ_.empty()) {
      Eigen::VectorXd z(m_);
      for (int i = 0; i < m_; ++i) z[i] = rng_.normal();
      const Eigen::VectorXd colored = phi_llt_.matrixL() * z;
      state_.s = std::sqrt(state_.sigma2) * colored;
      return;
    }
    refresh_standard_cache();
    const int n = static_cast<int>(occ_.size());
    const int nu = static_cast<int>(unocc_.size());

    // Occupied block: precision (sigma2 R_occ)^-1 + diag(n_i / tau2).
    Eigen::MatrixXd prec = r_occ_inv_ / state_.sigma2;
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      const int cell = occ_[i];
      prec(i, i) += data_.counts[cell] / state_.tau2;
      b[i] = (data_.y_sum[cell] - data_.counts[cell] * state_.mu) / state_.tau2;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError("mcmc: occupied-block precision not positive definite");
    const Eigen::VectorXd mean_occ = llt.solve(b);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng_.normal();
    const Eigen::VectorXd s_occ =
        mean_occ + llt.matrixU().solve(z);  // U^-1 z has covariance prec^-1

    for (int i = 0; i < n; ++i) state_.s[occ_[i]] = s_occ[i];
    if (nu == 0) return;

    // Unoccupied block given the occupied one.
    const Eigen::VectorXd mean_u = k_cross_.transpose() * s_occ;
    Eigen::VectorXd zu(nu);
    for (int i = 0; i < nu; ++i) zu[i] = rng_.normal();
    const Eigen::VectorXd colored = chol_w_.triangularView<Eigen::Lower>() * zu;
    const Eigen::VectorXd s_u = mean_u + std::sqrt(state_.sigma2) * colored;
    for (int i = 0; i < nu; ++i) state_.s[unocc_[i]] = s_u[i];
  }

  void refresh_standard_cache() {
    if (std_cache_ready_) return;
    const int n = static_cast<int>(occ_.size());
    const int nu = static_cast<int>(unocc_.size());
    Eigen::MatrixXd r_occ(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r_occ(i, j) = phi_r_(occ_[i], occ_[j]);
    const auto llt = cholesky_with_jitter(r_occ);
    if (!llt) throw NumericalError("mcmc: occupied-block correlation is singular");
    r_occ_inv_ = llt->solve(Eigen::MatrixXd::Identity(n, n));
    if (nu > 0) {
      Eigen::MatrixXd r_ou(n, nu);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < nu; ++j) r_ou(i, j) = phi_r_(occ_[i], unocc_[j]);
      k_cross_ = llt->solve(r_ou);
      Eigen::MatrixXd w(nu, nu);
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) w(i, j) = phi_r_(unocc_[i], unocc_[j]);
      w.noalias() -= r_ou.transpose() * k_cross_;
      w = 0.5 * (w + w.transpose()).eval();
      const auto lltw = cholesky_with_jitter(w);
      if (!lltw) throw NumericalError("mcmc: conditional covariance is singular");
      chol_w_ = lltw->matrixL();
    }
    std_cache_ready_ = true;
  }

  void adapt_scale(double& scale, bool accepted, double target) {
    const double gamma =
        adapt_c_ / std::pow(static_cast<double>(iteration_) + 1.0, 0.6);
    scale = std::clamp(scale * std::exp(gamma * ((accepted ? 1.0 : 0.0) - target)),
                       1e-8, 1e8);
  }

  void check_numerical_health() const {
    for (const auto& [name, st] : stats_) {
      if (st.attempts >= 200 && st.numerical_rejects * 2 > st.attempts)
        throw NumericalError("mcmc: block '" + name + "' rejected numerically in " +
                             std::to_string(st.numerical_rejects) + " of " +
                             std::to_string(st.attempts) + " attempts");
    }
  }

  Dataset data_;
  ModelKind model_;
  PriorSpec prior_;
  ChainConfig config_;
  Rng rng_;
  Eigen::MatrixXd dist_;
  int m_;
  long n_total_ = 0;
  std::vector<int> occ_, unocc_;
  std::vector<double> volumes_;

  ChainState state_;
  long iteration_ = 0;
  double adapt_c_ = 1.0;
  double step_s_iid_ = 0.1;
  double step_beta_scale_ = 0.25;
  bool last_s_correlated_ = true;
  std::map<std::string, AcceptanceStats> stats_;

  // Cached factorization for the current phi.
  Eigen::MatrixXd phi_r_;
  Eigen::LLT<Eigen::MatrixXd> phi_llt_;
  double phi_logdet_ = 0.0;

  // Standard-model per-phi extras.
  bool std_cache_ready_ = false;
  Eigen::MatrixXd r_occ_inv_;
  Eigen::MatrixXd k_cross_;  // R_occ^-1 R[occ, unocc]
  Eigen::MatrixXd chol_w_;   // lower factor of R_uu - R_uo K
};

inline Chain run_mcmc(const Dataset& data, ModelKind model, const PriorSpec& prior,
                      const ChainConfig& config) {
  McmcSampler sampler(data, model, prior, config);
  return sampler.run();
}

struct SummaryRow {
  std::string name;
  double mean_value, q025, q975;
};

/// Empirical mean and central 95% interval per scalar parameter.
inline std::vector<SummaryRow> posterior_summaries(const Chain& chain) {
  require(chain.size() > 0, "posterior_summaries: empty chain");
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  auto col = [&](const std::string& name, auto getter) {
    std::vector<double> v(chain.params.size());
    for (std::size_t i = 0; i < chain.params.size(); ++i) v[i] = getter(chain.params[i]);
    cols.emplace_back(name, std::move(v));
  };
  col("mu", [](const ParamDraw& p) { return p.mu; });
  col("tau2", [](const ParamDraw& p) { return p.tau2; });
  col("sigma2", [](const ParamDraw& p) { return p.sigma2; });
  col("phi", [](const ParamDraw& p) { return p.phi; });
  if (chain.model == ModelKind::Preferential) {
    col("alpha", [](const ParamDraw& p) { return p.alpha; });
    col("beta", [](const ParamDraw& p) { return p.beta; });
  }
  std::vector<SummaryRow> out;
  for (auto& [name, v] : cols)
    out.push_back({name, mean(v), quantile(v, 0.025), quantile(v, 0.975)});
  return out;
}

}  // namespace prefgeo

#endif
