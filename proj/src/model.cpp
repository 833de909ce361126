#include "bcor/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcor/stats.hpp"

namespace bcor {

namespace {

constexpr int col_of(int s, int a) { return s * 2 + a; }

double clamp_prob(double p) {
  // Keep probabilities strictly inside (0,1); only bites at predictors far
  // beyond anything the priors produce.
  const double lo = std::numeric_limits<double>::denorm_min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return std::min(std::max(p, lo), hi);
}

// Gaussian linear-regression block update: draw from
// N(A^-1 rhs, A^-1) with A = G + I/prior_var, rhs = H' r + prior_mean/prior_var.
Eigen::VectorXd draw_block(const Eigen::MatrixXd& gram,
                           const Eigen::VectorXd& ht_r,
                           const Eigen::VectorXd& prior_mean, double prior_var,
                           Rng& rng) {
  int k = static_cast<int>(ht_r.size());
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += 1.0 / prior_var;
  Eigen::VectorXd rhs = ht_r + prior_mean / prior_var;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs: block precision not positive definite");
  Eigen::VectorXd xi(k);
  for (int j = 0; j < k; ++j) xi[j] = rng.normal();
  return llt.solve(rhs) + llt.matrixU().solve(xi);
}

}  // namespace

void HyperParams::validate() const {
  bool ok = tau0 > 0 && sigma0 > 0 && var_mu > 0 && var_b0 > 0 && var_b1 > 0;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      ok = ok && var_beta[s][a] > 0 && var_eta[s][a] > 0;
  if (!ok) throw std::invalid_argument("HyperParams: all scales must be positive");
}

void McmcConfig::validate() const {
  if (n_warmup < 0 || n_rewarmup < 0 || n_keep < 1 || thin < 1)
    throw std::invalid_argument("McmcConfig: invalid counts");
}

PosteriorDraw prior_draw(const HyperParams& hyper, int n_arms, int k, int d,
                         Rng& rng) {
  hyper.validate();
  if (n_arms < 1 || k < 0 || d < 0)
    throw std::invalid_argument("prior_draw: bad dimensions");
  PosteriorDraw dr;
  dr.b0 = std::sqrt(hyper.var_b0) * rng.normal();
  dr.b1 = std::sqrt(hyper.var_b1) * rng.normal();
  dr.mu_beta.resize(k);
  for (int j = 0; j < k; ++j)
    dr.mu_beta[j] = std::sqrt(hyper.var_mu) * rng.normal();
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      dr.var_alpha[s][a] = rng.inv_gamma(hyper.tau0, hyper.sigma0);
  dr.alpha.resize(n_arms, 4);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      double sd = std::sqrt(dr.var_alpha[s][a]);
      for (int i = 0; i < n_arms; ++i)
        dr.alpha(i, col_of(s, a)) = sd * rng.normal();
    }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      dr.beta[s][a].resize(k);
      double sd = std::sqrt(hyper.var_beta[s][a]);
      for (int j = 0; j < k; ++j)
        dr.beta[s][a][j] = dr.mu_beta[j] + sd * rng.normal();
    }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      dr.eta[s][a].resize(d);
      double sd = std::sqrt(hyper.var_eta[s][a]);
      for (int j = 0; j < d; ++j) dr.eta[s][a][j] = sd * rng.normal();
    }
  return dr;
}

double linear_predictor(const PosteriorDraw& draw, int i,
                        const Eigen::RowVectorXd& x,
                        const Eigen::RowVectorXd& m, int s, int a) {
  if (x.size() != draw.k() || m.size() != draw.d())
    throw std::invalid_argument("linear_predictor: shape mismatch");
  double lp = draw.alpha(i, col_of(s, a));
  if (x.size() > 0) lp += x.dot(draw.beta[s][a]);
  if (m.size() > 0) lp += m.dot(draw.eta[s][a]);
  if (a == 1)
    lp += draw.b0 * draw.alpha(i, col_of(0, 0)) +
          draw.b1 * draw.alpha(i, col_of(1, 0));
  return lp;
}

std::vector<ArmSnapshot> transitions_from_draw(const PosteriorDraw& draw,
                                               const Eigen::MatrixXd& X,
                                               const Eigen::MatrixXd& M,
                                               int t) {
  if (t < 1 || t > M.rows())
    throw std::invalid_argument("transitions_from_draw: t outside horizon");
  int n = static_cast<int>(X.rows());
  std::vector<ArmSnapshot> out(n);
  Eigen::RowVectorXd m = M.row(t - 1);
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd x = X.row(i);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        out[i].p[s][a] = clamp_prob(norm_cdf(linear_predictor(draw, i, x, m, s, a)));
  }
  return out;
}

DesignData build_design(const History& history, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& M) {
  DesignData data;
  data.n_arms = static_cast<int>(X.rows());
  data.k = static_cast<int>(X.cols());
  data.d = static_cast<int>(M.cols());
  int counts[2][2] = {{0, 0}, {0, 0}};
  for (const auto& r : history.records()) ++counts[r.state][r.action];
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      auto& b = data.bucket[s][a];
      b.arm.reserve(counts[s][a]);
      b.y.reserve(counts[s][a]);
      b.x_rows.resize(counts[s][a], data.k);
      b.m_rows.resize(counts[s][a], data.d);
      b.obs_of_arm.assign(data.n_arms, {});
    }
  for (const auto& r : history.records()) {
    if (r.arm < 0 || r.arm >= data.n_arms || r.time < 1 || r.time > M.rows())
      throw std::invalid_argument("build_design: record outside X/M bounds");
    auto& b = data.bucket[r.state][r.action];
    int o = b.size();
    b.arm.push_back(r.arm);
    b.y.push_back(r.next_state);
    b.x_rows.row(o) = X.row(r.arm);
    b.m_rows.row(o) = M.row(r.time - 1);
    b.obs_of_arm[r.arm].push_back(o);
  }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      auto& b = data.bucket[s][a];
      b.xtx = b.x_rows.transpose() * b.x_rows;
      b.mtm = b.m_rows.transpose() * b.m_rows;
    }
  return data;
}

namespace {

// Covariate + spline part of every observation's predictor in one bucket.
Eigen::VectorXd bucket_base(const DesignData::Bucket& b,
                            const PosteriorDraw& dr, int s, int a) {
  Eigen::VectorXd base = Eigen::VectorXd::Zero(b.size());
  if (b.x_rows.cols() > 0) base += b.x_rows * dr.beta[s][a];
  if (b.m_rows.cols() > 0) base += b.m_rows * dr.eta[s][a];
  return base;
}

// Within-arm coupling term of active buckets: b0*alpha(i,00) + b1*alpha(i,10).
double coupling(const PosteriorDraw& dr, int i) {
  return dr.b0 * dr.alpha(i, 0) + dr.b1 * dr.alpha(i, 2);
}

}  // namespace

void gibbs_sweep(ChainState& chain, const DesignData& data,
                 const HyperParams& hyper, Rng& rng) {
  PosteriorDraw& dr = chain.draw;
  const int n_arms = data.n_arms;
  const int k = data.k;
  const int d = data.d;
  if (dr.n_arms() != n_arms || dr.k() != k || dr.d() != d)
    throw std::invalid_argument("gibbs_sweep: chain/data shape mismatch");
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      if (static_cast<int>(chain.z[s][a].size()) != data.bucket[s][a].size())
        throw std::invalid_argument("gibbs_sweep: latent z size mismatch");

  // (1) latent z: truncated unit-variance Gaussians about the predictor.
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto& b = data.bucket[s][a];
      Eigen::VectorXd base = bucket_base(b, dr, s, a);
      for (int o = 0; o < b.size(); ++o) {
        double mean = base[o] + dr.alpha(b.arm[o], col_of(s, a));
        if (a == 1) mean += coupling(dr, b.arm[o]);
        chain.z[s][a][o] = probit_latent(mean, b.y[o], rng);
      }
    }

  // (2) beta blocks: Bayesian regression of residualized z on X rows.
  if (k > 0) {
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const auto& b = data.bucket[s][a];
        Eigen::VectorXd r(b.size());
        Eigen::VectorXd me = Eigen::VectorXd::Zero(b.size());
        if (d > 0) me = b.m_rows * dr.eta[s][a];
        for (int o = 0; o < b.size(); ++o) {
          double rest = me[o] + dr.alpha(b.arm[o], col_of(s, a));
          if (a == 1) rest += coupling(dr, b.arm[o]);
          r[o] = chain.z[s][a][o] - rest;
        }
        dr.beta[s][a] = draw_block(b.xtx, b.x_rows.transpose() * r,
                                   dr.mu_beta, hyper.var_beta[s][a], rng);
      }

    // (3) mu_beta: pools the four beta blocks against its N(0, var_mu) prior.
    for (int j = 0; j < k; ++j) {
      double prec = 1.0 / hyper.var_mu;
      double rhs = 0.0;
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
          prec += 1.0 / hyper.var_beta[s][a];
          rhs += dr.beta[s][a][j] / hyper.var_beta[s][a];
        }
      dr.mu_beta[j] = rhs / prec + rng.normal() / std::sqrt(prec);
    }
  }

  // (4) eta blocks.
  if (d > 0) {
    Eigen::VectorXd zero_mean = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const auto& b = data.bucket[s][a];
        Eigen::VectorXd r(b.size());
        Eigen::VectorXd xb = Eigen::VectorXd::Zero(b.size());
        if (k > 0) xb = b.x_rows * dr.beta[s][a];
        for (int o = 0; o < b.size(); ++o) {
          double rest = xb[o] + dr.alpha(b.arm[o], col_of(s, a));
          if (a == 1) rest += coupling(dr, b.arm[o]);
          r[o] = chain.z[s][a][o] - rest;
        }
        dr.eta[s][a] = draw_block(b.mtm, b.m_rows.transpose() * r, zero_mean,
                                  hyper.var_eta[s][a], rng);
      }
  }

  // (5) alpha blocks. Passive effects alpha(i, s0) enter their own bucket
  // with coefficient 1 and both active buckets of the same arm with
  // coefficient b0 (s=0) or b1 (s=1); active effects only their own bucket.
  Eigen::VectorXd base_cache[2][2];
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      base_cache[s][a] = bucket_base(data.bucket[s][a], dr, s, a);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto& own = data.bucket[s][a];
      double c = (s == 0) ? dr.b0 : dr.b1;
      for (int i = 0; i < n_arms; ++i) {
        double prec = 1.0 / dr.var_alpha[s][a];
        double rhs = 0.0;
        for (int o : own.obs_of_arm[i]) {
          // The target alpha enters its own bucket with coefficient 1; the
          // coupling term of active buckets never contains it.
          double rest = base_cache[s][a][o];
          if (a == 1) rest += coupling(dr, i);
          rhs += chain.z[s][a][o] - rest;
          prec += 1.0;
        }
        if (a == 0) {
          // Contributions through the coupling term of both active buckets.
          for (int sp = 0; sp < 2; ++sp) {
            const auto& act = data.bucket[sp][1];
            int other_col = (s == 0) ? 2 : 0;
            double other_b = (s == 0) ? dr.b1 : dr.b0;
            for (int o : act.obs_of_arm[i]) {
              double rest = base_cache[sp][1][o] + dr.alpha(i, col_of(sp, 1)) +
                            other_b * dr.alpha(i, other_col);
              rhs += c * (chain.z[sp][1][o] - rest);
              prec += c * c;
            }
          }
        }
        double mean = rhs / prec;
        dr.alpha(i, col_of(s, a)) = mean + rng.normal() / std::sqrt(prec);
      }
    }

  // (6) (b0, b1): joint Gaussian regression of active-bucket residuals on
  // the passive random-effect pair.
  {
    double a11 = 1.0 / hyper.var_b0, a22 = 1.0 / hyper.var_b1;
    double a12 = 0.0, r1 = 0.0, r2 = 0.0;
    for (int sp = 0; sp < 2; ++sp) {
      const auto& act = data.bucket[sp][1];
      Eigen::VectorXd base = bucket_base(act, dr, sp, 1);
      for (int o = 0; o < act.size(); ++o) {
        int i = act.arm[o];
        double u = chain.z[sp][1][o] - base[o] - dr.alpha(i, col_of(sp, 1));
        double w1 = dr.alpha(i, 0);
        double w2 = dr.alpha(i, 2);
        a11 += w1 * w1;
        a22 += w2 * w2;
        a12 += w1 * w2;
        r1 += w1 * u;
        r2 += w2 * u;
      }
    }
    double l11 = std::sqrt(a11);
    double l21 = a12 / l11;
    double l22 = std::sqrt(a22 - l21 * l21);
    // Mean: solve (L L') m = r.
    double t1 = r1 / l11, t2 = (r2 - l21 * t1) / l22;
    double m2 = t2 / l22, m1 = (t1 - l21 * m2) / l11;
    // Perturbation: solve L' e = xi.
    double xi1 = rng.normal(), xi2 = rng.normal();
    double e2 = xi2 / l22, e1 = (xi1 - l21 * e2) / l11;
    dr.b0 = m1 + e1;
    dr.b1 = m2 + e2;
  }

  // (7) random-effect variances.
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      double ss = dr.alpha.col(col_of(s, a)).squaredNorm();
      dr.var_alpha[s][a] =
          rng.inv_gamma(hyper.tau0 + 0.5 * n_arms, hyper.sigma0 + 0.5 * ss);
    }
}

static void init_chain(ChainState& chain, const DesignData& data,
                       const HyperParams& hyper, Rng& rng) {
  chain.draw = prior_draw(hyper, data.n_arms, data.k, data.d, rng);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      chain.z[s][a].assign(data.bucket[s][a].size(), 0.0);
  chain.initialized = true;
}

PosteriorDraw posterior_sample(const DesignData& data,
                               const HyperParams& hyper, const McmcConfig& cfg,
                               Rng& rng, ChainState* chain) {
  cfg.validate();
  ChainState local;
  ChainState& ch = chain ? *chain : local;
  int warmup = cfg.n_warmup;
  if (ch.initialized && cfg.warm_start && ch.draw.n_arms() == data.n_arms &&
      ch.draw.k() == data.k && ch.draw.d() == data.d) {
    warmup = cfg.n_rewarmup;
    // Data typically grew since the last call; z is redrawn first thing in
    // every sweep, so only the sizes need fixing.
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        ch.z[s][a].resize(data.bucket[s][a].size(), 0.0);
  } else {
    init_chain(ch, data, hyper, rng);
  }
  int total = warmup + cfg.n_keep * cfg.thin;
  for (int it = 0; it < total; ++it) gibbs_sweep(ch, data, hyper, rng);
  return ch.draw;
}

PosteriorDraw posterior_sample(const History& history, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& M,
                               const HyperParams& hyper, const McmcConfig& cfg,
                               Rng& rng, ChainState* chain) {
  return posterior_sample(build_design(history, X, M), hyper, cfg, rng, chain);
}

double log_unnormalized_posterior(const PosteriorDraw& dr,
                                  const DesignData& data,
                                  const HyperParams& hyper) {
  double lp = norm_logpdf(dr.b0, 0.0, hyper.var_b0) +
              norm_logpdf(dr.b1, 0.0, hyper.var_b1);
  for (int j = 0; j < dr.k(); ++j)
    lp += norm_logpdf(dr.mu_beta[j], 0.0, hyper.var_mu);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      lp += inv_gamma_logpdf(dr.var_alpha[s][a], hyper.tau0, hyper.sigma0);
      for (int i = 0; i < dr.n_arms(); ++i)
        lp += norm_logpdf(dr.alpha(i, col_of(s, a)), 0.0, dr.var_alpha[s][a]);
      for (int j = 0; j < dr.k(); ++j)
        lp += norm_logpdf(dr.beta[s][a][j], dr.mu_beta[j],
                          hyper.var_beta[s][a]);
      for (int j = 0; j < dr.d(); ++j)
        lp += norm_logpdf(dr.eta[s][a][j], 0.0, hyper.var_eta[s][a]);
    }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto& b = data.bucket[s][a];
      Eigen::VectorXd base = bucket_base(b, dr, s, a);
      for (int o = 0; o < b.size(); ++o) {
        double pred = base[o] + dr.alpha(b.arm[o], col_of(s, a));
        if (a == 1) pred += coupling(dr, b.arm[o]);
        lp += b.y[o] == 1 ? log_norm_cdf(pred) : log_norm_cdf(-pred);
      }
    }
  return lp;
}

ArmSnapshot predict_new_arm(const PosteriorDraw& dr,
                            const Eigen::RowVectorXd& x_new,
                            const Eigen::RowVectorXd& m_t, Rng& rng) {
  if (x_new.size() != dr.k() || m_t.size() != dr.d())
    throw std::invalid_argument("predict_new_arm: shape mismatch");
  double a_new[2][2];
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      a_new[s][a] = std::sqrt(dr.var_alpha[s][a]) * rng.normal();
  ArmSnapshot snap;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      double lp = a_new[s][a];
      if (x_new.size() > 0) lp += x_new.dot(dr.beta[s][a]);
      if (m_t.size() > 0) lp += m_t.dot(dr.eta[s][a]);
      if (a == 1) lp += dr.b0 * a_new[0][0] + dr.b1 * a_new[1][0];
      snap.p[s][a] = clamp_prob(norm_cdf(lp));
    }
  return snap;
}

nlohmann::json chain_to_json(const ChainState& chain) {
  const PosteriorDraw& dr = chain.draw;
  nlohmann::json j;
  j["initialized"] = chain.initialized;
  j["b0"] = dr.b0;
  j["b1"] = dr.b1;
  j["mu_beta"] = std::vector<double>(dr.mu_beta.begin(), dr.mu_beta.end());
  auto mat22 = [](auto get) {
    nlohmann::json m = nlohmann::json::array();
    for (int s = 0; s < 2; ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < 2; ++a) row.push_back(get(s, a));
      m.push_back(std::move(row));
    }
    return m;
  };
  j["var_alpha"] = mat22([&](int s, int a) { return dr.var_alpha[s][a]; });
  j["beta"] = mat22([&](int s, int a) {
    return std::vector<double>(dr.beta[s][a].begin(), dr.beta[s][a].end());
  });
  j["eta"] = mat22([&](int s, int a) {
    return std::vector<double>(dr.eta[s][a].begin(), dr.eta[s][a].end());
  });
  j["z"] = mat22([&](int s, int a) { return chain.z[s][a]; });
  nlohmann::json alpha = nlohmann::json::array();
  for (int i = 0; i < dr.n_arms(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(dr.alpha(i, c));
    alpha.push_back(std::move(row));
  }
  j["alpha"] = std::move(alpha);
  return j;
}

ChainState chain_from_json(const nlohmann::json& j) {
  ChainState chain;
  chain.initialized = j.at("initialized").get<bool>();
  PosteriorDraw& dr = chain.draw;
  dr.b0 = j.at("b0").get<double>();
  dr.b1 = j.at("b1").get<double>();
  auto mu = j.at("mu_beta").get<std::vector<double>>();
  dr.mu_beta = Eigen::Map<Eigen::VectorXd>(mu.data(), mu.size());
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      dr.var_alpha[s][a] = j.at("var_alpha").at(s).at(a).get<double>();
      auto be = j.at("beta").at(s).at(a).get<std::vector<double>>();
      dr.beta[s][a] = Eigen::Map<Eigen::VectorXd>(be.data(), be.size());
      auto et = j.at("eta").at(s).at(a).get<std::vector<double>>();
      dr.eta[s][a] = Eigen::Map<Eigen::VectorXd>(et.data(), et.size());
      chain.z[s][a] = j.at("z").at(s).at(a).get<std::vector<double>>();
    }
  const auto& alpha = j.at("alpha");
  dr.alpha.resize(alpha.size(), 4);
  for (int i = 0; i < static_cast<int>(alpha.size()); ++i)
    for (int c = 0; c < 4; ++c) dr.alpha(i, c) = alpha.at(i).at(c).get<double>();
  return chain;
}

}  // namespace bcor
