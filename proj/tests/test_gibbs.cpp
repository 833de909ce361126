#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "bcor/model.hpp"
#include "bcor/rng.hpp"
#include "bcor/stats.hpp"
#include "doctest.h"

using namespace bcor;

namespace {

struct Moments {
  double mean, var, se_mean, se_var;
};

// Moments with iid standard errors (delta method for the variance).
Moments iid_moments(const std::vector<double>& x) {
  int n = static_cast<int>(x.size());
  double m = 0;
  for (double v : x) m += v;
  m /= n;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  Moments out;
  out.mean = m;
  out.var = m2 * n / (n - 1);
  out.se_mean = std::sqrt(m2 / n);
  out.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return out;
}

double mean_of(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / x.size();
}

// Standard error of the mean of a correlated series via batch means.
double batch_se(const std::vector<double>& x, int n_batches) {
  int m = static_cast<int>(x.size()) / n_batches;
  double grand = 0;
  std::vector<double> bm(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0;
    for (int i = 0; i < m; ++i) s += x[b * m + i];
    bm[b] = s / m;
    grand += bm[b];
  }
  grand /= n_batches;
  double ss = 0;
  for (double v : bm) ss += (v - grand) * (v - grand);
  return std::sqrt(ss / (n_batches - 1) / n_batches);
}

// Redraw every observed outcome from its model probability given the draw.
void redraw_y(DesignData& data, const PosteriorDraw& dr, Rng& rng) {
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      auto& b = data.bucket[s][a];
      for (int o = 0; o < b.size(); ++o) {
        Eigen::RowVectorXd x = b.x_rows.row(o);
        Eigen::RowVectorXd m = b.m_rows.row(o);
        double pred = linear_predictor(dr, b.arm[o], x, m, s, a);
        b.y[o] = rng.bernoulli(norm_cdf(pred));
      }
    }
}

double mean_y(const DesignData& data) {
  double s = 0;
  int n = 0;
  for (int st = 0; st < 2; ++st)
    for (int a = 0; a < 2; ++a)
      for (int y : data.bucket[st][a].y) {
        s += y;
        ++n;
      }
  return s / n;
}

void init_from_prior(ChainState& chain, const DesignData& data,
                     const HyperParams& hyper, Rng& rng) {
  chain.draw = prior_draw(hyper, data.n_arms, data.k, data.d, rng);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      chain.z[s][a].assign(data.bucket[s][a].size(), 0.0);
  chain.initialized = true;
}

}  // namespace

TEST_CASE("zero data leaves the posterior at the prior") {
  HyperParams hyper;
  Eigen::MatrixXd X(3, 2), M(3, 2);
  X << 0.3, -0.2, 1.1, 0.4, -0.8, 0.9;
  M << 0.1, 0.5, 0.2, 0.6, 0.3, 0.7;
  DesignData empty = build_design(History(), X, M);
  McmcConfig cfg;
  cfg.n_warmup = 30;

  const int reps = 5000;
  Rng rng_post(41), rng_prior(42);
  std::vector<double> post[6], prior[6];
  for (int r = 0; r < reps; ++r) {
    PosteriorDraw a = posterior_sample(empty, hyper, cfg, rng_post);
    PosteriorDraw b = prior_draw(hyper, 3, 2, 2, rng_prior);
    const PosteriorDraw* d[2] = {&a, &b};
    for (int which = 0; which < 2; ++which) {
      auto& dst = which == 0 ? post : prior;
      const PosteriorDraw& dr = *d[which];
      dst[0].push_back(dr.b0);
      dst[1].push_back(dr.mu_beta[0]);
      dst[2].push_back(dr.beta[0][1][0]);
      dst[3].push_back(dr.eta[1][0][0]);
      dst[4].push_back(dr.var_alpha[1][1]);
      dst[5].push_back(dr.alpha(0, 3));
    }
  }
  for (int j = 0; j < 6; ++j) {
    CAPTURE(j);
    Moments mp = iid_moments(post[j]);
    Moments mq = iid_moments(prior[j]);
    double z_mean = (mp.mean - mq.mean) /
                    std::sqrt(mp.se_mean * mp.se_mean + mq.se_mean * mq.se_mean);
    double z_var =
        (mp.var - mq.var) /
        std::sqrt(mp.se_var * mp.se_var + mq.se_var * mq.se_var);
    CHECK(std::abs(z_mean) < 3.5);
    CHECK(std::abs(z_var) < 3.5);
  }
}

TEST_CASE("single-arm chain matches dense grid integration") {
  // One arm, no covariates or spline: the identified block is
  // (alpha, tau2) with 20 passive-state-0 observations; everything else
  // stays at its prior. Grid-integrate the exact posterior and compare.
  HyperParams hyper;
  Eigen::MatrixXd X(1, 0), M(25, 0);
  History h;
  const int kObs = 20, kOnes = 14;
  for (int t = 1; t <= kObs; ++t)
    h.append_step(t, {0}, {0}, {t <= kOnes ? 1 : 0});
  DesignData data = build_design(h, X, M);
  REQUIRE(data.bucket[0][0].size() == kObs);
  REQUIRE(data.total() == kObs);

  // Gibbs side.
  Rng rng(43);
  ChainState chain;
  init_from_prior(chain, data, hyper, rng);
  for (int it = 0; it < 200; ++it) gibbs_sweep(chain, data, hyper, rng);
  const int keep = 4000;
  std::vector<double> alpha(keep), tau2(keep);
  for (int it = 0; it < keep; ++it) {
    gibbs_sweep(chain, data, hyper, rng);
    alpha[it] = chain.draw.alpha(0, 0);
    tau2[it] = chain.draw.var_alpha[0][0];
  }

  // Grid side: p(alpha, tau2 | y) on 400 x 200 nodes.
  const int na = 400, nt = 200;
  const double alo = -1.2, ahi = 1.2, tlo = 0.004, thi = 0.02;
  double wsum = 0, sa = 0, saa = 0, st = 0, stt = 0, max_lp = -1e300;
  std::vector<double> lps(na * nt);
  for (int i = 0; i < na; ++i) {
    double a = alo + (i + 0.5) * (ahi - alo) / na;
    double loglik = kOnes * log_norm_cdf(a) + (kObs - kOnes) * log_norm_cdf(-a);
    for (int j = 0; j < nt; ++j) {
      double t2 = tlo + (j + 0.5) * (thi - tlo) / nt;
      double lp = inv_gamma_logpdf(t2, hyper.tau0, hyper.sigma0) +
                  norm_logpdf(a, 0.0, t2) + loglik;
      lps[i * nt + j] = lp;
      max_lp = std::max(max_lp, lp);
    }
  }
  for (int i = 0; i < na; ++i) {
    double a = alo + (i + 0.5) * (ahi - alo) / na;
    for (int j = 0; j < nt; ++j) {
      double t2 = tlo + (j + 0.5) * (thi - tlo) / nt;
      double w = std::exp(lps[i * nt + j] - max_lp);
      wsum += w;
      sa += w * a;
      saa += w * a * a;
      st += w * t2;
      stt += w * t2 * t2;
    }
  }
  double grid_ma = sa / wsum, grid_va = saa / wsum - grid_ma * grid_ma;
  double grid_mt = st / wsum, grid_vt = stt / wsum - grid_mt * grid_mt;

  // Monte Carlo SEs from batch means, on the raw series for the mean and on
  // the squared deviations for the variance.
  auto check_stat = [&](const std::vector<double>& x, double grid_mean,
                        double grid_var) {
    double m = mean_of(x);
    double se_m = batch_se(x, 40);
    CHECK(std::abs(m - grid_mean) <= 4.0 * se_m);
    std::vector<double> dev2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      dev2[i] = (x[i] - m) * (x[i] - m);
    double v = mean_of(dev2);
    double se_v = batch_se(dev2, 40);
    CHECK(std::abs(v - grid_var) <= 4.0 * se_v);
  };
  check_stat(alpha, grid_ma, grid_va);
  check_stat(tau2, grid_mt, grid_vt);

  // Sanity on the posterior's location: 14/20 successes pull alpha up, but
  // the tight prior keeps the shrunken mean well below the raw MLE.
  CHECK(grid_ma > 0.02);
  CHECK(grid_ma < 0.4);
}

TEST_CASE("marginal and successive-conditional simulators agree (geweke)") {
  HyperParams hyper;
  const int N = 2, k = 1, d = 1;
  Eigen::MatrixXd X(N, k), M(3, d);
  X << 0.8, -0.6;
  M << 0.2, 0.5, 0.9;
  History h;
  h.append_step(1, {0, 1}, {1, 0}, {0, 0});
  h.append_step(2, {1, 0}, {1, 0}, {0, 0});
  h.append_step(3, {0, 1}, {0, 1}, {0, 0});
  DesignData data = build_design(h, X, M);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) REQUIRE(data.bucket[s][a].size() > 0);

  auto stats = [&](const PosteriorDraw& dr, const DesignData& dd,
                   std::vector<std::vector<double>>& acc) {
    double g[12] = {dr.b0,
                    dr.b0 * dr.b0,
                    dr.mu_beta[0],
                    dr.mu_beta[0] * dr.mu_beta[0],
                    dr.beta[0][0][0],
                    dr.beta[0][0][0] * dr.beta[0][0][0],
                    dr.eta[0][0][0],
                    dr.eta[0][0][0] * dr.eta[0][0][0],
                    dr.alpha(0, 0),
                    dr.alpha(0, 0) * dr.alpha(0, 0),
                    dr.var_alpha[0][0],
                    mean_y(dd)};
    for (int j = 0; j < 12; ++j) acc[j].push_back(g[j]);
  };

  const int m1 = 20000, m2 = 40000;
  std::vector<std::vector<double>> mc(12), sc(12);

  Rng rng1(44);
  DesignData d1 = data;
  for (int r = 0; r < m1; ++r) {
    PosteriorDraw dr = prior_draw(hyper, N, k, d, rng1);
    redraw_y(d1, dr, rng1);
    stats(dr, d1, mc);
  }

  Rng rng2(45);
  DesignData d2 = data;
  ChainState chain;
  init_from_prior(chain, d2, hyper, rng2);
  redraw_y(d2, chain.draw, rng2);
  for (int r = 0; r < m2; ++r) {
    gibbs_sweep(chain, d2, hyper, rng2);
    redraw_y(d2, chain.draw, rng2);
    stats(chain.draw, d2, sc);
  }

  int ok4 = 0;
  for (int j = 0; j < 12; ++j) {
    CAPTURE(j);
    double z = (mean_of(mc[j]) - mean_of(sc[j])) /
               std::sqrt(std::pow(batch_se(mc[j], 40), 2) +
                         std::pow(batch_se(sc[j], 40), 2));
    CHECK(std::abs(z) < 6.0);
    if (std::abs(z) < 4.0) ++ok4;
  }
  CHECK(ok4 >= 10);
}

TEST_CASE("all-success data pushes the random effect upward") {
  HyperParams hyper;
  Eigen::MatrixXd X(1, 0), M(40, 0);
  History h;
  for (int t = 1; t <= 30; ++t) h.append_step(t, {0}, {0}, {1});
  DesignData data = build_design(h, X, M);
  Rng rng(46);
  ChainState chain;
  init_from_prior(chain, data, hyper, rng);
  for (int it = 0; it < 200; ++it) gibbs_sweep(chain, data, hyper, rng);
  double s = 0;
  const int keep = 2000;
  for (int it = 0; it < keep; ++it) {
    gibbs_sweep(chain, data, hyper, rng);
    s += chain.draw.alpha(0, 0);
  }
  double m = s / keep;
  CHECK(m > 0.05);   // data pulls up...
  CHECK(m < 0.60);   // ...but the N(0, ~0.01) prior shrinks hard
}

TEST_CASE("posterior sampling is reproducible from the seed") {
  HyperParams hyper;
  Eigen::MatrixXd X(2, 1), M(3, 1);
  X << 0.4, -0.4;
  M << 0.2, 0.5, 0.8;
  History h;
  h.append_step(1, {0, 1}, {1, 0}, {1, 0});
  h.append_step(2, {1, 0}, {0, 1}, {1, 1});
  DesignData data = build_design(h, X, M);
  McmcConfig cfg;
  cfg.n_warmup = 50;
  Rng r1(47), r2(47);
  PosteriorDraw a = posterior_sample(data, hyper, cfg, r1);
  PosteriorDraw b = posterior_sample(data, hyper, cfg, r2);
  CHECK(a.b0 == b.b0);
  CHECK(a.alpha == b.alpha);
  CHECK(a.mu_beta == b.mu_beta);
  for (int s = 0; s < 2; ++s)
    for (int x = 0; x < 2; ++x) {
      CHECK(a.beta[s][x] == b.beta[s][x]);
      CHECK(a.eta[s][x] == b.eta[s][x]);
      CHECK(a.var_alpha[s][x] == b.var_alpha[s][x]);
    }
}
