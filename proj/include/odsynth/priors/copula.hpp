#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "odsynth/core/dataset.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/priors/ranges.hpp"

namespace odsynth::copula {

enum class MarginalFamily { gaussian, beta, exponential, student_t, power_law, log_logistic };
enum class CopulaKind { gaussian, vine };
enum class PairFamily { gaussian, student, clayton, gumbel, frank, joe };
enum class DependenceMode { inverse_corr, random_permutation };

inline std::string_view to_string(MarginalFamily f) {
  switch (f) {
    case MarginalFamily::gaussian: return "gaussian";
    case MarginalFamily::beta: return "beta";
    case MarginalFamily::exponential: return "exponential";
    case MarginalFamily::student_t: return "student_t";
    case MarginalFamily::power_law: return "power_law";
    case MarginalFamily::log_logistic: return "log_logistic";
  }
  return "gaussian";
}

inline std::string_view to_string(PairFamily f) {
  switch (f) {
    case PairFamily::gaussian: return "gaussian";
    case PairFamily::student: return "student";
    case PairFamily::clayton: return "clayton";
    case PairFamily::gumbel: return "gumbel";
    case PairFamily::frank: return "frank";
    case PairFamily::joe: return "joe";
  }
  return "gaussian";
}

inline std::string_view to_string(CopulaKind k) { return k == CopulaKind::gaussian ? "gaussian" : "vine"; }

inline std::string_view to_string(DependenceMode m) {
  return m == DependenceMode::inverse_corr ? "inverse_corr" : "random_permutation";
}

inline constexpr MarginalFamily kAllMarginals[] = {MarginalFamily::gaussian,  MarginalFamily::beta,
                                                   MarginalFamily::exponential, MarginalFamily::student_t,
                                                   MarginalFamily::power_law, MarginalFamily::log_logistic};
inline constexpr PairFamily kAllPairs[] = {PairFamily::gaussian, PairFamily::student, PairFamily::clayton,
                                           PairFamily::gumbel,   PairFamily::frank,   PairFamily::joe};

// shape: Gaussian sigma / Beta a / Exponential rate / Student df / power-law a
// / log-logistic c. shape2: Beta b. Output is loc + scale * base quantile,
// except Gaussian (mean loc, sd shape) and Exponential (scale = 1/rate).
struct MarginalSpec {
  MarginalFamily family = MarginalFamily::gaussian;
  double shape = 1.0;
  double shape2 = 1.0;
  double loc = 0.0;
  double scale = 1.0;

  friend bool operator==(const MarginalSpec&, const MarginalSpec&) = default;
};

inline nlohmann::json to_json(const MarginalSpec& m) {
  return {{"family", to_string(m.family)}, {"shape", m.shape}, {"shape2", m.shape2}, {"loc", m.loc}, {"scale", m.scale}};
}

namespace detail {

// Root of a monotone increasing cdf(x) = p to 1e-10 in x. The bracket
// starts tight around `guess` and widens until it straddles the root.
template <typename Cdf>
double invert_cdf(Cdf&& cdf, double p, double guess, double lo_limit, double hi_limit) {
  auto f = [&](double x) { return cdf(x) - p; };
  double step = 1e-6 * (1.0 + std::abs(guess));
  double lo = std::max(lo_limit, guess - step), hi = std::min(hi_limit, guess + step);
  while (f(lo) > 0.0 && lo > lo_limit) {
    step *= 4.0;
    lo = std::max(lo_limit, guess - step);
  }
  while (f(hi) < 0.0 && hi < hi_limit) {
    step *= 4.0;
    hi = std::min(hi_limit, guess + step);
  }
  if (f(lo) >= 0.0) return lo;
  if (f(hi) <= 0.0) return hi;
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-10; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double student_cdf(double x, double df) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

inline double student_quantile_fast(double p, double df) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

inline double student_quantile(double p, double df) {
  constexpr double big = std::numeric_limits<double>::max();
  return invert_cdf([df](double x) { return student_cdf(x, df); }, p, student_quantile_fast(p, df), -big, big);
}

inline double beta_quantile(double p, double a, double b) {
  auto cdf = [a, b](double x) { return boost::math::ibeta(a, b, std::clamp(x, 0.0, 1.0)); };
  return invert_cdf(cdf, p, boost::math::ibeta_inv(a, b, p), 0.0, 1.0);
}

}  // namespace detail

inline double inverse_marginal(double u, const MarginalSpec& m) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_marginal: u must lie in (0,1)");
  switch (m.family) {
    case MarginalFamily::gaussian: return m.loc + m.shape * detail::normal_quantile(u);
    case MarginalFamily::beta: return m.loc + m.scale * detail::beta_quantile(u, m.shape, m.shape2);
    case MarginalFamily::exponential: return m.loc + (1.0 / m.shape) * (-std::log1p(-u));
    case MarginalFamily::student_t: return m.loc + m.scale * detail::student_quantile(u, m.shape);
    case MarginalFamily::power_law: return m.loc + m.scale * std::pow(1.0 - u, -1.0 / m.shape);
    case MarginalFamily::log_logistic: return m.loc + m.scale * std::pow(u / (1.0 - u), 1.0 / m.shape);
  }
  return 0.0;
}

// Forward CDF, used by goodness-of-fit tests.
inline double marginal_cdf(double x, const MarginalSpec& m) {
  switch (m.family) {
    case MarginalFamily::gaussian: return detail::normal_cdf((x - m.loc) / m.shape);
    case MarginalFamily::beta:
      return boost::math::ibeta(m.shape, m.shape2, std::clamp((x - m.loc) / m.scale, 0.0, 1.0));
    case MarginalFamily::exponential: return x <= m.loc ? 0.0 : -std::expm1(-m.shape * (x - m.loc));
    case MarginalFamily::student_t: return detail::student_cdf((x - m.loc) / m.scale, m.shape);
    case MarginalFamily::power_law: {
      const double z = (x - m.loc) / m.scale;
      return z <= 1.0 ? 0.0 : 1.0 - std::pow(z, -m.shape);
    }
    case MarginalFamily::log_logistic: {
      const double z = (x - m.loc) / m.scale;
      if (z <= 0.0) return 0.0;
      const double zc = std::pow(z, m.shape);
      return zc / (1.0 + zc);
    }
  }
  return 0.0;
}

// One pair-copula of the first vine tree.
struct PairCopula {
  PairFamily family = PairFamily::gaussian;
  double param = 0.0;  // rho for gaussian/student, theta otherwise
  double df = 4.0;     // student only
  double tau = 0.0;

  friend bool operator==(const PairCopula&, const PairCopula&) = default;
};

inline nlohmann::json to_json(const PairCopula& p) {
  return {{"family", to_string(p.family)}, {"param", p.param}, {"df", p.df}, {"tau", p.tau}};
}

namespace detail {

// Kendall's tau of the Frank copula via the first Debye function.
inline double frank_tau(double theta) {
  if (std::abs(theta) < 1e-8) return 0.0;
  auto integrand = [](double t) { return t < 1e-12 ? 1.0 : t / std::expm1(t); };
  const double debye = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, theta) / theta;
  return 1.0 - 4.0 / theta * (1.0 - debye);
}

inline double joe_tau(double theta) {
  double sum = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    const double kk = k;
    const double term = 1.0 / (kk * (theta * kk + 2.0) * (theta * (kk - 1.0) + 2.0));
    sum += term;
    if (term < 1e-15) break;
  }
  return 1.0 - 4.0 * sum;
}

template <typename F>
double bisect_increasing(F&& f, double target, double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Dependence parameter giving Kendall's tau for the family.
inline double param_from_tau(PairFamily f, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("param_from_tau: tau must lie in (0,1)");
  switch (f) {
    case PairFamily::gaussian:
    case PairFamily::student: return std::sin(std::numbers::pi * tau / 2.0);
    case PairFamily::clayton: return 2.0 * tau / (1.0 - tau);
    case PairFamily::gumbel: return 1.0 / (1.0 - tau);
    case PairFamily::frank: return detail::bisect_increasing(detail::frank_tau, tau, 1e-6, 200.0);
    case PairFamily::joe: return detail::bisect_increasing(detail::joe_tau, tau, 1.0, 200.0);
  }
  return 0.0;
}

// h(u | v) = dC(u, v)/dv.
inline double h_function(const PairCopula& p, double u, double v) {
  const double th = p.param;
  switch (p.family) {
    case PairFamily::gaussian: {
      const double x = detail::normal_quantile(u), y = detail::normal_quantile(v);
      return detail::normal_cdf((x - th * y) / std::sqrt(1.0 - th * th));
    }
    case PairFamily::student: {
      const double x = detail::student_quantile_fast(u, p.df), y = detail::student_quantile_fast(v, p.df);
      const double s = std::sqrt((p.df + y * y) * (1.0 - th * th) / (p.df + 1.0));
      return detail::student_cdf((x - th * y) / s, p.df + 1.0);
    }
    case PairFamily::clayton:
      return std::pow(v, -th - 1.0) * std::pow(std::pow(u, -th) + std::pow(v, -th) - 1.0, -1.0 - 1.0 / th);
    case PairFamily::gumbel: {
      const double lu = std::pow(-std::log(u), th), lv = std::pow(-std::log(v), th);
      const double a = std::pow(lu + lv, 1.0 / th);
      return std::exp(-a) / v * std::pow(-std::log(v), th - 1.0) * std::pow(lu + lv, 1.0 / th - 1.0);
    }
    case PairFamily::frank: {
      const double eu = std::expm1(-th * u), ev = std::expm1(-th * v), e1 = std::expm1(-th);
      return (eu * ev + eu) / (eu * ev + e1);
    }
    case PairFamily::joe: {
      const double a = std::pow(1.0 - u, th), b = std::pow(1.0 - v, th);
      return std::pow(1.0 - v, th - 1.0) * (1.0 - a) * std::pow(a + b - a * b, 1.0 / th - 1.0);
    }
  }
  return u;
}

// Solves h(u | v) = w for u.
inline double h_inverse(const PairCopula& p, double w, double v) {
  const double th = p.param;
  switch (p.family) {
    case PairFamily::gaussian: {
      const double z = detail::normal_quantile(w) * std::sqrt(1.0 - th * th) + th * detail::normal_quantile(v);
      return detail::normal_cdf(z);
    }
    case PairFamily::student: {
      const double y = detail::student_quantile_fast(v, p.df);
      const double s = std::sqrt((p.df + y * y) * (1.0 - th * th) / (p.df + 1.0));
      return detail::student_cdf(detail::student_quantile_fast(w, p.df + 1.0) * s + th * y, p.df);
    }
    case PairFamily::clayton: {
      const double inner = std::pow(w * std::pow(v, th + 1.0), -th / (1.0 + th)) + 1.0 - std::pow(v, -th);
      return std::pow(inner, -1.0 / th);
    }
    case PairFamily::frank: {
      const double ev = std::exp(-th * v);
      return -std::log1p(-(-std::expm1(-th)) / ((1.0 / w - 1.0) * ev + 1.0)) / th;
    }
    case PairFamily::gumbel:
    case PairFamily::joe: {
      auto f = [&](double u) { return h_function(p, u, v) - w; };
      double lo = 1e-300, hi = 1.0 - 1e-16;
      if (f(lo) >= 0.0) return lo;
      if (f(hi) <= 0.0) return hi;
      std::uintmax_t iters = 200;
      auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13; };
      const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
      return 0.5 * (r.first + r.second);
    }
  }
  return w;
}

struct CopulaSpec {
  CopulaKind kind = CopulaKind::gaussian;
  Matrix correlation;                   // gaussian
  std::vector<std::size_t> independent;  // gaussian: decoupled coordinates
  std::vector<std::size_t> order;        // vine: variable order of the D-vine
  std::vector<PairCopula> pairs;         // vine: pairs[i] links order[i], order[i+1]
  std::vector<MarginalSpec> marginals;

  std::size_t dim() const noexcept { return marginals.size(); }
};

inline nlohmann::json to_json(const CopulaSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"dim", s.dim()}};
  auto& m = j["marginals"] = nlohmann::json::array();
  for (const auto& mg : s.marginals) m.push_back(to_json(mg));
  if (s.kind == CopulaKind::gaussian) {
    j["independent"] = s.independent;
  } else {
    j["order"] = s.order;
    auto& p = j["pairs"] = nlohmann::json::array();
    for (const auto& pc : s.pairs) p.push_back(to_json(pc));
  }
  return j;
}

struct CopulaConfig {
  IntRange dim{2, 100};
  double gaussian_probability = 0.5;
  RealRange alpha_indp{0.1, 0.3};
  std::vector<MarginalFamily> marginals{std::begin(kAllMarginals), std::end(kAllMarginals)};
  std::vector<PairFamily> pair_families{std::begin(kAllPairs), std::end(kAllPairs)};
  RealRange gauss_mean{-1.0, 1.0};
  RealRange gauss_variance{0.5, 1.0};
  RealRange beta_a{1.0, 5.0};
  RealRange beta_b{1.0, 5.0};
  double beta_loc = -5.0, beta_scale = 10.0;
  RealRange exp_rate{0.5, 1.0};
  double exp_loc = -5.0;
  RealRange t_df{3.0, 10.0};
  RealRange t_loc{-1.0, 1.0};
  RealRange t_scale{0.5, 1.0};
  RealRange power_a{0.5, 5.0};
  double power_loc = -5.0, power_scale = 5.0;
  RealRange loglogistic_c{0.5, 5.0};
  double loglogistic_loc = -5.0, loglogistic_scale = 5.0;
  RealRange kendall_tau{0.1, 0.7};
  RealRange vine_student_df{3.0, 10.0};
  double loading_jitter = 0.1;
  RealRange gamma_perturb{0.02, 0.2};
  RealRange u_small{0.1, 0.3};
  RealRange u_large{0.7, 0.9};
  std::vector<DependenceMode> dependence_modes{DependenceMode::inverse_corr, DependenceMode::random_permutation};
  RealRange contamination{0.02, 0.2};

  void validate() const {
    require_range(dim.lo >= 2 && dim.lo <= dim.hi, "copula dim >= 2");
    require_range(gaussian_probability >= 0.0 && gaussian_probability <= 1.0, "copula gaussian probability in [0,1]");
    require_range(alpha_indp.within(0.0, 1.0), "copula alpha_indp within [0,1]");
    require_range(!marginals.empty() && !pair_families.empty(), "copula family pools non-empty");
    require_range(gauss_variance.lo > 0.0, "copula gaussian variance > 0");
    require_range(beta_a.lo > 0.0 && beta_b.lo > 0.0, "copula beta shapes > 0");
    require_range(exp_rate.lo > 0.0, "copula exponential rate > 0");
    require_range(t_df.lo > 0.0 && t_scale.lo > 0.0 && vine_student_df.lo > 0.0, "copula student parameters > 0");
    require_range(power_a.lo > 0.0 && loglogistic_c.lo > 0.0, "copula tail shapes > 0");
    require_range(kendall_tau.lo > 0.0 && kendall_tau.hi < 1.0, "copula kendall tau within (0,1)");
    require_range(gamma_perturb.within(0.0, 1.0), "copula gamma_perturb within [0,1]");
    require_range(u_small.within(0.0, 1.0) && u_large.within(0.0, 1.0) && u_small.lo > 0.0 && u_large.hi < 1.0,
                  "copula u_perturb inside (0,1)");
    require_range(!dependence_modes.empty(), "copula dependence modes non-empty");
    require_range(contamination.within(0.0, 1.0), "copula contamination within [0,1]");
  }
};

inline MarginalSpec sample_marginal(const CopulaConfig& cfg, MarginalFamily f, Rng& rng) {
  MarginalSpec m;
  m.family = f;
  switch (f) {
    case MarginalFamily::gaussian:
      m.loc = cfg.gauss_mean.draw(rng);
      m.shape = std::sqrt(cfg.gauss_variance.draw(rng));
      break;
    case MarginalFamily::beta:
      m.shape = cfg.beta_a.draw(rng);
      m.shape2 = cfg.beta_b.draw(rng);
      m.loc = cfg.beta_loc;
      m.scale = cfg.beta_scale;
      break;
    case MarginalFamily::exponential:
      m.shape = cfg.exp_rate.draw(rng);
      m.loc = cfg.exp_loc;
      break;
    case MarginalFamily::student_t:
      m.shape = cfg.t_df.draw(rng);
      m.loc = cfg.t_loc.draw(rng);
      m.scale = cfg.t_scale.draw(rng);
      break;
    case MarginalFamily::power_law:
      m.shape = cfg.power_a.draw(rng);
      m.loc = cfg.power_loc;
      m.scale = cfg.power_scale;
      break;
    case MarginalFamily::log_logistic:
      m.shape = cfg.loglogistic_c.draw(rng);
      m.loc = cfg.loglogistic_loc;
      m.scale = cfg.loglogistic_scale;
      break;
  }
  return m;
}

// Random factor-model correlation with a decoupled coordinate subset.
inline Matrix random_correlation(std::size_t d, double jitter, std::span<const std::size_t> independent, Rng& rng) {
  const std::size_t k = (d + 1) / 2;
  Eigen::MatrixXd l(d, k);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < k; ++j) l(i, j) = standard_normal(rng);
  Eigen::MatrixXd s = l * l.transpose();
  s.diagonal().array() += jitter;
  const Eigen::VectorXd inv = s.diagonal().array().sqrt().inverse();
  s = inv.asDiagonal() * s * inv.asDiagonal();
  for (auto i : independent)
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) s(i, j) = s(j, i) = 0.0;
  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = i == j ? 1.0 : 0.5 * (s(i, j) + s(j, i));
  return out;
}

inline double min_eigenvalue(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

inline CopulaSpec sample_copula_spec(const CopulaConfig& cfg, std::size_t d, const SeedPath& seed) {
  cfg.validate();
  if (d < 2) throw DomainError("sample_copula_spec: d must be >= 2");
  Rng rng = seed.rng();
  CopulaSpec s;
  s.kind = coin(rng, cfg.gaussian_probability) ? CopulaKind::gaussian : CopulaKind::vine;
  s.marginals.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto f = cfg.marginals[uniform_index(rng, cfg.marginals.size())];
    s.marginals.push_back(sample_marginal(cfg, f, rng));
  }
  if (s.kind == CopulaKind::gaussian) {
    const double alpha = cfg.alpha_indp.draw(rng);
    const auto n_ind = std::min<std::size_t>(d, static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(d))));
    s.independent = sorted_sample_without_replacement(rng, d, n_ind);
    s.correlation = random_correlation(d, cfg.loading_jitter, s.independent, rng);
  } else {
    s.order.resize(d);
    for (std::size_t j = 0; j < d; ++j) s.order[j] = j;
    shuffle(rng, s.order);
    for (std::size_t e = 0; e + 1 < d; ++e) {
      PairCopula p;
      p.family = cfg.pair_families[uniform_index(rng, cfg.pair_families.size())];
      p.tau = cfg.kendall_tau.draw(rng);
      p.df = cfg.vine_student_df.draw(rng);
      p.param = param_from_tau(p.family, p.tau);
      s.pairs.push_back(p);
    }
  }
  return s;
}

inline CopulaSpec sample_copula_spec(const CopulaConfig& cfg, const SeedPath& seed) {
  Rng rng = seed.child(0).rng();
  const auto d = static_cast<std::size_t>(cfg.dim.draw(rng));
  return sample_copula_spec(cfg, d, seed.child(1));
}

namespace detail {

inline double clamp_open(double u) {
  constexpr double lo = 1e-15;
  return std::clamp(u, lo, 1.0 - lo);
}

// Factor F with F F^T = C for positive semi-definite C (pivoted LDL^T).
inline Eigen::MatrixXd psd_factor(const Matrix& c) {
  const std::size_t d = c.rows();
  Eigen::MatrixXd e(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) e(i, j) = c(i, j);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(e);
  const Eigen::VectorXd dvec = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::MatrixXd f = ldlt.transpositionsP().transpose() * (l * dvec.asDiagonal());
  return f;
}

}  // namespace detail

inline Matrix sample_uniforms(const CopulaSpec& spec, std::size_t n, const SeedPath& seed) {
  const std::size_t d = spec.dim();
  Rng rng = seed.rng();
  Matrix u(n, d);
  if (spec.kind == CopulaKind::gaussian) {
    const Eigen::MatrixXd f = detail::psd_factor(spec.correlation);
    Eigen::VectorXd z(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) z(static_cast<Eigen::Index>(j)) = standard_normal(rng);
      const Eigen::VectorXd x = f * z;
      for (std::size_t j = 0; j < d; ++j) u(i, j) = detail::clamp_open(detail::normal_cdf(x(static_cast<Eigen::Index>(j))));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double prev = detail::clamp_open(uniform_open01(rng));
      u(i, spec.order[0]) = prev;
      for (std::size_t e = 0; e + 1 < d; ++e) {
        const double w = detail::clamp_open(uniform_open01(rng));
        prev = detail::clamp_open(h_inverse(spec.pairs[e], w, prev));
        u(i, spec.order[e + 1]) = prev;
      }
    }
  }
  return u;
}

inline Matrix apply_marginals(const CopulaSpec& spec, const Matrix& u) {
  Matrix x(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < u.cols(); ++j) x(i, j) = inverse_marginal(u(i, j), spec.marginals[j]);
  return x;
}

struct CopulaOutlierConfig {
  double gamma_perturb = 0.1;
  RealRange u_small{0.1, 0.3};
  RealRange u_large{0.7, 0.9};
  DependenceMode mode = DependenceMode::inverse_corr;
};

// Admissible count range [lo, hi) for dependence outliers.
inline std::pair<std::size_t, std::size_t> invcorr_range(std::size_t d) {
  const std::size_t lo = 1 + d / 3;
  const std::size_t hi = std::min(static_cast<std::size_t>(1 + (2 * d) / 3), d + 1);
  return {lo, std::max(hi, lo + 1)};
}

// Per row: max(1, ceil(gamma d)) coordinates replaced by a draw from the low
// or high band (fair coin per coordinate).
inline Matrix probabilistic_outliers(const Matrix& u, const CopulaOutlierConfig& cfg, const SeedPath& seed) {
  const std::size_t d = u.cols();
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.gamma_perturb * static_cast<double>(d) - 1e-12)), 1, d);
  Rng rng = seed.rng();
  Matrix out = u;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (auto j : sample_without_replacement(rng, d, count))
      out(i, j) = coin(rng) ? cfg.u_small.draw(rng) : cfg.u_large.draw(rng);
  }
  return out;
}

// Per row: k coordinates drawn from invcorr_range(d); inverse_corr maps them
// to 1 - u, random_permutation shuffles their values among themselves.
inline Matrix dependence_outliers(const Matrix& u, const CopulaOutlierConfig& cfg, const SeedPath& seed) {
  const std::size_t d = u.cols();
  const auto [lo, hi] = invcorr_range(d);
  Rng rng = seed.rng();
  Matrix out = u;
  std::vector<double> vals;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const auto k = std::min<std::size_t>(d, static_cast<std::size_t>(uniform_int(
                                                rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi - 1))));
    const auto dims = sample_without_replacement(rng, d, k);
    if (cfg.mode == DependenceMode::inverse_corr) {
      for (auto j : dims) out(i, j) = 1.0 - u(i, j);
    } else {
      vals.clear();
      for (auto j : dims) vals.push_back(u(i, j));
      shuffle(rng, vals);
      for (std::size_t t = 0; t < dims.size(); ++t) out(i, dims[t]) = vals[t];
    }
  }
  return out;
}

inline LabeledDataset generate_copula_dataset(const CopulaConfig& cfg, Archetype archetype, std::size_t n_in,
                                              std::size_t n_out, const SeedPath& seed) {
  if (archetype != Archetype::probabilistic && archetype != Archetype::dependence)
    throw ConfigError("copula archetype must be probabilistic or dependence");
  if (n_in + n_out == 0) throw DomainError("generate_copula_dataset: counts must not both be zero");
  const CopulaSpec spec = sample_copula_spec(cfg, seed.child(0));
  CopulaOutlierConfig ocfg;
  ocfg.u_small = cfg.u_small;
  ocfg.u_large = cfg.u_large;
  {
    Rng rng = seed.child(1).rng();
    ocfg.gamma_perturb = cfg.gamma_perturb.draw(rng);
    ocfg.mode = cfg.dependence_modes[uniform_index(rng, cfg.dependence_modes.size())];
  }
  const Matrix inliers = apply_marginals(spec, sample_uniforms(spec, n_in, seed.child(2)));
  DatasetMeta meta;
  meta.prior = PriorKind::copula;
  meta.archetype = archetype;
  meta.seed = seed;
  meta.hyperparameters = to_json(spec);
  meta.hyperparameters["power_law_form"] = "loc + scale * (1 - u)^(-1/a)";
  Matrix outliers(0, spec.dim());
  if (n_out > 0) {
    const Matrix base = sample_uniforms(spec, n_out, seed.child(3));
    if (archetype == Archetype::probabilistic) {
      outliers = apply_marginals(spec, probabilistic_outliers(base, ocfg, seed.child(4)));
      meta.hyperparameters["gamma_perturb"] = ocfg.gamma_perturb;
    } else {
      outliers = apply_marginals(spec, dependence_outliers(base, ocfg, seed.child(4)));
      meta.hyperparameters["dependence_mode"] = to_string(ocfg.mode);
    }
  }
  return assemble_dataset(inliers, outliers, std::move(meta), seed.child(5));
}

}  // namespace odsynth::copula
