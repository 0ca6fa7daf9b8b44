#include "navshift/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "navshift/rng.hpp"

namespace navshift {

double success_rate(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw std::invalid_argument("success_rate: empty trial list");
  double s = 0.0;
  for (const auto& t : trials) s += t.success ? 1.0 : 0.0;
  return s / static_cast<double>(trials.size());
}

double spl(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw std::invalid_argument("spl: empty trial list");
  double s = 0.0;
  for (const auto& t : trials) {
    if (t.optimal_length <= 0.0)
      throw std::invalid_argument("spl: optimal_length must be > 0");
    if (t.success) s += t.optimal_length / std::max(t.actual_length, t.optimal_length);
  }
  return s / static_cast<double>(trials.size());
}

double empirical_error(
    const std::function<Action(const std::vector<double>&)>& predict,
    const std::vector<std::pair<std::vector<double>, Action>>& labeled) {
  if (labeled.empty()) throw std::invalid_argument("empirical_error: empty sample list");
  int wrong = 0;
  for (const auto& [f, a] : labeled) wrong += predict(f) != a;
  return static_cast<double>(wrong) / static_cast<double>(labeled.size());
}

namespace {

double softplus(double t) {  // ln(1 + e^t), stable
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

struct Standardized {
  std::vector<std::vector<double>> rows;  // kept dims only
  std::vector<double> mean, scale;
  std::vector<int> kept;
};

Standardized standardize_pooled(const DomainSamples& s, const DomainSamples& t) {
  const std::size_t dim = s.features.front().size();
  const std::size_t n = s.features.size() + t.features.size();
  Standardized out;
  out.mean.assign(dim, 0.0);
  out.scale.assign(dim, 1.0);
  std::vector<double> var(dim, 0.0);
  auto accumulate_mean = [&](const DomainSamples& d) {
    for (const auto& row : d.features) {
      if (row.size() != dim)
        throw std::invalid_argument("domain samples: inconsistent feature dimension");
      for (std::size_t j = 0; j < dim; ++j) out.mean[j] += row[j];
    }
  };
  accumulate_mean(s);
  accumulate_mean(t);
  for (double& m : out.mean) m /= static_cast<double>(n);
  auto accumulate_var = [&](const DomainSamples& d) {
    for (const auto& row : d.features)
      for (std::size_t j = 0; j < dim; ++j) var[j] += sq(row[j] - out.mean[j]);
  };
  accumulate_var(s);
  accumulate_var(t);
  for (std::size_t j = 0; j < dim; ++j) {
    var[j] /= static_cast<double>(n);
    if (var[j] >= 1e-12) {
      out.kept.push_back(static_cast<int>(j));
      out.scale[j] = std::sqrt(var[j]);
    }
  }
  out.rows.reserve(n);
  auto project = [&](const DomainSamples& d) {
    for (const auto& row : d.features) {
      std::vector<double> r(out.kept.size());
      for (std::size_t k = 0; k < out.kept.size(); ++k) {
        const auto j = static_cast<std::size_t>(out.kept[k]);
        r[k] = (row[j] - out.mean[j]) / out.scale[j];
      }
      out.rows.push_back(std::move(r));
    }
  };
  project(s);
  project(t);
  return out;
}

// Mean logistic loss + (l2/2)|w|^2 over standardized rows; labels: first
// n_source rows are the source class (y = 1).
double logistic_loss(const std::vector<std::vector<double>>& rows, std::size_t n_source,
                     const std::vector<double>& w, double b, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z = b;
    const auto& r = rows[i];
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * r[j];
    // -y ln p - (1-y) ln(1-p) == softplus(z) - y*z
    loss += softplus(z) - (i < n_source ? z : 0.0);
  }
  loss /= static_cast<double>(rows.size());
  double wn = 0.0;
  for (double v : w) wn += v * v;
  return loss + 0.5 * l2 * wn;
}

}  // namespace

double LinearDomainClassifier::score(const std::vector<double>& y) const {
  double z = b;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto j = static_cast<std::size_t>(kept[k]);
    if (j >= y.size())
      throw std::invalid_argument("classifier: feature dimension mismatch");
    z += w[k] * ((y[j] - mean[j]) / scale[j]);
  }
  return z;
}

LinearDomainClassifier fit_domain_classifier(const DomainSamples& source,
                                             const DomainSamples& target,
                                             const ClassifierConfig& cfg) {
  if (source.features.empty() || target.features.empty())
    throw std::invalid_argument("fit_domain_classifier: empty domain sample set");
  if (source.features.front().size() != target.features.front().size())
    throw std::invalid_argument("fit_domain_classifier: feature dimension mismatch");
  if (cfg.epochs < 1 || cfg.lr <= 0.0 || cfg.l2 < 0.0)
    throw ConfigError("fit_domain_classifier: bad config");

  Standardized st = standardize_pooled(source, target);
  const std::size_t n_source = source.features.size();
  const std::size_t n = st.rows.size();
  const std::size_t d = st.kept.size();

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double loss = logistic_loss(st.rows, n_source, w, b, cfg.l2);
  std::vector<double> gw(d);
  std::vector<double> wc(d);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      const auto& r = st.rows[i];
      for (std::size_t j = 0; j < d; ++j) z += w[j] * r[j];
      const double resid = sigmoid(z) - (i < n_source ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) gw[j] += resid * r[j];
      gb += resid;
    }
    const double inv = 1.0 / static_cast<double>(n);
    double gnorm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      gw[j] = gw[j] * inv + cfg.l2 * w[j];
      gnorm2 += gw[j] * gw[j];
    }
    gb *= inv;
    gnorm2 += gb * gb;
    if (gnorm2 < 1e-24) break;  // converged

    // Backtracking keeps full-batch descent stable on correlated features.
    double step = cfg.lr;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < d; ++j) wc[j] = w[j] - step * gw[j];
      const double bc = b - step * gb;
      const double cand = logistic_loss(st.rows, n_source, wc, bc, cfg.l2);
      if (cand <= loss - 1e-4 * step * gnorm2) {
        w.swap(wc);
        b = bc;
        loss = cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction progress left
  }

  LinearDomainClassifier clf;
  clf.w = std::move(w);
  clf.b = b;
  clf.mean = std::move(st.mean);
  clf.scale = std::move(st.scale);
  clf.kept = std::move(st.kept);
  return clf;
}

namespace {

std::vector<std::size_t> trimmed_indices(std::size_t n, std::size_t keep, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (keep < n) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

double classifier_err(const LinearDomainClassifier& clf, const DomainSamples& source,
                      const DomainSamples& target, std::uint64_t subsample_seed) {
  if (source.features.empty() || target.features.empty())
    throw std::invalid_argument("classifier_err: empty domain sample set");
  if (source.features.front().size() != target.features.front().size())
    throw std::invalid_argument("classifier_err: feature dimension mismatch");
  const std::size_t m = std::min(source.features.size(), target.features.size());
  const auto s_idx = trimmed_indices(source.features.size(), m, seed_combine(subsample_seed, 1));
  const auto t_idx = trimmed_indices(target.features.size(), m, seed_combine(subsample_seed, 2));
  std::size_t wrong = 0;
  for (const auto i : s_idx) wrong += clf.predict_source(source.features[i]) ? 0 : 1;
  for (const auto i : t_idx) wrong += clf.predict_source(target.features[i]) ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(2 * m);
}

ADistanceResult a_distance(const DomainSamples& source, const DomainSamples& target,
                           const ClassifierConfig& cfg) {
  ADistanceResult res;
  res.m_source = static_cast<int>(source.features.size());
  res.m_target = static_cast<int>(target.features.size());
  res.m_used = static_cast<int>(std::min(source.features.size(), target.features.size()));
  res.classifier = fit_domain_classifier(source, target, cfg);
  res.err_raw = classifier_err(res.classifier, source, target);
  res.err_min = std::min(res.err_raw, 1.0 - res.err_raw);
  res.d_a = 2.0 * (1.0 - 2.0 * res.err_min);
  return res;
}

void BoundInputs::validate() const {
  if (eps_s_hat < 0.0 || eps_s_hat > 1.0)
    throw std::invalid_argument("bound: eps_s_hat must be in [0, 1]");
  if (d_a < 0.0 || d_a > 2.0) throw std::invalid_argument("bound: d_a must be in [0, 2]");
  if (lambda < 0.0) throw std::invalid_argument("bound: lambda must be >= 0");
  if (d < 1) throw std::invalid_argument("bound: VC dimension must be >= 1");
  if (m < d) throw std::invalid_argument("bound: m must be >= d");
  if (m_prime < 2) throw std::invalid_argument("bound: m_prime must be >= 2");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("bound: delta must be in (0, 1)");
}

BoundTerms bound_terms(const BoundInputs& inp) {
  inp.validate();
  BoundTerms t;
  t.eps_s_hat = inp.eps_s_hat;
  t.d_a = inp.d_a;
  t.lambda = inp.lambda;
  const double d = static_cast<double>(inp.d);
  const double m = static_cast<double>(inp.m);
  const double mp = static_cast<double>(inp.m_prime);
  const double log_conf = std::log(4.0 / inp.delta);
  t.vc_term = (4.0 / m) * std::sqrt(d * std::log(2.0 * std::exp(1.0) * m / d) + log_conf);
  t.sample_term = 4.0 * std::sqrt((d * std::log(2.0 * mp) + log_conf) / mp);
  t.value = t.eps_s_hat + t.d_a + t.lambda + t.vc_term + t.sample_term;
  return t;
}

double generalization_bound(const BoundInputs& inp) { return bound_terms(inp).value; }

double compounding_cost(long horizon, double eps_t) {
  if (horizon < 1) throw std::invalid_argument("compounding_cost: horizon must be >= 1");
  if (eps_t < 0.0) throw std::invalid_argument("compounding_cost: eps_t must be >= 0");
  return static_cast<double>(horizon) * static_cast<double>(horizon) * eps_t;
}

void JointTable::validate() const {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("joint table: alphabet sizes must be >= 1");
  if (p.size() != static_cast<std::size_t>(nx) * ny * nz)
    throw std::invalid_argument("joint table: entry count mismatch");
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("joint table: negative probability");
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("joint table: probabilities must sum to 1");
}

namespace {

inline double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

EntropyReport markov_chain_report(const JointTable& joint) {
  joint.validate();
  const int nx = joint.nx, ny = joint.ny, nz = joint.nz;

  std::vector<double> pxy(static_cast<std::size_t>(nx) * ny, 0.0);
  std::vector<double> pyz(static_cast<std::size_t>(ny) * nz, 0.0);
  std::vector<double> pxz(static_cast<std::size_t>(nx) * nz, 0.0);
  std::vector<double> px(static_cast<std::size_t>(nx), 0.0);
  std::vector<double> py(static_cast<std::size_t>(ny), 0.0);
  std::vector<double> pz(static_cast<std::size_t>(nz), 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const double v = joint.at(x, y, z);
        pxy[static_cast<std::size_t>(x) * ny + y] += v;
        pyz[static_cast<std::size_t>(y) * nz + z] += v;
        pxz[static_cast<std::size_t>(x) * nz + z] += v;
        px[static_cast<std::size_t>(x)] += v;
        py[static_cast<std::size_t>(y)] += v;
        pz[static_cast<std::size_t>(z)] += v;
      }

  // Conditional independence X -|- Z | Y, division-free form.
  double violation = 0.0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const double lhs = joint.at(x, y, z) * py[static_cast<std::size_t>(y)];
        const double rhs = pxy[static_cast<std::size_t>(x) * ny + y] *
                           pyz[static_cast<std::size_t>(y) * nz + z];
        violation = std::max(violation, std::fabs(lhs - rhs));
      }
  if (violation > 1e-9)
    throw std::invalid_argument(
        "markov_chain_report: table does not factor as a chain (max violation " +
        std::to_string(violation) + ")");

  EntropyReport r;
  for (double v : py) r.h_y -= plogp(v);
  for (double v : pz) r.h_z -= plogp(v);

  double h_xz = 0.0, h_x = 0.0, h_xy = 0.0, h_yz = 0.0;
  for (double v : pxz) h_xz -= plogp(v);
  for (double v : px) h_x -= plogp(v);
  for (double v : pxy) h_xy -= plogp(v);
  for (double v : pyz) h_yz -= plogp(v);

  r.h_z_given_x = h_xz - h_x;
  r.h_z_given_y = h_yz - r.h_y;
  r.h_y_given_x = h_xy - h_x;
  r.i_zy = r.h_z - r.h_z_given_y;
  r.log_z = std::log(static_cast<double>(nz));
  r.bound_rhs = r.log_z - r.i_zy + r.h_y;
  return r;
}

}  // namespace navshift
