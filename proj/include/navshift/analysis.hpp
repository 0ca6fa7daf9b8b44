#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "navshift/common.hpp"
#include "navshift/simulator.hpp"

namespace navshift {

struct TrialRecord {
  bool success = false;
  double optimal_length = 0.0;  // l*, must be > 0 for spl
  double actual_length = 0.0;   // l >= 0
};

double success_rate(const std::vector<TrialRecord>& trials);
// (1/N) sum s_i * l*_i / max(l_i, l*_i); each term <= 1, so spl <= sr.
double spl(const std::vector<TrialRecord>& trials);

// Fraction of samples where predict(features) != label (0-1 loss).
double empirical_error(
    const std::function<Action(const std::vector<double>&)>& predict,
    const std::vector<std::pair<std::vector<double>, Action>>& labeled);

struct DomainSamples {
  std::vector<std::vector<double>> features;  // uniform dimensionality
};

struct ClassifierConfig {
  int epochs = 300;    // accepted gradient steps
  double lr = 0.5;     // initial step, shrunk by backtracking
  double l2 = 1e-3;
};

// Logistic domain discriminator fitted on standardized features.  The
// standardization (pooled mean/scale, constant dims dropped) is part of
// the artifact so held-out samples get the identical transform.
struct LinearDomainClassifier {
  std::vector<double> w;      // over kept dims, standardized space
  double b = 0.0;
  std::vector<double> mean;   // full input dim
  std::vector<double> scale;  // full input dim (1 for dropped dims)
  std::vector<int> kept;      // dims with variance >= 1e-12

  double score(const std::vector<double>& y) const;
  bool predict_source(const std::vector<double>& y) const { return score(y) > 0.0; }
};

// Full-batch gradient descent with deterministic backtracking line search;
// zero init, so the fit is a pure function of the samples.
LinearDomainClassifier fit_domain_classifier(const DomainSamples& source,
                                             const DomainSamples& target,
                                             const ClassifierConfig& cfg);

// Mean 0-1 disagreement over the pooled 2m' samples.  Unequal sizes are
// trimmed to the smaller by seeded subsampling (recorded via m_used in
// a_distance results).
double classifier_err(const LinearDomainClassifier& clf, const DomainSamples& source,
                      const DomainSamples& target, std::uint64_t subsample_seed = 0xD15C);

struct ADistanceResult {
  double err_raw = 0.0;
  double err_min = 0.0;  // min(err, 1 - err)
  double d_a = 0.0;      // 2 * (1 - 2 * err_min), in [0, 2]
  LinearDomainClassifier classifier;
  int m_source = 0;
  int m_target = 0;
  int m_used = 0;  // per-domain count entering err after trimming
};

ADistanceResult a_distance(const DomainSamples& source, const DomainSamples& target,
                           const ClassifierConfig& cfg);

struct BoundInputs {
  double eps_s_hat = 0.0;  // empirical source error, [0, 1]
  double d_a = 0.0;        // [0, 2]
  double lambda = 0.0;     // joint-optimum error, >= 0
  long d = 1;              // VC dimension >= 1
  long m = 1;              // labeled source samples, >= d
  long m_prime = 2;        // unlabeled samples per domain, >= 2
  double delta = 0.05;     // (0, 1)

  void validate() const;  // throws std::invalid_argument
};

struct BoundTerms {
  double eps_s_hat = 0.0;
  double d_a = 0.0;
  double lambda = 0.0;
  double vc_term = 0.0;      // (4/m) sqrt(d ln(2em/d) + ln(4/delta))
  double sample_term = 0.0;  // 4 sqrt((d ln(2m') + ln(4/delta)) / m')
  double value = 0.0;
};

BoundTerms bound_terms(const BoundInputs& inp);
double generalization_bound(const BoundInputs& inp);

// Leading compounding-error term with unit constant: T^2 * eps_t.
double compounding_cost(long horizon, double eps_t);

// Finite joint distribution over X x Y x Z, x-major then y then z.
struct JointTable {
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> p;

  double at(int x, int y, int z) const {
    return p[(static_cast<std::size_t>(x) * ny + static_cast<std::size_t>(y)) * nz + z];
  }
  void validate() const;  // entries >= 0, total 1 within 1e-12
};

// All values in nats.
struct EntropyReport {
  double h_z_given_x = 0.0;
  double h_z_given_y = 0.0;
  double h_y_given_x = 0.0;
  double h_y = 0.0;
  double h_z = 0.0;
  double i_zy = 0.0;
  double log_z = 0.0;      // ln(alphabet size of Z)
  double bound_rhs = 0.0;  // log_z - i_zy + h_y
};

// Verifies the chain factorization p(x,y,z) p(y) = p(x,y) p(y,z) within
// 1e-9 (throws with the maximal violation), then computes the report by
// exhaustive summation.
EntropyReport markov_chain_report(const JointTable& joint);

}  // namespace navshift
