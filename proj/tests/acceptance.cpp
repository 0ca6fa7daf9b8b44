// Acceptance gate: one PASS/FAIL line per criterion on stdout, details on
// stderr, nonzero exit when anything fails.  Criteria 6, 7 and 9 share the
// same five seeded paper-analog runs plus one determinism rerun.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navshift/harness.hpp"

using namespace navshift;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Tally {
  int failures = 0;
  std::vector<std::string> lines;

  void record(int criterion, bool ok, const std::string& what) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s criterion %d: %s", ok ? "PASS" : "FAIL", criterion,
                  what.c_str());
    lines.push_back(buf);
    if (!ok) ++failures;
  }
};

double now_sec() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

std::vector<double*> param_ptrs(PolicyNet& net) {
  std::vector<double*> out;
  for (auto& w : net.weights)
    for (auto& v : w) out.push_back(&v);
  for (auto& b : net.biases)
    for (auto& v : b) out.push_back(&v);
  return out;
}

std::vector<double> grad_flat(const Gradients& g) {
  std::vector<double> out;
  for (const auto& w : g.weights) out.insert(out.end(), w.begin(), w.end());
  for (const auto& b : g.biases) out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool criterion_gradients(std::string& what) {
  Rng rng(0xACC1);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int feat = 2 + static_cast<int>(rng.uniform_int(8));
    std::vector<int> dims{feat};
    // trial 0 stays linear (no hidden layers), the degenerate case.
    const int hidden = trial == 0 ? 0 : static_cast<int>(rng.uniform_int(3));
    for (int h = 0; h < hidden; ++h) dims.push_back(2 + static_cast<int>(rng.uniform_int(7)));
    dims.push_back(3);
    PolicyNet net = init_policy(dims, rng.next_u64());
    // Zero-init biases can leave pre-activations exactly on the relu kink
    // (a sample that kills a whole layer feeds zeros forward); jitter all
    // parameters so every probe lands at a differentiable point.
    for (double* v : param_ptrs(net)) *v += rng.uniform(-0.2, 0.2);

    LabeledBatch batch;
    const int bs = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < bs; ++i) {
      std::vector<double> x(static_cast<std::size_t>(feat));
      for (auto& v : x) v = rng.normal();
      batch.emplace_back(std::move(x), static_cast<Action>(rng.uniform_int(3)));
    }

    const auto [loss, grads] = loss_and_grad(net, batch);
    (void)loss;
    const std::vector<double> ga = grad_flat(grads);
    auto ptrs = param_ptrs(net);

    const double h = 1e-5;
    const std::size_t probes = std::min<std::size_t>(ptrs.size(), 40);
    for (std::size_t p = 0; p < probes; ++p) {
      const std::size_t i = ptrs.size() <= 40 ? p : rng.uniform_int(ptrs.size());
      const double saved = *ptrs[i];
      *ptrs[i] = saved + h;
      const double lp = loss_and_grad(net, batch).first;
      *ptrs[i] = saved - h;
      const double lm = loss_and_grad(net, batch).first;
      *ptrs[i] = saved;
      const double gn = (lp - lm) / (2.0 * h);
      const double rel = std::fabs(ga[i] - gn) / std::max({std::fabs(ga[i]), std::fabs(gn), 1e-6});
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "analytic vs central-difference gradients, %d entries, max rel err %.2e",
                checked, worst);
  what = buf;
  return worst < 1e-4;
}

// ---------------------------------------------------------------- criterion 2

constexpr int kHeadings = 24;

int heading_of(double heading) {
  const long k = std::lround(heading / kTurnAngle);
  return static_cast<int>(((k % kHeadings) + kHeadings) % kHeadings);
}

// Label-correcting relaxation over (cell, heading) states; forward costs 5
// units and only expands along the four axis headings, turns cost 1 unit.
long bellman_cost(const WorldMap& m, const Pose& start, const Vec2& goal) {
  const int n = m.nx * m.ny * kHeadings;
  const long inf = std::numeric_limits<long>::max() / 4;
  std::vector<long> dist(static_cast<std::size_t>(n), inf);
  const int six = static_cast<int>(std::floor(start.x / m.spec.resolution));
  const int siy = static_cast<int>(std::floor(start.y / m.spec.resolution));
  dist[static_cast<std::size_t>((siy * m.nx + six) * kHeadings + heading_of(start.heading))] = 0;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int iy = 0; iy < m.ny; ++iy)
      for (int ix = 0; ix < m.nx; ++ix) {
        if (m.is_obstacle(ix, iy)) continue;
        for (int k = 0; k < kHeadings; ++k) {
          const long d = dist[static_cast<std::size_t>((iy * m.nx + ix) * kHeadings + k)];
          if (d >= inf) continue;
          auto relax = [&](int nix, int niy, int nk, long c) {
            auto& slot = dist[static_cast<std::size_t>((niy * m.nx + nix) * kHeadings + nk)];
            if (d + c < slot) {
              slot = d + c;
              changed = true;
            }
          };
          relax(ix, iy, (k + 1) % kHeadings, 1);
          relax(ix, iy, (k + kHeadings - 1) % kHeadings, 1);
          if (k % 6 == 0) {
            const int dx = k == 0 ? 1 : (k == 12 ? -1 : 0);
            const int dy = k == 6 ? 1 : (k == 18 ? -1 : 0);
            const int nix = ix + dx, niy = iy + dy;
            if (nix >= 0 && nix < m.nx && niy >= 0 && niy < m.ny && !m.is_obstacle(nix, niy))
              relax(nix, niy, k, 5);
          }
        }
      }
  }
  const int gix = static_cast<int>(std::floor(goal.x / m.spec.resolution));
  const int giy = static_cast<int>(std::floor(goal.y / m.spec.resolution));
  long best = inf;
  for (int k = 0; k < kHeadings; ++k)
    best = std::min(best, dist[static_cast<std::size_t>((giy * m.nx + gix) * kHeadings + k)]);
  return best;
}

bool criterion_planner(std::string& what) {
  int verified = 0;
  int mismatches = 0, failures = 0;
  for (std::uint64_t seed = 1; verified < 50 && seed < 400; ++seed) {
    WorldMap m;
    try {
      m = generate_world({5.0, 5.0, 0.25, 0.2, "indoor"}, seed);
    } catch (const StageError&) {
      continue;
    }
    Rng rng(seed * 7 + 1);
    const Pose start = sample_free_pose(m, rng);
    const Pose gp = sample_free_pose(m, rng);
    const Vec2 goal{gp.x, gp.y};
    Plan p;
    try {
      p = plan(m, start, goal);
    } catch (const StageError&) {
      continue;  // sealed-off pair; reachability is tested elsewhere
    }
    long forwards = 0, turns = 0;
    for (const Action a : p.actions) (a == Action::GoForward ? forwards : turns) += 1;
    if (5 * forwards + turns != bellman_cost(m, start, goal)) ++mismatches;

    Pose pose = start;
    bool collided = false;
    for (const Action a : p.actions) {
      const StepResult r = step(m, pose, a);
      collided = collided || r.collided;
      pose = r.pose;
    }
    const double miss = std::hypot(pose.x - goal.x, pose.y - goal.y);
    if (collided || miss > 0.5) ++failures;
    ++verified;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "plan cost vs relaxation oracle on %d worlds, %d mismatches, %d replay failures",
                verified, mismatches, failures);
  what = buf;
  return verified == 50 && mismatches == 0 && failures == 0;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_metrics(std::string& what) {
  std::vector<TrialRecord> all_opt{{true, 4.0, 4.0}, {true, 2.5, 2.5}};
  const bool hand1 = std::fabs(spl(all_opt) - 1.0) <= 1e-12;

  std::vector<TrialRecord> detour{{true, 10.0, 10.0}, {true, 10.0, 20.0}};
  const bool hand2 = std::fabs(spl(detour) - 0.75) <= 1e-12;

  Rng rng(0xACC3);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<TrialRecord> trials(1 + rng.uniform_int(8));
    for (auto& tr : trials) {
      tr.success = rng.uniform() < 0.6;
      tr.optimal_length = 0.1 + 5.0 * rng.uniform();
      tr.actual_length = 6.0 * rng.uniform();
    }
    if (spl(trials) > success_rate(trials) + 1e-12) ++violations;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "SPL<=SR on 1000 random trial sets (%d violations), hand values %s",
                violations, hand1 && hand2 ? "exact" : "WRONG");
  what = buf;
  return violations == 0 && hand1 && hand2;
}

// ---------------------------------------------------------------- criterion 4

JointTable random_chain(Rng& rng, bool deterministic_first_hop) {
  const int nx = 2 + static_cast<int>(rng.uniform_int(3));
  const int ny = 2 + static_cast<int>(rng.uniform_int(3));
  const int nz = 2 + static_cast<int>(rng.uniform_int(3));
  std::vector<double> px(nx), pyx(static_cast<std::size_t>(nx) * ny),
      pzy(static_cast<std::size_t>(ny) * nz);
  double sx = 0.0;
  for (auto& v : px) sx += (v = 0.05 + rng.uniform());
  for (auto& v : px) v /= sx;
  for (int x = 0; x < nx; ++x) {
    if (deterministic_first_hop) {
      const int pick = static_cast<int>(rng.uniform_int(ny));
      for (int y = 0; y < ny; ++y) pyx[static_cast<std::size_t>(x) * ny + y] = y == pick;
    } else {
      double s = 0.0;
      for (int y = 0; y < ny; ++y)
        s += (pyx[static_cast<std::size_t>(x) * ny + y] = 0.05 + rng.uniform());
      for (int y = 0; y < ny; ++y) pyx[static_cast<std::size_t>(x) * ny + y] /= s;
    }
  }
  for (int y = 0; y < ny; ++y) {
    double s = 0.0;
    for (int z = 0; z < nz; ++z)
      s += (pzy[static_cast<std::size_t>(y) * nz + z] = 0.05 + rng.uniform());
    for (int z = 0; z < nz; ++z) pzy[static_cast<std::size_t>(y) * nz + z] /= s;
  }
  JointTable j;
  j.nx = nx;
  j.ny = ny;
  j.nz = nz;
  j.p.resize(static_cast<std::size_t>(nx) * ny * nz);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z)
        j.p[(static_cast<std::size_t>(x) * ny + y) * nz + z] =
            px[static_cast<std::size_t>(x)] * pyx[static_cast<std::size_t>(x) * ny + y] *
            pzy[static_cast<std::size_t>(y) * nz + z];
  return j;
}

bool criterion_entropy(std::string& what) {
  Rng rng(0xACC4);
  int bound_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const EntropyReport r = markov_chain_report(random_chain(rng, false));
    if (r.h_z_given_x > r.log_z - r.i_zy + r.h_y + 1e-9) ++bound_violations;
  }
  double worst_gap = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const EntropyReport r = markov_chain_report(random_chain(rng, true));
    worst_gap = std::max(worst_gap,
                         std::fabs(r.h_z_given_x - (r.h_z_given_y + r.h_y_given_x)));
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "chain bound on 1000 random chains (%d violations); deterministic-Y identity "
                "max gap %.2e",
                bound_violations, worst_gap);
  what = buf;
  return bound_violations == 0 && worst_gap <= 1e-9;
}

// ---------------------------------------------------------------- criterion 5

DomainSamples gaussians(int n, double mx, double my, Rng& rng) {
  DomainSamples d;
  for (int i = 0; i < n; ++i) d.features.push_back({mx + rng.normal(), my + rng.normal()});
  return d;
}

// Exhaustive linear separators: 100 directions x 100 offsets over the pooled
// projections, returning the best balanced 0-1 error.
double grid_separator_err(const DomainSamples& a, const DomainSamples& b) {
  double best = 0.5;
  for (int ai = 0; ai < 100; ++ai) {
    const double ang = M_PI * ai / 100.0;
    const double cx = std::cos(ang), cy = std::sin(ang);
    std::vector<double> pa, pb;
    for (const auto& f : a.features) pa.push_back(cx * f[0] + cy * f[1]);
    for (const auto& f : b.features) pb.push_back(cx * f[0] + cy * f[1]);
    const auto [lo_a, hi_a] = std::minmax_element(pa.begin(), pa.end());
    const auto [lo_b, hi_b] = std::minmax_element(pb.begin(), pb.end());
    const double lo = std::min(*lo_a, *lo_b), hi = std::max(*hi_a, *hi_b);
    for (int oi = 0; oi <= 100; ++oi) {
      const double c = lo + (hi - lo) * oi / 100.0;
      int wrong = 0;
      for (double v : pa) wrong += v <= c;
      for (double v : pb) wrong += v > c;
      const double err = static_cast<double>(wrong) / (pa.size() + pb.size());
      best = std::min(best, std::min(err, 1.0 - err));
    }
  }
  return best;
}

bool criterion_adistance(std::string& what) {
  const ClassifierConfig cfg;
  Rng rng(0xACC5);

  const DomainSamples same = gaussians(1000, 0.0, 0.0, rng);
  const double d_same = a_distance(same, same, cfg).d_a;

  DomainSamples lo, hi;
  for (int i = 0; i < 1000; ++i) {
    lo.features.push_back({rng.uniform(), rng.uniform()});
    hi.features.push_back({2.0 + rng.uniform(), 2.0 + rng.uniform()});
  }
  const double d_split = a_distance(lo, hi, cfg).d_a;

  const DomainSamples ga = gaussians(1000, 0.0, 0.0, rng);
  const DomainSamples gb = gaussians(1000, 1.5, 0.0, rng);
  const double fitted = a_distance(ga, gb, cfg).err_min;
  const double oracle = grid_separator_err(ga, gb);

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "identical d_a %.3f, separable d_a %.3f, fitted err %.3f vs grid oracle %.3f",
                d_same, d_split, fitted, oracle);
  what = buf;
  return std::fabs(d_same) <= 0.1 && d_split >= 1.9 && std::fabs(fitted - oracle) <= 0.03;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_bound(std::string& what) {
  BoundInputs inp;
  inp.eps_s_hat = 0.1;
  inp.d_a = 0.4;
  inp.lambda = 0.05;
  inp.d = 3;
  inp.m = 1000;
  inp.m_prime = 1000;
  inp.delta = 0.05;
  const double frozen = 1.2302535489346105;  // high-precision reference
  const double got = generalization_bound(inp);
  const bool regression_ok = std::fabs(got - frozen) <= 1e-10;

  Rng rng(0xACC8);
  int violations = 0;
  for (int t = 0; t < 100; ++t) {
    BoundInputs b;
    b.eps_s_hat = rng.uniform() * 0.5;
    b.d_a = rng.uniform() * 2.0;
    b.lambda = rng.uniform() * 0.3;
    b.d = 1 + static_cast<long>(rng.uniform_int(30));
    b.m = b.d + 50 + static_cast<long>(rng.uniform_int(5000));
    b.m_prime = 2 + static_cast<long>(rng.uniform_int(5000));
    b.delta = 0.01 + 0.5 * rng.uniform();
    const double base = generalization_bound(b);

    BoundInputs c = b;
    c.eps_s_hat += 0.05;
    if (std::fabs(generalization_bound(c) - (base + 0.05)) > 1e-12) ++violations;
    c = b;
    c.d_a += 0.1;
    if (std::fabs(generalization_bound(c) - (base + 0.1)) > 1e-12) ++violations;
    c = b;
    c.lambda += 0.2;
    if (std::fabs(generalization_bound(c) - (base + 0.2)) > 1e-12) ++violations;
    c = b;
    c.m *= 2;
    if (generalization_bound(c) >= base) ++violations;
    c = b;
    c.m_prime *= 2;
    if (generalization_bound(c) >= base) ++violations;
    c = b;
    c.delta = std::min(0.9, c.delta * 1.5);
    if (generalization_bound(c) >= base) ++violations;
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "frozen value |%.12f - %.12f| <= 1e-10 %s, monotonicity violations %d",
                got, frozen, regression_ok ? "holds" : "BROKEN", violations);
  what = buf;
  return regression_ok && violations == 0;
}

// ------------------------------------------------------- criteria 6, 7 and 9

struct RunTables {
  // (environment, preset) -> SR ; (environment, representation) -> d_a
  std::map<std::pair<std::string, std::string>, double> sr;
  std::map<std::pair<std::string, std::string>, double> d_a;
};

RunTables parse_report(const std::string& run_dir) {
  std::ifstream in(run_dir + "/report.json");
  json j;
  in >> j;
  RunTables t;
  for (const auto& row : j.at("navigation"))
    t.sr[{row.at("environment"), row.at("preset")}] = row.at("sr").get<double>();
  for (const auto& row : j.at("divergence"))
    t.d_a[{row.at("environment"), row.at("representation")}] = row.at("d_a").get<double>();
  return t;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return fa && fb && sa.str() == sb.str();
}

}  // namespace

int main() {
  Tally tally;
  std::string what;

  std::fprintf(stderr, "[%7.1fs] gradients...\n", now_sec());
  tally.record(1, criterion_gradients(what), what);
  std::fprintf(stderr, "[%7.1fs] planner...\n", now_sec());
  tally.record(2, criterion_planner(what), what);
  std::fprintf(stderr, "[%7.1fs] metrics...\n", now_sec());
  tally.record(3, criterion_metrics(what), what);
  std::fprintf(stderr, "[%7.1fs] entropy...\n", now_sec());
  tally.record(4, criterion_entropy(what), what);
  std::fprintf(stderr, "[%7.1fs] a-distance...\n", now_sec());
  tally.record(5, criterion_adistance(what), what);

  // The directional-reproduction block: five seeded paper-analog runs.
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const std::string root = (fs::temp_directory_path() / "navshift_acceptance").string();
  fs::remove_all(root);
  fs::create_directories(root);

  const double t_runs = now_sec();
  std::vector<RunTables> runs;
  std::string first_run_dir;
  bool runs_ok = true;
  std::string runs_error;
  try {
    for (std::uint64_t s : seeds) {
      std::fprintf(stderr, "[%7.1fs] paper-analog run, seed %llu...\n", now_sec(),
                   static_cast<unsigned long long>(s));
      const std::string dir = run_experiment(default_experiment_config(s), root + "/a");
      if (s == seeds.front()) first_run_dir = dir;
      runs.push_back(parse_report(dir));
    }
  } catch (const std::exception& e) {
    runs_ok = false;
    runs_error = e.what();
  }
  const double runs_elapsed = now_sec() - t_runs;

  const std::vector<std::string> shifted{"E1", "E2", "E3", "E4"};
  if (runs_ok) {
    auto med_sr = [&](const std::string& env, const std::string& preset) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r.sr.at({env, preset}));
      return median5(v);
    };
    auto med_da = [&](const std::string& env, const std::string& repr) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r.d_a.at({env, repr}));
      return median5(v);
    };

    // Criterion 6: SEER beats RGB everywhere off-domain, by >= 0.2 on average,
    // and the two ablations order as designed.
    bool order_ok = true;
    double seer_sum = 0.0, rgb_sum = 0.0;
    std::string detail;
    for (const auto& env : shifted) {
      const double ms = med_sr(env, "seer"), mr = med_sr(env, "rgb");
      order_ok = order_ok && ms > mr;
      char d[64];
      std::snprintf(d, sizeof(d), " %s seer %.2f rgb %.2f;", env.c_str(), ms, mr);
      detail += d;
      for (const auto& r : runs) {
        seer_sum += r.sr.at({env, "seer"});
        rgb_sum += r.sr.at({env, "rgb"});
      }
    }
    const double gap =
        (seer_sum - rgb_sum) / static_cast<double>(shifted.size() * runs.size());
    const double e3_nav = med_sr("E3", "nav_only"), e3_depth = med_sr("E3", "depth_only");
    const double e4_nav = med_sr("E4", "nav_only"), e4_depth = med_sr("E4", "depth_only");
    const bool ablations_ok = e3_nav > e3_depth && e4_depth > e4_nav;
    const bool budget_ok = runs_elapsed <= 1800.0;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "median SR seer>rgb in E1-E4 %s, avg gap %.3f >= 0.2 %s;%s E3 nav %.2f vs "
                  "depth %.2f, E4 depth %.2f vs nav %.2f %s; 5 runs in %.0fs %s",
                  order_ok ? "holds" : "BROKEN", gap, gap >= 0.2 ? "holds" : "BROKEN",
                  detail.c_str(), e3_nav, e3_depth, e4_depth, e4_nav,
                  ablations_ok ? "hold" : "BROKEN", runs_elapsed,
                  budget_ok ? "(in budget)" : "(OVER 30min)");
    tally.record(6, order_ok && gap >= 0.2 && ablations_ok && budget_ok, buf);

    // Criterion 7: representation divergences order the same way the paper's
    // Table 3 does.
    bool nav_lt_rgb = true, nav_lt_sem = true;
    std::string d7;
    for (const auto& env : shifted) {
      const double dn = med_da(env, "navigability"), dr = med_da(env, "rgb");
      nav_lt_rgb = nav_lt_rgb && dn < dr;
      char d[96];
      std::snprintf(d, sizeof(d), " %s nav %.2f rgb %.2f", env.c_str(), dn, dr);
      d7 += d;
      if (env == "E3" || env == "E4") {
        const double ds = med_da(env, "semantics");
        nav_lt_sem = nav_lt_sem && dn < ds;
        std::snprintf(d, sizeof(d), " sem %.2f", ds);
        d7 += d;
      }
      d7 += ";";
    }
    char buf7[448];
    std::snprintf(buf7, sizeof(buf7), "median d_a(nav)<d_a(rgb) %s, d_a(nav)<d_a(sem) in E3-E4 %s:%s",
                  nav_lt_rgb ? "holds" : "BROKEN", nav_lt_sem ? "holds" : "BROKEN", d7.c_str());
    tally.record(7, nav_lt_rgb && nav_lt_sem, buf7);
  } else {
    tally.record(6, false, "paper-analog runs failed: " + runs_error);
    tally.record(7, false, "paper-analog runs failed: " + runs_error);
  }

  std::fprintf(stderr, "[%7.1fs] bound calculator...\n", now_sec());
  tally.record(8, criterion_bound(what), what);

  // Criterion 9: byte-level determinism of the whole artifact tree.
  if (runs_ok) {
    std::fprintf(stderr, "[%7.1fs] determinism rerun, seed %llu...\n", now_sec(),
                 static_cast<unsigned long long>(seeds.front()));
    try {
      const std::string rerun_dir =
          run_experiment(default_experiment_config(seeds.front()), root + "/b");
      int compared = 0, differing = 0;
      std::string first_diff;
      for (auto it = fs::recursive_directory_iterator(first_run_dir);
           it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        const auto rel = fs::relative(it->path(), first_run_dir);
        if (rel == "timing.json") continue;  // wall clock, by design
        ++compared;
        if (!same_file_bytes(it->path(), fs::path(rerun_dir) / rel)) {
          ++differing;
          if (first_diff.empty()) first_diff = rel.string();
        }
      }
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "rerun of seed %llu: %d artifacts compared, %d differ%s%s",
                    static_cast<unsigned long long>(seeds.front()), compared, differing,
                    differing ? ", first: " : "", first_diff.c_str());
      tally.record(9, compared > 0 && differing == 0, buf);
    } catch (const std::exception& e) {
      tally.record(9, false, std::string("determinism rerun failed: ") + e.what());
    }
  } else {
    tally.record(9, false, "paper-analog runs failed: " + runs_error);
  }

  std::sort(tally.lines.begin(), tally.lines.end(), [](const auto& a, const auto& b) {
    return a.substr(a.find("criterion")) < b.substr(b.find("criterion"));
  });
  for (const auto& line : tally.lines) std::printf("%s\n", line.c_str());
  std::printf("%d/9 criteria passed\n", 9 - tally.failures);
  return tally.failures == 0 ? 0 : 1;
}
