// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion runs standalone (konmf_acceptance <n>) or
// as part of the full sweep (no arguments), prints one PASS/FAIL line, and
// the process exits with the number of failures.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "konmf/cluster.hpp"
#include "konmf/dataset.hpp"
#include "konmf/factorize.hpp"
#include "konmf/harness.hpp"

using namespace konmf;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double now_s() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt3(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::fixed << v;
  return ss.str();
}

Dataset load_zoo() {
  CsvOptions opt;
  opt.has_header = true;
  opt.label_column = "type";
  return load_csv(std::string(KONMF_DATA_DIR) + "/zoo.csv", opt);
}

Problem random_gaussian_problem(std::uint64_t seed, std::size_t n, std::size_t m, double sigma) {
  Rng rng(seed);
  const Matrix pts = testutil::random_matrix(rng, m, n, -1.0, 1.0);
  return make_problem(DataMatrix::from(pts), KernelSpec::gaussian(sigma));
}

// 1. Monotone convergence for all three variants (Appendix-style property).
Check criterion1() {
  Check c;
  const double start = now_s();
  HyperParams hp;  // alpha=10, mu=100, lambda=10
  for (Variant v : {Variant::knsc_ncut, Variant::knsc_rcut, Variant::kognmf}) {
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
      const Problem p = random_gaussian_problem(1000 + inst, 30, 5, 1.0);
      const FactorState s = run(v, p, 3, hp, inst);
      for (std::size_t i = 1; i < s.objective_trace.size(); ++i) {
        const double prev = s.objective_trace[i - 1];
        const double cur = s.objective_trace[i];
        if (cur > prev + 1e-8 * std::max(1.0, prev)) {
          c.fail(std::string(variant_name(v)) + " instance " + std::to_string(inst) +
                 " increased at iteration " + std::to_string(i));
        }
      }
    }
  }
  const double elapsed = now_s() - start;
  c.note("elapsed " + fmt3(elapsed) + "s");
  if (elapsed >= 10.0) c.fail("runtime budget 10s exceeded");
  return c;
}

// 2. Analytic gradients vs central finite differences.
Check criterion2() {
  Check c;
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const Problem p = random_gaussian_problem(2000 + inst, 6, 4, 1.0);
    const FactorState s = init_factors(6, 3, inst);
    for (double lambda : {0.0, 10.0}) {
      HyperParams hp;
      hp.lambda = lambda;
      const Variant v = lambda == 0.0 ? Variant::knsc_rcut : Variant::kognmf;
      const auto [dh, df] = lagrangian_gradients(s, p.kernel, p.graph, hp);
      FactorState probe = s;
      const Matrix fd_h = testutil::finite_diff(
          [&](const Matrix& h) {
            probe.h = h;
            return objective(v, probe, p, hp);
          },
          s.h, 1e-6);
      probe = s;
      const Matrix fd_f = testutil::finite_diff(
          [&](const Matrix& f) {
            probe.f = f;
            return objective(v, probe, p, hp);
          },
          s.f, 1e-6);
      worst = std::max({worst, testutil::max_rel_err(dh, fd_h), testutil::max_rel_err(df, fd_f)});
    }
  }
  c.note("max relative error " + std::to_string(worst));
  if (!(worst < 1e-4)) c.fail("exceeds 1e-4");
  return c;
}

// 3. Hungarian vs exhaustive enumeration.
Check criterion3() {
  Check c;
  Rng rng(3003);
  for (std::size_t k = 3; k <= 6; ++k) {
    for (int t = 0; t < 100; ++t) {
      const Matrix cost = testutil::random_int_matrix(rng, k, k, 0, 20);
      const auto [want, want_cost] = testutil::brute_force_assignment(cost);
      const auto got = hungarian(cost);
      if (got != want) {
        c.fail("k=" + std::to_string(k) + " case " + std::to_string(t) + " diverged");
        return c;
      }
    }
  }
  c.note("400 matrices, k=3..6");
  return c;
}

// 4. Linear-kernel trace objective == explicit input-space objective.
Check criterion4() {
  Check c;
  HyperParams hp;
  Rng rng(4004);
  const Matrix x = testutil::random_matrix(rng, 4, 12, 0.0, 1.0);
  const DataMatrix dm = DataMatrix::from(x);
  const Problem p = make_problem(dm, KernelSpec::linear());
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (Variant v : {Variant::knsc_rcut, Variant::knsc_ncut, Variant::kognmf}) {
      const FactorState s0 = init_factors(12, 2, seed);
      const double r0 = testutil::rel_err(objective(v, s0, p, hp),
                                          testutil::explicit_linear_objective(v, x, s0, p.graph, hp));
      const FactorState s1 = run(v, p, 2, hp, seed);
      const double r1 = testutil::rel_err(objective(v, s1, p, hp),
                                          testutil::explicit_linear_objective(v, x, s1, p.graph, hp));
      worst = std::max({worst, r0, r1});
    }
  }
  c.note("max relative route gap " + std::to_string(worst));
  if (!(worst < 1e-6)) c.fail("exceeds 1e-6");
  return c;
}

// 5. Two-rings: gaussian KNSC-Ncut separates, the linear kernel cannot.
Check criterion5() {
  Check c;
  const double start = now_s();
  const Dataset rings = two_rings(75, 1.0, 3.0, 0.1, 9);

  ExperimentConfig cfg;
  cfg.variant = Variant::knsc_ncut;
  cfg.k = 2;
  cfg.restarts = 64;
  cfg.base_seed = 1;
  cfg.workers = 0;
  cfg.grid = SigmaGrid{0.1, 4.0, 0.1};
  const GridResult gr = grid_search(cfg, rings);
  c.note("gaussian best sigma " + fmt3(gr.best_sigma) + ", mean acc " + fmt3(gr.best_mean_acc));
  if (!(gr.best_mean_acc >= 0.80)) c.fail("gaussian mean accuracy below 0.80");

  ExperimentConfig lin = cfg;
  lin.grid.reset();
  lin.kernel = KernelSpec::Kind::linear;
  const Summary ls = multi_run(lin, shift_nonneg(rings), KernelSpec::linear());
  c.note("linear mean acc " + fmt3(ls.mean_acc));
  if (!(ls.mean_acc <= 0.65)) c.fail("linear mean accuracy above 0.65");

  const double elapsed = now_s() - start;
  c.note("elapsed " + fmt3(elapsed) + "s");
  if (elapsed >= 120.0) c.fail("runtime budget 2min exceeded");
  return c;
}

// 6. Desk-scale Table-3 reproduction on Zoo and Soybean.
Check criterion6() {
  Check c;
  struct Row {
    Variant v;
    double target;
  };

  {
    const Dataset zoo = load_zoo();
    const Row rows[] = {{Variant::knsc_ncut, 0.80}, {Variant::knsc_rcut, 0.65}, {Variant::kognmf, 0.78}};
    for (const Row& r : rows) {
      ExperimentConfig cfg;
      cfg.variant = r.v;
      cfg.k = 7;
      cfg.restarts = 256;
      cfg.base_seed = 1;
      cfg.workers = 0;
      cfg.grid = SigmaGrid{0.1, 4.0, 0.1};
      const GridResult gr = grid_search(cfg, zoo);
      c.note(std::string("zoo ") + variant_name(r.v) + ": " + fmt3(gr.best_mean_acc) + " (sigma " +
             fmt3(gr.best_sigma) + ", target " + fmt3(r.target) + "±0.10)");
      std::cerr << "[criterion6] zoo " << variant_name(r.v) << " -> " << gr.best_mean_acc << "\n";
      if (std::fabs(gr.best_mean_acc - r.target) > 0.10)
        c.fail(std::string("zoo ") + variant_name(r.v) + " outside ±0.10");
    }
  }

  const std::string soy_path = std::string(KONMF_DATA_DIR) + "/soybean-small.csv";
  if (!std::filesystem::exists(soy_path)) {
    c.fail("dataset file missing: " + soy_path +
           " (UCI soybean-small cannot be acquired in this environment; see data/README.md to "
           "provision it)");
    return c;
  }
  CsvOptions opt;
  opt.has_header = true;
  opt.label_column = "class";
  const Dataset soy = load_csv(soy_path, opt);
  const Row rows[] = {{Variant::knsc_ncut, 0.78}, {Variant::knsc_rcut, 0.75}, {Variant::kognmf, 0.80}};
  for (const Row& r : rows) {
    ExperimentConfig cfg;
    cfg.variant = r.v;
    cfg.k = 4;
    cfg.restarts = 256;
    cfg.base_seed = 1;
    cfg.workers = 0;
    cfg.grid = SigmaGrid{0.1, 4.0, 0.1};
    const GridResult gr = grid_search(cfg, soy);
    c.note(std::string("soybean ") + variant_name(r.v) + ": " + fmt3(gr.best_mean_acc) + " (target " +
           fmt3(r.target) + "±0.10)");
    std::cerr << "[criterion6] soybean " << variant_name(r.v) << " -> " << gr.best_mean_acc << "\n";
    if (std::fabs(gr.best_mean_acc - r.target) > 0.10)
      c.fail(std::string("soybean ") + variant_name(r.v) + " outside ±0.10");
  }
  return c;
}

// 7. Orthogonality grows with mu and saturates near 1.
Check criterion7() {
  Check c;
  const Dataset zoo = load_zoo();
  const double mus[] = {1.0, 1e2, 1e4, 1e6};
  std::vector<double> means, sems;
  for (double mu : mus) {
    ExperimentConfig cfg;
    cfg.variant = Variant::knsc_rcut;
    cfg.k = 7;
    cfg.restarts = 64;
    cfg.base_seed = 1;
    cfg.workers = 0;
    cfg.hp.mu = mu;
    const Summary s = multi_run(cfg, zoo, KernelSpec::gaussian(2.0));
    double sum = 0.0, sq = 0.0;
    for (const auto& r : s.per_run) {
      sum += r.orthogonality;
      sq += r.orthogonality * r.orthogonality;
    }
    const double mean = sum / 64.0;
    const double var = std::max(0.0, sq / 64.0 - mean * mean);
    means.push_back(mean);
    sems.push_back(std::sqrt(var / 64.0));
    c.note("mu=" + std::to_string(mu) + " mean orth " + fmt3(mean));
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i] + 2.0 * (sems[i] + sems[i - 1]) < means[i - 1])
      c.fail("mean orthogonality decreased from mu=" + std::to_string(mus[i - 1]) + " to mu=" +
             std::to_string(mus[i]));
  }
  if (!(means[2] > 0.95)) c.fail("orthogonality at mu=1e4 does not exceed 0.95");
  return c;
}

// 8. Reduction identities are bit-exact across whole runs.
Check criterion8() {
  Check c;
  HyperParams hp;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Problem p = random_gaussian_problem(8000 + seed, 25, 4, 1.0);
    HyperParams hp0 = hp;
    hp0.lambda = 0.0;
    const FactorState a = run(Variant::kognmf, p, 3, hp0, seed);
    const FactorState b = run(Variant::knsc_rcut, p, 3, hp, seed);
    if (!(a.h == b.h && a.f == b.f && a.objective_trace == b.objective_trace))
      c.fail("kognmf(lambda=0) != rcut at seed " + std::to_string(seed));

    Problem pid = p;
    pid.graph.degree.assign(25, 1.0);
    pid.graph.inv_sqrt_degree.assign(25, 1.0);
    pid.scaled_kernel = pid.kernel.k;
    pid.trace_dinv_k = pid.trace_k;
    const FactorState d = run(Variant::knsc_ncut, pid, 3, hp, seed);
    if (!(d.h == b.h && d.f == b.f && d.objective_trace == b.objective_trace))
      c.fail("ncut(D=I) != rcut at seed " + std::to_string(seed));
  }
  c.note("5 seeds, bitwise H/F/trace equality");
  return c;
}

// 9. Byte-identical emitted files, serial vs parallel (timing stripped).
Check criterion9() {
  Check c;
  namespace fs = std::filesystem;
  const Dataset rings = two_rings(30, 1.0, 3.0, 0.1, 11);

  auto emit = [&](std::size_t workers, const std::string& dir) {
    ExperimentConfig cfg;
    cfg.variant = Variant::knsc_ncut;
    cfg.k = 2;
    cfg.restarts = 8;
    cfg.base_seed = 3;
    cfg.workers = workers;
    cfg.grid = SigmaGrid{0.4, 0.8, 0.2};
    fs::remove_all(dir);
    emit_results(run_experiment(cfg, rings), rings, dir);
  };

  auto strip_ms_column = [](const std::string& path) {
    std::ifstream in(path);
    std::string line, out;
    while (std::getline(in, line)) {
      const auto pos = line.rfind(',');
      out += line.substr(0, pos);
      out += '\n';
    }
    return out;
  };
  auto strip_timing_json = [](const std::string& path) {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    j.erase("timing");
    return j.dump(2);
  };
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  const auto tmp = fs::temp_directory_path() / "konmf_acc9";
  const std::string d1 = (tmp / "serial").string();
  const std::string d2 = (tmp / "parallel").string();
  const std::string d3 = (tmp / "serial_again").string();
  emit(1, d1);
  emit(2, d2);
  emit(1, d3);

  for (const auto& pair : {std::pair{d1, d2}, std::pair{d1, d3}}) {
    if (strip_ms_column(pair.first + "/runs.csv") != strip_ms_column(pair.second + "/runs.csv"))
      c.fail("runs.csv differs between " + pair.first + " and " + pair.second);
    if (strip_timing_json(pair.first + "/summary.json") != strip_timing_json(pair.second + "/summary.json"))
      c.fail("summary.json differs between " + pair.first + " and " + pair.second);
    if (slurp(pair.first + "/trace.csv") != slurp(pair.second + "/trace.csv"))
      c.fail("trace.csv differs");
    if (slurp(pair.first + "/scatter.svg") != slurp(pair.second + "/scatter.svg"))
      c.fail("scatter.svg differs");
  }
  c.note("serial == parallel == repeat, ms column and timing object excluded");
  return c;
}

const char* kTitles[] = {
    "monotone convergence of all three variants",
    "lagrangian gradients vs central finite differences",
    "hungarian matches brute force on k=3..6",
    "linear-kernel objective equals explicit feature-map objective",
    "two-rings: gaussian succeeds, linear fails",
    "desk-scale Table-3 reproduction (Zoo, Soybean)",
    "orthogonality sensitivity in mu on Zoo",
    "reduction identities bit-exact",
    "harness determinism serial vs parallel",
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  using Fn = Check (*)();
  const Fn fns[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                    criterion6, criterion7, criterion8, criterion9};

  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > 9) {
      std::cerr << "unknown criterion " << n << "\n";
      ++failures;
      continue;
    }
    Check c;
    try {
      c = fns[n - 1]();
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    std::cout << (c.ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << kTitles[n - 1];
    if (!c.detail.empty()) std::cout << " — " << c.detail;
    std::cout << std::endl;
    if (!c.ok) ++failures;
  }
  return failures;
}
