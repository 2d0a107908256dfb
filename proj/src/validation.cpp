#include "icssl/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "icssl/attention.hpp"
#include "icssl/icl_head.hpp"
#include "icssl/metrics.hpp"
#include "icssl/oracles.hpp"
#include "icssl/rep_transformer.hpp"
#include "icssl/rng.hpp"
#include "icssl/spectral.hpp"

namespace icssl {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
  return m;
}

oracle::Mat columns_of(const Matrix& x) {
  oracle::Mat out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(j)].assign(x.col(j).data(), x.col(j).data() + x.rows());
  return out;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

Check finish(Check c, const Timer& t, double budget_seconds) {
  c.seconds = t.seconds();
  if (budget_seconds > 0.0 && c.seconds > budget_seconds) {
    c.passed = false;
    c.detail += fmt::format("; over the {:.0f} s budget", budget_seconds);
  }
  return c;
}

}  // namespace

std::vector<Matrix> gapped_laplacians(std::uint64_t seed, std::size_t count, std::size_t k,
                                      double min_gap) {
  Rng rng(seed);
  std::vector<Matrix> out;
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt > 5000) throw std::runtime_error("gapped_laplacians: too few clouds pass the gap filter");
    // Mixture of k well-spread blobs in R^3.
    const Matrix centers = gaussian_matrix(rng, static_cast<Eigen::Index>(k), 3, 2.0);
    const double sd = rng.uniform(0.3, 0.8);
    Matrix pts(100, 3);
    for (Eigen::Index i = 0; i < 100; ++i) {
      const auto b = static_cast<Eigen::Index>(rng.below(k));
      for (Eigen::Index t = 0; t < 3; ++t) pts(i, t) = centers(b, t) + sd * rng.normal();
    }
    const Matrix psi = laplacians(affinity(pts, 1.0, DiagonalMode::UnitDiagonal)).random_walk;
    Eigen::SelfAdjointEigenSolver<Matrix> es(psi.transpose() * psi, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double mu = auto_shift(psi);
    const double gap = (ev(static_cast<Eigen::Index>(k)) - ev(static_cast<Eigen::Index>(k) - 1)) / (mu - ev(0));
    if (gap >= min_gap) out.push_back(psi);
  }
  return out;
}

Check check_laplacian_layer(std::uint64_t seed) {
  Timer timer;
  Check c{"1", "Laplacian layer exactness", false, "", 0.0};
  Rng rng(seed);
  double worst = 0.0;
  const std::size_t sizes[] = {10, 50, 100};
  const double gammas[] = {1.0, 10.0};
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(sizes[trial % 3]);
    const double gamma = gammas[(trial / 3) % 2];
    const Matrix x = gaussian_matrix(rng, 3, n);
    const Matrix got = tf_laplacian(x, gamma);
    const auto want = oracle::right_normalized_laplacian(columns_of(x), gamma);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        worst = std::max(worst, std::fabs(got(i, j) - want[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  }
  c.passed = worst < 1e-10;
  c.detail = fmt::format("50 clouds, max abs error {:.3e} (bound 1e-10)", worst);
  return finish(c, timer, 5.0);
}

Check check_subspace_recovery(std::uint64_t seed) {
  Timer timer;
  Check c{"2", "Eigenmap subspace recovery", false, "", 0.0};
  const std::size_t k = 4;
  const auto psis = gapped_laplacians(seed, 20, k, 0.05);
  double worst = 0.0;
  for (const auto& psi : psis) {
    const auto prog = build_eigenmap_program(100, k, auto_shift(psi), 100, 2, 2);
    const Matrix phi = tf_eigenmap(psi, prog);
    const Matrix v = bottom_eigenvectors(psi.transpose() * psi, k).vectors;
    worst = std::max(worst, max_principal_angle(phi, v.transpose()));
  }
  c.passed = worst <= 1e-3;
  c.detail = fmt::format("20 Laplacians, k=4, T=100: largest principal angle {:.3e} (bound 1e-3)", worst);
  return finish(c, timer, 60.0);
}

Check check_icl_head_oracle(std::uint64_t seed) {
  Timer timer;
  Check c{"3", "ICL head matches explicit GD", false, "", 0.0};
  Rng rng(seed);
  double worst_f = 0.0, worst_p = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(2 + rng.below(29));
    const auto m = static_cast<std::size_t>(1 + rng.below(std::min<std::size_t>(10, n)));
    const int classes = static_cast<int>(2 + rng.below(4));
    const auto layers = static_cast<std::size_t>(rng.below(11));
    const auto k = static_cast<Eigen::Index>(1 + rng.below(5));

    IclConfig cfg;
    cfg.alpha = rng.uniform(0.05, 1.5);
    cfg.layers = layers;
    cfg.kernel = trial % 2 == 0 ? IclKernelType::Rbf : IclKernelType::Linear;
    cfg.kernel_gamma = rng.uniform(0.2, 3.0);
    cfg.divide_by_m = trial % 4 != 3;

    const Matrix phi = gaussian_matrix(rng, k, static_cast<Eigen::Index>(n), 0.5);
    ClassEmbeddings emb;
    emb.w = gaussian_matrix(rng, classes, classes);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < m; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
    std::vector<int> labels(n, kUnlabeled);
    for (std::size_t i = 0; i < m; ++i) labels[order[i]] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));

    IclState st;
    const Matrix probs = forward(phi, labels, emb, cfg, st);

    oracle::GdInstance inst;
    inst.phi = columns_of(phi);
    inst.labels = labels;
    inst.w = columns_of(emb.w);
    inst.alpha = cfg.alpha;
    inst.rbf = cfg.kernel == IclKernelType::Rbf;
    inst.gamma_f = cfg.kernel_gamma;
    inst.divide_by_m = cfg.divide_by_m;
    inst.steps = layers;
    const auto f = oracle::gd_recursion(inst);
    const auto p = oracle::gd_probabilities(inst, f);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < st.f.rows(); ++t)
        worst_f = std::max(worst_f, std::fabs(st.f(t, static_cast<Eigen::Index>(i)) - f[i][static_cast<std::size_t>(t)]));
      for (int cc = 0; cc < classes; ++cc)
        worst_p = std::max(worst_p, std::fabs(probs(static_cast<Eigen::Index>(i), cc) - p[i][static_cast<std::size_t>(cc)]));
    }
  }
  c.passed = worst_f <= 1e-10 && worst_p <= 1e-12;
  c.detail = fmt::format("100 instances: max |dF| {:.3e} (bound 1e-10), max |dP| {:.3e} (bound 1e-12)", worst_f, worst_p);
  return finish(c, timer, 10.0);
}

Check check_geodesic_vs_graph(std::uint64_t seed, std::size_t n) {
  Timer timer;
  Check c{"4", "Geodesic vs graph shortest path", true, "", 0.0};
  const ManifoldSpec specs[] = {ManifoldSpec::sphere(), ManifoldSpec::cylinder(), ManifoldSpec::flat_torus()};
  std::vector<std::string> parts;
  for (std::size_t s = 0; s < 3; ++s) {
    const ManifoldSpec& spec = specs[s];
    const SampledManifold sm = sample_manifold(spec, n, derive_seed(seed, {s}));
    // The flat torus graph lives on its isometric embedding in R^4; the
    // chart image (theta, phi, 0) does not glue opposite edges.
    Matrix emb;
    if (spec.family == Family::FlatTorus) {
      emb.resize(static_cast<Eigen::Index>(n), 4);
      for (Eigen::Index i = 0; i < emb.rows(); ++i) {
        emb(i, 0) = std::cos(sm.intrinsic(i, 0));
        emb(i, 1) = std::sin(sm.intrinsic(i, 0));
        emb(i, 2) = std::cos(sm.intrinsic(i, 1));
        emb(i, 3) = std::sin(sm.intrinsic(i, 1));
      }
    } else {
      emb = sm.ambient;
    }
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : knn_indices(emb, i, 12)) {
        const double w = (emb.row(static_cast<Eigen::Index>(i)) - emb.row(static_cast<Eigen::Index>(j))).norm();
        adj[i].emplace_back(j, w);
        adj[j].emplace_back(i, w);
      }
    }
    Rng rng(derive_seed(seed, {s, 1}));
    std::vector<double> rel;
    for (int src = 0; src < 40; ++src) {
      const auto a = static_cast<std::size_t>(rng.below(n));
      const auto dist = oracle::dijkstra(adj, a);
      for (std::size_t b = 0; b < n; ++b) {
        const double g = geodesic(spec, Vector(sm.intrinsic.row(static_cast<Eigen::Index>(a)).transpose()),
                                  Vector(sm.intrinsic.row(static_cast<Eigen::Index>(b)).transpose()));
        if (g < 0.5) continue;
        rel.push_back(std::fabs(dist[b] - g) / g);
      }
    }
    const double p90 = percentile(rel, 0.9);
    const bool ok = p90 <= 0.10;
    c.passed = c.passed && ok;
    parts.push_back(fmt::format("{} p90 rel err {:.4f}", spec.name(), p90));
  }
  c.detail = fmt::format("n={}, 12-NN: {} (bound 0.10)", n, fmt::join(parts, ", "));
  return finish(c, timer, 120.0);
}

Check check_product_metric(std::uint64_t seed) {
  Timer timer;
  Check c{"5", "Product geodesic is a metric", true, "", 0.0};
  const ManifoldSpec specs[] = {
      ManifoldSpec::product({ManifoldSpec::sphere(), ManifoldSpec::cylinder()}),
      ManifoldSpec::product({ManifoldSpec::cone(0.05), ManifoldSpec::flat_torus()}),
  };
  double worst_sym = 0.0, worst_tri = 0.0, worst_path = 0.0;
  for (std::size_t s = 0; s < 2; ++s) {
    const SampledManifold sm = sample_manifold(specs[s], 3000, derive_seed(seed, {s}));
    auto pt = [&](std::size_t i) { return Vector(sm.intrinsic.row(static_cast<Eigen::Index>(i)).transpose()); };
    auto d = [&](std::size_t i, std::size_t j) { return geodesic(sm.spec, pt(i), pt(j)); };
    for (std::size_t t = 0; t < 1000; ++t) {
      const std::size_t p = 3 * t, q = 3 * t + 1, r = 3 * t + 2;
      worst_sym = std::max({worst_sym, std::fabs(d(p, q) - d(q, p)), std::fabs(d(p, p))});
      worst_tri = std::max(worst_tri, d(p, r) - d(p, q) - d(q, r));
    }
    Rng rng(derive_seed(seed, {s, 7}));
    for (int path = 0; path < 200; ++path) {
      std::vector<std::size_t> way;
      const auto legs = 2 + rng.below(10);
      for (std::uint64_t w = 0; w <= legs; ++w) way.push_back(static_cast<std::size_t>(rng.below(3000)));
      double length = 0.0;
      for (std::size_t w = 0; w + 1 < way.size(); ++w) length += d(way[w], way[w + 1]);
      worst_path = std::max(worst_path, d(way.front(), way.back()) - length);
    }
  }
  c.passed = worst_sym <= 1e-12 && worst_tri <= 1e-9 && worst_path <= 1e-6;
  c.detail = fmt::format(
      "2 products: max asymmetry {:.2e}, max triangle excess {:.2e} (tol 1e-9), max path deficit {:.2e} (tol 1e-6)",
      worst_sym, worst_tri, worst_path);
  return finish(c, timer, 30.0);
}

Check check_metric_sanity(std::uint64_t seed) {
  Timer timer;
  Check c{"8", "Metric sanity", false, "", 0.0};
  Rng rng(seed);

  // Class 0 sits on e1, class 1 on e2: intra cosine 1, inter cosine 0.
  Matrix axes = Matrix::Zero(10, 3);
  std::vector<int> axis_labels(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    axis_labels[static_cast<std::size_t>(i)] = i < 5 ? 0 : 1;
    axes(i, i < 5 ? 0 : 1) = 1.0;
  }
  const double axis_score = separation_score(axes, axis_labels);
  Matrix antipodal = Matrix::Zero(10, 3);
  for (Eigen::Index i = 0; i < 10; ++i) antipodal(i, 0) = i < 5 ? 1.0 : -1.0;
  const double antipodal_score = separation_score(antipodal, axis_labels);

  double worst_null = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix v = gaussian_matrix(rng, 400, 16);
    std::vector<int> labels(400);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2 == 0 ? 0 : 1;
    for (std::size_t i = labels.size() - 1; i > 0; --i) std::swap(labels[i], labels[rng.below(i + 1)]);
    worst_null = std::max(worst_null, std::fabs(separation_score(v, labels)));
  }

  const Matrix a = gaussian_matrix(rng, 200, 8);
  const double self = mutual_knn_alignment(a, a, 10);
  double chance = 0.0;
  for (int trial = 0; trial < 5; ++trial) chance += mutual_knn_alignment(gaussian_matrix(rng, 200, 8), gaussian_matrix(rng, 200, 8), 10);
  chance /= 5.0;
  const double expected = 10.0 / 199.0;

  c.passed = std::fabs(axis_score - 1.0) <= 1e-9 && worst_null < 0.05 && self == 1.0 &&
             std::fabs(chance - expected) <= 0.03;
  c.detail = fmt::format(
      "axis classes {:.12f} (antipodal classes give {:.3f}); shuffled max |score| {:.4f} (<0.05); "
      "mNN(A,A) {}; independent mNN {:.4f} vs k/(n-1) {:.4f}",
      axis_score, antipodal_score, worst_null, self, chance, expected);
  return finish(c, timer, 0.0);
}

std::vector<double> episode_accuracies(const SweepConfig& cfg, Method method, const ManifoldSpec& spec,
                                       double ratio, std::size_t count, Stream stream) {
  std::vector<double> acc(count);
  const Hyperparameters& hp = cfg.hp_for(method);
  for (std::size_t e = 0; e < count; ++e) {
    const Episode ep = make_episode(spec, cfg.n, ratio, cfg.num_classes, episode_seed(cfg.seed, spec, ratio, e, stream));
    acc[e] = run_episode(ep, method, hp).accuracy;
  }
  return acc;
}

Grid default_icl_grid() {
  return {{"alpha", {1.0, 4.0, 16.0, 64.0}}, {"gamma_f", {10.0, 30.0, 100.0, 300.0, 1000.0}}, {"L", {5.0, 20.0}}};
}

namespace {

SweepConfig sphere_config(std::uint64_t seed, double ratio, std::size_t workers) {
  SweepConfig cfg;
  cfg.manifolds = {ManifoldSpec::sphere()};
  cfg.methods = {Method::EigIcl};
  cfg.label_ratios = {ratio};
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

std::string point_text(const std::map<std::string, double>& p) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : p) parts.push_back(fmt::format("{}={}", k, v));
  return fmt::format("{}", fmt::join(parts, " "));
}

}  // namespace

Check check_benchmark(std::uint64_t seed, std::size_t episodes, std::size_t workers) {
  Timer timer;
  Check c{"6", "Sphere benchmark, eig-icl at ratio 0.39", false, "", 0.0};
  SweepConfig cfg = sphere_config(seed, 0.39, workers);
  const TuneResult tuned = tune_scalars(cfg, Method::EigIcl, default_icl_grid(), 30);
  cfg.per_method[Method::EigIcl] = tuned.best;
  const auto acc = episode_accuracies(cfg, Method::EigIcl, cfg.manifolds[0], 0.39, episodes);
  const double mean = mean_of(acc);
  c.passed = mean >= 0.75;
  c.detail = fmt::format("tuned {} (validation {:.4f}); {} test episodes: mean {:.4f} +- {:.4f} (bound 0.75)",
                         point_text(tuned.best_point), tuned.best_accuracy, episodes, mean, sd_of(acc));
  return finish(c, timer, 300.0);
}

Check check_method_ordering(std::uint64_t seed, std::size_t episodes, std::size_t workers) {
  Timer timer;
  Check c{"7", "eig-icl beats eig-lr at ratio 0.03", false, "", 0.0};
  SweepConfig cfg = sphere_config(seed, 0.03, workers);
  const TuneResult icl = tune_scalars(cfg, Method::EigIcl, default_icl_grid(), 30);
  const TuneResult lr = tune_scalars(cfg, Method::EigLr, {{"lambda_reg", {1e-3, 1e-2, 1e-1, 1.0, 10.0}}}, 30);
  cfg.per_method[Method::EigIcl] = icl.best;
  cfg.per_method[Method::EigLr] = lr.best;
  const auto a = episode_accuracies(cfg, Method::EigIcl, cfg.manifolds[0], 0.03, episodes);
  const auto b = episode_accuracies(cfg, Method::EigLr, cfg.manifolds[0], 0.03, episodes);
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double margin = mean_of(diff);
  const double se = sd_of(diff) / std::sqrt(static_cast<double>(diff.size()));
  c.passed = margin > 0.0;
  c.detail = fmt::format("{} paired episodes: eig-icl {:.4f} ({}), eig-lr {:.4f} ({}); margin {:.4f} (se {:.4f})",
                         episodes, mean_of(a), point_text(icl.best_point), mean_of(b), point_text(lr.best_point),
                         margin, se);
  return finish(c, timer, 0.0);
}

std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out += (pos == std::string::npos ? line : line.substr(0, pos)) + "\n";
  }
  return out;
}

Check check_sweep_determinism(std::uint64_t seed) {
  Timer timer;
  Check c{"9", "Sweep determinism", false, "", 0.0};
  SweepConfig cfg;
  cfg.manifolds = {ManifoldSpec::sphere(), ManifoldSpec::cone()};
  cfg.methods = {Method::EigIcl, Method::EigLr, Method::OrigRbfLr};
  cfg.label_ratios = {0.03, 0.39};
  cfg.episodes_per_cell = 10;
  cfg.seed = seed;
  cfg.workers = 1;
  const std::string first = strip_wall_time(sweep_csv(run_sweep(cfg)));
  cfg.workers = 3;
  const std::string second = strip_wall_time(sweep_csv(run_sweep(cfg)));
  c.passed = first == second;
  c.detail = fmt::format("{} rows, 1 vs 3 workers: {}", cfg.manifolds.size() * cfg.methods.size() * 2,
                         c.passed ? "byte-identical" : "differ");
  return finish(c, timer, 0.0);
}

std::vector<Check> oracle_battery(std::uint64_t seed) {
  return {check_laplacian_layer(seed),      check_subspace_recovery(seed), check_icl_head_oracle(seed),
          check_geodesic_vs_graph(seed),    check_product_metric(seed),    check_metric_sanity(seed)};
}

}  // namespace icssl
