#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "icssl/episode_io.hpp"
#include "icssl/harness.hpp"

using namespace icssl;

namespace {

// 40 points in two tight blobs, ten labels revealed per blob.
Episode two_blob_episode() {
  Rng g(5);
  Episode ep;
  ep.spec = ManifoldSpec::sphere();
  ep.points.resize(40, 3);
  ep.labels.assign(40, kUnlabeled);
  ep.true_labels.resize(40);
  for (int i = 0; i < 40; ++i) {
    const double cx = i < 20 ? -1.0 : 1.0;
    ep.points(i, 0) = cx + 0.05 * g.normal();
    ep.points(i, 1) = 0.05 * g.normal();
    ep.points(i, 2) = 0.05 * g.normal();
    ep.true_labels[i] = i < 20 ? 0 : 1;
    if (i % 4 == 0) ep.labels[i] = ep.true_labels[i];
  }
  ep.labeled_count = 10;
  return ep;
}

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.manifolds = {ManifoldSpec::sphere()};
  cfg.methods = {Method::EigLr};
  cfg.label_ratios = {0.1, 0.3};
  cfg.episodes_per_cell = 3;
  cfg.n = 40;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("method ids") {
  for (Method m : {Method::E2eIcl, Method::EigIcl, Method::OrigIcl, Method::EigLr, Method::OrigRbfLr})
    CHECK(parse_method(method_id(m)) == m);
  CHECK(method_id(Method::OrigRbfLr) == "orig-rbf-lr");
  CHECK_THROWS_AS(parse_method("svm"), std::invalid_argument);
  CHECK(is_icl(Method::E2eIcl));
  CHECK_FALSE(is_icl(Method::EigLr));
}

TEST_CASE("hyperparameters") {
  Hyperparameters hp;
  apply_hyperparameters(hp, {{"alpha", 4.0}, {"L", 7}, {"icl_kernel", "linear"}, {"T", 12}});
  CHECK(hp.alpha == 4.0);
  CHECK(hp.layers == 7);
  CHECK(hp.sweeps == 12);
  CHECK(hp.icl_kernel == IclKernelType::Linear);
  Hyperparameters back;
  apply_hyperparameters(back, hyperparameters_to_json(hp));
  CHECK(back == hp);
  set_hyperparameter(hp, "L", 4.6);
  CHECK(get_hyperparameter(hp, "L") == 5.0);
  CHECK_THROWS_AS(set_hyperparameter(hp, "nope", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_hyperparameters(hp, {{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_hyperparameters(hp, {{"icl_kernel", "poly"}}), std::invalid_argument);
}

TEST_CASE("eig-lr separates two blobs") {
  const Episode ep = two_blob_episode();
  const auto out = run_episode(ep, Method::EigLr, {});
  CHECK(out.accuracy == 1.0);
  CHECK(out.predictions.size() == 40);
  CHECK(out.probabilities.rows() == 40);
  const Matrix f = eigen_features(ep.points, {});
  CHECK(f.rows() == 40);
  CHECK(f.cols() == 4);
}

TEST_CASE("e2e-icl with alpha = 0 predicts class 0 everywhere") {
  Hyperparameters hp;
  hp.alpha = 0.0;
  hp.sweeps = 5;
  const auto out = run_episode(two_blob_episode(), Method::E2eIcl, hp);
  for (int p : out.predictions) CHECK(p == 0);
  CHECK(out.accuracy == 0.5);
  CHECK(out.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("every method runs and is deterministic") {
  const Episode ep = make_episode(ManifoldSpec::cone(), 60, 0.2, 2, 11);
  Hyperparameters hp;
  hp.sweeps = 10;
  for (Method m : {Method::E2eIcl, Method::EigIcl, Method::OrigIcl, Method::EigLr, Method::OrigRbfLr}) {
    const auto a = run_episode(ep, m, hp), b = run_episode(ep, m, hp);
    INFO(method_id(m));
    CHECK(a.predictions == b.predictions);
    CHECK(a.probabilities == b.probabilities);
    CHECK(a.accuracy >= 0.0);
    CHECK(a.accuracy <= 1.0);
    CHECK((a.probabilities.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("single observed class falls back to predicting it") {
  Episode ep = two_blob_episode();
  for (auto& y : ep.labels)
    if (y == 1) y = kUnlabeled;
  ep.labeled_count = 5;
  const auto out = run_episode(ep, Method::EigLr, {});
  CHECK(out.fallback);
  for (int p : out.predictions) CHECK(p == 0);
}

TEST_CASE("errors carry the method id") {
  Episode ep = two_blob_episode();
  Hyperparameters hp;
  hp.k_feat = 100;
  CHECK_THROWS_WITH(run_episode(ep, Method::EigIcl, hp), doctest::Contains("eig-icl:"));
}

TEST_CASE("sweep bookkeeping") {
  const auto r = run_sweep(small_config());
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.episode_count == 3);
    CHECK(row.error.empty());
    CHECK(row.manifold == "sphere");
    CHECK(row.method == "eig-lr");
    CHECK(row.mean_accuracy >= 0.0);
    CHECK(row.mean_accuracy <= 1.0);
    CHECK(row.std_accuracy >= 0.0);
  }
  CHECK(r.rows[0].label_ratio == 0.1);
  CHECK(r.rows[1].label_ratio == 0.3);

  SweepConfig empty = small_config();
  empty.methods.clear();
  CHECK_THROWS_AS(run_sweep(empty), std::invalid_argument);
}

TEST_CASE("failing cells become error rows") {
  SweepConfig cfg = small_config();
  cfg.methods = {Method::EigIcl, Method::EigLr};
  cfg.label_ratios = {0.3};
  Hyperparameters bad;
  bad.k_feat = 500;
  cfg.per_method[Method::EigIcl] = bad;
  const auto r = run_sweep(cfg);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].error.find("eig-icl") != std::string::npos);
  CHECK(r.rows[0].episode_count == 0);
  CHECK(r.rows[1].error.empty());
  const auto back = parse_sweep_csv(sweep_csv(r));
  CHECK(back.rows[0].error == r.rows[0].error);
}

TEST_CASE("sweeps are deterministic across worker counts and seed-isolated") {
  SweepConfig cfg = small_config();
  cfg.methods = {Method::EigLr, Method::OrigRbfLr};
  cfg.manifolds = {ManifoldSpec::sphere(), ManifoldSpec::flat_torus()};
  const auto a = run_sweep(cfg);
  cfg.workers = 3;
  const auto b = run_sweep(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean_accuracy == b.rows[i].mean_accuracy);
    CHECK(a.rows[i].std_accuracy == b.rows[i].std_accuracy);
  }
  // episode e has the same seed whatever the episode count
  const auto s = ManifoldSpec::sphere();
  CHECK(episode_seed(1, s, 0.3, 2) == episode_seed(1, s, 0.3, 2));
  CHECK(episode_seed(1, s, 0.3, 2) != episode_seed(1, s, 0.3, 2, Stream::Validation));
  CHECK(episode_seed(1, s, 0.3, 2) != episode_seed(1, ManifoldSpec::cone(), 0.3, 2));
  SweepConfig one = small_config();
  one.episodes_per_cell = 1;
  SweepConfig three = small_config();
  const double first = run_episode(make_episode(s, 40, 0.1, 2, episode_seed(4, s, 0.1, 0)), Method::EigLr, {}).accuracy;
  CHECK(run_sweep(one).rows[0].mean_accuracy == first);
}

TEST_CASE("csv round trip") {
  SweepResult r;
  r.rows.push_back({"product(sphere,cone)", "eig-icl", 0.03, 0.8125, 0.1, 20, "", 1.25});
  r.rows.push_back({"sphere", "eig-lr", 0.39, 0.0, 0.0, 0, "eig-lr: bad, \"quoted\"", 0.5});
  const std::string text = sweep_csv(r);
  CHECK(text.rfind("manifold,method,label_ratio,mean_accuracy,std_accuracy,episode_count,error,wall_time\n", 0) == 0);
  const auto back = parse_sweep_csv(text);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].manifold == "product(sphere,cone)");
  CHECK(back.rows[0].label_ratio == 0.03);
  CHECK(back.rows[0].mean_accuracy == 0.8125);
  CHECK(back.rows[1].error == r.rows[1].error);
  CHECK(sweep_csv(back) == text);
  CHECK_THROWS_AS(parse_sweep_csv("a,b\n"), std::invalid_argument);
}

TEST_CASE("config json") {
  const auto j = nlohmann::json::parse(R"({
    "_comment": "ignored",
    "manifolds": ["sphere", {"family": "cylinder", "radius": 2.0}],
    "methods": ["eig-icl", "eig-lr"],
    "label_ratios": [0.03, 0.39],
    "episodes_per_cell": 5,
    "seed": 9,
    "defaults": {"gamma": 5.0},
    "hyperparameters": {"eig-icl": {"alpha": 4.0, "L": 10}}
  })");
  const SweepConfig cfg = config_from_json(j);
  CHECK(cfg.manifolds.size() == 2);
  CHECK(cfg.manifolds[1].radius == 2.0);
  CHECK(cfg.episodes_per_cell == 5);
  CHECK(cfg.hp_for(Method::EigIcl).alpha == 4.0);
  CHECK(cfg.hp_for(Method::EigIcl).gamma == 5.0);
  CHECK(cfg.hp_for(Method::EigLr).alpha == 1.0);
  CHECK(cfg.hp_for(Method::EigLr).gamma == 5.0);
  const SweepConfig again = config_from_json(config_to_json(cfg));
  CHECK(again.hp_for(Method::EigIcl) == cfg.hp_for(Method::EigIcl));
  CHECK(again.label_ratios == cfg.label_ratios);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"manifolds":["sphere"],"methods":["eig-lr"],"typo":1})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"manifolds":["sphere"],"methods":[]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(nlohmann::json::parse(R"({"manifolds":["sphere"],"methods":["eig-lr"],"label_ratios":[1.5]})")),
      std::invalid_argument);
  CHECK(default_label_ratios().size() == 13);
  CHECK(default_label_ratios().front() == 0.03);
  CHECK(default_label_ratios().back() == doctest::Approx(0.39));
}

TEST_CASE("tuning") {
  SweepConfig cfg = small_config();
  cfg.label_ratios = {0.3};
  SUBCASE("single-point grid") {
    const auto r = tune_scalars(cfg, Method::EigIcl, {{"alpha", {3.0}}, {"gamma_f", {30.0}}}, 3);
    CHECK(r.best.alpha == 3.0);
    CHECK(r.best.gamma_f == 30.0);
    CHECK(r.table.size() == 1);
    CHECK(r.best_point.at("alpha") == 3.0);
  }
  SUBCASE("alpha 0 is chance") {
    const auto r = tune_scalars(cfg, Method::EigIcl, {{"alpha", {0.0, 0.5}}, {"gamma_f", {30.0}}}, 5);
    CHECK(r.best.alpha == 0.5);
  }
  SUBCASE("argmax dominates the default") {
    const auto r = tune_scalars(cfg, Method::EigIcl, {{"alpha", {1.0, 4.0}}, {"gamma_f", {1.0, 30.0}}}, 4);
    double default_acc = -1.0;
    for (const auto& e : r.table)
      if (e.point.at("alpha") == 1.0 && e.point.at("gamma_f") == 1.0) default_acc = e.validation_accuracy;
    CHECK(r.best_accuracy >= default_acc - 1e-12);
    CHECK(r.table.size() == 4);
  }
  CHECK_THROWS_AS(tune_scalars(cfg, Method::EigIcl, {}, 3), std::invalid_argument);
}

TEST_CASE("plot") {
  SweepResult one;
  one.rows.push_back({"sphere", "eig-icl", 0.39, 0.9, 0.05, 10, "", 1.0});
  const std::string svg = plot_svg(one);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  std::size_t markers = 0;
  for (std::size_t p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++markers;
  CHECK(markers == 1);
  CHECK(plot_svg(one) == svg);

  SweepResult two = one;
  two.rows.push_back({"sphere", "eig-lr", 0.39, 0.7, 0.05, 10, "", 1.0});
  two.rows.insert(two.rows.begin(), {"sphere", "orig-icl", 0.03, 0.6, 0.05, 10, "", 1.0});
  const std::string s2 = plot_svg(two);
  CHECK(s2.find(">orig-icl<") < s2.find(">eig-icl<"));
  CHECK(s2.find(">eig-icl<") < s2.find(">eig-lr<"));
  CHECK_THROWS_AS(plot_svg(SweepResult{}), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path();
  emit_plot(two, dir / "icssl_a.svg");
  emit_plot(two, dir / "icssl_b.svg");
  CHECK(read_file(dir / "icssl_a.svg") == read_file(dir / "icssl_b.svg"));
}
