#include "icssl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "icssl/baselines.hpp"
#include "icssl/episode_io.hpp"
#include "icssl/metrics.hpp"
#include "icssl/spectral.hpp"

namespace icssl {

namespace {

constexpr Method kAllMethods[] = {Method::E2eIcl, Method::EigIcl, Method::OrigIcl, Method::EigLr,
                                  Method::OrigRbfLr};

// Runs fn(0..count-1) on up to `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t as_count(double v, const std::string& key) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(key + ": must be a nonnegative count");
  return static_cast<std::size_t>(std::llround(v));
}

}  // namespace

std::string_view method_id(Method m) {
  switch (m) {
    case Method::E2eIcl: return "e2e-icl";
    case Method::EigIcl: return "eig-icl";
    case Method::OrigIcl: return "orig-icl";
    case Method::EigLr: return "eig-lr";
    case Method::OrigRbfLr: return "orig-rbf-lr";
  }
  return "?";
}

Method parse_method(std::string_view id) {
  for (Method m : kAllMethods) {
    if (method_id(m) == id) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(id) +
                              "' (expected e2e-icl, eig-icl, orig-icl, eig-lr, orig-rbf-lr)");
}

bool is_icl(Method m) { return m == Method::E2eIcl || m == Method::EigIcl || m == Method::OrigIcl; }

void set_hyperparameter(Hyperparameters& hp, const std::string& key, double value) {
  if (key == "gamma") hp.gamma = value;
  else if (key == "knn") hp.knn = as_count(value, key);
  else if (key == "k_feat") hp.k_feat = as_count(value, key);
  else if (key == "T") hp.sweeps = as_count(value, key);
  else if (key == "alpha") hp.alpha = value;
  else if (key == "L") hp.layers = as_count(value, key);
  else if (key == "gamma_f") hp.gamma_f = value;
  else if (key == "beta") hp.beta = value;
  else if (key == "lambda_reg") hp.lambda_reg = value;
  else if (key == "gamma_b") hp.gamma_b = value;
  else if (key == "divide_by_m") hp.divide_by_m = value != 0.0;
  else throw std::invalid_argument("unknown hyperparameter '" + key + "'");
}

double get_hyperparameter(const Hyperparameters& hp, const std::string& key) {
  if (key == "gamma") return hp.gamma;
  if (key == "knn") return static_cast<double>(hp.knn);
  if (key == "k_feat") return static_cast<double>(hp.k_feat);
  if (key == "T") return static_cast<double>(hp.sweeps);
  if (key == "alpha") return hp.alpha;
  if (key == "L") return static_cast<double>(hp.layers);
  if (key == "gamma_f") return hp.gamma_f;
  if (key == "beta") return hp.beta;
  if (key == "lambda_reg") return hp.lambda_reg;
  if (key == "gamma_b") return hp.gamma_b;
  if (key == "divide_by_m") return hp.divide_by_m ? 1.0 : 0.0;
  throw std::invalid_argument("unknown hyperparameter '" + key + "'");
}

void apply_hyperparameters(Hyperparameters& hp, const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("hyperparameters: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "icl_kernel") {
      const auto s = value.get<std::string>();
      if (s == "rbf") hp.icl_kernel = IclKernelType::Rbf;
      else if (s == "linear") hp.icl_kernel = IclKernelType::Linear;
      else throw std::invalid_argument("icl_kernel: expected 'rbf' or 'linear'");
    } else if (key == "divide_by_m") {
      hp.divide_by_m = value.get<bool>();
    } else {
      if (!value.is_number()) throw std::invalid_argument(key + ": expected a number");
      set_hyperparameter(hp, key, value.get<double>());
    }
  }
}

nlohmann::json hyperparameters_to_json(const Hyperparameters& hp) {
  return {{"gamma", hp.gamma},         {"knn", hp.knn},
          {"k_feat", hp.k_feat},       {"T", hp.sweeps},
          {"alpha", hp.alpha},         {"L", hp.layers},
          {"gamma_f", hp.gamma_f},     {"icl_kernel", hp.icl_kernel == IclKernelType::Rbf ? "rbf" : "linear"},
          {"divide_by_m", hp.divide_by_m}, {"beta", hp.beta},
          {"lambda_reg", hp.lambda_reg}, {"gamma_b", hp.gamma_b}};
}

Matrix eigen_features(const Matrix& points, const Hyperparameters& hp) {
  const AffinityMatrix a = knn_sparsify(affinity(points, hp.gamma, DiagonalMode::ZeroDiagonal), hp.knn);
  return bottom_eigenvectors(laplacians(a).symmetric, hp.k_feat).vectors;
}

namespace {

EpisodeOutcome run_episode_impl(const Episode& ep, Method method, const Hyperparameters& hp,
                                const SweepObserver& trace) {
  const auto n = ep.size();
  if (ep.labels.size() != n) throw std::invalid_argument("episode: labels length mismatch");
  const std::vector<bool> labeled = ep.labeled_mask();
  std::vector<bool> unlabeled(n);
  for (std::size_t i = 0; i < n; ++i) unlabeled[i] = !labeled[i];
  if (std::none_of(unlabeled.begin(), unlabeled.end(), [](bool b) { return b; })) {
    throw std::invalid_argument("episode has no unlabeled tokens to score");
  }
  const int c = ep.num_classes;

  EpisodeOutcome out;
  if (is_icl(method)) {
    Matrix phi;
    if (method == Method::E2eIcl) {
      phi = tf_rep(ep.points.transpose(), hp.gamma, hp.k_feat, hp.sweeps, trace);
    } else if (method == Method::EigIcl) {
      phi = eigen_features(ep.points, hp).transpose();
    } else {
      phi = ep.points.transpose();
    }
    IclConfig cfg;
    cfg.alpha = hp.alpha;
    cfg.layers = hp.layers;
    cfg.kernel = hp.icl_kernel;
    cfg.kernel_gamma = hp.gamma_f;
    cfg.divide_by_m = hp.divide_by_m;
    out.probabilities = forward(phi, ep.labels, ClassEmbeddings::scaled_identity(c, hp.beta), cfg);
  } else {
    const Matrix x = method == Method::EigLr ? eigen_features(ep.points, hp) : ep.points;
    // Fit on the classes actually observed, then scatter back to C columns.
    std::vector<int> present;
    for (std::size_t i = 0; i < n; ++i) {
      if (labeled[i] && std::find(present.begin(), present.end(), ep.labels[i]) == present.end()) {
        present.push_back(ep.labels[i]);
      }
    }
    std::sort(present.begin(), present.end());
    out.probabilities = Matrix::Zero(static_cast<Eigen::Index>(n), c);
    if (present.empty()) throw std::invalid_argument("episode has no labeled tokens");
    if (present.size() == 1) {
      out.fallback = true;
      out.probabilities.col(present[0]).setOnes();
    } else {
      std::vector<Eigen::Index> rows;
      std::vector<int> y;
      for (std::size_t i = 0; i < n; ++i) {
        if (!labeled[i]) continue;
        rows.push_back(static_cast<Eigen::Index>(i));
        y.push_back(static_cast<int>(std::find(present.begin(), present.end(), ep.labels[i]) - present.begin()));
      }
      const Matrix xl = x(rows, Eigen::all);
      const int cp = static_cast<int>(present.size());
      const LogRegModel model = method == Method::EigLr
                                    ? fit_logreg(xl, y, hp.lambda_reg, cp)
                                    : fit_kernel_logreg(xl, y, hp.gamma_b, hp.lambda_reg, cp);
      const Matrix p = predict_logreg(model, x);
      for (int k = 0; k < cp; ++k) out.probabilities.col(present[static_cast<std::size_t>(k)]) = p.col(k);
    }
  }

  out.predictions = predict(out.probabilities);
  bool has_truth = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (unlabeled[i] && (i >= ep.true_labels.size() || ep.true_labels[i] < 0)) has_truth = false;
  }
  if (has_truth) {
    out.accuracy = accuracy(out.predictions, ep.true_labels, unlabeled);
    double loss = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!unlabeled[i]) continue;
      loss -= std::log(out.probabilities(static_cast<Eigen::Index>(i), ep.true_labels[i]));
      ++count;
    }
    out.loss = loss / static_cast<double>(count);
  } else {
    out.accuracy = std::numeric_limits<double>::quiet_NaN();
    out.loss = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace

EpisodeOutcome run_episode(const Episode& ep, Method method, const Hyperparameters& hp,
                           const SweepObserver& trace) {
  try {
    return run_episode_impl(ep, method, hp, trace);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(method_id(method)) + ": " + e.what());
  }
}

std::vector<double> default_label_ratios() {
  std::vector<double> r;
  for (int i = 1; i <= 13; ++i) r.push_back(0.03 * i);
  return r;
}

void SweepConfig::validate() const {
  if (manifolds.empty()) throw std::invalid_argument("manifolds: empty list");
  if (methods.empty()) throw std::invalid_argument("methods: empty list");
  if (label_ratios.empty()) throw std::invalid_argument("label_ratios: empty list");
  for (double r : label_ratios) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("label_ratios: every ratio must lie in (0, 1)");
  }
  if (episodes_per_cell < 1) throw std::invalid_argument("episodes_per_cell: must be >= 1");
  if (n < 2) throw std::invalid_argument("n: must be >= 2");
  if (num_classes < 2) throw std::invalid_argument("num_classes: must be >= 2");
  if (workers < 1) throw std::invalid_argument("workers: must be >= 1");
  for (const auto& m : manifolds) m.validate();
}

const Hyperparameters& SweepConfig::hp_for(Method m) const {
  const auto it = per_method.find(m);
  return it == per_method.end() ? defaults : it->second;
}

SweepConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  SweepConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (!key.empty() && key[0] == '_') continue;  // comments
    if (key == "manifolds") {
      for (const auto& m : value) cfg.manifolds.push_back(spec_from_json(m));
    } else if (key == "methods") {
      for (const auto& m : value) cfg.methods.push_back(parse_method(m.get<std::string>()));
    } else if (key == "label_ratios") {
      cfg.label_ratios = value.get<std::vector<double>>();
    } else if (key == "episodes_per_cell") {
      cfg.episodes_per_cell = value.get<std::size_t>();
    } else if (key == "n") {
      cfg.n = value.get<std::size_t>();
    } else if (key == "num_classes") {
      cfg.num_classes = value.get<int>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "workers") {
      cfg.workers = value.get<std::size_t>();
    } else if (key != "defaults" && key != "hyperparameters") {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (j.contains("defaults")) apply_hyperparameters(cfg.defaults, j.at("defaults"));
  if (j.contains("hyperparameters")) {
    for (const auto& [id, overrides] : j.at("hyperparameters").items()) {
      Hyperparameters hp = cfg.defaults;
      apply_hyperparameters(hp, overrides);
      cfg.per_method[parse_method(id)] = hp;
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const SweepConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["n"] = cfg.n;
  j["num_classes"] = cfg.num_classes;
  j["episodes_per_cell"] = cfg.episodes_per_cell;
  j["workers"] = cfg.workers;
  j["label_ratios"] = cfg.label_ratios;
  j["manifolds"] = nlohmann::json::array();
  for (const auto& m : cfg.manifolds) j["manifolds"].push_back(spec_to_json(m));
  j["methods"] = nlohmann::json::array();
  for (Method m : cfg.methods) j["methods"].push_back(std::string(method_id(m)));
  j["defaults"] = hyperparameters_to_json(cfg.defaults);
  j["hyperparameters"] = nlohmann::json::object();
  for (const auto& [m, hp] : cfg.per_method) j["hyperparameters"][std::string(method_id(m))] = hyperparameters_to_json(hp);
  return j;
}

SweepConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t episode_seed(std::uint64_t base, const ManifoldSpec& spec, double ratio,
                           std::size_t e, Stream stream) {
  return derive_seed(base, {static_cast<std::uint64_t>(stream), fnv1a(spec.name()),
                            std::bit_cast<std::uint64_t>(ratio), static_cast<std::uint64_t>(e)});
}

namespace {

void fill_stats(SweepRow& row, const std::vector<double>& accs) {
  row.episode_count = accs.size();
  if (accs.empty()) {
    row.mean_accuracy = std::numeric_limits<double>::quiet_NaN();
    row.std_accuracy = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double sum = 0.0;
  for (double a : accs) sum += a;
  const double mean = sum / static_cast<double>(accs.size());
  double ss = 0.0;
  for (double a : accs) ss += (a - mean) * (a - mean);
  row.mean_accuracy = mean;
  row.std_accuracy = accs.size() > 1 ? std::sqrt(ss / static_cast<double>(accs.size() - 1)) : 0.0;
}

SweepRow run_cell(const SweepConfig& cfg, const ManifoldSpec& spec, Method method, double ratio) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.manifold = spec.name();
  row.method = std::string(method_id(method));
  row.label_ratio = ratio;
  std::vector<double> accs;
  for (std::size_t e = 0; e < cfg.episodes_per_cell; ++e) {
    try {
      const Episode ep = make_episode(spec, cfg.n, ratio, cfg.num_classes, episode_seed(cfg.seed, spec, ratio, e));
      accs.push_back(run_episode(ep, method, cfg.hp_for(method)).accuracy);
    } catch (const std::exception& ex) {
      if (row.error.empty()) row.error = fmt::format("episode {}: {}", e, ex.what());
    }
  }
  fill_stats(row, accs);
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else if (ch == '\n' || ch == '\r') out += ' ';
    else out += ch;
  }
  return out + "\"";
}

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

double parse_num(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("csv: bad number '" + s + "'");
  return v;
}

constexpr const char* kCsvHeader =
    "manifold,method,label_ratio,mean_accuracy,std_accuracy,episode_count,error,wall_time";

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Cell {
    const ManifoldSpec* spec;
    Method method;
    double ratio;
  };
  std::vector<Cell> cells;
  for (const auto& spec : cfg.manifolds)
    for (Method m : cfg.methods)
      for (double r : cfg.label_ratios) cells.push_back({&spec, m, r});

  SweepResult result;
  result.rows.resize(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
    result.rows[i] = run_cell(cfg, *cells[i].spec, cells[i].method, cells[i].ratio);
  });
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : result.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{:.6f}\n", csv_field(r.manifold), csv_field(r.method),
                       num(r.label_ratio), num(r.mean_accuracy), num(r.std_accuracy), r.episode_count,
                       csv_field(r.error), r.wall_time);
  }
  return out;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  write_file_atomic(path, sweep_csv(result));
}

SweepResult parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::invalid_argument("csv: unexpected header '" + line + "'");
  SweepResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument(fmt::format("csv line {}: expected 8 fields, got {}", lineno, f.size()));
    SweepRow r;
    r.manifold = f[0];
    r.method = f[1];
    r.label_ratio = parse_num(f[2]);
    r.mean_accuracy = parse_num(f[3]);
    r.std_accuracy = parse_num(f[4]);
    r.episode_count = static_cast<std::size_t>(std::stoull(f[5]));
    r.error = f[6];
    r.wall_time = parse_num(f[7]);
    result.rows.push_back(std::move(r));
  }
  return result;
}

SweepResult read_sweep_csv(const std::filesystem::path& path) { return parse_sweep_csv(read_file(path)); }

double mean_accuracy(const std::vector<Episode>& episodes, Method method, const Hyperparameters& hp) {
  if (episodes.empty()) throw std::invalid_argument("mean_accuracy: no episodes");
  double sum = 0.0;
  for (const auto& ep : episodes) {
    // A failing hyperparameter point scores zero on that episode.
    try {
      sum += run_episode(ep, method, hp).accuracy;
    } catch (const std::exception&) {
    }
  }
  return sum / static_cast<double>(episodes.size());
}

TuneResult tune_scalars(const SweepConfig& cfg, Method method, const Grid& grid,
                        std::size_t validation_episodes) {
  if (grid.empty()) throw std::invalid_argument("tune: empty grid");
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw std::invalid_argument("tune: no candidates for '" + key + "'");
    Hyperparameters probe;
    set_hyperparameter(probe, key, values.front());  // rejects unknown keys early
  }
  if (validation_episodes < 1) throw std::invalid_argument("tune: validation_episodes must be >= 1");

  std::vector<Episode> episodes;
  for (const auto& spec : cfg.manifolds)
    for (double r : cfg.label_ratios)
      for (std::size_t e = 0; e < validation_episodes; ++e)
        episodes.push_back(make_episode(spec, cfg.n, r, cfg.num_classes,
                                        episode_seed(cfg.seed, spec, r, e, Stream::Validation)));

  // Cartesian product, last key varying fastest.
  std::vector<std::map<std::string, double>> points(1);
  for (const auto& [key, values] : grid) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points) {
      for (double v : values) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  TuneResult out;
  out.table.resize(points.size());
  std::vector<Hyperparameters> hps(points.size(), cfg.hp_for(method));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (const auto& [key, v] : points[i]) set_hyperparameter(hps[i], key, v);

  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    out.table[i].point = points[i];
    out.table[i].validation_accuracy = mean_accuracy(episodes, method, hps[i]);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double a = out.table[i].validation_accuracy, b = out.table[best].validation_accuracy;
    bool better = a > b;
    if (a == b) {
      if (hps[i].alpha != hps[best].alpha) better = hps[i].alpha < hps[best].alpha;
      else better = hps[i].layers < hps[best].layers;
    }
    if (better) best = i;
  }
  out.best = hps[best];
  out.best_point = points[best];
  out.best_accuracy = out.table[best].validation_accuracy;
  return out;
}

std::string plot_svg(const SweepResult& result) {
  if (result.rows.empty()) throw std::invalid_argument("plot: no rows");
  std::vector<std::string> manifolds, methods;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  double xmax = 0.0;
  for (const auto& r : result.rows) {
    remember(manifolds, r.manifold);
    remember(methods, r.method);
    if (std::isfinite(r.label_ratio)) xmax = std::max(xmax, r.label_ratio);
  }
  if (!(xmax > 0.0)) xmax = 1.0;
  xmax *= 1.05;

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const double pw = 360, ph = 260, ml = 55, mr = 15, mt = 35, mb = 45, legend_w = 130;
  const double width = static_cast<double>(manifolds.size()) * (pw + ml + mr) + legend_w;
  const double height = ph + mt + mb;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height, width, height);

  for (std::size_t p = 0; p < manifolds.size(); ++p) {
    const double ox = static_cast<double>(p) * (pw + ml + mr) + ml;
    auto sx = [&](double x) { return ox + x / xmax * pw; };
    auto sy = [&](double y) { return mt + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };

    svg += fmt::format("<text x=\"{:.2f}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                       ox + pw / 2, manifolds[p]);
    svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                       ox, mt, pw, ph);
    for (int t = 0; t <= 4; ++t) {
      const double y = 0.25 * t;
      svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#dddddd\"/>\n",
                         ox, sy(y), ox + pw, sy(y));
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", ox - 5, sy(y) + 4, y);
      const double x = xmax / 1.05 * t / 4.0;
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.2f}</text>\n", sx(x), mt + ph + 15, x);
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">label ratio</text>\n", ox + pw / 2,
                       mt + ph + 35);
    svg += fmt::format("<text transform=\"translate({:.2f},{:.2f}) rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n",
                       ox - 40, mt + ph / 2);

    for (std::size_t k = 0; k < methods.size(); ++k) {
      std::vector<const SweepRow*> rows;
      for (const auto& r : result.rows) {
        if (r.manifold == manifolds[p] && r.method == methods[k] && std::isfinite(r.mean_accuracy)) rows.push_back(&r);
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const SweepRow* a, const SweepRow* b) { return a->label_ratio < b->label_ratio; });
      if (rows.empty()) continue;
      const char* color = kColors[k % std::size(kColors)];
      std::string band, line;
      for (const auto* r : rows) {
        const double s = std::isfinite(r->std_accuracy) ? r->std_accuracy : 0.0;
        band += fmt::format("{:.2f},{:.2f} ", sx(r->label_ratio), sy(r->mean_accuracy + s));
        line += fmt::format("{:.2f},{:.2f} ", sx(r->label_ratio), sy(r->mean_accuracy));
      }
      for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        const double s = std::isfinite((*it)->std_accuracy) ? (*it)->std_accuracy : 0.0;
        band += fmt::format("{:.2f},{:.2f} ", sx((*it)->label_ratio), sy((*it)->mean_accuracy - s));
      }
      band.pop_back();
      line.pop_back();
      svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n", band, color);
      svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", line, color);
      for (const auto* r : rows) {
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", sx(r->label_ratio),
                           sy(r->mean_accuracy), color);
      }
    }
  }

  const double lx = width - legend_w + 5;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const double ly = mt + 10 + 18.0 * static_cast<double>(k);
    svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n", lx, ly - 4,
                       kColors[k % std::size(kColors)]);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", lx + 18, ly, methods[k]);
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const SweepResult& result, const std::filesystem::path& path) {
  write_file_atomic(path, plot_svg(result));
}

}  // namespace icssl
