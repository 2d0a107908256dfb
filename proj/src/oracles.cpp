#include "icssl/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace icssl::oracle {

Mat right_normalized_laplacian(const Mat& cols, double gamma) {
  const std::size_t n = cols.size();
  Mat a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < cols[i].size(); ++t) d2 += (cols[i][t] - cols[j][t]) * (cols[i][t] - cols[j][t]);
      a[i][j] = std::exp(-gamma * d2);
    }
  }
  std::vector<double> deg(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) deg[j] += a[i][j];
  Mat out(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i][j] = (i == j ? 1.0 : 0.0) - a[i][j] / deg[j];
  return out;
}

namespace {

double kern(const GdInstance& inst, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t t = 0; t < inst.phi[i].size(); ++t) {
    const double a = inst.phi[i][t], b = inst.phi[j][t];
    s += inst.rbf ? (a - b) * (a - b) : a * b;
  }
  return inst.rbf ? std::exp(-inst.gamma_f * s) : s;
}

std::vector<double> probs_of(const Mat& w, const std::vector<double>& f) {
  std::vector<double> logit(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    logit[c] = 0.0;
    for (std::size_t t = 0; t < f.size(); ++t) logit[c] += w[c][t] * f[t];
  }
  const double mx = *std::max_element(logit.begin(), logit.end());
  double z = 0.0;
  for (auto& v : logit) z += (v = std::exp(v - mx));
  for (auto& v : logit) v /= z;
  return logit;
}

}  // namespace

Mat gd_recursion(const GdInstance& inst) {
  const std::size_t n = inst.phi.size();
  const std::size_t dim = inst.w.front().size();
  std::size_t m = 0;
  for (int y : inst.labels) m += y >= 0 ? 1 : 0;
  if (m == 0) throw std::invalid_argument("oracle: no labeled tokens");
  const double step = inst.divide_by_m ? inst.alpha / static_cast<double>(m) : inst.alpha;

  Mat f(n, std::vector<double>(dim, 0.0));
  for (std::size_t s = 0; s < inst.steps; ++s) {
    Mat resid(n, std::vector<double>(dim, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      if (inst.labels[j] < 0) continue;
      const auto p = probs_of(inst.w, f[j]);
      for (std::size_t t = 0; t < dim; ++t) {
        double e = 0.0;
        for (std::size_t c = 0; c < inst.w.size(); ++c) e += inst.w[c][t] * p[c];
        resid[j][t] = inst.w[static_cast<std::size_t>(inst.labels[j])][t] - e;
      }
    }
    Mat next = f;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (inst.labels[j] < 0) continue;
        const double k = kern(inst, i, j);
        for (std::size_t t = 0; t < dim; ++t) next[i][t] += step * resid[j][t] * k;
      }
    }
    f = std::move(next);
  }
  return f;
}

Mat gd_probabilities(const GdInstance& inst, const Mat& f) {
  Mat out;
  for (const auto& fi : f) out.push_back(probs_of(inst.w, fi));
  return out;
}

std::vector<double> dijkstra(const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
                             std::size_t source) {
  std::vector<double> dist(adj.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pq.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

std::vector<double> charpoly_roots(const Mat& m) {
  const std::size_t n = m.size();
  // Faddeev-LeVerrier: p(x) = x^n + c[1] x^{n-1} + ... + c[n].
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Mat mk(n, std::vector<double>(n, 0.0));  // M_k
  Mat am(n, std::vector<double>(n, 0.0));  // A M_{k-1}
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{k-1} I, with M_0 = 0.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) mk[i][j] = am[i][j] + (i == j ? c[k - 1] : 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += m[i][t] * mk[t][j];
        am[i][j] = s;
      }
    }
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += am[i][i];
    c[k] = -tr / static_cast<double>(k);
  }
  auto p = [&](double x) {
    double v = 0.0;
    for (double ck : c) v = v * x + ck;
    return v;
  };

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) r += std::fabs(m[i][j]);
    lo = std::min(lo, m[i][i] - r);
    hi = std::max(hi, m[i][i] + r);
  }
  lo -= 1e-6;
  hi += 1e-6;
  const int grid = 20000;
  std::vector<double> roots;
  double x0 = lo, p0 = p(lo);
  for (int g = 1; g <= grid; ++g) {
    const double x1 = lo + (hi - lo) * g / grid;
    const double p1 = p(x1);
    if (p0 == 0.0) {
      roots.push_back(x0);
    } else if ((p0 < 0.0) != (p1 < 0.0) && p1 != 0.0) {
      double a = x0, b = x1, pa = p0;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double pm = p(mid);
        if ((pm < 0.0) == (pa < 0.0)) {
          a = mid;
          pa = pm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    p0 = p1;
  }
  if (p0 == 0.0) roots.push_back(x0);
  return roots;
}

}  // namespace icssl::oracle
