#include "icssl/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "icssl/rng.hpp"

namespace icssl {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kDomainSlack = 1e-9;

std::size_t factor_intrinsic_dim(Family f) {
  switch (f) {
    case Family::SwissRoll:
      return 1;
    case Family::Product:
      throw std::invalid_argument("factors: nested Product is not allowed");
    default:
      return 2;
  }
}

double wrapped_angle(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, kTwoPi - d);
}

void require_in(double v, double lo, double hi, const char* what) {
  if (!(v >= lo - kDomainSlack && v <= hi + kDomainSlack)) {
    throw std::invalid_argument(std::string("geodesic: parameter ") + what + " out of chart domain");
  }
}

void check_domain(const ManifoldSpec& spec, std::span<const double> p) {
  switch (spec.family) {
    case Family::Sphere:
      require_in(p[0], 0.0, kPi, "theta");
      require_in(p[1], 0.0, kTwoPi, "phi");
      break;
    case Family::Cylinder:
      require_in(p[0], 0.0, kTwoPi, "theta");
      require_in(p[1], 0.0, 1.0, "z");
      break;
    case Family::Cone:
      require_in(p[0], 0.0, 1.0, "s");
      require_in(p[1], 0.0, kTwoPi, "theta");
      break;
    case Family::SwissRoll:
      require_in(p[0], 0.0, 1.0, "t");
      break;
    case Family::FlatTorus:
      require_in(p[0], 0.0, kTwoPi, "theta");
      require_in(p[1], 0.0, kTwoPi, "phi");
      break;
    case Family::Product:
      break;
  }
}

double swiss_roll_arc(double t) {
  return std::pow(1.0 + 4.0 * kPi * kPi * t * t, 1.5);
}

double elementary_geodesic(const ManifoldSpec& spec, std::span<const double> p,
                           std::span<const double> q) {
  check_domain(spec, p);
  check_domain(spec, q);
  switch (spec.family) {
    case Family::Sphere: {
      const Eigen::Vector3d u = chart(spec, p);
      const Eigen::Vector3d v = chart(spec, q);
      // arccos<u,v>, evaluated through atan2 to stay accurate near 0 and pi.
      return std::atan2(u.cross(v).norm(), u.dot(v));
    }
    case Family::Cylinder: {
      const double arc = spec.radius * wrapped_angle(p[0], q[0]);
      return std::hypot(arc, p[1] - q[1]);
    }
    case Family::Cone: {
      if (!spec.cone_alpha) throw std::invalid_argument("cone_alpha: unresolved apex angle");
      const double phi = std::sin(*spec.cone_alpha) * wrapped_angle(p[1], q[1]);
      // s1^2 + s2^2 - 2 s1 s2 cos(phi), rewritten without cancellation.
      const double ds = p[0] - q[0];
      const double h = std::sin(0.5 * phi);
      return std::sqrt(std::max(0.0, ds * ds + 4.0 * p[0] * q[0] * h * h));
    }
    case Family::SwissRoll:
      return std::fabs(swiss_roll_arc(q[0]) - swiss_roll_arc(p[0])) / (6.0 * kPi * kPi);
    case Family::FlatTorus:
      return std::hypot(wrapped_angle(p[0], q[0]), wrapped_angle(p[1], q[1]));
    case Family::Product:
      break;
  }
  throw std::logic_error("elementary_geodesic: product spec");
}

void draw_params(const ManifoldSpec& spec, Rng& rng, double* out) {
  switch (spec.family) {
    case Family::Sphere:
      out[0] = rng.uniform(0.0, kPi);
      out[1] = rng.uniform(0.0, kTwoPi);
      break;
    case Family::Cylinder:
      out[0] = rng.uniform(0.0, kTwoPi);
      out[1] = rng.uniform01();
      break;
    case Family::Cone:
      out[0] = rng.uniform01();
      out[1] = rng.uniform(0.0, kTwoPi);
      break;
    case Family::SwissRoll:
      out[0] = rng.uniform01();
      break;
    case Family::FlatTorus:
      out[0] = rng.uniform(0.0, kTwoPi);
      out[1] = rng.uniform(0.0, kTwoPi);
      break;
    case Family::Product:
      throw std::logic_error("draw_params: product spec");
  }
}

std::vector<const ManifoldSpec*> elementary_factors(const ManifoldSpec& spec) {
  std::vector<const ManifoldSpec*> out;
  if (spec.family == Family::Product) {
    for (const auto& f : spec.factors) out.push_back(&f);
  } else {
    out.push_back(&spec);
  }
  return out;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Sphere: return "sphere";
    case Family::Cylinder: return "cylinder";
    case Family::Cone: return "cone";
    case Family::SwissRoll: return "swiss_roll";
    case Family::FlatTorus: return "flat_torus";
    case Family::Product: return "product";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Sphere, Family::Cylinder, Family::Cone, Family::SwissRoll,
                   Family::FlatTorus, Family::Product}) {
    if (family_name(f) == name) return f;
  }
  if (name == "torus") return Family::FlatTorus;
  if (name == "swissroll" || name == "spiral") return Family::SwissRoll;
  throw std::invalid_argument("family: unknown manifold family '" + std::string(name) + "'");
}

void ManifoldSpec::validate() const {
  if (threshold && !(*threshold > 0.0)) throw std::invalid_argument("threshold: must be > 0");
  switch (family) {
    case Family::Cylinder:
      if (!(radius > 0.0)) throw std::invalid_argument("radius: must be > 0");
      break;
    case Family::Cone:
      if (cone_alpha && !(*cone_alpha > 0.0 && *cone_alpha < kPi / 2)) {
        throw std::invalid_argument("cone_alpha: must lie in (0, pi/2)");
      }
      break;
    case Family::Product:
      if (factors.size() < 2) throw std::invalid_argument("factors: a product needs at least 2 factors");
      for (const auto& f : factors) {
        if (f.family == Family::Product) throw std::invalid_argument("factors: nested Product is not allowed");
        f.validate();
      }
      break;
    default:
      break;
  }
  if (family != Family::Product && !factors.empty()) {
    throw std::invalid_argument("factors: only a Product may list factors");
  }
}

std::size_t ManifoldSpec::intrinsic_dim() const {
  if (family != Family::Product) return factor_intrinsic_dim(family);
  std::size_t d = 0;
  for (const auto& f : factors) d += factor_intrinsic_dim(f.family);
  return d;
}

std::size_t ManifoldSpec::ambient_dim() const {
  return family == Family::Product ? 3 * factors.size() : 3;
}

std::string ManifoldSpec::name() const {
  std::string s(family_name(family));
  if (family == Family::Product) {
    s += '(';
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (i) s += ',';
      s += factors[i].name();
    }
    s += ')';
  }
  return s;
}

std::optional<double> ManifoldSpec::default_threshold(Family f) {
  switch (f) {
    case Family::Sphere: return kPi / 3.0;
    case Family::Cylinder: return 1.0;
    case Family::Cone: return 0.5;
    case Family::FlatTorus: return 0.5;
    default: return std::nullopt;
  }
}

std::vector<bool> Episode::labeled_mask() const {
  std::vector<bool> mask(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] != kUnlabeled;
  return mask;
}

Eigen::Vector3d chart(const ManifoldSpec& spec, std::span<const double> p) {
  switch (spec.family) {
    case Family::Sphere:
      return {std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]), std::cos(p[0])};
    case Family::Cylinder:
      return {spec.radius * std::cos(p[0]), spec.radius * std::sin(p[0]), p[1]};
    case Family::Cone: {
      if (!spec.cone_alpha) throw std::invalid_argument("cone_alpha: unresolved apex angle");
      const double sa = std::sin(*spec.cone_alpha);
      const double ca = std::cos(*spec.cone_alpha);
      return {p[0] * sa * std::cos(p[1]), p[0] * sa * std::sin(p[1]), p[0] * ca};
    }
    case Family::SwissRoll: {
      const double t = p[0];
      return {t * t * std::cos(4.0 * kPi * t), t * t * std::sin(4.0 * kPi * t), 1.0};
    }
    case Family::FlatTorus:
      return {p[0], p[1], 0.0};
    case Family::Product:
      break;
  }
  throw std::invalid_argument("family: chart() takes an elementary factor");
}

SampledManifold sample_manifold(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 2) throw std::invalid_argument("n: need at least 2 samples");

  SampledManifold sm;
  sm.spec = spec;
  sm.seed = seed;

  // Resolve unset cone angles first, from their own stream.
  auto resolve = [&](ManifoldSpec& f, std::uint64_t idx) {
    if (f.family == Family::Cone && !f.cone_alpha) {
      Rng r(derive_seed(seed, {idx}), Stream::ConeAngle);
      f.cone_alpha = r.uniform(kConeAlphaMin, kConeAlphaMax);
    }
  };
  if (sm.spec.family == Family::Product) {
    for (std::size_t k = 0; k < sm.spec.factors.size(); ++k) resolve(sm.spec.factors[k], k);
  } else {
    resolve(sm.spec, 0);
  }

  const auto factors = elementary_factors(sm.spec);
  const auto m = static_cast<Eigen::Index>(sm.spec.intrinsic_dim());
  const auto d = static_cast<Eigen::Index>(sm.spec.ambient_dim());
  sm.intrinsic.resize(static_cast<Eigen::Index>(n), m);
  sm.ambient.resize(static_cast<Eigen::Index>(n), d);

  Rng rng(seed, Stream::Sampling);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      draw_params(*factors[k], rng, row.data() + off);
      const std::size_t fd = factor_intrinsic_dim(factors[k]->family);
      sm.ambient.block<1, 3>(i, static_cast<Eigen::Index>(3 * k)) =
          chart(*factors[k], std::span<const double>(row.data() + off, fd)).transpose();
      off += fd;
    }
    for (Eigen::Index j = 0; j < m; ++j) sm.intrinsic(i, j) = row[static_cast<std::size_t>(j)];
  }
  return sm;
}

RigidMotion draw_rigid_motion(std::uint64_t seed) {
  Rng rng(seed, Stream::Motion);
  RigidMotion m;
  m.scale = rng.uniform(0.02, 0.1);
  m.angle = rng.uniform(0.0, kTwoPi);
  m.tx = rng.uniform(-1.0, 1.0);
  m.ty = rng.uniform(-1.0, 1.0);
  return m;
}

Matrix apply_rigid_motion(const Matrix& points, const RigidMotion& motion) {
  if (points.cols() != 3) throw std::invalid_argument("points: rigid motion expects 3 columns");
  Eigen::Matrix3d rot;
  const double c = std::cos(motion.angle), s = std::sin(motion.angle);
  rot << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  Matrix out = (motion.scale * points) * rot;
  out.col(0).array() += motion.tx;
  out.col(1).array() += motion.ty;
  return out;
}

Matrix apply_rigid_motion(const Matrix& points, std::uint64_t seed) {
  return apply_rigid_motion(points, draw_rigid_motion(seed));
}

SampledManifold apply_rigid_motion(const SampledManifold& sm, std::uint64_t seed) {
  SampledManifold out = sm;
  const Eigen::Index blocks = sm.ambient.cols() / 3;
  out.motions.clear();
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const std::uint64_t block_seed = b == 0 ? seed : derive_seed(seed, {static_cast<std::uint64_t>(b)});
    const RigidMotion motion = draw_rigid_motion(block_seed);
    out.ambient.middleCols(3 * b, 3) = apply_rigid_motion(Matrix(sm.ambient.middleCols(3 * b, 3)), motion);
    out.motions.push_back(motion);
  }
  return out;
}

double product_geodesic(std::span<const double> factor_distances) {
  if (factor_distances.empty()) throw std::invalid_argument("factor_distances: empty");
  double sum = 0.0;
  for (double d : factor_distances) {
    if (!(d >= 0.0)) throw std::invalid_argument("factor_distances: negative entry");
    sum += d * d;
  }
  return std::sqrt(sum);
}

double geodesic(const ManifoldSpec& spec, std::span<const double> p, std::span<const double> q) {
  const std::size_t m = spec.intrinsic_dim();
  if (p.size() != m || q.size() != m) {
    throw std::invalid_argument("geodesic: expected " + std::to_string(m) + " intrinsic parameters");
  }
  if (spec.family != Family::Product) return elementary_geodesic(spec, p, q);

  std::vector<double> dists;
  dists.reserve(spec.factors.size());
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    const std::size_t fd = factor_intrinsic_dim(f.family);
    dists.push_back(elementary_geodesic(f, p.subspan(off, fd), q.subspan(off, fd)));
    off += fd;
  }
  return product_geodesic(dists);
}

double geodesic(const ManifoldSpec& spec, const Vector& p, const Vector& q) {
  return geodesic(spec, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                  std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

std::vector<int> assign_labels(const SampledManifold& sm, std::size_t center) {
  const auto n = static_cast<std::size_t>(sm.intrinsic.rows());
  if (center >= n) throw std::invalid_argument("center: index out of range");
  std::vector<int> labels(n, 0);

  if (sm.spec.family == Family::SwissRoll) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = sm.intrinsic(static_cast<Eigen::Index>(i), 0);
    const double med = median(t);
    for (std::size_t i = 0; i < n; ++i) labels[i] = t[i] < med ? 1 : 0;
    return labels;
  }

  const Vector c = sm.intrinsic.row(static_cast<Eigen::Index>(center));
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = geodesic(sm.spec, Vector(sm.intrinsic.row(static_cast<Eigen::Index>(i))), c);
  }
  double tau = 0.0;
  if (sm.spec.threshold) {
    tau = *sm.spec.threshold;
  } else if (auto def = ManifoldSpec::default_threshold(sm.spec.family)) {
    tau = *def;
  } else {
    tau = median(dist);
  }
  for (std::size_t i = 0; i < n; ++i) labels[i] = dist[i] < tau ? 1 : 0;
  // With the median rule the center can sit exactly on the threshold when
  // n is tiny; it always belongs to its own ball.
  labels[center] = 1;
  return labels;
}

std::size_t revealed_count(double label_ratio, std::size_t n) {
  if (!(label_ratio > 0.0 && label_ratio < 1.0)) {
    throw std::invalid_argument("label_ratio: must lie in (0, 1)");
  }
  return static_cast<std::size_t>(std::floor(label_ratio * static_cast<double>(n) + 1e-9));
}

Episode make_episode(const ManifoldSpec& spec, std::size_t n, double label_ratio,
                     int num_classes, std::uint64_t seed) {
  const std::size_t m = revealed_count(label_ratio, n);
  if (m < 1 || m >= n) {
    throw std::invalid_argument("label_ratio: floor(ratio * n) must lie in [1, n)");
  }
  if (num_classes < 2) throw std::invalid_argument("num_classes: need at least 2 classes");

  const SampledManifold sm = apply_rigid_motion(sample_manifold(spec, n, seed), seed);

  Episode ep;
  ep.spec = sm.spec;
  ep.seed = seed;
  ep.points = sm.ambient;
  ep.num_classes = num_classes;
  ep.center = static_cast<std::size_t>(Rng(seed, Stream::Center).below(n));
  ep.true_labels = assign_labels(sm, ep.center);

  // Partial Fisher-Yates: the first m slots are a uniform m-subset.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng reveal(seed, Stream::Reveal);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(reveal.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  ep.labels.assign(n, kUnlabeled);
  for (std::size_t i = 0; i < m; ++i) ep.labels[idx[i]] = ep.true_labels[idx[i]];
  ep.labeled_count = m;
  return ep;
}

}  // namespace icssl
