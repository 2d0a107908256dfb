#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kUnlabeled = -1;

enum class Family { Sphere, Cylinder, Cone, SwissRoll, FlatTorus, Product };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

// Cone apex angles drawn per sample when a Cone spec leaves alpha unset.
inline constexpr double kConeAlphaMin = 0.01;
inline constexpr double kConeAlphaMax = 0.098175;

/// Declarative description of a benchmark manifold.
///
/// Intrinsic chart coordinates, per family:
///   Sphere    (theta, phi)  theta in (0, pi), phi in (0, 2pi)
///   Cylinder  (theta, z)    theta in (0, 2pi), z in (0, 1)
///   Cone      (s, theta)    s in (0, 1), theta in (0, 2pi)
///   SwissRoll (t)           t in [0, 1]
///   FlatTorus (theta, phi)  both in (0, 2pi)
/// A Product concatenates the intrinsic coordinates of its factors and embeds
/// each factor into its own block of three ambient columns.
struct ManifoldSpec {
  Family family = Family::Sphere;
  double radius = 1.0;
  std::optional<double> cone_alpha;
  // Geodesic-ball radius. Unset means the family default; for products unset
  // means the median product distance to the center.
  std::optional<double> threshold;
  std::vector<ManifoldSpec> factors;

  static ManifoldSpec sphere() { return {}; }
  static ManifoldSpec cylinder(double r = 1.0) {
    ManifoldSpec s;
    s.family = Family::Cylinder;
    s.radius = r;
    return s;
  }
  static ManifoldSpec cone(std::optional<double> alpha = std::nullopt) {
    ManifoldSpec s;
    s.family = Family::Cone;
    s.cone_alpha = alpha;
    return s;
  }
  static ManifoldSpec swiss_roll() {
    ManifoldSpec s;
    s.family = Family::SwissRoll;
    return s;
  }
  static ManifoldSpec flat_torus() {
    ManifoldSpec s;
    s.family = Family::FlatTorus;
    return s;
  }
  static ManifoldSpec product(std::vector<ManifoldSpec> factors) {
    ManifoldSpec s;
    s.family = Family::Product;
    s.factors = std::move(factors);
    return s;
  }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  std::size_t intrinsic_dim() const;
  std::size_t ambient_dim() const;
  // Short stable identifier, e.g. "sphere" or "product(sphere,cone)".
  std::string name() const;

  // Family default threshold; SwissRoll and Product use median rules and
  // return nullopt.
  static std::optional<double> default_threshold(Family f);

  friend bool operator==(const ManifoldSpec&, const ManifoldSpec&) = default;
};

struct RigidMotion {
  double scale = 1.0;
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  friend bool operator==(const RigidMotion&, const RigidMotion&) = default;
};

struct SampledManifold {
  Matrix intrinsic;  // n x intrinsic_dim
  Matrix ambient;    // n x ambient_dim
  ManifoldSpec spec; // cone angles resolved
  std::uint64_t seed = 0;
  std::vector<RigidMotion> motions;  // one per 3-column block once applied
};

struct Episode {
  ManifoldSpec spec;
  std::uint64_t seed = 0;
  Matrix points;                 // n x d
  std::vector<int> labels;       // kUnlabeled where hidden
  std::vector<int> true_labels;  // kUnlabeled when unknown (imported clouds)
  std::size_t labeled_count = 0;
  std::size_t center = 0;
  int num_classes = 2;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::vector<bool> labeled_mask() const;
};

// Chart map of one elementary factor, intrinsic coordinates -> R^3.
Eigen::Vector3d chart(const ManifoldSpec& spec, std::span<const double> params);

SampledManifold sample_manifold(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed);

RigidMotion draw_rigid_motion(std::uint64_t seed);
// Scale, then rotate about z, then translate in the xy-plane. Row-vector
// convention: p -> (s p) R + t.
Matrix apply_rigid_motion(const Matrix& points, const RigidMotion& motion);
Matrix apply_rigid_motion(const Matrix& points, std::uint64_t seed);
// Applies an independent motion to every 3-column block (one per factor).
SampledManifold apply_rigid_motion(const SampledManifold& sm, std::uint64_t seed);

double geodesic(const ManifoldSpec& spec, std::span<const double> p, std::span<const double> q);
double geodesic(const ManifoldSpec& spec, const Vector& p, const Vector& q);

double product_geodesic(std::span<const double> factor_distances);

std::vector<int> assign_labels(const SampledManifold& sm, std::size_t center);

// Number of revealed labels for a label ratio; guards against products such
// as 0.29 * 100 = 28.999999999999996.
std::size_t revealed_count(double label_ratio, std::size_t n);

Episode make_episode(const ManifoldSpec& spec, std::size_t n, double label_ratio,
                     int num_classes, std::uint64_t seed);

}  // namespace icssl
