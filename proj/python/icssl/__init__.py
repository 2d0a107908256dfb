"""In-context semi-supervised learning on manifolds: episodes, constructed
attention features, the GD head, baselines and sweeps."""

import json as _json

from . import _core
from ._core import (
    Episode,
    LogRegModel,
    accuracy,
    affinity,
    bottom_eigenvectors,
    estimate_lambda_max,
    fit_kernel_logreg,
    fit_logreg,
    icl_forward,
    laplacians,
    max_principal_angle,
    mutual_knn_alignment,
    predict,
    separation_score,
    tf_eigenmap,
    tf_laplacian,
    tf_rep,
)

METHODS = ("e2e-icl", "eig-icl", "orig-icl", "eig-lr", "orig-rbf-lr")


def _spec(spec):
    return spec if isinstance(spec, str) else _json.dumps(spec)


def make_episode(spec="sphere", n=100, label_ratio=0.39, num_classes=2, seed=0):
    """spec: a family name ("sphere", "cone", ...) or a dict like
    {"family": "product", "factors": ["sphere", "cylinder"]}."""
    return _core.make_episode(_spec(spec), n, label_ratio, num_classes, seed)


def sample_manifold(spec, n, seed=0):
    intrinsic, ambient, resolved = _core.sample_manifold(_spec(spec), n, seed)
    return intrinsic, ambient, _json.loads(resolved)


def geodesic(spec, p, q):
    return _core.geodesic(_spec(spec), p, q)


def run_episode(episode, method, **hyperparameters):
    return _core.run_episode(episode, method, _json.dumps(hyperparameters) if hyperparameters else "")


def eigen_features(points, **hyperparameters):
    return _core.eigen_features(points, _json.dumps(hyperparameters) if hyperparameters else "")


def run_sweep(config):
    """config: dict in the sweep-config schema. Returns the CSV text."""
    return _core.run_sweep_csv(_json.dumps(config))


def plot_svg(csv_text):
    return _core.plot_svg(csv_text)


def tune(config, method, grid, validation_episodes=30):
    best_point, best_accuracy, best_hp, table = _core.tune(
        _json.dumps(config), method, {k: [float(v) for v in vs] for k, vs in grid.items()}, validation_episodes
    )
    return {
        "point": best_point,
        "validation_accuracy": best_accuracy,
        "hyperparameters": _json.loads(best_hp),
        "table": table,
    }


def oracle_battery(seed=1):
    return [dict(zip(("id", "name", "passed", "detail"), row)) for row in _core.oracle_battery(seed)]
