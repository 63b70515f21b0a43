"""Elevation prediction at arbitrary planar locations.

Universal kriging solves the bordered semivariogram system (weights
constrained to reproduce the drift basis at the target) with a dense LU
factorization; coordinates are centered on the target before assembly for
conditioning, and the drift multipliers are reported in the original basis.
IDW implements the classic Shepard weighting. Both support global or
k-nearest neighborhoods with ties broken by sample index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import PointSet, UtmCrs
from .errors import ConfigError, DataError, NumericalError
from .mesh import TriMesh, MeshQuality, mesh_quality
from .variogram import VariogramModel, model_gamma

logger = logging.getLogger(__name__)

COINCIDENT_TOL = 1e-9  # meters; closer targets snap to the sample value
_DRIFT_NAMES = ("1", "x", "y")


def drift_basis(degree: int, x) -> np.ndarray:
    """Polynomial drift terms at a planar location: [1] or [1, x, y]."""
    if degree == 0:
        return np.array([1.0])
    if degree == 1:
        return np.array([1.0, float(x[0]), float(x[1])])
    raise ConfigError(f"unsupported drift degree {degree}; only 0 and 1 are available")


def _check_distinct(locations: np.ndarray, tol: float = COINCIDENT_TOL):
    # hash points to a tol-sized grid and compare within 3x3 neighborhoods
    keys = np.round(locations / tol).astype(np.int64)
    cells = {}
    for i, (kx, ky) in enumerate(keys):
        for nx in (kx - 1, kx, kx + 1):
            for ny in (ky - 1, ky, ky + 1):
                for j in cells.get((nx, ny), ()):
                    if np.hypot(*(locations[i] - locations[j])) < tol:
                        raise DataError(
                            f"samples {j} and {i} coincide within {tol} m"
                        )
        cells.setdefault((int(kx), int(ky)), []).append(i)


@dataclass
class KrigingSystem:
    """Samples plus variogram model and solver configuration.

    neighborhood: None for a global system, or the number of nearest samples
    to rebuild the system from per target (ties by sample index).
    """

    locations: np.ndarray
    values: np.ndarray
    model: VariogramModel
    drift_degree: int = 1
    neighborhood: int | None = 16

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if locs.ndim != 2 or locs.shape[1] != 2:
            raise DataError(f"locations must be (n, 2), got {locs.shape}")
        if vals.shape != (len(locs),):
            raise DataError("values length must match locations")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(vals))):
            raise DataError("non-finite sample data")
        if self.drift_degree not in (0, 1):
            raise ConfigError(
                f"unsupported drift degree {self.drift_degree}; only 0 and 1 are available"
            )
        n_drift = 1 if self.drift_degree == 0 else 3
        if len(locs) < n_drift + 1:
            raise DataError(
                f"need at least {n_drift + 1} samples for drift degree "
                f"{self.drift_degree}, got {len(locs)}"
            )
        if self.neighborhood is not None:
            if self.neighborhood < n_drift + 1:
                raise ConfigError(
                    f"neighborhood {self.neighborhood} too small for drift degree "
                    f"{self.drift_degree} (needs >= {n_drift + 1})"
                )
        _check_distinct(locs)
        self.locations = locs
        self.values = vals

    @property
    def n_drift_terms(self) -> int:
        return 1 if self.drift_degree == 0 else 3


@dataclass(frozen=True)
class KrigingSolution:
    """One solved prediction: weights and drift multipliers follow the order
    of sample_indices (the samples the local system was built from)."""

    weights: np.ndarray
    drift_multipliers: np.ndarray
    prediction: float
    variance: float
    sample_indices: np.ndarray


@dataclass(frozen=True)
class IdwConfig:
    """Shepard inverse-distance weighting: positive power, optional
    k-nearest neighborhood (None = use all samples)."""

    power: float = 2.0
    neighborhood: int | None = None

    def __post_init__(self):
        if not (self.power > 0 and math.isfinite(self.power)):
            raise ConfigError(f"IDW power must be positive, got {self.power}")
        if self.neighborhood is not None and self.neighborhood < 1:
            raise ConfigError(f"neighborhood must be >= 1, got {self.neighborhood}")


@dataclass(frozen=True)
class UkConfig:
    """Universal kriging lift configuration."""

    model: VariogramModel
    drift_degree: int = 1
    neighborhood: int | None = 16


def _nearest_subset(locations: np.ndarray, target: np.ndarray, k: int | None) -> np.ndarray:
    """Indices of the k nearest samples, distance then index order."""
    d2 = (locations[:, 0] - target[0]) ** 2 + (locations[:, 1] - target[1]) ** 2
    if k is None or k >= len(locations):
        order = np.lexsort((np.arange(len(locations)), d2))
        return order
    order = np.lexsort((np.arange(len(locations)), d2))
    return order[:k]


def _diagnose_singular(locs: np.ndarray, degree: int) -> str:
    if degree == 1:
        F = np.column_stack([np.ones(len(locs)), locs[:, 0], locs[:, 1]])
        for col in range(1, 3):
            sub = F[:, : col + 1]
            if np.linalg.matrix_rank(sub) <= col:
                return (
                    f"drift term '{_DRIFT_NAMES[col]}' is linearly dependent on the "
                    "previous terms (degenerate sample geometry, e.g. collinear samples)"
                )
    return "the variogram produced a singular coefficient block"


def uk_solve(sys: KrigingSystem, target) -> KrigingSolution:
    """Solve the universal kriging system for one target location."""
    x0 = np.asarray(target, dtype=float)
    if x0.shape != (2,):
        raise DataError(f"target must be a 2D location, got shape {x0.shape}")

    idx = _nearest_subset(sys.locations, x0, sys.neighborhood)
    locs = sys.locations[idx]
    vals = sys.values[idx]
    n = len(locs)
    m = sys.n_drift_terms

    dist = np.hypot(locs[:, 0] - x0[0], locs[:, 1] - x0[1])
    nearest = int(np.argmin(dist))
    if dist[nearest] < COINCIDENT_TOL:
        weights = np.zeros(n)
        weights[nearest] = 1.0
        return KrigingSolution(weights, np.zeros(m), float(vals[nearest]), 0.0, idx)

    # center on the target: drift columns become [1, dx, dy], rhs [1, 0, 0]
    d = locs - x0
    pair_dist = np.hypot(d[:, 0, None] - d[None, :, 0], d[:, 1, None] - d[None, :, 1])
    A = np.zeros((n + m, n + m))
    A[:n, :n] = model_gamma(sys.model, pair_dist)
    if sys.drift_degree == 0:
        F = np.ones((n, 1))
        f0 = np.array([1.0])
    else:
        F = np.column_stack([np.ones(n), d[:, 0], d[:, 1]])
        f0 = np.array([1.0, 0.0, 0.0])
        # LU happily "solves" an exactly rank-deficient border with a tiny
        # pivot, so reject degenerate drift geometry up front
        if np.linalg.matrix_rank(F) < 3:
            raise NumericalError(
                f"singular kriging system at target {tuple(x0)}: "
                + _diagnose_singular(locs, sys.drift_degree)
            )
    A[:n, n:] = F
    A[n:, :n] = F.T
    b = np.concatenate([model_gamma(sys.model, dist), f0])

    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"singular kriging system at target {tuple(x0)}: "
            + _diagnose_singular(locs, sys.drift_degree)
        ) from None

    if n + m <= 200:
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e12:
            logger.warning("ill-conditioned kriging system at %s (cond=%.3g)", tuple(x0), cond)
    else:
        resid = float(np.linalg.norm(A @ sol - b))
        if resid > 1e-6 * max(1.0, float(np.linalg.norm(b))):
            logger.warning("large kriging residual at %s (%.3g)", tuple(x0), resid)

    weights = sol[:n]
    mu = sol[n:].copy()
    if sys.drift_degree == 1:
        # express multipliers in the uncentered basis [1, x, y]
        mu[0] -= mu[1] * x0[0] + mu[2] * x0[1]
    prediction = float(weights @ vals)
    variance = float(weights @ b[:n] + sol[n:] @ f0)
    return KrigingSolution(weights, mu, prediction, variance, idx)


def uk_predict(sys: KrigingSystem, targets) -> np.ndarray:
    """Kriging predictions for many targets, in input order."""
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    out = np.empty(len(targets))
    for i, t in enumerate(targets):
        try:
            out[i] = uk_solve(sys, t).prediction
        except NumericalError as e:
            raise NumericalError(f"target {i}: {e}") from e
    return out


def idw_predict(locations, values, targets, cfg: IdwConfig = IdwConfig()) -> np.ndarray:
    """Shepard inverse-distance-weighted predictions for many targets.

    A target within the coincidence tolerance of a sample returns that
    sample's value exactly (lowest index wins ties).
    """
    locs = np.asarray(locations, dtype=float).reshape(-1, 2)
    vals = np.asarray(values, dtype=float)
    if len(locs) == 0:
        raise DataError("IDW needs at least one sample")
    if vals.shape != (len(locs),):
        raise DataError("values length must match locations")
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)

    out = np.empty(len(targets))
    for i, t in enumerate(targets):
        idx = _nearest_subset(locs, t, cfg.neighborhood)
        d = np.hypot(locs[idx, 0] - t[0], locs[idx, 1] - t[1])
        if d[0] < COINCIDENT_TOL:
            out[i] = vals[idx[0]]
            continue
        # normalize by the smallest distance so huge powers cannot overflow
        w = (d[0] / d) ** cfg.power
        out[i] = float((w @ vals[idx]) / w.sum())
    return out


@dataclass(frozen=True)
class LiftSummary:
    """Lift outcome: elevation range, post-lift quality, and the vertices
    where kriging fell back to IDW."""

    method: str
    z_min: float
    z_max: float
    quality: MeshQuality
    fallback_vertices: tuple = field(default=())


def lift_mesh(planar: TriMesh, samples: PointSet, method) -> tuple[TriMesh, LiftSummary]:
    """Assign elevations to every vertex of a planar mesh.

    samples must be a projected (UTM) PointSet in the same zone as the mesh
    coordinates. method is a UkConfig or IdwConfig. Kriging failures at
    individual vertices fall back to IDW and are flagged; more than 1%
    failing aborts.
    """
    if planar.is_3d:
        raise DataError("lift_mesh expects a planar (2D) mesh")
    if not isinstance(samples.crs, UtmCrs):
        raise DataError("lift_mesh needs projected (UTM) samples")
    if len(samples) == 0:
        raise DataError("no samples to interpolate from")

    xy = samples.coords()
    z = samples.altitudes()
    verts = planar.vertices
    fallbacks = []

    if isinstance(method, IdwConfig):
        heights = idw_predict(xy, z, verts, method)
        name = "idw"
    elif isinstance(method, UkConfig):
        sys = KrigingSystem(xy, z, method.model, method.drift_degree, method.neighborhood)
        idw_cfg = IdwConfig(power=2.0, neighborhood=method.neighborhood)
        heights = np.empty(len(verts))
        for i, v in enumerate(verts):
            try:
                heights[i] = uk_solve(sys, v).prediction
            except NumericalError:
                heights[i] = idw_predict(xy, z, [v], idw_cfg)[0]
                fallbacks.append(i)
        if len(fallbacks) > 0.01 * len(verts):
            raise NumericalError(
                f"kriging failed at {len(fallbacks)} of {len(verts)} vertices "
                f"(first: {fallbacks[:5]})"
            )
        if fallbacks:
            logger.warning(
                "kriging fell back to IDW at %d vertices: %s", len(fallbacks), fallbacks[:10]
            )
        name = "uk"
    else:
        raise ConfigError(f"unknown lift method {method!r}")

    lifted = TriMesh(
        np.column_stack([verts, heights]), planar.triangles, planar.boundary_flags
    )
    summary = LiftSummary(
        method=name,
        z_min=float(heights.min()),
        z_max=float(heights.max()),
        quality=mesh_quality(lifted),
        fallback_vertices=tuple(fallbacks),
    )
    return lifted, summary
