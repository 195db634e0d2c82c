"""Constant-curvature manifolds: points, tangent vectors, and exact geometry kernels.

Four geometries are supported: Euclidean space, Euclidean space under a constant
SPD metric, the unit sphere, and the hyperboloid model of hyperbolic space. All
maps (exp, log, distance, parallel transport) are closed form and exact on these
spaces. Distances use chord-based formulas that stay accurate near coincident
(and, on the sphere, near antipodal) points, and small-argument code paths avoid
0/0 in the sin/sinh ratios.

Convention for the hyperboloid: the Minkowski form is <x, y> = sum_i<n x_i y_i
- x_n y_n, i.e. the time-like coordinate is the LAST one, and points live on the
upper sheet (last coordinate positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ManifoldError",
    "UndefinedLogarithmError",
    "Manifold",
    "Euclidean",
    "FlatMetric",
    "Sphere",
    "Hyperboloid",
    "ManifoldPoint",
    "TangentVector",
    "Region",
    "exp_map",
    "log_map",
    "dist",
    "parallel_transport",
    "inner",
    "project_tangent",
    "tangent_basis",
    "sample_point",
    "manifold_from_descriptor",
]

POINT_TOL = 1e-10
TANGENT_TOL = 1e-10
_SMALL = 1e-8           # below this, series / identity branches take over
_ANTIPODE_GUARD = 1e-8  # sphere logarithm rejected within this of distance pi


class ManifoldError(ValueError):
    """A geometric contract was violated (invalid point, mismatched spaces, ...)."""


class UndefinedLogarithmError(ManifoldError):
    """log_x(y) requested where no unique minimizing geodesic exists."""


def _as_vector(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ManifoldError(f"{what} must be a 1-d real vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ManifoldError(f"{what} must be finite")
    return arr


def _as_spd_matrix(values, what: str) -> np.ndarray:
    mat = np.array(values, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ManifoldError(f"{what} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ManifoldError(f"{what} must be finite")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if float(np.max(np.abs(mat - mat.T))) > 1e-12 * scale:
        raise ManifoldError(f"{what} must be symmetric to 1e-12 relative tolerance")
    evals = np.linalg.eigvalsh(mat)
    if evals[0] <= 0.0:
        raise ManifoldError(f"{what} must be positive definite (min eigenvalue {evals[0]:.3e})")
    return mat


def _mink(u: np.ndarray, v: np.ndarray) -> float:
    # Minkowski form with the time-like coordinate last; callers check the
    # result for finiteness, so a silent inf/nan here is fine
    with np.errstate(over="ignore", invalid="ignore"):
        return float(u[:-1] @ v[:-1] - u[-1] * v[-1])


class Manifold:
    """Base class holding the raw-array geometry kernel for one space."""

    kind = "abstract"

    def __init__(self, dim: int):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ManifoldError(f"manifold dimension must be a positive integer, got {dim!r}")
        self._dim = int(dim)

    @property
    def dim(self) -> int:
        """Intrinsic dimension."""
        return self._dim

    @property
    def ambient_dim(self) -> int:
        return self._dim

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        """(k_min, k_max) bounds on the sectional curvature."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def point(self, coords) -> "ManifoldPoint":
        return ManifoldPoint(self, coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, type(self)) and type(self) is type(other) and self.dim == other.dim

    def __ne__(self, other) -> bool:
        return not self.__eq__(other)

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"

    # -- kernel methods on raw coordinate arrays -------------------------

    def _check_point(self, c: np.ndarray) -> None:
        raise NotImplementedError

    def _check_tangent(self, x: np.ndarray, v: np.ndarray) -> None:
        raise NotImplementedError

    def _inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def _exp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dist(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def _transport(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _project(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _tangent_basis(self, x: np.ndarray) -> list[np.ndarray]:
        """Metric-orthonormal basis of the tangent space at x."""
        basis: list[np.ndarray] = []
        for i in range(self.ambient_dim):
            cand = np.zeros(self.ambient_dim)
            cand[i] = 1.0
            v = self._project(x, cand)
            for b in basis:
                v = v - self._inner(x, b, v) * b
            nrm = math.sqrt(max(self._inner(x, v, v), 0.0))
            if nrm > 1e-8:
                v = v / nrm
                # second pass keeps the basis orthonormal to machine precision
                for b in basis:
                    v = v - self._inner(x, b, v) * b
                v = v / math.sqrt(max(self._inner(x, v, v), 0.0))
                basis.append(v)
            if len(basis) == self.dim:
                break
        if len(basis) < self.dim:
            raise ManifoldError("failed to build a tangent basis at the given point")
        return basis


class Euclidean(Manifold):
    """Plain Euclidean space R^n."""

    kind = "euclidean"

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        return (0.0, 0.0)

    def _check_point(self, c):
        pass

    def _check_tangent(self, x, v):
        pass

    def _inner(self, x, u, v):
        return float(u @ v)

    def _exp(self, x, v):
        return x + v

    def _log(self, x, y):
        return y - x

    def _dist(self, x, y):
        return float(np.linalg.norm(y - x))

    def _transport(self, x, y, v):
        return v.copy()

    def _project(self, x, w):
        return w.copy()

    def _tangent_basis(self, x):
        return [row for row in np.eye(self.dim)]


class FlatMetric(Manifold):
    """R^n under a constant SPD metric A: <u, v> = u^T A v, geodesics are straight lines."""

    kind = "flat_metric"

    def __init__(self, metric):
        mat = _as_spd_matrix(metric, "metric matrix")
        super().__init__(mat.shape[0])
        mat.setflags(write=False)
        self._metric = mat
        self._chol = np.linalg.cholesky(mat)

    @property
    def metric(self) -> np.ndarray:
        return self._metric

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        return (0.0, 0.0)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "metric_matrix": [[float(v) for v in row] for row in self._metric],
        }

    def __eq__(self, other):
        return (
            isinstance(other, FlatMetric)
            and self.dim == other.dim
            and np.array_equal(self._metric, other._metric)
        )

    __hash__ = object.__hash__

    def _check_point(self, c):
        pass

    def _check_tangent(self, x, v):
        pass

    def _inner(self, x, u, v):
        return float(u @ self._metric @ v)

    def _exp(self, x, v):
        return x + v

    def _log(self, x, y):
        return y - x

    def _dist(self, x, y):
        z = y - x
        return math.sqrt(max(float(z @ self._metric @ z), 0.0))

    def _transport(self, x, y, v):
        return v.copy()

    def _project(self, x, w):
        return w.copy()

    def _tangent_basis(self, x):
        # columns of L^{-T} are orthonormal in the A inner product
        inv_t = np.linalg.solve(self._chol.T, np.eye(self.dim))
        return [inv_t[:, i].copy() for i in range(self.dim)]


class Sphere(Manifold):
    """Unit sphere S^dim embedded in R^(dim+1), sectional curvature +1."""

    kind = "sphere"

    @property
    def ambient_dim(self) -> int:
        return self._dim + 1

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        return (1.0, 1.0)

    def _check_point(self, c):
        if abs(float(np.linalg.norm(c)) - 1.0) > POINT_TOL:
            raise ManifoldError(f"sphere point must have unit norm within {POINT_TOL}")

    def _check_tangent(self, x, v):
        tol = TANGENT_TOL * max(1.0, float(np.linalg.norm(v)))
        if abs(float(x @ v)) > tol:
            raise ManifoldError("tangent vector is not orthogonal to the sphere point")

    def _inner(self, x, u, v):
        return float(u @ v)

    def _dist(self, x, y):
        if float(x @ y) >= 0.0:
            half_chord = 0.5 * float(np.linalg.norm(x - y))
            return 2.0 * math.asin(min(half_chord, 1.0))
        half_chord = 0.5 * float(np.linalg.norm(x + y))
        return math.pi - 2.0 * math.asin(min(half_chord, 1.0))

    def _exp(self, x, v):
        t = float(np.linalg.norm(v))
        if t >= math.pi:
            raise ManifoldError(
                f"sphere exp step of length {t:.6g} reaches the injectivity radius pi"
            )
        if t == 0.0:
            return x.copy()
        if t < _SMALL:
            out = x + v
        else:
            out = math.cos(t) * x + (math.sin(t) / t) * v
        return out / float(np.linalg.norm(out))

    def _log(self, x, y):
        d = self._dist(x, y)
        if d >= math.pi - _ANTIPODE_GUARD:
            raise UndefinedLogarithmError(
                "sphere logarithm undefined: points are antipodal within guard"
            )
        w = y - float(x @ y) * x
        w = w - float(x @ w) * x
        nw = float(np.linalg.norm(w))
        if d < 1e-14 or nw < 1e-14:
            return np.zeros_like(x)
        return (d / nw) * w

    def _transport(self, x, y, v):
        d = self._dist(x, y)
        if d >= math.pi - _ANTIPODE_GUARD:
            raise UndefinedLogarithmError(
                "sphere transport undefined: points are antipodal within guard"
            )
        w = y - float(x @ y) * x
        w = w - float(x @ w) * x
        nw = float(np.linalg.norm(w))
        if nw < 1e-14:
            return self._project(y, v)
        e = w / nw
        comp = float(e @ v)
        # rotate the along-geodesic component in the span{x, e} plane
        out = v - comp * ((1.0 - math.cos(d)) * e + math.sin(d) * x)
        return self._project(y, out)

    def _project(self, x, w):
        return w - float(x @ w) * x


class Hyperboloid(Manifold):
    """Upper sheet of the hyperboloid <x, x> = -1, sectional curvature -1.

    The chart is trusted while the time coordinate stays below 1e3 (about
    distance 7.6 from the apex): the constraint residual of a representable
    point grows like eps * x_time^2, and past the cap the chord form used for
    distances drops below 1e-9 relative accuracy. Points and exp steps beyond
    the cap are rejected rather than silently degraded.
    """

    kind = "hyperboloid"

    TIME_CAP = 1e3

    @property
    def ambient_dim(self) -> int:
        return self._dim + 1

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        return (-1.0, -1.0)

    def _check_point(self, c):
        q = _mink(c, c)
        # the form of a representable point carries rounding ~eps * time^2,
        # so the tolerance scales the same way (= fixed intrinsic accuracy)
        tol = POINT_TOL * max(1.0, float(c[-1]) ** 2)
        if not math.isfinite(q) or abs(q + 1.0) > tol:
            raise ManifoldError(
                f"hyperboloid point must satisfy <x,x> = -1 within {POINT_TOL} relative to the squared time coordinate"
            )
        if c[-1] <= 0.0:
            raise ManifoldError("hyperboloid point must lie on the upper sheet (last coordinate > 0)")
        if c[-1] > self.TIME_CAP:
            raise ManifoldError(
                f"hyperboloid point time coordinate {c[-1]:.6g} exceeds the trusted chart limit "
                f"{self.TIME_CAP:g} (metric resolution falls below 1e-9 beyond it)"
            )

    def _check_tangent(self, x, v):
        tol = TANGENT_TOL * max(1.0, float(np.linalg.norm(v))) * max(1.0, float(x[-1]))
        if abs(_mink(x, v)) > tol:
            raise ManifoldError("tangent vector is not Minkowski-orthogonal to the base point")

    def _inner(self, x, u, v):
        return _mink(u, v)

    def _dist(self, x, y):
        z = x - y
        # <x-y, x-y> = 2(cosh d - 1) = 4 sinh^2(d/2); the chord form has no
        # cancellation for nearby points, unlike arccosh(-<x,y>)
        q = max(_mink(z, z), 0.0)
        return 2.0 * math.asinh(0.5 * math.sqrt(q))

    def _exp(self, x, v):
        t = math.sqrt(max(_mink(v, v), 0.0))
        if t == 0.0:
            return x.copy()
        if t > 710.0:  # cosh overflows doubles just past 710
            raise ManifoldError(
                f"hyperboloid exp step of length {t:.6g} overflows the ambient coordinates"
            )
        if t < _SMALL:
            out = x + v
        else:
            out = math.cosh(t) * x + (math.sinh(t) / t) * v
        s = -_mink(out, out)
        if not math.isfinite(s):
            raise ManifoldError("hyperboloid exp overflowed the ambient coordinates")
        # inside the trusted chart s is 1 up to ~1e-10 and renormalizing kills
        # drift; outside it s is cancellation noise and the point check will
        # reject the result anyway, so leave the raw combination alone
        if 0.75 <= s <= 1.25:
            out = out / math.sqrt(s)
        return out

    def _log(self, x, y):
        d = self._dist(x, y)
        w = y + _mink(x, y) * x
        w = w + _mink(x, w) * x
        nw = math.sqrt(max(_mink(w, w), 0.0))
        if d < 1e-14 or nw < 1e-14:
            return np.zeros_like(x)
        return (d / nw) * w

    def _transport(self, x, y, v):
        d = self._dist(x, y)
        w = y + _mink(x, y) * x
        w = w + _mink(x, w) * x
        nw = math.sqrt(max(_mink(w, w), 0.0))
        if nw < 1e-14:
            return self._project(y, v)
        e = w / nw
        comp = _mink(e, v)
        out = v + comp * ((math.cosh(d) - 1.0) * e + math.sinh(d) * x)
        return self._project(y, out)

    def _project(self, x, w):
        return w + _mink(x, w) * x


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A validated point: coordinates plus the manifold they live on."""

    manifold: Manifold
    coords: np.ndarray

    def __post_init__(self):
        c = _as_vector(self.coords, "point coordinates")
        if c.shape[0] != self.manifold.ambient_dim:
            raise ManifoldError(
                f"point has {c.shape[0]} coordinates, manifold is ambient-{self.manifold.ambient_dim}"
            )
        self.manifold._check_point(c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def to_json_dict(self) -> dict:
        return {
            "manifold": self.manifold.descriptor(),
            "coords": [float(v) for v in self.coords],
        }

    def __repr__(self) -> str:
        return f"ManifoldPoint({self.manifold!r}, {np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector attached to its base point."""

    base: ManifoldPoint
    coords: np.ndarray

    def __post_init__(self):
        c = _as_vector(self.coords, "tangent coordinates")
        if c.shape[0] != self.base.manifold.ambient_dim:
            raise ManifoldError(
                f"tangent has {c.shape[0]} coordinates, manifold is ambient-{self.base.manifold.ambient_dim}"
            )
        self.base.manifold._check_tangent(self.base.coords, c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def norm(self) -> float:
        m = self.base.manifold
        return math.sqrt(max(m._inner(self.base.coords, self.coords, self.coords), 0.0))

    def to_json_dict(self) -> dict:
        return {
            "manifold": self.base.manifold.descriptor(),
            "base": [float(v) for v in self.base.coords],
            "coords": [float(v) for v in self.coords],
        }


@dataclass(frozen=True, eq=False)
class Region:
    """Closed geodesic ball around a center point.

    When the curvature upper bound k_max is positive the radius must stay below
    pi/(4*sqrt(k_max)); larger balls are outside the domain on which the
    contraction-to-convexity converse holds.
    """

    center: ManifoldPoint
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not math.isfinite(r) or r < 0.0:
            raise ManifoldError(f"region radius must be a finite nonnegative real, got {self.radius!r}")
        object.__setattr__(self, "radius", r)
        k_max = self.center.manifold.curvature_bounds[1]
        if k_max > 0.0:
            limit = math.pi / (4.0 * math.sqrt(k_max))
            if r >= limit:
                raise ManifoldError(
                    f"region radius {r:.6g} must stay below pi/(4*sqrt(k_max)) = {limit:.6g} "
                    "when the curvature upper bound is positive"
                )

    def to_json_dict(self) -> dict:
        return {
            "manifold": self.center.manifold.descriptor(),
            "center": [float(v) for v in self.center.coords],
            "radius": float(self.radius),
        }


def _require_same_manifold(x: ManifoldPoint, y: ManifoldPoint) -> None:
    if x.manifold != y.manifold:
        raise ManifoldError("points live on different manifolds")


def _require_base(v: TangentVector, x: ManifoldPoint) -> None:
    if v.base.manifold != x.manifold or not np.array_equal(v.base.coords, x.coords):
        raise ManifoldError("tangent vector is not based at the given point")


def exp_map(x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Geodesic starting at x with initial velocity v, evaluated at time 1."""
    _require_base(v, x)
    return ManifoldPoint(x.manifold, x.manifold._exp(x.coords, v.coords))


def log_map(x: ManifoldPoint, y: ManifoldPoint) -> TangentVector:
    """Initial velocity of the minimizing geodesic from x to y; norm equals dist(x, y)."""
    _require_same_manifold(x, y)
    return TangentVector(x, x.manifold._log(x.coords, y.coords))


def dist(x: ManifoldPoint, y: ManifoldPoint) -> float:
    """Geodesic distance."""
    _require_same_manifold(x, y)
    return float(x.manifold._dist(x.coords, y.coords))


def parallel_transport(x: ManifoldPoint, y: ManifoldPoint, v: TangentVector) -> TangentVector:
    """Transport v along the minimizing geodesic from x to y (a linear isometry)."""
    _require_same_manifold(x, y)
    _require_base(v, x)
    return TangentVector(y, x.manifold._transport(x.coords, y.coords, v.coords))


def inner(x: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at x."""
    _require_base(u, x)
    _require_base(v, x)
    return float(x.manifold._inner(x.coords, u.coords, v.coords))


def project_tangent(x: ManifoldPoint, w) -> TangentVector:
    """Metric-orthogonal projection of an ambient vector onto the tangent space at x."""
    arr = _as_vector(w, "ambient vector")
    if arr.shape[0] != x.manifold.ambient_dim:
        raise ManifoldError(
            f"ambient vector has {arr.shape[0]} coordinates, expected {x.manifold.ambient_dim}"
        )
    return TangentVector(x, x.manifold._project(x.coords, arr))


def tangent_basis(x: ManifoldPoint) -> tuple[TangentVector, ...]:
    """Metric-orthonormal basis of the tangent space at x."""
    return tuple(TangentVector(x, b) for b in x.manifold._tangent_basis(x.coords))


def sample_point(region: Region, rng: np.random.Generator) -> ManifoldPoint:
    """Draw one point of the region: uniform tangent direction at the center
    (normalized Gaussian) pushed to geodesic radius R * u^(1/dim), u uniform on (0, 1].

    Deterministic given the generator state; a radius-0 region returns its center.
    """
    m = region.center.manifold
    if region.radius == 0.0:
        return region.center
    c = region.center.coords
    t = m._project(c, rng.standard_normal(m.ambient_dim))
    nrm = math.sqrt(max(m._inner(c, t, t), 0.0))
    while nrm < 1e-12:  # measure-zero redraw, keeps the direction well defined
        t = m._project(c, rng.standard_normal(m.ambient_dim))
        nrm = math.sqrt(max(m._inner(c, t, t), 0.0))
    u = 1.0 - rng.random()
    r = region.radius * u ** (1.0 / m.dim)
    return ManifoldPoint(m, m._exp(c, (r / nrm) * t))


def manifold_from_descriptor(desc: dict) -> Manifold:
    """Rebuild a manifold from its JSON descriptor {"kind", "dim", "metric_matrix"?}."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ManifoldError("manifold descriptor must be an object with a 'kind' field")
    kind = desc["kind"]
    if kind == "flat_metric":
        if "metric_matrix" not in desc:
            raise ManifoldError("flat_metric descriptor requires 'metric_matrix'")
        m = FlatMetric(desc["metric_matrix"])
        if "dim" in desc and int(desc["dim"]) != m.dim:
            raise ManifoldError("flat_metric descriptor 'dim' disagrees with the metric size")
        return m
    if "dim" not in desc:
        raise ManifoldError(f"manifold descriptor for kind '{kind}' requires 'dim'")
    dim = desc["dim"]
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool):
        raise ManifoldError(f"manifold 'dim' must be an integer, got {dim!r}")
    if kind == "euclidean":
        return Euclidean(int(dim))
    if kind == "sphere":
        return Sphere(int(dim))
    if kind == "hyperboloid":
        return Hyperboloid(int(dim))
    raise ManifoldError(
        f"unknown manifold kind '{kind}' (expected euclidean, flat_metric, sphere, hyperboloid)"
    )
