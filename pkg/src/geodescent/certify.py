"""Bidirectional numerical certification of weak-strong-convexity.

Forward route: evaluate the defining inequality directly as a residual at
sampled points. Converse route: measure the worst one-step contraction of
squared distance under gradient descent, reconstruct the (a, mu) constants
from it (with the positive-curvature correction delta_bar), and check that
the reconstructed inequality holds on the same samples. The two routes are
kept independent so each can catch the other lying.

Certificates are sampled statements, not universal proofs: the verdict binds
only the points actually drawn, and says so through its fields.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import curvature
from .curvature import CurvatureProfile
from .descent import StepSizeError, rgd_step
from .manifolds import (
    FlatMetric,
    ManifoldError,
    ManifoldPoint,
    Region,
    TangentVector,
    UndefinedLogarithmError,
    _as_spd_matrix,
    dist,
    exp_map,
    inner,
    log_map,
    sample_point,
)
from .objectives import Objective, estimate_gamma

__all__ = [
    "TOOL_VERSION",
    "CertificationError",
    "ConsistencyReport",
    "WscCertificate",
    "TranslatedConstants",
    "wsc_residual",
    "converse_parameters",
    "consistency_check",
    "resolve_gamma",
    "certify_region",
    "weaker_smoothness_residual",
    "distance_growth_residual",
    "descent_lemma_residual",
    "preconditioned_equivalence",
    "translate_constants",
]

TOOL_VERSION = "0.1.0"

DEFAULT_TOL_RESIDUAL = 1e-9
DEFAULT_GAMMA_PAIRS = 256
# contraction rates below this make the converse constants degenerate (a -> 0)
MIN_C_OBS = 1e-10
# gradient-norm threshold flagging a possible second critical point
CRITICAL_POINT_GRAD_TOL = 1e-6
REGION_EXIT_TOL = 1e-9
_MASK64 = 0xFFFFFFFFFFFFFFFF
# decorrelates the smoothness-estimation stream from the per-sample streams
_GAMMA_STREAM = 0x9E3779B97F4A7C15


class CertificationError(ValueError):
    """Invalid certification inputs (bad ranges, mismatched region, missing constants)."""


def _require_positive(name: str, value) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise CertificationError(f"{name} must be a finite positive real, got {value!r}")
    return value


def _pairwise_sum(values: list) -> float:
    """Summation with a fixed pairwise tree so results never depend on chunking."""
    n = len(values)
    if n == 0:
        return 0.0
    if n == 1:
        return float(values[0])
    half = n // 2
    return _pairwise_sum(values[:half]) + _pairwise_sum(values[half:])


def wsc_residual(obj: Objective, x: ManifoldPoint, a: float, mu: float) -> float:
    """Residual of f(x) - f(x*) <= (1/a)<grad f(x), -log_x(x*)> - (mu/2) dist^2(x, x*).

    Nonnegative iff the inequality holds at x with constants (a, mu).
    """
    a = _require_positive("a", a)
    mu = _require_positive("mu", mu)
    xstar = obj.metadata.minimizer
    fstar = obj.value(xstar)
    return _wsc_residual_at(obj, x, a, mu, fstar)


def _wsc_residual_at(obj: Objective, x: ManifoldPoint, a: float, mu: float, fstar: float) -> float:
    xstar = obj.metadata.minimizer
    g = obj.gradient(x)
    to_min = log_map(x, xstar)
    ip = inner(x, g, TangentVector(x, -to_min.coords))
    d = dist(x, xstar)
    return ip / a - 0.5 * mu * d * d - (obj.value(x) - fstar)


def converse_parameters(c: float, gamma: float, eta: float, delta_bar_val: float):
    """(a, mu) reconstructed from an observed contraction rate c.

    a = (1/(2*gamma*eta)) * c / (1 - sqrt(delta_bar_val*c)/2), mu = gamma/2.
    delta_bar_val = 1 is the flat / nonpositive-curvature case.
    """
    c = float(c)
    if not (0.0 < c <= 1.0):
        raise CertificationError(f"contraction rate must lie in (0, 1], got {c!r}")
    gamma = _require_positive("gamma", gamma)
    eta = _require_positive("eta", eta)
    delta_bar_val = float(delta_bar_val)
    if not (0.0 < delta_bar_val <= 1.0):
        raise CertificationError(f"delta_bar must lie in (0, 1], got {delta_bar_val!r}")
    a = c / (2.0 * gamma * eta * (1.0 - math.sqrt(delta_bar_val * c) / 2.0))
    return a, gamma / 2.0


@dataclass(frozen=True)
class ConsistencyReport:
    """Sanity report on (a, mu, eta) against the contraction rate they came from.

    product_le_c guards the no-free-rate-improvement bound a*mu*eta <= c.
    When the constants come from the flat-case converse formulas, the product
    must also equal c/(4(1 - sqrt(c)/2)) and land in [c/4, c/2].
    """

    a: float
    mu: float
    eta: float
    c: float
    product: float
    product_le_c: bool
    theorem_form: bool
    identity_ok: Optional[bool]
    bracket_ok: Optional[bool]
    ok: bool

    def to_json_dict(self) -> dict:
        return {
            "a": self.a,
            "mu": self.mu,
            "eta": self.eta,
            "c": self.c,
            "product": self.product,
            "product_le_c": self.product_le_c,
            "theorem_form": self.theorem_form,
            "identity_ok": self.identity_ok,
            "bracket_ok": self.bracket_ok,
            "ok": self.ok,
        }


def consistency_check(a: float, mu: float, eta: float, c: float, *, theorem_parameters: bool = False) -> ConsistencyReport:
    a = _require_positive("a", a)
    mu = _require_positive("mu", mu)
    eta = _require_positive("eta", eta)
    c = float(c)
    if not (0.0 < c <= 1.0):
        raise CertificationError(f"contraction rate must lie in (0, 1], got {c!r}")
    product = a * mu * eta
    product_le_c = product <= c + 1e-12
    identity_ok = None
    bracket_ok = None
    if theorem_parameters:
        expected = c / (4.0 * (1.0 - math.sqrt(c) / 2.0))
        identity_ok = abs(product - expected) <= 1e-12
        bracket_ok = (c / 4.0 - 1e-12) <= product <= (c / 2.0 + 1e-12)
        ok = product_le_c and identity_ok and bracket_ok
    else:
        ok = product_le_c
    return ConsistencyReport(
        a=a, mu=mu, eta=eta, c=c, product=product,
        product_le_c=product_le_c, theorem_form=theorem_parameters,
        identity_ok=identity_ok, bracket_ok=bracket_ok, ok=ok,
    )


def resolve_gamma(
    obj: Objective,
    region: Region,
    seed: int,
    override: Optional[float] = None,
    n_pairs: int = DEFAULT_GAMMA_PAIRS,
):
    """Smoothness constant with provenance: override > analytic > sampled estimate.

    The estimate draws from its own RNG stream (decorrelated from the sample
    streams) so it is reproducible for a given seed regardless of sample count.
    """
    if override is not None:
        return _require_positive("gamma override", override), "override"
    if obj.metadata.gamma is not None:
        return float(obj.metadata.gamma), "analytic"
    rng = np.random.default_rng((int(seed) ^ _GAMMA_STREAM) & _MASK64)
    est = estimate_gamma(obj, region, n_pairs, rng)
    if est <= 0.0:
        raise CertificationError("estimated smoothness constant is zero; nothing to certify against")
    return est, "estimated"


@dataclass(frozen=True)
class WscCertificate:
    objective_id: str
    region: Region
    n_samples: int
    seed: int
    eta_used: float
    gamma_used: float
    gamma_source: str
    delta_bar_used: Optional[float]
    worst_ratio: Optional[float]
    c_obs: Optional[float]
    a: Optional[float]
    mu: Optional[float]
    residual_min: Optional[float]
    residual_mean: Optional[float]
    residual_min_scaled: Optional[float]
    tol_residual: float
    verdict: str
    flags: tuple
    witness: Optional[dict]
    consistency: Optional[ConsistencyReport]
    version: str = TOOL_VERSION

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "objective_id": self.objective_id,
            "manifold": self.region.center.manifold.descriptor(),
            "region": self.region.to_json_dict(),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "eta_used": self.eta_used,
            "gamma_used": self.gamma_used,
            "gamma_source": self.gamma_source,
            "delta_bar_used": self.delta_bar_used,
            "worst_ratio": self.worst_ratio,
            "c_obs": self.c_obs,
            "a": self.a,
            "mu": self.mu,
            "residual_min": self.residual_min,
            "residual_mean": self.residual_mean,
            "residual_min_scaled": self.residual_min_scaled,
            "tol_residual": self.tol_residual,
            "verdict": self.verdict,
            "flags": list(self.flags),
            "witness": self.witness,
            "consistency": self.consistency.to_json_dict() if self.consistency else None,
        }


@dataclass(frozen=True)
class _Sample:
    index: int
    point: ManifoldPoint
    dist_to_min: float
    grad_norm: float
    value: float
    ratio: Optional[float]
    exited: bool
    step_error: Optional[str]


def _probe_sample(obj: Objective, region: Region, eta: float, seed: int, index: int) -> _Sample:
    """Draw sample #index from its own RNG stream and take one descent step.

    Deterministic in (seed, index) alone, so results cannot depend on how
    samples are distributed over workers.
    """
    rng = np.random.default_rng((int(seed) ^ index) & _MASK64)
    x = sample_point(region, rng)
    xstar = obj.metadata.minimizer
    d = dist(x, xstar)
    gnorm = obj.gradient(x).norm()
    val = obj.value(x)
    ratio = None
    exited = False
    err = None
    try:
        stepped = rgd_step(obj, x, eta)
    except (ManifoldError, StepSizeError) as e:
        err = str(e)
    else:
        d_next = dist(stepped, xstar)
        exited = dist(region.center, stepped) > region.radius + REGION_EXIT_TOL
        if d > 1e-12:
            ratio = (d_next / d) ** 2
    return _Sample(index, x, d, gnorm, val, ratio, exited, err)


def _witness_dict(sample: _Sample, reason: str) -> dict:
    return {
        "index": sample.index,
        "coords": [float(c) for c in sample.point.coords],
        "dist_to_min": sample.dist_to_min,
        "reason": reason,
    }


def certify_region(
    obj: Objective,
    region: Region,
    eta: float,
    n_samples: int,
    seed: int = 42,
    *,
    workers: int = 1,
    gamma_override: Optional[float] = None,
    gamma_pairs: int = DEFAULT_GAMMA_PAIRS,
    tol_residual: float = DEFAULT_TOL_RESIDUAL,
) -> WscCertificate:
    """Sampled weak-strong-convexity certificate for a geodesic ball around x*.

    Pipeline: draw n_samples points, take one gradient step from each, measure
    the worst squared-distance contraction c_obs, reconstruct (a, mu) through
    the converse formulas with delta_bar evaluated at the region radius (the
    per-point infimum, so one (a, mu) pair is sound for every sample), then
    evaluate the defining residual at all samples. Verdict is ternary:
    certified / refuted (negative residual, with witness) / inconclusive
    (contraction hypothesis failed, constants degenerate, or steps errored).

    Step and log errors during probing become flags, never exceptions.
    """
    if not isinstance(n_samples, int) or isinstance(n_samples, bool) or n_samples < 1:
        raise CertificationError(f"n_samples must be a positive integer, got {n_samples!r}")
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise CertificationError(f"workers must be a positive integer, got {workers!r}")
    eta = _require_positive("eta", eta)
    tol_residual = _require_positive("tol_residual", tol_residual)
    seed = int(seed)
    if region.center.manifold != obj.manifold:
        raise CertificationError("region and objective live on different manifolds")
    xstar = obj.metadata.minimizer
    if dist(region.center, xstar) > 1e-9:
        raise CertificationError("region must be centered at the declared minimizer")

    profile = CurvatureProfile.from_manifold(obj.manifold)
    gamma_used, gamma_source = resolve_gamma(obj, region, seed, gamma_override, gamma_pairs)
    if profile.k_max > 0.0 and eta > 2.0 / gamma_used + 1e-15:
        raise CertificationError(
            f"eta = {eta:.6g} exceeds the 2/gamma = {2.0 / gamma_used:.6g} cap required "
            "on positively curved manifolds"
        )

    flags = set()
    if gamma_source == "estimated":
        flags.add("gamma-estimated")
    elif gamma_source == "override":
        flags.add("gamma-override")

    fstar = obj.value(xstar)

    def finish(verdict, *, delta_bar_used=None, worst=None, c_obs=None, a=None, mu=None,
               res_min=None, res_mean=None, res_min_scaled=None, witness=None, consistency=None):
        return WscCertificate(
            objective_id=obj.id, region=region, n_samples=n_samples, seed=seed,
            eta_used=eta, gamma_used=gamma_used, gamma_source=gamma_source,
            delta_bar_used=delta_bar_used, worst_ratio=worst, c_obs=c_obs, a=a, mu=mu,
            residual_min=res_min, residual_mean=res_mean, residual_min_scaled=res_min_scaled,
            tol_residual=tol_residual, verdict=verdict, flags=tuple(sorted(flags)),
            witness=witness, consistency=consistency,
        )

    if region.radius == 0.0:
        # one-point ball: the inequality is an identity at x* itself
        flags.add("degenerate-region")
        delta0 = curvature.delta_bar(profile.k_max, 0.0)
        a, mu = converse_parameters(1.0, gamma_used, eta, delta0)
        r0 = _wsc_residual_at(obj, region.center, a, mu, fstar)
        consistency = consistency_check(a, mu, eta, 1.0, theorem_parameters=(delta0 == 1.0))
        if not consistency.ok:
            flags.add("consistency-violation")
        return finish(
            "certified", delta_bar_used=delta0, c_obs=1.0, a=a, mu=mu,
            res_min=r0, res_mean=r0, res_min_scaled=r0, consistency=consistency,
        )

    def probe(i: int) -> _Sample:
        return _probe_sample(obj, region, eta, seed, i)

    if workers == 1:
        samples = [probe(i) for i in range(n_samples)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, n_samples // (workers * 4))
            samples = list(pool.map(probe, range(n_samples), chunksize=chunk))

    for s in samples:
        if s.step_error is not None:
            flags.add("step-error")
        if s.exited:
            flags.add("step-exits-region")
        if s.grad_norm < CRITICAL_POINT_GRAD_TOL and s.dist_to_min > 1e-6:
            flags.add("critical-point-suspect")

    measured = [s for s in samples if s.ratio is not None]
    if not measured:
        return finish("inconclusive")
    worst_sample = max(measured, key=lambda s: s.ratio)
    worst = worst_sample.ratio

    if worst >= 1.0:
        flags.add("no-contraction")
        return finish("inconclusive", worst=worst,
                      witness=_witness_dict(worst_sample, "no-contraction"))

    c_obs = min(max(1.0 - worst, 0.0), 1.0)
    if c_obs < MIN_C_OBS:
        flags.add("contraction-below-threshold")
        return finish("inconclusive", worst=worst, c_obs=c_obs)

    delta_bar_used = curvature.delta_bar(profile.k_max, region.radius)
    a, mu = converse_parameters(c_obs, gamma_used, eta, delta_bar_used)
    consistency = consistency_check(a, mu, eta, c_obs,
                                    theorem_parameters=(delta_bar_used == 1.0))
    if not consistency.ok:
        flags.add("consistency-violation")

    residuals = []
    scaled = []
    residual_errors = 0
    for s in samples:
        try:
            r = _wsc_residual_at(obj, s.point, a, mu, fstar)
        except (ManifoldError, UndefinedLogarithmError):
            residual_errors += 1
            continue
        residuals.append(r)
        scaled.append(r / max(1.0, abs(s.value - fstar), s.dist_to_min ** 2))
    if residual_errors or not residuals:
        flags.add("step-error")
        return finish("inconclusive", delta_bar_used=delta_bar_used, worst=worst,
                      c_obs=c_obs, a=a, mu=mu, consistency=consistency)

    res_min = min(residuals)
    res_mean = _pairwise_sum(residuals) / len(residuals)
    res_min_scaled = min(scaled)

    if res_min_scaled >= -tol_residual:
        verdict = "certified"
        witness = None
    else:
        verdict = "refuted"
        flags.add("negative-residual")
        worst_idx = scaled.index(res_min_scaled)
        witness = _witness_dict(samples[worst_idx], "negative-residual")

    return finish(verdict, delta_bar_used=delta_bar_used, worst=worst, c_obs=c_obs,
                  a=a, mu=mu, res_min=res_min, res_mean=res_mean,
                  res_min_scaled=res_min_scaled, witness=witness, consistency=consistency)


def weaker_smoothness_residual(obj: Objective, x: ManifoldPoint, gamma: float) -> float:
    """Residual of f(x) - f(x*) >= ||grad f(x)||^2 / (2*gamma)."""
    gamma = _require_positive("gamma", gamma)
    g = obj.gradient(x)
    fstar = obj.value(obj.metadata.minimizer)
    return (obj.value(x) - fstar) - g.norm() ** 2 / (2.0 * gamma)


def distance_growth_residual(obj: Objective, x: ManifoldPoint, gamma: float) -> float:
    """Residual of dist^2(x, x*) >= (2/gamma)(f(x) - f(x*))."""
    gamma = _require_positive("gamma", gamma)
    xstar = obj.metadata.minimizer
    d = dist(x, xstar)
    return d * d - (2.0 / gamma) * (obj.value(x) - obj.value(xstar))


def descent_lemma_residual(obj: Objective, x: ManifoldPoint, y: ManifoldPoint, gamma: float) -> float:
    """Residual of f(y) <= f(x) + <grad f(x), log_x(y)> + (gamma/2) dist^2(x, y)."""
    gamma = _require_positive("gamma", gamma)
    g = obj.gradient(x)
    step = log_map(x, y)
    d = dist(x, y)
    return obj.value(x) + inner(x, g, step) + 0.5 * gamma * d * d - obj.value(y)


def preconditioned_equivalence(obj: Objective, metric, x: ManifoldPoint, eta: float) -> float:
    """Max-norm gap between explicit preconditioned GD and the flat-metric step.

    Route one: x - eta * A^{-1} grad f(x) with the inverse applied by a linear
    solve. Route two: the exponential-map step on the flat A-metric manifold
    with the gradient converted through an eigendecomposition inverse. The two
    share no linear algebra, so agreement is evidence, not tautology.
    """
    if obj.manifold.kind != "euclidean":
        raise CertificationError("preconditioned equivalence is defined for Euclidean objectives")
    if x.manifold != obj.manifold:
        raise CertificationError("point is not on the objective's manifold")
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0.0:
        raise CertificationError(f"eta must be finite and nonnegative, got {eta!r}")
    try:
        a_mat = _as_spd_matrix(metric, "preconditioner")
    except ManifoldError as e:
        raise CertificationError(str(e)) from e

    g = obj.gradient(x).coords
    explicit = x.coords - eta * np.linalg.solve(a_mat, g)

    flat = FlatMetric(a_mat)
    y = flat.point(x.coords)
    evals, evecs = np.linalg.eigh(a_mat)
    a_inv = evecs @ np.diag(1.0 / evals) @ evecs.T
    stepped = exp_map(y, TangentVector(y, -eta * (a_inv @ g)))
    return float(np.max(np.abs(explicit - stepped.coords)))


class TranslatedConstants(NamedTuple):
    gamma: float
    mu: float
    metric_lambda_min: float
    metric_lambda_max: float


def translate_constants(metric, gamma_euclidean: float, mu_euclidean: float) -> TranslatedConstants:
    """Carry Euclidean (gamma, mu) to the flat A-metric: gamma/lambda_min(A), mu/lambda_max(A)."""
    gamma_euclidean = _require_positive("gamma_euclidean", gamma_euclidean)
    mu_euclidean = _require_positive("mu_euclidean", mu_euclidean)
    try:
        a_mat = _as_spd_matrix(metric, "metric matrix")
    except ManifoldError as e:
        raise CertificationError(str(e)) from e
    evals = np.linalg.eigvalsh(a_mat)
    lam_min, lam_max = float(evals[0]), float(evals[-1])
    return TranslatedConstants(gamma_euclidean / lam_min, mu_euclidean / lam_max, lam_min, lam_max)
