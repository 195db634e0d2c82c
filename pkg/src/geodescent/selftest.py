"""Reduced-scale invariant suite behind the selftest command.

Each check reruns one of the package's mathematical contracts at ~100 samples.
The full-scale versions live in the test battery; this harness exists so a
deployed install can re-verify itself in seconds, and so corrupted internals
(a wrong comparison constant, a broken exponential map) surface with the name
of the violated property. Geometry and curvature calls go through the module
namespaces on purpose: patching those modules is the supported way to prove
the harness actually catches corruption.
"""

from __future__ import annotations

import math
import time
from typing import Callable, Optional

import numpy as np

from . import curvature, manifolds
from .certify import (
    certify_region,
    consistency_check,
    converse_parameters,
    preconditioned_equivalence,
    resolve_gamma,
    translate_constants,
    wsc_residual,
)
from .descent import rgd_step
from .manifolds import (
    Euclidean,
    FlatMetric,
    Hyperboloid,
    ManifoldPoint,
    Region,
    Sphere,
    TangentVector,
)
from .objectives import (
    fd_gradient_oracle,
    perturbed_quad,
    quad_euclidean,
    quad_flat_metric,
    rayleigh_sphere,
    sqdist_hyperboloid,
)

__all__ = ["run_selftest", "CHECKS"]

N = 100


def _catalog():
    return [
        Euclidean(3),
        FlatMetric([[2.0, 0.3], [0.3, 1.5]]),
        Sphere(2),
        Hyperboloid(2),
    ]


def _base_point(m) -> ManifoldPoint:
    coords = np.zeros(m.ambient_dim)
    if m.kind in ("sphere",):
        coords[0] = 1.0
    elif m.kind == "hyperboloid":
        coords[-1] = 1.0
    return m.point(coords)


def _random_tangent(x: ManifoldPoint, rng, length: float) -> TangentVector:
    m = x.manifold
    while True:
        t = manifolds.project_tangent(x, rng.standard_normal(m.ambient_dim))
        nrm = t.norm()
        if nrm > 1e-12:
            return TangentVector(x, t.coords * (length / nrm))


def _random_point(m, rng, spread: float) -> ManifoldPoint:
    base = _base_point(m)
    return manifolds.exp_map(base, _random_tangent(base, rng, spread * rng.random()))


def _tangent_cap(m) -> float:
    # stay inside 0.9 of the sphere's injectivity radius; elsewhere just bounded
    return 0.9 * math.pi if m.kind == "sphere" else 3.0


def check_geometry_round_trip() -> Optional[str]:
    rng = np.random.default_rng(101)
    for m in _catalog():
        for _ in range(N):
            x = _random_point(m, rng, 1.0)
            v = _random_tangent(x, rng, _tangent_cap(m) * max(rng.random(), 1e-3))
            y = manifolds.exp_map(x, v)
            back = manifolds.log_map(x, y)
            err = float(np.linalg.norm(back.coords - v.coords))
            if err > 1e-9 * max(1.0, v.norm()):
                return f"{m.kind}: log(exp(v)) missed v by {err:.3e}"
    return None


def check_geometry_distance_consistency() -> Optional[str]:
    rng = np.random.default_rng(102)
    for m in _catalog():
        for _ in range(N):
            x = _random_point(m, rng, 1.0)
            v = _random_tangent(x, rng, _tangent_cap(m) * max(rng.random(), 1e-3))
            d = manifolds.dist(x, manifolds.exp_map(x, v))
            if abs(d - v.norm()) > 1e-10 * max(1.0, v.norm()):
                return f"{m.kind}: dist(x, exp(v)) = {d!r} but ||v|| = {v.norm()!r}"
    return None


def check_geometry_transport() -> Optional[str]:
    rng = np.random.default_rng(103)
    for m in _catalog():
        for _ in range(N):
            x = _random_point(m, rng, 1.0)
            y = _random_point(m, rng, 1.0)
            if manifolds.dist(x, y) > (math.pi - 1e-3 if m.kind == "sphere" else np.inf):
                continue
            v = _random_tangent(x, rng, 1.0 + rng.random())
            moved = manifolds.parallel_transport(x, y, v)
            if abs(moved.norm() - v.norm()) > 1e-10 * max(1.0, v.norm()):
                return f"{m.kind}: transport changed the norm by {abs(moved.norm() - v.norm()):.3e}"
            back = manifolds.parallel_transport(y, x, moved)
            if float(np.linalg.norm(back.coords - v.coords)) > 1e-9 * max(1.0, v.norm()):
                return f"{m.kind}: transport there-and-back failed to recover v"
    return None


def check_geometry_triangle_inequality() -> Optional[str]:
    rng = np.random.default_rng(104)
    for m in _catalog():
        for _ in range(N):
            x, y, z = (_random_point(m, rng, 1.0) for _ in range(3))
            if manifolds.dist(x, z) > manifolds.dist(x, y) + manifolds.dist(y, z) + 1e-10:
                return f"{m.kind}: triangle inequality violated"
    return None


def check_curvature_reference_values() -> Optional[str]:
    if curvature.zeta(0.5, 2.0) != 1.0 or curvature.zeta(0.0, 5.0) != 1.0:
        return "zeta must be exactly 1 for nonnegative curvature"
    if curvature.delta_bar(-1.0, 7.0) != 1.0 or curvature.delta_bar(0.0, 3.0) != 1.0:
        return "delta_bar must be exactly 1 for nonpositive curvature"
    if abs(curvature.zeta(-1.0, 1.0) - 1.0 / math.tanh(1.0)) > 1e-12:
        return "zeta(-1, 1) does not match coth(1)"
    if abs(curvature.delta_bar(1.0, math.pi / 8.0) - math.pi / 4.0) > 1e-12:
        return "delta_bar(1, pi/8) does not match pi/4"
    if abs(curvature.zeta(-1.0, 1e-6) - 1.0) > 1e-10:
        return "zeta is discontinuous at d = 0"
    if abs(curvature.delta_bar(1.0, 1e-6) - 1.0) > 1e-10:
        return "delta_bar is discontinuous at d = 0"
    return None


def _random_triangle(m, rng, spread: float):
    center = _random_point(m, rng, 0.3)
    pts = []
    while len(pts) < 3:
        p = manifolds.exp_map(center, _random_tangent(center, rng, spread * rng.random()))
        if all(manifolds.dist(p, q) > 1e-6 for q in pts):
            pts.append(p)
    return pts


def check_lemma2_flat_exactness() -> Optional[str]:
    rng = np.random.default_rng(105)
    for m in (Euclidean(3), FlatMetric([[2.0, 0.3], [0.3, 1.5]])):
        for _ in range(N):
            a, b, c = _random_triangle(m, rng, 2.0)
            chk = curvature.lemma2_residual(a, b, c)
            if abs(chk.residual) > 1e-12 * chk.scale:
                return f"{m.kind}: flat triangle residual {chk.residual:.3e} is not zero"
    return None


def check_lemma2_curved_bound() -> Optional[str]:
    rng = np.random.default_rng(106)
    for m in (Sphere(2), Hyperboloid(2)):
        for _ in range(N):
            a, b, c = _random_triangle(m, rng, 0.4)
            chk = curvature.lemma2_residual(a, b, c)
            if chk.residual < -1e-8 * chk.scale:
                return f"{m.kind}: comparison residual {chk.residual:.3e} below tolerance"
    return None


def _objective_zoo():
    q = np.diag([1.0, 4.0])
    return [
        quad_euclidean(q, [0.0, 0.0]),
        quad_flat_metric(q, [0.0, 0.0], [[2.0, 0.3], [0.3, 1.5]]),
        rayleigh_sphere(np.diag([3.0, 2.5, 1.0])),
        sqdist_hyperboloid([0.3, -0.2, math.sqrt(1.0 + 0.09 + 0.04)]),
        perturbed_quad(q, [0.0, 0.0]),
    ]


def check_objective_gradients() -> Optional[str]:
    rng = np.random.default_rng(107)
    for obj in _objective_zoo():
        star = obj.metadata.minimizer
        if obj.gradient(star).norm() > 1e-8:
            return f"{obj.id}: gradient at the minimizer is not zero"
        for _ in range(25):
            x = manifolds.exp_map(star, _random_tangent(star, rng, 0.4 * max(rng.random(), 0.1)))
            g = obj.gradient(x)
            fd = fd_gradient_oracle(obj, x)
            err = float(np.linalg.norm(fd.coords - g.coords))
            if err > 1e-5 * max(1.0, g.norm()):
                return f"{obj.id}: finite differences disagree with the gradient by {err:.3e}"
    return None


def check_forward_contraction_flat() -> Optional[str]:
    rng = np.random.default_rng(108)
    obj = quad_euclidean(np.diag([1.0, 4.0]), [0.0, 0.0])
    region = Region(obj.metadata.minimizer, 10.0)
    eta = 0.25
    for _ in range(N):
        x = manifolds.sample_point(region, rng)
        d0 = manifolds.dist(x, obj.metadata.minimizer)
        d1 = manifolds.dist(rgd_step(obj, x, eta), obj.metadata.minimizer)
        if d1 * d1 > (0.75 + 1e-12) * d0 * d0:
            return f"squared-distance ratio {(d1 / d0) ** 2:.6f} exceeded 1 - a*mu*eta"
    return None


def check_forward_contraction_hyperbolic() -> Optional[str]:
    rng = np.random.default_rng(109)
    obj = sqdist_hyperboloid([0.0, 0.0, 1.0])
    region = Region(obj.metadata.minimizer, 2.0)
    eta = 1.0 / curvature.zeta(-1.0, 2.0)
    for _ in range(N):
        x = manifolds.sample_point(region, rng)
        d0 = manifolds.dist(x, obj.metadata.minimizer)
        if d0 <= 1e-12:
            continue
        d1 = manifolds.dist(rgd_step(obj, x, eta), obj.metadata.minimizer)
        if d1 * d1 > (1.0 - eta + 1e-9) * d0 * d0:
            return f"squared-distance ratio {(d1 / d0) ** 2:.6f} exceeded 1 - eta"
    return None


def check_converse_round_trip() -> Optional[str]:
    rng = np.random.default_rng(110)
    obj = quad_euclidean(np.diag([1.0, 4.0]), [0.0, 0.0])
    region = Region(obj.metadata.minimizer, 10.0)
    eta = 0.25
    pts = [manifolds.sample_point(region, rng) for _ in range(N)]
    worst = 0.0
    for x in pts:
        d0 = manifolds.dist(x, obj.metadata.minimizer)
        d1 = manifolds.dist(rgd_step(obj, x, eta), obj.metadata.minimizer)
        worst = max(worst, (d1 / d0) ** 2)
    if worst >= 1.0:
        return "no contraction observed on the reference quadratic"
    a, mu = converse_parameters(1.0 - worst, 4.0, eta, 1.0)
    for x in pts:
        r = wsc_residual(obj, x, a, mu)
        d = manifolds.dist(x, obj.metadata.minimizer)
        scale = max(1.0, abs(obj.value(x)), d * d)
        if r < -1e-9 * scale:
            return f"reconstructed (a, mu) violated the inequality: residual {r:.3e}"
    for c in (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0):
        a, mu = converse_parameters(c, 4.0, eta, 1.0)
        rep = consistency_check(a, mu, eta, c, theorem_parameters=True)
        if not rep.ok:
            return f"consistency report failed on the formula grid at c = {c}"
    return None


def check_certificates_end_to_end() -> Optional[str]:
    quad = quad_euclidean(np.diag([1.0, 4.0]), [0.0, 0.0])
    cert = certify_region(quad, Region(quad.metadata.minimizer, 10.0), 0.25, N, seed=7)
    if cert.verdict != "certified":
        return f"flat quadratic certificate came back {cert.verdict}"
    hyp = sqdist_hyperboloid([0.0, 0.0, 1.0])
    eta = 1.0 / curvature.zeta(-1.0, 2.0)
    cert = certify_region(hyp, Region(hyp.metadata.minimizer, 2.0), eta, N, seed=7)
    if cert.verdict != "certified":
        return f"hyperbolic certificate came back {cert.verdict}"
    ray = rayleigh_sphere(np.diag([3.0, 2.5, 1.0]))
    region = Region(ray.metadata.minimizer, 0.15 * math.pi)
    gamma, _ = resolve_gamma(ray, region, 7)
    cert = certify_region(ray, region, 1.0 / gamma, N, seed=7)
    if cert.verdict != "certified":
        return f"sphere certificate came back {cert.verdict}"
    if "gamma-estimated" not in cert.flags:
        return "sphere certificate must flag its estimated smoothness constant"
    return None


def check_preconditioned_routes() -> Optional[str]:
    rng = np.random.default_rng(111)
    obj = quad_euclidean(np.diag([1.0, 4.0]), [0.0, 0.0])
    for _ in range(N):
        basis, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        a_mat = basis @ np.diag(rng.uniform(0.5, 8.0, size=2)) @ basis.T
        a_mat = 0.5 * (a_mat + a_mat.T)
        x = obj.manifold.point(rng.uniform(-2.0, 2.0, size=2))
        gap = preconditioned_equivalence(obj, a_mat, x, float(rng.uniform(0.0, 1.0)))
        if gap > 1e-12 * (1.0 + float(np.max(np.abs(x.coords)))):
            return f"preconditioned routes disagree by {gap:.3e}"
    tc = translate_constants(np.diag([2.0, 8.0]), 4.0, 1.0)
    if (tc.gamma, tc.mu) != (2.0, 0.125):
        return f"constant translation returned {(tc.gamma, tc.mu)}, expected (2.0, 0.125)"
    return None


def check_determinism() -> Optional[str]:
    obj = quad_euclidean(np.diag([1.0, 4.0]), [0.0, 0.0])
    region = Region(obj.metadata.minimizer, 10.0)
    one = certify_region(obj, region, 0.25, 64, seed=9).to_json_dict()
    two = certify_region(obj, region, 0.25, 64, seed=9).to_json_dict()
    many = certify_region(obj, region, 0.25, 64, seed=9, workers=3).to_json_dict()
    if one != two:
        return "two identical runs produced different certificates"
    if one != many:
        return "worker count leaked into the certificate"
    return None


CHECKS: list[tuple[str, Callable[[], Optional[str]]]] = [
    ("geometry-round-trip", check_geometry_round_trip),
    ("geometry-distance-consistency", check_geometry_distance_consistency),
    ("geometry-transport", check_geometry_transport),
    ("geometry-triangle-inequality", check_geometry_triangle_inequality),
    ("curvature-reference-values", check_curvature_reference_values),
    ("lemma2-flat-exactness", check_lemma2_flat_exactness),
    ("lemma2-curved-bound", check_lemma2_curved_bound),
    ("objective-gradients", check_objective_gradients),
    ("forward-contraction-flat", check_forward_contraction_flat),
    ("forward-contraction-hyperbolic", check_forward_contraction_hyperbolic),
    ("converse-round-trip", check_converse_round_trip),
    ("certificates-end-to-end", check_certificates_end_to_end),
    ("preconditioned-routes", check_preconditioned_routes),
    ("determinism", check_determinism),
]


def run_selftest(quiet: bool = False, emit=print) -> int:
    """Run every check; report PASS/FAIL per property; return 0 only if all pass."""
    failures = 0
    t_total = time.perf_counter()
    for name, check in CHECKS:
        t0 = time.perf_counter()
        try:
            detail = check()
        except Exception as e:  # a crash is a failure with the exception as detail
            detail = f"raised {type(e).__name__}: {e}"
        elapsed = time.perf_counter() - t0
        if detail is None:
            if not quiet:
                emit(f"PASS {name} ({elapsed:.2f}s)")
        else:
            failures += 1
            emit(f"FAIL {name}: {detail}")
    total = time.perf_counter() - t_total
    emit(f"selftest: {len(CHECKS) - failures}/{len(CHECKS)} properties passed in {total:.2f}s")
    return 0 if failures == 0 else 1
