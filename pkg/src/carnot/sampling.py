"""Deterministic sampling plans and point generators.

Shell and ball samples are drawn from seeded generators; direction sets use
low-discrepancy constructions in low dimension (golden-angle circle,
Fibonacci sphere, Halton-driven layer weights) so that repeated runs with
the same plan are bit-identical.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def halton(count, dim, start=1):
    """The first ``count`` points of the Halton sequence in [0,1)^dim."""
    out = np.empty((count, dim))
    for d in range(dim):
        base = _PRIMES[d % len(_PRIMES)]
        for k in range(count):
            i, f, x = start + k, 1.0, 0.0
            while i > 0:
                f /= base
                x += f * (i % base)
                i //= base
            out[k, d] = x
    return out


def unit_directions(dim, count, seed=0):
    """Deterministic, well-spread unit vectors on the Euclidean sphere."""
    if dim == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    if dim == 2:
        golden = (1 + 5**0.5) / 2
        ang = 2 * np.pi * ((np.arange(count) * golden + seed * golden**2) % 1.0)
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if dim == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        r = np.sqrt(np.maximum(0.0, 1 - z * z))
        ang = np.pi * (1 + 5**0.5) * (k + seed)
        return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=-1)
    rng = np.random.default_rng(seed + 1_000_003 * dim)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def quasi_sphere(desc, count, seed=0):
    """Points of homogeneous norm exactly 1, spread over all layers.

    Layer weights t_s >= 0 with sum 1 come from a Halton simplex sample; the
    layer-s block has Euclidean length t_s**s so that the norm is exactly
    sum_s t_s = 1.
    """
    step = desc.step
    if step == 1:
        return unit_directions(desc.dim, count, seed)
    u = halton(count, step - 1, start=17 + 101 * seed)
    knots = np.sort(u, axis=1)
    knots = np.concatenate([np.zeros((count, 1)), knots, np.ones((count, 1))], axis=1)
    weights = np.diff(knots, axis=1)  # rows on the simplex
    pts = np.zeros((count, desc.dim))
    for s in range(1, step + 1):
        sl = desc.layer_slice(s)
        dims = sl.stop - sl.start
        dirs = unit_directions(dims, count, seed + 7 * s)
        pts[:, sl] = dirs * (weights[:, s - 1] ** s)[:, None]
    return pts


def sphere_shell(desc, radius, count, rng):
    """Seeded random points of homogeneous norm ``radius``."""
    step = desc.step
    if step == 1:
        v = rng.standard_normal((count, desc.dim))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        return radius * v
    w = rng.dirichlet(np.ones(step), size=count)
    pts = np.zeros((count, desc.dim))
    for s in range(1, step + 1):
        sl = desc.layer_slice(s)
        dims = sl.stop - sl.start
        v = rng.standard_normal((count, dims))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        pts[:, sl] = v * (w[:, s - 1] ** s)[:, None]
    return desc.dilate(np.full(count, radius), pts)


def ball(desc, radius, count, rng):
    """Seeded random points of homogeneous norm <= ``radius``."""
    pts = sphere_shell(desc, 1.0, count, rng)
    radial = rng.uniform(size=count) ** (1.0 / desc.homogeneous_dim)
    return desc.dilate(radius * radial, pts)


@dataclass(frozen=True)
class Tolerances:
    """Pinned tolerances used by the verification procedures."""

    membership: float = 1e-8
    hull_vertex: float = 1e-3
    singleton_diameter: float = 1e-3
    fit: float = 1e-3
    mignot: float = 1e-2
    dermax: float = 1e-2
    hconvexity: float = 1e-10
    psd: float = 1e-6
    mvt_smooth: float = 1e-8
    mvt_polyhedral: float = 1e-4
    mvt_lambda: float = 1e-3
    closed_graph: float = 1e-3
    support_gap: float = 1e-2
    monotone_slack: float = 1e-9


@dataclass(frozen=True)
class SamplingPlan:
    """Radii schedules, sample counts, steps and seeds for all estimators."""

    radii: tuple = tuple(0.3 * 0.25**k for k in range(8))
    shell_samples: int = 48
    fd_step: float = 1e-6
    directions: int = 64
    seed: int = 0
    base_count: int = 20
    base_radius: float = 0.75
    segment_scales: tuple = (1.0, 0.4, 0.15, 0.05)
    lambda_grid: int = 9
    segment_checks: int = 32
    dd_lambda0: float = 1e-2
    dd_steps: int = 10
    tau0: float = 0.5
    tau_count: int = 9
    so_directions: int = 48
    use_analytic_gradient: bool = True
    fd_stability_rtol: float = 1e-3
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        r = np.asarray(self.radii)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("radii must be strictly decreasing positive reals")
        for name in ("shell_samples", "directions", "base_count", "lambda_grid", "segment_checks"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def rng(self, tag):
        """Deterministic per-task generator derived from the plan seed."""
        return np.random.default_rng((self.seed, zlib.crc32(tag.encode())))

    def scaled(self, factor):
        """Shrink the shell radii by ``factor`` (used for zoomed quotients)."""
        return replace(self, radii=tuple(r * factor for r in self.radii))

    def taus(self):
        return tuple(self.tau0 * 2.0**-k for k in range(self.tau_count))


def default_plan(seed=0, **overrides):
    return replace(SamplingPlan(), seed=seed, **overrides) if overrides else SamplingPlan(seed=seed)


def segment_inside(field, x, h, checks=32):
    """Whether the sampled horizontal segment x * [0, h] stays in the domain.

    The domain predicate is black-box, so containment is checked on a finite
    grid of the segment rather than exactly.
    """
    ts = np.linspace(0.0, 1.0, checks)
    pts = field.desc.translate_points(x, ts[:, None] * field.desc.embed_horizontal(h)[None, :])
    return bool(np.all(field.inside(pts)))


def require_inside(field, pts, what="evaluation point"):
    if not np.all(field.inside(pts)):
        raise DomainError(f"{what} leaves the declared domain of {field.label!r}")
