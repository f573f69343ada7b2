"""Stochastic cross-check of the flat-torus hit mass.

The mass of Brownian loops on a flat torus that stay in a fixed free
homotopy class and touch a chosen closed geodesic has a closed form
(``loopmass.mass_torus_hit``).  This module re-derives the number by
simulation.  A rooted loop in class m*lam factors as (root, duration,
bridge): the root is uniform on the torus, the duration t carries the
normalized density a t^-2 exp(-a/t) with a = |m*lam|^2 / 4, and given
both the path is a Brownian bridge of variance rate 2 per coordinate
from the root to its m*lam translate.  Every factor except the hit
indicator integrates in closed form to ``mass_flat_class``, so the
estimator is that constant times the empirical hit fraction; only the
indicator is random.

Hitting is decided against the family of parallel lines covering the
geodesic.  Only the coordinate normal to the lines matters: the class
vector is parallel to them, so the normal component of the bridge is a
one dimensional bridge returning to its start, and the root's normal
coordinate is uniform over one spacing (the projection of the lattice
onto the normal is exactly spacing * Z).  Between grid points the
continuum crossing probability exp(-2 d1 d2 / (v dt)) with v = 2
restores what the grid hides; a straddle at grid times is a sure hit.

Randomness is counter based (Philox), keyed by the user seed with one
counter block per chunk of 4096 samples; every chunk draws in a fixed
order (durations, roots, increments, decision uniforms), so runs are
bit identical for a given seed however chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Sequence, TextIO, Tuple

import numpy as np

from .errors import DomainError, InfiniteMassError
from .loopmass import mass_flat_class

_CHUNK = 4096
_MIN_STEPS = 16
# standard_exponential can in principle return 0.0; the floor keeps
# t = a / e finite so the bridge arithmetic never produces NaN.
_EXP_FLOOR = 1e-300


class LineFamily(NamedTuple):
    """Parallel lines {z : <z, normal> in spacing * Z} with unit normal."""

    normal: complex
    spacing: float


class McEstimate(NamedTuple):
    """Monte Carlo mean with its standard error over n samples."""

    mean: float
    stderr: float
    n: int
    seed: int


@dataclass(frozen=True)
class LoopSampleSpec:
    """Parameters of one hit-mass estimation run.

    The torus is C modulo the lattice spanned by omega1 and omega2, the
    geodesic direction is lam = p*omega1 + q*omega2, and the sampled
    homotopy class is m*lam.
    """

    omega1: complex
    omega2: complex
    p: int
    q: int
    m: int
    n_steps: int
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        o1, o2 = complex(self.omega1), complex(self.omega2)
        if not all(math.isfinite(v) for v in (o1.real, o1.imag, o2.real, o2.imag)):
            raise DomainError("lattice basis must be finite")
        if (o1.conjugate() * o2).imag == 0.0:
            raise DomainError(
                "lattice basis is degenerate: omega2/omega1 must have nonzero"
                " imaginary part"
            )
        if (self.p, self.q) == (0, 0):
            raise DomainError("class vector p*omega1 + q*omega2 is zero")
        if self.m == 0:
            raise InfiniteMassError(
                "winding number 0 selects the contractible class, whose loop"
                " mass is infinite; only nontrivial classes carry finite mass"
            )
        if self.n_steps < _MIN_STEPS:
            raise DomainError(f"n_steps must be at least {_MIN_STEPS}")
        if self.n_samples < 1:
            raise DomainError("n_samples must be positive")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise DomainError("an integer rng seed is required; runs are never"
                              " seeded from the clock")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must lie in [0, 2^64)")

    @property
    def area(self) -> float:
        return abs((complex(self.omega1).conjugate() * complex(self.omega2)).imag)

    @property
    def lam(self) -> complex:
        return self.p * complex(self.omega1) + self.q * complex(self.omega2)

    @property
    def line_family(self) -> LineFamily:
        # The geodesic's image depends only on the primitive direction:
        # an imprimitive (p, q) retraces it, keeping the primitive spacing.
        g = math.gcd(abs(self.p), abs(self.q))
        lam = self.lam
        primitive_length = abs(lam) / g
        return LineFamily(normal=1j * lam / abs(lam),
                          spacing=self.area / primitive_length)


def sample_duration(a: float, rng: np.random.Generator) -> float:
    """Draw a loop duration with density a t^-2 exp(-a/t) on (0, inf).

    Realized as a divided by a standard exponential draw; the law of
    1/t is then Exp(1)/a, so E[1/t] = 1/a.
    """
    if not (a > 0.0 and math.isfinite(a)):
        raise DomainError("duration scale a must be positive and finite")
    e = max(float(rng.standard_exponential()), _EXP_FLOOR)
    return a / e


def sample_bridge(
    z0: complex,
    z1: complex,
    t: float,
    n_steps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Brownian bridge of variance rate 2 per coordinate from z0 to z1.

    Returns n_steps + 1 complex points on the uniform grid over [0, t].
    Grid marginals are exact (walk minus its linear drift), not Euler
    approximations; both endpoints are reproduced exactly.
    """
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError("bridge duration must be positive and finite")
    if n_steps < 1:
        raise DomainError("n_steps must be positive")
    dt = t / n_steps
    g = rng.standard_normal((2, n_steps))
    w = np.cumsum(g, axis=1) * math.sqrt(2.0 * dt)
    frac = np.arange(1, n_steps + 1) / n_steps
    pinned = w - frac * w[:, -1:]
    path = np.empty(n_steps + 1, dtype=complex)
    path[0] = complex(z0)
    path[1:] = complex(z0) + frac * (complex(z1) - complex(z0)) \
        + pinned[0] + 1j * pinned[1]
    path[-1] = complex(z1)
    return path


def _segment_no_hit(u: np.ndarray, dt, spacing: float) -> np.ndarray:
    """Per-segment no-hit probabilities for normal coordinates u.

    u has one row per path and one column per grid point; dt is the per
    segment duration (scalar or one value per row).  A cell change at
    grid times forces probability 0; otherwise the two walls of the
    shared cell are each crossed with probability exp(-d1 d2 / dt)
    (bridge of variance rate 2), treated as independent.  The neglected
    multi-crossing corrections are O(exp(-spacing^2 / dt)) and only
    arise when straddles are already overwhelming.
    """
    cells = np.floor(u / spacing)
    cross = cells[:, 1:] != cells[:, :-1]
    d1 = u[:, :-1] - cells[:, :-1] * spacing
    d2 = u[:, 1:] - cells[:, :-1] * spacing
    lo = np.where(cross, 0.0, d1 * d2)
    hi = np.where(cross, 0.0, (spacing - d1) * (spacing - d2))
    return (1.0 - np.exp(-lo / dt)) * (1.0 - np.exp(-hi / dt))


def path_hit_probability(path: Sequence[complex], t: float,
                         family: LineFamily) -> float:
    """Probability that the continuum loop behind a grid path touches a
    line of the family, given the grid values.

    The path is assumed sampled on a uniform grid over [0, t] with
    variance rate 2 per coordinate, as ``sample_bridge`` produces.
    """
    if not (family.spacing > 0.0 and math.isfinite(family.spacing)):
        raise DomainError("degenerate line family: spacing must be positive")
    if abs(abs(complex(family.normal)) - 1.0) > 1e-12:
        raise DomainError("line family normal must be a unit vector")
    pts = np.asarray(path, dtype=complex)
    if pts.ndim != 1 or pts.size < 2:
        raise DomainError("path must contain at least two points")
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError("path duration must be positive and finite")
    n = complex(family.normal)
    u = pts.real * n.real + pts.imag * n.imag
    dt = t / (pts.size - 1)
    no_hit = float(np.prod(_segment_no_hit(u[None, :], dt, family.spacing)))
    return 1.0 - no_hit


def hits_geodesic(path: Sequence[complex], t: float, family: LineFamily,
                  rng: np.random.Generator) -> bool:
    """Bernoulli hit indicator for one sampled path.

    Consumes exactly one uniform draw; deciding the whole path at once
    has the same law as independent per-segment crossing draws, since
    the no-hit probability is the product of the segment complements.
    A straddle at grid times makes the probability 1, so the draw
    cannot miss it.
    """
    return bool(rng.random() < path_hit_probability(path, t, family))


def _chunk_counts(spec: LoopSampleSpec, indicator: str) -> Iterator[Tuple[int, int]]:
    """Yield (chunk size, hit count) pairs in fixed chunk order."""
    scale = (abs(spec.m) * abs(spec.lam)) ** 2 / 4.0
    spacing = spec.line_family.spacing
    frac = np.arange(1, spec.n_steps + 1) / spec.n_steps
    remaining = spec.n_samples
    chunk_index = 0
    while remaining > 0:
        size = min(_CHUNK, remaining)
        gen = np.random.Generator(
            np.random.Philox(key=spec.seed, counter=[0, 0, 0, chunk_index]))
        # Fixed draw order per chunk: durations, roots, increments, decisions.
        e = np.maximum(gen.standard_exponential(size), _EXP_FLOOR)
        u0 = gen.random(size) * spacing
        g = gen.standard_normal((size, spec.n_steps))
        v = gen.random(size)
        if indicator == "one":
            hits = size
        else:
            dt = (scale / e) / spec.n_steps
            w = np.cumsum(g, axis=1) * np.sqrt(2.0 * dt)[:, None]
            u = np.empty((size, spec.n_steps + 1))
            u[:, 0] = u0
            # Bridge pinned back to u0: the class vector is parallel to
            # the lines, so the normal displacement of the endpoints is 0.
            u[:, 1:] = u0[:, None] + w - frac[None, :] * w[:, -1:]
            no_hit = np.prod(_segment_no_hit(u, dt[:, None], spacing), axis=1)
            hits = int(np.count_nonzero(v < 1.0 - no_hit))
        yield size, hits
        remaining -= size
        chunk_index += 1


def _combine(mass: float, pairs: Sequence[Tuple[int, int]],
             seed: int) -> McEstimate:
    n = sum(size for size, _ in pairs)
    k = sum(hits for _, hits in pairs)
    mean = mass * (k / n)
    if n >= 2:
        # The sample values are mass or 0, so the sample variance is an
        # exact function of the integer hit count.
        ss = k * (mass - mean) ** 2 + (n - k) * mean**2
        stderr = math.sqrt(ss / (n - 1)) / math.sqrt(n)
    else:
        stderr = 0.0
    return McEstimate(mean=mean, stderr=stderr, n=n, seed=seed)


def estimate_hit_mass(spec: LoopSampleSpec, indicator: str = "hit") -> McEstimate:
    """Estimate the mass of class-m*lam loops that touch the geodesic.

    The result is mass_flat_class(area, |m*lam|) times the empirical
    hit fraction.  indicator="one" replaces the hit indicator by the
    constant 1, which must return the class mass exactly with stderr 0:
    the sampling weights are analytic, only the indicator is random.
    """
    if indicator not in ("hit", "one"):
        raise DomainError(f"unknown indicator {indicator!r}; use hit or one")
    mass = mass_flat_class(spec.area, abs(spec.m) * abs(spec.lam)).value
    return _combine(mass, list(_chunk_counts(spec, indicator)), spec.seed)


def batch_estimates(spec: LoopSampleSpec, n_batches: int,
                    indicator: str = "hit") -> List[McEstimate]:
    """Split the run into contiguous chunk groups, one estimate each.

    Batches are disjoint and use the same counter-based streams as the
    combined run, so pooling the batch hit counts reproduces
    ``estimate_hit_mass`` exactly.
    """
    if indicator not in ("hit", "one"):
        raise DomainError(f"unknown indicator {indicator!r}; use hit or one")
    if n_batches < 1:
        raise DomainError("n_batches must be positive")
    pairs = list(_chunk_counts(spec, indicator))
    if n_batches > len(pairs):
        raise DomainError(
            f"more batches ({n_batches}) than sample chunks ({len(pairs)});"
            " lower n_batches or raise n_samples")
    mass = mass_flat_class(spec.area, abs(spec.m) * abs(spec.lam)).value
    out: List[McEstimate] = []
    base, extra = divmod(len(pairs), n_batches)
    start = 0
    for i in range(n_batches):
        stop = start + base + (1 if i < extra else 0)
        out.append(_combine(mass, pairs[start:stop], spec.seed))
        start = stop
    return out


def export_batches(fh: TextIO, batches: Sequence[McEstimate],
                   combined: McEstimate, reference: float) -> None:
    """Write per-batch rows and a summary line comparing to a reference."""
    z = (combined.mean - reference) / combined.stderr if combined.stderr > 0 \
        else 0.0
    fh.write(f"# reference={reference:.17g} combined_mean={combined.mean:.17g}"
             f" combined_stderr={combined.stderr:.17g} z={z:.17g}"
             f" n={combined.n} seed={combined.seed}\n")
    fh.write("n,mean,stderr\n")
    for b in batches:
        fh.write(f"{b.n},{b.mean:.17g},{b.stderr:.17g}\n")
