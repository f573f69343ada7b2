"""Hyperbolic plane primitives: points, Moebius matrices, heat kernels.

Model: upper half plane H = {x + iy : y > 0} with metric (dx^2 + dy^2)/y^2
and Brownian motion run at speed 2 (generator Delta, not Delta/2).  The
heat kernel depends only on the hyperbolic distance d(z, w):

    p(d, t) = sqrt(2) / (4 pi t)^{3/2} * e^{-t/4}
              * int_d^inf r e^{-r^2/4t} / sqrt(cosh r - cosh d) dr

The integrable square-root singularity at r = d is removed by the
substitution r = d + u^2 together with

    cosh r - cosh d = 2 sinh(u^2/2) sinh(d + u^2/2).

Everything here is pure and reentrant; no module-level mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.special import expi

from .errors import DomainError, MatrixClassificationError, NumericError

__all__ = [
    "MoebiusMatrix",
    "HPoint",
    "QuadratureSpec",
    "hyp_distance",
    "heat_kernel_H",
    "heat_kernel_H_at_distance",
    "heat_kernel_C",
    "geodesic_length_of_matrix",
    "erf",
    "li",
    "li_tilde",
    "CLASSIFICATION_TOL",
]

# |trace| within this distance of 2 counts as parabolic.
CLASSIFICATION_TOL = 1e-9

_DET_TOL = 1e-12
# Gaussian factor cut relative to its peak value on the integration ray.
_GAUSS_CUT = 1e-18
_LOG_GAUSS_CUT = -math.log(_GAUSS_CUT)


@dataclass(frozen=True, slots=True)
class QuadratureSpec:
    """Tolerances for the adaptive quadratures in this package.

    cutoff bounds the radial extent of improper integrals after the
    automatic Gaussian truncation; it is a hard cap, not a target.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    cutoff: float = 1e6

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if not self.cutoff > 0:
            raise DomainError("cutoff must be positive")


@dataclass(frozen=True, slots=True)
class HPoint:
    """Point x + iy of the upper half plane."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("HPoint coordinates must be finite")
        if not self.y > 0:
            raise DomainError(f"HPoint needs y > 0, got y = {self.y!r}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True, slots=True)
class MoebiusMatrix:
    """Element of PSL(2, R) stored as a sign-normalized real 2x2 matrix.

    Construction requires det = a d - b c = 1 within 1e-12; the entries are
    then rescaled by 1/sqrt(det) and the projective sign is fixed so that
    trace >= 0 (ties broken on the first nonzero entry).
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        a, b, c, d = float(self.a), float(self.b), float(self.c), float(self.d)
        det = a * d - b * c
        if not math.isfinite(det):
            raise DomainError("matrix entries must be finite")
        if abs(det - 1.0) > _DET_TOL:
            raise DomainError(f"determinant {det!r} is not 1 within {_DET_TOL}")
        s = 1.0 / math.sqrt(det)
        a, b, c, d = a * s, b * s, c * s, d * s
        tr = a + d
        if tr < 0 or (tr == 0 and _leading_negative(a, b, c)):
            a, b, c, d = -a, -b, -c, -d
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def classify(self) -> str:
        t = abs(self.trace)
        if t > 2.0 + CLASSIFICATION_TOL:
            return "hyperbolic"
        if t >= 2.0 - CLASSIFICATION_TOL:
            return "parabolic"
        return "elliptic"

    @property
    def is_hyperbolic(self) -> bool:
        return self.classify() == "hyperbolic"

    def __matmul__(self, other: "MoebiusMatrix") -> "MoebiusMatrix":
        return MoebiusMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMatrix":
        return MoebiusMatrix(self.d, -self.b, -self.c, self.a)

    def apply(self, z: HPoint) -> HPoint:
        w = (self.a * z.z + self.b) / (self.c * z.z + self.d)
        return HPoint(w.real, w.imag)

    def conjugated_by(self, g: "MoebiusMatrix") -> "MoebiusMatrix":
        return g @ self @ g.inverse()


def _leading_negative(a: float, b: float, c: float) -> bool:
    # tie-break for trace == 0: flip so the first nonzero of (a, b, c) is > 0
    for v in (a, b, c):
        if v != 0.0:
            return v < 0.0
    return False


def hyp_distance(z: HPoint, w: HPoint) -> float:
    """Hyperbolic distance; cosh d = 1 + |z - w|^2 / (2 Im z Im w)."""
    dx = z.x - w.x
    dy = z.y - w.y
    cosh_d = 1.0 + (dx * dx + dy * dy) / (2.0 * z.y * w.y)
    # rounding can push cosh_d a hair under 1 for nearly equal points
    return math.acosh(max(cosh_d, 1.0))


def _sinhc(x: float) -> float:
    """sinh(x)/x, stable through x = 0."""
    if abs(x) < 1e-5:
        x2 = x * x
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return math.sinh(x) / x


def heat_kernel_H_at_distance(
    d: float, t: float, quadrature: QuadratureSpec | None = None
) -> float:
    """Hyperbolic heat kernel p(d, t) for speed-2 Brownian motion.

    The radial integral is truncated where the Gaussian factor falls below
    1e-18 of its peak at r = d; the discarded tail is below that relative
    size.  Raises NumericError (with partial value and bound) if the
    adaptive quadrature reports non-convergence within max_subdivisions.
    """
    q = quadrature or QuadratureSpec()
    if d < 0:
        raise DomainError("distance must be >= 0")
    if not t > 0:
        raise DomainError("time must be > 0")
    r_max = min(math.sqrt(d * d + 4.0 * t * _LOG_GAUSS_CUT), q.cutoff)
    pref = math.sqrt(2.0) * math.exp(-t / 4.0) / (4.0 * math.pi * t) ** 1.5

    if d == 0.0:
        # integrand r e^{-r^2/4t} / (sqrt(2) sinh(r/2)); value sqrt(2) at r = 0
        def integrand(r: float) -> float:
            return math.sqrt(2.0) * math.exp(-r * r / (4.0 * t)) / _sinhc(r / 2.0)

        lo, hi = 0.0, r_max
    else:
        u_hi = math.sqrt(r_max - d)

        def integrand(u: float) -> float:
            uu = u * u
            r = d + uu
            den = _sinhc(uu / 2.0) * math.sinh(d + uu / 2.0)
            return 2.0 * r * math.exp(-r * r / (4.0 * t)) / math.sqrt(den)

        lo, hi = 0.0, u_hi

    out = quad(
        integrand,
        lo,
        hi,
        epsabs=q.abs_tol / pref if pref > 0 else q.abs_tol,
        epsrel=q.rel_tol,
        limit=q.max_subdivisions,
        full_output=1,
    )
    value, abserr = out[0], out[1]
    if len(out) > 3:
        raise NumericError(
            f"heat kernel quadrature did not converge at d={d}, t={t}: {out[3]}",
            partial_value=pref * value,
            error_bound=pref * abserr,
        )
    return pref * value


def heat_kernel_H(
    z: HPoint, w: HPoint, t: float, quadrature: QuadratureSpec | None = None
) -> float:
    """Heat kernel on H between two points; see heat_kernel_H_at_distance."""
    return heat_kernel_H_at_distance(hyp_distance(z, w), t, quadrature)


def heat_kernel_C(z: complex, w: complex, t: float) -> float:
    """Euclidean heat kernel (speed 2): e^{-|z-w|^2/4t} / (4 pi t)."""
    if not t > 0:
        raise DomainError("time must be > 0")
    zz = complex(z) - complex(w)
    return math.exp(-(zz.real * zz.real + zz.imag * zz.imag) / (4.0 * t)) / (
        4.0 * math.pi * t
    )


def geodesic_length_of_matrix(m: MoebiusMatrix) -> float:
    """Translation length 2 * acosh(|tr|/2) of a hyperbolic matrix.

    Parabolic or elliptic input raises MatrixClassificationError naming the
    offending class.
    """
    kind = m.classify()
    if kind != "hyperbolic":
        raise MatrixClassificationError(
            f"matrix with trace {m.trace!r} is {kind}, not hyperbolic", kind=kind
        )
    return 2.0 * math.acosh(abs(m.trace) / 2.0)


erf = math.erf

_LI_AT_2 = float(expi(math.log(2.0)))  # li(2) = 1.045163780117492784...


def li(x: float) -> float:
    """Logarithmic integral li(x) = PV int_0^x dt/log t, for x >= 2 only."""
    if x < 2.0:
        raise DomainError("li(x) is exposed only for x >= 2; use li_tilde below 2")
    return float(expi(math.log(x)))


def li_tilde(x: float) -> float:
    """int_2^x dt/log t for x >= 2, and exactly 0 for x < 2."""
    if x < 2.0:
        return 0.0
    return li(x) - _LI_AT_2
