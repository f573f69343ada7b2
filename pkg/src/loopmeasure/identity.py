"""Puncture identities as partial sums with tail extrapolation.

The computable face of the identities is one-sided: every partial sum of the
punctured-surface series is a lower bound for the closed-surface mass, so a
report carries the monotone partial-sum curve, its extrapolated limit, and
the relative gap.  The flagship instance pairs the hexagonal flat torus with
the modular torus.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DomainError,
    FitError,
    IterationDivisibilityWarning,
    UnverifiableMarkingError,
)
from .loopmass import mass_flat_class, mass_hyperbolic_class
from .spectrum import SpectrumTable

HEX_AREA = math.sqrt(3.0) / 2.0

# homology classes of the modular torus whose marking to hexagonal lattice
# vectors is pinned by the order-six symmetry: the six unit classes
_VERIFIED_CLASSES = frozenset(
    {(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)}
)
_MARKING_TOL = 1e-12


class ExtrapolationModel(enum.Enum):
    C_OVER_L = "c_over_l"
    NONE = "none"


@dataclass(frozen=True, slots=True)
class IdentityReport:
    """Partial-sum evaluation of one puncture-identity instance."""

    lhs: float
    partial_sums: tuple[tuple[float, float], ...]
    n_terms: int
    extrapolated_limit: float
    extrapolation_model: ExtrapolationModel
    relative_gap: float
    marking_verified: bool = True

    def __post_init__(self) -> None:
        prev = -math.inf
        for length, value in self.partial_sums:
            if value < prev:
                raise DomainError("partial sums must be nondecreasing in length")
            prev = value
        if self.n_terms < 0:
            raise DomainError("n_terms must be nonnegative")


class ExtrapolationFit(NamedTuple):
    limit_estimate: float
    model_fit_error: float


class PunctureResidual(NamedTuple):
    lhs: float
    partial_rhs: float
    residual: float


def _neumaier(values: Sequence[float]) -> list[float]:
    # running compensated prefix sums; order of `values` is the caller's
    sums = []
    s = 0.0
    c = 0.0
    for x in values:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        sums.append(s + c)
    return sums


def tail_extrapolate(
    partial_sums: Sequence[tuple[float, float]],
) -> ExtrapolationFit:
    """Least-squares fit of S(L) = S_inf - c/L over the top half of the
    partial-sum curve.

    Requires at least 4 points spanning a factor 1.5 in L.  Returns the
    fitted limit and the root-mean-square residual of the fit.
    """
    pts = list(partial_sums)
    if len(pts) < 4:
        raise FitError(f"need at least 4 partial-sum points, got {len(pts)}")
    lengths = [p[0] for p in pts]
    lo, hi = min(lengths), max(lengths)
    if not (lo > 0.0) or hi < 1.5 * lo:
        raise FitError(
            f"partial-sum lengths must span a factor 1.5, got [{lo!r}, {hi!r}]"
        )
    top = pts[(len(pts) // 2):]
    L = np.array([p[0] for p in top])
    S = np.array([p[1] for p in top])
    design = np.column_stack([np.ones_like(L), -1.0 / L])
    coef, _res, _rank, _sv = np.linalg.lstsq(design, S, rcond=None)
    fitted = design @ coef
    rms = float(np.sqrt(np.mean((S - fitted) ** 2)))
    return ExtrapolationFit(float(coef[0]), rms)


def _partial_sum_curve(
    records,
) -> tuple[tuple[tuple[float, float], ...], int]:
    # one curve point per distinct length; records must be pre-sorted
    terms = [
        (rec.length, (1.0 / rec.iteration) / math.expm1(rec.length))
        for rec in records
    ]
    prefix = _neumaier([t[1] for t in terms])
    curve: list[tuple[float, float]] = []
    for i, (length, _v) in enumerate(terms):
        if i + 1 < len(terms) and terms[i + 1][0] == length:
            continue
        curve.append((length, prefix[i]))
    return tuple(curve), len(terms)


def flat_puncture_report(
    area: float,
    class_norm: float,
    table: SpectrumTable,
    *,
    allow_unverified: bool = False,
) -> IdentityReport:
    """Compare the flat-torus class mass with the punctured-torus series.

    lhs is Area/(pi |tau|^2) for the marked class; the right side sums
    (1/m)/(e^l - 1) over every record of ``table`` (which must be filtered
    to the matching homology class), in increasing length order with
    compensated summation.  Only the six unit classes of the hexagonal
    torus carry a symmetry-pinned marking; any other class raises unless
    ``allow_unverified`` is set, in which case the report is flagged.
    """
    if table.homology_filter is None:
        raise DomainError(
            "table must be filtered to the marked homology class; "
            "got an unfiltered table"
        )
    verified = (
        table.group_name == "modular-torus"
        and tuple(table.homology_filter) in _VERIFIED_CLASSES
        and abs(area - HEX_AREA) <= _MARKING_TOL
        and abs(class_norm - 1.0) <= _MARKING_TOL
    )
    if not verified and not allow_unverified:
        raise UnverifiableMarkingError(
            f"class {table.homology_filter!r} on group "
            f"{table.group_name!r} with (area, norm) = ({area!r}, "
            f"{class_norm!r}) has no symmetry-pinned marking; only the six "
            "unit classes of the hexagonal torus are verified (set "
            "allow_unverified to proceed with a flagged report)"
        )
    lhs = mass_flat_class(area, class_norm).value
    records = sorted(table.records, key=lambda r: r.sort_key())
    curve, n_terms = _partial_sum_curve(records)
    model = ExtrapolationModel.NONE
    if len(curve) >= 4 and curve[-1][0] >= 1.5 * curve[0][0]:
        fit = tail_extrapolate(curve)
        extrapolated = fit.limit_estimate
        model = ExtrapolationModel.C_OVER_L
    else:
        extrapolated = curve[-1][1] if curve else 0.0
    gap = abs(extrapolated - lhs) / lhs
    return IdentityReport(
        lhs, curve, n_terms, extrapolated, model, gap, marking_verified=verified
    )


def hyperbolic_puncture_residual(
    length: float,
    iteration: int,
    rhs_terms: Sequence[tuple[float, int]],
    *,
    check_divisibility: bool = True,
) -> PunctureResidual:
    """Evaluate one hyperbolic puncture-identity instance from externally
    supplied punctured-surface terms.

    lhs = (1/m)/(e^l - 1) for the closed-surface geodesic; each rhs term
    (l', m') contributes (1/m')/(e^{l'} - 1).  Every m' must divide m (a
    primitive geodesic stays primitive after puncturing); violations warn
    rather than raise, since term lists are external data.  A residual
    below -1e-12 means the supplied terms overshoot and cannot belong to
    this instance.
    """
    lhs = mass_hyperbolic_class(length, iteration).value
    terms = []
    for ell, m_prime in rhs_terms:
        if m_prime != int(m_prime) or int(m_prime) < 1:
            raise DomainError(f"rhs iteration must be a positive integer, got {m_prime!r}")
        m_prime = int(m_prime)
        ell = float(ell)
        if not (ell > 0.0):
            raise DomainError(f"rhs length must be positive, got {ell!r}")
        if check_divisibility and iteration % m_prime != 0:
            warnings.warn(
                f"rhs iteration {m_prime} does not divide lhs iteration "
                f"{iteration}; the term cannot come from this class",
                IterationDivisibilityWarning,
                stacklevel=2,
            )
        terms.append((1.0 / m_prime) / math.expm1(ell))
    partial_rhs = math.fsum(terms)
    return PunctureResidual(lhs, partial_rhs, lhs - partial_rhs)


def export_report(report: IdentityReport, path: str) -> None:
    """Plot-ready CSV: a summary comment line, then L,partial_sum rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "# lhs=%.17g extrapolated=%.17g relative_gap=%.17g model=%s "
            "n_terms=%d marking_verified=%s\n"
            % (
                report.lhs,
                report.extrapolated_limit,
                report.relative_gap,
                report.extrapolation_model.value,
                report.n_terms,
                report.marking_verified,
            )
        )
        fh.write("L,partial_sum\n")
        for length, value in report.partial_sums:
            fh.write("%.17g,%.17g\n" % (length, value))
