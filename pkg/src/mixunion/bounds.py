"""Finite-sample lower bounds for ``P(A_1 u ... u A_N)`` under mixing.

Every function returns a :class:`~mixunion.core.BoundReport`.  Bounds of
the form ``1 - exp(-x)`` report ``x`` as ``exponent``; bounds with an
additive mixing correction are clipped at zero and say so via ``clipped``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BoundReport,
    BoundsError,
    FamilyMismatchError,
    InsufficientBandError,
    IntersectionBand,
    MarginalSequence,
    MixingProfile,
    ZeroLowerMassError,
    one_minus_exp,
    profile_at,
    window_spec,
)


def _need_family(profile: MixingProfile, family: str) -> None:
    if profile.family != family:
        raise FamilyMismatchError(
            f"expected a {family} profile, got a {profile.family} profile"
        )


def _need_spacing(L, minimum=0):
    if int(L) != L or L < minimum:
        raise BoundsError(f"spacing L must be an integer >= {minimum}, got {L!r}")
    return int(L)


def _clip(raw):
    return (0.0, True) if raw < 0 else (min(raw, 1.0), False)


def _positive_part_mass(probs: np.ndarray, c: float) -> float:
    return math.fsum(np.maximum(probs - c, 0.0))


# ---------------------------------------------------------------------------
# phi-mixing
# ---------------------------------------------------------------------------


def phi_bound(p: MarginalSequence, profile: MixingProfile, L: int) -> BoundReport:
    """Residue-class bound ``1 - exp(-(1/(L+1)) sum_k (p_k - phi(L+1))_+)``."""
    _need_family(profile, "phi")
    L = _need_spacing(L)
    phi = profile_at(profile, L + 1)
    clean = phi <= p.p_min
    if clean:
        exponent = (p.total - p.N * phi) / (L + 1)
    else:
        exponent = _positive_part_mass(p.probs, phi) / (L + 1)
    exponent = max(exponent, 0.0)
    return BoundReport(
        bound=one_minus_exp(exponent),
        form="phi-clean" if clean else "phi-main",
        exponent=exponent,
        L=L,
        residuals={"phi": phi, "mass_lost": p.total / (L + 1) - exponent},
    )


def _phi_exponents(p: MarginalSequence, profile: MixingProfile, L_max: int) -> np.ndarray:
    """Exponents of :func:`phi_bound` for ``L = 0..L_max`` in one pass."""
    srt = np.sort(p.probs)
    # tail[k] = sum of srt[k:], computed from the top so small terms are not swamped
    tail = np.concatenate([np.cumsum(srt[::-1])[::-1], [0.0]])
    Ls = np.arange(L_max + 1)
    phis = np.array([profile_at(profile, L + 1) for L in Ls])
    first_above = np.searchsorted(srt, phis, side="right")
    count = srt.size - first_above
    mass = tail[first_above] - count * phis
    return np.maximum(mass, 0.0) / (Ls + 1)


def phi_optimize(p: MarginalSequence, profile: MixingProfile) -> BoundReport:
    """Best spacing for :func:`phi_bound` over ``L = 0..N-1``.

    Ties go to the smallest ``L``.  The exponent of the returned report is
    the optimised exponent, and it is recomputed through :func:`phi_bound`
    so it matches a direct evaluation at ``L*`` exactly.
    """
    _need_family(profile, "phi")
    L_max = p.N - 1
    exps = _phi_exponents(p, profile, L_max)
    # screen with the vectorised pass, then settle near-ties exactly
    top = exps.max()
    candidates = np.flatnonzero(exps >= top - 1e-12 * max(1.0, top))
    best = None
    for L in candidates:
        rep = phi_bound(p, profile, int(L))
        if best is None or rep.exponent > best.exponent:
            best = rep
    best.form = "phi-opt"
    best.residuals["search_L_max"] = float(L_max)
    if profile.restriction is None and profile_at(profile, p.N) > 0:
        best.notes.append(
            f"spacing search capped at L = N-1 = {L_max}; ambient profile is "
            f"still positive at lag N"
        )
    return best


# ---------------------------------------------------------------------------
# alpha-mixing
# ---------------------------------------------------------------------------


def alpha_bound(p: MarginalSequence, profile: MixingProfile, L: int) -> BoundReport:
    """``[1 - exp(-S_N/(L+1)) - ceil(N/(L+1)) alpha(L+1)]_+``."""
    _need_family(profile, "alpha")
    L = _need_spacing(L)
    alpha = profile_at(profile, L + 1)
    exponent = p.total / (L + 1)
    blocks = -(-p.N // (L + 1))
    correction = blocks * alpha
    raw = one_minus_exp(exponent) - correction
    bound, clipped = _clip(raw)
    return BoundReport(
        bound=bound,
        form="alpha-main",
        exponent=exponent,
        L=L,
        residuals={"alpha": alpha, "alpha_correction": correction,
                   "blocks": float(blocks), "unclipped": raw},
        clipped=clipped,
    )


def alpha_lower_mass_bound(p: MarginalSequence, profile: MixingProfile, L: int) -> BoundReport:
    """``[1 - exp(-S_N/(L+1)) - alpha(L+1) / (1 - exp(-p_min))]_+``."""
    _need_family(profile, "alpha")
    L = _need_spacing(L)
    p_min = p.p_min
    if p_min <= 0:
        raise ZeroLowerMassError("zero-lower-mass: some marginal probability is 0")
    alpha = profile_at(profile, L + 1)
    exponent = p.total / (L + 1)
    correction = alpha / one_minus_exp(p_min)
    raw = one_minus_exp(exponent) - correction
    bound, clipped = _clip(raw)
    return BoundReport(
        bound=bound,
        form="alpha-lower-mass",
        exponent=exponent,
        L=L,
        residuals={"alpha": alpha, "alpha_correction": correction,
                   "p_min": p_min, "unclipped": raw},
        clipped=clipped,
    )


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------


def window_bound(p: MarginalSequence, profile: MixingProfile, i: int, n: int, L: int,
                 phi_override=None) -> BoundReport:
    """Lower bound for the union over the window ``i+1 .. Phi(i+n)``.

    The profile family picks the variant: phi keeps the residual inside the
    exponent, alpha subtracts ``ceil(M/(L+1)) alpha(L+1)``.
    """
    L = _need_spacing(L)
    win = window_spec(p, i, n, phi_override)
    coef = profile_at(profile, L + 1)
    res = {"Phi": float(win.Phi_of_n), "M": float(win.M), profile.family: coef}
    if profile.family == "phi":
        exponent = max(n - win.M * coef, 0.0) / (L + 1)
        return BoundReport(one_minus_exp(exponent), "window-phi", exponent, L, res)
    exponent = n / (L + 1)
    correction = -(-win.M // (L + 1)) * coef
    raw = one_minus_exp(exponent) - correction
    bound, clipped = _clip(raw)
    res.update(alpha_correction=correction, unclipped=raw)
    return BoundReport(bound, "window-alpha", exponent, L, res, clipped)


# ---------------------------------------------------------------------------
# second order
# ---------------------------------------------------------------------------


def local_overlap(band: IntersectionBand, L: int, weighted: bool = False) -> float:
    """Sum of ``P(A_i & A_j)`` over pairs with ``0 < j-i <= L-1``.

    With ``weighted=True`` a pair at gap ``d`` counts with weight ``(L-d)/L``.
    """
    L = _need_spacing(L, 2)
    max_gap = min(L - 1, band.N - 1)
    if band.bandwidth < max_gap:
        raise InsufficientBandError(
            f"insufficient-band: bandwidth {band.bandwidth} < L-1 = {L - 1}"
        )
    band.require(max_gap)
    if max_gap <= 0:
        return 0.0
    sums = band.gap_sums(max_gap)
    if not weighted:
        return math.fsum(sums)
    gaps = np.arange(1, max_gap + 1)
    return math.fsum(sums * (L - gaps) / L)


def second_order_bound(p: MarginalSequence, band: IntersectionBand, profile: MixingProfile,
                       L: int, weighted: bool = False) -> BoundReport:
    """``1 - exp(-(1/2)(S_N - T - kappa phi(L+1))_+)`` with ``kappa = ceil(N/L) + 1``."""
    _need_family(profile, "phi")
    L = _need_spacing(L, 2)
    if band.N != p.N:
        raise BoundsError(f"band has N={band.N} but marginals have N={p.N}")
    T = local_overlap(band, L, weighted)
    phi = profile_at(profile, L + 1)
    kappa = -(-p.N // L) + 1
    exponent = 0.5 * max(p.total - T - kappa * phi, 0.0)
    return BoundReport(
        bound=one_minus_exp(exponent),
        form="second-order-weighted" if weighted else "second-order",
        exponent=exponent,
        L=L,
        residuals={"T": T, "kappa": float(kappa), "phi": phi,
                   "phi_penalty": kappa * phi},
    )


# ---------------------------------------------------------------------------
# second-moment comparator
# ---------------------------------------------------------------------------


def chung_erdos_bound(p: MarginalSequence, band: IntersectionBand) -> BoundReport:
    """``S_N^2 / (sum_i p_i + 2 sum_{i<j} P(A_i & A_j))``."""
    if band.N != p.N:
        raise BoundsError(f"band has N={band.N} but marginals have N={p.N}")
    band.require(p.N - 1)
    S = p.total
    if S == 0:
        return BoundReport(0.0, "chung-erdos", residuals={"S_N": 0.0, "second_moment": 0.0},
                           notes=["all marginals are zero; bound set to 0"])
    second = S + 2.0 * math.fsum(band.entries.values())
    value = S * S / second
    rep = BoundReport(min(value, 1.0), "chung-erdos",
                      residuals={"S_N": S, "second_moment": second})
    if value > 1.0:
        rep.notes.append(f"raw ratio {value!r} > 1: intersections are inconsistent "
                         "with the marginals; capped at 1")
    return rep


# ---------------------------------------------------------------------------
# closed-form envelopes
# ---------------------------------------------------------------------------


def geometric_spacing(C: float, rho: float, p_min: float) -> int:
    """Smallest ``L0 >= 0`` with ``C rho^(L0+1) <= p_min / 2``."""
    target = p_min / 2.0
    # log estimate, then walk to the exact integer with direct comparisons
    L0 = max(0, int(math.floor(math.log(target / C) / math.log(rho))) - 2)
    while L0 > 0 and C * rho ** L0 <= target:
        L0 -= 1
    while C * rho ** (L0 + 1) > target:
        L0 += 1
    return L0


def geom_phi_bound(p: MarginalSequence, C: float, rho: float) -> BoundReport:
    """Bound for geometric phi-mixing with a positive lower mass.

    Uses the smallest ``L0`` with ``C rho^(L0+1) <= p_min/2`` and reports
    ``1 - exp(-S_N / (2(L0+1)))``; the weaker ``p_min N`` form is kept in
    ``residuals["weak_bound"]``.
    """
    if C < 1:
        raise BoundsError(f"C must be >= 1, got {C}")
    if not 0 < rho < 1:
        raise BoundsError(f"rho must lie in (0, 1), got {rho}")
    p_min = p.p_min
    if p_min <= 0:
        raise ZeroLowerMassError("zero-lower-mass: some marginal probability is 0")
    L0 = geometric_spacing(C, rho, p_min)
    exponent = p.total / (2 * (L0 + 1))
    weak = p_min * p.N / (2 * (L0 + 1))
    return BoundReport(
        bound=one_minus_exp(exponent),
        form="geom-phi",
        exponent=exponent,
        L=L0,
        residuals={"p_min": p_min, "phi_envelope": C * rho ** (L0 + 1),
                   "weak_exponent": weak, "weak_bound": one_minus_exp(weak)},
    )


def poly_alpha_bound(S_N: float, N: int, C: float, gamma: float, theta: float | None = None) -> BoundReport:
    """``[1 - exp(-S_N N^-theta / 2) - 2C N^(1 - theta(gamma+1))]_+``.

    ``theta`` defaults to ``2 / (gamma + 2)``.
    """
    if int(N) != N or N < 2:
        raise BoundsError(f"N must be an integer >= 2, got {N!r}")
    if C < 1:
        raise BoundsError(f"C must be >= 1, got {C}")
    if not gamma > 0:
        raise BoundsError(f"gamma must be > 0, got {gamma}")
    if S_N < 0 or S_N > N:
        raise BoundsError(f"S_N must lie in [0, N], got {S_N}")
    if theta is None:
        theta = 2.0 / (gamma + 2.0)
    if not 0 < theta <= 1:
        raise BoundsError(f"theta must lie in (0, 1], got {theta}")
    N = int(N)
    exponent = 0.5 * S_N * N ** (-theta)
    correction = 2.0 * C * N ** (1.0 - theta * (gamma + 1.0))
    raw = one_minus_exp(exponent) - correction
    bound, clipped = _clip(raw)
    return BoundReport(
        bound=bound,
        form="poly-alpha",
        exponent=exponent,
        L=math.ceil(N ** theta) - 1,
        residuals={"theta": theta, "alpha_correction": correction, "unclipped": raw},
        clipped=clipped,
    )


def poly_alpha_bound_from(p: MarginalSequence, C: float, gamma: float, theta=None) -> BoundReport:
    return poly_alpha_bound(p.total, p.N, C, gamma, theta)


# ---------------------------------------------------------------------------
# sharpness of the spacing constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SharpnessQuery:
    """Candidate constant ``c`` for block size ``m + 1``, tested on ``p_grid``."""

    m: int
    c: float
    p_grid: tuple
    q: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise BoundsError("m must be an integer >= 0")
        if not self.c > 0:
            raise BoundsError("c must be > 0")
        if int(self.q) != self.q or self.q < 1:
            raise BoundsError("q must be a positive integer")
        grid = tuple(float(x) for x in self.p_grid)
        if not grid:
            raise BoundsError("p_grid must be non-empty")
        if any(not 0 < x < 1 for x in grid):
            raise BoundsError("every grid probability must lie strictly inside (0, 1)")
        object.__setattr__(self, "p_grid", grid)


@dataclass(frozen=True)
class SharpnessVerdict:
    violated: bool
    witness: float | None = None
    lhs: float | None = None
    rhs: float | None = None

    def __str__(self):
        if not self.violated:
            return "no violation on grid"
        return f"witness p={self.witness!r}: -log(1-p)={self.lhs!r} < {self.rhs!r}"


def sharpness_scan(query: SharpnessQuery) -> SharpnessVerdict:
    """First grid ``p`` with ``-log(1-p) < c (m+1) p``, if any.

    Such a ``p`` means the block family with that marginal beats the
    candidate constant ``c``, so ``c`` is not a valid universal constant.
    """
    slope = query.c * (query.m + 1)
    for p in query.p_grid:
        lhs = -math.log1p(-p)
        rhs = slope * p
        if lhs < rhs:
            return SharpnessVerdict(True, p, lhs, rhs)
    return SharpnessVerdict(False)
