"""Shared domain types: marginals, mixing envelopes, intersection bands.

Also holds the spaced (residue-class) partition of ``1..N`` and the
cumulative-mass helpers used by the windowed bounds.  Indices are 1-based
throughout, matching the way event sequences ``A_1, ..., A_N`` are written.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

FAMILIES = ("phi", "alpha")
PROFILE_KINDS = ("geometric", "polynomial", "m-dependent", "tabulated")

# Slack allowed when checking that a tabulated envelope is non-increasing.
MONOTONE_TOL = 1e-12


class BoundsError(ValueError):
    """Base class for input errors raised by this package."""


class InsufficientMassError(BoundsError):
    """Cumulative marginal mass never reaches the requested threshold."""


class InsufficientBandError(BoundsError):
    """An intersection band is narrower than the gap a bound needs."""


class MissingPairsError(BoundsError):
    """A required pairwise intersection probability is absent."""


class ZeroLowerMassError(BoundsError):
    """A bound needs ``min_k p_k > 0`` but some marginal is zero."""


class FamilyMismatchError(BoundsError):
    """A phi bound was handed an alpha profile, or vice versa."""


def _as_prob(x, name="probability"):
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise BoundsError(f"{name} must lie in [0, 1], got {x!r}")
    return x


# ---------------------------------------------------------------------------
# Marginals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarginalSequence:
    """Event probabilities ``p_1..p_N`` with cached prefix sums.

    Parameters
    ----------
    probs : sequence of float
        Marginal probabilities, each in ``[0, 1]``.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise BoundsError("a marginal sequence needs at least one event")
        if np.isnan(arr).any() or (arr < 0).any() or (arr > 1).any():
            raise BoundsError("every marginal probability must lie in [0, 1]")
        arr.flags.writeable = False
        prefix = np.cumsum(arr)
        prefix.flags.writeable = False
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def constant(cls, p, N):
        return cls(np.full(int(N), float(p)))

    @property
    def N(self) -> int:
        return int(self.probs.size)

    @property
    def prefix(self) -> np.ndarray:
        return self._prefix

    @property
    def total(self) -> float:
        """First-moment mass ``S_N`` (compensated sum)."""
        return math.fsum(self.probs)

    @property
    def p_min(self) -> float:
        return float(self.probs.min())

    @property
    def p_max(self) -> float:
        return float(self.probs.max())

    def __len__(self):
        return self.N

    def __repr__(self):
        return f"MarginalSequence(N={self.N}, S_N={self.total:.6g})"

    def to_json(self) -> dict:
        return {"probs": [float(x) for x in self.probs]}

    @classmethod
    def from_json(cls, doc) -> "MarginalSequence":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, Mapping) or "probs" not in doc:
            raise BoundsError('marginals JSON must look like {"probs": [...]}')
        return cls(doc["probs"])

    @classmethod
    def from_csv(cls, text: str) -> "MarginalSequence":
        values = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line.split(",")[0]))
            except ValueError:
                raise BoundsError(f"line {lineno}: not a number: {line!r}") from None
        return cls(values)

    @classmethod
    def load(cls, path) -> "MarginalSequence":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".json":
            return cls.from_json(text)
        return cls.from_csv(text)


def cumulative_mass(p: MarginalSequence):
    """Return ``(prefix_sums, S_N)``."""
    return p.prefix.copy(), p.total


def mass_threshold(p: MarginalSequence, n: int) -> int:
    """Smallest ``M >= 1`` with ``p_1 + ... + p_M >= n``."""
    if n < 1:
        raise BoundsError(f"mass threshold n must be >= 1, got {n}")
    # prefix sums are non-decreasing, so a left bisection finds the first hit
    idx = int(np.searchsorted(p.prefix, n, side="left"))
    if idx >= p.N:
        raise InsufficientMassError(
            f"insufficient-mass: S_N = {p.total:.6g} < {n}"
        )
    return idx + 1


# ---------------------------------------------------------------------------
# Spaced partition
# ---------------------------------------------------------------------------


def spaced_partition(N: int, L: int, r: int) -> list[int]:
    """Indices ``k`` in ``1..N`` with ``k = r (mod L+1)``, increasing."""
    if N < 1:
        raise BoundsError(f"N must be >= 1, got {N}")
    if L < 0:
        raise BoundsError(f"spacing L must be >= 0, got {L}")
    if not 1 <= r <= L + 1:
        raise BoundsError(f"class index r must lie in 1..{L + 1}, got {r}")
    return list(range(r, N + 1, L + 1))


def spaced_classes(N: int, L: int) -> list[list[int]]:
    return [spaced_partition(N, L, r) for r in range(1, L + 2)]


# ---------------------------------------------------------------------------
# Mixing envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixingProfile:
    """Lag-indexed upper envelope for ``phi(n)`` or ``alpha(n)``.

    Use the ``geometric``, ``polynomial``, ``m_dependent`` and ``tabulated``
    constructors rather than filling fields by hand.  ``values[i]`` of a
    tabulated profile is the envelope at lag ``i + 1``; lags past the end
    of the table reuse the last entry.

    When ``restriction`` is an integer ``N``, the envelope describes the
    finite restricted coefficient of ``A_1..A_N`` and is zero at every lag
    ``>= N``.
    """

    kind: str
    family: str = "phi"
    C: float | None = None
    rho: float | None = None
    gamma: float | None = None
    m: int | None = None
    values: tuple = ()
    restriction: int | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise BoundsError(f"unknown profile kind {self.kind!r}")
        if self.family not in FAMILIES:
            raise BoundsError(f"family must be 'phi' or 'alpha', got {self.family!r}")
        if self.restriction is not None and int(self.restriction) < 1:
            raise BoundsError("restriction length must be a positive integer")
        if self.kind == "geometric":
            if self.C is None or self.C < 1:
                raise BoundsError("geometric profile needs C >= 1")
            if self.rho is None or not 0 < self.rho < 1:
                raise BoundsError("geometric profile needs rho in (0, 1)")
        elif self.kind == "polynomial":
            if self.C is None or self.C < 1:
                raise BoundsError("polynomial profile needs C >= 1")
            if self.gamma is None or not self.gamma > 0:
                raise BoundsError("polynomial profile needs gamma > 0")
        elif self.kind == "m-dependent":
            if self.m is None or int(self.m) != self.m or self.m < 0:
                raise BoundsError("m-dependent profile needs an integer m >= 0")
        else:
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise BoundsError("tabulated profile needs at least one value")
            if any(math.isnan(v) or v < 0 for v in vals):
                raise BoundsError("tabulated profile values must be non-negative")
            for lag, (a, b) in enumerate(zip(vals, vals[1:]), 1):
                if b > a + MONOTONE_TOL:
                    raise BoundsError(
                        f"tabulated profile must be non-increasing; "
                        f"lag {lag + 1} value {b!r} exceeds lag {lag} value {a!r}"
                    )
            object.__setattr__(self, "values", vals)

    @classmethod
    def geometric(cls, C, rho, family="phi", restriction=None):
        return cls("geometric", family, C=float(C), rho=float(rho), restriction=restriction)

    @classmethod
    def polynomial(cls, C, gamma, family="alpha", restriction=None):
        return cls("polynomial", family, C=float(C), gamma=float(gamma), restriction=restriction)

    @classmethod
    def m_dependent(cls, m, family="phi", restriction=None):
        return cls("m-dependent", family, m=int(m), restriction=restriction)

    @classmethod
    def tabulated(cls, values, family="phi", restriction=None):
        return cls("tabulated", family, values=tuple(values), restriction=restriction)

    def at(self, lag: int) -> float:
        return profile_at(self, lag)

    def with_restriction(self, N):
        return MixingProfile(
            self.kind, self.family, self.C, self.rho, self.gamma, self.m,
            self.values, N,
        )

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "family": self.family}
        if self.kind == "geometric":
            doc.update(C=self.C, rho=self.rho)
        elif self.kind == "polynomial":
            doc.update(C=self.C, gamma=self.gamma)
        elif self.kind == "m-dependent":
            doc.update(m=self.m)
        else:
            doc.update(values=list(self.values))
        doc["restriction"] = self.restriction
        return doc

    @classmethod
    def from_json(cls, doc) -> "MixingProfile":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, Mapping):
            raise BoundsError("profile JSON must be an object")
        kind = doc.get("kind")
        family = doc.get("family", "phi")
        restriction = doc.get("restriction")
        try:
            if kind == "geometric":
                return cls.geometric(doc["C"], doc["rho"], family, restriction)
            if kind == "polynomial":
                return cls.polynomial(doc["C"], doc["gamma"], family, restriction)
            if kind == "m-dependent":
                return cls.m_dependent(doc["m"], family, restriction)
            if kind == "tabulated":
                return cls.tabulated(doc["values"], family, restriction)
        except KeyError as exc:
            raise BoundsError(f"profile of kind {kind!r} is missing field {exc}") from None
        raise BoundsError(f"unknown profile kind {kind!r}")

    @classmethod
    def load(cls, path) -> "MixingProfile":
        return cls.from_json(Path(path).read_text())


def profile_at(profile: MixingProfile, lag: int) -> float:
    """Envelope value at ``lag >= 1``, clamped to ``[0, 1]``."""
    if int(lag) != lag or lag < 1:
        raise BoundsError(f"lag must be an integer >= 1, got {lag!r}")
    lag = int(lag)
    if profile.restriction is not None and lag >= profile.restriction:
        return 0.0
    kind = profile.kind
    if kind == "geometric":
        # rho**lag underflows to 0.0 gracefully for huge lags
        value = profile.C * profile.rho ** lag
    elif kind == "polynomial":
        value = profile.C * lag ** (-profile.gamma)
    elif kind == "m-dependent":
        value = 0.0 if lag > profile.m else 1.0
    else:
        vals = profile.values
        value = vals[lag - 1] if lag <= len(vals) else vals[-1]
    return min(1.0, max(0.0, value))


def profile_values(profile: MixingProfile, max_lag: int) -> np.ndarray:
    """Vector of ``profile_at`` for lags ``1..max_lag``."""
    return np.array([profile_at(profile, n) for n in range(1, max_lag + 1)])


# ---------------------------------------------------------------------------
# Pairwise intersections
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IntersectionBand:
    """Pairwise intersection probabilities ``P(A_i & A_j)`` for ``0 < j-i <= W``.

    Entries are keyed by 1-based ordered pairs ``(i, j)`` with ``i < j``.
    A band does not have to be complete; consumers that need every pair up
    to some gap call :meth:`require` and get :class:`MissingPairsError`
    when something is absent, never an implicit zero.
    """

    N: int
    bandwidth: int
    entries: Mapping = field(default_factory=dict)

    def __post_init__(self):
        N, W = int(self.N), int(self.bandwidth)
        if N < 1:
            raise BoundsError("band needs N >= 1")
        if W < 0:
            raise BoundsError("band needs bandwidth W >= 0")
        clean = {}
        for key, v in dict(self.entries).items():
            i, j = (int(x) for x in key)
            if not 1 <= i < j <= N:
                raise BoundsError(f"band pair {(i, j)} is not an ordered pair inside 1..{N}")
            if j - i > W:
                raise BoundsError(f"band pair {(i, j)} has gap {j - i} > bandwidth {W}")
            clean[(i, j)] = _as_prob(v, f"P(A_{i} & A_{j})")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "bandwidth", W)
        object.__setattr__(self, "entries", clean)

    def __repr__(self):
        return f"IntersectionBand(N={self.N}, W={self.bandwidth}, pairs={len(self.entries)})"

    def pairs_up_to(self, max_gap):
        return [(i, i + d) for d in range(1, max_gap + 1) for i in range(1, self.N - d + 1)]

    def require(self, max_gap: int) -> None:
        """Raise unless every pair with gap ``<= max_gap`` is present."""
        if max_gap <= 0:
            return
        if self.bandwidth < min(max_gap, self.N - 1):
            raise InsufficientBandError(
                f"insufficient-band: bandwidth {self.bandwidth} < required gap {max_gap}"
            )
        for pair in self.pairs_up_to(min(max_gap, self.N - 1)):
            if pair not in self.entries:
                raise MissingPairsError(f"missing-pairs: no entry for pair {pair}")

    def check_against(self, p: MarginalSequence, tol=1e-12) -> None:
        """Check ``P(A_i & A_j) <= min(p_i, p_j)`` for every stored pair."""
        if p.N != self.N:
            raise BoundsError(f"band has N={self.N} but marginals have N={p.N}")
        probs = p.probs
        for (i, j), v in self.entries.items():
            if v > min(probs[i - 1], probs[j - 1]) + tol:
                raise BoundsError(
                    f"P(A_{i} & A_{j}) = {v!r} exceeds min(p_{i}, p_{j})"
                )

    def gap_sums(self, max_gap: int) -> np.ndarray:
        """``out[d-1]`` = sum of stored entries at gap ``d``, for ``d <= max_gap``."""
        out = [[] for _ in range(max_gap)]
        for (i, j), v in self.entries.items():
            d = j - i
            if d <= max_gap:
                out[d - 1].append(v)
        return np.array([math.fsum(vs) for vs in out])

    def to_json(self) -> dict:
        rows = [[i, j, v] for (i, j), v in sorted(self.entries.items())]
        return {"band": {"N": self.N, "W": self.bandwidth, "entries": rows}}

    @classmethod
    def from_json(cls, doc, N=None) -> "IntersectionBand":
        if isinstance(doc, str):
            doc = json.loads(doc)
        body = doc.get("band", doc) if isinstance(doc, Mapping) else None
        if not isinstance(body, Mapping) or "entries" not in body:
            raise BoundsError('band JSON must look like {"band": {"W": .., "entries": [[i, j, v], ...]}}')
        rows = body["entries"]
        entries = {(int(i), int(j)): float(v) for i, j, v in rows}
        return cls._infer(entries, body.get("N", N), body.get("W"))

    @classmethod
    def from_csv(cls, text: str, N=None, bandwidth=None) -> "IntersectionBand":
        entries = {}
        reader = csv.reader(line for line in text.splitlines()
                            if line.strip() and not line.lstrip().startswith("#"))
        for row in reader:
            if len(row) != 3:
                raise BoundsError(f"band CSV rows must be 'i,j,value', got {row!r}")
            entries[(int(row[0]), int(row[1]))] = float(row[2])
        return cls._infer(entries, N, bandwidth)

    @classmethod
    def _infer(cls, entries, N, W):
        if N is None:
            N = max((j for _, j in entries), default=1)
        if W is None:
            W = max((j - i for i, j in entries), default=1)
        return cls(int(N), max(1, int(W)), entries)

    @classmethod
    def load(cls, path, N=None) -> "IntersectionBand":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".json":
            return cls.from_json(text, N=N)
        return cls.from_csv(text, N=N)


def band_from_function(N: int, bandwidth: int, pair_prob) -> IntersectionBand:
    """Build a complete band from ``pair_prob(i, j)``."""
    W = max(1, min(int(bandwidth), max(N - 1, 1)))
    entries = {(i, j): pair_prob(i, j)
               for d in range(1, W + 1) for i in range(1, N - d + 1)
               for j in (i + d,)}
    return IntersectionBand(N, W, entries)


# ---------------------------------------------------------------------------
# Windows and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    """Window ``i+1 .. Phi(i+n)`` of length ``M = Phi(i+n) - i``."""

    i: int
    n: int
    Phi_of_n: int
    M: int

    @property
    def indices(self) -> range:
        return range(self.i + 1, self.Phi_of_n + 1)


def window_spec(p: MarginalSequence, i: int, n: int, phi_override=None) -> WindowSpec:
    """Locate the window that carries at least ``n`` units of mass after ``i``.

    ``phi_override`` may be a callable or a mapping giving a user-chosen
    ``Phi``; it must still satisfy the cumulative-mass requirement.
    """
    if i < 0:
        raise BoundsError(f"window shift i must be >= 0, got {i}")
    if n < 1:
        raise BoundsError(f"window mass n must be >= 1, got {n}")
    if phi_override is None:
        end = mass_threshold(p, i + n)
    else:
        end = int(phi_override(i + n) if callable(phi_override) else phi_override[i + n])
        if not 1 <= end <= p.N:
            raise BoundsError(f"override Phi({i + n}) = {end} is outside 1..{p.N}")
        if p.prefix[end - 1] < i + n:
            raise InsufficientMassError(
                f"insufficient-mass: override Phi({i + n}) = {end} carries only "
                f"{p.prefix[end - 1]:.6g} < {i + n}"
            )
    return WindowSpec(i=i, n=n, Phi_of_n=end, M=end - i)


@dataclass
class BoundReport:
    """A lower bound on a union probability plus how it was obtained.

    ``exponent`` is the quantity inside ``exp(-.)`` when the bound has that
    shape; keeping it lets callers distinguish ``1 - e^{-50}`` from ``1``.
    ``residuals`` holds named real-valued correction terms and inputs
    (mixing value used, additive correction, ``kappa``...).
    """

    bound: float
    form: str
    exponent: float | None = None
    L: int | None = None
    residuals: dict = field(default_factory=dict)
    clipped: bool = False
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.bound <= 1.0 or math.isnan(self.bound):
            raise AssertionError(f"bound {self.bound!r} escaped [0, 1]")

    @property
    def log_miss(self) -> float | None:
        """``log(1 - bound)`` when the bound is in pure exponential form."""
        return None if self.exponent is None else -self.exponent

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "exponent": self.exponent,
            "L": self.L,
            "residuals": {k: self.residuals[k] for k in sorted(self.residuals)},
            "clipped": self.clipped,
            "form": self.form,
            "notes": list(self.notes),
        }


def one_minus_exp(exponent: float) -> float:
    """``1 - exp(-x)`` without cancellation for small ``x``."""
    return -math.expm1(-exponent)
