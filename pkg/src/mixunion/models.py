"""Exactly solvable dependent-event models and enumeration oracles.

A :class:`JointTableModel` is the full law of the indicator vector
``(1_{A_1}, ..., 1_{A_N})`` stored as ``2^N`` weights; bit ``k-1`` of a
table index is the indicator of ``A_k``.  Everything exact in this package
(union probabilities, pairwise intersections, restricted mixing
coefficients) is computed by summing over such a table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .core import (
    BoundsError,
    IntersectionBand,
    MarginalSequence,
    MixingProfile,
    band_from_function,
)

MAX_TABLE_N = 20
DEFAULT_MAX_PAST = 4
TABLE_MAGIC = b"BCJT0001"


class PastTooLargeError(BoundsError):
    """The exact coefficient would need too large a subset enumeration."""


def _open_prob(x, name):
    x = float(x)
    if not 0.0 < x < 1.0:
        raise BoundsError(f"{name} must lie strictly inside (0, 1), got {x!r}")
    return x


def _log1mexp_union(log_miss):
    return -math.expm1(log_miss)


# ---------------------------------------------------------------------------
# Joint tables
# ---------------------------------------------------------------------------


class JointTableModel:
    """Explicit law of ``N <= 20`` binary events.

    Parameters
    ----------
    weights : array_like, shape (2**N,)
        Non-negative, summing to one within ``1e-12``.
    """

    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64).reshape(-1)
        size = w.size
        N = size.bit_length() - 1
        if size < 2 or (1 << N) != size:
            raise BoundsError(f"a joint table needs 2^N weights, got {size}")
        if N > MAX_TABLE_N:
            raise BoundsError(f"joint tables are limited to N <= {MAX_TABLE_N}, got {N}")
        if np.isnan(w).any() or (w < 0).any():
            raise BoundsError("joint table weights must be non-negative")
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-12:
            raise BoundsError(f"joint table weights sum to {total!r}, not 1")
        w.flags.writeable = False
        self.N = N
        self.weights = w
        self._idx = np.arange(size, dtype=np.int64)

    def __repr__(self):
        return f"JointTableModel(N={self.N})"

    # -- oracles ----------------------------------------------------------

    def _mask(self, index_set):
        mask = 0
        for k in index_set:
            k = int(k)
            if not 1 <= k <= self.N:
                raise BoundsError(f"index {k} outside 1..{self.N}")
            mask |= 1 << (k - 1)
        return mask

    def union(self, index_set=None) -> float:
        """``P(union of A_k, k in index_set)``; all of ``1..N`` by default."""
        if index_set is None:
            index_set = range(1, self.N + 1)
        mask = self._mask(index_set)
        return math.fsum(self.weights[(self._idx & mask) != 0])

    def nonoccurrence(self, index_set=None) -> float:
        """``P(no A_k occurs, k in index_set)``."""
        if index_set is None:
            index_set = range(1, self.N + 1)
        mask = self._mask(index_set)
        return math.fsum(self.weights[(self._idx & mask) == 0])

    def _moment_matrix(self) -> np.ndarray:
        """``G[i, j] = P(A_{i+1} & A_{j+1})``, diagonal = marginals."""
        N = self.N
        G = np.zeros((N, N))
        shifts = np.arange(N, dtype=np.int64)
        step = 1 << 16
        for lo in range(0, self.weights.size, step):
            idx = self._idx[lo:lo + step]
            bits = ((idx[:, None] >> shifts) & 1).astype(np.float64)
            G += (bits * self.weights[lo:lo + step, None]).T @ bits
        return G

    def marginals(self) -> MarginalSequence:
        G = self._moment_matrix()
        return MarginalSequence(np.clip(np.diag(G), 0.0, 1.0))

    def pairwise_intersections(self) -> IntersectionBand:
        G = np.clip(self._moment_matrix(), 0.0, 1.0)
        return band_from_function(self.N, self.N - 1, lambda i, j: float(G[i - 1, j - 1]))

    def joint_matrix(self, k: int, lag: int) -> np.ndarray:
        """Law of (first ``k`` bits, bits ``k+lag..N``) as a 2-D array."""
        N = self.N
        start = k + lag - 1  # 0-based position of A_{k+lag}
        past = self._idx & ((1 << k) - 1)
        fut = self._idx >> start
        F = 1 << (N - start)
        J = np.bincount(past * F + fut, weights=self.weights, minlength=(1 << k) * F)
        return J.reshape(1 << k, F)

    # -- serialisation ----------------------------------------------------

    def to_json(self) -> dict:
        return {"N": self.N, "weights": [float(x) for x in self.weights]}

    @classmethod
    def from_json(cls, doc) -> "JointTableModel":
        if isinstance(doc, str):
            doc = json.loads(doc)
        table = cls(doc["weights"])
        if "N" in doc and int(doc["N"]) != table.N:
            raise BoundsError(f"declared N={doc['N']} does not match {table.weights.size} weights")
        return table

    def to_bytes(self) -> bytes:
        return TABLE_MAGIC + self.weights.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "JointTableModel":
        if data[:8] != TABLE_MAGIC:
            raise BoundsError("not a joint table file (bad header)")
        body = data[8:]
        if len(body) % 8:
            raise BoundsError("joint table file is truncated")
        return cls(np.frombuffer(body, dtype="<f8"))

    def save(self, path) -> None:
        path = Path(path)
        if path.suffix.lower() == ".json":
            path.write_text(json.dumps(self.to_json()))
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "JointTableModel":
        path = Path(path)
        data = path.read_bytes()
        if data[:8] == TABLE_MAGIC:
            return cls.from_bytes(data)
        return cls.from_json(data.decode())


def joint_table_union(table: JointTableModel, index_set) -> float:
    return table.union(index_set)


def nonoccurrence_probability(table: JointTableModel, index_set) -> float:
    return table.nonoccurrence(index_set)


def pairwise_intersections(table: JointTableModel) -> IntersectionBand:
    return table.pairwise_intersections()


def random_joint_table(N: int, rng: np.random.Generator, concentration: float = 1.0) -> JointTableModel:
    """Table with Dirichlet(concentration, ..., concentration) weights."""
    w = rng.dirichlet(np.full(1 << N, float(concentration)))
    # renormalise with an exact sum so the 1e-12 check is never marginal
    return JointTableModel(w / math.fsum(w))


def product_table(probs) -> JointTableModel:
    """Independent events with the given marginals."""
    probs = np.asarray(probs, dtype=np.float64)
    N = probs.size
    idx = np.arange(1 << N, dtype=np.int64)
    w = np.ones(1 << N)
    for k, pk in enumerate(probs):
        w *= np.where((idx >> k) & 1, pk, 1.0 - pk)
    return JointTableModel(w / math.fsum(w))


# ---------------------------------------------------------------------------
# Exact restricted mixing coefficients
# ---------------------------------------------------------------------------


def _phi_between(J: np.ndarray) -> float:
    # sup over past events of a ratio of sums is attained on a single atom,
    # and for that atom the sup over future events is a total variation
    P = J.sum(axis=1)
    Q = J.sum(axis=0)
    live = P > 0
    if not live.any():
        return 0.0
    diff = J[live] / P[live, None] - Q[None, :]
    pos = np.maximum(diff, 0.0).sum(axis=1)
    neg = np.maximum(-diff, 0.0).sum(axis=1)
    return float(np.maximum(pos, neg).max())


def _alpha_between(J: np.ndarray) -> float:
    P = J.sum(axis=1)
    Q = J.sum(axis=0)
    D = J - np.outer(P, Q)
    if D.shape[0] > D.shape[1]:
        D = D.T
    return float(kernels.alpha_cut(D))


def exact_restricted_coefficient(table: JointTableModel, family: str, lag: int,
                                 max_past: int = DEFAULT_MAX_PAST) -> float:
    """Finite restricted ``phi(lag)`` or ``alpha(lag)`` of the table's events.

    The supremum runs over ``k >= 1`` with ``k + lag <= N`` of the
    coefficient between ``sigma(A_1..A_k)`` and ``sigma(A_{k+lag}..A_N)``;
    with no admissible ``k`` the value is 0.

    ``phi`` needs no subset enumeration.  ``alpha`` enumerates every event
    on the smaller of the two sides; ``max_past`` caps that side at
    ``max_past`` events, i.e. ``2**(2**max_past)`` subsets, and
    :class:`PastTooLargeError` is raised beyond it.
    """
    if family not in ("phi", "alpha"):
        raise BoundsError(f"family must be 'phi' or 'alpha', got {family!r}")
    if int(lag) != lag or lag < 1:
        raise BoundsError(f"lag must be an integer >= 1, got {lag!r}")
    N = table.N
    best = 0.0
    for k in range(1, N - lag + 1):
        if family == "alpha":
            side = min(k, N - k - lag + 1)
            if side > max_past:
                raise PastTooLargeError(
                    f"past-too-large: alpha at lag {lag} needs a {side}-event block "
                    f"(max_past={max_past}); lower N or raise the lag"
                )
        J = table.joint_matrix(k, lag)
        value = _phi_between(J) if family == "phi" else _alpha_between(J)
        best = max(best, value)
    return min(best, 1.0)


def restricted_coefficients(table: JointTableModel, family: str,
                            max_past: int = DEFAULT_MAX_PAST) -> np.ndarray:
    """Exact restricted coefficients at lags ``1..N`` (lag ``N`` is always 0)."""
    return np.array([exact_restricted_coefficient(table, family, n, max_past)
                     for n in range(1, table.N + 1)])


def restricted_profile(table: JointTableModel, family: str,
                       max_past: int = DEFAULT_MAX_PAST) -> MixingProfile:
    vals = restricted_coefficients(table, family, max_past)
    # suffix max removes round-off wiggles without lowering any value
    vals = np.maximum.accumulate(vals[::-1])[::-1]
    return MixingProfile.tabulated(vals, family=family, restriction=table.N)


# ---------------------------------------------------------------------------
# Block family (the sharpness construction)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockFamily:
    """``q`` independent events, each repeated ``m + 1`` times in a row.

    The resulting sequence of ``N = (m+1) q`` events is ``m``-dependent.
    """

    m: int
    p: float
    q: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise BoundsError(f"m must be an integer >= 0, got {self.m!r}")
        if int(self.q) != self.q or self.q < 1:
            raise BoundsError(f"q must be a positive integer, got {self.q!r}")
        object.__setattr__(self, "p", _open_prob(self.p, "p"))

    @property
    def N(self) -> int:
        return (self.m + 1) * self.q

    @property
    def S_N(self) -> float:
        return self.N * self.p

    @property
    def exact_union(self) -> float:
        return _log1mexp_union(self.q * math.log1p(-self.p))

    def marginals(self) -> MarginalSequence:
        return MarginalSequence.constant(self.p, self.N)

    def block_of(self, k: int) -> int:
        return (k - 1) // (self.m + 1)

    def pair_intersection(self, i: int, j: int) -> float:
        return self.p if self.block_of(i) == self.block_of(j) else self.p * self.p

    def band(self, bandwidth=None) -> IntersectionBand:
        W = self.N - 1 if bandwidth is None else bandwidth
        return band_from_function(self.N, W, self.pair_intersection)

    def phi_profile(self, restriction=None) -> MixingProfile:
        return MixingProfile.m_dependent(self.m, "phi", restriction)

    def alpha_profile(self, restriction=None) -> MixingProfile:
        return MixingProfile.m_dependent(self.m, "alpha", restriction)

    def to_joint_table(self) -> JointTableModel:
        if self.N > MAX_TABLE_N:
            raise BoundsError(f"block family has N={self.N} > {MAX_TABLE_N}")
        width = self.m + 1
        full = (1 << width) - 1
        w = np.zeros(1 << self.N)
        for pattern in range(1 << self.q):
            idx = 0
            ones = 0
            for j in range(self.q):
                if pattern >> j & 1:
                    idx |= full << (j * width)
                    ones += 1
            w[idx] = self.p ** ones * (1.0 - self.p) ** (self.q - ones)
        return JointTableModel(w / math.fsum(w))


def block_family_model(m: int, p: float, q: int) -> BlockFamily:
    return BlockFamily(m, p, q)


# ---------------------------------------------------------------------------
# Stationary two-state Markov chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Markov2Model:
    """Stationary chain on {0, 1} with ``P(0->1) = a``, ``P(1->0) = b``.

    Event ``A_k`` is ``{X_k = 1}``.
    """

    a: float
    b: float
    N: int

    def __post_init__(self):
        object.__setattr__(self, "a", _open_prob(self.a, "a"))
        object.__setattr__(self, "b", _open_prob(self.b, "b"))
        if int(self.N) != self.N or self.N < 1:
            raise BoundsError(f"N must be a positive integer, got {self.N!r}")

    @property
    def lam(self) -> float:
        return 1.0 - self.a - self.b

    @property
    def p(self) -> float:
        """Stationary probability of state 1."""
        return self.a / (self.a + self.b)

    @property
    def S_N(self) -> float:
        return self.N * self.p

    @property
    def exact_union(self) -> float:
        log_miss = math.log(self.b / (self.a + self.b)) + (self.N - 1) * math.log1p(-self.a)
        return _log1mexp_union(log_miss)

    def marginals(self) -> MarginalSequence:
        return MarginalSequence.constant(self.p, self.N)

    def pair_intersection(self, d: int) -> float:
        """``P(A_i & A_{i+d})`` at stationarity."""
        if d < 0:
            raise BoundsError("gap d must be >= 0")
        p = self.p
        if d == 0:
            return p
        return p * (p + (1.0 - p) * self.lam ** d)

    def band(self, bandwidth=None) -> IntersectionBand:
        W = self.N - 1 if bandwidth is None else bandwidth
        return band_from_function(self.N, W, lambda i, j: self.pair_intersection(j - i))

    def phi_envelope(self, n: int) -> float:
        return min(1.0, abs(self.lam) ** n)

    def _profile(self, family, restriction):
        rho = abs(self.lam)
        if rho == 0.0:
            return MixingProfile.m_dependent(0, family, restriction)
        return MixingProfile.geometric(1.0, rho, family, restriction)

    def phi_profile(self, restriction=None) -> MixingProfile:
        """Geometric envelope ``|1 - a - b|^n`` for phi."""
        return self._profile("phi", restriction)

    def alpha_profile(self, restriction=None) -> MixingProfile:
        """Same envelope, valid for alpha because alpha <= phi."""
        return self._profile("alpha", restriction)

    def to_joint_table(self) -> JointTableModel:
        N = self.N
        if N > MAX_TABLE_N:
            raise BoundsError(f"Markov table has N={N} > {MAX_TABLE_N}")
        a, b = self.a, self.b
        idx = np.arange(1 << N, dtype=np.int64)
        prev = idx & 1
        w = np.where(prev == 1, a / (a + b), b / (a + b))
        trans = np.array([[1.0 - a, a], [b, 1.0 - b]])
        for k in range(1, N):
            cur = (idx >> k) & 1
            w = w * trans[prev, cur]
            prev = cur
        return JointTableModel(w / math.fsum(w))


def markov2_model(a: float, b: float, N: int) -> Markov2Model:
    return Markov2Model(a, b, N)


def markov_to_joint_table(model: Markov2Model) -> JointTableModel:
    return model.to_joint_table()
