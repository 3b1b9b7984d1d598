"""Check every implemented bound against exact unions on random joint tables.

Each table supplies its own exact restricted phi/alpha coefficients, exact
marginals and exact pairwise intersections; a bound is violated when it
exceeds the exact probability of the union it claims to bound by more
than ``TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds as B
from .core import InsufficientMassError, MixingProfile, mass_threshold
from .models import (
    JointTableModel,
    PastTooLargeError,
    random_joint_table,
    restricted_coefficients,
)

TOL = 1e-12
GEOM_RHO = 0.5
POLY_GAMMA = 1.0
POLY_THETAS = (None, 0.5, 1.0)


@dataclass
class Violation:
    table_index: int
    bound: str
    L: int | None
    value: float
    reference: float
    detail: str = ""


@dataclass
class TableCheck:
    checks: int = 0
    tightest_gap: float = math.inf
    tightest: str = ""
    violations: list = field(default_factory=list)
    alpha_from_phi: bool = False


def _profiles(table: JointTableModel, max_past: int):
    phi = restricted_coefficients(table, "phi")
    alpha_from_phi = False
    try:
        alpha = restricted_coefficients(table, "alpha", max_past)
    except PastTooLargeError:
        # alpha <= phi, so phi is a valid (looser) alpha envelope
        alpha, alpha_from_phi = phi.copy(), True
    # suffix max: monotone without lowering any exact value
    phi = np.maximum.accumulate(phi[::-1])[::-1]
    alpha = np.maximum.accumulate(alpha[::-1])[::-1]
    N = table.N
    return (
        phi,
        alpha,
        MixingProfile.tabulated(phi, "phi", restriction=N),
        MixingProfile.tabulated(alpha, "alpha", restriction=N),
        alpha_from_phi,
    )


def check_table(table: JointTableModel, index: int = 0, perturb: float = 0.0,
                max_past: int = 4) -> TableCheck:
    """Run every bound at every admissible spacing on one table."""
    out = TableCheck()
    N = table.N
    union = table.union()
    marg = table.marginals()
    band = table.pairwise_intersections()
    phi, alpha, phi_prof, alpha_prof, out.alpha_from_phi = _profiles(table, max_past)

    def record(name, rep, reference, L=None):
        value = rep.bound + perturb
        gap = reference - value
        out.checks += 1
        if gap < out.tightest_gap:
            out.tightest_gap = gap
            out.tightest = name if L is None else f"{name}@L={L}"
        if value > reference + TOL:
            out.violations.append(Violation(index, name, L, value, reference, rep.form))

    for L in range(N):
        record("phi", B.phi_bound(marg, phi_prof, L), union, L)
        record("alpha", B.alpha_bound(marg, alpha_prof, L), union, L)
        if marg.p_min > 0:
            record("alpha-lower-mass", B.alpha_lower_mass_bound(marg, alpha_prof, L), union, L)
        if L >= 2:
            record("second-order", B.second_order_bound(marg, band, phi_prof, L), union, L)
            record("second-order-weighted",
                   B.second_order_bound(marg, band, phi_prof, L, weighted=True), union, L)
    record("phi-opt", B.phi_optimize(marg, phi_prof), union)
    record("chung-erdos", B.chung_erdos_bound(marg, band), union)

    if marg.p_min > 0:
        lags = np.arange(1, N + 1)
        C = max(1.0, float(np.max(phi / GEOM_RHO ** lags)))
        record("geom-phi", B.geom_phi_bound(marg, C, GEOM_RHO), union)
    if N >= 2:
        lags = np.arange(1, N + 1)
        C = max(1.0, float(np.max(alpha * lags ** POLY_GAMMA)))
        for theta in POLY_THETAS:
            rep = B.poly_alpha_bound(marg.total, N, C, POLY_GAMMA, theta)
            record("poly-alpha", rep, union)

    for i in range(N):
        for n in range(1, N + 1):
            try:
                mass_threshold(marg, i + n)
            except InsufficientMassError:
                break
            for L in range(N):
                rep_phi = B.window_bound(marg, phi_prof, i, n, L)
                idx = range(i + 1, int(rep_phi.residuals["Phi"]) + 1)
                win_union = table.union(idx)
                record(f"window-phi(i={i},n={n})", rep_phi, win_union, L)
                rep_alpha = B.window_bound(marg, alpha_prof, i, n, L)
                record(f"window-alpha(i={i},n={n})", rep_alpha, win_union, L)
    return out


@dataclass
class ValidityReport:
    models: int
    N_max: int
    seed: int
    checks: int
    passed: int
    violations: list
    tightest_gap: float
    tightest: str
    alpha_from_phi_tables: int
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "models": self.models,
            "N_max": self.N_max,
            "seed": self.seed,
            "checks": self.checks,
            "passed": self.passed,
            "failed": len(self.violations),
            "tightest_gap": self.tightest_gap,
            "tightest": self.tightest,
            "alpha_from_phi_tables": self.alpha_from_phi_tables,
            "violations": [vars(v) for v in self.violations[:20]],
            "counterexample": self.counterexample,
        }


def run_validity_suite(models: int = 200, N_max: int = 8, seed: int = 42,
                       perturb: float = 0.0, concentration: float = 1.0,
                       max_past: int = 4) -> ValidityReport:
    """Generate ``models`` Dirichlet tables with ``2 <= N <= N_max`` and check them."""
    if not 2 <= N_max <= 10:
        raise ValueError(f"N_max must lie in 2..10, got {N_max}")
    rng = np.random.default_rng(seed)
    checks = 0
    violations = []
    tightest_gap, tightest = math.inf, ""
    from_phi = 0
    counterexample = None
    for t in range(models):
        N = int(rng.integers(2, N_max + 1))
        table = random_joint_table(N, rng, concentration)
        res = check_table(table, t, perturb, max_past)
        checks += res.checks
        from_phi += res.alpha_from_phi
        if res.tightest_gap < tightest_gap:
            tightest_gap, tightest = res.tightest_gap, f"table {t}: {res.tightest}"
        if res.violations and counterexample is None:
            counterexample = {"table_index": t, **table.to_json()}
        violations.extend(res.violations)
    return ValidityReport(models, N_max, seed, checks, checks - len(violations),
                          violations, tightest_gap, tightest, from_phi, counterexample)
