"""Acceptance gate: one PASS/FAIL line per primary criterion.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the
"acceptance criteria" summary section) or ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from mixunion.bounds import (
    SharpnessQuery,
    phi_bound,
    second_order_bound,
    sharpness_scan,
)
from mixunion.cli import table_cells
from mixunion.core import MarginalSequence, MixingProfile, spaced_classes
from mixunion.models import (
    BlockFamily,
    Markov2Model,
    PastTooLargeError,
    exact_restricted_coefficient,
    random_joint_table,
    restricted_coefficients,
)
from mixunion.montecarlo import McConfig, estimate_union
from mixunion.validation import run_validity_suite

GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
MC_TARGET = 0.9999915


def report(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_table_reproduction():
    t0 = time.perf_counter()
    r1 = table_cells(0.20, 0.30, 50)
    r2 = table_cells(0.05, 0.15, 100)
    elapsed = time.perf_counter() - t0
    checks = [
        abs(round(r1["exact"], 5) - 0.99999) <= 5e-6,
        abs(r1["exact"] - (1 - 0.6 * 0.8 ** 49)) <= 1e-15,
        r1["L0"] == 2,
        abs(r1["prop"] - 0.964) <= 5e-4,
        r1["L_opt"] == 2 and abs(r1["B_opt"] - 0.990) <= 5e-4,
        abs(r2["exact"] - 0.995) <= 5e-4,
        r2["L0"] == 9,
        abs(r2["prop"] - 0.713) <= 5e-4,
        r2["L_opt"] == 11 and abs(r2["B_opt"] - 0.779) <= 5e-4,
        elapsed < 1.0,
    ]
    report("table reproduction", all(checks),
           f"row1 exact={r1['exact']:.7f} L0={r1['L0']} prop={r1['prop']:.4f} "
           f"opt=({r1['L_opt']}, {r1['B_opt']:.4f}); row2 exact={r2['exact']:.4f} "
           f"L0={r2['L0']} prop={r2['prop']:.4f} opt=({r2['L_opt']}, {r2['B_opt']:.4f}); "
           f"{elapsed * 1e3:.1f} ms")


def test_validity_suite():
    t0 = time.perf_counter()
    res = run_validity_suite(models=200, N_max=8, seed=42)
    elapsed = time.perf_counter() - t0
    report("validity suite", res.ok and elapsed < 60,
           f"{res.checks} checks on {res.models} tables, {len(res.violations)} violations, "
           f"tightest gap {res.tightest_gap:.3e}, alpha-from-phi tables "
           f"{res.alpha_from_phi_tables}, {elapsed:.2f} s")


def test_m_dependent_reduction():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        N = int(rng.integers(1, 60))
        p = MarginalSequence(rng.uniform(0, 1, N))
        for m in range(5):
            prof = MixingProfile.tabulated([1.0] * m + [0.0], "phi")
            rep = phi_bound(p, prof, m)
            worst = max(worst, abs(rep.exponent - p.total / (m + 1)))
    report("m-dependent reduction", worst <= 1e-14, f"max |exponent - S_N/(m+1)| = {worst:.2e}")


def test_sharpness():
    grid = tuple(np.logspace(-4, math.log10(0.5), 33))
    ok = True
    witnesses = []
    for m in range(4):
        c = 1 / (m + 1)
        ok &= not sharpness_scan(SharpnessQuery(m, c, grid)).violated
        v = sharpness_scan(SharpnessQuery(m, c + 0.01, grid))
        ok &= v.violated
        witnesses.append(v.witness)
    fam = BlockFamily(2, 1e-4, 10_000)
    gap = abs(fam.exact_union - (1 - math.exp(-fam.S_N / 3)))
    ok &= gap <= 1e-3
    report("sharpness", ok,
           f"c=1/(m+1) clean for m=0..3, witnesses at c+0.01: "
           f"{', '.join(f'{w:.1e}' for w in witnesses)}; block-family gap {gap:.2e}")


def test_coefficient_hierarchy_and_envelope():
    rng = np.random.default_rng(5)
    compared = skipped = 0
    worst = -math.inf
    for _ in range(50):
        N = int(rng.integers(2, 9))
        table = random_joint_table(N, rng)
        for n in range(1, N + 1):
            try:
                a = exact_restricted_coefficient(table, "alpha", n, max_past=3)
            except PastTooLargeError:
                skipped += 1
                continue
            f = exact_restricted_coefficient(table, "phi", n)
            worst = max(worst, a - f)
            compared += 1
    env_worst = -math.inf
    for a in GRID:
        for b in GRID:
            table = Markov2Model(a, b, 6).to_joint_table()
            lam = abs(1 - a - b)
            for n in (1, 2, 3):
                env_worst = max(env_worst,
                                exact_restricted_coefficient(table, "phi", n) - lam ** n)
    ok = worst <= 1e-12 and env_worst <= 1e-12
    report("coefficient hierarchy", ok,
           f"max alpha-phi = {worst:.2e} over {compared} lags ({skipped} lags beyond "
           f"max_past=3); max phi(n)-|1-a-b|^n = {env_worst:.2e} on 5x5 grid")


def test_class_product_and_exponential():
    worst = -math.inf
    classes = 0
    for a in GRID:
        for b in GRID:
            table = Markov2Model(a, b, 10).to_joint_table()
            p = table.marginals().probs
            phis = restricted_coefficients(table, "phi")
            for L in range(10):
                phi_star = phis[L]
                for cls in spaced_classes(10, L):
                    lhs = table.nonoccurrence(cls)
                    rhs = math.prod(min(1.0, 1.0 - p[k - 1] + phi_star) for k in cls)
                    worst = max(worst, lhs - rhs)
                    classes += 1
    rng = np.random.default_rng(99)
    prod_worst = -math.inf
    for _ in range(10_000):
        x = rng.uniform(0, 1, int(rng.integers(1, 50)))
        prod_worst = max(prod_worst, float(np.prod(1 - x)) - math.exp(-x.sum()))
    ok = worst <= 1e-12 and prod_worst <= 0.0
    report("class product and exponential inequalities", ok,
           f"class-product slack max {worst:.2e} over {classes} classes; "
           f"product-exp slack max {prod_worst:.2e} over 10^4 vectors")


def test_monte_carlo():
    model = Markov2Model(0.2, 0.3, 50)
    runs = [estimate_union(model, McConfig(1_000_000, 20240917, w)) for w in (1, 2, 8)]
    est = runs[0]
    identical = all(r == est for r in runs)
    dist = abs(est.estimate - MC_TARGET) / est.stderr
    closed = abs(est.estimate - model.exact_union) / est.stderr
    report("monte carlo", identical and dist <= 3,
           f"estimate {est.estimate:.7f} (se {est.stderr:.2e}), {dist:.2f} se from "
           f"{MC_TARGET}, {closed:.2f} se from closed form {model.exact_union:.7f}; "
           f"workers 1/2/8 identical={identical}")


def test_second_order_comparison():
    model = Markov2Model(0.2, 0.3, 10)
    exact = model.to_joint_table().union()
    p, band = model.marginals(), model.band()
    rep = second_order_bound(p, band, model.phi_profile(), 3)
    valid = rep.bound <= exact + 1e-12
    zero = MixingProfile.m_dependent(0)
    agree = []
    for L in range(2, 10):
        so = second_order_bound(p, band, zero, L)
        fo = phi_bound(p, zero, L)
        predicted = so.residuals["T"] < (L - 1) / (L + 1) * p.total
        agree.append(predicted == (so.exponent > fo.exponent))
    so3 = second_order_bound(p, band, zero, 3)
    report("second-order comparison", valid and all(agree),
           f"bound(L=3)={rep.bound:.4f} <= exact {exact:.4f}; with phi=0 the criterion "
           f"T<(L-1)S/(L+1) predicts the sign at L=2..9 ({sum(agree)}/{len(agree)}); "
           f"L=3: T={so3.residuals['T']:.3f} vs {(2 / 4) * p.total:.3f}")


if __name__ == "__main__":
    failures = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    raise SystemExit(1 if failures else 0)
