"""Acceptance suite.

One check per criterion (split into lettered sub-clauses where a
criterion makes several independent claims), each printing a single
PASS/FAIL line with the measured quantity before asserting. Run with
`pytest tests/test_acceptance.py -v -s` to see the lines as they
complete; the heavy Monte Carlo checks take a couple of minutes.
"""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from adaptdose import cli
from adaptdose.alpha_exact import TrialGeometry, overall_type1, solve_alpha_e
from adaptdose.combination import (
    adjust_p1,
    alpha_level_sweep,
    combination_p,
    invert_p1,
)
from adaptdose.correlation import (
    PatientRecord,
    SubgroupEffect,
    bootstrap_corr,
    load_subgroup_table,
    modified_pearson,
)
from adaptdose.montecarlo import (
    simulate_type1_abstract,
    simulate_type1_full,
    simulate_w,
)
from adaptdose.numerics import Corr3, bvn_cdf, tvn_cdf
from adaptdose.selection import (
    CorrelationSet,
    DesignParams,
    SelectionRule,
    winner_prob,
    winner_prob_sweep,
)

PARAMS = DesignParams(M=40, Rx=0.2, Rs=0.2)
GEOM = TrialGeometry(s=0.2, r=1.0, alpha=0.025)
REFERENCE_RULE = SelectionRule(scenario=1, Cx=0.1, Cs=0.05)
REFERENCE_CORR = CorrelationSet(rho_xy=0.3, rho_xs=0.5, rho_ys=-0.3)
W_GRID = [round(0.5 + 0.05 * i, 10) for i in range(11)]

EV302_FILE = Path(__file__).resolve().parents[1] / "data" / "ev302_subgroups.csv"


def check(label: str, ok: bool, detail: str) -> None:
    print(f"criterion {label}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {label}: {detail}"


def test_criterion_1_orthant_identities():
    t0 = time.perf_counter()
    bvn_err = max(
        abs(bvn_cdf(0.0, 0.0, float(rho)) - (0.25 + math.asin(rho) / (2 * math.pi)))
        for rho in np.round(np.arange(-0.9, 0.901, 0.1), 10))
    tvn_err = 0.0
    n_psd = 0
    for a, b, c in itertools.product((-0.5, 0.0, 0.5), repeat=3):
        det = 1 + 2 * a * b * c - a * a - b * b - c * c
        if det < 0:
            continue
        n_psd += 1
        want = 0.125 + (math.asin(a) + math.asin(b) + math.asin(c)) / (4 * math.pi)
        tvn_err = max(tvn_err, abs(tvn_cdf(0, 0, 0, Corr3(a, b, c)) - want))
    elapsed = time.perf_counter() - t0
    check("1", bvn_err <= 1e-9 and tvn_err <= 1e-7 and elapsed < 1.0,
          f"bvn orthant err {bvn_err:.2e} (<=1e-9), tvn orthant err {tvn_err:.2e} "
          f"(<=1e-7) over {n_psd} PSD triples, runtime {elapsed:.2f}s (<1s)")


def test_criterion_2_winner_prob_vs_oracle_full_grid():
    rows = winner_prob_sweep()
    assert len(rows) == 66
    worst_z = 0.0
    worst_point = None
    for i, p in enumerate(rows):
        rule = SelectionRule(scenario=p.scenario, Cx=p.Cx, Cs=0.05)
        corr = CorrelationSet(rho_xy=0.3, rho_xs=0.5, rho_ys=p.rho_ys)
        est = simulate_w(params=PARAMS, rule=rule, corr=corr, mode="difference",
                         n=10**7, seed=20250809 + i)
        z = abs(p.w - est.value) / est.std_error
        if z > worst_z:
            worst_z, worst_point = z, (p.scenario, p.rho_ys, p.Cx)
    check("2", worst_z <= 3.0,
          f"closed form vs 1e7-replicate oracle over 66 grid points, "
          f"worst |z| = {worst_z:.2f} at {worst_point} (<=3)")


@pytest.fixture(scope="module")
def default_sweep():
    return winner_prob_sweep()


def test_criterion_3a_full_grid_range(default_sweep):
    lo = min(p.w for p in default_sweep)
    hi = max(p.w for p in default_sweep)
    check("3a", 0.45 <= lo and hi <= 0.70,
          f"all 66 sweep values in [{lo:.4f}, {hi:.4f}] (required within [0.45, 0.70])")


def test_criterion_3b_interior_range(default_sweep):
    cx_values = sorted({p.Cx for p in default_sweep})
    interior = [p for p in default_sweep if p.Cx not in (cx_values[0], cx_values[-1])]
    lo = min(p.w for p in interior)
    hi = max(p.w for p in interior)
    hi_point = max(interior, key=lambda p: p.w)
    check("3b", 0.50 <= lo and hi <= 0.65,
          f"interior-Cx values span [{lo:.6f}, {hi:.6f}] (required within "
          f"[0.50, 0.65]); max at scenario {hi_point.scenario}, "
          f"rho_ys={hi_point.rho_ys}, Cx={hi_point.Cx}")


def test_criterion_3c_scenario1_monotone(default_sweep):
    ordered = {}
    for p in default_sweep:
        if p.scenario == 1:
            ordered.setdefault(p.Cx, {})[p.rho_ys] = p.w
    ok = all(v[-0.1] <= v[-0.3] <= v[-0.5] for v in ordered.values())
    check("3c", ok, "scenario-1 w nondecreasing in |rho_ys| at every fixed Cx")


def test_criterion_3d_scenario2_near_half(default_sweep):
    tail = [p for p in default_sweep if p.scenario == 2 and p.Cx > 0.10]
    dev = max(abs(p.w - 0.5) for p in tail)
    dev_point = max(tail, key=lambda p: abs(p.w - 0.5))
    check("3d", dev <= 0.02,
          f"scenario-2 max |w - 0.5| for Cx > 0.10 is {dev:.6f} (required <=0.02); "
          f"at rho_ys={dev_point.rho_ys}, Cx={dev_point.Cx}")


def test_criterion_4_alpha_e_solver():
    residual = max(
        abs(overall_type1(solve_alpha_e(GEOM, w), GEOM, w) - GEOM.alpha)
        for w in W_GRID)
    values = [solve_alpha_e(GEOM, w) for w in W_GRID]
    monotone = all(b <= a for a, b in zip(values, values[1:]))
    exact_at_half = solve_alpha_e(GEOM, 0.5) == 0.025
    check("4", residual <= 1e-9 and monotone and exact_at_half,
          f"round-trip residual {residual:.2e} (<=1e-9), nonincreasing={monotone}, "
          f"value at w=0.5 is exactly 0.025: {exact_at_half}")


def test_criterion_5_adjusted_level_sweep():
    rows = alpha_level_sweep(GEOM, w_grid=W_GRID)
    floor_ok = all(row.alpha_e > 0.022 and row.alpha_c > 0.022
                   for row in rows if row.w <= 0.65)
    gap = max(abs(row.alpha_e - row.alpha_c) for row in rows)
    comparators_below = all(
        row.alpha_c_dunnett < min(row.alpha_e, row.alpha_c)
        and row.alpha_c_sidak < min(row.alpha_e, row.alpha_c)
        for row in rows if row.w < 1.0)
    check("5", floor_ok and gap <= 0.001 and comparators_below,
          f"levels above 2.2% for w<=0.65: {floor_ok}; max |alphaE-alphaC| = "
          f"{gap:.2e} (<=0.001); Sidak/Dunnett below both exact columns "
          f"for w<1: {comparators_below}")


def test_criterion_6a_full_simulation_exact_parametric():
    est = simulate_type1_full(PARAMS, REFERENCE_RULE, REFERENCE_CORR, GEOM,
                              test="exact_parametric", n=10**7, seed=606)
    bound = GEOM.alpha + 3.0 * est.std_error
    check("6a", est.value <= bound,
          f"end-to-end rejection rate {est.value:.6f} vs bound {bound:.6f} "
          f"(alpha + 3 SE at n=1e7), exact parametric test at the solved level")


def test_criterion_6b_full_simulation_combination():
    est = simulate_type1_full(PARAMS, REFERENCE_RULE, REFERENCE_CORR, GEOM,
                              test="combination", n=10**7, seed=607)
    bound = GEOM.alpha + 3.0 * est.std_error
    check("6b", est.value <= bound,
          f"end-to-end rejection rate {est.value:.6f} vs bound {bound:.6f} "
          f"(alpha + 3 SE at n=1e7), exact combination test")


def test_criterion_6c_unadjusted_inflation_demonstrated():
    est = simulate_type1_abstract(w=0.8, geom=GEOM, alpha_e=0.025,
                                  n=10**7, seed=608)
    bound = GEOM.alpha + 3.0 * est.std_error
    check("6c", est.value > bound,
          f"unadjusted test at w=0.8 rejects at {est.value:.6f} > {bound:.6f} "
          f"(alpha + 3 SE), demonstrating the inflation being controlled")


def test_criterion_7_combination_algebra():
    round_trip = max(
        abs(invert_p1(adjust_p1(p, w, 1.0), w, 1.0) - p)
        for p in (1e-4, 0.01, 0.1, 0.4) for w in (0.55, 0.8, 1.0))
    identity = max(abs(adjust_p1(p, 0.5, 1.0) - p)
                   for p in (1e-4, 0.01, 0.1, 0.4))
    collapse_ok = (combination_p(0.12, 0.34, 0.0) == 0.34
                   and combination_p(0.12, 0.34, 1.0) == 0.12)
    check("7", round_trip <= 1e-7 and identity == 0.0 and collapse_ok,
          f"invert/adjust round trip {round_trip:.2e} (<=1e-7); w=0.5 identity "
          f"exact: {identity == 0.0}; weight-collapse limits exact: {collapse_ok}")


def test_criterion_8_correlation_estimation():
    rng = np.random.default_rng(808)
    plus = [SubgroupEffect(f"v{i}", f"g{j}", e, 2.0 * e + 5.0)
            for i in range(6) for j, e in enumerate(rng.normal(size=2))]
    minus = [SubgroupEffect(r.variable, r.subgroup, r.effect1, -r.effect1)
             for r in plus]
    perfect = abs(modified_pearson(plus) - 1.0)
    flipped = abs(modified_pearson(minus) + 1.0)

    identical = []
    for arm in ("treatment", "control"):
        for _ in range(200):
            flag = bool(rng.random() < 0.3)
            identical.append(PatientRecord(arm=arm, response=flag, ae=flag,
                                           time=1.0, event=False))
    ident_est = bootstrap_corr(identical, "orr_diff_z", "ae_diff_z",
                               B=500, seed=81).estimate

    null_records = []
    for arm in ("treatment", "control"):
        resp = rng.random(400) < 0.5
        ae = rng.random(400) < 0.5
        for i in range(400):
            null_records.append(PatientRecord(arm=arm, response=bool(resp[i]),
                                              ae=bool(ae[i]), time=1.0,
                                              event=False))
    B = 2000
    null_est = bootstrap_corr(null_records, "orr_diff_z", "ae_diff_z",
                              B=B, seed=82).estimate
    null_bound = 3.0 / math.sqrt(B)
    check("8", perfect <= 1e-12 and flipped <= 1e-12
          and abs(ident_est - 1.0) <= 1e-9 and abs(null_est) <= null_bound,
          f"modified Pearson +/-1 errors ({perfect:.1e}, {flipped:.1e}) <=1e-12; "
          f"identical-endpoint bootstrap {ident_est:.12f} ~ 1; null bootstrap "
          f"|{null_est:.4f}| <= {null_bound:.4f}")


def test_criterion_8_published_subgroup_table():
    if not EV302_FILE.exists():
        print(f"criterion 8 (published table): SKIP - supply {EV302_FILE} "
              "(transcribed from the trial publication) to enable the 0.32 check")
        pytest.skip(f"published subgroup table not supplied at {EV302_FILE}")
    est = modified_pearson(load_subgroup_table(EV302_FILE))
    check("8 (published table)", abs(est - 0.32) <= 0.01,
          f"estimate {est:.4f} within 0.01 of 0.32")


def test_criterion_9_reproducibility(capsys, tmp_path):
    argv = ["simulate", "--target", "w", "--scenario", "1", "--Cx", "0.1",
            "--Cs", "0.05", "--n", "1000000", "--seed", "90210"]
    assert cli.main(argv) == 0
    first = capsys.readouterr().out
    assert cli.main(argv) == 0
    second = capsys.readouterr().out
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(argv + ["--out", str(out_a)]) == 0
    assert cli.main(argv + ["--out", str(out_b)]) == 0
    capsys.readouterr()
    identical = (first == second
                 and out_a.read_bytes() == out_b.read_bytes()
                 and out_a.read_text() == first)
    payload = json.loads(first)
    check("9", identical and set(payload) == {"value", "std_error", "n", "seed"},
          "repeated seeded simulate invocations produce byte-identical JSON")
