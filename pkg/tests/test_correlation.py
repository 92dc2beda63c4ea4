"""Correlation estimation: subgroup formula, log-rank, bootstrap resampling."""

import math
from pathlib import Path

import numpy as np
import pytest
from scipy.special import ndtri

from adaptdose.correlation import (
    PatientRecord,
    SubgroupEffect,
    bootstrap_corr,
    collapse_subgroups,
    load_patient_records,
    load_subgroup_table,
    logrank_z,
    modified_pearson,
)
from adaptdose.errors import (
    DataError,
    DegenerateDataError,
    InvalidParameterError,
)

EV302_FILE = Path(__file__).resolve().parents[1] / "data" / "ev302_subgroups.csv"


def _table(effect_pairs_by_variable):
    rows = []
    for variable, pairs in effect_pairs_by_variable.items():
        for j, (e1, e2) in enumerate(pairs, start=1):
            rows.append(SubgroupEffect(variable, f"g{j}", e1, e2))
    return rows


class TestModifiedPearson:
    def test_perfect_affine_relation(self):
        rng = np.random.default_rng(31)
        table = []
        for i in range(6):
            for j in range(2):
                e1 = float(rng.normal())
                table.append(SubgroupEffect(f"v{i}", f"g{j}", e1, 2.0 * e1 + 5.0))
        assert modified_pearson(table) == pytest.approx(1.0, abs=1e-12)

    def test_sign_flip(self):
        rng = np.random.default_rng(32)
        table = []
        for i in range(6):
            for j in range(2):
                e1 = float(rng.normal())
                table.append(SubgroupEffect(f"v{i}", f"g{j}", e1, -e1))
        assert modified_pearson(table) == pytest.approx(-1.0, abs=1e-12)

    def test_shift_and_scale_invariance(self):
        base = _table({f"v{i}": [(i + 0.3, 2 * i - 1.0), (i - 0.8, i + 0.4)]
                       for i in range(5)})
        r0 = modified_pearson(base)
        shifted = [SubgroupEffect(r.variable, r.subgroup, r.effect1, r.effect2 + 7.5)
                   for r in base]
        assert modified_pearson(shifted) == pytest.approx(r0, abs=1e-14)
        scaled = [SubgroupEffect(r.variable, r.subgroup, 3.0 * r.effect1, r.effect2)
                  for r in base]
        assert modified_pearson(scaled) == pytest.approx(r0, abs=1e-14)
        negated = [SubgroupEffect(r.variable, r.subgroup, -r.effect1, r.effect2)
                   for r in base]
        assert modified_pearson(negated) == pytest.approx(-r0, abs=1e-14)

    def test_wrong_subgroup_count(self):
        table = _table({"age": [(1, 2), (3, 4), (5, 6)]})
        with pytest.raises(DataError, match="collapse"):
            modified_pearson(table)

    def test_degenerate_denominator(self):
        table = _table({"v": [(1.0, 2.0), (1.0, 5.0)]})
        with pytest.raises(DegenerateDataError):
            modified_pearson(table)

    def test_empty(self):
        with pytest.raises(DataError):
            modified_pearson([])


class TestCollapseSubgroups:
    def test_identity_on_two_subgroups(self):
        table = _table({"v": [(1.0, 2.0), (3.0, 4.0)]})
        plan = {"v": {"g1": "A", "g2": "B"}}
        out = collapse_subgroups(table, plan)
        assert [(r.effect1, r.effect2) for r in out] == [(1.0, 2.0), (3.0, 4.0)]

    def test_three_to_two_mean(self):
        table = [SubgroupEffect("v", "s1", 1.0, 10.0),
                 SubgroupEffect("v", "s2", 2.0, 20.0),
                 SubgroupEffect("v", "s3", 3.0, 30.0)]
        plan = {"v": {"s1": "A", "s2": "B", "s3": "B"}}
        out = collapse_subgroups(table, plan)
        assert out[0].effect1 == 1.0
        assert out[1].effect1 == 2.5
        assert out[1].effect2 == 25.0
        assert out[1].subgroup == "s2+s3"

    def test_collapse_then_estimate_matches_hand_reduction(self):
        table = [
            SubgroupEffect("sex", "m", 0.4, 0.1),
            SubgroupEffect("sex", "f", 0.1, -0.2),
            SubgroupEffect("region", "na", 0.5, 0.3),
            SubgroupEffect("region", "eu", 0.3, 0.2),
            SubgroupEffect("region", "asia", 0.1, -0.3),
            SubgroupEffect("stage", "ii", 0.6, 0.25),
            SubgroupEffect("stage", "iii", 0.2, 0.05),
        ]
        plan = {"sex": {"m": "A", "f": "B"},
                "region": {"na": "A", "eu": "A", "asia": "B"},
                "stage": {"ii": "A", "iii": "B"}}
        hand_reduced = [
            SubgroupEffect("sex", "m", 0.4, 0.1),
            SubgroupEffect("sex", "f", 0.1, -0.2),
            SubgroupEffect("region", "na+eu", 0.4, 0.25),
            SubgroupEffect("region", "asia", 0.1, -0.3),
            SubgroupEffect("stage", "ii", 0.6, 0.25),
            SubgroupEffect("stage", "iii", 0.2, 0.05),
        ]
        got = modified_pearson(collapse_subgroups(table, plan))
        want = modified_pearson(hand_reduced)
        assert got == pytest.approx(want, abs=1e-14)
        # hand value: d1 = (0.3, 0.3, 0.4), d2 = (0.3, 0.55, 0.2)
        num = 0.3 * 0.3 + 0.3 * 0.55 + 0.4 * 0.2
        den = math.sqrt((0.09 + 0.09 + 0.16) * (0.09 + 0.3025 + 0.04))
        assert got == pytest.approx(num / den, abs=1e-14)

    def test_plan_errors(self):
        table = _table({"v": [(1, 2), (3, 4)]})
        with pytest.raises(DataError):
            collapse_subgroups(table, {})
        with pytest.raises(DataError):
            collapse_subgroups(table, {"v": {"g1": "A"}})
        with pytest.raises(DataError):
            collapse_subgroups(table, {"v": {"g1": "A", "g2": "A"}})


class TestLogrankZ:
    def test_identical_groups(self):
        group = [(1.0, True), (2.0, False), (3.0, True), (4.0, True)]
        assert logrank_z(group, list(group)) == pytest.approx(0.0, abs=1e-12)

    def test_antisymmetry(self):
        a = [(1.0, True), (3.0, True), (5.0, False)]
        b = [(2.0, True), (4.0, True)]
        assert logrank_z(a, b) == pytest.approx(-logrank_z(b, a), abs=1e-14)

    def test_four_subject_hand_example(self):
        # A: deaths at 1 and 3; B: deaths at 2 and 4. By hand:
        #   t=1: n=4, nA=2, d=1 -> E += 1/2, V += 1/4
        #   t=2: n=3, nA=1, d=1 -> E += 1/3, V += 2/9
        #   t=3: n=2, nA=1, d=1 -> E += 1/2, V += 1/4
        #   t=4: n=1 -> no variance contribution
        # O_A = 2, E_A = 4/3, V = 13/18
        a = [(1.0, True), (3.0, True)]
        b = [(2.0, True), (4.0, True)]
        want = (4.0 / 3.0 - 2.0) / math.sqrt(13.0 / 18.0)
        assert logrank_z(a, b) == pytest.approx(want, abs=1e-14)

    def test_censored_at_death_time_stays_at_risk(self):
        # A: death at 1, censored at 2; B: censored at 1, death at 3.
        # By hand: t=1: n=4, nA=2, d=1 -> E=1/2, V=1/4; t=3: n=1, skip.
        # Z = (1/2 - 1) / (1/2) = -1
        a = [(1.0, True), (2.0, False)]
        b = [(1.0, False), (3.0, True)]
        assert logrank_z(a, b) == pytest.approx(-1.0, abs=1e-14)

    def test_monotone_time_invariance(self):
        a = [(1.0, True), (3.0, True), (5.0, False)]
        b = [(2.0, True), (4.0, False), (6.0, True)]
        transformed_a = [(t**2, e) for t, e in a]
        transformed_b = [(t**2, e) for t, e in b]
        assert logrank_z(a, b) == logrank_z(transformed_a, transformed_b)

    def test_no_events(self):
        with pytest.raises(DegenerateDataError):
            logrank_z([(1.0, False)], [(2.0, False)])

    def test_negative_time(self):
        with pytest.raises(DataError):
            logrank_z([(-1.0, True)], [(2.0, True)])


def _cohort(n_per_arm, rho, rate, seed, survival=False):
    """Latent-Gaussian cohort: response/ae share correlation rho per patient."""
    rng = np.random.default_rng(seed)
    thr = ndtri(1.0 - rate)
    records = []
    for arm in ("treatment", "control"):
        z1 = rng.standard_normal(n_per_arm)
        z2 = rho * z1 + math.sqrt(1 - rho * rho) * rng.standard_normal(n_per_arm)
        times = rng.exponential(1.0, n_per_arm) if survival else np.ones(n_per_arm)
        for i in range(n_per_arm):
            records.append(PatientRecord(
                arm=arm, response=bool(z1[i] > thr), ae=bool(z2[i] > thr),
                time=float(times[i]), event=survival))
    return records


class TestBootstrapCorr:
    def test_identical_endpoints_give_one(self):
        rng = np.random.default_rng(33)
        records = []
        for arm in ("treatment", "control"):
            for _ in range(100):
                flag = bool(rng.random() < 0.3)
                records.append(PatientRecord(arm=arm, response=flag, ae=flag,
                                             time=1.0, event=False))
        result = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=300, seed=5)
        assert result.estimate == pytest.approx(1.0, abs=1e-9)

    def test_independent_endpoints_near_zero(self):
        records = _cohort(400, rho=0.0, rate=0.5, seed=34)
        result = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=2000, seed=6)
        assert abs(result.estimate) <= 3.0 / math.sqrt(2000)
        assert result.ci_low <= result.estimate <= result.ci_high

    def test_latent_correlation_recovered(self):
        records = _cohort(400, rho=0.3, rate=0.2, seed=35)
        result = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=1000, seed=7)
        assert 0.1 <= result.estimate <= 0.5

    def test_logrank_statistic_path(self):
        records = _cohort(120, rho=0.3, rate=0.2, seed=36, survival=True)
        result = bootstrap_corr(records, "logrank_z", "orr_diff_z", B=200, seed=8)
        assert -1.0 <= result.estimate <= 1.0
        assert result.n_resamples == 200

    def test_reproducible(self):
        records = _cohort(80, rho=0.2, rate=0.3, seed=37)
        a = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=250, seed=42)
        b = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=250, seed=42)
        assert a == b
        c = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=250, seed=43)
        assert c.estimate != a.estimate

    def test_strata_change_resampling(self):
        records = _cohort(80, rho=0.2, rate=0.3, seed=38)
        strata = ["young" if i % 2 else "old" for i in range(len(records))]
        a = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=250, seed=42,
                           strata=strata)
        b = bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=250, seed=42)
        assert a.estimate != b.estimate

    def test_degenerate_reported(self):
        records = [PatientRecord(arm=arm, response=False, ae=bool(i % 2),
                                 time=1.0, event=False)
                   for arm in ("treatment", "control") for i in range(30)]
        with pytest.raises(DegenerateDataError, match="resamples"):
            bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=200, seed=1)

    def test_validation(self):
        records = _cohort(30, rho=0.0, rate=0.5, seed=39)
        with pytest.raises(InvalidParameterError):
            bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=100, seed=1)
        with pytest.raises(InvalidParameterError):
            bootstrap_corr(records, "median_z", "ae_diff_z", B=200, seed=1)
        with pytest.raises(DataError):
            bootstrap_corr(records, "orr_diff_z", "ae_diff_z", B=200, seed=1,
                           strata=["x"])
        only_treatment = [r for r in records if r.arm == "treatment"]
        with pytest.raises(DataError):
            bootstrap_corr(only_treatment, "orr_diff_z", "ae_diff_z", B=200, seed=1)


class TestLoaders:
    def test_subgroup_round_trip(self, tmp_path):
        f = tmp_path / "table.csv"
        f.write_text("variable,subgroup,effect1,effect2\n"
                     "age,<65,0.41,0.12\n"
                     "age,>=65,0.22,0.05\n")
        table = load_subgroup_table(f)
        assert len(table) == 2
        assert table[0].variable == "age"
        assert table[1].effect2 == 0.05

    def test_subgroup_missing_column(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("variable,subgroup,effect1\nage,<65,0.4\n")
        with pytest.raises(DataError, match="effect2"):
            load_subgroup_table(f)

    def test_patient_round_trip_with_strata(self, tmp_path):
        f = tmp_path / "patients.csv"
        f.write_text("arm,response,ae,time,event,site\n"
                     "treatment,1,0,12.5,1,north\n"
                     "control,0,1,8.0,0,south\n")
        records, extras = load_patient_records(f)
        assert records[0].arm == "treatment"
        assert records[0].response is True
        assert records[1].event is False
        assert extras["site"] == ["north", "south"]

    def test_patient_bad_boolean(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("arm,response,ae,time,event\ntreatment,maybe,0,1.0,1\n")
        with pytest.raises(DataError, match="boolean"):
            load_patient_records(f)

    def test_bad_arm_label(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("arm,response,ae,time,event\nplacebo,1,0,1.0,1\n")
        with pytest.raises(DataError, match="arm"):
            load_patient_records(f)


@pytest.mark.skipif(
    not EV302_FILE.exists(),
    reason=f"published subgroup table not supplied at {EV302_FILE}; "
           "transcribe it from the trial publication to enable this check")
def test_published_subgroup_estimate():
    table = load_subgroup_table(EV302_FILE)
    assert modified_pearson(table) == pytest.approx(0.32, abs=0.01)
