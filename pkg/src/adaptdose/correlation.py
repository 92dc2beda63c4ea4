"""Correlation between two test statistics from historical trial data.

Two estimators:

* ``modified_pearson`` works from published subgroup analyses. Within
  each baseline variable the two subgroups' effect estimates are
  independent, so paired differences give unbiased covariance/variance
  components even though estimates across baseline variables are highly
  correlated:

      sum_i (T1_i1 - T1_i2)(T2_i1 - T2_i2)
      ------------------------------------------------------
      sqrt( sum_i (T1_i1 - T1_i2)^2  sum_i (T2_i1 - T2_i2)^2 )

* ``bootstrap_corr`` works from patient-level records: resample with
  replacement within arm (and stratum), compute a standardised
  treatment-effect statistic per endpoint on every resample, and take
  the Pearson correlation of the two statistics across resamples.

Input files are delimiter-separated text with one header row; subgroup
tables carry columns ``variable,subgroup,effect1,effect2`` and patient
files ``arm,response,ae,time,event`` (extra columns usable as strata).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, DegenerateDataError, InvalidParameterError

__all__ = [
    "SubgroupEffect",
    "PatientRecord",
    "BootstrapCorr",
    "modified_pearson",
    "collapse_subgroups",
    "logrank_z",
    "bootstrap_corr",
    "load_subgroup_table",
    "load_patient_records",
    "STAT_NAMES",
]


@dataclass(frozen=True)
class SubgroupEffect:
    """Published treatment effects on two endpoints for one subgroup."""

    variable: str
    subgroup: str
    effect1: float
    effect2: float

    def __post_init__(self):
        if not (math.isfinite(self.effect1) and math.isfinite(self.effect2)):
            raise DataError(
                f"effects must be finite, got ({self.effect1!r}, {self.effect2!r}) "
                f"for {self.variable}/{self.subgroup}")


@dataclass(frozen=True)
class PatientRecord:
    """One patient's endpoint data from a historical trial."""

    arm: str
    response: bool
    ae: bool
    time: float
    event: bool

    def __post_init__(self):
        if self.arm not in ("treatment", "control"):
            raise DataError(f"arm must be 'treatment' or 'control', got {self.arm!r}")
        if not (math.isfinite(self.time) and self.time >= 0.0):
            raise InvalidParameterError(f"time must be >= 0, got {self.time!r}")


@dataclass(frozen=True)
class BootstrapCorr:
    """Bootstrap correlation estimate with its percentile interval."""

    estimate: float
    ci_low: float
    ci_high: float
    n_resamples: int
    n_degenerate: int
    seed: int


def _grouped(table: Sequence[SubgroupEffect]) -> dict[str, list[SubgroupEffect]]:
    groups: dict[str, list[SubgroupEffect]] = {}
    for row in table:
        groups.setdefault(row.variable, []).append(row)
    return groups


def modified_pearson(table: Sequence[SubgroupEffect]) -> float:
    """Correlation of two treatment effects from paired subgroup differences.

    Requires exactly two subgroups per baseline variable; collapse
    larger groupings first with ``collapse_subgroups``.

    Raises:
        DataError: if any baseline variable does not have exactly 2 subgroups.
        DegenerateDataError: if either endpoint has no variation across pairs.
    """
    if not table:
        raise DataError("subgroup table is empty")
    groups = _grouped(table)
    d1, d2 = [], []
    for variable, rows in groups.items():
        if len(rows) != 2:
            raise DataError(
                f"baseline variable {variable!r} has {len(rows)} subgroups; "
                "collapse to exactly 2 (see collapse_subgroups) before estimating")
        d1.append(rows[0].effect1 - rows[1].effect1)
        d2.append(rows[0].effect2 - rows[1].effect2)
    num = math.fsum(a * b for a, b in zip(d1, d2))
    den = math.sqrt(math.fsum(a * a for a in d1) * math.fsum(b * b for b in d2))
    if den == 0.0:
        raise DegenerateDataError(
            "zero variance in paired subgroup differences; correlation undefined")
    return max(-1.0, min(1.0, num / den))


def collapse_subgroups(
    table: Sequence[SubgroupEffect],
    plan: Mapping[str, Mapping[str, str]],
) -> list[SubgroupEffect]:
    """Merge subgroups into two per baseline variable by simple averaging.

    ``plan`` maps variable -> subgroup -> 'A' | 'B'. Published tables
    rarely expose subgroup variances, so merged effects are unweighted
    means of the member effects.

    Raises:
        DataError: if the plan does not cover every subgroup or leaves a
            side empty.
    """
    out: list[SubgroupEffect] = []
    for variable, rows in _grouped(table).items():
        var_plan = plan.get(variable)
        if var_plan is None:
            raise DataError(f"collapse plan is missing baseline variable {variable!r}")
        sides: dict[str, list[SubgroupEffect]] = {"A": [], "B": []}
        for row in rows:
            side = var_plan.get(row.subgroup)
            if side not in ("A", "B"):
                raise DataError(
                    f"collapse plan is missing subgroup {row.subgroup!r} "
                    f"of variable {variable!r} (or maps it outside A/B)")
            sides[side].append(row)
        for side in ("A", "B"):
            members = sides[side]
            if not members:
                raise DataError(
                    f"collapse plan leaves side {side} of variable {variable!r} empty")
            out.append(SubgroupEffect(
                variable=variable,
                subgroup="+".join(m.subgroup for m in members),
                effect1=math.fsum(m.effect1 for m in members) / len(members),
                effect2=math.fsum(m.effect2 for m in members) / len(members),
            ))
    return out


def _logrank_from_arrays(times_a: np.ndarray, events_a: np.ndarray,
                         times_b: np.ndarray, events_b: np.ndarray) -> float:
    """Vectorised O-E/sqrt(V) over the pooled unique death times."""
    if not (events_a.any() or events_b.any()):
        raise DegenerateDataError("no events in either group")
    death_times = np.unique(np.concatenate([times_a[events_a], times_b[events_b]]))
    sorted_a, sorted_b = np.sort(times_a), np.sort(times_b)
    at_risk_a = times_a.size - np.searchsorted(sorted_a, death_times, side="left")
    at_risk_b = times_b.size - np.searchsorted(sorted_b, death_times, side="left")
    ev_a = np.sort(times_a[events_a])
    ev_b = np.sort(times_b[events_b])
    d_a = (np.searchsorted(ev_a, death_times, side="right")
           - np.searchsorted(ev_a, death_times, side="left"))
    d_b = (np.searchsorted(ev_b, death_times, side="right")
           - np.searchsorted(ev_b, death_times, side="left"))
    n = at_risk_a + at_risk_b
    d = d_a + d_b
    observed = float(d_a.sum())
    expected = float((d * at_risk_a / n).sum())
    multi = n > 1
    variance = float((d[multi] * (at_risk_a[multi] / n[multi])
                      * (at_risk_b[multi] / n[multi])
                      * (n[multi] - d[multi]) / (n[multi] - 1)).sum())
    if variance <= 0.0:
        raise DegenerateDataError("log-rank variance is zero (degenerate risk sets)")
    return (expected - observed) / math.sqrt(variance)


def logrank_z(group_a: Sequence[tuple[float, bool]],
              group_b: Sequence[tuple[float, bool]]) -> float:
    """Two-sample log-rank statistic (observed vs expected over variance).

    Positive values favour group A (fewer deaths than expected). Tied
    death times are pooled into one hypergeometric term, and subjects
    censored at t remain in the risk set for deaths at t.

    Raises:
        DegenerateDataError: if there are no events or the variance is zero.
    """
    times_a = np.asarray([t for t, _ in group_a], dtype=float)
    events_a = np.asarray([bool(e) for _, e in group_a])
    times_b = np.asarray([t for t, _ in group_b], dtype=float)
    events_b = np.asarray([bool(e) for _, e in group_b])
    if np.any(times_a < 0.0) or np.any(times_b < 0.0):
        raise DataError("survival times must be >= 0")
    return _logrank_from_arrays(times_a, events_a, times_b, events_b)


def _two_proportion_z(flags: np.ndarray, treat: np.ndarray) -> float:
    """Pooled two-proportion z statistic, positive when treatment is higher."""
    flags_t, flags_c = flags[treat], flags[~treat]
    pooled = (flags_t.sum() + flags_c.sum()) / flags.size
    if pooled <= 0.0 or pooled >= 1.0:
        raise DegenerateDataError("pooled proportion is 0 or 1; statistic undefined")
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / flags_t.size + 1.0 / flags_c.size))
    return (flags_t.mean() - flags_c.mean()) / se


@dataclass(frozen=True)
class _Columns:
    """Record fields as arrays, for fast resampled statistic evaluation."""

    response: np.ndarray
    ae: np.ndarray
    time: np.ndarray
    event: np.ndarray
    treat: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[PatientRecord]) -> "_Columns":
        return cls(
            response=np.asarray([r.response for r in records]),
            ae=np.asarray([r.ae for r in records]),
            time=np.asarray([r.time for r in records], dtype=float),
            event=np.asarray([r.event for r in records]),
            treat=np.asarray([r.arm == "treatment" for r in records]),
        )


def _stat_orr(cols: _Columns, idx: np.ndarray) -> float:
    return _two_proportion_z(cols.response[idx], cols.treat[idx])


def _stat_ae(cols: _Columns, idx: np.ndarray) -> float:
    return _two_proportion_z(cols.ae[idx], cols.treat[idx])


def _stat_logrank(cols: _Columns, idx: np.ndarray) -> float:
    times, events, treat = cols.time[idx], cols.event[idx], cols.treat[idx]
    return _logrank_from_arrays(times[treat], events[treat],
                                times[~treat], events[~treat])


STAT_NAMES = {
    "orr_diff_z": _stat_orr,
    "ae_diff_z": _stat_ae,
    "logrank_z": _stat_logrank,
}

_CI_RESAMPLES = 1000


def bootstrap_corr(
    records: Sequence[PatientRecord],
    stat1: str = "orr_diff_z",
    stat2: str = "ae_diff_z",
    B: int = 1000,
    strata: Sequence[str] | None = None,
    seed: int = 0,
) -> BootstrapCorr:
    """Pearson correlation of two test statistics across bootstrap resamples.

    Resampling is with replacement within arm, and within stratum when
    ``strata`` supplies one label per record, so each resample stays
    balanced on the stratifying factors. Each resample is seeded from
    (seed, resample index) through a counter-based generator, which
    makes the result independent of any parallel chunking. The interval
    is a percentile interval from resampling the B statistic pairs.

    Raises:
        DegenerateDataError: if more than 1% of resamples produce a
            degenerate statistic, or the correlation is undefined.
    """
    if stat1 not in STAT_NAMES or stat2 not in STAT_NAMES:
        raise InvalidParameterError(
            f"unknown statistic; choose from {sorted(STAT_NAMES)}")
    if int(B) != B or B < 200:
        raise InvalidParameterError(f"B must be an integer >= 200, got {B!r}")
    if int(seed) != seed or seed < 0:
        raise InvalidParameterError(f"seed must be a nonnegative integer, got {seed!r}")
    B, seed = int(B), int(seed)
    if strata is not None and len(strata) != len(records):
        raise DataError(
            f"strata has {len(strata)} labels for {len(records)} records")

    arms = [r.arm for r in records]
    if "treatment" not in arms or "control" not in arms:
        raise DataError("both arms must be nonempty")
    labels = strata if strata is not None else [""] * len(records)
    cells: dict[tuple[str, str], list[int]] = {}
    for i, (arm, lab) in enumerate(zip(arms, labels)):
        cells.setdefault((arm, str(lab)), []).append(i)
    cell_indices = [np.asarray(cells[k], dtype=np.intp) for k in sorted(cells)]

    f1, f2 = STAT_NAMES[stat1], STAT_NAMES[stat2]
    cols = _Columns.from_records(records)
    key_base = (seed & 0xFFFFFFFFFFFFFFFF) << 64

    stats1, stats2 = [], []
    n_degenerate = 0
    for b in range(B):
        rng = np.random.Generator(np.random.Philox(key=key_base | b))
        picked = np.concatenate([
            cell[rng.integers(0, cell.size, size=cell.size)]
            for cell in cell_indices
        ])
        try:
            v1 = f1(cols, picked)
            v2 = f2(cols, picked)
        except DegenerateDataError:
            n_degenerate += 1
            continue
        stats1.append(v1)
        stats2.append(v2)
    if n_degenerate > 0.01 * B:
        raise DegenerateDataError(
            f"{n_degenerate} of {B} resamples produced a degenerate statistic")

    t1 = np.asarray(stats1)
    t2 = np.asarray(stats2)
    estimate = _pearson(t1, t2)

    rng_ci = np.random.Generator(np.random.Philox(key=key_base | 0xFFFFFFFFFFFFFFFF))
    kept = t1.size
    ci_draws = np.empty(_CI_RESAMPLES)
    for j in range(_CI_RESAMPLES):
        idx = rng_ci.integers(0, kept, size=kept)
        ci_draws[j] = _pearson(t1[idx], t2[idx])
    ci_low, ci_high = np.percentile(ci_draws, [2.5, 97.5])
    return BootstrapCorr(estimate=estimate, ci_low=float(ci_low),
                         ci_high=float(ci_high), n_resamples=kept,
                         n_degenerate=n_degenerate, seed=seed)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise DegenerateDataError("a statistic is constant across resamples")
    r = float(np.corrcoef(x, y)[0, 1])
    return max(-1.0, min(1.0, r))


def _sniff_reader(path: Path):
    text = path.read_text()
    try:
        dialect = csv.Sniffer().sniff(text[:2048], delimiters=",;\t")
    except csv.Error:
        dialect = csv.excel
    return csv.reader(text.splitlines(), dialect)


def _parse_bool(token: str, column: str, line: int) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "t", "yes", "y"):
        return True
    if t in ("0", "false", "f", "no", "n"):
        return False
    raise DataError(f"line {line}: cannot parse {column}={token!r} as boolean")


def _parse_float(token: str, column: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(f"line {line}: cannot parse {column}={token!r} as a number") from None


def load_subgroup_table(path: str | Path) -> list[SubgroupEffect]:
    """Read a subgroup-effects table (variable,subgroup,effect1,effect2)."""
    path = Path(path)
    rows = list(_sniff_reader(path))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    required = ["variable", "subgroup", "effect1", "effect2"]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing} in header {header}")
    idx = {c: header.index(c) for c in required}
    table = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        table.append(SubgroupEffect(
            variable=row[idx["variable"]].strip(),
            subgroup=row[idx["subgroup"]].strip(),
            effect1=_parse_float(row[idx["effect1"]], "effect1", lineno),
            effect2=_parse_float(row[idx["effect2"]], "effect2", lineno),
        ))
    if not table:
        raise DataError(f"{path}: no data rows")
    return table


def load_patient_records(
    path: str | Path,
) -> tuple[list[PatientRecord], dict[str, list[str]]]:
    """Read patient records (arm,response,ae,time,event).

    Extra columns are returned as a name -> values mapping so callers
    can use them as strata.
    """
    path = Path(path)
    rows = list(_sniff_reader(path))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    required = ["arm", "response", "ae", "time", "event"]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing} in header {header}")
    idx = {c: header.index(c) for c in required}
    extras = {name: i for i, name in enumerate(header) if name not in required}
    records: list[PatientRecord] = []
    extra_cols: dict[str, list[str]] = {name: [] for name in extras}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        records.append(PatientRecord(
            arm=row[idx["arm"]].strip().lower(),
            response=_parse_bool(row[idx["response"]], "response", lineno),
            ae=_parse_bool(row[idx["ae"]], "ae", lineno),
            time=_parse_float(row[idx["time"]], "time", lineno),
            event=_parse_bool(row[idx["event"]], "event", lineno),
        ))
        for name, col in extras.items():
            extra_cols[name].append(row[col].strip() if col < len(row) else "")
    if not records:
        raise DataError(f"{path}: no data rows")
    return records, extra_cols
