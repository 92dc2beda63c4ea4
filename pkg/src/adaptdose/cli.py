"""Command-line client for the design calculations.

Each subcommand builds the matching service request model and executes
it, by default in process through the shared handlers, or against a
running service when --server-url is given. Results are rendered as
CSV (sweeps and level tables, 10 significant digits) or JSON (single
estimates), to stdout or to --out.

A --config file supplies defaults for any flag as flat key = value
lines (keys match flag names, '#' starts a comment); explicit flags
override file values. Exit codes: 0 success, 1 usage or validation
error, 2 numeric failure, 3 data or file error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import pydantic

from .errors import (
    AdaptDoseError,
    DataError,
    InvalidParameterError,
    NumericError,
)
from .service import handlers, models

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_DATA = 3


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_names(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip() != ""]


@dataclass(frozen=True)
class Flag:
    name: str
    cli: str
    parse: Callable[[str], object]
    default: object
    help: str


DESIGN_FLAGS = [
    Flag("M", "--M", int, 40, "patients per dose arm (count, default 40)"),
    Flag("Rx", "--Rx", float, 0.2, "average expected ORR (probability, default 0.2)"),
    Flag("Rs", "--Rs", float, 0.2, "average expected grade 3-4 AE rate (probability, default 0.2)"),
]
RULE_FLAGS = [
    Flag("scenario", "--scenario", int, 1, "selection scenario, 1 or 2 (default 1)"),
    Flag("Cx", "--Cx", float, 0.0, "ORR-difference threshold (probability, default 0)"),
    Flag("Cs", "--Cs", float, 0.05, "AE-rate-difference threshold (probability, default 0.05)"),
]
CORR_FLAGS = [
    Flag("rho_xy", "--rho-xy", float, 0.3, "ORR vs OS correlation (default 0.3)"),
    Flag("rho_xs", "--rho-xs", float, 0.5, "ORR vs AE correlation (default 0.5)"),
    Flag("rho_ys", "--rho-ys", float, -0.3, "OS vs AE correlation (default -0.3)"),
]
GEOMETRY_FLAGS = [
    Flag("s", "--s", float, 0.2, "stage-1 OS information fraction (default 0.2)"),
    Flag("r", "--r", float, 1.0, "dose:control randomisation ratio (default 1)"),
    Flag("alpha", "--alpha", float, 0.025, "one-sided target level (default 0.025)"),
]

_W_GRID_DEFAULT = ",".join(str(w) for w in models.DEFAULT_W_GRID)

COMMAND_FLAGS: dict[str, list[Flag]] = {
    "winner-prob": DESIGN_FLAGS + RULE_FLAGS + CORR_FLAGS,
    "fig3": DESIGN_FLAGS + [
        Flag("Cs", "--Cs", float, 0.05, "AE-rate-difference threshold (default 0.05)"),
        Flag("rho_xy", "--rho-xy", float, 0.3, "ORR vs OS correlation (default 0.3)"),
        Flag("rho_xs", "--rho-xs", float, 0.5, "ORR vs AE correlation (default 0.5)"),
        Flag("rho_ys_list", "--rho-ys-list", _csv_floats, list(models.DEFAULT_RHO_YS_LIST),
             "comma-separated OS vs AE correlations (default -0.1,-0.3,-0.5)"),
        Flag("cx_grid", "--cx-grid", _csv_floats, list(models.DEFAULT_CX_GRID),
             "comma-separated Cx grid (default 0 to 0.2 in 11 steps)"),
    ],
    "alpha-exact": GEOMETRY_FLAGS + [
        Flag("w", "--w", float, None, "winner probability (single value)"),
        Flag("w_grid", "--w-grid", _csv_floats, None,
             "comma-separated winner probabilities (alternative to --w)"),
    ],
    "adjust-p": [
        Flag("p1s", "--p1s", float, None, "stage-1 one-sided p-value (required)"),
        Flag("w", "--w", float, None, "winner probability (required)"),
        Flag("r", "--r", float, 1.0, "dose:control randomisation ratio (default 1)"),
    ],
    "combine": [
        Flag("p1a", "--p1a", float, None, "adjusted stage-1 p-value (required)"),
        Flag("p2s", "--p2s", float, None, "stage-2 one-sided p-value (required)"),
        Flag("s", "--s", float, 0.2, "stage-1 information fraction (default 0.2)"),
    ],
    "alpha-combo": GEOMETRY_FLAGS + [
        Flag("w", "--w", float, None, "winner probability (single value)"),
        Flag("w_grid", "--w-grid", _csv_floats, None,
             "comma-separated winner probabilities (alternative to --w)"),
        Flag("grid_n", "--grid-n", int, 10_000, "boundary grid size (default 10000)"),
        Flag("method", "--method", str, "exact",
             "adjustment method: exact, sidak or dunnett (default exact)"),
    ],
    "fig4": GEOMETRY_FLAGS + [
        Flag("w_grid", "--w-grid", _csv_floats, list(models.DEFAULT_W_GRID),
             f"comma-separated winner probabilities (default {_W_GRID_DEFAULT})"),
        Flag("grid_n", "--grid-n", int, 10_000, "boundary grid size (default 10000)"),
    ],
    "estimate-corr": [
        Flag("method", "--method", str, None, "estimation method: subgroup or bootstrap (required)"),
        Flag("input", "--input", str, None, "input data file (required)"),
        Flag("stat1", "--stat1", str, "orr_diff_z",
             "first statistic: orr_diff_z, ae_diff_z or logrank_z (default orr_diff_z)"),
        Flag("stat2", "--stat2", str, "ae_diff_z",
             "second statistic (default ae_diff_z)"),
        Flag("B", "--B", int, 1000, "bootstrap resamples (default 1000)"),
        Flag("seed", "--seed", int, 0, "random seed (default 0)"),
        Flag("strata", "--strata", _csv_names, [],
             "comma-separated extra columns to stratify resampling on"),
    ],
    "simulate": DESIGN_FLAGS + RULE_FLAGS + CORR_FLAGS + GEOMETRY_FLAGS + [
        Flag("target", "--target", str, None,
             "quantity to simulate: w, type1-abstract or type1-full (required)"),
        Flag("n", "--n", int, 1_000_000, "replicates (default 1000000)"),
        Flag("seed", "--seed", int, 0, "random seed (default 0)"),
        Flag("mode", "--mode", str, "difference",
             "latent model for target w: difference or arm_level (default difference)"),
        Flag("test", "--test", str, "exact_parametric",
             "test for target type1-full: exact_parametric, combination, dunnett or sidak"),
        Flag("w", "--w", float, None, "winner probability (target type1-abstract)"),
        Flag("alphaE", "--alpha-e", float, None,
             "adjusted level for type1-abstract (default: solved from --w)"),
    ],
    "serve": [
        Flag("host", "--host", str, "127.0.0.1", "bind address (default 127.0.0.1)"),
        Flag("port", "--port", int, 8000, "port (default 8000)"),
    ],
}

_ENDPOINTS = {
    "winner-prob": ("/winner-prob", models.WinnerProbRequest,
                    models.WinnerProbResponse, handlers.winner_prob),
    "fig3": ("/fig3", models.WinnerSweepRequest,
             models.WinnerSweepResponse, handlers.winner_sweep),
    "alpha-exact": ("/alpha-exact", models.AlphaExactRequest,
                    models.AlphaExactResponse, handlers.alpha_exact_levels),
    "adjust-p": ("/adjust-p", models.AdjustPRequest,
                 models.AdjustPResponse, handlers.adjust_p),
    "combine": ("/combine", models.CombineRequest,
                models.CombineResponse, handlers.combine),
    "alpha-combo": ("/alpha-combo", models.AlphaComboRequest,
                    models.AlphaComboResponse, handlers.alpha_combo),
    "fig4": ("/fig4", models.AlphaSweepRequest,
             models.AlphaSweepResponse, handlers.alpha_sweep),
    "estimate-corr": ("/estimate-corr", models.EstimateCorrRequest,
                      models.EstimateCorrResponse, handlers.estimate_corr),
    "simulate": ("/simulate", models.SimulateRequest,
                 models.SimulateResponse, handlers.simulate),
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 on usage errors (argparse default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="adaptdose",
        description="Design quantities for adaptive phase 2/3 trials with dose selection.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    descriptions = {
        "winner-prob": "probability that the selected dose wins on OS (JSON)",
        "fig3": "winner-probability sweep over Cx and OS-AE correlations (CSV)",
        "alpha-exact": "exact adjusted level for the pooled test (CSV)",
        "adjust-p": "selection-adjusted stage-1 p-value (CSV)",
        "combine": "inverse normal combination p-value (CSV)",
        "alpha-combo": "combination-test equivalent level (CSV)",
        "fig4": "adjusted-level sweep with Dunnett/Sidak comparators (CSV)",
        "estimate-corr": "correlation estimate from historical data (JSON)",
        "simulate": "seeded Monte Carlo verification (JSON)",
        "serve": "run the HTTP service",
    }
    for command, flags in COMMAND_FLAGS.items():
        # add_parser reuses the parent's class, so usage errors exit 1 here too
        p = sub.add_parser(command, help=descriptions[command],
                           description=descriptions[command])
        for flag in flags:
            p.add_argument(flag.cli, dest=flag.name, type=flag.parse,
                           default=None, help=flag.help)
        if command != "serve":
            p.add_argument("--out", default=None, help="write output to this file")
            p.add_argument("--config", default=None,
                           help="key = value file with flag defaults")
            p.add_argument("--server-url", default=None,
                           help="run against this service instead of in process")
    return parser


def load_config(path: str) -> dict[str, str]:
    """Parse a flat 'key = value' config file; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def resolve_values(command: str, args: argparse.Namespace,
                   config: dict[str, str]) -> dict:
    """Merge flag values: command line > config file > built-in default."""
    resolved = {}
    for flag in COMMAND_FLAGS[command]:
        value = getattr(args, flag.name)
        key = flag.cli.lstrip("-").replace("-", "_").lower()
        if value is None and key in config:
            raw = config[key]
            try:
                value = flag.parse(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise InvalidParameterError(
                    f"config value {key} = {raw!r}: {exc}") from exc
        if value is None:
            value = flag.default
        resolved[flag.name] = value
    return resolved


def _require(resolved: dict, command: str, *names: str) -> None:
    for name in names:
        if resolved.get(name) is None:
            raise InvalidParameterError(f"{command} requires --{name.replace('_', '-')}")


def _w_grid_from(resolved: dict, command: str) -> list[float]:
    w, w_grid = resolved.get("w"), resolved.get("w_grid")
    if w is not None and w_grid is not None:
        raise InvalidParameterError(f"{command}: give --w or --w-grid, not both")
    if w is not None:
        return [w]
    if w_grid:
        return list(w_grid)
    raise InvalidParameterError(f"{command} requires --w or --w-grid")


def execute(command: str, request, server_url: str | None):
    """Run a request locally through the shared handlers or over HTTP."""
    path, _, response_cls, handler = _ENDPOINTS[command]
    if server_url is None:
        return handler(request)
    import httpx

    url = server_url.rstrip("/") + path
    try:
        resp = httpx.post(url, json=request.model_dump(mode="json"), timeout=3600.0)
    except httpx.HTTPError as exc:
        raise DataError(f"cannot reach service at {url}: {exc}") from exc
    if resp.status_code == 200:
        return response_cls.model_validate(resp.json())
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    detail = payload.get("detail", resp.text)
    kind = payload.get("kind", "validation" if resp.status_code == 422 else "data")
    if kind == "numeric":
        raise NumericError(detail)
    if kind == "data":
        raise DataError(detail)
    raise InvalidParameterError(str(detail))


def _num(value: float) -> str:
    """CSV number format: '.' decimal, 10 significant digits."""
    return format(float(value), ".10g")


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else
            str(cell) if isinstance(cell, (int, bool)) else _num(cell)
            for cell in row))
    return "\n".join(lines) + "\n"


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _build_request(command: str, resolved: dict):
    if command == "winner-prob":
        return models.WinnerProbRequest(**{k: resolved[k] for k in (
            "M", "Rx", "Rs", "scenario", "Cx", "Cs", "rho_xy", "rho_xs", "rho_ys")})
    if command == "fig3":
        return models.WinnerSweepRequest(
            M=resolved["M"], Rx=resolved["Rx"], Rs=resolved["Rs"], Cs=resolved["Cs"],
            rho_xy=resolved["rho_xy"], rho_xs=resolved["rho_xs"],
            rho_ys_list=resolved["rho_ys_list"], cx_grid=resolved["cx_grid"])
    if command == "alpha-exact":
        return models.AlphaExactRequest(
            s=resolved["s"], r=resolved["r"], alpha=resolved["alpha"],
            w_grid=_w_grid_from(resolved, command))
    if command == "adjust-p":
        _require(resolved, command, "p1s", "w")
        return models.AdjustPRequest(p1s=resolved["p1s"], w=resolved["w"], r=resolved["r"])
    if command == "combine":
        _require(resolved, command, "p1a", "p2s")
        return models.CombineRequest(p1a=resolved["p1a"], p2s=resolved["p2s"], s=resolved["s"])
    if command == "alpha-combo":
        return models.AlphaComboRequest(
            s=resolved["s"], r=resolved["r"], alpha=resolved["alpha"],
            w_grid=_w_grid_from(resolved, command),
            grid_n=resolved["grid_n"], method=resolved["method"])
    if command == "fig4":
        return models.AlphaSweepRequest(
            s=resolved["s"], r=resolved["r"], alpha=resolved["alpha"],
            w_grid=resolved["w_grid"], grid_n=resolved["grid_n"])
    if command == "estimate-corr":
        return _build_estimate_corr(resolved)
    if command == "simulate":
        _require(resolved, command, "target")
        return models.SimulateRequest(**{k: resolved[k] for k in (
            "M", "Rx", "Rs", "scenario", "Cx", "Cs", "rho_xy", "rho_xs", "rho_ys",
            "s", "r", "alpha", "target", "n", "seed", "mode", "test", "w", "alphaE")})
    raise InvalidParameterError(f"unknown command {command!r}")


def _build_estimate_corr(resolved: dict) -> models.EstimateCorrRequest:
    from . import correlation

    _require(resolved, "estimate-corr", "method", "input")
    method = resolved["method"]
    if method == "subgroup":
        table = correlation.load_subgroup_table(resolved["input"])
        return models.EstimateCorrRequest(
            method="subgroup",
            subgroups=[models.SubgroupRow(variable=r.variable, subgroup=r.subgroup,
                                          effect1=r.effect1, effect2=r.effect2)
                       for r in table])
    if method != "bootstrap":
        raise InvalidParameterError(
            f"estimate-corr method must be subgroup or bootstrap, got {method!r}")
    records, extra_cols = correlation.load_patient_records(resolved["input"])
    strata_names = resolved["strata"]
    missing = [c for c in strata_names if c not in extra_cols]
    if missing:
        raise DataError(f"strata columns not found in input: {missing}")
    strata = None
    if strata_names:
        strata = ["|".join(extra_cols[c][i] for c in strata_names)
                  for i in range(len(records))]
    return models.EstimateCorrRequest(
        method="bootstrap",
        patients=[models.PatientRow(arm=rec.arm, response=rec.response, ae=rec.ae,
                                    time=rec.time, event=rec.event,
                                    stratum=strata[i] if strata else None)
                  for i, rec in enumerate(records)],
        stat1=resolved["stat1"], stat2=resolved["stat2"],
        B=resolved["B"], seed=resolved["seed"], use_strata=strata is not None)


def _render(command: str, response) -> str:
    if command == "winner-prob":
        return _json({"w": response.w, "w1": response.w1, "w2": response.w2})
    if command == "fig3":
        return _csv(["scenario", "rho_ys", "Cx", "w", "w1", "w2"],
                    [[p.scenario, p.rho_ys, p.Cx, p.w, p.w1, p.w2]
                     for p in response.rows])
    if command == "alpha-exact":
        return _csv(["w", "alphaE"], [[p.w, p.alphaE] for p in response.rows])
    if command == "adjust-p":
        return _csv(["p1s", "w", "r", "p1a"],
                    [[response.p1s, response.w, response.r, response.p1a]])
    if command == "combine":
        return _csv(["p1a", "p2s", "s", "p_c"],
                    [[response.p1a, response.p2s, response.s, response.p_c]])
    if command == "alpha-combo":
        return _csv(["w", "method", "alpha_c"],
                    [[p.w, p.method, p.alpha_c] for p in response.rows])
    if command == "fig4":
        return _csv(["w", "alphaE", "alphaC", "alphaC_dunnett", "alphaC_sidak"],
                    [[p.w, p.alphaE, p.alphaC, p.alphaC_dunnett, p.alphaC_sidak]
                     for p in response.rows])
    if command == "estimate-corr":
        return _json({"estimate": response.estimate, "ci_low": response.ci_low,
                      "ci_high": response.ci_high, "method": response.method,
                      "n_resamples": response.n_resamples})
    if command == "simulate":
        return _json({"value": response.value, "std_error": response.std_error,
                      "n": response.n, "seed": response.seed})
    raise InvalidParameterError(f"unknown command {command!r}")


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise DataError(f"cannot write output file {out}: {exc}") from exc


def _serve(resolved: dict) -> int:
    import uvicorn

    uvicorn.run("adaptdose.service.app:app",
                host=resolved["host"], port=resolved["port"])
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        config = load_config(args.config) if getattr(args, "config", None) else {}
        resolved = resolve_values(args.command, args, config)
        if args.command == "serve":
            return _serve(resolved)
        request = _build_request(args.command, resolved)
        response = execute(args.command, request, args.server_url)
        _write(_render(args.command, response), args.out)
        return EXIT_OK
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(x) for x in first.get("loc", ()))
        print(f"adaptdose {args.command}: invalid {loc}: {first.get('msg')}",
              file=sys.stderr)
        return EXIT_USAGE
    except InvalidParameterError as exc:
        print(f"adaptdose {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"adaptdose {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"adaptdose {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"adaptdose {args.command}: file error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AdaptDoseError as exc:
        print(f"adaptdose {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
