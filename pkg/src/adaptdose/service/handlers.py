"""Request handlers shared by the HTTP endpoints and the local CLI client.

Each handler turns a request model into core-package calls and wraps
the result in the matching response model. Core exceptions propagate;
the app module maps them to HTTP errors and the CLI maps them to exit
codes.
"""

from __future__ import annotations

from .. import alpha_exact, combination, correlation, montecarlo, selection
from ..errors import InvalidParameterError
from . import models


def _design(req) -> selection.DesignParams:
    return selection.DesignParams(M=req.M, Rx=req.Rx, Rs=req.Rs)


def _rule(req) -> selection.SelectionRule:
    return selection.SelectionRule(scenario=req.scenario, Cx=req.Cx, Cs=req.Cs)


def _corr(req) -> selection.CorrelationSet:
    return selection.CorrelationSet(rho_xy=req.rho_xy, rho_xs=req.rho_xs,
                                    rho_ys=req.rho_ys)


def _geometry(req) -> alpha_exact.TrialGeometry:
    return alpha_exact.TrialGeometry(s=req.s, r=req.r, alpha=req.alpha)


def winner_prob(req: models.WinnerProbRequest) -> models.WinnerProbResponse:
    wp = selection.winner_prob(_design(req), _rule(req), _corr(req))
    return models.WinnerProbResponse(w=wp.w, w1=wp.w1, w2=wp.w2)


def winner_sweep(req: models.WinnerSweepRequest) -> models.WinnerSweepResponse:
    rows = selection.winner_prob_sweep(
        params=_design(req), Cs=req.Cs, rho_xy=req.rho_xy, rho_xs=req.rho_xs,
        rho_ys_list=req.rho_ys_list, cx_grid=req.cx_grid)
    return models.WinnerSweepResponse(rows=[
        models.WinnerSweepRow(scenario=p.scenario, rho_ys=p.rho_ys, Cx=p.Cx,
                              w=p.w, w1=p.w1, w2=p.w2)
        for p in rows
    ])


def alpha_exact_levels(req: models.AlphaExactRequest) -> models.AlphaExactResponse:
    geom = _geometry(req)
    if not req.w_grid:
        raise InvalidParameterError("w_grid must be nonempty")
    return models.AlphaExactResponse(rows=[
        models.AlphaExactRow(w=w, alphaE=alpha_exact.solve_alpha_e(geom, w))
        for w in req.w_grid
    ])


def adjust_p(req: models.AdjustPRequest) -> models.AdjustPResponse:
    p1a = combination.adjust_p1(req.p1s, req.w, req.r)
    return models.AdjustPResponse(p1s=req.p1s, w=req.w, r=req.r, p1a=p1a)


def combine(req: models.CombineRequest) -> models.CombineResponse:
    p_c = combination.combination_p(req.p1a, req.p2s, req.s)
    return models.CombineResponse(p1a=req.p1a, p2s=req.p2s, s=req.s, p_c=p_c)


def alpha_combo(req: models.AlphaComboRequest) -> models.AlphaComboResponse:
    geom = _geometry(req)
    if not req.w_grid:
        raise InvalidParameterError("w_grid must be nonempty")
    return models.AlphaComboResponse(rows=[
        models.AlphaComboRow(
            w=w, method=req.method,
            alpha_c=combination.alpha_c(w, geom, req.grid_n, req.method))
        for w in req.w_grid
    ])


def alpha_sweep(req: models.AlphaSweepRequest) -> models.AlphaSweepResponse:
    geom = _geometry(req)
    rows = combination.alpha_level_sweep(geom, req.w_grid, req.grid_n)
    return models.AlphaSweepResponse(rows=[
        models.AlphaSweepRow(w=p.w, alphaE=p.alpha_e, alphaC=p.alpha_c,
                             alphaC_dunnett=p.alpha_c_dunnett,
                             alphaC_sidak=p.alpha_c_sidak)
        for p in rows
    ])


def estimate_corr(req: models.EstimateCorrRequest) -> models.EstimateCorrResponse:
    if req.method == "subgroup":
        if not req.subgroups:
            raise InvalidParameterError("subgroup method requires subgroup rows")
        table = [correlation.SubgroupEffect(r.variable, r.subgroup, r.effect1, r.effect2)
                 for r in req.subgroups]
        est = correlation.modified_pearson(table)
        return models.EstimateCorrResponse(
            estimate=est, ci_low=None, ci_high=None, method="subgroup", n_resamples=0)
    if not req.patients:
        raise InvalidParameterError("bootstrap method requires patient rows")
    records = [correlation.PatientRecord(arm=r.arm, response=r.response, ae=r.ae,
                                         time=r.time, event=r.event)
               for r in req.patients]
    strata = [r.stratum or "" for r in req.patients] if req.use_strata else None
    result = correlation.bootstrap_corr(
        records, stat1=req.stat1, stat2=req.stat2, B=req.B,
        strata=strata, seed=req.seed)
    return models.EstimateCorrResponse(
        estimate=result.estimate, ci_low=result.ci_low, ci_high=result.ci_high,
        method="bootstrap", n_resamples=result.n_resamples)


def simulate(req: models.SimulateRequest) -> models.SimulateResponse:
    if req.target == "w":
        est = montecarlo.simulate_w(
            _design(req), _rule(req), _corr(req),
            mode=req.mode, n=req.n, seed=req.seed, r=req.r)
    elif req.target == "type1-abstract":
        geom = _geometry(req)
        w = req.w
        if w is None:
            raise InvalidParameterError("type1-abstract requires w")
        alpha_e = req.alphaE if req.alphaE is not None else alpha_exact.solve_alpha_e(geom, w)
        est = montecarlo.simulate_type1_abstract(w, geom, alpha_e, n=req.n, seed=req.seed)
    else:
        est = montecarlo.simulate_type1_full(
            _design(req), _rule(req), _corr(req), _geometry(req),
            test=req.test, n=req.n, seed=req.seed)
    return models.SimulateResponse(value=est.value, std_error=est.std_error,
                                   n=est.n, seed=est.seed)
