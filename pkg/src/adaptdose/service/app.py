"""FastAPI application exposing the design calculations over HTTP.

All endpoints are stateless POSTs with JSON bodies. Core errors map to
a stable status/kind scheme that clients (including the bundled CLI)
translate into exit codes:

* 422 kind=validation — parameter outside its domain,
* 409 kind=numeric    — non-PSD correlation, bracketing failure,
* 400 kind=data       — malformed or degenerate input data.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import DataError, InvalidParameterError, NumericError
from . import handlers, models

app = FastAPI(
    title="adaptdose",
    version=__version__,
    description="Design quantities for adaptive phase 2/3 trials with dose selection",
)


@app.exception_handler(InvalidParameterError)
async def _invalid_parameter(_: Request, exc: InvalidParameterError) -> JSONResponse:
    return JSONResponse(status_code=422,
                        content={"detail": str(exc), "kind": "validation"})


@app.exception_handler(NumericError)
async def _numeric(_: Request, exc: NumericError) -> JSONResponse:
    return JSONResponse(status_code=409,
                        content={"detail": str(exc), "kind": "numeric"})


@app.exception_handler(DataError)
async def _data(_: Request, exc: DataError) -> JSONResponse:
    return JSONResponse(status_code=400,
                        content={"detail": str(exc), "kind": "data"})


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/winner-prob", response_model=models.WinnerProbResponse)
def winner_prob(req: models.WinnerProbRequest):
    return handlers.winner_prob(req)


@app.post("/fig3", response_model=models.WinnerSweepResponse)
def fig3(req: models.WinnerSweepRequest):
    return handlers.winner_sweep(req)


@app.post("/alpha-exact", response_model=models.AlphaExactResponse)
def alpha_exact(req: models.AlphaExactRequest):
    return handlers.alpha_exact_levels(req)


@app.post("/adjust-p", response_model=models.AdjustPResponse)
def adjust_p(req: models.AdjustPRequest):
    return handlers.adjust_p(req)


@app.post("/combine", response_model=models.CombineResponse)
def combine(req: models.CombineRequest):
    return handlers.combine(req)


@app.post("/alpha-combo", response_model=models.AlphaComboResponse)
def alpha_combo(req: models.AlphaComboRequest):
    return handlers.alpha_combo(req)


@app.post("/fig4", response_model=models.AlphaSweepResponse)
def fig4(req: models.AlphaSweepRequest):
    return handlers.alpha_sweep(req)


@app.post("/estimate-corr", response_model=models.EstimateCorrResponse)
def estimate_corr(req: models.EstimateCorrRequest):
    return handlers.estimate_corr(req)


@app.post("/simulate", response_model=models.SimulateResponse)
def simulate(req: models.SimulateRequest):
    return handlers.simulate(req)
