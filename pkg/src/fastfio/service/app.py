"""FastAPI application exposing experiments and operator application."""

from __future__ import annotations

import threading
import time
import uuid
import warnings

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response

from .. import __version__, experiments, persistence
from ..evaluator import FioOperator, apply_adjoint, apply_forward, build_operator
from ..phases import builtin
from ..separation import NotCertifiedWarning
from .models import (
    ApplyRequest,
    ApplyResponse,
    ExperimentRequest,
    ExperimentResponse,
    Field2D,
    OperatorInfo,
    OperatorRequest,
)


def _field_in(data: Field2D, n: int) -> np.ndarray:
    re = np.asarray(data.real, dtype=np.float64)
    im = np.zeros_like(re) if data.imag is None else np.asarray(data.imag, dtype=np.float64)
    if re.shape != (n, n) or im.shape != (n, n):
        raise HTTPException(422, f"field must be {n} x {n}")
    return re + 1j * im


def _field_out(values: np.ndarray) -> Field2D:
    return Field2D(real=values.real.tolist(), imag=values.imag.tolist())


def _info(key: str, op: FioOperator) -> OperatorInfo:
    return OperatorInfo(
        id=key,
        n=op.n,
        epsilon=op.epsilon,
        method=op.method,
        nufft_preset=op.nufft_preset,
        ranks=op.ranks,
        certified=op.certified,
        stored_bytes=op.stored_bytes,
        build_seconds=op.build_seconds,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="fastfio", version=__version__)
    operators: dict[str, FioOperator] = {}
    lock = threading.Lock()

    def lookup(op_id: str) -> FioOperator:
        with lock:
            op = operators.get(op_id)
        if op is None:
            raise HTTPException(404, f"unknown operator {op_id!r}")
        return op

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/experiments")
    def list_experiments() -> list[str]:
        return list(experiments.EXPERIMENTS)

    @app.post("/experiments/{name}", response_model=ExperimentResponse)
    def run_experiment(name: str, req: ExperimentRequest):
        if name not in experiments.RUNNERS:
            raise HTTPException(404, f"unknown experiment {name!r}")
        try:
            result = experiments.run(name, req.config, seed=req.seed, threads=req.threads, out=req.out)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(422, str(exc)) from exc
        return ExperimentResponse(**result.to_dict())

    @app.post("/operators", response_model=OperatorInfo)
    def create_operator(req: OperatorRequest):
        if req.n % 2:
            raise HTTPException(422, "n must be even")
        try:
            phase, amp = builtin(req.phase.name, req.phase.params)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotCertifiedWarning)
                op = build_operator(
                    phase, amp, req.n, epsilon=req.epsilon, method=req.method, seed=req.seed,
                    nufft_preset=req.nufft_preset, threads=req.threads,
                )
        except (ValueError, KeyError) as exc:
            raise HTTPException(422, str(exc)) from exc
        key = uuid.uuid4().hex
        with lock:
            operators[key] = op
        return _info(key, op)

    @app.get("/operators/{op_id}", response_model=OperatorInfo)
    def get_operator(op_id: str):
        return _info(op_id, lookup(op_id))

    @app.delete("/operators/{op_id}")
    def delete_operator(op_id: str):
        lookup(op_id)
        with lock:
            operators.pop(op_id, None)
        return {"deleted": op_id}

    @app.post("/operators/{op_id}/apply", response_model=ApplyResponse)
    def apply_operator(op_id: str, req: ApplyRequest):
        op = lookup(op_id)
        f = _field_in(req.field, op.n)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotCertifiedWarning)
            out = (apply_adjoint if req.adjoint else apply_forward)(op, f, req.threads)
        return ApplyResponse(field=_field_out(out), seconds=time.perf_counter() - t0)

    @app.get("/operators/{op_id}/factorization")
    def download_factorization(op_id: str):
        op = lookup(op_id)
        if op.method != "randomized":
            raise HTTPException(409, "only skeleton factorizations can be stored")
        return Response(persistence.dumps(op.kernels, op.n), media_type="application/octet-stream")

    return app
