"""Request and response schemas for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class ExperimentRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    threads: int = Field(1, ge=1)
    out: Optional[str] = None


class ExperimentResponse(BaseModel):
    experiment: str
    ok: bool
    records: list[dict[str, Any]]
    files: list[str] = Field(default_factory=list)


class PhaseRef(BaseModel):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class OperatorRequest(BaseModel):
    phase: PhaseRef
    n: int = Field(..., ge=4)
    epsilon: float = Field(1e-3, gt=0, le=1)
    method: Literal["randomized", "deterministic"] = "randomized"
    seed: int = 0
    nufft_preset: Literal["six_digit", "eleven_digit"] = "six_digit"
    threads: int = Field(1, ge=1)


class OperatorInfo(BaseModel):
    id: str
    n: int
    epsilon: float
    method: str
    nufft_preset: str
    ranks: list[int]
    certified: bool
    stored_bytes: int
    build_seconds: float


class Field2D(BaseModel):
    """Complex ``n x n`` array split into real and imaginary parts."""

    real: list[list[float]]
    imag: Optional[list[list[float]]] = None


class ApplyRequest(BaseModel):
    field: Field2D
    adjoint: bool = False
    threads: int = Field(1, ge=1)


class ApplyResponse(BaseModel):
    field: Field2D
    seconds: float
