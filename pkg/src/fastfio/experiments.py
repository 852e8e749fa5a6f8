"""Benchmark and verification experiments driven by one JSON config.

Config fields: ``n`` (int or list), ``epsilon`` (float or list) or ``p``
(float or list, meaning ``epsilon = N^-p``), ``phase`` ({name, params}),
``method``, ``seed``, ``nufft_preset``, ``samples_s``, ``output_dir``.
Each experiment returns a list of flat JSON-serializable records and an
overall pass flag.
"""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import persistence
from .evaluator import (
    FioOperator,
    apply_adjoint,
    apply_forward,
    build_operator,
    direct_adjoint_hat,
    direct_at,
    sample_points,
    sampled_relative_error,
    wavefront_experiment,
)
from .grid import dft_forward, spatial_points
from .nufft import PRESET_ACCURACY, make_plan, nudft_type1, nudft_type2, nufft_type1, nufft_type2, warmup
from .phases import builtin
from .separation import NotCertifiedWarning, SeparationConfig, sampled_error, separate_partition
from .wedges import build_partition

EXPERIMENTS = ("check-separation", "check-rank", "bench", "bench-adjoint", "wavefront", "nufft-test")
TIMING_FIELDS = ("preprocess_seconds", "eval_seconds", "direct_seconds", "direct_seconds_extrapolated", "speedup")
RANK_GROWTH_LIMIT = 1.6


@dataclass
class ExperimentResult:
    experiment: str
    records: list = field(default_factory=list)
    ok: bool = True
    files: list = field(default_factory=list)

    def to_dict(self):
        return {"experiment": self.experiment, "ok": self.ok, "records": self.records, "files": self.files}


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _as_list(v):
    if v is None:
        return []
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _phase_of(cfg):
    spec = cfg.get("phase") or {"name": "ellipse+"}
    if isinstance(spec, str):
        spec = {"name": spec}
    return spec.get("name", "ellipse+"), dict(spec.get("params") or {})


def _eps_list(cfg, n, default=None):
    if "epsilon" in cfg and cfg["epsilon"] is not None:
        return [(float(e), None) for e in _as_list(cfg["epsilon"])]
    if "p" in cfg and cfg["p"] is not None:
        return [(float(n) ** -float(p), float(p)) for p in _as_list(cfg["p"])]
    if default is not None:
        return [(default(n), None)]
    raise ValueError("config needs epsilon or p")


def _out_dir(cfg, out):
    d = out or cfg.get("output_dir")
    if d:
        Path(d).mkdir(parents=True, exist_ok=True)
    return d


def _validate(cfg):
    for key in ("n",):
        if key not in cfg:
            raise ValueError(f"config is missing {key!r}")
    for n in _as_list(cfg["n"]):
        if not isinstance(n, int) or n < 4 or n % 2:
            raise ValueError(f"invalid grid side {n!r}")
    method = cfg.get("method", "randomized")
    if method not in ("randomized", "deterministic"):
        raise ValueError(f"unknown method {method!r}")


def _sep_config(cfg, eps, seed):
    return SeparationConfig(epsilon=eps, seed=seed)


def _round(v, digits=6):
    return float(f"{v:.{digits}g}")


# --------------------------------------------------------------------------


def check_separation(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    _validate(cfg)
    name, params = _phase_of(cfg)
    phase, amp = builtin(name, params)
    s = int(cfg.get("samples_s", 200))
    res = ExperimentResult("check-separation")
    for n in _as_list(cfg["n"]):
        part = build_partition(n)
        for eps, p in _eps_list(cfg, n):
            t0 = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotCertifiedWarning)
                kernels = separate_partition(phase, amp, part, _sep_config(cfg, eps, seed), cfg.get("method", "randomized"), threads)
            elapsed = time.perf_counter() - t0
            errs = [sampled_error(k, phase, amp, part[k.ell], s=s, seed=seed) for k in kernels]
            ok = max(errs) <= eps
            res.ok &= ok
            res.records.append(
                {
                    "experiment": "check-separation",
                    "n": n,
                    "epsilon": eps,
                    "p": p,
                    "phase": name,
                    "ranks": [k.rank for k in kernels],
                    "samples": [k.samples for k in kernels],
                    "errors": [_round(e) for e in errs],
                    "max_error": _round(max(errs)),
                    "pass": bool(ok),
                    "preprocess_seconds": round(elapsed, 4),
                }
            )
    return res


def check_rank(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    _validate(cfg)
    name, params = _phase_of(cfg)
    phase, amp = builtin(name, params)
    ps = _as_list(cfg.get("p", [1, 2, 3]))
    res = ExperimentResult("check-rank")
    table = {}
    for n in _as_list(cfg["n"]):
        part = build_partition(n)
        for p in ps:
            eps = float(n) ** -float(p)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotCertifiedWarning)
                kernels = separate_partition(phase, amp, part, _sep_config(cfg, eps, seed), cfg.get("method", "randomized"), threads)
            ranks = [k.rank for k in kernels]
            table[(n, float(p))] = max(ranks)
            res.records.append(
                {"experiment": "check-rank", "n": n, "p": float(p), "epsilon": eps, "phase": name, "ranks": ranks, "max_rank": max(ranks)}
            )
    ns = sorted(_as_list(cfg["n"]))
    for a, b in zip(ns, ns[1:]):
        for p in ps:
            ratio = table[(b, float(p))] / table[(a, float(p))]
            ok = ratio <= RANK_GROWTH_LIMIT if b == 2 * a else True
            res.ok &= ok
            res.records.append(
                {"experiment": "check-rank-growth", "n_from": a, "n_to": b, "p": float(p), "ratio": _round(ratio), "limit": RANK_GROWTH_LIMIT, "pass": bool(ok)}
            )
    return res


def white_noise(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), int(n), 7])
    return rng.standard_normal((n, n)) + 0j


def _bench_one(cfg, n, eps, seed, threads, out, adjoint: bool):
    name, params = _phase_of(cfg)
    phase, amp = builtin(name, params)
    s = int(cfg.get("samples_s", 100))
    op = build_operator(
        phase, amp, n, epsilon=eps, method=cfg.get("method", "randomized"), seed=seed,
        nufft_preset=cfg.get("nufft_preset", "six_digit"), threads=threads,
    )
    f = white_noise(n, seed)
    warmup()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        t0 = time.perf_counter()
        fast = (apply_adjoint if adjoint else apply_forward)(op, f, threads)
        t_eval = time.perf_counter() - t0
    if adjoint:
        cols = sample_points(n, s, seed)
        t0 = time.perf_counter()
        exact = direct_adjoint_hat(phase, amp, f, cols)
        t_dir = time.perf_counter() - t0
        got = dft_forward(fast).ravel()[cols]
        err = float(np.linalg.norm(exact - got) / np.linalg.norm(exact))
        count = len(cols)
    else:
        rows = sample_points(n, s, seed)
        t0 = time.perf_counter()
        direct_at(phase, amp, f, rows)
        t_dir = time.perf_counter() - t0
        err = sampled_relative_error(fast, phase, amp, f, s=s, seed=seed)
        count = len(rows)
    extrapolated = t_dir * (n * n) / count
    rec = {
        "experiment": "bench-adjoint" if adjoint else "bench",
        "n": n,
        "epsilon": eps,
        "phase": name,
        "amplitude": params.get("amplitude", "one"),
        "nufft_preset": op.nufft_preset,
        "ranks": op.ranks,
        "max_rank": max(op.ranks),
        "certified": op.certified,
        "relative_error": _round(err),
        "pass": bool(err <= eps),
        "storage_bytes": len(persistence.dumps(op.kernels, n)) if op.method == "randomized" else op.stored_bytes,
        "preprocess_seconds": round(op.build_seconds, 4),
        "eval_seconds": round(t_eval, 4),
        "direct_seconds": round(t_dir, 4),
        "direct_seconds_extrapolated": round(extrapolated, 4),
        "speedup": round(extrapolated / t_eval, 4),
    }
    files = []
    if out and op.method == "randomized" and not adjoint:
        path = os.path.join(out, f"factorization_n{n}.bin")
        persistence.save_factorization(path, op.kernels, n)
        files.append(path)
    return rec, files


def _bench(cfg, seed, threads, out, adjoint):
    _validate(cfg)
    out = _out_dir(cfg, out)
    res = ExperimentResult("bench-adjoint" if adjoint else "bench")
    for n in _as_list(cfg["n"]):
        for eps, p in _eps_list(cfg, n, default=lambda m: 10.0 / m**2):
            rec, files = _bench_one(cfg, n, eps, seed, threads, out, adjoint)
            rec["p"] = p
            res.ok &= rec["pass"]
            res.records.append(rec)
            res.files += files
    return res


def bench(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    return _bench(cfg, seed, threads, out, adjoint=False)


def bench_adjoint(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    return _bench(cfg, seed, threads, out, adjoint=True)


# --------------------------------------------------------------------------
# wavefront images


def write_pgm(path, values) -> None:
    """8-bit binary PGM of ``values`` scaled by the image maximum."""
    a = np.asarray(values, dtype=np.float64)
    top = a.max() if a.size else 0.0
    img = np.zeros(a.shape, dtype=np.uint8) if top <= 0 else np.round(255 * a / top).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def singular_inputs(n: int, seed: int = 0) -> dict:
    x = spatial_points(n).reshape(n, n, 2)
    disk = (np.hypot(x[..., 0] - 0.5, x[..., 1] - 0.5) <= 0.25).astype(float)
    t = np.linspace(0.0, 1.0, 4 * n)
    seg = np.zeros((n, n))
    i = np.round((0.3 + 0.4 * t) * n).astype(int) % n
    j = np.round((0.35 + 0.3 * t) * n).astype(int) % n
    seg[i, j] = 1.0
    pts = np.zeros((n, n))
    rng = np.random.default_rng([int(seed), int(n), 11])
    k = rng.integers(n // 8, n - n // 8, size=(5, 2))
    pts[k[:, 0], k[:, 1]] = 1.0
    return {"disk": disk, "segment": seg, "points": pts}


def wavefront(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    _validate(cfg)
    out = _out_dir(cfg, out) or "."
    name, params = _phase_of(cfg if "phase" in cfg else {"phase": {"name": "circle"}})
    phase, amp = builtin(name, params)
    res = ExperimentResult("wavefront")
    for n in _as_list(cfg["n"]):
        for eps, _ in _eps_list(cfg, n, default=lambda m: 10.0 / m**2):
            op = build_operator(phase, amp, n, epsilon=eps, seed=seed, nufft_preset=cfg.get("nufft_preset", "six_digit"), threads=threads)
            for label, f in singular_inputs(n, seed).items():
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", NotCertifiedWarning)
                    lf, llf = wavefront_experiment(op, f + 0j, threads)
                names = {}
                for tag, img in (("f", np.abs(f)), ("Lf", np.abs(lf)), ("LsLf", np.abs(llf))):
                    path = os.path.join(out, f"wavefront_{label}_n{n}_{tag}.pgm")
                    write_pgm(path, img)
                    names[tag] = path
                    res.files.append(path)
                res.records.append(
                    {
                        "experiment": "wavefront", "n": n, "epsilon": eps, "phase": name, "input": label,
                        "norm_f": _round(float(np.linalg.norm(f))),
                        "norm_Lf": _round(float(np.linalg.norm(lf))),
                        "norm_LsLf": _round(float(np.linalg.norm(llf))),
                        "images": names,
                    }
                )
    return res


# --------------------------------------------------------------------------


def nufft_test(cfg, seed=0, threads=1, out=None) -> ExperimentResult:
    instances = int(cfg.get("instances", 20))
    shapes = cfg.get("shapes") or [[32, 32], [17, 40]]
    n_targets = int(cfg.get("targets", 500))
    presets = _as_list(cfg.get("nufft_preset")) or ["six_digit", "eleven_digit"]
    rng = np.random.default_rng([int(seed), 3])
    res = ExperimentResult("nufft-test")
    for preset in presets:
        worst2 = worst1 = 0.0
        for i in range(instances):
            shape = tuple(shapes[i % len(shapes)])
            offset = tuple(int(v) for v in rng.integers(-20, 20, size=2))
            plan = make_plan(*shape, preset=preset)
            c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            y = rng.random((n_targets, 2)) * 2 - 0.5
            v = rng.standard_normal(n_targets) + 1j * rng.standard_normal(n_targets)
            e2 = np.abs(nufft_type2(c, y, plan, offset) - nudft_type2(c, y, offset)).max() / np.abs(c).sum()
            e1 = np.abs(nufft_type1(v, y, plan, offset) - nudft_type1(v, y, shape, offset)).max() / np.abs(v).sum()
            worst2, worst1 = max(worst2, e2), max(worst1, e1)
        target = PRESET_ACCURACY[preset]
        ok = worst2 <= target and worst1 <= target
        res.ok &= ok
        res.records.append(
            {"experiment": "nufft-test", "preset": preset, "instances": instances, "type2_max_error": _round(worst2), "type1_max_error": _round(worst1), "target": target, "pass": bool(ok)}
        )
    return res


RUNNERS = {
    "check-separation": check_separation,
    "check-rank": check_rank,
    "bench": bench,
    "bench-adjoint": bench_adjoint,
    "wavefront": wavefront,
    "nufft-test": nufft_test,
}


def run(name: str, cfg: dict, seed: int | None = None, threads: int = 1, out=None) -> ExperimentResult:
    if name not in RUNNERS:
        raise ValueError(f"unknown experiment {name!r}")
    if seed is None:
        seed = int(cfg.get("seed", 0))
    result = RUNNERS[name](cfg, seed=seed, threads=max(1, int(threads)), out=out)
    out_dir = _out_dir(cfg, out)
    if out_dir:
        path = os.path.join(out_dir, f"{name}.jsonl")
        with open(path, "w") as fh:
            for rec in result.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        result.files.append(path)
    return result


def strip_timings(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in TIMING_FIELDS}
