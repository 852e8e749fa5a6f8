import json

import numpy as np
import pytest

from fastfio import experiments
from fastfio.experiments import read_pgm, run, strip_timings, white_noise, write_pgm
from fastfio.persistence import load_factorization


def test_check_separation_identity():
    res = run("check-separation", {"n": 16, "epsilon": 1e-6, "phase": {"name": "identity"}})
    assert res.ok
    rec = res.records[0]
    assert set(rec["ranks"]) == {1} and rec["max_error"] <= 1e-12


def test_check_separation_ellipse():
    res = run("check-separation", {"n": 32, "epsilon": [1e-2, 1e-3], "phase": "ellipse+"})
    assert res.ok and len(res.records) == 2
    for rec in res.records:
        assert rec["max_error"] <= rec["epsilon"] and rec["pass"]


def test_check_rank_identity_and_growth():
    res = run("check-rank", {"n": [16, 32], "p": [1, 2], "phase": {"name": "identity"}})
    ranks = [r["max_rank"] for r in res.records if r["experiment"] == "check-rank"]
    assert ranks == [1, 1, 1, 1]
    growth = [r for r in res.records if r["experiment"] == "check-rank-growth"]
    assert len(growth) == 2 and all(g["ratio"] == 1 for g in growth) and res.ok


def test_bench_and_files(tmp_path):
    res = run("bench", {"n": 16, "phase": {"name": "ellipse+"}, "output_dir": str(tmp_path)})
    rec = res.records[0]
    assert rec["epsilon"] == 10 / 16**2 and rec["relative_error"] <= rec["epsilon"]
    path = tmp_path / "factorization_n16.bin"
    assert path.exists() and rec["storage_bytes"] == path.stat().st_size
    n, kernels = load_factorization(path)
    assert n == 16 and [k.rank for k in kernels] == rec["ranks"]
    lines = (tmp_path / "bench.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["n"] == 16


def test_bench_adjoint():
    res = run("bench-adjoint", {"n": 16, "epsilon": 1e-3, "phase": {"name": "circle"}})
    rec = res.records[0]
    assert rec["experiment"] == "bench-adjoint" and rec["relative_error"] <= 1e-3


def test_nufft_test_experiment():
    res = run("nufft-test", {"instances": 4, "targets": 100})
    assert res.ok and {r["preset"] for r in res.records} == {"six_digit", "eleven_digit"}


def test_wavefront_images(tmp_path):
    cfg = {"n": 16, "epsilon": 1e-3, "phase": {"name": "circle"}}
    res = run("wavefront", cfg, out=str(tmp_path))
    pgms = [f for f in res.files if f.endswith(".pgm")]
    assert len(pgms) == 9
    for rec in res.records:
        assert rec["norm_Lf"] > 0
    img = read_pgm(tmp_path / "wavefront_disk_n16_f.pgm")
    assert img.shape == (16, 16) and img.max() == 255


def test_pgm_zero_image(tmp_path):
    write_pgm(tmp_path / "z.pgm", np.zeros((4, 5)))
    img = read_pgm(tmp_path / "z.pgm")
    assert img.shape == (4, 5) and not img.any()
    assert (tmp_path / "z.pgm").read_bytes().startswith(b"P5\n5 4\n255\n")


def _portable(rec):
    rec = strip_timings(rec)
    if "images" in rec:
        rec["images"] = {k: v.rsplit("/", 1)[-1] for k, v in rec["images"].items()}
    return rec


def test_deterministic_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        for name in ("bench", "wavefront", "check-separation"):
            run(name, {"n": 16, "epsilon": 1e-3, "phase": {"name": "ellipse+"}}, seed=5, out=str(d))
    for f in sorted(a.iterdir()):
        other = b / f.name
        if f.suffix == ".jsonl":
            ra = [_portable(json.loads(s)) for s in f.read_text().splitlines()]
            rb = [_portable(json.loads(s)) for s in other.read_text().splitlines()]
            assert ra == rb
        else:
            assert f.read_bytes() == other.read_bytes()


def test_white_noise_seeded():
    assert np.array_equal(white_noise(8, 1), white_noise(8, 1))
    assert not np.array_equal(white_noise(8, 1), white_noise(8, 2))


def test_invalid_configs():
    with pytest.raises(ValueError):
        run("bench", {"epsilon": 1e-3})
    with pytest.raises(ValueError):
        run("bench", {"n": 15})
    with pytest.raises(ValueError):
        run("check-separation", {"n": 16})
    with pytest.raises(ValueError):
        run("bench", {"n": 16, "method": "magic"})
    with pytest.raises(ValueError):
        run("nonsense", {"n": 16})
    assert set(experiments.RUNNERS) == set(experiments.EXPERIMENTS)
