"""``fio`` command line: a thin client of the HTTP service.

Without ``--server`` the service runs in process; with ``--server URL`` the
request goes to a running ``fio serve``.  Records are printed to stdout as
JSON lines and the exit status is nonzero when an experiment fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import EXPERIMENTS, load_config

DEFAULT_TIMEOUT = 3600.0


def _threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("FIO_THREADS")
    return max(1, int(env)) if env else 1


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=DEFAULT_TIMEOUT)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fio", description="Fast Fourier integral operator experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None, help="worker cap (default: $FIO_THREADS or 1)")
        p.add_argument("--out", default=None, help="output directory for reports and files")
        p.add_argument("--server", default=None, help="URL of a running service")
    p = sub.add_parser("serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"fio: {exc}", file=sys.stderr)
        return 2
    body = {"config": cfg, "seed": args.seed, "threads": _threads(args.threads), "out": args.out}
    with _client(args.server) as client:
        resp = client.post(f"/experiments/{args.command}", json=body)
    if resp.status_code != 200:
        detail = resp.json().get("detail", resp.text) if resp.headers.get("content-type", "").startswith("application/json") else resp.text
        print(f"fio: {detail}", file=sys.stderr)
        return 2
    result = resp.json()
    for rec in result["records"]:
        print(json.dumps(rec, sort_keys=True))
    return 0 if result["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
