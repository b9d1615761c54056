"""Command-line front end.

The CLI is a thin client over the HTTP service: every subcommand posts
the problem document to the corresponding endpoint and writes the
returned report.  By default the service runs in-process; --server
points the same client at a remote instance.

Exit codes: 0 completed, 2 validation/precondition failure, 3 bad
input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _parse_vector(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise SystemExit(f"error: {flag} expects comma-separated numbers, "
                         f"got {text!r}")


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise SystemExit(f"error: --set expects key=value, got {pair!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whopt",
        description="Existence analysis for weakly homogeneous "
                    "optimization problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("problem", help="path to a problem JSON file")
        sp.add_argument("--out", help="report path "
                                      "(default <problem>.<command>.json)")
        sp.add_argument("--seed", type=int, help="override the file's seed")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration default "
                             "(repeatable); keys match the echoed config")
        sp.add_argument("--server", help="base URL of a running service "
                                         "(default: run in-process)")
        sp.add_argument("--jobs", type=int, default=1,
                        help="worker cap handed to the modules")

    sp = sub.add_parser("validate", help="homogeneity, remainder, "
                                         "asymptotic-cone, and convexity "
                                         "checks")
    add_common(sp)

    sp = sub.add_parser("kernel", help="kernel of the asymptotic problem")
    add_common(sp)
    sp.add_argument("--alpha-override", help="use this degree instead of "
                                             "the file's (rational like 5/2)")
    sp.add_argument("--h", help="use this homogeneous term (infix, e.g. "
                                "'x1*x2') instead of the file's")

    sp = sub.add_parser("certify", help="existence certificates")
    add_common(sp)

    sp = sub.add_parser("solve", help="expanding-truncation solve")
    add_common(sp)
    sp.add_argument("--u", help="linear shift, comma-separated (f - <u,x>)")

    sp = sub.add_parser("parametric", help="sweep a grid of linear shifts")
    add_common(sp)
    sp.add_argument("--grid", required=True,
                    help="axes separated by ';', each a comma list or "
                         "lo:hi:count, e.g. '-2,-1,0,1;-1:1:3'")
    sp.add_argument("--csv", help="also write a CSV matrix here")

    sp = sub.add_parser("probe-usc", help="local boundedness of the "
                                          "solution map around a shift")
    add_common(sp)
    sp.add_argument("--center", required=True,
                    help="ball center, comma-separated")
    sp.add_argument("--radius", required=True, type=float)
    sp.add_argument("--samples", type=int, default=16)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return parser


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # the in-process client pulls in starlette's test client, which
        # warns about its transport backend on some installs
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _payload(args) -> dict:
    path = Path(args.problem)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: {path} is not valid JSON: {exc}")
    payload = {"problem": document, "label": path.stem}
    if args.seed is not None:
        payload["seed"] = args.seed
    overrides = _parse_overrides(args.set)
    if overrides:
        payload["overrides"] = overrides
    return payload


def _verdict_line(command: str, label: str, report: dict) -> str:
    if command == "validate":
        total = len(report["verdicts"])
        passed = sum(1 for v in report["verdicts"] if v["passed"])
        return f"validate {label}: {report['status']} " \
               f"({passed}/{total} checks passed)"
    if command == "kernel":
        k = report["kernel"]
        return f"kernel {label}: {k['classification']} " \
               f"(mu={k['mu']}, {len(k['rays'])} rays)"
    if command == "certify":
        if report["status"] != "ok":
            return f"certify {label}: validation_failure"
        head = report["headline"]
        return f"certify {label}: {head['kind']} ({head['conclusion']})"
    if command == "solve":
        s = report["solve"]
        if s["x"] is None:
            return f"solve {label}: {s['status']}"
        extra = ""
        if s["status"] == "Escaping":
            extra = f" escape direction {s['direction']}"
        return f"solve {label}: {s['status']} value={s['value']} " \
               f"x={s['x']} ({len(s['trace'])} truncations){extra}"
    if command == "parametric":
        summary = report["summary"]
        return f"parametric {label}: {report['grid']['points']} shifts, " \
               f"{summary['kernel_certified']} kernel-certified, " \
               f"{summary['certified']} certified, " \
               f"{summary['converged']} converged"
    if command == "probe-usc":
        probe = report["probe"]
        if probe["unbounded"]:
            return f"probe-usc {label}: UNBOUNDED (an escaping sample)"
        sup = probe["sup_norm"]
        return f"probe-usc {label}: sup solution norm {sup} over " \
               f"{len(probe['samples'])} shifts" + \
               ("" if probe["all_converged"] else " (incomplete: "
                                                  "indeterminate samples)")
    return f"{command} {label}: {report.get('status', 'ok')}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    payload = _payload(args)
    endpoint = "/" + args.command
    if args.command == "kernel":
        if args.alpha_override is not None:
            payload["alpha_override"] = args.alpha_override
        if args.h is not None:
            payload["h"] = args.h
    elif args.command == "solve":
        if args.u is not None:
            payload["u"] = _parse_vector(args.u, "--u")
    elif args.command == "parametric":
        payload["grid"] = args.grid
    elif args.command == "probe-usc":
        payload["center"] = _parse_vector(args.center, "--center")
        payload["radius"] = args.radius
        payload["samples"] = args.samples

    label = payload["label"]
    with _client(args.server) as client:
        response = client.post(endpoint, json=payload)
    if response.status_code == 422:
        detail = response.json().get("detail")
        print(f"error: bad input: {detail}", file=sys.stderr)
        return 3
    if response.status_code == 409:
        detail = response.json().get("detail", {})
        if isinstance(detail, dict):
            print(f"{args.command} {label}: "
                  f"{detail.get('type')}: {detail.get('message')}",
                  file=sys.stderr)
        else:
            print(f"{args.command} {label}: {detail}", file=sys.stderr)
        return 2
    response.raise_for_status()
    report = response.json()["report"]

    from .runner import finalize_report, sweep_csv

    out = Path(args.out) if args.out else \
        Path(f"{label}.{args.command}.json")
    out.write_text(finalize_report(report), encoding="utf-8")
    if args.command == "parametric" and args.csv:
        Path(args.csv).write_text(sweep_csv(report), encoding="utf-8")
    print(f"{_verdict_line(args.command, label, report)} -> {out}")
    return 0 if report.get("status") == "ok" else 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
