"""Command-line front end: ``gapcert <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 a checked inequality failed
or a certificate is invalid, 4 memory budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .certify import (
    LATTICE_KINDS,
    delta_model_from_spec,
    pvbs_bound,
    pvbs_certify,
    pvbs_delta,
    recursion_bound,
    schedule_from_name,
    threshold_check,
)
from .delta import (
    delta_exact,
    delta_k_table,
    random_projector,
    verify_gap_to_delta,
    verify_projector_inequality,
    verify_quasi_factorization,
)
from .dl import (
    build_dl_operator,
    gamma_contraction,
    split_MA_MB,
    verify_converse_dl,
    verify_dl,
    verify_sandwich,
)
from .errors import BudgetExceededError, GapcertError
from .lattice import Region
from .models import builtin_model, load_model
from .spectral import assemble, check_frustration_free, default_tol, spectral_gap

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_BUDGET = 0, 2, 3, 4
OUTPUT_SCHEMA = 1
log = logging.getLogger("gapcert")


class ConfigError(GapcertError, ValueError):
    pass


# -- argument helpers ----------------------------------------------------


def parse_range(text: str) -> list[int]:
    """``2..8`` (inclusive) or ``2,4,6``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise ConfigError(f"bad integer range {text!r}") from None


def parse_region(text: str, dim: int) -> Region:
    """``0..4`` (1D interval), ``0,0..2,3`` (box corners) or a JSON region literal / file."""
    text = text.strip()
    if text.startswith("{"):
        return Region.from_json(json.loads(text))
    if text.endswith(".json"):
        return Region.from_json(json.loads(Path(text).read_text()))
    try:
        lo, hi = text.split("..")
        lo_c = [int(x) for x in lo.split(",")]
        hi_c = [int(x) for x in hi.split(",")]
    except ValueError:
        raise ConfigError(f"bad region {text!r}; use a..b, x0,y0..x1,y1 or a JSON literal") from None
    if len(lo_c) != dim or len(hi_c) != dim:
        raise ConfigError(f"region {text!r} is not {dim}-dimensional")
    return Region.box(lo_c, hi_c)


def sized_region(n: int, dim: int) -> Region:
    """n sites per side, anchored at the origin."""
    return Region.box([0] * dim, [n - 1] * dim)


def load_hamiltonian(args):
    if getattr(args, "model_file", None):
        return load_model(args.model_file)
    params = {}
    for item in args.param or []:
        key, _, val = item.partition("=")
        params[key] = int(val) if val.lstrip("-").isdigit() else val
    return builtin_model(args.model, params)


def _emit(args, payload, *, csv_text: str | None = None):
    if csv_text is not None and args.format == "csv":
        text = csv_text
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, Region):
        return v.to_json()
    raise TypeError(f"cannot serialize {type(v)}")


def _envelope(args, command: str, **body) -> dict:
    return {"schema_version": OUTPUT_SCHEMA, "command": command, "seed": getattr(args, "seed", None), **body}


# -- commands ------------------------------------------------------------


def cmd_model_validate(args) -> int:
    H = load_hamiltonian(args)
    rows = []
    ok = True
    for n in parse_range(args.sizes):
        region = sized_region(n, H.dim)
        ff = check_frustration_free(H, region, tol=args.tol)
        ok &= ff
        rows.append({"n": n, "sites": len(region), "terms": len(H.restrict(region)), "frustration_free": ff})
    _emit(args, _envelope(args, "model validate", model=H.name, dim=H.dim, local_dim=H.local_dim,
                          range=H.range, projector_terms=True, tolerance=args.tol, sizes=rows, passed=ok))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_gap(args) -> int:
    H = load_hamiltonian(args)
    rows = []
    for n in parse_range(args.sizes):
        op = assemble(H, sized_region(n, H.dim))
        rep = spectral_gap(op)
        rows.append({"n": n, "dim": op.dim, "gap": rep.gap, "degeneracy": rep.ground_degeneracy,
                     "tol": default_tol(op), "method": "dense-eigh" if op.is_dense else "lobpcg"})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["n", "dim", "gap", "degeneracy", "tol", "method"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "gap": repr(r["gap"]), "tol": repr(r["tol"])})
    _emit(args, _envelope(args, "gap", model=H.name, rows=rows), csv_text=buf.getvalue())
    return EXIT_OK


def cmd_delta(args) -> int:
    H = load_hamiltonian(args)
    if args.table:
        sched = schedule_from_name(args.schedule)
        table = delta_k_table(H, args.k_max, sched, max_dim=args.max_dim)
        payload = _envelope(args, "delta", model=H.name, schedule=args.schedule, truncated_at=table.truncated_at,
                            rows=[r.__dict__ for r in table.rows])
        _emit(args, payload, csv_text=table.to_csv())
        return EXIT_OK
    if not (args.A and args.B):
        raise ConfigError("delta needs --A and --B, or --table")
    est = delta_exact(H, parse_region(args.A, H.dim), parse_region(args.B, H.dim))
    _emit(args, _envelope(args, "delta", model=H.name, tolerance=1e-9, **est.to_dict()))
    return EXIT_OK


def cmd_verify(args) -> int:
    kind = args.kind
    if kind == "projineq":
        reports = []
        for i in range(args.pairs):
            s = args.seed + i
            P = random_projector(args.dim_space, 1 + s % (args.dim_space - 1), seed=2 * s)
            Q = random_projector(args.dim_space, 1 + (7 * s) % (args.dim_space - 1), seed=2 * s + 1)
            reports.append(verify_projector_inequality(P, Q))
        ok = all(r.passed for r in reports)
        _emit(args, _envelope(args, "verify projineq", passed=ok, reports=[r.to_dict() for r in reports]))
        return EXIT_OK if ok else EXIT_VERIFY

    H = load_hamiltonian(args)
    if kind in ("dl", "converse", "sandwich", "gamma"):
        region = parse_region(args.region, H.dim) if args.region else sized_region(args.n, H.dim)
        L = build_dl_operator(H, region, _order(args.order))
        if kind == "gamma":
            res = gamma_contraction(H, region, L)
            ok = res.consistent
            _emit(args, _envelope(args, "verify gamma", model=H.name, gamma=res.gamma, bound=res.bound,
                                  certified=res.certified, gap=res.gap, consistent=ok, tolerance=1e-9))
            return EXIT_OK if ok else EXIT_VERIFY
        fn = {"dl": verify_dl, "converse": verify_converse_dl, "sandwich": verify_sandwich}[kind]
        rep = fn(H, region, L, samples=args.samples, seed=args.seed)
    else:
        if not (args.A and args.B):
            raise ConfigError(f"verify {kind} needs --A and --B")
        A, B = parse_region(args.A, H.dim), parse_region(args.B, H.dim)
        if kind == "qf":
            rep = verify_quasi_factorization(H, A, B, samples=args.samples, seed=args.seed)
        elif kind == "gapdelta":
            rep = verify_gap_to_delta(H, A | B, A, B)
        else:
            L = build_dl_operator(H, A | B, _order(args.order))
            pair = split_MA_MB(H, A | B, A, B, args.q, L)
            rep = pair.report
            rep.info.update(pair.trace)
    _emit(args, _envelope(args, f"verify {kind}", model=H.name, **rep.to_dict()))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _order(text):
    return None if not text else tuple(int(x) for x in text.split(","))


def cmd_certify(args) -> int:
    res = recursion_bound(args.lambda0, args.k0, schedule_from_name(args.schedule),
                          delta_model_from_spec(args.delta), dim=args.dim)
    _emit(args, _envelope(args, "certify", **res.to_dict()))
    return EXIT_OK if res.valid else EXIT_VERIFY


def cmd_pvbs(args) -> int:
    lambdas = [float(x) for x in args.lambdas.split(",")]
    body: dict = {"lambdas": lambdas}
    if args.A and args.B:
        A, B = parse_region(args.A, len(lambdas)), parse_region(args.B, len(lambdas))
        est = pvbs_delta(A, B, lambdas)
        body["delta"] = est.to_dict()
        axis = len(lambdas) - 1
        ext = lambda R: int(R.side_lengths()[axis]) if R.sites else -1  # noqa: E731
        body["case_bound"] = pvbs_bound(ext(A & B), ext(A), ext(B), lambdas[axis])
    res = pvbs_certify(lambdas, schedule_from_name(args.schedule), args.lambda0, args.k0)
    body["certificate"] = res.to_dict()
    _emit(args, _envelope(args, "pvbs", **body))
    return EXIT_OK if res.valid else EXIT_VERIFY


def cmd_threshold(args) -> int:
    if args.gaps:
        gaps = []
        for item in args.gaps.split(","):
            n, _, lam = item.partition(":")
            gaps.append((int(n), float(lam)))
        source = "given"
    else:
        H = load_hamiltonian(args)
        gaps = [(n, spectral_gap(assemble(H, sized_region(n, H.dim))).gap) for n in parse_range(args.sizes)]
        source = H.name
    rows = threshold_check(gaps, args.lattice, C=args.C, eps=args.eps)
    out = [{"n": r.n, "gap": r.gap, "thresholds": r.thresholds, "cleared": r.cleared,
            "clears_table1": r.clears_table1, "below_table1": r.below_table1} for r in rows]
    buf = io.StringIO()
    names = list(rows[0].thresholds) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "gap"] + names + [f"cleared_{k}" for k in names])
    for r in rows:
        w.writerow([r.n, repr(r.gap)] + [repr(r.thresholds[k]) for k in names] + [int(r.cleared[k]) for k in names])
    _emit(args, _envelope(args, "threshold", source=source, lattice=args.lattice, C=args.C, eps=args.eps, rows=out),
          csv_text=buf.getvalue())
    return EXIT_OK


# -- parser --------------------------------------------------------------


def _common(p, model=True):
    p.add_argument("--output", "-o", help="write results here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    if model:
        p.add_argument("--model", default="heisenberg_fm", help="builtin model name")
        p.add_argument("--model-file", help="JSON model file (overrides --model)")
        p.add_argument("--param", action="append", help="builtin parameter key=value (e.g. dim=2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapcert", description="Spectral gap verification and certification.")
    parser.add_argument("--version", action="version", version=f"gapcert {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="model utilities")
    msub = model.add_subparsers(dest="action", required=True)
    val = msub.add_parser("validate", help="projector and frustration-freeness checks")
    _common(val)
    val.add_argument("--sizes", default="2..6")
    val.add_argument("--tol", type=float, default=1e-9)
    val.set_defaults(func=cmd_model_validate)

    gap = sub.add_parser("gap", help="spectral gap sweep")
    _common(gap)
    gap.add_argument("--sizes", default="2..8")
    gap.set_defaults(func=cmd_gap)

    dlt = sub.add_parser("delta", help="δ(A,B) or a δ_k table")
    _common(dlt)
    dlt.add_argument("--A")
    dlt.add_argument("--B")
    dlt.add_argument("--table", action="store_true")
    dlt.add_argument("--k-max", type=int, default=4)
    dlt.add_argument("--schedule", default="k2")
    dlt.add_argument("--max-dim", type=int, default=4096)
    dlt.set_defaults(func=cmd_delta)

    ver = sub.add_parser("verify", help="numerical inequality checks")
    ver.add_argument("kind", choices=("dl", "converse", "sandwich", "qf", "projineq", "gapdelta", "split", "gamma"))
    _common(ver)
    ver.add_argument("--n", type=int, default=6, help="sites per side")
    ver.add_argument("--region")
    ver.add_argument("--A")
    ver.add_argument("--B")
    ver.add_argument("--q", type=int, default=1)
    ver.add_argument("--order", help="layer order, e.g. 2,1")
    ver.add_argument("--samples", type=int, default=200)
    ver.add_argument("--pairs", type=int, default=50, help="projector pairs (projineq)")
    ver.add_argument("--dim-space", type=int, default=64, help="Hilbert space dimension (projineq)")
    ver.set_defaults(func=cmd_verify)

    cert = sub.add_parser("certify", help="recursion lower bound")
    _common(cert, model=False)
    cert.add_argument("--delta", required=True, help="exponential:c=..,alpha=.. | polynomial:c=..,alpha=.. | pvbs:l1,l2 | zero")
    cert.add_argument("--schedule", default="k2")
    cert.add_argument("--lambda0", type=float, default=1.0)
    cert.add_argument("--k0", type=int)
    cert.add_argument("--dim", type=int, default=1)
    cert.set_defaults(func=cmd_certify)

    pv = sub.add_parser("pvbs", help="PVBS closed forms and certificate")
    _common(pv, model=False)
    pv.add_argument("--lambdas", required=True)
    pv.add_argument("--A")
    pv.add_argument("--B")
    pv.add_argument("--schedule", default="k2")
    pv.add_argument("--lambda0", type=float, default=1.0)
    pv.add_argument("--k0", type=int)
    pv.set_defaults(func=cmd_pvbs)

    th = sub.add_parser("threshold", help="local gap thresholds")
    _common(th)
    th.add_argument("--sizes", default="4..10")
    th.add_argument("--gaps", help="explicit n:gap list, e.g. 10:1.0,8:0.07")
    th.add_argument("--lattice", choices=LATTICE_KINDS, default="1d")
    th.add_argument("--C", type=float, default=1.0)
    th.add_argument("--eps", type=float, default=1.0)
    th.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"gapcert: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (GapcertError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"gapcert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
