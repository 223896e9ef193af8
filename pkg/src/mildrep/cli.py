"""Command line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import geometry, verify
from .measure import DiscreteMeasure, MeasureError
from .optimize import SearchConfig, minimize
from .potentials import (
    DomainError,
    HypothesisError,
    RadialPotential,
    convexity_radius_power_law,
)

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_FAILED = 0, 1, 2, 3
SEED_ENV = "MILDREP_SEED"

log = logging.getLogger("mildrep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_potential(text: str) -> dict:
    """``"powerlaw:a,b"`` -> ``{"kind": "powerlaw", "a": a, "b": b}``."""
    kind, _, args = text.partition(":")
    if kind.strip().lower() != "powerlaw":
        raise UsageError(f"unknown potential {text!r}; expected powerlaw:a,b")
    try:
        a, b = (float(v) for v in args.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse power law exponents from {text!r}") from exc
    return {"kind": "powerlaw", "a": a, "b": b}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma separated numbers, got {text!r}") from exc


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _merged(cfg: dict, section: str, args: argparse.Namespace, keys: dict) -> dict:
    """Section of the config file overridden by any flag that was given."""
    out = dict(cfg.get(section, {}))
    for flag, key in keys.items():
        val = getattr(args, flag, None)
        if val is not None:
            out[key] = val
    return out


def _potential(args, cfg) -> RadialPotential:
    spec = parse_potential(args.potential) if args.potential else cfg.get("potential")
    if spec is None:
        raise UsageError("a potential is required (--potential powerlaw:a,b)")
    try:
        return RadialPotential.from_config(spec)
    except (DomainError, HypothesisError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid potential: {exc}") from exc


def _search_config(args, cfg) -> SearchConfig:
    opts = _merged(
        cfg,
        "search",
        args,
        {
            "dim": "dim",
            "k_max": "k_max",
            "n_starts": "n_starts",
            "seed": "seed",
            "grad_tol": "grad_tol",
            "merge_tol": "merge_tol",
            "max_iters": "max_iters",
        },
    )
    if "seed" not in opts and os.environ.get(SEED_ENV):
        opts["seed"] = int(os.environ[SEED_ENV])
    try:
        return SearchConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid search settings: {exc}") from exc


def _tolerances(args, cfg) -> verify.Tolerances:
    opts = _merged(
        cfg,
        "tolerances",
        args,
        {"tol": "equality", "eig_tol": "eigen", "pair_threshold": "pair_distance_threshold"},
    )
    try:
        return verify.Tolerances(**opts)
    except TypeError as exc:
        raise UsageError(f"invalid tolerances: {exc}") from exc


def _write_json(path, data) -> None:
    text = json.dumps(data, indent=1)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


# commands ---------------------------------------------------------------

def cmd_minimize(args, cfg) -> int:
    p = _potential(args, cfg)
    scfg = _search_config(args, cfg)
    out = args.out or cfg.get("out")
    if out is None:
        raise UsageError("--out is required")
    res = minimize(p, scfg)
    out = Path(out)
    res.measure.save(out)
    result_path = Path(args.result or cfg.get("result") or out.with_name(out.stem + ".result.json"))
    payload = res.to_dict()
    payload.update(
        potential=p.to_config(),
        mass_residual=res.mass_residual,
        n_starts_converged=res.n_starts_converged,
        best_start_index=res.best_start_index,
        escaped=res.escaped,
    )
    _write_json(result_path, payload)
    print(
        f"energy={res.energy!r} atoms={len(res.measure)} converged={res.converged} "
        f"-> {out}, {result_path}"
    )
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_verify(args, cfg) -> int:
    p = _potential(args, cfg)
    path = args.measure or cfg.get("measure")
    if path is None:
        raise UsageError("--measure is required")
    try:
        m = DiscreteMeasure.load(path)
    except (OSError, MeasureError) as exc:
        raise UsageError(f"cannot load measure {path}: {exc}") from exc
    report = verify.verify_all(p, m, _tolerances(args, cfg))
    _write_json(args.out or cfg.get("out"), report.to_dict())
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.details}", file=sys.stderr)
    return EXIT_OK if report.overall else EXIT_FAILED


def cmd_geometry(args, cfg) -> int:
    alphas = _floats(args.alpha) if args.alpha else list(cfg.get("alpha", []))
    if not alphas:
        raise UsageError("--alpha is required")
    if any(a <= 2 for a in alphas):
        raise UsageError("every alpha must exceed 2")
    samples = args.samples or cfg.get("samples", 400)
    out_dir = Path(args.out_dir or cfg.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    for a in alphas:
        curve = geometry.boundary_curve(a, samples)
        path = out_dir / f"boundary_alpha_{a:g}.csv"
        geometry.write_boundary_csv(path, a, curve)
        print(f"alpha={a!r} gamma={geometry.gamma_alpha(a)!r} -> {path}")
    return EXIT_OK


def power_law_bounds(a: float, b: float) -> dict:
    """Closed-form support bounds for the 1D power law ``r**a/a - r**b/b``."""
    out: dict = {"a": a, "b": b}
    if not a > b:
        raise UsageError("need a > b")
    if b <= 2:
        out.update(r=0.0, R=(a / b) ** (1.0 / (a - b)), bound="infinity",
                   notice="the convexity radius degenerates for b <= 2; the bound is infinite")
    else:
        r = convexity_radius_power_law(a, b)
        R = (a / b) ** (1.0 / (a - b))
        out.update(r=r, R=R, bound=2 * math.ceil(R / r) + 1)
    if a.is_integer() and b.is_integer() and int(a) % 2 == 0 and int(b) % 2 == 0 and b > 0:
        out["even_bound"] = int(a) // 2
    return out


def cmd_bound(args, cfg) -> int:
    if args.potential:
        spec = parse_potential(args.potential)
        a, b = spec["a"], spec["b"]
    else:
        a = args.a if args.a is not None else cfg.get("a")
        b = args.b if args.b is not None else cfg.get("b")
    if a is None or b is None:
        raise UsageError("give --a and --b (or --potential powerlaw:a,b)")
    _write_json(args.out or cfg.get("out"), power_law_bounds(float(a), float(b)))
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    if args.family:
        family = [tuple(_floats(item)) for item in args.family.split(";") if item.strip()]
    elif args.b_values:
        family = [(2 * b, b) for b in _floats(args.b_values)]
    else:
        family = [tuple(f) for f in cfg.get("family", [])]
    if any(len(f) != 2 for f in family):
        raise UsageError("family members are a,b pairs")
    scfg = _search_config(args, cfg)
    try:
        report = verify.sweep_uniform_bound(family, scfg)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    _write_json(args.out or cfg.get("out"), report)
    return EXIT_OK


# parser -----------------------------------------------------------------

def _add_search(sp):
    sp.add_argument("--dim", type=int)
    sp.add_argument("--k-max", dest="k_max", type=int)
    sp.add_argument("--n-starts", dest="n_starts", type=int)
    sp.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}, then 0")
    sp.add_argument("--grad-tol", dest="grad_tol", type=float)
    sp.add_argument("--merge-tol", dest="merge_tol", type=float)
    sp.add_argument("--max-iters", dest="max_iters", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mildrep", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON config file; flags override its entries")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("minimize", help="search for a global minimizer")
    sp.add_argument("--potential", help="powerlaw:a,b")
    _add_search(sp)
    sp.add_argument("--out", help="measure JSON output")
    sp.add_argument("--result", help="result JSON output (default <out>.result.json)")
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("verify", help="check a measure against the minimizer properties")
    sp.add_argument("--potential", help="powerlaw:a,b")
    sp.add_argument("--measure", help="measure JSON input")
    sp.add_argument("--out", help="report JSON output (default stdout)")
    sp.add_argument("--tol", type=float, help="equality tolerance")
    sp.add_argument("--eig-tol", dest="eig_tol", type=float, help="eigenvalue tolerance")
    sp.add_argument("--pair-threshold", dest="pair_threshold", type=float)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("geometry", help="emit exclusion-shape boundary curves")
    sp.add_argument("--alpha", help="comma separated exponents > 2")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(func=cmd_geometry)

    sp = sub.add_parser("bound", help="1D support cardinality bounds for a power law")
    sp.add_argument("--potential", help="powerlaw:a,b")
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("sweep", help="support sizes across a family of power laws")
    sp.add_argument("--family", help='"a,b;a,b;..."')
    sp.add_argument("--b-values", dest="b_values", help="b values of the a=2b family")
    _add_search(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mildrep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
