"""Command-line entry point: ``bellsim {verify,qm,mc,optimize,table}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import sys
from pathlib import Path

from . import __version__
from .checks import run_all
from .core import MAXIMAL_VIOLATION_SETTINGS, PAIRS, AngleSettings, chsh_combination
from .lhv import enumerate_assignments
from .modelfile import ModelFileError, load_config, load_model
from .montecarlo import (
    ASPECT_MEASUREMENT,
    FactorizableSource,
    JointSource,
    P16Source,
    QuantumSource,
    TrialPlan,
    VisibilityModel,
    VisibilitySource,
    counts_csv,
    estimate_chsh,
    exact_chsh,
    measured_value_compatible,
    report_record,
    sample_events,
    visibility_for_chsh,
)
from .optimize import DEFAULT_GRID, DEFAULT_TOL, lhv_ceiling_search, maximize_chsh, slice_alpha_beta
from .quantum import correlator_qm, singlet_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "BELLSIM_SEED"
ASPECT_V = visibility_for_chsh(2.70)


class UsageError(Exception):
    pass


def finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def seed_value(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return seed_value(env)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{SEED_ENV}: {exc}") from None
    return secrets.randbits(64)


# -- argument parsing -----------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None, help="YAML file of option defaults; flags override it")
    p.add_argument("--seed", type=seed_value, default=None, help=f"RNG seed (fallback: ${SEED_ENV})")
    p.add_argument("--threads", type=positive_int, default=1, help="worker cap; never changes results")


def _angles(p: argparse.ArgumentParser) -> None:
    deg = MAXIMAL_VIOLATION_SETTINGS.degrees()
    p.add_argument("--alpha", type=finite_float, default=deg[0])
    p.add_argument("--alpha-prime", type=finite_float, default=deg[1])
    p.add_argument("--beta", type=finite_float, default=deg[2])
    p.add_argument("--beta-prime", type=finite_float, default=deg[3])
    p.add_argument("--radians", action="store_true", help="angles are radians (default: degrees)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="bellsim", description="CHSH inequality checks and Bell-test simulation")
    parser.add_argument("--version", action="version", version=f"bellsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("verify", help="run the inequality oracle suite")
    _common(p)
    p.add_argument("--samples", type=positive_int, default=100_000, help="points per lemma / p16 sweep")
    p.add_argument("--models", type=positive_int, default=10_000, help="random models per model sweep")
    p.add_argument("--inject-fault", choices=("wigner-table",), default=None, help=argparse.SUPPRESS)
    subs["verify"] = p

    p = sub.add_parser("qm", help="singlet correlators and CHSH value at given angles")
    _common(p)
    _angles(p)
    p.add_argument("--visibility", type=finite_float, default=1.0)
    subs["qm"] = p

    p = sub.add_parser("mc", help="Monte Carlo Bell test")
    _common(p)
    _angles(p)
    p.add_argument("--source", choices=("quantum", "visibility", "p16", "factorizable", "joint"), default="quantum")
    p.add_argument("--model", default=None, help="model definition file (.model)")
    p.add_argument("--visibility", type=finite_float, default=None)
    p.add_argument("--aspect", action="store_true", help=f"visibility source at V = 2.70/(2*sqrt 2) = {ASPECT_V:.5f}")
    p.add_argument("--n", type=positive_int, default=100_000, help="trials per setting pair")
    p.add_argument("--prefix", default="mc")
    subs["mc"] = p

    p = sub.add_parser("optimize", help="search angles for the maximal CHSH value")
    _common(p)
    p.add_argument("--source", choices=("quantum", "visibility", "lhv-random"), default="quantum")
    p.add_argument("--visibility", type=finite_float, default=1.0)
    p.add_argument("--search-grid", type=positive_int, default=DEFAULT_GRID)
    p.add_argument("--tol", type=finite_float, default=DEFAULT_TOL)
    p.add_argument("--models", type=int, default=100_000, help="random p16 vectors for lhv-random")
    p.add_argument("--free-alpha", action="store_true", help="also optimise alpha (non-stationary sources)")
    p.add_argument("--slice", choices=("alpha-beta",), default=None, help="write a CHSH slice CSV")
    p.add_argument("--grid", type=positive_int, default=180, help="slice resolution per axis")
    subs["optimize"] = p

    p = sub.add_parser("table", help="print the 16-row sign table")
    _common(p)
    subs["table"] = p
    return parser, subs


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = subs[args.command]
        allowed = {a.dest for a in sp._actions if a.dest not in ("help", "config")}
        try:
            cfg = load_config(args.config, allowed)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        # config supplies defaults; explicit flags still win on the second parse
        for action in sp._actions:
            if action.dest in cfg and action.type is not None and isinstance(cfg[action.dest], str):
                cfg[action.dest] = action.type(cfg[action.dest])
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def settings_from_args(args) -> AngleSettings:
    vals = (args.alpha, args.alpha_prime, args.beta, args.beta_prime)
    return AngleSettings(*vals) if args.radians else AngleSettings.from_degrees(*vals)


# -- output helpers -----------------------------------------------------------

def emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _settings_record(s: AngleSettings) -> dict:
    return {"alpha": s.alpha, "alpha_prime": s.alpha_prime, "beta": s.beta, "beta_prime": s.beta_prime}


# -- subcommands ---------------------------------------------------------------

def cmd_table(args) -> int:
    rows = enumerate_assignments()
    sym = {1: "+", -1: "-"}
    header = ["row", "a", "b", "a'", "b'", "ab", "ab'", "a'b", "a'b'"]
    if args.format == "json":
        text = _json({
            "schema": "bellsim.table/1",
            "rows": [{"row": r.row_index, "signs": list(r.signs), "products": list(r.products)} for r in rows],
        })
    elif args.format == "csv":
        text = _csv([header] + [[r.row_index, *r.signs, *r.products] for r in rows])
    else:
        lines = ["  ".join(f"{h:>4}" for h in header)]
        lines += ["  ".join(f"{x:>4}" for x in [r.row_index] + [sym[s] for s in r.signs + r.products]) for r in rows]
        text = "\n".join(lines) + "\n"
    emit(text, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    results = run_all(args.samples, args.models, seed, corrupt_table=args.inject_fault == "wigner-table")
    failed = [r.name for r in results if not r.passed]
    if args.format == "json":
        text = _json({
            "schema": "bellsim.verify/1",
            "seed": seed,
            "passed": not failed,
            "checks": [
                {"name": r.name, "passed": r.passed, "worst_margin": r.worst_margin, "samples": r.samples, "detail": r.detail}
                for r in results
            ],
        })
    elif args.format == "csv":
        text = _csv([["check", "passed", "worst_margin", "samples"]] + [[r.name, r.passed, repr(r.worst_margin), r.samples] for r in results])
    else:
        lines = [f"seed: {seed}"]
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{status}  {r.name:<20} worst margin {r.worst_margin: .6e}  ({r.samples} samples) {r.detail}".rstrip())
        lines.append("all checks passed" if not failed else f"FAILED: {', '.join(failed)}")
        text = "\n".join(lines) + "\n"
    emit(text, args.output)
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_qm(args) -> int:
    settings = settings_from_args(args)
    try:
        vis = VisibilityModel(args.visibility)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    state = singlet_state()
    xi = {}
    for p in PAIRS:
        a, b = settings.pair_angles(p)
        xi[p] = correlator_qm(state, a, b) if vis.V == 1.0 else vis.correlator(a, b)
    B = chsh_combination(*(xi[p] for p in PAIRS))
    verdict = "VIOLATES" if B > 2.0 + 1e-12 else "SATISFIES"
    if args.format == "json":
        text = _json({
            "schema": "bellsim.qm/1",
            "settings_rad": _settings_record(settings),
            "visibility": vis.V,
            "correlators": xi,
            "B": B,
            "violates": verdict == "VIOLATES",
        })
    elif args.format == "csv":
        text = _csv([["quantity", "value"]] + [[f"xi({p})", repr(xi[p])] for p in PAIRS] + [["B", repr(B)]])
    else:
        deg = settings.degrees()
        lines = [f"angles (deg): alpha={deg[0]:.6f} alpha'={deg[1]:.6f} beta={deg[2]:.6f} beta'={deg[3]:.6f}"]
        if vis.V != 1.0:
            lines.append(f"visibility: {vis.V:.6f}")
        lines += [f"xi({p:<4}) = {xi[p]: .6f}" for p in PAIRS]
        lines.append(f"B = {B:.6f}  {verdict} B <= 2")
        text = "\n".join(lines) + "\n"
    emit(text, args.output)
    return EXIT_OK


def _mc_source(args):
    if args.aspect:
        return VisibilitySource(VisibilityModel(ASPECT_V if args.visibility is None else args.visibility))
    if args.source == "quantum":
        return QuantumSource()
    if args.source == "visibility" and args.model is None:
        return VisibilitySource(VisibilityModel(1.0 if args.visibility is None else args.visibility))
    if args.model is None:
        raise UsageError(f"--source {args.source} needs --model FILE")
    source = load_model(args.model)
    expected = {"p16": P16Source, "factorizable": FactorizableSource, "joint": JointSource, "visibility": VisibilitySource}
    if not isinstance(source, expected[args.source]):
        raise UsageError(f"model file {args.model} does not define a {args.source} model")
    return source


def cmd_mc(args) -> int:
    try:
        source = _mc_source(args)
    except (ModelFileError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    settings = settings_from_args(args)
    seed = resolve_seed(args.seed)
    plan = TrialPlan(args.n, settings, source, seed)
    counts = sample_events(plan, threads=args.threads)
    report = estimate_chsh(counts)
    B_exact = exact_chsh(source, settings)
    z = (report.B - B_exact) / report.B_se if report.B_se > 0 else (0.0 if report.B == B_exact else math.inf)
    meta = {
        "source": source.name,
        "seed": seed,
        "n_per_pair": args.n,
        "settings_rad": _settings_record(settings),
        "B_exact": B_exact,
    }
    if isinstance(source, VisibilitySource):
        meta["visibility"] = source.model.V
    record = report_record(counts, report, **meta)
    record["within_3se"] = abs(z) <= 3.0
    if isinstance(source, VisibilitySource):
        record["measured_within_3sigma"] = measured_value_compatible(B_exact)

    out = Path(args.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.prefix}_counts.csv").write_text(counts_csv(counts, report))
    (out / f"{args.prefix}_report.json").write_text(_json(record))

    if args.format == "json":
        sys.stdout.write(_json(record))
    elif args.format == "csv":
        sys.stdout.write(counts_csv(counts, report))
    else:
        lines = [f"seed: {seed}", f"source: {source.name}, {args.n} trials per pair"]
        for p in PAIRS:
            lines.append(f"xi({p:<4}) = {report.correlators[p]: .6f} +- {report.standard_errors[p]:.6f}   counts {counts[p]}")
        lines.append(f"B = {report.B:.6f} +- {report.B_se:.6f}   (exact {B_exact:.6f}, z = {z:+.2f})")
        if "measured_within_3sigma" in record:
            value, sigma = ASPECT_MEASUREMENT
            ok = "within" if record["measured_within_3sigma"] else "outside"
            lines.append(f"measured {value} +- {sigma} lies {ok} 3 sigma of {B_exact:.6f}")
        lines.append(f"wrote {out / (args.prefix + '_counts.csv')} and {out / (args.prefix + '_report.json')}")
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_optimize(args) -> int:
    if args.source == "lhv-random":
        seed = resolve_seed(args.seed)
        B = lhv_ceiling_search(max(args.models, 0), seed)
        record = {"schema": "bellsim.optimize/1", "source": "lhv-random", "seed": seed, "models": args.models, "B": B}
        if args.format == "json":
            text = _json(record)
        elif args.format == "csv":
            text = _csv([["source", "models", "seed", "B"], ["lhv-random", args.models, seed, repr(B)]])
        else:
            text = f"seed: {seed}\nlargest CHSH value over 16 vertices + {args.models} random mixtures: B = {B:.6f}\n"
        emit(text, None)
        return EXIT_OK

    try:
        vis = VisibilityModel(args.visibility if args.source == "visibility" else 1.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.search_grid < 8 or not args.tol > 0:
        raise UsageError("--search-grid must be >= 8 and --tol positive")
    if args.source == "quantum":
        state = singlet_state()

        def source(a, b):
            return correlator_qm(state, a, b)
    else:
        source = vis.correlator
    res = maximize_chsh(source, args.search_grid, args.tol, fix_alpha=not args.free_alpha)
    s = res.settings
    diffs = {p: math.degrees(abs(math.remainder(a - b, 2 * math.pi))) for p in PAIRS for a, b in [s.pair_angles(p)]}
    record = {
        "schema": "bellsim.optimize/1",
        "source": args.source,
        "B": res.B,
        "settings_rad": _settings_record(s),
        "pair_differences_deg": diffs,
        "iterations": res.iterations,
        "converged": res.converged,
    }
    if args.source == "visibility":
        record["visibility"] = vis.V
    if args.format == "json":
        text = _json(record)
    elif args.format == "csv":
        text = _csv([["quantity", "value"], ["B", repr(res.B)], *[[k, repr(v)] for k, v in _settings_record(s).items()],
                     ["iterations", res.iterations], ["converged", res.converged]])
    else:
        deg = s.degrees()
        text = (
            f"B = {res.B:.6f}  ({'converged' if res.converged else 'not converged'} after {res.iterations} iterations)\n"
            f"angles (deg): alpha={deg[0]:.6f} alpha'={deg[1]:.6f} beta={deg[2]:.6f} beta'={deg[3]:.6f}\n"
            + "".join(f"|{_PAIR_ANGLES[p]}| = {diffs[p]:.6f} deg\n" for p in PAIRS)
        )
    emit(text, None)

    if args.slice:
        alphas, betas, B = slice_alpha_beta(source, s, args.grid)
        path = Path(args.output or "slice_alpha-beta.csv")
        rows = [["alpha_rad", "beta_rad", "B"]]
        rows += [[repr(float(a)), repr(float(b)), repr(float(B[i, j]))] for i, a in enumerate(alphas) for j, b in enumerate(betas)]
        path.write_text(_csv(rows))
        print(f"slice {args.slice}: {args.grid}x{args.grid} values, max B = {B.max():.6f}, wrote {path}")
    return EXIT_OK


_PAIR_ANGLES = {"ab": "alpha-beta", "ab'": "alpha-beta'", "a'b": "alpha'-beta", "a'b'": "alpha'-beta'"}

COMMANDS = {"verify": cmd_verify, "qm": cmd_qm, "mc": cmd_mc, "optimize": cmd_optimize, "table": cmd_table}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code or 0)
    except ModelFileError as exc:
        print(f"bellsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (argparse.ArgumentTypeError, ValueError) as exc:
        print(f"bellsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bellsim: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bellsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bellsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
