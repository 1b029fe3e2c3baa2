"""Command-line front end: ``gsaw verify|twopoint|simulate|moments|susy``.

Every command writes one JSON report (or a CSV flattening of its table)
to stdout or ``--out``. Exit codes: 0 success (skips included), 1 an
identity or statistical check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from fractions import Fraction

from . import gaussian, linalg, markov, suite, walks
from .algebra import Polynomial
from .model import FIXTURES, ModelError, fixture, load_model, validate_model
from .scalars import EXACT, FLOAT, close, real_part, to_json_scalar

SCHEMA = "gsaw-report/1"
DEFAULT_SEED = 20240101
DEFAULT_SAMPLES = 20000
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# --- argument parsing ------------------------------------------------------------

def rational(text) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def rational_list(text):
    return [rational(t) for t in text.split(",") if t.strip()]


def int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from exc


def sample_count(text) -> int:
    # accepts 1e6 style counts
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}") from exc
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError("sample count must be an integer >= 1")
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="i2", help="model JSON file, or a shipped fixture name i1/i2/i3 (default i2)")
    common.add_argument("--mode", choices=(EXACT, FLOAT), default=None, help="arithmetic; defaults to the file's")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--samples", type=sample_count, default=DEFAULT_SAMPLES,
                        help=f"Monte Carlo sample count (default {DEFAULT_SAMPLES})")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="gsaw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the identity suite on the model and the fixtures")
    p.add_argument("--no-stats", action="store_true", help="skip the Monte Carlo section")

    p = sub.add_parser("twopoint", parents=[common], help="two-point functions by every applicable method")
    _sites(p)
    p.add_argument("--g", type=rational, default=None, help="self-avoidance strength for the weakly SAW rows")
    p.add_argument("--lambda", dest="lam", type=rational, default=Fraction(0))
    p.add_argument("--v", type=rational_list, default=None, help="comma-separated potential")
    p.add_argument("--maxlen", type=int, default=20)

    p = sub.add_parser("simulate", parents=[common], help="raw chain sampling with local-time statistics")
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--horizon", type=float, default=None, help="simulate the unkilled chain up to this time")
    p.add_argument("--bins", type=int, default=20)

    p = sub.add_parser("moments", parents=[common], help="exact local-time moments")
    _sites(p)
    p.add_argument("--k", type=int_list, required=True, help="comma-separated power per site")

    p = sub.add_parser("susy", parents=[common], help="supersymmetry identity corpus")
    p.add_argument("--count", type=int, default=20, help="random forms per identity")
    return parser


def _sites(p):
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--b", type=int, default=None, help="defaults to a")


def resolve_model(name_or_path, mode=None):
    if name_or_path.lower() in FIXTURES:
        return fixture(name_or_path, mode or EXACT)
    return load_model(name_or_path, mode)


def _check_site(model, s, label):
    if not 1 <= s <= model.size:
        raise InputError(f"--{label} {s} outside 1..{model.size}")


# --- commands --------------------------------------------------------------------

def cmd_verify(args):
    models = [(args.model, resolve_model(args.model, args.mode))]
    for name in FIXTURES:
        if name != args.model.lower():
            models.append((name, fixture(name, args.mode or EXACT)))
    samples = 0 if args.no_stats else args.samples
    reports = [suite.run_model_suite(m, n, args.seed, samples) for n, m in models]
    summary = suite.summarize(reports)
    report = {"schema": SCHEMA, "command": "verify", "seed": args.seed, "samples": samples,
              "models": reports, "summary": summary}
    rows = [dict(model=r["name"], **{k: _cell(v) for k, v in c.items()}) for r in reports for c in r["checks"]]
    return report, rows, EXIT_FAIL if summary["failed"] else EXIT_OK


def cmd_twopoint(args):
    model = resolve_model(args.model, args.mode)
    a = args.a
    b = args.b if args.b is not None else a
    _check_site(model, a, "a")
    _check_site(model, b, "b")
    if args.v is not None:
        if len(args.v) != model.size:
            raise InputError("--v needs one entry per site")
        model = model.with_potential(args.v)
    rows = []

    def add(rep, method, fn):
        try:
            value, err = fn()
            rows.append({"representation": rep, "method": method, "value": to_json_scalar(value),
                         "error": to_json_scalar(err), "status": "ok"})
        except (ValueError, ArithmeticError) as exc:
            rows.append({"representation": rep, "method": method, "value": None, "error": None,
                         "status": f"n/a({exc})"})

    add("srw", "matrix", lambda: (model.C(a, b), 0))
    add("srw", "series", lambda: walks.srw_two_point_series(model, a, b, args.maxlen))
    params, params_error = None, None
    try:
        params = markov.CtmcParams.killed(model.with_potential(None))
    except (ValueError, ArithmeticError) as exc:
        params_error = exc
    mc_v = [complex(x) for x in model.potential]
    add("srw", "monte_carlo", lambda: _mc(
        params, params_error, lambda: markov.estimate_dynkin(params, a, b, mc_v, args.samples, args.seed)))
    add("loop", "enumeration", lambda: (walks.loop_two_point(model, a, b), 0))
    add("loop", "boson_integral", lambda: (gaussian.loop_bosonic(model, a, b), 0))
    add("loop_wick_ordered", "enumeration", lambda: (walks.loop_two_point(model, a, b, True), 0))
    add("loop_wick_ordered", "boson_integral", lambda: (gaussian.loop_bosonic(model, a, b, True), 0))
    add("saw", "enumeration", lambda: (walks.saw_two_point(model, a, b), 0))
    add("saw", "mixed_integral", lambda: (gaussian.saw_grassmann(model, a, b), 0))
    if args.g is not None:
        g, lam = args.g, args.lam
        add("wsaw", "walk_sum", lambda: _walk_sum(model, a, b, g, lam, args.maxlen))
        add("wsaw", "monte_carlo", lambda: _mc(
            params, params_error,
            lambda: markov.estimate_wsaw(params, a, b, float(g), float(lam), args.samples, args.seed)))
        if model.size == 1:
            add("wsaw", "quadrature", lambda: _single_site_quadrature(model, g, lam))
    report = {"schema": SCHEMA, "command": "twopoint", "model": model.to_json(), "a": a, "b": b,
              "seed": args.seed, "samples": args.samples, "table": rows}
    return report, rows, EXIT_OK


def _mc(params, error, fn):
    if params is None:
        raise error
    est = fn()
    return est.mean, est.stderr


def _walk_sum(model, a, b, g, lam, maxlen):
    value, note = markov.wsaw_walk_sum(model, a, b, g, lam, maxlen)
    return value, note["tail_bound"]


def _single_site_quadrature(model, g, lam):
    # one site, no steps: the only walk is (1) with a single visit
    d = float(real_part(model.diag[0]))
    return markov.gamma_weight_integral(1, float(g), float(lam) + d), 0


def cmd_simulate(args):
    model = resolve_model(args.model, args.mode)
    _check_site(model, args.a, "a")
    if args.horizon is None:
        params = markov.CtmcParams.killed(model)
    else:
        params = markov.CtmcParams.unkilled(model)
    stats = markov.simulate_summary(params, args.a, args.samples, args.seed, args.horizon, args.bins)
    exact = {}
    if args.horizon is None:
        exact["end_site_probability"] = [to_json_scalar(markov.exact_end_site_probability(model, args.a, b))
                                         for b in model.sites]
        exact["mean_lifetime"] = to_json_scalar(markov.exact_mean_lifetime(model, args.a))
    else:
        exact["mean_lifetime"] = args.horizon
    stats["exact"] = exact
    report = {"schema": SCHEMA, "command": "simulate", "model": model.to_json(), **stats}
    rows = []
    for x in model.sites:
        row = {"site": x, "local_time_mean": stats["local_time_mean"][x - 1],
               "local_time_var": stats["local_time_var"][x - 1],
               "end_site_freq": stats["end_site_freq"][x - 1]}
        if "end_site_probability" in exact:
            row["end_site_exact"] = exact["end_site_probability"][x - 1]
        rows.append(row)
    return report, rows, EXIT_OK


def cmd_moments(args):
    model = resolve_model(args.model, args.mode)
    a = args.a
    b = args.b if args.b is not None else a
    _check_site(model, a, "a")
    _check_site(model, b, "b")
    if len(args.k) != model.size:
        raise InputError("--k needs one power per site")
    if any(k < 0 for k in args.k):
        raise InputError("--k powers must be >= 0")
    oracle = gaussian.local_time_moment_oracle(model, a, b, args.k)
    mono = Polynomial.monomial(tuple(args.k))
    integral = gaussian.tau_weighted_two_point(model, mono, a, b)
    ok = close(oracle, integral, suite.SUITE_TOL)
    row = {"a": a, "b": b, "k": ",".join(map(str, args.k)),
           "local_time_moment": to_json_scalar(oracle), "tau_integral": to_json_scalar(integral),
           "status": suite.PASS if ok else suite.FAIL}
    report = {"schema": SCHEMA, "command": "moments", "model": model.to_json(), **row}
    return report, [row], EXIT_OK if ok else EXIT_FAIL


def cmd_susy(args):
    model = resolve_model(args.model, args.mode)
    rng = random.Random(args.seed)
    integrate = validate_model(model).hermitian_positive is True
    checks = suite.susy_checks(model, rng, args.count, integrate=integrate)
    if not integrate:
        checks.append(suite.skipped("Q_exact_form_integrates_to_zero", "supersymmetry",
                                    "Hermitian part of A not positive definite"))
    summary = suite.summarize([{"checks": checks}])
    report = {"schema": SCHEMA, "command": "susy", "model": model.to_json(), "seed": args.seed,
              "checks": checks, "summary": summary}
    rows = [{k: _cell(v) for k, v in c.items()} for c in checks]
    return report, rows, EXIT_FAIL if summary["failed"] else EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "twopoint": cmd_twopoint,
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "susy": cmd_susy,
}


# --- output ----------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return v


def render(report, rows, fmt) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    fields = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        report, rows, code = COMMANDS[args.command](args)
    except (InputError, ModelError, FileNotFoundError, linalg.SingularMatrixError) as exc:
        print(f"gsaw: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except markov.HypothesisError as exc:
        print(f"gsaw: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(report, rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
