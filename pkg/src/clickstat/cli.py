"""``clickstat`` command line.

Every command writes one record to stdout, as JSON (default) or CSV.
Exit codes: 0 success, 2 bad arguments, 3 impossible observation. Errors
are reported on stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import __version__
from .clickmodel import DetectorBank, epsilon_from_rate, pmf_noisy
from .fockoptics import joint_retrodict, noon_joint_prior
from .priors import DEFAULT_TAIL_TOL, SqueezedGain, parse_prior
from .retrodict import ImpossibleObservation, posterior_summary, retrodict
from .simulate import TrialConfig, estimate_pmf

FORMAT_VERSION = "clickstat-output/1"

EXIT_ARGS = 2
EXIT_IMPOSSIBLE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(text: str, exact: bool):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None
    if exact:
        return value
    try:
        return float(text)
    except ValueError:
        return float(value)


def _value(x):
    """Serializable probability: 'p/q' string when exact, float otherwise."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return float(x)


def _bank(args) -> DetectorBank:
    exact = getattr(args, "exact", False)
    if args.dark_rate is not None:
        if args.epsilon is not None:
            raise UsageError("give either --epsilon or --dark-rate/--window, not both")
        if exact:
            raise UsageError("--dark-rate gives an irrational epsilon; drop --exact")
        try:
            epsilon = epsilon_from_rate(float(args.dark_rate), float(args.window))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        epsilon = _number(args.epsilon if args.epsilon is not None else "0", exact)
    eta = _number(args.eta, exact)
    try:
        return DetectorBank(args.detectors, eta, epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_bank_flags(p: argparse.ArgumentParser, exact: bool = True):
    p.add_argument("--detectors", type=int, required=True, help="number of on/off detectors D")
    p.add_argument("--eta", default="1", help="quantum efficiency (default 1)")
    p.add_argument("--epsilon", default=None, help="false-count probability per detector per window (default 0)")
    p.add_argument("--dark-rate", default=None, help="dark counts per second; sets epsilon with --window")
    p.add_argument("--window", default="1e-8", help="gate window in seconds for --dark-rate (default 1e-8)")
    if exact:
        p.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _record(command, parameters, backend, values, **extra) -> dict:
    out = {
        "version": FORMAT_VERSION,
        "command": command,
        "parameters": parameters,
        "backend": backend,
        "values": values,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_pmf(args) -> dict:
    bank = _bank(args)
    if args.photons < 0:
        raise UsageError("--photons must be non-negative")
    pmf = pmf_noisy(bank, args.photons, exact=args.exact)
    params = dict(bank.as_dict(), photons=args.photons)
    table = {str(c): _value(p) for c, p in enumerate(pmf.probs)}
    return _record("pmf", params, _backend(args.exact), table)


def _backend(exact):
    return "exact" if exact else "float"


def _summary(probs) -> dict:
    s = posterior_summary(probs)
    return {"mode": s.mode, "mean": _value(s.mean), "mode_probability": _value(s.mode_probability)}


def cmd_retrodict(args) -> dict:
    bank = _bank(args)
    try:
        prior = parse_prior(args.prior, exact=args.exact)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        post = retrodict(bank, prior, args.clicks, tail_tol=args.tail_tol, exact=args.exact)
    except ImpossibleObservation:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = dict(bank.as_dict(), clicks=args.clicks, prior=args.prior, tail_tol=args.tail_tol)
    table = {str(n): _value(p) for n, p in enumerate(post.probs)}
    return _record(
        "retrodict",
        params,
        _backend(post.exact),
        table,
        summary=_summary(post.probs),
        evidence=_value(post.evidence),
        n_max=post.n_max,
    )


def cmd_simulate(args) -> dict:
    bank = _bank(args)
    try:
        config = TrialConfig(bank, args.photons, args.trials, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    emp = estimate_pmf(config, threads=args.threads)
    # thread count is deliberately left out so output does not depend on it
    params = dict(bank.as_dict(), photons=args.photons, trials=args.trials, seed=args.seed)
    return _record(
        "simulate",
        params,
        "float",
        {str(c): float(f) for c, f in enumerate(emp.frequencies)},
        stderr={str(c): float(s) for c, s in enumerate(emp.stderr)},
        counts={str(c): int(k) for c, k in enumerate(emp.counts)},
    )


def _joint_rows(matrix) -> list:
    rows, cols = matrix.shape
    return [{"n1": i, "n2": j, "probability": _value(matrix[i, j])} for i in range(rows) for j in range(cols)]


def cmd_noon(args) -> dict:
    leak = _number(args.leak, args.exact)
    if not 0 <= leak <= 1:
        raise UsageError("--leak must lie in [0, 1]")
    if args.photons_per_port < 0:
        raise UsageError("--photons-per-port must be non-negative")
    prior = noon_joint_prior(args.photons_per_port, leak, exact=args.exact)
    params = {"photons_per_port": args.photons_per_port, "leak": _value(leak)}
    if args.prior_only:
        return _record("noon", dict(params, prior_only=True), _backend(args.exact), _joint_rows(prior.probs))
    if args.detectors is None or args.clicks is None:
        raise UsageError("--detectors and --clicks are required unless --prior-only is given")
    bank = _bank(args)
    try:
        c1, c2 = (int(x) for x in args.clicks.split(","))
    except ValueError:
        raise UsageError(f"--clicks expects C1,C2, got {args.clicks!r}") from None
    try:
        post = joint_retrodict(bank, bank, prior, c1, c2, exact=args.exact)
    except ImpossibleObservation:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params.update(bank.as_dict(), clicks=[c1, c2])
    return _record(
        "noon",
        params,
        _backend(args.exact),
        _joint_rows(post.probs),
        mode=list(post.mode),
        mode_probability=_value(post.mode_probability),
        evidence=_value(post.evidence),
    )


def _gains(args) -> list:
    if args.sweep is None:
        if args.gain is None:
            raise UsageError("give --gain or --sweep")
        return [_number(args.gain, False)]
    try:
        start, stop, step = (Fraction(x) for x in args.sweep.split(":"))
    except ValueError:
        raise UsageError(f"--sweep expects g1:g2:step, got {args.sweep!r}") from None
    if step <= 0 or stop < start:
        raise UsageError("--sweep needs step > 0 and g2 >= g1")
    count = int((stop - start) / step)
    return [float(start + i * step) for i in range(count + 1)]


def cmd_squeezed(args) -> dict:
    args.exact = False
    bank = _bank(args)
    gains = _gains(args)
    rows, posteriors, impossible = [], [], []
    for g in gains:
        try:
            post = retrodict(bank, SqueezedGain(g), args.clicks, tail_tol=args.tail_tol)
        except ImpossibleObservation:
            if args.sweep is None:
                raise
            impossible.append(g)
            continue
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        posteriors.append((g, post))
        rows.extend({"gain": g, "index": n, "probability": float(p)} for n, p in enumerate(post.probs))
    params = dict(bank.as_dict(), clicks=args.clicks, tail_tol=args.tail_tol)
    if args.sweep is not None:
        params["sweep"] = args.sweep
        return _record("squeezed", params, "float", rows, impossible_gains=impossible)
    g, post = posteriors[0]
    params["gain"] = g
    return _record(
        "squeezed",
        params,
        "float",
        {str(n): float(p) for n, p in enumerate(post.probs)},
        summary=_summary(post.probs),
        evidence=float(post.evidence),
        n_max=post.n_max,
    )


# ---------------------------------------------------------------------------
# output


def to_csv(record: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    values = record["values"]
    if isinstance(values, dict):
        stderr = record.get("stderr")
        writer.writerow(["index", "probability"] + (["stderr"] if stderr else []))
        for key, p in values.items():
            writer.writerow([key, _csv_cell(p)] + ([_csv_cell(stderr[key])] if stderr else []))
    elif values and "gain" in values[0]:
        writer.writerow(["gain", "index", "probability"])
        for row in values:
            writer.writerow([repr(row["gain"]), row["index"], _csv_cell(row["probability"])])
    else:
        writer.writerow(["n1", "n2", "probability"])
        for row in values:
            writer.writerow([row["n1"], row["n2"], _csv_cell(row["probability"])])
    return buf.getvalue()


def _csv_cell(x) -> str:
    return x if isinstance(x, str) else repr(float(x))


def render(record: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(record)
    return json.dumps(record, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clickstat", description="Click statistics of multiplexed on/off detectors.")
    parser.add_argument("--version", action="version", version=f"clickstat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pmf", help="click-count distribution for N photons")
    _add_bank_flags(p)
    p.add_argument("--photons", type=int, required=True)
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("retrodict", help="posterior photon number given a click count")
    _add_bank_flags(p)
    p.add_argument("--clicks", type=int, required=True)
    p.add_argument("--prior", required=True, help="poisson:mu=X | thermal:mu=X | squeezed:g=X | custom:w0,w1,...")
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    p.set_defaults(func=cmd_retrodict)

    p = sub.add_parser("simulate", help="Monte Carlo click histogram")
    _add_bank_flags(p, exact=False)
    p.add_argument("--photons", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate, exact=False)

    p = sub.add_parser("noon", help="two-arm heralding prior and posterior")
    p.add_argument("--photons-per-port", type=int, required=True)
    p.add_argument("--leak", default="1/2", help="leak-splitter probability per photon (default 1/2)")
    p.add_argument("--clicks", default=None, help="C1,C2")
    p.add_argument("--prior-only", action="store_true")
    _add_bank_flags(p)
    for action in p._actions:
        if action.dest == "detectors":
            action.required = False
    p.set_defaults(func=cmd_noon)

    p = sub.add_parser("squeezed", help="posterior for one arm of a two-mode squeezed vacuum")
    _add_bank_flags(p, exact=False)
    p.add_argument("--gain", default=None)
    p.add_argument("--sweep", default=None, help="g1:g2:step")
    p.add_argument("--clicks", type=int, required=True)
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    p.set_defaults(func=cmd_squeezed)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        record = args.func(args)
    except UsageError as exc:
        return _fail("argument", str(exc), EXIT_ARGS)
    except ImpossibleObservation as exc:
        return _fail("impossible_observation", str(exc), EXIT_IMPOSSIBLE)
    sys.stdout.write(render(record, args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
