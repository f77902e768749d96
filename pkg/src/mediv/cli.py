"""``mediv`` command line: traditional and ME diversity of species counts.

Exit codes: 0 ok, 2 parse/usage error, 3 domain error (empty sample, fewer
than two species, ...), 4 unattainable constraint target, 5 degenerate
constraint.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .diversity import (
    FREQUENCY_CAVEAT,
    SIGN_CONVENTION_NOTE,
    ZETA_CONVENTION_NOTE,
    SamplingConfig,
    me_diversity,
    shannon,
    simpson,
)
from .errors import DegenerateConstraint, MedivError, ParseError, UnattainableTarget
from .io import constraint_for, read_constraint, read_counts
from .simplex import PriorSpec, SpeciesCounts, draw_bank
from .solver import MONTE_CARLO_TOLERANCE

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_UNATTAINABLE, EXIT_DEGENERATE = 0, 2, 3, 4, 5
MIN_SAMPLES = 1000
LN2 = math.log(2.0)


class UsageError(Exception):
    pass


def _load_counts(path) -> SpeciesCounts:
    labels, counts = read_counts(path)
    return SpeciesCounts(labels, counts)


def _prior(arg: str, k: int) -> PriorSpec:
    try:
        values = [float(v) for v in arg.split(",")]
    except ValueError:
        raise UsageError(f"--prior-alpha: cannot parse {arg!r}") from None
    if len(values) == 1:
        values = values * k
    if len(values) != k:
        raise UsageError(f"--prior-alpha has {len(values)} values for {k} species")
    return PriorSpec(values)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MEDIV_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env.strip())
    except ValueError:
        raise UsageError(f"MEDIV_SEED={env!r} is not an integer") from None


def _sampling(args) -> SamplingConfig:
    if args.samples < MIN_SAMPLES:
        raise UsageError(f"--samples must be >= {MIN_SAMPLES}")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    seed = _seed(args)
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be in [0, 2**64)")
    return SamplingConfig(n_samples=args.samples, seed=seed, threads=args.threads)


def _scale(args):
    return (lambda x: x / LN2) if args.log_base == "bits" else (lambda x: x)


def _opt(fn, x):
    return None if x is None else fn(x)


def _traditional(counts: SpeciesCounts):
    if counts.n == 0:
        return None, None
    return shannon(counts), simpson(counts)


def _frequencies(counts: SpeciesCounts):
    n = counts.n
    return [None if n == 0 else int(c) / n for c in counts.counts]


def _captured(fn, *a, **kw):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn(*a, **kw)
    msgs = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in msgs:
            msgs.append(text)
    return result, msgs


def cmd_shannon(args) -> dict:
    counts = _load_counts(args.counts)
    s = shannon(counts)
    simp = simpson(counts)
    conv = _scale(args)
    return {
        "command": "shannon",
        "log_base": args.log_base,
        "n": counts.n,
        "k": counts.k,
        "species": [
            {"label": lab, "count": int(c), "frequency": fr}
            for lab, c, fr in zip(counts.labels, counts.counts, _frequencies(counts))
        ],
        "s_traditional": conv(s),
        "s_traditional_caveat": FREQUENCY_CAVEAT,
        "simpson": simp,
        "simpson_complement": 1.0 - simp,
    }


def _constraint(args, counts):
    if args.constraint is None:
        return None
    coefs, target = read_constraint(args.constraint)
    return constraint_for(counts.labels, coefs, target, args.constraint)


def cmd_estimate(args) -> dict:
    counts = _load_counts(args.counts)
    sampling = _sampling(args)
    prior = _prior(args.prior_alpha, counts.k)
    constraint = _constraint(args, counts)
    rep, msgs = _captured(me_diversity, counts, prior, constraint, sampling, args.tolerance)
    s_trad, simp = rep.s_traditional, rep.simpson
    conv = _scale(args)
    sol = rep.solver
    return {
        "command": "estimate",
        "log_base": args.log_base,
        "n": counts.n,
        "k": counts.k,
        "species": [
            {
                "label": lab,
                "count": int(c),
                "frequency": fr,
                "posterior_mean": float(mu),
                "posterior_stderr": float(se),
            }
            for lab, c, fr, mu, se in zip(counts.labels, counts.counts, _frequencies(counts),
                                          rep.posterior_means, rep.posterior_stderr)
        ],
        "s_traditional": _opt(conv, s_trad),
        "s_traditional_caveat": FREQUENCY_CAVEAT,
        "simpson": simp,
        "simpson_complement": rep.simpson_complement,
        "constraint": None if constraint is None else {
            "coefficients": {lab: float(f) for lab, f in
                             zip(counts.labels, constraint.coefficients)},
            "target": constraint.target,
        },
        "beta": rep.beta,
        "log_zeta": conv(rep.log_zeta),
        "log_zeta_stderr": conv(rep.log_zeta_stderr),
        "s_me": conv(rep.s_me),
        "s_me_note": SIGN_CONVENTION_NOTE,
        "zeta_note": ZETA_CONVENTION_NOTE,
        "prior_alpha": [float(a) for a in prior.concentration],
        "sampling": {"n_samples": rep.n_samples, "seed": rep.seed},
        "diagnostics": {
            "ess": rep.ess,
            "solver": None if sol is None else {
                "iterations": sol.iterations,
                "residual": sol.residual,
                "converged": sol.converged,
                "bracket": [float(sol.bracket[0]), float(sol.bracket[1])],
            },
            "warnings": msgs,
        },
    }


def cmd_compare(args) -> dict:
    sampling = _sampling(args)
    conv = _scale(args)
    rows, all_msgs = [], []
    for path in args.counts:
        counts = _load_counts(path)
        prior = _prior(args.prior_alpha, counts.k)
        constraint = _constraint(args, counts)
        s_trad, simp = _traditional(counts)
        bank = draw_bank(counts, prior, sampling.n_samples, sampling.seed, sampling.threads)
        variants = [None] if constraint is None else [None, constraint]
        for c in variants:
            rep, msgs = _captured(me_diversity, counts, prior, c, sampling, args.tolerance,
                                  bank=bank)
            all_msgs.extend(m for m in msgs if m not in all_msgs)
            rows.append({
                "counts_file": Path(path).name,
                "n": counts.n,
                "k": counts.k,
                "constrained": c is not None,
                "s_traditional": _opt(conv, s_trad),
                "simpson": simp,
                "beta": rep.beta,
                "s_me": conv(rep.s_me),
                "s_me_stderr": conv(rep.log_zeta_stderr),
            })
    return {
        "command": "compare",
        "log_base": args.log_base,
        "rows": rows,
        "flags": _compare_flags(rows),
        "caveat": FREQUENCY_CAVEAT,
        "s_me_note": SIGN_CONVENTION_NOTE,
        "prior_alpha": args.prior_alpha,
        "sampling": {"n_samples": sampling.n_samples, "seed": sampling.seed},
        "warnings": all_msgs,
    }


def _compare_flags(rows):
    flags = []
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            if a["constrained"] != b["constrained"] or a["counts_file"] == b["counts_file"]:
                continue
            if a["s_traditional"] is None or b["s_traditional"] is None:
                continue
            noise = 3.0 * math.hypot(a["s_me_stderr"], b["s_me_stderr"])
            if a["s_traditional"] == b["s_traditional"] and abs(a["s_me"] - b["s_me"]) > noise:
                tag = "with constraint" if a["constrained"] else "without constraint"
                flags.append(
                    f"{a['counts_file']} vs {b['counts_file']} ({tag}): same S_traditional, "
                    f"S_ME differs by {abs(a['s_me'] - b['s_me']):.6f}; the samples share "
                    "frequency ratios but not abundance"
                )
    return flags


def _f(x, digits=6):
    return "NA" if x is None else f"{x:.{digits}f}"


def render_text(report: dict) -> str:
    unit = report["log_base"]
    out = []
    cmd = report["command"]
    if cmd in ("shannon", "estimate"):
        est = cmd == "estimate"
        width = max(7, *(len(s["label"]) for s in report["species"]))
        head = f"{'species':<{width}}  {'count':>8}  {'frequency':>10}"
        if est:
            head += f"  {'<p_i>':>10}  {'stderr':>10}"
        out.append(head)
        for s in report["species"]:
            line = f"{s['label']:<{width}}  {s['count']:>8d}  {_f(s['frequency']):>10}"
            if est:
                line += f"  {_f(s['posterior_mean']):>10}  {_f(s['posterior_stderr']):>10}"
            out.append(line)
        out.append(f"n = {report['n']}, k = {report['k']}")
        out.append(f"S_traditional = {_f(report['s_traditional'])} {unit}")
        out.append(f"  caveat: {report['s_traditional_caveat']}")
        out.append(f"Simpson sum(p^2) = {_f(report['simpson'])}"
                   f"  (1 - sum(p^2) = {_f(report['simpson_complement'])})")
        if est:
            c = report["constraint"]
            if c is None:
                out.append("constraint: none (beta = 0)")
            else:
                terms = " ".join(f"{v:+g}*{lab}" for lab, v in c["coefficients"].items() if v)
                out.append(f"constraint: <{terms or '0'}> = {c['target']:g}")
            out.append(f"beta = {report['beta']:.6f}")
            out.append(f"log zeta = {_f(report['log_zeta'])} {unit}"
                       f"  (stderr {report['log_zeta_stderr']:.2e})")
            out.append(f"S_ME = {_f(report['s_me'])} {unit}")
            out.append(f"  note: {report['s_me_note']}")
            out.append(f"  note: {report['zeta_note']}")
            d = report["diagnostics"]
            smp = report["sampling"]
            out.append(f"samples = {smp['n_samples']}, seed = {smp['seed']}, ESS = {d['ess']:.1f}")
            if d["solver"] is not None:
                s = d["solver"]
                out.append(f"solver: {s['iterations']} iterations, residual {s['residual']:.2e}, "
                           f"{'converged' if s['converged'] else 'NOT converged'}")
            out.extend(f"warning: {w}" for w in d["warnings"])
    else:
        width = max(10, *(len(r["counts_file"]) for r in report["rows"]))
        out.append(f"{'counts':<{width}}  {'n':>6}  {'k':>3}  {'constraint':>10}  "
                   f"{'S_trad':>10}  {'beta':>10}  {'S_ME':>12}")
        for r in report["rows"]:
            out.append(
                f"{r['counts_file']:<{width}}  {r['n']:>6d}  {r['k']:>3d}  "
                f"{'yes' if r['constrained'] else 'no':>10}  {_f(r['s_traditional']):>10}  "
                f"{r['beta']:>10.6f}  {_f(r['s_me']):>12}"
            )
        out.append(f"units: {unit}; seed = {report['sampling']['seed']}, "
                   f"samples = {report['sampling']['n_samples']}")
        out.extend(f"flag: {f}" for f in report["flags"])
        out.append(f"caveat: {report['caveat']}")
        out.append(f"note: {report['s_me_note']}")
        out.extend(f"warning: {w}" for w in report["warnings"])
    return "\n".join(out) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediv",
        description="Traditional and maximum-relative-entropy diversity of species counts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--log-base", choices=["nats", "bits"], default="nats")
        p.add_argument("--format", choices=["text", "json"], default="text")

    def sampling(p):
        p.add_argument("--constraint", help="constraint JSON file")
        p.add_argument("--samples", type=int, default=10**6)
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (default: $MEDIV_SEED or 0)")
        p.add_argument("--prior-alpha", default="1.0",
                       help="Dirichlet concentration, scalar or comma-separated per species")
        p.add_argument("--tolerance", type=float, default=MONTE_CARLO_TOLERANCE)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("shannon", help="frequency-based Shannon and Simpson indices")
    p.add_argument("--counts", required=True)
    common(p)
    p.set_defaults(func=cmd_shannon)

    p = sub.add_parser("estimate", help="ME posterior and S_ME for one sample")
    p.add_argument("--counts", required=True)
    common(p)
    sampling(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="S_traditional vs S_ME side by side")
    p.add_argument("--counts", required=True, action="append",
                   help="counts CSV; repeat to compare several samples")
    common(p)
    sampling(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "tolerance", 1.0) <= 0:
            raise UsageError("--tolerance must be positive")
        report = args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"mediv: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"mediv: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnattainableTarget as exc:
        print(f"mediv: unattainable constraint: {exc}", file=sys.stderr)
        return EXIT_UNATTAINABLE
    except DegenerateConstraint as exc:
        print(f"mediv: degenerate constraint: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (MedivError, ValueError) as exc:
        print(f"mediv: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    render = render_json if args.format == "json" else render_text
    sys.stdout.write(render(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
