"""Reproducible experiment driver.

Every subcommand validates its parameters up front, routes all randomness
through an explicit seed, and writes machine-readable output (csv or json)
that embeds the fully resolved configuration, so a run can be reproduced
from its artifact alone.  Numeric output is formatted at 12 significant
digits and is byte-stable across runs and worker counts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import __version__
from . import functionals as fn
from ._kernels import resolve_threads
from .cascade import (
    DEFAULT_TAIL_TOL,
    gg_residual_pd,
    pd_moment_closed_form,
    pd_overlap_functional,
    pd_power_moment,
    sample_pd,
)
from .estimates import MCEstimate
from .field import default_grid_size, evaluate_field, sample_disorder
from .free_energy import (
    LimitParams,
    bk_residual,
    derivative_at_zero,
    derivative_identity_gap,
    free_energy_curve,
    limiting_branch,
    limiting_free_energy,
    second_derivative_variance_check,
)
from .gibbs import (
    CRITICAL_BETA,
    DEFAULT_EPSILON,
    DEFAULT_N_DISORDER,
    DEFAULT_N_DRAWS,
    concentration_stat,
    disorder_states,
    overlap_functional_field,
    two_overlap_histogram,
)
from .harness import compare_field_vs_cascade, gg_residual_field, subcritical_report
from .primes import load_prime_cache, save_prime_cache, sieve
from . import verify as verify_mod


class CliError(Exception):
    pass


def fmt(x) -> str:
    """Numeric formatting contract: 12 significant digits."""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    return obj


def parse_phi(name: str, s: int, rng_seed: int = 0) -> fn.OverlapFunctionalSpec:
    """Named replica functionals usable from the command line."""
    if name == "one":
        return fn.constant(s, 1.0)
    if name == "all-equal":
        return fn.all_equal_indicator(s)
    if name == "pair-equal":
        return fn.pair_equal_indicator(s)
    if name == "high-band":
        eps = DEFAULT_EPSILON

        def indicator(o, eps=eps):
            return (o[:, 0] > 1.0 - eps).astype(float)

        return fn.from_callable(s, indicator)
    if name.startswith("random"):
        tag = int(name.split(":", 1)[1]) if ":" in name else rng_seed
        return fn.random_tabulated(s, np.random.default_rng(tag))
    raise CliError(
        f"unknown functional {name!r}; choose one, all-equal, pair-equal, high-band, random[:seed]"
    )


def parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _theta_from(args) -> float:
    if getattr(args, "theta", None) is not None:
        return args.theta
    if getattr(args, "beta", None) is not None:
        if args.beta <= CRITICAL_BETA:
            raise CliError(f"--beta must exceed {CRITICAL_BETA} to map to theta = 2/beta")
        return CRITICAL_BETA / args.beta
    raise CliError("provide --theta or --beta")


# ---------------------------------------------------------------------------
# output writing


def _estimate_rows(statistic: str, est: MCEstimate, **extra):
    row = dict(extra)
    row.update(
        statistic=statistic,
        estimate=est.mean,
        stderr=est.stderr,
        n_outer=est.n_outer,
        n_inner=est.n_inner,
        seed_base=est.seed_base,
    )
    return row


def write_output(args, config: dict, rows: list[dict], out=None):
    """Emit rows as csv (with config comment header) or json."""
    import csv

    stream = out or (sys.stdout if args.output == "-" else open(args.output, "w", newline=""))
    try:
        if args.format == "json":
            payload = {"config": round12(config), "results": round12(rows)}
            stream.write(json.dumps(payload, sort_keys=True, indent=2))
            stream.write("\n")
        else:
            for key in sorted(config):
                stream.write(f"# {key} = {fmt(config[key])}\n")
            if rows:
                header = list(rows[0].keys())
                writer = csv.writer(stream, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([
                        fmt(row[h]) if not isinstance(row[h], dict) else json.dumps(round12(row[h]), sort_keys=True)
                        for h in header
                    ])
    finally:
        if stream is not sys.stdout:
            stream.close()


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_sieve_stats(args):
    ps = sieve(args.limit)
    if args.prime_cache:
        save_prime_cache(args.prime_cache, ps)
    rows = [
        {
            "limit": float(args.limit),
            "count": len(ps),
            "largest": int(ps.primes[-1]) if len(ps) else 0,
        }
    ]
    return rows


def cmd_field_eval(args):
    alphas = sorted(set(parse_float_list(args.alphas)))
    if args.prime_cache:
        ps = load_prime_cache(args.prime_cache, limit=args.T)
    else:
        ps = sieve(args.T)
    disorder = sample_disorder(ps, args.seed)
    n = args.n_grid or default_grid_size(args.T)
    grid = evaluate_field(disorder, alphas, n)
    rows = []
    for ai, alpha in enumerate(grid.alphas):
        for j in range(grid.n_grid):
            rows.append({"h": j / grid.n_grid, "alpha": alpha, "value": float(grid.values[ai, j])})
    return rows


def cmd_two_overlap(args):
    bands = two_overlap_histogram(
        args.T, args.beta, args.epsilon, args.n_disorder, args.n_draws, args.seed
    )
    shared = {"T": args.T, "beta": args.beta}
    return [
        _estimate_rows("low_band_mass", bands.low, **shared),
        _estimate_rows("middle_band_mass", bands.middle, **shared),
        _estimate_rows("high_band_mass", bands.high, **shared),
    ]


def cmd_overlap_functional(args):
    phi = parse_phi(args.phi, args.s, args.seed)
    est = overlap_functional_field(
        args.T, args.beta, phi, args.n_disorder, args.n_draws, args.seed, args.epsilon
    )
    return [_estimate_rows(f"functional_{args.phi}_s{args.s}", est, T=args.T, beta=args.beta)]


def cmd_free_energy_curve(args):
    if args.u_grid == "default":
        u_values = None
    else:
        lo, hi, count = args.u_grid.split(":")
        u_values = np.linspace(float(lo), float(hi), int(count))
    curve = free_energy_curve(
        args.T, args.alpha, args.beta, u_values, args.n_disorder, args.seed
    )
    rows = []
    for j, u in enumerate(curve.u_values):
        rows.append(
            {
                "T": curve.T,
                "alpha": curve.alpha,
                "beta": curve.beta,
                "u": float(u),
                "f_finite_mean": float(curve.finite_means[j]),
                "f_finite_stderr": float(curve.finite_stderrs[j]),
                "f_limit": float(curve.limit_values[j]),
                "branch_id": curve.branch_ids[j],
            }
        )
    return rows


def cmd_derivative_check(args):
    grid = next(
        disorder_states(args.T, args.beta, 1, args.seed, (args.alpha, 1.0))
    ).grid
    direct, central = derivative_at_zero(grid, args.alpha, args.beta, args.h_step)
    fd2, variance = second_derivative_variance_check(
        grid, args.alpha, args.beta, 0.0, max(args.h_step, 1e-2)
    )
    return [
        {
            "T": args.T,
            "alpha": args.alpha,
            "beta": args.beta,
            "derivative_direct": direct,
            "derivative_central": central,
            "relative_gap": abs(central - direct) / max(abs(direct), 1e-300),
            "second_derivative_rescaled": fd2,
            "gibbs_variance": variance,
            "limit_derivative": args.beta * args.alpha,
        }
    ]


def cmd_bk_residual(args):
    phi = parse_phi(args.phi, args.s, args.seed)
    est = bk_residual(
        args.T, args.alpha, args.beta, args.s, args.k, phi,
        args.n_disorder, args.n_draws, args.seed, args.epsilon,
    )
    return [
        _estimate_rows(
            f"bk_residual_s{args.s}_k{args.k}", est,
            T=args.T, beta=args.beta, alpha=args.alpha,
        )
    ]


def cmd_gg_field(args):
    phi = parse_phi(args.phi, args.s, args.seed)
    psi = tuple(parse_float_list(args.psi)) if args.psi else None
    if psi is not None and len(psi) != 2:
        raise CliError("--psi takes two comma-separated values: psi(0),psi(1)")
    est = gg_residual_field(
        args.T, args.beta, args.alpha, args.s, args.k, psi, phi,
        args.n_disorder, args.n_draws, args.seed, args.epsilon,
    )
    return [
        _estimate_rows(
            f"gg_field_residual_s{args.s}_k{args.k}", est,
            T=args.T, beta=args.beta, alpha=args.alpha,
        )
    ]


def cmd_pd_sample(args):
    theta = _theta_from(args)
    pd = sample_pd(theta, args.seed, args.tail_tol)
    limit = args.max_weights if args.max_weights else pd.weights.size
    rows = [
        {"theta": theta, "rank": i + 1, "weight": float(w)}
        for i, w in enumerate(pd.weights[:limit])
    ]
    return rows, {"tail_mass_bound": pd.tail_mass_bound, "n_atoms": pd.weights.size}


def cmd_pd_moments(args):
    theta = _theta_from(args)
    est = pd_power_moment(theta, args.m, args.n_samples, args.seed, args.tail_tol)
    closed = pd_moment_closed_form(theta, args.m)
    row = _estimate_rows(f"pd_moment_m{args.m}", est, theta=theta)
    row["closed_form"] = closed
    row["abs_gap"] = abs(est.mean - closed)
    return [row]


def cmd_gg_pd(args):
    theta = _theta_from(args)
    phi = parse_phi(args.phi, args.s, args.seed)
    psi = tuple(parse_float_list(args.psi))
    if len(psi) != 2:
        raise CliError("--psi takes two comma-separated values: psi(0),psi(1)")
    est = gg_residual_pd(theta, args.s, args.k, psi, phi, args.n_samples, args.seed, args.tail_tol)
    return [_estimate_rows(f"gg_pd_residual_s{args.s}_k{args.k}", est, theta=theta)]


def cmd_compare(args):
    phi = parse_phi(args.phi, args.s, args.seed)
    report = compare_field_vs_cascade(
        args.beta, phi, parse_float_list(args.T_list),
        args.n_disorder, args.n_draws, args.n_pd_samples, args.seed, args.epsilon,
    )
    rows = []
    for row in report.rows:
        rows.append(
            {
                "T": row.T,
                "beta": args.beta,
                "theta": report.theta,
                "field_estimate": row.estimate.mean,
                "field_stderr": row.estimate.stderr,
                "cascade_estimate": report.cascade.mean,
                "cascade_stderr": report.cascade.stderr,
                "gap": row.gap,
                "exclusion_rate": row.exclusion_rate.mean,
            }
        )
    return rows


def cmd_subcritical(args):
    phi = parse_phi(args.phi, args.s, args.seed)
    report = subcritical_report(
        args.beta, parse_float_list(args.T_list), args.s, phi,
        args.n_disorder, args.n_draws, args.seed, args.epsilon,
    )
    rows = []
    for row in report.rows:
        rows.append(
            {
                "T": row.T,
                "beta": args.beta,
                "low_band_mass": row.low_band_mass.mean,
                "low_band_stderr": row.low_band_mass.stderr,
                "functional": row.functional.mean,
                "functional_stderr": row.functional.stderr,
                "target_functional": report.target_functional,
            }
        )
    return rows


def cmd_verify(args):
    results = verify_mod.run_suite(args.suite, seed=args.seed)
    rows = []
    for res in results:
        line = f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.summary}"
        print(line, file=sys.stderr)
        rows.append(
            {
                "criterion": res.name,
                "passed": res.passed,
                "summary": res.summary,
                "details": res.details,
            }
        )
    n_fail = sum(1 for r in results if not r.passed)
    print(
        f"{len(results) - n_fail}/{len(results)} criteria passed ({args.suite} suite)",
        file=sys.stderr,
    )
    return rows, {"suite": args.suite, "failures": n_fail}


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p, *, seed=0):
    p.add_argument("--output", default="-", help="output path, - for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=seed, help="seed base for all randomness")
    p.add_argument("--threads", type=int, default=None, help="worker count (or env ZC_THREADS)")
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.add_argument("--prime-cache", dest="prime_cache", default=None,
                   help="on-disk prime cache path")


def _add_mc(p, n_disorder=DEFAULT_N_DISORDER, n_draws=DEFAULT_N_DRAWS):
    p.add_argument("--n-disorder", dest="n_disorder", type=int, default=n_disorder)
    p.add_argument("--n-draws", dest="n_draws", type=int, default=n_draws)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="band half-width for overlap rounding/histograms")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zc",
        description="Monte Carlo engine for the prime-phase random field and "
        "its Poisson-Dirichlet cascade limit",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve-stats", help="prime counts up to a limit")
    p.add_argument("--limit", type=float, required=True)
    _add_common(p)
    p.set_defaults(handler=cmd_sieve_stats)

    p = sub.add_parser("field-eval", help="evaluate the field on the grid")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--alphas", default="1.0", help="comma-separated truncation levels")
    p.add_argument("--n-grid", dest="n_grid", type=int, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_field_eval)

    p = sub.add_parser("two-overlap", help="two-overlap band masses")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--beta", type=float, default=4.0)
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_two_overlap)

    p = sub.add_parser("overlap-functional", help="s-replica overlap functional")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--phi", default="pair-equal")
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_overlap_functional)

    p = sub.add_parser("free-energy-curve", help="finite-T free energy vs the closed form")
    p.add_argument("--T", type=float, default=1e6)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--u-grid", dest="u_grid", default="default", help="default or lo:hi:count")
    p.add_argument("--n-disorder", dest="n_disorder", type=int, default=16)
    _add_common(p)
    p.set_defaults(handler=cmd_free_energy_curve)

    p = sub.add_parser("derivative-check", help="derivative identities on one realization")
    p.add_argument("--T", type=float, default=1e6)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--h-step", dest="h_step", type=float, default=1e-3)
    _add_common(p, seed=1)
    p.set_defaults(handler=cmd_derivative_check)

    p = sub.add_parser("bk-residual", help="derivative-overlap link residual")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--phi", default="high-band")
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_bk_residual)

    p = sub.add_parser("gg-field", help="replica identity residual on the field")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--phi", default="high-band")
    p.add_argument("--psi", default=None, help="psi(0),psi(1); default is the clipped overlap integral")
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_gg_field)

    p = sub.add_parser("pd-sample", help="one cascade weight vector")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--tail-tol", dest="tail_tol", type=float, default=DEFAULT_TAIL_TOL)
    p.add_argument("--max-weights", dest="max_weights", type=int, default=100)
    _add_common(p)
    p.set_defaults(handler=cmd_pd_sample)

    p = sub.add_parser("pd-moments", help="cascade power moments vs closed form")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=10_000)
    p.add_argument("--tail-tol", dest="tail_tol", type=float, default=DEFAULT_TAIL_TOL)
    _add_common(p)
    p.set_defaults(handler=cmd_pd_moments)

    p = sub.add_parser("gg-pd", help="cascade replica identity residual")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--psi", default="0,1")
    p.add_argument("--phi", default="pair-equal")
    p.add_argument("--n-samples", dest="n_samples", type=int, default=10_000)
    p.add_argument("--tail-tol", dest="tail_tol", type=float, default=DEFAULT_TAIL_TOL)
    _add_common(p)
    p.set_defaults(handler=cmd_gg_pd)

    p = sub.add_parser("compare", help="field functionals vs the cascade limit")
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--phi", default="pair-equal")
    p.add_argument("--T-list", dest="T_list", default="1e4,1e6,1e8")
    p.add_argument("--n-pd-samples", dest="n_pd_samples", type=int, default=10_000)
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("subcritical", help="high-temperature spread-out checks")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--phi", default="all-equal")
    p.add_argument("--T-list", dest="T_list", default="1e4,1e6,1e8")
    _add_mc(p)
    _add_common(p)
    p.set_defaults(handler=cmd_subcritical)

    p = sub.add_parser("verify", help="run the acceptance battery")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    _add_common(p)
    p.set_defaults(handler=cmd_verify)

    return ap


def apply_config_file(args: argparse.Namespace, argv: Sequence[str]) -> None:
    """Merge flat key = value settings; explicit flags win."""
    if not args.config:
        return
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    try:
        text = open(args.config).read()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}")
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{args.config}:{line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise CliError(f"{args.config}:{line_no}: unknown setting {key!r}")
        if key in explicit:
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, key, int(value))
        elif isinstance(current, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)


def resolved_config(args) -> dict:
    skip = {"handler", "command", "output", "format", "config"}
    out = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        if isinstance(value, (int, float, str, bool)) or value is None:
            out[key] = value
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        apply_config_file(args, argv)
        resolve_threads(args.threads)
        result = args.handler(args)
        if isinstance(result, tuple):
            rows, extra = result
        else:
            rows, extra = result, {}
        config = resolved_config(args)
        config.update(extra)
        write_output(args, config, rows)
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
