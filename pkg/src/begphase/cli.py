"""Command-line interface: every solver and sweep with machine-readable output.

Subcommands map one-to-one onto library operations.  Output is CSV (default)
or JSON; every numeric flag is echoed into the output header for provenance,
floats are serialized with 12 significant digits (round-half-even), and
identical invocations produce byte-identical artifacts.  Exit codes: 0 on
success, 2 on a domain error (message names the violated precondition),
64 on usage errors.
"""

import argparse
from dataclasses import dataclass
import json
import math
import os
import sys

import numpy as np

from . import canonical, diagram, limits, micro
from .core import CanonicalParams, DomainError, MicroParams, energy_domain

USAGE_EXIT = 64
DOMAIN_EXIT = 2

_NON_BINDING_FLAGS = {"fn", "cmd", "format", "out", "curves_out"}


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: command name, parameter bindings, output contract.

    Every parameter flag is captured (and echoed into output headers for
    provenance); grid specs must parse nonempty and tolerance overrides must
    lie within [1e-14, 1e-2], checked before any computation runs.
    """

    command: str
    bindings: dict
    format: str
    out: str | None

    @classmethod
    def from_args(cls, args):
        bindings = {}
        for key, val in sorted(vars(args).items()):
            if key in _NON_BINDING_FLAGS or val is None or val is False:
                continue
            if callable(val):
                continue
            bindings[key] = val
        for key, val in bindings.items():
            if key.endswith("grid") and isinstance(val, str):
                _parse_grid(val)   # nonempty, well-formed
            if key == "tol":
                _check_tol(val)
        return cls(command=args.cmd, bindings=bindings,
                   format=args.format, out=args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """12 significant digits, round-half-even; empty string for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{float(x):.12g}"


def _round12(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else str(obj)
    if isinstance(obj, (np.floating,)):
        return _round12(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round12(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _emit(args, columns, rows, payload=None):
    """Write csv (comment header + column row + data rows) or json; the
    header echoes the command and every parameter flag of the invocation."""
    cfg = args.run_config
    header = {"command": cfg.command, **cfg.bindings}
    lines = []
    if args.format == "json":
        doc = {"command": cfg.command, "params": _round12(header),
               "rows": [dict(zip(columns, _round12(list(r)))) for r in rows]}
        if payload:
            doc.update(_round12(payload))
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        for key in sorted(header):
            lines.append(f"# {key}={fmt(header[key]) if not isinstance(header[key], str) else header[key]}")
        if payload:
            for key in sorted(payload):
                lines.append(f"# {key}={fmt(payload[key]) if not isinstance(payload[key], str) else payload[key]}")
        lines.append(",".join(columns))
        for r in rows:
            lines.append(",".join(fmt(v) if not isinstance(v, str) else v
                                  for v in r))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str) -> list:
    """Parse 'start:stop:step' into an inclusive grid."""
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise DomainError(f"grid spec must be start:stop:step, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise DomainError(f"grid spec needs step > 0 and stop >= start, got {spec!r}")
    npts = int(math.floor((stop - start) / step + 1e-12)) + 1
    grid = [start + i * step for i in range(npts)]
    if not grid:
        raise DomainError(f"grid {spec!r} is empty")
    return grid


def _check_tol(value):
    v = float(value)
    if not 1e-14 <= v <= 1e-2:
        raise DomainError(f"tolerance must lie in [1e-14, 1e-2], got {value}")
    return v


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("BEG_THREADS")
    return int(env) if env else 1


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_canon(args):
    params = CanonicalParams(args.beta, args.K)
    sol = canonical.solve_canonical(params)
    free = canonical.canonical_free_energy(params)
    payload = {"phase": sol.phase_label, "min_value": sol.min_value,
               "free_energy": free}
    cols = ("z", "w", "nu_minus", "nu_zero", "nu_plus", "type")
    rows = [(z, w, m.nu_minus, m.nu_zero, m.nu_plus, r)
            for z, w, m, r in zip(sol.z_points, sol.w_points, sol.macrostates,
                                  sol.types)]
    _emit(args, cols, rows, payload)


def _cmd_canon_critical(args):
    crit = canonical.canonical_criticals(args.beta)
    cols = ("beta", "Kc2", "K1", "Kc1", "K2", "w1", "near_tricritical")
    rows = [(crit.beta, crit.k_second_order, crit.k_tangent, crit.k_first_order,
             crit.k_spinodal, crit.w_tangent, crit.near_tricritical)]
    _emit(args, cols, rows)


def _cmd_micro(args):
    params = MicroParams(args.u, args.K)
    sol = micro.solve_micro(params)
    payload = {"phase": sol.phase_label, "entropy": sol.entropy,
               "tied": sol.tied}
    cols = ("z", "nu_minus", "nu_zero", "nu_plus")
    rows = [(z, m.nu_minus, m.nu_zero, m.nu_plus)
            for z, m in zip(sol.z_points, sol.macrostates)]
    _emit(args, cols, rows, payload)


def _cmd_micro_critical(args):
    crit = micro.micro_criticals(args.u, args.K)
    cols = ("u", "Kc2", "Kc1", "C", "region")
    rows = [(crit.u, crit.k_second_order, crit.k_first_order,
             crit.k_convexity, crit.region or "")]
    _emit(args, cols, rows)


def _stream_csv(args, columns, row_iter):
    """CSV variant that appends rows as they are computed, so interrupted
    sweeps still leave a usable artifact (dense grids can be slow)."""
    cfg = args.run_config
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        header = {"command": cfg.command, **cfg.bindings}
        for key in sorted(header):
            sink.write(f"# {key}={fmt(header[key]) if not isinstance(header[key], str) else header[key]}\n")
        sink.write(",".join(columns) + "\n")
        for r in row_iter:
            sink.write(",".join(fmt(v) if not isinstance(v, str) else v
                                for v in r) + "\n")
            sink.flush()
    finally:
        if args.out:
            sink.close()


def _pad_roots(zs):
    return list(zs) + [None] * (3 - len(zs))


def _cmd_diagram_canon(args):
    betas = sorted(_parse_grid(args.beta_grid))
    Ks = sorted(_parse_grid(args.K_grid))
    cols = ("beta", "K", "branch", "z1", "z2", "z3", "G_min")

    def gen():
        for beta in betas:
            for K in Ks:
                sol = canonical.solve_canonical(CanonicalParams(beta, K))
                yield (beta, K, sol.phase_label, *_pad_roots(sol.z_points),
                       sol.min_value)

    if args.format == "csv":
        _stream_csv(args, cols, gen())
    else:
        _emit(args, cols, list(gen()))
    if args.curves_out:
        _, curves = diagram.sweep_canonical(betas, [], threads=_threads(args))
        ccols = ("beta", "Kc2", "K1", "Kc1", "K2", "w1")
        with open(args.curves_out, "w") as fh:
            fh.write(",".join(ccols) + "\n")
            for c in curves:
                fh.write(",".join(fmt(v) for v in
                                  (c.beta, c.k_second_order, c.k_tangent,
                                   c.k_first_order, c.k_spinodal,
                                   c.w_tangent)) + "\n")


def _cmd_diagram_micro(args):
    us = sorted(_parse_grid(args.u_grid))
    Ks = sorted(_parse_grid(args.K_grid))
    cols = ("u", "K", "branch", "z1", "z2", "z3", "entropy")

    def gen():
        for u in us:
            for K in Ks:
                lo, hi = energy_domain(K)
                if not lo <= u <= hi:
                    continue
                sol = micro.solve_micro(MicroParams(u, K))
                yield (u, K, sol.phase_label, *_pad_roots(sol.z_points),
                       sol.entropy)

    if args.format == "csv":
        _stream_csv(args, cols, gen())
    else:
        _emit(args, cols, list(gen()))
    if args.curves_out:
        _, curves = diagram.sweep_micro(us, [], threads=_threads(args),
                                        with_convexity=not args.no_convexity)
        ccols = ("u", "Kc2", "Kc1", "C")
        with open(args.curves_out, "w") as fh:
            fh.write(",".join(ccols) + "\n")
            for c in curves:
                fh.write(",".join(fmt(v) for v in
                                  (c.u, c.k_second_order, c.k_first_order,
                                   c.k_convexity)) + "\n")


def _cmd_equivalence(args):
    beta_grid = _parse_grid(args.beta_grid) if args.beta_grid else None
    u_grid = _parse_grid(args.u_grid) if args.u_grid else None
    rep = diagram.equivalence_report(args.K, beta_grid=beta_grid, u_grid=u_grid)
    payload = {"verdict": rep.verdict, "gap_measure": rep.gap_measure,
               "n_canonical_values": len(rep.canonical_z),
               "n_micro_values": len(rep.micro_z)}
    cols = ("gap_lo", "gap_hi")
    rows = [(a, b) for a, b in rep.gap_intervals]
    _emit(args, cols, rows, payload)


def _cmd_limits(args):
    params = CanonicalParams(args.beta, args.K)
    if args.mode == "ks":
        ns = [int(x) for x in args.ns.split(",")]
        dists = limits.convergence_diagnostic(ns, params)
        _emit(args, ("n", "distance"), list(zip(ns, dists)))
    elif args.mode == "conditioned":
        ns = [int(x) for x in args.ns.split(",")]
        dists = [limits.conditioned_clt_check(n, params, j=args.j, a=args.a)
                 for n in ns]
        _emit(args, ("n", "distance"), list(zip(ns, dists)))
    elif args.mode == "classify":
        sol = canonical.solve_canonical(params)
        rows = []
        for z in sol.z_points:
            rep = limits.classify_minimum(params, z)
            rows.append((z, rep.r, *rep.derivative_values, rep.sigma2))
        _emit(args, ("z", "r", "G2", "G4", "G6", "sigma2"), rows)
    else:  # metropolis
        res = limits.metropolis_sampler(args.n, params, args.steps, args.seed)
        pmf = limits.exact_spin_pmf(args.n, params)
        tv = 0.5 * float(np.abs(res.s_probs - pmf.probabilities).sum())
        payload = {"tv_vs_exact": tv, "acceptance_rate": res.acceptance_rate,
                   "freq_minus": res.spin_freq.nu_minus,
                   "freq_zero": res.spin_freq.nu_zero,
                   "freq_plus": res.spin_freq.nu_plus}
        rows = [(int(k), p) for k, p in zip(pmf.spins, res.s_probs) if p > 0]
        _emit(args, ("S", "empirical_probability"), rows, payload)


def _cmd_pmf(args):
    params = CanonicalParams(args.beta, args.K)
    pmf = limits.exact_spin_pmf(args.n, params)
    rows = list(zip((int(k) for k in pmf.spins), pmf.probabilities,
                    pmf.log_weights))
    _emit(args, ("k", "probability", "log_weight"), rows)


def _cmd_oracle(args):
    minima, value = diagram.simplex_oracle(
        args.kind, beta=args.beta, u=args.u, K=args.K, tol=args.tol,
        grid_step=args.grid_step)
    payload = {"min_value": value, "n_minima": len(minima)}
    rows = [(m.nu_minus, m.nu_zero, m.nu_plus) for m in minima]
    _emit(args, ("nu_minus", "nu_zero", "nu_plus"), rows, payload)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="begphase",
                description="Equilibrium macrostates, critical couplings and "
                            "limit-law diagnostics for the mean-field spin-1 model.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker cap for sweeps (default $BEG_THREADS or 1)")

    sp = sub.add_parser("canon", help="equilibrium macrostates at (beta, K)")
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--K", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_canon)

    sp = sub.add_parser("canon-critical", help="critical couplings at beta")
    sp.add_argument("--beta", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_canon_critical)

    sp = sub.add_parser("micro", help="equilibrium macrostates at (u, K)")
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--K", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_micro)

    sp = sub.add_parser("micro-critical", help="critical couplings at u")
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--K", type=float, default=None,
                    help="optional coupling to place above/below the convexity curve")
    common(sp)
    sp.set_defaults(fn=_cmd_micro_critical)

    sp = sub.add_parser("diagram-canon", help="canonical sweep over a grid")
    sp.add_argument("--beta-grid", required=True, metavar="START:STOP:STEP")
    sp.add_argument("--K-grid", required=True, metavar="START:STOP:STEP")
    sp.add_argument("--curves-out", default=None)
    common(sp)
    sp.set_defaults(fn=_cmd_diagram_canon)

    sp = sub.add_parser("diagram-micro", help="microcanonical sweep over a grid")
    sp.add_argument("--u-grid", required=True, metavar="START:STOP:STEP")
    sp.add_argument("--K-grid", required=True, metavar="START:STOP:STEP")
    sp.add_argument("--curves-out", default=None)
    sp.add_argument("--no-convexity", action="store_true",
                    help="skip the convexity-threshold computation per u")
    common(sp)
    sp.set_defaults(fn=_cmd_diagram_micro)

    sp = sub.add_parser("equivalence",
                        help="order-parameter sets realized by both ensembles at K")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--beta-grid", default=None, metavar="START:STOP:STEP")
    sp.add_argument("--u-grid", default=None, metavar="START:STOP:STEP")
    common(sp)
    sp.set_defaults(fn=_cmd_equivalence)

    sp = sub.add_parser("limits", help="limit-law diagnostics at (beta, K)")
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--mode", choices=("ks", "conditioned", "classify",
                                       "metropolis"), default="ks")
    sp.add_argument("--ns", default="500,1000,2000",
                    help="comma-separated system sizes")
    sp.add_argument("--j", choices=("+", "-"), default="+")
    sp.add_argument("--a", type=float, default=None,
                    help="conditioning window half-width")
    sp.add_argument("--n", type=int, default=50, help="metropolis system size")
    sp.add_argument("--steps", type=int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(fn=_cmd_limits)

    sp = sub.add_parser("pmf", help="exact total-spin distribution")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--K", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_pmf)

    sp = sub.add_parser("oracle", help="brute-force simplex scan")
    sp.add_argument("--kind", choices=("canonical", "micro"), required=True)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--u", type=float, default=None)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--tol", type=float, default=5e-4)
    sp.add_argument("--grid-step", type=float, default=5e-4)
    common(sp)
    sp.set_defaults(fn=_cmd_oracle)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.run_config = RunConfig.from_args(args)
        args.fn(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return DOMAIN_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
