"""Command-line entry point: ``dmnls <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, RunConfig, parse_config_file
from .grid import h1_norm, l2_norm

DEFAULT_EPS = (0.1, 0.05, 0.025, 0.0125)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _eps_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="FILE", help="key = value config file")
    p.add_argument("--n", type=int)
    p.add_argument("--length", type=float)
    p.add_argument("--eps", type=str, help="eps, or a comma list for sweeps")
    p.add_argument("--gamma", type=float)
    p.add_argument("--dav", type=float, dest="d_av")
    p.add_argument("--tmax", type=float, dest="t_end")
    p.add_argument("--dt", type=float)
    p.add_argument("--steps-per-half-cell", type=int)
    p.add_argument("--quad-nodes", type=int)
    p.add_argument("--snapshot-stride", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int)
    p.add_argument("--initial", metavar="SNAPSHOT", help="initial datum from a snapshot file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="dmnls",
        description="Dispersion-managed NLS with lumped amplification: solvers and checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="solve one equation")
    p.add_argument("--equation", choices=("full", "transformed", "averaged"))
    p.add_argument("--method", choices=("pullback", "rk4"), default="pullback",
                   help="route for the transformed equation")

    sub.add_parser("sweep", parents=[common], help="averaging-rate eps sweep")

    p = sub.add_parser("perturbed-sweep", parents=[common],
                       help="eps sweep with ||u0 - v0||_H1 = scale * eps")
    p.add_argument("--scale", type=float, default=1.0)

    p = sub.add_parser("lipschitz", parents=[common], help="Lipschitz dependence probe")
    p.add_argument("--deltas", type=str, default="1e-2,1e-3,1e-4")

    sub.add_parser("verify", parents=[common], help="run the verification suite")

    p = sub.add_parser("snapshot-dump", help="print a snapshot file")
    p.add_argument("path")
    p.add_argument("--samples", action="store_true", help="also print x,re,im rows")
    return parser


def resolve_config(args: argparse.Namespace) -> tuple[RunConfig, list[float] | None]:
    """Defaults, then the config file, then explicit flags."""
    kw: dict = {}
    eps_list = None
    if args.config:
        kw.update(parse_config_file(args.config))
        eps_list = kw.pop("eps_list", None)
    for name in ("n", "length", "gamma", "d_av", "t_end", "dt", "steps_per_half_cell",
                 "quad_nodes", "snapshot_stride", "out", "seed", "initial"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "equation", None):
        kw["equation"] = args.equation
    if args.eps is not None:
        vals = _eps_list(args.eps)
        if len(vals) == 1:
            kw["eps"] = vals[0]
            eps_list = None
        else:
            eps_list = vals
    if eps_list and "eps" not in kw:
        kw["eps"] = eps_list[0]
    return RunConfig(**kw), eps_list


def _cmd_simulate(cfg: RunConfig, args) -> int:
    from .snapshot import snapshot_write
    from .solvers import solve_averaged, solve_full, solve_transformed

    u0 = cfg.initial_field()
    scfg = cfg.solve_config()
    if cfg.equation == "full":
        tr = solve_full(u0, cfg.fiber, scfg)
    elif cfg.equation == "transformed":
        tr = solve_transformed(u0, cfg.fiber, scfg, method=args.method)
    else:
        tr = solve_averaged(u0, cfg.gamma, cfg.d_av, scfg)
    _write_csv(os.path.join(cfg.out, "diagnostics.csv"), "t,mass,h1,energy",
               tr.diagnostics_table())
    snapshot_write(tr.snapshots[-1], tr.times[-1], os.path.join(cfg.out, "final.dmnls"))
    m0, m1 = tr.mass[0], tr.mass[-1]
    print(f"{cfg.equation}: {len(tr)} snapshots to t={tr.times[-1]:g}; "
          f"relative mass drift {abs(m1 - m0) / m0 if m0 else 0.0:.3e}")
    return 0


def _cmd_sweep(cfg: RunConfig, eps_list, args, perturbed: bool) -> int:
    from .harness import SweepAbortedError, perturbed_sweep, sweep_epsilon

    eps_list = eps_list or list(DEFAULT_EPS)
    try:
        if perturbed:
            res = perturbed_sweep(cfg, eps_list, scale=args.scale)
        else:
            res = sweep_epsilon(cfg, eps_list)
    except SweepAbortedError as exc:
        _write_csv(os.path.join(cfg.out, "sweep_partial.csv"), "eps,sup_h1_error", exc.partial)
        print(f"sweep aborted: {exc}", file=sys.stderr)
        return 2
    _write_csv(os.path.join(cfg.out, "sweep.csv"), "eps,sup_h1_error",
               zip(res.eps_values, res.errors))
    for e, err in zip(res.eps_values, res.errors):
        print(f"eps={e:<10g} sup_H1_error={err:.6e}")
    print(f"slope={res.slope:.4f} intercept={res.intercept:.4f} (C~{res.constant:.4g}) "
          f"stride_sensitivity={res.stride_sensitivity:.2e}")
    if res.inversions:
        print(f"non-monotone errors at eps={[e for e, _ in res.inversions]}")
    if res.hypothesis_violations:
        print(f"hypothesis-violating: ||u0 - v0||_H1 > eps for eps={res.hypothesis_violations}")
    return 0


def _cmd_lipschitz(cfg: RunConfig, args) -> int:
    from .harness import lipschitz_probe

    res = lipschitz_probe(cfg, _eps_list(args.deltas))
    rows = [(d, diff, r, f) for (d, diff, r), f in zip(res.rows, res.final_ratios)]
    _write_csv(os.path.join(cfg.out, "lipschitz.csv"), "delta,sup_h1_difference,ratio,final_ratio",
               rows)
    for d, diff, r, f in rows:
        print(f"delta={d:<8g} sup_diff={diff:.6e} ratio={r:.6f} final_ratio={f:.6f}")
    print(f"stabilized={res.stabilized} nongrowing={res.nongrowing}")
    return 0


def _cmd_verify(cfg: RunConfig) -> int:
    from .verify import verify_suite, write_report

    records = verify_suite(cfg)
    write_report(records, os.path.join(cfg.out, "verify.jsonl"))
    for r in records:
        print(r.to_json())
    return 0 if all(r.passed for r in records) else 1


def _cmd_dump(args) -> int:
    from .snapshot import snapshot_read

    f, t = snapshot_read(args.path)
    print(f"n={f.grid.n} length={_fmt(f.grid.length)} t={_fmt(t)} "
          f"l2={_fmt(l2_norm(f))} h1={_fmt(h1_norm(f))}")
    if args.samples:
        print("x,re,im")
        for x, z in zip(f.grid.x, f.values):
            print(f"{_fmt(x)},{_fmt(z.real)},{_fmt(z.imag)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "snapshot-dump":
        return _cmd_dump(args)
    try:
        cfg, eps_list = resolve_config(args)
    except (ConfigError, ValueError, OSError) as exc:
        parser.error(str(exc))
        return 2  # pragma: no cover
    os.makedirs(cfg.out, exist_ok=True)
    if args.command == "simulate":
        return _cmd_simulate(cfg, args)
    if args.command == "sweep":
        return _cmd_sweep(cfg, eps_list, args, perturbed=False)
    if args.command == "perturbed-sweep":
        return _cmd_sweep(cfg, eps_list, args, perturbed=True)
    if args.command == "lipschitz":
        return _cmd_lipschitz(cfg, args)
    if args.command == "verify":
        return _cmd_verify(cfg)
    parser.error(f"unknown command {args.command}")  # pragma: no cover
    return 2


if __name__ == "__main__":
    sys.exit(main())
