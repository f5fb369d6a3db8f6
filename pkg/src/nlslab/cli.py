"""Command-line interface.

Exit codes: 0 all asserted inequalities/fits within tolerance;
2 a numerical assertion failed (the failing quantity is named in the
report); 3 resolution/lifespan/configuration abort.
"""

import argparse
import logging
import sys

import numpy as np

from .config import EXPERIMENT_NAMES, load_config
from .errors import (
    ConfigError,
    DegenerateCouplingError,
    LifespanError,
    NlsLabError,
    ResolutionError,
)
from .experiments import run_experiment, write_outputs

EXIT_OK = 0
EXIT_ASSERT = 2
EXIT_ABORT = 3

logger = logging.getLogger("nlslab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nlslab",
        description="Scaling-law experiments for semiclassical NLS bubble data",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=EXPERIMENT_NAMES)
    run.add_argument("--config", default=None, help="YAML config file")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--resolution", type=int, default=None, help="grid points per axis")

    chk = sub.add_parser("check", help="run the fast invariant battery")
    chk.add_argument("--out", default=None)

    sweep = sub.add_parser("sweep", help="run an experiment over an explicit parameter list")
    sweep.add_argument("experiment", choices=EXPERIMENT_NAMES)
    sweep.add_argument("--param", choices=["eps"], default="eps")
    sweep.add_argument("--values", required=True,
                       help="comma-separated values, e.g. 0.1,0.05,0.025")
    sweep.add_argument("--config", default=None)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--threads", type=int, default=None)
    sweep.add_argument("--resolution", type=int, default=None)
    return p


def _overrides(args) -> dict:
    over = {}
    if getattr(args, "out", None):
        over["output_dir"] = args.out
    if getattr(args, "threads", None):
        over["threads"] = args.threads
    if getattr(args, "resolution", None):
        over["grid"] = {"N": args.resolution}
    return over


def _run(args) -> int:
    over = _overrides(args)
    if getattr(args, "param", None) == "eps" and getattr(args, "values", None):
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values: {args.values!r}") from exc
        over["epsilon_list"] = values
    cfg = load_config(args.config, experiment=args.experiment, overrides=over)
    result = run_experiment(cfg)
    paths = write_outputs(result, cfg["output_dir"])
    for crit in result.criteria:
        status = "pass" if crit.passed else "FAIL"
        print(f"[{status}] {crit.name}: value {crit.value:.6g} "
              f"(target {crit.target:g} +- {crit.tolerance:g})")
    print(f"wrote {paths['csv']} and {paths['summary']}")
    return EXIT_OK if result.passed else EXIT_ASSERT


def _check(args) -> int:
    """Fast structural invariants; a smoke test, not the full pytest suite."""
    from . import diagnostics, nls
    from .bubbles import ModelParams, geometric_ladder, rescale_to_semiclassical
    from .hydro import SolverConfig, initial_state, step, cfl_dt, symbol_matrix, symmetrizer
    from .spectral import Field, Grid, fractional_derivative, l2_norm, sobolev_norm, transform

    failures = []

    def expect(name, ok):
        print(f"[{'pass' if ok else 'FAIL'}] {name}")
        if not ok:
            failures.append(name)

    rng = np.random.default_rng(0)
    g = Grid(1, 256, 2 * np.pi)
    f = Field(g, rng.standard_normal(256) + 1j * rng.standard_normal(256))
    expect("plancherel", abs(l2_norm(f) - l2_norm(transform(f, "forward"))) < 1e-12 * l2_norm(f))
    comp = fractional_derivative(fractional_derivative(f, 0.4), 0.6)
    direct = fractional_derivative(f, 1.0)
    expect("multiplier_composition",
           float(np.max(np.abs(comp.values - direct.values))) < 1e-10 * l2_norm(f))
    expect("sobolev_zero_is_l2",
           abs(sobolev_norm(f, 0.0, homogeneous=False) - l2_norm(f)) < 1e-12 * l2_norm(f))

    xi = rng.standard_normal(3)
    U = rng.standard_normal(5)
    S = symmetrizer(3, 3)
    SM = S @ symbol_matrix(U, xi, 3)
    expect("symmetrizer", float(np.max(np.abs(SM - SM.T))) < 1e-12)

    params = ModelParams(dim=1, m=3, s=0.1)
    ladder = geometric_ladder(params, h0=0.5, gamma=0.5, rungs=1, r1=1.5)
    datum = rescale_to_semiclassical(ladder, 0, g)
    run = nls.start_run(datum.u0, 0.1, 3)
    m0 = nls.mass(run)
    for _ in range(100):
        nls.strang_step(run)
    expect("mass_conservation", abs(nls.mass(run) - m0) < 1e-10 * m0)

    st = initial_state(Field(g, datum.u0.values.real), 3)
    sc = SolverConfig()
    st2 = step(st, 0.5 * cfl_dt(st, sc), sc)
    expect("hydro_step_finite", bool(np.all(np.isfinite(st2.A))))
    u = Field(g, datum.u0.values.astype(complex))
    P = diagnostics.potential(u, Field(g, datum.u0.values.real ** 2), 3)
    expect("potential_vanishes_on_match", abs(P) < 1e-12)

    print(f"{'all checks passed' if not failures else f'{len(failures)} checks failed'}")
    return EXIT_OK if not failures else EXIT_ASSERT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command in ("run", "sweep"):
            return _run(args)
        if args.command == "check":
            return _check(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ResolutionError, LifespanError, DegenerateCouplingError) as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except NlsLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
