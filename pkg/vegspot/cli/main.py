"""
Command line interface, ``python -m vegspot <subcommand>``.

Every subcommand writes its artifacts and a manifest.json into --out.
Bad flags exit with 1, numerical failures with 2.
"""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from vegspot import __version__
from vegspot.analysis.singular_geometry import (
    Direction,
    predict_interface_radius,
    sideband_coefficient,
    singular_front,
)
from vegspot.analysis.spectral import (
    direct_spectrum,
    lambda1_table,
    spectrum_along_branch,
    write_lambda_table,
    write_spectrum,
)
from vegspot.cli import plots
from vegspot.cli.artifacts import RunManifest, output_directory, sha256_file, write_csv, write_json
from vegspot.errors import (
    BadRadii,
    DomainError,
    InvalidParameters,
    RegimeExceeded,
    RestrictionViolated,
    VegspotError,
)
from vegspot.model.model_core import (
    Classification,
    ModelParams,
    restriction_satisfied,
    restriction_window,
    spot_gap_criterion,
)
from vegspot.numerics import radial_bvp, sim2d
from vegspot.numerics.traveling_front import solve_traveling_front
from vegspot.parallel.qt_sweep_worker import run_parallel

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_NUMERICAL = 2

# raised from what the user typed, reported like argparse errors
USAGE_ERRORS = (InvalidParameters, BadRadii, DomainError, RestrictionViolated, FileNotFoundError)


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive(text):
    value = float(text)
    if not math.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _model_flags(parser, delta=True):
    parser.add_argument("--a", type=_positive, required=True, help="rainfall")
    parser.add_argument("--b", type=_positive, default=1.0)
    parser.add_argument("--m", type=_positive, default=0.5)
    if delta:
        parser.add_argument("--delta", type=_positive, default=0.05)


def _params(args, delta=True):
    return ModelParams(args.a, args.b, args.m, args.delta if delta else 0.0)


_SIGNS = {Classification.SPOT: 1, Classification.GAP: -1, Classification.BOUNDARY: 0}


def _classify_cell(cell):
    """(admissible, +1 spot / -1 gap / 0 boundary) with the criterion's own tolerance"""
    a_over_m, b, m = cell
    params = ModelParams(a_over_m * m, b, m)
    if not restriction_satisfied(params):
        return False, 0
    return True, _SIGNS[spot_gap_criterion(params).classification]


def cmd_regions(args, out):
    manifest = RunManifest("regions", vars_of(args))
    if args.b is not None:
        b_values = np.array([args.b])
    else:
        b_values = np.linspace(args.b_min, args.b_max, args.samples)
    a_over_m = np.linspace(args.a_min, args.a_max, args.samples)
    cells = [(x, b, args.m) for b in b_values for x in a_over_m]
    results = run_parallel(_classify_cell, cells)
    labels = {1: Classification.SPOT.value, -1: Classification.GAP.value, 0: Classification.BOUNDARY.value}
    rows = [
        (x, b, admissible, labels[label] if admissible else "none")
        for (x, b, _), (admissible, label) in zip(cells, results)
    ]
    write_csv(out / "regions.csv", ("a_over_m", "b", "admissible", "classification"), rows)
    windows = []
    for b in b_values:
        low, high = restriction_window(b)
        windows.append((b, low, high, bool(low < high)))
    write_csv(out / "windows.csv", ("b", "a_over_m_low", "a_over_m_high", "nonempty"), windows)
    admissible = np.array([r[0] for r in results]).reshape(len(b_values), len(a_over_m)).T
    labels_grid = np.array([r[1] for r in results], dtype=float).reshape(len(b_values), len(a_over_m)).T
    if args.plot:
        plots.regions_plot(a_over_m, b_values, admissible, labels_grid, out / "regions.svg")
    return manifest


def cmd_predict_radius(args, out):
    params = _params(args, delta=False)
    manifest = RunManifest("predict-radius", vars_of(args), {"r0": args.r0})
    prediction = predict_interface_radius(params, kind=args.kind, r0=args.r0)
    payload = {
        "kind": prediction.kind,
        "r_interface": prediction.r_interface,
        "u_in": prediction.u_in,
        "departure": prediction.departure,
        "p_at_jump": prediction.p_at_jump,
        "residual": prediction.residual,
        "transversality": prediction.transversality,
        "criterion_margin": prediction.criterion_margin,
        "converged": prediction.converged,
    }
    write_json(out / "prediction.json", payload)
    logger.info("%s radius %.6f", prediction.kind, prediction.r_interface)
    return manifest


def cmd_solve(args, out):
    params = _params(args)
    kind = radial_bvp.ProfileKind(args.kind)
    manifest = RunManifest(
        "solve", vars_of(args), {"newton": radial_bvp.RadialSolver.NEWTON_TOL, "accept": radial_bvp.ACCEPT_TOL}
    )
    radii = args.radii
    if radii is None:
        if kind not in (radial_bvp.ProfileKind.SPOT, radial_bvp.ProfileKind.GAP):
            raise InvalidParameters(f"--radii is required for kind {kind.value}")
        radii = [predict_interface_radius(params, kind=kind.value).r_interface]
    grid = None
    if args.r_max is not None or args.n is not None:
        base = radial_bvp.default_grid(params, max(radii))
        grid = radial_bvp.RadialGrid(
            args.r_max if args.r_max is not None else base.r_max, args.n if args.n is not None else base.n
        )
    guess = radial_bvp.initial_guess(kind, params, radii, grid)
    profile = radial_bvp.solve_profile(guess)
    radial_bvp.write_profile(profile, out / "profile.csv")
    if args.plot:
        plots.profile_plot(profile, out / "profile.svg")
    logger.info("%s profile, interfaces %s", profile.kind.value, profile.interfaces)
    return manifest


def _rightmost_rows(result):
    rows = []
    for ell in result.ells:
        value = result.rightmost(ell)
        residual = result.residuals[ell][0] if len(result.residuals[ell]) else math.nan
        for sign in ((-1, 1) if ell else (1,)):
            rows.append((sign * ell, value.real, value.imag, residual))
    return sorted(rows)


def cmd_spectrum(args, out):
    manifest = RunManifest("spectrum", vars_of(args))
    manifest.add_input(args.profile)
    profile = radial_bvp.read_profile(args.profile)
    result = direct_spectrum(profile, range(0, args.lmax + 1), k=args.k)
    rows = _rightmost_rows(result)
    write_csv(out / "spectrum.csv", ("l", "re_lambda", "im_lambda", "residual"), rows)
    write_spectrum(result, out / "eigenvalues.csv", sha256_file(args.profile))
    if args.lambda1 and profile.kind is radial_bvp.ProfileKind.SPOT:
        table = lambda1_table(range(1, args.lmax + 1), profile.r_interface, profile.params.with_delta(0.0))
        write_lambda_table(table, out / "lambda1.csv")
    if args.plot:
        plots.spectrum_plot(rows, out / "spectrum.svg")
    return manifest


def cmd_front(args, out):
    params = _params(args)
    orientation = Direction(args.orientation)
    manifest = RunManifest("front", vars_of(args))
    front = solve_traveling_front(params, orientation=orientation)
    singular = singular_front(params)
    sideband = sideband_coefficient(params, singular)
    write_json(
        out / "front.json",
        {
            "speed": front.speed,
            "singular_speed": front.singular_speed,
            "u_star": front.u_star,
            "residual_norm": front.residual_norm,
            "orientation": orientation.value,
            "sideband": sideband.value,
            "layer_quotient": sideband.layer_numerator / sideband.layer_denominator,
        },
    )
    write_csv(out / "front.csv", ("xi", "u", "v"), list(zip(front.xi, front.u, front.v)))
    if args.plot:
        plots.front_plot(front, out / "front.svg")
    logger.info("front speed %.6f", front.speed)
    return manifest


def cmd_simulate(args, out):
    manifest = RunManifest("simulate", vars_of(args), {"blow_up": sim2d.BLOW_UP})
    manifest.add_input(args.profile)
    profile = radial_bvp.read_profile(args.profile)
    initial = sim2d.embed_radial(profile, args.n, args.L, args.noise, args.seed)
    simulator = sim2d.PeriodicSimulator(profile.params, args.n, args.L)
    snapshots = simulator.run(initial, args.t_end, args.dt, args.snap_every)
    diagnostics = [sim2d.interface_diagnostics(field) for field in snapshots]
    sim2d.write_snapshots(snapshots, out, seed=args.seed, diagnostics=diagnostics)
    onset = next((d.t for d in diagnostics if not d.star_shaped), None)
    summary = {"fingering_onset": onset, "final_t": snapshots[-1].t}
    try:
        fits = sim2d.growth_rates([d for d in diagnostics if d.star_shaped])
        write_csv(
            out / "growth.csv",
            ("l", "rate", "stderr"),
            [(fit.ell, fit.rate, fit.stderr) for fit in fits.values()],
        )
    except RegimeExceeded as error:
        logger.warning("no growth-rate fit: %s", error)
    write_json(out / "summary.json", summary)
    if args.plot:
        plots.field_plot(snapshots[-1], out / "final.svg")
    return manifest


def cmd_continue(args, out):
    manifest = RunManifest("continue", vars_of(args))
    manifest.add_input(args.profile)
    profile = radial_bvp.read_profile(args.profile)
    branch = radial_bvp.continue_in_a(profile, args.a_target, args.step)
    table = radial_bvp.branch_table(branch)
    write_csv(out / "branch.csv", ("a", "r_interface"), table)
    if args.spectrum_lmax is not None:
        rows = spectrum_along_branch(branch, args.spectrum_lmax)
        write_csv(out / "branch_spectrum.csv", ("a", "r_interface", "l", "max_re_lambda"), rows)
    if args.plot:
        plots.branch_plot(table, out / "branch.svg")
    return manifest


def vars_of(args):
    return {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in vars(args).items()
        if key not in ("handler", "verbose")
    }


def build_parser():
    parser = ArgumentParser(prog="vegspot", description=__doc__.splitlines()[1])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=ArgumentParser)

    def add(name, handler, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--out", type=Path, default=Path(name))
        sub.add_argument("--plot", action="store_true", help="also write SVG figures")
        sub.set_defaults(handler=handler)
        return sub

    sub = add("regions", cmd_regions, "admissible window and spot/gap labels over (a/m, b)")
    sub.add_argument("--b", type=_positive, default=None, help="single b row")
    sub.add_argument("--m", type=_positive, default=0.5)
    sub.add_argument("--a-min", type=_positive, default=4.0, help="a/m lower end")
    sub.add_argument("--a-max", type=_positive, default=8.0, help="a/m upper end")
    sub.add_argument("--b-min", type=_positive, default=0.5)
    sub.add_argument("--b-max", type=_positive, default=2.0)
    sub.add_argument("--samples", type=int, default=101)

    sub = add("predict-radius", cmd_predict_radius, "singular interface radius")
    _model_flags(sub, delta=False)
    sub.add_argument("--kind", choices=("auto", "spot", "gap"), default="auto")
    sub.add_argument("--r0", type=_positive, default=1e-3)

    sub = add("solve", cmd_solve, "radial profile by Newton")
    _model_flags(sub)
    sub.add_argument("--kind", choices=[k.value for k in radial_bvp.ProfileKind if k.value != "other"], default="spot")
    sub.add_argument("--radii", type=_positive, nargs="+", default=None)
    sub.add_argument("--r-max", type=_positive, default=None)
    sub.add_argument("--n", type=int, default=None)

    sub = add("spectrum", cmd_spectrum, "eigenvalues of a solved profile")
    sub.add_argument("--profile", type=Path, required=True)
    sub.add_argument("--lmax", type=int, default=12)
    sub.add_argument("--k", type=int, default=6)
    sub.add_argument("--lambda1", action="store_true", help="also tabulate the singular lambda_1")

    sub = add("front", cmd_front, "planar traveling front and sideband coefficient")
    _model_flags(sub)
    sub.add_argument("--orientation", choices=[d.value for d in Direction], default=Direction.DESERT_TO_VEG.value)

    sub = add("simulate", cmd_simulate, "2D simulation seeded with a radial profile")
    sub.add_argument("--profile", type=Path, required=True)
    sub.add_argument("--n", type=int, default=512)
    sub.add_argument("--L", type=_positive, default=60.0)
    sub.add_argument("--dt", type=_positive, default=0.05)
    sub.add_argument("--t-end", type=_positive, default=100.0)
    sub.add_argument("--snap-every", type=_positive, default=10.0)
    sub.add_argument("--noise", type=float, default=1e-3)
    sub.add_argument("--seed", type=int, default=0)

    sub = add("continue", cmd_continue, "continue a profile in a")
    sub.add_argument("--profile", type=Path, required=True)
    sub.add_argument("--a-target", type=_positive, required=True)
    sub.add_argument("--step", type=_positive, default=0.01)
    sub.add_argument("--spectrum-lmax", type=int, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as error:
        print(error, file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        out = output_directory(args.out)
        manifest = args.handler(args, out)
        manifest.finish(out)
    except USAGE_ERRORS as error:
        parser.print_usage(sys.stderr)
        print(f"vegspot: error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except VegspotError as error:
        print(f"vegspot: {type(error).__name__}: {error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0
