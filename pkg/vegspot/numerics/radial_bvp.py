"""
Stationary radial profiles for delta > 0

    0 = u_rr + u_r/r + a - u - u v^2
    0 = delta^2 (v_rr + v_r/r) - m v + u v^2 (1 - b v)

on 0 <= r <= r_max with Neumann conditions, discretized by second order
central differences on a uniform grid. Unknowns are interleaved per node,
[u_0, v_0, u_1, v_1, ...], so the Jacobian is banded with two sub- and two
super-diagonals.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from vegspot.errors import (
    BadRadii,
    GridTooCoarse,
    InvalidParameters,
    NewtonDiverged,
    StepFloorReached,
)
from vegspot.model.model_core import (
    ModelParams,
    plus_branch_force_slope,
    u_front,
    vegetated_state,
)
from vegspot.numerics.newton import DampedNewton

logger = logging.getLogger(__name__)

MIN_NODES = 401
NODES_PER_FAST_UNIT = 4  # unit: nodes per delta
MIN_INTERFACE_NODES = 6
MIN_RADIUS_GAP = 10.0  # unit: delta, smallest spacing of guess interfaces
R_MAX_FLOOR = 20.0  # unit: r
ACCEPT_TOL = 1e-9  # unit: residual max-norm of an accepted profile
NEUMANN_TOL = 1e-6
SLOPE_FRACTION = 0.25  # inflections kept where |v_r| >= this share of max |v_r|


class ProfileKind(Enum):
    SPOT = "spot"
    GAP = "gap"
    RING = "ring"
    TARGET = "target"
    OTHER = "other"


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    @property
    def h(self):
        return self.r_max / (self.n - 1)

    @property
    def nodes(self):
        return np.linspace(0.0, self.r_max, self.n)

    def check(self, params: ModelParams):
        """raise GridTooCoarse unless the grid resolves the fast scale"""
        if self.n < MIN_NODES:
            raise GridTooCoarse(f"{self.n} nodes, need at least {MIN_NODES}")
        if self.h > params.delta / NODES_PER_FAST_UNIT * (1.0 + 1e-12):
            raise GridTooCoarse(
                f"h = {self.h:.4g} exceeds delta/{NODES_PER_FAST_UNIT} = "
                f"{params.delta / NODES_PER_FAST_UNIT:.4g}"
            )
        across = 4.0 * params.delta / (math.sqrt(params.m) * self.h)
        if across < MIN_INTERFACE_NODES:
            raise GridTooCoarse(f"interface spans only {across:.1f} nodes")

    def refined(self):
        """grid with h halved on the same r_max"""
        return RadialGrid(self.r_max, 2 * self.n - 1)


def default_grid(params: ModelParams, radius=None) -> RadialGrid:
    """r_max = max(20, 3 r_I) with h <= delta/4"""
    if params.delta <= 0:
        raise InvalidParameters("radial profiles need delta > 0")
    r_max = R_MAX_FLOOR if radius is None else max(R_MAX_FLOOR, 3.0 * radius)
    n = max(MIN_NODES, int(math.ceil(NODES_PER_FAST_UNIT * r_max / params.delta)) + 1)
    return RadialGrid(r_max, n)


@dataclass(frozen=True)
class RadialProfile:
    grid: RadialGrid
    u: np.ndarray
    v: np.ndarray
    params: ModelParams
    interfaces: Tuple[float, ...] = ()
    residual_norm: float = math.nan
    kind: ProfileKind = ProfileKind.OTHER
    converged: bool = False
    neumann_defect: float = math.nan
    history: Tuple[float, ...] = field(default=(), compare=False)

    @property
    def r_interface(self):
        return self.interfaces[0] if self.interfaces else math.nan


def radial_coefficients(grid: RadialGrid):
    """
    (lower, centre, upper) weights of the radial Laplacian at each node.
    The origin uses the even-extension limit 2 u_rr and r_max a ghost node
    mirrored for the Neumann condition.
    """
    h = grid.h
    r = grid.nodes
    lower = np.empty(grid.n)
    centre = np.full(grid.n, -2.0 / h ** 2)
    upper = np.empty(grid.n)
    lower[1:-1] = 1.0 / h ** 2 - 1.0 / (2.0 * r[1:-1] * h)
    upper[1:-1] = 1.0 / h ** 2 + 1.0 / (2.0 * r[1:-1] * h)
    lower[0], centre[0], upper[0] = 0.0, -4.0 / h ** 2, 4.0 / h ** 2
    lower[-1], centre[-1], upper[-1] = 2.0 / h ** 2, -2.0 / h ** 2, 0.0
    return lower, centre, upper


def _laplacian(x, coefficients):
    lower, centre, upper = coefficients
    out = centre * x
    out[1:] += lower[1:] * x[:-1]
    out[:-1] += upper[:-1] * x[1:]
    return out


def residual(u, v, params: ModelParams, grid: RadialGrid, coefficients=None):
    """interleaved residual [F_u0, F_v0, F_u1, ...] of the discrete equations"""
    coefficients = radial_coefficients(grid) if coefficients is None else coefficients
    uv2 = u * v * v
    f = np.empty(2 * grid.n)
    f[0::2] = _laplacian(u, coefficients) + params.a - u - uv2
    f[1::2] = (
        params.delta ** 2 * _laplacian(v, coefficients)
        - params.m * v
        + uv2 * (1.0 - params.b * v)
    )
    return f


def jacobian_banded(u, v, params: ModelParams, grid: RadialGrid, coefficients=None):
    """Jacobian in the (2, 2) banded storage of scipy.linalg.solve_banded"""
    lower, centre, upper = radial_coefficients(grid) if coefficients is None else coefficients
    b, m, d2 = params.b, params.m, params.delta ** 2
    n2 = 2 * grid.n
    ab = np.zeros((5, n2))
    # u rows
    ab[2, 0::2] = centre - 1.0 - v * v
    ab[1, 1::2] = -2.0 * u * v
    ab[4, 0 : n2 - 2 : 2] = lower[1:]
    ab[0, 2::2] = upper[:-1]
    # v rows
    ab[3, 0::2] = v * v * (1.0 - b * v)
    ab[2, 1::2] = d2 * centre - m + u * (2.0 * v - 3.0 * b * v * v)
    ab[4, 1 : n2 - 2 : 2] = d2 * lower[1:]
    ab[0, 3::2] = d2 * upper[:-1]
    return ab


def banded_to_dense(ab, lower=2, upper=2):
    n = ab.shape[1]
    dense = np.zeros((n, n))
    for row in range(n):
        for col in range(max(0, row - lower), min(n, row + upper + 1)):
            dense[row, col] = ab[upper + row - col, col]
    return dense


def _split(x):
    return x[0::2], x[1::2]


def _interleave(u, v):
    x = np.empty(2 * len(u))
    x[0::2] = u
    x[1::2] = v
    return x


def _smooth_step(r, radius, width):
    return 0.5 * (1.0 + np.tanh((r - radius) / width))


def initial_guess(kind, params: ModelParams, radii: Sequence[float], grid=None) -> RadialProfile:
    """
    Piecewise slow states glued by tanh interfaces at the given radii.

    Parameters
    ----------
    kind : ProfileKind
        SPOT and TARGET start vegetated at the origin, GAP and RING start in
        the desert; the state flips at every radius.
    params : ModelParams
        delta > 0.
    radii : sequence of float
        Interface radii, strictly increasing and at least 10 delta apart.
    grid : RadialGrid, optional
        Defaults to default_grid(params, max(radii)).
    """
    kind = ProfileKind(kind)
    radii = [float(r) for r in radii]
    expected = {ProfileKind.SPOT: 1, ProfileKind.GAP: 1, ProfileKind.RING: 2}
    if kind is ProfileKind.OTHER:
        raise InvalidParameters("no guess construction for kind 'other'")
    if kind in expected and len(radii) != expected[kind]:
        raise BadRadii(f"{kind.value} needs {expected[kind]} radii, got {len(radii)}")
    if kind is ProfileKind.TARGET and len(radii) < 2:
        raise BadRadii("target needs at least 2 radii")
    grid = default_grid(params, max(radii)) if grid is None else grid
    if radii[0] <= 0 or radii[-1] >= grid.r_max:
        raise BadRadii(f"radii must lie in (0, {grid.r_max})")
    gaps = np.diff(radii)
    if np.any(gaps <= 0):
        raise BadRadii("radii must be strictly increasing")
    if np.any(gaps < MIN_RADIUS_GAP * params.delta):
        raise BadRadii(f"radii closer than {MIN_RADIUS_GAP} delta")

    u2, v2 = vegetated_state(params)
    uf = u_front(params)
    kappa = math.sqrt(float(plus_branch_force_slope(u2, params)))
    r = grid.nodes
    width = 2.0 * params.delta / math.sqrt(params.m)

    core_vegetated = kind in (ProfileKind.SPOT, ProfileKind.TARGET)
    vegetated = np.full(grid.n, 1.0 if core_vegetated else 0.0)
    sign = -1.0 if core_vegetated else 1.0
    for radius in radii:
        vegetated += sign * _smooth_step(r, radius, width)
        sign = -sign

    distance = np.min(np.abs(r[:, None] - np.asarray(radii)[None, :]), axis=1)
    u_desert = params.a - (params.a - uf) * np.exp(-distance)
    u_vegetated = u2 + (uf - u2) * np.exp(-kappa * distance)
    u = vegetated * u_vegetated + (1.0 - vegetated) * u_desert
    v = vegetated * v2
    return RadialProfile(grid=grid, u=u, v=v, params=params, interfaces=tuple(radii), kind=kind)


def homogeneous_guess(params: ModelParams, grid: RadialGrid, state=None) -> RadialProfile:
    """constant profile, the desert state by default"""
    u0, v0 = (params.a, 0.0) if state is None else state
    return RadialProfile(
        grid=grid,
        u=np.full(grid.n, float(u0)),
        v=np.full(grid.n, float(v0)),
        params=params,
    )


def resample(profile: RadialProfile, grid: RadialGrid) -> RadialProfile:
    """profile interpolated onto another grid, unconverged"""
    r = grid.nodes
    return RadialProfile(
        grid=grid,
        u=np.interp(r, profile.grid.nodes, profile.u),
        v=np.interp(r, profile.grid.nodes, profile.v),
        params=profile.params,
        interfaces=profile.interfaces,
        kind=profile.kind,
    )


def find_interfaces(v, grid: RadialGrid):
    """radii of the inflection points of v on its steep stretches"""
    h = grid.h
    r = grid.nodes
    slope = np.abs(np.gradient(v, h))
    peak = slope.max()
    if peak < 1e-8:
        return ()
    second = np.zeros_like(v)
    second[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    smooth = np.convolve(second, np.ones(5) / 5.0, mode="same")
    found = []
    for i in range(2, grid.n - 3):
        if smooth[i] == 0.0 or smooth[i] * smooth[i + 1] < 0:
            if max(slope[i], slope[i + 1]) < SLOPE_FRACTION * peak:
                continue
            if smooth[i] == 0.0:
                found.append(float(r[i]))
                continue
            weight = smooth[i] / (smooth[i] - smooth[i + 1])
            found.append(float(r[i] + weight * h))
    return tuple(found)


def classify(v, interfaces):
    count = len(interfaces)
    if count == 0:
        return ProfileKind.OTHER
    if count == 1:
        return ProfileKind.SPOT if v[0] > v[-1] else ProfileKind.GAP
    desert_core = v[0] < 0.5 * v.max()
    if count == 2 and desert_core:
        return ProfileKind.RING
    return ProfileKind.TARGET


def neumann_defect(u, v, grid: RadialGrid):
    """largest one-sided second order boundary derivative of u or v"""
    h = grid.h
    worst = 0.0
    for x in (u, v):
        left = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h)
        right = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * h)
        worst = max(worst, abs(left), abs(right))
    return worst


class RadialSolver:
    NEWTON_TOL = 1e-10  # unit: residual max-norm

    def __init__(self, *, tol=NEWTON_TOL, max_iter=DampedNewton.MAX_ITER, check_grid=True):
        self.newton = DampedNewton(tol=tol, max_iter=max_iter, name="radial")
        self.check_grid = check_grid

    def solve(self, guess: RadialProfile, params: ModelParams = None) -> RadialProfile:
        params = guess.params if params is None else params
        if params.delta <= 0:
            raise InvalidParameters("radial profiles need delta > 0")
        grid = guess.grid
        if self.check_grid:
            grid.check(params)
        coefficients = radial_coefficients(grid)

        def f(x):
            u, v = _split(x)
            return residual(u, v, params, grid, coefficients)

        def step(x, fx):
            u, v = _split(x)
            ab = jacobian_banded(u, v, params, grid, coefficients)
            return linalg.solve_banded((2, 2), ab, fx, check_finite=False)

        result = self.newton.solve(f, step, _interleave(guess.u, guess.v))
        u, v = _split(result.x)
        norm = float(np.max(np.abs(residual(u, v, params, grid, coefficients))))
        if norm > ACCEPT_TOL:
            raise NewtonDiverged(f"accepted residual {norm:.3e} above {ACCEPT_TOL}", result.history)
        interfaces = find_interfaces(v, grid)
        defect = neumann_defect(u, v, grid)
        if defect > NEUMANN_TOL:
            logger.warning("boundary derivative %.2e exceeds %.0e", defect, NEUMANN_TOL)
        profile = RadialProfile(
            grid=grid,
            u=u.copy(),
            v=v.copy(),
            params=params,
            interfaces=interfaces,
            residual_norm=norm,
            kind=classify(v, interfaces),
            converged=True,
            neumann_defect=defect,
            history=tuple(result.history),
        )
        logger.info(
            "%s profile at a=%g: interfaces %s, residual %.2e",
            profile.kind.value,
            params.a,
            ", ".join(f"{r:.4f}" for r in interfaces) or "none",
            norm,
        )
        return profile


def solve_profile(guess: RadialProfile, params: ModelParams = None, **options) -> RadialProfile:
    """damped Newton solve of the discrete radial problem from guess"""
    return RadialSolver(**options).solve(guess, params)


def continue_in_a(
    profile: RadialProfile,
    a_target,
    step=0.01,  # initial |da|
    *,
    min_step=1e-5,  # StepFloorReached below this
    stop_fraction=0.6,  # stop once r_I exceeds this share of r_max
    solver=None,
):
    """
    Natural-parameter continuation of a converged profile in the rainfall a.

    Returns
    -------
    list of RadialProfile
        The start profile followed by every accepted step.
    """
    if not profile.converged:
        raise InvalidParameters("continuation needs a converged start profile")
    solver = RadialSolver() if solver is None else solver
    branch = [profile]
    current = profile
    max_step = abs(step)
    size = max_step
    direction = 1.0 if a_target > profile.params.a else -1.0
    while (a_target - current.params.a) * direction > 1e-14:
        a_next = current.params.a + direction * size
        if (a_target - a_next) * direction < 0:
            a_next = a_target
        try:
            trial = solver.solve(current, current.params.with_a(a_next))
            accepted = trial.kind is profile.kind
        except NewtonDiverged as error:
            logger.debug("continuation step to a=%g failed: %s", a_next, error)
            accepted = False
        if not accepted:
            size *= 0.5
            if size < min_step:
                raise StepFloorReached(
                    f"continuation stalled at a={current.params.a:.8g}, step below {min_step}"
                )
            continue
        branch.append(trial)
        current = trial
        size = min(max_step, 1.5 * size)
        logger.info("continuation a=%.6f r_I=%.4f", a_next, trial.r_interface)
        if trial.r_interface > stop_fraction * trial.grid.r_max:
            logger.info("interface reached %.0f%% of r_max, stopping", 100 * stop_fraction)
            break
    return branch


def branch_table(profiles):
    """(a, r_I) rows of a continuation branch"""
    return [(p.params.a, p.r_interface) for p in profiles]


def write_profile(profile: RadialProfile, path):
    """CSV r,u,v plus a JSON sidecar with parameters and diagnostics"""
    path = Path(path)
    table = np.column_stack([profile.grid.nodes, profile.u, profile.v])
    np.savetxt(path, table, delimiter=",", header="r,u,v", comments="", fmt="%.17g")
    sidecar = {
        "params": profile.params.as_dict(),
        "grid": {"r_max": profile.grid.r_max, "n": profile.grid.n},
        "residual_norm": profile.residual_norm,
        "interfaces": list(profile.interfaces),
        "kind": profile.kind.value,
        "converged": profile.converged,
        "neumann_defect": profile.neumann_defect,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_profile(path) -> RadialProfile:
    path = Path(path)
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    grid = RadialGrid(float(sidecar["grid"]["r_max"]), int(sidecar["grid"]["n"]))
    if table.shape[0] != grid.n:
        raise InvalidParameters(f"{path} has {table.shape[0]} rows, sidecar says {grid.n}")
    return RadialProfile(
        grid=grid,
        u=table[:, 1].copy(),
        v=table[:, 2].copy(),
        params=ModelParams(**sidecar["params"]),
        interfaces=tuple(sidecar["interfaces"]),
        residual_norm=float(sidecar["residual_norm"]),
        kind=ProfileKind(sidecar["kind"]),
        converged=bool(sidecar["converged"]),
        neumann_defect=float(sidecar["neumann_defect"]),
    )


