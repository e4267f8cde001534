"""
Planar traveling fronts between the desert and the vegetated state,

    0 = u'' + delta c u' + a - u - u v^2
    0 = delta^2 v'' + delta c v' - m v + u v^2 (1 - b v)

solved on a truncated line with Neumann ends for (u, v, c) together with an
integral phase condition against the singular-limit guess.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from vegspot.analysis.singular_geometry import (
    Direction,
    SingularFront,
    layer_front,
    singular_front,
)
from vegspot.errors import InvalidParameters, NewtonDiverged
from vegspot.model.model_core import ModelParams, plus_branch_force_slope, vegetated_state
from vegspot.numerics.newton import DampedNewton

logger = logging.getLogger(__name__)

SLOW_HALF_LENGTH = 15.0  # unit: xi
FAST_HALF_LENGTH = 40.0  # unit: delta / sqrt(m)
INTERFACE_POINTS = 40  # nodes across one interface width 4 delta / sqrt(m)
ACCEPT_TOL = 1e-9  # unit: residual max-norm


@dataclass(frozen=True)
class TravelingFront:
    xi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    speed: float
    params: ModelParams
    orientation: Direction
    u_star: float
    singular_speed: float
    residual_norm: float

    @property
    def h(self):
        return self.xi[1] - self.xi[0]


def front_grid(params: ModelParams, half_length=None, n=None):
    if params.delta <= 0:
        raise InvalidParameters("traveling fronts need delta > 0")
    fast = params.delta / math.sqrt(params.m)
    half_length = SLOW_HALF_LENGTH + FAST_HALF_LENGTH * fast if half_length is None else half_length
    if n is None:
        h = 4.0 * fast / INTERFACE_POINTS
        n = int(math.ceil(2.0 * half_length / h)) + 1
    return np.linspace(-half_length, half_length, n)


def singular_guess(params: ModelParams, xi, orientation=Direction.DESERT_TO_VEG, front=None):
    """(u, v, c) of the singular front centred so that v(0) = v_+(u_*)/2"""
    front = singular_front(params) if front is None else front
    u2 = vegetated_state(params)[0]
    kappa = math.sqrt(float(plus_branch_force_slope(u2, params)))
    layer = layer_front(orientation, front.u_star, params)
    v = layer.value(xi / params.delta)
    # slow tails: desert side relaxes like e^{-|xi|}, vegetated side like e^{-kappa |xi|}
    side = xi if orientation is Direction.DESERT_TO_VEG else -xi
    desert = params.a - (params.a - front.u_star) * np.exp(-np.abs(side))
    vegetated = u2 + (front.u_star - u2) * np.exp(-kappa * np.abs(side))
    weight = layer.value(xi / params.delta) / layer.amplitude
    u = weight * vegetated + (1.0 - weight) * desert
    return u, v, layer.speed


def second_difference(n, h):
    """d^2/dxi^2 with mirrored ghost nodes at both ends"""
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr") / h ** 2


def first_difference(n, h):
    """centred d/dxi, zero in the end rows"""
    upper = np.ones(n - 1)
    lower = -np.ones(n - 1)
    upper[0] = 0.0
    lower[-1] = 0.0
    return sparse.diags([lower, upper], [-1, 1], format="csr") / (2.0 * h)


class FrontSolver:
    NEWTON_TOL = 5e-10  # unit: residual max-norm

    def __init__(self, *, tol=NEWTON_TOL, max_iter=DampedNewton.MAX_ITER):
        self.newton = DampedNewton(tol=tol, max_iter=max_iter, name="front")

    def solve(self, params: ModelParams, xi, u0, v0, c0, phase_reference):
        n = len(xi)
        h = xi[1] - xi[0]
        d2 = second_difference(n, h)
        d1 = first_difference(n, h)
        delta = params.delta
        a, b, m = params.a, params.b, params.m
        reference_slope = d1 @ phase_reference
        weights = np.full(n, h)
        weights[[0, -1]] = 0.5 * h

        def unpack(x):
            return x[:n], x[n : 2 * n], x[-1]

        def f(x):
            u, v, c = unpack(x)
            uv2 = u * v * v
            out = np.empty(2 * n + 1)
            out[:n] = d2 @ u + delta * c * (d1 @ u) + a - u - uv2
            out[n : 2 * n] = delta ** 2 * (d2 @ v) + delta * c * (d1 @ v) - m * v + uv2 * (1.0 - b * v)
            out[-1] = np.sum(weights * reference_slope * (v - phase_reference))
            return out

        def step(x, fx):
            u, v, c = unpack(x)
            fuu = sparse.diags(-1.0 - v * v)
            fuv = sparse.diags(-2.0 * u * v)
            fvu = sparse.diags(v * v * (1.0 - b * v))
            fvv = sparse.diags(-m + u * (2.0 * v - 3.0 * b * v * v))
            top = sparse.hstack(
                [d2 + delta * c * d1 + fuu, fuv, sparse.csr_matrix((delta * (d1 @ u))[:, None])]
            )
            middle = sparse.hstack(
                [
                    fvu,
                    delta ** 2 * d2 + delta * c * d1 + fvv,
                    sparse.csr_matrix((delta * (d1 @ v))[:, None]),
                ]
            )
            phase = np.concatenate([np.zeros(n), weights * reference_slope, [0.0]])
            jac = sparse.vstack([top, middle, sparse.csr_matrix(phase[None, :])], format="csc")
            return spla.splu(jac).solve(fx)

        x0 = np.concatenate([u0, v0, [c0]])
        result = self.newton.solve(f, step, x0)
        u, v, c = unpack(result.x)
        return u.copy(), v.copy(), float(c), float(np.max(np.abs(f(result.x)))), result.history


def solve_traveling_front(
    params: ModelParams,
    guess=None,
    *,
    orientation=Direction.DESERT_TO_VEG,
    half_length=None,
    n=None,
) -> TravelingFront:
    """
    Traveling front and its speed for delta > 0.

    Parameters
    ----------
    params : ModelParams
    guess : TravelingFront, optional
        Previous front used as the starting point; the singular front
        otherwise.
    orientation : Direction
        DESERT_TO_VEG puts the desert at xi -> -inf, its speed is
        -c_vd(u_*) + O(delta).

    Returns
    -------
    TravelingFront
    """
    front: SingularFront = singular_front(params)
    if guess is None:
        xi = front_grid(params, half_length, n)
        u0, v0, c0 = singular_guess(params, xi, orientation, front)
        reference = v0
    else:
        xi, u0, v0, c0 = guess.xi, guess.u, guess.v, guess.speed
        orientation = guess.orientation
        _, reference, _ = singular_guess(params, xi, orientation, front)
    try:
        u, v, c, norm, history = FrontSolver().solve(params, xi, u0, v0, c0, reference)
    except NewtonDiverged as error:
        raise NewtonDiverged(
            f"{error}; re-seed from the singular front or refine the grid",
            error.residual_history,
        ) from error
    if norm > ACCEPT_TOL:
        raise NewtonDiverged(f"front residual {norm:.3e} above {ACCEPT_TOL}", history)
    logger.info(
        "front at a=%g delta=%g: c=%.6f (singular %.6f), u*=%.6f",
        params.a,
        params.delta,
        c,
        layer_front(orientation, front.u_star, params).speed,
        front.u_star,
    )
    return TravelingFront(
        xi=xi,
        u=u,
        v=v,
        speed=c,
        params=params,
        orientation=orientation,
        u_star=front.u_star,
        singular_speed=layer_front(orientation, front.u_star, params).speed,
        residual_norm=norm,
    )
