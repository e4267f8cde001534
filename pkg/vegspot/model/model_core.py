"""
Parameters, steady states and nonlinearities of the dryland vegetation model

    U_t = ΔU + a - U - U V^2
    V_t = δ^2 ΔV - m V + U V^2 (1 - b V)

together with the closed-form existence criterion that separates spots
from gaps.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from vegspot.errors import (
    DomainError,
    InvalidParameters,
    NoIntersection,
    RestrictionViolated,
)

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10  # unit: criterion units, |LHS - RHS| below this is Boundary
QUAD_TOL = 1e-12  # unit: absolute, quadrature tolerance of the criterion integral
ROOT_TOL = 1e-8  # unit: rainfall a, tolerance of the boundary root


@dataclass(frozen=True)
class ModelParams:
    """
    Model parameters.

    Parameters
    ----------
    a : float
        Rainfall, strictly positive.
    b : float
        Inverse soil carrying capacity, strictly positive.
    m : float
        Plant mortality, strictly positive.
    delta : float
        Square root of the diffusion ratio, 0 denotes the singular limit.
    """

    a: float
    b: float
    m: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "m"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameters(f"{name} must be positive and finite, got {value}")
        if not math.isfinite(self.delta) or self.delta < 0:
            raise InvalidParameters(f"delta must be >= 0, got {self.delta}")
        if not math.isfinite(self.a / self.m):
            raise InvalidParameters("a/m overflows")

    @property
    def ratio(self):
        return self.a / self.m

    @property
    def u_fold(self):
        return u_fold(self)

    @property
    def u_front(self):
        return u_front(self)

    def with_a(self, a):
        return replace(self, a=a)

    def with_delta(self, delta):
        return replace(self, delta=delta)

    def as_dict(self):
        return {"a": self.a, "b": self.b, "m": self.m, "delta": self.delta}


@dataclass(frozen=True)
class EquilibriumSet:
    p0: Tuple[float, float]
    p1: Optional[Tuple[float, float]]
    p2: Optional[Tuple[float, float]]
    exists_vegetated: bool

    @property
    def states(self):
        return [p for p in (self.p0, self.p1, self.p2) if p is not None]


class Classification(Enum):
    SPOT = "spot"
    GAP = "gap"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class CriterionReport:
    restriction_satisfied: bool
    lhs_integral: float
    lhs_closed_form: float
    rhs: float
    closed_form_margin: float
    classification: Classification

    @property
    def difference(self):
        return self.lhs_integral - self.rhs


def vegetation_threshold(b):
    """a/m above which the vegetated states exist"""
    return 2.0 * (b + math.sqrt(1.0 + b * b))


def equilibria(params: ModelParams) -> EquilibriumSet:
    """desert state plus the two vegetated states when they exist"""
    a, b, m = params.a, params.b, params.m
    ratio = params.ratio
    p0 = (a, 0.0)
    # (1 + A b) V^2 - A V + 1 = 0
    lead = 1.0 + ratio * b
    disc = ratio * ratio - 4.0 * lead
    if disc < 0 and abs(disc) <= 1e-12 * ratio * ratio:
        disc = 0.0
    if disc < 0:
        return EquilibriumSet(p0, None, None, False)
    v2 = (ratio + math.sqrt(disc)) / (2.0 * lead)
    v1 = 1.0 / (lead * v2)
    if disc == 0.0:
        v1 = v2
    p1 = (a / (1.0 + v1 * v1), v1)
    p2 = (a / (1.0 + v2 * v2), v2)
    return EquilibriumSet(p0, p1, p2, ratio > vegetation_threshold(b))


def vegetated_state(params: ModelParams):
    """(U2, V2), raising when the vegetated states do not exist"""
    eq = equilibria(params)
    if eq.p2 is None:
        raise DomainError(f"no vegetated state for a/m = {params.ratio}")
    return eq.p2


def u_fold(params: ModelParams):
    return 4.0 * params.b * params.m


def u_front(params: ModelParams):
    return 4.5 * params.b * params.m


def v_branches(u, params: ModelParams):
    """roots v_minus <= v_plus of u b v^2 - u v + m = 0, or None below the fold"""
    if u <= 0:
        raise DomainError(f"water level must be positive, got {u}")
    b, m = params.b, params.m
    disc = 1.0 - 4.0 * b * m / u
    if disc < 0:
        return None
    v_plus = (1.0 + math.sqrt(disc)) / (2.0 * b)
    v_minus = m / (u * b * v_plus)
    return v_minus, v_plus


def v_plus(u, params: ModelParams):
    """upper branch v_+(u), vectorized"""
    u = np.asarray(u, dtype=float)
    disc = 1.0 - 4.0 * params.b * params.m / u
    if np.any(disc < -1e-14):
        raise DomainError("water level below the fold, v_+ undefined")
    return (1.0 + np.sqrt(np.clip(disc, 0.0, None))) / (2.0 * params.b)


def v_plus_slope(u, params: ModelParams):
    """dv_+/du"""
    u = np.asarray(u, dtype=float)
    b, m = params.b, params.m
    root = np.sqrt(1.0 - 4.0 * b * m / u)
    return (2.0 * m / (u * u)) / root


def plus_branch_force(u, params: ModelParams):
    """g(u) = u - a + u v_+(u)^2, the reduced force on the vegetated branch"""
    vp = v_plus(u, params)
    return u - params.a + u * vp * vp


def plus_branch_force_slope(u, params: ModelParams):
    vp = v_plus(u, params)
    return 1.0 + vp * vp + 2.0 * u * vp * v_plus_slope(u, params)


def plus_branch_uptake_antiderivative(u, params: ModelParams):
    """an antiderivative of u v_+(u)^2 = (u - 2mb + sqrt(u^2 - 4umb)) / 2b^2"""
    b, m = params.b, params.m
    u = np.asarray(u, dtype=float)
    shift = u - 2.0 * m * b
    c = 2.0 * m * b
    root = np.sqrt(np.clip(shift * shift - c * c, 0.0, None))
    radical = 0.5 * (shift * root - c * c * np.log(shift + root))
    return (0.5 * u * u - 2.0 * m * b * u + radical) / (2.0 * b * b)


def plus_branch_potential(u, params: ModelParams, u_low=None):
    """int_{u_low}^{u} g(s) ds in closed form; u_low defaults to U2"""
    if u_low is None:
        u_low = vegetated_state(params)[0]
    a = params.a
    linear = 0.5 * (np.asarray(u) ** 2 - u_low ** 2) - a * (np.asarray(u) - u_low)
    uptake = plus_branch_uptake_antiderivative(u, params) - plus_branch_uptake_antiderivative(
        u_low, params
    )
    return linear + uptake


def reaction(u, v, params: ModelParams):
    """(f_u, f_v) of the kinetics"""
    uv2 = u * v * v
    f_u = params.a - u - uv2
    f_v = -params.m * v + uv2 * (1.0 - params.b * v)
    return f_u, f_v


def reaction_jacobian(u, v, params: ModelParams):
    """partial derivatives (df_u/du, df_u/dv, df_v/du, df_v/dv)"""
    b, m = params.b, params.m
    fuu = -1.0 - v * v
    fuv = -2.0 * u * v
    fvu = v * v * (1.0 - b * v)
    fvv = -m + u * (2.0 * v - 3.0 * b * v * v)
    return fuu, fuv, fvu, fvv


def restriction_window(b):
    """open interval of a/m where the spot/gap criterion applies"""
    low = max(4.5 * b, 4.0 * b + 1.0 / b)
    high = 4.5 * b + 2.0 / b
    return low, high


def restriction_satisfied(params: ModelParams):
    low, high = restriction_window(params.b)
    return low < params.ratio < high


def _criterion_integrand(u, b, m):
    return (u - 2.0 * m * b + math.sqrt(max(u * u - 4.0 * u * m * b, 0.0))) / (2.0 * b * b)


def closed_form_margin(params: ModelParams):
    """LHS - RHS of the logarithmic form of the criterion"""
    a, b, m = params.a, params.b, params.m
    u2 = vegetated_state(params)[0]
    w = a - u2
    lhs = 1.5 - math.log(2.0) + u2 * w / (2.0 * m * m) + math.log(b * w / m) - b * w / m
    rhs = (2.0 * b * b + 1.0) / (2.0 * m * m) * w * w
    return lhs - rhs


def spot_gap_criterion(params: ModelParams) -> CriterionReport:
    """
    Classify parameters as admitting spots or gaps.

    The criterion integral is evaluated twice: by adaptive quadrature and
    from its antiderivative. The classification uses the quadrature value.
    """
    if not restriction_satisfied(params):
        low, high = restriction_window(params.b)
        raise RestrictionViolated(
            f"a/m = {params.ratio:.6g} outside the admissible window ({low:.6g}, {high:.6g})"
        )
    b, m = params.b, params.m
    u2 = vegetated_state(params)[0]
    uf = u_front(params)
    lhs, _ = integrate.quad(
        _criterion_integrand, u2, uf, args=(b, m), epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200
    )
    lhs_exact = float(
        plus_branch_uptake_antiderivative(uf, params) - plus_branch_uptake_antiderivative(u2, params)
    )
    rhs = 0.5 * (params.a - u2) ** 2
    difference = lhs - rhs
    if abs(difference) <= BOUNDARY_TOL:
        classification = Classification.BOUNDARY
    elif difference > 0:
        classification = Classification.SPOT
    else:
        classification = Classification.GAP
    return CriterionReport(
        restriction_satisfied=True,
        lhs_integral=lhs,
        lhs_closed_form=lhs_exact,
        rhs=rhs,
        closed_form_margin=closed_form_margin(params),
        classification=classification,
    )


def criterion_boundary(b, m, *, tol=ROOT_TOL, samples=64):
    """rainfall a at which the criterion changes sign for fixed (b, m)"""
    low, high = restriction_window(b)
    if low >= high:
        raise RestrictionViolated(f"empty admissible window for b = {b}")

    def margin(a):
        return closed_form_margin(ModelParams(a, b, m))

    grid = np.linspace(low * m, high * m, samples + 2)[1:-1]
    values = [margin(a) for a in grid]
    for left, right, f_left, f_right in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_left == 0.0:
            return float(left)
        if f_left * f_right < 0:
            root = optimize.brentq(margin, left, right, xtol=tol, rtol=4 * np.finfo(float).eps)
            logger.debug("criterion boundary for b=%g m=%g at a=%.10f", b, m, root)
            return float(root)
    raise NoIntersection(f"criterion does not change sign in the window for b={b}, m={m}")
