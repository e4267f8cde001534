"""
Singular-limit (delta = 0) geometry of spots, gaps and planar fronts.

The fast layer is solved explicitly by tanh profiles. The slow flow lives on
the vegetated branch M+ (v = v_+(u)) or on the desert branch M0 (v = 0)

    u' = p,    p' = -p/r + g(u)          on M+,  g(u) = u - a + u v_+(u)^2
    u' = p,    p' = -p/r + u - a         on M0

An interface radius is predicted by matching the core trajectories of M+
that reach the jump level u_f against the desert far field at the same radius.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from vegspot.errors import (
    DomainError,
    IntegrationFailure,
    NoCrossing,
    NoIntersection,
)
from vegspot.model.bessel import bessel_i, bessel_k, i1_over_i0, k1_over_k0
from vegspot.model.model_core import (
    ModelParams,
    plus_branch_force,
    plus_branch_force_slope,
    plus_branch_potential,
    u_fold,
    u_front,
    v_branches,
    v_plus,
    vegetated_state,
)
from vegspot.parallel.qt_sweep_worker import run_parallel

logger = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
ENERGY_TOL = 1e-12  # unit: absolute, quadrature tolerance of the potential
LAUNCH_RADIUS = 1e-3  # unit: r, default r0 of the core launch set
RADIUS_CAP = 1e4  # unit: r, shooting stops here and the asymptote is used
LINEAR_DEPARTURE = 1e-7  # unit: u, below this the core is followed by I_0
FAR_FIELD_DEPARTURE = 1e-6  # unit: u, gap launch offset from U2
INWARD_STOP = 1e-2  # unit: r, inward gap shooting gives up here
CROSSING_TOL = 1e-8  # unit: p, residual of a converged radius prediction


class Direction(Enum):
    VEG_TO_DESERT = "vd"  # v(-inf) = v_+, v(+inf) = 0
    DESERT_TO_VEG = "dv"


@dataclass(frozen=True)
class LayerFront:
    """Explicit fast front connecting v = 0 and v = v_+(u) at frozen water level u."""

    direction: Direction
    u: float
    amplitude: float
    speed: float
    steepness: float
    params: ModelParams

    def _tanh(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        sign = 1.0 if self.direction is Direction.VEG_TO_DESERT else -1.0
        return np.tanh(sign * self.steepness * zeta), sign

    def value(self, zeta):
        t, _ = self._tanh(zeta)
        return 0.5 * self.amplitude * (1.0 - t)

    def slope(self, zeta):
        t, sign = self._tanh(zeta)
        return -sign * 0.5 * self.amplitude * self.steepness * (1.0 - t * t)

    def curvature(self, zeta):
        t, _ = self._tanh(zeta)
        return self.amplitude * self.steepness ** 2 * t * (1.0 - t * t)

    def third_derivative(self, zeta):
        t, sign = self._tanh(zeta)
        k = self.steepness
        return sign * self.amplitude * k ** 3 * (1.0 - t * t) * (1.0 - 3.0 * t * t)

    def profile(self, zeta):
        """(v, q) with q = dv/dzeta"""
        return self.value(zeta), self.slope(zeta)

    def residual(self, zeta):
        """left-hand side of v'' + c v' - m v + u v^2 (1 - b v) = 0"""
        b, m = self.params.b, self.params.m
        v = self.value(zeta)
        return (
            self.curvature(zeta)
            + self.speed * self.slope(zeta)
            - m * v
            + self.u * v * v * (1.0 - b * v)
        )


@dataclass
class ReducedTrajectory:
    r: np.ndarray
    u: np.ndarray
    p: np.ndarray
    branch: str  # "plus" (M+) or "zero" (M0)
    r_f: float = math.nan
    p_f: float = math.nan
    reached: bool = False
    interpolant: Optional[object] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SingularPrediction:
    kind: str  # "spot" or "gap"
    u_in: float
    departure: float  # u_in - U2 for spots, launch radius for gaps
    r_interface: float
    p_at_jump: float
    residual: float
    transversality: float
    criterion_margin: float
    converged: bool


@dataclass(frozen=True)
class SingularFront:
    u_star: float
    speed: float
    slow_plus_integral: float
    slow_zero_integral: float
    params: ModelParams


@dataclass(frozen=True)
class SidebandCoefficient:
    value: float
    unscaled: float
    layer_numerator: float
    layer_denominator: float
    slow_integral: float
    u_star: float
    speed: float
    delta: float
    literal_weight: bool = field(default=False)


def layer_front(direction, u, params: ModelParams) -> LayerFront:
    """
    Explicit layer front at frozen water level u.

    Parameters
    ----------
    direction : Direction
    u : float
        Water level across the layer, at least 4bm.
    params : ModelParams

    Returns
    -------
    LayerFront
        tanh profile of amplitude v_+(u), speed c_vd(u) for VEG_TO_DESERT
        and -c_vd(u) for DESERT_TO_VEG.
    """
    if u < u_fold(params) * (1.0 - 1e-14):
        raise DomainError(f"no vegetated branch at u = {u}, need u >= {u_fold(params)}")
    b = params.b
    u = max(u, u_fold(params))
    v_minus, v_upper = v_branches(u, params)
    scale = math.sqrt(b * u / 2.0)
    speed = scale * (v_upper - 2.0 * v_minus)
    if math.isclose(u, u_front(params), rel_tol=1e-15, abs_tol=0.0):
        speed = 0.0
    if direction is Direction.DESERT_TO_VEG:
        speed = -speed
    return LayerFront(
        direction=direction,
        u=u,
        amplitude=v_upper,
        speed=speed,
        steepness=0.5 * scale * v_upper,
        params=params,
    )


def _layer_span(front: LayerFront):
    return 60.0 / front.steepness


def melnikov_closed_form(u, params: ModelParams):
    """-(v_+^3/3 - b v_+^4/4), the value melnikov_u integrates to"""
    vp = float(v_plus(u, params))
    return -(vp ** 3 / 3.0 - params.b * vp ** 4 / 4.0)


def melnikov_u(direction, params: ModelParams, u=None):
    """
    Melnikov integral of the stationary layer front with respect to u,
    -int v^2 (1 - b v) |v'| dzeta, evaluated by quadrature.
    """
    front = layer_front(direction, u_front(params) if u is None else u, params)
    b = params.b

    def integrand(zeta):
        v = front.value(zeta)
        return -v * v * (1.0 - b * v) * abs(front.slope(zeta))

    span = _layer_span(front)
    value, _ = integrate.quad(
        integrand, -span, span, points=[0.0], epsabs=1e-14, epsrel=1e-12, limit=400
    )
    return value


def layer_integrals(u, params: ModelParams, c=0.0, literal_weight=False):
    """
    Weighted layer integrals of the veg-to-desert front at level u:
    int v^2 (1 - b v) e^{c z} (-v') dz and int e^{c z} v'^2 dz.
    The literal weight replaces (1 - b v) by (1 - v).
    """
    front = layer_front(Direction.VEG_TO_DESERT, u, params)
    if abs(c) >= 2.0 * front.steepness:
        raise DomainError(f"weight e^(c z) with c = {c} not integrable against the layer")
    b = 1.0 if literal_weight else params.b

    def numerator(zeta):
        v = front.value(zeta)
        return v * v * (1.0 - b * v) * math.exp(c * zeta) * -front.slope(zeta)

    def denominator(zeta):
        return math.exp(c * zeta) * front.slope(zeta) ** 2

    span = _layer_span(front)
    options = dict(points=[0.0], epsabs=1e-14, epsrel=1e-12, limit=400)
    top, _ = integrate.quad(numerator, -span, span, **options)
    bottom, _ = integrate.quad(denominator, -span, span, **options)
    return top, bottom


def layer_quotient(u, params: ModelParams, c=0.0, literal_weight=False):
    top, bottom = layer_integrals(u, params, c=c, literal_weight=literal_weight)
    return top / bottom


def layer_quotient_closed_form(params: ModelParams):
    """stationary quotient 2/(3 b sqrt(m)) at u = u_f"""
    return 2.0 / (3.0 * params.b * math.sqrt(params.m))


def layer_operator_residual(zeta, params: ModelParams):
    """(d^2 - m + u_f (2v - 3bv^2)) applied to v', the stationary front's translation mode"""
    front = layer_front(Direction.VEG_TO_DESERT, u_front(params), params)
    v = front.value(zeta)
    potential = -params.m + front.u * (2.0 * v - 3.0 * params.b * v * v)
    return front.third_derivative(zeta) + potential * front.slope(zeta)


def _check_branch(u, params):
    if np.any(np.asarray(u) < u_fold(params)):
        raise DomainError(f"water level below the fold 4bm = {u_fold(params)}")


def energy(u, p, params: ModelParams):
    """
    E(u, p) = -p^2/2 + int_{U2}^{u} g(s) ds, conserved by the r -> infinity
    flow on M+.
    """
    _check_branch(u, params)
    u2 = vegetated_state(params)[0]
    if u == u2:
        return -0.5 * p * p
    potential, _ = integrate.quad(
        lambda s: float(plus_branch_force(s, params)),
        u2,
        u,
        epsabs=ENERGY_TOL,
        epsrel=ENERGY_TOL,
        limit=200,
    )
    return potential - 0.5 * p * p


def front_momentum_limit(params: ModelParams):
    """p_{f,inf} > 0 with E(u_f, p_{f,inf}) = 0"""
    return math.sqrt(2.0 * max(energy(u_front(params), 0.0, params), 0.0))


def criterion_margin(params: ModelParams):
    """p_{f,inf} - (a - u_f); positive exactly for spots"""
    return front_momentum_limit(params) - (params.a - u_front(params))


def _positive_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    return r


def gamma_out(r, params: ModelParams):
    """p on the desert far field that reaches u_f at radius r"""
    r = _positive_radius(r)
    return (params.a - u_front(params)) * k1_over_k0(r)


def gamma_out_slope(r, params: ModelParams):
    q = k1_over_k0(_positive_radius(r))
    return (params.a - u_front(params)) * (-1.0 - q / r + q * q)


def gamma_in_gap(r, params: ModelParams):
    """p on the desert core of a gap that reaches u_f at radius r"""
    r = _positive_radius(r)
    return (u_front(params) - params.a) * i1_over_i0(r)


def gamma_in_gap_slope(r, params: ModelParams):
    q = i1_over_i0(_positive_radius(r))
    return (u_front(params) - params.a) * (1.0 - q / r - q * q)


def _reduced_rhs(branch, params, radial):
    a = params.a

    def plus(r, y):
        u, p = y
        curvature = p / r if radial else 0.0
        return [p, -curvature + float(plus_branch_force(max(u, u_fold(params)), params))]

    def zero(r, y):
        u, p = y
        curvature = p / r if radial else 0.0
        return [p, -curvature + u - a]

    return plus if branch == "plus" else zero


def _solve(rhs, span, y0, events=None, dense=False):
    sol = integrate.solve_ivp(
        rhs,
        span,
        y0,
        method="DOP853",
        rtol=RTOL,
        atol=ATOL,
        events=events,
        dense_output=dense,
    )
    if sol.status == -1:
        raise IntegrationFailure(f"reduced flow integration failed: {sol.message}")
    return sol


def integrate_reduced(u0, p0, span, params: ModelParams, branch="plus", radial=True, samples=201):
    """
    Integrate the reduced slow flow on M+ or M0 from (u0, p0) over span.
    With radial=False the curvature term -p/r is dropped (the planar flow).
    """
    if branch not in ("plus", "zero"):
        raise ValueError(f"branch {branch} not supported")
    if radial and min(span) <= 0:
        raise DomainError("radial flow needs a positive radius span")
    sol = _solve(_reduced_rhs(branch, params, radial), span, [u0, p0], dense=True)
    r = np.linspace(span[0], span[1], samples)
    u, p = sol.sol(r)
    return ReducedTrajectory(r=r, u=u, p=p, branch=branch, r_f=r[-1], p_f=p[-1], reached=True)


def desert_far_field(r, r_interface, params: ModelParams):
    """closed-form M0 solution a + (u_f - a) K_0(r)/K_0(r_I) outside a spot"""
    r = _positive_radius(r)
    a, uf = params.a, u_front(params)
    ratio = bessel_k(0, r, scaled=True) / bessel_k(0, r_interface, scaled=True) * np.exp(
        -(r - r_interface)
    )
    u = a + (uf - a) * ratio
    p = (a - uf) * ratio * k1_over_k0(r)
    return ReducedTrajectory(
        r=np.atleast_1d(r), u=np.atleast_1d(u), p=np.atleast_1d(p), branch="zero"
    )


def _core_slope(params):
    u2 = vegetated_state(params)[0]
    return u2, math.sqrt(float(plus_branch_force_slope(u2, params)))


def _core_launch(w, params, r0):
    """start (r, u, p) of the core trajectory with departure w = u_in - U2"""
    u2, kappa = _core_slope(params)
    if w >= LINEAR_DEPARTURE:
        return r0, u2 + w, float(plus_branch_force(u2 + w, params)) * r0 / 2.0
    # linear core u = U2 + w I_0(kappa r) until the departure reaches LINEAR_DEPARTURE
    target = math.log(LINEAR_DEPARTURE / w)

    def log_i0(x):
        return math.log(bessel_i(0, x, scaled=True)) + x - target

    x = optimize.brentq(log_i0, kappa * r0, target + 50.0, xtol=1e-14)
    r1 = max(x / kappa, r0)
    return r1, u2 + LINEAR_DEPARTURE, LINEAR_DEPARTURE * kappa * i1_over_i0(kappa * r1)


def _core_shoot(u_in, params, r0, departure=None):
    u2 = vegetated_state(params)[0]
    uf = u_front(params)
    if departure is not None:
        w = departure
    else:
        if not u_in < uf:
            raise DomainError(f"u_in = {u_in} must lie below u_f = {uf}")
        if not u_in > u2:
            raise NoCrossing(f"u_in = {u_in} is not above U2 = {u2}, the core never reaches u_f")
        w = u_in - u2
    r_start, u_start, p_start = _core_launch(w, params, r0)

    def hit(r, y):
        return y[0] - uf

    hit.terminal = True
    hit.direction = 1.0

    sol = _solve(
        _reduced_rhs("plus", params, True),
        (r_start, RADIUS_CAP),
        [u_start, p_start],
        events=hit,
        dense=True,
    )
    trajectory = ReducedTrajectory(
        r=sol.t, u=sol.y[0], p=sol.y[1], branch="plus", interpolant=sol.sol
    )
    if sol.t_events[0].size:
        trajectory.r_f = float(sol.t_events[0][0])
        trajectory.p_f = float(sol.y_events[0][0][1])
        trajectory.reached = True
    else:
        if sol.y[0][-1] < sol.y[0][0]:
            raise NoCrossing("core trajectory turned back before reaching u_f")
        trajectory.r_f = math.inf
        trajectory.p_f = front_momentum_limit(params)
        logger.debug("core shot from departure %.3g capped at r = %g", w, RADIUS_CAP)
    return trajectory


def reduced_flow_shoot(u_in, params: ModelParams, r0=LAUNCH_RADIUS) -> ReducedTrajectory:
    """
    Shoot the core trajectory of M+ launched on the small-r set
    p = g(u_in) r0 / 2 until it first reaches u = u_f.

    The returned trajectory carries (r_f, p_f) at the crossing. Trajectories
    that have not crossed by r = 1e4 report r_f = inf and p_f = p_{f,inf}.
    """
    return _core_shoot(u_in, params, r0)


def shoot_sweep(u_in_values, params: ModelParams, r0=LAUNCH_RADIUS, threads=None):
    """(r_f, p_f) for each launch level, computed on the sweep thread pool"""

    def endpoint(u_in):
        trajectory = reduced_flow_shoot(u_in, params, r0)
        return trajectory.r_f, trajectory.p_f

    return run_parallel(endpoint, list(u_in_values), threads=threads)


def far_field_shoot(launch_radius, params: ModelParams, departure=FAR_FIELD_DEPARTURE):
    """
    Shoot a vegetated far-field trajectory of M+ inward from
    u = U2 + departure on the decaying K_0 manifold until u = u_f.
    """
    u2, kappa = _core_slope(params)
    uf = u_front(params)
    p_start = -departure * kappa * k1_over_k0(kappa * launch_radius)

    def hit(r, y):
        return y[0] - uf

    hit.terminal = True
    hit.direction = 1.0

    trajectory = ReducedTrajectory(r=np.empty(0), u=np.empty(0), p=np.empty(0), branch="plus")
    if launch_radius <= INWARD_STOP:
        return trajectory
    sol = _solve(
        _reduced_rhs("plus", params, True),
        (launch_radius, INWARD_STOP),
        [u2 + departure, p_start],
        events=hit,
    )
    trajectory.r, trajectory.u, trajectory.p = sol.t, sol.y[0], sol.y[1]
    if sol.t_events[0].size:
        trajectory.r_f = float(sol.t_events[0][0])
        trajectory.p_f = float(sol.y_events[0][0][1])
        trajectory.reached = True
    return trajectory


def _spot_mismatch(log_departure, params, r0):
    trajectory = _core_shoot(None, params, r0, departure=math.exp(log_departure))
    if not trajectory.reached:
        return trajectory.p_f - (params.a - u_front(params)), trajectory
    return trajectory.p_f - float(gamma_out(trajectory.r_f, params)), trajectory


def _gap_mismatch(launch_radius, params):
    trajectory = far_field_shoot(launch_radius, params)
    if not trajectory.reached:
        return -1.0, trajectory
    return trajectory.p_f - float(gamma_in_gap(trajectory.r_f, params)), trajectory


def _predict_spot(params, r0, margin):
    u2 = vegetated_state(params)[0]
    uf = u_front(params)
    width = uf - u2

    def mismatch(t):
        return _spot_mismatch(t, params, r0)[0]

    t_high = math.log(width * (1.0 - 1e-6))
    f_high = mismatch(t_high)
    if f_high >= 0:
        raise NoIntersection("core trajectory near u_f already lies above the far field")
    t_low = None
    for exponent in (2, 4, 8, 16, 32, 64, 128, 256):
        t = math.log(width) - exponent * math.log(10.0)
        if mismatch(t) > 0:
            t_low = t
            break
        t_high = t
    if t_low is None:
        raise NoIntersection(f"no core trajectory crosses the far field (margin {margin:.3g})")

    t_star = optimize.brentq(mismatch, t_low, t_high, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    residual, trajectory = _spot_mismatch(t_star, params, r0)

    step = 1e-4
    _, left = _spot_mismatch(t_star - step, params, r0)
    _, right = _spot_mismatch(t_star + step, params, r0)
    slope = (right.p_f - left.p_f) / (right.r_f - left.r_f)
    transversality = slope - float(gamma_out_slope(trajectory.r_f, params))

    departure = math.exp(t_star)
    return SingularPrediction(
        kind="spot",
        u_in=u2 + departure,
        departure=departure,
        r_interface=trajectory.r_f,
        p_at_jump=trajectory.p_f,
        residual=residual,
        transversality=transversality,
        criterion_margin=margin,
        converged=abs(residual) <= CROSSING_TOL and math.isfinite(trajectory.r_f),
    )


def _predict_gap(params, margin):
    def mismatch(radius):
        return _gap_mismatch(radius, params)[0]

    low = 0.5
    if mismatch(low) >= 0:
        raise NoIntersection("gap far field crosses already at the smallest launch radius")
    high = low
    while True:
        high *= 2.0
        if high > RADIUS_CAP:
            raise NoIntersection(f"no gap far-field trajectory crosses the core (margin {margin:.3g})")
        if mismatch(high) > 0:
            break
        low = high

    radius = optimize.brentq(mismatch, low, high, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    residual, trajectory = _gap_mismatch(radius, params)

    step = 1e-4 * radius
    _, left = _gap_mismatch(radius - step, params)
    _, right = _gap_mismatch(radius + step, params)
    slope = (right.p_f - left.p_f) / (right.r_f - left.r_f)
    transversality = slope - float(gamma_in_gap_slope(trajectory.r_f, params))

    return SingularPrediction(
        kind="gap",
        u_in=u_front(params),
        departure=radius,
        r_interface=trajectory.r_f,
        p_at_jump=trajectory.p_f,
        residual=residual,
        transversality=transversality,
        criterion_margin=margin,
        converged=abs(residual) <= CROSSING_TOL,
    )


def predict_interface_radius(params: ModelParams, kind="auto", r0=LAUNCH_RADIUS) -> SingularPrediction:
    """
    Predict the interface radius of a spot (or gap) at delta = 0.

    Parameters
    ----------
    params : ModelParams
    kind : str
        "spot", "gap" or "auto" (chosen by the sign of the criterion margin).
    r0 : float
        Launch radius of the spot core.

    Returns
    -------
    SingularPrediction
    """
    margin = criterion_margin(params)
    if kind == "auto":
        kind = "spot" if margin > 0 else "gap"
    if kind == "spot":
        if margin <= 0:
            raise NoIntersection(f"criterion margin {margin:.3g} <= 0, no spot crossing")
        prediction = _predict_spot(params, r0, margin)
    elif kind == "gap":
        if margin >= 0:
            raise NoIntersection(f"criterion margin {margin:.3g} >= 0, no gap crossing")
        prediction = _predict_gap(params, margin)
    else:
        raise ValueError(f"kind {kind} not supported")
    logger.info(
        "%s interface radius %.6f at a=%g (residual %.2e)",
        prediction.kind,
        prediction.r_interface,
        params.a,
        prediction.residual,
    )
    return prediction


def launch_radius_study(params: ModelParams, r0_values=(4e-3, 2e-3, 1e-3, 5e-4), threads=None):
    """predicted spot radius for each launch radius r0"""

    def radius(r0):
        return predict_interface_radius(params, kind="spot", r0=r0).r_interface

    return run_parallel(radius, list(r0_values), threads=threads)


def singular_front(params: ModelParams) -> SingularFront:
    """
    Planar singular front: jump level u_* with E(u_*, a - u_*) = 0, its
    leading-order speed and the slow tail integrals on both sides.
    """
    u2 = vegetated_state(params)[0]
    a = params.a

    def jump(u):
        return float(plus_branch_potential(u, params, u2)) - 0.5 * (a - u) ** 2

    u_star = optimize.brentq(jump, u2, a, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    speed = layer_front(Direction.VEG_TO_DESERT, u_star, params).speed

    def plus_tail(u):
        return math.sqrt(2.0 * max(float(plus_branch_potential(u, params, u2)), 0.0))

    slow_plus, _ = integrate.quad(plus_tail, u2, u_star, epsabs=1e-13, epsrel=1e-12, limit=200)
    slow_zero = 0.5 * (a - u_star) ** 2
    logger.debug("singular front u*=%.10f c_vd=%.3e", u_star, speed)
    return SingularFront(
        u_star=u_star,
        speed=speed,
        slow_plus_integral=slow_plus,
        slow_zero_integral=slow_zero,
        params=params,
    )


def sideband_coefficient(
    params: ModelParams,
    front: Optional[SingularFront] = None,
    delta=None,
    literal_weight=False,
) -> SidebandCoefficient:
    """
    Leading-order coefficient of l^2 in the critical eigenvalue of the
    planar front, delta * (layer quotient) * (slow integrals) / (u_* v_+(u_*)^2).
    """
    if front is None:
        front = singular_front(params)
    delta = params.delta if delta is None else delta
    top, bottom = layer_integrals(front.u_star, params, c=front.speed, literal_weight=literal_weight)
    vp = float(v_plus(front.u_star, params))
    slow = front.slow_plus_integral + front.slow_zero_integral
    unscaled = top / (front.u_star * vp * vp * bottom) * slow
    return SidebandCoefficient(
        value=delta * unscaled,
        unscaled=unscaled,
        layer_numerator=top,
        layer_denominator=bottom,
        slow_integral=slow,
        u_star=front.u_star,
        speed=front.speed,
        delta=delta,
        literal_weight=literal_weight,
    )


def spot_core_trajectory(params: ModelParams, prediction=None, r0=LAUNCH_RADIUS) -> ReducedTrajectory:
    """core trajectory of the predicted spot, from the launch radius to r_I"""
    if prediction is None:
        prediction = predict_interface_radius(params, kind="spot", r0=r0)
    if prediction.kind != "spot":
        raise ValueError("core trajectories exist for spot predictions only")
    return _core_shoot(None, params, r0, departure=prediction.departure)
