"""
Linear stability of radial profiles and planar fronts.

A perturbation e^{lambda t + i l theta} (u(r), v(r)) of a radial profile
satisfies the radial Jacobian with the extra terms -l^2/r^2 u and
-delta^2 l^2/r^2 v. Eigenvalues are computed by shift-invert Arnoldi on the
sparse LU of the discretized operator and polished by shifted inverse
iteration. The asymptotic lambda_1 formulas give lambda ~ delta lambda_1 for
comparison.
"""
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import linalg as spla

from vegspot.analysis.singular_geometry import (
    layer_quotient,
    layer_quotient_closed_form,
    spot_core_trajectory,
)
from vegspot.errors import (
    BlowUp,
    DomainError,
    EigSolverStalled,
    InvalidParameters,
    PoleNear,
)
from vegspot.model.bessel import bessel_k_ratio, k1_over_k0
from vegspot.model.model_core import (
    ModelParams,
    plus_branch_force_slope,
    plus_branch_potential,
    reaction_jacobian,
    u_front,
    v_plus,
    vegetated_state,
)
from vegspot.numerics.radial_bvp import ProfileKind, RadialProfile, jacobian_banded, radial_coefficients
from vegspot.numerics.traveling_front import TravelingFront, first_difference, second_difference
from vegspot.parallel.qt_sweep_worker import run_parallel

logger = logging.getLogger(__name__)

HYPERBOLICITY_SAMPLES = 200
RATIO_START = 1e-4  # unit: r, regular-solution launch radius
RATIO_FLOOR = -10.0  # log-derivative below this signals a zero of the eigenfunction
POLE_TOL = 1e-10
LARGE_RADIUS_FLOOR = 3.0  # unit: r


class Regime(Enum):
    FORMULA = "formula"
    LARGE_RADIUS = "large_radius"
    SQRT_DELTA = "sqrt_delta"
    LARGE_L = "large_l"


@dataclass(frozen=True)
class AsymptoticLambda:
    ell: float
    lambda1: float
    regime: Regime
    r_interface: float
    critical: Optional[float] = None


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: Dict[int, np.ndarray]
    residuals: Dict[int, np.ndarray]
    essential_bound: float
    delta: float
    r_interface: float
    a: float = math.nan

    @property
    def ells(self):
        return sorted(self.eigenvalues)

    def rightmost(self, ell):
        values = self.eigenvalues[abs(int(ell))]
        return values[0] if len(values) else complex(math.nan, math.nan)

    def scaled(self, ell):
        """eigenvalues divided by delta, comparable with lambda_1"""
        return self.eigenvalues[abs(int(ell))] / self.delta

    def rows(self, mirrored=True):
        """(l, re, im, residual) for every eigenvalue, -l mirrored from +l"""
        out = []
        for ell in self.ells:
            signs = (-1, 1) if mirrored and ell != 0 else (1,)
            for sign in signs:
                for value, res in zip(self.eigenvalues[ell], self.residuals[ell]):
                    out.append((sign * ell, value.real, value.imag, res))
        return sorted(out, key=lambda row: (row[0], -row[1]))


class EigenSolver:
    SHIFT = 0.1
    POLISH_TOL = 1e-8  # unit: ||A x - lambda x|| / ||x||
    POLISH_ITER = 20
    SEED = 20240531

    def __init__(self, *, shift=SHIFT, tol=POLISH_TOL, max_iter=POLISH_ITER):
        self.shift = shift
        self.tol = tol
        self.max_iter = max_iter

    def rightmost(self, matrix, k, floor=-math.inf, shift=None):
        """
        k eigenvalues of matrix nearest the shift with Re >= floor, sorted by
        decreasing real part, each polished to the residual tolerance.
        """
        shift = self.shift if shift is None else shift
        size = matrix.shape[0]
        request = min(k + 4, size - 2)
        identity = sparse.identity(size, dtype=complex, format="csc")
        lu = spla.splu((matrix.astype(complex) - shift * identity).tocsc())
        operator = spla.LinearOperator(shape=matrix.shape, dtype=complex, matvec=lu.solve)
        start = np.random.default_rng(self.SEED).standard_normal(size).astype(complex)
        try:
            mu, vectors = spla.eigs(operator, k=request, which="LM", v0=start, tol=1e-12)
        except spla.ArpackNoConvergence as error:
            raise EigSolverStalled(f"Arnoldi did not converge: {error}") from error
        values = 1.0 / mu + shift
        order = np.argsort(-values.real)
        kept_values, kept_residuals = [], []
        for index in order:
            if values[index].real < floor:
                continue
            value, res = self.polish(matrix, values[index], vectors[:, index])
            kept_values.append(value)
            kept_residuals.append(res)
            if len(kept_values) == k:
                break
        return np.array(kept_values, dtype=complex), np.array(kept_residuals)

    def polish(self, matrix, value, vector):
        """shifted inverse iteration with the Rayleigh quotient as estimate"""
        size = matrix.shape[0]
        a = matrix.astype(complex).tocsc()
        shift = value + 1e-9 * (1.0 + abs(value))
        lu = spla.splu((a - shift * sparse.identity(size, dtype=complex, format="csc")).tocsc())
        x = vector / np.linalg.norm(vector)
        history = []
        for _ in range(self.max_iter):
            ax = a @ x
            value = np.vdot(x, ax)
            res = float(np.linalg.norm(ax - value * x))
            history.append(res)
            if res <= self.tol:
                return value, res
            x = lu.solve(x)
            x /= np.linalg.norm(x)
        raise EigSolverStalled(
            f"eigenpair near {value:.6g} stalled at residual {history[-1]:.3e}", history
        )


def essential_spectrum_bound(params: ModelParams, far_field="desert", samples=HYPERBOLICITY_SAMPLES):
    """
    Right edge of the essential spectrum.

    For the desert far field this is -min(1, m); the spatial far-field
    matrix is checked to be hyperbolic on sampled lambda right of it.
    The vegetated far field returns sup_k max Re sigma(J(P2) - k^2 D).
    """
    if far_field == "vegetated":
        return _vegetated_bound(params)
    if far_field != "desert":
        raise ValueError(f"far field {far_field} not supported")
    beta = min(1.0, params.m)
    if params.delta > 0:
        re = np.linspace(-beta + 1e-6, 1.0, 20)
        im = np.linspace(-2.0, 2.0, samples // 20)
        failures = 0
        for lam in (re[:, None] + 1j * im[None, :]).ravel():
            mu = np.linalg.eigvals(far_field_matrix(lam, params))
            if np.min(np.abs(mu.real)) <= 1e-12:
                failures += 1
        if failures:
            logger.warning("far-field matrix not hyperbolic at %d sampled lambda", failures)
    return -beta


def far_field_matrix(lam, params: ModelParams):
    """first-order spatial matrix of the eigenvalue problem at the desert state"""
    d2 = params.delta ** 2
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [1.0 + lam, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, (params.m + lam) / d2, 0.0],
        ],
        dtype=complex,
    )


def _vegetated_bound(params: ModelParams, k_max=50.0, samples=2001):
    u2, v2 = vegetated_state(params)
    fuu, fuv, fvu, fvv = reaction_jacobian(u2, v2, params)
    worst = -math.inf
    for k in np.linspace(0.0, k_max, samples):
        matrix = np.array([[fuu - k * k, fuv], [fvu, fvv - params.delta ** 2 * k * k]])
        worst = max(worst, float(np.max(np.linalg.eigvals(matrix).real)))
    if worst >= 0:
        logger.warning("vegetated state unstable: sup Re sigma = %.3g", worst)
    return worst


def radial_operator(profile: RadialProfile, ell):
    """sparse linearization at angular wavenumber ell; l != 0 drops the origin node"""
    grid, params = profile.grid, profile.params
    coefficients = radial_coefficients(grid)
    ab = jacobian_banded(profile.u, profile.v, params, grid, coefficients)
    ell = abs(int(ell))
    if ell:
        r = grid.nodes
        angular = np.zeros(grid.n)
        angular[1:] = ell * ell / r[1:] ** 2
        ab[2, 0::2] -= angular
        ab[2, 1::2] -= params.delta ** 2 * angular
    size = ab.shape[1]
    matrix = sparse.diags(
        [ab[0, 2:], ab[1, 1:], ab[2, :], ab[3, :-1], ab[4, :-2]],
        [2, 1, 0, -1, -2],
        shape=(size, size),
        format="csc",
    )
    if ell:
        matrix = matrix[2:, 2:]
    return matrix.tocsc()


def direct_spectrum(profile: RadialProfile, ells=range(0, 13), k=6, *, shift=None, threads=None):
    """
    Rightmost eigenvalues of the profile's linearization for each |l|.

    Parameters
    ----------
    profile : RadialProfile
        Converged profile.
    ells : iterable of int
        Angular wavenumbers; only |l| is computed.
    k : int
        Eigenvalues kept per wavenumber.

    Returns
    -------
    SpectrumResult
    """
    if not profile.converged:
        raise InvalidParameters("spectra need a converged profile")
    far_field = "vegetated" if profile.kind is ProfileKind.GAP else "desert"
    bound = essential_spectrum_bound(profile.params, far_field=far_field)
    solver = EigenSolver() if shift is None else EigenSolver(shift=shift)
    unique = sorted({abs(int(ell)) for ell in ells})

    def one(ell):
        values, residuals = solver.rightmost(radial_operator(profile, ell), k, floor=bound)
        logger.debug("l=%d rightmost %s", ell, values[:1])
        return values, residuals

    results = run_parallel(one, unique, threads=threads)
    return SpectrumResult(
        eigenvalues={ell: values for ell, (values, _) in zip(unique, results)},
        residuals={ell: residuals for ell, (_, residuals) in zip(unique, results)},
        essential_bound=bound,
        delta=profile.params.delta,
        r_interface=profile.r_interface,
        a=profile.params.a,
    )


def spot_core(params: ModelParams):
    """(r_I, u_+, trajectory) of the singular spot core; u_+ is callable on [0, r_I]"""
    shoot = spot_core_trajectory(params)
    start = shoot.r[0]

    def background(r):
        r = np.clip(r, start, shoot.r_f)
        return shoot.interpolant(r)[0]

    return shoot.r_f, background, shoot


def slow_eigenfunction_ratio(
    ell, r_interface, params: ModelParams, background=None, *, start=RATIO_START, potential=None
):
    """
    (u_l)'/u_l at r_I for the regular solution of
    u'' + u'/r - (l^2/r^2 + 1 + f_+(r)) u = 0, with 1 + f_+ = g'(u_+(r)).

    Parameters
    ----------
    ell : int
    r_interface : float
    params : ModelParams
    background : callable, optional
        u_+(r) on [0, r_I]; the singular spot core by default.
    start : float
        Launch radius of the regular solution.
    potential : callable, optional
        r -> 1 + f_+(r), overriding the background.
    """
    ell = abs(int(ell))
    if potential is None:
        if background is None:
            r_core, background, _ = spot_core(params)
            if not math.isclose(r_core, r_interface, rel_tol=1e-6):
                logger.debug("core radius %.6f used for requested r_I %.6f", r_core, r_interface)
                r_interface = r_core

        def potential(r):
            u = float(np.asarray(background(r)))
            if u <= 4.0 * params.b * params.m:
                raise DomainError(f"background u = {u} below the fold at r = {r}")
            return float(plus_branch_force_slope(u, params))

    def rhs(eta, y):
        r = math.exp(eta)
        w = y[0]
        if ell:
            return [ell * (1.0 - w * w) + r * r / ell * potential(r)]
        return [-w + r * potential(r) - r * w * w]

    def zero_crossing(eta, y):
        return y[0] - RATIO_FLOOR

    zero_crossing.terminal = True

    w0 = 1.0 if ell else 0.5 * start * potential(start)
    sol = integrate.solve_ivp(
        rhs,
        (math.log(start), math.log(r_interface)),
        [w0],
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
        events=zero_crossing,
    )
    if sol.status == 1 or not np.isfinite(sol.y[0, -1]):
        return _direct_ratio(ell, r_interface, potential, start)
    w = float(sol.y[0, -1])
    return ell * w / r_interface if ell else w


def _direct_ratio(ell, r_interface, potential, start):
    """(u, u') integration with renormalization, used when u_l has a zero"""

    def rhs(r, y):
        return [y[1], -y[1] / r + (ell * ell / (r * r) + potential(r)) * y[0]]

    y = np.array([1.0, ell / start if ell else 0.5 * start * potential(start)])
    edges = np.linspace(start, r_interface, 65)
    for left, right in zip(edges[:-1], edges[1:]):
        sol = integrate.solve_ivp(rhs, (left, right), y, method="DOP853", rtol=1e-11, atol=1e-13)
        y = sol.y[:, -1]
        scale = np.max(np.abs(y))
        if not np.isfinite(scale) or scale == 0.0:
            raise BlowUp(f"eigenfunction integration blew up at r = {right:.4g}")
        y = y / scale
    if abs(y[0]) < POLE_TOL:
        raise BlowUp(f"eigenfunction vanishes at r_I = {r_interface}")
    return float(y[1] / y[0])


def _layer_factor(params: ModelParams):
    closed = layer_quotient_closed_form(params)
    quadrature = layer_quotient(u_front(params), params)
    if abs(quadrature - closed) > 1e-8 * closed:
        logger.warning("layer quotient quadrature %.12g vs closed form %.12g", quadrature, closed)
    return closed


def large_ell_plateau(r_interface, params: ModelParams):
    """(a - u_f) K_1/K_0 (r_I) times the layer quotient"""
    return (params.a - u_front(params)) * float(k1_over_k0(r_interface)) * _layer_factor(params)


def lambda1_formula(ell, r_interface, params: ModelParams, ratio) -> AsymptoticLambda:
    """lambda_1(l) from the slow eigenfunction ratio at the interface"""
    if r_interface <= 0:
        raise DomainError("interface radius must be positive")
    uf = u_front(params)
    k_ratio = float(bessel_k_ratio(abs(int(ell)), r_interface))
    gap = ratio - k_ratio
    if abs(gap) < POLE_TOL:
        raise PoleNear(f"l={ell}: ratio {ratio:.12g} meets K_l'/K_l at r_I={r_interface}")
    uptake = uf * float(v_plus(uf, params)) ** 2
    prefactor = (params.a - uf) * float(k1_over_k0(r_interface))
    value = (prefactor - uptake / gap) * _layer_factor(params)
    return AsymptoticLambda(ell, value, Regime.FORMULA, r_interface)


def plus_tail_integral(params: ModelParams, u_top=None):
    """int_{U2}^{u_top} sqrt(2 G(u)) du, the M+ tail of the stationary front"""
    u2 = vegetated_state(params)[0]
    u_top = u_front(params) if u_top is None else u_top

    def integrand(u):
        return math.sqrt(2.0 * max(float(plus_branch_potential(u, params, u2)), 0.0))

    value, _ = integrate.quad(integrand, u2, u_top, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def lambda1_large_radius(ell, r_interface, params: ModelParams) -> AsymptoticLambda:
    """(l^2 - 1)/r_I^2 times the stationary-front sideband coefficient"""
    if r_interface < LARGE_RADIUS_FLOOR:
        logger.warning("r_I = %.3g below the large-radius floor %.1f", r_interface, LARGE_RADIUS_FLOOR)
    uf = u_front(params)
    uptake = uf * float(v_plus(uf, params)) ** 2
    slow = plus_tail_integral(params) + 0.5 * (uf - params.a) ** 2
    value = (ell * ell - 1.0) / (r_interface ** 2 * uptake) * slow * _layer_factor(params)
    return AsymptoticLambda(ell, value, Regime.LARGE_RADIUS, r_interface)


def lambda1_sqrt_delta(ell_bar, r_interface, params: ModelParams) -> AsymptoticLambda:
    """-l_bar^2/r_I^2 + plateau for l = l_bar delta^(-1/2); critical l_bar where it vanishes"""
    if ell_bar <= 0:
        raise DomainError("l_bar must be positive")
    plateau = large_ell_plateau(r_interface, params)
    value = -(ell_bar ** 2) / r_interface ** 2 + plateau
    critical = r_interface * math.sqrt(plateau) if plateau > 0 else None
    return AsymptoticLambda(ell_bar, value, Regime.SQRT_DELTA, r_interface, critical)


def lambda1_large_ell(r_interface, params: ModelParams) -> AsymptoticLambda:
    return AsymptoticLambda(
        math.inf, large_ell_plateau(r_interface, params), Regime.LARGE_L, r_interface
    )


def lambda1_table(ells, r_interface, params: ModelParams, background=None, threads=None):
    """formula-regime lambda_1 for each l, PoleNear rows reported as nan"""

    def one(ell):
        ratio = slow_eigenfunction_ratio(ell, r_interface, params, background)
        try:
            return lambda1_formula(ell, r_interface, params, ratio)
        except PoleNear as error:
            logger.warning("%s", error)
            return AsymptoticLambda(ell, math.nan, Regime.FORMULA, r_interface)

    if background is None:
        r_interface, background, _ = spot_core(params)
    return run_parallel(one, list(ells), threads=threads)


def front_operator(front: TravelingFront, ell):
    """sparse linearization of the planar front with transverse wavenumber ell"""
    params = front.params
    n, h = len(front.xi), front.h
    d2 = second_difference(n, h)
    d1 = first_difference(n, h)
    delta, c = params.delta, front.speed
    fuu, fuv, fvu, fvv = reaction_jacobian(front.u, front.v, params)
    top = sparse.hstack(
        [d2 + delta * c * d1 + sparse.diags(fuu - ell * ell), sparse.diags(fuv)]
    )
    bottom = sparse.hstack(
        [
            sparse.diags(fvu),
            delta ** 2 * d2 + delta * c * d1 + sparse.diags(fvv - delta ** 2 * ell * ell),
        ]
    )
    return sparse.vstack([top, bottom], format="csc")


def front_critical_eigenvalues(front: TravelingFront, wavenumbers):
    """
    Critical eigenvalue lambda_c(l) of the planar front, continued in l from
    the translation eigenvalue at l = 0.
    """
    solver = EigenSolver()
    previous = 0.0
    values = []
    for ell in wavenumbers:
        candidates, _ = solver.rightmost(front_operator(front, ell), 3, shift=previous + 1e-3)
        best = candidates[np.argmin(np.abs(candidates - previous))]
        values.append(best.real)
        previous = best.real
        logger.debug("front l=%.4g lambda_c=%.6e", ell, best.real)
    return np.array(values)


def spectrum_along_branch(profiles, ell_max, k=3, threads=None):
    """(a, r_I, l, max Re lambda) rows along a continuation branch"""
    rows = []
    for profile in profiles:
        result = direct_spectrum(profile, range(0, ell_max + 1), k=k, threads=threads)
        for ell in result.ells:
            rows.append((profile.params.a, profile.r_interface, ell, result.rightmost(ell).real))
    return rows


def write_spectrum(result: SpectrumResult, path, profile_sha256=None):
    """CSV l,re_lambda,im_lambda,residual plus a JSON sidecar"""
    path = Path(path)
    table = np.array(result.rows(), dtype=float).reshape(-1, 4)
    np.savetxt(
        path, table, delimiter=",", header="l,re_lambda,im_lambda,residual", comments="", fmt="%.17g"
    )
    sidecar = {
        "a": result.a,
        "delta": result.delta,
        "r_interface": result.r_interface,
        "essential_bound": result.essential_bound,
        "profile_sha256": profile_sha256,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def write_lambda_table(rows, path):
    """CSV l,lambda1,regime"""
    path = Path(path)
    lines = ["l,lambda1,regime"]
    lines += [f"{row.ell:.17g},{row.lambda1:.17g},{row.regime.value}" for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path
