"""
Time integration of the vegetation model on a periodic square.

One step is a Strang composition: half a reaction step, an exact diffusion
step in the Fourier basis of the periodic five-point Laplacian, half a
reaction step. The reaction stage uses Heun substeps sized from the largest
reaction Jacobian eigenvalue of the current field.
"""
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List

import numpy as np
from scipy import fft, ndimage

from vegspot.errors import BlowUp, DomainTooSmall, InvalidParameters, RegimeExceeded
from vegspot.model.model_core import ModelParams, reaction, reaction_jacobian
from vegspot.numerics.radial_bvp import RadialProfile
from vegspot.parallel.qt_sweep_worker import thread_count

logger = logging.getLogger(__name__)

BLOW_UP = 1e6
V_FLOOR = -1e-8  # v below this after a step is a scheme failure
STABILITY_FACTOR = 0.2  # reaction substep dt <= this / max |eig J|
RESOLUTION = 3  # unit: nodes per delta
ANGLES = 256
MAX_MODE = 32
PLATEAU_PERCENTILE = 99.0
LINEAR_WINDOW = 0.05  # amplitudes below this share of the radius
MIN_SNAPSHOTS = 5


@dataclass(frozen=True)
class Field2D:
    u: np.ndarray
    v: np.ndarray
    length: float
    t: float
    params: ModelParams

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def h(self):
        return self.length / self.n


@dataclass(frozen=True)
class InterfaceDiagnostics:
    t: float
    centroid: tuple
    level: float
    rho: np.ndarray
    amplitudes: np.ndarray
    star_shaped: bool

    @property
    def mean_radius(self):
        return float(self.amplitudes[0])


@dataclass(frozen=True)
class GrowthFit:
    ell: int
    rate: float
    stderr: float
    intercept: float


class PeriodicSimulator:
    """Strang-split integrator for an n x n periodic grid of side length."""

    def __init__(
        self,
        params: ModelParams,
        n,
        length,
        *,
        workers=None,  # scipy.fft threads, VEGSPOT_THREADS by default
        blow_up=BLOW_UP,  # |field| above this raises BlowUp
        diffusion=True,  # False leaves only the reaction stages
    ):
        if params.delta <= 0:
            raise InvalidParameters("simulations need delta > 0")
        self.params = params
        self.n = int(n)
        self.length = float(length)
        self.workers = thread_count() if workers is None else workers
        self.blow_up = blow_up
        self.diffusion = diffusion
        h = self.length / self.n
        if h > params.delta / RESOLUTION:
            logger.warning(
                "grid spacing %.4g does not resolve delta/%d = %.4g", h, RESOLUTION, params.delta / RESOLUTION
            )
        kx = 2.0 * np.pi * fft.fftfreq(self.n, d=h)
        ky = 2.0 * np.pi * fft.rfftfreq(self.n, d=h)
        self.symbol = -(4.0 / h ** 2) * (
            np.sin(0.5 * kx * h)[:, None] ** 2 + np.sin(0.5 * ky * h)[None, :] ** 2
        )

    def diffuse(self, u, v, dt):
        """exact flow of the semi-discrete diffusion over dt"""
        if not self.diffusion:
            return u, v
        d2 = self.params.delta ** 2
        u_hat = fft.rfft2(u, workers=self.workers) * np.exp(dt * self.symbol)
        v_hat = fft.rfft2(v, workers=self.workers) * np.exp(d2 * dt * self.symbol)
        shape = u.shape
        return (
            fft.irfft2(u_hat, s=shape, workers=self.workers),
            fft.irfft2(v_hat, s=shape, workers=self.workers),
        )

    def _stiffness(self, u, v):
        fuu, fuv, fvu, fvv = reaction_jacobian(u, v, self.params)
        half_trace = 0.5 * (fuu + fvv)
        det = fuu * fvv - fuv * fvu
        root = np.sqrt((half_trace ** 2 - det).astype(complex))
        return float(np.max(np.maximum(np.abs(half_trace + root), np.abs(half_trace - root))))

    def react(self, u, v, dt):
        """Heun substeps of the pointwise kinetics over dt"""
        stiffness = self._stiffness(u, v)
        substeps = max(1, int(math.ceil(dt * stiffness / STABILITY_FACTOR)))
        tau = dt / substeps
        for _ in range(substeps):
            fu1, fv1 = reaction(u, v, self.params)
            fu2, fv2 = reaction(u + tau * fu1, v + tau * fv1, self.params)
            u = u + 0.5 * tau * (fu1 + fu2)
            v = v + 0.5 * tau * (fv1 + fv2)
        return u, v

    def step(self, field: Field2D, dt) -> Field2D:
        if dt <= 0:
            raise InvalidParameters(f"dt must be positive, got {dt}")
        u, v = self.react(field.u, field.v, 0.5 * dt)
        u, v = self.diffuse(u, v, dt)
        u, v = self.react(u, v, 0.5 * dt)
        t = field.t + dt
        for values in (u, v):
            if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > self.blow_up:
                raise BlowUp(f"field left [-{self.blow_up:g}, {self.blow_up:g}] at t = {t:.6g}", t)
        if v.min() < V_FLOOR:
            raise BlowUp(f"v fell to {v.min():.3e} at t = {t:.6g}", t)
        return replace(field, u=u, v=v, t=t)

    def run(self, initial: Field2D, t_end, dt, snap_every) -> List[Field2D]:
        """
        Integrate from initial to t_end.

        Returns
        -------
        list of Field2D
            The initial field and one snapshot at every multiple of snap_every.
        """
        steps_per_snap = max(1, int(round(snap_every / dt)))
        total = int(round((t_end - initial.t) / dt))
        snapshots = [initial]
        field = initial
        for index in range(1, total + 1):
            field = self.step(field, dt)
            if index % steps_per_snap == 0:
                snapshots.append(field)
                logger.debug("snapshot t=%.4f max v=%.4f", field.t, float(field.v.max()))
        logger.info("simulated to t=%.4f with %d snapshots", field.t, len(snapshots))
        return snapshots


def node_coordinates(n, length):
    return np.arange(n) * (length / n)


def embed_radial(profile: RadialProfile, n, length, noise_amp=1e-3, seed=0) -> Field2D:
    """
    Radially symmetric field built from profile about the domain centre,
    plus uniform noise of amplitude noise_amp on v, clipped at v = 0.
    """
    largest = max(profile.interfaces) if profile.interfaces else profile.r_interface
    if math.isfinite(largest) and length < 2.5 * largest:
        raise DomainTooSmall(f"L = {length} below 2.5 x interface radius {largest:.4g}")
    x = node_coordinates(n, length) - 0.5 * length
    r = np.hypot(x[:, None], x[None, :])
    nodes = profile.grid.nodes
    u = np.interp(r, nodes, profile.u)
    v = np.interp(r, nodes, profile.v)
    if noise_amp:
        rng = np.random.default_rng(seed)
        v = np.maximum(v + noise_amp * rng.uniform(-1.0, 1.0, size=v.shape), 0.0)
    return Field2D(u=u, v=v, length=float(length), t=0.0, params=profile.params)


def homogeneous_field(params: ModelParams, state, n, length) -> Field2D:
    u0, v0 = state
    return Field2D(
        u=np.full((n, n), float(u0)), v=np.full((n, n), float(v0)), length=length, t=0.0, params=params
    )


def interface_diagnostics(field: Field2D, angles=ANGLES, max_mode=MAX_MODE) -> InterfaceDiagnostics:
    """
    Interface radius rho(theta) of the half-plateau level set of v about its
    centroid, and the Fourier amplitudes |rho_hat_l| for l <= max_mode.
    """
    v, h, n = field.v, field.h, field.n
    plateau = float(np.percentile(v, PLATEAU_PERCENTILE))
    level = 0.5 * plateau
    inside = v > level
    if inside.mean() > 0.5:  # gap: the patch is the bare region
        inside = ~inside
    coords = node_coordinates(n, field.length)
    weight = inside.sum()
    if weight == 0:
        raise RegimeExceeded("no patch found at the half-plateau level")
    cx = float((coords[:, None] * inside).sum() / weight)
    cy = float((coords[None, :] * inside).sum() / weight)

    theta = 2.0 * np.pi * np.arange(angles) / angles
    radii = np.linspace(0.0, 0.49 * field.length, 4 * n)
    xs = (cx + radii[None, :] * np.cos(theta)[:, None]) / h
    ys = (cy + radii[None, :] * np.sin(theta)[:, None]) / h
    samples = ndimage.map_coordinates(v, [xs.ravel(), ys.ravel()], order=1, mode="grid-wrap")
    signed = samples.reshape(angles, -1) - level

    rho = np.full(angles, np.nan)
    star_shaped = True
    for j in range(angles):
        ray = signed[j]
        crossings = np.nonzero(np.signbit(ray[:-1]) != np.signbit(ray[1:]))[0]
        if len(crossings) != 1:
            star_shaped = False
        if len(crossings) == 0:
            continue
        i = crossings[0]
        rho[j] = radii[i] + ray[i] / (ray[i] - ray[i + 1]) * (radii[i + 1] - radii[i])
    if np.any(np.isnan(rho)):
        amplitudes = np.full(max_mode + 1, np.nan)
    else:
        amplitudes = np.abs(fft.rfft(rho))[: max_mode + 1] / angles
    return InterfaceDiagnostics(
        t=field.t,
        centroid=(cx, cy),
        level=level,
        rho=rho,
        amplitudes=amplitudes,
        star_shaped=star_shaped,
    )


def growth_rates(diagnostics: List[InterfaceDiagnostics], ells=range(1, 11)):
    """least-squares exponential rates of |rho_hat_l(t)|"""
    if len(diagnostics) < MIN_SNAPSHOTS:
        raise RegimeExceeded(f"{len(diagnostics)} snapshots, need at least {MIN_SNAPSHOTS}")
    for record in diagnostics:
        if not record.star_shaped:
            raise RegimeExceeded(f"interface not star-shaped at t = {record.t:.4g}")
        if np.max(record.amplitudes[1:]) >= LINEAR_WINDOW * record.mean_radius:
            raise RegimeExceeded(f"mode amplitudes left the linear window at t = {record.t:.4g}")
    t = np.array([record.t for record in diagnostics])
    fits = {}
    for ell in ells:
        amplitude = np.array([record.amplitudes[ell] for record in diagnostics])
        y = np.log(np.maximum(amplitude, np.finfo(float).tiny))
        (rate, intercept), residual, *_ = np.polyfit(t, y, 1, full=True)
        dof = max(len(t) - 2, 1)
        spread = np.sum((t - t.mean()) ** 2)
        sse = float(residual[0]) if len(residual) else 0.0
        fits[ell] = GrowthFit(ell, float(rate), math.sqrt(sse / dof / spread), float(intercept))
    return fits


def write_snapshots(snapshots: List[Field2D], directory, seed=None, diagnostics=None):
    """raw little-endian float64 fields u_<t>.f64, v_<t>.f64 and a JSON manifest"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    times = []
    for field in snapshots:
        stamp = f"{field.t:.6f}"
        field.u.astype("<f8").tofile(directory / f"u_{stamp}.f64")
        field.v.astype("<f8").tofile(directory / f"v_{stamp}.f64")
        times.append(field.t)
    first = snapshots[0]
    manifest = {
        "n": first.n,
        "L": first.length,
        "t": times,
        "params": first.params.as_dict(),
        "seed": seed,
    }
    (directory / "snapshots.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    if diagnostics is not None:
        lines = ["t,l,amp"]
        for record in diagnostics:
            for ell, amp in enumerate(record.amplitudes):
                lines.append(f"{record.t:.17g},{ell},{amp:.17g}")
        (directory / "diagnostics.csv").write_text("\n".join(lines) + "\n")
    return directory


def read_snapshot(directory, t, n):
    directory = Path(directory)
    stamp = f"{t:.6f}"
    u = np.fromfile(directory / f"u_{stamp}.f64", dtype="<f8").reshape(n, n)
    v = np.fromfile(directory / f"v_{stamp}.f64", dtype="<f8").reshape(n, n)
    return u, v
