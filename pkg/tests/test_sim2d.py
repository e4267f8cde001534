import json

import numpy as np
import pytest

from vegspot.analysis.spectral import direct_spectrum
from vegspot.errors import BlowUp, DomainTooSmall, InvalidParameters, RegimeExceeded
from vegspot.model.model_core import vegetated_state
from vegspot.numerics.radial_bvp import ProfileKind, RadialGrid, RadialProfile
from vegspot.numerics.sim2d import (
    LINEAR_WINDOW,
    V_FLOOR,
    Field2D,
    InterfaceDiagnostics,
    PeriodicSimulator,
    embed_radial,
    growth_rates,
    homogeneous_field,
    interface_diagnostics,
    node_coordinates,
    read_snapshot,
    write_snapshots,
)


def _tanh_profile(params, radius=5.0, kind=ProfileKind.SPOT):
    grid = RadialGrid(20.0, 401)
    v2 = vegetated_state(params)[1]
    step = 0.5 * (1.0 - np.tanh((grid.nodes - radius) / 0.5))
    v = v2 * step if kind is ProfileKind.SPOT else v2 * (1.0 - step)
    u = np.full(grid.n, params.a)
    return RadialProfile(grid, u, v, params, interfaces=(radius,), kind=kind, converged=True)


def _synthetic_record(t, rates, radius=5.0, star_shaped=True):
    amplitudes = np.zeros(33)
    amplitudes[0] = radius
    for ell, rate in rates.items():
        amplitudes[ell] = 1e-3 * np.exp(rate * t)
    return InterfaceDiagnostics(
        t=t,
        centroid=(10.0, 10.0),
        level=0.3,
        rho=np.full(256, radius),
        amplitudes=amplitudes,
        star_shaped=star_shaped,
    )


class TestPeriodicSimulator:
    """Strang-split stepping on the periodic square."""

    def test_needs_positive_delta(self, singular_spot_params):
        with pytest.raises(InvalidParameters):
            PeriodicSimulator(singular_spot_params, 16, 10.0)

    def test_vegetated_state_is_fixed(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 32, 10.0, workers=1)
        field = homogeneous_field(spot_params, vegetated_state(spot_params), 32, 10.0)
        final = simulator.run(field, 1.0, 0.05, 0.5)[-1]
        u2, v2 = vegetated_state(spot_params)
        assert np.max(np.abs(final.u - u2)) < 1e-10
        assert np.max(np.abs(final.v - v2)) < 1e-10
        assert final.t == pytest.approx(1.0)

    def test_diffusion_conserves_mean(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 64, 10.0, workers=1)
        rng = np.random.default_rng(5)
        u, v = rng.random((64, 64)), rng.random((64, 64))
        u1, v1 = simulator.diffuse(u, v, 0.3)
        assert u1.mean() == pytest.approx(u.mean(), abs=1e-12)
        assert v1.mean() == pytest.approx(v.mean(), abs=1e-12)
        assert np.ptp(u1) < np.ptp(u)

    def test_snapshot_count(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 16, 10.0, workers=1)
        field = homogeneous_field(spot_params, (spot_params.a, 0.0), 16, 10.0)
        snapshots = simulator.run(field, 2.0, 0.1, 0.5)
        assert [round(s.t, 10) for s in snapshots] == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_blow_up_reports_time(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 16, 10.0, workers=1, blow_up=1.0)
        field = homogeneous_field(spot_params, vegetated_state(spot_params), 16, 10.0)
        with pytest.raises(BlowUp) as info:
            simulator.step(field, 0.05)
        assert info.value.t == pytest.approx(0.05)

    def test_negative_vegetation_rejected(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 16, 10.0, workers=1)
        field = homogeneous_field(spot_params, (spot_params.a, -1e-3), 16, 10.0)
        with pytest.raises(BlowUp) as info:
            simulator.step(field, 0.05)
        assert info.value.t == pytest.approx(0.05)
        assert "v fell" in str(info.value)

    def test_vegetation_stays_nonnegative(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 64, 20.0, workers=1)
        field = embed_radial(_tanh_profile(spot_params), 64, 20.0, noise_amp=1e-2, seed=1)
        assert field.v.min() >= 0.0
        for snapshot in simulator.run(field, 2.0, 0.1, 0.5):
            assert snapshot.v.min() >= V_FLOOR, f"t = {snapshot.t}"

    def test_rejects_nonpositive_step(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 16, 10.0, workers=1)
        field = homogeneous_field(spot_params, (spot_params.a, 0.0), 16, 10.0)
        with pytest.raises(InvalidParameters):
            simulator.step(field, 0.0)

    def test_second_order_in_time(self, spot_params):
        simulator = PeriodicSimulator(spot_params, 8, 8.0, workers=1, diffusion=False)
        field = homogeneous_field(spot_params, (1.0, 0.5), 8, 8.0)

        def final_v(dt):
            return float(simulator.run(field, 1.0, dt, 1.0)[-1].v[0, 0])

        reference = final_v(0.00125)
        errors = [abs(final_v(dt) - reference) for dt in (0.02, 0.01)]
        ratio = errors[0] / errors[1]
        assert 3.5 <= ratio <= 4.5, f"error ratio {ratio}, errors {errors}"

    def test_second_order_in_space(self, spot_params):
        # a single Fourier mode of u decays like exp(-k^2 t) under exact diffusion
        length, t = 10.0, 0.25
        k = 2.0 * np.pi * 3 / length
        errors = []
        for n in (32, 64):
            simulator = PeriodicSimulator(spot_params, n, length, workers=1)
            x = node_coordinates(n, length)
            u = np.cos(k * x)[:, None] * np.ones(n)[None, :]
            u1, _ = simulator.diffuse(u, np.zeros((n, n)), t)
            errors.append(np.max(np.abs(u1 - np.exp(-k * k * t) * u)))
        ratio = errors[0] / errors[1]
        assert 3.5 <= ratio <= 4.5, f"error ratio {ratio}, errors {errors}"


class TestEmbedding:
    """Radial profiles placed on the square."""

    def test_domain_too_small(self, spot_params):
        with pytest.raises(DomainTooSmall):
            embed_radial(_tanh_profile(spot_params), 64, 12.0)

    def test_seeded_noise_is_reproducible(self, spot_params):
        profile = _tanh_profile(spot_params)
        first = embed_radial(profile, 64, 20.0, seed=4)
        second = embed_radial(profile, 64, 20.0, seed=4)
        other = embed_radial(profile, 64, 20.0, seed=5)
        np.testing.assert_array_equal(first.v, second.v)
        assert not np.array_equal(first.v, other.v)
        assert np.max(np.abs(first.v - embed_radial(profile, 64, 20.0, noise_amp=0.0).v)) <= 1e-3

    def test_noise_free_field_symmetric(self, spot_params):
        field = embed_radial(_tanh_profile(spot_params), 64, 20.0, noise_amp=0.0)
        np.testing.assert_array_equal(field.v, field.v.T)
        assert field.h == pytest.approx(20.0 / 64)


class TestInterfaceDiagnostics:
    """Level-set radius and its Fourier modes."""

    def test_spot_radius(self, spot_params):
        field = embed_radial(_tanh_profile(spot_params), 128, 20.0, noise_amp=0.0)
        record = interface_diagnostics(field)
        assert record.star_shaped
        assert record.centroid == pytest.approx((10.0, 10.0), abs=1e-9)
        assert record.mean_radius == pytest.approx(5.0, abs=0.05)
        assert np.max(record.amplitudes[1:]) < 0.05

    def test_gap_uses_bare_region(self, spot_params):
        profile = _tanh_profile(spot_params, kind=ProfileKind.GAP)
        record = interface_diagnostics(embed_radial(profile, 128, 20.0, noise_amp=0.0))
        assert record.star_shaped
        assert record.mean_radius == pytest.approx(5.0, abs=0.05)

    def test_empty_field(self, spot_params):
        field = homogeneous_field(spot_params, (spot_params.a, 0.0), 16, 10.0)
        with pytest.raises(RegimeExceeded):
            interface_diagnostics(field)


class TestGrowthRates:
    """Exponential fits of mode amplitudes."""

    def test_recovers_rates(self):
        rates = {ell: 0.1 * ell for ell in range(1, 11)}
        records = [_synthetic_record(t, rates) for t in np.linspace(0.0, 4.0, 6)]
        fits = growth_rates(records)
        for ell, fit in fits.items():
            assert fit.rate == pytest.approx(rates[ell], abs=1e-10)
            assert fit.stderr < 1e-8

    def test_too_few_snapshots(self):
        records = [_synthetic_record(t, {1: 0.1}) for t in range(4)]
        with pytest.raises(RegimeExceeded):
            growth_rates(records, ells=[1])

    def test_not_star_shaped(self):
        records = [_synthetic_record(t, {1: 0.1}) for t in range(5)]
        records[2] = _synthetic_record(2.0, {1: 0.1}, star_shaped=False)
        with pytest.raises(RegimeExceeded):
            growth_rates(records, ells=[1])

    def test_left_linear_window(self):
        records = [_synthetic_record(t, {1: 2.0}) for t in range(6)]
        with pytest.raises(RegimeExceeded):
            growth_rates(records, ells=[1])


class TestSnapshotFiles:
    """Raw float64 snapshots and their manifest."""

    def test_write_and_read(self, spot_params, tmp_path):
        field = embed_radial(_tanh_profile(spot_params), 32, 20.0, seed=2)
        later = Field2D(field.u + 1.0, field.v, field.length, 0.5, field.params)
        record = interface_diagnostics(field)
        write_snapshots([field, later], tmp_path, seed=2, diagnostics=[record])

        u, v = read_snapshot(tmp_path, 0.5, 32)
        np.testing.assert_array_equal(u, later.u)
        np.testing.assert_array_equal(v, later.v)
        manifest = json.loads((tmp_path / "snapshots.json").read_text())
        assert manifest["n"] == 32 and manifest["seed"] == 2
        assert manifest["t"] == [0.0, 0.5]
        lines = (tmp_path / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "t,l,amp"
        assert len(lines) == 1 + 33


SIM_N, SIM_LENGTH, SIM_DT = 768, 18.0, 0.5
NOISE = 1e-3


def _evolve(profile, t_end, every, stop_on_fingering=False, seed=0):
    """interface diagnostics every `every` time units of a noisy embedded profile"""
    simulator = PeriodicSimulator(profile.params, SIM_N, SIM_LENGTH)
    field = embed_radial(profile, SIM_N, SIM_LENGTH, noise_amp=NOISE, seed=seed)
    records = [interface_diagnostics(field)]
    while field.t < t_end - 1e-9:
        field = simulator.run(field, field.t + every, SIM_DT, every)[-1]
        records.append(interface_diagnostics(field))
        if stop_on_fingering and not records[-1].star_shaped:
            break
    return records


@pytest.fixture(scope="module")
def fingering_run(solved_spot):
    return _evolve(solved_spot, 2000.0, 10.0, stop_on_fingering=True)


class TestDynamics:
    """Seeded runs of solved radial profiles."""

    @pytest.mark.slow
    def test_unstable_spot_fingers(self, fingering_run):
        assert fingering_run[0].star_shaped
        last = fingering_run[-1]
        assert not last.star_shaped, f"still star-shaped at t = {last.t}"
        assert last.t <= 2000.0

    @pytest.mark.slow
    def test_growth_signs_match_spectrum(self, fingering_run, solved_spot):
        window = []
        for record in fingering_run:
            linear = record.star_shaped and np.max(record.amplitudes[1:]) < LINEAR_WINDOW * record.mean_radius
            if not linear:
                break
            if record.t >= 20.0:
                window.append(record)
        ells = range(2, 9)
        fits = growth_rates(window, ells=ells)
        spectrum = direct_spectrum(solved_spot, ells, k=2, threads=1)
        for ell in ells:
            direct = spectrum.rightmost(ell).real
            fit = fits[ell]
            if abs(fit.rate) > 2.0 * fit.stderr:
                assert np.sign(fit.rate) == np.sign(direct), f"l={ell}: fit {fit.rate} vs direct {direct}"
        fastest = max(ells, key=lambda ell: spectrum.rightmost(ell).real)
        assert fits[fastest].rate > 0, f"fastest direct mode l={fastest} did not grow"

    @pytest.mark.slow
    def test_stable_spot_survives(self, solved_stable_spot):
        records = _evolve(solved_stable_spot, 2000.0, 100.0)
        assert all(record.star_shaped for record in records)
        first, last = records[0], records[-1]
        floor = np.maximum(first.amplitudes[2:9], NOISE)
        assert np.all(last.amplitudes[2:9] < 3.0 * floor), last.amplitudes[2:9]
        assert last.mean_radius == pytest.approx(first.mean_radius, abs=0.2)
