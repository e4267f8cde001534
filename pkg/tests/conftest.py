import pytest

from vegspot.model.model_core import ModelParams


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproduction checks that take minutes")


@pytest.fixture
def spot_params():
    """unstable spot of the (2.625, 1, 0.5) family at delta = 0.05"""
    return ModelParams(2.625, 1.0, 0.5, 0.05)


@pytest.fixture
def singular_spot_params():
    return ModelParams(2.625, 1.0, 0.5, 0.0)


@pytest.fixture
def gap_params():
    return ModelParams(2.665, 1.0, 0.5, 0.05)


@pytest.fixture(scope="session")
def solved_spot():
    """Newton-converged spot at (2.625, 1, 0.5, 0.05), shared across modules"""
    from vegspot.analysis.singular_geometry import predict_interface_radius
    from vegspot.numerics.radial_bvp import ProfileKind, initial_guess, solve_profile

    params = ModelParams(2.625, 1.0, 0.5, 0.05)
    radius = predict_interface_radius(params.with_delta(0.0), kind="spot").r_interface
    return solve_profile(initial_guess(ProfileKind.SPOT, params, [radius]))



@pytest.fixture(scope="session")
def solved_stable_spot():
    """small spot at (2.55, 1, 0.5, 0.05), stable apart from translations"""
    from vegspot.analysis.singular_geometry import predict_interface_radius
    from vegspot.numerics.radial_bvp import ProfileKind, initial_guess, solve_profile

    params = ModelParams(2.55, 1.0, 0.5, 0.05)
    radius = predict_interface_radius(params.with_delta(0.0), kind="spot").r_interface
    return solve_profile(initial_guess(ProfileKind.SPOT, params, [radius]))


@pytest.fixture(scope="session")
def solved_gap():
    """Newton-converged gap at (2.665, 1, 0.5, 0.05)"""
    from vegspot.analysis.singular_geometry import predict_interface_radius
    from vegspot.numerics.radial_bvp import ProfileKind, initial_guess, solve_profile

    params = ModelParams(2.665, 1.0, 0.5, 0.05)
    radius = predict_interface_radius(params.with_delta(0.0), kind="gap").r_interface
    return solve_profile(initial_guess(ProfileKind.GAP, params, [radius]))
