import numpy as np
import pytest

import ossctl as oc
from ossctl.synthesis import (
    SynthesisError,
    closed_loop_system,
    stabilizer_from_dict,
    stabilizer_to_dict,
)
from tests.conftest import D_SEGMENTS

KAPPA_C, L_C = 1.0, 2.0


@pytest.fixture(scope="module")
def synthesis_result(plant_unstable, geometry_unstable):
    aug = oc.loop_transform(plant_unstable, geometry_unstable, KAPPA_C, L_C)
    return aug, oc.synthesize_stabilizer(aug, geometry_unstable, L_C)


def test_loop_transform_parameters(plant_unstable, geometry_unstable):
    aug = oc.loop_transform(plant_unstable, geometry_unstable, KAPPA_C, L_C)
    assert aug.center == pytest.approx(1.5)
    assert aug.radius == pytest.approx(0.5)


def test_loop_transform_rejects_infinite_sector(plant_unstable, geometry_unstable):
    with pytest.raises(SynthesisError):
        oc.loop_transform(plant_unstable, geometry_unstable, 1.0 / 9.0, np.inf)


def test_sector_edge_maps_to_edge():
    # phi(v) = kappa v maps to exactly -v after the transformation
    c = 0.5 * (L_C + KAPPA_C)
    r = 0.5 * (L_C - KAPPA_C)
    v = np.linspace(-3, 3, 7)
    assert np.allclose((KAPPA_C * v - c * v) / r, -v)
    assert np.allclose((L_C * v - c * v) / r, v)


def test_transformed_gradient_is_contractive(quadratic_obj):
    # sampled incremental bound: ||phi~(a) - phi~(b)|| <= ||a - b||
    c = 0.5 * (L_C + KAPPA_C)
    r = 0.5 * (L_C - KAPPA_C)
    rng = np.random.default_rng(14)

    def phi(z):
        return quadratic_obj.grad_stacked(z)

    for _ in range(1000):
        a = rng.normal(size=3, scale=3.0)
        b = rng.normal(size=3, scale=3.0)
        lhs = np.linalg.norm((phi(a) - c * a - (phi(b) - c * b)) / r)
        assert lhs <= np.linalg.norm(a - b) * (1 + 1e-12)


def test_synthesis_gamma_below_one(synthesis_result):
    _, result = synthesis_result
    assert 0 < result.gamma < 1.0
    assert result.hinf_achieved <= result.gamma
    assert result.loop_margin > 0


def test_synthesized_closed_loop_is_hurwitz(synthesis_result):
    aug, result = synthesis_result
    Acl, _, _, _ = closed_loop_system(aug, result.stabilizer)
    assert np.linalg.eigvals(Acl).real.max() < 0


def test_certified_gamma_bounds_empirical_gain(synthesis_result):
    # gain of the transformed channel under random sinusoidal probes
    aug, result = synthesis_result
    Acl, Bcl, Ccl, Dcl = closed_loop_system(aug, result.stabilizer)
    rng = np.random.default_rng(15)
    nw = Bcl.shape[1]
    for _ in range(100):
        omega = rng.uniform(0.0, 50.0)
        direction = rng.normal(size=nw) + 1j * rng.normal(size=nw)
        direction /= np.linalg.norm(direction)
        T = Ccl @ np.linalg.solve(
            1j * omega * np.eye(Acl.shape[0]) - Acl, Bcl
        ) + Dcl
        assert np.linalg.norm(T @ direction) <= result.gamma * (1 + 1e-3)


def test_validation_tracks_oracle(
    plant_unstable, geometry_unstable, quadratic_obj, synthesis_result
):
    _, result = synthesis_result
    sched = oc.DisturbanceSchedule.constant(D_SEGMENTS[0])
    trace, metrics = oc.validate_synthesis(
        plant_unstable, geometry_unstable, quadratic_obj,
        result.stabilizer, sched, 150.0,
    )
    assert metrics[0]["terminal_error"] < 1e-2


def test_stabilizer_equilibrium_matches_oracle(
    plant_unstable, geometry_unstable, quadratic_obj, synthesis_result
):
    # the architecture keeps eta' = e, so equilibria coincide with KKT points
    _, result = synthesis_result
    for d in D_SEGMENTS:
        ref = oc.solve_quadratic_closed_form(
            plant_unstable, quadratic_obj.hessian, quadratic_obj.linear_term, d
        )
        sched = oc.DisturbanceSchedule.constant(d)
        trace = oc.simulate(
            plant_unstable, geometry_unstable, quadratic_obj,
            result.stabilizer, sched, 200.0, dt=1e-3, compute_references=False,
        )
        final = np.concatenate([trace.y[-1], trace.u[-1]])
        assert np.linalg.norm(final - ref.yu()) < 1e-3


def test_pi_as_stabilizer_small_gain(plant_stable, geometry_stable):
    # a certified PI loop on the stable plant passes the small-gain analysis
    gamma = oc.pi_closed_loop_gain(
        plant_stable, geometry_stable,
        oc.PiGains.from_scalars(0.2, 0.2, 1), 1.0 / 9.0, 1.0,
    )
    assert gamma < 1.0


def test_near_linear_sector_synthesis():
    # trivial stable plant with a nearly degenerate sector
    plant = oc.LtiPlant(A=np.array([[-1.0]]), B=np.array([[1.0]]), C=np.array([[1.0]]))
    geometry = oc.build_kkt_geometry(plant)
    aug = oc.loop_transform(plant, geometry, 1.0 - 1e-3, 1.0)
    result = oc.synthesize_stabilizer(aug, geometry, 1.0)
    assert result.gamma < 1.0
    assert result.hinf_achieved < 0.1


def test_stabilizer_dict_roundtrip(synthesis_result):
    _, result = synthesis_result
    data = stabilizer_to_dict(result.stabilizer, gamma=result.gamma)
    back = stabilizer_from_dict(data)
    assert np.allclose(back.A_s, result.stabilizer.A_s)
    assert np.allclose(back.B_s, result.stabilizer.B_s)
    assert np.allclose(back.C_s, result.stabilizer.C_s)
    assert np.allclose(back.D_s, result.stabilizer.D_s)
