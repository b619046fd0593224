import json
import math

import numpy as np
import pytest

from spinphase import (
    ConfigError,
    DegenerateField,
    DomainError,
    cone_3d,
    constant,
    derivative_selftest,
    polynomial_angle,
    profile_from_dict,
    profile_from_json,
    profile_to_dict,
    sample,
    sinusoidal_angle,
    uniform_rotation,
    user_tabulated,
)


def test_constant_field_is_static():
    s = sample(constant(1.0), 5.0)
    assert np.allclose(s.B_vec, [0.0, 0.0, 1.0])
    assert s.theta == 0.0
    assert s.theta_dot == 0.0 and s.theta_ddot == 0.0 and s.B_dot == 0.0


def test_uniform_rotation_rates():
    s = sample(uniform_rotation(1.0, 0.1), 0.0)
    assert s.theta == 0.0
    assert s.theta_dot == 0.1
    assert s.theta_ddot == 0.0
    assert s.B_dot == 0.0


def test_sinusoidal_rates_at_origin():
    s = sample(sinusoidal_angle(1.0, theta0=0.3, Omega=0.05), 0.0)
    assert s.theta == 0.0
    assert s.theta_dot == pytest.approx(0.015, abs=1e-15)
    assert s.theta_ddot == 0.0


def test_polynomial_angle_matches_horner():
    p = polynomial_angle(2.0, [0.1, -0.2, 0.05, 0.003])
    t = 1.7
    s = sample(p, t)
    assert s.theta == pytest.approx(0.1 - 0.2 * t + 0.05 * t**2 + 0.003 * t**3, rel=1e-14)
    assert s.theta_dot == pytest.approx(-0.2 + 0.1 * t + 0.009 * t**2, rel=1e-14)
    assert s.theta_ddot == pytest.approx(0.1 + 0.018 * t, rel=1e-14)
    assert s.B_mag == 2.0


def test_polynomial_many_coefficients_sorted_numerically():
    coeffs = [0.0] * 11
    coeffs[10] = 1.0  # theta = tau**10
    p = polynomial_angle(1.0, coeffs)
    s = sample(p, 2.0)
    assert s.theta == pytest.approx(2.0**10, rel=1e-14)


def test_cone_profile_keeps_polar_angle():
    p = cone_3d(1.0, theta_c=math.pi / 3, omega_phi=0.05)
    s = sample(p, 7.0)
    assert s.theta == math.pi / 3
    assert s.theta_dot == 0.0
    assert s.phi == pytest.approx(0.35)
    assert s.phi_dot == 0.05
    assert s.phi_ddot == 0.0


def test_theta_stays_unwrapped():
    s = sample(uniform_rotation(1.0, 0.1), 100.0)
    assert s.theta == pytest.approx(10.0, rel=1e-15)  # beyond 2*pi, not reduced


@pytest.mark.parametrize(
    "profile",
    [
        constant(2.0, theta0=0.4, phi0=1.1),
        uniform_rotation(1.5, 0.2, theta_init=0.3),
        sinusoidal_angle(1.0, theta0=0.3, Omega=0.05, b_amp=0.2, b_freq=0.01),
        cone_3d(1.0, theta_c=1.0, omega_phi=0.1),
    ],
)
def test_cartesian_reconstruction(profile):
    for t in np.linspace(0.0, 50.0, 11):
        s = sample(profile, float(t))
        rebuilt = s.B_mag * np.array(
            [
                math.sin(s.theta) * math.cos(s.phi),
                math.sin(s.theta) * math.sin(s.phi),
                math.cos(s.theta),
            ]
        )
        assert np.max(np.abs(rebuilt - s.B_vec)) <= 1e-12 * s.B_mag


@pytest.mark.parametrize("eps", [0.5, 0.16, 0.02])
@pytest.mark.parametrize(
    "make",
    [
        lambda e: uniform_rotation(1.0, 0.1, epsilon=e),
        lambda e: sinusoidal_angle(1.0, theta0=0.3, Omega=0.7, b_amp=0.1, b_freq=0.2, epsilon=e),
        lambda e: polynomial_angle(1.0, [0.1, 0.2, -0.03], epsilon=e),
        lambda e: cone_3d(1.0, theta_c=0.8, omega_phi=0.3, epsilon=e),
    ],
)
def test_epsilon_scaling_is_exact(make, eps):
    # angles at (eps, t) match (1, eps*t) bitwise; rates pick up eps powers
    scaled = make(eps)
    base = make(1.0)
    for t in (0.0, 0.73, 5.5, 41.0):
        s_eps = sample(scaled, t)
        s_one = sample(base, eps * t)
        assert s_eps.theta == s_one.theta
        assert s_eps.phi == s_one.phi
        assert s_eps.B_mag == s_one.B_mag
        assert s_eps.theta_dot == eps * s_one.theta_dot
        assert s_eps.theta_ddot == (eps * eps) * s_one.theta_ddot
        assert s_eps.phi_dot == eps * s_one.phi_dot
        assert s_eps.B_dot == eps * s_one.B_dot


def test_selftest_uniform_rotation():
    err = derivative_selftest(uniform_rotation(1.0, 0.1), np.linspace(0, 20, 9), h=1e-4)
    assert err <= 1e-7


def test_selftest_sinusoidal_over_period():
    p = sinusoidal_angle(1.0, theta0=0.3, Omega=0.05)
    grid = np.linspace(0.0, 2 * math.pi / 0.05, 17)
    assert derivative_selftest(p, grid, h=1e-3) <= 1e-6


def test_selftest_constant_is_zero():
    assert derivative_selftest(constant(1.0), [0.0, 1.0, 2.0], h=1e-3) == 0.0


def test_selftest_rejects_bad_step():
    with pytest.raises(DomainError):
        derivative_selftest(constant(1.0), [0.0], h=0.0)


def test_domain_enforced():
    p = uniform_rotation(1.0, 0.1, t_domain=(0.0, 10.0))
    sample(p, 10.0)
    with pytest.raises(DomainError):
        sample(p, 10.5)
    with pytest.raises(DomainError):
        sample(p, -0.1)


def test_degenerate_field_floor():
    with pytest.raises(DegenerateField):
        sample(constant(1e-9), 0.0)
    # a custom floor can be stricter
    with pytest.raises(DegenerateField):
        sample(constant(0.5, b_min=0.6), 0.0)


def test_constructor_validation():
    with pytest.raises(ConfigError):
        uniform_rotation(-1.0, 0.1)
    with pytest.raises(ConfigError):
        sinusoidal_angle(1.0, theta0=0.3, Omega=0.05, b_amp=1.5)
    with pytest.raises(ConfigError):
        uniform_rotation(1.0, 0.1, epsilon=0.0)
    with pytest.raises(ConfigError):
        uniform_rotation(1.0, 0.1, t_domain=(3.0, 3.0))


def test_json_round_trip():
    p = sinusoidal_angle(
        1.0, theta0=0.3, Omega=0.05, epsilon=0.5, t_domain=(0.0, 100.0), b_min=1e-5
    )
    assert profile_from_dict(profile_to_dict(p)) == p
    text = json.dumps(profile_to_dict(p))
    assert profile_from_json(text) == p


def test_json_schema_document():
    doc = """
    {"kind": "uniform_rotation",
     "params": {"B0": 1.0, "omega": 0.1},
     "epsilon": 1.0,
     "t_domain": [0.0, 200.0]}
    """
    p = profile_from_json(doc)
    assert p.kind == "uniform_rotation"
    assert sample(p, 1.0).theta_dot == 0.1


def test_json_rejects_bad_input():
    with pytest.raises(ConfigError):
        profile_from_json("{not json")
    with pytest.raises(ConfigError):
        profile_from_dict({"kind": "nope", "params": {}})
    with pytest.raises(ConfigError):
        profile_from_dict({"kind": "constant", "params": {"B0": "one"}})
    with pytest.raises(ConfigError):
        profile_from_dict({"kind": "constant", "params": {"B0": 1.0}, "t_domain": [0.0]})
    with pytest.raises(ConfigError):
        profile_from_dict({"params": {}})


def test_tabulated_profile_interpolates_and_differences():
    taus = np.linspace(0.0, 10.0, 400)
    p = user_tabulated(
        taus, B=1.0 + 0.1 * np.sin(0.3 * taus), theta=0.2 * np.sin(taus), fd_step=1e-3
    )
    s = sample(p, 4.0)
    assert s.theta == pytest.approx(0.2 * math.sin(4.0), abs=1e-8)
    assert s.theta_dot == pytest.approx(0.2 * math.cos(4.0), abs=1e-6)
    assert s.B_dot == pytest.approx(0.03 * math.cos(1.2), abs=1e-6)
    assert derivative_selftest(p, np.linspace(0.5, 9.5, 7), h=1e-3) <= 1e-6
    # domain shrinks by the difference step
    with pytest.raises(DomainError):
        sample(p, 10.0)


def test_tabulated_validation():
    with pytest.raises(ConfigError):
        user_tabulated([0, 1, 2], [1, 1, 1], [0, 0, 0])  # too few nodes
    with pytest.raises(ConfigError):
        user_tabulated([0, 1, 1, 2], [1] * 4, [0] * 4)  # non-monotonic
    with pytest.raises(ConfigError):
        profile_from_dict({"kind": "user_tabulated", "params": {}})
