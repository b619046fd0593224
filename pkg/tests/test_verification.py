import math

import numpy as np
import pytest

from spinphase import (
    ConfigError,
    IntegratorConfig,
    check_horizon,
    constant,
    loop_from_profile,
    run_convergence,
    run_phase_budget,
    run_stokes_check,
    run_timescale_demo,
    sinusoidal_angle,
    sinusoidal_family,
    stokes_csv,
    uniform_rotation,
)


def test_horizon_guard_rejects_long_spans():
    prof = uniform_rotation(1.0, 0.5)
    with pytest.raises(ConfigError):
        check_horizon(prof, (0.0, 10.0))
    assert check_horizon(constant(1.0), (0.0, 1e9)) == math.inf


def test_convergence_constant_field_errors_are_integrator_noise():
    fam = lambda e: constant(1.0, epsilon=e)  # noqa: E731
    rep = run_convergence(fam, [0.2, 0.1], horizon_eps_t=1.0)
    assert all(e <= 1e-9 for e in rep.errors_order0)
    assert all(e <= 1e-9 for e in rep.errors_order2)


def test_convergence_slopes_sinusoidal_family():
    rep = run_convergence(sinusoidal_family(), [0.16, 0.08, 0.04], 2.0 * math.pi)
    s0, s1, s2 = (s for s, _ in rep.slopes)
    assert s0 == pytest.approx(1.0, abs=0.2)
    assert s1 == pytest.approx(2.0, abs=0.2)
    assert s2 == pytest.approx(3.0, abs=0.3)
    assert rep.epsilons == sorted(rep.epsilons, reverse=True)
    assert all(e > 0 for e in rep.errors_order0 + rep.errors_order1 + rep.errors_order2)


def test_convergence_needs_two_scales():
    with pytest.raises(ConfigError):
        run_convergence(sinusoidal_family(), [0.1], 1.0)


def test_convergence_csv_deterministic():
    rep1 = run_convergence(sinusoidal_family(), [0.16, 0.08], math.pi)
    rep2 = run_convergence(sinusoidal_family(), [0.16, 0.08], math.pi)
    assert rep1.to_csv() == rep2.to_csv()
    header = rep1.to_csv().splitlines()[0]
    assert header == "epsilon,err_order0,err_order1,err_order2"


def test_phase_budget_uniform_rotation():
    budget = run_phase_budget(uniform_rotation(1.0, 0.1), (0.0, 200.0))
    d = budget.decomposition
    assert d.phi0 == pytest.approx(-100.0, abs=1e-8)
    assert d.phi1 == 0.0
    assert d.phi2 == pytest.approx(-0.5, abs=1e-10)
    assert d.phi_total_exact == pytest.approx(-0.5 * math.sqrt(1.01) * 200.0, abs=2e-3)
    # identity by construction
    assert d.phi_total_exact - d.phi_dyn_expect == pytest.approx(d.phi_geom_aa, abs=1e-14)
    assert budget.r_total == pytest.approx(d.phi_total_exact - d.phi0 - d.phi2, abs=1e-14)
    # the 2x diagnostic: geometric part close to twice phi2, never asserted tighter
    assert budget.as_dict()["aa_over_phi2_ratio"] == pytest.approx(2.0, abs=0.05)


def test_phase_budget_constant_field_trivial():
    budget = run_phase_budget(constant(1.0), (0.0, 50.0))
    assert budget.decomposition.phi2 == 0.0
    assert abs(budget.r_total) <= 1e-7


def test_phase_budget_sinusoidal_period():
    prof = sinusoidal_angle(1.0, theta0=0.3, Omega=0.05)
    T = 2 * math.pi / 0.05
    budget = run_phase_budget(prof, (0.0, T))
    assert budget.decomposition.phi2 == pytest.approx(-0.0035342917352885, abs=1e-10)
    assert abs(budget.r_total) <= 1e-5


def test_r_total_scales_as_fourth_power():
    # halving the rate at fixed rate*t leaves eps^4 * t ~ eps^3 * (eps t):
    # the remainder drops close to 8x
    b1 = run_phase_budget(uniform_rotation(1.0, 0.1), (0.0, 200.0))
    b2 = run_phase_budget(uniform_rotation(1.0, 0.05), (0.0, 400.0))
    ratio = abs(b1.r_total) / abs(b2.r_total)
    assert 4.0 <= ratio <= 16.0


def test_budget_json_fields():
    budget = run_phase_budget(uniform_rotation(1.0, 0.1), (0.0, 50.0))
    d = budget.as_dict()
    for key in (
        "phi0", "phi1", "phi2", "phi_total_exact", "phi_dyn_expect",
        "phi_geom_aa", "residual_eps4",
    ):
        assert key in d and math.isfinite(d[key])
    lines = budget.report_lines()
    assert any("aa_over_phi2_ratio" in ln for ln in lines)


def test_stokes_check_rows_and_determinism():
    prof = sinusoidal_angle(1.0, theta0=0.3, Omega=0.05)
    T = 2 * math.pi / 0.05
    loops = [
        ("fwd", loop_from_profile(prof, (0.0, T), 801)),
        ("rev", loop_from_profile(prof, (0.0, T), 801, reverse=True)),
    ]
    rows = run_stokes_check(loops, [1.0, 2.0])
    assert len(rows) == 4
    assert all(r.abs_diff <= 1e-6 for r in rows)
    assert rows[0].line_integral == -rows[2].line_integral  # orientation flip
    assert stokes_csv(rows) == stokes_csv(run_stokes_check(loops, [1.0, 2.0]))
    assert stokes_csv(rows).splitlines()[0] == "loop_id,line_integral,surface_integral,abs_diff"


def test_timescale_demo_values():
    d = run_timescale_demo(1.0, 0.05)
    assert d.t1 == pytest.approx(400.0, rel=1e-12)
    assert abs(d.phi2_at_t1) == pytest.approx(0.25, rel=1e-14)
    assert d.t2 == pytest.approx(160000.0, rel=1e-12)
    assert run_timescale_demo(1.0, 0.1).t1 == pytest.approx(100.0, rel=1e-12)
    # quadrature agrees: |phi2| reaches 1/4 exactly at t1
    from spinphase import phi2

    assert abs(phi2(uniform_rotation(1.0, 0.05), (0.0, d.t1))) == pytest.approx(0.25, abs=1e-10)


def test_timescale_demo_static_sentinel():
    d = run_timescale_demo(1.0, 0.0)
    assert d.t1 == math.inf and d.t2 == math.inf
    with pytest.raises(ConfigError):
        run_timescale_demo(0.0, 0.1)


def test_budget_rejects_past_horizon():
    with pytest.raises(ConfigError):
        run_phase_budget(uniform_rotation(1.0, 0.5), (0.0, 100.0))


def test_budget_deterministic():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    a = run_phase_budget(uniform_rotation(1.0, 0.1), (0.0, 50.0), cfg)
    b = run_phase_budget(uniform_rotation(1.0, 0.1), (0.0, 50.0), cfg)
    assert a.as_dict() == b.as_dict()
