"""Exact (non-adiabatic) reference dynamics for spinor and classical spin.

Two independent references are provided:

* adaptive embedded Runge-Kutta integration (scipy ``solve_ivp``, DOP853 by
  default) of the spinor equation i dpsi/dt = H(t) psi and the classical
  precession equation dS/dt = B x S;
* a fixed-step exponential-midpoint stepper that advances by the exact
  group element of the midpoint field (norm-preserving to roundoff), for
  long horizons and order cross-checks.

The mean-spin map uses S = <psi|sigma|psi> with the standard Pauli
matrices, i.e. Sx = 2 Re(conj(up) dn), Sy = 2 Im(conj(up) dn),
Sz = |up|^2 - |dn|^2, which sends (1, i)/sqrt(2) to (0, 1, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .adiabatic_engine import tracked_eigenvector
from .errors import (
    BranchJump,
    ConfigError,
    DomainError,
    NormalizationError,
    OverlapLoss,
    StepSizeUnderflow,
)
from .field_profiles import FieldProfile, FieldSample, sample

MAX_GRID_REFINE = 16


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and output control for the adaptive integrators."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    dense_output_grid: Sequence[float] | None = None
    method: str = "DOP853"

    def __post_init__(self):
        for name, tol in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not (0.0 < tol <= 1e-2):
                raise ConfigError(f"{name} must lie in (0, 1e-2], got {tol}")
        if not self.max_step > 0:
            raise ConfigError(f"max_step must be positive, got {self.max_step}")


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped series of states from integration or closed-form evaluation."""

    times: np.ndarray
    states: np.ndarray
    kind: str  # "spinor" or "bloch"
    profile: FieldProfile | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dt = np.diff(self.times)
        # strictly monotonic; decreasing only for backward (time-reversal) runs
        if not (np.all(dt > 0) or np.all(dt < 0)):
            raise DomainError("trajectory times must be strictly monotonic")
        if len(self.times) != len(self.states):
            raise DomainError("times and states must have equal length")


# ---------------------------------------------------------------------------
# State helpers
# ---------------------------------------------------------------------------

def as_spinor(psi, tol: float = 1e-9) -> np.ndarray:
    """Validate and exactly renormalize a two-component state."""
    psi = np.asarray(psi, dtype=complex).reshape(2)
    norm = math.sqrt(float(np.vdot(psi, psi).real))
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"spinor norm {norm} deviates from 1 beyond {tol}")
    return psi / norm


def as_bloch(S, tol: float = 1e-9) -> np.ndarray:
    """Validate and exactly renormalize a classical unit spin vector."""
    S = np.asarray(S, dtype=float).reshape(3)
    norm = float(np.linalg.norm(S))
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"spin norm {norm} deviates from 1 beyond {tol}")
    return S / norm


def spinor_to_bloch(psi) -> np.ndarray:
    """Mean classical spin vector of a (near-)normalized spinor.

    The norm is divided out, so fourth-order normalization defects of
    truncated chain products are projected away; only gross misuse is
    rejected.
    """
    psi = np.asarray(psi, dtype=complex).reshape(2)
    nn = float(np.vdot(psi, psi).real)
    if abs(nn - 1.0) > 1e-3:
        raise NormalizationError(f"spinor norm^2 {nn} too far from 1")
    up, dn = psi
    cross = np.conj(up) * dn
    return np.array([2.0 * cross.real, 2.0 * cross.imag, abs(up) ** 2 - abs(dn) ** 2]) / nn


def bloch_to_spinor(S) -> np.ndarray:
    """A spinor (phase gauge: real non-negative upper component) with given mean spin."""
    S = as_bloch(S)
    th = math.acos(max(-1.0, min(1.0, S[2])))
    ph = math.atan2(S[1], S[0])
    return np.array([math.cos(0.5 * th), math.sin(0.5 * th) * np.exp(1j * ph)])


def bloch_series(traj: Trajectory) -> np.ndarray:
    """Mean-spin series of a spinor trajectory (vectorized, norm-corrected)."""
    if traj.kind != "spinor":
        return np.asarray(traj.states, dtype=float)
    up, dn = traj.states[:, 0], traj.states[:, 1]
    nn = (np.abs(up) ** 2 + np.abs(dn) ** 2).real
    cross = np.conj(up) * dn
    return np.stack(
        [2.0 * cross.real, 2.0 * cross.imag, np.abs(up) ** 2 - np.abs(dn) ** 2], axis=1
    ) / nn[:, None]


def hamiltonian_matrix(s: FieldSample) -> np.ndarray:
    """Two-level Hamiltonian (1/2) B . sigma for the sampled field."""
    bx, by, bz = s.B_vec
    return 0.5 * np.array([[bz, bx - 1j * by], [bx + 1j * by, -bz]], dtype=complex)


# ---------------------------------------------------------------------------
# Adaptive integration
# ---------------------------------------------------------------------------

def default_grid(profile: FieldProfile, t_span: tuple[float, float], per_unit: float | None = None) -> np.ndarray:
    """Uniform output grid dense enough for phase unwrapping.

    Node spacing targets ~16 nodes per radian of the fastest expected phase
    rate (the field magnitude), with a floor of 257 nodes.
    """
    t0, t1 = t_span
    probes = np.linspace(t0, t1, 65)
    b_max = max(sample(profile, float(t)).B_mag for t in probes)
    rate = per_unit if per_unit is not None else 16.0 * max(b_max, 1e-3)
    n = max(257, int(math.ceil(abs(t1 - t0) * rate)) + 1)
    return np.linspace(t0, t1, n)


def _run_solver(rhs, y0, t_span, grid, cfg):
    sol = solve_ivp(
        rhs,
        t_span,
        y0,
        method=cfg.method,
        t_eval=grid,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=False,
    )
    if not sol.success:
        raise StepSizeUnderflow(f"integration failed: {sol.message}")
    return sol


def integrate_schrodinger(
    profile: FieldProfile,
    psi0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi over t_span.

    The returned trajectory records the worst norm drift in its metadata;
    the contract is |norm^2 - 1| <= 10 * rel_tol * span.
    """
    psi0 = as_spinor(psi0)
    grid = _grid_for(profile, t_span, cfg)

    def rhs(t, y):
        return -1j * (hamiltonian_matrix(sample(profile, t)) @ y)

    sol = _run_solver(rhs, psi0.astype(complex), t_span, grid, cfg)
    states = sol.y.T
    drift = float(np.max(np.abs(np.sum(np.abs(states) ** 2, axis=1) - 1.0)))
    return Trajectory(
        times=sol.t,
        states=states,
        kind="spinor",
        profile=profile,
        metadata=_meta(cfg, norm_drift=drift),
    )


def integrate_bloch(
    profile: FieldProfile,
    S0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate the precession equation dS/dt = B(t) x S over t_span."""
    S0 = as_bloch(S0)
    grid = _grid_for(profile, t_span, cfg)

    def rhs(t, y):
        return np.cross(sample(profile, t).B_vec, y)

    sol = _run_solver(rhs, S0, t_span, grid, cfg)
    states = sol.y.T
    drift = float(np.max(np.abs(np.sum(states**2, axis=1) - 1.0)))
    return Trajectory(
        times=sol.t,
        states=states,
        kind="bloch",
        profile=profile,
        metadata=_meta(cfg, norm_drift=drift),
    )


def _grid_for(profile, t_span, cfg):
    if cfg.dense_output_grid is not None:
        grid = np.asarray(cfg.dense_output_grid, dtype=float)
        if grid[0] != t_span[0] or grid[-1] != t_span[1]:
            raise DomainError("dense_output_grid must start/end exactly at t_span")
        return grid
    return default_grid(profile, t_span)


def _meta(cfg, **extra):
    d = {
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "max_step": cfg.max_step,
        "method": cfg.method,
    }
    d.update(extra)
    return d


# ---------------------------------------------------------------------------
# Norm-preserving exponential-midpoint stepper
# ---------------------------------------------------------------------------

def exponential_midpoint_schrodinger(
    profile: FieldProfile, psi0, t_span: tuple[float, float], n_steps: int
) -> Trajectory:
    """Fixed-step stepper applying the exact rotation of the midpoint field.

    Each step multiplies by exp(-i H(t_mid) h) evaluated in closed form, so
    the norm is conserved to roundoff regardless of horizon; accuracy is
    second order in the step.
    """
    t0, t1 = t_span
    h = (t1 - t0) / n_steps
    psi = as_spinor(psi0).astype(complex)
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, 2), dtype=complex)
    states[0] = psi
    for k in range(n_steps):
        s = sample(profile, t0 + (k + 0.5) * h)
        B = s.B_mag
        ang = 0.5 * B * h
        n_hat = s.B_vec / B
        c, si = math.cos(ang), math.sin(ang)
        nx, ny, nz = n_hat
        u = np.array(
            [
                [c - 1j * si * nz, -1j * si * (nx - 1j * ny)],
                [-1j * si * (nx + 1j * ny), c + 1j * si * nz],
            ]
        )
        psi = u @ psi
        states[k + 1] = psi
    return Trajectory(times=times, states=states, kind="spinor", profile=profile,
                      metadata={"method": "exp_midpoint", "n_steps": n_steps})


def exponential_midpoint_bloch(
    profile: FieldProfile, S0, t_span: tuple[float, float], n_steps: int
) -> Trajectory:
    """Fixed-step Rodrigues rotation about the midpoint field direction."""
    t0, t1 = t_span
    h = (t1 - t0) / n_steps
    S = as_bloch(S0)
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, 3))
    states[0] = S
    for k in range(n_steps):
        s = sample(profile, t0 + (k + 0.5) * h)
        B = s.B_mag
        axis = s.B_vec / B
        ang = B * h
        c, si = math.cos(ang), math.sin(ang)
        S = S * c + np.cross(axis, S) * si + axis * np.dot(axis, S) * (1.0 - c)
        states[k + 1] = S
    return Trajectory(times=times, states=states, kind="bloch", profile=profile,
                      metadata={"method": "exp_midpoint", "n_steps": n_steps})


# ---------------------------------------------------------------------------
# Defect estimate (step doubling)
# ---------------------------------------------------------------------------

def residual_defect(traj: Trajectory, profile: FieldProfile, n_probe: int = 16) -> float:
    """Max step-doubling defect of the stored trajectory at probe nodes.

    From each probe node a classical RK4 step of the local grid spacing is
    taken once with h and once with two h/2 substeps; the distance of the
    stored next node from the doubled-step result estimates the local
    defect of the stored solution at grid resolution.
    """
    if traj.kind == "spinor":
        def rhs(t, y):
            return -1j * (hamiltonian_matrix(sample(profile, t)) @ y)
    else:
        def rhs(t, y):
            return np.cross(sample(profile, t).B_vec, y)

    idx = np.unique(np.linspace(0, len(traj.times) - 2, n_probe).astype(int))
    worst = 0.0
    for i in idx:
        t, h = traj.times[i], traj.times[i + 1] - traj.times[i]
        y = traj.states[i]
        half = _rk4(rhs, t, y, 0.5 * h)
        two = _rk4(rhs, t + 0.5 * h, half, 0.5 * h)
        worst = max(worst, float(np.linalg.norm(traj.states[i + 1] - two)))
    return worst


def _rk4(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# Phase extraction
# ---------------------------------------------------------------------------

def extract_total_phase(traj: Trajectory, reference: str = "tracked_eigenvector") -> np.ndarray:
    """Continuous unwrapped phase arg<ref(t)|psi(t)>, zero at the first node.

    reference="initial_state" projects on the frozen initial state;
    "tracked_eigenvector" projects on the instantaneous quasi-stationary
    spinor direction (requires the trajectory's profile and an overlap
    staying above 0.5).

    Raises
    ------
    OverlapLoss
        Tracked overlap fell to 0.5 or below (state left the branch).
    BranchJump
        Phase moved more than pi/2 between adjacent nodes, or the overlap
        passed through zero; the grid is too coarse to unwrap safely.
    """
    if traj.kind != "spinor":
        raise DomainError("phase extraction needs a spinor trajectory")
    if reference == "initial_state":
        refs = np.broadcast_to(traj.states[0], traj.states.shape)
    elif reference == "tracked_eigenvector":
        if traj.profile is None:
            raise DomainError("tracked reference requires the trajectory's profile")
        refs = np.array([tracked_eigenvector(traj.profile, float(t)) for t in traj.times])
    else:
        raise DomainError(f"unknown phase reference {reference!r}")

    overlaps = np.sum(np.conj(refs) * traj.states, axis=1)
    mags = np.abs(overlaps)
    if reference == "tracked_eigenvector" and float(np.min(mags)) <= 0.5:
        raise OverlapLoss(
            f"tracked overlap dropped to {float(np.min(mags)):.3g}; adiabaticity broken"
        )
    if float(np.min(mags)) < 1e-12:
        raise BranchJump("overlap passed through zero; phase undefined on this grid")
    raw = np.angle(overlaps)
    steps = np.diff(raw)
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    worst = float(np.max(np.abs(steps))) if steps.size else 0.0
    if worst > 0.5 * np.pi:
        raise BranchJump(f"phase step {worst:.3g} rad exceeds pi/2; refine the grid")
    phases = np.empty_like(raw)
    phases[0] = 0.0
    np.cumsum(steps, out=phases[1:])
    return phases


def schrodinger_phase(
    profile: FieldProfile,
    psi0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
    reference: str = "tracked_eigenvector",
) -> tuple[Trajectory, np.ndarray]:
    """Integrate and extract the total phase, refining the grid on branch jumps.

    The dense-output grid is doubled (up to 16x) whenever unwrapping detects
    a step larger than pi/2; the final trajectory and phase series are
    returned together.
    """
    grid = (
        np.asarray(cfg.dense_output_grid, dtype=float)
        if cfg.dense_output_grid is not None
        else default_grid(profile, t_span)
    )
    factor = 1
    while True:
        run_cfg = IntegratorConfig(
            rel_tol=cfg.rel_tol,
            abs_tol=cfg.abs_tol,
            max_step=cfg.max_step,
            dense_output_grid=grid,
            method=cfg.method,
        )
        traj = integrate_schrodinger(profile, psi0, t_span, run_cfg)
        try:
            return traj, extract_total_phase(traj, reference)
        except BranchJump:
            if factor >= MAX_GRID_REFINE:
                raise
            factor *= 2
            grid = np.linspace(t_span[0], t_span[1], 2 * (len(grid) - 1) + 1)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory) -> str:
    """Render a trajectory as CSV text with 17-significant-digit floats."""
    lines = []
    if traj.kind == "spinor":
        lines.append("t,re_up,im_up,re_dn,im_dn")
        for t, (up, dn) in zip(traj.times, traj.states):
            lines.append(
                f"{t:.17g},{up.real:.17g},{up.imag:.17g},{dn.real:.17g},{dn.imag:.17g}"
            )
    else:
        lines.append("t,Sx,Sy,Sz")
        for t, (x, y, z) in zip(traj.times, traj.states):
            lines.append(f"{t:.17g},{x:.17g},{y:.17g},{z:.17g}")
    return "\n".join(lines) + "\n"
