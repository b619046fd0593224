"""Second-order adiabatic construction for spin 1/2 in a slowly turning field.

The construction rests on two dimensionless smallness parameters built from
the field's spherical angle theta and magnitude B,

    delta = theta_dot / B              (reduced angular velocity, first order)
    gamma = d(delta)/dt / B            (reduced angular acceleration, second order)
          = (theta_ddot - theta_dot*B_dot/B) / B**2

and the shifted precession frequency

    b_eff = B * (1 + delta**2 / 2).

Three successive frame changes take the in-plane Hamiltonian to a frame
where it is diagonal up to third-order residuals: a rotation by theta about
y, a small rotation by delta about x, and a small rotation by -gamma about
y.  The same chain exists in both representations: SU(2) factors U0, U1, U2
acting on spinors and SO(3) factors R0, R1, R2 acting on spin vectors, and
the two are each other's adjoint images up to the same truncation order.

In the final frame the solution is a plain precession with phase
phi(t) = -(1/2) * integral of b_eff; transporting it back through the chain
yields closed-form spinor and classical solutions, and the quasi-stationary
(non-precessing) branch with its explicit velocity- and acceleration-type
corrections.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NormalizationError, PerturbativeRegimeViolation
from .field_profiles import FieldProfile, FieldSample, is_in_plane, sample

PERTURBATIVE_LIMIT = 0.5


@dataclass(frozen=True)
class AdiabaticParams:
    """Dimensionless slowness parameters and effective precession frequency."""

    delta: float
    gamma: float
    b_eff: float


@dataclass(frozen=True)
class TransformChain:
    """The three-step frame chain in both representations.

    u0/r0 are exactly unitary/orthogonal; u1, u2, r1, r2 are truncated at
    second order and unitary/orthogonal only up to third-order residuals.
    """

    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @property
    def u_total(self) -> np.ndarray:
        return self.u0 @ self.u1 @ self.u2

    @property
    def r_total(self) -> np.ndarray:
        return self.r0 @ self.r1 @ self.r2


@dataclass(frozen=True)
class SolutionConstants:
    """Initial-condition constants: spinor amplitudes and their spin-vector image.

    alpha/beta weight the upper/lower branch of the final-frame solution;
    (A, B, C) are the matching precession constants of the classical
    solution, A = 2 Re(alpha* beta), B = 2 Im(alpha* beta),
    C = |alpha|**2 - |beta|**2.
    """

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise NormalizationError(f"|alpha|^2+|beta|^2 = {norm}, expected 1")

    @property
    def A(self) -> float:
        return 2.0 * (self.alpha.conjugate() * self.beta).real

    @property
    def B(self) -> float:
        return 2.0 * (self.alpha.conjugate() * self.beta).imag

    @property
    def C(self) -> float:
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2


def constants_map(alpha: complex, beta: complex) -> tuple[float, float, float]:
    """Map spinor amplitudes to classical precession constants (A, B, C)."""
    c = SolutionConstants(complex(alpha), complex(beta))
    return c.A, c.B, c.C


# ---------------------------------------------------------------------------
# Adiabatic parameters
# ---------------------------------------------------------------------------

def params_from_sample(s: FieldSample) -> AdiabaticParams:
    B = s.B_mag
    delta = s.theta_dot / B
    gamma = (s.theta_ddot - s.theta_dot * s.B_dot / B) / (B * B)
    return AdiabaticParams(delta=delta, gamma=gamma, b_eff=B * (1.0 + 0.5 * delta * delta))


def adiabatic_params(profile: FieldProfile, t: float) -> AdiabaticParams:
    """Slowness parameters (delta, gamma) and effective frequency at time t."""
    return params_from_sample(sample(profile, t))


def _guard_perturbative(params: AdiabaticParams):
    if abs(params.delta) >= PERTURBATIVE_LIMIT or abs(params.gamma) >= PERTURBATIVE_LIMIT:
        raise PerturbativeRegimeViolation(
            f"delta={params.delta}, gamma={params.gamma} exceed the "
            f"|.| < {PERTURBATIVE_LIMIT} perturbative guard"
        )


# ---------------------------------------------------------------------------
# Transform chains
# ---------------------------------------------------------------------------

def transform_chain(theta: float, params: AdiabaticParams) -> TransformChain:
    """Build the three frame-change factors in both representations.

    The truncated factors keep terms through second order in the slowness
    parameters; their unitarity/orthogonality defect is fourth order.
    """
    _guard_perturbative(params)
    d, g = params.delta, params.gamma
    ch, sh = math.cos(0.5 * theta), math.sin(0.5 * theta)
    u0 = np.array([[ch, -sh], [sh, ch]], dtype=complex)
    u1 = np.array(
        [[1.0 - d * d / 8.0, -0.5j * d], [-0.5j * d, 1.0 - d * d / 8.0]], dtype=complex
    )
    u2 = np.array([[1.0, 0.5 * g], [-0.5 * g, 1.0]], dtype=complex)

    ct, st = math.cos(theta), math.sin(theta)
    r0 = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    r1 = np.array(
        [[1.0, 0.0, 0.0], [0.0, 1.0 - d * d / 2.0, -d], [0.0, d, 1.0 - d * d / 2.0]]
    )
    r2 = np.array([[1.0, 0.0, -g], [0.0, 1.0, 0.0], [g, 0.0, 1.0]])
    return TransformChain(u0=u0, u1=u1, u2=u2, r0=r0, r1=r1, r2=r2)


def u_chain(theta: float, params: AdiabaticParams) -> TransformChain:
    """Spinor-representation view of the frame chain (carries both parts)."""
    return transform_chain(theta, params)


def r_chain(theta: float, params: AdiabaticParams) -> TransformChain:
    """Vector-representation view of the frame chain (carries both parts)."""
    return transform_chain(theta, params)


def _chain_at(profile: FieldProfile, t: float) -> tuple[FieldSample, TransformChain]:
    if not is_in_plane(profile):
        raise DomainError(
            "the diagonalization chain is defined for in-plane profiles (phi == 0)"
        )
    s = sample(profile, t)
    return s, transform_chain(s.theta, params_from_sample(s))


# ---------------------------------------------------------------------------
# Closed-form solutions
# ---------------------------------------------------------------------------

def spinor_solution(
    constants: SolutionConstants, profile: FieldProfile, t: float, phase: float
) -> np.ndarray:
    """Second-order spinor solution in the lab frame.

    ``phase`` is the accumulated -(1/2) integral of b_eff (see
    :mod:`spinphase.geometric_phases`); the final-frame state
    (alpha e^{i phase}, beta e^{-i phase}) is transported back through the
    chain.  Normalized up to third-order residuals.
    """
    _, chain = _chain_at(profile, t)
    psi3 = np.array(
        [constants.alpha * cmath.exp(1j * phase), constants.beta * cmath.exp(-1j * phase)]
    )
    return chain.u_total @ psi3


def classical_solution(
    constants: SolutionConstants, profile: FieldProfile, t: float, phase: float
) -> np.ndarray:
    """Second-order classical spin solution in the lab frame.

    The final-frame spin carries azimuth -2*phase, twice the spinor phase
    magnitude (phase is negative for positive fields, so the precession runs
    counterclockwise about the effective field, as dS/dt = B x S demands);
    the extra second-order azimuth is the classical counterpart of the
    quantum phase correction.  The (A, B) rotation sense is fixed by
    requiring S3 = <psi3|sigma|psi3> under the module's spin-map convention.
    """
    _, chain = _chain_at(profile, t)
    c2, s2 = math.cos(2.0 * phase), math.sin(2.0 * phase)
    A, B, C = constants.A, constants.B, constants.C
    s3 = np.array([A * c2 + B * s2, B * c2 - A * s2, C])
    return chain.r_total @ s3


def tracked_eigenvector(profile: FieldProfile, t: float, branch: int = +1) -> np.ndarray:
    """Second-order quasi-stationary spinor direction (phase factor stripped).

    branch=+1 follows the upper level, branch=-1 the lower one.  Seeding an
    exact integration with this vector (instead of the instantaneous
    eigenvector) leaves only third-order residual oscillation around the
    quasi-stationary branch.  Returned unit-normalized.
    """
    _, chain = _chain_at(profile, t)
    col = chain.u_total[:, 0 if branch == +1 else 1]
    return col / np.linalg.norm(col)


# ---------------------------------------------------------------------------
# Quasi-stationary decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiStationary:
    """Field-tracking spin with its order-by-order corrections.

    s0 follows the field direction, s1 is the lateral velocity-type
    deflection, s2 combines the acceleration-type deflection with the radial
    term that restores unit norm; s_total = s0 + s1 + s2.
    """

    s_total: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray


def quasi_stationary(profile: FieldProfile, t: float) -> QuasiStationary:
    """Quasi-stationary spin via the coordinate-free corrections.

    Valid for general 3-D field evolution:

        s0 = B/|B|
        s1 = (d s0/dt x s0) / B
        s2 = (d s1/dt x s0) / B - (|s1|**2 / 2) s0

    The derivatives are evaluated analytically from the profile's angle
    derivatives (chain rule through the moving spherical basis), never by
    finite differences, so s2 is not polluted by differencing error.
    """
    s = sample(profile, t)
    B = s.B_mag
    st, ct = math.sin(s.theta), math.cos(s.theta)
    sp, cp = math.sin(s.phi), math.cos(s.phi)
    e_r = np.array([st * cp, st * sp, ct])
    e_th = np.array([ct * cp, ct * sp, -st])
    e_ph = np.array([-sp, cp, 0.0])

    td, tdd = s.theta_dot, s.theta_ddot
    pd, pdd = s.phi_dot, s.phi_ddot

    s0 = e_r
    ds0 = td * e_th + pd * st * e_ph
    s1 = np.cross(ds0, s0) / B
    dds0 = (
        -(td * td + pd * pd * st * st) * e_r
        + (tdd - pd * pd * st * ct) * e_th
        + (pdd * st + 2.0 * td * pd * ct) * e_ph
    )
    ds1 = np.cross(dds0, s0) / B - (s.B_dot / B) * s1
    s1_sq = float(np.dot(s1, s1))
    if s1_sq >= PERTURBATIVE_LIMIT**2:
        raise PerturbativeRegimeViolation(
            f"|s1|={math.sqrt(s1_sq)} exceeds the perturbative guard {PERTURBATIVE_LIMIT}"
        )
    s2 = np.cross(ds1, s0) / B - 0.5 * s1_sq * s0
    return QuasiStationary(s_total=s0 + s1 + s2, s0=s0, s1=s1, s2=s2)


def quasi_stationary_cartesian(profile: FieldProfile, t: float) -> QuasiStationary:
    """In-plane Cartesian view of the quasi-stationary corrections.

    Cross-check form: must agree with :func:`quasi_stationary` to 1e-12 for
    in-plane profiles.
    """
    if not is_in_plane(profile):
        raise DomainError("Cartesian quasi-stationary form assumes an in-plane profile")
    s = sample(profile, t)
    p = params_from_sample(s)
    _guard_perturbative(p)
    st, ct = math.sin(s.theta), math.cos(s.theta)
    d, g = p.delta, p.gamma
    s0 = np.array([st, 0.0, ct])
    s1 = np.array([0.0, -d, 0.0])
    s2 = np.array([-g * ct - 0.5 * d * d * st, 0.0, g * st - 0.5 * d * d * ct])
    return QuasiStationary(s_total=s0 + s1 + s2, s0=s0, s1=s1, s2=s2)


def quasi_stationary_spherical(profile: FieldProfile, t: float) -> tuple[float, float, float]:
    """In-plane spherical-basis coefficients (radial, e_theta, e_phi).

    Returns (1 - delta**2/2, -gamma, -delta): the unit radial part carries
    the second-order normalization correction, the polar component is the
    acceleration-type deflection, the azimuthal one the velocity-type
    deflection.
    """
    if not is_in_plane(profile):
        raise DomainError("spherical quasi-stationary form assumes an in-plane profile")
    p = adiabatic_params(profile, t)
    _guard_perturbative(p)
    return 1.0 - 0.5 * p.delta * p.delta, -p.gamma, -p.delta
