"""Time-dependent magnetic field profiles with exact analytic derivatives.

Fields are given in frequency units (hbar = 1, the gyromagnetic factor is
absorbed into B).  A profile describes B(eps*t) through its spherical data
(B, theta, phi) as functions of the slow time tau = eps*t; the adiabaticity
scale ``epsilon`` multiplies every time derivative once per order, so that
sampling a profile with scale eps at time t reproduces the eps=1 profile at
time eps*t for the angle variables, while theta_dot scales by eps and
theta_ddot by eps**2.

Downstream consumers (adiabatic parameters, quasi-stationary corrections)
need theta_dot, theta_ddot and B_dot exactly, so derivatives are part of
the profile contract rather than re-derived numerically.  Only tabulated
profiles fall back to finite differences, with the step declared up front.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateField, DomainError

KINDS = (
    "constant",
    "uniform_rotation",
    "polynomial_angle",
    "sinusoidal_angle",
    "cone_3d",
    "user_tabulated",
)

DEFAULT_B_MIN = 1e-6


@dataclass(frozen=True)
class FieldSample:
    """Field state at one instant: Cartesian vector, spherical data, derivatives.

    Angles are kept unwrapped (theta continuous, not reduced mod 2*pi) so
    contour integrals over theta are well defined.  All rates are in lab-time
    units (the epsilon chain rule is already applied).
    """

    t: float
    B_vec: np.ndarray
    B_mag: float
    theta: float
    phi: float
    theta_dot: float
    theta_ddot: float
    phi_dot: float
    phi_ddot: float
    B_dot: float


@dataclass(frozen=True)
class FieldProfile:
    """Immutable field trajectory; sampling is pure and thread-safe.

    ``params`` holds the kind-specific scalars.  ``t_domain`` bounds the
    admissible sampling times (lab time); ``b_min`` is the degeneracy floor
    below which sampling raises :class:`DegenerateField`.
    """

    kind: str
    params: Mapping[str, float]
    epsilon: float = 1.0
    t_domain: tuple[float, float] = (-math.inf, math.inf)
    b_min: float = DEFAULT_B_MIN
    _tables: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if not (self.epsilon > 0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.b_min > 0):
            raise ConfigError(f"b_min must be positive, got {self.b_min}")
        lo, hi = self.t_domain
        if not lo < hi:
            raise ConfigError(f"empty t_domain {self.t_domain}")

    def sample(self, t: float) -> FieldSample:
        return sample(self, t)


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def constant(B0: float, theta0: float = 0.0, phi0: float = 0.0, **kw) -> FieldProfile:
    """Static field of magnitude B0 pointing along (theta0, phi0)."""
    _require_positive("B0", B0)
    return FieldProfile("constant", {"B0": B0, "theta0": theta0, "phi0": phi0}, **kw)


def uniform_rotation(B0: float, omega: float, theta_init: float = 0.0, **kw) -> FieldProfile:
    """In-plane field of constant magnitude rotating at uniform rate omega."""
    _require_positive("B0", B0)
    return FieldProfile(
        "uniform_rotation", {"B0": B0, "omega": omega, "theta_init": theta_init}, **kw
    )


def polynomial_angle(B0: float, coeffs: Sequence[float], **kw) -> FieldProfile:
    """In-plane field with theta(tau) = sum_k c_k tau**k, constant magnitude."""
    _require_positive("B0", B0)
    params = {"B0": B0}
    params.update({f"c{k}": float(c) for k, c in enumerate(coeffs)})
    return FieldProfile("polynomial_angle", params, **kw)


def sinusoidal_angle(
    B0: float,
    theta0: float,
    Omega: float,
    theta_offset: float = 0.0,
    b_amp: float = 0.0,
    b_freq: float = 0.0,
    **kw,
) -> FieldProfile:
    """In-plane field with theta(tau) = theta_offset + theta0*sin(Omega*tau).

    Optionally modulates the magnitude as B(tau) = B0*(1 + b_amp*sin(b_freq*tau)),
    which is the one analytic kind exercising B_dot != 0.
    """
    _require_positive("B0", B0)
    if abs(b_amp) >= 1.0:
        raise ConfigError(f"|b_amp| must be < 1 to keep the field non-degenerate, got {b_amp}")
    return FieldProfile(
        "sinusoidal_angle",
        {
            "B0": B0,
            "theta0": theta0,
            "Omega": Omega,
            "theta_offset": theta_offset,
            "b_amp": b_amp,
            "b_freq": b_freq,
        },
        **kw,
    )


def cone_3d(
    B0: float, theta_c: float, omega_phi: float, phi_init: float = 0.0, **kw
) -> FieldProfile:
    """Constant-magnitude field on a cone: theta fixed, phi(tau) = phi_init + omega_phi*tau."""
    _require_positive("B0", B0)
    return FieldProfile(
        "cone_3d",
        {"B0": B0, "theta_c": theta_c, "omega_phi": omega_phi, "phi_init": phi_init},
        **kw,
    )


def user_tabulated(
    taus: Sequence[float],
    B: Sequence[float],
    theta: Sequence[float],
    phi: Sequence[float] | None = None,
    fd_step: float = 1e-4,
    epsilon: float = 1.0,
    b_min: float = DEFAULT_B_MIN,
) -> FieldProfile:
    """Profile interpolated from tables of (B, theta, phi) over slow time tau.

    Interpolation is piecewise cubic; derivatives are central finite
    differences of the splines with the declared step ``fd_step`` (in tau).
    The usable lab-time domain shrinks by fd_step/epsilon at each end so the
    difference stencils stay inside the tables.
    """
    from scipy.interpolate import CubicSpline

    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 4:
        raise ConfigError("user_tabulated needs at least 4 nodes")
    if np.any(np.diff(taus) <= 0):
        raise ConfigError("tabulated times must be strictly increasing")
    if not fd_step > 0:
        raise ConfigError(f"fd_step must be positive, got {fd_step}")
    B = np.asarray(B, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi = np.zeros_like(taus) if phi is None else np.asarray(phi, dtype=float)
    if not (B.shape == theta.shape == phi.shape == taus.shape):
        raise ConfigError("tabulated arrays must share the time grid's shape")
    splines = (CubicSpline(taus, B), CubicSpline(taus, theta), CubicSpline(taus, phi))
    lo = (taus[0] + fd_step) / epsilon
    hi = (taus[-1] - fd_step) / epsilon
    return FieldProfile(
        "user_tabulated",
        {"fd_step": fd_step},
        epsilon=epsilon,
        t_domain=(lo, hi),
        b_min=b_min,
        _tables=splines,
    )


def _require_positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")


def _coeff_index(key: str) -> int:
    return int(key[1:]) if key.startswith("c") and key[1:].isdigit() else -1


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _base_eval(profile: FieldProfile, tau: float):
    """Evaluate (B, dB, theta, dtheta, ddtheta, phi, dphi, ddphi) in tau units."""
    p = profile.params
    kind = profile.kind
    if kind == "constant":
        return p["B0"], 0.0, p["theta0"], 0.0, 0.0, p["phi0"], 0.0, 0.0
    if kind == "uniform_rotation":
        return (
            p["B0"], 0.0,
            p["theta_init"] + p["omega"] * tau, p["omega"], 0.0,
            0.0, 0.0, 0.0,
        )
    if kind == "polynomial_angle":
        coeffs = [p[k] for k in sorted(p, key=_coeff_index) if k.startswith("c")]
        th = d1 = d2 = 0.0
        for c in reversed(coeffs):  # Horner for theta and its two derivatives
            d2 = d2 * tau + 2.0 * d1
            d1 = d1 * tau + th
            th = th * tau + c
        return p["B0"], 0.0, th, d1, d2, 0.0, 0.0, 0.0
    if kind == "sinusoidal_angle":
        th0, Om = p["theta0"], p["Omega"]
        s, c = math.sin(Om * tau), math.cos(Om * tau)
        bamp, bfreq = p["b_amp"], p["b_freq"]
        if bamp != 0.0:
            B = p["B0"] * (1.0 + bamp * math.sin(bfreq * tau))
            dB = p["B0"] * bamp * bfreq * math.cos(bfreq * tau)
        else:
            B, dB = p["B0"], 0.0
        return (
            B, dB,
            p["theta_offset"] + th0 * s, th0 * Om * c, -th0 * Om * Om * s,
            0.0, 0.0, 0.0,
        )
    if kind == "cone_3d":
        return (
            p["B0"], 0.0,
            p["theta_c"], 0.0, 0.0,
            p["phi_init"] + p["omega_phi"] * tau, p["omega_phi"], 0.0,
        )
    if kind == "user_tabulated":
        sB, sth, sph = profile._tables
        h = p["fd_step"]
        B = float(sB(tau))
        th = float(sth(tau))
        ph = float(sph(tau))
        dB = float(sB(tau + h) - sB(tau - h)) / (2.0 * h)
        dth = float(sth(tau + h) - sth(tau - h)) / (2.0 * h)
        ddth = float(sth(tau + h) - 2.0 * sth(tau) + sth(tau - h)) / (h * h)
        dph = float(sph(tau + h) - sph(tau - h)) / (2.0 * h)
        ddph = float(sph(tau + h) - 2.0 * sph(tau) + sph(tau - h)) / (h * h)
        return B, dB, th, dth, ddth, ph, dph, ddph
    raise ConfigError(f"unknown profile kind {kind!r}")


def sample(profile: FieldProfile, t: float) -> FieldSample:
    """Evaluate the field and its derivatives at lab time t.

    Raises
    ------
    DomainError
        If t lies outside the profile's declared domain.
    DegenerateField
        If the magnitude falls below the profile's b_min floor.
    """
    lo, hi = profile.t_domain
    if not (lo <= t <= hi):
        raise DomainError(f"t={t} outside profile domain [{lo}, {hi}]")
    eps = profile.epsilon
    B, dB, th, dth, ddth, ph, dph, ddph = _base_eval(profile, eps * t)
    if B < profile.b_min:
        raise DegenerateField(f"|B|={B} below floor {profile.b_min} at t={t}")
    sin_th, cos_th = math.sin(th), math.cos(th)
    sin_ph, cos_ph = math.sin(ph), math.cos(ph)
    vec = np.array([B * sin_th * cos_ph, B * sin_th * sin_ph, B * cos_th])
    return FieldSample(
        t=t,
        B_vec=vec,
        B_mag=B,
        theta=th,
        phi=ph,
        theta_dot=eps * dth,
        theta_ddot=eps * eps * ddth,
        phi_dot=eps * dph,
        phi_ddot=eps * eps * ddph,
        B_dot=eps * dB,
    )


def is_in_plane(profile: FieldProfile) -> bool:
    """True when the field direction stays in the (x, z) plane (phi == 0)."""
    if profile.kind in ("constant",):
        return profile.params["phi0"] == 0.0
    if profile.kind in ("uniform_rotation", "polynomial_angle", "sinusoidal_angle"):
        return True
    return False


def derivative_selftest(
    profile: FieldProfile, t_grid: Sequence[float], h: float
) -> float:
    """Max relative mismatch between analytic derivatives and central differences.

    For each grid time, theta_dot/phi_dot/B_dot are checked against central
    differences of theta/phi/B, and theta_ddot/phi_ddot against central
    differences of theta_dot/phi_dot.  Each residual is scaled by the larger
    of 1 and the magnitude of the quantity over the grid.
    """
    if not h > 0:
        raise DomainError(f"step h must be positive, got {h}")
    rows = []
    for t in t_grid:
        s0 = sample(profile, t)
        sp = sample(profile, t + h)
        sm = sample(profile, t - h)
        rows.append(
            (
                s0.theta_dot - (sp.theta - sm.theta) / (2 * h),
                s0.theta_ddot - (sp.theta_dot - sm.theta_dot) / (2 * h),
                s0.phi_dot - (sp.phi - sm.phi) / (2 * h),
                s0.phi_ddot - (sp.phi_dot - sm.phi_dot) / (2 * h),
                s0.B_dot - (sp.B_mag - sm.B_mag) / (2 * h),
                s0.theta_dot, s0.theta_ddot, s0.phi_dot, s0.phi_ddot, s0.B_dot,
            )
        )
    arr = np.asarray(rows)
    errs, vals = arr[:, :5], arr[:, 5:]
    scales = np.maximum(1.0, np.max(np.abs(vals), axis=0))
    return float(np.max(np.abs(errs) / scales))


# ---------------------------------------------------------------------------
# Structured-text configuration (JSON)
# ---------------------------------------------------------------------------

def profile_to_dict(profile: FieldProfile) -> dict:
    if profile.kind == "user_tabulated":
        raise ConfigError("user_tabulated profiles are built programmatically, not from config")
    d = {
        "kind": profile.kind,
        "params": dict(profile.params),
        "epsilon": profile.epsilon,
        "t_domain": list(profile.t_domain),
    }
    if profile.b_min != DEFAULT_B_MIN:
        d["b_min"] = profile.b_min
    return d


_FACTORIES: dict[str, Callable] = {
    "constant": constant,
    "uniform_rotation": uniform_rotation,
    "sinusoidal_angle": sinusoidal_angle,
    "cone_3d": cone_3d,
}


def profile_from_dict(d: Mapping) -> FieldProfile:
    """Build a profile from {"kind", "params", "epsilon", "t_domain"[, "b_min"]}."""
    try:
        kind = d["kind"]
        params = dict(d["params"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"profile config missing field: {exc}") from exc
    epsilon = float(d.get("epsilon", 1.0))
    t_domain = d.get("t_domain")
    kw = {"epsilon": epsilon}
    if t_domain is not None:
        if len(t_domain) != 2:
            raise ConfigError(f"t_domain must be [lo, hi], got {t_domain}")
        kw["t_domain"] = (float(t_domain[0]), float(t_domain[1]))
    if "b_min" in d:
        kw["b_min"] = float(d["b_min"])
    for name, value in params.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"profile param {name!r} must be a number, got {value!r}")
    if kind == "polynomial_angle":
        try:
            B0 = params.pop("B0")
        except KeyError:
            raise ConfigError("polynomial_angle requires B0") from None
        coeffs = [params[k] for k in sorted(params, key=_coeff_index) if k.startswith("c")]
        if not coeffs:
            raise ConfigError("polynomial_angle requires coefficients c0, c1, ...")
        return polynomial_angle(B0, coeffs, **kw)
    factory = _FACTORIES.get(kind)
    if factory is None:
        raise ConfigError(f"unknown profile kind {kind!r}")
    try:
        return factory(**params, **kw)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from exc


def profile_from_json(text: str) -> FieldProfile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid profile JSON: {exc}") from exc
    return profile_from_dict(d)
