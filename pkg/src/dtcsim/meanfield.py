"""Semiclassical (spin coherent state) reduction of the driven chain.

For a uniform product state with spinor ``(psi1, psi2)`` the energy per site is

    H(Q, P, t) = -h sqrt(1 - Q^2) cos(P) cos^2(omega t / 2) - J (1 + Q^2)
                 + lam (sqrt(1 - Q^2) sin(P) + Q)

with ``Q = |psi1|^2 - |psi2|^2`` and ``P = arg(psi2) - arg(psi1)``. Hamilton's
equations read ``dQ/dt = -2 dH/dP`` and ``dP/dt = 2 dH/dQ``.

``convention="pauli"`` (default) is the exact product-state expectation of the
chain Hamiltonian. ``convention="spin"`` writes the Ising term with spin-1/2
operators ``S = sigma / 2``, i.e. ``J -> J / 4``, while the single-site terms are
unchanged. The published semiclassical phase portraits follow the latter.

The (Q, P) chart is singular at the poles ``Q = +-1``, and the ideal spin-flip
orbit passes straight through one. Integration therefore runs on the Bloch vector
``s = (sqrt(1-Q^2) cos P, sqrt(1-Q^2) sin P, Q)``, where the same flow is
``ds/dt = 2 grad_s(H) x s`` and has no singularity; (Q, P) are read off on output.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _core
from .analysis import StroboscopicSeries
from .model import ModelParams

log = logging.getLogger(__name__)

POLE_TOL = 1e-12
DEFAULT_STEPS_PER_PERIOD = 1000
ISING_CONVENTIONS = {"pauli": 1.0, "spin": 0.25}


class PoleError(ValueError):
    """State sits on a pole of the (Q, P) chart where the equations are singular."""


@dataclass(frozen=True)
class MeanFieldState:
    """Canonical pair. ``P`` is stored as given; :meth:`wrapped` maps it to (-pi, pi]."""

    Q: float
    P: float

    def __post_init__(self):
        if not abs(self.Q) <= 1.0 + POLE_TOL:
            raise ValueError(f"|Q| must not exceed 1, got Q={self.Q}")

    def wrapped(self) -> "MeanFieldState":
        return MeanFieldState(self.Q, wrap_angle(self.P))

    def bloch(self) -> np.ndarray:
        r = math.sqrt(max(0.0, 1.0 - self.Q * self.Q))
        return np.array([r * math.cos(self.P), r * math.sin(self.P), self.Q])

    @classmethod
    def from_bloch(cls, s) -> "MeanFieldState":
        x, y, z = s
        return cls(Q=float(np.clip(z, -1.0, 1.0)), P=float(math.atan2(y, x)))

    @classmethod
    def from_spinor(cls, spinor) -> "MeanFieldState":
        psi1, psi2 = np.asarray(spinor, dtype=complex).reshape(2)
        return cls(Q=float(abs(psi1) ** 2 - abs(psi2) ** 2),
                   P=wrap_angle(float(np.angle(psi2) - np.angle(psi1))))

    @property
    def sigma_y(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.Q * self.Q)) * math.sin(self.P)


def wrap_angle(p):
    """Map angles to (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(p, dtype=float), 2.0 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


@dataclass
class Trajectory:
    times: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    params: ModelParams

    def __post_init__(self):
        if not (len(self.times) == len(self.Q) == len(self.P)):
            raise ValueError("times, Q and P must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) != 0):
            raise ValueError("times must be strictly monotonic")

    @property
    def states(self) -> list[MeanFieldState]:
        return [MeanFieldState(float(q), float(p)) for q, p in zip(self.Q, self.P)]

    @property
    def final(self) -> MeanFieldState:
        return MeanFieldState(float(self.Q[-1]), float(self.P[-1]))


@dataclass
class PsosCloud:
    """Stroboscopic points of every seed, seed-major and time-minor.

    ``points[k]`` is ``(P, Q)`` at period ``n[k]`` of seed ``seed_index[k]``.
    """

    points: np.ndarray
    seeds: np.ndarray
    seed_index: np.ndarray
    n: np.ndarray
    n_periods: int
    skipped: list[int] = field(default_factory=list)


def effective_params(params: ModelParams, convention: str = "pauli") -> ModelParams:
    """Parameters seen by the equations of motion under an Ising ``convention``."""
    try:
        scale = ISING_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown convention {convention!r}; choose from "
                         f"{sorted(ISING_CONVENTIONS)}") from None
    return params if scale == 1.0 else params.replace(J=params.J * scale)


def _envelope(t: float, params: ModelParams, frozen: bool) -> float:
    return 0.5 if frozen else math.cos(0.5 * params.omega * t) ** 2


def mf_energy(state: MeanFieldState, t: float, params: ModelParams,
              frozen_drive: bool = False, convention: str = "pauli") -> float:
    """Mean-field energy per site. ``frozen_drive`` replaces cos^2 by its mean 1/2."""
    params = effective_params(params, convention)
    Q, P = state.Q, state.P
    if abs(Q) > 1.0 + POLE_TOL:
        raise ValueError(f"|Q| > 1 is outside the phase space (Q={Q})")
    r = math.sqrt(max(0.0, 1.0 - Q * Q))
    c = _envelope(t, params, frozen_drive)
    return (-params.h * r * math.cos(P) * c
            - params.J * (1.0 + Q * Q)
            + params.lam * (r * math.sin(P) + Q))


def eom_rhs(state: MeanFieldState, t: float, params: ModelParams,
            frozen_drive: bool = False, convention: str = "pauli") -> tuple[float, float]:
    """``(dQ/dt, dP/dt)`` from Hamilton's equations in the (Q, P) chart."""
    params = effective_params(params, convention)
    Q, P = state.Q, state.P
    if abs(Q) > 1.0 - POLE_TOL and (params.h != 0.0 or params.lam != 0.0):
        raise PoleError(f"(Q, P) equations are singular at |Q| = 1 (Q={Q})")
    r = math.sqrt(1.0 - Q * Q)
    c = _envelope(t, params, frozen_drive)
    sp, cp = math.sin(P), math.cos(P)
    dH_dP = params.h * r * sp * c + params.lam * r * cp
    dH_dQ = (params.h * Q * cp * c / r if r > 0 else 0.0) - 2.0 * params.J * Q
    if params.lam != 0.0:
        dH_dQ += params.lam * (1.0 - Q * sp / r)
    return -2.0 * dH_dP, 2.0 * dH_dQ


def bloch_rhs(s, t: float, params: ModelParams, frozen_drive: bool = False,
              convention: str = "pauli") -> np.ndarray:
    """The same flow on the Bloch sphere, ``ds/dt = 2 grad(H) x s``."""
    params = effective_params(params, convention)
    x, y, z = s
    c = _envelope(t, params, frozen_drive)
    g = np.array([-params.h * c, params.lam, params.lam - 2.0 * params.J * z])
    return 2.0 * np.cross(g, np.array([x, y, z]))


def _check_steps(steps_per_period: int):
    if int(steps_per_period) != steps_per_period or steps_per_period < 100:
        raise ValueError(f"steps_per_period must be an integer >= 100, got {steps_per_period!r}")


def _run(bloch: np.ndarray, t0: float, step: float, n_steps: int, record_every: int,
         params: ModelParams, frozen: bool, convention: str = "pauli") -> np.ndarray:
    """Drive the RK4 kernel for a batch of Bloch vectors; returns (seeds, records, 3)."""
    params = effective_params(params, convention)
    X = np.ascontiguousarray(bloch[:, 0], dtype=float)
    Y = np.ascontiguousarray(bloch[:, 1], dtype=float)
    Z = np.ascontiguousarray(bloch[:, 2], dtype=float)
    out = np.empty((len(X), n_steps // record_every + 1, 3))
    _core.rk4_bloch(X, Y, Z, float(t0), float(step), int(n_steps), int(record_every),
                    params.h, params.J, params.lam, params.omega, bool(frozen), out)
    return out


def _to_canonical(samples: np.ndarray, p0: float) -> tuple[np.ndarray, np.ndarray]:
    """Bloch samples -> (Q, P) with P unwrapped continuously from ``p0``."""
    Q = np.clip(samples[..., 2], -1.0, 1.0)
    P = np.arctan2(samples[..., 1], samples[..., 0])
    P = np.unwrap(P, axis=-1)
    P = P + 2.0 * np.pi * np.round((p0 - P[..., :1]) / (2.0 * np.pi))
    return Q, P


def integrate(state0: MeanFieldState, t0: float, t1: float, params: ModelParams,
              steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
              frozen_drive: bool = False, convention: str = "pauli") -> Trajectory:
    """Fixed-step RK4 from ``t0`` to ``t1`` with step ``T / steps_per_period``.

    Every step is recorded; a shortened final step lands exactly on ``t1``.
    ``t1 < t0`` integrates backwards in time.
    """
    _check_steps(steps_per_period)
    if t1 == t0:
        raise ValueError("t1 must differ from t0")
    direction = 1.0 if t1 > t0 else -1.0
    step = params.T / steps_per_period
    span = abs(t1 - t0)
    n_full = int(math.floor(span / step * (1 + 1e-12)))
    remainder = span - n_full * step
    if remainder <= 1e-12 * step:
        remainder = 0.0

    s0 = state0.bloch()[None, :]
    pieces = [_run(s0, t0, direction * step, n_full, 1, params, frozen_drive, convention)[0]]
    times = t0 + direction * step * np.arange(n_full + 1)
    if remainder > 0.0:
        last = _run(pieces[0][-1][None, :], times[-1], direction * remainder, 1, 1,
                    params, frozen_drive, convention)[0]
        pieces.append(last[1:])
        times = np.append(times, t1)
    else:
        times[-1] = t1
    samples = np.concatenate(pieces)
    Q, P = _to_canonical(samples, state0.P)
    return Trajectory(times=times, Q=Q, P=P, params=params)


def stroboscopic(state0: MeanFieldState, n_periods: int, params: ModelParams,
                 steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
                 frozen_drive: bool = False, convention: str = "pauli") -> StroboscopicSeries:
    """Sample (P, Q) and ``<sigma_y>`` at ``t = nT`` for ``n = 0..n_periods``.

    The returned series holds ``<sigma_y>(nT)`` for ``n >= 1`` as ``values``;
    ``columns`` carries the full ``n``, wrapped ``P``, ``Q`` and ``sigma_y`` records.
    """
    _check_steps(steps_per_period)
    if int(n_periods) != n_periods or n_periods < 1:
        raise ValueError(f"n_periods must be a positive integer, got {n_periods!r}")
    samples = _run(state0.bloch()[None, :], 0.0, params.T / steps_per_period,
                   n_periods * steps_per_period, steps_per_period, params, frozen_drive,
                   convention)[0]
    Q, P = _to_canonical(samples, state0.P)
    sigma_y = samples[:, 1]
    return StroboscopicSeries(
        values=sigma_y[1:].copy(),
        period=params.T,
        label=f"meanfield[{convention}] sigma_y JT={params.JT:g} epsT={params.epsilonT:g} lamT={params.lambdaT:g}",
        initial=float(sigma_y[0]),
        columns={"n": np.arange(n_periods + 1), "P": wrap_angle(P), "Q": Q, "sigma_y": sigma_y},
    )


def default_seed_grid(n_p: int = 24, n_q: int = 24, q_max: float = 0.95) -> list[MeanFieldState]:
    """Uniform grid over P in (-pi, pi] and Q in [-q_max, q_max], P-major."""
    ps = -np.pi + 2.0 * np.pi * (np.arange(n_p) + 1) / n_p
    qs = np.linspace(-q_max, q_max, n_q)
    return [MeanFieldState(float(q), float(p)) for p in ps for q in qs]


def psos(seeds: Sequence[MeanFieldState] | Iterable[MeanFieldState], n_periods: int,
         params: ModelParams, steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
         convention: str = "pauli") -> PsosCloud:
    """Poincare surface of section: stroboscopic (P, Q) of every seed, n = 0..n_periods."""
    _check_steps(steps_per_period)
    seeds = list(seeds)
    kept, skipped = [], []
    for i, s in enumerate(seeds):
        if abs(s.Q) >= 1.0 - POLE_TOL:
            log.warning("psos: seed %d at the pole (Q=%g) skipped", i, s.Q)
            skipped.append(i)
        else:
            kept.append(i)
    seed_arr = np.array([[wrap_angle(s.P), s.Q] for s in seeds]).reshape(-1, 2)
    if not kept:
        empty = np.empty((0, 2))
        return PsosCloud(empty, seed_arr, np.empty(0, int), np.empty(0, int), n_periods, skipped)
    bloch = np.array([seeds[i].bloch() for i in kept])
    samples = _run(bloch, 0.0, params.T / steps_per_period, n_periods * steps_per_period,
                   steps_per_period, params, False, convention)
    Q = np.clip(samples[..., 2], -1.0, 1.0)
    P = np.arctan2(samples[..., 1], samples[..., 0])
    n_rec = n_periods + 1
    points = np.stack([wrap_angle(P).ravel(), Q.ravel()], axis=1)
    return PsosCloud(
        points=points,
        seeds=seed_arr,
        seed_index=np.repeat(np.array(kept), n_rec),
        n=np.tile(np.arange(n_rec), len(kept)),
        n_periods=n_periods,
        skipped=skipped,
    )


def one_period_map(P: float, Q: float, params: ModelParams,
                   steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
                   convention: str = "pauli") -> tuple[float, float]:
    """Stroboscopic map ``(P, Q) -> (P', Q')`` over one drive period (P' unwrapped)."""
    s = _run(MeanFieldState(Q, P).bloch()[None, :], 0.0, params.T / steps_per_period,
             steps_per_period, steps_per_period, params, False, convention)[0]
    Qs, Ps = _to_canonical(s, P)
    return float(Ps[-1]), float(Qs[-1])
