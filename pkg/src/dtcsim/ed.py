"""Exact state-vector evolution for small chains (N <= 14).

Used as the oracle for the MPS engine. The default integrator is the fourth-order
commutator-free Magnus scheme: per step, two exponentials of linear
combinations of H at the Gauss-Legendre nodes, each applied to the state by a
Taylor series summed to machine precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .analysis import StroboscopicSeries
from .model import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, MagnetizationAxis, ModelParams,
                    ProductStateSpec, local_spinor)

MAX_SITES = 14
NORM_DRIFT_LIMIT = 1e-8

_SQ3 = math.sqrt(3.0)
_GAUSS = (0.5 - _SQ3 / 6.0, 0.5 + _SQ3 / 6.0)
_CF4 = ((0.25 + _SQ3 / 6.0, 0.25 - _SQ3 / 6.0), (0.25 - _SQ3 / 6.0, 0.25 + _SQ3 / 6.0))


class NormDriftError(RuntimeError):
    pass


def _check_sites(N: int):
    if N < 1 or N > MAX_SITES:
        raise ValueError(f"exact evolution supports 1 <= N <= {MAX_SITES}, got N={N}")


@dataclass
class DenseState:
    amplitudes: np.ndarray
    N: int

    def __post_init__(self):
        _check_sites(self.N)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2**self.N:
            raise ValueError("amplitude vector must have length 2**N")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm {norm})")

    @classmethod
    def from_product(cls, spec: ProductStateSpec) -> "DenseState":
        v = local_spinor(spec)
        return cls(reduce(np.kron, [v] * spec.N), spec.N)


def site_operator(op: np.ndarray, j: int, N: int) -> sp.csr_array:
    """``op`` acting on site ``j`` (0-based, site 0 is the most significant bit)."""
    mats = [sp.identity(2, dtype=complex, format="csr")] * N
    mats[j] = sp.csr_array(op)
    return sp.csr_array(reduce(lambda a, b: sp.kron(a, b, format="csr"), mats))


def hamiltonian_parts(params: ModelParams, N: int) -> tuple[sp.csr_array, sp.csr_array]:
    """``(X_tot, H_static)`` with ``H(t) = -h cos^2(omega t/2) X_tot + H_static``."""
    _check_sites(N)
    dim = 2**N
    X = sp.csr_array((dim, dim), dtype=complex)
    S = sp.csr_array((dim, dim), dtype=complex)
    for j in range(N):
        X = X + site_operator(SIGMA_X, j, N)
        if params.lam != 0.0:
            S = S + params.lam * (site_operator(SIGMA_Y, j, N) + site_operator(SIGMA_Z, j, N))
    if params.J != 0.0:
        for j in range(N - 1):
            S = S - params.J * (site_operator(SIGMA_Z, j, N) @ site_operator(SIGMA_Z, j + 1, N))
    return sp.csr_array(X), sp.csr_array(S)


def drive_envelope(t: float, params: ModelParams) -> float:
    return math.cos(0.5 * params.omega * t) ** 2


def dense_hamiltonian(t: float, params: ModelParams, N: int | None = None) -> sp.csr_array:
    """H(t) on the full 2^N space, as a sparse Hermitian matrix (``.toarray()`` for dense)."""
    N = params.N if N is None else N
    X, S = hamiltonian_parts(params, N)
    return sp.csr_array(-params.h * drive_envelope(t, params) * X + S)


def _expm_apply(a: float, X, S, b: float, v: np.ndarray) -> np.ndarray:
    """``exp(-i (a X + b S)) v`` by Taylor series, truncated below machine precision."""
    out = v.copy()
    term = v
    scale = np.linalg.norm(v)
    for k in range(1, 60):
        w = X @ term
        w *= a
        if b != 0.0:
            w += b * (S @ term)
        term = w * (-1j / k)
        out += term
        if np.linalg.norm(term) <= 1e-17 * scale:
            return out
    raise RuntimeError("Taylor series did not converge; reduce dt")


def magnetization_dense(psi: np.ndarray, N: int, axis: MagnetizationAxis) -> float:
    """``(1/N) sum_j <psi| n . sigma_j |psi>``."""
    op = axis.operator()
    t = psi.reshape((2,) * N)
    total = 0.0
    for j in range(N):
        applied = np.moveaxis(np.tensordot(op, t, axes=([1], [j])), 0, j)
        total += np.vdot(t, applied).real
    return float(total / N)


def steps_per_period(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"dt={dt} does not divide the period T={T}")
    return n


def ed_evolve(state0: DenseState, params: ModelParams, dt: float, n_periods: int,
              axis: MagnetizationAxis | None = None, method: str = "magnus4",
              return_state: bool = False):
    """Integrate the Schroedinger equation and record ``<M>`` at every ``t = nT``.

    ``method`` is ``"magnus4"`` (default) or ``"midpoint"`` (exact exponential of
    the Hamiltonian frozen at each step's midpoint, second order). With
    ``return_state=True`` the final amplitudes are returned alongside the series.
    """
    axis = MagnetizationAxis(params.phi) if axis is None else axis
    if dt > params.T / 100 * (1 + 1e-12):
        raise ValueError("ed_evolve requires dt <= T/100")
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    n_steps = steps_per_period(params.T, dt)
    N = state0.N
    X, S = hamiltonian_parts(params, N)
    h = params.h

    # the drive is T-periodic: per-step coefficients are the same every period
    coeffs = []
    for i in range(n_steps):
        t = i * dt
        if method == "magnus4":
            c1 = drive_envelope(t + _GAUSS[0] * dt, params)
            c2 = drive_envelope(t + _GAUSS[1] * dt, params)
            coeffs.append([-h * dt * (w1 * c1 + w2 * c2) for w1, w2 in _CF4])
        elif method == "midpoint":
            coeffs.append([-h * dt * drive_envelope(t + 0.5 * dt, params)])
        else:
            raise ValueError(f"unknown method {method!r}")
    b = dt * (0.5 if method == "magnus4" else 1.0)

    psi = state0.amplitudes.copy()
    values = np.empty(n_periods)
    initial = magnetization_dense(psi, N, axis)
    for n in range(n_periods):
        for step in coeffs:
            for a in step:
                psi = _expm_apply(a, X, S, b, psi)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
            raise NormDriftError(
                f"norm drift {abs(norm - 1.0):.2e} after period {n + 1}; reduce the step size dt"
            )
        values[n] = magnetization_dense(psi, N, axis)
    series = StroboscopicSeries(
        values=values,
        period=params.T,
        label=f"ed N={N} JT={params.JT:g} epsT={params.epsilonT:g} lamT={params.lambdaT:g}",
        initial=initial,
        columns={
            "n": np.arange(n_periods + 1),
            "magnetization": np.concatenate([[initial], values]),
            "cumulative_truncation_weight": np.zeros(n_periods + 1),
        },
    )
    if return_state:
        return series, psi
    return series
