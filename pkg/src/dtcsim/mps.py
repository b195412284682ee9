"""Matrix-product-state evolution of the driven chain (TEBD with third-order splitting).

The state is kept in right-canonical form with Schmidt values on every bond:
``|psi> = sum S_0 B_0 B_1 ... B_{N-1}``, so single-site expectation values need only
the local tensor and the Schmidt values to its left. Two-site gates follow
Hastings' update, which never divides by small Schmidt values; once singular
values are discarded the canonical form holds up to the truncation error.

One Trotter substep of length ``dt`` splits ``H(t) = A(t) + B`` into

* group A: odd bonds ``(0,1), (2,3), ...`` with every single-site term (drive and
  static field) folded into the bond gates, plus a lone last site for odd ``N``;
* group B: even bonds ``(1,2), (3,4), ...`` (Ising only, time independent),

and applies Ruth's third-order product
``A(7/24) B(2/3) A(3/4) B(-2/3) A(-1/24) B(1)``. Time is treated as an extra
coordinate advanced by the B stages, so the A stages see the drive at
``t, t + 2dt/3, t`` and the third order survives the time dependence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .analysis import StroboscopicSeries
from .model import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, MagnetizationAxis, ModelParams,
                    ProductStateSpec, local_spinor)

# third-order coefficients, in application order (group, fraction of dt)
RUTH3 = (("A", 7.0 / 24.0), ("B", 2.0 / 3.0), ("A", 3.0 / 4.0),
         ("B", -2.0 / 3.0), ("A", -1.0 / 24.0), ("B", 1.0))
SCHEME_NAME = "ruth3"

SVD_CUTOFF = 1e-14
DEFAULT_BUDGET = 1e-2


class TruncationBudgetError(RuntimeError):
    """Discarded weight in one period exceeded the budget; dynamics untrustworthy."""


@dataclass
class MpsState:
    """Right-canonical MPS. ``bond_values[i]`` are the Schmidt values left of site ``i``.

    ``truncation_log`` lists ``(gate_index, discarded_weight)`` for every two-site
    gate that discarded weight; ``discarded_total`` is their sum.
    """

    site_tensors: list
    bond_values: list
    max_bond: int
    truncation_log: list = field(default_factory=list)
    canonical_center: int | None = 0
    gate_count: int = 0
    discarded_total: float = 0.0
    max_norm_drift: float = 0.0

    @property
    def N(self) -> int:
        return len(self.site_tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [B.shape[2] for B in self.site_tensors[:-1]]

    def copy(self) -> "MpsState":
        return MpsState(
            site_tensors=[B.copy() for B in self.site_tensors],
            bond_values=[s.copy() for s in self.bond_values],
            max_bond=self.max_bond,
            truncation_log=list(self.truncation_log),
            canonical_center=self.canonical_center,
            gate_count=self.gate_count,
            discarded_total=self.discarded_total,
            max_norm_drift=self.max_norm_drift,
        )

    def to_dense(self) -> np.ndarray:
        """Full state vector (site 0 most significant); only for small N."""
        psi = self.bond_values[0].astype(complex)[:, None, None] * self.site_tensors[0]
        psi = psi.reshape(-1, psi.shape[-1])
        for B in self.site_tensors[1:]:
            psi = (psi @ B.reshape(B.shape[0], -1)).reshape(-1, B.shape[2])
        return psi.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.bond_values[0]))


def mps_from_product(spec: ProductStateSpec, max_bond: int = 30) -> MpsState:
    """Product state with bond dimension 1 everywhere."""
    if max_bond < 1:
        raise ValueError("max_bond must be >= 1")
    v = local_spinor(spec).reshape(1, 2, 1)
    return MpsState(
        site_tensors=[v.copy() for _ in range(spec.N)],
        bond_values=[np.ones(1) for _ in range(spec.N + 1)],
        max_bond=int(max_bond),
    )


def apply_single(state: MpsState, U: np.ndarray, site: int) -> None:
    """Exact: a unitary on the physical leg keeps the tensor right-canonical."""
    state.site_tensors[site] = np.einsum("ij,ajb->aib", U, state.site_tensors[site])


def apply_two_site(state: MpsState, U: np.ndarray, site: int) -> float:
    """Apply a 4x4 gate on ``(site, site+1)``, truncate to ``max_bond``; return discarded weight."""
    Bl, Br = state.site_tensors[site], state.site_tensors[site + 1]
    new_l, s_new, new_r, discarded, drift = _core.two_site_update(
        Bl, Br, state.bond_values[site], U, state.max_bond, SVD_CUTOFF
    )
    state.site_tensors[site] = new_l
    state.site_tensors[site + 1] = new_r
    state.bond_values[site + 1] = s_new
    state.gate_count += 1
    if drift > state.max_norm_drift:
        state.max_norm_drift = drift
    if discarded > 0.0:
        state.truncation_log.append((state.gate_count, discarded))
        state.discarded_total += discarded
    return discarded


def apply_gate(state: MpsState, U: np.ndarray, sites) -> MpsState:
    """Apply ``U`` to ``sites`` (one site, or two neighbours ``(j, j+1)``) in place."""
    sites = tuple(np.atleast_1d(sites).tolist())
    U = np.asarray(U, dtype=complex)
    if len(sites) == 1:
        if U.shape != (2, 2):
            raise ValueError("single-site gate must be 2x2")
        apply_single(state, U, sites[0])
    elif len(sites) == 2 and sites[1] == sites[0] + 1:
        if U.shape != (4, 4):
            raise ValueError("two-site gate must be 4x4")
        apply_two_site(state, U, sites[0])
    else:
        raise ValueError(f"gate targets must be one site or a nearest-neighbour pair, got {sites}")
    return state


# --- gate schedule ---------------------------------------------------------

def _expm_herm(H: np.ndarray, tau: float) -> np.ndarray:
    """``exp(-i tau H)`` for Hermitian ``H``."""
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T


def single_site_hamiltonian(t: float, params: ModelParams) -> np.ndarray:
    c = math.cos(0.5 * params.omega * t) ** 2
    return -params.h * c * SIGMA_X + params.lam * (SIGMA_Y + SIGMA_Z)


_ZZ = np.kron(SIGMA_Z, SIGMA_Z)


@dataclass(frozen=True)
class GateEntry:
    """One stage of the schedule: the same gate on every target of a group.

    ``time_offset`` is the time within the period at which the drive is evaluated,
    ``coefficient`` the stage length in units of the substep.
    """

    time_offset: float
    coefficient: float
    group: str
    targets: tuple
    generators: tuple
    gate: np.ndarray = field(repr=False, compare=False)


@dataclass
class GateSchedule:
    entries: list
    substep: float
    period: float
    scheme: str = SCHEME_NAME

    @property
    def steps_per_period(self) -> int:
        return int(round(self.period / self.substep))

    def weights(self) -> dict:
        """Evolution time per period, in units of T, of every generator on every target.

        Keys are ``(generator, bond)`` for ``ising-zz`` and ``(generator, (site,))`` for
        the single-site terms; a consistent schedule has every value equal to 1.
        """
        out: dict = {}
        for e in self.entries:
            w = e.coefficient * self.substep / self.period
            for target in e.targets:
                for g in e.generators:
                    keys = [target] if g == "ising-zz" else [(j,) for j in target]
                    for k in keys:
                        out[(g, k)] = out.get((g, k), 0.0) + w
        return out


def trotter_schedule(params: ModelParams, dt: float, N: int | None = None) -> GateSchedule:
    """Gate schedule for one drive period with substep ``dt`` (must divide ``T``)."""
    N = params.N if N is None else N
    T = params.T
    if not dt < T:
        raise ValueError(f"dt={dt} must be smaller than the period T={T}")
    n_sub = int(round(T / dt))
    if abs(n_sub * dt - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"dt={dt} does not divide the period T={T}")

    interacting = params.J != 0.0 and N > 1
    field_gens = ("drive-x",) + (("field-yz",) if params.lam != 0.0 else ())
    if interacting:
        odd = tuple((j, j + 1) for j in range(0, N - 1, 2))
        lone = (N - 1,) if N % 2 else ()
        even = tuple((j, j + 1) for j in range(1, N - 1, 2))
    else:
        odd, lone, even = (), tuple(range(N)), ()

    entries = []
    for i in range(n_sub):
        clock = i * dt
        for group, coef in RUTH3:
            if group == "B":
                if even:
                    U = _expm_herm(-params.J * _ZZ, coef * dt)
                    entries.append(GateEntry(clock, coef, "B", even, ("ising-zz",), U))
                clock += coef * dt
                continue
            h1 = single_site_hamiltonian(clock, params)
            if odd:
                h2 = -params.J * _ZZ + np.kron(h1, IDENTITY) + np.kron(IDENTITY, h1)
                entries.append(GateEntry(clock, coef, "A", odd, ("ising-zz",) + field_gens,
                                         _expm_herm(h2, coef * dt)))
            if lone:
                entries.append(GateEntry(clock, coef, "A", tuple((j,) for j in lone), field_gens,
                                         _expm_herm(h1, coef * dt)))
    return GateSchedule(entries=entries, substep=dt, period=T)


def apply_schedule(state: MpsState, schedule: GateSchedule) -> float:
    """Apply one full period; return the weight discarded during it."""
    discarded = 0.0
    for e in schedule.entries:
        for target in e.targets:
            if len(target) == 1:
                apply_single(state, e.gate, target[0])
            else:
                discarded += apply_two_site(state, e.gate, target[0])
    return discarded


def site_expectations(state: MpsState, op: np.ndarray) -> np.ndarray:
    """``<op_j>`` for every site."""
    out = np.empty(state.N)
    for j, B in enumerate(state.site_tensors):
        w = state.bond_values[j] ** 2
        out[j] = np.einsum("a,aib,ij,ajb->", w, B.conj(), op, B).real
    return out


def measure_magnetization(state: MpsState, axis: MagnetizationAxis) -> float:
    """``(1/N) sum_j <n . sigma_j>``."""
    norm = state.norm()
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized (norm {norm})")
    return float(np.mean(site_expectations(state, axis.operator())))


def evolve_periods(state: MpsState, params: ModelParams, dt: float, n_periods: int,
                   axis: MagnetizationAxis | None = None,
                   budget: float = DEFAULT_BUDGET) -> StroboscopicSeries:
    """Evolve ``state`` in place for ``n_periods`` and record ``<M>`` after each period.

    Raises :class:`TruncationBudgetError` when one period discards more than ``budget``.
    """
    axis = MagnetizationAxis(params.phi) if axis is None else axis
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    schedule = trotter_schedule(params, dt, state.N)
    values = np.empty(n_periods)
    cumulative = np.zeros(n_periods + 1)
    drift = np.zeros(n_periods + 1)
    initial = measure_magnetization(state, axis)
    for n in range(n_periods):
        lost = apply_schedule(state, schedule)
        if lost > budget:
            raise TruncationBudgetError(
                f"period {n + 1} discarded weight {lost:.3e} > budget {budget:.1e}; "
                f"increase max_bond (now {state.max_bond}) or the budget"
            )
        cumulative[n + 1] = cumulative[n] + lost
        drift[n + 1] = state.max_norm_drift
        values[n] = measure_magnetization(state, axis)
    return StroboscopicSeries(
        values=values,
        period=params.T,
        label=f"mps N={state.N} M={state.max_bond} JT={params.JT:g} "
              f"epsT={params.epsilonT:g} lamT={params.lambdaT:g}",
        initial=initial,
        columns={
            "n": np.arange(n_periods + 1),
            "magnetization": np.concatenate([[initial], values]),
            "cumulative_truncation_weight": cumulative,
            "max_norm_drift": drift,
        },
    )
