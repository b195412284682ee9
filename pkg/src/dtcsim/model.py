"""Driven Ising chain: parameters, product states and magnetization observables.

The Hamiltonian is

    H(t) = -h cos^2(omega t / 2) sum_j X_j - J sum_j Z_j Z_{j+1} + lam sum_j (Y_j + Z_j)

on an open chain of ``N`` spins, with drive period ``T = 2 pi / omega``. The
detuning ``epsilon`` measures the deviation from a perfect spin flip per period,
``h T / 2 = pi / 2 + epsilon T``. All energies are reported as dimensionless
products with ``T`` (``hT``, ``JT``, ``lambdaT``, ``epsilonT``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

_NORM_TOL = 1e-10


class ConfigError(ValueError):
    """Invalid or inconsistent model configuration."""


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven chain (hbar = 1, raw energy units).

    Build instances with :func:`build_params` or :meth:`from_epsilon`; ``omega``
    and ``epsilon`` are always derived from ``T`` and ``h``.
    """

    h: float
    T: float
    J: float = 0.0
    lam: float = 0.0
    N: int = 1
    phi: float = 0.0
    omega: float = field(init=False)
    epsilon: float = field(init=False)

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be positive and finite, got {self.T!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        for name in ("h", "J", "lam", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "omega", 2.0 * math.pi / self.T)
        object.__setattr__(self, "epsilon", (self.h * self.T - math.pi) / (2.0 * self.T))

    @classmethod
    def from_epsilon(cls, epsilon: float, T: float, **kwargs) -> "ModelParams":
        return cls(h=(math.pi + 2.0 * epsilon * T) / T, T=T, **kwargs)

    @property
    def hT(self) -> float:
        return self.h * self.T

    @property
    def JT(self) -> float:
        return self.J * self.T

    @property
    def lambdaT(self) -> float:
        return self.lam * self.T

    @property
    def epsilonT(self) -> float:
        return self.epsilon * self.T

    def replace(self, **changes) -> "ModelParams":
        """Copy with some raw fields changed (``h``, ``T``, ``J``, ``lam``, ``N``, ``phi``)."""
        values = dict(h=self.h, T=self.T, J=self.J, lam=self.lam, N=self.N, phi=self.phi)
        values.update(changes)
        return ModelParams(**values)

    def with_delta(self, delta: float) -> "ModelParams":
        """Set ``epsilon T = lambda T = delta`` keeping ``T``, ``J``, ``N``, ``phi``."""
        return ModelParams.from_epsilon(
            delta / self.T, self.T, J=self.J, lam=delta / self.T, N=self.N, phi=self.phi
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "T": self.T,
            "N": self.N,
            "hT": self.hT,
            "epsilonT": self.epsilonT,
            "JT": self.JT,
            "lambdaT": self.lambdaT,
            "phi": self.phi,
        }


# key -> (canonical quantity, multiply by T to get the raw value?)
_PARAM_KEYS = {
    "h": ("h", False),
    "hT": ("h", True),
    "epsilon": ("epsilon", False),
    "epsilonT": ("epsilon", True),
    "J": ("J", False),
    "JT": ("J", True),
    "lambda": ("lam", False),
    "lam": ("lam", False),
    "lambdaT": ("lam", True),
}


def build_params(config: Mapping[str, Any]) -> ModelParams:
    """Validate a flat key/value mapping and return :class:`ModelParams`.

    Accepts ``T`` (default 1), ``N`` (default 1), ``phi`` and each energy either raw
    (``h``, ``epsilon``, ``J``, ``lambda``) or as a product with ``T`` (``hT``,
    ``epsilonT``, ``JT``, ``lambdaT``). ``h`` and ``epsilon`` may both be given only
    if they agree. Unknown keys are rejected.
    """
    unknown = set(config) - set(_PARAM_KEYS) - {"T", "N", "phi"}
    if unknown:
        raise ConfigError(f"unknown parameter key(s): {', '.join(sorted(unknown))}")
    try:
        T = float(config.get("T", 1.0))
    except (TypeError, ValueError):
        raise ConfigError(f"key 'T': expected a number, got {config['T']!r}") from None
    if not T > 0:
        raise ConfigError(f"key 'T': must be > 0, got {T}")

    raw: dict[str, float] = {}
    for key, (name, scaled) in _PARAM_KEYS.items():
        if key not in config:
            continue
        try:
            value = float(config[key])
        except (TypeError, ValueError):
            raise ConfigError(f"key {key!r}: expected a number, got {config[key]!r}") from None
        value = value / T if scaled else value
        if name in raw and not math.isclose(raw[name], value, rel_tol=1e-12, abs_tol=1e-15):
            raise ConfigError(f"key {key!r}: conflicts with another spelling of {name}")
        raw[name] = value

    if "h" in raw and "epsilon" in raw:
        implied = (math.pi + 2.0 * raw["epsilon"] * T) / T
        if not math.isclose(raw["h"], implied, rel_tol=1e-12, abs_tol=1e-15):
            raise ConfigError(
                f"keys 'h' and 'epsilon' are inconsistent (h={raw['h']}, epsilon implies {implied})"
            )
    h = raw["h"] if "h" in raw else (math.pi + 2.0 * raw.get("epsilon", 0.0) * T) / T

    try:
        N = config.get("N", 1)
        if isinstance(N, float) and not N.is_integer():
            raise ValueError
        N = int(N)
    except (TypeError, ValueError):
        raise ConfigError(f"key 'N': expected a positive integer, got {config['N']!r}") from None
    try:
        phi = float(config.get("phi", 0.0))
    except (TypeError, ValueError):
        raise ConfigError(f"key 'phi': expected a number, got {config['phi']!r}") from None
    return ModelParams(h=h, T=T, J=raw.get("J", 0.0), lam=raw.get("lam", 0.0), N=N, phi=phi)


@dataclass(frozen=True)
class ProductStateSpec:
    """Uniform product state ``|psi_sign(phi)>``: every spin along ``sign * n(phi)``."""

    phi: float = 0.0
    sign: int = 1
    N: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")


@dataclass(frozen=True)
class MagnetizationAxis:
    """Unit vector ``n = cos(phi) y + sin(phi) z``."""

    phi: float = 0.0

    @property
    def components(self) -> np.ndarray:
        return np.array([0.0, math.cos(self.phi), math.sin(self.phi)])

    def operator(self) -> np.ndarray:
        """Single-site ``n . sigma`` as a 2x2 matrix."""
        return math.cos(self.phi) * SIGMA_Y + math.sin(self.phi) * SIGMA_Z


def local_spinor(spec: ProductStateSpec) -> np.ndarray:
    """Per-site spinor ``(psi1, psi2)`` with ``psi1`` real and non-negative.

    The amplitudes are ``sqrt((1 + s sin phi)/2)`` and ``s i sqrt((1 - s sin phi)/2)``
    for ``s = sign``. The factor ``i`` places the state on the y-z great circle so
    that it is a ``sign``-eigenvector of ``cos(phi) Y + sin(phi) Z``.
    """
    s = spec.sign
    sp = math.sin(spec.phi)
    psi1 = math.sqrt(max(0.0, (1.0 + s * sp) / 2.0))
    psi2 = math.sqrt(max(0.0, (1.0 - s * sp) / 2.0))
    # sign of the y-component of the Bloch vector must be s*cos(phi)
    if s * math.cos(spec.phi) < 0:
        psi2 = -psi2
    return np.array([psi1, 1j * psi2], dtype=complex)


def magnetization_single(spinor, axis: MagnetizationAxis) -> float:
    """``<spinor| n . sigma |spinor>`` for a normalized two-component spinor."""
    v = np.asarray(spinor, dtype=complex).reshape(2)
    norm = float(np.vdot(v, v).real)
    if abs(norm - 1.0) > _NORM_TOL:
        raise ValueError(f"spinor is not normalized (|psi|^2 = {norm})")
    return float(np.vdot(v, axis.operator() @ v).real)


def bloch_vector(spinor) -> np.ndarray:
    """Expectation values ``(<X>, <Y>, <Z>)`` of a normalized spinor."""
    v = np.asarray(spinor, dtype=complex).reshape(2)
    return np.array([np.vdot(v, P @ v).real for P in (SIGMA_X, SIGMA_Y, SIGMA_Z)])
