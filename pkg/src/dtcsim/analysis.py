"""Stroboscopic power spectra and subharmonic-response diagnostics.

The spectrum of a series ``s_1 .. s_N`` sampled at ``t = nT`` is

    S(Omega) = (1/N) sum_{n=1}^{N} s_n exp(i n Omega T)

evaluated on ``Omega_k = 2 pi k / (N T)``, ``k = 0..N-1``. For even ``N`` the bin
``k = N/2`` is exactly half the drive frequency.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

SERIES_BOUND = 1.0 + 1e-9


@dataclass
class StroboscopicSeries:
    """Observable at ``t = nT`` for ``n = 1..len(values)``.

    ``initial`` is the ``n = 0`` value when known; ``columns`` holds extra
    per-period records (including ``n = 0``) used for CSV output.
    """

    values: np.ndarray
    period: float = 1.0
    label: str = ""
    initial: float | None = None
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if np.any(np.abs(self.values) > SERIES_BOUND):
            raise ValueError("magnetization-type series must satisfy |s_n| <= 1")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def with_initial(self) -> np.ndarray:
        """Values for ``n = 0..N`` (requires ``initial``)."""
        if self.initial is None:
            raise ValueError("series has no n = 0 value")
        return np.concatenate([[self.initial], self.values])


@dataclass
class PowerSpectrum:
    omegas: np.ndarray
    magnitudes: np.ndarray
    n_samples: int
    period: float = 1.0

    @property
    def omega_drive(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def relative_omegas(self) -> np.ndarray:
        """Frequencies in units of the drive frequency, ``k / N``."""
        return self.omegas / self.omega_drive

    @property
    def half_bin(self) -> int:
        if self.n_samples % 2:
            raise ValueError("odd number of periods: omega/2 is not on the frequency grid")
        return self.n_samples // 2


def _check_series(series: StroboscopicSeries) -> np.ndarray:
    s = np.asarray(series.values, dtype=float)
    if s.size < 2:
        raise ValueError("power spectrum needs at least two samples")
    return s


def power_spectrum(series: StroboscopicSeries) -> PowerSpectrum:
    """``|S(Omega_k)|^2`` via FFT (n = 1..N phase convention kept)."""
    s = _check_series(series)
    n = s.size
    k = np.arange(n)
    amp = np.fft.ifft(s) * np.exp(2j * np.pi * k / n)
    return PowerSpectrum(
        omegas=2.0 * np.pi * k / (n * series.period),
        magnitudes=np.abs(amp) ** 2,
        n_samples=n,
        period=series.period,
    )


def power_spectrum_naive(series: StroboscopicSeries) -> PowerSpectrum:
    """Direct O(N^2) evaluation of the defining sum; reference for the FFT path."""
    s = _check_series(series)
    n = s.size
    k = np.arange(n)
    idx = np.arange(1, n + 1)
    amp = np.empty(n, dtype=complex)
    for kk in k:
        amp[kk] = np.sum(s * np.exp(1j * idx * (2.0 * np.pi * kk / n))) / n
    return PowerSpectrum(
        omegas=2.0 * np.pi * k / (n * series.period),
        magnitudes=np.abs(amp) ** 2,
        n_samples=n,
        period=series.period,
    )


def subharmonic_peak(spectrum: PowerSpectrum) -> float:
    """Magnitude at the exact ``omega/2`` bin; odd ``N`` is rejected."""
    return float(spectrum.magnitudes[spectrum.half_bin])


def dominance_ratio(spectrum: PowerSpectrum) -> float:
    """Ratio of the ``omega/2`` bin to the largest other bin.

    A sharp subharmonic peak means the ratio is at least 10.
    """
    k = spectrum.half_bin
    others = np.delete(spectrum.magnitudes, k)
    top = float(others.max())
    peak = float(spectrum.magnitudes[k])
    return math.inf if top == 0.0 else peak / top


def local_maxima_near_half(spectrum: PowerSpectrum, window: float = 0.1,
                           rel_floor: float = 1e-10) -> list[int]:
    """Bins (other than ``omega/2``) that are strict local maxima with
    ``|Omega - omega/2| <= window * omega``.

    Maxima below ``rel_floor`` times the largest bin are round-off and ignored.
    """
    mags = spectrum.magnitudes
    n = spectrum.n_samples
    half = spectrum.half_bin
    floor = rel_floor * float(mags.max())
    found = []
    for k in range(1, n - 1):
        if k == half or abs(k / n - 0.5) > window + 1e-12 or mags[k] <= floor:
            continue
        if mags[k] > mags[k - 1] and mags[k] > mags[k + 1]:
            found.append(k)
    return found


def is_split(spectrum: PowerSpectrum, factor: float = 2.0) -> bool:
    """True when the ``omega/2`` bin is not dominant or a neighbouring bin on
    each side reaches within ``factor`` of it."""
    k = spectrum.half_bin
    mags = spectrum.magnitudes
    if dominance_ratio(spectrum) < 1.0:
        return True
    return bool(mags[k - 1] * factor >= mags[k] and mags[k + 1] * factor >= mags[k])


@dataclass
class ScanPoint:
    delta: float
    peak: float
    error: str | None = None


ENGINES = ("meanfield", "mps", "ed")


def _scan_one(args) -> ScanPoint:
    base, delta, n_periods, engine, options = args
    try:
        params = base.with_delta(delta)
        series = run_engine(params, n_periods, engine, **options)
        return ScanPoint(delta, subharmonic_peak(power_spectrum(series)))
    except Exception as exc:  # recorded per point, the scan continues
        log.warning("scan point delta=%g failed: %s", delta, exc)
        return ScanPoint(delta, math.nan, f"{type(exc).__name__}: {exc}")


def run_engine(params, n_periods: int, engine: str, **options) -> StroboscopicSeries:
    """Evolve the standard initial state (+y product, P=pi/2, Q=0) with one engine.

    Options: ``steps_per_period`` and ``convention`` (meanfield), ``dt_over_T``
    (mps, ed), ``max_bond`` (mps).
    """
    from .model import MagnetizationAxis, ProductStateSpec

    if engine == "meanfield":
        from .meanfield import MeanFieldState, stroboscopic

        return stroboscopic(MeanFieldState(0.0, math.pi / 2), n_periods, params,
                            options.get("steps_per_period", 1000),
                            convention=options.get("convention", "pauli"))
    axis = MagnetizationAxis(0.0)
    spec = ProductStateSpec(phi=0.0, sign=1, N=params.N)
    dt = options.get("dt_over_T", 1e-3) * params.T
    if engine == "mps":
        from .mps import evolve_periods, mps_from_product

        return evolve_periods(mps_from_product(spec, options.get("max_bond", 30)), params, dt,
                              n_periods, axis)
    if engine == "ed":
        from .ed import DenseState, ed_evolve

        return ed_evolve(DenseState.from_product(spec), params, dt, n_periods, axis)
    raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")


def scan_delta(params_base, delta_values: Sequence[float], n_periods: int,
               engine: str = "meanfield", workers: int = 1, **options) -> list[ScanPoint]:
    """Subharmonic peak versus ``delta = epsilon T = lambda T``.

    Points are independent; with ``workers > 1`` they run in a process pool.
    The output order always follows ``delta_values``.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")
    deltas = [float(d) for d in delta_values]
    if not all(math.isfinite(d) for d in deltas):
        raise ValueError("delta values must be finite")
    jobs = [(params_base, d, n_periods, engine, options) for d in deltas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_one, jobs))
    return [_scan_one(job) for job in jobs]
