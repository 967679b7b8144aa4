"""Ohmic-class spectral densities, decoherence functions and pulse control.

Units: frequencies in units of the cutoff ``omega_c`` (default 1), times in
``1/omega_c``. For ``T = 0`` and the high-temperature limit the dephasing
rate and decoherence function have closed forms, which are the production
path; the frequency integral

    Gamma(t) = int_0^inf g(omega) [1 - cos(omega t)] d omega

is evaluated by :func:`big_gamma_frequency` as an independent route and is
the only route for finite temperature.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special
from scipy.optimize import minimize_scalar

from .errors import QuadratureError, UnsupportedParameterError

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-9
CUTOFF_MULTIPLE = 40.0


class Temperature(str, Enum):
    ZERO = "zero"
    HIGH = "high"
    FINITE = "finite"


class Markovianity(str, Enum):
    MARKOVIAN = "markovian"
    NON_MARKOVIAN = "non_markovian"


@dataclass(frozen=True)
class OhmicSpectrum:
    """Spectral density ``J(w) = w**s / omega_c**(s-1) * exp(-w/omega_c)``.

    Parameters
    ----------
    s : float
        Ohmicity; sub-Ohmic below 1, super-Ohmic above.
    omega_c : float
        Cutoff frequency.
    temperature : Temperature
        ``zero``, ``high`` (``coth(w/2T) -> 2T/w``) or ``finite``.
    theta_T : float
        Dimensionless high-temperature prefactor ``2 k_B T / omega_c``.
    kT : float, optional
        Thermal energy in frequency units, only for ``finite``.
    """

    s: float
    omega_c: float = 1.0
    temperature: Temperature = Temperature.ZERO
    theta_T: float = 10.0
    kT: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "temperature", Temperature(self.temperature))
        if not self.s > 0:
            raise UnsupportedParameterError(f"Ohmicity s must be positive, got {self.s!r}")
        if not self.omega_c > 0:
            raise UnsupportedParameterError("omega_c must be positive")
        if self.temperature is Temperature.HIGH and not self.theta_T > 0:
            raise UnsupportedParameterError("theta_T must be positive")
        if self.temperature is Temperature.FINITE and not (self.kT is not None and self.kT > 0):
            raise UnsupportedParameterError("finite temperature requires kT > 0")

    def spectral_density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return omega ** self.s / self.omega_c ** (self.s - 1) * np.exp(-omega / self.omega_c)

    def thermal_factor(self, omega):
        """``coth(w / 2T)`` in the chosen regime."""
        omega = np.asarray(omega, dtype=float)
        if self.temperature is Temperature.ZERO:
            return np.ones_like(omega)
        if self.temperature is Temperature.HIGH:
            return self.theta_T * self.omega_c / omega
        return 1.0 / np.tanh(omega / (2.0 * self.kT))

    def kernel(self, omega):
        """``g(w, T) = J(w) coth(w/2T) / w**2``."""
        omega = np.asarray(omega, dtype=float)
        return self.spectral_density(omega) * self.thermal_factor(omega) / omega ** 2


# --- closed forms ----------------------------------------------------------------

def _rate_closed(t, s: float, omega_c: float):
    x = omega_c * np.asarray(t, dtype=float)
    return omega_c * special.gamma(s) * (1.0 + x * x) ** (-s / 2) * np.sin(s * np.arctan(x))


def _decoherence_closed(t, s: float, omega_c: float):
    """``int_0^inf w^(s-2) e^(-w) (1 - cos w x) dw`` at ``x = omega_c t``, for ``s > 0``."""
    x = omega_c * np.asarray(t, dtype=float)
    a = s - 1.0
    half_log = 0.5 * np.log1p(x * x)
    if a == 0.0:
        return half_log
    angle = a * np.arctan(x)
    # 1 - exp(-a L) cos(a theta), arranged to survive a -> 0
    bracket = -np.expm1(-a * half_log) * np.cos(angle) + 2.0 * np.sin(angle / 2) ** 2
    return special.gamma(a) * bracket


def gamma0(t, spec: OhmicSpectrum):
    """Unpulsed dephasing rate ``gamma(t)``; may be negative.

    Raises
    ------
    UnsupportedParameterError
        High-temperature form with ``s <= 1``.
    """
    t = np.asarray(t, dtype=float)
    if spec.temperature is Temperature.ZERO:
        return _rate_closed(t, spec.s, spec.omega_c)
    if spec.temperature is Temperature.HIGH:
        if spec.s <= 1:
            raise UnsupportedParameterError("high-temperature rate needs s > 1")
        return spec.theta_T * _rate_closed(t, spec.s - 1.0, spec.omega_c)
    return _vectorise(lambda u: _rate_frequency(u, spec), t)


def big_gamma(t, spec: OhmicSpectrum):
    """Unpulsed decoherence function ``Gamma(t) = int_0^t gamma``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    if spec.temperature is Temperature.ZERO:
        return _decoherence_closed(t, spec.s, spec.omega_c)
    if spec.temperature is Temperature.HIGH:
        if spec.s <= 1:
            raise UnsupportedParameterError("high-temperature decoherence needs s > 1")
        return spec.theta_T * _decoherence_closed(t, spec.s - 1.0, spec.omega_c)
    return _vectorise(lambda u: _cached_frequency_gamma(float(u), spec), t)


def asymptotic_gamma(spec: OhmicSpectrum) -> float:
    """``Gamma(t -> inf)``: Euler gamma of ``s-1`` (zero T) or ``theta_T`` times that of ``s-2``.

    Returns ``inf`` where the integral diverges; finite temperature is only
    classified (``nan`` when bounded, since no closed form exists).
    """
    if spec.temperature is Temperature.ZERO:
        return float(special.gamma(spec.s - 1.0)) if spec.s > 1 else float("inf")
    if spec.temperature is Temperature.HIGH:
        return spec.theta_T * float(special.gamma(spec.s - 2.0)) if spec.s > 2 else float("inf")
    return float("nan") if spec.s > 2 else float("inf")


def _vectorise(fn: Callable[[float], float], t: np.ndarray):
    out = np.array([fn(float(u)) for u in np.ravel(t)]).reshape(np.shape(t))
    return out if out.ndim else float(out)


# --- quadrature routes --------------------------------------------------------------

_GL_LOW = np.polynomial.legendre.leggauss(20)
_GL_HIGH = np.polynomial.legendre.leggauss(32)


def _panel_sum(f, edges: np.ndarray, tol: float, depth: int = 0):
    """Gauss-Legendre 20/32 pair on every panel, bisecting the ones that disagree."""
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b)[:, None], 0.5 * (b - a)[:, None]
    lo = np.sum(_GL_LOW[1] * f(mid + half * _GL_LOW[0]), axis=1) * half[:, 0]
    hi = np.sum(_GL_HIGH[1] * f(mid + half * _GL_HIGH[0]), axis=1) * half[:, 0]
    err = np.abs(hi - lo)
    bad = err > tol / max(len(a), 1)
    total, total_err = float(np.sum(hi[~bad])), float(np.sum(err[~bad]))
    if np.any(bad):
        if depth >= 12:
            return total + float(np.sum(hi[bad])), total_err + float(np.sum(err[bad]))
        for lo_edge, hi_edge in zip(a[bad], b[bad]):
            sub = np.linspace(lo_edge, hi_edge, 5)
            val, e = _panel_sum(f, sub, tol / np.count_nonzero(bad), depth + 1)
            total += val
            total_err += e
    return total, total_err


def oscillatory_integral(f: Callable, period: float, upper: float, *,
                         tail: Optional[Callable] = None, max_step: float = 1.0,
                         epsabs: float = QUAD_ABS_TOL, epsrel: float = QUAD_REL_TOL):
    """Integrate ``f`` over ``[0, inf)`` for integrands oscillating with ``period``.

    ``[0, upper]`` is cut into panels no wider than ``period`` or
    ``max_step``. The first panel, which may hold an integrable singularity
    at zero, goes to QUADPACK; the rest use paired Gauss-Legendre rules
    with adaptive bisection. ``tail(upper)`` must bound
    ``int_upper^inf |f|``; it is added to the error estimate.

    Returns
    -------
    (value, error) : tuple of float
    """
    step = min(period, max_step)
    n_panels = max(int(np.ceil(upper / step)), 1)
    edges = np.linspace(0.0, upper, n_panels + 1)
    with warnings.catch_warnings():
        # QUADPACK's warning is redundant: its error estimate is propagated
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        first, first_err = integrate.quad(lambda w: float(f(np.array([w]))[0]), 0.0, edges[1],
                                          epsabs=epsabs / 10, epsrel=epsrel / 10, limit=200)
    value, err = first, first_err
    if n_panels > 1:
        rest, rest_err = _panel_sum(f, edges[1:], max(epsabs, epsrel * abs(first)) / 10)
        value += rest
        err += rest_err
    if tail is not None:
        err += tail(upper)
    return value, err


def _frequency_cutoff(spec: OhmicSpectrum) -> float:
    return (CUTOFF_MULTIPLE + 2.0 * spec.s) * spec.omega_c


def _kernel_tail(spec: OhmicSpectrum) -> Callable[[float], float]:
    def tail(upper: float) -> float:
        val, _ = integrate.quad(lambda w: float(spec.kernel(w)), upper, np.inf)
        return 2.0 * val
    return tail


def _check(value: float, error: float, epsabs: float, epsrel: float, what: str) -> float:
    if not np.isfinite(value) or error > max(epsabs, epsrel * abs(value)) * 10:
        raise QuadratureError(f"{what} did not converge", value, error)
    return value


def big_gamma_frequency(t: float, spec: OhmicSpectrum, epsabs: float = QUAD_ABS_TOL,
                        epsrel: float = QUAD_REL_TOL) -> float:
    """``Gamma(t)`` from the frequency integral of ``g(w, T) [1 - cos(w t)]``."""
    t = float(t)
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0.0:
        return 0.0

    def integrand(w):
        return spec.kernel(w) * 2.0 * np.sin(0.5 * w * t) ** 2

    value, error = oscillatory_integral(integrand, 2 * np.pi / t, _frequency_cutoff(spec),
                                        tail=_kernel_tail(spec), max_step=spec.omega_c,
                                        epsabs=epsabs, epsrel=epsrel)
    return _check(value, error, epsabs, epsrel, f"frequency quadrature of Gamma({t})")


@functools.lru_cache(maxsize=4096)
def _cached_frequency_gamma(t: float, spec: OhmicSpectrum) -> float:
    return big_gamma_frequency(t, spec)


def _rate_frequency(t: float, spec: OhmicSpectrum) -> float:
    if t == 0.0:
        return 0.0

    def integrand(w):
        return spec.kernel(w) * w * np.sin(w * t)

    value, error = oscillatory_integral(integrand, 2 * np.pi / t, _frequency_cutoff(spec),
                                        tail=_kernel_tail(spec), max_step=spec.omega_c)
    return value


def big_gamma_time_integral(t: float, spec: OhmicSpectrum) -> float:
    """``Gamma(t)`` by integrating the closed-form rate over ``[0, t]``."""
    t = float(t)
    if t == 0.0:
        return 0.0
    edges = np.linspace(0.0, t, max(int(np.ceil(t * spec.omega_c)), 1) + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda u: float(gamma0(u, spec)), lo, hi,
                                epsabs=1e-14, epsrel=1e-12, limit=200)
        total += val
    return total


# --- pulse sequences --------------------------------------------------------------

@dataclass(frozen=True)
class PulseSequence:
    """Instants of ideal, instantaneous pi pulses."""

    instants: tuple[float, ...] = ()
    interval: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        inst = tuple(float(x) for x in self.instants)
        if any(x <= 0 for x in inst):
            raise ValueError("pulse instants must be positive")
        if any(b <= a for a, b in zip(inst, inst[1:])):
            raise ValueError("pulse instants must be strictly increasing")
        object.__setattr__(self, "instants", inst)

    @classmethod
    def periodic(cls, interval: float, horizon: float) -> "PulseSequence":
        """Pulses at ``n * interval`` for every ``n >= 1`` with ``n * interval <= horizon``."""
        if not (interval > 0 and horizon > 0):
            raise ValueError("interval and horizon must be positive")
        count = int(np.floor(horizon / interval * (1 + 1e-12)))
        return cls(tuple(interval * n for n in range(1, count + 1)), interval=float(interval))

    def __len__(self) -> int:
        return len(self.instants)

    @property
    def final(self) -> Optional[float]:
        return self.instants[-1] if self.instants else None

    def pulses_before(self, t) -> np.ndarray:
        """Number of pulses strictly earlier than ``t`` (branch index)."""
        return np.searchsorted(np.asarray(self.instants), t, side="left")


def filter_function_squared(omega, t: float, instants: Sequence[float]) -> np.ndarray:
    """``|y_n(omega t)|**2`` for pulses at ``instants`` (all before ``t``).

    Written as ``sum_k a_k (exp(i omega tau_k) - 1)`` with the coefficients
    summing to zero, which keeps the small-``omega`` limit accurate.
    """
    omega = np.asarray(omega, dtype=float)
    n = len(instants)
    taus = np.array([*instants, t], dtype=float)
    coeffs = np.array([2.0 * (-1) ** m for m in range(1, n + 1)] + [(-1.0) ** (n + 1)])
    phase = 0.5 * omega[..., None] * taus
    shifted = 2j * np.sin(phase) * np.exp(1j * phase)
    y = shifted @ coeffs
    return np.abs(y) ** 2


def controlled_gamma_frequency(t: float, spec: OhmicSpectrum, pulses: PulseSequence,
                               epsabs: float = QUAD_ABS_TOL,
                               epsrel: float = QUAD_REL_TOL) -> float:
    """Pulsed ``Gamma(t)`` from ``int g(w) |y_n(w t)|**2 / 2 dw`` (test oracle).

    With ``g = J/w**2`` at zero temperature the factor one half reproduces
    the unpulsed integral exactly, since ``|y_0|**2 = 2 (1 - cos w t)``.
    """
    t = float(t)
    if t == 0.0:
        return 0.0
    n = int(pulses.pulses_before(t))
    active = pulses.instants[:n]

    def integrand(w):
        return 0.5 * spec.kernel(w) * filter_function_squared(w, t, active)

    value, error = oscillatory_integral(integrand, 2 * np.pi / t, _frequency_cutoff(spec),
                                        tail=lambda u: (2 * n + 2) ** 2 / 2
                                        * _kernel_tail(spec)(u),
                                        max_step=spec.omega_c, epsabs=epsabs, epsrel=epsrel)
    return _check(value, error, epsabs, epsrel, f"filter-function quadrature at t={t}")


@dataclass(frozen=True)
class DephasingProfile:
    """Decoherence function of a spectrum, optionally under pulse control."""

    spectrum: OhmicSpectrum
    pulses: Optional[PulseSequence] = None

    @functools.cached_property
    def _branch_constants(self) -> np.ndarray:
        """Time-independent part of ``Gamma_n`` for ``n = 0..N``."""
        inst = np.asarray(self.pulses.instants if self.pulses else (), dtype=float)
        consts = np.zeros(len(inst) + 1)
        g_single = np.atleast_1d(big_gamma(inst, self.spectrum)) if len(inst) else inst
        for n in range(1, len(inst) + 1):
            m = n  # 1-based index of the newest pulse
            signs = np.array([(-1.0) ** (m - 1 + j) for j in range(1, m)])
            diffs = inst[m - 1] - inst[:m - 1]
            cross = 4.0 * float(np.sum(signs * big_gamma(diffs, self.spectrum))) if m > 1 else 0.0
            consts[n] = consts[n - 1] + 2.0 * (-1.0) ** (m + 1) * g_single[m - 1] + cross
        return consts

    def branch_gamma(self, t, n: int):
        """``Gamma_n(t)``: the decoherence function with the first ``n`` pulses applied."""
        t = np.asarray(t, dtype=float)
        inst = np.asarray(self.pulses.instants[:n] if self.pulses else (), dtype=float)
        if len(inst) != n:
            raise ValueError(f"sequence has fewer than {n} pulses")
        out = self._branch_constants[n] + (-1.0) ** n * big_gamma(t, self.spectrum)
        for m in range(1, n + 1):
            out = out + 2.0 * (-1.0) ** (m + n) * big_gamma(np.maximum(t - inst[m - 1], 0.0),
                                                            self.spectrum)
        return out

    def branch_rate(self, t, n: int):
        """``gamma_n(t) = d Gamma_n / dt``."""
        t = np.asarray(t, dtype=float)
        inst = np.asarray(self.pulses.instants[:n] if self.pulses else (), dtype=float)
        out = (-1.0) ** n * gamma0(t, self.spectrum)
        for m in range(1, n + 1):
            out = out + 2.0 * (-1.0) ** (m + n) * gamma0(t - inst[m - 1], self.spectrum)
        return out

    def big_gamma(self, t):
        """Controlled ``Gamma(t)``: branch ``n`` on ``(t_n, t_{n+1}]``."""
        if not self.pulses:
            return big_gamma(t, self.spectrum)
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be non-negative")
        branch = np.atleast_1d(self.pulses.pulses_before(t))
        flat_t = np.atleast_1d(t)
        out = np.empty(flat_t.shape)
        for n in np.unique(branch):
            sel = branch == n
            out[sel] = self.branch_gamma(flat_t[sel], int(n))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def rate(self, t):
        """Controlled dephasing rate; at a pulse instant the pre-pulse branch is used."""
        if not self.pulses:
            return gamma0(t, self.spectrum)
        t = np.asarray(t, dtype=float)
        branch = np.atleast_1d(self.pulses.pulses_before(t))
        flat_t = np.atleast_1d(t)
        out = np.empty(flat_t.shape)
        for n in np.unique(branch):
            sel = branch == n
            out[sel] = self.branch_rate(flat_t[sel], int(n))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def sample_times(self, horizon: float, per_interval: int = 64) -> np.ndarray:
        """Grid on ``[0, horizon]`` including every pulse instant."""
        edges = [0.0, *[x for x in (self.pulses.instants if self.pulses else ()) if x < horizon],
                 float(horizon)]
        pieces = [np.linspace(a, b, per_interval + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
        return np.concatenate([*pieces, [float(horizon)]])

    def supremum(self, horizon: float, per_interval: int = 64) -> tuple[float, float]:
        """``(max Gamma, argmax)`` over ``[0, horizon]``, polished by a bounded search."""
        times = self.sample_times(horizon, per_interval)
        values = np.atleast_1d(self.big_gamma(times))
        k = int(np.argmax(values))
        best_t, best = float(times[k]), float(values[k])
        lo, hi = times[max(k - 1, 0)], times[min(k + 1, len(times) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda u: -float(self.big_gamma(u)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-12})
            if -res.fun > best:
                best_t, best = float(res.x), float(-res.fun)
        return best, best_t


def controlled_gamma(t, spec: OhmicSpectrum, pulses: Optional[PulseSequence]):
    """Decoherence function under the pulse sequence ``pulses``."""
    return DephasingProfile(spec, pulses).big_gamma(t)


def controlled_gamma_rate(t, spec: OhmicSpectrum, pulses: Optional[PulseSequence]):
    """Dephasing rate under the pulse sequence ``pulses``."""
    return DephasingProfile(spec, pulses).rate(t)


def has_negative_rate(spec: OhmicSpectrum, t_min: float = 1e-3, t_max: float = 1e8,
                      samples: int = 20001) -> bool:
    """Numerical search for ``gamma(t) < 0`` on a log-spaced grid."""
    times = np.geomspace(t_min, t_max, samples) / spec.omega_c
    return bool(np.any(np.asarray(gamma0(times, spec)) < 0))


def markovianity_criterion(spec: OhmicSpectrum) -> Markovianity:
    """Non-Markovian iff ``s > 2`` at zero temperature or ``s > 3`` at high temperature.

    Finite temperatures fall back to :func:`has_negative_rate`.
    """
    if spec.temperature is Temperature.ZERO:
        flag = spec.s > 2
    elif spec.temperature is Temperature.HIGH:
        flag = spec.s > 3
    else:
        flag = has_negative_rate(spec, t_max=1e3, samples=2001)
    return Markovianity.NON_MARKOVIAN if flag else Markovianity.MARKOVIAN
