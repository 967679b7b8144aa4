"""Local pure-dephasing channels acting on two-qubit states.

Every channel is characterised by a signed single-qubit coherence factor
``f(t)`` (off-diagonal elements are multiplied by ``f``). On Bell-diagonal
states this rescales ``c1`` and ``c2`` by ``f**2`` when both qubits are
exposed and by ``f`` when only one is; ``c3`` is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import qops
from .correlations import BellDiagonalState
from .errors import InvalidChannelError
from .dephasing import DephasingProfile

COMPLETENESS_TOL = 1e-12


class NoiseSide(str, Enum):
    """Which qubits couple to their local environment."""

    BOTH = "both"
    A = "A"
    B = "B"

    @classmethod
    def parse(cls, value) -> "NoiseSide":
        if isinstance(value, cls):
            return value
        aliases = {"both": cls.BOTH, "two-sided": cls.BOTH, "a": cls.A, "a-only": cls.A,
                   "b": cls.B, "b-only": cls.B, "one-sided": cls.B}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown noise side {value!r}") from None

    @property
    def exposed_qubits(self) -> int:
        return 2 if self is NoiseSide.BOTH else 1


def _check_time(t) -> float:
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    return t


def dephasing_kraus(coherence: float) -> list[np.ndarray]:
    """Kraus pair ``sqrt((1±f)/2) {I, sigma_z}`` multiplying coherences by ``f``."""
    f = float(np.clip(coherence, -1.0, 1.0))
    return [np.sqrt((1.0 + f) / 2.0) * qops.I2, np.sqrt((1.0 - f) / 2.0) * qops.SZ]


class DephasingChannel:
    """Shared behaviour; subclasses provide :meth:`signed_factor`."""

    def signed_factor(self, t: float) -> float:
        raise NotImplementedError

    def decoherence_factor(self, t: float, signed: bool = False) -> float:
        """Per-qubit coherence factor, by magnitude unless ``signed``."""
        f = self.signed_factor(_check_time(t))
        return f if signed else abs(f)

    def native_time(self, t: float) -> float:
        """Time in the units the corresponding figures use on their x-axis."""
        return float(t)

    def kraus(self, t: float) -> list[np.ndarray]:
        return dephasing_kraus(self.signed_factor(_check_time(t)))

    def evolve(self, state: BellDiagonalState, t: float, side="both") -> BellDiagonalState:
        """Bell-diagonal state after time ``t``."""
        f = self.signed_factor(_check_time(t))
        scale = f ** NoiseSide.parse(side).exposed_qubits
        return BellDiagonalState(state.c1 * scale, state.c2 * scale, state.c3)

    def evolve_coefficients(self, c0, times, side="both") -> np.ndarray:
        """Vectorised :meth:`evolve`; returns an array of shape ``(3, len(times))``."""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("times must be non-negative")
        f = np.array([self.signed_factor(t) for t in times.ravel()]).reshape(times.shape)
        scale = f ** NoiseSide.parse(side).exposed_qubits
        c1, c2, c3 = (float(c) for c in c0)
        return np.array([c1 * scale, c2 * scale, np.full_like(scale, c3)])


@dataclass(frozen=True)
class MarkovDephasing(DephasingChannel):
    """Memoryless dephasing; ``p(t) = 1 - exp(-gamma t)``."""

    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidChannelError(f"gamma must be positive, got {self.gamma!r}")

    def p(self, t: float) -> float:
        return float(-np.expm1(-self.gamma * _check_time(t)))

    def time_for_p(self, p: float) -> float:
        """Inverse of :meth:`p`."""
        if not 0.0 <= p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        return float(-np.log1p(-p) / self.gamma)

    def signed_factor(self, t: float) -> float:
        return float(np.exp(-self.gamma * t))

    def native_time(self, t: float) -> float:
        return self.p(t)

    def kraus(self, t: float) -> list[np.ndarray]:
        p = self.p(t)
        return [np.sqrt(1.0 - p / 2.0) * qops.I2, np.sqrt(p / 2.0) * qops.SZ]

    def evolve_coefficients(self, c0, times, side="both") -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("times must be non-negative")
        scale = np.exp(-NoiseSide.parse(side).exposed_qubits * self.gamma * times)
        c1, c2, c3 = (float(c) for c in c0)
        return np.array([c1 * scale, c2 * scale, np.full_like(scale, c3)])


def rtn_lambda(nu, a: float, tau: float):
    """Coherence factor of random-telegraph dephasing at dimensionless time ``nu``.

    For ``4 a tau > 1`` the factor oscillates; below that it decays
    monotonically (hyperbolic continuation), with ``exp(-nu)(1 + nu)`` at
    the critical point.
    """
    nu = np.asarray(nu, dtype=float)
    x = 4.0 * a * tau
    decay = np.exp(-nu)
    if x >= 1.0:
        mu = np.sqrt(x * x - 1.0)
        # sin(mu nu)/mu written via sinc so that mu -> 0 stays exact
        return decay * (np.cos(mu * nu) + nu * np.sinc(mu * nu / np.pi))
    mu = np.sqrt(1.0 - x * x)
    arg = mu * nu
    small = arg < 1e-4
    safe = np.where(small, 1.0, arg)
    sinhc = np.where(small, 1.0 + arg * arg / 6.0, np.sinh(safe) / safe)
    # e^{-nu} cosh(mu nu) = (e^{(mu-1) nu} + e^{-(mu+1) nu}) / 2 avoids overflow
    cosh_part = 0.5 * (np.exp((mu - 1.0) * nu) + np.exp(-(mu + 1.0) * nu))
    return cosh_part + decay * nu * sinhc


@dataclass(frozen=True)
class RTNDephasing(DephasingChannel):
    """Colored (random telegraph) dephasing with coupling ``a`` and switching time ``tau``.

    One-sided noise scales ``c1, c2`` by the signed factor to the first power.
    """

    a: float
    tau: float

    def __post_init__(self):
        if not (self.a > 0 and self.tau > 0):
            raise InvalidChannelError(f"a and tau must be positive, got a={self.a}, tau={self.tau}")

    @property
    def mu(self) -> float:
        """Oscillation frequency in ``nu``; imaginary part reported as negative."""
        x = 4.0 * self.a * self.tau
        return float(np.sqrt(x * x - 1.0)) if x >= 1.0 else -float(np.sqrt(1.0 - x * x))

    @property
    def oscillatory(self) -> bool:
        return 4.0 * self.a * self.tau > 1.0

    def nu(self, t: float) -> float:
        return float(t) / (2.0 * self.tau)

    def time_for_nu(self, nu: float) -> float:
        return 2.0 * self.tau * float(nu)

    def lam(self, nu):
        return rtn_lambda(nu, self.a, self.tau)

    def signed_factor(self, t: float) -> float:
        return float(rtn_lambda(self.nu(t), self.a, self.tau))

    def native_time(self, t: float) -> float:
        return self.nu(t)

    def extremum_times(self, t_max: float) -> np.ndarray:
        """Times of the turning points of ``|Lambda|`` (``mu nu = k pi``) in ``(0, t_max]``."""
        if not self.oscillatory:
            return np.empty(0)
        nu_max = self.nu(t_max)
        k = np.arange(1, int(np.floor(nu_max * self.mu / np.pi)) + 1)
        return self.time_for_nu(1.0) * k * np.pi / self.mu

    def evolve_coefficients(self, c0, times, side="both") -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("times must be non-negative")
        scale = rtn_lambda(times / (2.0 * self.tau), self.a, self.tau) \
            ** NoiseSide.parse(side).exposed_qubits
        c1, c2, c3 = (float(c) for c in c0)
        return np.array([c1 * scale, c2 * scale, np.full_like(scale, c3)])


@dataclass(frozen=True)
class SpectralDephasing(DephasingChannel):
    """Dephasing from a bosonic bath, coherence factor ``exp(-Gamma(t))``."""

    profile: DephasingProfile

    def signed_factor(self, t: float) -> float:
        return float(np.exp(-self.profile.big_gamma(t)))

    def native_time(self, t: float) -> float:
        return float(t) * self.profile.spectrum.omega_c

    def evolve_coefficients(self, c0, times, side="both") -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("times must be non-negative")
        scale = np.exp(-NoiseSide.parse(side).exposed_qubits * self.profile.big_gamma(times))
        c1, c2, c3 = (float(c) for c in c0)
        return np.array([c1 * scale, c2 * scale, np.full_like(scale, c3)])


def _check_completeness(kraus: Sequence[np.ndarray], label: str) -> None:
    total = sum(k.conj().T @ k for k in kraus)
    err = np.max(np.abs(total - np.eye(total.shape[0])))
    if err > COMPLETENESS_TOL:
        raise InvalidChannelError(f"{label} Kraus operators are not trace preserving "
                                  f"(max |sum M^dag M - I| = {err:.3e})")


def apply_kraus_general(rho, kraus_a: Sequence[np.ndarray], kraus_b: Sequence[np.ndarray],
                        validate: bool = True) -> np.ndarray:
    """Apply independent local channels ``sum_ij (A_i ⊗ B_j) rho (A_i ⊗ B_j)^dag``."""
    kraus_a = [np.asarray(k, dtype=complex) for k in kraus_a]
    kraus_b = [np.asarray(k, dtype=complex) for k in kraus_b]
    _check_completeness(kraus_a, "qubit A")
    _check_completeness(kraus_b, "qubit B")
    if validate:
        rho = qops.validate_density_matrix(rho, dim=4)
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros((4, 4), dtype=complex)
    for ka in kraus_a:
        for kb in kraus_b:
            k = np.kron(ka, kb)
            out += k @ rho @ k.conj().T
    return out


def apply_channel_matrix(rho, channel: DephasingChannel, t: float, side="both") -> np.ndarray:
    """Apply ``channel`` at time ``t`` to a general 4x4 state through its Kraus operators."""
    side = NoiseSide.parse(side)
    local = channel.kraus(t)
    identity = [qops.I2]
    kraus_a = local if side in (NoiseSide.BOTH, NoiseSide.A) else identity
    kraus_b = local if side in (NoiseSide.BOTH, NoiseSide.B) else identity
    return apply_kraus_general(rho, kraus_a, kraus_b)


def apply_markov(state0: BellDiagonalState, ch: MarkovDephasing, t: float,
                 side="both") -> BellDiagonalState:
    return ch.evolve(state0, t, side)


def apply_rtn(state0: BellDiagonalState, ch: RTNDephasing, t: float,
              side="both") -> BellDiagonalState:
    return ch.evolve(state0, t, side)


def apply_spectral(state0: BellDiagonalState, ch: SpectralDephasing, t: float,
                   side="both") -> BellDiagonalState:
    return ch.evolve(state0, t, side)


def decoherence_factor(ch: DephasingChannel, t: float, signed: bool = False) -> float:
    """Per-qubit coherence factor of any channel family at time ``t``."""
    return ch.decoherence_factor(t, signed=signed)
