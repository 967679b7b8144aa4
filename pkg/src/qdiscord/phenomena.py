"""Correlation trajectories and detection of their dynamical features.

Detects sudden changes (switches of the largest ``|c_i|``), frozen-discord
intervals, intervals of constant classical correlations, entanglement
sudden death and the classical-to-quantum transition time, and scans the
``(s, c)`` plane for time-invariant discord.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .channels import (DephasingChannel, MarkovDephasing, NoiseSide, RTNDephasing,
                       SpectralDephasing)
from .correlations import (BellDiagonalState, CorrelationTriple, closest_classical_state,
                           correlations_from_coefficients, entanglement_from_coefficients,
                           bell_eigenvalues)
from .dephasing import (DephasingProfile, OhmicSpectrum, PulseSequence, Temperature,
                        asymptotic_gamma)

FROZEN_RATE_THRESHOLD = 1e-8
ROOT_XTOL = 1e-12
PLATEAU_HORIZON = 1e3
PLATEAU_TOL = 1e-6
PLATEAU_RTOL = 1e-3
AMBIGUITY_BAND = 1e-6
PULSED_HORIZON = 25.0


class Region(str, Enum):
    REGION1 = "region1"
    REGION2 = "region2"
    REGION3_FROZEN = "region3_frozen"
    REGION3_NO_FREEZE = "region3_no_freeze"
    TIME_INVARIANT = "time_invariant"


class Verdict(str, Enum):
    INVARIANT = "invariant"
    TRANSITION = "transition"
    UNDECIDED = "undecided"


@dataclass
class CorrelationTrajectory:
    """Sampled correlations of a Bell-diagonal state evolving under a channel."""

    initial: BellDiagonalState
    channel: DephasingChannel
    side: NoiseSide
    times: np.ndarray
    coefficients: np.ndarray
    mutual_info: np.ndarray
    classical: np.ndarray
    discord: np.ndarray
    entanglement: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def native_times(self) -> np.ndarray:
        return np.array([self.channel.native_time(t) for t in self.times])

    @property
    def triples(self) -> list[CorrelationTriple]:
        return [CorrelationTriple(float(i), float(c), float(q))
                for i, c, q in zip(self.mutual_info, self.classical, self.discord)]

    def coefficients_at(self, t) -> np.ndarray:
        """Exact coefficients at arbitrary times (shape ``(3,)`` or ``(3, n)``)."""
        scalar = np.ndim(t) == 0
        out = self.channel.evolve_coefficients(self.initial.coefficients, np.atleast_1d(t),
                                               self.side)
        return out[:, 0] if scalar else out

    def closest_axes(self) -> list[str]:
        """Signed axis of the closest classical state at each sample."""
        return [closest_classical_state(BellDiagonalState(*c)).axis
                for c in np.clip(self.coefficients.T, -1.0, 1.0)]


def default_time_grid(t_max: float, samples: int = 2000) -> np.ndarray:
    return np.linspace(0.0, float(t_max), int(samples))


def _refinement_times(channel: DephasingChannel, t_max: float) -> np.ndarray:
    """Extra samples at which the coherence factor turns or changes sign."""
    if isinstance(channel, RTNDephasing) and channel.oscillatory:
        mu = channel.mu
        turning = channel.extremum_times(t_max)
        k = np.arange(1, len(turning) + 2)
        zeros = channel.time_for_nu(1.0) * (k * np.pi - np.arctan(mu)) / mu
        return np.concatenate([turning, zeros[zeros <= t_max]])
    if isinstance(channel, SpectralDephasing) and channel.profile.pulses:
        inst = np.asarray(channel.profile.pulses.instants)
        return inst[inst <= t_max]
    return np.empty(0)


def resolution_scale(channel: DephasingChannel) -> Optional[float]:
    """Shortest time on which the coherence factor can turn around, if any."""
    if isinstance(channel, RTNDephasing) and channel.oscillatory:
        return channel.time_for_nu(np.pi / channel.mu)
    if isinstance(channel, SpectralDephasing) and channel.profile.pulses:
        inst = np.diff(np.concatenate([[0.0], channel.profile.pulses.instants]))
        return float(inst.min())
    return None


def simulate_trajectory(initial: BellDiagonalState, channel: DephasingChannel,
                        side="both", time_grid: Optional[Sequence[float]] = None,
                        refine: bool = True) -> CorrelationTrajectory:
    """Closed-form correlations and entanglement along ``time_grid``.

    With ``refine`` the grid is augmented with channel-specific instants
    (turning points and zeros of the telegraph-noise factor, pulse times)
    so that every switch of the dominant coefficient is bracketed.
    """
    side = NoiseSide.parse(side)
    times = np.asarray(time_grid if time_grid is not None else default_time_grid(1.0), float)
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("time grid needs at least two points")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if times[0] < 0:
        raise ValueError("time grid must start at t >= 0")
    if refine:
        extra = _refinement_times(channel, times[-1])
        extra = extra[(extra > times[0]) & (extra < times[-1])]
        times = np.unique(np.concatenate([times, extra]))
    coeffs = channel.evolve_coefficients(initial.coefficients, times, side)
    mutual, classical, discord = correlations_from_coefficients(*coeffs)
    ent = entanglement_from_coefficients(*coeffs)
    return CorrelationTrajectory(initial, channel, side, times, coeffs, mutual, classical,
                                 discord, ent)


@dataclass(frozen=True)
class Interval:
    start: float
    end: float
    value: float


@dataclass
class TransitionReport:
    """Events found along a trajectory; all times lie in the simulated window."""

    sudden_changes: list[float]
    frozen_intervals: list[Interval]
    classical_constant_intervals: list[Interval]
    sudden_death_time: Optional[float]
    transition_time: Optional[float]
    classification: Region
    warnings: list[str] = field(default_factory=list)
    closest_axes: Optional[list[str]] = None

    def to_dict(self) -> dict:
        return {
            "sudden_changes": list(self.sudden_changes),
            "frozen_intervals": [[i.start, i.end, i.value] for i in self.frozen_intervals],
            "classical_constant_intervals": [[i.start, i.end, i.value]
                                             for i in self.classical_constant_intervals],
            "sudden_death_time": self.sudden_death_time,
            "transition_time": self.transition_time,
            "classification": self.classification.value,
            "warnings": list(self.warnings),
        }


def _dominant(coeffs: np.ndarray) -> np.ndarray:
    return np.argmax(np.abs(coeffs), axis=0)


def _sudden_changes(traj: CorrelationTrajectory, warnings: list[str]) -> list[float]:
    dom = _dominant(traj.coefficients)
    events = []
    for i in np.nonzero(dom[1:] != dom[:-1])[0]:
        old, new = int(dom[i]), int(dom[i + 1])
        lo, hi = traj.times[i], traj.times[i + 1]

        def gap(t, old=old, new=new):
            c = np.abs(traj.coefficients_at(t))
            return c[old] - c[new]

        g_lo, g_hi = gap(lo), gap(hi)
        if g_lo == 0.0:
            events.append(float(lo))
        elif g_lo > 0.0 > g_hi or g_hi == 0.0:
            events.append(float(hi) if g_hi == 0.0 else
                          float(brentq(gap, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)))
        else:
            warnings.append(f"dominant coefficient switch between t={lo:.6g} and t={hi:.6g} "
                            "is not bracketed; refine the time grid")
            events.append(float(0.5 * (lo + hi)))
    return events


def _flat_runs(times: np.ndarray, values: np.ndarray, mask_extra: np.ndarray,
               threshold: float) -> list[tuple[int, int]]:
    """Maximal index runs ``[i, j]`` over which ``values`` stays flat."""
    dt = np.diff(times)
    flat = (np.abs(np.diff(values)) < threshold * dt) & mask_extra
    runs = []
    i = 0
    n = len(flat)
    while i < n:
        if not flat[i]:
            i += 1
            continue
        j = i
        while j < n and flat[j] and abs(values[j + 1] - values[i]) <= threshold:
            j += 1
        runs.append((i, j))
        i = max(j, i + 1)
    return runs


def _snap(run: tuple[int, int], times: np.ndarray, events: list[float]) -> tuple[float, float]:
    """Extend a run's ends to sudden changes that fall in the adjacent grid step."""
    i, j = run
    start, end = float(times[i]), float(times[j])
    if i > 0:
        inside = [e for e in events if times[i - 1] < e <= times[i]]
        if inside:
            start = max(inside)
    if j < len(times) - 1:
        inside = [e for e in events if times[j] <= e < times[j + 1]]
        if inside:
            end = min(inside)
    return start, end


def _sudden_death(traj: CorrelationTrajectory) -> Optional[float]:
    ent = traj.entanglement
    for i in range(len(ent) - 1):
        if ent[i] > 0.0 and ent[i + 1] == 0.0:
            def excess(t):
                return float(np.max(bell_eigenvalues(*traj.coefficients_at(t)))) - 0.5
            lo, hi = traj.times[i], traj.times[i + 1]
            if excess(hi) >= 0.0:
                return float(hi)
            return float(brentq(excess, lo, hi, xtol=ROOT_XTOL))
    return None


def classify_initial(state: BellDiagonalState) -> Region:
    """Region of the initial coefficients, before looking at the dynamics."""
    c1, c2, c3 = (abs(c) for c in state.coefficients)
    if c3 == 0.0:
        return Region.REGION2
    if c3 >= max(c1, c2):
        return Region.REGION1
    return Region.REGION3_NO_FREEZE


def detect_transitions(traj: CorrelationTrajectory,
                       threshold: float = FROZEN_RATE_THRESHOLD,
                       track_closest: bool = False) -> TransitionReport:
    """Locate sudden changes, frozen intervals, sudden death and the transition time.

    Parameters
    ----------
    traj : CorrelationTrajectory
        Must resolve every switch of the dominant coefficient; unbracketed
        switches are reported in ``warnings``.
    threshold : float
        Rate (bits per unit time) below which a quantity counts as constant.
    track_closest : bool
        Also record the closest classical state's axis at every sample.
    """
    warnings: list[str] = []
    scale = resolution_scale(traj.channel)
    if scale is not None and np.max(np.diff(traj.times)) > scale / 4:
        warnings.append(f"grid step {np.max(np.diff(traj.times)):.3g} exceeds a quarter of the "
                        f"coherence-factor time scale {scale:.3g}; switches may be missed")
    events = _sudden_changes(traj, warnings)
    times = traj.times
    c_moves = np.abs(np.diff(traj.classical)) >= threshold * np.diff(times)
    frozen = []
    for run in _flat_runs(times, traj.discord, c_moves, threshold):
        start, end = _snap(run, times, events)
        frozen.append(Interval(start, end, float(traj.discord[run[0]])))
    always = np.ones(len(times) - 1, dtype=bool)
    constant_c = []
    for run in _flat_runs(times, traj.classical, always, threshold):
        start, end = _snap(run, times, events)
        constant_c.append(Interval(start, end, float(traj.classical[run[0]])))

    t_tilde = None
    if frozen and frozen[0].start == times[0] and frozen[0].end < times[-1] \
            and any(abs(frozen[0].end - e) == 0.0 for e in events):
        t_tilde = frozen[0].end

    region = classify_initial(traj.initial)
    if region is Region.REGION3_NO_FREEZE and frozen:
        whole = (len(frozen) == 1 and frozen[0].start == times[0]
                 and frozen[0].end == times[-1] and not events)
        region = Region.TIME_INVARIANT if whole else Region.REGION3_FROZEN

    return TransitionReport(
        sudden_changes=events,
        frozen_intervals=frozen,
        classical_constant_intervals=constant_c,
        sudden_death_time=_sudden_death(traj),
        transition_time=t_tilde,
        classification=region,
        warnings=warnings,
        closest_axes=traj.closest_axes() if track_closest else None,
    )


def frozen_discord_value(c: float) -> float:
    """Discord held constant by the frozen-class state with ``|c3| = c``."""
    c = float(c)
    if not 0.0 <= c < 1.0:
        raise ValueError("c must lie in [0, 1)")
    plus = (1 + c) / 2 * math.log2(1 + c)
    minus = (1 - c) / 2 * math.log2(1 - c) if c < 1 else 0.0
    return plus + minus


def is_frozen_class(state: BellDiagonalState, atol: float = 1e-12) -> bool:
    """``c1 = ±1`` and ``c2 = ∓c3`` (or the same with ``c1`` and ``c2`` swapped)."""
    c1, c2, c3 = state.coefficients
    return ((abs(abs(c1) - 1) <= atol and abs(c2 + math.copysign(1.0, c1) * c3) <= atol)
            or (abs(abs(c2) - 1) <= atol and abs(c1 + math.copysign(1.0, c2) * c3) <= atol))


def sudden_death_time(initial: BellDiagonalState, channel: MarkovDephasing,
                      side="both", t_max: float = 1e3) -> Optional[float]:
    """Time at which the relative entropy of entanglement reaches zero.

    Frozen-class states use ``-ln[(1-|c3|)/(1+|c3|)] / (k gamma)`` with
    ``k`` the number of exposed qubits; other states are root-found
    numerically on ``[0, t_max]``. ``None`` means no sudden death.
    """
    side = NoiseSide.parse(side)
    k = side.exposed_qubits
    if is_frozen_class(initial):
        c3 = abs(initial.c3)
        if c3 >= 1.0:
            return None
        return float(-math.log((1 - c3) / (1 + c3)) / (k * channel.gamma))

    def excess(t):
        return float(np.max(channel.evolve(initial, t, side).eigenvalues)) - 0.5

    if excess(0.0) <= 0.0:
        return 0.0
    if excess(t_max) > 0.0:
        return None
    return float(brentq(excess, 0.0, t_max, xtol=ROOT_XTOL))


# --- time-invariant discord ---------------------------------------------------------

class _GammaSummary:
    """Sampled decoherence function of one profile, reused across thresholds."""

    def __init__(self, profile: DephasingProfile, horizon: float):
        self.profile = profile
        self.horizon = float(horizon)
        self.pulsed = bool(profile.pulses)
        if self.pulsed:
            self.times = profile.sample_times(self.horizon, per_interval=64)
        else:
            dense = np.linspace(0.0, min(50.0, self.horizon), 5001)
            tail = np.geomspace(50.0, self.horizon, 2001) if self.horizon > 50 else np.empty(0)
            self.times = np.unique(np.concatenate([dense, tail])) / profile.spectrum.omega_c
        self.values = np.atleast_1d(profile.big_gamma(self.times))
        self.running_max = np.maximum.accumulate(self.values)
        self.supremum, _ = profile.supremum(self.horizon) if self.pulsed else (
            float(self.values.max()), None)
        self.asymptote = None
        self.bounded = None
        self.plateau_gap = None
        if not self.pulsed:
            self.asymptote, self.bounded = self._plateau()

    def _plateau(self) -> tuple[Optional[float], Optional[bool]]:
        """``(Gamma(inf), bounded)``; ``(None, None)`` when the two routes disagree.

        The analytic limit is checked against a Richardson extrapolation of
        ``Gamma(T_h)`` and ``Gamma(T_h/2)``: the approach to the limit is
        algebraic, ``~ t**-(s-1)`` (``s-2`` at high temperature), so the raw
        difference ``Gamma(T_h) - Gamma(T_h/2)`` only drops below
        ``PLATEAU_TOL`` for strongly super-Ohmic baths.
        """
        spec = self.profile.spectrum
        t_h = PLATEAU_HORIZON / spec.omega_c
        late, mid = (float(v) for v in self.profile.big_gamma(np.array([t_h, t_h / 2])))
        self.plateau_gap = abs(late - mid)
        analytic = asymptotic_gamma(spec)
        if np.isinf(analytic):
            return math.inf, False
        if np.isnan(analytic):
            return (late, True) if self.plateau_gap < PLATEAU_TOL else (None, None)
        exponent = spec.s - (2.0 if spec.temperature is Temperature.HIGH else 1.0)
        extrapolated = late + (late - mid) / (2.0 ** exponent - 1.0)
        if abs(extrapolated - analytic) > PLATEAU_RTOL * analytic:
            return None, None
        return analytic, True

    def first_crossing(self, level: float) -> Optional[float]:
        idx = np.nonzero(self.values >= level)[0]
        if len(idx) == 0:
            return None
        k = int(idx[0])
        if k == 0:
            return float(self.times[0])
        lo, hi = self.times[k - 1], self.times[k]
        return float(brentq(lambda u: float(self.profile.big_gamma(u)) - level, lo, hi,
                            xtol=ROOT_XTOL))

    def strict_verdict(self, level: float) -> tuple[Verdict, Optional[float]]:
        root = self.first_crossing(level)
        if root is not None:
            return Verdict.TRANSITION, root
        if self.pulsed:
            if self.supremum >= level - AMBIGUITY_BAND:
                return Verdict.UNDECIDED, None
            return Verdict.INVARIANT, None
        return self._asymptotic(max(level, 0.0), strict_sup=self.supremum)

    def _asymptotic(self, level: float, strict_sup: float = -math.inf
                    ) -> tuple[Verdict, Optional[float]]:
        if self.bounded is None:
            return Verdict.UNDECIDED, None
        if not self.bounded:
            return Verdict.TRANSITION, None
        reach = max(self.asymptote, strict_sup)
        if abs(reach - level) <= AMBIGUITY_BAND:
            return Verdict.UNDECIDED, None
        return (Verdict.INVARIANT, None) if reach < level else (Verdict.TRANSITION, None)

    def asymptotic_verdict(self, level: float) -> Verdict:
        return self._asymptotic(level)[0]


@dataclass(frozen=True)
class TransitionSearch:
    """Outcome of :func:`transition_time_spectral`.

    ``time`` is the first instant with ``exp(-k Gamma) = c``, or None when
    the crossing is never reached (``verdict='invariant'``), lies beyond
    the sampled horizon, or cannot be decided.
    """

    time: Optional[float]
    verdict: Verdict
    threshold: float
    supremum: float
    asymptote: Optional[float]


def _threshold(c: float, side: NoiseSide) -> float:
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    return -math.log(c) / side.exposed_qubits


def transition_time_spectral(c: float, spec: OhmicSpectrum,
                             pulses: Optional[PulseSequence] = None, side="both",
                             horizon: Optional[float] = None) -> TransitionSearch:
    """Smallest ``t`` with ``exp(-2 Gamma(t)) = c`` (``exp(-Gamma)`` for one-sided noise).

    Unpulsed searches sample ``[0, 1000/omega_c]`` and, if no crossing is
    found, decide from the asymptotic value of ``Gamma``. Pulsed searches
    are confined to ``horizon`` (default 25) and report time invariance
    within that window only.
    """
    side = NoiseSide.parse(side)
    level = _threshold(c, side)
    if horizon is None:
        horizon = (PULSED_HORIZON if pulses else PLATEAU_HORIZON) / spec.omega_c
    summary = _GammaSummary(DephasingProfile(spec, pulses), horizon)
    verdict, root = summary.strict_verdict(level)
    return TransitionSearch(root, verdict, level, summary.supremum, summary.asymptote)


@dataclass
class RegionScan:
    """Verdicts on an ``(s, c)`` grid; ``flags[i, j]`` belongs to ``(s_grid[i], c_grid[j])``."""

    s_grid: np.ndarray
    c_grid: np.ndarray
    flags: np.ndarray
    horizon: float
    side: NoiseSide
    criterion: str
    temperature: str
    theta_T: Optional[float] = None
    pulse_spec: Optional[dict] = None

    def invariant_mask(self) -> np.ndarray:
        return self.flags == Verdict.INVARIANT.value

    def boundary(self, i: int) -> Optional[float]:
        """Largest ``c`` flagged invariant in row ``i``."""
        cs = self.c_grid[self.invariant_mask()[i]]
        return float(cs.max()) if len(cs) else None

    def metadata(self) -> dict:
        return {
            "horizon": self.horizon,
            "side": self.side.value,
            "criterion": self.criterion,
            "temperature": self.temperature,
            "theta_T": self.theta_T,
            "pulses": self.pulse_spec,
            "semantics": ("time-invariant within horizon" if self.pulse_spec
                          else "time-invariant asymptotically" if self.criterion == "asymptotic"
                          else "no crossing at any time"),
        }


def scan_time_invariant_region(s_grid, c_grid, spec_template: Optional[OhmicSpectrum] = None,
                               pulses: Optional[PulseSequence] = None, side="both",
                               horizon: Optional[float] = None, criterion: Optional[str] = None,
                               workers: int = 1) -> RegionScan:
    """Flag each ``(s, c)`` as invariant, transition or undecided.

    Parameters
    ----------
    spec_template : OhmicSpectrum
        Supplies ``omega_c`` and temperature; its ``s`` is replaced per row.
    pulses : PulseSequence, optional
        Pulse control; verdicts then hold within ``horizon`` only.
    criterion : {'asymptotic', 'supremum', 'window'}
        ``asymptotic`` compares the threshold with ``Gamma(inf)`` (the
        long-time limit); ``supremum`` requires that the threshold is never
        crossed. Defaults to ``asymptotic`` without pulses and ``window``
        (supremum over the horizon) with pulses.
    workers : int
        Thread count; rows are independent and merged by index.
    """
    side = NoiseSide.parse(side)
    s_grid = np.asarray(s_grid, dtype=float)
    c_grid = np.asarray(c_grid, dtype=float)
    if s_grid.size == 0 or c_grid.size == 0:
        raise ValueError("grids must be nonempty")
    template = spec_template or OhmicSpectrum(1.0)
    if criterion is None:
        criterion = "window" if pulses else "asymptotic"
    if criterion not in ("asymptotic", "supremum", "window"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if pulses and criterion == "asymptotic":
        raise ValueError("pulsed scans have no asymptotic verdict; use 'window'")
    if horizon is None:
        horizon = (PULSED_HORIZON if pulses else PLATEAU_HORIZON) / template.omega_c
    levels = [_threshold(c, side) for c in c_grid]

    def row(s: float) -> list[str]:
        spec = OhmicSpectrum(s, template.omega_c, template.temperature, template.theta_T,
                             template.kT)
        summary = _GammaSummary(DephasingProfile(spec, pulses), horizon)
        if criterion == "asymptotic":
            return [summary.asymptotic_verdict(level).value for level in levels]
        return [summary.strict_verdict(level)[0].value for level in levels]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, s_grid))
    else:
        rows = [row(s) for s in s_grid]
    pulse_spec = None
    if pulses:
        pulse_spec = ({"interval": pulses.interval, "final": pulses.final, "count": len(pulses)}
                      if pulses.interval else {"instants": list(pulses.instants)})
    return RegionScan(s_grid, c_grid, np.array(rows, dtype=object).astype(str), float(horizon),
                      side, criterion, template.temperature.value,
                      template.theta_T if template.temperature is Temperature.HIGH else None,
                      pulse_spec)


def asymptotic_boundary(s: float, side="both") -> float:
    """``c*(s) = exp(-k Gamma_E(s-1))`` at zero temperature; 0 when ``Gamma`` diverges."""
    g = asymptotic_gamma(OhmicSpectrum(s))
    return 0.0 if math.isinf(g) else math.exp(-NoiseSide.parse(side).exposed_qubits * g)
