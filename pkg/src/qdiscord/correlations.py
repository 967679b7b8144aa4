"""Mutual information, classical correlations, discord and entanglement.

Bell-diagonal states use closed forms. General two-qubit states go through
:func:`discord_bruteforce`, which optimises over projective measurements on
qubit B and serves as an independent check of the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import qops
from .errors import InvalidStateError, ShortcutInvalidError

STATE_TOL = 1e-12
DEGENERACY_TOL = 1e-12
SHORTCUT_TOL = 1e-9

_PAULI_PAIRS = tuple(np.kron(s, s) for s in qops.PAULIS)


def _binary_entropy_of_bias(x):
    """Entropy of the distribution ((1+x)/2, (1-x)/2), vectorised, in bits."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    inner = x < 1.0
    xi = x[inner]
    pp, pm = (1.0 + xi) / 2.0, (1.0 - xi) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        hp = np.where(pp > 0, -pp * np.log2(pp), 0.0)
        hm = np.where(pm > 0, -pm * np.log2(pm), 0.0)
    out[inner] = hp + hm
    return out


def _xlog2x(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)


def bell_eigenvalues(c1, c2, c3) -> np.ndarray:
    """Weights of (phi+, phi-, psi+, psi-) for coefficients ``c1, c2, c3``.

    Broadcasts; the leading axis of the result indexes the Bell state.
    """
    c1, c2, c3 = (np.asarray(c, dtype=float) for c in (c1, c2, c3))
    return np.array([
        (1 + c1 - c2 + c3) / 4,
        (1 - c1 + c2 + c3) / 4,
        (1 + c1 + c2 - c3) / 4,
        (1 - c1 - c2 - c3) / 4,
    ])


@dataclass(frozen=True)
class BellDiagonalState:
    """Two-qubit state ``(I + sum_i c_i sigma_i ⊗ sigma_i) / 4``."""

    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        for name in ("c1", "c2", "c3"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or abs(value) > 1.0 + STATE_TOL:
                raise InvalidStateError(f"{name}={value!r} outside [-1, 1]")
            object.__setattr__(self, name, value)
        lam = self.eigenvalues
        if lam.min() < -STATE_TOL:
            raise InvalidStateError(
                f"coefficients ({self.c1}, {self.c2}, {self.c3}) give negative "
                f"Bell weight {lam.min():.3e}")

    @classmethod
    def from_eigenvalues(cls, weights) -> "BellDiagonalState":
        """Build from Bell weights ordered (phi+, phi-, psi+, psi-)."""
        pp, pm, sp, sm = (float(w) for w in weights)
        if abs(pp + pm + sp + sm - 1.0) > STATE_TOL:
            raise InvalidStateError("Bell weights must sum to 1")
        return cls((pp - pm) + (sp - sm), (sp - sm) - (pp - pm), (pp + pm) - (sp + sm))

    @classmethod
    def from_matrix(cls, rho, atol: float = 1e-10) -> "BellDiagonalState":
        """Read off ``c_i = Tr(rho sigma_i ⊗ sigma_i)``; reject non Bell-diagonal input."""
        rho = qops.validate_density_matrix(rho, dim=4)
        coeffs = [float(np.real(np.trace(rho @ p))) for p in _PAULI_PAIRS]
        state = cls(*coeffs)
        if np.max(np.abs(state.to_matrix() - rho)) > atol:
            raise InvalidStateError("matrix is not Bell-diagonal")
        return state

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Bell weights ordered as :data:`qops.BELL_LABELS`."""
        return bell_eigenvalues(self.c1, self.c2, self.c3)

    @property
    def chi(self) -> float:
        """Largest coefficient magnitude; fixes the optimal measurement axis."""
        return max(abs(self.c1), abs(self.c2), abs(self.c3))

    def to_matrix(self) -> np.ndarray:
        rho = np.eye(4, dtype=complex)
        for c, p in zip(self.coefficients, _PAULI_PAIRS):
            rho = rho + c * p
        return rho / 4


@dataclass(frozen=True)
class CorrelationTriple:
    """Total (mutual information), classical and quantum (discord) correlations, in bits."""

    mutual_info: float
    classical: float
    discord: float

    def __iter__(self):
        return iter((self.mutual_info, self.classical, self.discord))


def correlations_from_coefficients(c1, c2, c3):
    """Vectorised closed forms for Bell-diagonal states.

    Returns
    -------
    (I, C, Q) : tuple of ndarray
        Mutual information, classical correlations and discord. ``Q`` is
        computed as ``I - C`` so the decomposition holds term by term.
    """
    lam = bell_eigenvalues(c1, c2, c3)
    mutual = 2.0 + np.sum(_xlog2x(np.clip(lam, 0.0, None)), axis=0)
    chi = np.max(np.abs(np.array([c1, c2, c3], dtype=float)), axis=0)
    classical = 1.0 - _binary_entropy_of_bias(chi)
    return mutual, classical, mutual - classical


def bell_diagonal_correlations(state: BellDiagonalState) -> CorrelationTriple:
    """Closed-form ``(I, C, Q)`` of a Bell-diagonal state."""
    i, c, q = correlations_from_coefficients(state.c1, state.c2, state.c3)
    return CorrelationTriple(float(i), float(c), float(q))


def mutual_information(rho) -> float:
    """``S(rho_A) + S(rho_B) - S(rho_AB)`` for a general two-qubit state."""
    rho = qops.validate_density_matrix(rho, dim=4)
    return (qops.von_neumann_entropy(qops.partial_trace(rho, "A", validate=False), validate=False)
            + qops.von_neumann_entropy(qops.partial_trace(rho, "B", validate=False), validate=False)
            - qops.von_neumann_entropy(rho, validate=False))


def conditional_information(rho, basis: qops.MeasurementBasis) -> float:
    """Information about A gained by measuring B in ``basis``.

    Straightforward reference implementation built on
    :func:`qops.measurement_update`; the optimiser uses a vectorised form.
    """
    rho = qops.validate_density_matrix(rho, dim=4)
    s_a = qops.von_neumann_entropy(qops.partial_trace(rho, "A", validate=False), validate=False)
    conditional = 0.0
    for outcome in (1, 2):
        state, p = qops.measurement_update(rho, basis, outcome, validate=False)
        if state is None:
            continue
        conditional += p * qops.von_neumann_entropy(state, validate=False)
    return s_a - conditional


class _ConditionalObjective:
    """Vectorised ``J(theta, phi)`` for a fixed two-qubit state."""

    def __init__(self, rho: np.ndarray):
        r = rho.reshape(2, 2, 2, 2)
        # Tr_B[(I ⊗ sigma_j) rho] for j = x, y, z
        self.blocks = np.array([np.einsum("bc,acdb->ad", s, r) for s in qops.PAULIS])
        self.rho_a = np.einsum("ijkj->ik", r)
        lam_a = np.clip(np.linalg.eigvalsh(self.rho_a), 0.0, None)
        self.s_a = qops.shannon_entropy(lam_a)

    def __call__(self, theta, phi) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        st = np.sin(theta)
        n = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
        m = np.tensordot(n, self.blocks, axes=([-1], [0]))
        total = np.zeros(theta.shape)
        for sign in (1.0, -1.0):
            x = 0.5 * (self.rho_a + sign * m)
            a = np.real(x[..., 0, 0])
            d = np.real(x[..., 1, 1])
            b = x[..., 0, 1]
            p = a + d
            radius = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
            mu = np.clip(np.stack([p / 2 + radius, p / 2 - radius]), 0.0, None)
            # sum_k p_k S(rho_A|k) = -sum mu log mu + sum_k p_k log p_k
            total += -np.sum(_xlog2x(mu), axis=0) + _xlog2x(np.clip(p, 0.0, None))
        return self.s_a - total


@dataclass(frozen=True)
class BruteForceResult:
    """Outcome of :func:`discord_bruteforce_detailed`."""

    triple: CorrelationTriple
    theta: float
    phi: float
    grid_best: float


def discord_bruteforce_detailed(rho, n_theta: int = 64, n_phi: int = 128,
                                refine: bool = True, maxiter: int = 200,
                                ftol: float = 1e-10) -> BruteForceResult:
    """Grid search over measurement directions on B followed by Nelder-Mead."""
    if n_theta < 64 or n_phi < 128:
        raise ValueError("measurement grid must be at least 64 x 128")
    rho = qops.validate_density_matrix(rho, dim=4)
    objective = _ConditionalObjective(rho)
    thetas = np.arange(n_theta) * (np.pi / n_theta)
    phis = np.arange(n_phi) * (2 * np.pi / n_phi)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    values = objective(tt, pp)
    # argmax returns the first maximum, i.e. smallest (theta, phi) lexicographically
    k = int(np.argmax(values))
    best_theta, best_phi = float(tt.flat[k]), float(pp.flat[k])
    grid_best = best = float(values.flat[k])
    if refine:
        res = minimize(lambda x: -float(objective(x[0], x[1])), x0=[best_theta, best_phi],
                       method="Nelder-Mead",
                       options={"maxiter": maxiter, "xatol": 1e-9, "fatol": ftol,
                                "initial_simplex": [[best_theta, best_phi],
                                                    [best_theta + np.pi / n_theta, best_phi],
                                                    [best_theta, best_phi + 2 * np.pi / n_phi]]})
        if -res.fun > best:
            best = float(-res.fun)
            best_theta, best_phi = float(res.x[0]), float(res.x[1])
    mutual = mutual_information(rho)
    return BruteForceResult(CorrelationTriple(mutual, best, mutual - best),
                            best_theta, best_phi, grid_best)


def discord_bruteforce(rho, n_theta: int = 64, n_phi: int = 128, refine: bool = True,
                       maxiter: int = 200) -> CorrelationTriple:
    """``(I, C, Q)`` of an arbitrary two-qubit state by direct optimisation.

    Parameters
    ----------
    rho : array_like
        4x4 density matrix.
    n_theta, n_phi : int
        Resolution of the uniform measurement grid, at least 64 x 128.
    refine : bool
        Polish the best grid point with Nelder-Mead.
    maxiter : int
        Nelder-Mead iteration cap.
    """
    return discord_bruteforce_detailed(rho, n_theta, n_phi, refine, maxiter).triple


@dataclass(frozen=True)
class ClosestClassicalState:
    """Zero-discord Bell-diagonal state nearest (in relative entropy) to a given one.

    Weight ``q/2`` sits on each Bell projector in ``dominant_pair`` and
    ``(1-q)/2`` on each of the other two.
    """

    q: float
    dominant_pair: tuple[str, str]

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.q / 2 if label in self.dominant_pair else (1 - self.q) / 2
                         for label in qops.BELL_LABELS])

    @property
    def state(self) -> BellDiagonalState:
        return BellDiagonalState.from_eigenvalues(self.weights)

    @property
    def axis(self) -> str:
        """Signed Pauli axis carrying the single nonzero coefficient, e.g. ``'+x'``."""
        pair = frozenset(self.dominant_pair)
        table = {
            frozenset({"phi+", "phi-"}): "+z", frozenset({"psi+", "psi-"}): "-z",
            frozenset({"phi+", "psi+"}): "+x", frozenset({"phi-", "psi-"}): "-x",
            frozenset({"phi-", "psi+"}): "+y", frozenset({"phi+", "psi-"}): "-y",
        }
        return table[pair]

    def to_matrix(self) -> np.ndarray:
        return sum(w * qops.bell_projector(label)
                   for w, label in zip(self.weights, qops.BELL_LABELS))


def closest_classical_states(state: BellDiagonalState) -> tuple[ClosestClassicalState, ...]:
    """All closest classical states; more than one only at eigenvalue crossings.

    ``q`` is the sum of the two largest Bell weights. Every pair of Bell
    projectors whose weights reach that sum (within ``DEGENERACY_TOL``)
    yields a candidate; candidates describing the same matrix are merged.
    """
    lam = state.eigenvalues
    order = np.argsort(-lam, kind="stable")
    q = float(lam[order[0]] + lam[order[1]])
    found: list[ClosestClassicalState] = []
    seen: list[np.ndarray] = []
    for i, j in combinations(sorted(order[:4], key=lambda k: (-lam[k], k)), 2):
        if abs(lam[i] + lam[j] - q) > DEGENERACY_TOL:
            continue
        candidate = ClosestClassicalState(q, (qops.BELL_LABELS[i], qops.BELL_LABELS[j]))
        w = candidate.weights
        if any(np.allclose(w, other, atol=DEGENERACY_TOL) for other in seen):
            continue
        seen.append(w)
        found.append(candidate)
    return tuple(found)


def closest_classical_state(state: BellDiagonalState) -> ClosestClassicalState:
    """The closest classical state; the first candidate at a crossing."""
    return closest_classical_states(state)[0]


def relative_entropy_discord(state: BellDiagonalState) -> float:
    """``S(rho || rho_cl)`` evaluated numerically from the density matrices."""
    return qops.relative_entropy(state.to_matrix(), closest_classical_state(state).to_matrix(),
                                 validate=False)


def relative_entropy_entanglement(state: BellDiagonalState) -> float:
    """Relative entropy of entanglement of a Bell-diagonal state, in bits.

    Zero when the largest Bell weight is at most 1/2 (the state is then
    separable).
    """
    top = float(np.max(state.eigenvalues))
    if top <= 0.5:
        return 0.0
    return float(1.0 + _xlog2x(top) + _xlog2x(1.0 - top))


def entanglement_from_coefficients(c1, c2, c3) -> np.ndarray:
    """Vectorised :func:`relative_entropy_entanglement`."""
    top = np.max(bell_eigenvalues(c1, c2, c3), axis=0)
    value = 1.0 + _xlog2x(top) + _xlog2x(1.0 - top)
    return np.where(top > 0.5, value, 0.0)


def decohered_mutual_information_shortcut(initial: BellDiagonalState, channel, t: float,
                                          side: str = "both",
                                          tol: float = SHORTCUT_TOL) -> float:
    """Discord as ``I(rho(t)) - I(rho fully dephased)``.

    Valid only while the channel leaves the classical correlations of
    ``initial`` untouched. The result is compared against the closed form
    and :class:`ShortcutInvalidError` is raised if they disagree by more
    than ``tol``.

    Parameters
    ----------
    channel
        Any object with ``evolve(state, t, side) -> BellDiagonalState``.
    """
    evolved = channel.evolve(initial, t, side)
    dephased = BellDiagonalState(0.0, 0.0, initial.c3)
    shortcut = (bell_diagonal_correlations(evolved).mutual_info
                - bell_diagonal_correlations(dephased).mutual_info)
    exact = bell_diagonal_correlations(evolved).discord
    if abs(shortcut - exact) > tol:
        raise ShortcutInvalidError(
            f"shortcut gives {shortcut:.12g} but closed-form discord is {exact:.12g} at t={t}; "
            "classical correlations are not conserved for this state")
    return shortcut


def random_bell_diagonal(rng: Optional[np.random.Generator] = None) -> BellDiagonalState:
    """Bell-diagonal state with weights drawn uniformly from the simplex."""
    rng = np.random.default_rng() if rng is None else rng
    weights = rng.dirichlet(np.ones(4))
    weights = weights / weights.sum()
    return BellDiagonalState.from_eigenvalues(weights)
