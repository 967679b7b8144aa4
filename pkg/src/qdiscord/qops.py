"""Two-qubit linear algebra: Pauli operators, partial traces, entropies.

All entropies are in bits. Density matrices are plain complex ``numpy``
arrays of shape ``(2, 2)`` or ``(4, 4)``; the two-qubit ordering is
``A ⊗ B`` with computational basis ``|00>, |01>, |10>, |11>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidStateError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
ZERO_PROBABILITY = 1e-14
SUPPORT_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)

_BELL_VECTORS = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}
BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")


def ket_to_dm(psi) -> np.ndarray:
    """Return ``|psi><psi|`` for a normalised state vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bell_projector(label: str) -> np.ndarray:
    """Projector onto one of the Bell states ``phi+``, ``phi-``, ``psi+``, ``psi-``."""
    try:
        return ket_to_dm(_BELL_VECTORS[label])
    except KeyError:
        raise ValueError(f"unknown Bell state {label!r}; expected one of {BELL_LABELS}") from None


def validate_density_matrix(rho, dim: Optional[int] = None) -> np.ndarray:
    """Check hermiticity, unit trace and positivity; return a complex copy.

    Raises
    ------
    InvalidStateError
        If any check fails beyond the module tolerances.
    """
    rho = np.array(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise InvalidStateError(f"expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise InvalidStateError(f"expected a {dim}x{dim} matrix, got shape {rho.shape}")
    asym = np.max(np.abs(rho - rho.conj().T))
    if asym > HERMITIAN_TOL:
        raise InvalidStateError(f"matrix is not Hermitian (max |rho - rho^dag| = {asym:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {tr.real:.15g}, expected 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -PSD_TOL:
        raise InvalidStateError(f"matrix has negative eigenvalue {lo:.3e}")
    return rho


def clipped_eigenvalues(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix with round-off negatives set to zero."""
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -PSD_TOL:
        raise InvalidStateError(f"matrix has negative eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None)


def shannon_entropy(probs) -> float:
    """Shannon entropy in bits; zero entries contribute nothing."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho, validate: bool = True) -> float:
    """Von Neumann entropy ``-Tr rho log2 rho`` in bits.

    Parameters
    ----------
    rho : array_like
        2x2 or 4x4 density matrix.
    validate : bool
        Run :func:`validate_density_matrix` first. Internal callers that
        construct states themselves pass ``False``.
    """
    if validate:
        rho = validate_density_matrix(rho)
    return shannon_entropy(clipped_eigenvalues(np.asarray(rho)))


def _subsystem_index(keep) -> int:
    if keep in ("A", "a", 0):
        return 0
    if keep in ("B", "b", 1):
        return 1
    raise ValueError(f"subsystem must be 'A' or 'B', got {keep!r}")


def partial_trace(rho, keep="A", validate: bool = True) -> np.ndarray:
    """Reduced state of qubit ``keep`` ('A' or 'B') of a two-qubit state."""
    if validate:
        rho = validate_density_matrix(rho, dim=4)
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if _subsystem_index(keep) == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("jijk->ik", r)


def relative_entropy(rho1, rho2, validate: bool = True) -> float:
    """Quantum relative entropy ``S(rho1 || rho2)`` in bits.

    Returns ``inf`` when the support of ``rho1`` is not contained in the
    support of ``rho2``; this is a value, not an error.
    """
    if validate:
        rho1 = validate_density_matrix(rho1)
        rho2 = validate_density_matrix(rho2)
    rho1 = np.asarray(rho1)
    mu, vecs = np.linalg.eigh(np.asarray(rho2))
    weights = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), rho1, vecs))
    # Directions are null only at eigensolver noise level; tiny but resolved
    # eigenvalues stay in the logarithm.
    null_level = 16 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(mu))))
    on_support = mu > null_level
    if np.any(weights[~on_support] > SUPPORT_TOL):
        return float("inf")
    cross = -float(np.sum(weights[on_support] * np.log2(mu[on_support])))
    value = cross - von_neumann_entropy(rho1, validate=False)
    if abs(value) < SUPPORT_TOL:
        return 0.0
    return value


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective qubit measurement along the Bloch direction ``(theta, phi)``."""

    theta: float
    phi: float

    @property
    def direction(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        n_sigma = sum(n * s for n, s in zip(self.direction, PAULIS))
        return 0.5 * (I2 + n_sigma), 0.5 * (I2 - n_sigma)


class ConditionalState(NamedTuple):
    """Post-measurement state of A. ``state`` is None when the outcome never occurs."""

    state: Optional[np.ndarray]
    probability: float


def measurement_update(rho, basis: MeasurementBasis, outcome: int,
                       validate: bool = True) -> ConditionalState:
    """Measure qubit B in ``basis`` and return A's conditional state for ``outcome``.

    ``outcome`` is 1 or 2, labelling the projectors ``(I ± n.sigma)/2``.
    Outcomes with probability below ``ZERO_PROBABILITY`` return
    ``state=None``; callers skip those terms.
    """
    if outcome not in (1, 2):
        raise ValueError(f"outcome must be 1 or 2, got {outcome!r}")
    if validate:
        rho = validate_density_matrix(rho, dim=4)
    proj = np.kron(I2, basis.projectors[outcome - 1])
    unnormalised = partial_trace(proj @ np.asarray(rho) @ proj, keep="A", validate=False)
    p = float(np.real(np.trace(unnormalised)))
    if p < ZERO_PROBABILITY:
        return ConditionalState(None, max(p, 0.0))
    state = unnormalised / p
    return ConditionalState(0.5 * (state + state.conj().T), p)
