"""Exact correlation dynamics of Bell-diagonal two-qubit states under local dephasing."""

from .channels import (MarkovDephasing, NoiseSide, RTNDephasing, SpectralDephasing,
                       apply_channel_matrix, apply_kraus_general, apply_markov, apply_rtn,
                       apply_spectral, decoherence_factor, rtn_lambda)
from .correlations import (BellDiagonalState, ClosestClassicalState, CorrelationTriple,
                           bell_diagonal_correlations, closest_classical_state,
                           closest_classical_states, decohered_mutual_information_shortcut,
                           discord_bruteforce, relative_entropy_discord,
                           relative_entropy_entanglement)
from .dephasing import (DephasingProfile, Markovianity, OhmicSpectrum, PulseSequence,
                        Temperature, big_gamma, controlled_gamma, controlled_gamma_rate, gamma0,
                        markovianity_criterion)
from .errors import (InvalidChannelError, InvalidStateError, QuadratureError,
                     ShortcutInvalidError, UnsupportedParameterError)
from .phenomena import (CorrelationTrajectory, RegionScan, TransitionReport, detect_transitions,
                        frozen_discord_value, scan_time_invariant_region, simulate_trajectory,
                        sudden_death_time, transition_time_spectral)
from .qops import (MeasurementBasis, measurement_update, partial_trace, relative_entropy,
                   von_neumann_entropy)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
