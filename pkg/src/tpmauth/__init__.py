"""Authenticated neural key exchange with Tree Parity Machines."""
from .adversary import AttackReport, AttackScenario, impostor_trials, run_eavesdropper, run_mitm
from .config import load_session_config, make_session_config
from .errors import (
    DimensionError,
    FramingError,
    InvalidStateError,
    ParameterError,
    ProtocolError,
    ProtocolOrderError,
    TpmError,
)
from .inputs import (
    AuthPattern,
    InputStream,
    LfsrState,
    StreamConfig,
    input_parity,
    lfsr_next_bit,
    matches_auth_pattern,
    next_input,
)
from .keying import KeyMaterial, TrajectoryWalker, derive_key, keystream_bytes, xor_bytes
from .net import ExitCode, KeyExchangeResult, PeerConfig, run_peer
from .protocol import (
    AuthPolicy,
    Session,
    SessionConfig,
    Status,
    derive_alpha,
    distance_trace,
    run_honest_pair,
)
from .tpm import Tpm, TpmOutput, TpmParams, apply_learning, compute_output, new_tpm, weight_distance

__version__ = "0.1.0"
