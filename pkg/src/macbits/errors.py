"""Shared exception taxonomy.

Protocol code distinguishes aborts (cheating or corruption detected, session dead)
from usage errors (caller bug) and transport failures (peer gone). The CLI maps
these onto distinct exit codes.
"""


class UsageError(ValueError):
    """Caller violated a precondition (bad lengths, bad arguments)."""


class TransportError(RuntimeError):
    """Channel failure: peer closed, timeout, malformed frame."""


class ProtocolError(TransportError):
    """Peer sent a frame that does not fit the protocol state machine."""


class ProtocolAbort(RuntimeError):
    """A security check failed; the session must stop immediately.

    `phase` names the protocol step that tripped and `detail` elaborates,
    both for diagnostics only.
    """

    def __init__(self, phase: str, detail: str = ""):
        self.phase = phase
        self.detail = detail
        super().__init__(f"abort in {phase}" + (f": {detail}" if detail else ""))


class OutOfMaterial(RuntimeError):
    """Preprocessed material exhausted mid-protocol. Hard stop, no refill."""


class ParseError(ValueError):
    """Malformed circuit file."""
