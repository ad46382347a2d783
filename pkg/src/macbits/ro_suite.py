"""Domain-separated hashing, PRG expansion, masking, and MAC accumulators.

All randomness-extraction and commitment in the engine flows through one
SHA-256-based family, keyed by an explicit domain tag. The tag is prepended
with a length prefix so distinct (tag, input) pairs can never collide as byte
streams. A process-global counter records calls per tag; the cost-accounting
tests assert exact per-instance hash budgets from it.
"""

from __future__ import annotations

import hashlib
import threading
from collections import Counter
from dataclasses import dataclass

from .bitlinalg import BitVec
from .errors import UsageError

DIGEST_BYTES = 32
KAPPA_DEFAULT = 128
PSI_DEFAULT = 40

_counter_lock = threading.Lock()
_hash_calls: Counter = Counter()


def _as_bytes(x) -> bytes:
    if isinstance(x, BitVec):
        return x.to_bytes()
    if isinstance(x, (bytes, bytearray, memoryview)):
        return bytes(x)
    raise UsageError(f"cannot hash {type(x).__name__}")


def ro_hash(tag: str, *parts) -> bytes:
    """32-byte digest of the tagged concatenation of parts.

    Parts are raw-concatenated (callers fix field widths); only the tag gets a
    length prefix, which is enough to separate domains.
    """
    h = hashlib.sha256()
    t = tag.encode()
    h.update(len(t).to_bytes(2, "big"))
    h.update(t)
    for p in parts:
        h.update(_as_bytes(p))
    with _counter_lock:
        _hash_calls[tag] += 1
    return h.digest()


def hash_calls(prefix: str = "") -> int:
    """Total ro_hash invocations whose tag starts with prefix."""
    with _counter_lock:
        return sum(v for k, v in _hash_calls.items() if k.startswith(prefix))


def reset_hash_calls() -> None:
    with _counter_lock:
        _hash_calls.clear()


def expand(seed, out_bits: int) -> BitVec:
    """Deterministic PRG: counter-mode hashing of the seed.

    Prefix property: expand(s, a) equals the first a bits of expand(s, b) for
    a <= b. Block hashes are counted in bulk under the "prg" tag.
    """
    if out_bits < 0:
        raise UsageError("negative expansion length")
    if out_bits == 0:
        return BitVec(0)
    data = _as_bytes(seed)
    nblocks = (out_bits + 8 * DIGEST_BYTES - 1) // (8 * DIGEST_BYTES)
    base = hashlib.sha256()
    tag = b"prg"
    base.update(len(tag).to_bytes(2, "big"))
    base.update(tag)
    base.update(data)
    out = bytearray()
    for ctr in range(nblocks):
        h = base.copy()
        h.update(ctr.to_bytes(8, "big"))
        out += h.digest()
    with _counter_lock:
        _hash_calls["prg"] += nblocks
    return BitVec(out_bits, int.from_bytes(out, "little"))


def mask(tag: str, key_material, message: BitVec) -> BitVec:
    """One-time pad of message under expand(hash(tag, key_material)).

    Involutive: applying mask twice with the same key and tag returns the
    message, so the same call unmasks.
    """
    pad = expand(ro_hash(tag, key_material), message.n)
    return message ^ pad


@dataclass(frozen=True)
class MacAccumulator:
    """Chained digest of a sequence of revealed MACs.

    Both sides of a reveal feed what they believe the MAC is; equal inputs in
    equal order give equal states. Starts at the all-zero digest.
    """

    state: bytes = bytes(DIGEST_BYTES)
    count: int = 0

    def absorb(self, mac: BitVec) -> "MacAccumulator":
        leaf = ro_hash("acc/leaf", mac)
        return MacAccumulator(ro_hash("acc/chain", self.state, leaf), self.count + 1)

    def digest(self) -> bytes:
        return self.state
