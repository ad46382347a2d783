"""Random OT extension by hashing the candidate columns.

The transposed candidate phase leaves the key side with (K_i, weak global
key G) and the bit side with (b_i, M_i) satisfying M_i = K_i xor b_i*G.
Hashing breaks that correlation: the key side acts as ROT *sender* with

    X_{i,0} = H(K_i),   X_{i,1} = H(K_i xor G)

and the bit side acts as ROT *receiver* with choice bit b_i and

    Y_i = H(M_i) = X_{i,b_i}.

The non-chosen pad stays hidden because computing it requires G. Columns are
sized at tau = ceil(4*kappa/3) so the leaky key still has kappa bits of
entropy. No amplification step is needed, and the random OTs themselves cost
exactly 2 hash calls on the sender and 1 on the receiver.

Chosen-message mode sends both messages masked under the respective pads.
"""

from __future__ import annotations

import math

from .abit_proto import labit_receiver, labit_sender, labit_to_wabit_keys, labit_to_wabit_macs
from .bitlinalg import BitVec
from .errors import ProtocolError, UsageError
from .ro_suite import mask, ro_hash
from .transport import Channel, MsgType


def rot_tau(kappa: int) -> int:
    return math.ceil(4 * kappa / 3)


def pad_bits(kappa: int) -> int:
    return kappa


def rot_extend_sender(ch: Channel, count: int, kappa: int, rng, backend):
    """Produce `count` random OT pad pairs (X0, X1), each kappa bits."""
    tau = rot_tau(kappa)
    ys, macs = labit_receiver(ch, tau, count, rng, backend)
    view = labit_to_wabit_keys(ys, macs)
    out = []
    for k in view.keys:
        x0 = BitVec.from_bytes(kappa, ro_hash("rot", k)[: kappa // 8])
        x1 = BitVec.from_bytes(kappa, ro_hash("rot", k ^ view.gamma)[: kappa // 8])
        out.append((x0, x1))
    return out


def rot_extend_receiver(ch: Channel, count: int, kappa: int, rng, backend):
    """Produce `count` (choice bit, chosen pad) pairs."""
    tau = rot_tau(kappa)
    gamma, keys = labit_sender(ch, tau, count, rng, backend)
    view = labit_to_wabit_macs(gamma, keys)
    pads = [BitVec.from_bytes(kappa, ro_hash("rot", m)[: kappa // 8]) for m in view.macs]
    return list(view.bits), pads


def ot_ext_send(ch: Channel, pads, messages) -> None:
    """Chosen-message OTs on top of random pads: both branches travel masked."""
    if len(pads) != len(messages):
        raise UsageError("pad / message count mismatch")
    if not messages:
        return
    n = messages[0][0].n
    if any(m0.n != n or m1.n != n for m0, m1 in messages):
        raise UsageError("ragged chosen-message batch")
    f0, f1 = bytearray(), bytearray()
    for (x0, x1), (m0, m1) in zip(pads, messages):
        f0 += mask("rot/msg", x0, m0).to_bytes()
        f1 += mask("rot/msg", x1, m1).to_bytes()
    ch.send(MsgType.ROT_MASK0, bytes(f0))
    ch.send(MsgType.ROT_MASK1, bytes(f1))


def ot_ext_receive(ch: Channel, choices, pads, n_bits: int):
    if len(choices) != len(pads):
        raise UsageError("choice / pad count mismatch")
    if not choices:
        return []
    f0 = ch.recv(MsgType.ROT_MASK0)
    f1 = ch.recv(MsgType.ROT_MASK1)
    nb = (n_bits + 7) // 8
    if len(f0) != nb * len(choices) or len(f1) != nb * len(choices):
        raise ProtocolError("bad chosen-message batch length")
    out = []
    for k, (c, pad) in enumerate(zip(choices, pads)):
        blob = (f1 if c else f0)[k * nb : (k + 1) * nb]
        out.append(mask("rot/msg", pad, BitVec.from_bytes(n_bits, blob)))
    return out
