"""Shared test fixtures: an honest in-memory dealer, random circuits, and
two-party run plumbing.

The oracle dealer manufactures correlated MaterialStore pairs directly from
a test RNG, skipping the offline protocol entirely. That keeps online-phase
tests fast and makes the material independently trustworthy: every record is
built straight from the defining MAC relation M = K xor bit*Delta.
"""

from __future__ import annotations

import random
import socket

from macbits.aand_proto import TripleKey, TripleMac
from macbits.abit_proto import AuthBitKey, AuthBitMac, GlobalKey
from macbits.aot_proto import QuadReceiver, QuadSender
from macbits.bitlinalg import BitVec
from macbits.circuit import Circuit, CircuitHeader, Gate
from macbits.dealer import DealerConfig, MaterialStore
from macbits.ro_suite import ro_hash
from macbits.transport import Role, memory_pair, run_pair


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


# ---------------------------------------------------------------------------
# honest dealer oracle


class OracleDealer:
    """Builds both parties' material without running any protocol."""

    def __init__(self, kappa: int, rng: random.Random):
        self.kappa = kappa
        self.rng = rng
        # delta[P] authenticates P's bits and is held by P's peer
        self.delta = {r: GlobalKey(r, BitVec.random(kappa, rng))
                      for r in (Role.ALICE, Role.BOB)}

    def abit(self, owner: Role):
        """One authenticated bit: (mac half for owner, key half for peer)."""
        bit = self.rng.getrandbits(1)
        key = BitVec.random(self.kappa, self.rng)
        mac = key ^ self.delta[owner].delta.times(bit)
        return AuthBitMac(bit, mac), AuthBitKey(key)

    def abit_with(self, owner: Role, bit: int):
        key = BitVec.random(self.kappa, self.rng)
        mac = key ^ self.delta[owner].delta.times(bit)
        return AuthBitMac(bit, mac), AuthBitKey(key)

    def triple(self, owner: Role):
        x, kx = self.abit(owner)
        y, ky = self.abit(owner)
        zbit = x.bit & y.bit
        z, kz = self.abit_with(owner, zbit)
        return TripleMac(x, y, z), TripleKey(kx, ky, kz)

    def quad(self, sender: Role):
        x0, kx0 = self.abit(sender)
        x1, kx1 = self.abit(sender)
        receiver = sender.other
        c, kc = self.abit(receiver)
        zbit = x0.bit ^ (c.bit & (x0.bit ^ x1.bit))
        z, kz = self.abit_with(receiver, zbit)
        return (QuadSender(x0, x1, kc, kz),
                QuadReceiver(c, z, kx0, kx1))

    def store_pair(self, cfg: DealerConfig):
        """Stores shaped exactly like deal() would produce for cfg, minus
        the bucketing (records are born clean)."""
        sid = bytes(self.rng.getrandbits(8) for _ in range(16))
        commits = {}
        for r in (Role.ALICE, Role.BOB):
            held = self.delta[r.other]
            commits[r] = ro_hash("gkc", sid, bytes([r.value]),
                                 held.delta.to_bytes())
        joint = ro_hash("gkc/joint", commits[Role.ALICE], commits[Role.BOB])
        store = {r: MaterialStore(r, self.kappa, cfg.psi, sid, joint,
                                  self.delta[r.other])
                 for r in (Role.ALICE, Role.BOB)}

        for owner, n in ((Role.ALICE, cfg.n_abits_A), (Role.BOB, cfg.n_abits_B)):
            for _ in range(n):
                m, k = self.abit(owner)
                store[owner].abits_mine.append(m)
                store[owner.other].abits_theirs.append(k)
        for owner, n in ((Role.ALICE, cfg.n_aands_A), (Role.BOB, cfg.n_aands_B)):
            for _ in range(n):
                tm, tk = self.triple(owner)
                store[owner].aands_mine.append(tm)
                store[owner.other].aands_theirs.append(tk)
        for sender, n in ((Role.ALICE, cfg.n_aots_AB), (Role.BOB, cfg.n_aots_BA)):
            for _ in range(n):
                qs, qr = self.quad(sender)
                store[sender].aots_sender.append(qs)
                store[sender.other].aots_receiver.append(qr)
        return store[Role.ALICE], store[Role.BOB]


def oracle_store_pair(circuit: Circuit, rng: random.Random, kappa: int = 16,
                      psi: int = 8, slack: int = 0):
    """Material sized for one evaluation of circuit (plus slack AND gates)."""
    cfg = DealerConfig.for_gates(circuit.n_and + slack,
                                 circuit.header.inputs_a + slack,
                                 circuit.header.inputs_b + slack,
                                 kappa=kappa, psi=psi)
    return OracleDealer(kappa, rng).store_pair(cfg)


# ---------------------------------------------------------------------------
# random circuits


def random_circuit(rng: random.Random, n_gates: int, inputs_a: int = 4,
                   inputs_b: int = 4, n_outputs: int = None,
                   kinds=("XOR", "AND", "INV", "EQW")) -> Circuit:
    """A valid random circuit; every gate reads wires defined before it."""
    n_in = inputs_a + inputs_b
    gates = []
    wire = n_in
    for _ in range(n_gates):
        kind = rng.choice(kinds)
        if kind in ("INV", "EQW"):
            ins = (rng.randrange(wire),)
        else:
            ins = (rng.randrange(wire), rng.randrange(wire))
        gates.append(Gate(kind, ins, wire))
        wire += 1
    if n_outputs is None:
        n_outputs = min(8, n_gates)
    header = CircuitHeader(n_gates=n_gates, n_wires=wire, inputs_a=inputs_a,
                           inputs_b=inputs_b, n_outputs=n_outputs,
                           output_dest=("both",) * n_outputs)
    return Circuit(header, gates)


def random_inputs(circuit: Circuit, rng: random.Random):
    return (BitVec.random(circuit.header.inputs_a, rng),
            BitVec.random(circuit.header.inputs_b, rng))


# ---------------------------------------------------------------------------
# two-party execution


def run_two(fn_a, fn_b, timeout: float = 60.0):
    """Run the two closures over a fresh in-memory channel pair."""
    ca, cb = memory_pair(timeout=timeout)
    return run_pair(lambda: fn_a(ca), lambda: fn_b(cb), timeout=timeout)


def eval_two(circuit: Circuit, store_a, store_b, xa: BitVec, xb: BitVec,
             timeout: float = 60.0, tamper_a=None, tamper_b=None,
             chunk_size: int = 1024):
    """Evaluate circuit with both runtimes; returns (out_a, out_b, rt_a, rt_b)."""
    from macbits.runtime_2pc import Runtime

    ca, cb = memory_pair(timeout=timeout)
    rt_a = Runtime(ca, Role.ALICE, store_a, tamper=tamper_a,
                   chunk_size=chunk_size)
    rt_b = Runtime(cb, Role.BOB, store_b, tamper=tamper_b,
                   chunk_size=chunk_size)
    out_a, out_b = run_pair(lambda: rt_a.evaluate(circuit, xa),
                            lambda: rt_b.evaluate(circuit, xb),
                            timeout=timeout, channels=(ca, cb))
    return out_a, out_b, rt_a, rt_b


# ---------------------------------------------------------------------------
# adversary games

# These loop many protocol rounds over one channel pair; every abort in the
# games below surfaces at the trailing EQ, after all other traffic, so the
# channel stays in lockstep between rounds.


def labit_cheat_survivals(m: int, trials: int, seed: int, tau: int = 4,
                          ell: int = 4, kappa: int = 16) -> int:
    """Sender uses a wrong offset in OT i for i < m (distinct offsets, so
    colliding pairs cannot cancel); survive means the pairing check passed."""
    from macbits.abit_proto import labit_receiver, labit_sender
    from macbits.base_ot import DealerOt
    from macbits.errors import ProtocolAbort

    ca, cb = memory_pair(timeout=120.0)
    ca.kappa = cb.kappa = kappa
    offsets = [BitVec(ell, k + 1) for k in range(m)]

    def tamper(i, m0, m1):
        if i < m:
            return m0, m1 ^ offsets[i]
        return m0, m1

    def sender():
        rng = random.Random(seed)
        backend = DealerOt(ca, rng)
        wins = 0
        for _ in range(trials):
            try:
                labit_sender(ca, tau, ell, rng, backend, offer_tamper=tamper)
                wins += 1
            except ProtocolAbort:
                pass
        return wins

    def receiver():
        rng = random.Random(seed + 1)
        backend = DealerOt(cb)
        for _ in range(trials):
            try:
                labit_receiver(cb, tau, ell, rng, backend)
            except ProtocolAbort:
                pass

    wins, _ = run_pair(sender, receiver, timeout=600)
    return wins


def laot_probe_outcomes(trials: int, seed: int, kappa: int = 16):
    """Sender garbles the MAC field of branch 1 in a single-quad batch.
    Returns a list of (receiver_choice_bit, aborted) per trial."""
    from macbits.aot_proto import laot_receiver, laot_sender
    from macbits.errors import ProtocolAbort

    rng = random.Random(seed)
    dealer = OracleDealer(kappa, rng)
    outcomes = []
    for t in range(trials):
        qs, qr = dealer.quad(Role.ALICE)
        gk_b = dealer.delta[Role.BOB]
        gk_a = dealer.delta[Role.ALICE]

        def garble(i, b0, b1):
            # flip a MAC bit (payload bit 1) in the masked branch-1 blob
            return b0, bytes([b1[0] ^ 2]) + b1[1:]

        ca, cb = memory_pair(timeout=30.0)
        ca.kappa = cb.kappa = kappa
        rng_a = random.Random(seed * 7 + t)
        try:
            run_pair(
                lambda: laot_sender(ca, [qs.x0], [qs.x1], [qs.kc], [qs.kz],
                                    gk_b, rng_a, payload_tamper=garble),
                lambda: laot_receiver(cb, [qr.c], [qr.z], [qr.kx0], [qr.kx1],
                                      gk_a),
                timeout=30, channels=(ca, cb))
            outcomes.append((qr.c.bit, False))
        except ProtocolAbort:
            outcomes.append((qr.c.bit, True))
    return outcomes


def laand_u_tamper_outcomes(trials: int, seed: int, kappa: int = 16):
    """Key side offsets its challenge U by a nonzero E on a single-triple
    batch. Returns a list of (mac_side_x_bit, aborted) per trial."""
    from macbits.aand_proto import laand_key_side, laand_mac_side
    from macbits.errors import ProtocolAbort

    rng = random.Random(seed)
    dealer = OracleDealer(kappa, rng)
    ca, cb = memory_pair(timeout=120.0)
    ca.kappa = cb.kappa = kappa
    gk = dealer.delta[Role.ALICE]

    batches = []
    for _ in range(trials):
        x, kx = dealer.abit(Role.ALICE)
        y, ky = dealer.abit(Role.ALICE)
        r, kr = dealer.abit(Role.ALICE)
        batches.append(((x, y, r), (kx, ky, kr)))

    def tamper(i, u):
        return bytes([u[0] ^ 0x5A]) + u[1:]

    def mac_side():
        rng_a = random.Random(seed + 1)
        outcomes = []
        for (x, y, r), _ in batches:
            try:
                laand_mac_side(ca, [x], [y], [r], rng_a)
                outcomes.append((x.bit, False))
            except ProtocolAbort:
                outcomes.append((x.bit, True))
        return outcomes

    def key_side():
        for _, (kx, ky, kr) in batches:
            try:
                laand_key_side(cb, [kx], [ky], [kr], gk, u_tamper=tamper)
            except ProtocolAbort:
                pass

    outcomes, _ = run_pair(mac_side, key_side, timeout=600)
    return outcomes
