import random

import pytest

from macbits.bitlinalg import BitVec
from macbits.eq_box import _commitment, eq_commit_side, eq_respond_side
from macbits.errors import ProtocolError
from macbits.transport import MsgType, memory_pair, run_pair


def pair16():
    a, b = memory_pair(timeout=10.0)
    a.kappa = b.kappa = 16
    return a, b


def run_eq(x: BitVec, y: BitVec):
    a, b = pair16()
    rng = random.Random(0)
    return run_pair(lambda: eq_commit_side(a, x, rng),
                    lambda: eq_respond_side(b, y))


def test_equal_inputs_both_true():
    v = BitVec.from_bytes(16, b"\xde\xad")
    assert run_eq(v, v) == (True, True)


def test_single_bit_difference_both_false():
    v = BitVec.from_bytes(16, b"\xde\xad")
    assert run_eq(v, v ^ BitVec(16, 1)) == (False, False)


def test_completeness_exhaustive_small():
    for n in range(1, 9):
        for val in range(1 << n):
            v = BitVec(n, val)
            assert run_eq(v, v) == (True, True)


def test_commitment_deterministic():
    x = BitVec(16, 0x1234)
    r = BitVec(16, 0x5678)
    assert _commitment(16, x, r) == _commitment(16, x, r)
    assert _commitment(16, x, r) != _commitment(16, x ^ BitVec(16, 1), r)


def test_mismatch_reveals_committed_value():
    # on mismatch the responder has seen the opened value; the box contract
    # is that both strings leak
    x = BitVec(8, 0b10110010)
    a, b = pair16()
    seen = {}

    def responder():
        b.recv(MsgType.EQ_COMMIT)
        b.send(MsgType.EQ_VALUE, b"\x00\x00\x00\x08\x55")
        opening = b.recv(MsgType.EQ_OPEN)
        seen["x"] = BitVec.from_bytes(8, opening[4:5])
        return None

    run_pair(lambda: eq_commit_side(a, x, random.Random(1)), responder)
    assert seen["x"] == x


def test_forged_opening_rejected():
    # commit to x but open to x' with fresh randomness: responder says no
    rng = random.Random(2)
    for _ in range(300):
        x = BitVec.random(16, rng)
        x2 = x ^ BitVec(16, 1 << rng.randrange(16))
        a, b = pair16()

        def cheat():
            r = BitVec.random(16, rng)
            a.send(MsgType.EQ_COMMIT, _commitment(16, x, r))
            a.recv(MsgType.EQ_VALUE)
            r2 = BitVec.random(16, rng)
            a.send(MsgType.EQ_OPEN, b"\x00\x00\x00\x10" + x2.to_bytes() + r2.to_bytes())

        _, verdict = run_pair(cheat, lambda: eq_respond_side(b, x2))
        assert verdict is False


def test_binding_rate_at_reduced_kappa():
    """Forging an opening for x' != x succeeds only by hitting the truncated
    commitment: rate about 2^-16 at kappa=16."""
    rng = random.Random(3)
    trials = 1_000_000
    hits = 0
    x = BitVec(16, 0xAAAA)
    r = BitVec.random(16, rng)
    target = _commitment(16, x, r)
    x2 = BitVec(16, 0x5555)
    for _ in range(trials):
        if _commitment(16, x2, BitVec.random(16, rng)) == target:
            hits += 1
    assert hits / trials <= 10 * 2**-16


def test_bad_commitment_length_rejected():
    a, b = pair16()

    def sender():
        a.send(MsgType.EQ_COMMIT, b"toolongforkappa16")
        return None

    with pytest.raises(ProtocolError):
        run_pair(sender, lambda: eq_respond_side(b, BitVec(8, 0)),
                 channels=(a, b))


def test_truncated_opening_rejected():
    a, b = pair16()

    def sender():
        x = BitVec(8, 3)
        r = BitVec(16, 7)
        a.send(MsgType.EQ_COMMIT, _commitment(16, x, r))
        a.recv(MsgType.EQ_VALUE)
        a.send(MsgType.EQ_OPEN, b"\x00\x00\x00\x08\x03")  # missing r

    with pytest.raises(ProtocolError):
        run_pair(sender, lambda: eq_respond_side(b, BitVec(8, 3)),
                 channels=(a, b))
