"""Reference AES-128 built from byte tables, independent of the circuit code.

Classic construction: the S-box comes from inversion in GF(2^8) modulo
x^8 + x^4 + x^3 + x + 1 followed by the affine map; MixColumns uses xtime.
Used as the oracle that the gate-level generator is tested against.
"""


def _gf_mul(a: int, b: int) -> int:
    r = 0
    for _ in range(8):
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
    return r


def _gf_inv(a: int) -> int:
    if a == 0:
        return 0
    # a^254 by square and multiply
    r, p = 1, a
    e = 254
    while e:
        if e & 1:
            r = _gf_mul(r, p)
        p = _gf_mul(p, p)
        e >>= 1
    return r


def _affine(a: int) -> int:
    out = 0
    for i in range(8):
        bit = ((a >> i) ^ (a >> ((i + 4) % 8)) ^ (a >> ((i + 5) % 8))
               ^ (a >> ((i + 6) % 8)) ^ (a >> ((i + 7) % 8))) & 1
        out |= bit << i
    return out ^ 0x63


SBOX = tuple(_affine(_gf_inv(x)) for x in range(256))

assert SBOX[0x00] == 0x63 and SBOX[0x53] == 0xED and SBOX[0xFF] == 0x16


def _xtime(a: int) -> int:
    a <<= 1
    return (a ^ 0x1B) & 0xFF if a & 0x100 else a


def _key_schedule(key: bytes):
    words = [list(key[4 * i : 4 * i + 4]) for i in range(4)]
    rcon = 1
    for i in range(4, 44):
        w = list(words[i - 1])
        if i % 4 == 0:
            w = [SBOX[w[1]], SBOX[w[2]], SBOX[w[3]], SBOX[w[0]]]
            w[0] ^= rcon
            rcon = _xtime(rcon)
        words.append([w[j] ^ words[i - 4][j] for j in range(4)])
    return [bytes(b for w in words[4 * r : 4 * r + 4] for b in w)
            for r in range(11)]


def _sub_bytes(s):
    return [SBOX[b] for b in s]


def _shift_rows(s):
    # column-major state: s[r + 4c]
    out = [0] * 16
    for r in range(4):
        for c in range(4):
            out[r + 4 * c] = s[r + 4 * ((c + r) % 4)]
    return out


def _mix_columns(s):
    out = [0] * 16
    for c in range(4):
        col = s[4 * c : 4 * c + 4]
        for r in range(4):
            out[r + 4 * c] = (_xtime(col[r]) ^ _xtime(col[(r + 1) % 4])
                              ^ col[(r + 1) % 4] ^ col[(r + 2) % 4]
                              ^ col[(r + 3) % 4])
    return out


def aes128_encrypt(key: bytes, block: bytes) -> bytes:
    if len(key) != 16 or len(block) != 16:
        raise ValueError("AES-128 takes 16-byte key and block")
    rk = _key_schedule(key)
    s = [block[i] ^ rk[0][i] for i in range(16)]
    for rnd in range(1, 10):
        s = _mix_columns(_shift_rows(_sub_bytes(s)))
        s = [s[i] ^ rk[rnd][i] for i in range(16)]
    s = _shift_rows(_sub_bytes(s))
    return bytes(s[i] ^ rk[10][i] for i in range(16))


# Known vectors: the appendix example and two from the ECB known-answer set.
KNOWN_VECTORS = (
    (bytes.fromhex("000102030405060708090a0b0c0d0e0f"),
     bytes.fromhex("00112233445566778899aabbccddeeff"),
     bytes.fromhex("69c4e0d86a7b0430d8cdb78070b4c55a")),
    (bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"),
     bytes.fromhex("6bc1bee22e409f96e93d7e117393172a"),
     bytes.fromhex("3ad77bb40d7a3660a89ecaf32466ef97")),
    (bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"),
     bytes.fromhex("ae2d8a571e03ac9c9eb76fac45af8e51"),
     bytes.fromhex("f5d3d58503b9699de785895a96fdbaaf")),
)

for _k, _p, _c in KNOWN_VECTORS:
    assert aes128_encrypt(_k, _p) == _c
