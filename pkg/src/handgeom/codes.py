"""Binary BCH codes and class codebooks for output coding.

Polynomials over GF(2) are Python ints, bit i holding the coefficient of x^i.
Bit vectors are numpy uint8 arrays, most significant (first) bit first.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    InfeasibleDimensions, InvalidParameters, LengthMismatch, TooLargeToEnumerate, TooManyClasses, WrongLength,
)

# primitive polynomials for GF(2^m)
PRIMITIVE = {3: 0b1011, 4: 0b10011, 5: 0b100101}
ENUMERATION_LIMIT = 21


def _gf_tables(m: int) -> tuple[list[int], list[int]]:
    n = (1 << m) - 1
    exp = [0] * (2 * n)
    log = [0] * (n + 1)
    x = 1
    for i in range(n):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= PRIMITIVE[m]
    for i in range(n, 2 * n):
        exp[i] = exp[i - n]
    return exp, log


def _cyclotomic_coset(i: int, n: int) -> tuple[int, ...]:
    coset, e = [], i % n
    while e not in coset:
        coset.append(e)
        e = (2 * e) % n
    return tuple(sorted(coset))


def minimal_polynomial(i: int, m: int) -> int:
    """Minimal polynomial of alpha^i over GF(2), as a bit mask."""
    n = (1 << m) - 1
    exp, log = _gf_tables(m)
    # coefficients in GF(2^m), lowest degree first
    poly = [1]
    for e in _cyclotomic_coset(i, n):
        root = exp[e]
        nxt = [0] * (len(poly) + 1)
        for d, c in enumerate(poly):
            nxt[d + 1] ^= c
            if c:
                nxt[d] ^= exp[log[c] + log[root]]
        poly = nxt
    if any(c not in (0, 1) for c in poly):
        raise AssertionError("minimal polynomial is not binary")
    return sum(c << d for d, c in enumerate(poly))


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, g: int) -> int:
    dg = g.bit_length()
    while a.bit_length() >= dg:
        a ^= g << (a.bit_length() - dg)
    return a


def _generator(n: int, t: int) -> int:
    m = n.bit_length()
    seen, g = set(), 1
    for i in range(1, 2 * t + 1):
        coset = _cyclotomic_coset(i, n)
        if coset not in seen:
            seen.add(coset)
            g = poly_mul(g, minimal_polynomial(i, m))
    return g


def valid_pairs() -> dict[tuple[int, int], int]:
    """All narrow-sense primitive BCH (n, k) for n in {7, 15, 31}, mapped to their t."""
    out = {}
    for m in PRIMITIVE:
        n = (1 << m) - 1
        for t in range(1, n // 2 + 1):
            k = n - (_generator(n, t).bit_length() - 1)
            if k >= 1:
                out[n, k] = t  # later (larger) t wins for the same k
    return out


_VALID = valid_pairs()


@dataclass(frozen=True)
class BchCode:
    n: int
    k: int
    t: int
    generator: int

    @property
    def m(self) -> int:
        return self.n.bit_length()

    def generator_coefficients(self) -> list[int]:
        """Generator coefficients, highest degree first."""
        return [(self.generator >> d) & 1 for d in range(self.n - self.k, -1, -1)]

    @cached_property
    def generator_rows(self) -> np.ndarray:
        """Codeword ints of the unit messages, message bit 0 (MSB) first."""
        return np.array([_encode_int(self, 1 << (self.k - 1 - i)) for i in range(self.k)], dtype=np.int64)

    @cached_property
    def codeword_ints(self) -> np.ndarray:
        """Every codeword as an int, indexed by message int."""
        if self.k > ENUMERATION_LIMIT:
            raise TooLargeToEnumerate(f"2^{self.k} codewords exceeds the 2^{ENUMERATION_LIMIT} bound")
        cw = np.zeros(1, dtype=np.int64)
        # message int u has bit (k-1-i) set for row i; build lowest bits first
        for row in self.generator_rows[::-1]:
            cw = np.concatenate([cw, cw ^ row])
        return cw


def bch_new(n: int, k: int) -> BchCode:
    if (n, k) not in _VALID:
        raise InvalidParameters(f"({n}, {k}) is not a supported BCH code")
    t = _VALID[n, k]
    g = _generator(n, t)
    return BchCode(n, k, t, g)


def _encode_int(code: BchCode, u: int) -> int:
    shifted = u << (code.n - code.k)
    return shifted ^ poly_mod(shifted, code.generator)


def bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def int_to_bits(v: int, width: int) -> np.ndarray:
    return np.array([(v >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bch_encode(code: BchCode, message) -> np.ndarray:
    """Systematic encoding: the k message bits followed by n - k parity bits."""
    msg = np.asarray(message, dtype=np.uint8).ravel()
    if msg.size != code.k:
        raise WrongLength(f"message has {msg.size} bits, code needs {code.k}")
    if ((msg != 0) & (msg != 1)).any():
        raise ValueError("message bits must be 0/1")
    return int_to_bits(_encode_int(code, bits_to_int(msg)), code.n)


def is_codeword(code: BchCode, word) -> bool:
    return poly_mod(bits_to_int(word), code.generator) == 0


def min_distance(code: BchCode) -> int:
    """Minimum nonzero codeword weight by full enumeration."""
    cw = code.codeword_ints
    return int(np.bitwise_count(cw[1:]).min())


def nearest_codeword(code: BchCode, word) -> np.ndarray | None:
    """Closest codeword in Hamming distance, ties to the lowest message.

    Enumerates codewords when k <= 21; otherwise searches error patterns of
    weight <= t and returns None when nothing lies within t.
    """
    r = bits_to_int(word)
    if code.k <= ENUMERATION_LIMIT:
        d = np.bitwise_count(code.codeword_ints ^ r)
        return int_to_bits(int(code.codeword_ints[int(np.argmin(d))]), code.n)
    for w in range(code.t + 1):
        for pos in itertools.combinations(range(code.n), w):
            e = sum(1 << p for p in pos)
            if poly_mod(r ^ e, code.generator) == 0:
                return int_to_bits(r ^ e, code.n)
    return None


# -- codebooks ----------------------------------------------------------------

class CodebookKind(str, enum.Enum):
    ONE_PER_CLASS = "ONE_PER_CLASS"
    BCH_ECOC = "BCH_ECOC"
    RANDOM_ECOC = "RANDOM_ECOC"


def _pairwise_hamming(rows: np.ndarray) -> np.ndarray:
    r = rows.astype(np.int64)
    return (r[:, None, :] != r[None, :, :]).sum(axis=2)


@dataclass(frozen=True, eq=False)
class Codebook:
    rows: np.ndarray
    kind: CodebookKind
    source: str = ""

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[0] < 2 or rows.shape[1] < 1:
            raise ValueError("codebook needs at least 2 classes and 1 bit")
        if ((rows != 0) & (rows != 1)).any():
            raise ValueError("codebook entries must be 0/1")
        if len({r.tobytes() for r in rows}) != rows.shape[0]:
            raise ValueError("codebook rows must be distinct")
        if (rows.min(axis=0) == rows.max(axis=0)).any():
            raise ValueError("codebook has a constant column")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "kind", CodebookKind(self.kind))

    @property
    def classes(self) -> int:
        return self.rows.shape[0]

    @property
    def bits(self) -> int:
        return self.rows.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.rows, other.rows)

    def row_min_distance(self) -> int:
        d = _pairwise_hamming(self.rows)
        return int(d[np.triu_indices(self.classes, 1)].min())

    def column_min_distance(self) -> int:
        """Min pairwise column distance, a column and its complement counted as equal."""
        if self.bits < 2:
            return 0
        d = _pairwise_hamming(self.rows.T)
        d = np.minimum(d, self.classes - d)
        return int(d[np.triu_indices(self.bits, 1)].min())

    def targets(self) -> np.ndarray:
        """Rows mapped 0 -> -1, 1 -> +1."""
        return 2.0 * self.rows.astype(np.float64) - 1.0

    def ref(self) -> str:
        return self.source or f"{self.kind.value.lower()}:{self.classes}x{self.bits}"

    def to_text(self) -> str:
        lines = [f"{self.classes} {self.bits} {self.kind.value}"]
        lines += ["".join(str(int(b)) for b in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "") -> "Codebook":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        classes, bits, kind = lines[0].split()
        rows = np.array([[int(c) for c in ln] for ln in lines[1:]], dtype=np.uint8)
        if rows.shape != (int(classes), int(bits)):
            raise ValueError("codebook header does not match its rows")
        return cls(rows, CodebookKind(kind), source)


def one_per_class(classes: int) -> Codebook:
    if classes < 2:
        raise ValueError("need at least 2 classes")
    return Codebook(np.eye(classes, dtype=np.uint8), CodebookKind.ONE_PER_CLASS, f"one_per_class:{classes}")


def ecoc_from_bch(code: BchCode, classes: int) -> Codebook:
    """Class i gets encode(binary(i)); columns constant over the used classes are dropped."""
    if classes > (1 << code.k):
        raise TooManyClasses(f"{classes} classes exceed 2^{code.k} messages")
    if classes < 2:
        raise ValueError("need at least 2 classes")
    rows = np.array([bch_encode(code, int_to_bits(i, code.k)) for i in range(classes)], dtype=np.uint8)
    keep = rows.min(axis=0) != rows.max(axis=0)
    return Codebook(rows[:, keep], CodebookKind.BCH_ECOC, f"bch:{code.n},{code.k}:{classes}")


def random_ecoc(classes: int, bits: int, iterations: int = 500, seed=0,
                max_draws: int = 10_000) -> tuple[Codebook, int, int]:
    """Best of `iterations` random codebooks by (row distance, column distance).

    Columns are complemented so the first row is all zeros; this leaves both
    distances unchanged.
    """
    if classes < 2 or bits < max(1, math.ceil(math.log2(classes))) or iterations < 1:
        raise InfeasibleDimensions(f"cannot place {classes} distinct codewords in {bits} bits")
    rng = np.random.default_rng(seed)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    best = None
    for _ in range(iterations):
        for _ in range(max_draws):
            if bits <= 62:
                ints = rng.choice(1 << bits, size=classes, replace=False)
                rows = ((ints[:, None] >> shifts) & 1).astype(np.uint8)
            else:
                rows = rng.integers(0, 2, size=(classes, bits), dtype=np.uint8)
                if len({r.tobytes() for r in rows}) != classes:
                    continue
            if (rows.min(axis=0) != rows.max(axis=0)).all():
                break
        else:
            raise InfeasibleDimensions(f"no valid {classes}x{bits} codebook in {max_draws} draws")
        rows = rows ^ rows[0]
        book = Codebook(rows, CodebookKind.RANDOM_ECOC, f"random:{classes}x{bits}")
        score = (book.row_min_distance(), book.column_min_distance())
        if best is None or score > best[0]:
            best = (score, book)
    (hc, hl), book = best
    return book, hc, hl


def decode_distances(outputs, book: Codebook, metric: str = "mse") -> np.ndarray:
    """Normalized distance in [0, 1] from an output vector to every ±1 codeword."""
    o = np.asarray(outputs, dtype=np.float64)
    if o.shape[-1] != book.bits:
        raise LengthMismatch(f"{o.shape[-1]} outputs for a {book.bits}-bit codebook")
    diff = o[..., None, :] - book.targets()
    metric = metric.lower()
    if metric == "mse":
        return (diff**2).sum(axis=-1) / (4.0 * book.bits)
    if metric == "mad":
        return np.abs(diff).sum(axis=-1) / (2.0 * book.bits)
    raise ValueError(f"unknown metric {metric!r}")


def hamming_decode(outputs, book: Codebook, metric: str = "mse") -> tuple[int, np.ndarray]:
    """Winning class and per-class score 1 - distance; ties go to the lowest index."""
    scores = 1.0 - decode_distances(outputs, book, metric)
    return int(np.argmax(scores)), scores
