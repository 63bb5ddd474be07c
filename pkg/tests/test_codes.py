import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from handgeom import codes
from handgeom.codes import Codebook, CodebookKind
from handgeom.errors import (
    InfeasibleDimensions, InvalidParameters, LengthMismatch, TooLargeToEnumerate, TooManyClasses, WrongLength,
)

# standard generator polynomials for the primitive polys x^3+x+1, x^4+x+1 (MSB = highest degree)
TEXTBOOK = {
    (7, 4): 0b1011,
    (15, 11): 0b10011,
    (15, 7): 0b111010001,
    (15, 5): 0b10100110111,
}
TABLE = [(7, 4, 1), (15, 11, 1), (15, 7, 2), (15, 5, 3), (31, 26, 1), (31, 21, 2), (31, 16, 3), (31, 11, 5),
         (31, 6, 7)]


@pytest.mark.parametrize("n,k,t", TABLE)
def test_bch_new_t(n, k, t):
    c = codes.bch_new(n, k)
    assert (c.n, c.k, c.t) == (n, k, t)
    assert c.generator.bit_length() - 1 == n - k
    # g(x) divides x^n - 1
    assert codes.poly_mod((1 << n) | 1, c.generator) == 0


@pytest.mark.parametrize("nk,g", TEXTBOOK.items())
def test_generators_match_reference(nk, g):
    assert codes.bch_new(*nk).generator == g


@pytest.mark.parametrize("nk", [(7, 5), (15, 9), (8, 4), (63, 57)])
def test_invalid_pairs(nk):
    with pytest.raises(InvalidParameters):
        codes.bch_new(*nk)


def test_gf_arithmetic():
    exp, log = codes._gf_tables(4)
    assert sorted(exp[:15]) == list(range(1, 16))
    assert codes.poly_mul(0b11, 0b11) == 0b101
    assert codes.minimal_polynomial(1, 4) == 0b10011
    assert codes._cyclotomic_coset(1, 15) == (1, 2, 4, 8)


def test_encode_zero_and_systematic():
    c = codes.bch_new(15, 7)
    assert not codes.bch_encode(c, np.zeros(7)).any()
    msg = np.array([1, 0, 1, 1, 0, 0, 1])
    cw = codes.bch_encode(c, msg)
    assert np.array_equal(cw[:7], msg) and codes.is_codeword(c, cw)
    with pytest.raises(WrongLength):
        codes.bch_encode(c, np.zeros(6))


def test_7_4_pairwise_distance_by_enumeration():
    c = codes.bch_new(7, 4)
    words = [codes.bch_encode(c, np.array(m)) for m in itertools.product([0, 1], repeat=4)]
    d = min(int((a != b).sum()) for a, b in itertools.combinations(words, 2))
    assert d == 3 == codes.min_distance(c)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(TABLE), st.data())
def test_encode_linear(row, data):
    n, k, _ = row
    c = codes.bch_new(n, k)
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=k, max_size=k)))
    v = np.array(data.draw(st.lists(st.integers(0, 1), min_size=k, max_size=k)))
    assert np.array_equal(codes.bch_encode(c, u) ^ codes.bch_encode(c, v), codes.bch_encode(c, u ^ v))


@pytest.mark.parametrize("n,k,t", [r for r in TABLE if r[1] <= 21])
def test_min_distance_bound(n, k, t):
    assert codes.min_distance(codes.bch_new(n, k)) >= 2 * t + 1


def test_min_distance_too_large():
    with pytest.raises(TooLargeToEnumerate):
        codes.min_distance(codes.bch_new(31, 26))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(TABLE), st.data())
def test_nearest_codeword_corrects_t_errors(row, data):
    n, k, t = row
    c = codes.bch_new(n, k)
    msg = np.array(data.draw(st.lists(st.integers(0, 1), min_size=k, max_size=k)))
    cw = codes.bch_encode(c, msg)
    flips = data.draw(st.lists(st.integers(0, n - 1), max_size=t, unique=True))
    r = cw.copy()
    r[flips] ^= 1
    assert np.array_equal(codes.nearest_codeword(c, r), cw)


def test_bch_ecoc_column_counts():
    for (n, k), cols in {(31, 6): 30, (15, 7): 13, (15, 5): 15}.items():
        book = codes.ecoc_from_bch(codes.bch_new(n, k), 22)
        assert book.bits == cols and book.kind is CodebookKind.BCH_ECOC
    with pytest.raises(TooManyClasses):
        codes.ecoc_from_bch(codes.bch_new(7, 4), 17)


def test_one_per_class():
    b = codes.one_per_class(22)
    assert np.array_equal(b.rows, np.eye(22))
    assert codes.one_per_class(2).rows.tolist() == [[1, 0], [0, 1]]
    assert b.row_min_distance() == 2


def test_codebook_invariants():
    with pytest.raises(ValueError):
        Codebook(np.array([[0, 1], [0, 1]]), CodebookKind.RANDOM_ECOC)
    with pytest.raises(ValueError):
        Codebook(np.array([[0, 1], [1, 1]]), CodebookKind.RANDOM_ECOC)


def test_codebook_text_roundtrip():
    b = codes.ecoc_from_bch(codes.bch_new(15, 5), 22)
    text = b.to_text()
    assert text.splitlines()[0] == "22 15 BCH_ECOC"
    assert Codebook.from_text(text) == b


def brute_column_distance(rows):
    c = rows.shape[0]
    return min(min(int((a != b).sum()), c - int((a != b).sum())) for a, b in itertools.combinations(rows.T, 2))


def test_random_ecoc_examples():
    b, hc, hl = codes.random_ecoc(2, 1, 1, seed=0)
    assert b.rows.tolist() == [[0], [1]] and hc == 1
    b1, hc1, hl1 = codes.random_ecoc(22, 15, 50, seed=3)
    b2, hc2, hl2 = codes.random_ecoc(22, 15, 50, seed=3)
    assert b1 == b2 and (hc1, hl1) == (hc2, hl2)
    assert hc1 == b1.row_min_distance()
    assert hl1 == brute_column_distance(b1.rows)
    with pytest.raises(InfeasibleDimensions):
        codes.random_ecoc(22, 4, 10)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_ecoc_more_iterations_never_worse(seed):
    _, hc1, hl1 = codes.random_ecoc(22, 30, 1, seed=seed)
    _, hc, hl = codes.random_ecoc(22, 30, 500, seed=seed)
    assert (hc, hl) >= (hc1, hl1)


def test_hamming_decode_examples():
    b = codes.ecoc_from_bch(codes.bch_new(15, 7), 22)
    cls, s = codes.hamming_decode(b.targets()[3], b)
    assert cls == 3 and s[3] == 1.0
    assert codes.hamming_decode(-b.targets()[3], b)[1][3] == 0.0
    # halfway between codewords 0 and 1 of a one-per-class book
    opc = codes.one_per_class(4)
    cls, s = codes.hamming_decode(np.array([0.0, 0.0, -1.0, -1.0]), opc)
    assert cls == 0 and s[0] == s[1]
    with pytest.raises(LengthMismatch):
        codes.hamming_decode(np.zeros(3), b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["mse", "mad"]))
def test_hamming_decode_matches_brute_force(seed, metric):
    rng = np.random.default_rng(seed)
    b = codes.ecoc_from_bch(codes.bch_new(31, 6), 22)
    o = rng.uniform(-1, 1, b.bits)
    best, best_d = None, np.inf
    for i, row in enumerate(b.rows):
        t = [1.0 if x else -1.0 for x in row]
        if metric == "mse":
            d = sum((oi - ti) ** 2 for oi, ti in zip(o, t)) / (4 * b.bits)
        else:
            d = sum(abs(oi - ti) for oi, ti in zip(o, t)) / (2 * b.bits)
        if d < best_d:
            best, best_d = i, d
    cls, s = codes.hamming_decode(o, b, metric)
    assert cls == best
    assert 1 - s[cls] == pytest.approx(best_d, abs=1e-12)
    assert ((s >= 0) & (s <= 1)).all()
