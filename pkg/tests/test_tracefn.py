import math

import numpy as np
import pytest

from expsums import oracles as O
from expsums import tracefn as T
from expsums.errors import (
    DegreeTooLarge,
    ExtensionTooLarge,
    NotDisjoint,
    PreconditionError,
    SingularMatrix,
    UnsupportedExtension,
)
from expsums.ffield import AddChar, MultChar, RationalFn, build_extension, build_prime_field, quadratic_char

F = {q: build_prime_field(q) for q in (3, 5, 7, 11, 13, 101, 211)}


def close(a, b, tol=1e-9):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) <= tol * max(1.0, np.max(np.abs(b)))


# -- catalog examples --------------------------------------------------------


def test_kl1_is_additive_character():
    K = T.kloosterman(F[5], 1)
    assert close(K.values[1:], [O.e(u / 5) for u in range(1, 5)])
    assert K.values[0] == 0


def test_kl2_q7_at_one():
    K = T.kloosterman(F[7], 2)
    assert abs(K.values[1] - 0.774417962472016) < 1e-12
    assert abs(K.values[1].imag) < 1e-12
    assert K.values[0] == 0
    assert K.real_valued and K.realness_ok()


def test_klchars_reduces_to_kl():
    cm = T.CharMultiset.of(F[7], (0, 0))
    assert close(T.kloosterman_chars(F[7], cm).values, T.kloosterman(F[7], 2).values)


def test_klchars_q5_quadratic_trivial():
    K = T.kloosterman_chars(F[5], T.CharMultiset.of(F[5], (2, 0)))
    # frozen from the 4-term double loop
    assert abs(K.values[1] - (-1.618033988749895)) < 1e-12


def test_klchars_single_character():
    ctx = F[11]
    chi = MultChar(ctx, 3)
    K = T.kloosterman_chars(ctx, T.CharMultiset.of(ctx, (3,)))
    assert close(K.values, chi.values() * ctx.psi(1))


def test_hypergeometric_examples():
    ctx = F[5]
    triv = T.CharMultiset.of(ctx, (0,))
    none = T.CharMultiset.of(ctx, ())
    assert close(T.hypergeometric(ctx, triv, none).values[1:], [O.e(u / 5) for u in range(1, 5)])
    two = T.CharMultiset.of(ctx, (0, 0))
    assert close(T.hypergeometric(ctx, two, none).values, T.kloosterman(ctx, 2).values)
    H = T.hypergeometric(ctx, T.CharMultiset.of(ctx, (2,)), triv)
    assert abs(H.values[2] - (-1.0)) < 1e-12  # frozen from the 16-term enumeration
    assert H.rank == 1


def test_hypergeometric_rejects_overlap():
    ctx = F[7]
    with pytest.raises(NotDisjoint):
        T.hypergeometric(ctx, T.CharMultiset.of(ctx, (1, 2)), T.CharMultiset.of(ctx, (2,)))


def test_toric_examples():
    assert close(T.toric_kernel(F[7], 1, 1, 1).values, T.kloosterman(F[7], 3).values)
    K = T.toric_kernel(F[5], 1, 1, 2)
    assert abs(K.values[1] - (-0.8)) < 1e-12  # 64-term enumeration
    with pytest.raises(PreconditionError):
        T.toric_kernel(F[7], 7, 1, 1)


def test_monomial_examples():
    assert close(T.monomial_product_sum(F[7], (1,)).values[1:], [O.e(v / 7) for v in range(1, 7)])
    assert close(T.monomial_product_sum(F[7], (1, 1)).values, T.kloosterman(F[7], 2).values)
    K = T.monomial_product_sum(F[5], (2, 1))
    assert abs(K.values[1] - (-0.13819660112501023 + 0.9510565162951535j)) < 1e-12


def test_fiber_examples():
    leg = quadratic_char(F[7]).values().real
    assert close(T.fiber_count(F[7], (0, 0, 1)).values, leg)
    K = T.fiber_count(F[11], (0, -3, 0, 1))
    assert list(np.rint(K.values.real).astype(int)) == [2, -1, 1, 0, 0, -1, -1, 0, 0, 1, -1]
    for q in (5, 7, 11):
        assert np.all(T.fiber_count(F[q], (0, 1)).values == 0)
    assert K.values.sum() == 0
    with pytest.raises(DegreeTooLarge):
        T.fiber_count(F[5], (0, 0, 0, 0, 0, 1))


def test_ftphase_examples():
    assert np.max(np.abs(T.poly_phase_ft(F[11], (0, 1)).values)) < 1e-12
    K2 = T.poly_phase_ft(F[7], (0, 0, 1))
    assert np.allclose(np.abs(K2.values[1:]), 1, atol=1e-12)
    K3 = T.poly_phase_ft(F[7], (0, 0, 0, 1))
    assert abs(K3.values[1] - 1.7919064393262094) < 1e-12
    assert K3.values[0] == 0


def test_rank_one_examples():
    ctx = F[7]
    X = RationalFn.parse("0,1", 7)
    zero = RationalFn.parse("0", 7)
    leg = T.rank_one(ctx, quadratic_char(ctx), X, zero)
    assert close(leg.values, quadratic_char(ctx).values())
    inv = T.rank_one(ctx, MultChar(ctx, 0), RationalFn.parse("1", 7), RationalFn.parse("1/0,1", 7))
    assert inv.values[0] == 0
    assert close(inv.values[1:], [O.e(pow(x, -1, 7) / 7) for x in range(1, 7)])
    K = T.rank_one(ctx, MultChar(ctx, 2), RationalFn.parse("1,1", 7), RationalFn.parse("0,0,1", 7))
    assert MultChar(ctx, 2).order == 3
    assert abs(K.values[2] - (0.8262387743159946 - 0.5633200580636223j)) < 1e-12
    assert K.values[6] == 0  # zero of f


def test_rank_one_needs_nontrivial_data():
    ctx = F[7]
    with pytest.raises(PreconditionError):
        T.rank_one(ctx, MultChar(ctx, 0), RationalFn.parse("0,1", 7), RationalFn.parse("3", 7))


# -- oracle equivalence ------------------------------------------------------


@pytest.mark.parametrize("q", [3, 5, 7, 11, 13])
def test_kloosterman_matches_oracle(q):
    for r in (1, 2, 3):
        assert close(T.kloosterman(F[q], r).values, O.kloosterman(q, r))
    if q <= 7:
        assert close(T.kloosterman(F[q], 4).values, O.kloosterman(q, 4))


@pytest.mark.parametrize("q", [5, 7, 11, 13])
def test_chars_and_hyp_match_oracle(q):
    ctx = F[q]
    h = (q - 1) // 2
    for js in ((1,), (1, h), (0, 1, 2)):
        assert close(T.kloosterman_chars(ctx, T.CharMultiset.of(ctx, js)).values, O.kloosterman_chars(ctx, js))
    for chi, rho in (((1,), (2,)), ((0, 1), (h,)), ((h,), (0,))):
        H = T.hypergeometric(ctx, T.CharMultiset.of(ctx, chi), T.CharMultiset.of(ctx, rho))
        assert close(H.values, O.hypergeometric(ctx, chi, rho))
    H = T.hypergeometric(ctx, T.CharMultiset.of(ctx, (1,)), T.CharMultiset.of(ctx, (2,)), AddChar(ctx, 3))
    assert close(H.values, O.hypergeometric(ctx, (1,), (2,), t=3))


@pytest.mark.parametrize("q", [5, 7, 11, 13])
def test_hyp_without_rho_equals_klchars(q):
    ctx = F[q]
    for js in ((1,), (0, 2), (1, 1, 3)):
        cm = T.CharMultiset.of(ctx, js)
        a = T.hypergeometric(ctx, cm, T.CharMultiset.of(ctx, ())).values
        assert close(a, T.kloosterman_chars(ctx, cm).values)


@pytest.mark.parametrize("q", [5, 7, 11, 13])
def test_toric_monomial_fiber_ftphase_oracles(q):
    ctx = F[q]
    for abc in ((1, 1, 1), (1, 2, 3), (1, -1, 2), (-2, 1, 1)):
        if any(x % q == 0 for x in abc):
            continue
        assert close(T.toric_kernel(ctx, *abc).values, O.toric(q, *abc))
    for exps in ((2, 1), (1, 3), (2, 2, 1)):
        assert close(T.monomial_product_sum(ctx, exps).values, O.monomial(q, exps))
    for f in ((0, 0, 1), (1, -3, 0, 1), (0, 2, 0, 0, 1)):
        if len(f) - 1 < q:
            assert close(T.fiber_count(ctx, f).values, O.fiber(q, f))
            assert close(T.poly_phase_ft(ctx, f).values, O.ftphase(q, f))


def test_fft_path_matches_direct():
    for q in (11, 101, 211):
        for r in (2, 3, 4):
            a = T.kloosterman(F[q], r, method="direct").values
            b = T.kloosterman(F[q], r, method="fft").values
            assert close(a, b)
    ctx = F[101]
    a = T.toric_kernel(ctx, 1, 2, -1).values
    b = T.toric_kernel(ctx, 1, 2, -1, method="fft").values
    assert close(a, b)


def test_toric_equals_kl3_q101():
    assert close(T.toric_kernel(F[101], 1, 1, 1).values, T.kloosterman(F[101], 3).values)


# -- invariants --------------------------------------------------------------


@pytest.mark.parametrize("q", [101, 211])
@pytest.mark.parametrize("r", [2, 3])
def test_parseval_window(q, r):
    K = T.kloosterman(F[q], r)
    assert abs(np.sum(np.abs(K.values[1:]) ** 2) - q) <= 5 * r * r * math.sqrt(q)


@pytest.mark.parametrize("q", [3, 5, 7, 11, 13, 101])
def test_conjugation_symmetry(q):
    u = np.arange(q)
    for r in (1, 2, 3):
        K = T.kloosterman(F[q], r)
        assert np.allclose(np.conj(K.values), K.values[((-1) ** r * u) % q], atol=1e-9)


def test_purity():
    for q in (101, 211):
        for r in (1, 2, 3, 4):
            K = T.kloosterman(F[q], r)
            assert K.purity_ok() and K.sup_norm <= r + 1e-9
    assert T.toric_kernel(F[101], 1, 2, 3).purity_ok()


def test_pullback_identity_and_translation():
    K = T.kloosterman(F[7], 2)
    assert np.array_equal(T.pullback(K, ((1, 0), (0, 1))).values, K.values)
    h = 3
    sh = T.pullback(K, ((1, h), (0, 1)))
    assert np.array_equal(sh.values, K.values[(np.arange(7) + h) % 7])


def test_pullback_power():
    K = T.kloosterman(F[7], 2)
    P2 = T.pullback_power(K, 2)
    assert P2.values[3] == K.values[2]
    Pm = T.pullback_power(K, -1)
    assert Pm.values[0] == 0  # pole maps to K(inf) = 0
    assert Pm.values[3] == K.values[5]


@pytest.mark.parametrize("gamma", [((1, 3), (0, 1)), ((2, 1), (5, 4)), ((0, 1), (1, 0)), ((3, 0), (1, 1))])
def test_pullback_roundtrip_exact(gamma):
    K = T.kloosterman(F[11], 3)
    back = T.pullback(T.pullback(K, gamma), T.inverse_matrix(gamma, 11))
    assert np.array_equal(back.values, K.values)
    assert back.at_infinity == K.at_infinity


def test_pullback_singular():
    K = T.kloosterman(F[7], 2)
    with pytest.raises(SingularMatrix):
        T.pullback(K, ((1, 2), (2, 4)))


def test_tables_are_read_only():
    K = T.kloosterman(F[7], 2)
    with pytest.raises(ValueError):
        K.values[1] = 0


# -- structure --------------------------------------------------------------


def test_kummer_induction():
    ctx = F[13]
    assert T.is_kummer_induced(T.CharMultiset.of(ctx, (0, 6))) == (True, 2)
    assert T.is_kummer_induced(T.CharMultiset.of(ctx, (0,))) == (False, None)
    assert T.is_kummer_induced(T.CharMultiset.of(F[7], (0, 1))) == (False, None)
    assert T.is_kummer_induced(T.CharMultiset.of(ctx, (1, 5, 9))) == (True, 3)


def test_kummer_brute_force():
    ctx = F[7]
    import itertools

    for js in itertools.combinations_with_replacement(range(6), 2):
        cm = T.CharMultiset.of(ctx, js)
        brute = any(
            sorted((j + 6 // d) % 6 for j in js) == sorted(js) for d in (2,)
        )
        assert T.is_kummer_induced(cm)[0] == brute


def test_supermorse():
    ctx = F[13]
    assert T.is_supermorse(ctx, (0, -6, 0, 0, 0, 0, 1))
    assert T.is_supermorse(ctx, (0, 0, 1))
    assert not T.is_supermorse(ctx, (0, 0, 0, 1))
    with pytest.raises(DegreeTooLarge):
        T.is_supermorse(F[5], (0,) * 5 + (1,))


def test_critical_value_poly_matches_enumeration():
    ctx = F[11]
    f = (0, -6, 0, 0, 0, 0, 1)
    ext, pts, vals = T.critical_values(ctx, f)
    from expsums import poly as Pm

    cv = T.critical_value_poly(f, 11)
    # every critical value is a root of the resultant polynomial
    assert np.all(ext.eval_poly(cv, vals) == 0)
    assert len(set(vals.tolist())) == len(vals) == 5
    assert Pm.degree(cv) == 5


def test_sidon():
    assert T.sidon_critical_values(F[7], (0, 0, 1))
    # X^3 - 3X at q=11: critical values +-2, a pair summing to zero but no collision
    assert T.sidon_critical_values(F[11], (0, -3, 0, 1))
    # X^5 - 5X has critical values in {+-4, +-4i}: a + (-a) = b + (-b) violates Sidon
    assert not T.sidon_critical_values(F[13], (0, -5, 0, 0, 0, 1))


def test_sidon_extension_cap():
    from expsums.ffield import smallest_irreducible

    # f' irreducible of degree 7: the critical points live in F_{11^7}
    fp = smallest_irreducible(11, 7)
    f = (0,) + tuple(c * pow(i + 1, -1, 11) % 11 for i, c in enumerate(fp))
    with pytest.raises(ExtensionTooLarge):
        T.sidon_critical_values(F[11], f)


# -- identifiers and export --------------------------------------------------


@pytest.mark.parametrize(
    "label",
    ["kl:2", "klchars:1,3@2", "hyp:1/2", "toric:1,1,2", "monomial:2,1", "fiber:0,0,1", "ftphase:0,0,0,1",
     "rank1:3;0,1;0"],
)
def test_build_kernel_labels(label):
    K = T.build_kernel(label, F[7])
    assert K.label == label
    assert K.q == 7


def test_build_kernel_errors():
    with pytest.raises(ValueError):
        T.build_kernel("nope:1", F[7])
    ext = build_extension(F[5], 2)
    with pytest.raises(UnsupportedExtension):
        T.build_kernel("toric:1,1,1", ext)
    K = T.build_kernel("kl:2", ext)
    assert K.q == 25 and K.sup_norm <= 2
    with pytest.raises(UnsupportedExtension):
        T.retabulate(T.pullback_power(T.kloosterman(F[5], 2), 2), ext)


def test_kl_over_extension_matches_brute_force():
    ext = build_extension(F[3], 2)
    Q, p = ext.size, 3
    psi = ext.psi(1)
    brute = np.zeros(Q, dtype=complex)
    for x in range(1, Q):
        for y in range(1, Q):
            brute[ext.mul(x, y)] += psi[x] * psi[y]
    brute /= math.sqrt(Q)
    assert close(T.kloosterman(ext, 2).values, brute)


def test_csv_roundtrip():
    K = T.kloosterman(F[11], 3)
    assert np.array_equal(T.read_csv(K.to_csv()), K.values)


def test_binary_roundtrip():
    K = T.build_kernel("klchars:1,3@2", F[13])
    data = K.to_bytes()
    assert data[:4] == b"KTAB"
    q, label, vals = T.read_binary(data)
    assert (q, label) == (13, K.label)
    assert np.array_equal(vals, K.values)
    with pytest.raises(ValueError):
        T.read_binary(b"XXXX" + data[4:])
