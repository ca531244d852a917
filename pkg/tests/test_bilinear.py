import math

import numpy as np
import pytest

from expsums import bilinear as B
from expsums import oracles as O
from expsums import tracefn as T
from expsums.errors import BadExponent, ConstraintViolation, RangeViolation
from expsums.ffield import build_prime_field

F = {q: build_prime_field(q) for q in (11, 101, 1009)}
K2 = T.kloosterman(F[101], 2)
K3 = T.kloosterman(F[101], 3)


def brute_bilinear(K, b, c, alpha, beta):
    q = K.q
    tot = 0j
    for i, m in enumerate(alpha.support.tolist()):
        for j, n in enumerate(beta.support.tolist()):
            tot += alpha.values[i] * beta.values[j] * K.values[pow(m, b, q) * pow(n, c, q) % q]
    return tot


# -- coefficient sequences --------------------------------------------------


def test_coefseq_basics():
    a = B.CoefSeq.random_unit(7, 3)
    assert a.start == 7 and list(a.support) == list(range(7, 14))
    assert math.isclose(a.l2, math.sqrt(7)) and math.isclose(a.l1, 7)
    assert np.array_equal(a.values, B.CoefSeq.random_unit(7, 3).values)
    s = B.CoefSeq.random_sign(9, 1)
    assert set(s.values.real.tolist()) <= {-1.0, 1.0}
    with pytest.raises(RangeViolation):
        B.CoefSeq(3, np.ones(4))
    with pytest.raises(ValueError):
        B.CoefSeq.generate("nope", 3)


# -- Type I / II / trilinear ----------------------------------------------


def test_type1_zero_coefficients():
    assert B.type1_sum(K2, 1, 1, B.CoefSeq.zeros(10), 10).value == 0


def test_type1_example():
    rep = B.type1_sum(K2, 1, 1, B.CoefSeq.ones(10), 10)
    assert abs(rep.value - 3.389291893811889) < 1e-9  # 100-term oracle
    assert rep.trivial_bound == pytest.approx(10 * 10 * K2.sup_norm)
    assert 0 <= rep.ratio <= 1


def test_type2_zero_beta():
    assert B.type2_sum(K2, 1, 1, B.CoefSeq.ones(5), B.CoefSeq.zeros(6)).value == 0


def test_type2_example_kl3():
    one = B.CoefSeq.ones(8)
    a = B.type2_sum(K3, 1, 1, one, one).value
    b = B.type2_sum(T.toric_kernel(F[101], 1, 1, 1), 1, 1, one, one).value
    assert abs(a - (1.4064441779524224 - 8.34080407120683j)) < 1e-9
    assert abs(a - b) < 1e-9


@pytest.mark.parametrize("b,c", [(1, 1), (2, 1), (-1, 3), (3, -2)])
def test_type2_matches_brute(b, c):
    al = B.CoefSeq.random_unit(6, b + 10)
    be = B.CoefSeq.random_unit(9, c + 20)
    assert abs(B.type2_sum(K3, b, c, al, be).value - brute_bilinear(K3, b, c, al, be)) < 1e-9
    assert abs(B.type1_sum(K3, b, c, al, 9).value - brute_bilinear(K3, b, c, al, B.CoefSeq.ones(9))) < 1e-9


def test_trilinear_example():
    one = B.CoefSeq.ones(4)
    rep = B.trilinear_sum(K2, 1, 1, 1, one, one, one)
    assert abs(rep.value - (-11.879463817114548)) < 1e-9
    assert abs(rep.value - O.trilinear(list(K2.values), 101, 1, 1, 1, [1] * 4, 4, [1] * 4, 4, [1] * 4, 4)) < 1e-9


def test_trilinear_range_checks():
    one = B.CoefSeq.ones
    with pytest.raises(RangeViolation):
        B.trilinear_sum(K2, 1, 1, 1, one(500), one(2), one(2))
    with pytest.raises(RangeViolation):
        B.trilinear_sum(K2, 1, 1, 1, one(2), one(30), one(30))
    with pytest.raises(RangeViolation):
        B.trilinear_sum(K2, 1, 1, 1, B.CoefSeq(2, [2, 0]), one(2), one(2))


def test_bad_exponents():
    with pytest.raises(BadExponent):
        B.type1_sum(K2, 0, 1, B.CoefSeq.ones(3), 3)
    with pytest.raises(BadExponent):
        B.type1_sum(K2, 101, 1, B.CoefSeq.ones(3), 3)
    with pytest.raises(BadExponent):
        B.power_residues(np.array([0, 1]), -1, 101)


def test_fermat_shift_invariance():
    K = T.kloosterman(F[11], 2)
    al = B.CoefSeq.random_unit(5, 1)
    for b in (2, 3, -1, -3):
        assert abs(B.type1_sum(K, b, 1, al, 5).value - B.type1_sum(K, b + 10, 1, al, 5).value) < 1e-9


def test_hypothesis_warnings():
    rep = B.type1_sum(K2, 1, 1, B.CoefSeq.ones(5), 40)
    assert any("10 q^{1/l}" in w for w in rep.warnings)
    rep2 = B.type2_sum(K3, 1, 1, B.CoefSeq.ones(5), B.CoefSeq.ones(10))
    assert rep2.warnings


def test_report_json():
    rep = B.type1_sum(K2, 1, 1, B.CoefSeq.ones(10), 10)
    js = rep.to_json()
    assert js["kind"] == "type1" and js["value"]["re"] == rep.value.real


# -- xi / zeta --------------------------------------------------------------


def test_xi_for_a1():
    rep = B.xi_zeta(K2, 1, 1, 1, B.CoefSeq.ones(6), B.CoefSeq.ones(3), B.CoefSeq.ones(3))
    assert set(np.flatnonzero(rep.xi).tolist()) == set(range(6, 12))
    assert np.all(rep.xi[6:12] == 1)


def test_xi_squares_q11():
    K = T.kloosterman(F[11], 2)
    one = B.CoefSeq.ones
    rep = B.xi_zeta(K, 2, 1, 1, one(3), one(2), one(2))
    # j = 3, 4, 5 have squares 9, 5, 3 mod 11
    expected = np.zeros(11)
    expected[[9, 5, 3]] = 1
    assert np.array_equal(rep.xi.real, expected)


def test_xi_zeta_identity_seed42():
    rng_seeds = (42, 43, 44)
    al, be, ga = (B.CoefSeq.random_unit(n, s) for n, s in zip((7, 6, 9), rng_seeds))
    rep = B.xi_zeta(K3, 1, 2, -1, al, be, ga)
    assert rep.identity_ok and rep.rel_err < 1e-12
    assert rep.norms["xi_l1"] <= rep.norms["xi_l1_bound"]


# -- operator norm ----------------------------------------------------------


def test_operator_norm_1x1():
    K = T.kloosterman(F[101], 3)
    res = B.operator_norm(K, 1, 2, 1, 1)
    assert abs(res.sigma_max - abs(K.values[1 * 1 % 101])) < 1e-12


def test_operator_norm_kl3_q1009():
    K = T.kloosterman(F[1009], 3)
    res = B.operator_norm(K, 1, 1, 32, 32, iters=2000)
    A = B.kernel_matrix(K, 1, 1, 32, 32)
    svd = np.linalg.svd(A, compute_uv=False)[0]
    assert abs(res.sigma_max - svd) <= 1e-6 * svd
    # random probes give lower bounds
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=32) + 1j * rng.normal(size=32)
        y = rng.normal(size=32) + 1j * rng.normal(size=32)
        assert abs(y.conj() @ A @ x) / (np.linalg.norm(x) * np.linalg.norm(y)) <= res.sigma_max + 1e-9


def test_operator_norm_seed_independent():
    K = T.kloosterman(F[1009], 3)
    a = B.operator_norm(K, 1, 1, 20, 25, iters=2000, seed=0).sigma_max
    b = B.operator_norm(K, 1, 1, 20, 25, iters=2000, seed=99).sigma_max
    assert abs(a - b) <= 1e-6 * a


def test_sigma_max_dominates_bilinear_forms():
    op = B.operator_norm(K3, 1, 1, 12, 15, iters=1000)
    for seed in range(20):
        a = B.CoefSeq.random_unit(12, seed)
        b = B.CoefSeq.random_unit(15, 100 + seed)
        assert abs(B.type2_sum(K3, 1, 1, a, b).value) <= op.sigma_max * a.l2 * b.l2 + 1e-9


def test_singular_vector_coefficients_realize_norm():
    alpha, beta = B.singular_vector_coeffs(K3, 1, 1, 10, 12, iters=2000)
    op = B.operator_norm(K3, 1, 1, 10, 12, iters=2000)
    val = abs(B.type2_sum(K3, 1, 1, alpha, beta).value)
    assert abs(alpha.l2 - 1) < 1e-9 and abs(beta.l2 - 1) < 1e-9
    assert abs(val - op.sigma_max) <= 1e-6 * op.sigma_max


def test_fit_slope():
    qs = [100, 1000, 10000]
    assert abs(B.fit_slope(qs, [q**-0.25 for q in qs]) + 0.25) < 1e-12


# -- nu tables --------------------------------------------------------------


def test_nu_zero_alpha():
    rep = B.nu_table(101, 1, 1, B.CoefSeq.zeros(5), 10, U=2)
    assert rep.table == {} and rep.l1 == 0


def test_nu_example_q101():
    rep = B.nu_table(101, 1, 1, B.CoefSeq.ones(10), 10, U=2, V=1)
    brute = O.nu_entries(101, 1, 1, [1] * 10, 10, 10, 2)
    assert rep.l1 == 200 == O.nu_mass(101, 1, 1, [1] * 10, 10, 10, 2)
    assert rep.table == pytest.approx(brute)
    assert rep.mass_ok


def test_nu_single_triple():
    rep = B.nu_table(101, 1, 1, B.CoefSeq(1, [0.5j]), 1, U=1)
    assert rep.table == {(1, 1): 0.5}


@pytest.mark.parametrize("b,c,seed", [(2, -1, 3), (1, 3, 5), (-2, 2, 7)])
def test_nu_matches_brute(b, c, seed):
    al = B.CoefSeq.random_sign(8, seed)
    rep = B.nu_table(101, b, c, al, 20, U=3)
    brute = O.nu_entries(101, b, c, list(al.values), 8, 20, 3)
    assert set(rep.table) == set(brute)
    assert all(math.isclose(rep.table[k], brute[k]) for k in brute)


def test_nu_default_U():
    assert B.default_U(100, 2) == 5
    assert B.default_U(5, 1) == 1


def test_nu2_zero_alpha():
    rep = B.nu2_table(101, 1, 1, B.CoefSeq.zeros(4), 10, 2)
    assert rep.table == {}


def test_nu2_exact_enumeration():
    rep = B.nu2_table(101, 1, 1, B.CoefSeq.ones(4), 10, 2)
    brute = {}
    for m1 in range(4, 8):
        for m2 in range(4, 8):
            for n in range(10, 20):
                for u in range(2, 4):
                    k = (pow(u, -1, 101) * n % 101, u * m1 % 101, u * m2 % 101)
                    brute[k] = brute.get(k, 0) + 1
    assert rep.table == pytest.approx(brute)
    assert rep.l1 == 4 * 4 * 10 * 2 and rep.mass_ok


def test_nu2_single_m():
    rep = B.nu2_table(101, 1, 2, B.CoefSeq(1, [3.0]), 10, 2)
    assert rep.l1 == pytest.approx(2 * 10 * 9)
    assert all(k[1] == k[2] for k in rep.table)


def test_nu2_range():
    with pytest.raises(RangeViolation):
        B.nu2_table(101, 1, 1, B.CoefSeq.ones(4), 60, 2)


# -- reduction report ---------------------------------------------------------


def test_holder_zero_alpha():
    K = T.kloosterman(F[1009], 2)
    rep = B.holder_chain_report(K, 1, 1, 2, B.CoefSeq.zeros(10), 10, 1)
    assert rep.lhs == 0 and rep.ratio == 0


def test_holder_example():
    rep = B.holder_chain_report(K2, 1, 1, 2, B.CoefSeq.ones(10), 10, 1)
    assert rep.box_mode == "exhaustive" and rep.n_box == 16
    assert rep.lhs == pytest.approx(abs(B.type1_sum(K2, 1, 1, B.CoefSeq.ones(10), 10).value))
    assert rep.ratio > 0 and rep.to_json()["kind"] == "type1"


def test_holder_type2_and_sampling():
    K = T.kloosterman(F[1009], 2)
    al = B.CoefSeq.random_unit(20, 1)
    be = B.CoefSeq.random_unit(80, 2)
    rep = B.holder_chain_report(K, 1, 1, 2, al, 80, 8, beta=be, samples=50, seed=4)
    assert rep.kind == "type2" and rep.box_mode == "sample" and rep.n_box == 50


def test_holder_constraints():
    with pytest.raises(ConstraintViolation):
        B.holder_chain_report(K2, 1, 1, 2, B.CoefSeq.ones(10), 10, 2)
    with pytest.raises(ConstraintViolation):
        B.holder_chain_report(K2, 1, 1, 2, B.CoefSeq.ones(10), 40, 1)
