import itertools
import math

import numpy as np
import pytest

from expsums import complete as C
from expsums import oracles as O
from expsums import tracefn as T
from expsums.errors import BoxTooLarge, DegreeOverflow, PreconditionError, RangeViolation, TooLarge
from expsums.ffield import RationalFn, build_extension, build_prime_field

F = {q: build_prime_field(q) for q in (5, 7, 11, 13, 31, 101, 211)}


def kl(q, r=2):
    return T.kloosterman(F[q], r)


# -- Sigma_I ----------------------------------------------------------------


def test_sigma_I_example_q7():
    v = C.sigma_I(kl(7), C.TupleParams(1, 1, (0, 1)))
    # frozen from the 42-term product sum
    assert abs(v - (-5.7142857142857135)) < 1e-12


def test_sigma_I_constant_kernel_counts():
    q = 11
    K = T.constant_kernel(F[q])
    for v in [(0, 1, 3, 7), (2, 2, 5, 9), (0, 0, 0, 0)]:
        val = C.sigma_I(K, C.TupleParams(2, 1, v))
        expected = (q - 1) * sum(all((r + x) % q for x in v) for r in range(q))
        assert abs(val - expected) < 1e-9


@pytest.mark.parametrize("q", [5, 7, 11])
@pytest.mark.parametrize("c", [1, 2, -1, 3])
def test_sigma_I_matches_oracle(q, c):
    K = kl(q)
    rng = np.random.default_rng(q + 10 * abs(c))
    for l in (1, 2):
        for _ in range(4):
            v = tuple(int(x) for x in rng.integers(0, q, size=2 * l))
            assert abs(C.sigma_I(K, C.TupleParams(l, c, v)) - O.sigma_I(list(K.values), q, l, c, v)) < 1e-9


def test_sigma_I_batch_matches_single():
    K = kl(13, 3)
    tups = np.random.default_rng(3).integers(0, 13, size=(20, 4))
    batch = C.sigma_I_batch(K, 2, 1, tups)
    single = [C.sigma_I(K, C.TupleParams(2, 1, tuple(t))) for t in tups.tolist()]
    assert np.allclose(batch, single, atol=1e-9)


def test_sigma_I_symmetries():
    K = kl(11, 3)
    v = (0, 1, 4, 9)
    s = C.sigma_I(K, C.TupleParams(2, 1, v))
    assert abs(s - C.sigma_I(K, C.TupleParams(2, 1, (1, 0, 9, 4)))) < 1e-9
    assert abs(np.conj(s) - C.sigma_I(K, C.TupleParams(2, 1, (4, 9, 0, 1)))) < 1e-9
    # translating every shift by h reindexes r
    assert abs(s - C.sigma_I(K, C.TupleParams(2, 1, tuple((x + 5) % 11 for x in v)))) < 1e-9


def test_sigma_I_over_extension_brute_force():
    ext = build_extension(F[5], 2)
    K = T.kloosterman(ext, 2)
    Q = ext.size
    v = (0, 3)
    total = 0j
    kv = K.values
    for r in range(Q):
        for s in range(1, Q):
            a = ext.mul(s, ext.add(r, v[0]))
            b = ext.mul(s, ext.add(r, v[1]))
            total += kv[a] * np.conj(kv[b])
    assert abs(C.sigma_I(K, C.TupleParams(1, 1, v)) - total) < 1e-9


def test_tuple_params_validation():
    with pytest.raises(PreconditionError):
        C.TupleParams(2, 1, (0, 1, 2))
    with pytest.raises(PreconditionError):
        C.TupleParams(1, 0, (0, 1))


def test_paired_detection():
    assert C.is_paired((1, 2, 2, 1), 2)
    assert C.is_paired((3, 3), 1)
    assert not C.is_paired((1, 2, 1, 3), 2)


# -- Sigma_II ---------------------------------------------------------------


def test_sigma_II_zero_kernel():
    assert C.sigma_II(T.zero_kernel(F[7]), C.TupleParams(1, 1, (0, 1))) == 0


def test_sigma_II_example_q5():
    v = C.sigma_II(kl(5), C.TupleParams(1, 1, (0, 0)))
    assert abs(v - 32.32) < 1e-9  # frozen from the triple loop


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sigma_II_matches_oracle(d):
    q = 7
    K = kl(q)
    for v in [(0, 1), (2, 5), (3, 3)]:
        p = C.TupleParams(1, 1, v, d)
        assert abs(C.sigma_II(K, p) - O.sigma_II(list(K.values), q, 1, 1, d, v)) < 1e-9
    p = C.TupleParams(2, -1, (0, 1, 2, 4), d)
    assert abs(C.sigma_II(K, p) - O.sigma_II(list(K.values), q, 2, -1, d, (0, 1, 2, 4))) < 1e-8


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_sigma_II_decomposition(d):
    K = kl(13, 3)
    for v in [(0, 2), (1, 1), (0, 5, 3, 9)]:
        p = C.TupleParams(len(v) // 2, 1, v, d)
        a, b = C.sigma_II(K, p), C.sigma_II_decomposition(K, p)
        assert abs(a - b) <= 1e-6 * max(1.0, abs(a))


def test_sigma_II_full_subgroup_vanishes():
    # d = q-1 makes s1^d = s2^d always, so the constraint set is empty
    assert abs(C.sigma_II(kl(7), C.TupleParams(1, 1, (0, 1), d=6))) < 1e-12


# -- sums of products -------------------------------------------------------


def test_sop_diagonal_nonnegative():
    K = kl(11)
    for u in range(1, 11):
        val = C.sum_of_products(K, 1, (u, u))
        assert val.real >= 0 and abs(val.imag) < 1e-12


def test_sop_examples_q101():
    K = kl(101)
    g = C.sum_of_products(K, 2, (1, 2, 3, 4))
    assert abs(g - (-8.029800999901965)) < 1e-9
    assert abs(g) <= 10 * math.sqrt(101)
    d = C.sum_of_products(K, 2, (1, 2, 1, 2))
    kv = K.values
    v = np.arange(1, 101)
    assert abs(d - np.sum(np.abs(kv[v]) ** 2 * np.abs(kv[2 * v % 101]) ** 2)) < 1e-9
    assert abs(d - 99.97019900009802) < 1e-9


def test_sop_batch_matches_single():
    K = kl(13, 3)
    tups = np.random.default_rng(1).integers(1, 13, size=(10, 4))
    batch = C.sum_of_products_batch(K, 2, tups)
    assert np.allclose(batch, [C.sum_of_products(K, 2, tuple(t)) for t in tups.tolist()], atol=1e-12)


def test_sop_survey_shapes():
    gen, vals, diag, dvals = C.sop_survey(kl(101), 2, n=50, seed=3, n_diagonal=10)
    assert gen.shape == (50, 4) and diag.shape == (10, 4)
    assert all(not set(t[:2]) & set(t[2:]) for t in gen.tolist())
    assert all(C.is_paired(t, 2) for t in diag.tolist())
    assert np.all(np.abs(dvals.imag) < 1e-9)


# -- box averages -----------------------------------------------------------


def test_box_exhaustive_l1_v1_q11():
    K = kl(11)
    avg = C.box_average(K, 1, 1, mode="exhaustive")
    tuples = list(itertools.product((1, 2), repeat=2))
    hand = np.mean([abs(O.sigma_I(list(K.values), 11, 1, 1, v)) for v in tuples])
    assert avg.n_tuples == 4
    assert abs(avg.mean - hand) < 1e-9
    assert abs(avg.normalized - hand * 4) < 1e-9


def test_box_exhaustive_l2_count():
    assert C.box_average(kl(11), 2, 1, mode="exhaustive").n_tuples == 16


def test_box_sample_reproducible():
    K = kl(101)
    a = C.box_average(K, 2, 10, mode="sample", n=500, seed=7)
    b = C.box_average(K, 2, 10, mode="sample", n=500, seed=7)
    assert a == b and a.seed == 7 and a.stderr > 0
    assert a.mean > 0


def test_box_errors():
    with pytest.raises(RangeViolation):
        C.box_average(kl(11), 1, 3)
    with pytest.raises(BoxTooLarge):
        C.box_average(kl(211), 3, 50, mode="exhaustive")


# -- moments ----------------------------------------------------------------


@pytest.mark.parametrize("q,l,m", [(7, 1, 1), (5, 1, 2), (5, 2, 1), (7, 2, 2), (5, 2, 2)])
def test_exchange_identity_sigma_I(q, l, m):
    rep = C.moment_sigma_I(kl(q), l, m)
    assert rep.agrees, rep


def test_exchange_identity_other_kernels():
    ctx = F[7]
    for label in ("fiber:0,0,1", "kl:3", "toric:1,2,-1", "rank1:3;0,1;0,0,1"):
        K = T.build_kernel(label, ctx)
        assert C.moment_sigma_I(K, 1, 2).agrees
        assert C.moment_sigma_I(K, 1, 1, c=-1).agrees


@pytest.mark.parametrize("d", [1, 2, 3])
def test_exchange_identity_sigma_II(d):
    assert C.moment_sigma_II(kl(7), 1, 1, d=d).agrees
    assert C.moment_sigma_II(kl(5), 1, 1, d=d).agrees


def test_exchange_identity_over_extension():
    rep = C.moment_sigma_I(kl(5), 1, 1, n_ext=2)
    assert rep.field_size == 25 and rep.agrees


def test_moment_direct_side_matches_oracle():
    q = 5
    K = kl(q)
    brute = sum(abs(O.sigma_I(list(K.values), q, 1, 1, v)) ** 4 for v in itertools.product(range(q), repeat=2))
    assert math.isclose(C.moment_sigma_I(K, 1, 2).direct, brute, rel_tol=1e-9)


def test_moment_bound_small_q():
    for q in (5, 7, 11):
        rep = C.moment_sigma_I(kl(q), 1, 1)
        assert rep.direct / (q**4 + q**5) <= 50


def test_moment_cap():
    with pytest.raises(TooLarge):
        C.moment_sigma_I(kl(101), 2, 2)


# -- surveys ----------------------------------------------------------------


def test_survey_zero_kernel_single_bucket():
    res = C.diagonal_survey(T.zero_kernel(F[11]), 2, n=50, seed=0, n_diagonal=5)
    counts = res.counts()
    assert counts["<=1"] == 50 and sum(counts.values()) == 50
    assert all(r.value == 0 and r.exponent == -math.inf for r in res.reports)


def test_survey_q101_distribution():
    res = C.diagonal_survey(kl(101), 2, c=1, mode="sample", n=2000, seed=1)
    assert res.fraction_in_tier("low") >= 0.90
    for r in res.diagonal_reports:
        assert r.diagonal_flag and r.exponent > 1.5
        assert r.value.real > 0 and abs(r.value.imag) <= 1e-9 * abs(r.value)
    s = res.summary()
    assert s["samples"] == 2000 and s["seed"] == 1 and sum(s["bucket_counts"].values()) == 2000


def test_survey_reproducible_and_sorted():
    a = C.diagonal_survey(kl(31), 1, n=100, seed=5)
    b = C.diagonal_survey(kl(31), 1, n=100, seed=5)
    assert [r.v for r in a.reports] == [r.v for r in b.reports]
    assert [r.v for r in a.reports] == sorted(r.v for r in a.reports)


def test_survey_exhaustive_and_kind_II():
    res = C.diagonal_survey(kl(7), 1, mode="exhaustive", n_diagonal=3)
    assert len(res.reports) == 49
    res2 = C.diagonal_survey(kl(11), 1, n=20, seed=2, kind="II", d=2, n_diagonal=3)
    assert set(res2.counts()) == {"<=3/2", "(3/2,2]", "(2,3]", ">3"}


def test_buckets_and_tiers():
    assert C.bucket_of(1.0) == "<=1"
    assert C.bucket_of(1.2) == "(1,3/2]"
    assert C.bucket_of(2.0) == "(3/2,2]"
    assert C.bucket_of(2.5) == ">2"
    assert C.bucket_of(3.0, "II") == "(2,3]"
    assert C.exponent_of(0, 101) == -math.inf
    assert abs(C.exponent_of(101.0, 101) - 1) < 1e-12
    assert C.tier_of(20 * 101 - 1, 101) == "low"


# -- graph counts -----------------------------------------------------------


def brute_delta(vertices, edges, m):
    adj = {(a, b) for a, b in edges} | {(b, a) for a, b in edges}
    n = 0
    for t in itertools.product(vertices, repeat=2 * m):
        if all(any((t[i], t[j]) in adj for j in range(2 * m) if j != i) for i in range(2 * m)):
            n += 1
    return n


def test_delta_graph_path_with_loops():
    V = [0, 1, 2]
    E = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]
    g = C.delta_graph_count(V, E, 1)
    assert g.count == brute_delta(V, E, 1) == 7
    assert g.bound_ok


def test_delta_graph_complete_k4():
    V = list(range(4))
    E = [(i, j) for i in V for j in V if i <= j]
    g = C.delta_graph_count(V, E, 2)
    assert g.count == brute_delta(V, E, 2) == 256
    assert g.max_degree == 4 and g.bound_ok
    assert g.count <= g.max_degree ** 4 * 16


def test_delta_graph_random_matches_brute():
    rng = np.random.default_rng(0)
    for _ in range(5):
        V = list(range(5))
        E = [(int(a), int(b)) for a, b in rng.integers(0, 5, size=(6, 2))]
        for m in (1, 2):
            g = C.delta_graph_count(V, E, m)
            assert g.count == brute_delta(V, E, m) and g.bound_ok


# -- rank-one constancy -----------------------------------------------------


def test_rank1_paired_is_constant():
    g = RationalFn.parse("1/0,1", 11)
    assert C.rank1_constancy_test(g, 1, (2, 5, 2, 5), (3, 4, 3, 4))
    assert C.rank1_constancy_test(g, 1, (2, 5, 5, 2), (3, 4, 4, 3))


def test_rank1_square_on_subvariety():
    q = 13
    g = RationalFn.parse("0,0,1", q)
    # s1^2 = s2^2 and r1 s1^2 = r2 s2^2 with s2 = -s1, r2 = r1
    r, s1 = 4, 3
    assert C.rank1_constancy_test(g, 1, (r, r), (s1, (-s1) % q))
    assert not C.rank1_constancy_test(g, 1, (r, r + 1), (s1, (-s1) % q))


def test_rank1_inverse_generic_nonconstant():
    g = RationalFn.parse("1/0,1", 11)
    assert not C.rank1_constancy_test(g, 1, (1, 2, 3, 4), (1, 1, 1, 1))
    assert not C.rank1_constancy_test(g, 1, (0, 5), (1, 1))


def test_rank1_phase_matches_pointwise():
    q = 11
    g = RationalFn.parse("0,1,0,2", q)
    r, s, c = (1, 3), (2, 5), 2
    comb = C.rank1_phase_combination(g, c, r, s)
    from expsums.ffield import eval_rational

    for x in range(q):
        a = eval_rational(g, s[0] * pow(x + r[0], c, q) % q)
        b = eval_rational(g, s[1] * pow(x + r[1], c, q) % q)
        assert eval_rational(comb, x) == (a - b) % q


def test_rank1_degree_cap():
    g = RationalFn.make((0,) * 60 + (1,), (1,), 101)
    with pytest.raises(DegreeOverflow):
        C.rank1_constancy_test(g, 40, (1, 2), (1, 1))
