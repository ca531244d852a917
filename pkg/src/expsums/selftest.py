"""Invariant suite behind ``expsums selftest``.

Checks are small functions returning ``(ok, detail)``.  The quick tier holds
the definitional cases; the full tier adds every module invariant.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bilinear as B
from . import complete as C
from . import goursat as Gs
from . import oracles as O
from . import tracefn as T
from .calibration import DEFAULT
from .errors import NotPrime, EvenPrime
from .ffield import (
    AddChar,
    MultChar,
    POLE,
    RationalFn,
    build_extension,
    build_prime_field,
    eval_rational,
    gauss_sum,
    prime_factors,
)

_CHECKS: list = []


def check(tier: str):
    def deco(fn):
        _CHECKS.append((tier, fn.__name__, fn))
        return fn

    return deco


# -- ffield ----------------------------------------------------------------


@check("quick")
def small_generators():
    a, b = build_prime_field(7), build_prime_field(3)
    return a.g == 3 and a.dlog[2] == 2 and b.g == 2 and b.dlog[2] == 1, "q=7 -> g=3, q=3 -> g=2"


@check("quick")
def rejects_bad_moduli():
    out = []
    for q, exc in ((9, NotPrime), (2, EvenPrime)):
        try:
            build_prime_field(q)
            out.append(False)
        except exc:
            out.append(True)
    return all(out), "9 and 2 rejected"


@check("quick")
def trivial_gauss_sum():
    ctx = build_prime_field(7)
    return abs(gauss_sum(ctx, MultChar(ctx, 0), AddChar(ctx, 1)) + 1) < 1e-12, "trivial chi gives -1"


@check("quick")
def rational_evaluation():
    f = RationalFn.parse("1,1/-1,1", 7)
    return eval_rational(RationalFn.parse("1/0,1", 7), 0) is POLE and eval_rational(f, 3) == 2, "1/X, (X+1)/(X-1)"


@check("full")
def dlog_tables():
    ok = True
    for q in (3, 5, 7, 11, 101):
        ctx = build_prime_field(q)
        x = np.arange(1, q)
        ok &= bool(np.all(ctx.expt[ctx.dlog[x]] == x))
        ok &= bool(np.all(ctx.dlog[ctx.expt] == np.arange(q - 1)))
        ok &= all(pow(ctx.g, (q - 1) // p, q) != 1 for p in prime_factors(q - 1))
        xy = (x[:, None] * x[None, :]) % q
        ok &= bool(np.all(ctx.dlog[xy] == (ctx.dlog[x][:, None] + ctx.dlog[x][None, :]) % (q - 1)))
        ok &= bool(np.all(np.abs(np.abs(ctx.roots_q) - 1) < 1e-12))
    return ok, "exp/log inverse, generator order, dlog homomorphism"


@check("full")
def characters_and_gauss_sums():
    worst = 0.0
    for q in (5, 7, 11, 13):
        ctx = build_prime_field(q)
        for j in range(1, q - 1):
            worst = max(worst, abs(abs(gauss_sum(ctx, MultChar(ctx, j), AddChar(ctx, 1))) - math.sqrt(q)))
        psi = ctx.psi(3)
        x = np.arange(q)
        worst = max(worst, float(np.max(np.abs(psi[(x[:, None] + x[None, :]) % q] - psi[:, None] * psi[None, :]))))
    return worst < 1e-9, f"max deviation {worst:.1e}"


@check("full")
def extension_trace():
    ok = True
    for q in (3, 5, 7, 11, 13):
        ext = build_extension(build_prime_field(q), 2)
        counts = np.bincount(ext.trace, minlength=q)
        ok &= bool(np.all(counts == q))
        ok &= bool(np.all(ext.add(ext.elements(), ext.frobenius(ext.elements())) == ext.trace))
    e3 = build_extension(build_prime_field(3), 2)
    return ok and e3.modulus == (1, 0, 1), "fibres of size q; Tr = x + x^q; F_9 = F_3[X]/(X^2+1)"


# -- tracefn ---------------------------------------------------------------


@check("quick")
def catalog_special_cases():
    ctx = build_prime_field(7)
    kl2 = T.kloosterman(ctx, 2)
    psi = ctx.psi(1)
    ok = kl2.values[0] == 0
    ok &= np.allclose(T.monomial_product_sum(ctx, (1, 1)).values, kl2.values, atol=1e-12)
    ok &= np.allclose(T.kloosterman_chars(ctx, T.CharMultiset.of(ctx, (0, 0))).values, kl2.values, atol=1e-12)
    ok &= np.allclose(T.kloosterman(ctx, 1).values[1:], psi[1:], atol=1e-12)
    ok &= np.allclose(T.fiber_count(ctx, (0, 1)).values, 0)
    ok &= np.allclose(T.poly_phase_ft(ctx, (0, 1)).values, 0, atol=1e-12)
    leg = MultChar(ctx, 3).values()
    ok &= np.allclose(T.fiber_count(ctx, (0, 0, 1)).values, leg.real)
    return bool(ok), "Kl_1, Kl_2 reductions, fiber(X), fiber(X^2), ftphase(X)"


@check("quick")
def pullback_identity():
    ctx = build_prime_field(7)
    K = T.kloosterman(ctx, 2)
    ok = np.array_equal(T.pullback(K, ((1, 0), (0, 1))).values, K.values)
    ok &= np.allclose(T.pullback_power(K, 2).values[3], K.values[2])
    return bool(ok), "identity pullback, x^2 pullback"


@check("full")
def convolution_oracles():
    worst = 0.0
    for q in (5, 7, 11, 13):
        ctx = build_prime_field(q)
        for r in (2, 3):
            worst = max(worst, float(np.max(np.abs(T.kloosterman(ctx, r).values - np.array(O.kloosterman(q, r))))))
        worst = max(worst, float(np.max(np.abs(T.toric_kernel(ctx, 1, 1, 2).values - np.array(O.toric(q, 1, 1, 2))))))
    return worst < 1e-9, f"max error {worst:.1e}"


@check("full")
def parseval_and_symmetry():
    ok = True
    for q in (101, 211):
        ctx = build_prime_field(q)
        for r in (2, 3):
            K = T.kloosterman(ctx, r)
            ok &= abs(np.sum(np.abs(K.values[1:]) ** 2) - q) <= DEFAULT.parseval_const * r * r * math.sqrt(q)
    ctx = build_prime_field(101)
    u = np.arange(101)
    for r in (1, 2, 3):
        K = T.kloosterman(ctx, r)
        ok &= np.allclose(np.conj(K.values), K.values[((-1) ** r * u) % 101], atol=1e-9)
        ok &= K.purity_ok() and K.realness_ok()
    return bool(ok), "Parseval window, conj Kl_r(u) = Kl_r((-1)^r u), purity"


@check("full")
def pullback_roundtrip():
    ctx = build_prime_field(11)
    K = T.kloosterman(ctx, 3)
    ok = True
    for g in (((1, 3), (0, 1)), ((2, 1), (5, 4)), ((0, 1), (1, 0))):
        back = T.pullback(T.pullback(K, g), T.inverse_matrix(g, 11))
        ok &= np.array_equal(back.values, K.values)
    return ok, "pullback by gamma then gamma^-1"


@check("full")
def hyp_matches_klchars():
    worst = 0.0
    for q in (5, 7, 11, 13):
        ctx = build_prime_field(q)
        cm = T.CharMultiset.of(ctx, (1, (q - 1) // 2))
        a = T.hypergeometric(ctx, cm, T.CharMultiset.of(ctx, ())).values
        b = T.kloosterman_chars(ctx, cm).values
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-9, f"max error {worst:.1e}"


@check("full")
def structural_tests():
    c13 = build_prime_field(13)
    ok = T.is_supermorse(c13, (0, -6, 0, 0, 0, 0, 1)) and not T.is_supermorse(c13, (0, 0, 0, 1))
    ok &= T.is_kummer_induced(T.CharMultiset.of(c13, (0, 6)))[0]
    ok &= not T.is_kummer_induced(T.CharMultiset.of(build_prime_field(7), (0, 1)))[0]
    return bool(ok), "supermorse X^6-6X, Kummer induction"


# -- complete --------------------------------------------------------------


@check("quick")
def sigma_trivial_cases():
    ctx = build_prime_field(7)
    K = T.kloosterman(ctx, 2)
    diag = C.sigma_I(K, C.TupleParams(1, 1, (3, 3)))
    zero = C.sigma_II(T.zero_kernel(ctx), C.TupleParams(1, 1, (0, 1)))
    full_d = C.sigma_II(K, C.TupleParams(1, 1, (0, 1), d=6))
    return diag.real >= 0 and abs(diag.imag) < 1e-9 and zero == 0 and abs(full_d) < 1e-12, "diagonal, K=0, d=q-1"


@check("full")
def sigma_oracles_and_symmetry():
    ctx = build_prime_field(7)
    K = T.kloosterman(ctx, 2)
    v = (0, 1, 3, 5)
    s = C.sigma_I(K, C.TupleParams(2, 1, v))
    ok = abs(s - O.sigma_I(list(K.values), 7, 2, 1, v)) < 1e-9
    ok &= abs(s - C.sigma_I(K, C.TupleParams(2, 1, (1, 0, 5, 3)))) < 1e-9
    ok &= abs(np.conj(s) - C.sigma_I(K, C.TupleParams(2, 1, (3, 5, 0, 1)))) < 1e-9
    for d in (1, 2, 3):
        p = C.TupleParams(1, 1, (0, 2), d)
        a, b = C.sigma_II(K, p), C.sigma_II_decomposition(K, p)
        ok &= abs(a - b) <= 1e-6 * max(1, abs(a))
    return bool(ok), "oracle, permutation invariance, conjugation swap, Sigma_II decomposition"


@check("full")
def exchange_identity_small():
    ctx = build_prime_field(5)
    K = T.kloosterman(ctx, 2)
    r1 = C.moment_sigma_I(K, 1, 2)
    r2 = C.moment_sigma_II(K, 1, 1)
    return r1.agrees and r2.agrees, f"rel err {r1.rel_err:.1e}, {r2.rel_err:.1e}"


@check("full")
def moment_bound_small():
    worst = 0.0
    for q in (5, 7, 11):
        rep = C.moment_sigma_I(T.kloosterman(build_prime_field(q), 2), 1, 1)
        worst = max(worst, rep.direct / (q**4 + q**5))
    return worst <= DEFAULT.moment_const, f"max ratio {worst:.3f}"


@check("full")
def sop_equal_entries_nonnegative():
    K = T.kloosterman(build_prime_field(101), 3)
    vals = C.sum_of_products_batch(K, 2, np.array([[u] * 4 for u in (1, 2, 50)]))
    return bool(np.all(vals.real >= 0) and np.all(np.abs(vals.imag) < 1e-9)), "all-equal u"


@check("full")
def delta_graph():
    loops = C.delta_graph_count(range(4), [(i, i) for i in range(4)], 1)
    path = C.delta_graph_count(range(3), [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)], 1)
    return loops.count == 4 and path.count == 7 and path.bound_ok, "loops only, path with loops"


# -- bilinear --------------------------------------------------------------


@check("quick")
def bilinear_zero_and_ones():
    ctx = build_prime_field(101)
    K = T.kloosterman(ctx, 2)
    one = T.constant_kernel(ctx)
    z = B.type1_sum(K, 1, 1, B.CoefSeq.zeros(5), 5).value == 0
    mn = abs(B.type1_sum(one, 1, 1, B.CoefSeq.ones(5), 7).value - 35) < 1e-9
    op = abs(B.operator_norm(one, 1, 1, 6, 9).sigma_max - math.sqrt(54)) < 1e-6
    return z and mn and op, "alpha=0, constant kernel, rank-one operator norm"


@check("full")
def bilinear_invariants():
    ctx = build_prime_field(101)
    K = T.kloosterman(ctx, 3)
    op = B.operator_norm(K, 1, 1, 12, 15, iters=500)
    ok = True
    for seed in range(20):
        a = B.CoefSeq.random_unit(12, seed)
        b = B.CoefSeq.random_unit(15, 100 + seed)
        ok &= abs(B.type2_sum(K, 1, 1, a, b).value) <= op.sigma_max * a.l2 * b.l2 + 1e-6
    c11 = build_prime_field(11)
    K11 = T.kloosterman(c11, 2)
    al = B.CoefSeq.random_unit(5, 1)
    for b in (2, 3, -1, -3):
        ok &= abs(B.type1_sum(K11, b, 1, al, 5).value - B.type1_sum(K11, b + 10, 1, al, 5).value) < 1e-9
    x = B.xi_zeta(K, 1, 1, 1, B.CoefSeq.random_unit(7, 5), B.CoefSeq.random_unit(6, 6), B.CoefSeq.random_unit(9, 7))
    ok &= x.identity_ok
    return bool(ok), "sigma_max dominates, Fermat shift, trilinear contraction"


@check("full")
def nu_mass():
    al = B.CoefSeq.random_sign(10, 4)
    rep = B.nu_table(101, 2, 1, al, 10, U=3)
    return rep.mass_ok and math.isclose(rep.l1, O.nu_mass(101, 2, 1, list(al.values), 10, 10, 3)), "mass identity"


# -- goursat ---------------------------------------------------------------


@check("quick")
def small_groups():
    ok = Gs.cyclic_group(3).order == 3 and Gs.closure([], Gs.perm_mul, (0, 1, 2)).order == 1
    ok &= not Gs.is_perfect(Gs.cyclic_group(6))
    return ok, "Z/3, trivial closure, Z/6 not perfect"


@check("full")
def group_structure():
    S = Gs.sl2(5)
    A5 = Gs.alternating_group(5)
    ok = S.order == 120 and Gs.is_quasisimple(S) and not Gs.is_simple(S) and Gs.center(S).order == 2
    ok &= Gs.is_simple(A5) and not Gs.is_perfect(Gs.sl2(3))
    std = Gs.sl2f5_standard_rep(S)
    std4 = Gs.standard_perm_rep(A5, 5)
    for rho in (std, std4):
        ok &= Gs.coinvariant_dim(rho.group, [rho, rho.dual()]) == 1
        ok &= abs(np.sum(np.abs(rho.characters()) ** 2) - rho.group.order) < 1e-4
        ok &= rho.check_multiplicative() and rho.check_class_function()
    return bool(ok), "SL2(F5), A5, Schur, column orthogonality"


@check("full")
def goursat_demos():
    ok = True
    for d in Gs.demo_instances():
        if len(d.factors) == 2:
            ok &= Gs.goursat_datum(d.G, *d.factors).verify()
        if d.reps is not None:
            ok &= Gs.gkr_check(d.G, d.factors, d.reps, d.cores).holds
    return bool(ok), "data verified, dichotomy holds"


@dataclass
class CheckResult:
    tier: str
    name: str
    ok: bool
    detail: str
    seconds: float


def run(quick: bool = False) -> list:
    out = []
    for tier, name, fn in _CHECKS:
        if quick and tier != "quick":
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(tier, name, bool(ok), detail, time.perf_counter() - t0))
    return out
