"""The acceptance gate: ten end-to-end checks with their tolerances and time limits."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bilinear as B
from . import complete as C
from . import goursat as Gs
from . import oracles as O
from . import tracefn as T
from .calibration import DEFAULT
from .ffield import AddChar, MultChar, build_prime_field, gauss_sum


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: float

    @property
    def within_time(self) -> bool:
        return self.seconds <= self.limit

    @property
    def ok(self) -> bool:
        return self.passed and self.within_time

    def line(self) -> str:
        flag = "PASS" if self.ok else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s / {self.limit:.0f}s)"


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def exchange_identity():
    worst = 0.0
    for q in (5, 7):
        ctx = build_prime_field(q)
        for label in ("kl:2", "fiber:0,0,1"):
            K = T.build_kernel(label, ctx)
            for l in (1, 2):
                for m in (1, 2):
                    worst = max(worst, C.moment_sigma_I(K, l, m).rel_err)
    return worst <= 1e-6, f"max rel err {worst:.2e} over 16 cases"


def _oracle_pairs(ctx):
    q = ctx.q
    quad = (q - 1) // 2
    yield "kl:1", T.kloosterman(ctx, 1).values, O.kloosterman(q, 1)
    yield "kl:2", T.kloosterman(ctx, 2).values, O.kloosterman(q, 2)
    yield "kl:3", T.kloosterman(ctx, 3).values, O.kloosterman(q, 3)
    for js in ((quad, 0), (1, 2), (1, 2, 3)):
        K = T.kloosterman_chars(ctx, T.CharMultiset.of(ctx, js), AddChar(ctx, 2))
        yield f"klchars:{js}", K.values, O.kloosterman_chars(ctx, js, 2)
    for chi, rho in (((quad,), (0,)), ((1, 2), (0,)), ((1,), (0, 3)), ((0,), ())):
        if {j % (q - 1) for j in chi} & {j % (q - 1) for j in rho}:
            continue
        K = T.hypergeometric(ctx, T.CharMultiset.of(ctx, chi), T.CharMultiset.of(ctx, rho))
        yield f"hyp:{chi}/{rho}", K.values, O.hypergeometric(ctx, chi, rho)
    for abc in ((1, 1, 1), (1, 1, 2), (1, -1, 2), (2, 3, -1)):
        if any(x % q == 0 for x in abc):
            continue
        yield f"toric:{abc}", T.toric_kernel(ctx, *abc).values, O.toric(q, *abc)
    for exps in ((1,), (2, 1), (1, 2, 3)):
        yield f"monomial:{exps}", T.monomial_product_sum(ctx, exps).values, O.monomial(q, exps)
    for f in ((0, 0, 1), (0, 1, 0, 1), (1, 2, 0, 1)):
        if len(f) - 1 < q:
            yield f"fiber:{f}", T.fiber_count(ctx, f).values, O.fiber(q, f)
            yield f"ftphase:{f}", T.poly_phase_ft(ctx, f).values, O.ftphase(q, f)


def oracle_equivalence():
    worst, n = 0.0, 0
    for q in (3, 5, 7, 11, 13):
        ctx = build_prime_field(q)
        for _, fast, slow in _oracle_pairs(ctx):
            worst = max(worst, _rel(fast, slow))
            n += 1
    toric_gap = 0.0
    for q in (7, 101):
        ctx = build_prime_field(q)
        toric_gap = max(toric_gap, _rel(T.toric_kernel(ctx, 1, 1, 1).values, T.kloosterman(ctx, 3).values))
    ok = worst <= 1e-9 and toric_gap <= 1e-9
    return ok, f"{n} tables, max rel err {worst:.1e}; toric(1,1,1) vs kl:3 {toric_gap:.1e}"


def sop_cancellation(calib=DEFAULT):
    parts, ok = [], True
    for q in (101, 211, 401):
        K = T.kloosterman(build_prime_field(q), 2)
        _, vals, diag, dvals = C.sop_survey(K, 2, n=500, seed=q, n_diagonal=50)
        # the always-paired shapes as well
        extra = np.array([[1, 1, 1, 1], [1, 2, 1, 2], [1, 2, 2, 1], [3, 5, 5, 3]], dtype=np.int64)
        dvals = np.concatenate([dvals, C.sum_of_products_batch(K, 2, extra)])
        frac = float(np.mean(np.abs(vals) <= calib.sop_mult * math.sqrt(q)))
        real = bool(np.all(np.abs(dvals.imag) <= 1e-9 * np.abs(dvals)))
        dmin = float(dvals.real.min())
        ok &= frac >= 0.95 and real and dmin >= calib.sop_diag_frac * q
        parts.append(f"q={q}: {frac:.1%} <= {calib.sop_mult:g}sqrt(q), diag min {dmin / q:.2f}q")
    return ok, "; ".join(parts)


def sigma1_stratification(calib=DEFAULT):
    q = 101
    K = T.kloosterman(build_prime_field(q), 2)
    res = C.diagonal_survey(K, 2, c=1, mode="sample", n=2000, seed=1, n_diagonal=100, calib=calib)
    frac = res.fraction_in_tier("low")
    diag = res.diagonal_reports
    diag_ok = all(
        r.exponent > 1.5 and r.value.real > 0 and abs(r.value.imag) <= 1e-9 * abs(r.value) for r in diag
    )
    ok = frac >= 0.90 and diag_ok
    low = min(r.exponent for r in diag)
    return ok, f"{frac:.1%} of 2000 within {calib.sigma1_mult_q:g}q; {len(diag)} paired tuples, min exponent {low:.2f}"


def moment_bound(calib=DEFAULT):
    worst = 0.0
    for q in (5, 7, 11):
        K = T.kloosterman(build_prime_field(q), 2)
        rep = C.moment_sigma_I(K, 1, 1)
        worst = max(worst, rep.direct / (q**4 + q**5))
    return worst <= calib.moment_const, f"max measured/(q^4+q^5) = {worst:.3f} (limit {calib.moment_const:g})"


def saving_trend(schedule=(1009, 2003, 4001, 8101), exp=0.45, iters=2000):
    ratios = []
    for q in schedule:
        K = T.toric_kernel(build_prime_field(q), 1, 1, 1)
        M = math.ceil(q**exp)
        ratios.append(B.operator_norm(K, 1, 1, M, M, iters=iters, seed=0).ratio)
    slope = B.fit_slope(schedule, ratios)
    ok = slope < 0 and ratios[-1] < ratios[0]
    rs = ", ".join(f"{r:.4f}" for r in ratios)
    return ok, f"R = [{rs}], slope {slope:.3f}"


def trilinear_identity(q=101, n_configs=10, seed=2024):
    rng = C.make_rng(seed)
    worst = 0.0
    Ks = {lab: T.build_kernel(lab, build_prime_field(q)) for lab in ("kl:2", "kl:3", "toric:1,2,-1")}
    for i in range(n_configs):
        lab = list(Ks)[i % len(Ks)]
        a, b, c = (int(x) for x in rng.choice([-2, -1, 1, 2, 3], size=3))
        J = int(rng.integers(1, 30))
        M = int(rng.integers(1, 20))
        N = int(rng.integers(1, min(40, 4 * q // M) + 1))
        al, be, ga = (B.CoefSeq.random_unit(n, seed + 10 * i + k) for k, n in enumerate((J, M, N)))
        rep = B.xi_zeta(Ks[lab], a, b, c, al, be, ga)
        worst = max(worst, rep.rel_err)
    return worst <= 1e-6, f"{n_configs} configs at q={q}, max rel err {worst:.1e}"


NU_CONFIGS = (
    # (q, b, c, M, N, U, V, coeffs, seed)
    (101, 1, 1, 10, 10, 2, 1, "ones", 0),
    (101, 2, -1, 8, 20, 1, 2, "sign", 3),
    (211, 1, 3, 16, 30, 3, 1, "unit", 5),
)
NU2_CONFIGS = (
    (101, 1, 1, 4, 10, 2, "ones", 0),
    (101, 1, 2, 1, 10, 2, "ones", 0),
    (211, 3, 1, 6, 20, 4, "unit", 9),
)


def nu_reports(calib=DEFAULT):
    ok, worst = True, 0.0
    for q, b, c, M, N, U, V, kind, seed in NU_CONFIGS:
        al = B.CoefSeq.generate(kind, M, seed)
        rep = B.nu_table(q, b, c, al, N, U, V, calib)
        brute = O.nu_entries(q, b, c, list(al.values), M, N, U)
        exact = rep.mass_ok and math.isclose(rep.l1, sum(brute.values()), rel_tol=1e-12)
        same = set(rep.table) == set(brute) and all(math.isclose(rep.table[k], brute[k]) for k in brute)
        consts = (rep.bounds["l1_const"], rep.bounds["l2sq_const"])
        worst = max(worst, *consts)
        ok &= exact and same and max(consts) <= calib.norm_report_ceiling
    for q, b, c, M, N, U, kind, seed in NU2_CONFIGS:
        al = B.CoefSeq.generate(kind, M, seed)
        rep = B.nu2_table(q, b, c, al, N, U, calib)
        consts = (rep.bounds["l1_const"], rep.bounds["l2sq_const"])
        worst = max(worst, *consts)
        ok &= rep.mass_ok and max(consts) <= calib.norm_report_ceiling
    return ok, f"{len(NU_CONFIGS) + len(NU2_CONFIGS)} tables, mass identities exact, max constant {worst:.2f}"


def goursat_suite():
    demos = Gs.demo_instances()
    inclusions = 0
    for d in demos:
        if len(d.factors) == 2:
            datum = Gs.goursat_datum(d.G, d.factors[0], d.factors[1])
            inclusions += datum.verify()
    S = Gs.sl2(5)
    qs = Gs.is_quasisimple(S) and not Gs.is_simple(S)
    dims = {}
    holds = True
    for d in demos:
        if d.reps is None:
            continue
        v = Gs.gkr_check(d.G, d.factors, d.reps, d.cores)
        dims[d.name] = v.coinvariant_dim
        holds &= v.holds and (d.expected_dim is None or v.coinvariant_dim == d.expected_dim)
    ok = inclusions == 3 and qs and dims.get("diag-SL2F5") == 1 and dims.get("full-SL2F5xSL2F5") == 0 and holds
    return ok, f"inclusions {inclusions}/3, SL2(F5) quasisimple={qs}, dims {dims}, dichotomy={holds}"


def gauss_and_orthogonality():
    worst_g = 0.0
    for q in (5, 7, 11, 13):
        ctx = build_prime_field(q)
        for j in range(1, q - 1):
            for t in range(1, q):
                g = gauss_sum(ctx, MultChar(ctx, j), AddChar(ctx, t))
                worst_g = max(worst_g, abs(abs(g) - math.sqrt(q)))
    worst_o = 0.0
    for q in (p for p in range(3, 102) if all(p % k for k in range(2, int(p**0.5) + 1))):
        ctx = build_prime_field(q)
        dl = ctx.dlog[1:]
        roots = ctx.roots_qm1
        for j in range(q - 1):
            s = roots[(j * dl) % (q - 1)].sum()
            target = q - 1 if j == 0 else 0
            worst_o = max(worst_o, abs(s - target))
    ok = worst_g <= 1e-9 and worst_o <= 1e-9
    return ok, f"Gauss |tau|-sqrt(q) max {worst_g:.1e}; orthogonality max {worst_o:.1e}"


CRITERIA: list[tuple[int, str, Callable, float]] = [
    (1, "exchange identity", exchange_identity, 30),
    (2, "oracle equivalence", oracle_equivalence, 60),
    (3, "sums of products cancel", sop_cancellation, 120),
    (4, "Sigma_I stratification", sigma1_stratification, 120),
    (5, "moment bound", moment_bound, 60),
    (6, "saving-exponent trend", saving_trend, 600),
    (7, "trilinear contraction", trilinear_identity, 30),
    (8, "nu tables", nu_reports, 60),
    (9, "Goursat / coinvariants", goursat_suite, 120),
    (10, "Gauss sums and orthogonality", gauss_and_orthogonality, 30),
]


def run_criterion(number: int) -> CriterionResult:
    num, name, fn, limit = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failure with its message
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(num, name, bool(passed), detail, time.perf_counter() - t0, limit)


def run_all(numbers=None) -> list:
    return [run_criterion(n) for n, *_ in CRITERIA if numbers is None or n in numbers]
