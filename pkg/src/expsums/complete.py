"""Complete sums over a finite field and their surveys.

For a kernel ``K``, an exponent ``c`` and a shift vector ``v`` of length
``2l`` write::

    K_c(r, s, v) = prod_{i<l} K(s (r+v_i)^c) * conj K(s (r+v_{i+l})^c)

    Sigma_I(v)  = sum_{r in F, s in F^x} K_c(r, s, v)
    Sigma_II(v) = sum_r sum_{s1^d != s2^d} K_c(r, s1, v) conj K_c(r, s2, v)

Prime-field sums run through the batched kernels in :mod:`expsums.kernels`;
extension fields go through the generic (slower) field-context ops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import poly as P
from .calibration import DEFAULT, Calibration
from .errors import BoxTooLarge, DegreeOverflow, PreconditionError, RangeViolation, TooLarge
from .ffield import PrimeFieldCtx, RationalFn, build_extension
from .kernels import kc_matrix, sigma1_batch, sop_batch
from .tracefn import TraceTable, retabulate

MOMENT_CAP = 10**7
BOX_CAP = 10**6
GRAPH_CAP = 10**7
CONSTANCY_DEGREE_CAP = 4096

SIGMA1_BUCKETS = ("<=1", "(1,3/2]", "(3/2,2]", ">2")
SIGMA2_BUCKETS = ("<=3/2", "(3/2,2]", "(2,3]", ">3")
TIERS = ("low", "mid", "high", "above")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; independent streams come from ``spawn``."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class TupleParams:
    l: int
    c: int
    v: tuple
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(int(x) for x in self.v))
        if self.l < 1:
            raise PreconditionError("l must be >= 1")
        if len(self.v) != 2 * self.l:
            raise PreconditionError(f"shift vector must have length 2l = {2 * self.l}")
        if self.c == 0:
            raise PreconditionError("c must be nonzero")
        if self.d < 1:
            raise PreconditionError("d must be >= 1")

    def check_field(self, ctx):
        if self.c % ctx.p == 0 or self.d % ctx.p == 0:
            raise PreconditionError("c and d must be invertible mod the characteristic")


def is_paired(v: Sequence[int], l: int) -> bool:
    """True iff the second half is a permutation of the first half."""
    return sorted(v[:l]) == sorted(v[l:])


def exponent_of(value: complex, q: int, zero_tol: float = DEFAULT.zero_tol) -> float:
    a = abs(value)
    return -math.inf if a <= zero_tol else math.log(a) / math.log(q)


def bucket_of(exponent: float, kind: str = "I") -> str:
    if kind == "I":
        cuts, names = (1.0, 1.5, 2.0), SIGMA1_BUCKETS
    else:
        cuts, names = (1.5, 2.0, 3.0), SIGMA2_BUCKETS
    for cut, name in zip(cuts, names):
        if exponent <= cut:
            return name
    return names[-1]


def thresholds(q: int, kind: str = "I", calib: Calibration = DEFAULT) -> tuple:
    if kind == "I":
        return (calib.sigma1_mult_q * q, calib.sigma1_mult_q32 * q**1.5, calib.sigma1_mult_q2 * q**2)
    return (calib.sigma2_mult_q32 * q**1.5, calib.sigma2_mult_q2 * q**2, calib.sigma2_mult_q3 * q**3)


def tier_of(value: complex, q: int, kind: str = "I", calib: Calibration = DEFAULT) -> str:
    a = abs(value)
    for t, name in zip(thresholds(q, kind, calib), TIERS):
        if a <= t:
            return name
    return TIERS[-1]


@dataclass(frozen=True)
class CompleteSumReport:
    kind: str
    value: complex
    exponent: float
    bucket: str
    tier: str
    diagonal_flag: bool
    v: tuple

    @classmethod
    def build(cls, kind, value, q, v, l, calib: Calibration = DEFAULT):
        e = exponent_of(value, q, calib.zero_tol)
        bk = "I" if kind in ("I", "sop") else "II"
        return cls(
            kind=kind,
            value=complex(value),
            exponent=e,
            bucket=bucket_of(e, bk),
            tier=tier_of(value, q, bk, calib),
            diagonal_flag=is_paired(v, l),
            v=tuple(v),
        )


# ---------------------------------------------------------------------------
# K_c tables


def _is_prime_ctx(ctx) -> bool:
    return isinstance(ctx, PrimeFieldCtx)


def _kc_generic(K: TraceTable, v, l: int, c: int) -> np.ndarray:
    """K_c as a ``(|F|, |F|-1)`` matrix using only field-context ops."""
    ctx = K.ctx
    Q = ctx.size
    xs = ctx.elements()
    s = xs[1:]
    kext = K.extended()
    out = np.ones((Q, Q - 1), dtype=np.complex128)
    for i, vi in enumerate(v):
        b = ctx.power(ctx.add(xs, np.int64(vi)), c)
        pole = b == Q
        idx = ctx.mul(np.where(pole, 0, b)[:, None], s[None, :])
        idx = np.where(pole[:, None], Q, idx)
        vals = kext[idx]
        out *= vals if i < l else np.conj(vals)
    return out


def kc_table(K: TraceTable, p: TupleParams) -> np.ndarray:
    ctx = K.ctx
    if _is_prime_ctx(ctx):
        pw = ctx.power(ctx.elements(), p.c)
        return kc_matrix(K.extended(), pw, np.array(p.v) % ctx.q, p.l, ctx.q)
    return _kc_generic(K, p.v, p.l, p.c)


def sigma_I(K: TraceTable, p: TupleParams) -> complex:
    p.check_field(K.ctx)
    return complex(kc_table(K, p).sum())


def sigma_I_batch(K: TraceTable, l: int, c: int, tuples) -> np.ndarray:
    ctx = K.ctx
    tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, 2 * l)
    if _is_prime_ctx(ctx):
        pw = ctx.power(ctx.elements(), c)
        return sigma1_batch(K.extended(), pw, tuples % ctx.q, l, ctx.q)
    return np.array([_kc_generic(K, t, l, c).sum() for t in tuples], dtype=np.complex128)


def _roots_of_unity_mask(ctx, d: int) -> np.ndarray:
    """Boolean ``(|F|-1, |F|-1)`` mask of pairs ``(s1, s2)`` with ``s1^d != s2^d``."""
    s = ctx.elements()[1:]
    sd = ctx.power(s, d)
    return sd[:, None] != sd[None, :]


def _mu_d(ctx, d: int) -> np.ndarray:
    s = ctx.elements()[1:]
    return s[ctx.power(s, d) == 1]


def sigma_II(K: TraceTable, p: TupleParams) -> complex:
    p.check_field(K.ctx)
    kc = kc_table(K, p)
    mask = _roots_of_unity_mask(K.ctx, p.d).astype(np.float64)
    return complex(np.sum((kc @ mask) * np.conj(kc)))


def sigma_II_decomposition(K: TraceTable, p: TupleParams) -> complex:
    """``sum_r |sum_s K_c|^2 - sum_{xi^d=1} sum_{r,s} K_c(r,s) conj K_c(r, xi s)``."""
    ctx = K.ctx
    kc = kc_table(K, p)
    full = np.sum(np.abs(kc.sum(axis=1)) ** 2)
    s = ctx.elements()[1:]
    corr = 0j
    for xi in _mu_d(ctx, p.d):
        perm = ctx.mul(np.int64(xi), s) - 1  # column of xi*s
        corr += np.sum(kc * np.conj(kc[:, perm]))
    return complex(full - corr)


def sum_of_products(K: TraceTable, l: int, u: Sequence[int]) -> complex:
    ctx = K.ctx
    u = tuple(int(x) for x in u)
    if len(u) != 2 * l:
        raise PreconditionError(f"need 2l = {2 * l} entries")
    if _is_prime_ctx(ctx):
        return complex(sop_batch(K.values, np.array([u]) % ctx.q, l, ctx.q)[0])
    s = ctx.elements()[1:]
    acc = np.ones(s.shape, dtype=np.complex128)
    for i, ui in enumerate(u):
        vals = K.values[ctx.mul(np.int64(ui), s)]
        acc *= vals if i < l else np.conj(vals)
    return complex(acc.sum())


def sum_of_products_batch(K: TraceTable, l: int, tuples) -> np.ndarray:
    ctx = K.ctx
    tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, 2 * l)
    if _is_prime_ctx(ctx):
        return sop_batch(K.values, tuples % ctx.q, l, ctx.q)
    return np.array([sum_of_products(K, l, t) for t in tuples])


# ---------------------------------------------------------------------------
# box averages


@dataclass(frozen=True)
class BoxAverage:
    mean: float
    normalized: float
    stderr: float
    n_tuples: int
    mode: str
    seed: Optional[int] = None


def box_tuples(l: int, V: int):
    return np.array(list(itertools.product(range(V, 2 * V + 1), repeat=2 * l)), dtype=np.int64)


def box_average(
    K: TraceTable, l: int, V: int, c: int = 1, mode: str = "exhaustive", n: int = 500, seed: int = 0
) -> BoxAverage:
    """Average of ``|Sigma_I|`` over integer shift vectors in ``[V, 2V]^{2l}``.

    ``mean`` averages over the ``(V+1)^{2l}`` lattice points; ``normalized``
    divides the total by ``V^{2l}`` instead (sampled totals are extrapolated).
    """
    q = K.q
    if V < 0 or 4 * V >= q:
        raise RangeViolation("need 0 <= V and 2V < q/2")
    count = (V + 1) ** (2 * l)
    if mode == "exhaustive":
        if count > BOX_CAP:
            raise BoxTooLarge(f"(V+1)^(2l) = {count} tuples exceed cap {BOX_CAP}")
        tuples = box_tuples(l, V)
        used_seed = None
    elif mode == "sample":
        tuples = make_rng(seed).integers(V, 2 * V + 1, size=(n, 2 * l))
        used_seed = seed
    else:
        raise ValueError(f"unknown mode {mode!r}")
    vals = np.abs(sigma_I_batch(K, l, c, tuples))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if mode == "sample" and len(vals) > 1 else 0.0
    norm = mean * count / (V ** (2 * l)) if V > 0 else mean
    return BoxAverage(mean, norm, se, len(tuples), mode, used_seed)


# ---------------------------------------------------------------------------
# moments and the exchange identity


@dataclass(frozen=True)
class MomentReport:
    kind: str
    l: int
    m: int
    field_size: int
    direct: float
    exchanged: float
    rel_err: float
    bound: float

    @property
    def agrees(self) -> bool:
        return self.rel_err <= 1e-6

    @property
    def bound_ratio(self) -> float:
        return self.direct / self.bound


def _column_table(K: TraceTable, c: int, kind: str, d: int) -> np.ndarray:
    """``A[x, y]`` with ``y`` running over the (r, s) or (r, s1, s2) index set.

    Sigma_I: ``A[x, (r, s)] = K(s (x + r)^c)``.
    Sigma_II: ``A[x, (r, s1, s2)] = K(s1 (x+r)^c) conj K(s2 (x+r)^c)`` with s1^d != s2^d.
    """
    ctx = K.ctx
    Q = ctx.size
    xs = ctx.elements()
    s = xs[1:]
    kext = K.extended()
    # B[x, r, s] = K(s (x + r)^c)
    b = ctx.power(ctx.add(xs[:, None], xs[None, :]), c)
    pole = b == Q
    idx = ctx.mul(np.where(pole, 0, b)[:, :, None], s[None, None, :])
    idx = np.where(pole[:, :, None], Q, idx)
    B = kext[idx]
    if kind == "I":
        return B.reshape(Q, Q * (Q - 1))
    i1, i2 = np.nonzero(_roots_of_unity_mask(ctx, d))
    A = B[:, :, i1] * np.conj(B[:, :, i2])
    return A.reshape(Q, -1)


def _exchanged_moment(A: np.ndarray, l: int, m: int) -> float:
    """``sum_{y in Y^{2m}} |sum_x prod_{j<m} A[x,y_j] conj A[x,y_{j+m}]|^{2l}``."""
    Q, Y = A.shape
    Pm = A
    for _ in range(m - 1):
        Pm = (Pm[:, :, None] * A[:, None, :]).reshape(Q, -1)
    total = 0.0
    rows = Pm.shape[1]
    block = max(1, int(4_000_000 // max(rows, 1)))
    for start in range(0, rows, block):
        S = Pm[:, start : start + block].T @ np.conj(Pm)
        total += float(np.sum(np.abs(S) ** (2 * l)))
    return total


def _all_tuples(Q: int, k: int) -> np.ndarray:
    grid = np.indices((Q,) * k).reshape(k, -1).T
    return np.ascontiguousarray(grid, dtype=np.int64)


def _field_for(K: TraceTable, n_ext: int) -> TraceTable:
    if n_ext == 1:
        return K
    base = K.ctx if _is_prime_ctx(K.ctx) else K.ctx.base
    return retabulate(K, build_extension(base, n_ext))


def _check_moment_caps(q: int, l: int, m: int, n_ext: int, k: int):
    if q ** (2 * l * n_ext) > MOMENT_CAP:
        raise TooLarge(f"q^(2l n) = {q ** (2 * l * n_ext)} exceeds {MOMENT_CAP}")
    if q ** (k * m * n_ext) > MOMENT_CAP:
        raise TooLarge(f"q^({k}m n) = {q ** (k * m * n_ext)} exceeds {MOMENT_CAP}")


def moment_sigma_I(K: TraceTable, l: int, m: int, n_ext: int = 1, c: int = 1) -> MomentReport:
    """``sum_{v in k^{2l}} |Sigma_I(v; k)|^{2m}`` two ways, over ``k = F_{q^n}``."""
    _check_moment_caps(K.ctx.p, l, m, n_ext, 4)
    Kn = _field_for(K, n_ext)
    Q = Kn.ctx.size
    vals = sigma_I_batch(Kn, l, c, _all_tuples(Q, 2 * l))
    direct = float(np.sum(np.abs(vals) ** (2 * m)))
    exch = _exchanged_moment(_column_table(Kn, c, "I", 1), l, m)
    rel = abs(direct - exch) / max(abs(direct), abs(exch), 1e-300)
    bound = float(Q) ** (2 * m + 2 * l) + float(Q) ** (4 * m + l)
    return MomentReport("I", l, m, Q, direct, exch, rel, bound)


def moment_sigma_II(K: TraceTable, l: int, m: int, n_ext: int = 1, c: int = 1, d: int = 1) -> MomentReport:
    _check_moment_caps(K.ctx.p, l, m, n_ext, 6)
    Kn = _field_for(K, n_ext)
    Q = Kn.ctx.size
    direct = 0.0
    for t in _all_tuples(Q, 2 * l):
        p = TupleParams(l, c, tuple(t), d)
        direct += abs(sigma_II(Kn, p)) ** (2 * m)
    exch = _exchanged_moment(_column_table(Kn, c, "II", d), l, m)
    rel = abs(direct - exch) / max(abs(direct), abs(exch), 1e-300)
    bound = float(Q) ** (3 * m + 2 * l) + float(Q) ** (6 * m + l)
    return MomentReport("II", l, m, Q, direct, exch, rel, bound)


# ---------------------------------------------------------------------------
# surveys


def random_paired_tuple(rng, q: int, l: int) -> tuple:
    first = rng.integers(0, q, size=l)
    return tuple(int(x) for x in np.concatenate([first, rng.permutation(first)]))


@dataclass
class SurveyResult:
    q: int
    label: str
    kind: str
    l: int
    c: int
    d: int
    seed: Optional[int]
    thresholds: tuple
    reports: list = field(default_factory=list)
    diagonal_reports: list = field(default_factory=list)

    def counts(self, attr: str = "bucket", diagonal: bool = False) -> dict:
        names = TIERS if attr == "tier" else (SIGMA1_BUCKETS if self.kind == "I" else SIGMA2_BUCKETS)
        out = {k: 0 for k in names}
        for r in self.diagonal_reports if diagonal else self.reports:
            out[getattr(r, attr)] += 1
        return out

    def fraction_in_tier(self, tier: str = "low") -> float:
        if not self.reports:
            return 0.0
        return sum(r.tier == tier for r in self.reports) / len(self.reports)

    def top_fraction(self) -> float:
        """Share of random tuples above exponent 3/2 (Sigma_I) or 2 (Sigma_II)."""
        cut = 1.5 if self.kind == "I" else 2.0
        if not self.reports:
            return 0.0
        return sum(r.exponent > cut for r in self.reports) / len(self.reports)

    def summary(self) -> dict:
        return {
            "q": self.q,
            "kernel": self.label,
            "kind": self.kind,
            "l": self.l,
            "c": self.c,
            "d": self.d,
            "seed": self.seed,
            "samples": len(self.reports),
            "diagonal_samples": len(self.diagonal_reports),
            "bucket_counts": self.counts("bucket"),
            "tier_counts": self.counts("tier"),
            "diagonal_bucket_counts": self.counts("bucket", diagonal=True),
            "thresholds": list(self.thresholds),
            "top_fraction": self.top_fraction(),
            "q_pow_minus_l": float(self.q) ** (-self.l),
        }


def diagonal_survey(
    K: TraceTable,
    l: int,
    c: int = 1,
    mode: str = "sample",
    n: int = 2000,
    seed: int = 0,
    n_diagonal: int = 50,
    kind: str = "I",
    d: int = 1,
    calib: Calibration = DEFAULT,
) -> SurveyResult:
    """Bucket histogram of Sigma_I (or Sigma_II) over random and paired shift vectors.

    ``mode="exhaustive"`` enumerates all of ``F^{2l}`` (cap ``10^7``).
    """
    q = K.q
    rng = make_rng(seed)
    if mode == "exhaustive":
        if q ** (2 * l) > MOMENT_CAP:
            raise TooLarge("exhaustive survey too large")
        tuples = _all_tuples(q, 2 * l)
    elif mode == "sample":
        tuples = rng.integers(0, q, size=(n, 2 * l))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    diag = np.array([random_paired_tuple(rng, q, l) for _ in range(n_diagonal)], dtype=np.int64).reshape(
        -1, 2 * l
    )

    def evaluate(ts):
        if kind == "I":
            return sigma_I_batch(K, l, c, ts)
        return np.array([sigma_II(K, TupleParams(l, c, tuple(t), d)) for t in ts])

    res = SurveyResult(q, K.label, kind, l, c, d, seed, thresholds(q, kind, calib))
    for t, val in sorted(zip(map(tuple, tuples.tolist()), evaluate(tuples))):
        res.reports.append(CompleteSumReport.build(kind, val, q, t, l, calib))
    for t, val in zip(map(tuple, diag.tolist()), evaluate(diag)):
        res.diagonal_reports.append(CompleteSumReport.build(kind, val, q, t, l, calib))
    return res


def sop_survey(K: TraceTable, l: int, n: int = 500, seed: int = 0, n_diagonal: int = 50):
    """Random ``u`` in ``(F^x)^{2l}`` avoiding cross-half coincidences, plus paired ``u``.

    Returns ``(generic_tuples, generic_values, diagonal_tuples, diagonal_values)``.
    """
    q = K.q
    rng = make_rng(seed)
    gen = []
    while len(gen) < n:
        u = rng.integers(1, q, size=2 * l)
        if not set(u[:l].tolist()) & set(u[l:].tolist()):
            gen.append(u)
    gen = np.array(gen, dtype=np.int64).reshape(-1, 2 * l)
    diag = []
    for _ in range(n_diagonal):
        first = rng.integers(1, q, size=l)
        diag.append(np.concatenate([first, rng.permutation(first)]))
    diag = np.array(diag, dtype=np.int64).reshape(-1, 2 * l)
    return gen, sum_of_products_batch(K, l, gen), diag, sum_of_products_batch(K, l, diag)


# ---------------------------------------------------------------------------
# graph counting


@dataclass(frozen=True)
class GraphCount:
    count: int
    max_degree: int
    n_vertices: int
    m: int
    bound: float
    ratio: float

    @property
    def bound_ok(self) -> bool:
        return self.count <= self.bound


def delta_graph_count(vertices: Sequence, edges, m: int) -> GraphCount:
    """``|Delta_m(V, E)|``: tuples in ``V^{2m}`` where every entry is adjacent
    (a loop counts for equal entries) to an entry at another position."""
    verts = list(vertices)
    nv = len(verts)
    if nv ** (2 * m) > GRAPH_CAP:
        raise TooLarge(f"|V|^(2m) = {nv ** (2 * m)} exceeds {GRAPH_CAP}")
    pos = {v: i for i, v in enumerate(verts)}
    adj = np.zeros((nv, nv), dtype=bool)
    for a, b in edges:
        adj[pos[a], pos[b]] = adj[pos[b], pos[a]] = True
    k = 2 * m
    tuples = _all_tuples(nv, k) if nv else np.zeros((0, k), dtype=np.int64)
    ok = np.ones(len(tuples), dtype=bool)
    for i in range(k):
        hit = np.zeros(len(tuples), dtype=bool)
        for j in range(k):
            if j != i:
                hit |= adj[tuples[:, i], tuples[:, j]]
        ok &= hit
    count = int(ok.sum())
    C = int(adj.sum(axis=1).max()) if nv else 0
    base = float(max(C, 1)) ** k * float(nv) ** m
    n_graphs = 2.0 ** (m * (2 * m + 1))
    return GraphCount(count, C, nv, m, n_graphs * base, count / base if base else 0.0)


# ---------------------------------------------------------------------------
# rank-one constancy


def _shifted_power(r: int, s: int, c: int, q: int) -> RationalFn:
    lin = P.trim((r, 1), q)
    if c > 0:
        return RationalFn.make(P.scale(P.power(lin, c, q), s, q), (1,), q)
    return RationalFn.make((s % q,), P.power(lin, -c, q), q)


def rank1_phase_combination(g: RationalFn, c: int, r: Sequence[int], s: Sequence[int]) -> RationalFn:
    """``sum_j g(s_j (X+r_j)^c) - g(s_{j+m} (X+r_{j+m})^c)`` as a reduced rational function."""
    q = g.q
    if len(r) != len(s) or len(r) % 2:
        raise PreconditionError("r and s must have equal even length 2m")
    m = len(r) // 2
    if g.degree() * abs(c) * 2 * m > CONSTANCY_DEGREE_CAP:
        raise DegreeOverflow("degree of the combination exceeds the cap")
    acc = RationalFn.poly((), q)
    for j in range(2 * m):
        term = g.compose(_shifted_power(int(r[j]), int(s[j]), c, q))
        acc = acc + term if j < m else acc - term
    return acc


def rank1_constancy_test(g: RationalFn, c: int, r: Sequence[int], s: Sequence[int]) -> bool:
    return rank1_phase_combination(g, c, r, s).is_constant()
