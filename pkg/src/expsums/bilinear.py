"""Type I, Type II and trilinear sums with monomial arguments.

All sums have the shape ``sum alpha_m beta_n K(m^b n^c)`` with ``m ~ M``
meaning ``M <= m < 2M``.  Besides the exact values this module provides the
trivial bounds, the predicted right-hand sides (implied constant 1), the
operator-norm worst case over unit coefficient vectors, and the counting
tables that appear when the sums are reduced to complete sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .calibration import DEFAULT, Calibration
from .complete import box_tuples, make_rng, sigma_I_batch, sigma_II, TupleParams
from .errors import BadExponent, ConstraintViolation, RangeViolation, TooLarge
from .tracefn import TraceTable

LOOP_CAP = 10**7
MATRIX_CAP = 10**7
HOLDER_BOX_CAP = 4096


@dataclass(frozen=True)
class CoefSeq:
    """Coefficients ``values[k]`` attached to ``m = start + k`` for ``start <= m < 2 start``."""

    start: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.start < 1:
            raise RangeViolation("start must be >= 1")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.start,):
            raise RangeViolation(f"need {self.start} values for the range [{self.start}, {2 * self.start})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def length(self) -> int:
        return self.start

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.start, 2 * self.start, dtype=np.int64)

    @cached_property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.values)))

    @cached_property
    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    @classmethod
    def ones(cls, M: int) -> "CoefSeq":
        return cls(M, np.ones(M))

    @classmethod
    def zeros(cls, M: int) -> "CoefSeq":
        return cls(M, np.zeros(M))

    @classmethod
    def random_sign(cls, M: int, seed: int) -> "CoefSeq":
        return cls(M, make_rng(seed).choice([-1.0, 1.0], size=M))

    @classmethod
    def random_unit(cls, M: int, seed: int) -> "CoefSeq":
        return cls(M, np.exp(2j * np.pi * make_rng(seed).random(M)))

    @classmethod
    def generate(cls, kind: str, M: int, seed: int = 0) -> "CoefSeq":
        if kind == "ones":
            return cls.ones(M)
        if kind == "sign":
            return cls.random_sign(M, seed)
        if kind == "unit":
            return cls.random_unit(M, seed)
        raise ValueError(f"unknown coefficient generator {kind!r}")


@dataclass
class BilinearReport:
    kind: str
    value: complex
    trivial_bound: float
    bound_rhs: float
    params: dict
    sigma_max: Optional[float] = None
    seed: Optional[int] = None
    warnings: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.trivial_bound if self.trivial_bound else 0.0

    @property
    def constant_estimate(self) -> float:
        return abs(self.value) / self.bound_rhs if self.bound_rhs else 0.0

    def to_json(self) -> dict:
        out = dict(self.params)
        out.update(
            kind=self.kind,
            value={"re": self.value.real, "im": self.value.imag},
            trivial=self.trivial_bound,
            bound_rhs=self.bound_rhs,
            ratio=self.ratio,
            seed=self.seed,
            warnings=list(self.warnings),
        )
        if self.sigma_max is not None:
            out["sigma_max"] = self.sigma_max
        return out


# ---------------------------------------------------------------------------
# monomial arguments


def _check_exponent(e: int, q: int):
    if e == 0 or math.gcd(e, q) != 1:
        raise BadExponent(f"exponent {e} must be coprime to q={q}")


def power_residues(xs: np.ndarray, e: int, q: int) -> np.ndarray:
    """``x^e mod q`` for integer ``x``; negative ``e`` uses the inverse.

    Returns ``q`` where ``x = 0 mod q`` and ``e < 0``; callers reject that.
    """
    xs = np.asarray(xs, dtype=np.int64) % q
    out = np.array([pow(int(x), e % (q - 1) if e < 0 else e, q) for x in xs], dtype=np.int64)
    zero = xs == 0
    if e < 0 and zero.any():
        raise BadExponent(f"0 has no inverse mod {q} (negative exponent {e})")
    out[zero] = 0
    return out


def kernel_matrix(K: TraceTable, b: int, c: int, M: int, N: int) -> np.ndarray:
    """``A[i, j] = K(m^b n^c)`` for ``m = M + i``, ``n = N + j``."""
    q = K.q
    _check_exponent(b, q)
    _check_exponent(c, q)
    if M * N > MATRIX_CAP:
        raise TooLarge(f"M*N = {M * N} exceeds {MATRIX_CAP}")
    mb = power_residues(np.arange(M, 2 * M), b, q)
    nc = power_residues(np.arange(N, 2 * N), c, q)
    return K.values[(mb[:, None] * nc[None, :]) % q]


def _hyp_type1(q, l, M, N) -> list:
    w = []
    if M > q:
        w.append("M > q")
    if N < 10 * q ** (1 / l):
        w.append("N < 10 q^{1/l}")
    if N > q ** (0.5 + 1 / (2 * l)):
        w.append("N > q^{1/2 + 1/(2l)}")
    return w


def _hyp_type2(q, l, M, N) -> list:
    w = []
    if M > q or N > q:
        w.append("M or N > q")
    if N < 10 * q ** (3 / (2 * l)):
        w.append("N < 10 q^{3/(2l)}")
    if N > q ** (0.5 + 3 / (4 * l)):
        w.append("N > q^{1/2 + 3/(4l)}")
    return w


def type1_rhs(q, l, M, N, a2) -> float:
    return a2 * M**0.5 * N * (q ** (1 + 3 / (2 * l)) / (M * N**2)) ** (1 / (2 * l))


def type2_rhs(q, l, M, N, a2, b2) -> float:
    return a2 * b2 * (M * N) ** 0.5 * (1 / M + (q ** (0.75 + 7 / (4 * l)) / (M * N)) ** (1 / l)) ** 0.5


def trilinear_rhs(q, l, J, M, N) -> float:
    return J * M * N * (q**0.5 / (M * N) + q / (J**l * M * N)) ** (1 / (2 * l))


def type1_sum(K: TraceTable, b: int, c: int, alpha: CoefSeq, N: int, l: int = 2) -> BilinearReport:
    q, M = K.q, alpha.start
    A = kernel_matrix(K, b, c, M, N)
    value = complex(alpha.values @ A.sum(axis=1))
    trivial = alpha.l2 * M**0.5 * N * K.sup_norm
    return BilinearReport(
        "type1",
        value,
        trivial,
        type1_rhs(q, l, M, N, alpha.l2),
        dict(q=q, kernel=K.label, b=b, c=c, l=l, M=M, N=N),
        warnings=_hyp_type1(q, l, M, N),
    )


def type2_sum(K: TraceTable, b: int, c: int, alpha: CoefSeq, beta: CoefSeq, l: int = 2) -> BilinearReport:
    q, M, N = K.q, alpha.start, beta.start
    A = kernel_matrix(K, b, c, M, N)
    value = complex(alpha.values @ A @ beta.values)
    trivial = alpha.l2 * beta.l2 * (M * N) ** 0.5 * K.sup_norm
    return BilinearReport(
        "type2",
        value,
        trivial,
        type2_rhs(q, l, M, N, alpha.l2, beta.l2),
        dict(q=q, kernel=K.label, b=b, c=c, l=l, M=M, N=N),
        warnings=_hyp_type2(q, l, M, N),
    )


def _check_trilinear(q, alpha, beta, gamma):
    J, M, N = alpha.start, beta.start, gamma.start
    if J > 4 * q or M * N > 4 * q:
        raise RangeViolation("need J <= 4q and MN <= 4q")
    for seq in (alpha, beta, gamma):
        if np.any(np.abs(seq.values) > 1 + 1e-12):
            raise RangeViolation("trilinear coefficients must have modulus <= 1")


def trilinear_sum(
    K: TraceTable, a: int, b: int, c: int, alpha: CoefSeq, beta: CoefSeq, gamma: CoefSeq, l: int = 2
) -> BilinearReport:
    """``sum_{j,m,n} alpha_j beta_m gamma_n K(j^a m^b n^c)`` by direct summation."""
    q = K.q
    for e in (a, b, c):
        _check_exponent(e, q)
    _check_trilinear(q, alpha, beta, gamma)
    J, M, N = alpha.start, beta.start, gamma.start
    ja = power_residues(alpha.support, a, q)
    mb = power_residues(beta.support, b, q)
    nc = power_residues(gamma.support, c, q)
    mn = (mb[:, None] * nc[None, :]) % q
    w = beta.values[:, None] * gamma.values[None, :]
    value = 0j
    for x, aj in zip(ja, alpha.values):
        if aj != 0:
            value += aj * np.sum(w * K.values[(x * mn) % q])
    return BilinearReport(
        "trilinear",
        complex(value),
        J * M * N * K.sup_norm,
        trilinear_rhs(q, l, J, M, N),
        dict(q=q, kernel=K.label, a=a, b=b, c=c, l=l, J=J, M=M, N=N),
    )


@dataclass
class XiZetaReport:
    xi: np.ndarray
    zeta: np.ndarray
    contraction: complex
    direct: complex
    rel_err: float
    norms: dict

    @property
    def identity_ok(self) -> bool:
        return self.rel_err <= 1e-6


def xi_zeta(K: TraceTable, a: int, b: int, c: int, alpha: CoefSeq, beta: CoefSeq, gamma: CoefSeq,
            calib: Calibration = DEFAULT) -> XiZetaReport:
    """Pushforwards ``xi_u = sum_{j^a = u} alpha_j`` and ``zeta_v = sum_{m^b n^c = v} beta_m gamma_n``.

    Both tables are indexed by all of ``F_q``; the contraction
    ``sum_{u,v} xi_u zeta_v K(uv)`` is compared with :func:`trilinear_sum`.
    """
    q = K.q
    direct = trilinear_sum(K, a, b, c, alpha, beta, gamma).value
    J, M, N = alpha.start, beta.start, gamma.start
    xi = np.zeros(q, dtype=np.complex128)
    np.add.at(xi, power_residues(alpha.support, a, q), alpha.values)
    zeta = np.zeros(q, dtype=np.complex128)
    keys = (power_residues(beta.support, b, q)[:, None] * power_residues(gamma.support, c, q)[None, :]) % q
    np.add.at(zeta, keys.ravel(), (beta.values[:, None] * gamma.values[None, :]).ravel())
    us = np.flatnonzero(xi)
    vs = np.flatnonzero(zeta)
    contraction = complex(xi[us] @ K.values[(us[:, None] * vs[None, :]) % q] @ zeta[vs])
    rel = abs(contraction - direct) / max(abs(direct), abs(contraction), 1e-300)
    logq = math.log(q)
    xi_l1 = float(np.abs(xi).sum())
    xi_l2 = float(np.sum(np.abs(xi) ** 2))
    zeta_l2 = float(np.sum(np.abs(zeta) ** 2))
    norms = dict(
        xi_l1=xi_l1,
        xi_l1_bound=abs(a) * J + abs(a),
        xi_l2sq=xi_l2,
        xi_l2sq_const=xi_l2 / (J * (J / q + 1)),
        zeta_l2sq=zeta_l2,
        zeta_l2sq_const=zeta_l2 / ((M * N) ** 2 / q + M * N * logq**2),
        ceiling=calib.norm_report_ceiling,
    )
    return XiZetaReport(xi, zeta, contraction, complex(direct), rel, norms)


# ---------------------------------------------------------------------------
# operator norm


@dataclass(frozen=True)
class OpNormResult:
    sigma_max: float
    ratio: float
    converged: bool
    iterations: int
    seed: int
    right_vector: np.ndarray = field(repr=False)


def power_iteration(A: np.ndarray, iters: int = 200, seed: int = 0, tol: float = 1e-12):
    """Largest singular value of ``A`` by power iteration on ``A^H A``."""
    rng = make_rng(seed)
    n = A.shape[1]
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    x /= np.linalg.norm(x)
    AH = A.conj().T
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, iters + 1):
        y = AH @ (A @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0, True, it, x
        new = float(np.real(np.vdot(x, y)))
        x = y / nrm
        if it > 1 and abs(new - lam) <= tol * max(abs(new), 1e-300):
            lam = new
            converged = True
            break
        lam = new
    return math.sqrt(max(lam, 0.0)), converged, it, x


def operator_norm(K: TraceTable, b: int, c: int, M: int, N: int, iters: int = 200, seed: int = 0) -> OpNormResult:
    A = kernel_matrix(K, b, c, M, N)
    s, conv, it, x = power_iteration(A, iters, seed)
    sup = K.sup_norm
    ratio = s / (math.sqrt(M * N) * sup) if sup else 0.0
    return OpNormResult(s, ratio, conv, it, seed, x)


def singular_vector_coeffs(K: TraceTable, b: int, c: int, M: int, N: int, iters: int = 200, seed: int = 0):
    """Unit coefficient pair ``(alpha, beta)`` nearly realizing the operator norm."""
    A = kernel_matrix(K, b, c, M, N)
    _, _, _, x = power_iteration(A, iters, seed)
    y = A @ x
    ny = np.linalg.norm(y)
    alpha = y.conj() / ny if ny else y
    return CoefSeq(M, alpha), CoefSeq(N, x)


def fit_slope(qs, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(q)``."""
    x = np.log(np.asarray(qs, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# counting tables nu


@dataclass
class NuReport:
    table: dict
    l1: float
    l2sq: float
    mass_expected: float
    bounds: dict

    @property
    def mass_ok(self) -> bool:
        return math.isclose(self.l1, self.mass_expected, rel_tol=1e-12, abs_tol=1e-12)


def default_U(N: int, V: int) -> int:
    return max(1, int(N // (10 * V)))


def _tabulate(keys: np.ndarray, weights: np.ndarray) -> dict:
    if keys.size == 0:
        return {}
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    mass = np.zeros(len(uniq))
    np.add.at(mass, inv.ravel(), weights)
    return {tuple(int(x) for x in k): float(w) for k, w in zip(uniq, mass) if w != 0}


def nu_table(q: int, b: int, c: int, alpha: CoefSeq, N: int, U: Optional[int] = None, V: int = 1,
             calib: Calibration = DEFAULT) -> NuReport:
    """``nu(r, s) = sum |alpha_m|`` over ``u^c m^b = s``, ``n / u = r`` with ``m~M, n~N, u~U``.

    Terms with ``u`` or ``m`` divisible by ``q`` are dropped.
    """
    _check_exponent(b, q)
    _check_exponent(c, q)
    M = alpha.start
    U = default_U(N, V) if U is None else U
    if M * N * U > LOOP_CAP:
        raise TooLarge(f"M*N*U = {M * N * U} exceeds {LOOP_CAP}")
    ms = alpha.support
    ns = np.arange(N, 2 * N, dtype=np.int64)
    us = np.arange(U, 2 * U, dtype=np.int64)
    keep_m = ms % q != 0
    keep_u = us % q != 0
    ms, w = ms[keep_m], np.abs(alpha.values)[keep_m]
    us = us[keep_u]
    mb = power_residues(ms, b, q)
    uc = power_residues(us, c, q)
    ubar = power_residues(us, -1, q) if us.size else us
    s = (uc[:, None, None] * mb[None, :, None]) % q
    r = (ubar[:, None, None] * ns[None, None, :]) % q
    s, r = np.broadcast_arrays(s, r)
    wt = np.broadcast_to(w[None, :, None], s.shape)
    keys = np.stack([r.ravel(), s.ravel()], axis=1)
    table = _tabulate(keys, wt.ravel())
    l1 = float(sum(table.values()))
    l2 = float(sum(x * x for x in table.values()))
    expected = float(len(us) * N * w.sum())
    a2 = alpha.l2
    rhs1 = U * N * M**0.5 * a2
    rhs2 = q**calib.epsilon * a2**2 * U * N * (1 + U * N / q) * (1 + M / q)
    bounds = dict(
        U=U,
        V=V,
        l1_rhs=rhs1,
        l1_const=l1 / rhs1 if rhs1 else 0.0,
        l2sq_rhs=rhs2,
        l2sq_const=l2 / rhs2 if rhs2 else 0.0,
        epsilon=calib.epsilon,
        ceiling=calib.norm_report_ceiling,
    )
    return NuReport(table, l1, l2, expected, bounds)


def nu2_table(q: int, b: int, c: int, alpha: CoefSeq, N: int, U: int, calib: Calibration = DEFAULT) -> NuReport:
    """``nu(r, s1, s2) = sum |alpha_{m1} alpha_{m2}|`` over ``n/u = r``, ``u^c m_i^b = s_i``."""
    _check_exponent(b, q)
    _check_exponent(c, q)
    M = alpha.start
    if M > q or U * N > q:
        raise RangeViolation("need M <= q and UN <= q")
    if M * M * N * U > LOOP_CAP:
        raise TooLarge(f"M^2*N*U = {M * M * N * U} exceeds {LOOP_CAP}")
    ms = alpha.support
    keep = ms % q != 0
    ms, w = ms[keep], np.abs(alpha.values)[keep]
    us = np.arange(U, 2 * U, dtype=np.int64)
    us = us[us % q != 0]
    ns = np.arange(N, 2 * N, dtype=np.int64)
    mb = power_residues(ms, b, q)
    uc = power_residues(us, c, q)
    ubar = power_residues(us, -1, q) if us.size else us
    shape = (len(us), len(ns), len(ms), len(ms))
    r = np.broadcast_to(((ubar[:, None] * ns[None, :]) % q)[:, :, None, None], shape)
    s1 = np.broadcast_to(((uc[:, None] * mb[None, :]) % q)[:, None, :, None], shape)
    s2 = np.broadcast_to(((uc[:, None] * mb[None, :]) % q)[:, None, None, :], shape)
    wt = np.broadcast_to((w[:, None] * w[None, :])[None, None, :, :], shape)
    keys = np.stack([r.ravel(), s1.ravel(), s2.ravel()], axis=1)
    table = _tabulate(keys, wt.ravel())
    l1 = float(sum(table.values()))
    l2 = float(sum(x * x for x in table.values()))
    expected = float(len(us) * N * w.sum() ** 2)
    a2 = alpha.l2
    rhs1 = U * M * N * a2**2
    rhs2 = q**calib.epsilon * a2**4 * U * N
    bounds = dict(
        U=U,
        l1_rhs=rhs1,
        l1_const=l1 / rhs1 if rhs1 else 0.0,
        l2sq_rhs=rhs2,
        l2sq_const=l2 / rhs2 if rhs2 else 0.0,
        epsilon=calib.epsilon,
        ceiling=calib.norm_report_ceiling,
    )
    return NuReport(table, l1, l2, expected, bounds)


# ---------------------------------------------------------------------------
# reduction to complete sums


@dataclass
class HolderReport:
    kind: str
    lhs: float
    rhs: float
    box_sum: float
    n_box: int
    box_mode: str
    params: dict

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else 0.0

    def to_json(self) -> dict:
        out = dict(self.params)
        out.update(kind=self.kind, lhs=self.lhs, rhs=self.rhs, ratio=self.ratio,
                   box_sum=self.box_sum, n_box=self.n_box, box_mode=self.box_mode)
        return out


def holder_chain_report(
    K: TraceTable,
    b: int,
    c: int,
    l: int,
    alpha: CoefSeq,
    N: int,
    V: int,
    beta: Optional[CoefSeq] = None,
    d: int = 1,
    samples: int = 500,
    seed: int = 0,
    calib: Calibration = DEFAULT,
) -> HolderReport:
    """Exact ``|B|`` next to the complete-sum right-hand side with constant 1.

    The box sum over ``[V, 2V]^{2l}`` is exhaustive when it has at most
    ``HOLDER_BOX_CAP`` points, otherwise sampled and rescaled to the box size.
    """
    q = K.q
    M = alpha.start
    if beta is not None and beta.start != N:
        raise ConstraintViolation("beta must live on [N, 2N)")
    if V < 1 or V > N / 10 or M > q or N > q or N * N / V > q:
        raise ConstraintViolation("need 1 <= V <= N/10 and M, N, N^2/V <= q")
    count = (V + 1) ** (2 * l)
    if count <= HOLDER_BOX_CAP:
        tuples, mode = box_tuples(l, V), "exhaustive"
    else:
        tuples, mode = make_rng(seed).integers(V, 2 * V + 1, size=(samples, 2 * l)), "sample"
    eps = q**calib.epsilon
    if beta is None:
        vals = np.abs(sigma_I_batch(K, l, c, tuples))
        box = float(vals.mean() * count)
        lhs = abs(type1_sum(K, b, c, alpha, N, l).value)
        rhs = eps * alpha.l2 * M**0.5 * N * (box / (M * N**2 * V ** (2 * l - 1))) ** (1 / (2 * l))
        kind = "type1"
    else:
        vals = np.array([abs(sigma_II(K, TupleParams(l, c, tuple(t), d))) for t in tuples])
        box = float(vals.mean() * count)
        lhs = abs(type2_sum(K, b, c, alpha, beta, l).value)
        inner = 1 / M + (box / (M**2 * N**2 * V ** (2 * l - 1))) ** (1 / (2 * l))
        rhs = eps * alpha.l2 * beta.l2 * (M * N) ** 0.5 * inner**0.5
        kind = "type2"
    params = dict(q=q, kernel=K.label, b=b, c=c, l=l, d=d, M=M, N=N, V=V, U=N / (10 * V),
                  epsilon=calib.epsilon, seed=seed if mode == "sample" else None)
    return HolderReport(kind, lhs, rhs, box, len(tuples), mode, params)
