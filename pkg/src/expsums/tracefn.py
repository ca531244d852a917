"""Catalog of trace-function kernels tabulated over a finite field.

Every kernel is a complex table ``K[x]`` for ``x`` in the field, with the
value at undefined points set to zero (extension by zero; ``K(inf) = 0`` is
kept in :attr:`TraceTable.at_infinity`).  Kernels defined by multiplicative
convolutions are computed in discrete-log coordinates, where the
convolution over ``F^x`` becomes a cyclic convolution of length ``|F| - 1``.

Catalog identifiers (see :func:`build_kernel`)::

    kl:<r>                      hyper-Kloosterman sum Kl_r
    klchars:<j1>,...,<ja>[@t]   Kloosterman sum twisted by characters chi_j
    hyp:<j1>,.../<k1>,...[@t]   hypergeometric sum Hyp(chi; rho)
    toric:<a>,<b>,<c>           (1/q) sum_{x^a y^b z^c = u} e((x+y+z)/q)
    monomial:<a1>,...,<ar>      sum_{prod x_i^{a_i} = v} e(sum x_i / q)
    fiber:<poly>                #{y : f(y) = x} - 1
    ftphase:<poly>              q^{-1/2} sum_y e(x f(y) / q)
    rank1:<j>;<f>;<g>           chi_j(f(x)) e(g(x) / q)

Polynomials are comma-separated coefficients, lowest degree first; rational
functions are ``num/den``.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field, replace
from math import gcd
from typing import Optional, Sequence

import numpy as np

from . import poly as P
from .errors import (
    DegreeTooLarge,
    ExtensionTooLarge,
    NotDisjoint,
    PreconditionError,
    SingularMatrix,
    UnsupportedExtension,
)
from .ffield import (
    EXT_CAP,
    AddChar,
    ExtFieldCtx,
    MultChar,
    PrimeFieldCtx,
    RationalFn,
    build_extension,
    unit_roots,
)
from .kernels import cyclic_convolve

EXTENSION_BY_ZERO = "extension-by-zero"
PURITY_SLACK = 2.0
SIDON_DEGREE_CAP = 6


@dataclass(frozen=True, eq=False)
class TraceTable:
    ctx: object = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str
    rank: int
    norm_exponent: float
    real_valued: bool = False
    singular_convention: str = EXTENSION_BY_ZERO
    at_infinity: complex = 0j

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def q(self) -> int:
        return self.ctx.size

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def extended(self) -> np.ndarray:
        """Values with the value at infinity appended (index ``q``)."""
        return np.append(self.values, self.at_infinity)

    def purity_ok(self, slack: float = PURITY_SLACK) -> bool:
        return self.sup_norm <= self.rank + slack

    def realness_ok(self, tol: float = 1e-9) -> bool:
        return (not self.real_valued) or bool(np.max(np.abs(self.values.imag), initial=0) <= tol)

    def with_values(self, values, label=None, at_infinity=None) -> "TraceTable":
        return replace(
            self,
            values=values,
            label=self.label if label is None else label,
            at_infinity=self.at_infinity if at_infinity is None else at_infinity,
        )

    def __call__(self, x):
        return self.values[np.asarray(x, dtype=np.int64)]

    # -- export ---------------------------------------------------------------

    def to_csv(self, fh=None) -> Optional[str]:
        """Rows ``u,re,im``; returns the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "re", "im"])
        for u, z in enumerate(self.values):
            w.writerow([u, repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue() if fh is None else None

    def to_bytes(self) -> bytes:
        label = self.label.encode("utf-8")
        header = struct.pack("<4sHQI", BINARY_MAGIC, BINARY_VERSION, self.q, len(label))
        body = np.empty(2 * self.q, dtype="<f8")
        body[0::2] = self.values.real
        body[1::2] = self.values.imag
        return header + label + body.tobytes()


BINARY_MAGIC = b"KTAB"
BINARY_VERSION = 1


def read_binary(data: bytes):
    """Decode :meth:`TraceTable.to_bytes` output into ``(q, label, values)``."""
    head = struct.calcsize("<4sHQI")
    magic, version, q, nlab = struct.unpack("<4sHQI", data[:head])
    if magic != BINARY_MAGIC or version != BINARY_VERSION:
        raise ValueError("not a kernel table")
    label = data[head : head + nlab].decode("utf-8")
    body = np.frombuffer(data[head + nlab : head + nlab + 16 * q], dtype="<f8")
    return int(q), label, body[0::2] + 1j * body[1::2]


def read_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["u", "re", "im"]
    out = np.zeros(len(rows) - 1, dtype=np.complex128)
    for u, re_, im_ in rows[1:]:
        out[int(u)] = complex(float(re_), float(im_))
    return out


@dataclass(frozen=True)
class CharMultiset:
    """Multiset of character indices in ``Z/modulus`` (modulus = |F| - 1)."""

    indices: tuple
    modulus: int

    def __post_init__(self):
        object.__setattr__(
            self, "indices", tuple(sorted(int(j) % self.modulus for j in self.indices))
        )

    @classmethod
    def of(cls, ctx, indices: Sequence[int]) -> "CharMultiset":
        return cls(tuple(indices), ctx.size - 1)

    @property
    def size(self) -> int:
        return len(self.indices)

    def shifted(self, k: int) -> "CharMultiset":
        return CharMultiset(tuple(j + k for j in self.indices), self.modulus)

    def spec(self) -> str:
        return ",".join(str(j) for j in self.indices)


# ---------------------------------------------------------------------------
# discrete-log helpers


def _to_dl(ctx, table: np.ndarray) -> np.ndarray:
    return np.asarray(table)[ctx.expt]


def _from_dl(ctx, arr: np.ndarray) -> np.ndarray:
    out = np.zeros(ctx.size, dtype=np.complex128)
    out[ctx.expt] = arr
    return out


def _pushforward_dl(ctx, arr: np.ndarray, a: int) -> np.ndarray:
    """Pushforward of a dlog-indexed table along ``x -> x^a``."""
    n = ctx.size - 1
    out = np.zeros(n, dtype=np.complex128)
    np.add.at(out, (a * np.arange(n)) % n, arr)
    return out


def _convolve_all(factors, method: str) -> np.ndarray:
    acc = factors[0]
    for f in factors[1:]:
        acc = cyclic_convolve(acc, f, method=method)
    return acc


def _char_dl(ctx, j: int) -> np.ndarray:
    n = ctx.size - 1
    roots = ctx.roots_qm1 if isinstance(ctx, PrimeFieldCtx) else unit_roots(n)
    return roots[(j * np.arange(n)) % n]


# ---------------------------------------------------------------------------
# catalog


def kloosterman(ctx, r: int, method: str = "direct") -> TraceTable:
    if r < 1:
        raise PreconditionError("rank r must be >= 1")
    base = _to_dl(ctx, ctx.psi(1))
    acc = _convolve_all([base] * r, method)
    vals = _from_dl(ctx, acc) / ctx.size ** ((r - 1) / 2)
    return TraceTable(
        ctx, vals, f"kl:{r}", rank=r, norm_exponent=(r - 1) / 2, real_valued=(r % 2 == 0)
    )


def kloosterman_chars(ctx, chars: CharMultiset, psi: Optional[AddChar] = None, method="direct"):
    if chars.size == 0:
        raise PreconditionError("character multiset must be nonempty")
    t = 1 if psi is None else psi.t
    padd = _to_dl(ctx, ctx.psi(t))
    factors = [_char_dl(ctx, j) * padd for j in chars.indices]
    a = chars.size
    vals = _from_dl(ctx, _convolve_all(factors, method)) / ctx.size ** ((a - 1) / 2)
    suffix = "" if t == 1 else f"@{t}"
    return TraceTable(ctx, vals, f"klchars:{chars.spec()}{suffix}", rank=a, norm_exponent=(a - 1) / 2)


def hypergeometric(ctx, chi: CharMultiset, rho: CharMultiset, psi: Optional[AddChar] = None, method="direct"):
    """Hyp(u) with every variable restricted to ``F^x``.

    The ``y``-variables enter through ``w = 1/y``, contributing the factor
    ``rho(w) psi(-1/w)`` so that the constraint becomes a plain product.
    """
    if set(chi.indices) & set(rho.indices):
        raise NotDisjoint("chi and rho must be disjoint multisets")
    r, t_ = chi.size, rho.size
    if r + t_ < 1:
        raise PreconditionError("need r + t >= 1")
    tt = 1 if psi is None else psi.t
    n = ctx.size - 1
    padd = _to_dl(ctx, ctx.psi(tt))
    k = np.arange(n)
    pinv = padd[(-k) % n].conj()  # psi(-1/w) at w = g^k
    factors = [_char_dl(ctx, j) * padd for j in chi.indices]
    factors += [_char_dl(ctx, j) * pinv for j in rho.indices]
    vals = _from_dl(ctx, _convolve_all(factors, method)) / ctx.size ** ((r + t_ - 1) / 2)
    suffix = "" if tt == 1 else f"@{tt}"
    return TraceTable(
        ctx,
        vals,
        f"hyp:{chi.spec()}/{rho.spec()}{suffix}",
        rank=max(r, t_),
        norm_exponent=(r + t_ - 1) / 2,
    )


def _monomial_dl(ctx, exps: Sequence[int], method: str) -> np.ndarray:
    base = _to_dl(ctx, ctx.psi(1))
    return _convolve_all([_pushforward_dl(ctx, base, a) for a in exps], method)


def toric_kernel(ctx, a: int, b: int, c: int, method: str = "direct") -> TraceTable:
    p = ctx.p
    for e in (a, b, c):
        if e == 0 or e % p == 0:
            raise PreconditionError(f"exponent {e} must be nonzero mod {p}")
    vals = _from_dl(ctx, _monomial_dl(ctx, (a, b, c), method)) / ctx.size
    pos = sum(e for e in (a, b, c) if e > 0)
    neg = sum(-e for e in (a, b, c) if e < 0)
    return TraceTable(ctx, vals, f"toric:{a},{b},{c}", rank=max(pos, neg), norm_exponent=1.0)


def monomial_product_sum(ctx, exps: Sequence[int], method: str = "direct") -> TraceTable:
    exps = tuple(int(a) for a in exps)
    if not exps or any(a < 1 for a in exps):
        raise PreconditionError("exponents must be positive")
    r = len(exps)
    vals = _from_dl(ctx, _monomial_dl(ctx, exps, method)) / ctx.size ** ((r - 1) / 2)
    label = "monomial:" + ",".join(map(str, exps))
    return TraceTable(ctx, vals, label, rank=sum(exps), norm_exponent=(r - 1) / 2)


def fiber_count(ctx, f: P.Poly) -> TraceTable:
    f = P.trim(f, ctx.p)
    d = P.degree(f)
    if d < 1:
        raise PreconditionError("f must be nonconstant")
    if d >= ctx.p:
        raise DegreeTooLarge(f"deg f = {d} must be < {ctx.p}")
    images = ctx.eval_poly(f, ctx.elements())
    counts = np.bincount(images, minlength=ctx.size)
    vals = (counts - 1).astype(np.complex128)
    return TraceTable(
        ctx, vals, f"fiber:{P.format_polyspec(f)}", rank=d - 1, norm_exponent=0.0, real_valued=True
    )


def poly_phase_ft(ctx: PrimeFieldCtx, f: P.Poly) -> TraceTable:
    q = ctx.q
    f = P.trim(f, q)
    if P.degree(f) < 1:
        raise PreconditionError("f must be nonconstant")
    hist = np.bincount(P.evaluate_array(f, np.arange(q), q), minlength=q).astype(np.float64)
    # sum_v hist[v] e(x v / q) = q * ifft(hist)[x]
    vals = q * np.fft.ifft(hist) / np.sqrt(q)
    vals[0] = 0.0
    return TraceTable(
        ctx, vals, f"ftphase:{P.format_polyspec(f)}", rank=max(P.degree(f) - 1, 1), norm_exponent=0.5
    )


def rank_one(ctx, chi: MultChar, f: RationalFn, g: RationalFn) -> TraceTable:
    """``chi(f(x)) psi(g(x))``; zero at poles of f or g and at zeros of f.

    Over an extension the character is ``chi(N(.))`` and the additive
    character ``psi(Tr(.))``, with ``chi`` given on the prime field.
    """
    base = chi.ctx
    if chi.is_trivial() and P.degree(g.num) <= 0 and P.degree(g.den) <= 0:
        raise PreconditionError("need chi nontrivial or g nonconstant")
    xs = ctx.elements()
    fv = f.evaluate_array(ctx, xs)
    gv = g.evaluate_array(ctx, xs)
    bad = (fv == ctx.size) | (gv == ctx.size) | (fv == 0)
    fv = np.where(bad, 1, fv)
    gv = np.where(bad, 0, gv)
    chi_vals = chi.values()[ctx.norm[fv]] if ctx is not base else chi.values()[fv]
    psi_vals = ctx.psi(1)[gv]
    vals = np.where(bad, 0, chi_vals * psi_vals)
    label = f"rank1:{chi.j % chi.modulus};{f.spec()};{g.spec()}"
    return TraceTable(ctx, vals, label, rank=1, norm_exponent=0.0)


# ---------------------------------------------------------------------------
# changes of variable


def pullback(K: TraceTable, gamma) -> TraceTable:
    """``x -> K((a x + b) / (c x + d))`` with ``K(inf)`` from the table."""
    ctx = K.ctx
    (a, b), (c, d) = [[int(e) % ctx.p for e in row] for row in gamma]
    if (a * d - b * c) % ctx.p == 0:
        raise SingularMatrix("matrix is not invertible mod p")
    xs = ctx.elements()
    fb = ctx.from_base
    num = ctx.add(ctx.mul(fb(a), xs), fb(b))
    den = ctx.add(ctx.mul(fb(c), xs), fb(d))
    pole = den == 0
    safe = np.where(pole, 1, den)
    img = ctx.mul(num, ctx.inv(safe))
    vals = np.where(pole, K.at_infinity, K.values[np.where(pole, 0, img)])
    if c % ctx.p == 0:
        at_inf = K.at_infinity
    else:
        at_inf = complex(K.values[int(ctx.mul(fb(a), ctx.inv(fb(c))))])
    label = f"{K.label}|pb[{a},{b};{c},{d}]"
    return K.with_values(vals, label=label, at_infinity=at_inf)


def inverse_matrix(gamma, p: int):
    (a, b), (c, d) = [[int(e) % p for e in row] for row in gamma]
    det = (a * d - b * c) % p
    if det == 0:
        raise SingularMatrix("matrix is not invertible mod p")
    inv = pow(det, -1, p)
    return ((d * inv % p, -b * inv % p), (-c * inv % p, a * inv % p))


def pullback_power(K: TraceTable, c: int) -> TraceTable:
    """``x -> K(x^c)``; ``0^c`` is a pole for ``c < 0``."""
    if c == 0:
        raise PreconditionError("exponent must be nonzero")
    ctx = K.ctx
    img = ctx.power(ctx.elements(), c)
    vals = K.extended()[img]
    at_inf = K.at_infinity if c > 0 else complex(K.values[0])
    return K.with_values(vals, label=f"{K.label}|pow[{c}]", at_infinity=at_inf)


# ---------------------------------------------------------------------------
# structural tests


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def is_kummer_induced(chars: CharMultiset, rho: Optional[CharMultiset] = None):
    """Return ``(True, d)`` for the smallest witnessing ``d > 1``, else ``(False, None)``.

    With ``rho`` given, tests the pair: ``d`` must divide both sizes and
    leave both multisets invariant.
    """
    n = chars.modulus
    sizes = [chars.size] if rho is None else [chars.size, rho.size]
    sets = [chars] if rho is None else [chars, rho]
    top = max(max(sizes), 2) if any(sizes) else n
    for d in range(2, max(top, 2) + 1):
        if n % d or any(s % d for s in sizes):
            continue
        if all(m.shifted(n // d).indices == m.indices for m in sets):
            return True, d
    return False, None


def critical_value_poly(f: P.Poly, q: int) -> P.Poly:
    """``Res_Y(f'(Y), X - f(Y))`` as a polynomial in X, by interpolation."""
    fp = P.deriv(f, q)
    D = P.degree(fp)
    if D <= 0:
        return (1,)
    xs = list(range(D + 1))
    ys = [P.resultant(fp, P.sub((x0,), f, q), q) for x0 in xs]
    return P.interpolate(xs, ys, q)


def is_supermorse(ctx: PrimeFieldCtx, f: P.Poly) -> bool:
    q = ctx.p
    f = P.trim(f, q)
    if P.degree(f) < 1:
        raise PreconditionError("f must be nonconstant")
    if P.degree(f) >= q:
        raise DegreeTooLarge("supermorse requires deg f < characteristic")
    fp = P.deriv(f, q)
    if P.degree(fp) <= 0:
        return True
    if not P.is_squarefree(fp, q):
        return False
    return P.is_squarefree(critical_value_poly(f, q), q)


def critical_values(ctx: PrimeFieldCtx, f: P.Poly):
    """Critical points and values of ``f`` in the splitting field of ``f'``.

    Returns ``(ext, points, values)`` with elements encoded in ``ext``.
    """
    q = ctx.p
    f = P.trim(f, q)
    fp = P.deriv(f, q)
    if P.degree(fp) <= 0:
        return build_extension(ctx, 1), np.array([], dtype=np.int64), np.array([], dtype=np.int64)
    rad = P.divmod_poly(fp, P.gcd(fp, P.deriv(fp, q), q), q)[0]
    degs = P.distinct_degree_factor_degrees(rad, q)
    n = P.lcm_int(degs) if degs else 1
    if n > SIDON_DEGREE_CAP or q**n > EXT_CAP:
        raise ExtensionTooLarge(f"splitting field F_{q}^{n} beyond cap")
    ext = build_extension(ctx, n)
    xs = ext.elements()
    pts = xs[ext.eval_poly(fp, xs) == 0]
    vals = ext.eval_poly(f, pts)
    return ext, pts, vals


def sidon_critical_values(ctx: PrimeFieldCtx, f: P.Poly) -> bool:
    """True iff ``s1 + s2 = s3 + s4`` over critical values forces ``s1 in {s3, s4}``."""
    ext, _, vals = critical_values(ctx, f)
    C = np.unique(vals)
    k = len(C)
    if k == 0:
        return True
    sums = ext.add(C[:, None], C[None, :])
    for i1 in range(k):
        for i2 in range(k):
            hit = np.argwhere(sums == sums[i1, i2])
            for i3, i4 in hit:
                if i1 != i3 and i1 != i4:
                    return False
    return True


# ---------------------------------------------------------------------------
# identifiers


def _split_param(body: str):
    if "@" in body:
        body, t = body.split("@", 1)
        return body, int(t)
    return body, 1


def _ints(s: str) -> list[int]:
    s = s.strip()
    return [int(x) for x in s.split(",")] if s else []


def build_kernel(label: str, ctx, method: str = "direct") -> TraceTable:
    """Tabulate a catalog kernel from its identifier string."""
    kind, _, body = label.partition(":")
    kind = kind.strip()
    is_ext = isinstance(ctx, ExtFieldCtx) and ctx.n > 1
    if is_ext and kind not in ("kl", "fiber", "rank1"):
        raise UnsupportedExtension(f"kernel kind {kind!r} is not defined over extensions")
    if kind == "kl":
        return kloosterman(ctx, int(body), method=method)
    if kind == "klchars":
        spec, t = _split_param(body)
        return kloosterman_chars(ctx, CharMultiset.of(ctx, _ints(spec)), AddChar(ctx, t), method)
    if kind == "hyp":
        spec, t = _split_param(body)
        a, _, b = spec.partition("/")
        return hypergeometric(
            ctx, CharMultiset.of(ctx, _ints(a)), CharMultiset.of(ctx, _ints(b)), AddChar(ctx, t), method
        )
    if kind == "toric":
        a, b, c = _ints(body)
        return toric_kernel(ctx, a, b, c, method=method)
    if kind == "monomial":
        return monomial_product_sum(ctx, _ints(body), method=method)
    if kind == "fiber":
        return fiber_count(ctx, P.parse_polyspec(body, ctx.p))
    if kind == "ftphase":
        return poly_phase_ft(ctx, P.parse_polyspec(body, ctx.p))
    if kind == "rank1":
        j, fs, gs = body.split(";")
        base = ctx.base if isinstance(ctx, ExtFieldCtx) else ctx
        return rank_one(
            ctx, MultChar(base, int(j)), RationalFn.parse(fs, ctx.p), RationalFn.parse(gs, ctx.p)
        )
    raise ValueError(f"unknown kernel identifier {label!r}")


def retabulate(K: TraceTable, ctx) -> TraceTable:
    """Rebuild a formula-defined catalog kernel over another field (e.g. F_{q^n})."""
    if "|" in K.label:
        raise UnsupportedExtension("transformed kernels cannot be re-tabulated")
    return build_kernel(K.label, ctx)


def constant_kernel(ctx, value: complex = 1.0) -> TraceTable:
    """``K = value`` on ``F^x`` and ``K(0) = 0`` (test fixture and sanity kernel)."""
    vals = np.full(ctx.size, value, dtype=np.complex128)
    vals[0] = 0
    return TraceTable(ctx, vals, "const", rank=1, norm_exponent=0.0, real_valued=np.isreal(value))


def zero_kernel(ctx) -> TraceTable:
    return TraceTable(ctx, np.zeros(ctx.size), "zero", rank=0, norm_exponent=0.0, real_valued=True)


__all__ = [
    "TraceTable",
    "CharMultiset",
    "kloosterman",
    "kloosterman_chars",
    "hypergeometric",
    "toric_kernel",
    "monomial_product_sum",
    "fiber_count",
    "poly_phase_ft",
    "rank_one",
    "pullback",
    "pullback_power",
    "inverse_matrix",
    "is_kummer_induced",
    "is_supermorse",
    "sidon_critical_values",
    "critical_values",
    "critical_value_poly",
    "build_kernel",
    "retabulate",
    "constant_kernel",
    "zero_kernel",
    "read_binary",
    "read_csv",
]
