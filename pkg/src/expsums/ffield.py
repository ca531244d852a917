"""Arithmetic in F_q and F_{q^n}, characters, Gauss sums and rational functions.

Field elements are non-negative integers.  For F_q they are residues
``0..q-1``; for F_{q^n} an element ``c_0 + c_1 X + ... + c_{n-1} X^{n-1}``
modulo the chosen irreducible polynomial is encoded as ``sum c_i q^i``, so
that base-field constants keep their prime-field encoding.

Both field contexts expose the same vectorized surface (``size``, ``mul``,
``add``, ``power``, ``psi``, ``dlog``, ``expt``, ...), which is what the
trace-function and complete-sum modules program against.  ``power`` and the
rational-function evaluators use ``ctx.size`` as the sentinel for the point
at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import poly as P
from .errors import EvenPrime, NotPrime, TooLarge

FIELD_CAP = 1 << 26
EXT_CAP = 1 << 22

TWO_PI = 2.0 * np.pi


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    return P._prime_factors(n)


def unit_roots(n: int) -> np.ndarray:
    """``e(j/n)`` for ``j = 0..n-1``."""
    return np.exp(1j * TWO_PI * np.arange(n) / n)


def _power_table(base_mul, one: int, g: int, count: int) -> np.ndarray:
    """``[g^0, ..., g^{count-1}]`` by vectorized block doubling."""
    out = np.empty(count, dtype=np.int64)
    out[0] = one
    filled = 1
    step = np.array([g], dtype=np.int64)  # g^filled
    while filled < count:
        take = min(filled, count - filled)
        out[filled : filled + take] = base_mul(out[:take], step[0])
        filled += take
        step = base_mul(step, step[0])
    return out


class _FieldOps:
    """Vectorized operations shared by the prime and extension contexts."""

    size: int
    p: int
    dlog: np.ndarray
    expt: np.ndarray

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        order = self.size - 1
        zero = (a == 0) | (b == 0)
        k = (self.dlog[np.where(zero, 1, a)] + self.dlog[np.where(zero, 1, b)]) % order
        return np.where(zero, 0, self.expt[k])

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        return self.expt[(-self.dlog[a]) % (self.size - 1)]

    def power(self, a, e: int):
        """``a^e`` elementwise; ``0^e`` is 0 for e > 0, 1 for e = 0, and the
        pole sentinel ``size`` for e < 0."""
        a = np.asarray(a, dtype=np.int64)
        zero = a == 0
        k = (self.dlog[np.where(zero, 1, a)] * (e % (self.size - 1))) % (self.size - 1)
        out = self.expt[k]
        if e > 0:
            zval = 0
        elif e == 0:
            zval = 1
        else:
            zval = self.size
        return np.where(zero, zval, out)

    def psi(self, t: int = 1) -> np.ndarray:
        """``x -> e(t Tr(x) / p)`` tabulated over all field elements."""
        roots = unit_roots(self.p)
        return roots[(int(t) * self.trace) % self.p]

    def elements(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def from_base(self, c: int) -> int:
        return int(c) % self.p

    def eval_poly(self, coeffs: Sequence[int], xs):
        """Evaluate a polynomial with F_p coefficients at field elements."""
        xs = np.asarray(xs, dtype=np.int64)
        acc = np.zeros_like(xs)
        for c in reversed(tuple(coeffs)):
            acc = self.add(self.mul(acc, xs), np.full_like(xs, self.from_base(c)))
        return acc


@dataclass(frozen=True, eq=False)
class PrimeFieldCtx(_FieldOps):
    """Precomputed arithmetic context for F_q (q an odd prime)."""

    q: int
    g: int
    dlog: np.ndarray = field(repr=False)
    expt: np.ndarray = field(repr=False)
    roots_q: np.ndarray = field(repr=False)
    roots_qm1: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.q

    @property
    def p(self) -> int:
        return self.q

    @property
    def degree(self) -> int:
        return 1

    @cached_property
    def trace(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    @cached_property
    def norm(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    def add(self, a, b):
        return (np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64)) % self.q

    def neg(self, a):
        return (-np.asarray(a, dtype=np.int64)) % self.q

    def mul(self, a, b):
        return (np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)) % self.q

    def psi(self, t: int = 1) -> np.ndarray:
        return self.roots_q[(int(t) * np.arange(self.q)) % self.q]

    def __repr__(self) -> str:
        return f"PrimeFieldCtx(q={self.q}, g={self.g})"


def _smallest_generator(q: int) -> int:
    if q == 3:
        return 2
    primes = prime_factors(q - 1)
    for cand in range(2, q):
        if all(pow(cand, (q - 1) // p, q) != 1 for p in primes):
            return cand
    raise AssertionError("no generator found")  # pragma: no cover


def build_prime_field(q: int) -> PrimeFieldCtx:
    q = int(q)
    if q == 2:
        raise EvenPrime("characteristic 2 is not supported")
    if not is_prime(q):
        raise NotPrime(f"{q} is not prime")
    if q > FIELD_CAP:
        raise TooLarge(f"q={q} exceeds the table cap {FIELD_CAP}")
    g = _smallest_generator(q)
    expt = _power_table(lambda arr, s: (arr * s) % q, 1, g, q - 1)
    dlog = np.full(q, -1, dtype=np.int64)
    dlog[expt] = np.arange(q - 1, dtype=np.int64)
    return PrimeFieldCtx(
        q=q, g=g, dlog=dlog, expt=expt, roots_q=unit_roots(q), roots_qm1=unit_roots(q - 1)
    )


# ---------------------------------------------------------------------------
# extensions


def _encode(coeffs: Sequence[int], q: int) -> int:
    out = 0
    for c in reversed(tuple(coeffs)):
        out = out * q + int(c)
    return out


def _decode(x: int, q: int, n: int) -> P.Poly:
    out = []
    for _ in range(n):
        out.append(x % q)
        x //= q
    return P.trim(out, q)


def _mulmod_rows(rows: np.ndarray, g: np.ndarray, modulus: Sequence[int], q: int) -> np.ndarray:
    """Multiply each coefficient row (length n) by ``g`` modulo a monic modulus."""
    n = rows.shape[1]
    prod = np.zeros((rows.shape[0], 2 * n - 1), dtype=np.int64)
    for j in range(n):
        if g[j]:
            prod[:, j : j + n] += rows * int(g[j])
    prod %= q
    for top in range(2 * n - 2, n - 1, -1):
        c = prod[:, top].copy()
        if not c.any():
            continue
        for i in range(n):
            if modulus[i]:
                prod[:, top - n + i] = (prod[:, top - n + i] - c * int(modulus[i])) % q
        prod[:, top] = 0
    return prod[:, :n] % q


@dataclass(frozen=True, eq=False)
class ExtFieldCtx(_FieldOps):
    """F_{q^n} realized as F_q[X]/(modulus), elements encoded base q."""

    base: PrimeFieldCtx
    n: int
    modulus: P.Poly
    gen: int
    dlog: np.ndarray = field(repr=False)
    expt: np.ndarray = field(repr=False)
    digits: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.base.q**self.n

    @property
    def p(self) -> int:
        return self.base.q

    @property
    def degree(self) -> int:
        return self.n

    @cached_property
    def _weights(self) -> np.ndarray:
        return self.base.q ** np.arange(self.n, dtype=np.int64)

    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        s = (self.digits[a] + self.digits[b]) % self.base.q
        return s @ self._weights

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        return ((-self.digits[a]) % self.base.q) @ self._weights

    @cached_property
    def trace_of_powers(self) -> np.ndarray:
        """``Tr(X^i)`` for ``i < n``: traces of the multiplication-by-X^i matrices."""
        q, n = self.base.q, self.n
        companion = np.zeros((n, n), dtype=np.int64)
        for i in range(1, n):
            companion[i, i - 1] = 1
        companion[:, n - 1] = [(-c) % q for c in self.modulus[:n]]
        out = np.zeros(n, dtype=np.int64)
        mat = np.eye(n, dtype=np.int64)
        for i in range(n):
            out[i] = int(np.trace(mat)) % q
            mat = (companion @ mat) % q
        return out

    @cached_property
    def trace(self) -> np.ndarray:
        """Field trace to F_q via the coefficient formula ``sum c_i Tr(X^i)``."""
        return (self.digits @ self.trace_of_powers) % self.base.q

    @cached_property
    def norm(self) -> np.ndarray:
        """Field norm ``x^{(q^n-1)/(q-1)}``, always a base-field constant."""
        e = (self.size - 1) // (self.base.q - 1)
        out = self.power(self.elements(), e)
        out[0] = 0
        assert np.all(out < self.base.q)
        return out

    def frobenius(self, a, k: int = 1):
        return self.power(a, self.base.q**k)

    def encode(self, coeffs: Sequence[int]) -> int:
        return _encode(P.trim(coeffs, self.base.q), self.base.q)

    def decode(self, x: int) -> P.Poly:
        return _decode(int(x), self.base.q, self.n)

    def __repr__(self) -> str:
        return f"ExtFieldCtx(q={self.base.q}, n={self.n}, modulus={self.modulus})"


def smallest_irreducible(q: int, n: int) -> P.Poly:
    """Lexicographically smallest monic irreducible polynomial of degree n.

    Candidates ``X^n + c_{n-1}X^{n-1} + ... + c_0`` are ordered by the integer
    ``sum c_i q^i``, i.e. lexicographically from the top coefficient down.
    """
    for code in range(q**n):
        low = list(_decode(code, q, n))
        f = tuple(low + [0] * (n - len(low)) + [1])
        if P.is_irreducible(f, q):
            return f
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


def build_extension(ctx: PrimeFieldCtx, n: int) -> ExtFieldCtx:
    n = int(n)
    if n < 1:
        raise ValueError("extension degree must be >= 1")
    q = ctx.q
    Q = q**n
    if Q > min(EXT_CAP, FIELD_CAP) and n > 1:
        raise TooLarge(f"q^n = {Q} exceeds the extension cap {EXT_CAP}")
    modulus = smallest_irreducible(q, n)
    order = Q - 1
    primes = prime_factors(order) if order > 1 else []
    gen = None
    for code in range(1, Q):
        cand = _decode(code, q, n)
        if all(P.powmod(cand, order // p, modulus, q) != (1,) for p in primes):
            gen = code
            break
    assert gen is not None
    g_coeffs = np.zeros(n, dtype=np.int64)
    gc = _decode(gen, q, n)
    g_coeffs[: len(gc)] = gc

    # coefficient rows of gen^k, k = 0..Q-2, by block doubling
    rows = np.zeros((order, n), dtype=np.int64)
    rows[0, 0] = 1
    filled = 1
    step = g_coeffs.copy()  # gen^filled
    while filled < order:
        take = min(filled, order - filled)
        rows[filled : filled + take] = _mulmod_rows(rows[:take], step, modulus, q)
        filled += take
        step = _mulmod_rows(step[None, :], step, modulus, q)[0]
    weights = q ** np.arange(n, dtype=np.int64)
    expt = rows @ weights
    dlog = np.full(Q, -1, dtype=np.int64)
    dlog[expt] = np.arange(order, dtype=np.int64)
    if np.any(dlog[1:] < 0):
        raise AssertionError("generator does not have full order")
    digits = np.zeros((Q, n), dtype=np.int64)
    idx = np.arange(Q, dtype=np.int64)
    for i in range(n):
        digits[:, i] = idx % q
        idx //= q
    return ExtFieldCtx(base=ctx, n=n, modulus=modulus, gen=gen, dlog=dlog, expt=expt, digits=digits)


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class AddChar:
    """``psi_t(x) = e(t Tr(x) / p)``."""

    ctx: _FieldOps = field(repr=False, compare=False)
    t: int = 1

    def values(self) -> np.ndarray:
        return self.ctx.psi(self.t)

    def __call__(self, x):
        return self.values()[np.asarray(x, dtype=np.int64)]


@dataclass(frozen=True)
class MultChar:
    """``chi_j(x) = e(j dlog(x) / (size - 1))`` with ``chi_j(0) = 0``."""

    ctx: _FieldOps = field(repr=False, compare=False)
    j: int = 0

    @property
    def modulus(self) -> int:
        return self.ctx.size - 1

    @property
    def order(self) -> int:
        from math import gcd

        return self.modulus // gcd(self.j % self.modulus, self.modulus)

    def is_trivial(self) -> bool:
        return self.j % self.modulus == 0

    def values(self) -> np.ndarray:
        n = self.modulus
        roots = unit_roots(n) if not isinstance(self.ctx, PrimeFieldCtx) else self.ctx.roots_qm1
        out = np.zeros(self.ctx.size, dtype=np.complex128)
        out[1:] = roots[(self.j * self.ctx.dlog[1:]) % n]
        return out

    def __call__(self, x):
        return self.values()[np.asarray(x, dtype=np.int64)]


def quadratic_char(ctx: PrimeFieldCtx) -> MultChar:
    return MultChar(ctx, (ctx.q - 1) // 2)


def gauss_sum(ctx, chi: MultChar, psi: AddChar) -> complex:
    """``sum_{x != 0} chi(x) psi(x)``."""
    return complex(np.sum(chi.values()[1:] * psi.values()[1:]))


# ---------------------------------------------------------------------------
# rational functions


class _Pole:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "POLE"


POLE = _Pole()
PoleMarker = _Pole


@dataclass(frozen=True)
class RationalFn:
    """Reduced quotient ``num / den`` of polynomials over F_q (den monic)."""

    num: P.Poly
    den: P.Poly
    q: int

    @classmethod
    def make(cls, num: Sequence[int], den: Sequence[int] = (1,), q: int = 0) -> "RationalFn":
        if q <= 0:
            raise ValueError("modulus q required")
        num, den = P.trim(num, q), P.trim(den, q)
        if not den:
            raise ZeroDivisionError("zero denominator")
        g = P.gcd(num, den, q) if num else den
        if P.degree(g) > 0:
            num = P.divmod_poly(num, g, q)[0]
            den = P.divmod_poly(den, g, q)[0]
        lc_inv = pow(den[-1], -1, q)
        return cls(P.scale(num, lc_inv, q), P.scale(den, lc_inv, q), q)

    @classmethod
    def poly(cls, coeffs: Sequence[int], q: int) -> "RationalFn":
        return cls.make(coeffs, (1,), q)

    @classmethod
    def parse(cls, spec: str, q: int) -> "RationalFn":
        """``"n0,n1,..."`` or ``"n0,n1,.../d0,d1,..."`` (low degree first)."""
        if "/" in spec:
            a, b = spec.split("/", 1)
            return cls.make(P.parse_polyspec(a, q), P.parse_polyspec(b, q), q)
        return cls.make(P.parse_polyspec(spec, q), (1,), q)

    def spec(self) -> str:
        if self.den == (1,):
            return P.format_polyspec(self.num)
        return f"{P.format_polyspec(self.num)}/{P.format_polyspec(self.den)}"

    def reduce(self) -> "RationalFn":
        return RationalFn.make(self.num, self.den, self.q)

    def is_constant(self) -> bool:
        return P.degree(self.num) <= 0 and P.degree(self.den) == 0

    def __add__(self, other: "RationalFn") -> "RationalFn":
        q = self.q
        return RationalFn.make(
            P.add(P.mul(self.num, other.den, q), P.mul(other.num, self.den, q), q),
            P.mul(self.den, other.den, q),
            q,
        )

    def __neg__(self) -> "RationalFn":
        return RationalFn(P.scale(self.num, -1, self.q), self.den, self.q)

    def __sub__(self, other: "RationalFn") -> "RationalFn":
        return self + (-other)

    def __mul__(self, other: "RationalFn") -> "RationalFn":
        q = self.q
        return RationalFn.make(P.mul(self.num, other.num, q), P.mul(self.den, other.den, q), q)

    def compose(self, inner: "RationalFn") -> "RationalFn":
        """``self(inner(X))`` by homogenization."""
        q = self.q
        a, b = inner.num, inner.den
        d = max(P.degree(self.num), P.degree(self.den), 0)

        def homog(f: P.Poly) -> P.Poly:
            acc: P.Poly = ()
            for i, c in enumerate(f):
                if c:
                    term = P.mul(P.power(a, i, q), P.power(b, d - i, q), q)
                    acc = P.add(acc, P.scale(term, c, q), q)
            return acc

        return RationalFn.make(homog(self.num), homog(self.den), q)

    def degree(self) -> int:
        return max(P.degree(self.num), P.degree(self.den))

    def evaluate_array(self, ctx, xs) -> np.ndarray:
        """Values at field elements ``xs``; poles map to the sentinel ``ctx.size``."""
        xs = np.asarray(xs, dtype=np.int64)
        num = ctx.eval_poly(self.num, xs)
        den = ctx.eval_poly(self.den, xs)
        pole = den == 0
        safe = np.where(pole, 1, den)
        out = ctx.mul(num, ctx.inv(safe))
        return np.where(pole, ctx.size, out)


def eval_rational(f: RationalFn, x: int):
    """Exact value of ``f`` at ``x`` in F_q, or :data:`POLE`."""
    q = f.q
    d = P.evaluate(f.den, x, q)
    if d == 0:
        return POLE
    return P.evaluate(f.num, x, q) * pow(d, -1, q) % q
