"""Dense univariate polynomials over a prime field F_q.

Polynomials are tuples of Python ints, lowest degree first, with no trailing
zeros; the zero polynomial is ``()``.  Degrees here are small (a few hundred
at most), so plain integer loops are used throughout.
"""

from __future__ import annotations

from math import gcd as _igcd
from typing import Sequence

Poly = tuple


def trim(coeffs: Sequence[int], q: int) -> Poly:
    out = [int(c) % q for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def degree(f: Poly) -> int:
    """Degree of ``f``; the zero polynomial has degree -1."""
    return len(f) - 1


def is_constant(f: Poly) -> bool:
    return len(f) <= 1


def monomial(k: int, q: int, c: int = 1) -> Poly:
    return trim([0] * k + [c], q)


def parse_polyspec(spec: str, q: int) -> Poly:
    """Parse ``"c0,c1,...,cd"`` (low degree first) into a polynomial."""
    spec = spec.strip()
    if not spec:
        return ()
    return trim([int(tok) for tok in spec.split(",")], q)


def format_polyspec(f: Poly) -> str:
    return ",".join(str(c) for c in f) if f else "0"


def add(f: Poly, g: Poly, q: int) -> Poly:
    n = max(len(f), len(g))
    return trim([(f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(n)], q)


def sub(f: Poly, g: Poly, q: int) -> Poly:
    n = max(len(f), len(g))
    return trim([(f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0) for i in range(n)], q)


def scale(f: Poly, c: int, q: int) -> Poly:
    return trim([c * a for a in f], q)


def mul(f: Poly, g: Poly, q: int) -> Poly:
    if not f or not g:
        return ()
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return trim(out, q)


def divmod_poly(f: Poly, g: Poly, q: int) -> tuple[Poly, Poly]:
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(f)
    dg = len(g) - 1
    inv_lead = pow(g[-1], -1, q)
    if len(r) - 1 < dg:
        return (), trim(r, q)
    quo = [0] * (len(r) - dg)
    for k in range(len(r) - 1 - dg, -1, -1):
        c = r[k + dg] * inv_lead % q
        quo[k] = c
        if c:
            for j in range(dg + 1):
                r[k + j] = (r[k + j] - c * g[j]) % q
    return trim(quo, q), trim(r[:dg], q)


def mod(f: Poly, g: Poly, q: int) -> Poly:
    return divmod_poly(f, g, q)[1]


def make_monic(f: Poly, q: int) -> Poly:
    if not f:
        return f
    return scale(f, pow(f[-1], -1, q), q)


def gcd(f: Poly, g: Poly, q: int) -> Poly:
    """Monic gcd (zero only if both inputs are zero)."""
    a, b = trim(f, q), trim(g, q)
    while b:
        a, b = b, mod(a, b, q)
    return make_monic(a, q)


def powmod(f: Poly, e: int, m: Poly, q: int) -> Poly:
    result: Poly = (1,)
    base = mod(f, m, q)
    while e > 0:
        if e & 1:
            result = mod(mul(result, base, q), m, q)
        base = mod(mul(base, base, q), m, q)
        e >>= 1
    return mod(result, m, q)


def deriv(f: Poly, q: int) -> Poly:
    return trim([i * f[i] for i in range(1, len(f))], q)


def evaluate(f: Poly, x: int, q: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % q
    return acc


def evaluate_array(f: Poly, xs, q: int):
    """Horner evaluation on an int64 numpy array of residues."""
    import numpy as np

    xs = np.asarray(xs, dtype=np.int64)
    acc = np.zeros_like(xs)
    for c in reversed(f):
        acc = (acc * xs + c) % q
    return acc


def compose(f: Poly, g: Poly, q: int) -> Poly:
    """``f(g(X))``."""
    acc: Poly = ()
    for c in reversed(f):
        acc = add(mul(acc, g, q), (c,), q)
    return acc


def power(f: Poly, e: int, q: int) -> Poly:
    result: Poly = (1,)
    base = f
    while e > 0:
        if e & 1:
            result = mul(result, base, q)
        base = mul(base, base, q)
        e >>= 1
    return result


def is_squarefree(f: Poly, q: int) -> bool:
    """Valid whenever ``deg f < q`` (so ``f'`` cannot vanish identically)."""
    if degree(f) <= 0:
        return True
    return degree(gcd(f, deriv(f, q), q)) == 0


def resultant(f: Poly, g: Poly, q: int) -> int:
    """Resultant Res(f, g) over F_q via the Euclidean algorithm."""
    f, g = trim(f, q), trim(g, q)
    if not f or not g:
        return 0
    res = 1
    while True:
        df, dg = degree(f), degree(g)
        if dg == 0:
            return res * pow(g[0], df, q) % q
        if df < dg:
            if (df * dg) % 2:
                res = -res
            f, g = g, f
            continue
        r = mod(f, g, q)
        if not r:
            return 0
        dr = degree(r)
        # Res(f, g) = (-1)^{df dg} lc(g)^{df - dr} Res(g, r)
        res = res * pow(g[-1], df - dr, q) % q
        if (df * dg) % 2:
            res = -res
        f, g = g, r


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: Poly, q: int) -> bool:
    """Irreducibility of a polynomial of degree n >= 1.

    ``f`` is irreducible iff it divides ``X^{q^n} - X`` and is coprime to
    ``X^{q^m} - X`` for every proper divisor ``m`` of ``n``.
    """
    n = degree(f)
    if n <= 0:
        return False
    if n == 1:
        return True
    f = make_monic(f, q)
    x = (0, 1)
    frob = [x]
    cur = x
    for _ in range(n):
        cur = powmod(cur, q, f, q)
        frob.append(cur)
    if sub(frob[n], x, q) != ():
        return False
    for m in range(1, n):
        if n % m == 0 and degree(gcd(f, sub(frob[m], x, q), q)) > 0:
            return False
    return True


def distinct_degree_factor_degrees(f: Poly, q: int) -> list[int]:
    """Degrees of the irreducible factors of a squarefree ``f`` (with repetition)."""
    f = make_monic(trim(f, q), q)
    out: list[int] = []
    x = (0, 1)
    h = x
    i = 0
    while degree(f) > 0:
        i += 1
        if 2 * i > degree(f):
            out.append(degree(f))
            break
        h = powmod(h, q, f, q)
        g = gcd(f, sub(h, x, q), q)
        if degree(g) > 0:
            out.extend([i] * (degree(g) // i))
            f = divmod_poly(f, g, q)[0]
            h = mod(h, f, q) if degree(f) > 0 else h
    return out


def squarefree_part_degree(f: Poly, q: int) -> int:
    """Number of distinct roots of ``f`` in an algebraic closure (needs deg f < q)."""
    if degree(f) <= 0:
        return 0
    return degree(f) - degree(gcd(f, deriv(f, q), q))


def lcm_int(values: Sequence[int]) -> int:
    out = 1
    for v in values:
        out = out * v // _igcd(out, v)
    return out


def interpolate(xs: Sequence[int], ys: Sequence[int], q: int) -> Poly:
    """Lagrange interpolation through distinct points of F_q."""
    result: Poly = ()
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        if yi % q == 0:
            continue
        num: Poly = (1,)
        den = 1
        for j, xj in enumerate(xs):
            if j != i:
                num = mul(num, ((-xj) % q, 1), q)
                den = den * (xi - xj) % q
        result = add(result, scale(num, yi * pow(den, -1, q), q), q)
    return result
