"""Independent brute-force evaluations used to certify the fast paths.

Everything here is written as plain nested loops over residues with
``cmath``; nothing is shared with the convolution or batch kernels except
the field context's discrete-log table (for characters).
"""

import cmath
import itertools
import math


def e(x: float) -> complex:
    return cmath.exp(2j * math.pi * x)


def char(ctx, j: int, x: int) -> complex:
    if x % ctx.q == 0:
        return 0j
    return e(j * int(ctx.dlog[x % ctx.q]) / (ctx.q - 1))


def kloosterman(q: int, r: int) -> list:
    out = [0j] * q
    for xs in itertools.product(range(1, q), repeat=r):
        u = math.prod(xs) % q
        out[u] += e(sum(xs) / q)
    return [z / q ** ((r - 1) / 2) for z in out]


def kloosterman_chars(ctx, js, t: int = 1) -> list:
    q = ctx.q
    out = [0j] * q
    for ys in itertools.product(range(1, q), repeat=len(js)):
        val = e(t * sum(ys) / q)
        for j, y in zip(js, ys):
            val *= char(ctx, j, y)
        out[math.prod(ys) % q] += val
    return [z / q ** ((len(js) - 1) / 2) for z in out]


def hypergeometric(ctx, chi, rho, t: int = 1) -> list:
    q = ctx.q
    r, s = len(chi), len(rho)
    out = [0j] * q
    for xs in itertools.product(range(1, q), repeat=r):
        for ys in itertools.product(range(1, q), repeat=s):
            u = (math.prod(xs) * pow(math.prod(ys), -1, q)) % q
            val = e(t * (sum(xs) - sum(ys)) / q)
            for j, x in zip(chi, xs):
                val *= char(ctx, j, x)
            for j, y in zip(rho, ys):
                val *= char(ctx, j, y).conjugate()
            out[u] += val
    return [z / q ** ((r + s - 1) / 2) for z in out]


def toric(q: int, a: int, b: int, c: int) -> list:
    out = [0j] * q
    for x in range(1, q):
        for y in range(1, q):
            for z in range(1, q):
                u = pow(x, a, q) * pow(y, b, q) * pow(z, c, q) % q
                out[u] += e((x + y + z) / q)
    return [w / q for w in out]


def monomial(q: int, exps) -> list:
    out = [0j] * q
    for xs in itertools.product(range(1, q), repeat=len(exps)):
        v = math.prod(pow(x, a, q) for x, a in zip(xs, exps)) % q
        out[v] += e(sum(xs) / q)
    return [w / q ** ((len(exps) - 1) / 2) for w in out]


def fiber(q: int, f) -> list:
    counts = [0] * q
    for y in range(q):
        counts[sum(c * pow(y, i, q) for i, c in enumerate(f)) % q] += 1
    return [complex(n - 1) for n in counts]


def ftphase(q: int, f) -> list:
    out = [0j] * q
    for x in range(1, q):
        out[x] = sum(e(x * sum(c * pow(y, i, q) for i, c in enumerate(f)) / q) for y in range(q)) / math.sqrt(q)
    return out


def sigma_I(Kvals, q: int, l: int, c: int, v) -> complex:
    def K(x):
        return 0j if x is None else Kvals[x]

    def pw(x):
        if x % q == 0:
            return None if c < 0 else (1 if c == 0 else 0)
        return pow(x, c, q)

    total = 0j
    for r in range(q):
        for s in range(1, q):
            prod = 1 + 0j
            for i, vi in enumerate(v):
                base = pw(r + vi)
                val = K(None if base is None else s * base % q)
                prod *= val if i < l else val.conjugate()
            total += prod
    return total


def sigma_II(Kvals, q: int, l: int, c: int, d: int, v) -> complex:
    def kc(r, s):
        prod = 1 + 0j
        for i, vi in enumerate(v):
            x = (r + vi) % q
            if x == 0 and c < 0:
                val = 0j
            else:
                val = Kvals[s * pow(x, c, q) % q]
            prod *= val if i < l else val.conjugate()
        return prod

    total = 0j
    for r in range(q):
        for s1 in range(1, q):
            for s2 in range(1, q):
                if pow(s1, d, q) != pow(s2, d, q):
                    total += kc(r, s1) * kc(r, s2).conjugate()
    return total


def trilinear(Kvals, q, a, b, c, alpha, J, beta, M, gamma, N) -> complex:
    total = 0j
    for j in range(J, 2 * J):
        for m in range(M, 2 * M):
            for n in range(N, 2 * N):
                x = pow(j, a, q) * pow(m, b, q) * pow(n, c, q) % q
                total += alpha[j - J] * beta[m - M] * gamma[n - N] * Kvals[x]
    return total


def nu_mass(q, b, c, alpha, M, N, U) -> float:
    total = 0.0
    for m in range(M, 2 * M):
        if m % q == 0:
            continue
        for n in range(N, 2 * N):
            for u in range(U, 2 * U):
                if u % q != 0:
                    total += abs(alpha[m - M])
    return total


def nu_entries(q, b, c, alpha, M, N, U) -> dict:
    out: dict = {}
    for m in range(M, 2 * M):
        if m % q == 0:
            continue
        for n in range(N, 2 * N):
            for u in range(U, 2 * U):
                if u % q == 0:
                    continue
                s = pow(u, c, q) * pow(m, b, q) % q
                r = pow(u, -1, q) * n % q
                out[(r, s)] = out.get((r, s), 0.0) + abs(alpha[m - M])
    return out
