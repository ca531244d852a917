"""Finite groups, Goursat data and coinvariant dimensions.

Group elements are hashable keys (permutation tuples, matrix tuples mod p,
residues, or tuples of component keys for products) and a group is the list
of its keys plus a multiplication function.  This keeps products and
subgroups of products cheap to build: a subgroup of ``G1 x G2`` is just a
list of pairs.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from .errors import (
    NotIntegral,
    NotNormal,
    NotQuasisimple,
    NotSurjective,
    OrderCapExceeded,
    PreconditionError,
    PreconditionFailed,
)

ORDER_CAP = 10**5
MAX_GENERATORS = 8
INTEGRALITY_TOL = 1e-6


class FiniteGroup:
    def __init__(
        self,
        elements: Sequence[Hashable],
        mul: Callable,
        identity: Hashable,
        generators: Sequence[Hashable] = (),
        name: str = "",
        parent: Optional[list] = None,
        parent_gen: Optional[list] = None,
    ):
        self.elements = list(elements)
        self.mul = mul
        self.identity = identity
        self.generators = list(generators)
        self.name = name
        self.index = {e: i for i, e in enumerate(self.elements)}
        # BFS tree: element i = elements[parent[i]] * generators[parent_gen[i]]
        self.parent = parent
        self.parent_gen = parent_gen
        self._inv: dict = {}

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return x in self.index

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or '?'}, order={self.order})"

    def inverse(self, x):
        if x in self._inv:
            return self._inv[x]
        prev, cur = self.identity, x
        while cur != self.identity:
            prev, cur = cur, self.mul(cur, x)
        self._inv[x] = prev
        return prev

    def conj(self, g, x):
        return self.mul(self.mul(g, x), self.inverse(g))

    def commutator(self, x, y):
        return self.mul(self.mul(x, y), self.mul(self.inverse(x), self.inverse(y)))

    def elem_order(self, x) -> int:
        k, cur = 1, x
        while cur != self.identity:
            cur = self.mul(cur, x)
            k += 1
        return k

    def is_subset_of(self, other: "FiniteGroup") -> bool:
        return all(x in other for x in self.elements)

    def check_closed(self, samples: int = 0) -> bool:
        """Closure under products of generators and inverses, plus identity."""
        if self.identity not in self:
            return False
        gens = self.generators or self.elements
        for x in self.elements:
            if self.inverse(x) not in self:
                return False
            for g in gens:
                if self.mul(x, g) not in self:
                    return False
        return True


def closure(
    generators: Sequence[Hashable],
    mul: Callable,
    identity: Hashable,
    cap: int = ORDER_CAP,
    name: str = "",
    max_generators: Optional[int] = MAX_GENERATORS,
) -> FiniteGroup:
    """Breadth-first closure; element order is shortlex in the generator words."""
    gens = list(generators)
    if max_generators is not None and len(gens) > max_generators:
        raise PreconditionError(f"at most {max_generators} generators")
    elements = [identity]
    seen = {identity: 0}
    parent = [-1]
    parent_gen = [-1]
    queue = deque([identity])
    while queue:
        x = queue.popleft()
        ix = seen[x]
        for k, g in enumerate(gens):
            y = mul(x, g)
            if y not in seen:
                seen[y] = len(elements)
                elements.append(y)
                parent.append(ix)
                parent_gen.append(k)
                if len(elements) > cap:
                    raise OrderCapExceeded(f"group order exceeds cap {cap}")
                queue.append(y)
    return FiniteGroup(elements, mul, identity, gens, name, parent, parent_gen)


def subgroup(G: FiniteGroup, gens: Sequence[Hashable], name: str = "") -> FiniteGroup:
    return closure(gens, G.mul, G.identity, name=name, max_generators=None)


def subgroup_from_elements(G: FiniteGroup, elems: Sequence[Hashable], name: str = "") -> FiniteGroup:
    """Wrap a known subgroup's element set (identity placed first)."""
    elems = [G.identity] + [e for e in elems if e != G.identity]
    return FiniteGroup(elems, G.mul, G.identity, elems[1:], name)


# ---------------------------------------------------------------------------
# element algebras


def perm_mul(a: tuple, b: tuple) -> tuple:
    """``(a b)(i) = a(b(i))``."""
    return tuple(a[i] for i in b)


def perm_from_cycles(n: int, *cycles) -> tuple:
    img = list(range(n))
    for cyc in cycles:
        for i, x in enumerate(cyc):
            img[x] = cyc[(i + 1) % len(cyc)]
    return tuple(img)


def mat_mul_mod(p: int):
    def mul(a, b):
        n = len(a)
        return tuple(
            tuple(sum(a[i][k] * b[k][j] for k in range(n)) % p for j in range(n)) for i in range(n)
        )

    return mul


def mod_add(n: int):
    return lambda a, b: (a + b) % n


def product_mul(*muls):
    return lambda a, b: tuple(m(x, y) for m, x, y in zip(muls, a, b))


def symmetric_group(n: int) -> FiniteGroup:
    if n <= 1:
        return closure([], perm_mul, tuple(range(max(n, 0))), name=f"S{n}")
    gens = [perm_from_cycles(n, (0, 1)), perm_from_cycles(n, tuple(range(n)))]
    return closure(gens, perm_mul, tuple(range(n)), name=f"S{n}")


def alternating_group(n: int) -> FiniteGroup:
    ident = tuple(range(n))
    if n < 3:
        return closure([], perm_mul, ident, name=f"A{n}")
    gens = [perm_from_cycles(n, (i, i + 1, i + 2)) for i in range(n - 2)]
    return closure(gens, perm_mul, ident, name=f"A{n}")


def cyclic_group(n: int) -> FiniteGroup:
    return closure([1 % n] if n > 1 else [], mod_add(n), 0, name=f"Z/{n}")


def sl2(p: int) -> FiniteGroup:
    S = ((0, p - 1), (1, 0))
    T = ((1, 1), (0, 1))
    return closure([S, T], mat_mul_mod(p), ((1, 0), (0, 1)), name=f"SL2(F{p})")


def direct_product(*groups: FiniteGroup, name: str = "", cap: int = ORDER_CAP) -> FiniteGroup:
    ident = tuple(G.identity for G in groups)
    gens = []
    for i, G in enumerate(groups):
        for g in G.generators:
            gens.append(tuple(g if j == i else H.identity for j, H in enumerate(groups)))
    mul = product_mul(*(G.mul for G in groups))
    return closure(gens, mul, ident, cap=cap, name=name or "x".join(G.name for G in groups),
                   max_generators=None)


def diagonal(G: FiniteGroup, copies: int = 2) -> FiniteGroup:
    gens = [tuple([g] * copies) for g in G.generators]
    mul = product_mul(*([G.mul] * copies))
    return closure(gens, mul, tuple([G.identity] * copies), name=f"diag({G.name})", max_generators=None)


def filtered_product(G1: FiniteGroup, G2: FiniteGroup, pred: Callable, name: str = "") -> FiniteGroup:
    """``{(x, y) in G1 x G2 : pred(x, y)}`` (caller guarantees it is a subgroup)."""
    elems = [(x, y) for x in G1 for y in G2 if pred(x, y)]
    mul = product_mul(G1.mul, G2.mul)
    ident = (G1.identity, G2.identity)
    elems.sort(key=lambda e: e != ident)
    return FiniteGroup(elems, mul, ident, elems[1:], name)


# ---------------------------------------------------------------------------
# structure


def normal_closure(G: FiniteGroup, S: Sequence[Hashable]) -> FiniteGroup:
    gens = list(dict.fromkeys(S))
    H = subgroup(G, gens)
    conj_by = G.generators or G.elements
    while True:
        new = []
        for g in conj_by:
            for h in H.generators:
                y = G.conj(g, h)
                if y not in H:
                    new.append(y)
        if not new:
            return H
        H = subgroup(G, H.generators + list(dict.fromkeys(new)))


def derived_subgroup(G: FiniteGroup) -> FiniteGroup:
    gens = G.generators
    comms = [G.commutator(x, y) for x in gens for y in gens]
    return normal_closure(G, [c for c in comms if c != G.identity] or [G.identity])


def is_perfect(G: FiniteGroup) -> bool:
    return derived_subgroup(G).order == G.order


def center(G: FiniteGroup) -> FiniteGroup:
    gens = G.generators or G.elements
    Z = [z for z in G if all(G.mul(z, g) == G.mul(g, z) for g in gens)]
    return subgroup_from_elements(G, Z, name=f"Z({G.name})")


def is_normal(G: FiniteGroup, H: FiniteGroup) -> bool:
    hg = H.generators or H.elements
    gg = G.generators or G.elements
    return all(G.conj(g, h) in H for g in gg for h in hg)


def conjugacy_classes(G: FiniteGroup) -> list:
    gens = G.generators or G.elements
    seen = set()
    classes = []
    for x in G:
        if x in seen:
            continue
        cls = [x]
        seen.add(x)
        queue = deque([x])
        while queue:
            y = queue.popleft()
            for g in gens:
                z = G.conj(g, y)
                if z not in seen:
                    seen.add(z)
                    cls.append(z)
                    queue.append(z)
        classes.append(cls)
    return classes


def is_simple(G: FiniteGroup) -> bool:
    if G.order <= 1:
        return False
    for cls in conjugacy_classes(G):
        x = cls[0]
        if x != G.identity and normal_closure(G, [x]).order != G.order:
            return False
    return True


@dataclass
class CosetTable:
    group: FiniteGroup
    normal: FiniteGroup
    coset_of: dict  # element -> representative (first element of the coset in group order)
    reps: list

    @property
    def order(self) -> int:
        return len(self.reps)


def cosets(G: FiniteGroup, H: FiniteGroup) -> CosetTable:
    coset_of = {}
    reps = []
    for x in G:
        if x in coset_of:
            continue
        reps.append(x)
        for h in H:
            coset_of[G.mul(x, h)] = x
    return CosetTable(G, H, coset_of, reps)


def quotient(G: FiniteGroup, H: FiniteGroup) -> FiniteGroup:
    if not is_normal(G, H):
        raise NotNormal("quotient by a non-normal subgroup")
    table = cosets(G, H)
    cof = table.coset_of

    def mul(a, b):
        return cof[G.mul(a, b)]

    gens = list(dict.fromkeys(cof[g] for g in G.generators))
    return FiniteGroup(table.reps, mul, cof[G.identity], gens, f"{G.name}/{H.name}")


def is_quasisimple(G: FiniteGroup) -> bool:
    if not is_perfect(G):
        return False
    return is_simple(quotient(G, center(G)))


# ---------------------------------------------------------------------------
# Goursat data


def projection(G: FiniteGroup, i: int, target: FiniteGroup) -> set:
    return {x[i] for x in G}


@dataclass
class GoursatDatum:
    G: FiniteGroup
    G1: FiniteGroup
    G2: FiniteGroup
    H1: FiniteGroup
    H2: FiniteGroup
    pairing: dict  # G1/H1 representative -> G2/H2 representative

    @property
    def quotient_order(self) -> int:
        return len(self.pairing)

    def verify(self) -> bool:
        G, H1, H2 = self.G, self.H1, self.H2
        if not (is_normal(self.G1, H1) and is_normal(self.G2, H2)):
            return False
        if not all((x, y) in G for x in H1 for y in H2):
            return False
        c1 = cosets(self.G1, H1).coset_of
        c2 = cosets(self.G2, H2).coset_of
        if not all(self.pairing.get(c1[x]) == c2[y] for x, y in G):
            return False
        vals = list(self.pairing.values())
        return len(set(vals)) == len(vals) == len(set(c2.values()))

    def summary(self) -> dict:
        return {"|H1|": self.H1.order, "|H2|": self.H2.order, "quotient_order": self.quotient_order}


def goursat_datum(G: FiniteGroup, G1: FiniteGroup, G2: FiniteGroup) -> GoursatDatum:
    """Datum of ``G`` inside ``G1 x G2`` (elements are pairs)."""
    if projection(G, 0, G1) != set(G1.elements) or projection(G, 1, G2) != set(G2.elements):
        raise NotSurjective("projections of G are not onto the factors")
    H1 = subgroup_from_elements(G1, [x for x, y in G if y == G2.identity], name="H1")
    H2 = subgroup_from_elements(G2, [y for x, y in G if x == G1.identity], name="H2")
    c1 = cosets(G1, H1).coset_of
    c2 = cosets(G2, H2).coset_of
    pairing = {}
    for x, y in G:
        a, b = c1[x], c2[y]
        if pairing.setdefault(a, b) != b:
            raise AssertionError("pairing is not well defined")
    datum = GoursatDatum(G, G1, G2, H1, H2, pairing)
    if not datum.verify():
        raise AssertionError("Goursat datum failed verification")
    return datum


def image_group(G: FiniteGroup, idx: Sequence[int], factors: Sequence[FiniteGroup]) -> FiniteGroup:
    """Image of ``G`` under the projection to the factors listed in ``idx``."""
    elems = list(dict.fromkeys(tuple(x[i] for i in idx) for x in G))
    mul = product_mul(*(factors[i].mul for i in idx))
    ident = tuple(factors[i].identity for i in idx)
    elems.sort(key=lambda e: e != ident)
    if len(idx) == 1:
        F = factors[idx[0]]
        sub = [e[0] for e in elems]
        return subgroup_from_elements(F, sub, name=F.name)
    return FiniteGroup(elems, mul, ident, elems[1:])


# ---------------------------------------------------------------------------
# representations


class MatrixRep:
    """Complex matrix representation with matrices tabulated on every element."""

    def __init__(self, group: FiniteGroup, matrices: dict, name: str = ""):
        self.group = group
        self.matrices = matrices
        self.name = name
        self.dim = next(iter(matrices.values())).shape[0]

    @classmethod
    def from_generators(cls, group: FiniteGroup, gen_mats: Sequence[np.ndarray], name: str = "") -> "MatrixRep":
        if group.parent is None:
            raise PreconditionError("group needs a BFS tree (build it with closure)")
        gen_mats = [np.asarray(m, dtype=np.complex128) for m in gen_mats]
        dim = gen_mats[0].shape[0] if gen_mats else 1
        mats = [np.eye(dim, dtype=np.complex128)]
        for i in range(1, group.order):
            mats.append(mats[group.parent[i]] @ gen_mats[group.parent_gen[i]])
        return cls(group, dict(zip(group.elements, mats)), name)

    @classmethod
    def from_function(cls, group: FiniteGroup, fn: Callable, name: str = "") -> "MatrixRep":
        return cls(group, {x: np.asarray(fn(x), dtype=np.complex128) for x in group}, name)

    @classmethod
    def trivial(cls, group: FiniteGroup) -> "MatrixRep":
        one = np.eye(1, dtype=np.complex128)
        return cls(group, {x: one for x in group}, "1")

    def __call__(self, x) -> np.ndarray:
        return self.matrices[x]

    def character(self, x) -> complex:
        return complex(np.trace(self.matrices[x]))

    def characters(self) -> np.ndarray:
        return np.array([self.character(x) for x in self.group])

    def dual(self) -> "MatrixRep":
        G = self.group
        return MatrixRep(G, {x: self.matrices[G.inverse(x)].T.copy() for x in G}, self.name + "^v")

    def pullback(self, group: FiniteGroup, proj: Callable) -> "MatrixRep":
        """``x -> rho(proj(x))`` on another group."""
        return MatrixRep(group, {x: self.matrices[proj(x)] for x in group}, self.name)

    def check_multiplicative(self, pairs: int = 50, seed: int = 0, tol: float = 1e-8) -> bool:
        G = self.group
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, G.order, size=(pairs, 2))
        for i, j in idx:
            x, y = G.elements[i], G.elements[j]
            if np.max(np.abs(self.matrices[x] @ self.matrices[y] - self.matrices[G.mul(x, y)])) > tol:
                return False
        return True

    def check_class_function(self, tol: float = 1e-8, classes: Optional[list] = None) -> bool:
        for cls in classes or conjugacy_classes(self.group):
            vals = [self.character(x) for x in cls]
            if max(abs(v - vals[0]) for v in vals) > tol:
                return False
        return True

    def norm_squared(self) -> float:
        """``(1/|G|) sum |chi|^2``; equals 1 exactly for irreducible reps."""
        return float(np.mean(np.abs(self.characters()) ** 2))


def coinvariant_dim(G: FiniteGroup, reps: Sequence[MatrixRep]) -> int:
    """Multiplicity of the trivial representation in the tensor product."""
    total = 0j
    for x in G:
        prod = 1.0 + 0j
        for rho in reps:
            prod *= rho.character(x)
        total += prod
    avg = total / G.order
    k = round(avg.real)
    if abs(avg - k) > INTEGRALITY_TOL:
        raise NotIntegral(f"character average {avg} is not an integer")
    return int(k)


# ---------------------------------------------------------------------------
# concrete representations


def _quat(a, b, c, d) -> np.ndarray:
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]], dtype=np.complex128)


def _ckey(m: np.ndarray, digits: int = 8) -> tuple:
    r = np.round(m, digits) + 0.0
    return tuple(np.concatenate([r.real.ravel(), r.imag.ravel()]).tolist())


def binary_icosahedral() -> FiniteGroup:
    """The order-120 group of unit icosians as 2x2 complex matrices, keyed by rounded entries."""
    phi = (1 + 5**0.5) / 2
    s = _quat(0.5, 0.5, 0.5, 0.5)
    t = _quat(phi / 2, 1 / (2 * phi), 0.5, 0.0)
    mats = {}

    def mul(a, b):
        m = mats[a] @ mats[b]
        k = _ckey(m)
        mats.setdefault(k, m)
        return k

    gens = []
    for m in (s, t):
        k = _ckey(m)
        mats[k] = m
        gens.append(k)
    ident = _ckey(np.eye(2))
    mats[ident] = np.eye(2, dtype=np.complex128)
    G = closure(gens, mul, ident, name="2I")
    G.matrices = mats
    return G


def sl2f5_standard_rep(G: Optional[FiniteGroup] = None) -> MatrixRep:
    """A faithful 2-dimensional complex representation of SL2(F5).

    Searches for images of the generators S (order 4) and T (order 5) in the
    binary icosahedral group such that the graph of the candidate map closes
    to a group of order 120, i.e. the map is an isomorphism.
    """
    G = G or sl2(5)
    I2 = binary_icosahedral()
    S, T = G.generators
    oS, oT = G.elem_order(S), G.elem_order(T)
    cand_a = [x for x in I2 if I2.elem_order(x) == oS]
    cand_b = [x for x in I2 if I2.elem_order(x) == oT]
    mul = product_mul(G.mul, I2.mul)
    for a in cand_a:
        for b in cand_b:
            try:
                H = closure([(S, a), (T, b)], mul, (G.identity, I2.identity), cap=G.order)
            except OrderCapExceeded:
                continue
            if H.order == G.order:
                rep = MatrixRep.from_generators(G, [I2.matrices[a], I2.matrices[b]], name="Std")
                return rep
    raise AssertionError("no isomorphism onto the binary icosahedral group found")  # pragma: no cover


def permutation_rep(G: FiniteGroup, n: int) -> MatrixRep:
    def fn(x):
        m = np.zeros((n, n))
        for i, j in enumerate(x):
            m[j, i] = 1.0
        return m

    return MatrixRep.from_function(G, fn, name="Perm")


def standard_perm_rep(G: FiniteGroup, n: int) -> MatrixRep:
    """Action on ``span(e_i - e_n)``, the (n-1)-dimensional standard representation."""
    B = np.zeros((n, n - 1))
    for i in range(n - 1):
        B[i, i] = 1.0
        B[n - 1, i] = -1.0
    Bp = np.linalg.pinv(B)
    perm = permutation_rep(G, n)
    return MatrixRep(G, {x: Bp @ perm(x) @ B for x in G}, name=f"Std{n - 1}")


# ---------------------------------------------------------------------------
# the coinvariant dichotomy


@dataclass
class GKRVerdict:
    case: int
    coinvariant_dim: int
    witnesses: dict = field(default_factory=dict)
    holds: bool = True

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "coinvariant_dim": self.coinvariant_dim,
            "witnesses": {str(i): w for i, w in self.witnesses.items()},
            "holds": self.holds,
        }


def gkr_check(
    G: FiniteGroup,
    factors: Sequence[FiniteGroup],
    reps: Sequence[MatrixRep],
    cores: Sequence[FiniteGroup],
) -> GKRVerdict:
    """Check the dichotomy for ``G`` inside ``prod G_i`` with reps ``rho_i`` of ``G_i``.

    Either the ``G``-coinvariants of ``tensor rho_i`` vanish (case 1), or for
    every ``i`` there is ``j != i`` whose pairwise Goursat datum has
    ``N_i`` not contained in ``H_{i,j}`` (case 2).
    """
    k = len(factors)
    if not (len(reps) == len(cores) == k):
        raise PreconditionError("need one representation and one core per factor")
    for i, (N, rho) in enumerate(zip(cores, reps)):
        if not is_perfect(N):
            raise PreconditionFailed(f"core N_{i} is not perfect")
        if coinvariant_dim(N, [rho.pullback(N, lambda x: x)]) != 0:
            raise PreconditionFailed(f"core N_{i} has nonzero coinvariants")
    if k == 1:
        pulled = [reps[0].pullback(G, lambda x: x)]
    else:
        pulled = [rho.pullback(G, (lambda i: lambda x: x[i])(i)) for i, rho in enumerate(reps)]
    dim = coinvariant_dim(G, pulled)
    if dim == 0:
        return GKRVerdict(1, 0)
    witnesses = {}
    for i in range(k):
        Gi = image_group(G, [i], factors)
        for j in range(k):
            if j == i:
                continue
            Gij = image_group(G, [i, j], factors)
            datum = goursat_datum(Gij, Gi, image_group(G, [j], factors))
            if not cores[i].is_subset_of(datum.H1):
                witnesses[i] = {"j": j, "|H|": datum.H1.order}
                break
    return GKRVerdict(2, dim, witnesses, holds=len(witnesses) == k)


@dataclass
class CommuteVerdict:
    status: str  # "commute", "counterexample" or "not-applicable"
    counterexample: Optional[tuple] = None


def commute_witness(G: FiniteGroup, M: FiniteGroup, N: FiniteGroup) -> CommuteVerdict:
    if not is_normal(G, M) or not is_normal(G, N):
        raise NotNormal("M and N must be normal in G")
    if not is_quasisimple(N):
        raise NotQuasisimple("N must be quasisimple")
    if N.is_subset_of(M):
        return CommuteVerdict("not-applicable")
    for m in M:
        for n in N.generators or N.elements:
            if G.mul(m, n) != G.mul(n, m):
                return CommuteVerdict("counterexample", (m, n))
    return CommuteVerdict("commute")


# ---------------------------------------------------------------------------
# shipped demos


@dataclass
class Demo:
    name: str
    G: FiniteGroup
    factors: list
    reps: list
    cores: list
    expected_dim: Optional[int]


def demo_instances() -> list:
    """The product-subgroup demos used by the CLI and the acceptance gate."""
    S = sl2(5)
    std = sl2f5_standard_rep(S)
    A5 = alternating_group(5)
    std4 = standard_perm_rep(A5, 5)
    diag = diagonal(S)
    full = direct_product(S, S)
    Z4 = cyclic_group(4)
    congr = filtered_product(Z4, Z4, lambda x, y: (x - y) % 2 == 0, name="{x=y mod 2}")
    return [
        Demo("diag-SL2F5", diag, [S, S], [std, std.dual()], [S, S], 1),
        Demo("full-SL2F5xSL2F5", full, [S, S], [std, std], [S, S], 0),
        Demo("Z4xZ4-congruence", congr, [Z4, Z4], None, None, None),
        Demo("single-A5", A5, [A5], [std4], [A5], 0),
    ]


def group_certificate(G: FiniteGroup) -> dict:
    Z = center(G)
    return {
        "group": G.name,
        "order": G.order,
        "perfect": is_perfect(G),
        "center_order": Z.order,
        "quasisimple": is_quasisimple(G),
    }
