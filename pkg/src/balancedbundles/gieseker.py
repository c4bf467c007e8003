"""Exact Gieseker points and Hilbert-Mumford weights of diagonal subgroups.

The Gieseker point of E sends s_{j1} ^ ... ^ s_{jr} to the section
x -> s_{j1}(x) ^ ... ^ s_{jr}(x) of det E.  For a sum of line bundles the
frame values of every section are monomials, so each column is a polynomial
computed here as an exact determinant with integer/rational coefficients.

Columns are indexed by r-subsets of {0, ..., N-1} in colexicographic order
(compare the largest element first).  Rows are the monomials of H^0(det E),
ordered lexicographically by exponent.  No floating point is used.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Sequence

from .bundle import BundleSpec, SectionBasis, h0_basis
from .errors import InvalidArgumentError, ResourceError

DEFAULT_CAP = 10**6

Poly = dict  # {exponent tuple: Fraction}


def colex_subsets(n: int, r: int) -> list[tuple[int, ...]]:
    return sorted(itertools.combinations(range(n), r), key=lambda s: s[::-1])


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def _poly_add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0) + sign * c
    return {e: c for e, c in out.items() if c != 0}


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def poly_det(rows: Sequence[Sequence[Poly]]) -> Poly:
    """Leibniz determinant of a square matrix of polynomials; zero entries are {}."""
    r = len(rows)
    total: Poly = {}
    for perm in itertools.permutations(range(r)):
        term = None
        for i, j in enumerate(perm):
            entry = rows[i][j]
            if not entry:
                term = None
                break
            term = entry if term is None else _poly_mul(term, entry)
        if term:
            total = _poly_add(total, term, _perm_sign(perm))
    return total


def section_frame_values(basis: SectionBasis) -> list[list[Poly]]:
    """r x N matrix of polynomials: reference sections in the standard frame."""
    spec = basis.spec
    s0 = [[{} for _ in range(len(basis))] for _ in range(spec.rank)]
    for i, (j, exps) in enumerate(basis.labels):
        s0[j][i] = {exps: Fraction(1)}
    return s0


@dataclass(frozen=True)
class GiesekerPoint:
    spec: BundleSpec
    subsets: tuple[tuple[int, ...], ...]
    det_basis: tuple[tuple[int, ...], ...]
    columns: tuple[Poly, ...]  # sparse coefficient vector per subset

    def is_zero(self) -> bool:
        return not any(self.columns)

    def nonzero_subsets(self) -> list[tuple[int, ...]]:
        return [s for s, c in zip(self.subsets, self.columns) if c]

    def column(self, subset: Iterable[int]) -> Poly:
        return self.columns[self._index[tuple(subset)]]

    @cached_property
    def _index(self) -> dict:
        return {s: i for i, s in enumerate(self.subsets)}

    def coefficient_matrix(self) -> list[list[Fraction]]:
        """Dense rows (det E monomials) x columns (subsets)."""
        return [[Fraction(col.get(e, 0)) for col in self.columns] for e in self.det_basis]

    def evaluate(self, point: Sequence) -> list:
        """Column polynomials at a chart point; exact for int/Fraction coordinates."""
        out = []
        for col in self.columns:
            total = 0
            for exps, c in col.items():
                term = c
                for x, e in zip(point, exps):
                    term = term * x**e
                total = total + term
            out.append(total)
        return out

    def to_dict(self) -> dict:
        return {
            "spec": str(self.spec),
            "subsets": [list(s) for s in self.subsets],
            "det_basis": [list(e) for e in self.det_basis],
            "columns": [
                {",".join(map(str, e)): str(c) for e, c in sorted(col.items())} for col in self.columns
            ],
        }


def _check_cap(n: int, r: int, cap: int):
    count = math.comb(n, r)
    if count > cap:
        raise ResourceError(f"binomial({n}, {r}) = {count} columns exceeds the cap {cap}")


def gieseker_point(spec: BundleSpec, cap: int = DEFAULT_CAP) -> GiesekerPoint:
    basis = h0_basis(spec)
    n, r = len(basis), spec.rank
    _check_cap(n, r, cap)
    s0 = section_frame_values(basis)
    subsets = colex_subsets(n, r)
    columns = tuple(poly_det([[row[j] for j in subset] for row in s0]) for subset in subsets)
    det_basis = tuple(itertools.product(*(range(k + 1) for k in spec.det_twist)))
    return GiesekerPoint(spec, tuple(subsets), det_basis, columns)


def act(t: GiesekerPoint, v: Sequence[Sequence], cap: int = DEFAULT_CAP) -> GiesekerPoint:
    """(V . T)(s_J) = T(V s_j1 ^ ... ^ V s_jr) = sum_K det V[K, J] T(s_K).

    ``v`` is an exact N x N matrix (ints or Fractions) with V s_j = sum_i V[i][j] s_i.
    """
    n, r = t.spec.n_sections, t.spec.rank
    if len(v) != n or any(len(row) != n for row in v):
        raise InvalidArgumentError(f"V must be {n}x{n}")
    _check_cap(n, r, cap)
    index = t._index
    columns = []
    for subset in t.subsets:
        col: Poly = {}
        for k_subset in t.subsets:
            minor = _exact_det([[Fraction(v[i][j]) for j in subset] for i in k_subset])
            if minor:
                scaled = {e: minor * c for e, c in t.columns[index[k_subset]].items()}
                col = _poly_add(col, scaled)
        columns.append(col)
    return GiesekerPoint(t.spec, t.subsets, t.det_basis, tuple(columns))


def _exact_det(m: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in m]
    size, det = len(m), Fraction(1)
    for c in range(size):
        pivot = next((i for i in range(c, size) if m[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, size):
            f = m[i][c] / m[c][c]
            if f:
                for j in range(c, size):
                    m[i][j] -= f * m[c][j]
    return det


@dataclass(frozen=True)
class OneParameterSubgroup:
    """t -> diag(t^lambda_1, ..., t^lambda_N) inside SL(N)."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(int(x) != x for x in self.exponents):
            raise InvalidArgumentError("1-PS exponents must be integers")
        if sum(self.exponents) != 0:
            raise InvalidArgumentError(f"1-PS exponents must sum to 0, got {sum(self.exponents)}")

    def __neg__(self) -> "OneParameterSubgroup":
        return OneParameterSubgroup(tuple(-x for x in self.exponents))

    @classmethod
    def trivial(cls, n: int) -> "OneParameterSubgroup":
        return cls((0,) * n)


def act_diagonal(t: GiesekerPoint, lam: OneParameterSubgroup, param: Fraction) -> GiesekerPoint:
    """g(t) . T for the diagonal subgroup at parameter value ``param`` (exact)."""
    param = Fraction(param)
    columns = []
    for subset, col in zip(t.subsets, t.columns):
        scale = param ** sum(lam.exponents[i] for i in subset)
        columns.append({e: scale * c for e, c in col.items()})
    return GiesekerPoint(t.spec, t.subsets, t.det_basis, tuple(columns))


@dataclass(frozen=True)
class OPSWeights:
    weights: dict
    min_nonzero_weight: int

    @property
    def limit_vanishes(self) -> bool:
        """g(t) . T -> 0 as t -> 0."""
        return self.min_nonzero_weight > 0


def ops_weights(t: GiesekerPoint, lam: OneParameterSubgroup) -> OPSWeights:
    if len(lam.exponents) != t.spec.n_sections:
        raise InvalidArgumentError(
            f"1-PS has {len(lam.exponents)} exponents, basis has {t.spec.n_sections} sections"
        )
    if t.is_zero():
        raise InvalidArgumentError("Gieseker point is identically zero")
    weights = {s: sum(lam.exponents[i] for i in s) for s in t.subsets}
    min_w = min(weights[s] for s, col in zip(t.subsets, t.columns) if col)
    return OPSWeights(weights, min_w)


@dataclass(frozen=True)
class Destabilization:
    spec: BundleSpec
    groups: tuple[tuple[int, ...], tuple[int, ...]]  # heavier N/r group first
    lam: OneParameterSubgroup
    weight: int
    destabilizes: bool

    def to_dict(self) -> dict:
        return {
            "spec": str(self.spec),
            "groups": [list(g) for g in self.groups],
            "lambda": list(self.lam.exponents),
            "weight": self.weight,
            "destabilizes": self.destabilizes,
        }


def proof_subgroup(spec: BundleSpec, groups) -> tuple[OneParameterSubgroup, tuple, int]:
    """The diagonal subgroup separating two groups of summands.

    Groups are reordered so that N1/r1 >= N2/r2; sections of group 1 get
    exponent -N2, those of group 2 get N1, all others 0.  Returns the subgroup,
    the ordered groups and the predicted weight r2*N1 - r1*N2.
    """
    g1, g2 = (tuple(g) for g in groups)
    if not g1 or not g2 or set(g1) & set(g2):
        raise InvalidArgumentError("groups must be two disjoint nonempty sets of summands")
    sizes = spec.block_sizes
    n1, n2 = sum(sizes[j] for j in g1), sum(sizes[j] for j in g2)
    r1, r2 = len(g1), len(g2)
    if n1 * r2 < n2 * r1:
        g1, g2, n1, n2, r1, r2 = g2, g1, n2, n1, r2, r1
    basis = h0_basis(spec)
    exps = []
    for j, _ in basis.labels:
        exps.append(-n2 if j in g1 else n1 if j in g2 else 0)
    return OneParameterSubgroup(tuple(exps)), (g1, g2), r2 * n1 - r1 * n2


def destabilizing_ops(spec: BundleSpec, groups=None, cap: int = DEFAULT_CAP) -> Destabilization:
    """Reproduce the destabilizing subgroup for a two-group split.

    With more than two summands and no explicit groups, every pair of
    summands is tried in order and the first destabilizing pair is returned.
    The predicted weight is checked against every nonzero column of the exact
    Gieseker point.
    """
    t = gieseker_point(spec, cap)
    if groups is not None:
        return _destabilization(t, groups)
    if spec.rank < 2:
        raise InvalidArgumentError("need at least two summands")
    result = None
    for i, j in itertools.combinations(range(spec.rank), 2):
        result = _destabilization(t, ((i,), (j,)))
        if result.destabilizes:
            break
    return result


def _destabilization(t: GiesekerPoint, groups) -> Destabilization:
    lam, ordered, predicted = proof_subgroup(t.spec, groups)
    w = ops_weights(t, lam)
    nonzero = {w.weights[s] for s in t.nonzero_subsets()}
    if nonzero != {predicted}:
        raise ArithmeticError(f"column weights {sorted(nonzero)} differ from r2*N1 - r1*N2 = {predicted}")
    return Destabilization(t.spec, ordered, lam, predicted, predicted > 0)


def hm_weight_search(t: GiesekerPoint, candidates: Sequence[OneParameterSubgroup]):
    """Best min-nonzero weight over candidates; positive certifies non-stability.

    Returns (weight, subgroup).  A non-positive value certifies nothing.
    """
    if not candidates:
        raise InvalidArgumentError("empty candidate list")
    scored = [(ops_weights(t, lam).min_nonzero_weight, lam) for lam in candidates]
    return max(scored, key=lambda item: item[0])
