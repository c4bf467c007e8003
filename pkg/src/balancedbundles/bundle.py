"""Direct sums of line bundles over CP1 and CP1xCP1 and their sections.

A summand O(k) on CP1 has the monomial basis 1, z, ..., z^k of H^0; a summand
O(a, b) on CP1xCP1 has the basis z^i w^j with i <= a, j <= b.  Sections of
the sum are ordered block by block (summand first, then exponent in
lexicographic order), so the basis of E_1 + 0 comes before that of 0 + E_2.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import BaseKind, PolarizedBase, make_base


@dataclass(frozen=True)
class BundleSpec:
    base: PolarizedBase
    twists: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = self.base.complex_dim
        if not self.twists:
            raise InvalidArgumentError("a bundle needs at least one summand")
        for t in self.twists:
            if len(t) != n:
                raise InvalidArgumentError(
                    f"twist {t} has {len(t)} entries but {self.base.kind.value} needs {n}"
                )
            if any(int(k) != k or k < 0 for k in t):
                raise InvalidArgumentError(f"twists must be nonnegative integers, got {t}")

    @property
    def rank(self) -> int:
        return len(self.twists)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(int(np.prod([k + 1 for k in t])) for t in self.twists)

    @property
    def n_sections(self) -> int:
        return sum(self.block_sizes)

    @property
    def det_twist(self) -> tuple[int, ...]:
        return tuple(sum(col) for col in zip(*self.twists))

    def __str__(self) -> str:
        return "+".join("O(" + ",".join(str(k) for k in t) + ")" for t in self.twists)


@dataclass(frozen=True)
class SectionBasis:
    spec: BundleSpec
    labels: tuple[tuple[int, tuple[int, ...]], ...]
    block_offsets: tuple[int, ...]
    # cached integer arrays used by the vectorized evaluator
    _summand: np.ndarray = field(repr=False, compare=False, default=None)
    _exponents: np.ndarray = field(repr=False, compare=False, default=None)

    def __len__(self) -> int:
        return len(self.labels)

    def block(self, j: int) -> range:
        stop = self.block_offsets[j + 1] if j + 1 < len(self.block_offsets) else len(self.labels)
        return range(self.block_offsets[j], stop)


def make_spec(base, twists: Sequence) -> BundleSpec:
    """Convenience constructor: ``make_spec("CP1", [1, 2])`` or ``make_spec(base, [(1, 0), (0, 1)])``."""
    if not isinstance(base, PolarizedBase):
        base = make_base(base)
    norm = tuple(tuple(t) if isinstance(t, (tuple, list)) else (t,) for t in twists)
    return BundleSpec(base, norm)


def direct_sum(*specs: BundleSpec) -> BundleSpec:
    bases = {s.base for s in specs}
    if len(bases) != 1:
        raise InvalidArgumentError("summands live over different bases")
    return BundleSpec(specs[0].base, tuple(t for s in specs for t in s.twists))


def h0_basis(spec: BundleSpec) -> SectionBasis:
    labels = []
    offsets = []
    for j, twist in enumerate(spec.twists):
        offsets.append(len(labels))
        for exps in itertools.product(*(range(k + 1) for k in twist)):
            labels.append((j, tuple(exps)))
    summand = np.array([j for j, _ in labels], dtype=np.intp)
    exponents = np.array([e for _, e in labels], dtype=np.intp).reshape(len(labels), -1)
    return SectionBasis(spec, tuple(labels), tuple(offsets), summand, exponents)


def transform_matrix(transform, n: int) -> np.ndarray:
    """Coerce ``None``, an array or anything with a ``.matrix`` to an invertible n x n array."""
    if transform is None:
        return np.eye(n, dtype=complex)
    a = np.asarray(getattr(transform, "matrix", transform), dtype=complex)
    if a.shape != (n, n):
        raise InvalidArgumentError(f"transform must be {n}x{n}, got shape {a.shape}")
    sign, logdet = np.linalg.slogdet(a)
    if sign == 0 or not np.isfinite(logdet):
        raise InvalidArgumentError("transform is singular")
    return a


def reference_sections(basis: SectionBasis, points, flip=None) -> np.ndarray:
    """Raw monomials in the standard frame: array (..., r, N).

    ``flip[f]`` set means factor f is given in the opposite chart w = 1/z,
    where z^m in the frame over z0 != 0 reads w^(k - m) in the frame over
    z1 != 0.
    """
    spec = basis.spec
    pts = np.asarray(points, dtype=complex)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n = spec.base.complex_dim
    if pts.shape[-1] != n:
        raise InvalidArgumentError(f"points need {n} chart coordinate(s), got shape {pts.shape}")
    exps = basis._exponents.copy()
    if flip is not None:
        twist_of_label = np.array([spec.twists[j] for j in basis._summand]).reshape(len(basis), n)
        for f, flipped in enumerate(flip):
            if flipped:
                exps[:, f] = twist_of_label[:, f] - exps[:, f]
    values = np.ones((pts.shape[0], len(basis)), dtype=complex)
    for f in range(n):
        values = values * pts[:, f : f + 1] ** exps[None, :, f]
    s = np.zeros((pts.shape[0], spec.rank, len(basis)), dtype=complex)
    s[:, basis._summand, np.arange(len(basis))] = values
    return s[0] if single else s


def evaluate_sections(basis: SectionBasis, transform, points, flip=None) -> np.ndarray:
    """Evaluation matrices S(x) = S0(x) A^T of the basis A . s0, shape (..., r, N)."""
    a = transform_matrix(transform, len(basis))
    return reference_sections(basis, points, flip) @ a.T


@dataclass(frozen=True)
class RatioCriterion:
    holds: bool
    ratios: tuple[Fraction, ...]


def ratio_criterion(spec: BundleSpec, groups: Sequence[Sequence[int]] | None = None) -> RatioCriterion:
    """Exact comparison of rank/section-count ratios across summands.

    ``groups`` optionally bundles summands together (each group being one E_j
    of rank len(group)); by default every line-bundle summand is its own group.
    """
    sizes = spec.block_sizes
    if groups is None:
        groups = [[j] for j in range(spec.rank)]
    ratios = tuple(Fraction(len(g), sum(sizes[j] for j in g)) for g in groups)
    return RatioCriterion(len(set(ratios)) == 1, ratios)


class BundleSyntaxError(InvalidArgumentError):
    def __init__(self, message: str, text: str, offset: int):
        pointer = f"\n  {text}\n  {' ' * offset}^"
        super().__init__(
            f"{message} at offset {offset}{pointer}\n"
            "grammar: sum := term ('+' term)* ; term := 'O(' int (',' int)? ')'"
        )
        self.offset = offset


_TOKEN = re.compile(r"\s*(?:(?P<int>[+-]?\d+)|(?P<sym>[O(),+])|(?P<bad>\S))")


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        start = m.start(m.lastgroup)
        if m.lastgroup == "bad":
            raise BundleSyntaxError(f"unexpected character {m.group('bad')!r}", text, start)
        yield m.lastgroup, m.group(m.lastgroup), start
        pos = m.end()
    yield "end", "", len(text)


def parse_bundle(text: str, form_weights=None) -> BundleSpec:
    """Parse ``O(k1)+O(k2)+...`` (CP1) or ``O(a,b)+...`` (CP1xCP1)."""
    toks = list(_tokens(text))
    i = 0

    def expect(kind, value=None):
        nonlocal i
        k, v, off = toks[i]
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            shown = v if v else "end of input"
            raise BundleSyntaxError(f"expected {want!r}, found {shown!r}", text, off)
        i += 1
        return v, off

    twists = []
    while True:
        expect("sym", "O")
        expect("sym", "(")
        entries = []
        while True:
            v, off = expect("int")
            k = int(v)
            if k < 0:
                raise BundleSyntaxError(f"twist {k} out of range (must be >= 0)", text, off)
            entries.append(k)
            if toks[i][:2] == ("sym", ","):
                i += 1
                continue
            break
        _, close = expect("sym", ")")
        if len(entries) > 2:
            raise BundleSyntaxError("a twist has one or two entries", text, close)
        if twists and len(entries) != len(twists[0]):
            raise BundleSyntaxError("mixed arity: one- and two-parameter twists in one sum", text, close)
        twists.append(tuple(entries))
        kind, _, off = toks[i]
        if kind == "end":
            break
        expect("sym", "+")
    kind = BaseKind.CP1 if len(twists[0]) == 1 else BaseKind.CP1xCP1
    return BundleSpec(make_base(kind, form_weights), tuple(twists))
