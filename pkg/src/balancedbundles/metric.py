"""Pullback metrics, L2 Gram matrices and the balancing iteration.

Conventions.  A basis of H^0(E) is stored as a transform A acting on the
reference monomials: s_i = sum_m A[i, m] s0_m, so the evaluation matrix is
S(x) = S0(x) A^T (r x N).  The pulled-back quotient metric is
H(x) = (S S^*)^{-1} with h(u, v) = v^* H u, and the pointwise matrix

    P(x) = S^* (S S^*)^{-1} S,    P[k, j] = h(s_j, s_k)(x),

is the orthogonal projection onto the row space of S, so trace P = r.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bundle import (
    BundleSpec,
    SectionBasis,
    direct_sum,
    evaluate_sections,
    h0_basis,
    ratio_criterion,
    transform_matrix,
)
from .errors import DegeneratePointError, DegenerationError, InvalidArgumentError
from .geometry import PolarizedBase, QuadratureRule, integrate, quadrature_nodes

RANK_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class BasisTransform:
    """Invertible N x N matrix A (current basis = A . monomials), |det A| = 1."""

    matrix: np.ndarray

    @classmethod
    def normalized(cls, matrix) -> "BasisTransform":
        a = np.array(matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgumentError(f"transform must be square, got shape {a.shape}")
        sign, logdet = np.linalg.slogdet(a)
        if sign == 0 or not np.isfinite(logdet):
            raise InvalidArgumentError("transform is singular")
        a *= np.exp(-logdet / a.shape[0])
        return cls(a)

    @classmethod
    def identity(cls, n: int) -> "BasisTransform":
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BasisTransform":
        """R factor of a complex Gaussian matrix, sign-fixed to a positive diagonal.

        The Q factor is dropped: a unitary change of basis leaves the metric
        unchanged, so only R moves the starting point.
        """
        z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        _, r = np.linalg.qr(z)
        phases = np.diag(r) / np.abs(np.diag(r))
        return cls.normalized(r / phases[:, None])

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def pointwise_projection(s: np.ndarray) -> np.ndarray:
    """P = S^*(S S^*)^{-1} S for one (r, N) matrix or a stack (..., r, N).

    Computed as Q Q^* from a QR factorization of S^*, which stays accurate
    when rows of S have wildly different scales.
    """
    q = _row_space_basis(s)
    return q @ np.conj(np.swapaxes(q, -1, -2))


def _row_space_basis(s: np.ndarray) -> np.ndarray:
    """Orthonormal basis (..., N, r) of the row space of S, conjugated into columns."""
    s = np.asarray(s, dtype=complex)
    s_star = np.conj(np.swapaxes(s, -1, -2))
    if s.shape[-2] == 1:
        norm = np.linalg.norm(s_star[..., 0], axis=-1)
        bad = ~(norm > 0) | ~np.isfinite(norm)
        if np.any(bad):
            raise DegeneratePointError("evaluation matrix vanishes at a point", _first(bad))
        return s_star / norm[..., None, None]
    q, r = np.linalg.qr(s_star)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    col_norms = np.linalg.norm(s_star, axis=-2)
    bad = ~(diag > RANK_TOL * col_norms) | ~np.isfinite(diag)
    if np.any(bad):
        raise DegeneratePointError("evaluation matrix is rank deficient at a point", _first(bad.any(axis=-1) if bad.ndim > 1 else bad))
    return q


def _first(mask):
    mask = np.atleast_1d(mask)
    return int(np.argmax(mask.ravel()))


def metric_samples(basis: SectionBasis, transform, points, flip=None) -> np.ndarray:
    """H(x) = (S S^*)^{-1} in the chart frame, shape (M, r, r)."""
    s = evaluate_sections(basis, transform, np.atleast_2d(np.asarray(points, dtype=complex)), flip)
    gram = s @ np.conj(np.swapaxes(s, -1, -2))
    sign, _ = np.linalg.slogdet(gram)
    if np.any(sign == 0):
        raise DegeneratePointError("S S^* is singular at a sample point", _first(sign == 0))
    return np.linalg.inv(gram)


def gauge_normalized(h: np.ndarray, reference: int = 0) -> np.ndarray:
    """Divide metric samples by det(H(x_ref))^(1/r); removes the overall scale."""
    r = h.shape[-1]
    scale = np.real(np.linalg.det(h[reference])) ** (1.0 / r)
    return h / scale


def gram_matrix(
    basis: SectionBasis,
    transform,
    base: PolarizedBase | None = None,
    rule: QuadratureRule | None = None,
) -> np.ndarray:
    """G[j, k] = <s_j, s_k> = (1/V) int h(s_j, s_k) omega^n/n!."""
    base = base or basis.spec.base
    rule = rule or quadrature_nodes(base)
    a = transform_matrix(transform, len(basis))

    def integrand(nodes):
        q = _row_space_basis(evaluate_sections(basis, a, nodes))
        # P^T = conj(P) = conj(Q) Q^T
        return np.conj(q) @ np.swapaxes(q, -1, -2)

    g = integrate(base, rule, integrand)
    return (g + np.conj(g.T)) / 2


def balance_defect(g: np.ndarray, r: int, n: int) -> float:
    """Frobenius distance from G to (r/N) I."""
    return float(np.linalg.norm(g - (r / n) * np.eye(n)))


def _inverse_sqrt(g: np.ndarray, floor: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(g)
    if evals[0] < floor:
        raise DegenerationError(
            f"Gram eigenvalue {evals[0]:.3e} below degeneration floor {floor:.1e}", float(evals[0])
        )
    return (evecs / np.sqrt(evals)) @ np.conj(evecs.T)


def iteration_step(
    basis: SectionBasis,
    transform,
    base: PolarizedBase | None = None,
    rule: QuadratureRule | None = None,
    gram: np.ndarray | None = None,
    degeneration_floor: float | None = None,
) -> BasisTransform:
    """A <- G^{-1/2} A, rescaled to |det A| = 1.

    The new basis is orthonormal for the L2 product of the current metric;
    fixed points are exactly the bases with G proportional to the identity.
    """
    n = len(basis)
    a = transform_matrix(transform, n)
    if gram is None:
        gram = gram_matrix(basis, a, base, rule)
    floor = 1e-12 * n if degeneration_floor is None else degeneration_floor
    return BasisTransform.normalized(_inverse_sqrt(gram, floor) @ a)


class Diagnosis(str, enum.Enum):
    BALANCED = "Balanced"
    MAX_ITERATIONS = "MaxIterations"
    DEGENERATION = "Degeneration"


@dataclass
class BalanceOptions:
    tol: float = 1e-10
    max_iter: int = 500
    quad_order: int | None = None
    init: str = "identity"  # or "random"
    seed: int = 0
    initial_transform: np.ndarray | None = None
    degeneration_floor: float | None = None

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "quad_order": self.quad_order,
            "init": "custom" if self.initial_transform is not None else self.init,
            "seed": self.seed,
            "degeneration_floor": self.degeneration_floor,
        }


@dataclass
class BalanceResult:
    spec: BundleSpec
    options: BalanceOptions
    converged: bool
    diagnosis: Diagnosis
    iterations: int
    defect_history: list[float]
    final_transform: BasisTransform
    gram_final: np.ndarray
    min_eigenvalue_history: list[float] = field(default_factory=list)
    trace_history: list[float] = field(default_factory=list)
    quad_order: int | None = None

    def to_dict(self) -> dict:
        return {
            "spec": str(self.spec),
            "base": {
                "kind": self.spec.base.kind.value,
                "form_weights": [str(w) for w in self.spec.base.form_weights],
            },
            "options": self.options.to_dict(),
            "quad_order": self.quad_order,
            "converged": self.converged,
            "diagnosis": self.diagnosis.value,
            "iterations": self.iterations,
            "defect_history": list(self.defect_history),
            "gram_final": complex_matrix_to_json(self.gram_final),
            "transform": complex_matrix_to_json(self.final_transform.matrix),
        }


def complex_matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()}


def find_balanced(spec: BundleSpec, options: BalanceOptions | None = None, **kwargs) -> BalanceResult:
    """Iterate the balancing map until the Gram defect drops below ``tol``."""
    if options is None:
        options = BalanceOptions(**kwargs)
    elif kwargs:
        raise TypeError("pass either options or keyword overrides, not both")
    basis = h0_basis(spec)
    n, r = len(basis), spec.rank
    rule = quadrature_nodes(spec.base, options.quad_order)
    floor = 1e-12 * n if options.degeneration_floor is None else options.degeneration_floor

    if options.initial_transform is not None:
        transform = BasisTransform.normalized(options.initial_transform)
    elif options.init == "random":
        transform = BasisTransform.random(n, np.random.default_rng(options.seed))
    elif options.init == "identity":
        transform = BasisTransform.identity(n)
    else:
        raise InvalidArgumentError(f"unknown init {options.init!r}")

    defects, min_eigs, traces = [], [], []
    iterations = 0
    while True:
        g = gram_matrix(basis, transform, spec.base, rule)
        evals = np.linalg.eigvalsh(g)
        defects.append(balance_defect(g, r, n))
        min_eigs.append(float(evals[0]))
        traces.append(float(np.real(np.trace(g))))
        if defects[-1] < options.tol:
            diagnosis = Diagnosis.BALANCED
            break
        if evals[0] < floor:
            diagnosis = Diagnosis.DEGENERATION
            break
        if iterations >= options.max_iter:
            diagnosis = Diagnosis.MAX_ITERATIONS
            break
        transform = iteration_step(basis, transform, gram=g, degeneration_floor=floor)
        iterations += 1

    return BalanceResult(
        spec=spec,
        options=options,
        converged=diagnosis is Diagnosis.BALANCED,
        diagnosis=diagnosis,
        iterations=iterations,
        defect_history=defects,
        final_transform=transform,
        gram_final=g,
        min_eigenvalue_history=min_eigs,
        trace_history=traces,
        quad_order=rule.order,
    )


def concat_balanced(results: Sequence[BalanceResult]) -> BasisTransform:
    """Block-diagonal transform for the direct sum of already balanced summands.

    The sum's spec is ``direct_sum(*(res.spec for res in results))``.  When the
    rank/section ratios agree, the zero-padded concatenation of balanced bases
    is balanced for the sum without further iteration.
    """
    if not results:
        raise InvalidArgumentError("need at least one balanced summand")
    for res in results:
        if not res.converged:
            raise InvalidArgumentError(f"summand {res.spec} is not balanced ({res.diagnosis.value})")
    if len(results) == 1:
        return results[0].final_transform
    spec = direct_sum(*(res.spec for res in results))
    groups, start = [], 0
    for res in results:
        groups.append(list(range(start, start + res.spec.rank)))
        start += res.spec.rank
    crit = ratio_criterion(spec, groups)
    if not crit.holds:
        shown = ", ".join(str(q) for q in crit.ratios)
        raise InvalidArgumentError(
            f"rank/section ratios differ ({shown}); the direct sum admits no balanced metric"
        )
    n = spec.n_sections
    a = np.zeros((n, n), dtype=complex)
    offset = 0
    for res in results:
        m = res.final_transform.matrix
        a[offset : offset + len(m), offset : offset + len(m)] = m
        offset += len(m)
    return BasisTransform.normalized(a)


def balanced_ratio(spec: BundleSpec) -> Fraction:
    return Fraction(spec.rank, spec.n_sections)
