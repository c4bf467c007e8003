"""Kodaira maps into G(r, N), Pluecker coordinates and pulled-back forms.

The Kaehler potential of the Kodaira map composed with the Pluecker
embedding is log sum_J |det S(x)[:, J]|^2, which by Cauchy-Binet equals
log det S(x) S(x)^*.  Its (i/2) d dbar is the pullback of the Grassmannian
form; coefficients g_{j kbar} = d_j dbar_k phi are obtained here by
centered finite differences.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bundle import BundleSpec, SectionBasis, evaluate_sections, h0_basis, transform_matrix
from .errors import InvalidArgumentError, NumericalDomainError
from .geometry import sample_points  # noqa: F401  (re-exported)
from .gieseker import colex_subsets
from .metric import _row_space_basis, gauge_normalized, metric_samples, pointwise_projection

CAUCHY_BINET_TOL = 1e-8


class StepSizeWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    representative: np.ndarray  # (r, N), full rank

    def projection(self) -> np.ndarray:
        return pointwise_projection(self.representative)

    def same_point(self, other: "GrassmannPoint", tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.projection() - other.projection()) < tol)


@dataclass(frozen=True, eq=False)
class PluckerVector:
    coordinates: np.ndarray
    subsets: tuple[tuple[int, ...], ...]


def kodaira_point(basis: SectionBasis, transform, x) -> GrassmannPoint:
    s = evaluate_sections(basis, transform, np.asarray(x, dtype=complex))
    _row_space_basis(s)  # raises DegeneratePointError on rank deficiency
    return GrassmannPoint(s)


def plucker_coordinates(s: np.ndarray) -> np.ndarray:
    """All r x r minors of S (..., r, N) in colex order of column subsets."""
    s = np.asarray(s, dtype=complex)
    r, n = s.shape[-2:]
    subsets = colex_subsets(n, r)
    idx = np.array(subsets, dtype=np.intp)  # (C, r)
    blocks = s[..., :, idx]  # (..., r, C, r)
    blocks = np.moveaxis(blocks, -2, -3)  # (..., C, r, r)
    return np.linalg.det(blocks)


def plucker(point: GrassmannPoint) -> PluckerVector:
    r, n = point.representative.shape
    return PluckerVector(plucker_coordinates(point.representative), tuple(colex_subsets(n, r)))


def _potentials(basis: SectionBasis, a: np.ndarray, points: np.ndarray):
    s = evaluate_sections(basis, a, points)
    minors = plucker_coordinates(s)
    via_plucker = np.sum(np.abs(minors) ** 2, axis=-1)
    _, via_det = np.linalg.slogdet(s @ np.conj(np.swapaxes(s, -1, -2)))
    return via_plucker, via_det


def cauchy_binet_gap(basis: SectionBasis, transform, points) -> np.ndarray:
    """|log sum |minors|^2 - log det S S^*| at each point."""
    a = transform_matrix(transform, len(basis))
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    via_plucker, via_det = _potentials(basis, a, pts)
    return np.abs(np.log(via_plucker) - via_det)


def pullback_potential(basis: SectionBasis, transform, x):
    """log sum_J |plucker_J(S(x))|^2, cross-checked against log det S S^*."""
    a = transform_matrix(transform, len(basis))
    pts = np.asarray(x, dtype=complex)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    via_plucker, via_det = _potentials(basis, a, pts)
    phi = np.log(via_plucker)
    gap = np.abs(phi - via_det)
    if not np.all(np.isfinite(phi)) or np.any(gap > CAUCHY_BINET_TOL * np.maximum(1.0, np.abs(phi))):
        raise NumericalDomainError(f"Cauchy-Binet cross-check failed (gap {np.max(gap):.3e})")
    return phi[0] if single else phi


def _real_hessian(basis, a, x: np.ndarray, h: float) -> np.ndarray:
    """Real Hessian of the potential in (Re z_1, Im z_1, ..., Re z_n, Im z_n)."""
    n = len(x)
    dim = 2 * n
    dirs = np.zeros((dim, n), dtype=complex)
    for f in range(n):
        dirs[2 * f, f] = 1.0
        dirs[2 * f + 1, f] = 1j
    offsets = [np.zeros(n, dtype=complex)]
    for p in range(dim):
        offsets += [h * dirs[p], -h * dirs[p]]
    pairs = [(p, q) for p in range(dim) for q in range(p + 1, dim)]
    for p, q in pairs:
        for sp, sq in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            offsets.append(h * (sp * dirs[p] + sq * dirs[q]))
    pts = x[None, :] + np.array(offsets)
    via_plucker, _ = _potentials(basis, a, pts)
    # differences of log taken as logs of ratios to keep absolute rounding ~ eps
    f = np.log(via_plucker / via_plucker[0])
    if not np.all(np.isfinite(f)):
        raise NumericalDomainError(f"non-finite potential near {x.tolist()}")
    hess = np.zeros((dim, dim))
    for p in range(dim):
        hess[p, p] = (f[1 + 2 * p] - 2 * f[0] + f[2 + 2 * p]) / h**2
    base = 1 + 2 * dim
    for i, (p, q) in enumerate(pairs):
        fpp, fpm, fmp, fmm = f[base + 4 * i : base + 4 * i + 4]
        hess[p, q] = hess[q, p] = (fpp - fpm - fmp + fmm) / (4 * h**2)
    return hess


def _complex_form(hess: np.ndarray) -> np.ndarray:
    n = hess.shape[0] // 2
    g = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            xx = hess[2 * j, 2 * k]
            yy = hess[2 * j + 1, 2 * k + 1]
            xy = hess[2 * j, 2 * k + 1]
            yx = hess[2 * j + 1, 2 * k]
            g[j, k] = 0.25 * (xx + yy + 1j * (xy - yx))
    return g


def pullback_form(
    basis: SectionBasis,
    transform,
    x,
    h: float = 1e-4,
    check_step: bool = True,
    rtol: float = 1e-6,
) -> np.ndarray:
    """Coefficients d_j dbar_k phi of the pulled-back form at x (n x n Hermitian).

    With ``check_step`` the form is recomputed at step 2h; a discrepancy
    above 10 * rtol (relative) raises a StepSizeWarning.
    """
    if h <= 0:
        raise InvalidArgumentError("step must be positive")
    a = transform_matrix(transform, len(basis))
    x = np.asarray(x, dtype=complex).ravel()
    g = _complex_form(_real_hessian(basis, a, x, h))
    if not np.all(np.isfinite(g)):
        raise NumericalDomainError(f"non-finite form coefficients at {x.tolist()}")
    if check_step:
        g2 = _complex_form(_real_hessian(basis, a, x, 2 * h))
        scale = max(np.linalg.norm(g), 1e-300)
        if np.linalg.norm(g - g2) / scale > 10 * rtol:
            warnings.warn(
                f"finite-difference step {h} looks unreliable at {x.tolist()}", StepSizeWarning, stacklevel=2
            )
    return (g + np.conj(g.T)) / 2


def fubini_study_form(x, degrees: Sequence[float]) -> np.ndarray:
    """Coefficients of sum_f degrees[f] * omega_FS on factor f: diag(d_f / (1+|z_f|^2)^2)."""
    x = np.asarray(x, dtype=complex).ravel()
    return np.diag([d / (1 + abs(z) ** 2) ** 2 for d, z in zip(degrees, x)]).astype(complex)


def form_report(spec: BundleSpec, transform, points, h: float = 1e-4) -> dict:
    """Compare the pulled-back form of a balanced basis with deg(E) * omega_FS.

    For a balanced basis of a split bundle the potential is
    sum_f deg_f(E) log(1 + |z_f|^2) up to a constant, so the expected
    coefficients are those of the Fubini-Study form weighted by the
    degree of det E on each factor.
    """
    basis = h0_basis(spec)
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    forms, expected, errors = [], [], []
    for x in pts:
        g = pullback_form(basis, transform, x, h)
        e = fubini_study_form(x, spec.det_twist)
        forms.append(g)
        expected.append(e)
        errors.append(float(np.max(np.abs(g - e)) / np.max(np.abs(e))) if np.any(e) else float(np.max(np.abs(g))))
    return {
        "spec": str(spec),
        "points": [[[float(z.real), float(z.imag)] for z in x] for x in pts],
        "form_coefficients": [_cjson(g) for g in forms],
        "expected": [_cjson(e) for e in expected],
        "max_rel_error": max(errors),
    }


def _cjson(m):
    return {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()}


def random_su2(rng: np.random.Generator) -> np.ndarray:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    alpha, beta = complex(q[0], q[1]), complex(q[2], q[3])
    return np.array([[alpha, -np.conj(beta)], [beta, np.conj(alpha)]])


def _degree_action(g: np.ndarray, k: int) -> np.ndarray:
    """M with (z^m o g) = sum_l M[m, l] z^l for homogeneous degree-k sections.

    z^m is Z0^(k-m) Z1^m, and g acts by Z -> g Z.
    """
    m_out = np.zeros((k + 1, k + 1), dtype=complex)
    p0 = np.array([g[0, 0], g[0, 1]])  # (g Z)_0 as a polynomial in Z1 (Z0 = 1)
    p1 = np.array([g[1, 0], g[1, 1]])
    for m in range(k + 1):
        poly = np.array([1.0 + 0j])
        for _ in range(k - m):
            poly = np.convolve(poly, p0)
        for _ in range(m):
            poly = np.convolve(poly, p1)
        m_out[m, : len(poly)] = poly
    return m_out


def _check_unitary(g: np.ndarray, tol: float = 1e-12):
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2) or np.linalg.norm(g @ np.conj(g.T) - np.eye(2)) > tol:
        raise InvalidArgumentError("group elements must be 2x2 unitary matrices")
    return g


def section_action(spec: BundleSpec, element) -> np.ndarray:
    """N x N matrix M of the induced action: the pullback of A . s0 is (A M) . s0.

    ``element`` is a 2x2 unitary (CP1) or a pair of them (one per CP1 factor).
    """
    n = spec.base.complex_dim
    if n == 1 and np.asarray(element).shape == (2, 2):
        element = (element,)
    gs = [_check_unitary(g) for g in element]
    if len(gs) != n:
        raise InvalidArgumentError(f"need {n} unitary factor(s), got {len(gs)}")
    blocks = []
    for twist in spec.twists:
        m = np.ones((1, 1), dtype=complex)
        for g, k in zip(gs, twist):
            m = np.kron(m, _degree_action(g, k))
        blocks.append(m)
    size = spec.n_sections
    out = np.zeros((size, size), dtype=complex)
    offset = 0
    for b in blocks:
        out[offset : offset + len(b), offset : offset + len(b)] = b
        offset += len(b)
    return out


def isometry_invariance_check(spec: BundleSpec, transform, elements, points) -> float:
    """Max relative discrepancy between the metric and its pullback by each element.

    Both sides are gauge-normalized at the first sample point.
    """
    basis = h0_basis(spec)
    a = transform_matrix(transform, len(basis))
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    h0 = gauge_normalized(metric_samples(basis, a, pts))
    worst = 0.0
    for g in elements:
        moved = a @ section_action(spec, g)
        h1 = gauge_normalized(metric_samples(basis, moved, pts))
        diff = np.linalg.norm(h1 - h0, axis=(-2, -1)) / np.linalg.norm(h0, axis=(-2, -1))
        worst = max(worst, float(np.max(diff)))
    return worst
