"""Polarized base manifolds (CP1 and CP1 x CP1) and normalized integration.

Every CP1 factor is integrated in the affine chart z = z1/z0.  Writing
r = |z| and u = r^2 / (1 + r^2), the Fubini-Study area form becomes

    dA / (1 + r^2)^2 = (1/2) du dtheta,

so integrands of the form r^(2j) (1 + r^2)^(-k) turn into the polynomial
u^j (1 - u)^(k - j) on [0, 1].  Gauss-Legendre in u, tensored with uniform
angular nodes, integrates these exactly while 2 * order > k and the angular
frequency stays below order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericalDomainError

DEFAULT_ORDER = {"CP1": 64, "CP1xCP1": 16}
CHUNK_SIZE = 1 << 16


class BaseKind(str, enum.Enum):
    CP1 = "CP1"
    CP1xCP1 = "CP1xCP1"

    @property
    def complex_dim(self) -> int:
        return 1 if self is BaseKind.CP1 else 2


@dataclass(frozen=True)
class PolarizedBase:
    """(M, omega) with omega a weighted sum of Fubini-Study forms per factor."""

    kind: BaseKind
    form_weights: tuple[Fraction, ...]

    @property
    def complex_dim(self) -> int:
        return self.kind.complex_dim

    @property
    def volume(self) -> float:
        # omega^n / n! of the product form is the product of the factor areas
        return math.prod(float(a) for a in self.form_weights) * math.pi ** self.complex_dim

    def default_order(self) -> int:
        return DEFAULT_ORDER[self.kind.value]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray  # (M, n) complex chart coordinates
    weights: np.ndarray  # (M,) positive, summing to the volume
    order: int

    def __len__(self) -> int:
        return len(self.weights)


def _as_weight(value) -> Fraction:
    try:
        w = Fraction(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"form weight {value!r} is not a rational number") from exc
    if w <= 0:
        raise InvalidArgumentError(f"form weight must be positive, got {w}")
    return w


def make_base(kind, form_weights=None) -> PolarizedBase:
    """Build CP1 (one weight) or CP1xCP1 (two weights); weights default to 1."""
    try:
        kind = BaseKind(kind) if not isinstance(kind, BaseKind) else kind
    except ValueError:
        aliases = {"cp1": BaseKind.CP1, "cp1xcp1": BaseKind.CP1xCP1}
        if str(kind).lower() not in aliases:
            raise InvalidArgumentError(f"unknown base kind {kind!r}") from None
        kind = aliases[str(kind).lower()]
    n = kind.complex_dim
    if form_weights is None:
        form_weights = (1,) * n
    elif not isinstance(form_weights, (tuple, list)):
        form_weights = (form_weights,)
    if len(form_weights) != n:
        raise InvalidArgumentError(f"{kind.value} takes {n} form weight(s), got {len(form_weights)}")
    return PolarizedBase(kind, tuple(_as_weight(a) for a in form_weights))


def _factor_rule(order: int, weight: Fraction) -> tuple[np.ndarray, np.ndarray]:
    x, wx = np.polynomial.legendre.leggauss(order)
    u = (1.0 + x) / 2.0
    one_minus_u = (1.0 - x) / 2.0
    wu = wx / 2.0
    radius = np.sqrt(u / one_minus_u)
    theta = 2.0 * np.pi * np.arange(order) / order
    z = (radius[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w = (float(weight) * 0.5 * wu[:, None] * np.full(order, 2.0 * np.pi / order)[None, :]).ravel()
    return z, w


def quadrature_nodes(base: PolarizedBase, order: int | None = None) -> QuadratureRule:
    """Tensor Gauss-Legendre (radial, in u) x uniform (angular) rule.

    Each CP1 factor gets order radial x order angular nodes; the product base
    uses the tensor product of the two factor rules (order**4 nodes in total).
    """
    if order is None:
        order = base.default_order()
    if int(order) != order or order < 4:
        raise InvalidArgumentError(f"quadrature order must be an integer >= 4, got {order}")
    order = int(order)
    factors = [_factor_rule(order, a) for a in base.form_weights]
    if len(factors) == 1:
        z, w = factors[0]
        return QuadratureRule(z[:, None], w, order)
    (z1, w1), (z2, w2) = factors
    nodes = np.stack(
        [np.repeat(z1, len(z2)), np.tile(z2, len(z1))], axis=1
    )
    weights = np.outer(w1, w2).ravel()
    return QuadratureRule(nodes, weights, order)


def integrate(
    base: PolarizedBase,
    rule: QuadratureRule,
    f: Callable[[np.ndarray], np.ndarray],
    chunk_size: int = CHUNK_SIZE,
):
    """Return (1/V) * sum_i w_i f(x_i).

    ``f`` is vectorized: it receives an (m, n) block of chart points and
    returns an array whose leading axis has length m.  Blocks are reduced in
    a fixed order, so results are reproducible at fixed order.
    """
    total = None
    for start in range(0, len(rule), chunk_size):
        stop = min(start + chunk_size, len(rule))
        values = np.asarray(f(rule.nodes[start:stop]))
        if values.shape[:1] != (stop - start,):
            values = np.broadcast_to(values, (stop - start,) + values.shape)
        finite = np.isfinite(values).reshape(stop - start, -1).all(axis=1)
        if not finite.all():
            bad = start + int(np.argmin(finite))
            raise NumericalDomainError(
                f"integrand is not finite at node {bad} (chart point {rule.nodes[bad].tolist()})"
            )
        partial = np.tensordot(rule.weights[start:stop], values, axes=(0, 0))
        total = partial if total is None else total + partial
    result = total / base.volume
    return result.item() if np.ndim(result) == 0 else result


def monomial_moment_oracle(j: int, k: int) -> Fraction:
    """Exact (1/pi) * int_C |z|^(2j) (1+|z|^2)^(-k-2) dA = j!(k-j)!/(k+1)!."""
    if not (0 <= j <= k):
        raise InvalidArgumentError(f"need 0 <= j <= k, got j={j}, k={k}")
    return Fraction(math.factorial(j) * math.factorial(k - j), math.factorial(k + 1))


def product_moment_oracle(pairs: Sequence[tuple[int, int]]) -> Fraction:
    """Normalized moment on a product of CP1 factors: product of factor moments."""
    return math.prod((monomial_moment_oracle(j, k) for j, k in pairs), start=Fraction(1))


def sample_points(spec_or_base, count: int, rng: np.random.Generator, max_modulus: float = 2.0) -> np.ndarray:
    """Chart points with |z_f| <= max_modulus, uniform in angle and in |z|^2."""
    base = getattr(spec_or_base, "base", spec_or_base)
    n = base.complex_dim
    radius = np.sqrt(rng.uniform(0, max_modulus**2, size=(count, n)))
    theta = rng.uniform(0, 2 * math.pi, size=(count, n))
    return radius * np.exp(1j * theta)
