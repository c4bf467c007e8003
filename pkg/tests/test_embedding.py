import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from balancedbundles.bundle import h0_basis, parse_bundle
from balancedbundles.embedding import (
    GrassmannPoint,
    StepSizeWarning,
    cauchy_binet_gap,
    fubini_study_form,
    form_report,
    isometry_invariance_check,
    kodaira_point,
    plucker,
    plucker_coordinates,
    pullback_form,
    pullback_potential,
    random_su2,
    section_action,
)
from balancedbundles.errors import DegeneratePointError, InvalidArgumentError
from balancedbundles.geometry import sample_points
from balancedbundles.metric import BasisTransform, find_balanced

from oracles import exact_minor_sum, sqrt_binomial


def test_kodaira_point_examples():
    b = h0_basis(parse_bundle("O(1)"))
    p = kodaira_point(b, None, [0])
    np.testing.assert_array_equal(p.representative, [[1, 0]])
    b2 = h0_basis(parse_bundle("O(1)+O(1)"))
    np.testing.assert_array_equal(kodaira_point(b2, None, [0]).representative, [[1, 0, 0, 0], [0, 0, 1, 0]])
    # distinct points of CP1 go to distinct lines
    assert not kodaira_point(b, None, [0]).same_point(kodaira_point(b, None, [1]))
    np.testing.assert_allclose(kodaira_point(b, None, [1]).projection(), 0.5 * np.ones((2, 2)), atol=1e-15)


def test_kodaira_point_rejects_singular_transform():
    b = h0_basis(parse_bundle("O(1)"))
    with pytest.raises(InvalidArgumentError):
        kodaira_point(b, np.array([[0, 1], [0, 2]]), [0])


def test_rank_deficient_frame_is_degenerate():
    s = np.array([[1, 2, 3], [2, 4, 6]], dtype=complex)
    with pytest.raises(DegeneratePointError):
        GrassmannPoint(s).projection()


def test_plucker_examples():
    v = plucker(kodaira_point(h0_basis(parse_bundle("O(2)")), None, [2]))
    np.testing.assert_array_equal(v.coordinates, [1, 2, 4])
    block = np.array([[1, 0, 0, 0], [0, 0, 1, 0]], dtype=complex)
    coords = plucker_coordinates(block)
    assert coords[1] == 1 and np.count_nonzero(coords) == 1  # subset {1,3} in 1-based indexing


@given(seed=st.integers(0, 2**32 - 1))
def test_plucker_scales_by_det(seed):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    np.testing.assert_allclose(plucker_coordinates(g @ s), np.linalg.det(g) * plucker_coordinates(s), atol=1e-10)


def test_potential_balanced_ok():
    for k in range(1, 5):
        b = h0_basis(parse_bundle(f"O({k})"))
        a = np.diag(sqrt_binomial(k))
        z = np.array([[0.3 + 0.1j], [1.5], [-2j]])
        np.testing.assert_allclose(pullback_potential(b, a, z), k * np.log(1 + np.abs(z[:, 0]) ** 2), atol=1e-13)


def test_potential_o0_constant(rng):
    b = h0_basis(parse_bundle("O(0)"))
    pts = sample_points(b.spec, 10, rng)
    np.testing.assert_allclose(pullback_potential(b, None, pts), 0, atol=1e-15)


def test_potential_exact_integer_points():
    spec = parse_bundle("O(1)+O(2)")
    b = h0_basis(spec)
    a = np.array([[1, 1, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 2, 0], [0, 0, 0, 1, 0], [1, 0, 0, 0, 1]])
    for x in (1, 2, -3):
        s = (np.array([[1, x, 0, 0, 0], [0, 0, 1, x, x * x]]) @ a.T).tolist()
        assert pullback_potential(b, a, [x]) == pytest.approx(np.log(float(exact_minor_sum(s))), abs=1e-13)


@pytest.mark.parametrize("text", ["O(3)", "O(1)+O(2)", "O(1,0)+O(0,1)"])
def test_cauchy_binet(text, rng):
    spec = parse_bundle(text)
    b = h0_basis(spec)
    pts = sample_points(spec, 100, rng, 3.0)
    for a in (None, BasisTransform.random(len(b), rng)):
        assert np.max(cauchy_binet_gap(b, a, pts)) < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pullback_form_cp1(k, rng):
    b = h0_basis(parse_bundle(f"O({k})"))
    a = np.diag(sqrt_binomial(k))
    for x in np.concatenate([[[0]], sample_points(b.spec, 5, rng, 1.0)]):
        g = pullback_form(b, a, x)
        expected = k / (1 + abs(x[0]) ** 2) ** 2
        assert g.shape == (1, 1)
        assert abs(g[0, 0] - expected) / expected < 1e-6


def test_pullback_form_o0_vanishes():
    b = h0_basis(parse_bundle("O(0)"))
    assert np.max(np.abs(pullback_form(b, None, [0.3 + 0.2j], check_step=False))) < 1e-12


def test_pullback_form_product():
    b = h0_basis(parse_bundle("O(1,0)+O(0,1)"))
    g = pullback_form(b, None, [0, 0])
    np.testing.assert_allclose(g, np.eye(2), atol=1e-5)
    x = np.array([0.4 - 0.2j, -0.7j])
    np.testing.assert_allclose(pullback_form(b, None, x), fubini_study_form(x, (1, 1)), atol=1e-6)


def test_pullback_form_mixed_terms():
    # O(1,1) balanced: potential log(1+|z|^2) + log(1+|w|^2), no mixed term
    b = h0_basis(parse_bundle("O(1,1)"))
    x = np.array([0.3 + 0.5j, 0.2 - 0.1j])
    g = pullback_form(b, None, x)
    np.testing.assert_allclose(g, fubini_study_form(x, (1, 1)), atol=1e-6)


@pytest.mark.parametrize("text", ["O(2)", "O(1,0)+O(0,1)"])
def test_pullback_form_positive_definite(text, rng):
    res = find_balanced(parse_bundle(text))
    b = h0_basis(res.spec)
    for x in sample_points(res.spec, 5, rng, 1.5):
        g = pullback_form(b, res.final_transform, x)
        np.testing.assert_allclose(g, g.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(g)[0] > 0


def _random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@given(seed=st.integers(0, 2**32 - 1))
def test_pullback_form_unitary_gauge(seed):
    rng = np.random.default_rng(seed)
    b = h0_basis(parse_bundle("O(1)+O(1)"))
    a = BasisTransform.random(4, rng).matrix
    u = _random_unitary(4, rng)
    x = [0.3 - 0.2j]
    # the potential shifts by log|det u|^2 = 0; the form agrees up to finite-difference noise
    assert pullback_potential(b, u @ a, x) == pytest.approx(pullback_potential(b, a, x), abs=1e-12)
    g0 = pullback_form(b, a, x, check_step=False)
    np.testing.assert_allclose(pullback_form(b, u @ a, x, check_step=False), g0, rtol=1e-6)


def test_step_size_warning():
    b = h0_basis(parse_bundle("O(3)"))
    with pytest.warns(StepSizeWarning):
        pullback_form(b, None, [0.5], h=1e-7)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pullback_form(b, None, [0.5])


def test_form_report_keys(rng):
    res = find_balanced(parse_bundle("O(2)"))
    pts = sample_points(res.spec, 3, rng, 1.0)
    rep = form_report(res.spec, res.final_transform, pts)
    assert set(rep) == {"spec", "points", "form_coefficients", "expected", "max_rel_error"}
    assert rep["max_rel_error"] < 1e-6


def test_section_action_is_the_pullback():
    spec = parse_bundle("O(2)")
    g = random_su2(np.random.default_rng(3))
    m = section_action(spec, g)
    z = 0.4 + 0.9j
    z0, z1 = g @ np.array([1, z])
    # z^m o g = (gZ)_0^(2-m) (gZ)_1^m at Z = (1, z)
    np.testing.assert_allclose(m @ np.array([1, z, z * z]), [z0**2, z0 * z1, z1**2], atol=1e-14)


def test_invariance_identity_element(rng):
    spec = parse_bundle("O(2)")
    res = find_balanced(spec)
    assert isometry_invariance_check(spec, res.final_transform, [np.eye(2)], sample_points(spec, 10, rng)) < 1e-14


def test_invariance_rotation_and_swap(rng):
    spec = parse_bundle("O(2)")
    res = find_balanced(spec)
    theta = 0.83
    rotation = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    swap = np.array([[0, 1], [1, 0]])
    pts = sample_points(spec, 20, rng)
    assert isometry_invariance_check(spec, res.final_transform, [rotation], pts) < 1e-8
    assert isometry_invariance_check(spec, res.final_transform, [swap], pts) < 1e-8


def test_invariance_detects_unbalanced_basis(rng):
    spec = parse_bundle("O(2)")
    pts = sample_points(spec, 20, rng)
    assert isometry_invariance_check(spec, None, [random_su2(rng)], pts) > 1e-3


def test_invariance_product_base(rng):
    spec = parse_bundle("O(1,0)+O(0,1)")
    res = find_balanced(spec)
    els = [(random_su2(rng), random_su2(rng)) for _ in range(3)]
    assert isometry_invariance_check(spec, res.final_transform, els, sample_points(spec, 10, rng)) < 1e-8


def test_invariance_rejects_non_unitary():
    spec = parse_bundle("O(2)")
    with pytest.raises(InvalidArgumentError):
        isometry_invariance_check(spec, None, [np.array([[2, 0], [0, 0.5]])], [[0.1], [0.2]])
