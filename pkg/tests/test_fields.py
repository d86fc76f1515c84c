import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from oracles import SYMS, X, XI, Y, Z, random_events, sym_field, sym_value
from photonlike import fields
from photonlike.errors import ConfigurationError, NumericalDomainError
from photonlike.fields import (Event, GridSpec, QuadratureSpec, ScalarField, VectorField,
                               fd_partial, integrate3, partial)

x, y, z, xi = fields.coordinates()
P0 = Event(1.0, 0.0, 0.0, 0.0)


def test_fd_partial_exact_for_quadratics():
    assert fd_partial(x * x, fields.X, P0, 1e-3) == pytest.approx(2.0, abs=1e-6)


def test_fd_partial_of_constant_vanishes():
    five = ScalarField.constant(5.0)
    for axis in range(4):
        assert fd_partial(five, axis, Event(0.3, -2, 1, 4), 1e-3) == 0.0


def test_fd_partial_trig_within_step_squared():
    f = ScalarField(lambda x, y, z, xi: np.sin(x) * np.cos(y))
    h = 1e-3
    assert abs(fd_partial(f, fields.Y, Event(0, 0, 0, 0), h)) <= h * h


def test_partial_analytic_is_exact():
    assert partial(z ** 3, fields.Z, Event(0, 0, 2.0, 0)) == 12.0


def test_partial_without_gradient_uses_fd():
    f = ScalarField(lambda x, y, z, xi: z ** 3, fd_step=1e-3)
    assert not f.is_analytic
    assert partial(f, fields.Z, Event(0, 0, 2.0, 0)) == pytest.approx(12.0, abs=4e-6)


def test_partial_of_independent_variable():
    assert partial(xi, fields.X, Event(1, 2, 3, 4)) == 0.0


def test_fd_partial_rejects_bad_step():
    with pytest.raises(ConfigurationError):
        fd_partial(x, 0, P0, 0.0)


def test_fd_partial_flags_nonfinite_stencil():
    def root(x, y, z, xi):
        with np.errstate(invalid="ignore"):
            return np.sqrt(np.asarray(x, dtype=float))

    with pytest.raises(NumericalDomainError):
        fd_partial(ScalarField(root), 0, Event(5e-4, 0, 0, 0), 1e-3)


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_composed_derivatives_match_sympy(c):
    expr = (c[0] * SYMS[0] * SYMS[1] + sp.sin(c[1] * SYMS[2] + c[2] * SYMS[3])
            * sp.exp(c[3] * SYMS[0]) + c[4] * sp.cos(SYMS[1]) ** 2 + c[5] * SYMS[3] ** 3)
    f = (c[0] * x * y + fields.sin(z * c[1] + xi * c[2]) * fields.exp(x * c[3])
         + fields.cos(y) ** 2 * c[4] + xi ** 3 * c[5])
    p = random_events(np.random.default_rng(1), 7)
    assert np.allclose(f(p), sym_value(expr, p), atol=1e-12)
    for a in range(4):
        assert np.allclose(f.derivative(a)(p), sym_value(sp.diff(expr, SYMS[a]), p), atol=1e-12)
    d2 = f.derivative(0).derivative(3)
    assert np.allclose(d2(p), sym_value(sp.diff(expr, SYMS[0], SYMS[3]), p), atol=1e-11)


def test_quotient_derivative_matches_sympy():
    f = (x * x + 1.0) / (y * y + 2.0)
    expr = (X ** 2 + 1) / (Y ** 2 + 2)
    p = random_events(np.random.default_rng(2), 5)
    assert np.allclose(f.derivative(1)(p), sym_value(sp.diff(expr, Y), p))


def test_support_union_and_intersection():
    box_a = ((0, 1), (0, 1), (0, 1))
    box_b = ((0.5, 2), (-1, 0.5), (0, 3))
    a = ScalarField(lambda *c: 0.0, support=lambda t: box_a)
    b = ScalarField(lambda *c: 0.0, support=lambda t: box_b)
    assert (a + b).support(0.0) == ((0, 2), (-1, 1), (0, 3))
    assert (a * b).support(0.0) == ((0.5, 1), (0, 0.5), (0, 1))
    assert (a * x).support(0.0) == box_a
    assert (a + x).support is None


def test_event_broadcasting():
    p = Event(np.arange(3.0), 0.0, 1.0, np.zeros((2, 1)))
    assert p.shape == (2, 3)
    assert (x * y + z)(p).shape == (2, 3)


def test_vector_field_cross_and_dot():
    E = VectorField([x, y, ScalarField.constant(0.0)])
    B = VectorField([ScalarField.constant(0.0), ScalarField.constant(0.0), ScalarField.constant(1.0)])
    p = Event(2.0, 3.0, 0.0, 0.0)
    assert np.allclose(E.cross(B)(p), [3.0, -2.0, 0.0])
    assert E.dot(E)(p) == 13.0


def test_rot_and_div_against_sympy(rng):
    exprs = [Y * Z ** 2, sp.sin(X) * XI, X * Y * Z]
    V = VectorField([sym_field(e) for e in exprs])
    p = random_events(rng, 6)
    rot_expr = [sp.diff(exprs[2], Y) - sp.diff(exprs[1], Z), sp.diff(exprs[0], Z) - sp.diff(exprs[2], X),
                sp.diff(exprs[1], X) - sp.diff(exprs[0], Y)]
    assert np.allclose(fields.rot(V, p), np.stack([sym_value(e, p) for e in rot_expr]))
    div_expr = sum(sp.diff(e, s) for e, s in zip(exprs, (X, Y, Z)))
    assert np.allclose(fields.div(V, p), sym_value(div_expr, p))


def test_integrate_constant_exact():
    q = QuadratureSpec(box=((0, 1), (0, 1), (0, 1)), resolution=11)
    assert integrate3(ScalarField.constant(1.0), q) == pytest.approx(1.0, abs=1e-12)


def test_integrate_separable_polynomial():
    q = QuadratureSpec(box=((0, 1), (0, 1), (0, 1)), resolution=11)
    assert integrate3(x * y * z, q) == pytest.approx(0.125, abs=1e-10)


def test_integrate_gaussian():
    q = QuadratureSpec(box=((-6, 6),) * 3, resolution=61)
    g = fields.exp(-(x * x + y * y + z * z))
    assert integrate3(g, q) == pytest.approx(math.pi ** 1.5, abs=1e-6)


def test_integrate_uses_declared_support():
    box = ((0, 2), (0, 1), (0, 1))
    f = ScalarField(lambda x, y, z, xi: 1.0 + 0.0 * x, support=lambda t: box)
    q = QuadratureSpec(compact_support=True, resolution=21)
    assert integrate3(f, q) == pytest.approx(2.0, rel=1e-12)


def test_quadrature_spec_validation():
    with pytest.raises(ConfigurationError):
        QuadratureSpec(resolution=10)
    with pytest.raises(ConfigurationError):
        QuadratureSpec(rule="gauss")
    with pytest.raises(ConfigurationError):
        QuadratureSpec(box=((1, 0), (0, 1), (0, 1)))
    with pytest.raises(ConfigurationError):
        integrate3(x, QuadratureSpec())


def test_grid_spec():
    g = GridSpec.from_bounds([(0, 1), (0, 2), (-1, 1), (0, 1)], [3, 4, 5, 2])
    assert g.shape == (3, 4, 5, 2) and g.size == 120
    assert g.mesh().x.shape == (3, 4, 5, 2)
    with pytest.raises(ConfigurationError):
        GridSpec.from_bounds([(0, 1)] * 4, [1, 2, 2, 2])
    with pytest.raises(ConfigurationError):
        GridSpec.from_bounds([(1, 1)] * 4, [2, 2, 2, 2])
