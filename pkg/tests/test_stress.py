import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from oracles import X, XI, Y, Z, random_events, random_poly, sym_field
from photonlike import phlo
from photonlike.errors import DomainError
from photonlike.fields import Event, VectorField
from photonlike.geometry import KForm
from photonlike.stress import (affine_duality, duality_rotation, energy_divergence, energy_tensor,
                               form_invariants, invariant_identity_residual, invariants,
                               lorentz_boost, maxwell_stress, parallel_frame_velocity,
                               rainich_residual, stress_divergence_identity, stress_eigen)

vec3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def test_maxwell_stress_examples():
    M = maxwell_stress([1, 0, 0], [0, 1, 0])
    assert np.allclose(np.diag(M), [0, 0, -1])
    assert np.allclose(M - np.diag(np.diag(M)), 0)
    assert np.all(maxwell_stress([0, 0, 0], [0, 0, 0]) == 0)


@given(vec3, vec3, st.floats(-6.3, 6.3))
def test_stress_invariant_under_duality_rotation(E, B, alpha):
    E2, B2 = duality_rotation(E, B, alpha)
    assert np.allclose(maxwell_stress(E2, B2), maxwell_stress(E, B), atol=1e-12)


def test_duality_rotation_examples():
    E, B = np.array([1.0, 2, 3]), np.array([-1.0, 0.5, 2])
    assert np.allclose(duality_rotation(E, B, 0.0), (E, B))
    E2, B2 = duality_rotation(E, B, np.pi / 2)
    assert np.allclose(E2, -B) and np.allclose(B2, E)
    E3, B3 = affine_duality(E, B, 3, 4)
    assert np.allclose(maxwell_stress(E3, B3), 25 * maxwell_stress(E, B))


def test_stress_eigen_examples():
    ev = stress_eigen([1, 0, 0], [0, 1, 0])
    assert np.allclose(ev.values, [-1, 0, 0])
    assert abs(abs(ev.vectors[:, 0] @ [0, 0, 1]) - 1) < 1e-14
    ev = stress_eigen([2, 0, 0], [0, 1, 0])
    assert ev.values[0] == pytest.approx(-2.5)
    assert sorted(ev.values[1:]) == pytest.approx([-1.5, 1.5])
    assert np.allclose(np.sort(ev.values), np.linalg.eigvalsh(maxwell_stress([2, 0, 0], [0, 1, 0])))


def test_null_field_has_E_and_B_as_eigenvectors():
    E, B = np.array([0.0, 2.0, 0.0]), np.array([0.0, 0.0, 2.0])
    M = maxwell_stress(E, B)
    for v in (E, B):
        Mv = M @ v
        assert np.linalg.norm(np.cross(Mv, v)) < 1e-12


def test_stress_eigen_matches_generic_solver(rng):
    for _ in range(200):
        E, B = rng.normal(size=3), rng.normal(size=3)
        ev = stress_eigen(E, B)
        M = maxwell_stress(E, B)
        assert np.allclose(np.sort(ev.values), np.linalg.eigvalsh(M), atol=1e-10)
        for k in range(3):
            assert np.linalg.norm(M @ ev.vectors[:, k] - ev.values[k] * ev.vectors[:, k]) < 1e-10


def test_stress_eigen_degenerate_falls_back():
    ev = stress_eigen([1, 0, 0], [2, 0, 0])
    assert ev.degenerate
    assert np.allclose(np.sort(ev.values), np.linalg.eigvalsh(maxwell_stress([1, 0, 0], [2, 0, 0])))


def test_invariants_examples(rng):
    assert np.allclose(invariants([1, 0, 0], [0, 1, 0]), (0, 0))
    assert tuple(invariants([0, 0, 2], [0, 0, 1])) == (-3.0, 4.0)
    E, B = rng.normal(size=(2, 3, 1000))
    assert np.max(np.abs(invariant_identity_residual(E, B))) < 1e-12


def coulomb_field():
    r3 = (X ** 2 + Y ** 2 + Z ** 2) ** sp.Rational(3, 2)
    return VectorField([sym_field(X / r3), sym_field(Y / r3), sym_field(Z / r3)])


def test_divergence_identity_static_coulomb():
    E = coulomb_field()
    B = VectorField([0.0, 0.0, 0.0])
    p = Event(np.array([1.0, -0.5, 2.0]), np.array([0.7, 1.2, 0.1]), np.array([0.3, -0.9, 1.5]), 0.0)
    chk = stress_divergence_identity(E, B, p, h=1e-4)
    assert np.max(np.abs(chk.rhs)) < 1e-12
    assert np.max(np.abs(chk.lhs)) < 1e-6


def test_divergence_identity_constant_fields():
    E, B = VectorField([1.0, 2.0, 3.0]), VectorField([-1.0, 0.0, 0.5])
    chk = stress_divergence_identity(E, B, Event(0.1, 0.2, 0.3, 0.4), h=1e-3)
    assert np.max(np.abs(chk.lhs)) < 1e-12 and np.max(np.abs(chk.rhs)) == 0.0


def polynomial_battery(rng, n=10):
    """Unit-scale quadratic E, B: coefficients in [-1, 1], evaluated in [-1, 1]^4."""
    for _ in range(n):
        E = VectorField([sym_field(random_poly(rng, 2, 4, unit=True)) for _ in range(3)])
        B = VectorField([sym_field(random_poly(rng, 2, 4, unit=True)) for _ in range(3)])
        yield E, B


def test_divergence_identity_polynomial_battery(rng):
    worst = 0.0
    for E, B in polynomial_battery(rng):
        chk = stress_divergence_identity(E, B, random_events(rng, 8), h=1e-3)
        worst = max(worst, float(np.max(np.abs(chk.residual))))
    assert worst < 1e-5


def test_divergence_identity_converges_at_second_order(rng):
    E = VectorField([sym_field(random_poly(rng, 2, 4)) for _ in range(3)])
    B = VectorField([sym_field(random_poly(rng, 2, 4)) for _ in range(3)])
    p = random_events(rng, 8)
    r1 = np.max(np.abs(stress_divergence_identity(E, B, p, h=1e-2).residual))
    r2 = np.max(np.abs(stress_divergence_identity(E, B, p, h=1e-3).residual))
    assert r1 / r2 == pytest.approx(100.0, rel=1e-3)


def test_lorentz_boost_examples():
    E, B = np.array([1.0, 0, 0]), np.array([0, 2.0, 0])
    assert np.allclose(lorentz_boost(E, B, [0, 0, 0]), (E, B))
    E2, _ = lorentz_boost(E, B, [0, 0, 0.5])
    assert np.allclose(E2, 0)
    with pytest.raises(DomainError):
        lorentz_boost(E, B, [1.0, 0, 0])


def test_parallel_frame():
    E, B = np.array([1.0, 0.3, 0.2]), np.array([0.1, 2.0, 0.5])
    v = parallel_frame_velocity(E, B)
    E2, B2 = lorentz_boost(E, B, v)
    assert np.linalg.norm(np.cross(E2, B2)) < 1e-12
    # the first-order speed |E x B| / (E^2 + B^2) leaves a residual cross product
    S = np.cross(E, B)
    E3, B3 = lorentz_boost(E, B, S / (E @ E + B @ B))
    assert np.linalg.norm(np.cross(E3, B3)) > 1e-3


def test_boost_preserves_invariants(rng):
    for _ in range(300):
        E, B = rng.normal(size=(2, 3))
        d = rng.normal(size=3)
        v = d / np.linalg.norm(d) * rng.uniform(0, 0.99)
        E2, B2 = lorentz_boost(E, B, v)
        scale = 1 + (E @ E + B @ B) / (1 - v @ v)
        assert np.allclose(invariants(E2, B2), invariants(E, B), atol=1e-10 * scale)


def test_energy_tensor_zero_and_rainich(rng):
    assert np.all(energy_tensor(np.zeros((4, 4))) == 0)
    for _ in range(50):
        A = rng.normal(size=(4, 4))
        F = A - A.T
        assert np.max(np.abs(rainich_residual(F))) < 1e-12


def test_rainich_on_dx_dxi():
    F = KForm.basis(0, 3)
    p = Event(0, 0, 0, 0)
    assert np.max(np.abs(rainich_residual(F, p))) == 0.0
    I1, I2 = form_invariants(F, p)
    assert I1 == -1.0 and I2 == 0.0


def test_energy_tensor_of_solution_is_null_and_gives_energy_density(rng):
    sol = phlo.build_solution(phlo.SolutionSpec(eps=-1, kappa=1, l0=1.3, gamma=1.4, r0=0.9))
    pts = phlo.support_points(sol, 20, rng, xi=0.3)
    T = energy_tensor(sol.F, pts)
    assert np.allclose(T[3, 3], sol.u(pts) ** 2 + sol.p(pts) ** 2, atol=1e-14)
    assert np.max(np.abs(rainich_residual(sol.F, pts))) < 1e-14
    sq = np.einsum("ms...,sn...->mn...", T, T)
    assert np.max(np.abs(sq)) < 1e-14


def test_energy_divergence_on_solution_and_random_forms(rng):
    sol = phlo.build_solution(phlo.SolutionSpec(eps=1, kappa=-1, l0=0.8, r0=1.0))
    pts = phlo.support_points(sol, 10, rng)
    chk = energy_divergence(sol.F, pts, h=1e-4)
    assert np.max(np.abs(chk.rhs)) < 1e-12 and np.max(np.abs(chk.lhs)) < 1e-6
    F = KForm(2, {(i, j): sym_field(random_poly(rng, 2, 3, unit=True))
                  for i in range(4) for j in range(i + 1, 4)})
    pts = random_events(rng, 6)
    chk = energy_divergence(F, pts, h=1e-4)
    assert np.max(np.abs(chk.residual)) < 1e-6
    coarse = energy_divergence(F, pts, h=1e-3)
    assert np.max(np.abs(coarse.residual)) / np.max(np.abs(chk.residual)) == pytest.approx(100, rel=1e-2)
    closed = KForm(2, {(0, 1): 1.0, (2, 3): -2.0})
    assert np.max(np.abs(energy_divergence(closed, Event(0, 0, 0, 0), h=1e-3).lhs)) == 0.0
