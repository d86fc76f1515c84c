import numpy as np
import pytest
import sympy as sp

from oracles import SYMS, X, XI, Y, Z, generic_pair, random_events, sym_field, sym_value
from photonlike import fields, phlo
from photonlike.errors import ConfigurationError, SingularAmplitudeError, UndefinedScaleError
from photonlike.fields import ONE, ZERO, Event, VectorField
from photonlike.frobenius import (Distribution, PfaffSystem, PhLOFrame, build_projections,
                                  connection_curvature, coordinate_curvature, curvature_factor,
                                  curvature_energy_relations, curvature_form, dual_pairing,
                                  frame_curvatures, frame_transition, integrability_pfaff,
                                  integrability_vec, l0_squared, mixed_projection, phase_rate,
                                  projection_scale_squared, shuffling_symmetry_check, trace_scale,
                                  vertical_area)
from photonlike.geometry import KForm, ext_d, lie_bracket, wedge

DX = VectorField([ONE, ZERO, ZERO, ZERO])
DY = VectorField([ZERO, ONE, ZERO, ZERO])
DZ = VectorField([ZERO, ZERO, ONE, ZERO])
DXI = VectorField([ZERO, ZERO, ZERO, ONE])


def rate_expr(f, eps):
    return sp.diff(f, XI) - eps * sp.diff(f, Z)


@pytest.fixture(params=[1, -1], ids=["eps+", "eps-"])
def generic(request, rng):
    """A generic frame built from sympy expressions, with the expressions."""
    u, p = generic_pair(rng)
    eps = request.param
    return PhLOFrame(sym_field(u), sym_field(p), eps), u, p, eps


def vec_values(V, p):
    return np.stack([np.broadcast_to(np.asarray(V[i](p), dtype=float), p.shape) for i in range(4)])


# integrability

def test_coordinate_plane_is_integrable():
    assert integrability_vec(Distribution([DX, DY]), Event(0.1, 0.2, 0.3, 0.4)).holds


def test_A_bar_and_A_star_bar_always_integrable(generic, rng):
    fr, *_ = generic
    v = integrability_vec(Distribution([fr.A_bar, fr.A_star_bar]), random_events(rng, 30))
    assert v.holds and v.witness < 1e-10


def test_A_bar_with_zeta_bar_not_integrable_when_R_nonzero(generic, rng):
    fr, *_ = generic
    p = random_events(rng, 30)
    assert np.max(np.abs(fr.R(p))) > 1e-3
    assert not integrability_vec(Distribution([fr.A_bar, fr.zeta_bar]), p).holds


def test_pfaff_A_A_star_integrable(generic, rng):
    fr, *_ = generic
    v = integrability_pfaff(PfaffSystem([fr.A, fr.A_star]), random_events(rng, 30))
    assert v.holds


def test_pfaff_A_zeta_gives_eps_R_volume(generic, rng):
    fr, u, p_expr, eps = generic
    pts = random_events(rng, 30)
    top = wedge(wedge(ext_d(fr.A), fr.A), fr.zeta)
    want = eps * sym_value(u * rate_expr(p_expr, eps) - p_expr * rate_expr(u, eps), pts)
    assert np.allclose(top[0, 1, 2, 3](pts), want, atol=1e-12)
    assert not integrability_pfaff(PfaffSystem([fr.A, fr.zeta]), pts).holds


def test_exact_form_is_integrable(rng):
    f = sym_field(sp.sin(X * Y) + Z * XI ** 2)
    df = ext_d(KForm.scalar(f))
    assert integrability_pfaff(PfaffSystem([df]), random_events(rng, 20)).holds


def test_pfaff_system_rejects_non_one_forms():
    with pytest.raises(ConfigurationError):
        PfaffSystem([KForm.basis(0, 1)])
    with pytest.raises(ConfigurationError):
        Distribution([])


def test_distribution_independence():
    assert Distribution([DX, DY]).is_independent(Event(0, 0, 0, 0))
    assert not Distribution([DX, DX * 2.0]).is_independent(Event(0, 0, 0, 0))


# curvature factor and phase rate

def test_curvature_factor_vanishes_for_running_waves(rng):
    for eps in (1, -1):
        s = XI + eps * Z
        fr = PhLOFrame(sym_field(sp.exp(-X ** 2) * sp.cos(s) + Y), sym_field(sp.sin(X * Y * s)), eps)
        pts = random_events(rng, 20)
        assert np.max(np.abs(curvature_factor(fr, pts))) < 1e-12
        assert np.max(np.abs(phase_rate(fr, Event(0.4, 0.9, 0.2, 0.3)))) < 1e-12


@pytest.mark.parametrize("eps,kappa", [(1, 1), (-1, 1), (1, -1), (-1, -1)])
def test_curvature_factor_unit_amplitude(eps, kappa, rng):
    l0 = 0.75
    psi = -eps * kappa * Z / l0
    fr = PhLOFrame(sym_field(sp.cos(psi)), sym_field(sp.sin(psi)), eps)
    assert np.allclose(curvature_factor(fr, random_events(rng, 10)), kappa / l0, atol=1e-14)


def test_curvature_factor_symbolic_point():
    u, p = Y * Z, X * XI
    fr = PhLOFrame(sym_field(u), sym_field(p), 1)
    want = float((u * rate_expr(p, 1) - p * rate_expr(u, 1)).subs({X: 1, Y: 1, Z: 1, XI: 1}))
    assert curvature_factor(fr, Event(1.0, 1.0, 1.0, 1.0)) == pytest.approx(want, abs=1e-15)
    assert want == 2.0


def test_phase_rate_on_solution(rng):
    for eps, kappa, fam in [(1, 1, "psi1"), (-1, -1, "psi2"), (1, -1, "psi2")]:
        sol = phlo.build_solution(phlo.SolutionSpec(eps=eps, kappa=kappa, l0=1.4, family=fam))
        pts = phlo.support_points(sol, 30, rng, xi=0.5)
        assert np.allclose(phase_rate(sol.frame, pts), kappa / 1.4, rtol=1e-10)


def test_phase_rate_direct_arctan():
    fr = PhLOFrame(sym_field(sp.cos(Z)), sym_field(sp.sin(Z)), 1)
    psi = sp.atan2(sp.sin(Z), sp.cos(Z))
    want = float(rate_expr(psi, 1).subs({Z: 0.3}))
    assert phase_rate(fr, Event(0.2, 0.1, 0.3, 0.7)) == pytest.approx(want) == pytest.approx(-1.0)


def test_phase_rate_matches_generic_arctan(generic, rng):
    fr, u, p, eps = generic
    pts = random_events(rng, 20)
    want = sym_value(rate_expr(sp.atan2(p, u), eps), pts)
    assert np.allclose(phase_rate(fr, pts), want, atol=1e-10)


def test_phase_rate_singular_amplitude():
    fr = PhLOFrame(ZERO, ZERO, 1)
    with pytest.raises(SingularAmplitudeError):
        phase_rate(fr, Event(0, 0, 0, 0))


# curvature forms

def test_curvature_form_of_integrable_distribution_vanishes(generic, rng):
    fr, *_ = generic
    pts = random_events(rng, 15)
    D = Distribution([fr.A_bar, fr.A_star_bar])
    omega = curvature_form(D, PfaffSystem([KForm.basis(2), KForm.basis(3)]), Distribution([DZ, DXI]), pts)
    assert np.max(np.abs(omega[0, 1](pts))) < 1e-12


def test_curvature_form_on_A_bar_zeta_bar(generic, rng):
    fr, _, _, eps = generic
    pts = random_events(rng, 20)
    inv = ONE / fr.phi2
    omega = curvature_form(Distribution([fr.A_bar, fr.zeta_bar]), PfaffSystem([fr.A_star * (-inv)]),
                           Distribution([fr.A_star_bar]), pts)
    want = vec_values(fr.A_star_bar, pts) * (-eps * fr.R(pts) / fr.phi2(pts))
    assert np.allclose(omega[0, 1](pts), want, atol=1e-12)
    omega_star = curvature_form(Distribution([fr.A_star_bar, fr.zeta_bar]), PfaffSystem([fr.A * (-inv)]),
                                Distribution([fr.A_bar]), pts)
    want = vec_values(fr.A_bar, pts) * (eps * fr.R(pts) / fr.phi2(pts))
    assert np.allclose(omega_star[0, 1](pts), want, atol=1e-12)


def test_frame_curvatures_agree_with_curvature_form(generic, rng):
    fr, *_ = generic
    pts = random_events(rng, 10)
    Z = frame_curvatures(fr)
    inv = ONE / fr.phi2
    omega = curvature_form(Distribution([fr.A_bar, fr.zeta_bar]), PfaffSystem([fr.A_star * (-inv)]),
                           Distribution([fr.A_star_bar]), pts)
    assert np.allclose(Z["Z_Omega"](pts), omega[0, 1](pts), atol=1e-12)


def test_curvature_form_checks_duality(generic, rng):
    fr, *_ = generic
    with pytest.raises(ConfigurationError):
        curvature_form(Distribution([fr.A_bar, fr.zeta_bar]), PfaffSystem([fr.A_star]),
                       Distribution([fr.A_star_bar]), random_events(rng, 5))
    with pytest.raises(ConfigurationError):
        curvature_form(Distribution([fr.A_bar]), PfaffSystem([fr.A_star, fr.zeta]),
                       Distribution([fr.A_star_bar]), random_events(rng, 5))


def test_curvature_energy_relations_generic(generic, rng):
    fr, *_ = generic
    rep = curvature_energy_relations(fr, random_events(rng, 25))
    assert rep.max_violation < 1e-11, {k: r.violation for k, r in rep.relations.items()}
    assert np.max(np.abs(rep.relations["i(G*)dG = eps R zeta"].lhs)) > 1e-3


def test_dynamical_equilibrium_kills_i_G_dG(rng):
    sol = phlo.build_solution(phlo.SolutionSpec(eps=-1, kappa=1, l0=0.9))
    pts = phlo.support_points(sol, 25, rng, xi=0.3)
    rep = curvature_energy_relations(sol.frame, pts)
    assert np.max(np.abs(rep.relations["i(G)dG = half zeta"].lhs)) < 1e-12
    assert rep.max_violation < 1e-10


def test_bracket_pairings(generic, rng):
    fr, u, p, eps = generic
    pts = random_events(rng, 20)
    pair = lambda a, X: dual_pairing(a, X)(pts)
    R = fr.R(pts)
    assert np.allclose(pair(fr.A, lie_bracket(fr.A_star_bar, fr.zeta_bar)), -eps * R, atol=1e-12)
    assert np.allclose(pair(fr.A_star, lie_bracket(fr.A_bar, fr.zeta_bar)), eps * R, atol=1e-12)
    half = sym_value(rate_expr(u ** 2 + p ** 2, eps) / 2, pts)
    assert np.allclose(pair(fr.A, lie_bracket(fr.A_bar, fr.zeta_bar)), half, atol=1e-12)
    assert np.allclose(pair(fr.A_star, lie_bracket(fr.A_star_bar, fr.zeta_bar)), half, atol=1e-12)


def test_frame_pairings(generic, rng):
    fr, *_ = generic
    pts = random_events(rng, 10)
    assert np.max(np.abs(dual_pairing(fr.A, fr.A_star_bar)(pts))) < 1e-14
    assert np.allclose(dual_pairing(fr.A, fr.A_bar)(pts), -fr.phi2(pts))
    assert np.allclose(dual_pairing(fr.A_star, fr.A_star_bar)(pts), -fr.phi2(pts))
    zb = fr.zeta_bar(pts)
    assert np.allclose(-zb[0] ** 2 - zb[1] ** 2 - zb[2] ** 2 + zb[3] ** 2, 0.0)


# projections

def test_projections_reduce_for_zero_fields():
    P = build_projections(0.0, 0.0, 1)
    p = Event(0, 0, 0, 0)
    assert np.array_equal(P.V.matrix(p), np.diag([1.0, 1, 0, 0]))
    assert np.array_equal(P.H.matrix(p), np.diag([0.0, 0, 1, 1]))


def test_projection_algebra(generic, rng):
    fr, *_ = generic
    P = build_projections(fr.u, fr.p, fr.eps)
    pts = random_events(rng, 30)
    for name in P._fields:
        assert getattr(P, name).idempotency_defect(pts) < 1e-12, name
    I = np.broadcast_to(np.eye(4)[..., None], (4, 4, 30))
    assert np.allclose(P.V.matrix(pts) + P.H.matrix(pts), I)
    assert np.allclose(P.V_tilde.matrix(pts) + P.H_tilde.matrix(pts), I)


def test_projection_tables(generic, rng):
    fr, *_ = generic
    P = build_projections(fr.u, fr.p, fr.eps)
    pts = random_events(rng, 10)
    got = vec_values(P.V.apply(DXI), pts)
    assert np.allclose(got[:2], -np.stack([fr.u(pts), fr.p(pts)])) and np.all(got[2:] == 0)
    assert np.allclose(vec_values(P.V.apply(fr.A_star_bar), pts), vec_values(fr.A_star_bar, pts))
    A = P.V_tilde_star.pullback(fr.A)
    assert np.allclose([np.broadcast_to(A[i](pts), pts.shape) for i in range(4)],
                       [np.broadcast_to(fr.A[i](pts), pts.shape) for i in range(4)])


def test_connection_curvatures_Z1_Z2(generic, rng):
    fr, u, p, eps = generic
    P = build_projections(fr.u, fr.p, eps)
    pts = random_events(rng, 20)
    a, b = sym_value(rate_expr(u, eps), pts), sym_value(rate_expr(p, eps), pts)
    zero = np.zeros(pts.shape)
    Z1 = coordinate_curvature(P.V)(pts)
    assert np.allclose(Z1, [-eps * a, -eps * b, zero, zero], atol=1e-12)
    Z2 = coordinate_curvature(P.V_tilde)(pts)
    assert np.allclose(Z2, [b, -a, zero, zero], atol=1e-12)
    for H, Zc in ((P.H, Z1), (P.H_tilde, Z2)):
        br = lie_bracket(H.apply(DZ), H.apply(DXI))(pts)
        assert np.allclose(br, Zc, atol=1e-12)


def test_vertical_cocurvature_vanishes(generic, rng):
    fr, *_ = generic
    P = build_projections(fr.u, fr.p, fr.eps)
    pts = random_events(rng, 10)
    for X, Yv in ((DZ, DXI), (DX, DZ), (DY, DXI)):
        _, co = connection_curvature(P.V, X, Yv).evaluate(pts)
        assert np.max(np.abs(co)) < 1e-12


def test_vertical_area_equals_eps_K2(generic, rng):
    fr, *_ = generic
    P = build_projections(fr.u, fr.p, fr.eps)
    pts = random_events(rng, 15)
    Z1, Z2 = coordinate_curvature(P.V), coordinate_curvature(P.V_tilde)
    K2 = fr.K2(pts)
    assert np.allclose(vertical_area(P.V, Z1, Z2, pts), fr.eps * K2, atol=1e-12)
    assert np.allclose(vertical_area(P.V_tilde, Z1, Z2, pts), fr.eps * K2, atol=1e-12)


# scale

def test_l0_recovered_from_solution(rng):
    for eps, kappa, fam, l0 in [(1, 1, "psi1", 0.7), (-1, 1, "psi2", 2.5), (1, -1, "psi1", 1.0)]:
        sol = phlo.build_solution(phlo.SolutionSpec(eps=eps, kappa=kappa, l0=l0, family=fam))
        pts = phlo.support_points(sol, 50, rng, xi=0.1)
        assert np.allclose(l0_squared(sol.frame, pts), l0 * l0, rtol=1e-10)


def test_trace_scale_is_phi2(generic, rng):
    fr, *_ = generic
    P = build_projections(fr.u, fr.p, fr.eps)
    pts = random_events(rng, 20)
    for proj in (P.V, P.V_tilde):
        assert np.allclose(trace_scale(proj, pts), fr.phi2(pts), atol=1e-12)
    assert np.allclose(projection_scale_squared(P.V, pts), l0_squared(fr, pts), rtol=1e-12)


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (0.3, -1.7)])
def test_mixing_keeps_scale(a, b, generic, rng):
    fr, *_ = generic
    pts = random_events(rng, 20)
    W = mixed_projection(fr.u, fr.p, fr.eps, a, b)
    assert W.idempotency_defect(pts) < 1e-12
    assert np.allclose(trace_scale(W, pts), (a * a + b * b) * fr.phi2(pts), rtol=1e-12)
    assert np.allclose(projection_scale_squared(W, pts), l0_squared(fr, pts), rtol=1e-10)


def test_running_wave_has_no_scale():
    s = XI + Z
    fr = PhLOFrame(sym_field(sp.cos(s)), sym_field(sp.sin(s)), 1)
    with pytest.raises(UndefinedScaleError):
        l0_squared(fr, Event(0.1, 0.2, 0.3, 0.4))


# shuffling and transition

def test_shuffling_symmetry_examples(rng):
    pts = random_events(rng, 10)
    D = Distribution([DX, DY])
    fr = PhLOFrame(ONE, ZERO, 1)
    assert shuffling_symmetry_check(D, fr.zeta_bar, pts)
    assert not shuffling_symmetry_check(D, DX, pts)
    xz = VectorField([ZERO, ZERO, fields.coordinates()[0] * fields.coordinates()[2], ZERO])
    assert not shuffling_symmetry_check(D, xz, pts)


def test_frame_transition_on_solution(rng):
    sol = phlo.build_solution(phlo.SolutionSpec(eps=-1, kappa=1, l0=1.2))
    pts = phlo.support_points(sol, 20, rng)
    M = frame_transition(sol.frame, pts)
    w = -1 * 1 / 1.2
    assert np.allclose(M[0, 0], 0, atol=1e-12) and np.allclose(M[1, 1], 0, atol=1e-12)
    assert np.allclose(M[0, 1], w) and np.allclose(M[1, 0], -w)


def test_frame_transition_running_wave():
    s = XI - Z
    fr = PhLOFrame(sym_field(sp.cos(s) + 2), sym_field(X * sp.sin(s)), -1)
    M = frame_transition(fr, Event(0.3, 0.2, 0.1, 0.5))
    assert np.max(np.abs(M)) < 1e-14


def test_frame_transition_reconstructs_brackets(generic, rng):
    fr, *_ = generic
    pts = random_events(rng, 20)
    M = frame_transition(fr, pts)
    basis = np.stack([vec_values(fr.A_bar, pts), vec_values(fr.A_star_bar, pts)])      # (2, 4, n)
    brackets = np.stack([lie_bracket(fr.A_bar, fr.zeta_bar)(pts),
                         lie_bracket(fr.A_star_bar, fr.zeta_bar)(pts)])
    # independent oracle: least-squares solve for the coefficients at each point
    for k in range(pts.shape[0]):
        coef, *_ = np.linalg.lstsq(basis[:, :, k].T, brackets[:, :, k].T, rcond=None)
        assert np.allclose(coef, M[:, :, k], atol=1e-10)
    recon = np.einsum("ikn,ijn->jkn", basis, M)
    assert np.max(np.abs(recon - brackets)) < 1e-12
