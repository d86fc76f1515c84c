"""Maxwell stress on R^3 and the electromagnetic energy tensor on R^4.

Point-wise functions take E and B as arrays with the component axis first,
so a batch of points is simply an array of shape (3, ...).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import fields
from .errors import DomainError
from .fields import Event, VectorField, as_field, div, partial, rot
from .geometry import KForm, bivector_contraction, ext_d, hodge2, lower_index, raise_all, raise_index

DEGENERACY_THRESHOLD = 1e-12


class FieldInvariants(NamedTuple):
    I1: float
    I2: float


class StressEigen(NamedTuple):
    values: np.ndarray       # (lambda1, lambda2, lambda3)
    vectors: np.ndarray      # columns are unit eigenvectors
    degenerate: bool         # True when E x B ~ 0 and the raw solver was used


class DivergenceCheck(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - self.rhs


def maxwell_stress(E, B) -> np.ndarray:
    """M^{ij} = E^i E^j + B^i B^j - delta^{ij} (E^2 + B^2) / 2."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    w = 0.5 * (np.sum(E * E, axis=0) + np.sum(B * B, axis=0))
    M = np.einsum("i...,j...->ij...", E, E) + np.einsum("i...,j...->ij...", B, B)
    for i in range(3):
        M[i, i] -= w
    return M


def invariants(E, B) -> FieldInvariants:
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    return FieldInvariants(np.sum(B * B, axis=0) - np.sum(E * E, axis=0), 2.0 * np.sum(E * B, axis=0))


def invariant_identity_residual(E, B):
    """1/4 (I1^2 + I2^2) - [(E^2 + B^2)^2 / 4 - |E x B|^2]."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    I1, I2 = invariants(E, B)
    w = 0.5 * (np.sum(E * E, axis=0) + np.sum(B * B, axis=0))
    S = np.cross(E, B, axis=0)
    return 0.25 * (I1 ** 2 + I2 ** 2) - (w ** 2 - np.sum(S * S, axis=0))


def _symmetric_2x2_vector(a, b, d, lam):
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, b])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.array([1.0, 0.0])


def stress_eigen(E, B) -> StressEigen:
    """Closed-form eigenstructure of the Maxwell stress at one point.

    lambda1 = -(E^2 + B^2)/2 along E x B; lambda2,3 = +-sqrt(I1^2 + I2^2)/2 in
    span(E, B). When |E x B| < 1e-12 (E^2 + B^2) the classification does not
    apply and numpy's symmetric solver is returned instead.
    """
    E = np.asarray(E, dtype=float).reshape(3)
    B = np.asarray(B, dtype=float).reshape(3)
    M = maxwell_stress(E, B)
    energy2 = E @ E + B @ B
    S = np.cross(E, B)
    if np.linalg.norm(S) <= DEGENERACY_THRESHOLD * energy2:
        vals, vecs = np.linalg.eigh(M)
        return StressEigen(vals, vecs, True)
    I1, I2 = invariants(E, B)
    half = 0.5 * np.hypot(I1, I2)
    lam = np.array([-0.5 * energy2, half, -half])
    n = S / np.linalg.norm(S)
    # orthonormal basis of span(E, B)
    e1 = E / np.linalg.norm(E)
    e2 = B - (B @ e1) * e1
    e2 /= np.linalg.norm(e2)
    if half == 0.0:
        # null field: E and B themselves are eigenvectors
        v2, v3 = e1, e2
    else:
        a, b, d = e1 @ M @ e1, e1 @ M @ e2, e2 @ M @ e2
        c2 = _symmetric_2x2_vector(a, b, d, lam[1])
        c3 = _symmetric_2x2_vector(a, b, d, lam[2])
        v2 = c2[0] * e1 + c2[1] * e2
        v3 = c3[0] * e1 + c3[1] * e2
    return StressEigen(lam, np.column_stack([n, v2, v3]), False)


def stress_divergence_identity(E: VectorField, B: VectorField, p, h: float | None = None) -> DivergenceCheck:
    """lhs: d_i M^{ij} by central differences of the stress; rhs: the force terms.

    rhs = (rot E) x E + E div E + (rot B) x B + B div B, with derivatives taken
    through ``fields.partial``.
    """
    p = Event.of(p)
    if h is None:
        h = min(E.fd_step, B.fd_step)
    lhs = 0.0
    for i in range(3):
        plus, minus = p.shifted(i, h), p.shifted(i, -h)
        dM = (maxwell_stress(E(plus), B(plus)) - maxwell_stress(E(minus), B(minus))) / (2 * h)
        lhs = lhs + dM[i]
    e, b = E(p), B(p)
    rhs = (np.cross(rot(E, p), e, axis=0) + e * div(E, p)
           + np.cross(rot(B, p), b, axis=0) + b * div(B, p))
    return DivergenceCheck(np.asarray(lhs), rhs)


def lorentz_boost(E, B, v, c: float | None = None):
    """Field transformation to a frame moving with velocity v."""
    c = fields.C if c is None else c
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    v2 = v @ v
    if v2 >= c * c:
        raise DomainError(f"boost speed {np.sqrt(v2)} is not below c = {c}")
    if v2 == 0.0:
        return E.copy(), B.copy()
    g = 1.0 / np.sqrt(1.0 - v2 / (c * c))
    E2 = g * E + (1 - g) / v2 * v * (E @ v) + g / c * np.cross(v, B)
    B2 = g * B + (1 - g) / v2 * v * (B @ v) - g / c * np.cross(v, E)
    return E2, B2


def parallel_frame_velocity(E, B, c: float | None = None) -> np.ndarray:
    """Boost velocity along E x B after which E' and B' are parallel.

    With s = |E x B| / (E^2 + B^2) the speed solves beta / (1 + beta^2) = s,
    taking the root below c. Zero when E x B already vanishes.
    """
    c = fields.C if c is None else c
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    S = np.cross(E, B)
    n = np.linalg.norm(S)
    if n == 0.0:
        return np.zeros(3)
    s = n / (E @ E + B @ B)
    disc = 1.0 - 4.0 * s * s
    if disc < 0.0:
        raise DomainError("no subluminal frame: fields are null")
    beta = 2.0 * s / (1.0 + np.sqrt(disc))
    return c * beta * S / n


def duality_rotation(E, B, alpha):
    """(E cos a - B sin a, E sin a + B cos a).

    Works on arrays with a constant or array angle, and on VectorFields with a
    constant or ScalarField angle.
    """
    if isinstance(E, VectorField):
        a = as_field(alpha)
        c, s = fields.cos(a), fields.sin(a)
        return E * c - B * s, E * s + B * c
    c, s = np.cos(alpha), np.sin(alpha)
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    return E * c - B * s, E * s + B * c


def affine_duality(E, B, a: float, b: float):
    """(a E - b B, b E + a B); scales the Maxwell stress by a^2 + b^2."""
    if isinstance(E, VectorField):
        return E * a - B * b, E * b + B * a
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    return a * E - b * B, b * E + a * B


# relativistic energy tensor

def _form_matrix(F, p) -> np.ndarray:
    return F.array(p) if isinstance(F, KForm) else np.asarray(F, dtype=float)


def _dual_matrix(F, p) -> np.ndarray:
    if isinstance(F, KForm):
        return hodge2(F).array(p)
    M = np.asarray(F, dtype=float)
    G = KForm(2, {(i, j): float(M[i, j]) for i in range(4) for j in range(i + 1, 4)})
    return hodge2(G).array(Event(0, 0, 0, 0))


def energy_tensor(F, p=None) -> np.ndarray:
    """T[mu, nu] = T_mu^nu = -1/2 [F_{ms} F^{ns} + (*F)_{ms} (*F)^{ns}].

    ``F`` is a 2-form evaluated at ``p``, or a constant 4x4 antisymmetric array.
    """
    Fm, Fs = _form_matrix(F, p), _dual_matrix(F, p)
    return -0.5 * (np.einsum("ms...,ns...->mn...", Fm, raise_all(Fm, 2))
                   + np.einsum("ms...,ns...->mn...", Fs, raise_all(Fs, 2)))


def form_invariants(F, p=None) -> FieldInvariants:
    """I1 = 1/2 F_{ab} F^{ab}, I2 = 1/2 F_{ab} (*F)^{ab}."""
    Fm, Fs = _form_matrix(F, p), _dual_matrix(F, p)
    Fu = raise_all(Fm, 2)
    return FieldInvariants(0.5 * np.einsum("ab...,ab...->...", Fm, Fu),
                           0.5 * np.einsum("ab...,ab...->...", Fu, Fs))


def rainich_residual(F, p=None) -> np.ndarray:
    """T_{ms} T^{ns} - 1/4 (I1^2 + I2^2) delta_m^n."""
    T = energy_tensor(F, p)
    sq = np.einsum("ms...,ns...->mn...", lower_index(T, (1,)), raise_index(T, (0,)))
    I1, I2 = form_invariants(F, p)
    scale = 0.25 * (np.asarray(I1) ** 2 + np.asarray(I2) ** 2)
    return sq - np.einsum("mn,...->mn...", np.eye(4), scale)


def energy_divergence(F: KForm, p, h: float | None = None) -> DivergenceCheck:
    """lhs: d_nu T_mu^nu by central differences; rhs: F.dF + *F.d*F (pairs a<b)."""
    p = Event.of(p)
    if h is None:
        h = fields.DEFAULT_FD_STEP
    lhs = 0.0
    for nu in range(4):
        dT = (energy_tensor(F, p.shifted(nu, h)) - energy_tensor(F, p.shifted(nu, -h))) / (2 * h)
        lhs = lhs + dT[:, nu]
    Fs = hodge2(F)
    rhs = bivector_contraction(F, ext_d(F), p) + bivector_contraction(Fs, ext_d(Fs), p)
    return DivergenceCheck(np.asarray(lhs), rhs)
