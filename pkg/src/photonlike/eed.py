"""Residuals of the nonlinear vacuum field equations in vector and form language.

The E, B <-> F dictionary used throughout is

    F = E_i dx^i ^ dxi + B_1 dy^dz + B_2 dz^dx + B_3 dx^dy,

which gives *F <-> (-B, E), I1 = B^2 - E^2 and I2 = 2 E.B. Under it the
relativistic residuals relate to the vector ones as

    r1 = (Delta11,  B.(rot E + dB/dxi))
    r2 = (Delta22, -E.(rot B - dE/dxi))
    r3 = (-Delta_exchange, E.(rot E + dB/dxi) - B.(rot B - dE/dxi)).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fields
from .fields import (XI, Event, QuadratureSpec, ScalarField, VectorField, d_xi, div,
                     integrate3, jacobian, rot, rot_field)
from .geometry import KForm, bivector_contraction, ext_d, hodge2
from .stress import affine_duality


@dataclass(frozen=True)
class EBState:
    """A pair of spatial fields E, B depending on (x, y, z, xi)."""

    E: VectorField
    B: VectorField

    def __post_init__(self):
        if self.E.dim != 3 or self.B.dim != 3:
            raise ValueError("E and B must be spatial (3-component) fields")

    def dual(self) -> "EBState":
        """(E, B) -> (-B, E)."""
        return EBState(-self.B, self.E)


class ResidualReport(NamedTuple):
    delta11: np.ndarray
    delta22: np.ndarray
    delta12_plus_21: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(r)) for r in self))


class _Pieces(NamedTuple):
    E: np.ndarray
    B: np.ndarray
    faraday: np.ndarray   # rot E + dB/dxi
    ampere: np.ndarray    # rot B - dE/dxi
    div_E: np.ndarray
    div_B: np.ndarray


def _pieces(s: EBState, p) -> _Pieces:
    p = Event.of(p)
    JE, JB = jacobian(s.E, p), jacobian(s.B, p)
    rotE = np.stack([JE[2, 1] - JE[1, 2], JE[0, 2] - JE[2, 0], JE[1, 0] - JE[0, 1]])
    rotB = np.stack([JB[2, 1] - JB[1, 2], JB[0, 2] - JB[2, 0], JB[1, 0] - JB[0, 1]])
    return _Pieces(s.E(p), s.B(p), rotE + JB[:, XI], rotB - JE[:, XI],
                   JE[0, 0] + JE[1, 1] + JE[2, 2], JB[0, 0] + JB[1, 1] + JB[2, 2])


def _cross(a, b):
    return np.cross(a, b, axis=0)


def delta11(s: EBState, p) -> np.ndarray:
    """(rot E + dB/dxi) x E + B div B."""
    q = _pieces(s, p)
    return _cross(q.faraday, q.E) + q.B * q.div_B


def delta22(s: EBState, p) -> np.ndarray:
    """(rot B - dE/dxi) x B + E div E."""
    q = _pieces(s, p)
    return _cross(q.ampere, q.B) + q.E * q.div_E


def delta_exchange(s: EBState, p) -> np.ndarray:
    """(rot E + dB/dxi) x B - E div B + (rot B - dE/dxi) x E - B div E."""
    q = _pieces(s, p)
    return (_cross(q.faraday, q.B) - q.E * q.div_B
            + _cross(q.ampere, q.E) - q.B * q.div_E)


def residuals(s: EBState, p) -> ResidualReport:
    q = _pieces(s, p)
    return ResidualReport(
        _cross(q.faraday, q.E) + q.B * q.div_B,
        _cross(q.ampere, q.B) + q.E * q.div_E,
        _cross(q.faraday, q.B) - q.E * q.div_B + _cross(q.ampere, q.E) - q.B * q.div_E,
    )


def full_balance(s: EBState, p) -> np.ndarray:
    """The four force terms summed: stress divergence minus d/dxi (E x B).

    Assembled separately from delta11 + delta22 (the time derivative of the
    momentum density comes from differentiating the field E x B) so that the
    identity with delta11 + delta22 is a genuine cross-check.
    """
    p = Event.of(p)
    e, b = s.E(p), s.B(p)
    forces = (_cross(rot(s.E, p), e) + e * div(s.E, p)
              + _cross(rot(s.B, p), b) + b * div(s.B, p))
    momentum = s.E.cross(s.B)
    dP = np.stack(np.broadcast_arrays(*(fields.partial(c, XI, p) for c in momentum)))
    return forces - dP


def poynting_residual(s: EBState, p):
    """d/dxi (E^2 + B^2)/2 + div(E x B)."""
    p = Event.of(p)
    energy = 0.5 * (s.E.dot(s.E) + s.B.dot(s.B))
    return fields.partial(energy, XI, p) + div(s.E.cross(s.B), p)


class PropertyReport(NamedTuple):
    """Max violation of each structural property over a sample of points."""

    orthogonal: float          # 1. E.B = 0
    projections: float         # 2. (rot E + dB/dxi).B = 0 and (rot B - dE/dxi).E = 0
    family_closure: float      # 3. residuals of (aE - bB, bE + aB), per unit a^2 + b^2
    equal_norms: float         # 4. E^2 = B^2
    equal_helicities: float    # 5. B.rot B - E.rot E = 0

    def passed(self, tol: float) -> dict[str, bool]:
        return {k: v < tol for k, v in self._asdict().items()}


CLOSURE_PAIRS = ((2.0, 1.0), (0.6, -1.3), (-1.0, 0.25))


def property_suite(s: EBState, sample) -> PropertyReport:
    """Evaluate the five properties on the sample points; never raises on failure."""
    sample = Event.of(sample)
    q = _pieces(s, sample)
    mx = lambda a: float(np.max(np.abs(a))) if np.size(a) else 0.0
    p1 = mx(np.sum(q.E * q.B, axis=0))
    p2 = max(mx(np.sum(q.faraday * q.B, axis=0)), mx(np.sum(q.ampere * q.E, axis=0)))
    p3 = 0.0
    for a, b in CLOSURE_PAIRS:
        t = EBState(*affine_duality(s.E, s.B, a, b))
        p3 = max(p3, residuals(t, sample).max_abs / (a * a + b * b))
    p4 = mx(np.sum(q.E * q.E, axis=0) - np.sum(q.B * q.B, axis=0))
    rotE, rotB = q.faraday - d_xi(s.B, sample), q.ampere + d_xi(s.E, sample)
    p5 = mx(np.sum(q.B * rotB, axis=0) - np.sum(q.E * rotE, axis=0))
    return PropertyReport(p1, p2, p3, p4, p5)


def helicity_density(V: VectorField, p):
    """V . rot V."""
    p = Event.of(p)
    return np.sum(V(p) * rot(V, p), axis=0)


def helicity_field(V: VectorField) -> ScalarField:
    return V.dot(rot_field(V))


def integral_helicity(V: VectorField, quad: QuadratureSpec, xi: float = 0.0) -> float:
    return integrate3(helicity_field(V), quad, xi)


def scaled_helicity(V: VectorField, quad: QuadratureSpec, l0: float, xi: float = 0.0,
                    c: float | None = None) -> float:
    """(4 l0^2 / c) times the integral helicity; kappa * T * E on the helical example."""
    c = fields.C if c is None else c
    return 4.0 * l0 * l0 / c * integral_helicity(V, quad, xi)


# form language

def field_form(s: EBState) -> KForm:
    E, B = s.E, s.B
    return KForm(2, {(0, 3): E[0], (1, 3): E[1], (2, 3): E[2],
                     (1, 2): B[0], (2, 0): B[1], (0, 1): B[2]})


def state_from_form(F: KForm) -> EBState:
    if F.degree != 2:
        raise ValueError("need a 2-form")
    return EBState(VectorField([F[0, 3], F[1, 3], F[2, 3]]),
                   VectorField([F[1, 2], F[2, 0], F[0, 1]]))


class RelativisticResiduals(NamedTuple):
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(r)) for r in self))


def relativistic_residuals(F: KForm, p) -> RelativisticResiduals:
    """r1 = F.dF, r2 = *F.d*F, r3 = *F.dF + F.d*F with pairs a<b contracted."""
    Fs = hodge2(F)
    dF, dFs = ext_d(F), ext_d(Fs)
    return RelativisticResiduals(
        bivector_contraction(F, dF, p),
        bivector_contraction(Fs, dFs, p),
        bivector_contraction(Fs, dF, p) + bivector_contraction(F, dFs, p),
    )


def residuals_as_relativistic(s: EBState, p) -> RelativisticResiduals:
    """The vector-form residuals arranged by the dictionary in the module docstring."""
    q = _pieces(s, p)
    dot = lambda a, b: np.sum(a * b, axis=0)
    d11 = _cross(q.faraday, q.E) + q.B * q.div_B
    d22 = _cross(q.ampere, q.B) + q.E * q.div_E
    dex = _cross(q.faraday, q.B) - q.E * q.div_B + _cross(q.ampere, q.E) - q.B * q.div_E
    stack = lambda v, t: np.concatenate([v, np.asarray(t)[None]], axis=0)
    return RelativisticResiduals(
        stack(d11, dot(q.B, q.faraday)),
        stack(d22, -dot(q.E, q.ampere)),
        stack(-dex, dot(q.E, q.faraday) - dot(q.B, q.ampere)),
    )
