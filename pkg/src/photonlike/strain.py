"""Strain tensors L_X eta of the flat metric and their fluxes.

The convention keeps no factor 1/2: (L_X eta)_{mn} = eta_mm d_n X^m + eta_nn d_m X^n.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .fields import ZERO, Event, ScalarField, VectorField, as_field, fd_partial
from .frobenius import PhLOFrame, Relation, energy_contractions
from .geometry import ETA_DIAG, KForm, hodge, lie_bracket, raise_index, wedge


class StrainTensor:
    """Symmetric 4x4 matrix of fields."""

    def __init__(self, entries):
        rows = [[as_field(e) for e in row] for row in entries]
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("strain tensors are 4x4")
        self.entries = tuple(tuple(r) for r in rows)

    def __getitem__(self, ij) -> ScalarField:
        i, j = ij
        return self.entries[i][j]

    def matrix(self, p) -> np.ndarray:
        p = Event.of(p)
        return np.stack([np.stack([np.broadcast_to(np.asarray(e(p), dtype=float), p.shape)
                                   for e in row]) for row in self.entries])

    def antisymmetry_defect(self, p) -> float:
        M = self.matrix(p)
        return float(np.max(np.abs(M - np.swapaxes(M, 0, 1))))

    def covector(self, X: VectorField) -> KForm:
        """D(X) = D_{mn} X^n dx^m."""
        X = X.four()
        return KForm.one_form([sum((self.entries[m][n] * X[n] for n in range(4)), ZERO)
                               for m in range(4)])

    def contract(self, X: VectorField, Y: VectorField) -> ScalarField:
        """D_{mn} X^m Y^n."""
        X, Y = X.four(), Y.four()
        out = ZERO
        for m in range(4):
            for n in range(4):
                out = out + self.entries[m][n] * X[m] * Y[n]
        return out


def strain(X: VectorField) -> StrainTensor:
    X = X.four()
    return StrainTensor([[X[m].derivative(n) * ETA_DIAG[m] + X[n].derivative(m) * ETA_DIAG[n]
                          for n in range(4)] for m in range(4)])


def strain_fd(X: VectorField, p, h: float = 1e-4) -> np.ndarray:
    """The same tensor from central differences of the components only."""
    X = X.four()
    J = [[fd_partial(X[m], n, p, h) for n in range(4)] for m in range(4)]
    return np.array([[ETA_DIAG[m] * np.asarray(J[m][n]) + ETA_DIAG[n] * np.asarray(J[n][m])
                      for n in range(4)] for m in range(4)])


def closed_form_strain(frame: PhLOFrame) -> StrainTensor:
    """Entry-by-entry expressions of L_{A_bar} eta."""
    d = lambda f, ax: f.derivative(ax)
    u, p = frame.u, frame.p
    return StrainTensor([
        [2 * d(u, 0), d(u, 1) + d(p, 0), d(u, 2), d(u, 3)],
        [d(u, 1) + d(p, 0), 2 * d(p, 1), d(p, 2), d(p, 3)],
        [d(u, 2), d(p, 2), ZERO, ZERO],
        [d(u, 3), d(p, 3), ZERO, ZERO],
    ])


def closed_form_dual_strain(frame: PhLOFrame) -> StrainTensor:
    """Entry-by-entry expressions of L_{A*_bar} eta; the (x, y) entry is -eps (p_y - u_x)."""
    d = lambda f, ax: f.derivative(ax)
    u, p, e = frame.u, frame.p, frame.eps
    xy = (d(p, 1) - d(u, 0)) * (-e)
    return StrainTensor([
        [d(p, 0) * (-2 * e), xy, d(p, 2) * (-e), d(p, 3) * (-e)],
        [xy, d(u, 1) * (2 * e), d(u, 2) * e, d(u, 3) * e],
        [d(p, 2) * (-e), d(u, 2) * e, ZERO, ZERO],
        [d(p, 3) * (-e), d(u, 3) * e, ZERO, ZERO],
    ])


def _vals(w: KForm, p) -> np.ndarray:
    p = Event.of(p)
    return np.stack([np.broadcast_to(np.asarray(w[i](p), dtype=float), p.shape) for i in range(4)])


def strain_contractions(frame: PhLOFrame, p) -> dict[str, Relation]:
    """The zeta-directed strain relations, each as (computed, expected)."""
    p = Event.of(p)
    e = frame.eps
    D, Ds = strain(frame.A_bar), strain(frame.A_star_bar)
    zb = frame.zeta_bar
    R, half = frame.R(p), frame.half_rate_phi2(p)
    a, b = frame.a(p), frame.b(p)
    zero = np.zeros(p.shape)
    Dz, Dsz = D.covector(zb), Ds.covector(zb)
    vec = lambda V: np.stack([np.broadcast_to(np.asarray(c, dtype=float), p.shape) for c in V(p)])
    phi2 = frame.phi2(p)
    xy = wedge(Dz, Dsz)[0, 1](p)
    return {
        "D(zb,zb) = 0": Relation(D.contract(zb, zb)(p), zero),
        "D*(zb,zb) = 0": Relation(Ds.contract(zb, zb)(p), zero),
        "D(zb) = a dx + b dy": Relation(_vals(Dz, p), np.stack([a, b, zero, zero])),
        "D*(zb) = eps(-b dx + a dy)": Relation(_vals(Dsz, p), np.stack([-e * b, e * a, zero, zero])),
        "raised D(zb) = -[A_bar, zb]": Relation(vec(raise_index(Dz)), -vec(lie_bracket(frame.A_bar, zb))),
        "raised D*(zb) = -[A*_bar, zb]": Relation(vec(raise_index(Dsz)),
                                                  -vec(lie_bracket(frame.A_star_bar, zb))),
        "D(A_bar, zb) = -half": Relation(D.contract(frame.A_bar, zb)(p), -half),
        "D(A*_bar, zb) = -eps R": Relation(D.contract(frame.A_star_bar, zb)(p), -e * R),
        "D*(A*_bar, zb) = -half": Relation(Ds.contract(frame.A_star_bar, zb)(p), -half),
        "D*(A_bar, zb) = eps R": Relation(Ds.contract(frame.A_bar, zb)(p), e * R),
        "D(zb) ^ D*(zb) = eps K^2 dx^dy": Relation(xy, e * frame.K2(p)),
        # with phi rate(psi) = R / phi and rate(phi) = half / phi
        "phi^2 K^2 = half^2 + R^2": Relation(phi2 * frame.K2(p), half * half + R * R),
    }


class StrainFlux(NamedTuple):
    rotational: np.ndarray        # *[D(zb) ^ A ^ zeta]
    translational: np.ndarray     # *[D(zb) ^ A* ^ zeta]
    rotational_dual: np.ndarray   # *[D*(zb) ^ A* ^ zeta]
    translational_dual: np.ndarray  # -*[D*(zb) ^ A ^ zeta]


def strain_flux_forms(frame: PhLOFrame) -> dict[str, KForm]:
    Dz = strain(frame.A_bar).covector(frame.zeta_bar)
    Dsz = strain(frame.A_star_bar).covector(frame.zeta_bar)
    flux = lambda s, a: hodge(wedge(wedge(s, a), frame.zeta))
    return {
        "rotational": flux(Dz, frame.A),
        "translational": flux(Dz, frame.A_star),
        "rotational_dual": flux(Dsz, frame.A_star),
        "translational_dual": -flux(Dsz, frame.A),
    }


def strain_flux(frame: PhLOFrame, p) -> StrainFlux:
    f = strain_flux_forms(frame)
    return StrainFlux(*(_vals(f[k], p) for k in StrainFlux._fields))


def strain_flux_agreement(frame: PhLOFrame, p) -> dict[str, Relation]:
    """Strain fluxes against the energy contractions, assembled without strain tensors."""
    p = Event.of(p)
    flux = strain_flux(frame, p)
    ec = {k: _vals(w, p) for k, w in energy_contractions(frame).items()}
    zeta = _vals(frame.zeta, p)
    R, half, e = frame.R(p), frame.half_rate_phi2(p), frame.eps
    return {
        "rotational = -i(G*)dG": Relation(flux.rotational, -ec["i(G*)dG"]),
        "rotational = i(G)dG*": Relation(flux.rotational, ec["i(G)dG*"]),
        "rotational_dual = rotational": Relation(flux.rotational_dual, flux.rotational),
        "rotational = -eps R zeta": Relation(flux.rotational, -e * R * zeta),
        "translational = i(G)dG": Relation(flux.translational, ec["i(G)dG"]),
        "translational = i(G*)dG*": Relation(flux.translational, ec["i(G*)dG*"]),
        "translational_dual = translational": Relation(flux.translational_dual, flux.translational),
        "translational = half zeta": Relation(flux.translational, half * zeta),
    }
