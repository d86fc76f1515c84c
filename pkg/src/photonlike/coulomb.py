"""Interaction energy of two point charges from the interaction stress.

The static fields are E_q = q (x - c_q) / |x - c_q|^3. The interaction energy
density is w = (1/4 pi) E_q . E_Q and its integral over space minus two small
balls around the charges tends to qQ/R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import dblquad, simpson

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class ChargeConfig:
    q: float
    Q: float
    center_q: tuple[float, float, float]
    center_Q: tuple[float, float, float]
    radius_q: float = 0.1
    radius_Q: float = 0.1

    def __post_init__(self):
        cq = tuple(float(v) for v in self.center_q)
        cQ = tuple(float(v) for v in self.center_Q)
        if len(cq) != 3 or len(cQ) != 3:
            raise ConfigurationError("charge centers are 3D points")
        object.__setattr__(self, "center_q", cq)
        object.__setattr__(self, "center_Q", cQ)
        if not (self.radius_q > 0 and self.radius_Q > 0):
            raise ConfigurationError("ball radii must be positive")
        if not self.distance > self.radius_q + self.radius_Q:
            raise ConfigurationError("the two balls intersect")
        if not (math.isfinite(self.q) and math.isfinite(self.Q)):
            raise ConfigurationError("charges must be finite")

    @classmethod
    def on_axis(cls, q: float, Q: float, R: float, radius: float = 0.1) -> "ChargeConfig":
        """Charges at (-R/2, 0, 0) and (R/2, 0, 0)."""
        if not R > 0:
            raise ConfigurationError("separation must be positive")
        return cls(q, Q, (-R / 2, 0.0, 0.0), (R / 2, 0.0, 0.0), radius, radius)

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.center_Q, self.center_q)))

    @property
    def closed_form(self) -> float:
        return self.q * self.Q / self.distance

    def swapped(self) -> "ChargeConfig":
        return ChargeConfig(self.Q, self.q, self.center_Q, self.center_q, self.radius_Q, self.radius_q)


def _coulomb_field(charge: float, center, x) -> np.ndarray:
    d = np.asarray(x, dtype=float) - np.reshape(center, (3,) + (1,) * (np.ndim(x) - 1))
    r2 = np.sum(d * d, axis=0)
    return charge * d / r2 ** 1.5


def _inside(cfg: ChargeConfig, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[1:], dtype=bool)
    for c, rad in ((cfg.center_q, cfg.radius_q), (cfg.center_Q, cfg.radius_Q)):
        d = x - np.reshape(c, (3,) + (1,) * (x.ndim - 1))
        out |= np.sum(d * d, axis=0) < rad * rad
    return out


def interaction_stress(cfg: ChargeConfig, point) -> np.ndarray:
    """E_q (x) E_Q + E_Q (x) E_q - (E_q . E_Q) Id."""
    x = np.asarray(point, dtype=float)
    if np.any(_inside(cfg, x)):
        raise DomainError("the interaction stress is not evaluated inside the charge balls")
    Eq, EQ = _coulomb_field(cfg.q, cfg.center_q, x), _coulomb_field(cfg.Q, cfg.center_Q, x)
    T = np.einsum("i...,j...->ij...", Eq, EQ)
    T = T + np.swapaxes(T, 0, 1)
    dot = np.sum(Eq * EQ, axis=0)
    for i in range(3):
        T[i, i] -= dot
    return T


def interaction_energy_density(cfg: ChargeConfig, point):
    """(1/4 pi) E_q . E_Q."""
    x = np.asarray(point, dtype=float)
    if np.any(_inside(cfg, x)):
        raise DomainError("the energy density is not evaluated inside the charge balls")
    Eq, EQ = _coulomb_field(cfg.q, cfg.center_q, x), _coulomb_field(cfg.Q, cfg.center_Q, x)
    return np.sum(Eq * EQ, axis=0) / (4 * math.pi)


@dataclass(frozen=True)
class CoulombQuadrature:
    """Box of given half-width around the midpoint, graded toward the charges.

    Node spacing is ``h_min`` within ``focus_margin`` of each ball and grows
    geometrically by ``growth`` further out.
    """

    half_width: float = 40.0
    h_min: float = 0.01
    growth: float = 1.08
    focus_margin: float = 0.1

    def __post_init__(self):
        if not self.half_width > 0:
            raise ConfigurationError("half_width must be positive")
        if not self.h_min > 0:
            raise ConfigurationError("h_min must be positive")
        if not self.growth > 1.0:
            raise ConfigurationError("growth must exceed 1")


def _offsets(h_min: float, growth: float, flat: float, far: float) -> np.ndarray:
    out = [0.0]
    t = 0.0
    while t < far:
        t += max(h_min, (growth - 1.0) * (t - flat))
        out.append(t)
    return np.array(out)


def graded_nodes(lo: float, hi: float, foci, h_min: float, growth: float, flat: float) -> np.ndarray:
    """Sorted nodes in [lo, hi], spacing about h_min near each focus and geometric beyond ``flat``.

    Nodes closer than h_min / 2 are merged, so gaps near a focus stay below 1.5 h_min.
    """
    pieces = [np.array([lo, hi])]
    for c in foci:
        off = _offsets(h_min, growth, flat, max(hi - c, c - lo))
        pieces += [c + off, c - off]
    nodes = np.unique(np.concatenate(pieces))
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    keep = [nodes[0]]
    for v in nodes[1:]:
        if v - keep[-1] > 0.5 * h_min:
            keep.append(v)
    if keep[-1] != hi:
        keep[-1] = hi
    return np.array(keep)


# 6 * integral over [-1, 1]^2 of (1 + x^2 + y^2)^-2: the integral of r^-4
# over the outside of the unit cube.
_CUBE_TAIL = 6.0 * dblquad(lambda y, x: (1.0 + x * x + y * y) ** -2, -1, 1, -1, 1)[0]


def truncation_estimate(cfg: ChargeConfig, half_width: float) -> float:
    """Far-field estimate of the energy outside the box: qQ/(4 pi) * c / L."""
    return cfg.q * cfg.Q / (4 * math.pi) * _CUBE_TAIL / half_width


class CoulombResult(NamedTuple):
    value: float
    closed: float
    rel_error: float
    truncation_estimate: float


def interaction_energy(cfg: ChargeConfig, quad: CoulombQuadrature | None = None) -> CoulombResult:
    """Simpson quadrature of w over the box minus the two balls."""
    quad = quad or CoulombQuadrature()
    mid = 0.5 * (np.asarray(cfg.center_q) + np.asarray(cfg.center_Q))
    L = quad.half_width
    centers = (np.asarray(cfg.center_q), np.asarray(cfg.center_Q))
    for c in centers:
        if np.any(np.abs(c - mid) + max(cfg.radius_q, cfg.radius_Q) >= L):
            raise ConfigurationError("the box must contain both balls")
    flat = max(cfg.radius_q, cfg.radius_Q) + quad.focus_margin
    axes = [graded_nodes(mid[i] - L, mid[i] + L, sorted({float(c[i]) for c in centers}),
                         quad.h_min, quad.growth, flat) for i in range(3)]
    xs, ys, zs = axes
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    planes = np.empty(len(xs))
    for k, xv in enumerate(xs):
        pts = np.stack([np.full_like(Y, xv), Y, Z])
        inside = _inside(cfg, pts)
        safe = np.where(inside, mid[0] + 2 * L, pts[0])  # move excluded nodes far away
        pts = np.stack([safe, Y, Z])
        Eq, EQ = _coulomb_field(cfg.q, cfg.center_q, pts), _coulomb_field(cfg.Q, cfg.center_Q, pts)
        w = np.where(inside, 0.0, np.sum(Eq * EQ, axis=0)) / (4 * math.pi)
        planes[k] = simpson(simpson(w, x=zs, axis=1), x=ys)
    value = float(simpson(planes, x=xs))
    closed = cfg.closed_form
    rel = abs(value - closed) / abs(closed) if closed != 0 else abs(value)
    return CoulombResult(value, closed, rel, truncation_estimate(cfg, L))
