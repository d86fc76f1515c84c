"""Photon-like solutions: construction, equations of motion and integral quantities.

A solution is built from an amplitude gamma f(x, y) theta(xi + eps z) made of
compact bumps and a phase psi with rate(psi) = kappa / l0, where
rate(g) = g_xi - eps g_z:

    u = gamma f theta cos(psi),   p = gamma f theta sin(psi),
    psi1 = -(eps kappa / l0) z + phase,   psi2 = (kappa / l0) xi + phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields
from functools import cached_property
from typing import Mapping, NamedTuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from . import fields
from .eed import EBState
from .errors import ConfigurationError, UndefinedScaleError
from .fields import (ONE, ZERO, Event, QuadratureSpec, ScalarField, Univariate, VectorField,
                     as_field, compose, integrate3)
from .frobenius import (PhLOFrame, Relation, build_projections, coordinate_curvature,
                        l0_squared)
from .geometry import (KForm, codifferential, ext_d, hodge2, interior, lie_derivative_form,
                       raise_all, wedge)

_W_CUTOFF = 700.0   # exp(1 - w) underflows beyond this


# bump functions

def _bump_polynomials(n: int) -> list[Polynomial]:
    """R_k with d^k/dq^k exp(1 - w) = R_k(w) exp(1 - w), w = 1/(1 - q)."""
    out = [Polynomial([1.0])]
    w2 = Polynomial([0.0, 0.0, 1.0])
    for _ in range(n):
        r = out[-1]
        out.append(w2 * (r.deriv() - r))
    return out


_POLY_CACHE: list[Polynomial] = _bump_polynomials(8)


def _bump_poly(k: int) -> Polynomial:
    global _POLY_CACHE
    if k >= len(_POLY_CACHE):
        _POLY_CACHE = _bump_polynomials(k + 4)
    return _POLY_CACHE[k]


def _bump_derivative_values(q, k: int):
    q = np.asarray(q, dtype=float)
    inside = q < 1.0
    w = 1.0 / np.where(inside, 1.0 - q, 1.0)
    live = inside & (w < _W_CUTOFF)
    ws = np.where(live, w, 0.0)
    val = np.where(live, _bump_poly(k)(ws) * np.exp(1.0 - ws), 0.0)
    return val if val.ndim else float(val)


def _bump_u(k: int = 0) -> Univariate:
    """q -> exp(1 - 1/(1 - q)) for q < 1 and 0 otherwise, with all derivatives."""
    return Univariate(lambda q: _bump_derivative_values(q, k), lambda: _bump_u(k + 1))


def bump_profile(q):
    """The normalized bump in the squared variable: 1 at q = 0, 0 for q >= 1."""
    return _bump_derivative_values(q, 0)


def bump_disk(x, y, a: float, b: float, r0: float):
    if not r0 > 0:
        raise ConfigurationError(f"disk radius must be positive, got {r0}")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return bump_profile(((x - a) ** 2 + (y - b) ** 2) / (r0 * r0))


def bump_interval(s, length: float, start: float = 0.0):
    """Bump on (start, start + length), peak 1 at the midpoint."""
    if not length > 0:
        raise ConfigurationError(f"interval length must be positive, got {length}")
    s = np.asarray(s, dtype=float)
    return bump_profile((2.0 * (s - start) / length - 1.0) ** 2)


_INF = math.inf


def disk_field(a: float, b: float, r0: float) -> ScalarField:
    x, y, _, _ = fields.coordinates()
    q = ((x - a) * (x - a) + (y - b) * (y - b)) * (1.0 / (r0 * r0))
    g = compose(_bump_u(), q)
    box = ((a - r0, a + r0), (b - r0, b + r0), (-_INF, _INF))
    return ScalarField(g.evaluate, derivative=g.derivative, support=lambda xi: box)


def window_field(eps: int, length: float, start: float) -> ScalarField:
    """theta(xi + eps z) supported on start < xi + eps z < start + length."""
    _, _, z, xi = fields.coordinates()
    s = xi + z * float(eps)
    q = (s * (2.0 / length) - (2.0 * start / length + 1.0)) ** 2
    g = compose(_bump_u(), q)

    def support(xi_val):
        lo, hi = start - xi_val, start + length - xi_val
        zr = (lo, hi) if eps > 0 else (-hi, -lo)
        return ((-_INF, _INF), (-_INF, _INF), zr)

    return ScalarField(g.evaluate, derivative=g.derivative, support=support)


# solution specs

_FAMILIES = ("psi1", "psi2")


@dataclass(frozen=True)
class SolutionSpec:
    eps: int = 1
    kappa: int = 1
    l0: float = 1.0
    gamma: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    r0: float = 1.0
    z0: float = 0.0
    family: str = "psi1"
    phase: float | ScalarField = 0.0
    phase_l0: float | None = None  # l0 used in the phase only; None means l0

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ConfigurationError(f"eps must be +1 or -1, got {self.eps}")
        if self.kappa not in (1, -1):
            raise ConfigurationError(f"kappa must be +1 or -1, got {self.kappa}")
        for name in ("l0", "gamma", "r0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {v!r}")
        if self.phase_l0 is not None and not (math.isfinite(self.phase_l0) and self.phase_l0 > 0):
            raise ConfigurationError(f"phase_l0 must be positive, got {self.phase_l0!r}")
        if self.family not in _FAMILIES:
            raise ConfigurationError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        c = tuple(float(v) for v in self.center)
        if len(c) != 2 or not all(math.isfinite(v) for v in c):
            raise ConfigurationError(f"center must be two finite numbers, got {self.center!r}")
        object.__setattr__(self, "center", c)
        if not math.isfinite(self.z0):
            raise ConfigurationError("z0 must be finite")
        if not isinstance(self.phase, ScalarField) and not math.isfinite(self.phase):
            raise ConfigurationError("phase must be finite")

    @property
    def wavelength(self) -> float:
        """Length of the window, 4 l0."""
        return 4.0 * self.l0

    def to_config(self) -> dict[str, str]:
        if isinstance(self.phase, ScalarField):
            raise ConfigurationError("field-valued phase offsets cannot be serialized")
        out = {
            "solution.eps": str(self.eps),
            "solution.kappa": str(self.kappa),
            "solution.l0": repr(float(self.l0)),
            "solution.gamma": repr(float(self.gamma)),
            "solution.center_x": repr(self.center[0]),
            "solution.center_y": repr(self.center[1]),
            "solution.r0": repr(float(self.r0)),
            "solution.z0": repr(float(self.z0)),
            "solution.family": self.family,
            "solution.phase": repr(float(self.phase)),
        }
        if self.phase_l0 is not None:
            out["solution.phase_l0"] = repr(float(self.phase_l0))
        return out

    @classmethod
    def from_config(cls, cfg: Mapping[str, object]) -> "SolutionSpec":
        """Read ``solution.*`` keys; missing keys take defaults."""
        known = {f.name for f in dc_fields(cls)} | {"center_x", "center_y"}
        raw = {}
        for key, value in cfg.items():
            if not key.startswith("solution."):
                continue
            name = key[len("solution."):]
            if name not in known:
                raise ConfigurationError(f"unknown solution key {key!r}")
            raw[name] = value
        kw: dict = {}
        try:
            for name in ("eps", "kappa"):
                if name in raw:
                    v = float(raw[name])
                    if v != int(v):
                        raise ConfigurationError(f"{name} must be an integer sign")
                    kw[name] = int(v)
            for name in ("l0", "gamma", "r0", "z0", "phase", "phase_l0"):
                if name in raw:
                    kw[name] = float(raw[name])
            if "family" in raw:
                kw["family"] = str(raw["family"]).strip()
            if "center" in raw:
                v = raw["center"]
                kw["center"] = tuple(float(t) for t in (v.split(",") if isinstance(v, str) else v))
            if "center_x" in raw or "center_y" in raw:
                kw["center"] = (float(raw.get("center_x", 0.0)), float(raw.get("center_y", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad solution value: {exc}") from None
        return cls(**kw)


@dataclass(frozen=True)
class PhLOSolution:
    """Fields u, p with the constants of the equations of motion.

    ``spec`` is None for trial fields that were not produced by build_solution.
    """

    u: ScalarField
    p: ScalarField
    eps: int
    kappa: int
    l0: float
    spec: SolutionSpec | None = None
    amplitude: ScalarField | None = field(default=None, repr=False)
    phase: ScalarField | None = field(default=None, repr=False)

    @classmethod
    def trial(cls, u, p, eps: int, kappa: int, l0: float) -> "PhLOSolution":
        return cls(as_field(u), as_field(p), eps, kappa, float(l0))

    @cached_property
    def frame(self) -> PhLOFrame:
        return PhLOFrame(self.u, self.p, self.eps)

    @cached_property
    def F(self) -> KForm:
        """eps u dx^dz + u dx^dxi + eps p dy^dz + p dy^dxi."""
        e, u, p = self.eps, self.u, self.p
        return KForm(2, {(0, 2): u * e, (0, 3): u, (1, 2): p * e, (1, 3): p})

    @cached_property
    def F_tilde(self) -> KForm:
        """-p dx^dz - eps p dx^dxi + u dy^dz + eps u dy^dxi."""
        e, u, p = self.eps, self.u, self.p
        return KForm(2, {(0, 2): -p, (0, 3): p * (-e), (1, 2): u, (1, 3): u * e})

    def support(self, xi: float):
        if self.amplitude is None or self.amplitude.support is None:
            raise ConfigurationError("this solution declares no support")
        return self.amplitude.support(xi)


def build_solution(spec: SolutionSpec) -> PhLOSolution:
    if not isinstance(spec, SolutionSpec):
        raise ConfigurationError("build_solution needs a SolutionSpec")
    _, _, z, xi = fields.coordinates()
    amp = (disk_field(spec.center[0], spec.center[1], spec.r0)
           * window_field(spec.eps, spec.wavelength, spec.z0)) * spec.gamma
    rate = spec.kappa / (spec.phase_l0 or spec.l0)
    offset = as_field(spec.phase)
    if spec.family == "psi1":
        psi = z * (-spec.eps * rate) + offset
    else:
        psi = xi * rate + offset
    u = amp * fields.cos(psi)
    p = amp * fields.sin(psi)
    return PhLOSolution(u, p, spec.eps, spec.kappa, spec.l0, spec, amp, psi)


# equations of motion

def motion_residual_form(sol: PhLOSolution) -> KForm:
    """kappa l0 L_zb F - eps F~, with the Lie derivative through Cartan's formula."""
    L = lie_derivative_form(sol.frame.zeta_bar, sol.F)
    return L * (sol.kappa * sol.l0) - sol.F_tilde * float(sol.eps)


def motion_residual_dual_form(sol: PhLOSolution) -> KForm:
    """kappa l0 L_zb F~ + eps F."""
    L = lie_derivative_form(sol.frame.zeta_bar, sol.F_tilde)
    return L * (sol.kappa * sol.l0) + sol.F * float(sol.eps)


def motion_residual_connection(sol: PhLOSolution, p) -> np.ndarray:
    """kappa l0 L_zb(V - V0) - eps (V~ - V0) as a 4x4 array at p.

    zeta_bar has constant components, so the Lie derivative of a (1,1)-tensor
    along it is the componentwise derivative.
    """
    fr = sol.frame
    P = build_projections(sol.u, sol.p, sol.eps)
    out = []
    for i in range(4):
        row = []
        for j in range(4):
            v1 = P.V.entries[i][j] - (ONE if (i == j and i < 2) else ZERO)
            vt1 = P.V_tilde.entries[i][j] - (ONE if (i == j and i < 2) else ZERO)
            row.append(fr.rate(v1) * (sol.kappa * sol.l0) - vt1 * float(sol.eps))
        out.append(row)
    p = Event.of(p)
    return np.array([[np.broadcast_to(np.asarray(e(p), dtype=float), p.shape) for e in r] for r in out])


class ScalarResidual(NamedTuple):
    r_u: np.ndarray
    r_p: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.r_u)), np.max(np.abs(self.r_p))))


def motion_residual_scalar(sol: PhLOSolution, p) -> ScalarResidual:
    """r_u = kappa l0 rate(u) + p, r_p = kappa l0 rate(p) - u."""
    p = Event.of(p)
    fr = sol.frame
    k = sol.kappa * sol.l0
    return ScalarResidual(k * fr.a(p) + sol.p(p), k * fr.b(p) - sol.u(p))


def motion_residual_scalar_fd(sol: PhLOSolution, p, h: float = 1e-3) -> ScalarResidual:
    """The same residual with central differences along zeta_bar."""
    p = Event.of(p)
    shift = lambda t: Event(p.x, p.y, p.z - sol.eps * t, p.xi + t)
    rate = lambda f: (f(shift(h)) - f(shift(-h))) / (2 * h)
    k = sol.kappa * sol.l0
    return ScalarResidual(k * rate(sol.u) + sol.p(p), k * rate(sol.p) - sol.u(p))


class EnergyMomentumResidual(NamedTuple):
    amplitude_rate: np.ndarray   # rate(u^2 + p^2)
    rotation: np.ndarray         # R - (kappa / l0)(u^2 + p^2)


def energy_momentum_residuals(sol: PhLOSolution, p) -> EnergyMomentumResidual:
    p = Event.of(p)
    fr = sol.frame
    return EnergyMomentumResidual(2.0 * fr.half_rate_phi2(p),
                                  fr.R(p) - sol.kappa / sol.l0 * fr.phi2(p))


def _rate_form(sol: PhLOSolution, w: KForm) -> KForm:
    return w.map(sol.frame.rate)


def lagrangian_density(sol: PhLOSolution, p):
    """1/4 (ek l0 L F - F~).F~^ - 1/4 (ek l0 L F~ + F).F^, full index sums.

    Zero for every (u, p), not only on solutions: F and F~ are null and the
    rate terms are orthogonal to them. Use ``form_lagrangian`` for general F.
    """
    return form_lagrangian(sol.F, sol.F_tilde, sol.eps, sol.kappa, sol.l0, p)


def form_lagrangian(F: KForm, F_tilde: KForm, eps: int, kappa: int, l0: float, p):
    """The same density for an arbitrary pair of 2-forms."""
    p = Event.of(p)
    rate = lambda w: w.map(lambda f: f.derivative(fields.XI) - f.derivative(fields.Z) * float(eps))
    k = eps * kappa * l0
    Fm, Ft = F.array(p), F_tilde.array(p)
    LF, LFt = rate(F).array(p), rate(F_tilde).array(p)
    contract = lambda a, b: np.einsum("ab...,ab...->...", a, raise_all(b, 2))
    return 0.25 * contract(k * LF - Ft, Ft) - 0.25 * contract(k * LFt + Fm, Fm)


def lagrangian_orthogonality(sol: PhLOSolution, p):
    """(zb . d F_ab) F~^ab and (zb . d F~_ab) F^ab."""
    p = Event.of(p)
    F, Ft = sol.F.array(p), sol.F_tilde.array(p)
    LF, LFt = _rate_form(sol, sol.F).array(p), _rate_form(sol, sol.F_tilde).array(p)
    contract = lambda a, b: np.einsum("ab...,ab...->...", a, raise_all(b, 2))
    return contract(LF, Ft), contract(LFt, F)


# amplitude and phase

class AmplitudePhase(NamedTuple):
    amplitude: np.ndarray | float
    phase: np.ndarray | float | None   # None (scalar) or masked where the amplitude vanishes


def amplitude_phase(u, p) -> AmplitudePhase:
    """(sqrt(u^2 + p^2), atan2(p, u)) with the phase on (-pi, pi]."""
    u, p = np.asarray(u, dtype=float), np.asarray(p, dtype=float)
    amp = np.hypot(u, p)
    psi = np.arctan2(p, u)
    psi = np.where(psi <= -np.pi, np.pi, psi)
    if amp.ndim == 0:
        return AmplitudePhase(float(amp), None if amp == 0 else float(psi))
    return AmplitudePhase(amp, np.ma.masked_where(amp == 0, psi))


def from_amplitude_phase(amplitude, phase):
    amplitude, phase = np.asarray(amplitude, dtype=float), np.ma.filled(np.ma.asarray(phase, dtype=float), 0.0)
    return amplitude * np.cos(phase), amplitude * np.sin(phase)


# integral quantities

def energy_density(sol: PhLOSolution) -> ScalarField:
    if sol.amplitude is not None:
        return sol.amplitude * sol.amplitude
    return sol.frame.phi2


def integral_energy(sol: PhLOSolution, quad: QuadratureSpec, xi: float = 0.0) -> float:
    return integrate3(energy_density(sol), quad, xi)


class PlanckAction(NamedTuple):
    E: float
    T: float
    h: float                 # E T
    h_four_volume: float     # integral of (l0/c) dA ^ A ^ zeta over R^3 x [xi0, xi0 + 4 l0]
    orientation: int         # eps kappa

    @property
    def relative_gap(self) -> float:
        """|orientation * h_four_volume - h| / |h|."""
        return abs(self.orientation * self.h_four_volume - self.h) / abs(self.h)


def frobenius_four_form(sol: PhLOSolution) -> KForm:
    fr = sol.frame
    return wedge(wedge(ext_d(fr.A), fr.A), fr.zeta)


def planck_action(sol: PhLOSolution, quad: QuadratureSpec, xi: float = 0.0,
                  time_nodes: int = 9, c: float | None = None) -> PlanckAction:
    c = fields.C if c is None else c
    if time_nodes < 3 or time_nodes % 2 == 0:
        raise ConfigurationError("time_nodes must be odd and at least 3")
    E = integral_energy(sol, quad, xi)
    T = 4.0 * sol.l0 / c
    density = frobenius_four_form(sol)[0, 1, 2, 3] * (sol.l0 / c)
    ts = np.linspace(xi, xi + 4.0 * sol.l0, time_nodes)
    slices = []
    for t in ts:
        box = sol.support(t)
        if any(not hi > lo for lo, hi in box):
            slices.append(0.0)
            continue
        q = QuadratureSpec(box=box, rule=quad.rule, resolution=quad.resolution)
        slices.append(integrate3(density, q, t))
    h4 = float(simpson(np.array(slices), x=ts))
    return PlanckAction(E, T, E * T, h4, sol.eps * sol.kappa)


class Screwline(NamedTuple):
    curvature: float
    torsion: float


def screwline(sol: PhLOSolution, point) -> Screwline:
    """Curvature and torsion of the helix through a disk point, b = 2 l0 / pi."""
    point = Event.of(point)
    A = sol.amplitude(point) if sol.amplitude is not None else np.hypot(sol.u(point), sol.p(point))
    return screwline_from_amplitude(A, sol.l0, sol.kappa)


def screwline_from_amplitude(A, l0: float, kappa: int) -> Screwline:
    b = 2.0 * l0 / math.pi
    den = np.asarray(A, dtype=float) ** 2 + b * b
    return Screwline(A / den, kappa * b / den)


def recovered_l0(sol: PhLOSolution, points) -> np.ndarray:
    """sqrt((u^2 + p^2) / K^2) at each point."""
    return np.sqrt(l0_squared(sol.frame, points))


def example_solution_2_4(profile: ScalarField, l0: float, eps: int, kappa: int,
                         const: float = 0.0) -> EBState:
    """E = phi (cos t, sin t, 0), B = eps phi (sin t, -cos t, 0), t = -kappa z / l0 + const.

    ``profile`` is phi, expected to depend on (x, y, xi + eps z) only.
    """
    if eps not in (1, -1) or kappa not in (1, -1):
        raise ConfigurationError("eps and kappa must be +1 or -1")
    if not l0 > 0:
        raise ConfigurationError("l0 must be positive")
    _, _, z, _ = fields.coordinates()
    t = z * (-kappa / l0) + const
    phi = as_field(profile)
    c, s = fields.cos(t), fields.sin(t)
    E = VectorField([phi * c, phi * s, ZERO])
    B = VectorField([phi * s * eps, phi * c * (-eps), ZERO])
    return EBState(E, B)


# structural identities

def null_invariants(sol: PhLOSolution, p) -> dict[str, float]:
    F, Ft = sol.F, sol.F_tilde
    return {"F^F": wedge(F, F).max_abs(p), "F^F~": wedge(F, Ft).max_abs(p),
            "F~^F~": wedge(Ft, Ft).max_abs(p)}


def projection_annihilation(sol: PhLOSolution, p) -> dict[str, float]:
    """Largest entry of P*(F) for the eight combinations of projection and field."""
    P = build_projections(sol.u, sol.p, sol.eps)
    out = {}
    for pname in ("V", "H", "V_tilde", "H_tilde"):
        proj = getattr(P, pname)
        for fname, F in (("F", sol.F), ("F~", sol.F_tilde)):
            out[f"{pname}*({fname})"] = float(np.max(np.abs(proj.pullback2(F, p))))
    return out


def exchange_relations(frame: PhLOFrame, p) -> dict[str, Relation]:
    """Contractions of the connection curvatures Z1, Z2 into F = A^zeta and F~ = A*^zeta.

    i(Z1)F = i(Z2)F~ = -eps/2 rate(phi^2) zeta and i(Z1)F~ = -i(Z2)F = -R zeta.
    """
    p = Event.of(p)
    P = build_projections(frame.u, frame.p, frame.eps)
    Z1, Z2 = coordinate_curvature(P.V), coordinate_curvature(P.V_tilde)
    F, Ft = frame.G, frame.G_star
    vals = lambda w: np.stack([np.broadcast_to(np.asarray(w[i](p), dtype=float), p.shape)
                               for i in range(4)])
    zeta = vals(frame.zeta)
    e = frame.eps
    i1F, i2Ft = vals(interior(Z1, F)), vals(interior(Z2, Ft))
    i1Ft, i2F = vals(interior(Z1, Ft)), vals(interior(Z2, F))
    return {
        "i(Z1)F = i(Z2)F~": Relation(i1F, i2Ft),
        "i(Z1)F~ = -i(Z2)F": Relation(i1Ft, -i2F),
        "i(Z1)F = -eps half zeta": Relation(i1F, -e * frame.half_rate_phi2(p) * zeta),
        "i(Z1)F~ = -R zeta": Relation(i1Ft, -frame.R(p) * zeta),
    }


def codifferential_closure(sol: PhLOSolution, p) -> float:
    """Largest component of d(delta F ^ F)."""
    F = sol.F
    return ext_d(wedge(codifferential(F), F)).max_abs(p)


def dual_consistency(sol: PhLOSolution, p) -> float:
    """Largest entry of F~ - *F."""
    return (sol.F_tilde - hodge2(sol.F)).max_abs(p)


def support_points(sol: PhLOSolution, n: int, rng: np.random.Generator, xi: float = 0.0,
                   min_fraction: float = 1e-3) -> Event:
    """n random events with amplitude above min_fraction of its peak."""
    if sol.amplitude is None:
        raise UndefinedScaleError("trial fields have no declared support")
    box = sol.support(xi)
    peak = sol.spec.gamma if sol.spec is not None else 1.0
    pts: list[np.ndarray] = []
    while sum(len(a) for a in pts) < n:
        cand = np.stack([rng.uniform(lo, hi, 4 * n) for lo, hi in box])
        amp = sol.amplitude(Event(cand[0], cand[1], cand[2], np.full(4 * n, float(xi))))
        pts.append(cand[:, amp > min_fraction * peak].T)
    arr = np.concatenate(pts)[:n].T
    return Event(arr[0], arr[1], arr[2], np.full(n, float(xi)))
