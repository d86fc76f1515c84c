"""Distributions, Pfaff systems and the curvatures of the (u, p) frame.

The frame built from two functions u, p and a sign eps is

    A = u dx + p dy,   A* = -eps p dx + eps u dy,   zeta = eps dz + dxi,

with metric duals A_bar = (-u, -p, 0, 0), A*_bar = (eps p, -eps u, 0, 0) and
zeta_bar = (0, 0, -eps, 1). ``rate(f) = f_xi - eps f_z`` is the derivative
along zeta_bar; the curvature factor is R = u rate(p) - p rate(u).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, SingularAmplitudeError, UndefinedScaleError
from .fields import ONE, ZERO, Event, ScalarField, VectorField, as_field
from .geometry import (KForm, codifferential, directional_derivative, ext_d, hodge, interior,
                       lie_bracket, wedge)

INDEPENDENCE_TOL = 1e-8


def _stack(values, shape) -> np.ndarray:
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in values])


def _eval_vectors(vectors: Sequence[VectorField], p) -> np.ndarray:
    """Array of shape (k, 4, ...) with the k vectors at p."""
    p = Event.of(p)
    return np.stack([_stack(V.four()(p), p.shape) for V in vectors])


def _moved(M: np.ndarray) -> np.ndarray:
    # (k, n, ...) -> (..., k, n)
    return np.moveaxis(np.moveaxis(M, 0, -1), 0, -1)


def _max_minor(M: np.ndarray) -> np.ndarray:
    """Largest |k x k minor| of a (k, 4, ...) stack of row vectors."""
    k = M.shape[0]
    if k > 4:
        return np.zeros(M.shape[2:])
    out = np.zeros(M.shape[2:])
    for cols in combinations(range(4), k):
        out = np.maximum(out, np.abs(np.linalg.det(_moved(M[:, list(cols)]))))
    return out


def _singular_ratio(M: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(_moved(M), compute_uv=False)
    top = s[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(top > 0, s[..., -1] / np.where(top > 0, top, 1.0), 0.0)


class Verdict(NamedTuple):
    holds: bool
    witness: float


class Distribution:
    """An ordered family of vector fields spanning a subspace at every point."""

    def __init__(self, vectors: Sequence[VectorField]):
        vectors = [V.four() for V in vectors]
        if not 1 <= len(vectors) <= 4:
            raise ConfigurationError("a distribution needs between 1 and 4 vector fields")
        self.vectors = tuple(vectors)

    def __len__(self):
        return len(self.vectors)

    def independence(self, p) -> np.ndarray:
        """Smallest over largest singular value of the component matrix."""
        return _singular_ratio(_eval_vectors(self.vectors, p))

    def is_independent(self, p, tol: float = INDEPENDENCE_TOL) -> bool:
        return bool(np.all(self.independence(p) > tol))

    def contains(self, Y: VectorField, p, tol: float = INDEPENDENCE_TOL) -> np.ndarray:
        """Pointwise test that Y lies in the span."""
        M = _eval_vectors(self.vectors + (Y.four(),), p)
        s = np.linalg.svd(_moved(M), compute_uv=False)
        base = np.linalg.svd(_moved(M[:-1]), compute_uv=False)[..., 0]
        scale = np.maximum(base, 1.0)
        return s[..., len(self.vectors)] <= tol * scale


class PfaffSystem:
    """An ordered family of 1-forms."""

    def __init__(self, forms: Sequence[KForm]):
        if any(f.degree != 1 for f in forms):
            raise ConfigurationError("a Pfaff system consists of 1-forms")
        if not 1 <= len(forms) <= 4:
            raise ConfigurationError("a Pfaff system needs between 1 and 4 forms")
        self.forms = tuple(forms)

    def __len__(self):
        return len(self.forms)

    def independence(self, p) -> np.ndarray:
        p = Event.of(p)
        M = np.stack([_stack([f[i](p) for i in range(4)], p.shape) for f in self.forms])
        return _singular_ratio(M)


def integrability_vec(D: Distribution, p, tol: float = 1e-10) -> Verdict:
    """[X_i, X_j] ^ X_1 ^ ... ^ X_k = 0 for all pairs, tested through minors."""
    witness = 0.0
    for i, j in combinations(range(len(D)), 2):
        br = lie_bracket(D.vectors[i], D.vectors[j])
        M = _eval_vectors((br,) + D.vectors, p)
        witness = max(witness, float(np.max(_max_minor(M))))
    return Verdict(witness <= tol, witness)


def integrability_pfaff(S: PfaffSystem, p, tol: float = 1e-10) -> Verdict:
    """d alpha^m ^ alpha^1 ^ ... ^ alpha^k = 0 for every m."""
    if 2 + len(S) > 4:
        return Verdict(True, 0.0)
    top = S.forms[0]
    for f in S.forms[1:]:
        top = wedge(top, f)
    witness = 0.0
    for f in S.forms:
        witness = max(witness, wedge(ext_d(f), top).max_abs(p))
    return Verdict(witness <= tol, witness)


@dataclass(frozen=True)
class PhLOFrame:
    u: ScalarField
    p: ScalarField
    eps: int = 1

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ConfigurationError(f"eps must be +1 or -1, got {self.eps}")
        object.__setattr__(self, "u", as_field(self.u))
        object.__setattr__(self, "p", as_field(self.p))

    def rate(self, f) -> ScalarField:
        """Derivative along zeta_bar: f_xi - eps f_z."""
        return directional_derivative(self.zeta_bar, f)

    @cached_property
    def A(self) -> KForm:
        return KForm.one_form([self.u, self.p, ZERO, ZERO])

    @cached_property
    def A_star(self) -> KForm:
        e = self.eps
        return KForm.one_form([-e * self.p, e * self.u, ZERO, ZERO])

    @cached_property
    def zeta(self) -> KForm:
        return KForm.one_form([ZERO, ZERO, as_field(self.eps), ONE])

    @cached_property
    def A_bar(self) -> VectorField:
        return VectorField([-self.u, -self.p, ZERO, ZERO])

    @cached_property
    def A_star_bar(self) -> VectorField:
        e = self.eps
        return VectorField([e * self.p, -e * self.u, ZERO, ZERO])

    @cached_property
    def zeta_bar(self) -> VectorField:
        return VectorField([ZERO, ZERO, as_field(-self.eps), ONE])

    @cached_property
    def a(self) -> ScalarField:
        return self.rate(self.u)

    @cached_property
    def b(self) -> ScalarField:
        return self.rate(self.p)

    @cached_property
    def R(self) -> ScalarField:
        return self.u * self.b - self.p * self.a

    @cached_property
    def K2(self) -> ScalarField:
        return self.a * self.a + self.b * self.b

    @cached_property
    def phi2(self) -> ScalarField:
        return self.u * self.u + self.p * self.p

    @cached_property
    def half_rate_phi2(self) -> ScalarField:
        """1/2 rate(u^2 + p^2)."""
        return self.u * self.a + self.p * self.b

    @cached_property
    def G(self) -> KForm:
        return wedge(self.A, self.zeta)

    @cached_property
    def G_star(self) -> KForm:
        return wedge(self.A_star, self.zeta)


def curvature_factor(frame: PhLOFrame, p):
    return frame.R(Event.of(p))


def dual_pairing(alpha: KForm, X: VectorField) -> ScalarField:
    X = X.four()
    out = ZERO
    for i in range(4):
        out = out + alpha[i] * X[i]
    return out


def _projected_bracket(X, Y, duals, complement) -> VectorField:
    br = lie_bracket(X, Y)
    out = VectorField([ZERO] * 4)
    for alpha, Z in zip(duals, complement):
        out = out + Z.four() * dual_pairing(alpha, br)
    return out


def curvature_form(D: Distribution, dual: PfaffSystem, complement: Distribution,
                   sample, tol: float = 1e-10) -> dict[tuple[int, int], VectorField]:
    """Omega(X_i, X_j) = <alpha^m, [X_i, X_j]> Y_m for i < j.

    ``dual`` must annihilate D and be dual to ``complement`` at the sample
    points, otherwise ConfigurationError is raised.
    """
    if len(dual) != len(complement):
        raise ConfigurationError("dual forms and complement vectors differ in number")
    sample = Event.of(sample)
    worst = 0.0
    for alpha in dual.forms:
        for X in D.vectors:
            worst = max(worst, float(np.max(np.abs(dual_pairing(alpha, X)(sample)))))
    for m, alpha in enumerate(dual.forms):
        for n, Y in enumerate(complement.vectors):
            val = dual_pairing(alpha, Y)(sample)
            worst = max(worst, float(np.max(np.abs(val - (1.0 if m == n else 0.0)))))
    if worst > tol:
        raise ConfigurationError(f"duality precondition violated by {worst:.3e}")
    return {(i, j): _projected_bracket(D.vectors[i], D.vectors[j], dual.forms, complement.vectors)
            for i, j in combinations(range(len(D)), 2)}


class Relation(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def violation(self) -> float:
        return float(np.max(np.abs(np.asarray(self.lhs) - np.asarray(self.rhs))))


class CurvatureEnergyReport(NamedTuple):
    curvatures: dict       # the four contractions Z_Omega, Z*_Omega, Z_Omega*, Z*_Omega*
    relations: dict        # name -> Relation

    @property
    def max_violation(self) -> float:
        return max(r.violation for r in self.relations.values())


def frame_curvatures(frame: PhLOFrame) -> dict[str, VectorField]:
    """Omega and Omega* evaluated on (A_bar, zeta_bar) and (A*_bar, zeta_bar).

    Omega uses the dual pair (-A*/phi^2, A*_bar) and Omega* the pair
    (-A/phi^2, A_bar); both Pfaff forms annihilate zeta_bar.
    """
    inv = ONE / frame.phi2
    a_dual, a_star_dual = frame.A * (-inv), frame.A_star * (-inv)
    om = lambda X: _projected_bracket(X, frame.zeta_bar, [a_star_dual], [frame.A_star_bar])
    om_star = lambda X: _projected_bracket(X, frame.zeta_bar, [a_dual], [frame.A_bar])
    return {
        "Z_Omega": om(frame.A_bar),
        "Z*_Omega": om(frame.A_star_bar),
        "Z_Omega*": om_star(frame.A_bar),
        "Z*_Omega*": om_star(frame.A_star_bar),
    }


def _contract2(X: VectorField, Y: VectorField, w: KForm) -> KForm:
    """i(Y) i(X) w: insert X first, then Y."""
    return interior(Y, interior(X, w))


def energy_contractions(frame: PhLOFrame) -> dict[str, KForm]:
    """i(G_bar) dG and the three companions, with i(G_bar) = i(zeta_bar) o i(A_bar)."""
    dG, dGs = ext_d(frame.G), ext_d(frame.G_star)
    return {
        "i(G)dG": _contract2(frame.A_bar, frame.zeta_bar, dG),
        "i(G*)dG*": _contract2(frame.A_star_bar, frame.zeta_bar, dGs),
        "i(G*)dG": _contract2(frame.A_star_bar, frame.zeta_bar, dG),
        "i(G)dG*": _contract2(frame.A_bar, frame.zeta_bar, dGs),
    }


def _one_form_values(w: KForm, p) -> np.ndarray:
    p = Event.of(p)
    return _stack([w[i](p) for i in range(4)], p.shape)


def curvature_energy_relations(frame: PhLOFrame, p) -> CurvatureEnergyReport:
    """Curvature contractions against the energy-exchange 1-forms.

    R zeta and 1/2 rate(phi^2) zeta are the reference values. The codifferential
    relation is reported as delta G ^ G = delta *G ^ *G = -eps R *zeta.
    """
    p = Event.of(p)
    e = frame.eps
    Z = frame_curvatures(frame)
    G, Gs = frame.G, frame.G_star
    val = lambda w: _one_form_values(w, p)
    zeta = val(frame.zeta)
    R, half = frame.R(p), frame.half_rate_phi2(p)
    zero = np.zeros_like(zeta)
    ec = {k: val(w) for k, w in energy_contractions(frame).items()}
    rel = {
        "i(Z_Omega)G = 0": Relation(val(interior(Z["Z_Omega"], G)), zero),
        "i(Z_Omega)G* = eps R zeta": Relation(val(interior(Z["Z_Omega"], Gs)), e * R * zeta),
        "i(Z_Omega*)G* = 0": Relation(val(interior(Z["Z_Omega*"], Gs)), zero),
        "i(Z*_Omega*)G = -eps R zeta": Relation(val(interior(Z["Z*_Omega*"], G)), -e * R * zeta),
        "i(Z*_Omega)G = 0": Relation(val(interior(Z["Z*_Omega"], G)), zero),
        "i(Z*_Omega)G* = half zeta": Relation(val(interior(Z["Z*_Omega"], Gs)), half * zeta),
        "i(Z*_Omega*)G* = 0": Relation(val(interior(Z["Z*_Omega*"], Gs)), zero),
        "i(Z_Omega*)G = half zeta": Relation(val(interior(Z["Z_Omega*"], G)), half * zeta),
        "i(G)dG = half zeta": Relation(ec["i(G)dG"], half * zeta),
        "i(G*)dG* = half zeta": Relation(ec["i(G*)dG*"], half * zeta),
        "i(G*)dG = eps R zeta": Relation(ec["i(G*)dG"], e * R * zeta),
        "i(G)dG* = -eps R zeta": Relation(ec["i(G)dG*"], -e * R * zeta),
    }
    sz = hodge(frame.zeta).values(p)
    target = np.stack([np.broadcast_to(-e * R * sz[k], p.shape) for k in sorted(sz)])
    for name, w in (("delta G ^ G", wedge(codifferential(G), G)),
                    ("delta *G ^ *G", wedge(codifferential(Gs), Gs))):
        got = w.values(p)
        rel[name + " = -eps R *zeta"] = Relation(
            np.stack([np.broadcast_to(got[k], p.shape) for k in sorted(sz)]), target)
    return CurvatureEnergyReport({k: v(p) for k, v in Z.items()}, rel)


def phase_rate(frame: PhLOFrame, p):
    """rate(psi) = R / phi^2; needs a nonzero amplitude."""
    p = Event.of(p)
    phi2 = np.asarray(frame.phi2(p))
    if np.any(phi2 <= 0.0):
        raise SingularAmplitudeError("phase rate undefined where u = p = 0")
    return frame.R(p) / phi2


# nonlinear connections

class ProjectionTensor:
    """A (1,1)-tensor given by a 4x4 matrix of fields; entry [i][j] maps d_j to d_i."""

    def __init__(self, entries):
        rows = [[as_field(e) for e in row] for row in entries]
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ConfigurationError("projection tensors are 4x4")
        self.entries = tuple(tuple(r) for r in rows)

    def matrix(self, p) -> np.ndarray:
        p = Event.of(p)
        return np.stack([_stack([e(p) for e in row], p.shape) for row in self.entries])

    def transpose(self) -> "ProjectionTensor":
        return ProjectionTensor([[self.entries[j][i] for j in range(4)] for i in range(4)])

    def complement(self) -> "ProjectionTensor":
        return ProjectionTensor([[(ONE if i == j else ZERO) - self.entries[i][j] for j in range(4)]
                                 for i in range(4)])

    def __add__(self, other: "ProjectionTensor") -> "ProjectionTensor":
        return ProjectionTensor([[a + b for a, b in zip(r, s)]
                                 for r, s in zip(self.entries, other.entries)])

    def __mul__(self, k) -> "ProjectionTensor":
        return ProjectionTensor([[e * k for e in row] for row in self.entries])

    __rmul__ = __mul__

    def apply(self, X: VectorField) -> VectorField:
        X = X.four()
        return VectorField([sum((self.entries[i][j] * X[j] for j in range(4)), ZERO)
                            for i in range(4)])

    def pullback(self, alpha: KForm) -> KForm:
        """alpha o P, i.e. the starred map on 1-forms."""
        if alpha.degree != 1:
            raise ConfigurationError("pullback here acts on 1-forms")
        return KForm.one_form([sum((alpha[i] * self.entries[i][j] for i in range(4)), ZERO)
                               for j in range(4)])

    def pullback2(self, F: KForm, p) -> np.ndarray:
        """F(P., P.) as a 4x4 array at p."""
        M = self.matrix(p)
        return np.einsum("ia...,ij...,jb...->ab...", M, F.array(p), M)

    def idempotency_defect(self, p) -> float:
        M = self.matrix(p)
        return float(np.max(np.abs(np.einsum("ij...,jk...->ik...", M, M) - M)))


class Projections(NamedTuple):
    V: ProjectionTensor
    V_tilde: ProjectionTensor
    H: ProjectionTensor
    H_tilde: ProjectionTensor
    V_star: ProjectionTensor
    V_tilde_star: ProjectionTensor
    H_star: ProjectionTensor
    H_tilde_star: ProjectionTensor


def _vertical(cz: Sequence, cxi: Sequence) -> ProjectionTensor:
    """Identity on the (x, y) plane plus the given z and xi columns."""
    return ProjectionTensor([
        [ONE, ZERO, cz[0], cxi[0]],
        [ZERO, ONE, cz[1], cxi[1]],
        [ZERO] * 4,
        [ZERO] * 4,
    ])


def build_projections(u, p, eps: int) -> Projections:
    if eps not in (1, -1):
        raise ConfigurationError(f"eps must be +1 or -1, got {eps}")
    u, p = as_field(u), as_field(p)
    V = _vertical([-eps * u, -eps * p], [-u, -p])
    Vt = _vertical([p, -u], [eps * p, -eps * u])
    H, Ht = V.complement(), Vt.complement()
    return Projections(V, Vt, H, Ht, V.transpose(), Vt.transpose(), H.transpose(), Ht.transpose())


def mixed_projection(u, p, eps: int, a: float, b: float) -> ProjectionTensor:
    """V_0 + a V_1 - b V~_1 where V = V_0 + V_1 and V~ = V_0 + V~_1."""
    u, p = as_field(u), as_field(p)
    cz = [-eps * a * u - b * p, -eps * a * p + b * u]
    cxi = [-a * u - eps * b * p, -a * p + eps * b * u]
    return _vertical(cz, cxi)


class ConnectionCurvature(NamedTuple):
    curvature: VectorField      # P([H X, H Y])
    cocurvature: VectorField    # H([P X, P Y])

    def evaluate(self, p):
        return self.curvature(Event.of(p)), self.cocurvature(Event.of(p))


def connection_curvature(P: ProjectionTensor, X: VectorField, Y: VectorField) -> ConnectionCurvature:
    H = P.complement()
    return ConnectionCurvature(P.apply(lie_bracket(H.apply(X), H.apply(Y))),
                               H.apply(lie_bracket(P.apply(X), P.apply(Y))))


_DZ = VectorField([ZERO, ZERO, ONE, ZERO])
_DXI = VectorField([ZERO, ZERO, ZERO, ONE])


def coordinate_curvature(P: ProjectionTensor) -> VectorField:
    """The curvature of P on (d_z, d_xi)."""
    return connection_curvature(P, _DZ, _DXI).curvature


def trace_scale(P: ProjectionTensor, p):
    """-1/2 tr(P o H*) at p."""
    M = P.matrix(p)
    Hs = P.complement().transpose().matrix(p)
    return -0.5 * np.einsum("ij...,ji...->...", M, Hs)


def l0_squared(frame: PhLOFrame, p):
    """(u^2 + p^2) / K^2; undefined for running waves."""
    p = Event.of(p)
    K2 = np.asarray(frame.K2(p))
    if np.any(K2 <= 0.0):
        raise UndefinedScaleError("K^2 = 0: running wave, no finite scale")
    return frame.phi2(p) / K2


def projection_scale_squared(P: ProjectionTensor, p):
    """-1/2 tr(P o H*) / |curvature(d_z, d_xi)|^2 for a vertical-type projection."""
    Z = coordinate_curvature(P)(Event.of(p))
    K2 = Z[0] ** 2 + Z[1] ** 2
    if np.any(K2 <= 0.0):
        raise UndefinedScaleError("vanishing connection curvature")
    return trace_scale(P, p) / K2


def shuffling_symmetry_check(D: Distribution, Y: VectorField, sample,
                             tol: float = INDEPENDENCE_TOL) -> bool:
    """[X_i, Y] in D at every sample point while Y itself is not in D."""
    if bool(np.any(D.contains(Y, sample, tol))):
        return False
    return all(bool(np.all(D.contains(lie_bracket(X, Y), sample, tol))) for X in D.vectors)


def frame_transition(frame: PhLOFrame, p) -> np.ndarray:
    """2x2 matrix M with ([A_bar, zeta_bar], [A*_bar, zeta_bar]) = (A_bar, A*_bar) M.

    M = -1/2 (rate(phi^2) / phi^2) Id + eps rate(psi) J, J = [[0, 1], [-1, 0]].
    """
    p = Event.of(p)
    phi2 = np.asarray(frame.phi2(p))
    if np.any(phi2 <= 0.0):
        raise SingularAmplitudeError("frame degenerates where u = p = 0")
    h = frame.half_rate_phi2(p) / phi2
    w = frame.eps * frame.R(p) / phi2
    return np.array([[-h, w], [-w, -h]])


def vertical_area(P: ProjectionTensor, Z1: VectorField, Z2: VectorField, p):
    """[P*(dx) ^ P*(dy)](Z1 ^ Z2)."""
    return wedge(P.pullback(KForm.basis(0)), P.pullback(KForm.basis(1))).evaluate([Z1, Z2], p)
