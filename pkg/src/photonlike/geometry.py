"""Exterior calculus on Minkowski space with eta = diag(-1, -1, -1, +1).

Forms carry ScalarField components on strictly increasing multi-indices over
the axes 0..3 = (x, y, z, xi). The volume form is dx^dy^dz^dxi and the
Levi-Civita symbol has eps_{0123} = +1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError
from .fields import ZERO, Event, ScalarField, VectorField, as_field

ETA_DIAG = np.array([-1.0, -1.0, -1.0, 1.0])
ETA = np.diag(ETA_DIAG)
ETA_INV = np.diag(1.0 / ETA_DIAG)


@dataclass(frozen=True)
class Metric:
    """The flat metric; kept as a value so callers can pass it around explicitly."""

    signature: tuple[int, int, int, int] = (-1, -1, -1, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.signature, dtype=float))

    @property
    def inverse(self) -> np.ndarray:
        return np.diag(1.0 / np.asarray(self.signature, dtype=float))

    def inner(self, a, b):
        """eta(a, b) for vectors given as arrays with the component axis first."""
        d = np.asarray(self.signature, dtype=float).reshape((4,) + (1,) * (np.ndim(a) - 1))
        return np.sum(d * np.asarray(a) * np.asarray(b), axis=0)


MINKOWSKI = Metric()


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def levi_civita(*idx) -> int:
    return permutation_sign(idx) if len(idx) == 4 else 0


def _metric_weight(index) -> float:
    w = 1.0
    for i in index:
        w *= ETA_DIAG[i]
    return w


class KForm:
    """Differential k-form with field (or constant) components.

    Components are keyed by increasing index tuples; unsorted keys are accepted
    and reordered with the permutation sign.
    """

    __slots__ = ("degree", "_components")

    def __init__(self, degree: int, components: Mapping | None = None):
        if degree not in (0, 1, 2, 3, 4):
            raise DomainError(f"form degree must be 0..4, got {degree}")
        self.degree = degree
        comps: dict[tuple[int, ...], ScalarField] = {}
        for idx, value in (components or {}).items():
            idx = (idx,) if isinstance(idx, (int, np.integer)) else tuple(int(i) for i in idx)
            if len(idx) != degree or any(i not in (0, 1, 2, 3) for i in idx):
                raise DomainError(f"index {idx} does not fit a {degree}-form")
            sign = permutation_sign(idx)
            if sign == 0:
                continue
            key = tuple(sorted(idx))
            term = as_field(value) * float(sign)
            comps[key] = comps[key] + term if key in comps else term
        self._components = {k: v for k, v in comps.items() if not v.is_zero}

    @classmethod
    def basis(cls, *axes: int) -> "KForm":
        """dx^{a1} ^ ... ^ dx^{ak}."""
        return cls(len(axes), {tuple(axes): 1.0})

    @classmethod
    def one_form(cls, coefficients: Iterable) -> "KForm":
        return cls(1, {(i,): c for i, c in enumerate(coefficients)})

    @classmethod
    def scalar(cls, f) -> "KForm":
        return cls(0, {(): f})

    @classmethod
    def volume(cls) -> "KForm":
        return cls.basis(0, 1, 2, 3)

    @property
    def components(self) -> Mapping[tuple[int, ...], ScalarField]:
        return MappingProxyType(self._components)

    def __getitem__(self, idx) -> ScalarField:
        idx = (idx,) if isinstance(idx, (int, np.integer)) else tuple(idx)
        sign = permutation_sign(idx)
        if sign == 0:
            return ZERO
        f = self._components.get(tuple(sorted(idx)), ZERO)
        return f if sign > 0 else -f

    def values(self, p) -> dict[tuple[int, ...], np.ndarray]:
        """Component values at p for every increasing multi-index (zeros included)."""
        p = Event.of(p)
        shape = p.shape
        out = {}
        for idx in itertools.combinations(range(4), self.degree):
            f = self._components.get(idx)
            out[idx] = np.zeros(shape) if f is None else np.broadcast_to(f(p), shape).astype(float)
        return out

    def array(self, p) -> np.ndarray:
        """Fully antisymmetric component tensor, shape (4,)*k + batch shape."""
        p = Event.of(p)
        shape = p.shape
        out = np.zeros((4,) * self.degree + shape)
        for idx, f in self._components.items():
            val = np.broadcast_to(f(p), shape)
            for perm in itertools.permutations(range(self.degree)):
                key = tuple(idx[i] for i in perm)
                out[key] = permutation_sign(perm) * val
        return out

    def max_abs(self, p) -> float:
        vals = list(self.values(p).values())
        return float(max(np.max(np.abs(v)) for v in vals)) if vals else 0.0

    def evaluate(self, vectors, p):
        """w(X1, ..., Xk) at p for vectors given as VectorFields or 4-arrays."""
        if len(vectors) != self.degree:
            raise DomainError(f"a {self.degree}-form takes {self.degree} vectors")
        p = Event.of(p)
        vals = [(v.four()(p) if isinstance(v, VectorField) else np.asarray(v, dtype=float)) for v in vectors]
        total = 0.0
        for idx, f in self._components.items():
            if self.degree == 0:
                total = total + f(p)
                continue
            m = np.stack([np.stack(np.broadcast_arrays(*[vals[j][i] for j in range(self.degree)]))
                          for i in idx])
            m = np.moveaxis(m, (0, 1), (-2, -1))
            total = total + f(p) * np.linalg.det(m)
        return total

    def map(self, fn) -> "KForm":
        return KForm(self.degree, {k: fn(v) for k, v in self._components.items()})

    def __add__(self, other: "KForm") -> "KForm":
        if other.degree != self.degree:
            raise DomainError("cannot add forms of different degree")
        comps = dict(self._components)
        for k, v in other._components.items():
            comps[k] = comps[k] + v if k in comps else v
        return KForm(self.degree, comps)

    def __neg__(self):
        return self.map(lambda f: -f)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __mul__(self, s) -> "KForm":
        s = as_field(s)
        return self.map(lambda f: s * f)

    __rmul__ = __mul__

    def __repr__(self):
        return f"<KForm degree={self.degree} indices={sorted(self._components)}>"


def wedge(a: KForm, b: KForm) -> KForm:
    if a.degree + b.degree > 4:
        raise DomainError(f"wedge of degrees {a.degree} and {b.degree} exceeds 4")
    comps: dict = {}
    for I, fa in a.components.items():
        for J, fb in b.components.items():
            K = I + J
            sign = permutation_sign(K)
            if sign == 0:
                continue
            key = tuple(sorted(K))
            term = fa * fb * float(sign)
            comps[key] = comps[key] + term if key in comps else term
    return KForm(a.degree + b.degree, comps)


def inner(a: KForm, b: KForm) -> ScalarField:
    """eta(a, b) = sum over increasing I of a_I b^I."""
    if a.degree != b.degree:
        raise DomainError("inner product needs equal degrees")
    out = ZERO
    for I, fa in a.components.items():
        if I in b.components:
            out = out + fa * b.components[I] * _metric_weight(I)
    return out


def hodge(w: KForm) -> KForm:
    """Hodge star fixed by a ^ *b = -eta(a, b) vol for every degree."""
    comps = {}
    for I, f in w.components.items():
        J = tuple(i for i in range(4) if i not in I)
        coeff = -levi_civita(*(I + J)) * _metric_weight(I)
        comps[J] = f * coeff
    return KForm(4 - w.degree, comps)


def hodge2(F: KForm) -> KForm:
    """(*F)_{mn} = -1/2 eps_{mn}^{sr} F_{sr} on 2-forms."""
    if F.degree != 2:
        raise DomainError("hodge2 takes a 2-form")
    return hodge(F)


def _as_vector(X) -> VectorField:
    if isinstance(X, VectorField):
        return X.four()
    return VectorField([float(c) for c in np.asarray(X, dtype=float)]).four()


def interior(X, w: KForm) -> KForm:
    """Contraction of X into the first slot of w."""
    if w.degree == 0:
        raise DomainError("interior product of a 0-form is undefined")
    X = _as_vector(X)
    comps: dict = {}
    for I, f in w.components.items():
        for pos, i in enumerate(I):
            if X[i].is_zero:
                continue
            J = I[:pos] + I[pos + 1:]
            term = X[i] * f * (-1.0) ** pos
            comps[J] = comps[J] + term if J in comps else term
    return KForm(w.degree - 1, comps)


def ext_d(w: KForm) -> KForm:
    if w.degree >= 4:
        raise DomainError("exterior derivative of a 4-form is zero-dimensional here")
    comps: dict = {}
    for I, f in w.components.items():
        for m in range(4):
            if m in I:
                continue
            sign = (-1.0) ** sum(1 for i in I if i < m)
            key = tuple(sorted(I + (m,)))
            term = f.derivative(m) * sign
            comps[key] = comps[key] + term if key in comps else term
    return KForm(w.degree + 1, comps)


def codifferential(w: KForm) -> KForm:
    """delta = * d * (no extra sign)."""
    return hodge(ext_d(hodge(w)))


def directional_derivative(X, f) -> ScalarField:
    X = _as_vector(X)
    f = as_field(f)
    out = ZERO
    for nu in range(4):
        out = out + X[nu] * f.derivative(nu)
    return out


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^mu = X^nu d_nu Y^mu - Y^nu d_nu X^mu."""
    X, Y = _as_vector(X), _as_vector(Y)
    return VectorField([directional_derivative(X, Y[m]) - directional_derivative(Y, X[m])
                        for m in range(4)])


def lie_derivative_form(X, w: KForm) -> KForm:
    """Cartan formula L_X w = i(X) dw + d(i(X) w)."""
    X = _as_vector(X)
    if w.degree == 0:
        return KForm.scalar(directional_derivative(X, w[()]))
    out = ext_d(interior(X, w))
    if w.degree < 4:
        out = out + interior(X, ext_d(w))
    return out


def lower_index(obj, positions: Iterable[int] | None = None):
    """Lower indices with eta.

    A VectorField becomes a 1-form; for an ndarray the given axes (each of
    length 4) are lowered.
    """
    if isinstance(obj, VectorField):
        v = obj.four()
        return KForm.one_form([v[i] * ETA_DIAG[i] for i in range(4)])
    return _scale_axes(np.asarray(obj, dtype=float), positions, ETA_DIAG)


def raise_index(obj, positions: Iterable[int] | None = None):
    """Inverse of lower_index: a 1-form becomes a VectorField; arrays as above."""
    if isinstance(obj, KForm):
        if obj.degree != 1:
            raise DomainError("only 1-forms raise to vector fields")
        return VectorField([obj[i] * (1.0 / ETA_DIAG[i]) for i in range(4)])
    return _scale_axes(np.asarray(obj, dtype=float), positions, 1.0 / ETA_DIAG)


def _scale_axes(arr: np.ndarray, positions, diag: np.ndarray) -> np.ndarray:
    positions = (0,) if positions is None else tuple(positions)
    out = arr
    for ax in positions:
        if out.shape[ax] != 4:
            raise DomainError(f"axis {ax} has length {out.shape[ax]}, expected 4")
        shape = [1] * out.ndim
        shape[ax] = 4
        out = out * diag.reshape(shape)
    return out


def raise_all(arr: np.ndarray, k: int) -> np.ndarray:
    """Raise the first k index slots of a component array."""
    return raise_index(arr, range(k))


def bivector_contraction(F: KForm, H: KForm, p) -> np.ndarray:
    """sum over a<b of F^{ab} H_{ab mu}, i.e. i(F-bar) H, shape (4, ...)."""
    if F.degree != 2 or H.degree != 3:
        raise DomainError("bivector_contraction takes a 2-form and a 3-form")
    Fu = raise_all(F.array(p), 2)
    return 0.5 * np.einsum("ab...,abm...->m...", Fu, H.array(p))
