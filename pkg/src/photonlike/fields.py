"""Fields over R^4 with coordinates (x, y, z, xi), xi = c*t.

Evaluators are vectorised: every field is a callable of the four coordinate
arrays and broadcasts like a numpy ufunc. Derivatives are analytic whenever the
field was assembled from analytic pieces (coordinates, constants, arithmetic,
elementary functions, user-supplied gradients) and fall back to central finite
differences otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigurationError, DomainError, NumericalDomainError

#: Speed of light. xi = C * t, so C only rescales reported times.
C = 1.0
DEFAULT_FD_STEP = 1e-4

X, Y, Z, XI = 0, 1, 2, 3
AXIS_NAMES = ("x", "y", "z", "xi")


def speed_of_light() -> float:
    return C


class _EventTuple(NamedTuple):
    x: float
    y: float
    z: float
    xi: float


class Event(_EventTuple):
    """A point of R^4. Coordinates may also be arrays of matching shape."""

    __slots__ = ()

    def __new__(cls, x, y, z, xi):
        coords = []
        for c in (x, y, z, xi):
            c = float(c) if np.isscalar(c) else np.asarray(c, dtype=float)
            if not np.all(np.isfinite(c)):
                raise NumericalDomainError("event coordinates must be finite")
            coords.append(c)
        return super().__new__(cls, *coords)

    @classmethod
    def of(cls, p) -> "Event":
        return p if isinstance(p, Event) else cls(*p)

    @property
    def shape(self) -> tuple:
        return np.broadcast_shapes(*(np.shape(c) for c in self))

    def shifted(self, axis: int, h: float) -> "Event":
        coords = list(self)
        coords[axis] = coords[axis] + h
        return Event(*coords)

    def take(self, index) -> "Event":
        """Select points out of an array-valued event."""
        shape = self.shape
        return Event(*(np.broadcast_to(c, shape)[index] for c in self))


def _filled(value: float, coords) -> float | np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
    if shape == ():
        return float(value)
    return np.full(shape, float(value))


def _box_union(a, b):
    return tuple((min(p[0], q[0]), max(p[1], q[1])) for p, q in zip(a, b))


def _box_intersection(a, b):
    return tuple((max(p[0], q[0]), min(p[1], q[1])) for p, q in zip(a, b))


@dataclass(frozen=True)
class Univariate:
    """A real function of one variable that knows its own derivative."""

    func: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[], "Univariate"]


def _sin_u() -> Univariate:
    return Univariate(np.sin, _cos_u)


def _cos_u() -> Univariate:
    return Univariate(np.cos, lambda: Univariate(lambda t: -np.sin(t), lambda: _scaled_u(-1.0, _cos_u())))


def _scaled_u(k: float, g: Univariate) -> Univariate:
    return Univariate(lambda t: k * g.func(t), lambda: _scaled_u(k, g.derivative()))


def _exp_u() -> Univariate:
    return Univariate(np.exp, _exp_u)


class ScalarField:
    """Immutable real field on R^4.

    Parameters
    ----------
    func : callable
        ``func(x, y, z, xi)`` returning values; must broadcast over arrays.
    grad : callable, optional
        ``grad(x, y, z, xi)`` returning the four partial derivatives.
    fd_step : float
        Step used for central differences when no analytic derivative exists.
    derivative : callable, optional
        ``derivative(axis)`` returning the partial derivative as another
        ScalarField. Takes precedence over ``grad`` and allows derivatives of
        any order to stay analytic.
    support : callable, optional
        ``support(xi)`` returning a spatial box ``((x0, x1), (y0, y1), (z0, z1))``
        outside of which the field vanishes at that xi.
    """

    __slots__ = ("_func", "_grad", "_derivative", "fd_step", "support", "_const", "_cache")

    def __init__(self, func, grad=None, fd_step: float = DEFAULT_FD_STEP, *,
                 derivative=None, support=None):
        if not (fd_step > 0 and math.isfinite(fd_step)):
            raise ConfigurationError(f"fd_step must be positive, got {fd_step}")
        self._func = func
        self._grad = grad
        self._derivative = derivative
        self.fd_step = float(fd_step)
        self.support = support
        self._const = None
        self._cache = {}

    # construction helpers
    @classmethod
    def constant(cls, value: float) -> "ScalarField":
        value = float(value)
        f = cls(lambda *c: _filled(value, c), derivative=lambda axis: ZERO)
        f._const = value
        return f

    @classmethod
    def coordinate(cls, axis: int) -> "ScalarField":
        _check_axis(axis)

        def func(*c):
            shape = np.broadcast_shapes(*(np.shape(v) for v in c))
            return np.broadcast_to(c[axis], shape).astype(float) if shape else float(c[axis])

        return cls(func, derivative=lambda a: ONE if a == axis else ZERO)

    # evaluation
    def __call__(self, p):
        return self._func(*p)

    def evaluate(self, x, y, z, xi):
        return self._func(x, y, z, xi)

    @property
    def is_analytic(self) -> bool:
        return self._const is not None or self._derivative is not None or self._grad is not None

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    @property
    def is_zero(self) -> bool:
        return self._const == 0.0

    def _is(self, value: float) -> bool:
        return self._const is not None and self._const == value

    def derivative(self, axis: int) -> "ScalarField":
        """Partial derivative field; analytic when possible, else finite differences."""
        _check_axis(axis)
        if axis in self._cache:
            return self._cache[axis]
        if self._derivative is not None:
            d = self._derivative(axis)
        elif self._grad is not None:
            grad = self._grad
            d = ScalarField(lambda *c: grad(*c)[axis], fd_step=self.fd_step, support=self.support)
        else:
            h, func = self.fd_step, self._func
            d = ScalarField(lambda *c: _central_difference(func, axis, c, h),
                            fd_step=h, support=self.support)
        self._cache[axis] = d
        return d

    def gradient(self, p) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*(partial(self, a, p) for a in range(4))))

    # arithmetic
    def __add__(self, other):
        other = as_field(other)
        if self._is(0.0):
            return other
        if other._is(0.0):
            return self
        if self.is_constant and other.is_constant:
            return ScalarField.constant(self._const + other._const)
        f, g = self._func, other._func
        support = None
        if self.support is not None and other.support is not None:
            s1, s2 = self.support, other.support
            support = lambda xi: _box_union(s1(xi), s2(xi))
        deriv = None
        if self.is_analytic and other.is_analytic:
            deriv = lambda a: self.derivative(a) + other.derivative(a)
        return ScalarField(lambda *c: f(*c) + g(*c), fd_step=min(self.fd_step, other.fd_step),
                           derivative=deriv, support=support)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-as_field(other))

    def __rsub__(self, other):
        return as_field(other) + (-self)

    def __mul__(self, other):
        other = as_field(other)
        if self._is(0.0) or other._is(0.0):
            return ZERO
        if self._is(1.0):
            return other
        if other._is(1.0):
            return self
        if self.is_constant and other.is_constant:
            return ScalarField.constant(self._const * other._const)
        f, g = self._func, other._func
        if self.support is not None and other.support is not None:
            s1, s2 = self.support, other.support
            support = lambda xi: _box_intersection(s1(xi), s2(xi))
        else:
            support = self.support or other.support
        deriv = None
        if self.is_analytic and other.is_analytic:
            deriv = lambda a: self.derivative(a) * other + self * other.derivative(a)
        return ScalarField(lambda *c: f(*c) * g(*c), fd_step=min(self.fd_step, other.fd_step),
                           derivative=deriv, support=support)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_field(other)
        if other.is_constant:
            if other._const == 0.0:
                raise ZeroDivisionError("division of a field by the zero constant")
            return self * (1.0 / other._const)
        f, g = self._func, other._func
        deriv = None
        if self.is_analytic and other.is_analytic:
            deriv = lambda a: (self.derivative(a) * other - self * other.derivative(a)) / (other * other)
        return ScalarField(lambda *c: f(*c) / g(*c), fd_step=min(self.fd_step, other.fd_step),
                           derivative=deriv, support=self.support)

    def __rtruediv__(self, other):
        return as_field(other) / self

    def __pow__(self, n: int):
        if not (isinstance(n, int) and n >= 0):
            raise DomainError("only non-negative integer powers are supported")
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        if self.is_constant:
            return f"ScalarField.constant({self._const})"
        kind = "analytic" if self.is_analytic else f"fd(h={self.fd_step:g})"
        return f"<ScalarField {kind}>"


ZERO = ScalarField.constant(0.0)
ONE = ScalarField.constant(1.0)


def as_field(value) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    if callable(value):
        return ScalarField(value)
    if np.isscalar(value):
        return ScalarField.constant(float(value))
    raise TypeError(f"cannot interpret {type(value).__name__} as a ScalarField")


def coordinates() -> tuple[ScalarField, ScalarField, ScalarField, ScalarField]:
    """The four coordinate functions (x, y, z, xi)."""
    return tuple(ScalarField.coordinate(a) for a in range(4))


def compose(g: Univariate, f: ScalarField, *, keeps_support: bool = False) -> ScalarField:
    """``g(f)`` with chain-rule derivatives.

    ``keeps_support`` asserts g(0) = 0 so the support of f carries over.
    """
    f = as_field(f)
    inner = f._func
    deriv = None
    if f.is_analytic:
        deriv = lambda a: compose(g.derivative(), f) * f.derivative(a)
    return ScalarField(lambda *c: g.func(inner(*c)), fd_step=f.fd_step, derivative=deriv,
                       support=f.support if keeps_support else None)


def sin(f) -> ScalarField:
    return compose(_sin_u(), f, keeps_support=True)


def cos(f) -> ScalarField:
    return compose(_cos_u(), f)


def exp(f) -> ScalarField:
    return compose(_exp_u(), f)


def _check_axis(axis: int) -> None:
    if axis not in (0, 1, 2, 3):
        raise ValueError(f"axis must be one of 0..3 (x, y, z, xi), got {axis!r}")


def _central_difference(func, axis, coords, h):
    plus = list(coords)
    minus = list(coords)
    plus[axis] = plus[axis] + h
    minus[axis] = minus[axis] - h
    fp = func(*plus)
    fm = func(*minus)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise NumericalDomainError(f"non-finite value on the stencil along {AXIS_NAMES[axis]}")
    return (fp - fm) / (2.0 * h)


def fd_partial(f, axis: int, p, h: float):
    """Central difference (f(p + h e_axis) - f(p - h e_axis)) / 2h."""
    _check_axis(axis)
    if not h > 0:
        raise ConfigurationError("finite-difference step must be positive")
    func = f._func if isinstance(f, ScalarField) else f
    return _central_difference(func, axis, tuple(Event.of(p)), h)


def partial(f, axis: int, p):
    """Analytic partial derivative if available, else ``fd_partial`` with ``f.fd_step``."""
    f = as_field(f)
    p = Event.of(p)
    if f.is_analytic:
        return f.derivative(axis)(p)
    return fd_partial(f, axis, p, f.fd_step)


class VectorField:
    """Contravariant vector field with 4 components, or 3 spatial ones (zero xi part)."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence):
        comps = tuple(as_field(c) for c in components)
        if len(comps) not in (3, 4):
            raise ConfigurationError(f"a vector field has 3 or 4 components, got {len(comps)}")
        self.components = comps

    @property
    def dim(self) -> int:
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i) -> ScalarField:
        return self.components[i]

    def __call__(self, p) -> np.ndarray:
        p = Event.of(p)
        return np.stack(np.broadcast_arrays(*(c(p) for c in self.components)))

    def four(self) -> "VectorField":
        """The 4-component version (spatial fields get a zero xi component)."""
        return self if self.dim == 4 else VectorField(self.components + (ZERO,))

    def __add__(self, other: "VectorField") -> "VectorField":
        a, b = _match(self, other)
        return VectorField([p + q for p, q in zip(a, b)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        a, b = _match(self, other)
        return VectorField([p - q for p, q in zip(a, b)])

    def __neg__(self):
        return VectorField([-c for c in self.components])

    def __mul__(self, s) -> "VectorField":
        s = as_field(s)
        return VectorField([s * c for c in self.components])

    __rmul__ = __mul__

    def dot(self, other: "VectorField") -> ScalarField:
        """Euclidean component sum; meant for spatial fields."""
        a, b = _match(self, other)
        out = ZERO
        for p, q in zip(a, b):
            out = out + p * q
        return out

    def cross(self, other: "VectorField") -> "VectorField":
        a, b = self.components[:3], other.components[:3]
        return VectorField([a[1] * b[2] - a[2] * b[1],
                            a[2] * b[0] - a[0] * b[2],
                            a[0] * b[1] - a[1] * b[0]])

    @property
    def fd_step(self) -> float:
        return min(c.fd_step for c in self.components)


def _match(a: VectorField, b: VectorField):
    if a.dim != b.dim:
        a, b = a.four(), b.four()
    return a.components, b.components


# vector calculus on spatial fields, all through partial()

def jacobian(V: VectorField, p) -> np.ndarray:
    """J[i, mu] = d V^i / d x^mu, shape (dim, 4, ...)."""
    p = Event.of(p)
    rows = [np.stack(np.broadcast_arrays(*(partial(c, a, p) for a in range(4)))) for c in V]
    return np.stack(np.broadcast_arrays(*rows))


def rot(V: VectorField, p) -> np.ndarray:
    J = jacobian(V, p)
    return np.stack([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def div(V: VectorField, p):
    J = jacobian(V, p)
    return J[0, 0] + J[1, 1] + J[2, 2]


def d_xi(V: VectorField, p) -> np.ndarray:
    return jacobian(V, p)[:3, XI]


def rot_field(V: VectorField) -> VectorField:
    d = lambda i, a: V[i].derivative(a)
    return VectorField([d(2, Y) - d(1, Z), d(0, Z) - d(2, X), d(1, X) - d(0, Y)])


def div_field(V: VectorField) -> ScalarField:
    return V[0].derivative(X) + V[1].derivative(Y) + V[2].derivative(Z)


# grids and quadrature

Bounds = tuple[float, float]


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid; each axis is (min, max, count)."""

    x: tuple[float, float, int]
    y: tuple[float, float, int]
    z: tuple[float, float, int]
    xi: tuple[float, float, int]

    def __post_init__(self):
        for name, (lo, hi, n) in zip(AXIS_NAMES, self.axes):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ConfigurationError(f"grid axis {name}: need finite max > min, got ({lo}, {hi})")
            if int(n) != n or n < 2:
                raise ConfigurationError(f"grid axis {name}: need at least 2 points, got {n}")

    @classmethod
    def from_bounds(cls, bounds: Sequence[Bounds], counts: Sequence[int]) -> "GridSpec":
        if len(bounds) != 4 or len(counts) != 4:
            raise ConfigurationError("a grid needs bounds and counts for all four axes")
        return cls(*[(float(lo), float(hi), int(n)) for (lo, hi), n in zip(bounds, counts)])

    @property
    def axes(self):
        return (self.x, self.y, self.z, self.xi)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(int(a[2]) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def values(self, axis: int) -> np.ndarray:
        lo, hi, n = self.axes[axis]
        return np.linspace(lo, hi, int(n))

    def mesh(self) -> Event:
        return Event(*np.meshgrid(*(self.values(a) for a in range(4)), indexing="ij"))


_RULES = ("simpson", "midpoint")


@dataclass(frozen=True)
class QuadratureSpec:
    """Spatial quadrature at fixed xi.

    Either give an explicit ``box`` or set ``compact_support`` and let the
    integrand's own support box define the region.
    """

    box: tuple[Bounds, Bounds, Bounds] | None = None
    compact_support: bool = False
    rule: str = "simpson"
    resolution: int | tuple[int, int, int] = 61

    def __post_init__(self):
        if self.rule not in _RULES:
            raise ConfigurationError(f"unknown quadrature rule {self.rule!r}")
        res = self.resolution
        res = (res, res, res) if np.isscalar(res) else tuple(res)
        if len(res) != 3 or any(int(n) != n or n < 2 for n in res):
            raise ConfigurationError(f"resolution must be >= 2 per axis, got {self.resolution}")
        if self.rule == "simpson" and any(n % 2 == 0 for n in res):
            raise ConfigurationError("Simpson's rule needs an odd point count per axis")
        object.__setattr__(self, "resolution", tuple(int(n) for n in res))
        if self.box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.box)
            if len(box) != 3 or any(not hi > lo for lo, hi in box):
                raise ConfigurationError(f"invalid quadrature box {self.box}")
            object.__setattr__(self, "box", box)

    def region(self, f, xi: float):
        if self.box is not None:
            return self.box
        if not self.compact_support:
            raise ConfigurationError("unbounded region: give a box or set compact_support")
        support = getattr(f, "support", None)
        if support is None:
            raise ConfigurationError("compact_support requested but the integrand declares no support")
        box = support(xi)
        if any(not hi > lo for lo, hi in box):
            return None  # empty support at this xi
        return box

    def nodes(self, box) -> list[np.ndarray]:
        out = []
        for (lo, hi), n in zip(box, self.resolution):
            if self.rule == "simpson":
                out.append(np.linspace(lo, hi, n))
            else:
                h = (hi - lo) / n
                out.append(lo + h * (np.arange(n) + 0.5))
        return out


def integrate3(f, quad: QuadratureSpec, xi: float = 0.0) -> float:
    """Approximate the integral of f over space at fixed xi."""
    box = quad.region(f, xi)
    if box is None:
        return 0.0
    xs, ys, zs = quad.nodes(box)
    func = f._func if isinstance(f, ScalarField) else f
    X3, Y3, Z3 = np.meshgrid(xs, ys, zs, indexing="ij")
    vals = np.broadcast_to(func(X3, Y3, Z3, np.full_like(X3, float(xi))), X3.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericalDomainError("integrand is not finite on the quadrature nodes")
    if quad.rule == "simpson":
        return float(simpson(simpson(simpson(vals, x=zs, axis=2), x=ys, axis=1), x=xs))
    cell = np.prod([(hi - lo) / n for (lo, hi), n in zip(box, quad.resolution)])
    return float(vals.sum() * cell)
