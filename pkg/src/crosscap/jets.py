"""Truncated Taylor expansions (jets) in one and two variables.

Coefficient convention
----------------------
All jets store *Taylor coefficients*, not derivative values: the univariate
jet with coefficients ``c`` represents ``sum_k c[k] * t**k`` and the
bivariate jet represents ``sum_{j+k<=order} c[j,k] * u**j * v**k``.  The
second v-derivative at the centre is therefore ``2*c[0,2]``, and so on.

Bivariate coefficients live in a square ``(order+1, order+1)`` array whose
entries above the anti-diagonal (``j+k > order``) are identically zero; only
the triangular part carries information.  Every operation truncates eagerly
back to the common working order.

All jet values are immutable (their arrays are marked read-only), so they can
be shared freely between threads.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import (
    ContractViolationError,
    JetDomainError,
    NotInvertibleError,
)

__all__ = [
    "Jet1",
    "Jet2",
    "MapJet3",
    "diffeo_invert",
    "elementary",
    "jet1_to_jet2",
]


@lru_cache(maxsize=None)
def _triangle_mask(order: int) -> np.ndarray:
    idx = np.arange(order + 1)
    mask = (idx[:, None] + idx[None, :]) <= order
    mask.setflags(write=False)
    return mask


def _check_finite(arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise ContractViolationError("jet coefficients must be finite")


def _check_same_order(a, b) -> None:
    if a.order != b.order:
        raise ContractViolationError(
            f"jet order mismatch: {a.order} vs {b.order}"
        )


class Jet1:
    """Univariate truncated Taylor expansion: ``sum_k coeffs[k] * t**k``."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Iterable[float]):
        arr = np.array(coeffs, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ContractViolationError("Jet1 needs at least the constant term")
        _check_finite(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "order", arr.size - 1)

    def __setattr__(self, name, value):
        raise AttributeError("Jet1 is immutable")

    @classmethod
    def zeros(cls, order: int) -> "Jet1":
        return cls(np.zeros(order + 1))

    def __getitem__(self, k: int) -> float:
        return float(self.coeffs[k])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Jet1)
            and self.order == other.order
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash((self.order, self.coeffs.tobytes()))

    def eval(self, t: float) -> float:
        """Evaluate the truncated polynomial at ``t``."""
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc

    def truncate(self, order: int) -> "Jet1":
        """Return the jet at a new order (drops or zero-pads coefficients)."""
        if order < 0:
            raise ContractViolationError("order must be non-negative")
        out = np.zeros(order + 1)
        m = min(order, self.order)
        out[: m + 1] = self.coeffs[: m + 1]
        return Jet1(out)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __repr__(self):
        return f"Jet1(order={self.order}, coeffs={self.coeffs.tolist()})"


class Jet2:
    """Bivariate truncated Taylor expansion on the triangle ``j+k <= order``."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: np.ndarray):
        if order < 0:
            raise ContractViolationError("order must be non-negative")
        arr = np.array(coeffs, dtype=float)
        if arr.shape != (order + 1, order + 1):
            raise ContractViolationError(
                f"coefficient array must be ({order + 1}, {order + 1}), got {arr.shape}"
            )
        _check_finite(arr)
        arr = np.where(_triangle_mask(order), arr, 0.0)
        arr.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Jet2 is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, order: int) -> "Jet2":
        return cls(order, np.zeros((order + 1, order + 1)))

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet2":
        arr = np.zeros((order + 1, order + 1))
        arr[0, 0] = value
        return cls(order, arr)

    @classmethod
    def var_u(cls, order: int) -> "Jet2":
        if order < 1:
            raise ContractViolationError("variable jet needs order >= 1")
        arr = np.zeros((order + 1, order + 1))
        arr[1, 0] = 1.0
        return cls(order, arr)

    @classmethod
    def var_v(cls, order: int) -> "Jet2":
        if order < 1:
            raise ContractViolationError("variable jet needs order >= 1")
        arr = np.zeros((order + 1, order + 1))
        arr[0, 1] = 1.0
        return cls(order, arr)

    @classmethod
    def from_terms(cls, order: int, terms: dict[tuple[int, int], float]) -> "Jet2":
        """Build a jet from ``{(j, k): coefficient}``; omitted terms are zero."""
        arr = np.zeros((order + 1, order + 1))
        for (j, k), value in terms.items():
            if j + k > order:
                raise ContractViolationError(
                    f"term u^{j} v^{k} exceeds order {order}"
                )
            arr[j, k] = value
        return cls(order, arr)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "Jet2") -> "Jet2":
        if not isinstance(other, Jet2):
            return NotImplemented
        _check_same_order(self, other)
        return Jet2(self.order, self.coeffs + other.coeffs)

    def __sub__(self, other: "Jet2") -> "Jet2":
        if not isinstance(other, Jet2):
            return NotImplemented
        _check_same_order(self, other)
        return Jet2(self.order, self.coeffs - other.coeffs)

    def __neg__(self) -> "Jet2":
        return Jet2(self.order, -self.coeffs)

    def scale(self, factor: float) -> "Jet2":
        return Jet2(self.order, self.coeffs * float(factor))

    def __mul__(self, other):
        if isinstance(other, Jet2):
            _check_same_order(self, other)
            n = self.order
            out = np.zeros((n + 1, n + 1))
            c1, c2 = self.coeffs, other.coeffs
            # shift-and-add convolution; the constructor re-zeroes anything
            # that lands outside the triangle
            for j in range(n + 1):
                for k in range(n + 1 - j):
                    a = c1[j, k]
                    if a != 0.0:
                        out[j:, k:] += a * c2[: n + 1 - j, : n + 1 - k]
            return Jet2(n, out)
        if isinstance(other, (int, float)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(other)
        return NotImplemented

    def __getitem__(self, jk: tuple[int, int]) -> float:
        j, k = jk
        return float(self.coeffs[j, k])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Jet2)
            and self.order == other.order
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash((self.order, self.coeffs.tobytes()))

    # -- calculus ----------------------------------------------------------

    def partial_u(self) -> "Jet2":
        """Coefficient-shift derivative in u; the result has order-1."""
        n = max(self.order - 1, 0)
        out = np.zeros((n + 1, n + 1))
        for j in range(n + 1):
            out[j, : n + 1 - j] = (j + 1) * self.coeffs[j + 1, : n + 1 - j]
        return Jet2(n, out)

    def partial_v(self) -> "Jet2":
        """Coefficient-shift derivative in v; the result has order-1."""
        n = max(self.order - 1, 0)
        out = np.zeros((n + 1, n + 1))
        for k in range(n + 1):
            out[: n + 1 - k, k] = (k + 1) * self.coeffs[: n + 1 - k, k + 1]
        return Jet2(n, out)

    def truncate(self, order: int) -> "Jet2":
        """Return the jet at a new order (drops or zero-pads coefficients)."""
        if order < 0:
            raise ContractViolationError("order must be non-negative")
        out = np.zeros((order + 1, order + 1))
        m = min(order, self.order) + 1
        out[:m, :m] = self.coeffs[:m, :m]
        return Jet2(order, out)

    def compose(self, inner_u: "Jet2", inner_v: "Jet2") -> "Jet2":
        """Taylor expansion of ``self(inner_u, inner_v)``, truncated.

        Both inner jets must be centred (zero constant term); composing with
        an offset would require re-expanding around a new point.
        """
        _check_same_order(self, inner_u)
        _check_same_order(self, inner_v)
        if inner_u.coeffs[0, 0] != 0.0 or inner_v.coeffs[0, 0] != 0.0:
            raise JetDomainError(
                "inner jets of a composition must have zero constant term"
            )
        n = self.order
        u_pows = [Jet2.constant(1.0, n)]
        v_pows = [Jet2.constant(1.0, n)]
        for _ in range(n):
            u_pows.append(u_pows[-1] * inner_u)
            v_pows.append(v_pows[-1] * inner_v)
        acc = np.zeros((n + 1, n + 1))
        for j in range(n + 1):
            for k in range(n + 1 - j):
                c = self.coeffs[j, k]
                if c != 0.0:
                    acc += c * (u_pows[j] * v_pows[k]).coeffs
        return Jet2(n, acc)

    # -- views and evaluation -----------------------------------------------

    def restrict_v_axis(self) -> Jet1:
        """The univariate jet of the restriction u = 0."""
        return Jet1(self.coeffs[0, :].copy())

    def eval(self, du: float, dv: float) -> float:
        """Evaluate the truncated polynomial at offsets ``(du, dv)``."""
        acc = 0.0
        for j in range(self.order, -1, -1):
            row = 0.0
            for k in range(self.order - j, -1, -1):
                row = row * dv + self.coeffs[j, k]
            acc = acc * du + row
        return acc

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def terms(self) -> dict[tuple[int, int], float]:
        """Nonzero coefficients as ``{(j, k): value}`` (mostly for tests)."""
        out = {}
        for j in range(self.order + 1):
            for k in range(self.order + 1 - j):
                if self.coeffs[j, k] != 0.0:
                    out[(j, k)] = float(self.coeffs[j, k])
        return out

    def __repr__(self):
        return f"Jet2(order={self.order}, terms={self.terms()})"


def jet1_to_jet2(jet: Jet1, order: int) -> Jet2:
    """Embed a univariate jet in v as a bivariate jet of the given order."""
    arr = np.zeros((order + 1, order + 1))
    m = min(jet.order, order)
    arr[0, : m + 1] = jet.coeffs[: m + 1]
    return Jet2(order, arr)


def diffeo_invert(phi_u: Jet2, phi_v: Jet2) -> tuple[Jet2, Jet2]:
    """Invert the plane jet ``phi = (phi_u, phi_v)`` about the origin.

    Requires zero constant terms and an invertible linear part.  The result
    ``psi`` satisfies ``phi(psi) = identity`` up to the working order; the
    fixed-point iteration ``psi <- L^-1 (id - N(psi))`` (with ``phi = L + N``,
    N of degree >= 2) gains one correct degree per step.
    """
    _check_same_order(phi_u, phi_v)
    if phi_u.coeffs[0, 0] != 0.0 or phi_v.coeffs[0, 0] != 0.0:
        raise ContractViolationError("diffeo jets must have zero constant term")
    n = phi_u.order
    a, b = phi_u[1, 0], phi_u[0, 1]
    c, d = phi_v[1, 0], phi_v[0, 1]
    det = a * d - b * c
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if abs(det) <= 1e-12 * max(1.0, scale * scale):
        raise NotInvertibleError(
            f"linear part is singular (determinant {det:.3e})"
        )
    ia, ib = d / det, -b / det
    ic, id_ = -c / det, a / det

    lin_u = Jet2.from_terms(n, {(1, 0): a, (0, 1): b})
    lin_v = Jet2.from_terms(n, {(1, 0): c, (0, 1): d})
    nonlin_u = phi_u - lin_u
    nonlin_v = phi_v - lin_v

    ident_u = Jet2.var_u(n) if n >= 1 else Jet2.zeros(n)
    ident_v = Jet2.var_v(n) if n >= 1 else Jet2.zeros(n)
    psi_u = Jet2.from_terms(n, {(1, 0): ia, (0, 1): ib}) if n >= 1 else Jet2.zeros(n)
    psi_v = Jet2.from_terms(n, {(1, 0): ic, (0, 1): id_}) if n >= 1 else Jet2.zeros(n)
    for _ in range(max(n - 1, 0)):
        ru = ident_u - nonlin_u.compose(psi_u, psi_v)
        rv = ident_v - nonlin_v.compose(psi_u, psi_v)
        psi_u = ia * ru + ib * rv
        psi_v = ic * ru + id_ * rv
    return psi_u, psi_v


_SERIES_FUNCS = ("sin", "cos", "exp", "log", "sqrt", "pow_int")


def _univariate_series(tag: str, center: float, order: int, exponent: int | None):
    """Taylor coefficients of the named function about ``center``."""
    if tag == "exp":
        e = math.exp(center)
        return [e / math.factorial(k) for k in range(order + 1)]
    if tag == "sin":
        return [
            math.sin(center + k * math.pi / 2.0) / math.factorial(k)
            for k in range(order + 1)
        ]
    if tag == "cos":
        return [
            math.cos(center + k * math.pi / 2.0) / math.factorial(k)
            for k in range(order + 1)
        ]
    if tag == "log":
        if center <= 0.0:
            raise JetDomainError(f"log requires a positive base value, got {center}")
        out = [math.log(center)]
        for k in range(1, order + 1):
            out.append((-1.0) ** (k + 1) / (k * center**k))
        return out
    if tag == "sqrt":
        if center <= 0.0:
            raise JetDomainError(f"sqrt requires a positive base value, got {center}")
        out = [math.sqrt(center)]
        for k in range(1, order + 1):
            out.append(out[-1] * (0.5 - (k - 1)) / (k * center))
        return out
    if tag == "pow_int":
        if exponent is None:
            raise ContractViolationError("pow_int requires an integer exponent")
        m = int(exponent)
        if center == 0.0:
            if m < 0:
                raise JetDomainError("negative power of a value vanishing at the base point")
            return [1.0 if k == m else 0.0 for k in range(order + 1)]
        out = [center**m]
        for k in range(1, order + 1):
            out.append(out[-1] * (m - (k - 1)) / (k * center))
        return out
    raise ContractViolationError(
        f"unknown function tag {tag!r}; expected one of {_SERIES_FUNCS}"
    )


def elementary(
    tag: str, inner: Jet2, center_value: float, exponent: int | None = None
) -> Jet2:
    """Truncated expansion of ``func(center_value + inner)``.

    ``inner`` must be centred.  ``tag`` is one of sin, cos, exp, log, sqrt,
    pow_int; the last needs ``exponent``.
    """
    if inner.coeffs[0, 0] != 0.0:
        raise JetDomainError("inner jet of an elementary function must be centred")
    n = inner.order
    series = _univariate_series(tag, float(center_value), n, exponent)
    acc = Jet2.constant(series[0], n)
    power = Jet2.constant(1.0, n)
    for k in range(1, n + 1):
        power = power * inner
        if series[k] != 0.0:
            acc = acc + series[k] * power
    return acc


class MapJet3:
    """Jet of a plane-to-space map: three centred bivariate jets plus the
    base point and its image.

    The first and second partials at the base point are plain coefficient
    reads (times factorials), exposed as 3-vectors for frame work.
    """

    __slots__ = ("components", "base_point", "base_value")

    def __init__(
        self,
        components: Iterable[Jet2],
        base_point: tuple[float, float],
        base_value: tuple[float, float, float],
    ):
        comps = tuple(components)
        if len(comps) != 3:
            raise ContractViolationError("a map jet has exactly three components")
        order = comps[0].order
        for c in comps:
            if c.order != order:
                raise ContractViolationError("map jet components must share one order")
            if c.coeffs[0, 0] != 0.0:
                raise ContractViolationError(
                    "map jet components must be centred; keep the image in base_value"
                )
        bp = (float(base_point[0]), float(base_point[1]))
        bv = tuple(float(x) for x in base_value)
        if len(bv) != 3:
            raise ContractViolationError("base_value must have three entries")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "base_point", bp)
        object.__setattr__(self, "base_value", bv)

    def __setattr__(self, name, value):
        raise AttributeError("MapJet3 is immutable")

    @classmethod
    def from_uncentered(
        cls, components: Iterable[Jet2], base_point: tuple[float, float]
    ) -> "MapJet3":
        """Split off the constant terms of raw jets into ``base_value``."""
        comps = list(components)
        base_value = []
        centred = []
        for c in comps:
            value = c[0, 0]
            base_value.append(value)
            arr = c.coeffs.copy()
            arr[0, 0] = 0.0
            centred.append(Jet2(c.order, arr))
        return cls(centred, base_point, tuple(base_value))

    @property
    def order(self) -> int:
        return self.components[0].order

    def coefficient(self, j: int, k: int) -> np.ndarray:
        """The (j, k) Taylor coefficient of all three components."""
        return np.array([c[j, k] for c in self.components])

    # true derivative vectors at the base point
    def f_u(self) -> np.ndarray:
        return self.coefficient(1, 0)

    def f_v(self) -> np.ndarray:
        return self.coefficient(0, 1)

    def f_uu(self) -> np.ndarray:
        return 2.0 * self.coefficient(2, 0)

    def f_uv(self) -> np.ndarray:
        return self.coefficient(1, 1)

    def f_vv(self) -> np.ndarray:
        return 2.0 * self.coefficient(0, 2)

    def jacobian(self) -> np.ndarray:
        """3x2 differential at the base point."""
        return np.column_stack([self.f_u(), self.f_v()])

    def eval(self, du: float, dv: float) -> np.ndarray:
        """Evaluate the truncated map at offsets from the base point."""
        return np.array(
            [bv + c.eval(du, dv) for bv, c in zip(self.base_value, self.components)]
        )

    def truncate(self, order: int) -> "MapJet3":
        return MapJet3(
            [c.truncate(order) for c in self.components],
            self.base_point,
            self.base_value,
        )

    def rotate_target(self, matrix: np.ndarray) -> "MapJet3":
        """Apply a 3x3 linear map on the target side."""
        m = np.asarray(matrix, dtype=float)
        comps = [
            m[i, 0] * self.components[0]
            + m[i, 1] * self.components[1]
            + m[i, 2] * self.components[2]
            for i in range(3)
        ]
        return MapJet3(comps, self.base_point, tuple(m @ np.array(self.base_value)))

    def translate_target(self, offset: np.ndarray) -> "MapJet3":
        t = np.asarray(offset, dtype=float)
        return MapJet3(
            self.components, self.base_point, tuple(np.array(self.base_value) + t)
        )

    def precompose(self, phi_u: Jet2, phi_v: Jet2) -> "MapJet3":
        """Compose with a centred source jet: the jet of ``f(phi(.))``."""
        comps = [c.compose(phi_u, phi_v) for c in self.components]
        return MapJet3(comps, self.base_point, self.base_value)

    def __repr__(self):
        return (
            f"MapJet3(order={self.order}, base_point={self.base_point}, "
            f"base_value={self.base_value})"
        )
