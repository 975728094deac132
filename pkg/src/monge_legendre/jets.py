"""
Truncated multivariate Taylor series ("jets") over complex scalars.

A :class:`Jet` stores the Taylor coefficients of a scalar field about an
expansion point, truncated at total degree ``order``.  Coefficients live in a
dense array ordered graded-lexicographically, with any number of trailing
batch axes so a single jet can carry many sample points at once::

    coeffs.shape == (n_coeffs, *batch_shape)

The coefficient of the multi-index ``m`` is ``d^m f / m!``; :func:`partial`
undoes the factorial scaling.

All operations return new jets.  Arithmetic between two jets requires the same
``num_vars`` and ``order``; plain numbers and numpy arrays act as constants and
broadcast against the batch axes.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Sequence

import numpy as np
import scipy.sparse as sp

MAX_ORDER = 5
MAX_VARS = 6


class JetError(ValueError):
    """Raised for incompatible jets or inputs outside an operation's domain."""


class _Basis:
    """Monomial bookkeeping shared by every jet with the same shape."""

    def __init__(self, num_vars: int, order: int):
        self.num_vars = num_vars
        self.order = order
        monos = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(num_vars), d):
                m = [0] * num_vars
                for v in combo:
                    m[v] += 1
                monos.append(tuple(m))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=float
        )

    @functools.cached_property
    def product(self):
        # (I, J, S): coeffs(a*b) = S @ (a[I] * b[J])
        rows, left, right = [], [], []
        for i, mi in enumerate(self.monomials):
            di = self.degree[i]
            for j, mj in enumerate(self.monomials):
                if di + self.degree[j] > self.order:
                    continue
                k = self.index[tuple(x + y for x, y in zip(mi, mj))]
                rows.append(k)
                left.append(i)
                right.append(j)
        n = len(rows)
        s = sp.csr_matrix(
            (np.ones(n), (np.array(rows), np.arange(n))), shape=(self.size, n)
        )
        return np.array(left), np.array(right), s

    def diff_map(self, var: int):
        """Source indices and factors for d/dx_var, landing in order - 1."""
        target = basis(self.num_vars, self.order - 1)
        src = np.empty(target.size, dtype=int)
        fac = np.empty(target.size)
        for t, m in enumerate(target.monomials):
            up = list(m)
            up[var] += 1
            src[t] = self.index[tuple(up)]
            fac[t] = up[var]
        return target, src, fac


@functools.lru_cache(maxsize=None)
def basis(num_vars: int, order: int) -> _Basis:
    if not 1 <= num_vars <= MAX_VARS:
        raise JetError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
    if not 0 <= order <= MAX_ORDER:
        raise JetError(f"order must be in 0..{MAX_ORDER}, got {order}")
    return _Basis(num_vars, order)


class Jet:
    """Truncated Taylor expansion of a scalar field at a (batch of) point(s).

    Parameters
    ----------
    coeffs : array_like
        Coefficients with shape ``(n_coeffs, *batch_shape)``.
    num_vars, order : int
        Number of independent variables and truncation degree.
    """

    __slots__ = ("basis", "coeffs")
    __array_priority__ = 100

    def __init__(self, coeffs, num_vars: int, order: int):
        self.basis = basis(num_vars, order)
        c = np.asarray(coeffs, dtype=complex)
        if c.shape[:1] != (self.basis.size,):
            raise JetError(
                f"expected {self.basis.size} coefficients, got shape {c.shape}"
            )
        self.coeffs = c

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, num_vars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=complex)
        b = basis(num_vars, order)
        c = np.zeros((b.size,) + value.shape, dtype=complex)
        c[0] = value
        return cls(c, num_vars, order)

    @classmethod
    def variable(cls, index: int, value, num_vars: int, order: int) -> "Jet":
        if not 0 <= index < num_vars:
            raise JetError(f"variable index {index} out of range for {num_vars} vars")
        jet = cls.constant(value, num_vars, order)
        if order >= 1:
            jet.coeffs[1 + index] = 1.0
        return jet

    # -- structure --------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.basis.num_vars

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def coefficient(self, multi_index: Sequence[int]) -> np.ndarray:
        return self.coeffs[self.basis.index[tuple(multi_index)]]

    def __repr__(self) -> str:
        return (
            f"Jet(num_vars={self.num_vars}, order={self.order}, "
            f"batch={self.batch_shape}, value={self.value!r})"
        )

    def select(self, index) -> "Jet":
        """Index into the batch axes (boolean masks included)."""
        if not isinstance(index, tuple):
            index = (index,)
        return Jet(self.coeffs[(slice(None),) + index], self.num_vars, self.order)

    def _same_shape(self, other: "Jet") -> None:
        if other.basis is not self.basis:
            raise JetError(
                "jet shape mismatch: "
                f"({self.num_vars}, {self.order}) vs ({other.num_vars}, {other.order})"
            )

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._same_shape(other)
            return other
        return Jet.constant(other, self.num_vars, self.order)

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.num_vars, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._same_shape(other)
            return Jet(self.coeffs + other.coeffs, self.num_vars, self.order)
        other = np.asarray(other, dtype=complex)
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        c = np.array(np.broadcast_to(self.coeffs, (self.basis.size,) + shape))
        c[0] = c[0] + other
        return Jet(c, self.num_vars, self.order)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs * np.asarray(other, dtype=complex), self.num_vars, self.order)
        self._same_shape(other)
        a, b = np.broadcast_arrays(self.coeffs, other.coeffs)
        left, right, s = self.basis.product
        terms = a[left] * b[right]
        batch = terms.shape[1:]
        out = s @ terms.reshape(terms.shape[0], -1)
        return Jet(np.asarray(out).reshape((self.basis.size,) + batch), self.num_vars, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=complex)
        if np.any(other == 0):
            raise ZeroDivisionError("division of a jet by zero")
        return Jet(self.coeffs / other, self.num_vars, self.order)

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, (int, np.integer)):
            n = int(exponent)
            if n < 0:
                return reciprocal(self) ** (-n)
            result = Jet.constant(np.ones(self.batch_shape), self.num_vars, self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        return power(self, exponent)

    # -- calculus and reshaping -------------------------------------------

    def diff(self, var: int) -> "Jet":
        """Jet of d/dx_var, one order lower."""
        if self.order < 1:
            raise JetError("cannot differentiate an order-0 jet")
        if not 0 <= var < self.num_vars:
            raise JetError(f"variable index {var} out of range")
        target, src, fac = self.basis.diff_map(var)
        fac = fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coeffs[src] * fac, target.num_vars, target.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError("truncate cannot raise the order")
        n = basis(self.num_vars, order).size
        return Jet(self.coeffs[:n], self.num_vars, order)

    def extend(self, num_vars: int | None = None, order: int | None = None) -> "Jet":
        """Embed into a jet with extra trailing variables and/or higher order.

        New coefficients are zero, i.e. the result does not depend on the new
        variables and carries no information beyond the old truncation.
        """
        num_vars = self.num_vars if num_vars is None else num_vars
        order = self.order if order is None else order
        if num_vars < self.num_vars:
            raise JetError("extend cannot drop variables")
        target = basis(num_vars, order)
        c = np.zeros((target.size,) + self.batch_shape, dtype=complex)
        pad = (0,) * (num_vars - self.num_vars)
        for i, m in enumerate(self.basis.monomials):
            if sum(m) <= order:
                c[target.index[m + pad]] = self.coeffs[i]
        return Jet(c, num_vars, order)

    def restrict(self, var: int) -> "Jet":
        """Freeze x_var at the expansion point and drop it from the variable list."""
        if self.num_vars < 2:
            raise JetError("cannot drop the only variable")
        target = basis(self.num_vars - 1, self.order)
        keep = [i for i, m in enumerate(self.basis.monomials) if m[var] == 0]
        # dropping a coordinate from graded-lex order preserves relative order
        return Jet(self.coeffs[keep], target.num_vars, target.order)

    def partials(self, k: int, variables: Sequence[int] | None = None) -> np.ndarray:
        """All k-th order partial derivatives as a symmetric tensor.

        Returns an array of shape ``(nv,) * k + batch_shape`` where ``nv`` is
        the number of selected variables.
        """
        if k > self.order:
            raise JetError(f"derivative order {k} exceeds truncation order {self.order}")
        variables = list(range(self.num_vars)) if variables is None else list(variables)
        nv = len(variables)
        out = np.empty((nv,) * k + self.batch_shape, dtype=complex)
        for idx in itertools.product(range(nv), repeat=k):
            m = [0] * self.num_vars
            for i in idx:
                m[variables[i]] += 1
            out[idx] = partial(self, m)
        return out


def variable(index: int, value, num_vars: int, order: int) -> Jet:
    """Jet of the coordinate function x_index expanded at ``value``."""
    return Jet.variable(index, value, num_vars, order)


def constant(value, num_vars: int, order: int) -> Jet:
    return Jet.constant(value, num_vars, order)


def partial(a: Jet, multi_index: Sequence[int]) -> np.ndarray:
    """Mixed partial derivative d^m a at the expansion point."""
    m = tuple(int(e) for e in multi_index)
    if len(m) != a.num_vars:
        raise JetError(f"multi-index {m} has wrong length for {a.num_vars} vars")
    if sum(m) > a.order:
        raise JetError(f"derivative order {sum(m)} exceeds truncation order {a.order}")
    i = a.basis.index[m]
    return a.coeffs[i] * a.basis.factorial[i]


# -- analytic functions ----------------------------------------------------


def _compose(a: Jet, coeffs: list) -> Jet:
    """sum_k coeffs[k] * (a - a0)^k by Horner; coeffs[k] has the batch shape."""
    h = Jet(a.coeffs.copy(), a.num_vars, a.order)
    h.coeffs[0] = 0.0
    result = Jet.constant(coeffs[a.order], a.num_vars, a.order)
    for k in range(a.order - 1, -1, -1):
        result = result * h + coeffs[k]
    return result


def _taylor_exp(x0, n):
    e = np.exp(x0)
    return [e / math.factorial(k) for k in range(n + 1)]


def _taylor_log(x0, n):
    out = [np.log(x0)]
    for k in range(1, n + 1):
        out.append((-1) ** (k + 1) / (k * x0**k))
    return out


def _taylor_power(s):
    def coeffs(x0, n):
        out, binom = [], 1.0
        for k in range(n + 1):
            out.append(binom * x0 ** (s - k))
            binom *= (s - k) / (k + 1)
        return out

    return coeffs


def _taylor_sin(x0, n):
    cycle = [np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0)]
    return [cycle[k % 4] / math.factorial(k) for k in range(n + 1)]


def _taylor_cos(x0, n):
    cycle = [np.cos(x0), -np.sin(x0), -np.cos(x0), np.sin(x0)]
    return [cycle[k % 4] / math.factorial(k) for k in range(n + 1)]


_NUMPY = {"exp": np.exp, "ln": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos}
_TAYLOR = {
    "exp": _taylor_exp,
    "ln": _taylor_log,
    "sqrt": _taylor_power(0.5),
    "sin": _taylor_sin,
    "cos": _taylor_cos,
}


def analytic(name: str, a):
    """Apply exp, ln, sqrt, sin or cos (principal branches).

    Plain numbers and arrays are passed to numpy so model code can be written
    once for both jets and values.
    """
    if name not in _TAYLOR:
        raise JetError(f"unknown analytic function {name!r}")
    if not isinstance(a, Jet):
        return _NUMPY[name](np.asarray(a, dtype=complex))
    x0 = a.value
    if name in ("ln", "sqrt") and np.any(x0 == 0):
        raise JetError(f"{name} is not analytic at 0")
    return _compose(a, _TAYLOR[name](x0, a.order))


def power(a: Jet, s: float) -> Jet:
    """Principal-branch a**s for real s."""
    if np.any(a.value == 0):
        raise JetError("non-integer power is not analytic at 0")
    return _compose(a, _taylor_power(s)(a.value, a.order))


def reciprocal(a: Jet) -> Jet:
    x0 = a.value
    if np.any(x0 == 0):
        raise ZeroDivisionError("reciprocal of a jet with zero constant term")
    return _compose(a, [(-1) ** k / x0 ** (k + 1) for k in range(a.order + 1)])


def exp(a):
    return analytic("exp", a)


def log(a):
    return analytic("ln", a)


def sqrt(a):
    return analytic("sqrt", a)


def sin(a):
    return analytic("sin", a)


def cos(a):
    return analytic("cos", a)


def value(a):
    """Constant term of a jet, or the argument itself for plain values."""
    return a.value if isinstance(a, Jet) else np.asarray(a)
