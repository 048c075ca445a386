"""Latency functions: polynomials, constants and scaled wrappers.

All latencies are vectorised: calling one on a numpy array evaluates it
elementwise.  Construction validates positivity and monotonicity on a fixed
log-spaced grid; a latency that fails is rejected immediately rather than
producing NaNs deep inside a solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

# 64 points over [1e-6, 1e6]
VALIDATION_GRID = np.logspace(-6, 6, 64)


class LatencyFunction:
    """Non-decreasing, positive cost curve of a resource.

    Subclasses implement ``__call__`` and ``to_dict``.  ``quasi_log_convex``
    records whether ``x * ln f(x)`` is known to be convex; polynomials,
    constants and scalings of such functions all carry the flag.
    """

    quasi_log_convex: bool = False

    def __call__(self, x):
        raise NotImplementedError

    def log(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self(x))

    @property
    def degree(self) -> int:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_spec(self) -> str:
        raise ValidationError(f"{type(self).__name__} has no spec-string form")

    def _validate(self):
        vals = np.asarray(self(VALIDATION_GRID), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValidationError(f"latency {self.to_dict()} is not positive on x > 0")
        if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
            raise ValidationError(f"latency {self.to_dict()} is decreasing")


@dataclass(frozen=True, eq=True)
class Polynomial(LatencyFunction):
    """``sum_d coeffs[d] * x**d`` with non-negative coefficients."""

    coeffs: tuple[float, ...]
    quasi_log_convex: bool = field(default=True, init=False, compare=False)

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if not c or any(a < 0 or not np.isfinite(a) for a in c) or not any(a > 0 for a in c):
            raise ValidationError(f"polynomial coefficients must be >= 0 and not all zero: {c}")
        self._validate()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in reversed(self.coeffs):
            out = out * x + a
        return out

    @property
    def degree(self) -> int:
        return max(d for d, a in enumerate(self.coeffs) if a > 0)

    def to_dict(self):
        return {"family": "poly", "coeffs": list(self.coeffs)}

    def to_spec(self):
        return "poly:" + ",".join(_fmt(a) for a in self.coeffs)


@dataclass(frozen=True, eq=True)
class Constant(LatencyFunction):
    c: float
    quasi_log_convex: bool = field(default=True, init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValidationError(f"constant latency must be positive, got {self.c}")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    @property
    def degree(self):
        return 0

    def to_dict(self):
        return {"family": "const", "c": self.c}

    def to_spec(self):
        return f"const:{_fmt(self.c)}"


@dataclass(frozen=True, eq=True)
class Scaled(LatencyFunction):
    """``a * inner(b * x)``: ordinate scaling by ``a``, abscissa scaling by ``b``."""

    a: float
    b: float
    inner: LatencyFunction
    quasi_log_convex: bool = field(default=False, init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if self.a < 0 or self.b < 0:
            raise ValidationError("scaling factors must be non-negative")
        # x ln(a f(bx)) = x ln a + (bx) ln f(bx) / b, convex whenever the inner one is
        object.__setattr__(self, "quasi_log_convex", self.inner.quasi_log_convex)
        self._validate()

    def __call__(self, x):
        return self.a * self.inner(self.b * np.asarray(x, dtype=float))

    def log(self, x):
        # keeps huge/small a from under- or overflowing before the log
        with np.errstate(divide="ignore"):
            return np.log(self.a) + self.inner.log(self.b * np.asarray(x, dtype=float))

    @property
    def degree(self):
        return self.inner.degree

    def to_dict(self):
        return {"family": "scaled", "a": self.a, "b": self.b, "inner": self.inner.to_dict()}


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def monomial(p: int, scale: float = 1.0) -> Polynomial:
    """``scale * x**p``."""
    return Polynomial(tuple([0.0] * p + [scale]))


def scaled(f: LatencyFunction, a: float = 1.0, b: float = 1.0) -> LatencyFunction:
    if a == 1.0 and b == 1.0:
        return f
    return Scaled(a, b, f)


def from_dict(d: dict) -> LatencyFunction:
    family = d.get("family")
    if family == "poly":
        return Polynomial(tuple(d["coeffs"]))
    if family == "const":
        return Constant(d["c"])
    if family == "scaled":
        return Scaled(d["a"], d["b"], from_dict(d["inner"]))
    raise ValidationError(f"unknown latency family: {family!r}")


def parse_spec(spec: str) -> LatencyFunction:
    """Parse ``poly:<c0>,<c1>,...`` or ``const:<c>``."""
    try:
        family, _, rest = spec.partition(":")
        family = family.strip().lower()
        if family == "poly":
            return Polynomial(tuple(float(t) for t in rest.split(",")))
        if family == "const":
            return Constant(float(rest))
    except ValueError as exc:
        raise ValidationError(f"bad latency spec {spec!r}: {exc}") from exc
    raise ValidationError(f"bad latency spec {spec!r}; expected poly:... or const:...")


def g_log(f: LatencyFunction, x):
    """``x * ln f(x)`` with the convention ``0 * ln f(0) = 0``."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * f.log(safe), 0.0)


def check_quasi_log_convex(f: LatencyFunction, grid: Sequence[float] | None = None, tol=1e-9) -> bool:
    """Sampled chord test of convexity of ``x ln f(x)``.

    For consecutive grid points x < y < z, checks that the point at y lies
    below the chord from x to z (up to ``tol`` relative slack).
    """
    xs = np.asarray(grid if grid is not None else np.logspace(-3, 3, 200), dtype=float)
    g = g_log(f, xs)
    x, y, z = xs[:-2], xs[1:-1], xs[2:]
    t = (y - x) / (z - x)
    chord = (1 - t) * g[:-2] + t * g[2:]
    slack = tol * np.maximum(1.0, np.abs(chord))
    return bool(np.all(g[1:-1] <= chord + slack))
