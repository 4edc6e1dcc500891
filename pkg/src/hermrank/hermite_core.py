"""Hermite expansions of functions of a standard Gaussian variable.

Everything here integrates against the standard Gaussian measure with a
Gauss-Hermite rule whose weights sum to one, so ``sum(w * f(nodes))``
approximates ``E f(Z)`` directly.

The transformations themselves come from a small catalog (``FunctionSpec``)
rather than arbitrary callables: every catalog entry stays square integrable
under any affine change of variable, and most have closed-form moments that
tests can check against.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite_e as _herme
from numpy.polynomial import polynomial as _poly
from scipy.special import roots_hermitenorm

from .config import DEFAULTS
from .errors import EvaluationError, NumericalFailure, RankExceedsTruncation, SpecError

#: Rank sentinel for functions that are constant almost everywhere.
CONSTANT = "constant"

_KIND_ALIASES = {
    "poly": "poly",
    "polynomial": "poly",
    "hermite": "hermite",
    "hermite_combo": "hermite",
    "abs": "abs",
    "exp": "exp",
    "signed_power": "signed_power",
    "indicator": "indicator",
}
_N_PARAMS = {"abs": 0, "exp": 0, "signed_power": 1, "indicator": 1}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FunctionSpec:
    """A catalog function composed with an affine map: ``z -> base(shift + scale * z)``.

    ``kind`` is one of ``poly`` (ascending power coefficients), ``hermite``
    (coefficients on He_0, He_1, ...), ``abs``, ``exp``, ``signed_power``
    (``sign(u) |u|**p``) and ``indicator`` (``1{u > a}``).
    """

    kind: str
    params: tuple = ()
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind)
        if kind is None:
            raise SpecError(f"unknown function kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        try:
            params = tuple(float(p) for p in self.params)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"params must be numbers, got {self.params!r}") from exc
        object.__setattr__(self, "params", params)
        if kind in ("poly", "hermite"):
            if not params:
                raise SpecError(f"{kind} needs a non-empty coefficient vector")
        elif len(params) != _N_PARAMS[kind]:
            raise SpecError(f"{kind} takes {_N_PARAMS[kind]} parameter(s), got {len(params)}")
        if kind == "signed_power" and not params[0] > 0:
            raise SpecError("signed_power exponent must be positive")
        if not all(math.isfinite(p) for p in params):
            raise SpecError("params must be finite")
        shift, scale = float(self.shift), float(self.scale)
        if not math.isfinite(shift):
            raise SpecError("shift must be finite")
        if not (math.isfinite(scale) and scale > 0):
            raise SpecError(f"scale must be positive and finite, got {self.scale!r}")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)

    # constructors -----------------------------------------------------------

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "FunctionSpec":
        return cls("poly", tuple(coefficients))

    @classmethod
    def hermite_combo(cls, coefficients: Sequence[float]) -> "FunctionSpec":
        return cls("hermite", tuple(coefficients))

    @classmethod
    def absolute(cls) -> "FunctionSpec":
        return cls("abs")

    @classmethod
    def exponential(cls) -> "FunctionSpec":
        return cls("exp")

    @classmethod
    def signed_power(cls, p: float) -> "FunctionSpec":
        return cls("signed_power", (p,))

    @classmethod
    def indicator(cls, threshold: float = 0.0) -> "FunctionSpec":
        return cls("indicator", (threshold,))

    def with_affine(self, shift: float = 0.0, scale: float = 1.0) -> "FunctionSpec":
        return FunctionSpec(self.kind, self.params, shift, scale)

    def then_affine(self, shift: float = 0.0, scale: float = 1.0) -> "FunctionSpec":
        """Precompose with another affine map: ``z -> self(shift + scale * z)``."""
        return FunctionSpec(self.kind, self.params, self.shift + self.scale * shift, self.scale * scale)

    def times(self, a: float) -> "FunctionSpec":
        """Multiply a polynomial spec by a constant."""
        if not self.is_polynomial:
            raise SpecError("only polynomial specs can be rescaled")
        return FunctionSpec(self.kind, tuple(a * p for p in self.params), self.shift, self.scale)

    # evaluation -------------------------------------------------------------

    def base(self, u):
        u = np.asarray(u, dtype=float)
        k = self.kind
        if k == "poly":
            return _poly.polyval(u, self.params)
        if k == "hermite":
            return _herme.hermeval(u, self.params)
        if k == "abs":
            return np.abs(u)
        if k == "exp":
            with np.errstate(over="ignore"):
                return np.exp(u)
        if k == "signed_power":
            return np.sign(u) * np.abs(u) ** self.params[0]
        return (u > self.params[0]).astype(float)

    def __call__(self, z):
        return self.base(self.shift + self.scale * np.asarray(z, dtype=float))

    @property
    def is_polynomial(self) -> bool:
        return self.kind in ("poly", "hermite")

    def power_coefficients(self) -> np.ndarray:
        """Ascending power coefficients of ``z -> self(z)`` (polynomial specs only)."""
        if not self.is_polynomial:
            raise SpecError(f"{self.kind} is not a polynomial")
        base = np.array(self.params)
        if self.kind == "hermite":
            base = _herme.herme2poly(base)
        composed = _poly.Polynomial(base)(_poly.Polynomial([self.shift, self.scale]))
        return composed.coef

    # serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "base": {"kind": self.kind, "params": list(self.params)},
            "shift": self.shift,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionSpec":
        try:
            base = d["base"]
            return cls(base["kind"], tuple(base.get("params", ())), d.get("shift", 0.0), d.get("scale", 1.0))
        except (KeyError, TypeError, AttributeError) as exc:
            raise SpecError(f"malformed function spec: {d!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "FunctionSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"function spec is not valid JSON: {exc}") from exc
        return cls.from_dict(d)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_hermite_rule(node_count: int) -> QuadratureRule:
    """Gauss rule for the standard Gaussian density, weights summing to one.

    Exact for polynomials of degree ``2 * node_count - 1``.
    """
    if node_count < 2:
        raise ValueError(f"node_count must be at least 2, got {node_count}")
    try:
        nodes, weights = roots_hermitenorm(int(node_count))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Gauss-Hermite rule with {node_count} nodes failed: {exc}") from exc
    if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
        raise NumericalFailure(f"Gauss-Hermite rule with {node_count} nodes is not finite")
    # symmetrize: the generator is symmetric only up to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / weights.sum()
    return QuadratureRule(_frozen(nodes), _frozen(weights))


def default_rule(spec: FunctionSpec) -> QuadratureRule:
    n = DEFAULTS.indicator_nodes if spec.kind == "indicator" else DEFAULTS.nodes
    return gauss_hermite_rule(n)


def hermite_poly(m: int, x):
    """Probabilists' Hermite polynomial He_m at ``x`` (scalar or array)."""
    if m < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x.copy()
    if m == 0:
        h = h_prev
    for j in range(1, m):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


def hermite_matrix(order: int, x) -> np.ndarray:
    """Rows ``He_0(x), ..., He_order(x)``, shape ``(order + 1, len(x))``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((order + 1,) + x.shape)
    out[0] = 1.0
    if order >= 1:
        out[1] = x
    for j in range(1, order):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


def factorials(order: int) -> np.ndarray:
    return np.array([math.factorial(m) for m in range(order + 1)], dtype=float)


@dataclass(frozen=True)
class HermiteExpansion:
    coefficients: np.ndarray
    truncation_order: int
    node_count: int
    l2_norm_sq: float
    tail_mass: float
    #: ``E (G(Z) - E G(Z))**2``, computed directly so constants come out exactly zero.
    variance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "truncation_order": self.truncation_order,
            "node_count": self.node_count,
            "l2_norm_sq": self.l2_norm_sq,
            "tail_mass": self.tail_mass,
            "variance": self.variance,
        }


def node_values(spec: FunctionSpec, points) -> np.ndarray:
    """``spec`` at ``points``; raises ``EvaluationError`` on any non-finite value."""
    with np.errstate(over="ignore", invalid="ignore"):
        values = spec(points)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"{spec.kind} spec is not finite at some quadrature node")
    return values


def project(values: np.ndarray, rule: QuadratureRule, order: int) -> np.ndarray:
    """Hermite coefficients of node values, vectorized over leading axes."""
    basis = hermite_matrix(order, rule.nodes) * rule.weights
    return np.asarray(values) @ basis.T / factorials(order)


def expand(spec: FunctionSpec, order: int = DEFAULTS.order, rule: QuadratureRule | None = None) -> HermiteExpansion:
    """Coefficients ``c_m = E[G(Z) He_m(Z)] / m!`` for ``m = 0..order``."""
    if order < 2:
        raise ValueError("truncation order must be at least 2")
    rule = rule or default_rule(spec)
    values = node_values(spec, rule.nodes)
    coefficients = project(values, rule, order)
    l2 = rule.integrate(values**2)
    energy = float(np.sum(factorials(order) * coefficients**2))
    variance = rule.integrate((values - coefficients[0]) ** 2)
    return HermiteExpansion(_frozen(coefficients), order, rule.node_count, l2, l2 - energy, variance)


@dataclass(frozen=True)
class RankReport:
    hermite_rank: int | str
    power_rank: int | str | None
    leading_coefficient: float
    tolerance_used: float
    coefficient_magnitudes: np.ndarray = field(repr=False)

    @property
    def is_constant(self) -> bool:
        return self.hermite_rank == CONSTANT

    def to_dict(self) -> dict:
        return {
            "hermite_rank": self.hermite_rank,
            "power_rank": self.power_rank,
            "leading_coefficient": self.leading_coefficient,
            "tolerance_used": self.tolerance_used,
            "coefficient_magnitudes": [float(c) for c in self.coefficient_magnitudes],
        }


def _first_significant(magnitudes, threshold) -> int | None:
    m = np.asarray(magnitudes)[1:]
    hits = np.nonzero((m >= threshold) & (m > 0))[0]
    return int(hits[0]) + 1 if len(hits) else None


def hermite_rank(expansion: HermiteExpansion, tol: float = DEFAULTS.rank_tol) -> RankReport:
    """Smallest ``m >= 1`` with ``sqrt(m!) |c_m| >= tol * ||G||``.

    Returns ``CONSTANT`` when no such order exists and the function has no
    energy left around its mean; raises ``RankExceedsTruncation`` when energy
    remains beyond the truncation order.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    c = expansion.coefficients
    magnitudes = np.sqrt(factorials(expansion.truncation_order)) * np.abs(c)
    threshold = tol * math.sqrt(expansion.l2_norm_sq)
    k = _first_significant(magnitudes, threshold)
    if k is None:
        if expansion.variance <= tol**2 * expansion.l2_norm_sq:
            return RankReport(CONSTANT, None, 0.0, tol, _frozen(magnitudes))
        raise RankExceedsTruncation(
            f"no coefficient up to order {expansion.truncation_order} exceeds tolerance "
            f"but {expansion.variance:.3g} of variance remains"
        )
    return RankReport(k, None, float(math.factorial(k) * c[k]), tol, _frozen(magnitudes))


def weierstrass(spec: FunctionSpec, x: float, rule: QuadratureRule | None = None) -> float:
    """``G_inf(x) = E G(Z + x)``."""
    rule = rule or default_rule(spec)
    return rule.integrate(node_values(spec, rule.nodes + x))


def weierstrass_derivative(spec: FunctionSpec, m: int, x: float, rule: QuadratureRule | None = None) -> float:
    """m-th derivative of ``G_inf`` at ``x``, as ``E[G(Z + x) He_m(Z)]``."""
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    rule = rule or default_rule(spec)
    values = node_values(spec, rule.nodes + x)
    return rule.integrate(values * hermite_poly(m, rule.nodes))


def power_rank(
    spec: FunctionSpec,
    tol: float = DEFAULTS.rank_tol,
    rule: QuadratureRule | None = None,
    order: int = DEFAULTS.order,
) -> int | str:
    """Smallest ``m >= 1`` with a non-vanishing derivative of ``G_inf`` at 0."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    rule = rule or default_rule(spec)
    values = node_values(spec, rule.nodes)
    norm = math.sqrt(rule.integrate(values**2))
    for m in range(1, order + 1):
        d = weierstrass_derivative(spec, m, 0.0, rule)
        if abs(d) >= tol * math.sqrt(math.factorial(m)) * norm and d != 0:
            return m
    mean = rule.integrate(values)
    if rule.integrate((values - mean) ** 2) <= tol**2 * norm**2:
        return CONSTANT
    raise RankExceedsTruncation(f"no derivative up to order {order} of G_inf is nonzero at 0")


def rank_report(
    spec: FunctionSpec,
    tol: float = DEFAULTS.rank_tol,
    rule: QuadratureRule | None = None,
    order: int = DEFAULTS.order,
) -> RankReport:
    """Hermite rank and power rank of ``spec`` side by side."""
    rule = rule or default_rule(spec)
    report = hermite_rank(expand(spec, order, rule), tol)
    pr = power_rank(spec, tol, rule, order)
    return RankReport(report.hermite_rank, pr, report.leading_coefficient, tol, report.coefficient_magnitudes)


def gaussian_moment(j: int) -> float:
    """``E Z**j`` for standard normal ``Z``."""
    if j % 2:
        return 0.0
    return float(math.prod(range(j - 1, 0, -2)))
