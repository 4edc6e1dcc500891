"""Grid scans of the first Hermite coefficient under shift, scale and affine maps.

The first coefficient ``U(x, y) = E[Z G(x + y Z)]`` vanishes exactly where the
perturbed function has Hermite rank 2 or more. Its zero set is isolated along
a shift or scale axis and is a curve in the affine plane, so grid refinement
must not multiply 1-D zeros, and the fraction of 2-D cells meeting the zero
set must shrink like ``1/steps``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DEFAULTS
from .errors import ConstantFunction, InputError, SymmetricFunction
from .hermite_core import (
    CONSTANT,
    FunctionSpec,
    QuadratureRule,
    default_rule,
    expand,
    factorials,
    hermite_rank,
    project,
    node_values,
)


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InputError(f"axis needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.steps) != self.steps or self.steps < 3:
            raise InputError(f"axis needs at least 3 steps, got {self.steps}")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(self.steps))

    def refined(self) -> "Axis":
        """Twice the resolution, keeping every existing point."""
        return Axis(self.lo, self.hi, 2 * int(self.steps) - 1)


@dataclass(frozen=True)
class ScanGrid:
    """Shift axis (``x``) and optional scale axis (``y``, strictly positive).

    A scale-only scan puts its scale values in ``x_axis`` and leaves ``y_axis`` empty.
    """

    x_axis: Axis
    y_axis: Axis | None = None
    exclusions: tuple = ()

    def __post_init__(self):
        if self.y_axis is not None and self.y_axis.lo <= 0:
            raise InputError("scale axis must lie in (0, inf)")


@dataclass
class ZeroSetReport:
    mode: str
    x: np.ndarray
    y: np.ndarray
    grid_values: np.ndarray
    rank_map: np.ndarray
    sign_change_cells: list
    zero_locations: list
    zero_fraction: float
    isolated: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def zero_count(self) -> int:
        return len(self.zero_locations)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "resolution": list(self.grid_values.shape),
            "zero_count": self.zero_count,
            "zero_locations": [list(map(float, np.atleast_1d(z))) for z in self.zero_locations],
            "sign_change_cells": [list(map(int, np.atleast_1d(c))) for c in self.sign_change_cells],
            "zero_fraction": self.zero_fraction,
            "isolated": self.isolated,
            **self.extra,
        }

    def write_csv(self, path, header_lines=()) -> None:
        with Path(path).open("w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "y", "U", "rank"])
            xs, ys = np.broadcast_arrays(self.x[:, None], self.y[None, :])
            values = self.grid_values.reshape(xs.shape)
            ranks = self.rank_map.reshape(xs.shape)
            for i in range(xs.shape[0]):
                for j in range(xs.shape[1]):
                    w.writerow([repr(float(xs[i, j])), repr(float(ys[i, j])), repr(float(values[i, j])), int(ranks[i, j])])

    def write_json(self, path, extra=None) -> None:
        d = self.summary()
        if extra:
            d.update(extra)
        Path(path).write_text(json.dumps(d, indent=2) + "\n")


def first_coefficient(spec: FunctionSpec, x: float, y: float, rule: QuadratureRule | None = None) -> float:
    """``U(x, y) = E[Z G(x + y Z)]`` for the affinely perturbed spec."""
    if not y > 0:
        raise InputError("scale must be positive")
    rule = rule or default_rule(spec)
    values = node_values(spec, x + y * rule.nodes)
    return rule.integrate(values * rule.nodes)


def _affine_values(spec, xs, ys, rule):
    pts = xs[:, None, None] + ys[None, :, None] * rule.nodes[None, None, :]
    return node_values(spec, pts)


def _grid_coefficients(spec, xs, ys, rule, order, budget=2_000_000):
    rows = max(1, budget // (len(ys) * rule.node_count))
    parts = []
    for start in range(0, len(xs), rows):
        values = _affine_values(spec, xs[start:start + rows], ys, rule)
        coeffs = project(values, rule, order)
        l2 = values**2 @ rule.weights
        variance = (values - coeffs[..., :1]) ** 2 @ rule.weights
        parts.append((coeffs, l2, variance))
    return tuple(np.concatenate(p) for p in zip(*parts))


def _ranks(coeffs, l2, variance, tol, order):
    """Hermite rank at every grid point; ``0`` marks a constant, ``-1`` a rank beyond ``order``."""
    mags = np.sqrt(factorials(order)) * np.abs(coeffs)
    hit = (mags[..., 1:] >= tol * np.sqrt(l2)[..., None]) & (mags[..., 1:] > 0)
    ranks = np.where(hit.any(axis=-1), hit.argmax(axis=-1) + 1, -1)
    constant = ~hit.any(axis=-1) & (variance <= tol**2 * l2)
    return np.where(constant, 0, ranks)


def is_symmetric(spec: FunctionSpec, tol: float = DEFAULTS.rank_tol, rule: QuadratureRule | None = None,
                 order: int = DEFAULTS.order) -> bool:
    """Numerical surrogate for "even almost everywhere": every odd coefficient is negligible."""
    exp = expand(spec, order, rule or default_rule(spec))
    mags = np.sqrt(factorials(order)) * np.abs(exp.coefficients)
    return bool(np.all(mags[1::2] < tol * math.sqrt(exp.l2_norm_sq)))


def _require_nonconstant(spec, tol, rule):
    if hermite_rank(expand(spec, DEFAULTS.order, rule), tol).hermite_rank == CONSTANT:
        raise ConstantFunction("a constant function has no rank to perturb")


def _zeros_1d(t: np.ndarray, u: np.ndarray, thresh: np.ndarray):
    """Distinct zeros of sampled ``u``: sign changes, near-zero runs, tangential minima."""
    near = np.abs(u) < thresh
    sign = np.where(near, 0, np.sign(u))
    cells, zeros = [], []
    i = 0
    while i < len(t):
        if near[i]:
            j = i
            while j + 1 < len(t) and near[j + 1]:
                j += 1
            zeros.append(float(np.mean(t[i:j + 1])))
            cells.extend(c for c in (i - 1, j) if 0 <= c < len(t) - 1)
            i = j + 1
            continue
        if i + 1 < len(t) and sign[i] * sign[i + 1] < 0:
            # linear interpolation inside the cell
            zeros.append(float(t[i] - u[i] * (t[i + 1] - t[i]) / (u[i + 1] - u[i])))
            cells.append(i)
        i += 1
    # tangential zeros: |u| has a local minimum that a parabola drives to zero
    for i in range(1, len(t) - 1):
        if near[i - 1:i + 2].any() or not (sign[i - 1] == sign[i] == sign[i + 1]):
            continue
        a = np.abs(u[i - 1:i + 2])
        if not (a[1] <= a[0] and a[1] <= a[2]) or a[1] == a[0] == a[2]:
            continue
        coef = np.polyfit(t[i - 1:i + 2] - t[i], u[i - 1:i + 2], 2)
        if coef[0] == 0:
            continue
        v = -coef[1] / (2 * coef[0])
        if abs(v) > t[i + 1] - t[i] or abs(np.polyval(coef, v)) >= thresh[i]:
            continue
        if not any(abs(z - (t[i] + v)) <= t[i + 1] - t[i] for z in zeros):
            zeros.append(float(t[i] + v))
            cells.append(i - 1 if v < 0 else i)
    return sorted(set(cells)), sorted(zeros)


def _scan_1d(spec, t, xs, ys, mode, tol, rule, order):
    coeffs, l2, variance = _grid_coefficients(spec, xs, ys, rule, order)
    coeffs, l2, variance = coeffs.reshape(len(t), -1), l2.reshape(-1), variance.reshape(-1)
    u = coeffs[:, 1]
    thresh = tol * np.sqrt(l2)
    cells, zeros = _zeros_1d(t, u, thresh)
    ranks = _ranks(coeffs, l2, variance, tol, order)
    return ZeroSetReport(mode, xs, ys, u.reshape(len(xs), len(ys)), ranks.reshape(len(xs), len(ys)), cells, zeros,
                         len(cells) / (len(t) - 1))


def _check_isolation(report_fn, axis):
    coarse = report_fn(axis)
    fine = report_fn(axis.refined())
    coarse.isolated = fine.zero_count <= coarse.zero_count
    coarse.extra["refined_zero_count"] = fine.zero_count
    coarse.extra["zero_cell_count"] = len(coarse.sign_change_cells)
    coarse.extra["refined_zero_cell_count"] = len(fine.sign_change_cells)
    return coarse


def scan_shift(spec: FunctionSpec, grid: ScanGrid, tol: float = DEFAULTS.rank_tol,
               rule: QuadratureRule | None = None, order: int = DEFAULTS.order, refine: bool = True) -> ZeroSetReport:
    """``U(x) = E[Z G(x + Z)]`` along the shift axis."""
    rule = rule or default_rule(spec)
    _require_nonconstant(spec, tol, rule)

    def run(axis):
        xs = axis.points()
        return _scan_1d(spec, xs, xs, np.array([1.0]), "shift", tol, rule, order)

    return _check_isolation(run, grid.x_axis) if refine else run(grid.x_axis)


def scan_scale(spec: FunctionSpec, grid: ScanGrid, tol: float = DEFAULTS.rank_tol,
               rule: QuadratureRule | None = None, order: int = DEFAULTS.order, refine: bool = True) -> ZeroSetReport:
    """``U(y) = E[Z G(y Z)]`` along the scale axis; symmetric functions are rejected."""
    axis = grid.y_axis or grid.x_axis
    if axis.lo <= 0:
        raise InputError("scale axis must lie in (0, inf)")
    rule = rule or default_rule(spec)
    _require_nonconstant(spec, tol, rule)
    if is_symmetric(spec, tol, rule, order):
        raise SymmetricFunction("an even function keeps Hermite rank 2 under every scale change")

    def run(ax):
        ys = ax.points()
        return _scan_1d(spec, ys, np.array([0.0]), ys, "scale", tol, rule, order)

    return _check_isolation(run, axis) if refine else run(axis)


def scan_affine(spec: FunctionSpec, grid: ScanGrid, tol: float = DEFAULTS.rank_tol,
                rule: QuadratureRule | None = None, order: int = DEFAULTS.order) -> ZeroSetReport:
    """``U(x, y)`` over a 2-D grid; a cell meets the zero set when its corners straddle zero."""
    if grid.y_axis is None:
        raise InputError("affine scans need a scale axis")
    rule = rule or default_rule(spec)
    _require_nonconstant(spec, tol, rule)
    xs, ys = grid.x_axis.points(), grid.y_axis.points()
    coeffs, l2, variance = _grid_coefficients(spec, xs, ys, rule, order)
    u = coeffs[..., 1]
    sign = np.where(np.abs(u) < tol * np.sqrt(l2), 0, np.sign(u))
    corners = np.stack([sign[:-1, :-1], sign[1:, :-1], sign[:-1, 1:], sign[1:, 1:]])
    hit = (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0)
    cells = [tuple(ij) for ij in np.argwhere(hit)]
    centers = [(float(0.5 * (xs[i] + xs[i + 1])), float(0.5 * (ys[j] + ys[j + 1]))) for i, j in cells]
    ranks = _ranks(coeffs, l2, variance, tol, order)
    return ZeroSetReport("affine", xs, ys, u, ranks, cells, centers, float(hit.mean()))
