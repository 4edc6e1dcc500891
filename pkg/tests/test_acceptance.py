"""Acceptance criteria, one test each.

Every criterion prints a single ``[PASS]``/``[FAIL]`` line with the measured
numbers and its runtime against the time budget. Run the file directly
(``python tests/test_acceptance.py``) for just those lines, or through pytest.
"""
from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import CATALOG, SMOOTH  # noqa: E402

from hermrank.gaussian_sim import (  # noqa: E402
    FgnModel,
    fgn_covariance,
    sample_autocovariance,
    sample_fgn,
    sample_fgn_batch,
)
from hermrank.hermite_core import (  # noqa: E402
    FunctionSpec,
    default_rule,
    expand,
    factorials,
    gauss_hermite_rule,
    rank_report,
    weierstrass,
    weierstrass_derivative,
)
from hermrank.instability_scan import Axis, ScanGrid, first_coefficient, scan_affine, scan_scale, scan_shift  # noqa: E402
from hermrank.regime_lab import (  # noqa: E402
    RegimeExperiment,
    ShiftSchedule,
    classify_limit,
    predict_regime,
    run_experiment,
    sample_mean_centered_sum,
)

Z = FunctionSpec.polynomial([0, 1])
Z2 = FunctionSpec.polynomial([0, 0, 1])
Z2M1 = FunctionSpec.polynomial([-1, 0, 1])
HE2 = FunctionSpec.hermite_combo([0, 0, 1])
HE3 = FunctionSpec.hermite_combo([0, 0, 0, 1])


def _line(number, title, ok, detail, elapsed, budget):
    within = elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    return f"[{status}] criterion {number:>2} {title}: {detail} ({elapsed:.1f} s, budget {budget:g} s)", ok and within


def _report(number, title, budget, check):
    start = time.perf_counter()
    ok, detail = check()
    text, passed = _line(number, title, ok, detail, time.perf_counter() - start, budget)
    print(text, flush=True)
    return passed, text


# -- individual criteria ---------------------------------------------------------------


def expansion_exactness():
    rule = gauss_hermite_rule(200)
    c = expand(Z2, 30, rule).coefficients
    target = np.zeros(31)
    target[[0, 2]] = 1
    err0 = float(np.max(np.abs(c - target)))
    err1 = 0.0
    for x in np.linspace(-1, 1, 5):
        for y in np.linspace(0.5, 2.0, 5):
            c = expand(Z2.with_affine(x, y), 30, rule).coefficients
            target = np.zeros(31)
            target[:3] = [x * x + y * y, 2 * x * y, y * y]
            err1 = max(err1, float(np.max(np.abs(c - target))))
    return err0 < 1e-12 and err1 < 1e-10, f"max error {err0:.1e} (z^2), {err1:.1e} (affine 5x5)"


def rank_coincidence():
    mismatches, total = [], 0
    for name, spec in CATALOG.items():
        rule = default_rule(spec)
        for x in np.linspace(-1, 1, 21):
            for y in np.linspace(0.5, 1.5, 11):
                r = rank_report(spec.with_affine(x, y), rule=rule)
                total += 1
                if r.hermite_rank != r.power_rank:
                    mismatches.append((name, x, y))
    return not mismatches, f"{len(mismatches)} mismatches over {total} (spec, x, y) points"


def rank_instability():
    shift = scan_shift(Z2M1, ScanGrid(Axis(-1, 1, 201)))
    ranks = shift.rank_map[:, 0]
    zero = int(np.argmin(np.abs(shift.x)))
    shift_ok = shift.x[zero] == 0 and ranks[zero] == 2 and np.sum(np.delete(ranks, zero) == 1) == 200
    scale = scan_scale(HE3, ScanGrid(Axis(0.01, 2, 200)))
    zeros_ok = len(scale.zero_locations) == 1 and abs(scale.zero_locations[0] - 1) < 1e-9
    cells_ok = all(
        r.extra["refined_zero_count"] <= r.zero_count
        and r.extra["refined_zero_cell_count"] <= r.extra["zero_cell_count"]
        for r in (shift, scale)
    )
    detail = (f"shift: {int(np.sum(np.delete(ranks, zero) == 1))} rank-1 points, rank {ranks[zero]} at 0; "
              f"scale zeros {[round(z, 6) for z in scale.zero_locations]}; "
              f"zero cells {shift.extra['zero_cell_count']}->{shift.extra['refined_zero_cell_count']}, "
              f"{scale.extra['zero_cell_count']}->{scale.extra['refined_zero_cell_count']} on refinement")
    return bool(shift_ok and zeros_ok and cells_ok), detail


def measure_zero_affine():
    steps = (50, 100, 200)
    fractions = [scan_affine(Z2, ScanGrid(Axis(-1, 1, s), Axis(2 / s, 2, s))).zero_fraction for s in steps]
    scaled = [f * s / (fractions[0] * steps[0]) for f, s in zip(fractions, steps)]
    ok = all(abs(v - 1) <= 0.3 for v in scaled)
    return ok, "zero_fraction " + ", ".join(f"{f:.4f}@{s}" for f, s in zip(fractions, steps)) + \
        f"; fraction*steps relative to 50: {', '.join(f'{v:.3f}' for v in scaled)}"


def fgn_exactness():
    parts, ok = [], True
    for H in (0.6, 0.8):
        paths = sample_fgn_batch(FgnModel(H, 2), range(100_000))
        r = float(np.corrcoef(paths.T)[0, 1])
        rho = fgn_covariance(H, 1)
        z = abs(r - rho) / ((1 - rho**2) / math.sqrt(len(paths)))
        ok &= z < 3
        parts.append(f"H={H}: r={r:.4f} vs {rho:.4f} ({z:.2f} SE)")
    R = 64
    acov = sample_autocovariance(sample_fgn_batch(FgnModel(0.7, 2**16), range(R)), 20)
    est, se = acov.mean(axis=0), acov.std(axis=0, ddof=1) / math.sqrt(R)
    zs = np.abs(est[1:] - fgn_covariance(0.7, np.arange(1, 21))) / se[1:]
    ok &= bool(np.all(zs < 3))
    parts.append(f"lags 1..20 at N=2^16 max {zs.max():.2f} SE")
    return ok, "; ".join(parts)


def _exponent(spec, H, schedule=ShiftSchedule(), centered=True, replicates=500):
    return run_experiment(RegimeExperiment(spec, H, schedule, centered, replicates=replicates))


def unperturbed_exponents():
    cases = [(HE2, 0.8, 0.60, 0.05), (HE2, 0.6, 0.50, 0.05), (Z, 0.7, 0.70, 0.03)]
    parts, ok = [], True
    for spec, H, target, tol in cases:
        r = _exponent(spec, H)
        ok &= abs(r.estimated_exponent - target) <= tol
        parts.append(f"k={r.rank},H={H}: {r.estimated_exponent:.3f}±{r.stderr:.3f} (target {target}±{tol})")
    return ok, "; ".join(parts)


def perturbed_regimes():
    betas = (0.05, 0.1, 0.2, 0.3, 0.35)
    runs = {b: _exponent(Z2M1, 0.8, ShiftSchedule.power_law(1.0, b)) for b in betas}
    est = [runs[b].estimated_exponent for b in betas]
    se = [runs[b].stderr for b in betas]
    a_ok = abs(runs[0.35].estimated_exponent - 0.60) <= 0.05 and runs[0.35].prediction.case_label == "NCLT-a"
    c_ok = abs(runs[0.1].estimated_exponent - 0.70) <= 0.05 and runs[0.1].prediction.case_label == "NCLT-c"
    # non-increasing in beta up to two joint standard errors, with a real overall drop
    mono = all(est[i + 1] <= est[i] + 2 * math.hypot(se[i], se[i + 1]) for i in range(len(betas) - 1))
    mono &= est[0] - est[-1] > 2 * math.hypot(se[0], se[-1])
    detail = ", ".join(f"β={b}: {e:.3f}" for b, e in zip(betas, est))
    return a_ok and c_ok and mono, f"{detail}; case a ok={a_ok}, case c ok={c_ok}, monotone={mono}"


def drift_regime():
    r = _exponent(Z2M1, 0.8, ShiftSchedule.power_law(4.0, 0.1), centered=False)
    ratio = np.array([row["sd"] / row["mean"] for row in r.table])
    n = np.array([row["N"] for row in r.table])
    fit = stats.linregress(np.log2(n), np.log2(ratio))
    shrinking = fit.slope + 2 * fit.stderr < 0 and ratio[-1] < ratio[0]
    alpha_ok = abs(r.estimated_exponent - 0.80) <= 0.05 and r.prediction.limit_family == "DeterministicDrift"
    return alpha_ok and shrinking, (f"α={r.estimated_exponent:.3f}±{r.stderr:.3f} (target 0.80±0.05); "
                                    f"sd/mean {ratio[0]:.3f}->{ratio[-1]:.3f}, log-slope {fit.slope:.3f}±{fit.stderr:.3f}")


def sample_mean_centering():
    parts, ok = [], True
    for H, target in ((0.8, 0.60), (0.6, 0.50)):
        r = _exponent(Z2M1, H, ShiftSchedule.sample_mean())
        ok &= abs(r.estimated_exponent - target) <= 0.05
        parts.append(f"H={H}: {r.estimated_exponent:.3f}±{r.stderr:.3f} (target {target}±0.05)")
    model = FgnModel(0.8, 4096)
    zero = all(sample_mean_centered_sum(sample_fgn(model, s), Z)[0] == 0.0 for s in range(500))
    linear = _exponent(Z, 0.8, ShiftSchedule.sample_mean())
    zero &= bool(np.all(linear.largest_sums == 0.0))
    parts.append(f"linear sum exactly zero on every path: {zero}")
    return ok and zero, "; ".join(parts)


def limit_shape():
    R, N = 2000, 2**15
    out, ok = [], True
    for H in (0.8, 0.6):
        exp = RegimeExperiment(Z2M1, H, n_grid=(N // 8, N // 4, N // 2, N), replicates=R)
        # only the largest N matters here; the run still records the whole grid
        sums = run_experiment(exp).largest_sums
        normalized = (sums - sums.mean()) / sums.std(ddof=1)
        shape = classify_limit(normalized, predict_regime(H, 2, ShiftSchedule.zero()))
        if H == 0.8:
            ok &= shape.skewness > 0.5
        else:
            ok &= -0.2 < shape.skewness < 0.2 and shape.jb_pvalue >= 0.01
        out.append(f"H={H}: skew {shape.skewness:.3f}, JB p={shape.jb_pvalue:.3f}")
    return ok, "; ".join(out)


def identity_suite():
    worst_smooth = worst_tail = worst_fd = worst_u = 0.0
    ok = True
    check_rule = gauss_hermite_rule(400)
    for name, spec in CATALOG.items():
        rule = default_rule(spec)
        for x in np.linspace(-2, 2, 9):
            shifted = spec.with_affine(x, 1.0)
            e = expand(shifted, 30, rule)
            energy = float(np.sum(factorials(30) * e.coefficients**2))
            if name in SMOOTH:
                # F_inf from an independent, finer rule
                f_inf = check_rule.integrate(shifted(check_rule.nodes) ** 2)
                gap = abs(f_inf - energy) / max(1.0, f_inf)
                worst_smooth = max(worst_smooth, gap)
                ok &= gap < 1e-8
            else:
                f_inf = rule.integrate(shifted(rule.nodes) ** 2)
                gap = abs(f_inf - energy)
                worst_tail = max(worst_tail, gap)
                ok &= gap <= max(1e-8, e.tail_mass) + 1e-12
            u = abs(first_coefficient(spec, x, 1.0, rule) - weierstrass_derivative(spec, 1, x, rule))
            worst_u = max(worst_u, u)
            ok &= u < 1e-10
    h = 1e-2
    for name in SMOOTH:
        spec = CATALOG[name]
        for m in range(1, 5):
            for x in (-0.8, 0.0, 0.5):
                exact = weierstrass_derivative(spec, m, x)
                fd = sum((-1) ** j * math.comb(m, j) * weierstrass(spec, x + (m / 2 - j) * h)
                         for j in range(m + 1)) / h**m
                rel = abs(fd - exact) / max(abs(exact), 1.0)
                worst_fd = max(worst_fd, rel)
                ok &= rel < 1e-4
    return ok, (f"Parseval gap {worst_smooth:.1e} (smooth), {worst_tail:.1e} within tail bound (non-smooth); "
                f"finite-difference {worst_fd:.1e}, "
                f"first coefficient vs derivative {worst_u:.1e}")


CRITERIA = [
    (1, "expansion exactness", 1, expansion_exactness),
    (2, "rank coincidence", 30, rank_coincidence),
    (3, "instability of rank", 30, rank_instability),
    (4, "measure-zero affine set", 30, measure_zero_affine),
    (5, "fGn exactness", 120, fgn_exactness),
    (6, "unperturbed exponents", 600, unperturbed_exponents),
    (7, "perturbed regimes", 900, perturbed_regimes),
    (8, "drift regime", 600, drift_regime),
    (9, "sample-mean centering", 600, sample_mean_centering),
    (10, "limit shape", 300, limit_shape),
    (11, "numerical identity suite", 60, identity_suite),
]


@pytest.mark.slow
@pytest.mark.parametrize("number,title,budget,check", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, title, budget, check, capsys):
    # bypass capture so the verdict line lands in the normal pytest output
    with capsys.disabled():
        print()
        passed, text = _report(number, title, budget, check)
    assert passed, text


if __name__ == "__main__":
    results = [_report(*c)[0] for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
