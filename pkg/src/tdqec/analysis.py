"""Infidelity-curve fits, logical error rates, thresholds, suppression
factors, and qubit-count extrapolation.

Fidelity model convention: the fitted fidelity is 0.5*(1 + exp(-eps*(t-tau)))
(equivalently infidelity 0.5*(1 - exp(-eps*(t-tau)))), decaying to the fully
mixed value 0.5 at rate eps after an onset time tau.  Short times, where the
infidelity instead follows the combinatorial t^(ell+1) law, are suppressed by
a multiplicative bias weight.  The suppression factor is defined as
Lambda = gamma_e_star / gamma_e (the inverse-law fit constant over the
physical error rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .engines.records import TimeSeries

FIT_MIN_POINTS = 20
FIT_XTOL = 1e-10
FIT_MAX_ITER = 200


class FitError(RuntimeError):
    """Degenerate data or a fit that failed to converge."""


@dataclass
class FitResult:
    epsilon: float               # decay rate of the fidelity toward 0.5
    tau: float                   # onset time of the slow regime
    covariance: np.ndarray       # 2x2, (epsilon, tau) ordering
    residual_norm: float
    p_l: float                   # epsilon * tau
    n_points: int
    time_unit: str = "absolute"


def _infidelity_model(t: np.ndarray, eps: float, tau: float) -> np.ndarray:
    # fidelity clipped to [0.5, 1] before the onset: zero infidelity at t < tau
    x = np.clip(-eps * np.maximum(t - tau, 0.0), -200.0, 200.0)
    return 0.5 * (1.0 - np.exp(x))


def _bias_weight(t: np.ndarray, tau_est: float, ell: int) -> np.ndarray:
    """1 / (1 + (t/tau_est)^-(ell+1)): suppresses the combinatorial regime."""
    logr = np.log(np.clip(t, 1e-300, None) / tau_est)
    return 1.0 / (1.0 + np.exp(np.clip(-(ell + 1) * logr, -200.0, 200.0)))


def _initial_guess(t: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    # y = -ln(1 - 2 I) is exactly eps*(t - tau) under the model
    k = max(5, len(t) // 4)
    tt, yy = t[-k:], y[-k:]
    a, b = np.polyfit(tt, yy, 1)
    if a > 0 and -b / a > 0:
        return a, -b / a
    eps0 = max(y[-1], 1e-12) / t[-1]
    return eps0, t[-1] / 10.0


def fit_infidelity(series: TimeSeries, ell: int) -> FitResult:
    """Biased Levenberg-Marquardt fit of the fidelity-decay model.

    Fits (eps, tau) in log space (both are positive scale parameters) with
    residuals weighted by the t^(ell+1) bias; the bias pivot is iterated once
    from the first-pass tau.  Converged when the relative parameter update
    drops below 1e-10 or after 200 iterations.
    """
    t_all = np.asarray(series.times, dtype=float)
    v_all = np.asarray(series.values, dtype=float)
    keep = t_all > 0
    t, v = t_all[keep], v_all[keep]
    if len(t) < FIT_MIN_POINTS:
        raise FitError(f"need at least {FIT_MIN_POINTS} positive-time points, got {len(t)}")
    if np.max(v) - np.min(v) < 1e-12 or np.max(v) <= 0:
        raise FitError("degenerate (flat) infidelity data")

    y = -np.log(1.0 - 2.0 * np.clip(v, None, 0.5 - 1e-12))
    eps0, tau0 = _initial_guess(t, y)

    def solve(tau_est: float, theta0):
        w = _bias_weight(t, tau_est, ell)

        def resid(theta):
            eps, tau = np.exp(theta)
            return w * (_infidelity_model(t, eps, tau) - v)

        return least_squares(
            resid,
            theta0,
            method="lm",
            xtol=FIT_XTOL,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=FIT_MAX_ITER * 3,
        )

    theta0 = np.log([eps0, tau0])
    first = solve(tau0, theta0)
    tau_est = float(np.exp(first.x[1]))
    result = solve(tau_est, first.x)
    if not np.all(np.isfinite(result.x)):
        raise FitError("fit failed to converge")

    eps, tau = np.exp(result.x)
    jac = result.jac
    m = len(t)
    try:
        cov_log = np.linalg.inv(jac.T @ jac) * (2.0 * result.cost / max(m - 2, 1))
    except np.linalg.LinAlgError:
        cov_log = np.full((2, 2), np.nan)
    scale = np.diag([eps, tau])
    cov = scale @ cov_log @ scale
    return FitResult(
        epsilon=float(eps),
        tau=float(tau),
        covariance=cov,
        residual_norm=float(np.sqrt(2.0 * result.cost)),
        p_l=float(eps * tau),
        n_points=m,
        time_unit=series.meta.get("time_unit", "absolute"),
    )


def logical_error_rate(fit: FitResult) -> float:
    """p_L = eps * tau; dimensionless, so invariant under consistent
    rescaling of the time unit used for the series and the rates."""
    return fit.epsilon * fit.tau


# ---------------------------------------------------------------------------
# Suppression factor
# ---------------------------------------------------------------------------

@dataclass
class LambdaEstimate:
    gamma_e: np.ndarray            # swept error rates
    pair_ratios: dict              # gamma_e -> list of (n_i, n_j, ratio)
    lambda_mean: np.ndarray        # mean ratio per gamma_e
    a: float                       # inverse-law fit f = A/gamma_e + B
    b: float
    gamma_e_star: float            # = A

    def lambda_at(self, gamma_e: float) -> float:
        i = int(np.argmin(np.abs(self.gamma_e - gamma_e)))
        return float(self.lambda_mean[i])


def lambda_estimate(
    p_l_table: Dict[tuple, float],
    k_values: Optional[Sequence[int]] = None,
    exclude_sizes: Sequence[int] = (3,),
) -> LambdaEstimate:
    """Per-pair suppression ratios (p_L,i / p_L,i+k)^(1/k) and the inverse fit.

    Sizes are ordered code sizes (each step is one code-distance increment);
    k is the index distance in that ordering.  Size-3 codes are excluded.
    """
    sizes = sorted({n for n, _ in p_l_table} - set(exclude_sizes))
    if len(sizes) < 3:
        raise ValueError("need at least 3 code sizes")
    gammas = sorted({g for n, g in p_l_table if n in sizes})
    gammas = [g for g in gammas if all((n, g) in p_l_table for n in sizes)]
    if not gammas:
        raise ValueError("no error rate covers all requested sizes")

    pair_ratios = {}
    means = []
    for g in gammas:
        ratios = []
        for ia in range(len(sizes)):
            for ib in range(ia + 1, len(sizes)):
                k = ib - ia
                if k_values is not None and k not in k_values:
                    continue
                pa = p_l_table[(sizes[ia], g)]
                pb = p_l_table[(sizes[ib], g)]
                if pa > 0 and pb > 0:
                    ratios.append((sizes[ia], sizes[ib], (pa / pb) ** (1.0 / k)))
        if not ratios:
            raise ValueError(f"no valid ratios at gamma_e={g}")
        pair_ratios[g] = ratios
        means.append(float(np.mean([r for _, _, r in ratios])))

    g_arr = np.array(gammas)
    mean_arr = np.array(means)
    design = np.column_stack([1.0 / g_arr, np.ones_like(g_arr)])
    coef, *_ = np.linalg.lstsq(design, mean_arr, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    return LambdaEstimate(g_arr, pair_ratios, mean_arr, a, b, a)


# ---------------------------------------------------------------------------
# Threshold
# ---------------------------------------------------------------------------

@dataclass
class ThresholdResult:
    threshold: float
    crossings: list          # (n_small, n_large, gamma_e) per successive pair


def threshold_estimate(p_l_table: Dict[tuple, float]) -> ThresholdResult:
    """Error rate below which growing the code suppresses p_L.

    The per-pair crossings of log p_L vs log gamma_e (linear interpolation
    between sweep points) fan around the pinch of the curve bundle, so the
    estimate is the dispersion minimum: the gamma_e minimizing the spread of
    log p_L across code sizes, refined parabolically between grid points.
    For an exact power-law family with a common prefactor both notions
    collapse onto gamma_e_star.  The successive-pair crossings are retained
    for inspection.
    """
    sizes = sorted({n for n, _ in p_l_table})
    if len(sizes) < 3:
        raise ValueError("need at least 3 code sizes")
    gammas = sorted(g for g in {g for _, g in p_l_table}
                    if all((n, g) in p_l_table and p_l_table[(n, g)] > 0 for n in sizes))
    if len(gammas) < 3:
        raise ValueError("need at least 3 error rates covering all sizes")

    crossings = []
    for na, nb in zip(sizes[:-1], sizes[1:]):
        diffs = [math.log(p_l_table[(nb, g)]) - math.log(p_l_table[(na, g)]) for g in gammas]
        logg = [math.log(g) for g in gammas]
        for i in range(len(diffs) - 1):
            if diffs[i] < 0 <= diffs[i + 1]:
                frac = -diffs[i] / (diffs[i + 1] - diffs[i])
                crossings.append((na, nb, math.exp(logg[i] + frac * (logg[i + 1] - logg[i]))))
                break
    if not crossings:
        raise ValueError("no threshold crossing inside the swept range")

    spread = np.array([
        np.std([math.log(p_l_table[(n, g)]) for n in sizes]) for g in gammas
    ])
    i = int(np.argmin(spread))
    logg = np.log(gammas)
    if 0 < i < len(gammas) - 1:
        # parabolic refinement through the three points around the minimum
        x = logg[i - 1: i + 2]
        y = spread[i - 1: i + 2]
        denom = (y[0] - 2 * y[1] + y[2])
        shift = 0.5 * (y[0] - y[2]) / denom if abs(denom) > 1e-300 else 0.0
        x_min = x[1] + np.clip(shift, -1.0, 1.0) * (x[2] - x[1])
    else:
        x_min = logg[i]
    return ThresholdResult(float(math.exp(x_min)), crossings)


# ---------------------------------------------------------------------------
# Qubit extrapolation
# ---------------------------------------------------------------------------

@dataclass
class QubitExtrapolation:
    ell_plus_one: float
    n_real: float
    n_rounded: int
    convention: str


def extrapolate_qubits(
    gamma_e_star: float,
    prefactor_c: float,
    gamma_e: float,
    target_p_l: float,
    convention: str = "distance",
) -> QubitExtrapolation:
    """Solve C*(gamma_e/gamma_e_star)^(ell+1) = target for the code size.

    convention="distance" uses ell = (n-1)/2 (the code-distance relation);
    convention="shifted" uses ell = (n+1)/2 for comparison with extrapolation
    plots drawn with that exponent.  Rounds up to the next odd n.
    """
    if gamma_e >= gamma_e_star:
        raise ValueError("no suppression: gamma_e must be below gamma_e_star")
    ell_plus_one = math.log(target_p_l / prefactor_c) / math.log(gamma_e / gamma_e_star)
    if ell_plus_one <= 0:
        raise ValueError("degenerate target: no positive correctable order solves it")
    if convention == "distance":
        n_real = 2.0 * ell_plus_one - 1.0
    elif convention == "shifted":
        n_real = 2.0 * ell_plus_one - 3.0
    else:
        raise ValueError(f"unknown exponent convention {convention!r}")
    n_rounded = max(3, int(math.ceil(n_real)))
    if n_rounded % 2 == 0:
        n_rounded += 1
    return QubitExtrapolation(ell_plus_one, n_real, n_rounded, convention)
