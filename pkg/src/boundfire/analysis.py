"""Confidence intervals, log-log exponent fits and bounded-ratio checks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

log = logging.getLogger(__name__)

RATIO_FACTOR = 10.0


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Examples
    --------
    >>> lo, hi = binomial_ci(50, 100)
    >>> round(lo, 4), round(hi, 4)
    (0.4038, 0.5962)
    """
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    z = float(norm.ppf(0.5 + level / 2.0))
    phat = successes / trials
    z2n = z * z / trials
    centre = (phat + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    # the Wilson interval always contains phat; guard against rounding
    return float(min(low, phat)), float(max(high, phat))


@dataclass
class PowerLawFit:
    """Weighted least-squares fit of ``log y = intercept + exponent * log n``."""

    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    points: list = field(default_factory=list)
    dropped: list = field(default_factory=list)

    def report(self, relation: str, target: float, tolerance: float) -> dict:
        return {
            "relation": relation,
            "exponent": self.exponent,
            "stderr": self.stderr,
            "target": target,
            "tolerance": tolerance,
            "pass": bool(abs(self.exponent - target) <= tolerance),
        }


def _unpack(point):
    if len(point) == 2:
        n, y = point
        ci = None
    else:
        n, y, ci = point[0], point[1], point[2]
    if hasattr(y, "p_hat"):
        ci = (y.ci_low, y.ci_high) if ci is None else ci
        y = y.p_hat
    return float(n), float(y), ci


def fit_power_law(points, level: float = 0.95) -> PowerLawFit:
    """Fit a power law to ``(n, estimate[, (ci_low, ci_high)])`` points.

    Each point is weighted by the inverse variance of ``log estimate``, taken
    from its confidence interval by the delta method.  Without intervals all
    points get equal weight and the standard error is scaled by the residual
    variance.  Points whose interval reaches 0 are dropped with a warning.

    Raises
    ------
    ValueError
        If fewer than three usable points remain or an estimate is not positive.
    """
    z = norm.ppf(0.5 + level / 2.0)
    xs, ys, sig, kept, dropped = [], [], [], [], []
    have_ci = True
    for point in points:
        n, y, ci = _unpack(point)
        if ci is not None and ci[0] <= 0.0:
            log.warning("dropping point n=%g from log fit: interval includes 0", n)
            dropped.append(point)
            continue
        if y <= 0.0 or n <= 0.0:
            raise ValueError(f"nonpositive value at n={n}")
        xs.append(math.log(n))
        ys.append(math.log(y))
        if ci is None or ci[1] <= ci[0]:
            have_ci = False
            sig.append(1.0)
        else:
            sig.append((ci[1] - ci[0]) / (2.0 * z * y))
        kept.append(point)
    if len(xs) < 3:
        raise ValueError("a power-law fit needs at least 3 usable points")
    x = np.array(xs)
    yv = np.array(ys)
    w = 1.0 / np.square(sig) if have_ci else np.ones_like(x)
    design = np.stack([np.ones_like(x), x], axis=1)
    fisher = design.T @ (design * w[:, None])
    coef = np.linalg.solve(fisher, design.T @ (w * yv))
    resid = yv - design @ coef
    cov = np.linalg.inv(fisher)
    if not have_ci:
        dof = len(x) - 2
        cov = cov * (float(resid @ resid) / dof if dof > 0 else 0.0)
    ybar = np.average(yv, weights=w)
    ss_tot = float(np.sum(w * (yv - ybar) ** 2))
    ss_res = float(np.sum(w * resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(
        exponent=float(coef[1]),
        intercept=float(coef[0]),
        stderr=float(math.sqrt(max(cov[1, 1], 0.0))),
        r_squared=r2,
        points=kept,
        dropped=dropped,
    )


def _value(x):
    return float(x.p_hat) if hasattr(x, "p_hat") else float(x)


def bounded_ratio(values, factor: float = RATIO_FACTOR) -> dict:
    vals = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        return {"values": vals.tolist(), "ratio": math.inf, "pass": False}
    ratio = float(vals.max() / vals.min())
    return {"values": vals.tolist(), "ratio": ratio, "pass": ratio <= factor}


def check_scaling_relations(rows, factor: float = RATIO_FACTOR) -> dict:
    """Bounded-ratio verdicts for the near-critical scaling relations.

    Parameters
    ----------
    rows : iterable of mapping
        One row per ``p`` with keys ``p``, ``L`` (characteristic length),
        ``pi4`` (four-arm probability at ``L``), ``theta`` (connection proxy
        at ``p``) and ``pi1`` (one-arm probability at ``L``).  Estimates may
        be floats or objects with a ``p_hat`` attribute.
    factor : float
        Largest accepted max/min ratio across the grid.

    Returns
    -------
    dict
        ``{"status": ..., "relations": {name: {...}}}``.  A grid with fewer
        than two distinct ``p`` values yields ``status == "insufficient grid"``.
    """
    rows = sorted((dict(r) for r in rows), key=lambda r: float(r["p"]))
    if len({float(r["p"]) for r in rows}) < 2:
        return {"status": "insufficient grid", "relations": {}}
    need = ("L", "pi4", "theta", "pi1")
    for r in rows:
        missing = [k for k in need if r.get(k) is None]
        if "L" not in missing and not isinstance(r["L"], (int, float, np.integer)):
            missing.append("L")
        if missing:
            raise ValueError(f"row p={r['p']} lacks coverage for {missing}")
    window = []
    theta = []
    for r in rows:
        p = float(r["p"])
        length = float(r["L"])
        window.append(abs(p - 0.5) * length**2 * _value(r["pi4"]))
        pi1 = _value(r["pi1"])
        theta.append(_value(r["theta"]) / pi1 if pi1 > 0 else math.inf)
    rel = {
        "window": bounded_ratio(window, factor),
        "theta_vs_arm": bounded_ratio(theta, factor),
    }
    for r in rel.values():
        r["p"] = [float(row["p"]) for row in rows]
    status = "pass" if all(r["pass"] for r in rel.values()) else "fail"
    return {"status": status, "factor": factor, "relations": rel}
