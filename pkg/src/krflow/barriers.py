"""Barriers, class membership, and the comparison-principle harness.

The dilated profile evolves by d_tau y = E[y] with

    E[y] = y y_pp + (2 - phi - y_p) y_p + y (1 - y/phi^2),

which splits into a linear part L[y] = (2 - phi) y_p + y and a quadratic part
Q[y] = y y_pp - y_p^2 - y^2/phi^2, with mixed term
M[y, s] = s y_pp + y s_pp - 2 y_p s_p - 2 y s / phi^2, so that
E[y + s] = E[y] + E[s] + M[y, s].

For perturbations s = +/- lam(tau) phi^2 of the stationary profile Y this
yields closed-form residuals:

    (d_tau - E)[Y - lam phi^2] = lam ((delta + 3 lam - 1) phi^2
                                     + 2(2 - sqrt2) phi - 3(2 - sqrt2)/phi)
        with lam' = -delta lam  (subsolution for lam <= 1/5, delta <= 1e-6)

    (d_tau - E)[Y + lam phi^2] = lam ((1/2 + 3 lam) phi^2
                                     - 2(2 - sqrt2) phi + 3(2 - sqrt2)/phi)
        with lam = lam0 e^{-tau/2}  (supersolution, positive for phi >= 1)

Together they sandwich any class-C solution and squeeze it to Y.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grids import derivatives
from .soliton import SQRT2, fik_y, fik_y_derivs

__all__ = [
    "BarrierParams", "ClassCResult", "ViolationRecord", "SandwichMonitor",
    "ComparisonVerdict", "linear_part", "quadratic_part", "bilinear_part",
    "full_operator", "class_c_check", "barrier_y1", "barrier_y2",
    "barrier_residual_sub", "barrier_residual_sup", "fit_lambda0",
    "sandwich_monitor", "comparison_check", "write_violation_csv",
]


@dataclass(frozen=True)
class BarrierParams:
    """delta: subsolution decay rate; lambda_init: initial subsolution
    amplitude (1/5 defines class membership); lambda0: supersolution amplitude."""
    delta: float = 1e-7
    lambda_init: float = 0.2
    lambda0: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.delta <= 1e-6):
            raise ValueError("delta must lie in (0, 1e-6]")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")


# ---------------------------------------------------------------------------
# operator split
# ---------------------------------------------------------------------------

def linear_part(phi, y, y_p):
    return (2.0 - phi) * y_p + y


def quadratic_part(phi, y, y_p, y_pp):
    return y * y_pp - y_p ** 2 - (y / phi) ** 2


def bilinear_part(phi, y, y_p, y_pp, s, s_p, s_pp):
    return s * y_pp + y * s_pp - 2.0 * y_p * s_p - 2.0 * y * s / phi ** 2


def full_operator(phi, y, y_p, y_pp):
    """E[y], evaluated from the un-split expression."""
    return y * y_pp + (2.0 - phi - y_p) * y_p + y * (1.0 - y / phi ** 2)


def operator_on_state(d):
    """E[y] on a dilated state's nodes, derivatives from grid stencils."""
    slope = 1.0 if d.y[0] == 0.0 else None
    y_p, y_pp = derivatives(d.phi, d.y, slope_left=slope)
    return full_operator(d.phi, d.y, y_p, y_pp)


# ---------------------------------------------------------------------------
# class membership and barrier values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassCResult:
    ok: bool
    margin: float


def class_c_check(d) -> ClassCResult:
    """Strict membership y > Y - phi^2/5; margin is the nodewise minimum gap."""
    margin = float(np.min(d.y - (fik_y(d.phi) - d.phi ** 2 / 5.0)))
    return ClassCResult(margin > 0.0, margin)


def barrier_y1(phi, tau, p: BarrierParams):
    """Subsolution Y - lambda_init e^{-delta tau} phi^2."""
    phi = np.asarray(phi, dtype=float)
    return fik_y(phi) - p.lambda_init * np.exp(-p.delta * tau) * phi ** 2


def barrier_y2(phi, tau, p: BarrierParams):
    """Supersolution Y + lambda0 e^{-tau/2} phi^2."""
    phi = np.asarray(phi, dtype=float)
    return fik_y(phi) + p.lambda0 * np.exp(-0.5 * tau) * phi ** 2


def barrier_residual_sub(phi, lam, delta):
    """(d_tau - E)[Y - lam phi^2] in closed form; negative certifies a subsolution."""
    phi = np.asarray(phi, dtype=float)
    return lam * ((delta + 3.0 * lam - 1.0) * phi ** 2
                  + 2.0 * (2.0 - SQRT2) * phi - 3.0 * (2.0 - SQRT2) / phi)


def barrier_residual_sup(phi, lam):
    """(d_tau - E)[Y + lam phi^2] in closed form; positive certifies a supersolution."""
    phi = np.asarray(phi, dtype=float)
    return lam * ((0.5 + 3.0 * lam) * phi ** 2
                  - 2.0 * (2.0 - SQRT2) * phi + 3.0 * (2.0 - SQRT2) / phi)


def barrier_residual_sub_split(phi, lam, delta):
    """Same residual assembled through the operator split (independent path).

    (d_tau - E)[Y + s] = d_tau s - L[s] - Q[s] - M[Y, s] for s = -lam phi^2.
    """
    phi = np.asarray(phi, dtype=float)
    y, y_p, y_pp = fik_y_derivs(phi)
    s, s_p, s_pp = -lam * phi ** 2, -2.0 * lam * phi, -2.0 * lam
    dtau_s = delta * lam * phi ** 2          # lam' = -delta lam
    return (dtau_s - linear_part(phi, s, s_p) - quadratic_part(phi, s, s_p, s_pp)
            - bilinear_part(phi, y, y_p, y_pp, s, s_p, s_pp))


def fit_lambda0(d, floor=1e-3, safety=1.1) -> float:
    """Smallest amplitude (times a safety factor) with Y + lambda0 phi^2 > y."""
    excess = np.max((d.y - fik_y(d.phi)) / d.phi ** 2)
    return float(max(floor, safety * excess))


# ---------------------------------------------------------------------------
# runtime sandwich monitor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ViolationRecord:
    step: int
    tau: float
    node_phi: float
    kind: str        # "sub" | "super"
    deficit: float


class SandwichMonitor:
    """Checks y1 <= y + slack and y <= y2 + slack nodewise at every accepted step.

    The barrier clock starts at tau0 (the run's initial dilated time), so the
    subsolution amplitude is exactly lambda_init at the start.  Violations are
    data, not errors: they are logged and the run continues.
    """

    def __init__(self, params: BarrierParams, tau0: float, slack: float = 1e-8):
        self.params = params
        self.tau0 = float(tau0)
        self.slack = float(slack)
        self.violations: list[ViolationRecord] = []

    def check(self, step, tau, phi, y):
        s = tau - self.tau0
        yfik = fik_y(phi)
        y1 = yfik - self.params.lambda_init * np.exp(-self.params.delta * s) * phi ** 2
        y2 = yfik + self.params.lambda0 * np.exp(-0.5 * s) * phi ** 2
        low = y1 - y - self.slack
        high = y - y2 - self.slack
        if np.any(low > 0):
            k = int(np.argmax(low))
            self.violations.append(ViolationRecord(step, float(tau), float(phi[k]),
                                                   "sub", float(low[k])))
        if np.any(high > 0):
            k = int(np.argmax(high))
            self.violations.append(ViolationRecord(step, float(tau), float(phi[k]),
                                                   "super", float(high[k])))


def sandwich_monitor(artifacts) -> list:
    """Violation log of a completed run (the run itself performs the checks)."""
    return list(artifacts.violations)


def write_violation_csv(violations, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "tau", "node_phi", "kind", "deficit"])
        for v in violations:
            w.writerow([v.step, "%.17g" % v.tau, "%.17g" % v.node_phi,
                        v.kind, "%.17g" % v.deficit])


# ---------------------------------------------------------------------------
# comparison-principle harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonVerdict:
    ordered: bool
    hypotheses_ok: bool
    failed_hypotheses: tuple
    first_crossing: tuple | None     # (tau, phi, deficit)
    lambda_used: float
    alphas: tuple


def comparison_check(taus, phi, y_minus, y_plus, c_bound,
                     alphas=None) -> ComparisonVerdict:
    """Replay the comparison-principle argument on recorded profile histories.

    y_minus / y_plus: arrays of shape (n_times, n_phi) on the shared grid phi.
    The proof quantity w = e^{-lam tau} (y+ - y-) + alpha is evaluated with
    lam = c_bound + 1.5 on a ladder of alpha values decreasing to zero;
    verdict 'ordered' iff min w >= alpha (1 - 1e-9) throughout for every alpha.
    Hypothesis failures (initial/boundary ordering, second-derivative bound)
    are reported rather than raised, together with the first crossing.
    """
    taus = np.asarray(taus, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ym = np.asarray(y_minus, dtype=float)
    yp = np.asarray(y_plus, dtype=float)
    if ym.shape != yp.shape or ym.shape != (taus.size, phi.size):
        raise ValueError("profile histories must share the (taus, phi) grid")
    if alphas is None:
        alphas = tuple(10.0 ** (-k) for k in range(2, 9))

    failed = []
    if np.any(yp[0] < ym[0]):
        failed.append("initial ordering y+ >= y-")
    if np.any(yp[:, 0] < ym[:, 0]) or np.any(yp[:, -1] < ym[:, -1]):
        failed.append("boundary ordering y+ >= y-")
    curv = []
    for y in (yp, ym):
        m = 0.0
        for k in range(taus.size):
            m = max(m, float(np.max(np.abs(derivatives(phi, y[k])[1][1:-1]))))
        curv.append(m)
    if min(curv) > c_bound:
        failed.append(f"second-derivative bound {c_bound:.6g} "
                      f"(measured {min(curv):.6g})")

    lam = c_bound + 1.5
    diff = np.exp(-lam * (taus - taus[0]))[:, None] * (yp - ym)
    ordered = True
    first_crossing = None
    for alpha in alphas:
        w = diff + alpha
        bad = w < alpha * (1.0 - 1e-9)
        if np.any(bad):
            ordered = False
            k = int(np.argmax(bad.any(axis=1)))
            i = int(np.argmax(bad[k]))
            first_crossing = (float(taus[k]), float(phi[i]), float(diff[k, i]))
            break
    return ComparisonVerdict(ordered, not failed, tuple(failed),
                             first_crossing, lam, tuple(alphas))
