"""Pinned verification criteria A1..A14.

Each criterion is a function of a shared context that lazily builds and
caches the expensive runs (the canonical singularity run, the coupled
two-engine runs, the compact-soliton self-similar run), so the suite can be
driven either from pytest or from the command line with one set of artifacts.

Tolerances are fixed here; nothing is calibrated at run time.  level='quick'
replaces the canonical run by a reduced-scale stand-in for the two criteria
that only need *a* class-member run (A8's monitor clause, A14's flow-history
pair); every quantitative limit is checked at full scale.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import analysis
from .barriers import (barrier_residual_sub, barrier_residual_sup, barrier_y1,
                       BarrierParams, class_c_check, comparison_check,
                       full_operator)
from .flow import FlowConfig, make_initial, run_flow
from .geometry import curvature
from .soliton import (SQRT2, closed_form_weight_integral, fik_y, fik_y_derivs,
                      find_cao_koiso_constant, find_fik_constant,
                      weight_integral, _bisect_root)

__all__ = ["AcceptanceContext", "CriterionResult", "Check", "CRITERIA",
           "run_acceptance", "format_results", "QUICK_IDS"]

RT2 = SQRT2


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: str
    ok: bool


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    label: str
    passed: bool
    checks: tuple
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{c.name} = {c.value:.6g} ({'ok' if c.ok else 'VIOLATED'}: "
                          f"{c.target})" for c in self.checks)
        return f"{self.cid} {status} [{self.seconds:6.1f}s] {self.label}: {parts}"


class AcceptanceContext:
    """Lazy cache of the expensive runs shared between criteria."""

    def __init__(self, level="full"):
        self.level = level
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            t0 = time.perf_counter()
            val = builder()
            self._cache[key] = (val, time.perf_counter() - t0)
        return self._cache[key]

    def canonical(self):
        """Class-member run (1, 10), parabola data, grid 2048, to tau = 6.5."""
        cfg = FlowConfig(a0=1.0, b0=10.0, initial_kind="parabola", grid_n=2048,
                         stop_tau=6.5, record_every=25, snap_taus=(2.0, 4.0, 6.0))
        return self._get("canonical", lambda: run_flow(cfg))

    def mini_canonical(self):
        """Reduced-scale class-member run for the quick level."""
        cfg = FlowConfig(a0=1.0, b0=10.0, grid_n=256, stop_tau=1.5,
                         record_every=50, snap_taus=(0.5, 1.0, 1.5))
        return self._get("mini", lambda: run_flow(cfg))

    def class_run(self):
        if self.level == "quick":
            return self.mini_canonical()
        return self.canonical()

    def coupled(self, phi_cut):
        cfg = FlowConfig(a0=1.0, b0=10.0, grid_n=1024, engine="both",
                         stop_tau=6.0, record_every=25, phi_cut=phi_cut)
        return self._get(f"coupled{phi_cut:g}", lambda: run_flow(cfg))

    def kc_run(self):
        taus = tuple(-np.log(1.0 - t) for t in (0.3, 0.5, 0.7, 0.9))
        cfg = FlowConfig(a0=1.0, b0=3.0, initial_kind="cao_koiso", grid_n=1024,
                         cfl=0.5, stop_tau=-np.log(0.1) + 1e-9,
                         record_every=100, snap_taus=taus)
        return self._get("kc", lambda: run_flow(cfg))


def _result(cid, label, checks, seconds):
    return CriterionResult(cid, label, all(c.ok for c in checks),
                           tuple(checks), seconds)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def crit_a1(ctx):
    t0 = time.perf_counter()
    c = find_fik_constant()
    dev = abs(c - RT2)
    worst = max(abs(weight_integral(cc) - closed_form_weight_integral(cc))
                for cc in (0.5, 1.0, 2.0))
    dt = time.perf_counter() - t0
    return _result("A1", "noncompact soliton constant", [
        Check("|C - sqrt2|", dev, "<= 1e-10", dev <= 1e-10),
        Check("quad vs closed form", worst, "<= 1e-12", worst <= 1e-12),
        Check("runtime s", dt, "< 1", dt < 1.0),
    ], dt)


def crit_a2(ctx):
    t0 = time.perf_counter()
    c = find_cao_koiso_constant()
    oracle = _bisect_root(lambda C: np.exp(2 * C) * (2 - C * C)
                          - (3 * C * C + 4 * C + 2), 0.5, 1.0, 1e-14)
    dev = abs(c - oracle)
    dt = time.perf_counter() - t0
    return _result("A2", "compact soliton constant", [
        Check("C", c, "in (0.5, 1)", 0.5 < c < 1.0),
        Check("quad vs reduced equation", dev, "<= 1e-8", dev <= 1e-8),
        Check("runtime s", dt, "< 1", dt < 1.0),
    ], dt)


def crit_a3(ctx):
    from .flow import _DilatedEngine, _StatePolicy
    from .grids import window_mesh
    t0 = time.perf_counter()
    phi = np.geomspace(1.0, 100.0, 20001)
    y, yp, ypp = fik_y_derivs(phi)
    resid = float(np.max(np.abs(full_operator(phi, y, yp, ypp))))

    n = 1024
    delta = window_mesh(49.0, n - 1, 10.0, 3e-4, 3.0,
                        coeff=lambda d: fik_y(1.0 + d))
    grid = 1.0 + delta
    eng = _DilatedEngine(0.0, grid, fik_y(grid), b3a=0.0,
                         cfg_like=_StatePolicy(n), phi_cut=grid[-1],
                         outer_bc=lambda tau: fik_y(grid[-1]))
    k = 0
    while eng.tau < 1.0:
        eng.step(1.0 - eng.tau)
        k += 1
        if k % 200 == 0:
            eng.remesh()
    drift = float(np.max(np.abs(eng.y - fik_y(eng.phi_nodes()))))
    dt = time.perf_counter() - t0
    return _result("A3", "stationarity of the dilated fixed point", [
        Check("max |E[Y]|", resid, "<= 1e-10", resid <= 1e-10),
        Check("engine drift per unit tau", drift, "<= 5e-4", drift <= 5e-4),
        Check("runtime s", dt, "< 30", dt < 30.0),
    ], dt)


def crit_a4(ctx):
    from .soliton import cao_koiso_profile
    t0 = time.perf_counter()
    arts, run_s = ctx.kc_run()
    ref = cao_koiso_profile(8193).profile
    worst = 0.0
    for label, (rad, _) in arts.snapshots.items():
        t = 1.0 - np.exp(-label)
        oracle = (1.0 - t) * np.interp(rad.f / (1.0 - t), ref.f, ref.u)
        worst = max(worst, float(np.max(np.abs(rad.u - oracle)) / np.max(rad.u)))
    dt = time.perf_counter() - t0
    return _result("A4", "self-similar shrinking oracle", [
        Check("rel sup error to t=0.9", worst, "<= 0.01", worst <= 0.01),
        Check("runtime s", run_s, "< 120", run_s < 120.0),
    ], dt)


def crit_a5(ctx):
    t0 = time.perf_counter()
    arts, run_s = ctx.canonical()
    e4 = arts.record_at_tau(4.0).sup_err_c0
    e6 = arts.record_at_tau(6.0).sup_err_c0
    rep = analysis.blowup_rates(arts.series, window=(5.0, 6.5))
    dt = time.perf_counter() - t0
    return _result("A5", "convergence to the stationary profile", [
        Check("sup |y - Y| on [1,3] at tau=6", e6, "<= 0.05", e6 <= 0.05),
        Check("err(4)/err(6)", e4 / e6, ">= 1.5", e4 / e6 >= 1.5),
        Check("fitted delta0", rep.decay_rate_delta0, "> 0",
              rep.decay_rate_delta0 > 0),
        Check("runtime s", run_s, "< 600", run_s < 600.0),
    ], dt)


def crit_a6(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.canonical()
    r = arts.record_at_tau(6.0)
    val = np.exp(-r.tau) * r.R_sigma0
    target = 4.0 - 2.0 * RT2
    dev = abs(val / target - 1.0)
    return _result("A6", "scalar blow-up constant", [
        Check("(T-t) R at the section, tau=6", val,
              f"within 2% of {target:.6f}", dev <= 0.02),
    ], time.perf_counter() - t0)


def crit_a7(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.canonical()
    r = arts.record_at_tau(6.0)
    val = np.exp(-r.tau) * r.lambda2_sigma0
    target = 1.0 - RT2
    dev = abs(val / target - 1.0)
    tail = [rec for rec in arts.series if rec.tau >= 3.0]
    neg = all(rec.lambda2_sigma0 < 0 for rec in tail)
    return _result("A7", "transverse eigenvalue blow-up", [
        Check("(T-t) lambda2 at the section, tau=6", val,
              f"within 2% of {target:.6f}", dev <= 0.02),
        Check("sign for tau >= 3", -1.0 if neg else 1.0, "negative", neg),
    ], time.perf_counter() - t0)


def crit_a8(ctx):
    t0 = time.perf_counter()
    phi = np.geomspace(1.0, 1e4, 100)
    taus = np.linspace(0.0, 60.0, 100)
    delta = 1e-7
    sub_max = -np.inf
    sup_min = np.inf
    for tau in taus:
        lam = 0.2 * np.exp(-delta * tau)
        sub_max = max(sub_max, float(np.max(barrier_residual_sub(phi, lam, delta))))
        for lam0 in (1e-3, 0.011, 1.0):
            lam_s = lam0 * np.exp(-0.5 * tau)
            sup_min = min(sup_min, float(np.min(barrier_residual_sup(phi, lam_s))))
    arts, _ = ctx.class_run()
    nviol = len(arts.violations)
    return _result("A8", "barrier certificates and sandwich", [
        Check("max subsolution residual", sub_max, "< 0", sub_max < 0),
        Check("min supersolution residual", sup_min, "> 0", sup_min > 0),
        Check("monitor violations", nviol, "== 0", nviol == 0),
    ], time.perf_counter() - t0)


def crit_a9(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.canonical()
    rep = analysis.blowup_rates(arts.series, window=(5.0, 6.5))
    target = RT2 - 1.0
    recs = [r for r in arts.series if 5.0 <= r.tau <= 6.5]
    inst = float(np.mean([-np.exp(-r.tau) * r.lambda2_sigma0 for r in recs]))
    dev = abs(rep.gauge_slope / target - 1.0)
    agree = abs(rep.gauge_slope - inst) / target
    return _result("A9", "gauge drift slope", [
        Check("lsq slope of C(tau) on [5, 6.5]", rep.gauge_slope,
              f"within 5% of {target:.6f}", dev <= 0.05),
        Check("|fit - instantaneous| / target", agree, "<= 0.05", agree <= 0.05),
    ], time.perf_counter() - t0)


def crit_a10(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.canonical()
    first = arts.series[0]
    f_bound = max(first.max_F, 1.0)
    worst_F = max(r.max_F for r in arts.series)
    worst_min_yphi = min(r.min_yphi for r in arts.series)
    worst_max_yphi = max(r.max_yphi for r in arts.series)
    lo_band = min(first.min_yphi, -1.0) - 1e-6
    hi_band = max(first.max_yphi, f_bound) + 1e-6
    return _result("A10", "maximum principles", [
        Check("max F over run", worst_F, f"<= {f_bound + 1e-6:.6f}",
              worst_F <= f_bound + 1e-6),
        Check("min y_phi over run", worst_min_yphi, f">= {lo_band:.6f}",
              worst_min_yphi >= lo_band),
        Check("max y_phi over run", worst_max_yphi, f"<= {hi_band:.6f}",
              worst_max_yphi <= hi_band),
    ], time.perf_counter() - t0)


def crit_a11(ctx):
    t0 = time.perf_counter()
    cfg = FlowConfig(a0=1.0, b0=3.1, initial_kind="cao_koiso_perturbed",
                     grid_n=1024)
    st = make_initial(cfg)
    rep = curvature(st.profile)
    lam_min = float(min(rep.lambda1.min(), rep.lambda2.min()))
    cc = class_c_check(analysis.dilate(st))
    dt = time.perf_counter() - t0
    return _result("A11", "positive-Ricci class member", [
        Check("min Ricci eigenvalue", lam_min, "> 0", lam_min > 0),
        Check("class margin", cc.margin, "> 0", cc.ok),
        Check("runtime s", dt, "< 10", dt < 10.0),
    ], dt)


def crit_a12(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.canonical()
    rep = analysis.type_one_monitor(arts.series, window=1.0)
    return _result("A12", "type-I boundedness of reduced |Rm|", [
        Check("running-max growth over last tau unit", rep.growth,
              "< 1.10", rep.growth < 1.10),
    ], time.perf_counter() - t0)


def crit_a13(ctx):
    t0 = time.perf_counter()
    arts50, _ = ctx.coupled(50.0)
    arts100, _ = ctx.coupled(100.0)
    c50 = np.array(arts50.cross_engine, dtype=float)
    k2 = int(np.argmin(np.abs(c50[:, 0] - 2.0)))
    cross2 = float(c50[k2, 1])
    e50 = float(c50[-1, 2])
    c100 = np.array(arts100.cross_engine, dtype=float)
    e100 = float(c100[-1, 2])
    sens = abs(e50 - e100) / e50
    return _result("A13", "cross-engine agreement and truncation sensitivity", [
        Check("sup diff on [1,5] at tau=2", cross2, "<= 1e-3", cross2 <= 1e-3),
        Check("|err(50) - err(100)| / err(50)", sens, "< 0.10", sens < 0.10),
    ], time.perf_counter() - t0)


def crit_a14(ctx):
    t0 = time.perf_counter()
    arts, _ = ctx.class_run()
    labels = sorted(arts.snapshots)
    grid = np.linspace(1.0, 3.0, 201)
    taus, yps = [], []
    for lb in labels:
        _, dil = arts.snapshots[lb]
        taus.append(dil.tau)
        yps.append(np.interp(grid, dil.phi, dil.y))
    taus = np.array(taus)
    yps = np.array(yps)
    params = BarrierParams(delta=1e-7, lambda0=1.0)
    yms = np.array([barrier_y1(grid, t, params) for t in taus])
    c_bound = 10.0
    v_ok = comparison_check(taus, grid, yms, yps, c_bound)
    checks = [Check("flow above subsolution barrier", 1.0 if v_ok.ordered else 0.0,
                    "ordered", v_ok.ordered and v_ok.hypotheses_ok)]

    phi = np.linspace(1.0, 20.0, 301)
    tt = np.linspace(0.0, 2.0, 21)
    ym = np.array([fik_y(phi) for _ in tt])
    yp = ym + 0.1
    v1 = comparison_check(tt, phi, ym, yp, c_bound=2.0)
    bad = yp.copy()
    bad[8:, -1] = ym[8:, -1] - 0.2
    v2 = comparison_check(tt, phi, ym, bad, c_bound=2.0)
    stable = all(comparison_check(tt, phi, ym, yp, 2.0, alphas=al).ordered
                 for al in ((1e-2, 1e-5, 1e-8), (1e-3,),
                            tuple(10.0 ** (-k) for k in range(2, 12))))
    checks += [
        Check("ordered pair verified", 1.0 if v1.ordered else 0.0, "ordered",
              v1.ordered),
        Check("constructed violation detected", 0.0 if v2.hypotheses_ok else 1.0,
              "detected", (not v2.hypotheses_ok) or (not v2.ordered)),
        Check("alpha-ladder stability", 1.0 if stable else 0.0, "stable", stable),
    ]
    return _result("A14", "comparison-principle harness", checks,
                   time.perf_counter() - t0)


CRITERIA = [
    ("A1", crit_a1), ("A2", crit_a2), ("A3", crit_a3), ("A4", crit_a4),
    ("A5", crit_a5), ("A6", crit_a6), ("A7", crit_a7), ("A8", crit_a8),
    ("A9", crit_a9), ("A10", crit_a10), ("A11", crit_a11), ("A12", crit_a12),
    ("A13", crit_a13), ("A14", crit_a14),
]

QUICK_IDS = ("A1", "A2", "A3", "A8", "A11")


def run_acceptance(level="full", ids=None, ctx=None, verbose=False):
    """Run the requested criteria; returns the list of CriterionResult."""
    if ctx is None:
        ctx = AcceptanceContext(level=level)
    if ids is None:
        ids = QUICK_IDS if level == "quick" else [cid for cid, _ in CRITERIA]
    out = []
    table = dict(CRITERIA)
    for cid in ids:
        res = table[cid](ctx)
        out.append(res)
        if verbose:
            print(res.line(), flush=True)
    return out


def format_results(results) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
