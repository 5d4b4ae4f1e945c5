"""Gradient shrinking solitons in the rotationally symmetric ansatz.

With the section area normalized to pi, a soliton potential satisfies the
first-order linear ODE in (f, u) variables

    u_f + u/f - C u + f - 2 = 0,   u(1) = 0,

(the chain-rule reduction, via phi_rr = u_f * u, of the second-order
r-coordinate equation phi_rr/phi_r + phi_r/phi - C phi_r + phi - 2 = 0).
The integrating factor f e^{-Cf} gives

    u(f) = (e^{Cf} / f) * int_1^f (2-s) s e^{-Cs} ds.

Two distinguished values of C:

* noncompact family ("fik"): the profile closes a cone at infinity iff the
  full integral vanishes; the root is sqrt(2).
* compact family ("cao-koiso"): the profile must return to zero at f = 3
  (so that the outer slope is u_f = 2 - f = -1); the root lies in (1/2, 1).

Constant finding uses adaptive quadrature as the primary path and the
closed-form antiderivative only as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp

from .geometry import RadialProfile, to_radial, LogProfile
from .grids import cumulative_gl5, derivatives, interval_gl5

__all__ = [
    "SolitonSpec", "SolitonProfile", "SolitonPositivityError",
    "SolitonConstructionError", "fik_y", "fik_y_derivs",
    "soliton_ode_residual", "soliton_quadrature", "find_fik_constant",
    "find_cao_koiso_constant", "cao_koiso_profile", "soliton_shoot_r",
    "weight_integral", "closed_form_weight_integral", "write_soliton_metadata",
]

SQRT2 = float(np.sqrt(2.0))


class SolitonPositivityError(RuntimeError):
    """The candidate profile leaves the admissible cone u > 0."""


class SolitonConstructionError(RuntimeError):
    """No admissible profile exists for the requested (C, f_end)."""


@dataclass(frozen=True)
class SolitonSpec:
    """Soliton constant plus base type: 'L' (noncompact) or 'M' (compact)."""
    C: float
    base: str

    def __post_init__(self):
        if self.base not in ("L", "M"):
            raise ValueError("base must be 'L' or 'M'")
        if self.C <= 0:
            raise ValueError("C must be positive")

    def canonical(self, tol=1e-9) -> bool:
        """True if C satisfies the constraint of the named family."""
        if self.base == "M":
            return 0.5 < self.C < 1.0
        return abs(self.C - SQRT2) <= tol


@dataclass(frozen=True)
class SolitonProfile:
    spec: SolitonSpec
    profile: RadialProfile

    @property
    def f_max(self) -> float:
        return self.profile.b


# ---------------------------------------------------------------------------
# FIK closed form
# ---------------------------------------------------------------------------

def fik_y(phi):
    """Stationary noncompact-soliton profile Y(phi) = (phi(phi-2) + sqrt2(phi-1) + 1)/(sqrt2 phi)."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 1.0 - 1e-12):
        raise ValueError("fik_y is defined for phi >= 1")
    out = (phi * (phi - 2.0) + SQRT2 * (phi - 1.0) + 1.0) / (SQRT2 * phi)
    return out if out.ndim else float(out)


def fik_y_derivs(phi):
    """(Y, Y_phi, Y_phiphi) in closed form."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 1.0 - 1e-12):
        raise ValueError("fik_y_derivs is defined for phi >= 1")
    y = (phi * (phi - 2.0) + SQRT2 * (phi - 1.0) + 1.0) / (SQRT2 * phi)
    yp = (phi * phi + SQRT2 - 1.0) / (SQRT2 * phi * phi)
    ypp = (SQRT2 - 2.0) / phi ** 3
    if y.ndim:
        return y, yp, ypp
    return float(y), float(yp), float(ypp)


# ---------------------------------------------------------------------------
# the weight integral int (2-s) s e^{-Cs} ds
# ---------------------------------------------------------------------------

def _weight(s, C):
    return (2.0 - s) * s * np.exp(-C * s)


def weight_integral(C, upper=np.inf, epsabs=1e-13):
    """Adaptive quadrature of int_1^upper (2-s) s e^{-Cs} ds."""
    val, _ = quad(_weight, 1.0, upper, args=(C,), epsabs=epsabs, epsrel=1e-12, limit=200)
    return val


def closed_form_weight_integral(C):
    """Independent oracle: int_1^inf (2-s) s e^{-Cs} ds = e^{-C} (C^2-2)/C^3."""
    return np.exp(-C) * (C * C - 2.0) / C ** 3


def _bisect_root(g, lo, hi, xtol):
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if glo * gm < 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def find_fik_constant():
    """Root of int_1^inf (2-s) s e^{-Cs} ds = 0 on [1.2, 1.6].

    Bisection on adaptive quadrature to 1e-12, a few Newton polish steps, then
    a cross-check against the analytic root sqrt(2) of the closed form.
    """
    c = _bisect_root(weight_integral, 1.2, 1.6, 1e-12)
    for _ in range(3):
        g = weight_integral(c)
        dg, _ = quad(lambda s: -s * _weight(s, c), 1.0, np.inf, epsabs=1e-13, limit=200)
        if dg == 0.0:
            break
        c -= g / dg
    if abs(c - SQRT2) > 1e-10:
        raise RuntimeError(f"quadrature root {c!r} disagrees with closed-form root sqrt(2)")
    return c


def find_cao_koiso_constant():
    """Root of int_1^3 (2-s) s e^{-Cs} ds = 0 on [0.5, 1.0].

    The closed-form antiderivative reduces the condition to
    e^{2C} (2 - C^2) = 3C^2 + 4C + 2, used as the independent oracle; the
    quadrature root and the oracle root must agree to 1e-8.
    """
    g = lambda C: weight_integral(C, upper=3.0)
    c = _bisect_root(g, 0.5, 1.0, 1e-12)
    for _ in range(3):
        val = g(c)
        dg, _ = quad(lambda s: -s * _weight(s, c), 1.0, 3.0, epsabs=1e-13, limit=200)
        if dg == 0.0:
            break
        c -= val / dg
    oracle = _bisect_root(lambda C: np.exp(2 * C) * (2 - C * C) - (3 * C * C + 4 * C + 2),
                          0.5, 1.0, 1e-14)
    if abs(c - oracle) > 1e-8:
        raise RuntimeError(f"quadrature root {c!r} vs transcendental root {oracle!r}")
    if not (0.5 < c < 1.0):
        raise RuntimeError(f"compact soliton constant {c!r} outside (1/2, 1)")
    return c


@lru_cache(maxsize=1)
def _fik_constant_cached():
    return find_fik_constant()


@lru_cache(maxsize=1)
def _cao_koiso_constant_cached():
    return find_cao_koiso_constant()


# ---------------------------------------------------------------------------
# profile construction
# ---------------------------------------------------------------------------

def soliton_ode_residual(p: SolitonProfile, u_f=None) -> float:
    """max |u_f + u/f - C u + f - 2| over interior nodes."""
    f, u = p.profile.f, p.profile.u
    if u_f is None:
        u_f = derivatives(f, u)[0]
    res = u_f + u / f - p.spec.C * u + f - 2.0
    return float(np.max(np.abs(res[1:-1])))


def _tail_integral_on_grid(f, C):
    """T(f_j) = int_{f_j}^{inf} (2-s) s e^{-Cs} ds at every grid node.

    Accumulated from the far end (where the remainder is below double
    precision), so the exponentially small tail values never suffer
    cancellation against the O(1) head of the integral.
    """
    s_far = f[-1] + 80.0 / C
    ext = np.concatenate([f, np.linspace(f[-1], s_far, 400)[1:]])
    seg = interval_gl5(lambda s: _weight(s, C), ext)
    rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return rev[:len(f)]


def soliton_quadrature(C, f_end, n) -> SolitonProfile:
    """Integrating-factor solution u(1) = 0 on [1, f_end] with n nodes.

    f_end=None (or inf) requests the noncompact profile, which is only
    admissible at the root C where the full weight integral vanishes; it is
    then built from the tail integral so the exponential factor never
    amplifies quadrature roundoff.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if n < 64:
        raise ValueError("need n >= 64 nodes")
    unbounded = f_end is None or not np.isfinite(f_end)
    i_inf = weight_integral(C)

    if unbounded or C * f_end > 30.0:
        # exponential-factor regime: only the decaying (tail) solution is
        # representable, and it satisfies u(1)=0 only at a root of the integral
        if abs(i_inf) > 1e-11:
            raise SolitonConstructionError(
                f"no admissible profile with u(1)=0 for C={C:.12g}: "
                f"int_1^inf (2-s)s e^(-Cs) ds = {i_inf:+.3e}, so u grows like e^(Cf)/f")
        fe = 50.0 if unbounded else float(f_end)
        f = np.linspace(1.0, fe, n)
        tail = _tail_integral_on_grid(f, C)
        u = -np.exp(C * f) * tail / f
        u[0] = 0.0
        base = "L"
    else:
        f = np.linspace(1.0, float(f_end), n)
        cum = cumulative_gl5(lambda s: _weight(s, C), f)
        scale = np.max(np.abs(cum))
        neg = cum < -1e-10 * scale
        if np.any(neg[1:]):
            k = 1 + int(np.argmax(neg[1:]))
            f_lost = float(np.interp(0.0, [cum[k], cum[k - 1]], [f[k], f[k - 1]]))
            raise SolitonPositivityError(f"loses positivity at f = {f_lost:.8g}")
        u = np.exp(C * f) * cum / f
        u[0] = 0.0
        if abs(cum[-1]) <= 1e-10 * scale:
            u[-1] = 0.0
            base = "M"
        else:
            base = "L"
    return SolitonProfile(SolitonSpec(C, base), RadialProfile(f, u))


def cao_koiso_profile(n) -> SolitonProfile:
    """Compact-soliton profile on [1, 3]: u(1) = u(3) = 0, u > 0 inside."""
    return soliton_quadrature(_cao_koiso_constant_cached(), 3.0, n)


def fik_profile(n, f_max=50.0) -> SolitonProfile:
    """Noncompact-soliton profile truncated at f_max (representation choice)."""
    C = _fik_constant_cached()
    if f_max is None:
        return soliton_quadrature(C, None, n)
    f = np.linspace(1.0, float(f_max), n)
    tail = _tail_integral_on_grid(f, C)
    u = -np.exp(C * f) * tail / f
    u[0] = 0.0
    return SolitonProfile(SolitonSpec(C, "L"), RadialProfile(f, u))


# ---------------------------------------------------------------------------
# r-coordinate shooting cross-check
# ---------------------------------------------------------------------------

def _shoot_once(C, a1, r_window, f_cap, max_step=0.05):
    """Integrate the second-order r-ODE from a series seed at the left end.

    Series: phi = 1 + a1 w + a2 w^2 + a3 w^3 with w = e^r and the coefficients
    forced by the ODE: a2 = a1^2 (C-2)/2,
    a3 = (a1^3/6) [(C-2)^2 + 1 + (2C-3)(C-2)/2].
    Returns (r, phi, phi_r, status) where status is 'end', 'overshoot'
    (phi_r hit zero), or 'cap' (phi reached f_cap).
    """
    r0, r1 = r_window
    w0 = np.exp(r0)
    a2 = 0.5 * a1 * a1 * (C - 2.0)
    a3 = (a1 ** 3 / 6.0) * ((C - 2.0) ** 2 + 1.0 + 0.5 * (2.0 * C - 3.0) * (C - 2.0))
    y0 = [1.0 + a1 * w0 + a2 * w0 ** 2 + a3 * w0 ** 3,
          a1 * w0 + 2.0 * a2 * w0 ** 2 + 3.0 * a3 * w0 ** 3]

    def rhs(_, y):
        p, v = y
        return [v, v * (C * v - v / p - p + 2.0)]

    def ev_overshoot(_, y):
        return y[1]
    ev_overshoot.terminal = True
    ev_overshoot.direction = -1

    def ev_cap(_, y):
        return y[0] - f_cap
    ev_cap.terminal = True
    ev_cap.direction = 1

    sol = solve_ivp(rhs, (r0, r1), y0, method="RK45", rtol=1e-12, atol=1e-15,
                    max_step=max_step, events=(ev_overshoot, ev_cap), dense_output=False)
    status = "end"
    if sol.t_events[0].size:
        status = "overshoot"
    elif sol.t_events[1].size:
        status = "cap"
    if not sol.success and status == "end":
        raise SolitonConstructionError("shoot diverged: " + sol.message)
    return sol.t, sol.y[0], sol.y[1], status


def soliton_shoot_r(C, r_window=(-12.0, 8.0), a1_guess=1.0, f_cap=None) -> SolitonProfile:
    """Shoot the second-order r-coordinate soliton ODE and return the (f, u) profile.

    The seed amplitude a1 is a pure r-translation of the trajectory.  For the
    compact family it is bisected on the far-field behavior: overshoot
    (phi_r driven through zero) means the approach to the outer zero fell
    short of the window end, undershoot (phi_r still above threshold at the
    window end) means it should be pushed deeper.  For the noncompact family
    a1 is used as given with integration capped at f_cap, the range on which
    double precision still tracks the separatrix to ~1e-6.
    """
    if not (0.0 < C < 3.0):
        raise ValueError("C must lie in (0, 3)")
    compact = C < 1.2
    if f_cap is None:
        f_cap = 3.5 if compact else 12.0

    a1 = float(a1_guess)
    if compact:
        # largest seed still inside the expansion's validity at r0
        x_cap = -r_window[0] - 4.0
        q_target = 1e-8
        def too_far(x):
            r_, _, v_, status = _shoot_once(C, np.exp(x), r_window, f_cap)
            return status == "overshoot" or v_[-1] < q_target
        lo, hi = None, None
        x = min(np.log(a1), x_cap)
        for _ in range(60):
            if too_far(x):
                hi = x
                x = x - 1.0 if lo is None else 0.5 * (lo + hi)
            else:
                lo = x
                x = min(x + 1.0, x_cap) if hi is None else 0.5 * (lo + hi)
            if lo is not None and hi is not None and hi - lo < 1e-3:
                break
            if hi is None and x >= x_cap:
                break
        a1 = np.exp(hi if hi is not None else x)
    r, phi, phi_r, _ = _shoot_once(C, a1, r_window, f_cap)

    keep = phi_r > 1e-13
    r, phi, phi_r = r[keep], phi[keep], phi_r[keep]
    keep = np.concatenate([[True], np.diff(phi) > 0])
    r, phi, phi_r = r[keep], phi[keep], phi_r[keep]
    if r.size < 16:
        raise SolitonConstructionError("shoot diverged before covering the window")
    prof = to_radial(LogProfile(r, phi, phi_r))
    base = "M" if compact else "L"
    return SolitonProfile(SolitonSpec(C, base), prof)


# ---------------------------------------------------------------------------
# metadata block
# ---------------------------------------------------------------------------

def write_soliton_metadata(p: SolitonProfile, path, residual=None):
    """Flat key=value block: family=, C=, residual=, f_max=."""
    if residual is None:
        residual = soliton_ode_residual(p)
    family = "fik" if p.spec.base == "L" else "cao-koiso"
    with open(path, "w") as fh:
        fh.write(f"family={family}\n")
        fh.write(f"C={p.spec.C:.17g}\n")
        fh.write(f"residual={residual:.17g}\n")
        fh.write(f"f_max={p.f_max:.17g}\n")
