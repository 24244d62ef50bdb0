"""Gamma-moment identities behind the vortex witness.

X_k ~ Gamma(shape p(k-1)+1, scale 1/k).  f_k(p)^p = E|X_k - 1|^p, which
is squeezed between the Jensen bound |E X_k - 1|^p and (p-1)^p.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special


@dataclass(frozen=True)
class GammaSpec:
    p: float
    k: int

    def __post_init__(self):
        if self.k < 1 or not self.p >= 1:
            raise ValueError("need k >= 1 and p >= 1")

    @property
    def shape(self):
        return self.p * (self.k - 1) + 1.0

    @property
    def scale(self):
        return 1.0 / self.k


def gamma_moment(spec, s):
    """E[X^s] = theta^s Gamma(alpha + s) / Gamma(alpha)."""
    a = spec.shape
    if not a + s > 0:
        raise ValueError("alpha + s must be positive")
    r = special.poch(a, s)
    if np.isfinite(r) and r > 0:
        return float(spec.scale ** s * r)
    return float(np.exp(s * np.log(spec.scale) + special.gammaln(a + s) - special.gammaln(a)))


def gamma_identity_residual(spec):
    """|E[X^p] - p E[X^{p-1}]| / E[X^p]; zero by the Gamma recurrence."""
    p = spec.p
    m_p = gamma_moment(spec, p)
    m_q = gamma_moment(spec, p - 1)
    return abs(m_p - p * m_q) / m_p


def abs_moment(p, k, tol=1e-11):
    """E|X_k - 1|^p by adaptive quadrature on the log-space density.

    Returns (value, error estimate).  The integral is split at the kink
    x = 1, around the bulk of the density and at a far tail point.
    """
    a = p * (k - 1) + 1.0
    lk = math.log(k)
    lg = special.gammaln(a)

    def f(x):
        if x <= 0:
            return float(k) if a == 1 else 0.0
        return math.exp(a * lk + (a - 1) * math.log(x) - k * x - lg) * abs(x - 1.0) ** p

    mean = a / k
    sd = math.sqrt(a) / k
    hi = max(2.0, mean + 40 * sd)
    cuts = {0.0, 1.0, hi}
    for x in (mean - 8 * sd, mean, mean + 8 * sd):
        if 0 < x < hi:
            cuts.add(x)
    edges = sorted(cuts)
    total, err = 0.0, 0.0
    for lo, up in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, lo, up, epsabs=tol, epsrel=1e-13, limit=400)
        total += v
        err += e
    v, e = integrate.quad(f, hi, np.inf, epsabs=tol, epsrel=1e-13, limit=200)
    return total + v, err + e


def jensen_lower(spec):
    """|E X - 1|^p = ((p-1)(k-1)/k)^p."""
    p, k = spec.p, spec.k
    return abs((p * (k - 1) + 1.0) / k - 1.0) ** p


def majorant_coeff(p):
    return (p - 1) ** (p - 1) / p ** (p - 2)


def majorant_slack(p, x):
    """(p-1)^p + c_p (x^p - p x^{p-1}) - |x-1|^p, c_p = (p-1)^{p-1}/p^{p-2}."""
    x = np.asarray(x, dtype=float)
    return (p - 1) ** p + majorant_coeff(p) * (x ** p - p * x ** (p - 1)) - np.abs(x - 1) ** p


@dataclass
class MajorantReport:
    min_slack: float
    argmin: float
    violations: list


def pointwise_majorant_check(p, xs=None, tol=1e-12):
    """Minimum of the majorant slack over a sample set (default [0, 10]).

    The minimizer is refined by a bounded scalar search around the best
    sample; any sample with slack below -tol (relative to the local scale)
    is listed in violations.
    """
    if p < 2:
        raise ValueError("the majorant is stated for p >= 2")
    xs = np.linspace(0, 10, 100001) if xs is None else np.asarray(xs, dtype=float)
    s = majorant_slack(p, xs)
    scale = 1.0 + np.abs(xs) ** p
    bad = xs[s < -tol * scale]
    i = int(np.argmin(s / scale))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    best_x, best = float(xs[i]), float(s[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: float(majorant_slack(p, x)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        if res.fun < best:
            best_x, best = float(res.x), float(res.fun)
    return MajorantReport(best, best_x, [float(x) for x in bad])


def fk_value(p, k):
    return abs_moment(p, k)[0] ** (1.0 / p)


@dataclass
class RateReport:
    rows: list
    exponent: float
    certified: bool


def fk_upper_and_rate(p, k_list, fit_range=(10, 200)):
    """Rows (k, f_k, gap) with gap = (p-1) - f_k and the fitted decay exponent.

    certified is True when the majorant has no negative slack and the Gamma
    identity E[X^p - p X^{p-1}] = 0 holds, which together give
    E|X_k - 1|^p <= (p-1)^p for every listed k.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    rep = pointwise_majorant_check(p)
    ok = rep.min_slack >= -1e-12 and not rep.violations
    rows = []
    for k in k_list:
        spec = GammaSpec(p, k)
        ok = ok and gamma_identity_residual(spec) <= 1e-12
        f = fk_value(p, k)
        rows.append((k, f, (p - 1) - f))
    ks = np.array([r[0] for r in rows], dtype=float)
    gaps = np.array([r[2] for r in rows])
    sel = (ks >= fit_range[0]) & (ks <= fit_range[1]) & (gaps > 1e-9)
    if sel.sum() >= 2:
        slope = np.polyfit(np.log(ks[sel]), np.log(gaps[sel]), 1)[0]
        expo = -float(slope)
    else:
        expo = float("nan")
    return RateReport(rows, expo, bool(ok))


def sandwich_rows(pairs):
    """Rows (p, k, jensen, exact, upper) with upper = (p-1)^p."""
    out = []
    for p, k in pairs:
        spec = GammaSpec(p, k)
        out.append((p, k, jensen_lower(spec), abs_moment(p, k)[0], (p - 1) ** p))
    return out
