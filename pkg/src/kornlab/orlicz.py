"""Korn constants on Orlicz scales via Simonenko indices.

A Young function Phi with indices 1 < i <= s < inf interpolates between
L^i and L^s, which gives the constant sqrt3 K(i, s) max(i*-1, s*-1).
"""
import csv
from dataclasses import dataclass

import numpy as np

from .matalg import pstar

DEFAULT_GRID = np.geomspace(1e-6, 1e6, 2401)


@dataclass(frozen=True)
class YoungFunction:
    """Phi and Phi' as vectorized callables on t > 0."""
    name: str
    phi: object
    dphi: object
    domain: tuple = (0.0, np.inf)

    def __call__(self, t):
        return self.phi(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self.dphi(np.asarray(t, dtype=float))

    def compose_power(self, r):
        """t -> Phi(t^r); both indices scale by r."""
        phi, dphi = self.phi, self.dphi
        lo, hi = self.domain
        return YoungFunction("%s(t^%g)" % (self.name, r), lambda t: phi(t ** r),
                             lambda t: r * t ** (r - 1) * dphi(t ** r), (lo ** (1 / r), hi ** (1 / r)))

    def spot_check(self, t_grid=None):
        """Raise ValueError unless Phi > 0 and Phi' >= 0 is nondecreasing on the grid."""
        t = self.grid(t_grid)
        v, dv = self(t), self.derivative(t)
        if np.any(v <= 0):
            raise ValueError("%s vanishes at t=%g" % (self.name, t[np.argmax(v <= 0)]))
        if np.any(dv < 0) or np.any(np.diff(dv) < -1e-12 * np.abs(dv[1:])):
            raise ValueError("%s is not convex increasing on the grid" % self.name)

    def grid(self, t_grid=None):
        t = DEFAULT_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
        lo, hi = self.domain
        t = t[(t >= lo) & (t <= hi) & (t > 0)]
        if len(t) < 2:
            raise ValueError("grid misses the domain of %s" % self.name)
        return t


def power(p):
    if not p >= 1:
        raise ValueError("p must be >= 1")
    return YoungFunction("t^%g" % p, lambda t: t ** p, lambda t: p * t ** (p - 1))


def g_lambda_p(lam, p):
    """G(t) = (1 + lam t)^(p-2) t^2."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return YoungFunction(
        "G_{%g,%g}" % (lam, p),
        lambda t: (1 + lam * t) ** (p - 2) * t * t,
        lambda t: (p - 2) * lam * (1 + lam * t) ** (p - 3) * t * t + 2 * t * (1 + lam * t) ** (p - 2),
    )


def t_log1p():
    return YoungFunction("t log(1+t)", lambda t: t * np.log1p(t), lambda t: np.log1p(t) + t / (1 + t))


def from_table(path):
    """Tabulated Young function from CSV rows (t, Phi, Phi'); '#' comments and a header row are skipped."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in rec[:3]])
            except ValueError:
                continue
    if len(rows) < 2:
        raise ValueError("table %s has fewer than two rows" % path)
    t, v, dv = np.array(rows).T
    order = np.argsort(t)
    t, v, dv = t[order], v[order], dv[order]
    return YoungFunction("table:%s" % path, lambda s: np.interp(s, t, v), lambda s: np.interp(s, t, dv),
                         (float(t[0]), float(t[-1])))


FAMILIES = {"power": power, "G": g_lambda_p, "tlog": t_log1p}


def simonenko_indices(Phi, t_grid=None, return_resolution=False):
    """Grid inf and sup of t Phi'(t) / Phi(t).

    With return_resolution the largest log-spacing of the grid is returned
    as a third value (the indices are only brackets at that resolution).
    Convexity is not required here; see YoungFunction.spot_check.
    """
    t = Phi.grid(t_grid)
    v = Phi(t)
    if np.any(v <= 0):
        raise ValueError("Phi vanishes at t=%g: not a Young function" % t[np.argmax(v <= 0)])
    r = t * Phi.derivative(t) / v
    i, s = float(r.min()), float(r.max())
    if return_resolution:
        return i, s, float(np.max(np.diff(np.log(t))))
    return i, s


def interpolation_K(p, q):
    """2^(1/(p q') + min(1/p, 1/q')), q' = q/(q-1)."""
    if not 1 < p <= q < np.inf:
        raise ValueError("need 1 < p <= q < inf")
    qd = q / (q - 1)
    return float(2.0 ** (1 / (p * qd) + min(1 / p, 1 / qd)))


@dataclass
class OrliczConstant:
    constant: float
    i: float
    s: float
    K: float
    simplified: float = None


def orlicz_korn_constant(Phi, t_grid=None, tol=1e-9):
    """sqrt3 K(i, s) max(i*-1, s*-1) for the Simonenko indices (i, s) of Phi.

    Raises ValueError when i = 1 or s is not finite, where no Korn
    inequality holds on the Orlicz space.
    """
    Phi.spot_check(t_grid)
    i, s = simonenko_indices(Phi, t_grid)
    if i <= 1 + tol:
        raise ValueError("lower index %g equals 1: Korn-Orlicz inequality fails" % i)
    if not np.isfinite(s):
        raise ValueError("upper index is infinite: Korn-Orlicz inequality fails")
    K = interpolation_K(i, s)
    m = max(pstar(i), pstar(s)) - 1
    simple = None
    if s <= 2 or i >= 2:
        simple = 2 * np.sqrt(3) * m
    return OrliczConstant(float(np.sqrt(3) * K * m), i, s, K, simple)
