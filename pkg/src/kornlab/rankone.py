"""Rank-one convexity tools for the Korn integrands f_{p,c}.

f_{p,c}(A) = c^p |P_X A|^p - |P_Y A|^p for the splittings
plain (Sym / Skew), trace_free (Sym0 / its complement) and
full_gradient (Sym / the whole matrix).
"""
import functools
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .burkholder import G
from .matalg import frob, project, pstar

VARIANTS = ("plain", "trace_free", "full_gradient")


@dataclass(frozen=True)
class IntegrandSpec:
    p: float
    c: float
    variant: str = "plain"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.variant not in VARIANTS:
            raise ValueError("unknown variant %r" % (self.variant,))


def eval_integrand(spec, A):
    """Signed value of f_{p,c}; works on stacks of matrices."""
    A = np.asarray(A, dtype=float)
    if spec.variant == "plain":
        good, bad = project(A, "sym"), project(A, "skew")
    elif spec.variant == "trace_free":
        good = project(A, "sym0")
        bad = A - good
    else:
        good, bad = project(A, "sym"), A
    return spec.c ** spec.p * frob(good) ** spec.p - frob(bad) ** spec.p


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def rank_one_test_at_zero(spec, n_directions=1000, seed=0, d=2, base_scale=1e-3, n_base=4):
    """Second differences of t -> f(S + t R) at t = 0 along rank-one R = a (x) b.

    |a| = |b| = 1 and the step is 1, so at S = 0 the second difference is
    2 f(R) (a sign test, by homogeneity).  Further base points S are random
    matrices of Frobenius norm base_scale.  Returns (minimum, (a, b, S)).
    """
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    rng = np.random.default_rng(seed)
    a = _unit(rng.standard_normal((n_directions, d)))
    b = _unit(rng.standard_normal((n_directions, d)))
    R = a[:, :, None] * b[:, None, :]
    S = rng.standard_normal((n_base, d, d))
    S *= base_scale / np.linalg.norm(S, axis=(1, 2), keepdims=True)
    S = np.concatenate([np.zeros((1, d, d)), S])
    best, worst = np.inf, None
    for s in S:
        d2 = eval_integrand(spec, s + R) - 2 * eval_integrand(spec, s) + eval_integrand(spec, s - R)
        i = int(np.argmin(d2))
        if d2[i] < best:
            best, worst = float(d2[i]), (a[i], b[i], s)
    return best, worst


@dataclass
class EnvelopeResult:
    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    envelope: np.ndarray
    G_p: np.ndarray
    sweeps: int
    history: list
    margin: int

    def interior(self):
        m = self.margin
        n = len(self.a)
        return (slice(m, n - m), slice(m, n - m))

    def gap(self):
        return self.envelope - self.G_p

    def relative_gap(self):
        """sup |envelope - G_p| / sup |G_p| on the trimmed interior."""
        I = self.interior()
        return float(np.abs(self.gap()[I]).max() / np.abs(self.G_p[I]).max())

    def zone_error(self):
        """sup |envelope - f| over nodes with f >= 0."""
        pos = self.f >= 0
        return float(np.abs(self.envelope - self.f)[pos].max()) if pos.any() else 0.0


def planar_envelope(p, c=None, n=201, n_sweeps=200, margin=None):
    """Convexify f_{p,c} on the plane A(a, b) along both diagonals.

    A(a, b) = a/sqrt2 (e1(x)e2 + e2(x)e1) + b/sqrt2 (e1(x)e2 - e2(x)e1), so
    f = c^p |a|^p - |b|^p.  The square [-1, 1]^2 carries n nodes per axis
    (n odd); each sweep lowers every node to the least midpoint average over
    all lattice steps along (1, 1) and (1, -1) that stay in the square.  The
    work is done in lattice units and rescaled by h^p, which is exact by
    homogeneity.  G_p(|b|, |a|) is the comparison function; margin (default
    n // 8) trims the edges for interior statistics.
    """
    if c is None:
        c = pstar(p) - 1
    if c < 1:
        raise ValueError("c must be >= 1")
    if n % 2 == 0 or n < 3:
        raise ValueError("n must be odd and >= 3 (grid symmetric about 0)")
    m = n // 2
    idx = np.arange(-m, m + 1, dtype=float)
    I, J = np.meshgrid(idx, idx, indexing="ij")
    E = c ** p * np.abs(I) ** p - np.abs(J) ** p
    F = E.copy()
    history = []
    for _ in range(n_sweeps):
        new = E.copy()
        for k in range(1, m + 1):
            sl = (slice(k, n - k), slice(k, n - k))
            np.minimum(new[sl], 0.5 * (E[2 * k:, 2 * k:] + E[:-2 * k, :-2 * k]), out=new[sl])
            np.minimum(new[sl], 0.5 * (E[2 * k:, :-2 * k] + E[:-2 * k, 2 * k:]), out=new[sl])
        inc = float(np.max(new - E))
        if inc > 0:
            raise RuntimeError("non-monotone envelope sweep (increase %g)" % inc)
        history.append(float(np.max(E - new)))
        E = new
    h = 1.0 / m
    scale = h ** p
    a = idx * h
    A, Bm = np.meshgrid(a, a, indexing="ij")
    return EnvelopeResult(a, a.copy(), F * scale, E * scale, G(p, np.abs(Bm), np.abs(A)), n_sweeps,
                          history, n // 8 if margin is None else margin)


def envelope_rows(res):
    """CSV rows (a, b, f, envelope, G_p, gap)."""
    gap = res.gap()
    rows = []
    for i, x in enumerate(res.a):
        for j, y in enumerate(res.b):
            rows.append((x, y, res.f[i, j], res.envelope[i, j], res.G_p[i, j], gap[i, j]))
    return rows


def natural_bound(p):
    return float(np.sqrt(1 + (pstar(p) - 1) ** 2))


def u_p(p, t):
    return (p - 1) * (1 + t * t) ** ((2 - p) / 2) - p + (1 + t) ** (2 - p) - t * (2 - p)


def _g(x):
    return (1 + x) / (1 - x)


def _scan_root(fun, lo, hi, n=10000, last=True):
    xs = np.linspace(lo, hi, n)
    v = fun(xs)
    ch = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)[0]
    if len(ch) == 0:
        raise RuntimeError("no sign change on [%r, %r]" % (lo, hi))
    i = ch[-1] if last else ch[0]
    if v[i] == 0:
        return float(xs[i])
    return optimize.bisect(lambda x: float(fun(x)), xs[i], xs[i + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps,
                           maxiter=200)


@functools.lru_cache(maxsize=None)
def p_zero():
    """Threshold p0 in (1, 2): root of p -> u_p(g(-1 + 2/p))."""
    return _scan_root(lambda q: u_p(q, _g(-1 + 2 / q)), 1.01, 1.99, n=1000, last=False)


def s_zero(p):
    """Largest root in (-1, 1) of s -> u_p(g(s)), found by scan and bisection."""
    eps = 1e-9
    return _scan_root(lambda s: u_p(p, _g(s)), -1 + eps, 1 - eps)


def c_of_p(p):
    """Full-gradient rank-one constant c(p).

    Equal to the natural bound sqrt(1 + (p*-1)^2) for p >= 2 and p <= p0;
    in between it comes from the root s0 of u_p(g(s)).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if p >= 2 or p <= p_zero():
        return natural_bound(p)
    s = s_zero(p)
    val = 1 - 2 ** (1 - p) * (1 - s) ** (p - 1) / ((p - 1) * (1 - s) + (2 - p))
    return float(val ** (-1.0 / p))


def full_gradient_bounds(p):
    """(lower, upper) for the full-gradient constant."""
    lower = c_of_p(p)
    if p >= 2:
        upper = float(np.sqrt(3 * (p - 1) ** 2 + 1))
    else:
        upper = float(((np.sqrt(3) * (pstar(p) - 1)) ** p + 1) ** (1.0 / p))
    if lower > upper * (1 + 1e-12):
        raise RuntimeError("lower bound exceeds upper bound at p=%r" % p)
    return lower, upper


def c_curve_rows(p_grid):
    """Rows (p, c, natural_bound, improvement)."""
    rows = []
    for p in p_grid:
        c = c_of_p(p)
        nb = natural_bound(p)
        rows.append((float(p), c, nb, c - nb))
    return rows


def diagonal_convexity_defect(res):
    """max over interior nodes of E - (least midpoint average along the diagonals).

    Zero (up to rounding) exactly when the table is midpoint-convex along
    (1, 1) and (1, -1) for every lattice step that stays in the square.
    """
    E = res.envelope
    n = len(res.a)
    m = n // 2
    low = E.copy()
    for k in range(1, m + 1):
        sl = (slice(k, n - k), slice(k, n - k))
        np.minimum(low[sl], 0.5 * (E[2 * k:, 2 * k:] + E[:-2 * k, :-2 * k]), out=low[sl])
        np.minimum(low[sl], 0.5 * (E[2 * k:, :-2 * k] + E[:-2 * k, 2 * k:]), out=low[sl])
    return float(np.max(E - low))
