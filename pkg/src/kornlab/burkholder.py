"""Burkholder's function, dyadic +-1 transforms and a Bellman value iteration.

States are moduli (x, y) = (|g|, |f|) where g is the transform and f the
original martingale.  V_p(x, y) = (p*-1)^p y^p - x^p.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .matalg import pstar

MAX_DEPTH = 20


@dataclass(frozen=True)
class BurkholderState:
    p: float
    x: float
    y: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.x < 0 or self.y < 0 or not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("x, y must be finite and nonnegative")


def V(p, x, y, c=None):
    """c^p |y|^p - |x|^p with c = p* - 1 by default."""
    b = pstar(p) - 1 if c is None else c
    return b ** p * np.abs(y) ** p - np.abs(x) ** p


def G(p, x, y):
    """Burkholder's function on moduli; equals V where |x| <= (p*-1)|y|."""
    ps = pstar(p)
    b = ps - 1
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    other = p * (1 - 1 / ps) ** (p - 1) * (b * y - x) * (x + y) ** (p - 1)
    out = np.where(x <= b * y, V(p, x, y), other)
    return out if out.ndim else float(out)


def eval_V(s):
    return float(V(s.p, s.x, s.y))


def eval_G(s):
    return float(G(s.p, s.x, s.y))


@dataclass
class ZigzagReport:
    p: float
    min_second_difference: float
    worst: tuple
    max_majorization: float
    violations: list


def zigzag_convexity_check(p, n_points=10000, seed=0, fd_step=1e-2, tol=1e-8, box=1.0):
    """Second differences of t -> G(x + t h, y + t k) with |h| <= |k|.

    (x, y) are signed scalars in [-box, box]^2 and G is evaluated on their
    moduli.  Reports the minimum centered second difference, the worst
    sample (x, y, h, k), max(G - V) over the samples and every sample
    whose second difference is below -tol.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-box, box, n_points)
    y = rng.uniform(-box, box, n_points)
    k = rng.uniform(-1, 1, n_points)
    h = k * rng.uniform(-1, 1, n_points)
    t = fd_step
    g0 = G(p, x, y)
    d2 = (G(p, x + t * h, y + t * k) - 2 * g0 + G(p, x - t * h, y - t * k)) / t ** 2
    i = int(np.argmin(d2))
    maj = float(np.max(g0 - V(p, x, y)))
    bad = np.nonzero(d2 < -tol)[0]
    viol = [(float(x[j]), float(y[j]), float(h[j]), float(k[j]), float(d2[j])) for j in bad]
    return ZigzagReport(p, float(d2[i]), (float(x[i]), float(y[i]), float(h[i]), float(k[i])), maj, viol)


@dataclass
class DyadicPair:
    """Predictable dyadic pair.

    increments[n] and signs[n] are arrays of length 2**n: the step df and
    the sign eps = dg/df used at each node of level n.  The children of
    node i at level n are i (f + df) and i + 2**n (f - df).
    start = (x0, y0) = (g0, f0).
    """
    increments: list
    signs: list
    start: tuple = (0.0, 0.0)

    def __post_init__(self):
        if len(self.increments) != len(self.signs):
            raise ValueError("increments and signs differ in length")
        inc, sg = [], []
        for n, (a, s) in enumerate(zip(self.increments, self.signs)):
            a = np.broadcast_to(np.asarray(a, dtype=float), (2 ** n,)).copy()
            s = np.broadcast_to(np.asarray(s, dtype=float), (2 ** n,)).copy()
            if not np.all(np.isfinite(a)):
                raise ValueError("non-finite increments at level %d" % n)
            if not np.all(np.abs(s) == 1):
                raise ValueError("signs must be +-1 so that |dg| = |df| (level %d)" % n)
            inc.append(a)
            sg.append(s)
        self.increments = inc
        self.signs = sg
        self.start = (float(self.start[0]), float(self.start[1]))

    @property
    def depth(self):
        return len(self.increments)


def terminal_values(pair):
    """(f_n, g_n) at the 2**depth leaves."""
    if pair.depth > MAX_DEPTH:
        raise ValueError("depth %d exceeds the cap %d" % (pair.depth, MAX_DEPTH))
    f = np.array([pair.start[1]])
    g = np.array([pair.start[0]])
    for a, s in zip(pair.increments, pair.signs):
        f = np.concatenate([f + a, f - a])
        g = np.concatenate([g + s * a, g - s * a])
    return f, g


def _lp(v, p):
    # exactly rounded sum of sorted terms for reproducible norms
    terms = np.sort(np.abs(v) ** p)
    return (math.fsum(terms) / len(v)) ** (1.0 / p)


def simulate_subordinate_pair(pair, p, check_start=True):
    """(||f||_p, ||g||_p, ||g||_p / ||f||_p) over the full binary tree."""
    b = pstar(p) - 1
    x0, y0 = pair.start
    if check_start and abs(x0) > b * abs(y0) + 1e-15:
        raise ValueError("start must satisfy |x0| <= (p*-1)|y0|")
    f, g = terminal_values(pair)
    nf = _lp(f, p)
    ng = _lp(g, p)
    if nf == 0:
        raise ZeroDivisionError("f vanishes identically")
    return nf, ng, ng / nf


def random_pair(depth, seed=None, kind="spine", start=(0.0, 0.0)):
    """Seeded random predictable pair.

    kind "uniform": log-uniform step sizes and random signs at every node.
    kind "spine": the first step has size 1; afterwards only the nodes with
    the largest |g|/(|f|+|g|) move (threshold drawn per pair), with a
    random step fraction per level and the sign that moves the pair along
    |f| + |g| = const; every other node stops.
    """
    rng = np.random.default_rng(seed)
    if depth > MAX_DEPTH:
        raise ValueError("depth exceeds cap")
    if kind == "uniform":
        inc = [np.exp(rng.uniform(-2, 1, 2 ** n)) for n in range(depth)]
        sg = [rng.choice([-1.0, 1.0], 2 ** n) for n in range(depth)]
        return DyadicPair(inc, sg, start)
    if kind != "spine":
        raise ValueError("unknown kind %r" % (kind,))
    hfr = np.exp(rng.uniform(np.log(0.05), np.log(2.0), depth))
    theta = rng.uniform(0.5, 0.9)
    inc, sg = [], []
    f = np.array([start[1]])
    g = np.array([start[0]])
    for n in range(depth):
        x, y = np.abs(g), np.abs(f)
        s = x + y
        if np.all(s == 0):
            a = np.ones_like(f)
            e = np.ones_like(f)
        else:
            u = np.where(s > 0, x / np.where(s > 0, s, 1), 0.0)
            act = u >= min(theta, u.max() - 1e-12)
            h = np.where(act, hfr[n] * s, 0.0)
            sf = np.where(f >= 0, 1.0, -1.0)
            sgn = np.where(g >= 0, 1.0, -1.0)
            a = sf * h
            e = -sgn * sf
        inc.append(a)
        sg.append(e)
        f = np.concatenate([f + a, f - a])
        g = np.concatenate([g + e * a, g - e * a])
    return DyadicPair(inc, sg, start)


def search_pairs(p, depth, n_trials, seed=0, kind="spine", start=(0.0, 0.0)):
    """Best ratio ||g||_p/||f||_p over n_trials seeded random pairs.

    Returns (best_ratio, best_seed, ratios).  Trial i uses seed (seed, i).
    """
    ratios = np.empty(n_trials)
    for i in range(n_trials):
        pair = random_pair(depth, seed=(seed, i), kind=kind, start=start)
        ratios[i] = simulate_subordinate_pair(pair, p, check_start=False)[2]
    j = int(np.argmax(ratios))
    return float(ratios[j]), (seed, j), ratios


def homogeneous_tables(p, c, levels, n_u=2001, h_max=50.0, n_h=200):
    """Finite-horizon values of E[c^p |f|^p - |g|^p] using p-homogeneity.

    A state (x, y) is written as s^p phi(x/s) with s = x + y, so each level
    is a function on [0, 1].  Returns (u_grid, phis, policies) where
    policies[m] holds (e, h/s) for a node with m + 1 steps left; e = +-1
    is the sign of the x-move paired with a +h move of y and h = 0 means stop.
    """
    U = np.linspace(0, 1, n_u)
    hs = np.geomspace(1e-3, h_max, n_h)
    phi = c ** p * (1 - U) ** p - U ** p
    phis = [phi]
    pols = []
    for _ in range(levels):
        best = phi.copy()
        arg = np.zeros((n_u, 2))
        for e in (1.0, -1.0):
            for h in hs:
                x1 = np.abs(U + e * h)
                y1 = np.abs(1 - U + h)
                n1 = x1 + y1
                x2 = np.abs(U - e * h)
                y2 = np.abs(1 - U - h)
                n2 = x2 + y2
                safe = np.where(n2 > 0, n2, 1.0)
                v = 0.5 * (n1 ** p * np.interp(x1 / n1, U, phi) + n2 ** p * np.interp(x2 / safe, U, phi))
                better = v < best - 1e-12 * np.abs(best)
                best = np.where(better, v, best)
                arg[better] = (e, h)
        phi = best
        phis.append(phi)
        pols.append(arg)
    return U, phis, pols


def policy_pair(p, c, depth, **kw):
    """Pair of given depth started at (0, 0) that follows the finite-horizon
    policy for the target constant c (first step of size 1)."""
    if depth < 1 or depth > MAX_DEPTH:
        raise ValueError("depth out of range")
    U, _, pols = homogeneous_tables(p, c, max(depth - 1, 1), **kw)
    f = np.array([0.0])
    g = np.array([0.0])
    inc, sg = [np.ones(1)], [np.ones(1)]
    f = np.array([1.0, -1.0])
    g = np.array([1.0, -1.0])
    for n in range(1, depth):
        pol = pols[depth - n - 1]
        x, y = np.abs(g), np.abs(f)
        s = x + y
        i = np.clip(np.round(x / s * (len(U) - 1)).astype(int), 0, len(U) - 1)
        e = pol[i, 0]
        h = pol[i, 1] * s
        sf = np.where(f >= 0, 1.0, -1.0)
        sgn = np.where(g >= 0, 1.0, -1.0)
        a = sf * h
        eps = np.where(e == 0, 1.0, e * sgn * sf)
        inc.append(a)
        sg.append(eps)
        f = np.concatenate([f + a, f - a])
        g = np.concatenate([g + eps * a, g - eps * a])
    return DyadicPair(inc, sg, (0.0, 0.0))


@dataclass
class BellmanResult:
    B: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    p: float
    sweeps: int
    max_increase: float
    history: list = field(default_factory=list)

    def gap(self):
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        return self.B - G(self.p, X, Y)


def _interp_homogeneous(B, x, y, X, Y, hx, hy, p):
    lam = np.maximum(1.0, np.maximum(x / X, y / Y))
    vals = map_coordinates(B, [x / lam / hx, y / lam / hy], order=1, mode="nearest")
    return vals * lam ** p


def bellman_iterate(p, n=256, X=1.0, Y=1.0, J=8, iters=200, h_set=None, c=None, tol=1e-14,
                   extension="homogeneous"):
    """Value iteration B^{m+1} = min(B^m, min_{h, e} mean of the two moves).

    Moves from (x, y) are (|x + e h|, y + h) and (|x - e h|, |y - h|).
    The box [0, X] x [0, Y] is cut into n x n cells (n + 1 nodes per
    axis).  Off-grid values use bilinear interpolation and p-homogeneity
    beyond the box.  h_set defaults to {2^-j max(X, Y)}, j = 0..J.
    With extension="clamp" moves leaving the box are skipped instead;
    then every move used lands on a lattice node when h_set consists of
    multiples of the spacing (X = Y).
    Raises RuntimeError if a sweep increases B anywhere by more than tol.
    """
    if extension not in ("homogeneous", "clamp"):
        raise ValueError("unknown extension %r" % (extension,))
    xs = np.linspace(0, X, n + 1)
    ys = np.linspace(0, Y, n + 1)
    hx, hy = X / n, Y / n
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    B = V(p, XX, YY, c)
    hs = [max(X, Y) * 2.0 ** -j for j in range(J + 1)] if h_set is None else list(h_set)
    worst = -np.inf
    history = []
    for _ in range(iters):
        new = B.copy()
        for h in hs:
            for e in (1.0, -1.0):
                x1, y1 = np.abs(XX + e * h), YY + h
                x2, y2 = np.abs(XX - e * h), np.abs(YY - h)
                a = _interp_homogeneous(B, x1, y1, X, Y, hx, hy, p)
                b = _interp_homogeneous(B, x2, y2, X, Y, hx, hy, p)
                cand = 0.5 * (a + b)
                if extension == "clamp":
                    inside = (x1 <= X * (1 + 1e-12)) & (y1 <= Y * (1 + 1e-12)) & (x2 <= X * (1 + 1e-12))
                    cand = np.where(inside, cand, np.inf)
                np.minimum(new, cand, out=new)
        inc = float(np.max(new - B))
        worst = max(worst, inc)
        if inc > tol * max(1.0, float(np.abs(B).max())):
            raise RuntimeError("non-monotone Bellman sweep (increase %g)" % inc)
        history.append(float(np.max(B - new)))
        B = new
    return BellmanResult(B, xs, ys, p, iters, worst, history)


@dataclass
class LaminateResult:
    witnessed_c: float
    rank_check: bool
    expectation: float
    norm_f: float
    norm_g: float


def laminate_matrices(d, f, g):
    """M = f (e1 (x) ed + ed (x) e1) + g (e1 (x) ed - ed (x) e1), stacked."""
    if d < 2:
        raise ValueError("d must be at least 2")
    M = np.zeros(np.shape(f) + (d, d))
    M[..., 0, d - 1] = f + g
    M[..., d - 1, 0] = f - g
    return M


def laminate_lower_bound(p, d, pair, c=None):
    """Embed a dyadic pair as a matrix martingale and read off a constant.

    Every increment is checked to have rank <= 1.  With S, K the Frobenius
    norms of the sym/skew directions (both sqrt 2),
    E f_{p,c}(M_n) = 2^{p/2} (c^p E|f_n|^p - E|g_n|^p); the smallest c
    making this nonnegative is ||g_n||_p / ||f_n||_p.
    """
    ok = True
    f = np.array([pair.start[1]])
    g = np.array([pair.start[0]])
    for a, s in zip(pair.increments, pair.signs):
        if not np.all(np.abs(s) == 1):
            raise ValueError("pair violates |dg| = |df|")
        dM = laminate_matrices(d, a, s * a)
        sv = np.linalg.svd(dM, compute_uv=False)
        ok = ok and bool(np.all(sv[..., 1:] <= 1e-12 * np.maximum(sv[..., :1], 1e-300)))
        f = np.concatenate([f + a, f - a])
        g = np.concatenate([g + s * a, g - s * a])
    nf = _lp(f, p)
    ng = _lp(g, p)
    wc = ng / nf
    cc = wc if c is None else c
    expect = 2 ** (p / 2) * (cc ** p * nf ** p - ng ** p)
    return LaminateResult(wc, ok, expect, nf, ng)


def bellman_rows(res, stride=1):
    """CSV rows (x, y, B, G, gap)."""
    gap = res.gap()
    rows = []
    for i in range(0, len(res.xs), stride):
        for j in range(0, len(res.ys), stride):
            x, y = res.xs[i], res.ys[j]
            rows.append((x, y, res.B[i, j], res.B[i, j] - gap[i, j], gap[i, j]))
    return rows
