"""Explicit lower-bound witnesses for the Korn constant.

u_k(x) = Q x ln(|x|)^k on the unit disk (Q the rotation generator), its
Gamma-function norms, the lift to one more dimension, and the L^1
rotational witness (1 - |x|^2) J x in even dimension.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import spectral
from .matalg import c_d
from .radial import abs_moment
from .spectral import GridSpec, VectorField

Q = np.array([[0.0, 1.0], [-1.0, 0.0]])
PLACEMENT_RADIUS = 0.45


@dataclass(frozen=True)
class WitnessSpec:
    k: int
    p: float
    d: int = 2
    scale_r: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if not self.scale_r > 0:
            raise ValueError("scale_r must be positive")


def vortex(x1, x2, k):
    """u_k at points (x1, x2) of the plane; zero outside the open unit disk."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    inside = (r < 1) & (r > 0)
    L = np.zeros_like(r)
    L[inside] = np.log(r[inside]) ** k
    return np.stack([x2 * L, -x1 * L])


def vortex_stream(r, k):
    """psi with u_k = (d_2 psi, -d_1 psi): psi' = r ln(r)^k, psi = 0 for r >= 1."""
    r = np.asarray(r, dtype=float)
    T = -np.log(np.clip(r, 1e-300, 1.0))
    val = (-1) ** k * 2.0 ** -(k + 1) * math.factorial(k) * special.gammainc(k + 1, 2 * T)
    return np.where(r < 1, -val, 0.0)


def vortex_field(spec, grid, radius=PLACEMENT_RADIUS, center=None, method="sample"):
    """u_k on a 2D grid, the unit disk mapped to a centered disk of given radius.

    The field is rescaled as radius * u_k((x - c)/radius), so its gradient
    takes the same values as that of u_k.  method "sample" evaluates u_k at
    the nodes; "stream" samples the stream function and takes its spectral
    perpendicular gradient, which is divergence-free to rounding.
    """
    if grid.dim != 2 or spec.d != 2:
        raise ValueError("vortex_field is planar; use dimension_lift for d > 2")
    if center is None:
        center = tuple(L / 2 for L in grid.lengths)
    if radius >= min(min(center), min(L - c for L, c in zip(grid.lengths, center))):
        raise ValueError("disk does not fit strictly inside the cell")
    X, Y = grid.coords()
    x1, x2 = (X - center[0]) / radius, (Y - center[1]) / radius
    if method == "sample":
        return VectorField(grid, radius * vortex(x1, x2, spec.k))
    if method != "stream":
        raise ValueError("unknown method %r" % (method,))
    psi = radius ** 2 * vortex_stream(np.hypot(x1, x2), spec.k)
    G = spectral.gradient(VectorField(grid, np.stack([psi, np.zeros_like(psi)])))
    return VectorField(grid, np.stack([G.values[0, 1], -G.values[0, 0]]))


@dataclass(frozen=True)
class WitnessNorms:
    normE_p: float
    normA_p: float
    I_p: float
    J_p: float
    ratio: float
    log_I: float
    log_J: float
    abserr: float


def witness_norms_closed_form(k, p, tol=1e-10):
    """Closed-form L^p norms of E(u_k), A(u_k) and their ratio f_k(p).

    I_p = Gamma(p(k-1)+1), J_p = int_0^inf e^{-t} t^{p(k-1)} |t/k - 1|^p dt,
    ratio = (J_p / I_p)^(1/p).  J_p/I_p is computed as a Gamma expectation so
    that large k and p do not overflow; I_p and J_p are inf when they
    exceed the float range (log_I, log_J are always finite).
    """
    if k < 1 or not p > 1:
        raise ValueError("need k >= 1 and p > 1")
    m, err = abs_moment(p, k, tol)
    if not (m > 0 and np.isfinite(m)):
        raise RuntimeError("quadrature for J_p failed (value %r, error %r)" % (m, err))
    log_I = float(special.gammaln(p * (k - 1) + 1))
    log_J = log_I + math.log(m)
    a = p * (k - 1) + 1
    log_E = math.log(2 * math.pi) + p * math.log(k) - (p / 2) * math.log(2) - a * math.log(2) + log_I
    log_A = math.log(2 * math.pi) + (p / 2) * math.log(2) + log_J - (p * (k - 1) + 1 + p) * math.log(2) + p * math.log(k)

    def safe_exp(x):
        return math.exp(x) if x < 700 else math.inf

    return WitnessNorms(
        normE_p=math.exp(log_E / p), normA_p=math.exp(log_A / p),
        I_p=safe_exp(log_I), J_p=safe_exp(log_J),
        ratio=m ** (1.0 / p), log_I=log_I, log_J=log_J, abserr=err,
    )


class Bump:
    """g(s) = (1 - s^2)^4 on [-1, 1], scaled so that ||g||_p = 1."""

    def __init__(self, p, power=4):
        self.p = float(p)
        self.power = power
        raw, _ = integrate.quad(lambda s: (1 - s * s) ** (power * self.p), -1, 1, epsabs=1e-14, epsrel=1e-13)
        self.scale = raw ** (-1.0 / self.p)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(np.abs(s) < 1, self.scale * (1 - s * s) ** self.power, 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        m = self.power
        return np.where(np.abs(s) < 1, -2 * m * self.scale * s * (1 - s * s) ** (m - 1), 0.0)

    def lp_norm(self):
        val, _ = integrate.quad(lambda s: float(self(s)) ** self.p, -1, 1, epsabs=1e-14, epsrel=1e-13)
        return val ** (1.0 / self.p)

    def sup_derivative(self):
        s = np.linspace(-1, 1, 20001)
        return float(np.abs(self.derivative(s)).max())


@dataclass
class LiftResult:
    field: VectorField
    bound: float
    C: float
    normA: float
    normE: float
    normf: float


def dimension_lift(u_d, bump, scale_r, p=None, m=32, unit=PLACEMENT_RADIUS):
    """Lift a planar (or 3D) field to one more dimension.

    The lift f_d(r x) g(x_{d+1}) is represented after the dilation by r, as
    f_d(x) g(x_{d+1} / (unit * r)) with unit the length scale of u_d in
    cell coordinates.  The extra axis has m points and length 2 unit r / 0.9.
    Also returns the lower bound ||A(f_d)|| / (||E(f_d)|| + C ||f_d|| / r),
    C = 2 ||g'||_inf, with norms taken in the unit length of u_d.
    """
    if p is None:
        p = bump.p
    if abs(bump.lp_norm() - 1.0) > 1e-8:
        raise ValueError("bump must be normalized in L^p")
    if not scale_r > 0:
        raise ValueError("scale_r must be positive")
    g0 = u_d.grid
    d = g0.dim
    Lz = 2 * unit * scale_r / 0.9
    grid = GridSpec(d + 1, g0.n, shape=g0.shape + (m,), lengths=g0.lengths + (Lz,))
    z = np.arange(m) * Lz / m - Lz / 2
    gz = bump(z / (unit * scale_r))
    vals = np.zeros((d + 1,) + grid.shape)
    vals[:d] = u_d.values[..., None] * gz
    G = spectral.gradient(u_d)
    E, A = spectral.strain_parts(G)
    # norms in the length unit of u_d (area element unit^d)
    vol = float(np.prod(g0.lengths)) / unit ** d
    nA = spectral.lp_norm(A, p) * vol ** (1 / p)
    nE = spectral.lp_norm(E, p) * vol ** (1 / p)
    nf = spectral.lp_norm(u_d, p) / unit * vol ** (1 / p)
    C = 2 * bump.sup_derivative()
    return LiftResult(VectorField(grid, vals), nA / (nE + C * nf / scale_r), C, nA, nE, nf)


def l1_radial_profiles(r, d):
    """|E| and |A| of u = (1 - r^2) J x at radius r (d even)."""
    r = np.asarray(r, dtype=float)
    E = np.sqrt(2.0) * r ** 2
    A = np.sqrt(d * (1 - r ** 2) ** 2 - 4 * r ** 2 * (1 - r ** 2) + 2 * r ** 4)
    return E, A


def _l1_field_gradient(x, d):
    # grad of (1 - |x|^2) J x at points x (n, d)
    h = d // 2
    J = np.zeros((d, d))
    J[:h, h:] = np.eye(h)
    J[h:, :h] = -np.eye(h)
    r2 = np.sum(x * x, axis=1)
    Jx = x @ J.T
    return (1 - r2)[:, None, None] * J - 2 * Jx[:, :, None] * x[:, None, :]


def l1_radial_ratio(d, method="radial", n_samples=200000, seed=0):
    """||A(u)||_1 / ||E(u)||_1 for u = (1 - |x|^2) J x on the unit ball.

    method "radial" integrates the exact radial profiles; "mc" samples the
    ball uniformly and uses the full gradient matrices.  Returns
    (ratio, bound) with bound = 1 + 2 sqrt(2)/(c_d d - sqrt(2)).
    """
    if d % 2 or d < 2:
        raise ValueError("d must be even")
    bound = 1 + 2 * np.sqrt(2.0) / (c_d(d) * d - np.sqrt(2.0))
    if method == "radial":
        num, _ = integrate.quad(lambda r: l1_radial_profiles(r, d)[1] * r ** (d - 1), 0, 1,
                                epsabs=1e-14, epsrel=1e-12, limit=200)
        den = np.sqrt(2.0) / (d + 2)
        return num / den, bound
    if method != "mc":
        raise ValueError("unknown method %r" % (method,))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_samples, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    x = g * rng.random(n_samples)[:, None] ** (1.0 / d)
    G = _l1_field_gradient(x, d)
    Gt = G.transpose(0, 2, 1)
    nA = np.linalg.norm(0.5 * (G - Gt), axis=(1, 2)).mean()
    nE = np.linalg.norm(0.5 * (G + Gt), axis=(1, 2)).mean()
    return nA / nE, bound


def witness_rows(k_list, p_list):
    """Rows (k, p, ratio, lower, upper) for CSV tables."""
    rows = []
    for p in p_list:
        for k in k_list:
            w = witness_norms_closed_form(k, p)
            rows.append((k, p, w.ratio, (p - 1) * (k - 1) / k, p - 1))
    return rows
