"""Fourier-multiplier calculus for vector fields on a periodic box.

Fields are stored component first: a vector field has values of shape
(d, n_1, ..., n_d) and a matrix field (d, d, n_1, ..., n_d), where
values[i, j] is the (i, j) entry.  Derivatives are spectral; the Nyquist
mode of an even-length axis is dropped from derivatives so that the
discrete gradient of a real field is real and the multiplier identities
below hold exactly per frequency.
"""
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .matalg import pstar

MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid.  shape/lengths default to n points on [0, 1)."""
    dim: int
    n: int
    shape: tuple = None
    lengths: tuple = None

    def __post_init__(self):
        if self.dim not in (2, 3, 4):
            raise ValueError("dim must be 2 or 3 (4 allowed for lifts)")
        shape = tuple(self.shape) if self.shape is not None else (self.n,) * self.dim
        lengths = tuple(float(x) for x in self.lengths) if self.lengths is not None else (1.0,) * self.dim
        if len(shape) != self.dim or len(lengths) != self.dim:
            raise ValueError("shape and lengths must have dim entries")
        for m in shape:
            if m < 8 or m & (m - 1):
                raise ValueError("points per axis must be a power of two >= 8, got %d" % m)
        if int(np.prod(shape)) > MAX_POINTS:
            raise ValueError("grid of %d points exceeds the memory cap %d" % (np.prod(shape), MAX_POINTS))
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @property
    def spacing(self):
        return tuple(L / m for L, m in zip(self.lengths, self.shape))

    def coords(self):
        """Meshgrid of node coordinates, each of the grid shape."""
        axes = [np.arange(m) * L / m for m, L in zip(self.shape, self.lengths)]
        return np.meshgrid(*axes, indexing="ij")

    def wavenumbers(self, drop_nyquist=True):
        """Angular wavenumbers on the real-FFT layout (last axis halved)."""
        ks = []
        for a, (m, L) in enumerate(zip(self.shape, self.lengths)):
            if a == self.dim - 1:
                f = np.fft.rfftfreq(m, d=1.0 / m)
            else:
                f = np.fft.fftfreq(m, d=1.0 / m)
            k = 2 * np.pi * f / L
            if drop_nyquist:
                k = np.where(np.abs(f) == m // 2, 0.0, k)
            sh = [1] * self.dim
            sh[a] = len(k)
            ks.append(k.reshape(sh))
        return ks


@dataclass
class VectorField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.dim,) + self.grid.shape:
            raise ValueError("values shape %s does not match grid" % (v.shape,))
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite entries in vector field")
        self.values = v


@dataclass
class MatrixField:
    grid: GridSpec
    values: np.ndarray
    mean_free: bool = field(default=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = self.grid.dim
        if v.shape != (d, d) + self.grid.shape:
            raise ValueError("values shape %s does not match grid" % (v.shape,))
        self.values = v

    def pointwise(self):
        """Values as an array of matrices with shape grid.shape + (d, d)."""
        return np.moveaxis(self.values, (0, 1), (-2, -1))

    def transpose(self):
        return MatrixField(self.grid, self.values.swapaxes(0, 1), self.mean_free)

    def mean(self):
        axes = tuple(range(2, 2 + self.grid.dim))
        return self.values.mean(axis=axes)


def _axes(grid):
    return tuple(range(-grid.dim, 0))


def _fft(grid, v):
    return sfft.rfftn(v, axes=_axes(grid))


def _ifft(grid, vh):
    return sfft.irfftn(vh, s=grid.shape, axes=_axes(grid))


def gradient(u):
    """Spectral Jacobian: values[i, j] = d u_i / d x_j."""
    g = u.grid
    uh = _fft(g, u.values)
    ks = g.wavenumbers()
    out = np.empty((g.dim, g.dim) + uh.shape[1:], dtype=complex)
    for j in range(g.dim):
        out[:, j] = 1j * ks[j] * uh
    return MatrixField(g, _ifft(g, out), mean_free=True)


def divergence_adjoint(M):
    """Adjoint of gradient for the grid-mean inner product: -sum_j d_j M_ij."""
    g = M.grid
    Mh = _fft(g, M.values)
    ks = g.wavenumbers()
    acc = np.zeros((g.dim,) + Mh.shape[2:], dtype=complex)
    for j in range(g.dim):
        acc -= 1j * ks[j] * Mh[:, j]
    return VectorField(g, _ifft(g, acc))


def divergence(u):
    G = gradient(u)
    return np.einsum("ii...->...", G.values)


def strain_parts(G, variant="plain"):
    """Split G = E + A into (strain, vorticity) or their trace-adjusted forms."""
    v = G.values
    d = G.grid.dim
    E = 0.5 * (v + v.swapaxes(0, 1))
    A = v - E
    if variant in ("trace_free", "tracefree", "trace-free"):
        tr = np.einsum("ii...->...", v) / d
        I = np.eye(d).reshape((d, d) + (1,) * d)
        E = E - tr * I
        A = A + tr * I
    elif variant != "plain":
        raise ValueError("unknown variant %r" % (variant,))
    return MatrixField(G.grid, E, G.mean_free), MatrixField(G.grid, A, G.mean_free)


def riesz_tensor(F, force=False):
    """Apply the multiplier -xi xi^T / |xi|^2 from the left, row by row.

    The zero frequency is mapped to 0; Nyquist modes are kept as ordinary
    frequencies.  Inputs must have zero mean unless force is set.
    """
    g = F.grid
    scale = max(1.0, float(np.abs(F.values).max())) if F.values.size else 1.0
    if not force and np.abs(F.mean()).max() > 1e-10 * scale:
        raise ValueError("riesz_tensor needs a mean-free field")
    Fh = _fft(g, F.values)
    ks = g.wavenumbers(drop_nyquist=False)
    k2 = sum(k * k for k in ks)
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    # (m F)_il = -k_i (sum_j k_j F_jl) / |k|^2
    s = sum(ks[j] * Fh[j] for j in range(g.dim)) * inv
    out = np.empty_like(Fh)
    for i in range(g.dim):
        out[i] = -ks[i] * s
    return MatrixField(g, _ifft(g, out), mean_free=True)


def _l2(v):
    return float(np.sqrt(np.mean(np.sum(v * v, axis=(0, 1)))))


def korn_identity_residual(u, variant="plain", G=None):
    """Relative L2 residual of the Riesz-tensor representation of the vorticity.

    plain:      A = RR(E) - RR(E)^T
    trace_free: 2 P_Skew(RR E0) - d/(d-1) P_Id(RR E0) = A0

    G may pass a precomputed gradient(u) when several variants are checked.
    """
    if G is None:
        G = gradient(u)
    d = u.grid.dim
    if variant == "plain":
        E, A = strain_parts(G, "plain")
        R = riesz_tensor(E).values
        lhs = R - R.swapaxes(0, 1)
    elif variant in ("trace_free", "tracefree", "trace-free"):
        E, A = strain_parts(G, "trace_free")
        R = riesz_tensor(E).values
        skew = 0.5 * (R - R.swapaxes(0, 1))
        tr = np.einsum("ii...->...", R) / d
        I = np.eye(d).reshape((d, d) + (1,) * d)
        lhs = 2 * skew - d / (d - 1.0) * tr * I
    else:
        raise ValueError("unknown variant %r" % (variant,))
    den = _l2(A.values)
    num = _l2(lhs - A.values)
    if den == 0:
        return num
    return num / den


def lp_norm(F, p):
    """Grid-average L^p norm of the pointwise Frobenius norm."""
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    v = F.values if isinstance(F, (MatrixField, VectorField)) else np.asarray(F)
    if isinstance(F, VectorField):
        mod = np.sqrt(np.sum(v * v, axis=0))
    elif isinstance(F, MatrixField):
        mod = np.sqrt(np.sum(v * v, axis=(0, 1)))
    else:
        mod = np.abs(v)
    if np.isinf(p):
        return float(mod.max())
    m = mod.max()
    if m == 0:
        return 0.0
    # scale out the maximum to keep large p finite
    return float(m * np.mean((mod / m) ** p) ** (1.0 / p))


def korn_ratio(u, p, variant="plain"):
    """||A(u)||_p / ||E(u)||_p and its trace-free / full-gradient versions."""
    G = gradient(u)
    if variant == "full_gradient":
        E, _ = strain_parts(G, "plain")
        num = lp_norm(G, p)
    else:
        E, A = strain_parts(G, variant)
        num = lp_norm(A, p)
    den = lp_norm(E, p)
    if den <= 1e-300 or den <= 1e-13 * max(num, 1e-300):
        raise ZeroDivisionError("degenerate strain in korn_ratio")
    return num / den


def energy_identity_residual(u):
    """| ||E||^2 - ||A||^2 - ||div u||^2 | relative to ||E||^2 (L2 grid means)."""
    G = gradient(u)
    E, A = strain_parts(G)
    e2 = _l2(E.values) ** 2
    a2 = _l2(A.values) ** 2
    dv = float(np.mean(np.einsum("ii...->...", G.values) ** 2))
    return abs(e2 - a2 - dv) / max(e2, 1e-300)


def random_field(grid, seed=None, kmax=None, decay=1.0):
    """Seeded random real band-limited vector field with zero mean.

    Fourier modes with |m|_inf <= kmax (default n/4) get Gaussian
    coefficients damped by (1+|m|^2)^(-decay/2); all other modes vanish.
    """
    rng = np.random.default_rng(seed)
    d = grid.dim
    if kmax is None:
        kmax = min(grid.shape) // 4
    v = rng.standard_normal((d,) + grid.shape)
    vh = _fft(grid, v)
    freqs = []
    for a, m in enumerate(grid.shape):
        f = np.fft.rfftfreq(m, d=1.0 / m) if a == d - 1 else np.fft.fftfreq(m, d=1.0 / m)
        sh = [1] * d
        sh[a] = len(f)
        freqs.append(f.reshape(sh))
    mask = np.ones(vh.shape[1:], dtype=bool)
    m2 = np.zeros(vh.shape[1:])
    for f in freqs:
        mask &= np.abs(f) <= kmax
        m2 = m2 + f * f
    vh = vh * mask * (1.0 + m2) ** (-decay / 2.0)
    vh[(slice(None),) + (0,) * d] = 0.0
    out = _ifft(grid, vh)
    out /= max(np.abs(out).max(), 1e-300)
    return VectorField(grid, out)


def _ratio_and_grad(u, p, variant):
    # ratio R = N/D with N, D the L^p norms; returns R and dR/du
    G = gradient(u)
    d = u.grid.dim
    if variant == "full_gradient":
        E, _ = strain_parts(G, "plain")
        Nf = G.values
    else:
        E, A = strain_parts(G, variant)
        Nf = A.values
    Ev = E.values

    def norm_and_dual(v):
        # ||v||_p and its derivative in the grid-mean pairing,
        # |v|^{p-2} v / ||v||^{p-1}, written in scaled form
        mod = np.sqrt(np.sum(v * v, axis=(0, 1)))
        m = mod.max()
        nrm = m * np.mean((mod / m) ** p) ** (1.0 / p)
        q = mod / nrm
        w = np.where(mod > 0, np.where(mod > 0, q, 1.0) ** (p - 2), 0.0)
        return nrm, w * v / nrm

    N, dN = norm_and_dual(Nf)
    D, dD = norm_and_dual(Ev)
    I = np.eye(d).reshape((d, d) + (1,) * d)
    if variant == "full_gradient":
        gN = dN
    elif variant == "plain":
        gN = 0.5 * (dN - dN.swapaxes(0, 1))
    else:
        tr = np.einsum("ii...->...", dN) / d
        gN = 0.5 * (dN - dN.swapaxes(0, 1)) + tr * I
    if variant == "trace_free":
        sym = 0.5 * (dD + dD.swapaxes(0, 1))
        gD = sym - np.einsum("ii...->...", sym) / d * I
    else:
        gD = 0.5 * (dD + dD.swapaxes(0, 1))
    M = MatrixField(u.grid, gN / D - (N / D ** 2) * gD)
    return N / D, divergence_adjoint(M).values


@dataclass
class AscentResult:
    u: VectorField
    ratio: float
    history: list
    stalled: bool


def maximize_ratio(p, variant="plain", grid=None, init="random", steps=50, step_size=0.1,
                   seed=0, k=None, max_halvings=20):
    """Projected gradient ascent of korn_ratio over mean-free grid fields.

    init is "random" (seeded band-limited field), "witness" (vortex field
    u_k, needs k and a 2D grid) or a VectorField.  Each step moves by
    step_size * ||u||_2 along the normalized L2 gradient, halving up to
    max_halvings times until the ratio increases; the iterate is
    re-centered to zero mean.  Returns an AscentResult; stalled is True when
    no halving produced an increase.
    """
    p = float(p)
    if not p > 1:
        raise ValueError("p must exceed 1")
    if isinstance(init, VectorField):
        u = init
        grid = u.grid
    elif init == "random":
        if grid is None:
            raise ValueError("grid required")
        u = random_field(grid, seed)
    elif init == "witness":
        from .witness import WitnessSpec, vortex_field
        if k is None:
            raise ValueError("witness init needs k")
        u = vortex_field(WitnessSpec(k=k, p=p, d=2), grid)
    else:
        raise ValueError("unknown init %r" % (init,))
    axes = tuple(range(1, 1 + grid.dim))
    ratio, gr = _ratio_and_grad(u, p, variant)
    history = [ratio]
    stalled = False
    for _ in range(steps):
        gn = np.sqrt(np.mean(np.sum(gr * gr, axis=0)))
        un = np.sqrt(np.mean(np.sum(u.values ** 2, axis=0)))
        if gn == 0:
            stalled = True
            break
        eta = step_size
        accepted = False
        for _ in range(max_halvings + 1):
            v = u.values + eta * un * gr / gn
            v = v - v.mean(axis=axes, keepdims=True)
            cand = VectorField(grid, v)
            try:
                r2, g2 = _ratio_and_grad(cand, p, variant)
            except (ZeroDivisionError, FloatingPointError):
                r2 = -np.inf
            if r2 > ratio:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            stalled = True
            break
        u, ratio, gr = cand, r2, g2
        history.append(ratio)
    return AscentResult(u, ratio, history, stalled)


def save_field_binary(path, F):
    """Write header (d, n, entries) as little-endian uint64 then f64 values.

    Values are stored row-major with the entry index varying fastest.
    """
    g = F.grid
    v = F.values
    ent = v.shape[0] * (v.shape[1] if isinstance(F, MatrixField) else 1)
    flat = v.reshape((ent,) + g.shape)
    data = np.moveaxis(flat, 0, -1).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQQ", g.dim, g.shape[0], ent))
        fh.write(np.ascontiguousarray(data).tobytes())


def load_field_binary(path):
    """Inverse of save_field_binary for cubic unit grids."""
    with open(path, "rb") as fh:
        d, n, ent = struct.unpack("<QQQ", fh.read(24))
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = GridSpec(int(d), int(n))
    vals = np.moveaxis(data.reshape(grid.shape + (int(ent),)), -1, 0)
    if ent == d:
        return VectorField(grid, vals.copy())
    return MatrixField(grid, vals.reshape((int(d), int(d)) + grid.shape).copy())


def save_field_csv(path, F):
    """Small grids only: index columns followed by one column per entry."""
    g = F.grid
    v = F.values
    ent = v.shape[0] * (v.shape[1] if isinstance(F, MatrixField) else 1)
    flat = v.reshape((ent,) + g.shape).reshape(ent, -1).T
    idx = np.indices(g.shape).reshape(g.dim, -1).T
    with open(path, "w") as fh:
        names = ["i%d" % a for a in range(g.dim)] + ["v%d" % e for e in range(ent)]
        fh.write(",".join(names) + "\n")
        for ix, row in zip(idx, flat):
            fh.write(",".join([str(int(x)) for x in ix] + ["%.17g" % x for x in row]) + "\n")


def korn_upper(p):
    return np.sqrt(3.0) * (pstar(p) - 1.0)
