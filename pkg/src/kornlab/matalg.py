"""Finite-dimensional linear algebra behind the Korn constants.

Matrices are plain numpy arrays of shape (..., d, d).  Third-order tensors
are arrays of shape (d, d, d) indexed a[i, j, k].
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from scipy import linalg, special

_SUBSPACES = {
    "sym": "sym", "skew": "skew", "sym0": "sym0", "spanid": "id", "id": "id",
}


def pstar(p):
    """p* = max(p, p/(p-1))."""
    p = float(p)
    if not p > 1:
        raise ValueError("p must exceed 1, got %r" % p)
    return max(p, p / (p - 1.0))


def c_d(d):
    """Mean of |theta_1| over the unit sphere S^{d-1}."""
    d = float(d)
    return float(np.exp(special.gammaln(d / 2) - special.gammaln((d + 1) / 2)) / np.sqrt(np.pi))


def _check_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected square matrices, got shape %s" % (A.shape,))
    if A.shape[-1] < 2:
        raise ValueError("dimension must be at least 2")
    return A


def project(A, subspace):
    """Orthogonal projection of A onto Sym, Skew, Sym0 or span(Id).

    Works on stacks of matrices (last two axes).
    """
    A = _check_square(A)
    key = _SUBSPACES.get(str(subspace).lower().replace("_", ""))
    if key is None:
        raise ValueError("unknown subspace %r" % (subspace,))
    At = np.swapaxes(A, -1, -2)
    if key == "sym":
        return 0.5 * (A + At)
    if key == "skew":
        return 0.5 * (A - At)
    d = A.shape[-1]
    tr = np.trace(A, axis1=-2, axis2=-1)[..., None, None]
    iden = tr * np.eye(d) / d
    if key == "id":
        return iden
    return 0.5 * (A + At) - iden


def frob(A):
    """Pointwise Frobenius norm over the last two axes."""
    A = np.asarray(A, dtype=float)
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


@dataclass(frozen=True)
class Tensor3:
    entries: np.ndarray
    sym_last_two: bool = False
    trace_free_last_two: bool = False

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 3 or not (a.shape[0] == a.shape[1] == a.shape[2]):
            raise ValueError("Tensor3 needs shape (d, d, d)")
        if a.shape[0] < 2:
            raise ValueError("dimension must be at least 2")
        scale = max(1.0, np.abs(a).max())
        if self.sym_last_two and np.abs(a - a.transpose(0, 2, 1)).max() > 1e-12 * scale:
            raise ValueError("tensor is not symmetric in the last two slots")
        if self.trace_free_last_two and np.abs(np.einsum("ijj->i", a)).max() > 1e-12 * scale:
            raise ValueError("tensor is not trace free in the last two slots")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self):
        return self.entries.shape[0]


def w_basis(d):
    """Orthonormal basis of R^d (x) Sym(d) as columns of a (d^3, m) matrix.

    Ordering is lexicographic in (i, (j <= k)); off-diagonal symmetric
    elements carry the factor 1/sqrt(2).
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    cols = []
    for i in range(d):
        for j, k in combinations_with_replacement(range(d), 2):
            e = np.zeros((d, d, d))
            if j == k:
                e[i, j, j] = 1.0
            else:
                e[i, j, k] = e[i, k, j] = 1.0 / np.sqrt(2.0)
            cols.append(e.ravel())
    return np.array(cols).T


def _swap12_matrix(d):
    # sigma(a)_{ijk} = a_{jik} as a permutation matrix on R^{d^3}
    idx = np.arange(d ** 3).reshape(d, d, d)
    perm = idx.transpose(1, 0, 2).ravel()
    S = np.zeros((d ** 3, d ** 3))
    S[np.arange(d ** 3), perm] = 1.0
    return S


def skew_defect_operator(d):
    """T = pi o sigma o pi on W in the basis of w_basis(d).

    Returns (T, min_eigenvalue, sharp_constant) with
    sharp_constant = 2 - 2 * min_eigenvalue.
    """
    B = w_basis(d)
    T = B.T @ _swap12_matrix(d) @ B
    T = 0.5 * (T + T.T)
    try:
        lam = linalg.eigh(T, eigvals_only=True)
    except linalg.LinAlgError as exc:
        raise RuntimeError("eigen-solve failed for d=%d" % d) from exc
    lmin = float(lam[0])
    return T, lmin, 2.0 - 2.0 * lmin


def skew_defect_extremal(d):
    """Unit tensor attaining the constant 3 (eigenvector for -1/2)."""
    B = w_basis(d)
    T, _, _ = skew_defect_operator(d)
    lam, vec = linalg.eigh(T)
    a = (B @ vec[:, 0]).reshape(d, d, d)
    return Tensor3(a, sym_last_two=True)


def skew_defect_ratio(a):
    """sum_{ijk} (a_ijk - a_jik)^2 / |a|^2 for a symmetric in its last two slots."""
    if not isinstance(a, Tensor3):
        a = Tensor3(a, sym_last_two=True)
    if not a.sym_last_two:
        raise ValueError("tensor must be flagged sym_last_two")
    x = a.entries
    n2 = np.sum(x * x)
    if n2 == 0:
        raise ValueError("zero tensor")
    b = x - x.transpose(1, 0, 2)
    return float(np.sum(b * b) / n2)


def _tracefree_form(d):
    # quadratic form |b|^2 + d/(d-1)^2 |c|^2 on R^{d^3}
    n = d ** 3
    Ib = np.eye(n) - _swap12_matrix(d)
    C = np.zeros((d, n))
    idx = np.arange(n).reshape(d, d, d)
    for k in range(d):
        for i in range(d):
            C[k, idx[i, i, k]] = 1.0
    return Ib.T @ Ib + d / (d - 1.0) ** 2 * C.T @ C


def tracefree_defect_constant(d, return_maximizer=False):
    """Largest value of |b|^2 + d/(d-1)^2 |c|^2 over unit a in R^d (x) Sym0(d).

    b_ijk = a_ijk - a_jik and c_k = sum_i a_iik.  With return_maximizer the
    maximizing unit tensor is returned as well.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    B = w_basis(d)
    # trace constraints sum_j a_ijj = 0, expressed in W coordinates
    tr = np.zeros((d, d ** 3))
    idx = np.arange(d ** 3).reshape(d, d, d)
    for i in range(d):
        for j in range(d):
            tr[i, idx[i, j, j]] = 1.0
    N = linalg.null_space(tr @ B)
    Z = B @ N
    Q = Z.T @ _tracefree_form(d) @ Z
    lam, vec = linalg.eigh(0.5 * (Q + Q.T))
    val = float(lam[-1])
    if not return_maximizer:
        return val
    a = (Z @ vec[:, -1]).reshape(d, d, d)
    a = 0.5 * (a + a.transpose(0, 2, 1))
    return val, Tensor3(a / np.linalg.norm(a), sym_last_two=True, trace_free_last_two=True)


def tracefree_form_value(a):
    """(|b|^2 + d/(d-1)^2 |c|^2) / |a|^2 for a Tensor3."""
    x = a.entries if isinstance(a, Tensor3) else np.asarray(a, dtype=float)
    d = x.shape[0]
    b = x - x.transpose(1, 0, 2)
    c = np.einsum("iik->k", x)
    return float((np.sum(b * b) + d / (d - 1.0) ** 2 * np.sum(c * c)) / np.sum(x * x))


def sphere_points(d, n_samples, seed=None, rule="mc"):
    """Points and weights on S^{d-1} with weights summing to one.

    rule "mc" normalizes Gaussian samples; rule "gl" is a product
    Gauss-Legendre rule in the angles (d = 2 or 3 only), with n_samples
    nodes per angle.
    """
    if d < 2 or n_samples < 1:
        raise ValueError("need d >= 2 and n_samples >= 1")
    if rule == "mc":
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n_samples, d))
        th = g / np.linalg.norm(g, axis=1, keepdims=True)
        return th, np.full(n_samples, 1.0 / n_samples)
    if rule != "gl":
        raise ValueError("unknown rule %r" % (rule,))
    if d == 2:
        # uniform nodes are exact for trigonometric polynomials
        phi = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(n_samples, 1.0 / n_samples)
    if d == 3:
        z, wz = np.polynomial.legendre.leggauss(n_samples)
        phi = 2 * np.pi * (np.arange(2 * n_samples) + 0.5) / (2 * n_samples)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - Z ** 2)
        th = np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), Z.ravel()])
        w = np.repeat(wz / 2.0, 2 * n_samples) / (2 * n_samples)
        return th, w
    raise ValueError("Gauss-Legendre rule only for d in {2, 3}")


def sphere_moment(d, n_samples=10000, seed=None, rule="mc", exact=False):
    """Average of theta (x) theta over the sphere.

    With exact=True the symmetry argument is used: off-diagonal entries
    vanish by odd symmetry and the diagonal entries are equal, so the
    result is Id/d.
    """
    if d < 2 or n_samples < 1:
        raise ValueError("need d >= 2 and n_samples >= 1")
    if exact:
        return np.eye(d) / d
    th, w = sphere_points(d, n_samples, seed, rule)
    M = np.einsum("n,ni,nj->ij", w, th, th)
    return 0.5 * (M + M.T)


def _abs_gauss_mean(s):
    # E|A g| for g ~ N(0, I), A with singular values s, by a 1D integral:
    # E|X| = (2 sqrt(pi))^{-1} int_0^inf (1 - E exp(-t|X|^2)) t^{-3/2} dt
    from scipy import integrate

    s2 = np.asarray(s, dtype=float) ** 2

    def f(u):
        # t = u^2 substitution keeps the integrand bounded at 0
        t = u * u
        val = 1.0 - np.prod(1.0 / np.sqrt(1.0 + 2.0 * t * s2))
        return 2.0 * val / t if t > 0 else 2.0 * np.sum(s2)

    a, _ = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-12, limit=200)
    b, _ = integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return (a + b) / (2.0 * np.sqrt(np.pi))


def directional_average_lower(A, quadrature="exact", n_samples=200000, seed=0):
    """Average of |A theta| over the sphere and the lower bound c_d |A|.

    quadrature is "exact" (a one-dimensional integral through the Gaussian
    representation), "mc" or "gl" (d in {2, 3}).  Returns (avg, bound, tol)
    where tol is the quadrature tolerance that applies to avg.
    """
    A = _check_square(A)
    if A.ndim != 2:
        raise ValueError("expected a single matrix")
    nA = float(frob(A))
    if nA == 0:
        raise ValueError("A must be nonzero")
    d = A.shape[0]
    bound = c_d(d) * nA
    if quadrature == "exact":
        s = linalg.svdvals(A)
        # E|Ag| = E|g| * avg over the sphere, E|g| = sqrt(2) Gamma((d+1)/2)/Gamma(d/2)
        eg = np.sqrt(2.0) * np.exp(special.gammaln((d + 1) / 2) - special.gammaln(d / 2))
        return _abs_gauss_mean(s) / eg, bound, 1e-9 * nA
    th, w = sphere_points(d, n_samples, seed, quadrature)
    vals = np.linalg.norm(th @ A.T, axis=1)
    avg = float(np.sum(w * vals))
    if quadrature == "mc":
        tol = 5.0 * float(np.std(vals)) / np.sqrt(len(vals))
    else:
        tol = 1e-6 * nA
    return avg, bound, tol


def rank_one_projection_ratio(a, b, X="sym"):
    """|P_{X^perp}(a (x) b)| / |P_X(a (x) b)|."""
    R = np.outer(a, b)
    PX = project(R, X)
    return float(frob(R - PX) / frob(PX))


def rank_one_ratio(X="sym", d=2, n_starts=32, seed=0, iters=400, tol=1e-12):
    """sup over rank-one R of |P_{X^perp} R| / |P_X R| by projected gradient.

    The objective is maximized over (a, b) on the product of unit spheres
    with a multi-start projected gradient method.  Returns (value, a, b).
    """
    X = str(X).lower()
    if X not in ("sym", "sym0"):
        raise ValueError("X must be Sym or Sym0")
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = np.random.default_rng(seed)

    def obj(a, b):
        R = np.outer(a, b)
        PX = project(R, X)
        num = np.sum((R - PX) ** 2)
        den = np.sum(PX ** 2)
        # gradient of num/den; both are quadratic forms in R
        gR = 2 * ((R - PX) * den - PX * num) / den ** 2
        return num / den, gR @ b, gR.T @ a

    best = (-np.inf, None, None)
    converged = False
    for _ in range(n_starts):
        a = rng.standard_normal(d)
        b = rng.standard_normal(d)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        val, ga, gb = obj(a, b)
        step = 0.5
        for _ in range(iters):
            ga -= (ga @ a) * a
            gb -= (gb @ b) * b
            g2 = ga @ ga + gb @ gb
            if g2 < tol:
                converged = True
                break
            # backtracking with an Armijo sufficient-increase test
            for _ in range(30):
                na = a + step * ga
                nb = b + step * gb
                na /= np.linalg.norm(na)
                nb /= np.linalg.norm(nb)
                nval, nga, ngb = obj(na, nb)
                if nval >= val + 0.5 * step * g2:
                    break
                step *= 0.5
            else:
                converged = True
                break
            a, b, val, ga, gb = na, nb, nval, nga, ngb
            step = min(2 * step, 1.0)
        if val > best[0]:
            best = (val, a.copy(), b.copy())
    if not converged:
        raise RuntimeError("rank_one_ratio: optimizer did not converge")
    return float(np.sqrt(best[0])), best[1], best[2]
