"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line in the summary."""
import contextlib
import io
import time

import numpy as np
import pytest

from kornlab import burkholder as bk
from kornlab import cli, matalg, orlicz, radial, rankone, spectral, witness
from kornlab.matalg import pstar

from conftest import ACCEPTANCE


def record(n, checks):
    """checks: list of (label, ok, measured); records the line and asserts."""
    ok = all(c[1] for c in checks)
    bad = [c for c in checks if not c[1]]
    shown = bad if bad else checks
    detail = "; ".join("%s%s %s" % ("" if c[1] else "!", c[0], c[2]) for c in shown)
    ACCEPTANCE[n] = (ok, detail)
    print("criterion %d %s %s" % (n, "PASS" if ok else "FAIL", detail))
    assert ok, detail


def identity_fields():
    fields = []
    for d in (2, 3):
        for n in (32, 64):
            g = spectral.GridSpec(d, n)
            fields += [spectral.random_field(g, seed=(1, d, n, i)) for i in range(50)]
    return fields


@pytest.fixture(scope="module")
def fields():
    return identity_fields()


def test_criterion_01_korn_identity(fields):
    t0 = time.perf_counter()
    worst = 0.0
    for u in fields:
        G = spectral.gradient(u)
        worst = max(worst, spectral.korn_identity_residual(u, "plain", G),
                    spectral.korn_identity_residual(u, "trace_free", G))
    dt = time.perf_counter() - t0
    record(1, [("residual<=1e-10", worst <= 1e-10, "%.2e" % worst),
               ("runtime<30s", dt < 30, "%.1fs" % dt)])


def test_criterion_02_p2_sharpness(fields):
    r = max(spectral.korn_ratio(u, 2) for u in fields)
    e = max(spectral.energy_identity_residual(u) for u in fields)
    record(2, [("ratio<=1+1e-10", r <= 1 + 1e-10, "%.15f" % r),
               ("energy<=1e-10", e <= 1e-10, "%.2e" % e)])


def test_criterion_03_upper_bound():
    g = spectral.GridSpec(2, 32)
    checks = []
    for p in (1.2, 1.5, 3, 4, 8):
        bound = spectral.korn_upper(p) + 1e-6
        rs = [spectral.korn_ratio(spectral.random_field(g, seed=(3, i)), p) for i in range(100)]
        rs += [spectral.maximize_ratio(p, grid=g, steps=15, seed=(4, i)).ratio for i in range(3)]
        worst = max(rs)
        checks.append(("p=%g" % p, worst <= bound, "%.4f<=%.4f" % (worst, bound)))
    record(3, checks)


def test_criterion_04_witness_family():
    checks = []
    worst = np.inf
    for p in np.linspace(2, 8, 13):
        for k in range(1, 101):
            f = witness.witness_norms_closed_form(k, p).ratio
            worst = min(worst, f - (p - 1) * (k - 1) / k + 1e-12, p - 1 + 1e-10 - f)
    checks.append(("closed-form bracket", worst >= 0, "%.2e" % worst))
    for p in (2, 4, 8):
        for k in (1, 2, 5, 10):
            f = witness.witness_norms_closed_form(k, p).ratio
            gaps = []
            for n in (256, 512):
                u = witness.vortex_field(witness.WitnessSpec(k, p), spectral.GridSpec(2, n), method="stream")
                gaps.append(abs(spectral.korn_ratio(u, p) / f - 1))
            checks.append(("p=%g k=%d within 5%%" % (p, k), gaps[1] <= 0.05, "%.4f" % gaps[1]))
            shrink = gaps[1] <= gaps[0] or max(gaps) <= 1e-12
            checks.append(("p=%g k=%d shrinking" % (p, k), shrink, "%.2e->%.2e" % tuple(gaps)))
    record(4, checks)


def test_criterion_05_tensor_constants():
    t0 = time.perf_counter()
    checks = []
    for d in range(2, 7):
        T, lmin, const = matalg.skew_defect_operator(d)
        I = np.eye(len(T))
        res = np.abs(T @ T - I / 2 - T / 2).max()
        checks.append(("d=%d lmin" % d, abs(lmin + 0.5) <= 1e-10, "%.12f" % lmin))
        checks.append(("d=%d constant 3" % d, abs(const - 3) <= 1e-10, "%.12f" % const))
        checks.append(("d=%d T^2 identity" % d, res <= 1e-12, "%.1e" % res))
        tf = matalg.tracefree_defect_constant(d)
        want = 4.0 if d == 2 else 3.0
        checks.append(("d=%d trace-free %g" % (d, want), abs(tf - want) <= 1e-8, "%.10f" % tf))
    dt = time.perf_counter() - t0
    checks.append(("runtime<10s", dt < 10, "%.2fs" % dt))
    record(5, checks)


def test_criterion_06_burkholder():
    checks = []
    for p in (1.2, 1.5, 2, 3, 4):
        rep = bk.zigzag_convexity_check(p, n_points=10000, seed=0)
        checks.append(("p=%g G<=V" % p, rep.max_majorization <= 1e-12, "%.1e" % rep.max_majorization))
        checks.append(("p=%g zigzag" % p, rep.min_second_difference >= -1e-8, "%.3e" % rep.min_second_difference))
        worst = max(bk.simulate_subordinate_pair(bk.random_pair(10, seed=(6, i), kind="spine" if i % 2 else "uniform"),
                                                 p)[2] for i in range(100))
        checks.append(("p=%g transform" % p, worst <= pstar(p) - 1 + 1e-10, "%.6f" % worst))
    t0 = time.perf_counter()
    res = bk.bellman_iterate(4, n=256, iters=200)
    dt = time.perf_counter() - t0
    gap = res.gap()
    checks.append(("bellman monotone", res.max_increase <= 0 and all(h >= 0 for h in res.history),
                   "%.1e" % res.max_increase))
    checks.append(("bellman gap in [-5e-3,0.05]", gap.min() >= -5e-3 and gap.max() <= 0.05,
                   "[%.3e, %.3e]" % (gap.min(), gap.max())))
    checks.append(("bellman runtime<60s", dt < 60, "%.1fs" % dt))
    record(6, checks)


def test_criterion_07_rank_one_envelope():
    res = rankone.planar_envelope(4, n=201, n_sweeps=200)
    z = res.zone_error()
    rel = res.relative_gap()
    record(7, [("zone equality", z <= 1e-12, "%.1e" % z),
               ("interior sup gap<=2%", rel <= 0.02, "%.4f" % rel)])


def test_criterion_08_c_of_p():
    p0 = rankone.p_zero()
    ps = np.linspace(p0, 2, 2001)[1:-1]
    imp = np.array([rankone.c_of_p(p) - rankone.natural_bound(p) for p in ps])
    jump = max(abs(rankone.c_of_p(q + e) - rankone.natural_bound(q + e)) for q in (p0, 2.0) for e in (1e-9, -1e-9))
    record(8, [("p0", abs(p0 - 1.638) <= 1e-3, "%.6f" % p0),
               ("positive", bool(np.all(imp > 0)), "%.2e" % imp.min()),
               ("sup<=5e-4", imp.max() <= 5e-4, "%.7f" % imp.max()),
               ("continuity", jump <= 1e-6, "%.1e" % jump)])


def test_criterion_09_gamma():
    rng = np.random.default_rng(9)
    pairs = list(zip(rng.uniform(2, 8, 200), rng.integers(1, 201, 200)))
    worst = max(radial.gamma_identity_residual(radial.GammaSpec(p, int(k))) for p, k in pairs)
    bad = sum(not (lo <= ex * (1 + 1e-10) and ex <= hi * (1 + 1e-10)) for _, _, lo, ex, hi in radial.sandwich_rows(pairs))
    record(9, [("identity<=1e-12", worst <= 1e-12, "%.1e" % worst),
               ("sandwich", bad == 0, "%d violations" % bad)])


def test_criterion_10_l1_radial():
    cd = min(matalg.c_d(d) * d for d in range(3, 65))
    checks = [("c_d d>sqrt2", cd > np.sqrt(2), "%.6f" % cd)]
    ratios = []
    for d in (4, 8, 16, 32):
        r, bound = witness.l1_radial_ratio(d)
        ratios.append(r)
        checks.append(("d=%d" % d, 1 <= r <= bound, "%.6f in [1, %.6f]" % (r, bound)))
    checks.append(("decreasing", bool(np.all(np.diff(ratios) < 0)), str(np.round(ratios, 6))))
    record(10, checks)


def test_criterion_11_orlicz():
    checks = []
    for lam in (0.1, 1.0, 10.0):
        for p in (1.1, 1.5, 1.9):
            F = orlicz.g_lambda_p(lam, p)
            # G_{lam,p}(t) = G_{1,p}(lam t) / lam^2, so the indices over t are those over lam t
            i, s = orlicz.simonenko_indices(F, orlicz.DEFAULT_GRID / lam)
            checks.append(("G(%g,%g) indices" % (lam, p), abs(i - p) <= 1e-6 and abs(s - 2) <= 1e-6,
                           "(%.8f, %.8f)" % (i, s)))
            c = orlicz.orlicz_korn_constant(F)
            checks.append(("G(%g,%g) constant" % (lam, p), c.constant <= 2 * np.sqrt(3) * (pstar(p) - 1),
                           "%.4f" % c.constant))
            checks.append(("G(%g,%g) K<4" % (lam, p), c.K < 4, "%.4f" % c.K))
    ps = np.linspace(1.001, 100, 200)
    Kmax = max(orlicz.interpolation_K(p, q) for p in ps for q in ps[ps >= p])
    checks.append(("all K<4", Kmax < 4, "%.6f" % Kmax))
    record(11, checks)


def run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(argv)
    return code, buf.getvalue()


def test_criterion_12_reproducibility(tmp_path):
    c1, r1 = run_cli(["verify", "--seed", "0"])
    c2, r2 = run_cli(["verify", "--seed", "0"])
    out = tmp_path / "fig"
    files = ("riesz_bounds.csv", "improvement.csv")
    run_cli(["figures", "--out", str(out)])
    a = [(out / f).read_bytes() for f in files]
    run_cli(["figures", "--out", str(out)])
    b = [(out / f).read_bytes() for f in files]
    record(12, [("verify exit 0", c1 == 0 and c2 == 0, "%d,%d" % (c1, c2)),
                ("verify identical", r1 == r2, "%d bytes" % len(r1)),
                ("figures identical", a == b, "%d files" % len(files))])
