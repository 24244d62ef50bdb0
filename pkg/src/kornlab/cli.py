"""kornlab command line: bound tables, figure data and verification runs.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error,
3 numerical non-convergence.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import burkholder, matalg, orlicz, radial, rankone, spectral, witness
from .matalg import pstar

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_grid(text):
    """"a:b:n" (linspace, endpoints included) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            vals = np.linspace(float(a), float(b), int(n))
        else:
            vals = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise UsageError("cannot parse grid %r" % text)
    if len(vals) == 0:
        raise UsageError("empty grid %r" % text)
    return [float(v) for v in vals]


def parse_ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError("cannot parse integer list %r" % text)


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def config_of(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return cfg


def header_lines(args):
    return ["kornlab %s" % __version__,
            "config %s" % json.dumps(config_of(args), sort_keys=True),
            "seed %d" % args.seed]


def render(columns, rows, args):
    if args.format == "json":
        meta = {"version": __version__, "config": config_of(args), "seed": args.seed}
        data = [[x if not isinstance(x, (np.floating, np.integer, np.bool_)) else x.item() for x in r]
                for r in rows]
        return json.dumps({"meta": meta, "columns": list(columns), "rows": data}, sort_keys=True) + "\n"
    out = ["# " + h for h in header_lines(args)]
    out.append(",".join(columns))
    out.extend(",".join(fmt(x) for x in r) for r in rows)
    return "\n".join(out) + "\n"


def emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise UsageError("cannot write %s: %s" % (path, e.strerror))


def p_grid_of(args, default):
    if args.p_grid is not None:
        ps = parse_grid(args.p_grid)
    elif args.p is not None:
        ps = [args.p]
    else:
        ps = list(default)
    if any(not p > 1 for p in ps):
        raise UsageError("every p must exceed 1")
    return ps


def bounds_row(p):
    b = pstar(p) - 1
    lo, hi = rankone.full_gradient_bounds(p)
    return (p, max(1.0, b / 2), b, np.sqrt(3) * b, b, lo, hi)


def cmd_bounds(args):
    ps = p_grid_of(args, np.round(np.linspace(1.1, 8, 70), 10))
    rows = [bounds_row(p) for p in ps]
    cols = ("p", "lower", "riesz_upper", "korn_upper", "korn_lower", "full_lower", "full_upper")
    emit(render(cols, rows, args), args.out)
    return EXIT_OK


def figure_tables(n=400):
    p0 = rankone.p_zero()
    ps = np.linspace(1.05, 8, n)
    riesz = [(p, max(1.0, (pstar(p) - 1) / 2), pstar(p) - 1) for p in ps]
    qs = np.linspace(p0, 2, n + 2)
    imp = [(r[0], r[3]) for r in rankone.c_curve_rows(qs)]
    return riesz, imp


def cmd_figures(args):
    outdir = args.out or "figures"
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as e:
        raise UsageError("cannot create %s: %s" % (outdir, e.strerror))
    riesz, imp = figure_tables(args.n or 400)
    emit(render(("p", "riesz_lower", "riesz_upper"), riesz, args), os.path.join(outdir, "riesz_bounds.csv"))
    emit(render(("p", "improvement"), imp, args), os.path.join(outdir, "improvement.csv"))
    return EXIT_OK


def cmd_witness(args):
    ks = parse_ints(args.k) if args.k else [1, 2, 5, 10, 20, 50, 100]
    ps = p_grid_of(args, [2, 3, 4, 8])
    rows = witness.witness_rows(ks, ps)
    emit(render(("k", "p", "ratio", "lower", "upper"), rows, args), args.out)
    return EXIT_OK


def cmd_spectral_check(args):
    d = args.d or 2
    n = args.n or 32
    ps = p_grid_of(args, [1.2, 1.5, 2, 3, 4, 8])
    grid = spectral.GridSpec(d, n)
    rows = []
    for i in range(args.trials):
        u = spectral.random_field(grid, seed=(args.seed, i))
        res = spectral.korn_identity_residual(u)
        res0 = spectral.korn_identity_residual(u, "trace_free")
        for p in ps:
            rows.append((i, d, n, p, res, res0, spectral.korn_ratio(u, p), spectral.korn_upper(p)))
    cols = ("trial", "d", "n", "p", "identity_residual", "tracefree_residual", "ratio", "upper")
    emit(render(cols, rows, args), args.out)
    return EXIT_OK


def cmd_bellman(args):
    p = args.p if args.p is not None else 4.0
    res = burkholder.bellman_iterate(p, n=args.n or 64, iters=args.sweeps)
    emit(render(("x", "y", "B", "G", "gap"), burkholder.bellman_rows(res), args), args.out)
    return EXIT_OK


def cmd_envelope(args):
    p = args.p if args.p is not None else 4.0
    n = args.n or 101
    if n % 2 == 0:
        n += 1
    res = rankone.planar_envelope(p, n=n, n_sweeps=args.sweeps)
    emit(render(("a", "b", "f", "envelope", "G_p", "gap"), rankone.envelope_rows(res), args), args.out)
    return EXIT_OK


def cmd_radial(args):
    ks = parse_ints(args.k) if args.k else [1, 2, 5, 10, 20, 50, 100, 200]
    ps = p_grid_of(args, [2, 3, 4, 8])
    rows = radial.sandwich_rows([(p, k) for p in ps for k in ks])
    emit(render(("p", "k", "jensen", "exact", "upper"), rows, args), args.out)
    return EXIT_OK


def young_of(args):
    fam = args.family
    if fam == "table":
        if not args.table:
            raise UsageError("--family table needs --table PATH")
        try:
            return orlicz.from_table(args.table)
        except OSError as e:
            raise UsageError("cannot read %s: %s" % (args.table, e.strerror))
    if fam == "power":
        return orlicz.power(args.p if args.p is not None else 2.0)
    if fam == "G":
        return orlicz.g_lambda_p(args.lam, args.p if args.p is not None else 1.5)
    return orlicz.t_log1p()


def cmd_orlicz(args):
    Phi = young_of(args)
    i, s, res = orlicz.simonenko_indices(Phi, return_resolution=True)
    c = orlicz.orlicz_korn_constant(Phi)
    simple = c.simplified if c.simplified is not None else float("nan")
    cols = ("name", "i", "s", "resolution", "K", "constant", "simplified")
    emit(render(cols, [(Phi.name, i, s, res, c.K, c.constant, simple)], args), args.out)
    return EXIT_OK


def cmd_tensor_constants(args):
    ds = [args.d] if args.d else [2, 3, 4, 5, 6]
    rows = []
    for d in ds:
        _, lmin, const = matalg.skew_defect_operator(d)
        rows.append((d, lmin, const, matalg.tracefree_defect_constant(d), matalg.c_d(d)))
    emit(render(("d", "lambda_min", "skew_constant", "tracefree_constant", "c_d"), rows, args), args.out)
    return EXIT_OK


# verification suite -------------------------------------------------------

def _check(name, value, tol, ok):
    return (name, float(value), float(tol), bool(ok))


def verification_suite(seed=0, negate=False):
    """Run the invariant checks; returns a list of (name, measured, tol, ok).

    negate flips the sign in the Korn identity check (harness self-test).
    """
    rng = np.random.default_rng(seed)
    checks = []

    def run(name, fn):
        try:
            checks.append(fn())
        except Exception as e:  # reported, not raised
            checks.append((name + " [" + type(e).__name__ + ": " + str(e) + "]", np.nan, np.nan, False))

    def projections():
        err = 0.0
        for d in range(2, 7):
            A = rng.standard_normal((50, d, d))
            P = [matalg.project(A, s) for s in ("skew", "sym0", "id")]
            err = max(err, float(np.abs(P[0] + P[1] + P[2] - A).max()))
            for i in range(3):
                for j in range(i + 1, 3):
                    err = max(err, float(np.abs(np.einsum("nab,nab->n", P[i], P[j])).max()))
        return _check("matalg projections orthogonal and complete", err, 1e-12, err <= 1e-12)

    def skew_ratio():
        worst = 0.0
        for d in range(2, 7):
            a = rng.standard_normal((300, d, d, d))
            a = 0.5 * (a + a.transpose(0, 1, 3, 2))
            worst = max(worst, max(matalg.skew_defect_ratio(x) for x in a))
        return _check("matalg skew defect ratio <= 3", worst - 3, 1e-9, worst <= 3 + 1e-9)

    def tracefree():
        err = 0.0
        for d in range(2, 7):
            val, a = matalg.tracefree_defect_constant(d, return_maximizer=True)
            err = max(err, abs(matalg.tracefree_form_value(a) - val))
        return _check("matalg trace-free maximizer attains eigenvalue", err, 1e-8, err <= 1e-8)

    def sphere():
        err = 0.0
        for d in (2, 3, 5):
            M = matalg.sphere_moment(d, 2000, seed=seed)
            err = max(err, float(np.abs(M - M.T).max()), abs(float(np.trace(M)) - 1))
        return _check("matalg sphere moment symmetric with unit trace", err, 1e-12, err <= 1e-12)

    def directional():
        worst = np.inf
        for d in (2, 3, 4):
            for _ in range(5):
                avg, bound, tol = matalg.directional_average_lower(rng.standard_normal((d, d)))
                worst = min(worst, avg - bound + tol)
            a, b = rng.standard_normal(d), rng.standard_normal(d)
            avg, bound, tol = matalg.directional_average_lower(np.outer(a, b))
            worst = min(worst, tol - abs(avg - bound))
        return _check("matalg directional average >= c_d|A|, equal at rank one", worst, 0, worst >= 0)

    fields = []
    for d, n in ((2, 32), (3, 16)):
        g = spectral.GridSpec(d, n)
        fields += [spectral.random_field(g, seed=(seed, d, i)) for i in range(5)]

    def korn_identity():
        worst = 0.0
        for u in fields:
            G = spectral.gradient(u)
            E, A = spectral.strain_parts(G)
            R = spectral.riesz_tensor(E).values
            lhs = R - R.swapaxes(0, 1)
            sign = -1.0 if negate else 1.0
            r = spectral._l2(lhs - sign * A.values) / spectral._l2(A.values)
            worst = max(worst, r, spectral.korn_identity_residual(u, "trace_free"))
        return _check("spectral Korn identity (plain and trace-free)", worst, 1e-10, worst <= 1e-10)

    def riesz_square():
        worst = 0.0
        for u in fields:
            E, _ = spectral.strain_parts(spectral.gradient(u))
            R1 = spectral.riesz_tensor(E)
            R2 = spectral.riesz_tensor(R1).values
            # the symbol m = -xi xi^T/|xi|^2 satisfies m^2 = -m
            worst = max(worst, float(np.abs(R2 + R1.values).max() / np.abs(R1.values).max()))
        return _check("spectral Riesz multiplier squares per frequency", worst, 1e-12, worst <= 1e-12)

    def p2():
        worst = 0.0
        for u in fields:
            worst = max(worst, spectral.korn_ratio(u, 2) - 1, spectral.energy_identity_residual(u))
        return _check("spectral p=2 ratio <= 1 and energy identity", worst, 1e-10, worst <= 1e-10)

    def monotone_p():
        worst = -np.inf
        for u in fields:
            G = spectral.gradient(u)
            v = [spectral.lp_norm(G, p) for p in (1, 1.5, 2, 3, 4, 8, np.inf)]
            worst = max(worst, max(a - b for a, b in zip(v[:-1], v[1:])))
        return _check("spectral L^p norms nondecreasing in p", worst, 1e-12, worst <= 1e-12)

    def ascent():
        worst = -np.inf
        g = spectral.GridSpec(2, 16)
        for p in (1.5, 4):
            r = spectral.maximize_ratio(p, grid=g, steps=5, seed=seed)
            worst = max(worst, r.ratio - spectral.korn_upper(p))
        return _check("spectral ascent stays below sqrt3(p*-1)", worst, 1e-6, worst <= 1e-6)

    def witness_bracket():
        worst = np.inf
        for p in (2, 3, 4, 8):
            for k in (1, 2, 5, 10, 20, 50, 100):
                r = witness.witness_norms_closed_form(k, p).ratio
                worst = min(worst, r - (p - 1) * (k - 1) / k + 1e-12, p - 1 + 1e-10 - r)
        return _check("witness f_k(p) within [(p-1)(k-1)/k, p-1]", worst, 0, worst >= 0)

    def divfree():
        worst = 0.0
        for k in (1, 2, 3):
            u = witness.vortex_field(witness.WitnessSpec(k, 2), spectral.GridSpec(2, 64), method="stream")
            dv = spectral.divergence(u)
            worst = max(worst, float(np.sqrt(np.mean(dv ** 2))) / spectral._l2(spectral.gradient(u).values))
        return _check("witness vortex divergence-free (stream form)", worst, 1e-10, worst <= 1e-10)

    def lift_monotone():
        u = witness.vortex_field(witness.WitnessSpec(1, 4), spectral.GridSpec(2, 16))
        bump = witness.Bump(4)
        b = [witness.dimension_lift(u, bump, r, m=8).bound for r in (1, 2, 4, 8)]
        worst = min(y - x for x, y in zip(b[:-1], b[1:]))
        return _check("witness lift bound increasing in r", worst, 0, worst > 0)

    def burk_majorant():
        worst = -np.inf
        hom = 0.0
        sign_bad = 0
        for p in (1.2, 1.5, 2, 3, 4, 8):
            x, y = rng.uniform(0, 2, 2000), rng.uniform(0, 2, 2000)
            g, v = burkholder.G(p, x, y), burkholder.V(p, x, y)
            zone = x <= (pstar(p) - 1) * y
            worst = max(worst, float(np.max(g - v)), float(np.abs(g - v)[zone].max()))
            lam = rng.uniform(0.1, 10)
            hom = max(hom, float(np.max(np.abs(burkholder.G(p, lam * x, lam * y) - lam ** p * g)
                                        / (1 + np.abs(lam ** p * g)))))
            sign_bad += int(np.sum((g >= 0) != zone))
        ok = worst <= 1e-12 and hom <= 1e-12 and sign_bad == 0
        return _check("burkholder G <= V (= on zone), homogeneous, sign", max(worst, hom, sign_bad), 1e-12, ok)

    def transforms():
        worst = -np.inf
        for p in (1.2, 1.5, 2, 3, 4, 8):
            for i in range(10):
                pair = burkholder.random_pair(8, seed=(seed, i), kind="uniform" if i % 2 else "spine")
                r = burkholder.simulate_subordinate_pair(pair, p, check_start=False)[2]
                lam = burkholder.laminate_lower_bound(p, 2, pair).witnessed_c
                worst = max(worst, r - (pstar(p) - 1), lam - (pstar(p) - 1))
        return _check("burkholder +-1 transforms and laminates <= p*-1", worst, 1e-10, worst <= 1e-10)

    def bellman():
        res = burkholder.bellman_iterate(4, n=64, iters=30)
        worst = float(-res.gap().min())
        ok = worst <= 5e-3 and res.max_increase <= 0
        return _check("burkholder Bellman monotone and >= G - tol", worst, 5e-3, ok)

    def integrand_hom():
        worst = 0.0
        for variant in rankone.VARIANTS:
            spec = rankone.IntegrandSpec(3.5, 2.0, variant)
            A = rng.standard_normal((100, 3, 3))
            t = rng.uniform(-3, 3, 100)
            f1 = rankone.eval_integrand(spec, t[:, None, None] * A)
            f0 = np.abs(t) ** 3.5 * rankone.eval_integrand(spec, A)
            worst = max(worst, float(np.max(np.abs(f1 - f0) / (1 + np.abs(f0)))))
        return _check("rankone integrand p-homogeneous", worst, 1e-12, worst <= 1e-12)

    def envelope():
        res = rankone.planar_envelope(4, n=61, n_sweeps=60)
        conv = rankone.diagonal_convexity_defect(res)
        below = float(-res.gap().min()) / float(np.abs(res.G_p).max())
        ok = conv <= 1e-12 and below <= 1e-12
        return _check("rankone envelope midpoint-convex and >= G_p", max(conv, below), 1e-12, ok)

    def c_glue():
        p0 = rankone.p_zero()
        err = 0.0
        for q in (p0 + 1e-9, 2 - 1e-9):
            err = max(err, abs(rankone.c_of_p(q) - rankone.natural_bound(q)))
        return _check("rankone c(p) continuous at p0 and 2", err, 1e-6, err <= 1e-6)

    def full_bounds():
        worst = np.inf
        for p in np.linspace(1.01, 16, 300):
            lo, hi = rankone.full_gradient_bounds(p)
            worst = min(worst, hi - lo)
        return _check("rankone full-gradient lower <= upper", worst, 0, worst >= 0)

    def gamma_rec():
        worst = 0.0
        for p, k in ((2, 3), (3.5, 10), (8, 50)):
            sp = radial.GammaSpec(p, k)
            for s in range(9):
                a = radial.gamma_moment(sp, s + 1)
                b = sp.scale * (sp.shape + s) * radial.gamma_moment(sp, s)
                worst = max(worst, abs(a - b) / a)
            worst = max(worst, radial.gamma_identity_residual(sp))
        return _check("radial Gamma recurrence and p-identity", worst, 1e-12, worst <= 1e-12)

    def sandwich():
        worst = np.inf
        for p, k, lo, ex, hi in radial.sandwich_rows([(p, k) for p in (2, 3, 5, 8) for k in (1, 3, 10, 40)]):
            worst = min(worst, (ex - lo) / hi + 1e-12, (hi - ex) / hi + 1e-12)
        return _check("radial Jensen <= E|X-1|^p <= (p-1)^p", worst, 0, worst >= 0)

    def orlicz_checks():
        base = orlicz.g_lambda_p(1.0, 1.5)
        grid = orlicz.DEFAULT_GRID
        worst = 0.0
        for r in (0.5, 2.0):
            i0, s0 = orlicz.simonenko_indices(base, grid ** r)
            i1, s1 = orlicz.simonenko_indices(base.compose_power(r), grid)
            worst = max(worst, abs(i1 - r * i0), abs(s1 - r * s0))
        Kmax = max(orlicz.interpolation_K(p, q) for p in np.linspace(1.01, 20, 40)
                   for q in np.linspace(1.01, 20, 40) if p <= q)
        c = orlicz.orlicz_korn_constant(orlicz.power(3))
        red = abs(c.constant - np.sqrt(3) * orlicz.interpolation_K(3, 3) * 2)
        ok = worst <= 1e-9 and Kmax < 4 and red <= 1e-9
        return _check("orlicz index scaling, K < 4, power reduction", max(worst, red), 1e-9, ok)

    for name, fn in [("projections", projections), ("skew", skew_ratio), ("tracefree", tracefree),
                     ("sphere", sphere), ("directional", directional), ("korn", korn_identity),
                     ("riesz", riesz_square), ("p2", p2), ("lp", monotone_p), ("ascent", ascent),
                     ("witness", witness_bracket), ("divfree", divfree), ("lift", lift_monotone),
                     ("majorant", burk_majorant), ("transforms", transforms), ("bellman", bellman),
                     ("integrand", integrand_hom), ("envelope", envelope), ("c(p)", c_glue),
                     ("bounds", full_bounds), ("gamma", gamma_rec), ("sandwich", sandwich),
                     ("orlicz", orlicz_checks)]:
        run(name, fn)
    return checks


def cmd_verify(args):
    checks = verification_suite(args.seed, args.self_test_negate)
    lines = ["# " + h for h in header_lines(args)]
    for name, val, tol, ok in checks:
        lines.append("%s  %s  measured=%.6e  tol=%.1e" % ("PASS" if ok else "FAIL", name, val, tol))
    n_fail = sum(1 for c in checks if not c[3])
    lines.append("%d checks, %d failed" % (len(checks), n_fail))
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_FAIL if n_fail else EXIT_OK


COMMANDS = {
    "bounds": (cmd_bounds, "table of Riesz, Korn and full-gradient bounds"),
    "verify": (cmd_verify, "run the invariant suite"),
    "figures": (cmd_figures, "write figure data CSVs into --out DIR"),
    "witness": (cmd_witness, "closed-form witness ratios f_k(p)"),
    "spectral-check": (cmd_spectral_check, "Korn identity and ratios on random fields"),
    "bellman": (cmd_bellman, "Bellman value iteration table"),
    "envelope": (cmd_envelope, "planar rank-one envelope table"),
    "radial": (cmd_radial, "Gamma sandwich rows"),
    "orlicz": (cmd_orlicz, "Simonenko indices and Korn-Orlicz constant"),
    "tensor-constants": (cmd_tensor_constants, "tensor eigenvalue constants"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float)
    common.add_argument("--p-grid", help="a:b:n or comma list")
    common.add_argument("--d", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--k", help="comma list of k")
    common.add_argument("--depth", type=int, default=8)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    parser = argparse.ArgumentParser(prog="kornlab", description="L^p Korn constants toolkit")
    parser.add_argument("--version", action="version", version="kornlab " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, hlp) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.set_defaults(func=fn)
        if name == "verify":
            sp.add_argument("--self-test-negate", action="store_true")
        if name in ("bellman", "envelope"):
            sp.add_argument("--sweeps", type=int, default=100)
        if name == "spectral-check":
            sp.add_argument("--trials", type=int, default=5)
        if name == "orlicz":
            sp.add_argument("--family", choices=("power", "G", "tlog", "table"), default="G")
            sp.add_argument("--lam", type=float, default=1.0)
            sp.add_argument("--table")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write("kornlab: %s\n" % e)
        return EXIT_USAGE
    except (ValueError, ZeroDivisionError) as e:
        sys.stderr.write("kornlab: invalid input: %s\n" % e)
        return EXIT_USAGE
    except RuntimeError as e:
        sys.stderr.write("kornlab: numerical failure: %s\n" % e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
