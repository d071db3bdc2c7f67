"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import numpy as np
from scipy.optimize import brentq

from formres import evolve as ev
from formres.cohomology import betti_ds, betti_sds, table
from formres.desitter import indicial_table
from formres.form_ops import (AngularSector, FormSection4, RadialGrid, annihilation_residual, assemble_box,
                              assemble_d, assemble_delta, composed_laplacian, section_norm, slot_active)
from formres.geometry import SdsParams, mu, photon_sphere_radius
from formres.kds_maxwell import Grid2D, KdsParams, refinement_study, u_a1, verify_closed, verify_coclosed
from formres.mode_scan import ConnectionSettings, connection_determinant, mode_scan, scalar_sector
from formres.trapping import (escape_function_check, gap_condition, gap_lambda_threshold, lyapunov_fit,
                              nu_min)
from formres.zero_modes import basis_u_pm, h1_triviality_certificate, matching_system

from conftest import lambda_max, random_params

SEED = 20240611


def critical_point(p):
    h = p.horizons
    g = lambda r: (mu(p, complex(r, 1e-30)) / complex(r, 1e-30) ** 2).imag / 1e-30
    return brentq(g, h.r_minus, h.r_plus, xtol=1e-15, rtol=1e-15)


def test_criterion_1_geometry(criterion):
    rng = np.random.default_rng(SEED)
    worst_root = worst_rp = 0.0
    ordered = True
    for n in range(4, 9):
        for _ in range(100):
            p = random_params(rng, n, 0.01, 0.99)
            h = p.horizons
            ordered &= 0 < h.r_minus < h.r_p < h.r_plus
            worst_root = max(worst_root, abs(mu(p, h.r_minus)), abs(mu(p, h.r_plus)))
            worst_rp = max(worst_rp, abs(critical_point(p) - photon_sphere_radius(p)))
    ok = ordered and worst_root <= 1e-10 and worst_rp <= 1e-10
    criterion(1, "geometry", ok, f"500 sets, ordered={ordered}, max|mu(r_pm)|={worst_root:.1e}, "
                                 f"max|r_p - crit(mu~)|={worst_rp:.1e}")


def test_criterion_2_cohomology(criterion):
    sds, ds = table(betti_sds(4)), table(betti_ds(4))
    got = (sds["K"], sds["H_exact"], ds["K"], ds["H_exact"])
    want = ([1, 2, 2, 2, 1], [1, 0, 2, 0, 1], [1, 1, 0, 1, 1], [1, 0, 0, 0, 1])
    criterion(2, "cohomology tables", got == want, f"SdS K={got[0]} H={got[1]}; dS K={got[2]} H={got[3]}")


def test_criterion_3_indicial(criterion):
    rows = indicial_table(4).rows()
    want = [(0, "0,3", "-", "0,4"), (1, "1,2", "0,3", "1,3"), (2, "1,2", "1,2", "2,2"),
            (3, "0,3", "1,2", "1,3"), (4, "-", "0,3", "0,4")]
    general = True
    for n in range(4, 11):
        t = indicial_table(n)
        for k in range(n + 1):
            general &= t.tangential[k] == (None if k == n else tuple(sorted((k, n - 1 - k))))
            general &= t.normal[k] == (None if k == 0 else tuple(sorted((k - 1, n - k))))
            general &= t.ddelta[k] == tuple(sorted((k, n - k)))
    criterion(3, "indicial tables", rows == want and general,
              f"n=4 table exact={rows == want}, general formulas n=4..10={general}")


def _slope(sizes, res):
    return np.polyfit(np.log(1.0 / np.asarray(sizes, dtype=float)), np.log(res), 1)[0]


def test_criterion_4_zero_modes(criterion):
    rng = np.random.default_rng(SEED + 4)
    sizes = (64, 128, 256, 512)
    worst_null = 0.0
    worst_cond = np.inf
    worst_slope = np.inf
    min_det = np.inf
    for _ in range(50):
        p = random_params(rng, int(rng.integers(4, 7)))
        M = matching_system(p)
        _, s, vh = np.linalg.svd(M)
        worst_cond = min(worst_cond, s[-1] / s[0])
        # residual of the two null directions, relative to the largest singular value
        worst_null = max(worst_null, np.max(np.linalg.norm(M @ vh[2:].T, axis=0)) / s[0])
        b = basis_u_pm(p)
        for label in b.labels:
            res = []
            for N in sizes:
                g = RadialGrid.uniform(p, N)
                u = b.section(label, g)
                res.append(annihilation_residual(assemble_box(1, u.sector, p, g), u, p))
            worst_slope = min(worst_slope, _slope(sizes, res))
        min_det = min(min_det, h1_triviality_certificate(p).normalized_determinant)
    ok = worst_cond > 1e-8 and worst_null < 1e-14 and worst_slope >= 1.8 and min_det > 0
    criterion(4, "zero modes", ok, f"50 sets, min s2/s1={worst_cond:.2e}, null residual={worst_null:.1e}, "
                                   f"min box slope={worst_slope:.2f}, min H1 det={min_det:.3f}")


def test_criterion_5_trapping(criterion):
    fit_err = 0.0
    violations = 0
    for p in (SdsParams.from_lambda(4, 1.0, 0.01), SdsParams.from_lambda(5, 1.0, 0.05),
              SdsParams.from_lambda(6, 1.5, 0.3 * lambda_max(6, 1.5))):
        fit = lyapunov_fit(p)
        fit_err = max(fit_err, abs(fit.rate - nu_min(p)) / nu_min(p))
        violations += escape_function_check(p, 10_000, seed=SEED).violations
    rng = np.random.default_rng(SEED + 5)
    agree = always = True
    for _ in range(100):
        p = random_params(rng, int(rng.integers(4, 9)))
        v = gap_condition(p)
        agree &= v.holds == v.comparison
        if p.n >= 5:
            always &= v.holds
    lam_star = gap_lambda_threshold(4, 1.0)
    thr = abs(photon_sphere_radius(SdsParams.from_lambda(4, 1.0, lam_star)) ** 2 * lam_star - 1 / 12)
    ok = fit_err <= 1e-3 and violations == 0 and agree and always and thr <= 1e-12
    criterion(5, "trapping", ok, f"max fit rel err={fit_err:.1e}, escape violations={violations}/30000, "
                                 f"gap verdicts agree={agree}, n>=5 holds={always}, |r_p^2 lam* - 1/12|={thr:.1e}")


def test_criterion_6_kds(criterion):
    worst_res = 0.0
    worst_slope = np.inf
    for spin in (0.05, 0.1):
        p = KdsParams(1.0, 0.03, spin)
        for check in ("closed", "coclosed"):
            for which in ("u1", "u2"):
                st = refinement_study(p, check, which, order=4)
                worst_res = max(worst_res, st.residuals[-1])
                worst_slope = min(worst_slope, st.slope)
    # a = 0: the field itself is the Coulomb field and every residual sits at round-off
    p0 = KdsParams(1.0, 0.03, 0.0)
    g0 = Grid2D.build(p0, 256, 256, order=4)
    R, TH = np.meshgrid(g0.r, g0.theta, indexing="ij")
    F = u_a1(p0, R, TH)
    ref = np.zeros_like(F)
    ref[..., 0, 1], ref[..., 1, 0] = R**-2, -(R**-2)
    static = np.max(np.abs(F - ref))
    static_res = max(f(p0, g0, w).max_residual for f in (verify_closed, verify_coclosed) for w in ("u1", "u2"))
    p = KdsParams(1.0, 0.03, 0.1)
    g = Grid2D.build(p, 256, 256, order=4)
    control = min(verify_coclosed(p, g, "u1", perturb=0.01).max_residual,
                  verify_closed(p, g, "u2", perturb=0.01).max_residual)
    ok = worst_res <= 1e-6 and worst_slope >= 1.8 and static <= 1e-15 and static_res <= 1e-12 and control >= 1e-3
    criterion(6, "Kerr-de Sitter field", ok, f"a in {{0.05, 0.1}}: max residual at 256^2={worst_res:.1e}, "
                                             f"min slope={worst_slope:.2f}; a=0: |F - r^-2 dt^dr|={static:.1e}, "
                                             f"residual={static_res:.1e}; control={control:.1e}")


def test_criterion_7_evolution(criterion):
    p = SdsParams.from_lambda(4, 1.0, 0.01)
    h = p.horizons
    # scalar l = 0
    data = (lambda x: ev.bump(x, 0.0, 5.0), lambda x: 0.3 * ev.bump(x, 2.0, 4.0))
    ts = ev.evolve_scalar(p, data, 0, 250.0, N=4000)
    sfits = [ev.fit_decay(ts.t, ts.values["u"][i], (80.0, 250.0)) for i in range(len(ts.probe_radii))]
    c0 = [f.asymptotic_value for f in sfits]
    scalar_ok = all(f.accepted and f.rate > 0 for f in sfits) and np.ptp(c0) <= 1e-3
    # 1-form: stationary part plus a compact pulse
    w = h.r_plus - h.r_minus
    N = 400
    grid = ev.PenetratingGrid.build(p, N)
    prof = ev.u_pm_profiles(p, grid.r)
    A0 = 0.7 * prof["u_plus"][0] - 0.4 * prof["u_minus"][0] + ev.bump(grid.r, h.r_minus + 0.3 * w, 0.15 * w)
    B0 = 0.7 * prof["u_plus"][1] - 0.4 * prof["u_minus"][1] + 0.5 * ev.bump(grid.r, h.r_minus + 0.55 * w, 0.15 * w)
    one = ev.evolve_oneform(p, (A0, B0, 0 * A0, 0 * A0), 250.0, N=N)
    ofits = ev.oneform_decay(p, one, (80.0, 250.0))
    plus = [f.projection["u_plus"] for f in ofits]
    minus = [f.projection["u_minus"] for f in ofits]
    orth = ofits[0].projection_residual
    oneform_ok = (all(f.rate > 0 for f in ofits) and orth <= 1e-3
                  and max(np.ptp(plus), np.ptp(minus)) <= 1e-3)
    # stationary data: drift bounded by C h^2 t_max with C = 0.1
    t_max, C = 100.0, 0.1
    drift_ratio = 0.0
    for n_pts in (200, 400):
        g = ev.PenetratingGrid.build(p, n_pts)
        A, B = ev.u_pm_profiles(p, g.r)["u_plus"]
        run = ev.evolve_oneform(p, (A, B, 0 * A, 0 * A), t_max, N=n_pts, record_every=100)
        drift = max(np.max(np.abs(run.final["A"] - A)), np.max(np.abs(run.final["B"] - B)))
        drift_ratio = max(drift_ratio, drift / (g.h**2 * t_max))
    ok = scalar_ok and oneform_ok and drift_ratio <= C
    criterion(7, "evolution", ok, f"scalar c0 spread={np.ptp(c0):.1e} rate={sfits[1].rate:.4f}; "
                                  f"1-form coeffs=({np.mean(plus):.5f}, {np.mean(minus):.5f}) "
                                  f"spread={max(np.ptp(plus), np.ptp(minus)):.1e} orth residual={orth:.1e}; "
                                  f"max drift/(h^2 t)={drift_ratio:.1e}")


def test_criterion_8_mode_scan(criterion):
    p = SdsParams.from_lambda(4, 1.0, 0.01)
    sector = scalar_sector(4, 0)
    base = mode_scan(p, sector, (-2.0, 2.0), (0.02, 1.0), 0.02, ConnectionSettings(order=80))
    doubled = mode_scan(p, sector, (-2.0, 2.0), (0.02, 1.0), 0.02, ConnectionSettings(order=160))
    mag = np.abs(base.det)
    ratio = abs(connection_determinant(p, sector, 0.0)[0]) / np.median(mag)
    change = np.max(np.abs(doubled.det - base.det) / mag)
    ok = (base.winding == 0 and doubled.winding == 0 and not base.skipped and ratio < 1e-3 and change < 1e-6)
    criterion(8, "mode scan", ok, f"{mag.size} points, winding={base.winding} (doubled order {doubled.winding}), "
                                  f"|det(0)|/median={ratio:.1e}, max rel change under doubling={change:.1e}")


def _observed_rate(res, floor=1e-10):
    # use the finest pair of resolutions still above round-off
    res = np.asarray(res)
    if res[1] < floor:
        return np.inf
    if res[2] < floor:
        return np.log2(res[0] / res[1])
    return np.log2(res[1] / res[2])


def test_criterion_9_operator_algebra(criterion):
    rng = np.random.default_rng(SEED + 9)
    sizes = (100, 200, 400)
    worst = {2: np.inf, 4: np.inf}
    worst_zero = 0.0
    count = 0
    for n in (4, 5, 6):
        bg = SdsParams.from_lambda(n, 1.0, 0.3 * lambda_max(n))
        lo, hi = bg.domain
        sectors = (AngularSector.constant(n), AngularSector.harmonic(n, 1), AngularSector.harmonic(n, 3),
                   AngularSector.volume(n))
        combos = [(s, k) for s in sectors for k in range(n + 1) if any(slot_active(s, k))]
        for order in (2, 4):
            grids = [RadialGrid.uniform(bg, N, margin=0.05, order=order) for N in sizes]
            for sigma in (0.0, 0.3 + 0.4j):
                cache = {}
                for _ in range(50):
                    sec, k = combos[rng.integers(len(combos))]
                    coef = rng.uniform(-1, 1, (4, 4))
                    freq = rng.uniform(0.5, 3.0, 4) * np.pi / (hi - lo)
                    fs = [(lambda c, f: lambda r: c[0] * np.sin(f * (r - lo) + c[1])
                           + c[2] * np.exp(c[3] * (r - lo) / (hi - lo)))(coef[i], freq[i]) for i in range(4)]
                    defect, zero = [], []
                    for g in grids:
                        key = (sec, k, len(g))
                        if key not in cache:
                            ops = [assemble_box(k, sec, bg, g, sigma) - composed_laplacian(k, sec, bg, g, sigma)]
                            if k + 2 <= n and any(slot_active(sec, k + 1)) and any(slot_active(sec, k + 2)):
                                ops.append(assemble_d(k + 1, sec, bg, g, sigma).compose(assemble_d(k, sec, bg, g, sigma)))
                            if k >= 2 and any(slot_active(sec, k - 1)) and any(slot_active(sec, k - 2)):
                                ops.append(assemble_delta(k - 1, sec, bg, g, sigma).compose(
                                    assemble_delta(k, sec, bg, g, sigma)))
                            cache[key] = ops
                        u = FormSection4.from_functions(sec, k, g, *[f if on else None
                                                                   for f, on in zip(fs, slot_active(sec, k))])
                        scale = section_norm(u, bg)
                        ops = cache[key]
                        defect.append(section_norm(ops[0](u), bg) / scale)
                        zero += [section_norm(op(u), bg) / scale for op in ops[1:]]
                    worst[order] = min(worst[order], _observed_rate(defect))
                    worst_zero = max(worst_zero, max(zero, default=0.0))
                    count += 1
    ok = worst[2] >= 1.7 and worst[4] >= 3.7 and worst_zero <= 1e-12
    criterion(9, "operator algebra", ok, f"{count} sections (50 per n, sigma, order); min defect rate "
                                         f"order 2={worst[2]:.2f}, order 4={worst[4]:.2f}; "
                                         f"max |d^2|,|delta^2|={worst_zero:.1e}")
