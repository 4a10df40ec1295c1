"""Verification suites run by the command line.

Each suite returns a list of Case records and optional tables.  A case
that raises is recorded with its error and never stops the suite.
"""
from __future__ import annotations

import math
import time

import numpy as np
from scipy.integrate import quad

from .deformation import (
    Creator,
    DeformedField,
    Field,
    Product,
    ConjugationMap,
    ParityMap,
    SecondQuantizedMap,
    TranslationMap,
    Warped,
    adjoint_deformed,
    apply_operator,
    covariance_transport,
    deformed_field_apply,
    rieffel_product,
    warp_oscillatory,
    warp_spectral,
)
from .fock import FockState, SmearedField, create, free_field_apply, symmetrize
from .geometry import ThetaMatrix, Wedge, metric, phase_form
from .locality import (
    commutator_residual,
    continuity_sequence,
    contour_identity_gap,
    field_bound,
    full_commutator_norm,
    s_matrix_phase,
    tempered_bound_check,
    two_particle_state,
)
from .ncspace import (
    WeylWord,
    coordinate_commutator,
    heisenberg_phase,
    isomorphism_check,
    moyal_lattice,
    moyal_star,
    twisted_convolution,
    twisted_product_equivalence,
    weyl_multiply,
)
from .report import Case
from .testfunctions import (
    OnShellFunction,
    TestFunction,
    bump_profile,
    geometric_grid,
    momentum_grid,
    rapidity_grid,
    sample_onshell,
    sharp_packet,
)
from .unitaries import (
    BoostStabilizer,
    Composition,
    Dilation,
    Generator,
    Identity,
    MomentumShift,
    conjugated_generator_matrices,
    max_commutator,
    realize,
)

# fixed wedge-local geometries: (f center, f half-widths, g center, g half-widths, lam, x + y)
LOCALITY_CASES = (
    ((0.0, 1.3), (0.35, 0.65), (0.0, -1.17), (0.3, 0.58), 0.25, (0.5, 0.1)),
    ((0.0, 1.0), (0.45, 0.5), (0.0, -0.9), (0.4, 0.45), 0.25, (0.5, 0.1)),
    ((0.1, 1.6), (0.4, 1.0), (-0.1, -1.5), (0.4, 0.9), 0.5, (1.0, 0.3)),
)


def run_case(suite, case_id, operation, inputs, fn, tolerance=None):
    """Evaluate fn() -> (measured, passed[, extra]) inside an error boundary."""
    case = Case(suite, case_id, operation, inputs, tolerance=tolerance)
    start = time.perf_counter()
    try:
        out = fn()
        case.measured, case.passed = out[0], bool(out[1])
        if len(out) > 2:
            case.extra = out[2]
    except Exception as exc:  # recorded, never propagated
        case.error = f"{type(exc).__name__}: {exc}"
        case.passed = False
    case.elapsed = time.perf_counter() - start
    return case


# ---------------------------------------------------------------- helpers


def interior_mask(grid, margin=0.25):
    """Nodes away from the grid edge (rapidity or magnitude index)."""
    if grid.mode == "rapidity":
        nt = grid.n_rapidity
        k = int(margin * nt)
        ok = np.zeros(nt, dtype=bool)
        ok[k : nt - k] = True
        return np.repeat(ok, grid.n_perp)
    if grid.mode == "geometric":
        kb = grid.params[2]
        k = int(margin * kb)
        mag = np.concatenate([np.arange(kb)[::-1], np.arange(kb)])
        return (mag >= k) & (mag < kb - k)
    k = int(margin * grid.n)
    ok = np.zeros(grid.n, dtype=bool)
    ok[k : grid.n - k] = True
    return ok


def random_onshell(grid, rng, sign=1, margin=0.25, scale=1.0):
    mask = interior_mask(grid, margin)
    v = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * mask
    h = OnShellFunction(grid, v, sign)
    return h * (scale / h.norm())


def random_state(grid, rng, n_max, sectors, margin=0.25):
    """Normalized random symmetric state supported on interior nodes."""
    mask = interior_mask(grid, margin).astype(float)
    secs = [np.zeros((grid.n,) * k, dtype=complex) for k in range(n_max + 1)]
    for n in sectors:
        shape = (grid.n,) * n
        t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        m = np.array(1.0)
        for _ in range(n):
            m = np.multiply.outer(m, mask)
        secs[n] = symmetrize(t * m)
    psi = FockState(grid, n_max, tuple(secs))
    return psi * (1.0 / psi.norm())


def random_smearing(grid, rng, margin=0.25):
    return SmearedField(random_onshell(grid, rng, 1, margin), random_onshell(grid, rng, -1, margin))


def catalog_setups(cfg, n_nodes=24):
    """(label, V, grid) for every cataloged variant on its natural grid."""
    rg = rapidity_grid(cfg.mass if cfg.mass > 0 else 1.0, cfg.grid.theta_max, n_nodes, 2)
    mg = momentum_grid(1.0, 6.0, n_nodes)
    gg = geometric_grid(0.05, 1.25, n_nodes // 2)
    s = rg.rapidity_step
    return [
        ("identity", Identity(), rg),
        ("boost", BoostStabilizer(2 * s), rg),
        ("momentum_shift", MomentumShift(2 * mg.momentum_step()), mg),
        ("dilation", Dilation(math.log(gg.geometric_ratio())), gg),
        ("composition", Composition([BoostStabilizer(s), BoostStabilizer(-3 * s)]), rg),
    ]


# ------------------------------------------------------------------ rieffel


def suite_rieffel(cfg, rng):
    """Generator commutativity, oscillatory oracle and Rieffel products."""
    cases = []
    th = cfg.theta_matrix() if cfg.dimension == 2 else ThetaMatrix.from_params(cfg.lam, 0.0, 2)
    for label, V, grid in catalog_setups(cfg, 8):
        def gen_case(V=V, grid=grid):
            worst = max_commutator(conjugated_generator_matrices(V, grid, min(cfg.n_max, 3)))
            return worst, worst <= cfg.tol("generator")

        cases.append(run_case("rieffel", f"generator-{label}", "max_commutator", {"V": V.to_dict(), "grid": grid.descriptor()}, gen_case, cfg.tol("generator")))

    n_osc = cfg.option("rieffel", "oscillatory_cases", 10)
    for k in range(n_osc):
        grid = rapidity_grid(1.0, 0.75, 6, 2)
        V = BoostStabilizer(grid.rapidity_step) if k == 0 else Identity()
        psi = random_state(grid, rng, 2, (0, 1, 2), margin=0.0)
        A = Field(random_smearing(grid, rng, margin=0.0))
        lam = float(rng.uniform(0.1, 0.6))

        def osc_case(A=A, psi=psi, V=V, lam=lam):
            t = ThetaMatrix.from_params(lam, 0.0, 2)
            ref = warp_spectral(A, t, Generator(V), psi)
            res = warp_oscillatory(A, t, Generator(V), psi)
            dev = (res.state - ref).norm()
            return dev, dev <= cfg.tol("oscillatory"), {"error_estimate": res.error}

        cases.append(run_case("rieffel", f"oscillatory-{k}", "warp_oscillatory", {"lam": lam, "V": V.to_dict()}, osc_case, cfg.tol("oscillatory")))

    grid = cfg.make_grid() if cfg.dimension == 2 else rapidity_grid(1.0, 4.0, 32, 2)
    omega = FockState.vacuum(grid, 2)
    for k in range(cfg.option("rieffel", "pairs", 20)):
        h1, h2 = random_onshell(grid, rng), random_onshell(grid, rng)
        V = BoostStabilizer(grid.rapidity_step * (k % 3)) if grid.mode == "rapidity" else Identity()

        def rf_case(h1=h1, h2=h2, V=V):
            gen = Generator(V)
            A, B = Creator(h1), Creator(h2)
            lhs = apply_operator(Product([Warped(A, th, gen), Warped(B, th, gen)]), omega)
            rhs = rieffel_product(A, B, th, gen, omega)
            dev = (lhs - rhs).norm()
            return dev, dev <= cfg.tol("rieffel")

        cases.append(run_case("rieffel", f"rieffel-{k}", "rieffel_product", {"pair": k, "V": V.to_dict()}, rf_case, cfg.tol("rieffel")))
    return cases, {}


# --------------------------------------------------------------- covariance


def covariance_maps(grid, rng):
    """Five unitary (sigma = +1) and five antiunitary (sigma = -1) symmetries."""
    s = grid.rapidity_step
    plus = [
        TranslationMap(rng.standard_normal(grid.d)),
        TranslationMap(rng.standard_normal(grid.d)),
        SecondQuantizedMap(BoostStabilizer(s)),
        SecondQuantizedMap(BoostStabilizer(-2 * s)),
        ParityMap(),
    ]
    minus = [ConjugationMap(False), ConjugationMap(True), ConjugationMap(False), ConjugationMap(True), ConjugationMap(False)]
    return plus, minus


def suite_covariance(cfg, rng):
    """Covariance of warped operators and the unitary transport of deformed fields."""
    cases = []
    n_nodes = cfg.option("covariance", "n_nodes", 16)
    grid = rapidity_grid(1.0, cfg.grid.theta_max, n_nodes, 2)
    th = ThetaMatrix.from_params(cfg.lam, 0.0, 2)
    rounds = cfg.option("covariance", "rounds", 2)
    for r in range(rounds):
        plus, minus = covariance_maps(grid, rng)
        for sigma, maps in (("+1", plus), ("-1", minus)):
            for j, W in enumerate(maps):
                psi = random_state(grid, rng, 2, (0, 1, 2))
                A = Field(random_smearing(grid, rng))

                def cov_case(W=W, A=A, psi=psi):
                    lhs, rhs = covariance_transport(W, A, th, Generator(), psi)
                    dev = (lhs - rhs).norm()
                    return dev, dev <= cfg.tol("covariance")

                cid = f"covariance-sigma{sigma}-{r}-{j}"
                cases.append(run_case("covariance", cid, "covariance_transport", {"map": type(W).__name__, "sigma": sigma}, cov_case, cfg.tol("covariance")))

    for label, V, g in catalog_setups(cfg, n_nodes):
        for k in range(cfg.option("covariance", "transport_samples", 20)):
            psi = random_state(g, rng, 2, (0, 1, 2), margin=0.0)
            desc = DeformedField(random_smearing(g, rng, margin=0.0), th, Generator(V))

            def tr_case(desc=desc, psi=psi):
                a = deformed_field_apply(desc, psi, "direct")
                b = deformed_field_apply(desc, psi, "transport")
                dev = (a - b).norm()
                return dev, dev <= cfg.tol("transport")

            cases.append(run_case("covariance", f"transport-{label}-{k}", "deformed_field_apply", {"V": V.to_dict()}, tr_case, cfg.tol("transport")))
    return cases, {}


# ------------------------------------------------------------------- bounds


def suite_bounds(cfg, rng):
    """Vacuum coincidence, hermiticity, the field norm bound and tempered-PFG checks."""
    cases = []
    grid = rapidity_grid(1.0, cfg.grid.theta_max, cfg.option("bounds", "n_nodes", 24), 2)
    th = ThetaMatrix.from_params(cfg.lam, 0.0, 2)
    gen = Generator(BoostStabilizer(grid.rapidity_step))
    n_max = 3
    omega = FockState.vacuum(grid, n_max)

    desc = DeformedField(random_smearing(grid, rng), th, gen)

    def vac_case():
        a = deformed_field_apply(desc, omega)
        b = free_field_apply(desc.smearing, omega)
        same = all(np.array_equal(x, y) for x, y in zip(a.sectors, b.sectors))
        return float((a - b).norm()), same

    cases.append(run_case("bounds", "vacuum", "deformed_field_apply", {}, vac_case, 0.0))

    pairs = [(random_state(grid, rng, n_max, (0, 1, 2)), random_state(grid, rng, n_max, (0, 1, 2))) for _ in range(5)]

    def herm_case():
        dev = adjoint_deformed(desc, pairs)["max_deviation"]
        return dev, dev <= cfg.tol("hermiticity")

    cases.append(run_case("bounds", "hermiticity", "adjoint_deformed", {"pairs": len(pairs)}, herm_case, cfg.tol("hermiticity")))

    n_samples = cfg.option("bounds", "samples", 50)

    def bound_case():
        worst = -math.inf
        for _ in range(n_samples):
            d = DeformedField(random_smearing(grid, rng), th.scaled(float(rng.uniform(0, 2))), gen)
            psi = random_state(grid, rng, n_max, (0, 1, 2))
            worst = max(worst, deformed_field_apply(d, psi).norm() - field_bound(d, psi))
        return worst, worst <= cfg.tol("bound_slack")

    cases.append(run_case("bounds", "field-bound", "field_bound", {"samples": n_samples}, bound_case, cfg.tol("bound_slack")))

    psi = random_state(grid, rng, n_max, (1, 2))
    xs = rng.standard_normal((20, 2)) * 3.0

    def temp_case():
        excess, bound = tempered_bound_check(desc, psi, xs)
        return excess, excess <= cfg.tol("bound_slack"), {"bound": bound}

    cases.append(run_case("bounds", "tempered-bound", "tempered_bound_check", {"translations": 20}, temp_case, cfg.tol("bound_slack")))

    one = random_state(grid, rng, n_max, (1,))

    def cont_case():
        # start well inside the regime where |p.x| < 1 on the support
        starts = 0.25 * xs / np.linalg.norm(xs, axis=1)[:, None]
        seqs = [continuity_sequence(desc, one, x) for x in starts]
        mono = all(np.all(np.diff(s) <= 1e-15 * max(s[0], 1.0)) for s in seqs)
        ratio = max(s[-1] / s[0] for s in seqs if s[0] > 0)
        return ratio, mono and ratio <= 1e-4, {"monotone": mono}

    cases.append(run_case("bounds", "continuity", "continuity_sequence", {"translations": 20}, cont_case, 1e-4))
    return cases, {}


# ----------------------------------------------------------------- locality


def locality_grid(cfg):
    return rapidity_grid(1.0, cfg.option("locality", "theta_max", cfg.grid.theta_max), cfg.option("locality", "n_nodes", cfg.grid.n_nodes), 2)


def locality_unitaries(grid):
    return [("identity", Identity()), ("boost", BoostStabilizer(2 * grid.rapidity_step)), ("momentum_shift", MomentumShift(0.3))]


def suite_locality(cfg, rng):
    """Mixed-contraction residuals with paired negative controls and the contour identity."""
    cases, rows = [], []
    grid = locality_grid(cfg)
    tol, ratio = cfg.tol("locality"), cfg.tol("locality_control_ratio")
    for k, (cf, hf, cg, hg, lam, z) in enumerate(LOCALITY_CASES):
        f = TestFunction(cf, hf)
        g = TestFunction(cg, hg)
        neg = TestFunction((-cg[0], -cg[1]), hg)
        th = ThetaMatrix.from_params(lam, 0.0, 2)
        for label, V in locality_unitaries(grid):
            row = {"case_id": f"{k}-{label}", "lambda": lam, "eta": 0.0, "V": V.to_dict()}

            def loc_case(f=f, g=g, neg=neg, V=V, th=th, z=z, row=row):
                r = commutator_residual(f, g, th, V, z, (0.0, 0.0), grid)
                c = commutator_residual(f, neg, th, V, z, (0.0, 0.0), grid, override=True)
                ok = r.relative <= tol and r.relative <= ratio * c.relative
                row.update(residual=r.relative, control_residual=c.relative, contour_gap=r.contour_gap, passed=ok)
                return r.relative, ok, {"control": c.relative, "contour_gap": r.contour_gap}

            cases.append(run_case("locality", f"residual-{k}-{label}", "commutator_residual", {"case": k, "V": V.to_dict(), "grid": grid.descriptor()}, loc_case, tol))
            rows.append(row)
        for name, fn in (("f", f), ("g", g)):
            def ac_case(fn=fn):
                gap = contour_identity_gap(fn, grid)
                return gap, gap <= cfg.tol("contour")

            cases.append(run_case("locality", f"contour-{k}-{name}", "contour_identity_gap", {"case": k}, ac_case, cfg.tol("contour")))

    def free_case():
        f = TestFunction(LOCALITY_CASES[0][0], LOCALITY_CASES[0][1])
        g = TestFunction(LOCALITY_CASES[0][2], LOCALITY_CASES[0][3])
        r = commutator_residual(f, g, ThetaMatrix.zero(2), Identity(), (0.0, 0.0), (0.0, 0.0), grid)
        return r.relative, r.relative <= tol

    cases.append(run_case("locality", "free-commutator", "commutator_residual", {"theta": 0}, free_case, tol))

    # the vacuum alone is blind to the deformation, so probe with a one-particle admixture
    fgrid = rapidity_grid(1.0, grid.params[0], cfg.option("locality", "fock_nodes", grid.n), 2)
    cf, hf, cg, hg, lam, _ = LOCALITY_CASES[1]
    f, g = TestFunction(cf, hf), TestFunction(cg, hg)
    neg = TestFunction((-cg[0], -cg[1]), hg)
    w = Wedge.reference(2)
    vac = FockState.vacuum(fgrid, 3)
    probes = {"one-particle": create(sample_onshell(TestFunction((0.0, 0.5), (0.3, 0.3)), fgrid, 1), vac) + vac}
    for pname, psi in probes.items():
        for label, gpair, override in (("positive", g, False), ("control", neg, True)):
            def full_case(gg=gpair, override=override, label=label, psi=psi):
                n, s = full_commutator_norm(f, gg, w, w.opposite(), Identity(), psi, lam, override=override)
                rel = n / s
                ok = rel <= tol if label == "positive" else rel >= 1e-2
                return rel, ok

            inputs = {"probe": pname, "grid": psi.grid.descriptor()}
            cases.append(run_case("locality", f"full-commutator-{pname}-{label}", "full_commutator_norm", inputs, full_case, tol if label == "positive" else 1e-2))
    cols = ("case_id", "lambda", "eta", "V", "residual", "control_residual", "contour_gap", "passed")
    return cases, {"locality": (cols, rows)}


# ------------------------------------------------------------------ scatter


def packet_pair(grid, rap_f, rap_g):
    i = int(np.argmin(np.abs(grid.rapidities - rap_f)))
    j = int(np.argmin(np.abs(grid.rapidities - rap_g)))
    return i, j, sharp_packet(grid, i * grid.n_perp), sharp_packet(grid, j * grid.n_perp)


def scatter_deviation(grid, lam, rap_f, rap_g):
    th = ThetaMatrix.from_params(lam, 0.0, 2)
    i, j, a, b = packet_pair(grid, rap_f, rap_g)
    s = s_matrix_phase(a, b, th)
    expected = np.exp(2j * phase_form(grid.nodes[i], grid.nodes[j], th))
    return s, expected, abs(s / abs(s) - expected)


def suite_scatter(cfg, rng):
    """S-matrix phases of sharp packets, the trivial limit, t-independence and the lambda sweep."""
    cases, rows = [], []
    grid = rapidity_grid(1.0, cfg.grid.theta_max, cfg.grid.n_nodes, 2)
    rap_f, rap_g = cfg.option("scatter", "rapidities", (0.3, -0.3))
    lam0 = cfg.option("scatter", "lam", 0.1)
    tol = cfg.tol("scatter_phase")

    def phase_case():
        s, ex, dev = scatter_deviation(grid, lam0, rap_f, rap_g)
        return dev, dev <= tol, {"phase": s, "expected": ex}

    cases.append(run_case("scatter", "phase", "s_matrix_phase", {"lam": lam0, "rapidities": [rap_f, rap_g]}, phase_case, tol))

    def conv_case():
        devs = [scatter_deviation(rapidity_grid(1.0, cfg.grid.theta_max, n, 2), lam0, rap_f, rap_g)[2] for n in (64, 128, 256)]
        return devs, devs[1] < devs[0] and devs[2] < devs[1]

    cases.append(run_case("scatter", "narrowing", "s_matrix_phase", {"n_nodes": [64, 128, 256]}, conv_case))

    def trivial_case():
        _, _, a, b = packet_pair(grid, rap_f, rap_g)
        s = s_matrix_phase(a, b, ThetaMatrix.zero(2))
        return abs(s - 1.0), abs(s - 1.0) <= cfg.tol("scatter_trivial")

    cases.append(run_case("scatter", "theta-zero", "s_matrix_phase", {}, trivial_case, cfg.tol("scatter_trivial")))

    def anti_case():
        th = ThetaMatrix.from_params(lam0, 0.0, 2)
        _, _, a, b = packet_pair(grid, rap_f, rap_g)
        w = Wedge.reference(2)
        s1 = s_matrix_phase(a, b, th)
        s2 = s_matrix_phase(b, a, th, w=w.opposite())
        dev = abs(s1 - np.conj(s2))
        return dev, dev <= 1e-10

    cases.append(run_case("scatter", "antisymmetry", "s_matrix_phase", {}, anti_case, 1e-10))

    def time_case():
        _, _, a, b = packet_pair(grid, rap_f, rap_g)
        w = Wedge.reference(2)
        states = [two_particle_state(a, b, w, w.opposite(), Identity(), "in", grid, lam0, t=t) for t in (-5.0, 0.0, 5.0)]
        dev = max((s - states[1]).norm() for s in states)
        return dev, dev <= cfg.tol("scatter_time")

    cases.append(run_case("scatter", "time-independence", "two_particle_state", {"t": [-5, 0, 5]}, time_case, cfg.tol("scatter_time")))

    for lam in cfg.option("scatter", "sweep", (0.0, 0.5, 1.0)):
        s, ex, dev = scatter_deviation(grid, lam, rap_f, rap_g)
        rows.append({"lambda": lam, "phase": s, "expected": ex, "modulus": abs(s), "deviation": dev})
    cols = ("lambda", "phase", "expected", "modulus", "deviation")
    return cases, {"scatter": (cols, rows)}


# ------------------------------------------------------------------- npoint


def suite_npoint(cfg, rng):
    """n-point coincidence, coordinate commutators and Weyl-word identities."""
    cases = []
    th = ThetaMatrix.from_params(cfg.lam, 0.0, 2)
    fs = cfg.test_functions() if len(cfg.test_functions()) >= 4 and cfg.dimension == 2 else [
        TestFunction(rng.uniform(-1, 1, 2), rng.uniform(0.4, 0.9, 2), rng.uniform(-0.3, 0.3, 2)) for _ in range(4)
    ]
    for label, V, grid in catalog_setups(cfg, cfg.option("npoint", "n_nodes", 24)):
        def iso_case(V=V, grid=grid):
            smear = [SmearedField(sample_onshell(f, grid, 1), sample_onshell(f, grid, -1)) for f in fs]
            r = isomorphism_check(smear, th, V, grid)
            scale = max(abs(x["rhs"]) for x in r["rows"])
            dev = r["max_deviation"] / max(scale, 1.0)
            return dev, dev <= cfg.tol("npoint"), {"rows": r["rows"]}

        cases.append(run_case("npoint", f"isomorphism-{label}", "isomorphism_check", {"V": V.to_dict()}, iso_case, cfg.tol("npoint")))

        def cc_case(V=V, grid=grid):
            cc = coordinate_commutator(V, th)
            if cc is None:
                return None, True, {"status": "unsupported-variant"}
            m = realize(V, grid)
            good = ~m.wrapped[m.dst]
            mom = Generator(V).momenta(grid)[good]
            p = grid.nodes[good]
            a = phase_form(mom[:, None, :], mom[None, :, :], th)
            b = phase_form(p[:, None, :], p[None, :, :], cc)
            dev = float(np.abs(a - b).max() / max(np.abs(a).max(), 1.0))
            return dev, dev <= 1e-12

        cases.append(run_case("npoint", f"commutator-{label}", "coordinate_commutator", {"V": V.to_dict()}, cc_case, 1e-12))

    def weyl_case():
        worst = 0.0
        for _ in range(100):
            p, q, r = rng.standard_normal((3, 2))
            a, b, c = WeylWord(p), WeylWord(q), WeylWord(r)
            left = weyl_multiply(weyl_multiply(a, b, th), c, th)
            right = weyl_multiply(a, weyl_multiply(b, c, th), th)
            worst = max(worst, abs(left.phase - right.phase), abs(weyl_multiply(a, b, th).phase - heisenberg_phase(p, q, th)))
        return worst, worst <= 1e-13

    cases.append(run_case("npoint", "weyl", "weyl_multiply", {"triples": 100}, weyl_case, 1e-13))
    return cases, {}


# -------------------------------------------------------------------- twist


def product_transform_oracle(f1, f2, k):
    """int f1 f2 exp(-i k.x) d^dx by adaptive quadrature per axis."""
    g = metric(f1.d)
    val = f1.amplitude * f2.amplitude
    for mu in range(f1.d):
        lo = max(f1.center[mu] - f1.half_widths[mu], f2.center[mu] - f2.half_widths[mu])
        hi = min(f1.center[mu] + f1.half_widths[mu], f2.center[mu] + f2.half_widths[mu])
        if hi <= lo:
            return 0j
        kap = g[mu] * (f1.k_mod[mu] + f2.k_mod[mu] - k[mu])

        def prof(x, mu=mu):
            return float(bump_profile((x - f1.center[mu]) / f1.half_widths[mu]) * bump_profile((x - f2.center[mu]) / f2.half_widths[mu]))

        re = quad(lambda x: prof(x) * math.cos(kap * x), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        im = quad(lambda x: prof(x) * math.sin(kap * x), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        val *= re + 1j * im
    return val


def suite_twist(cfg, rng):
    """Moyal plane-wave phases, the untwisted limit, lattice associativity and product equivalence."""
    cases = []
    th = ThetaMatrix.from_params(cfg.lam, 0.0, 2)
    # wide bumps: narrow momentum packets, and the twist shift theta k stays inside the overlap
    width = (4.0, 4.0)
    lat = moyal_lattice(TestFunction((0.0, 0.0), width), TestFunction((0.0, 0.0), width))
    p = lat.spacing * np.round(np.array([0.6, 0.9]) / lat.spacing)
    q = lat.spacing * np.round(np.array([-0.8, 0.4]) / lat.spacing)

    def moyal_case():
        f1 = TestFunction((0.0, 0.0), width, k_mod=p)
        f2 = TestFunction((0.0, 0.0), width, k_mod=q)
        v = moyal_star(f1, f2, th, [p + q], lattice=lat)[0]
        dev = abs(v / abs(v) - np.exp(-1j * phase_form(p, q, th)))
        return dev, dev <= cfg.tol("moyal")

    cases.append(run_case("twist", "moyal-plane-wave", "moyal_star", {"p": p, "q": q}, moyal_case, cfg.tol("moyal")))

    def plain_case():
        f1 = TestFunction((0.1, -0.2), (0.8, 1.0), k_mod=(0.5, 0.3))
        f2 = TestFunction((0.0, 0.1), (1.0, 0.9), k_mod=(-0.2, 0.4))
        ks = np.array([[0.3, 0.7], [1.0, -0.5], [-0.4, 0.2]])
        v = moyal_star(f1, f2, ThetaMatrix.zero(2), ks)
        ref = np.array([product_transform_oracle(f1, f2, k) for k in ks])
        dev = float(np.abs(v - ref).max() / np.abs(ref).max())
        return dev, dev <= 1e-10

    cases.append(run_case("twist", "moyal-untwisted", "moyal_star", {}, plain_case, 1e-10))

    def assoc_case():
        shape = (21, 21)
        arrs = []
        for _ in range(3):
            a = np.zeros(shape, dtype=complex)
            a[8:13, 8:13] = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            arrs.append(a)
        a, b, c = arrs
        left = twisted_convolution(twisted_convolution(a, b, th, 0.3), c, th, 0.3)
        right = twisted_convolution(a, twisted_convolution(b, c, th, 0.3), th, 0.3)
        dev = float(np.abs(left - right).max() / np.abs(left).max())
        return dev, dev <= cfg.tol("moyal")

    cases.append(run_case("twist", "moyal-associativity", "twisted_convolution", {}, assoc_case, cfg.tol("moyal")))

    grid = rapidity_grid(1.0, cfg.grid.theta_max, cfg.option("twist", "n_nodes", 32), 2)
    for k in range(3):
        f1 = TestFunction(rng.uniform(-1, 1, 2), rng.uniform(0.4, 0.9, 2), rng.uniform(-0.3, 0.3, 2))
        f2 = TestFunction(rng.uniform(-1, 1, 2), rng.uniform(0.4, 0.9, 2), rng.uniform(-0.3, 0.3, 2))

        def tf_case(f1=f1, f2=f2):
            r = twisted_product_equivalence(f1, f2, th, grid)
            worst = max(r["deviation"], r["swap_deviation"])
            return worst, worst <= cfg.tol("twist"), r

        cases.append(run_case("twist", f"product-equivalence-{k}", "twisted_product_equivalence", {"f1": f1.to_dict(), "f2": f2.to_dict()}, tf_case, cfg.tol("twist")))
    return cases, {}


SUITE_FUNCTIONS = {
    "locality": suite_locality,
    "scatter": suite_scatter,
    "npoint": suite_npoint,
    "rieffel": suite_rieffel,
    "twist": suite_twist,
    "covariance": suite_covariance,
    "bounds": suite_bounds,
}
