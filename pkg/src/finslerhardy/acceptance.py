"""The named verification battery behind ``suite`` and the acceptance tests.

Every acceptance criterion maps to one or more named check records; the
registry fixes the execution order and the record names, so reports are
byte-stable across runs and thread counts.  ``--quick`` keeps the record
names, shrinks grids/samples, and relaxes every tolerance by 5x.

Two groups of checks are expected to fail and are reported as honest
fails (see the README's known-failures section): the null-sequence *energy* decay slope for p != 2
(the (log k)^(1-p) law belongs to the gradient-mass bound X(v, w_k), whose
slope is asserted and passes), and the lower Bregman envelope stability for
the pure lp(4) family (zero infimum by degenerate ellipticity on the axes).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bregman, eigen, fields, green, hardy, norms
from .norms import GlobalParams
from .report import CheckRecord, record

A2 = [[4.0, 0.0], [0.0, 9.0]]
A3 = [[4.0, 0.0, 0.0], [0.0, 9.0, 0.0], [0.0, 0.0, 1.0]]

#: records that fail for documented mathematical reasons (see README)
EXPECTED_FAILURES = {
    "hardy.nullseq_energy_slope.p1.5":
        "Q_{-W}[u_k] decays like 1/log k for every p; -(p-1) is the X-bound rate",
    "hardy.nullseq_energy_slope.p3":
        "Q_{-W}[u_k] decays like 1/log k for every p; -(p-1) is the X-bound rate",
    "bregman.stability.lp4.p1.5.c_lower":
        "pure lp(4) lower Bregman envelope has zero infimum (axis degeneracy)",
    "bregman.stability.lp4.p2.c_lower":
        "pure lp(4) lower Bregman envelope has zero infimum (axis degeneracy)",
    "bregman.stability.lp4.p3.c_lower":
        "pure lp(4) lower Bregman envelope has zero infimum (axis degeneracy)",
}


@dataclass
class SuiteConfig:
    seed: int = 7
    quick: bool = False
    threads: int = 0

    def tol(self, t):
        return t * 5.0 if self.quick else t

    def count(self, m, floor=200):
        return max(floor, m // 10) if self.quick else m

    def bumps(self, m=100):
        return 20 if self.quick else m

    def kmax_exp(self):
        return 9 if self.quick else 12

    def cells(self, m):
        return max(512, m // 4) if self.quick else m

    def resolved_threads(self):
        if self.threads > 0:
            return self.threads
        env = os.environ.get("HARDY_THREADS")
        return max(1, int(env)) if env else 1


def _families_all_kinds(cfg):
    return [
        ("euclidean", norms.euclidean(2.5, 3), None),
        ("lp4", norms.lp(4, 3.0, 2), None),
        ("quad", norms.quadratic(A2, 2.0), None),
        ("mix", norms.mixed(4, A2, 1.5), None),
        ("weighted", norms.weighted(1.2, norms.lp(4, 3.0, 2)), "x"),
    ]


def _sample_x(fam, m, seed):
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    d = rng.standard_normal((m, fam.n))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return d * np.exp(rng.uniform(math.log(0.5), math.log(2.0), m))[:, None]


# ---------------------------------------------------------------------------
# criteria 1-3: norm calculus
# ---------------------------------------------------------------------------


def check_operator_identity(cfg):
    out = []
    m = cfg.count(10000)
    for label, fam, needs_x in _families_all_kinds(cfg):
        xi = norms.sample_vectors(fam.n, m, cfg.seed + 11, stream=3)
        x = _sample_x(fam, m, cfg.seed + 12) if needs_x else None
        a, hp = norms.operator_a(fam, x, xi)
        err = np.abs(np.einsum("ij,ij->i", a, xi) - hp) / (1.0 + hp)
        tol = cfg.tol(1e-12)
        out.append(record(f"norms.operator_identity.{label}",
                          float(err.max()) <= tol, float(err.max()), 0.0, tol))
    return out


def check_homogeneity_monotonicity(cfg):
    out = []
    m = cfg.count(10000)
    for label, fam, needs_x in _families_all_kinds(cfg):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed + 13)))
        xi = norms.sample_vectors(fam.n, m, cfg.seed + 14, stream=4)
        eta = norms.sample_vectors(fam.n, m, cfg.seed + 15, stream=5)
        lam = rng.uniform(-3.0, 3.0, m)
        lam[np.abs(lam) < 0.05] = 1.0
        x = _sample_x(fam, m, cfg.seed + 16) if needs_x else None
        a1, _ = norms.operator_a(fam, x, xi)
        a2, _ = norms.operator_a(fam, x, xi * lam[:, None])
        hom = np.linalg.norm(
            a2 - lam[:, None] * np.abs(lam[:, None]) ** (fam.p - 2.0) * a1, axis=1)
        hom = hom / (1.0 + np.linalg.norm(a1, axis=1))
        tol = cfg.tol(1e-10)
        out.append(record(f"norms.homogeneity.{label}",
                          float(hom.max()) <= tol, float(hom.max()), 0.0, tol))
        ae, _ = norms.operator_a(fam, x, eta)
        inner = np.einsum("ij,ij->i", a1 - ae, xi - eta)
        scale = (np.linalg.norm(a1, axis=1) + np.linalg.norm(ae, axis=1)) \
            * (np.linalg.norm(xi - eta, axis=1) + 1e-300)
        viol = int(np.sum(inner <= -1e-10 * scale))
        out.append(record(f"norms.monotonicity.{label}", viol == 0, viol, 0, 0))
    return out


def check_dual_calculus(cfg):
    out = []
    m = cfg.count(1000, floor=100)
    combos = [
        ("euclidean", norms.euclidean(2.0, 3), 1e-8, 1e-6),
        ("lp4", norms.lp(4, 3.0, 2), 1e-8, 1e-6),
        ("quad", norms.quadratic(A2, 2.0), 1e-8, 1e-6),
        ("mix", norms.mixed(4, A2, 3.0), 1e-4, 1e-4),
    ]
    for label, fam, tol_grad, tol_bid in combos:
        y = norms.sample_vectors(fam.n, m, cfg.seed + 21, stream=6)
        if fam.has_closed_dual:
            g = norms.grad_dual(fam, y)
        else:
            _, g = norms.dual_newton(fam, y)
        hval = norms.norm_eval(fam, None, g)
        err = float(np.abs(hval - 1.0).max())
        tol = cfg.tol(tol_grad)
        out.append(record(f"norms.dual_identity.{label}", err <= tol, err, 1.0, tol))
        xi = norms.sample_vectors(fam.n, m, cfg.seed + 22, stream=7)
        bid = norms.bidual_norm(fam, xi, seed=cfg.seed + 23,
                                n_dirs=512 if cfg.quick else 2048)
        H = norms.norm_eval(fam, None, xi)
        berr = float(np.abs(bid / H - 1.0).max())
        tolb = cfg.tol(tol_bid)
        out.append(record(f"norms.biduality.{label}", berr <= tolb, berr, 1.0, tolb))
    return out


# ---------------------------------------------------------------------------
# criterion 4: Bregman bounds
# ---------------------------------------------------------------------------


def check_bregman(cfg):
    out = []
    m = cfg.count(100000, floor=20000)
    est = bregman.verify_bounds(norms.euclidean(2.0, 3), m, seed=cfg.seed + 31)
    tol = cfg.tol(1e-10)
    ok = abs(est.c_lower - 1.0) <= tol and abs(est.c_upper - 1.0) <= tol
    out.append(record("bregman.exact_p2_euclidean", ok,
                      max(abs(est.c_lower - 1.0), abs(est.c_upper - 1.0)), 0.0, tol))
    fams = [("lp4", lambda p: norms.lp(4, p, 2)),
            ("quad", lambda p: norms.quadratic(A2, p)),
            ("mix", lambda p: norms.mixed(4, A2, p))]
    for label, make in fams:
        for p in (1.5, 2.0, 3.0, 4.0):
            fam = make(p)
            e1 = bregman.verify_bounds(fam, m, seed=cfg.seed + 32)
            e2 = bregman.verify_bounds(fam, m, seed=cfg.seed + 1234567)
            plabel = f"{label}.p{p:g}"
            finite = (e1.c_lower > 0.0 and np.isfinite(e1.c_upper)
                      and e2.c_lower > 0.0 and np.isfinite(e2.c_upper))
            out.append(record(f"bregman.envelopes.{plabel}", finite,
                              {"c_lower": e1.c_lower, "c_upper": e1.c_upper},
                              "positive finite", None,
                              witness={"lower": e1.witness_lower,
                                       "upper": e1.witness_upper}))
            dev_u = abs(e1.c_upper / e2.c_upper - 1.0)
            out.append(record(f"bregman.stability.{plabel}.c_upper",
                              dev_u <= cfg.tol(0.10), dev_u, 0.0, cfg.tol(0.10)))
            dev_l = abs(e1.c_lower / e2.c_lower - 1.0)
            out.append(record(f"bregman.stability.{plabel}.c_lower",
                              dev_l <= cfg.tol(0.10), dev_l, 0.0, cfg.tol(0.10)))
    return out


# ---------------------------------------------------------------------------
# criterion 5: classical reduction
# ---------------------------------------------------------------------------


def check_classical_reduction(cfg):
    out = []
    for (p, n) in [(1.5, 2), (2.0, 3), (3.0, 2), (5.0, 3)]:
        fam = norms.euclidean(p, n)
        gp = GlobalParams(p, n)
        G = fields.make_dual_power_field(fam, gp)
        hw = hardy.build_weight_zero_potential(fam, gp, G, bracket=(1e-6, 1e6))
        x = norms.sample_vectors(n, cfg.count(500, floor=100), cfg.seed + 41,
                                 decades=2, stream=8)
        W = hw.weight(x)
        Wref = abs((p - n) / p) ** p * np.linalg.norm(x, axis=1) ** (-p)
        err = float(np.abs(W / Wref - 1.0).max())
        tol = cfg.tol(1e-10)
        out.append(record(f"hardy.classical_reduction.p{p:g}_n{n}",
                          err <= tol, err, 0.0, tol))
    return out


# ---------------------------------------------------------------------------
# criterion 6: p-harmonicity
# ---------------------------------------------------------------------------


def _family_grid(p, n):
    A = A2 if n == 2 else A3
    return [("euclidean", norms.euclidean(p, n)),
            ("lp4", norms.lp(4, p, n)),
            ("quad", norms.quadratic(A, p)),
            ("mix", norms.mixed(4, A, p))]


def check_harmonicity(cfg):
    out = []
    tol = cfg.tol(1e-5)
    for (p, n) in [(3.0, 2), (1.5, 3)]:
        dom = fields.annulus(0.1, 10.0, n)
        for label, fam in _family_grid(p, n):
            G = fields.make_dual_power_field(fam, GlobalParams(p, n))
            n_ang = 12 if cfg.quick else (16 if label == "mix" and n == 3 else 24)
            r = fields.weak_residual(fam, G, dom, n_tests=cfg.bumps(),
                                     seed=cfg.seed + 51, n_ang=n_ang)
            out.append(record(f"fields.harmonicity.{label}.p{p:g}_n{n}",
                              r <= tol, r, 0.0, tol))
    fam = norms.euclidean(2.0, 3)
    bad = fields.FuncField(lambda x: np.linalg.norm(x, axis=-1),
                           grad=lambda x: x / np.linalg.norm(x, axis=-1, keepdims=True))
    rneg = fields.weak_residual(fam, bad, fields.annulus(0.1, 10.0, 3),
                                n_tests=10, seed=cfg.seed + 52)
    out.append(record("fields.negative_control", rneg > 1e-2, rneg, "> 0.01", 1e-2))
    fam_log = norms.lp(4, 2.0, 2)
    Glog = fields.make_log_dual_field(fam_log, GlobalParams(2.0, 2), R=50.0)
    rlog = fields.weak_residual(fam_log, Glog, fields.annulus(0.1, 10.0, 2),
                                n_tests=cfg.bumps(50), seed=cfg.seed + 53)
    out.append(record("fields.log_dual_gate", rlog <= tol, rlog, 0.0, tol))
    return out


# ---------------------------------------------------------------------------
# criterion 7: coarea flux constancy
# ---------------------------------------------------------------------------


def check_flux(cfg):
    out = []
    fam = norms.euclidean(2.0, 3)
    G = fields.make_dual_power_field(fam, GlobalParams(2.0, 3))
    dom = fields.annulus(1e-4, 1e4, 3)
    fx = fields.level_set_flux(fam, G, dom, 1.0)
    tol = cfg.tol(0.01)
    out.append(record("fields.flux_newtonian", abs(fx / (4 * math.pi) - 1.0) <= tol,
                      fx, 4 * math.pi, tol))
    for label, fam2, (p, n) in [("lp4", norms.lp(4, 3.0, 2), (3.0, 2)),
                                ("mix", norms.mixed(4, A2, 1.5), (1.5, 2))]:
        G2 = fields.make_dual_power_field(fam2, GlobalParams(p, n))
        dom2 = fields.annulus(1e-5, 1e5, n)
        levels = np.geomspace(0.3, 30.0, 10)
        _, cv = fields.flux_constancy(fam2, G2, dom2, levels)
        out.append(record(f"fields.flux_constancy.{label}", cv <= tol, cv, 0.0, tol))
    return out


# ---------------------------------------------------------------------------
# criterion 8: ground-state residual
# ---------------------------------------------------------------------------


def _ground_state_residual(fam, p, n, cfg, layout="shell", n_rho=16, n_tests=None,
                           seed_shift=61):
    gp = GlobalParams(p, n)
    G = fields.make_dual_power_field(fam, gp)
    hw = hardy.build_weight_zero_potential(fam, gp, G, bracket=(1e-8, 1e8))
    dom = fields.annulus(0.1, 10.0, n)

    def negW(x):
        return -hw.weight(x)

    return fields.weak_residual(fam, hw.ground_state, dom, V=negW,
                                n_tests=n_tests or cfg.bumps(40),
                                seed=cfg.seed + seed_shift,
                                layout=layout, n_rho=n_rho,
                                n_ang=2 * n_rho if layout == "ball" else 24)


def check_ground_state(cfg):
    out = []
    tol = cfg.tol(1e-5)
    r_euc = _ground_state_residual(norms.euclidean(2.0, 3), 2.0, 3, cfg)
    out.append(record("hardy.ground_state_residual.euclidean", r_euc <= tol,
                      r_euc, 0.0, tol))
    fam = norms.lp(4, 3.0, 2)
    r_coarse = _ground_state_residual(fam, 3.0, 2, cfg, layout="ball", n_rho=12,
                                      n_tests=cfg.bumps(30))
    r_fine = _ground_state_residual(fam, 3.0, 2, cfg, layout="ball", n_rho=24,
                                    n_tests=cfg.bumps(30))
    out.append(record("hardy.ground_state_residual.lp4", r_coarse <= tol,
                      r_coarse, 0.0, tol))
    out.append(record("hardy.ground_state_residual.halving",
                      r_fine <= 0.5 * r_coarse,
                      {"coarse": r_coarse, "fine": r_fine}, "fine <= coarse/2", 0.5))
    return out


# ---------------------------------------------------------------------------
# criteria 9-11: null sequences
# ---------------------------------------------------------------------------


def _standard_weight(p, n, fam=None):
    fam = fam or norms.euclidean(p, n)
    gp = GlobalParams(p, n)
    G = fields.make_dual_power_field(fam, gp)
    return hardy.build_weight_zero_potential(fam, gp, G, bracket=(1e-30, 1e30))


def check_nullseq_decay(cfg):
    out = []
    kexp = cfg.kmax_exp()
    ks = [2 ** j for j in range(4, kexp + 1)]
    for (p, n) in [(1.5, 2), (2.0, 3), (3.0, 2)]:
        hw = _standard_weight(p, n)
        ns = hardy.null_sequence(hw, ks)
        cf = hw.flux_constant()
        x = np.log(np.log(np.array(ns.k_list, dtype=float)))
        slope_q = float(np.polyfit(x, np.log(ns.energies), 1)[0])
        tol = cfg.tol(0.15)
        out.append(record(f"hardy.nullseq_energy_slope.p{p:g}",
                          abs(slope_q - (-(p - 1.0))) <= tol, slope_q,
                          -(p - 1.0), tol))
        mono = all(e1 > e2 for e1, e2 in
                   zip(ns.energies[ns.k0:], ns.energies[ns.k0 + 1:]))
        out.append(record(f"hardy.nullseq_monotone.p{p:g}", mono,
                          {"k0_index": ns.k0}, "strictly decreasing", None))
        slope_x = float(np.polyfit(x, np.log(ns.x_grad), 1)[0])
        out.append(record(f"hardy.nullseq_bound_slope.p{p:g}",
                          abs(slope_x - (-(p - 1.0))) <= tol, slope_x,
                          -(p - 1.0), tol))
        laws = [hardy.transition_energy_law(p, cf, k) for k in ns.k_list]
        lerr = max(abs(e / l - 1.0) for e, l in zip(ns.energies, laws))
        out.append(record(f"hardy.nullseq_energy_law.p{p:g}",
                          lerr <= cfg.tol(1e-3), lerr, 0.0, cfg.tol(1e-3)))
        mslope = float(np.polyfit(np.log(ns.k_list), ns.masses, 1)[0])
        mlaw = hardy.weight_mass_slope_law(p, cf)
        out.append(record(f"hardy.nullseq_mass_slope.p{p:g}",
                          abs(mslope / mlaw - 1.0) <= cfg.tol(0.05),
                          mslope, mlaw, cfg.tol(0.05)))
    return out


def check_null_criticality(cfg):
    out = []
    tol = cfg.tol(0.05)
    for label, hw, expect in [
        ("euclidean_p2_n3", _standard_weight(2.0, 3), math.pi),
        ("lp4_p3_n2", _standard_weight(3.0, 2, norms.lp(4, 3.0, 2)), None),
    ]:
        nc = hardy.verify_null_criticality(hw, [1e-1, 1e-2, 1e-3, 1e-4], T=1.0)
        ok = nc["rel_err"] <= tol
        out.append(record(f"hardy.null_criticality.{label}", ok,
                          nc["slope"], nc["expected_slope"], tol))
        if expect is not None:
            out.append(record(f"hardy.null_criticality.{label}.value",
                              abs(nc["slope"] / expect - 1.0) <= tol,
                              nc["slope"], expect, tol))
    hw = hardy.build_weight_zero_potential(
        norms.euclidean(3.0, 2), GlobalParams(3.0, 2),
        fields.synthetic_capped_profile(2.0, 10.0, a=2.0, b=0.0),
        sigma=2.0, bracket=(1e-2, 10.0 * (1.0 - 1e-10)))
    lb = hardy.capped_null_criticality_lower_bound(hw, [1e-3, 1e-4])
    out.append(record("hardy.null_criticality.capped_lower_bound",
                      all(r["ok"] for r in lb),
                      [r["lhs"] / r["rhs"] for r in lb], ">= 1", None))
    return out


def check_best_constant(cfg):
    out = []
    kexp = cfg.kmax_exp()
    ks = [2 ** j for j in range(4, kexp + 1)]
    tol_low = cfg.tol(1e-3)
    for (p, n) in [(2.0, 3), (3.0, 2)]:
        hw = _standard_weight(p, n)
        ns = hardy.null_sequence(hw, ks)
        above = all(r >= 1.0 - tol_low for r in ns.ratios)
        out.append(record(f"hardy.ratio_floor.p{p:g}", above,
                          min(ns.ratios), ">= 1 - 1e-3", tol_low))
        out.append(record(f"hardy.ratio_tail.p{p:g}",
                          ns.ratios[-1] <= 1.0 + cfg.tol(0.05),
                          ns.ratios[-1], "<= 1.05", cfg.tol(0.05)))
        drops = np.diff(ns.ratios)
        out.append(record(f"hardy.ratio_monotone.p{p:g}",
                          bool(np.all(drops <= 0.05)), float(drops.max()),
                          "non-increasing within 0.05", 0.05))
    hw = _standard_weight(2.0, 3)
    probe = hardy.optimality_at_infinity_probe(
        hw, [1e-1, 1e-2], k_list=tuple(2 ** j for j in range(2, kexp + 1, 2)))
    inf_ok = all(1.0 - tol_low <= v <= 1.0 + cfg.tol(0.05)
                 for v in probe["infima"].values())
    out.append(record("hardy.optimality_infima", inf_ok, probe["infima"],
                      "in [1 - 1e-3, 1.05]", None))
    lam_half = all(row["halfweight_energy"] > 0.0 for row in probe["table"])
    out.append(record("hardy.optimality_halflambda", lam_half,
                      "Q_{V-W/2} > 0 on all probes", "> 0", None))
    # monotonicity probe: within each tail level, the members capturing more
    # weight-mass have the smaller ratios (location alone cannot matter: the
    # standard weight is scale invariant and ratios depend on log-width only)
    sane = True
    detail = {}
    for e in sorted({row["eps"] for row in probe["table"]}):
        grp = sorted((row for row in probe["table"] if row["eps"] == e),
                     key=lambda r: r["mass"])
        ratios = [r["ratio"] for r in grp]
        mono = all(a >= b for a, b in zip(ratios, ratios[1:]))
        detail[e] = {"ratios_by_mass": ratios}
        sane = sane and mono
    out.append(record("hardy.optimality_mass_monotonicity", sane, detail,
                      "ratio decreases with captured weight-mass", None))
    est = bregman.verify_bounds(norms.euclidean(2.0, 3), cfg.count(20000),
                                seed=cfg.seed + 71)
    ns = hardy.null_sequence(hw, ks)
    rows = hardy.simplified_energy_bound_check(hw, ns, est.c_upper)
    out.append(record("hardy.simplified_energy_bound.p2",
                      all(r["ok"] for r in rows),
                      max(r["energy"] / r["bound"] for r in rows), "<= 1", None))
    hw3 = _standard_weight(3.0, 2)
    est3 = bregman.verify_bounds(norms.euclidean(3.0, 2), cfg.count(20000),
                                 seed=cfg.seed + 72)
    ns3 = hardy.null_sequence(hw3, ks)
    rows3 = hardy.simplified_energy_bound_check(hw3, ns3, est3.c_upper)
    out.append(record("hardy.simplified_energy_bound.p3",
                      all(r["ok"] for r in rows3),
                      max(r["energy"] / r["bound"] for r in rows3), "<= 1", None))
    xlaw_err = max(r["x_law_rel_err"] for r in rows)
    out.append(record("hardy.x_closed_form.p2", xlaw_err <= cfg.tol(0.02),
                      xlaw_err, 0.0, cfg.tol(0.02)))
    return out


# ---------------------------------------------------------------------------
# criteria 12-13: Green potentials
# ---------------------------------------------------------------------------


def check_green(cfg):
    out = []
    cells = cfg.cells(2048)
    tol_b = cfg.tol(0.02)
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    gp = green.solve_green(green.RadialProblem(p=2.0, n=3, phi=phi, R_out=100.0,
                                               n_cells=cells))
    out.append(record("green.residual.p2", gp.residual <= 1e-8, gp.residual,
                      0.0, 1e-8))
    beta, A, B = green.farfield_exponent(gp)
    out.append(record("green.farfield_exponent.p2n3",
                      abs(beta - (-1.0)) <= tol_b, beta, -1.0, tol_b))
    out.append(record("green.farfield_amplitude.p2n3",
                      abs(A / (1.0 / (4.0 * math.pi)) - 1.0) <= cfg.tol(0.01),
                      A, 1.0 / (4.0 * math.pi), cfg.tol(0.01)))
    fb = green.flux_bound_check(gp)
    out.append(record("green.flux_identity.p2n3",
                      fb["worst_identity_rel_err"] <= cfg.tol(0.01),
                      fb["worst_identity_rel_err"], 0.0, cfg.tol(0.01)))
    out.append(record("green.flux_bounds.p2n3", fb["upper_ok"] and fb["floor_ok"],
                      {"C0": fb["C0"], "M_phi": fb["M_phi"]}, "bounds hold", None))
    for p in (1.5, 2.5):
        gpp = green.solve_green(green.RadialProblem(
            p=p, n=3, phi=phi, R_out=100.0 if p > 2 else 50.0, n_cells=cells))
        bet, _, _ = green.farfield_exponent(gpp)
        expect = (p - 3.0) / (p - 1.0)
        out.append(record(f"green.farfield_exponent.p{p:g}n3",
                          abs(bet - expect) <= tol_b, bet, expect, tol_b))
        fbp = green.flux_bound_check(gpp)
        out.append(record(f"green.flux_identity.p{p:g}n3",
                          fbp["worst_identity_rel_err"] <= cfg.tol(0.01),
                          fbp["worst_identity_rel_err"], 0.0, cfg.tol(0.01)))
    return out


def check_green_weight(cfg):
    out = []
    cells = cfg.cells(4096)
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    V = green.bump_potential(0.5, 1.5, 0.05)
    prob = green.RadialProblem(p=2.0, n=3, phi=phi, V=V, R_out=200.0,
                               n_cells=cells)
    gp = green.solve_green(prob)
    fam = norms.euclidean(2.0, 3)
    hw = hardy.build_weight_green(fam, GlobalParams(2.0, 3), gp, V, prob.phi)
    hyp = hw.hypotheses
    out.append(record("hardy.green_hypotheses",
                      np.isfinite(hyp["abs_potential_integral"])
                      and (hyp["V_nonpositive"] or hyp["signed_potential_integral"] < 0),
                      hyp, "finite and signed", None))
    dom = fields.annulus(prob.phi.r_a / 5.0, prob.R_out / 8.0, 3)

    def VmW(x):
        return hw.potential(x) - hw.weight(x)

    res = fields.weak_residual(fam, hw.ground_state, dom, V=VmW,
                               n_tests=cfg.bumps(40), seed=cfg.seed + 81)
    tol = cfg.tol(1e-5)
    out.append(record("hardy.green_ground_state_residual", res <= tol,
                      res, 0.0, tol))
    gmin, _ = hw.source_range()
    T = float(gp.profile(np.asarray([prob.phi.r_a]))[0]) * 0.5
    taus = np.geomspace(gmin * 4.0, T / 4.0, 5)
    nc = hardy.verify_null_criticality(hw, taus, T=T)
    out.append(record("hardy.green_mass_slope", nc["rel_err"] <= cfg.tol(0.05),
                      nc["slope"], nc["expected_slope"], cfg.tol(0.05)))
    return out


# ---------------------------------------------------------------------------
# criterion 14: eigenvalues
# ---------------------------------------------------------------------------


def check_eigen(cfg):
    out = []
    N = cfg.cells(4096)
    restarts = 3 if cfg.quick else 32
    xt = 1e-5 if cfg.quick else 1e-9
    pr2 = eigen.principal_eigenvalue(eigen.EigenProblem(p=2.0, L=1.0, N=N,
                                                        seed=cfg.seed),
                                     restarts=restarts)
    out.append(record("eigen.p2_lambda1",
                      abs(pr2.lam / math.pi ** 2 - 1.0) <= cfg.tol(0.005),
                      pr2.lam, math.pi ** 2, cfg.tol(0.005)))
    out.append(record("eigen.p2_positive", pr2.sign_changes == 0,
                      pr2.sign_changes, 0, None))
    out.append(record("eigen.p2_agreement", pr2.restarts_agreeing == restarts,
                      pr2.restarts_agreeing, restarts, None))
    out.append(record("eigen.p2_rayleigh_consistency",
                      abs(pr2.rayleigh / pr2.lam - 1.0) <= 1e-9,
                      abs(pr2.rayleigh / pr2.lam - 1.0), 0.0, 1e-9))
    s2 = eigen.second_eigenvalue_and_gap(eigen.EigenProblem(
        p=2.0, L=1.0, N=max(512, N // 2), seed=cfg.seed), restarts=4, xtol=xt)
    out.append(record("eigen.p2_lambda2",
                      abs(s2["lambda2"] / (4 * math.pi ** 2) - 1.0) <= 0.005,
                      s2["lambda2"], 4 * math.pi ** 2, 0.005))
    out.append(record("eigen.p2_gap",
                      abs(s2["gap"] / (3 * math.pi ** 2) - 1.0) <= 0.005,
                      s2["gap"], 3 * math.pi ** 2, 0.005))
    pr3 = eigen.principal_eigenvalue(eigen.EigenProblem(p=3.0, L=1.0, N=N,
                                                        seed=cfg.seed),
                                     restarts=restarts)
    lam3 = 2.0 * eigen.p_sine_constant(3.0) ** 3
    out.append(record("eigen.p3_lambda1",
                      abs(pr3.lam / lam3 - 1.0) <= cfg.tol(1e-3),
                      pr3.lam, lam3, cfg.tol(1e-3)))
    s3 = eigen.second_eigenvalue_and_gap(eigen.EigenProblem(
        p=3.0, L=1.0, N=max(512, N // 2), seed=cfg.seed), restarts=4, xtol=xt)
    lam23 = 2.0 * (2.0 * eigen.p_sine_constant(3.0)) ** 3
    out.append(record("eigen.p3_lambda2",
                      abs(s3["lambda2"] / lam23 - 1.0) <= cfg.tol(1e-2),
                      s3["lambda2"], lam23, cfg.tol(1e-2)))
    # constant-shift identity
    pr0 = eigen.principal_eigenvalue(eigen.EigenProblem(p=2.0, L=1.0, N=1024,
                                                        seed=cfg.seed), restarts=4)
    prc = eigen.principal_eigenvalue(eigen.EigenProblem(
        p=2.0, L=1.0,
        V=lambda x: np.full_like(np.asarray(x, dtype=float), 2.5),
        N=1024, seed=cfg.seed), restarts=4)
    shift_err = abs(prc.lam - pr0.lam - 2.5)
    out.append(record("eigen.constant_shift", shift_err <= 1e-8, shift_err,
                      0.0, 1e-8))
    # isolation signature: random bounded potentials
    n_pots = 4 if cfg.quick else 20
    N_gap = (384, 768) if cfg.quick else (512, 1024)
    xt_gap = 3e-4 if cfg.quick else 1e-6
    stab_tol = cfg.tol(0.02)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed + 91)))
    bad = 0
    worst_stab = 0.0
    for _ in range(n_pots):
        c = rng.uniform(-3.0, 3.0, 4)

        def V(x, c=c):
            x = np.asarray(x, dtype=float)
            return sum(ci * np.cos((i + 1) * math.pi * x)
                       for i, ci in enumerate(c))

        g1 = eigen.second_eigenvalue_and_gap(
            eigen.EigenProblem(p=2.0, L=1.0, V=V, N=N_gap[0], seed=cfg.seed),
            restarts=2, xtol=xt_gap)
        g2 = eigen.second_eigenvalue_and_gap(
            eigen.EigenProblem(p=2.0, L=1.0, V=V, N=N_gap[1], seed=cfg.seed),
            restarts=2, xtol=xt_gap)
        stab = abs(g1["gap"] / g2["gap"] - 1.0)
        worst_stab = max(worst_stab, stab)
        if not (g1["gap"] > 0.0 and stab <= stab_tol):
            bad += 1
    out.append(record("eigen.gap_random_battery", bad == 0,
                      {"violations": bad, "worst_stability": worst_stab},
                      "gap > 0, stable under mesh doubling", stab_tol))
    probe = eigen.eigenpair_convergence_probe(
        eigen.EigenProblem(p=2.0, L=1.0,
                           V=lambda x: 1.5 * np.sin(2 * math.pi * np.asarray(x)),
                           N=1024, seed=cfg.seed),
        k_list=(2, 4, 8) if cfg.quick else (2, 4, 8, 16, 32), restarts=4)
    shift_ok = all(r["shift_err"] <= 1e-8 for r in probe["shift"])
    out.append(record("eigen.convergence_shift", shift_ok,
                      max(r["shift_err"] for r in probe["shift"]), 0.0, 1e-8))
    dists = [r["dist"] for r in probe["relative"]]
    ks = [r["k"] for r in probe["relative"]]
    fit = float(np.polyfit(np.log(ks), np.log(dists), 1)[0])
    out.append(record("eigen.convergence_rate", -1.35 <= fit <= -0.65, fit,
                      -1.0, 0.35))
    norm_ok = all(abs(r["norm"] - 1.0) <= 1e-10
                  for r in probe["shift"] + probe["relative"])
    out.append(record("eigen.convergence_normalization", norm_ok,
                      "all normalized", 1.0, 1e-10))
    return out


# ---------------------------------------------------------------------------
# criterion 15: determinism (in-process probe; the full CLI-level check
# lives in the test suite, which also varies the thread count)
# ---------------------------------------------------------------------------


def check_determinism(cfg):
    from .report import build_report, mask_timestamp, render_json

    sub = SuiteConfig(seed=cfg.seed, quick=True, threads=1)
    texts = []
    for _ in range(2):
        recs = check_operator_identity(sub) + check_classical_reduction(sub)
        rep = build_report("determinism-probe", {"seed": sub.seed}, recs)
        texts.append(mask_timestamp(render_json(rep)))
    return [record("cli.determinism_probe", texts[0] == texts[1],
                    "byte-identical" if texts[0] == texts[1] else "mismatch",
                    "byte-identical", None)]


REGISTRY = [
    ("norms.operator_identity", check_operator_identity),
    ("norms.homogeneity_monotonicity", check_homogeneity_monotonicity),
    ("norms.dual_calculus", check_dual_calculus),
    ("bregman.bounds", check_bregman),
    ("hardy.classical_reduction", check_classical_reduction),
    ("fields.harmonicity", check_harmonicity),
    ("fields.flux", check_flux),
    ("hardy.ground_state", check_ground_state),
    ("hardy.nullseq", check_nullseq_decay),
    ("hardy.null_criticality", check_null_criticality),
    ("hardy.best_constant", check_best_constant),
    ("green.potentials", check_green),
    ("hardy.green_weight", check_green_weight),
    ("eigen.appendix", check_eigen),
    ("cli.determinism", check_determinism),
]

#: static record names per group (names are config independent); lets a
#: --only filter skip whole groups and pins the report schema
CATALOG = {
    "norms.operator_identity": [
        "norms.operator_identity.euclidean", "norms.operator_identity.lp4",
        "norms.operator_identity.quad", "norms.operator_identity.mix",
        "norms.operator_identity.weighted"],
    "norms.homogeneity_monotonicity": [
        "norms.homogeneity.euclidean", "norms.monotonicity.euclidean",
        "norms.homogeneity.lp4", "norms.monotonicity.lp4",
        "norms.homogeneity.quad", "norms.monotonicity.quad",
        "norms.homogeneity.mix", "norms.monotonicity.mix",
        "norms.homogeneity.weighted", "norms.monotonicity.weighted"],
    "norms.dual_calculus": [
        "norms.dual_identity.euclidean", "norms.biduality.euclidean",
        "norms.dual_identity.lp4", "norms.biduality.lp4",
        "norms.dual_identity.quad", "norms.biduality.quad",
        "norms.dual_identity.mix", "norms.biduality.mix"],
    "bregman.bounds": ["bregman.exact_p2_euclidean"] + [
        f"bregman.{kind}.{fam}.p{p:g}{suffix}"
        for fam in ("lp4", "quad", "mix") for p in (1.5, 2, 3, 4)
        for kind, suffix in (("envelopes", ""), ("stability", ".c_upper"),
                             ("stability", ".c_lower"))],
    "hardy.classical_reduction": [
        "hardy.classical_reduction.p1.5_n2", "hardy.classical_reduction.p2_n3",
        "hardy.classical_reduction.p3_n2", "hardy.classical_reduction.p5_n3"],
    "fields.harmonicity": [
        f"fields.harmonicity.{fam}.{pn}"
        for pn in ("p3_n2", "p1.5_n3")
        for fam in ("euclidean", "lp4", "quad", "mix")
    ] + ["fields.negative_control", "fields.log_dual_gate"],
    "fields.flux": ["fields.flux_newtonian", "fields.flux_constancy.lp4",
                    "fields.flux_constancy.mix"],
    "hardy.ground_state": [
        "hardy.ground_state_residual.euclidean",
        "hardy.ground_state_residual.lp4", "hardy.ground_state_residual.halving"],
    "hardy.nullseq": [
        f"hardy.nullseq_{kind}.p{p:g}" for p in (1.5, 2, 3)
        for kind in ("energy_slope", "monotone", "bound_slope", "energy_law",
                     "mass_slope")],
    "hardy.null_criticality": [
        "hardy.null_criticality.euclidean_p2_n3",
        "hardy.null_criticality.euclidean_p2_n3.value",
        "hardy.null_criticality.lp4_p3_n2",
        "hardy.null_criticality.capped_lower_bound"],
    "hardy.best_constant": [
        "hardy.ratio_floor.p2", "hardy.ratio_tail.p2", "hardy.ratio_monotone.p2",
        "hardy.ratio_floor.p3", "hardy.ratio_tail.p3", "hardy.ratio_monotone.p3",
        "hardy.optimality_infima", "hardy.optimality_halflambda",
        "hardy.optimality_mass_monotonicity",
        "hardy.simplified_energy_bound.p2", "hardy.simplified_energy_bound.p3",
        "hardy.x_closed_form.p2"],
    "green.potentials": [
        "green.residual.p2", "green.farfield_exponent.p2n3",
        "green.farfield_amplitude.p2n3", "green.flux_identity.p2n3",
        "green.flux_bounds.p2n3", "green.farfield_exponent.p1.5n3",
        "green.flux_identity.p1.5n3", "green.farfield_exponent.p2.5n3",
        "green.flux_identity.p2.5n3"],
    "hardy.green_weight": [
        "hardy.green_hypotheses", "hardy.green_ground_state_residual",
        "hardy.green_mass_slope"],
    "eigen.appendix": [
        "eigen.p2_lambda1", "eigen.p2_positive", "eigen.p2_agreement",
        "eigen.p2_rayleigh_consistency", "eigen.p2_lambda2", "eigen.p2_gap",
        "eigen.p3_lambda1", "eigen.p3_lambda2", "eigen.constant_shift",
        "eigen.gap_random_battery", "eigen.convergence_shift",
        "eigen.convergence_rate", "eigen.convergence_normalization"],
    "cli.determinism": ["cli.determinism_probe"],
}


def run_battery(cfg, only=None):
    """Run the registry (optionally filtered by a regex on record names).

    Groups none of whose cataloged record names match the filter are
    skipped entirely.  Independent groups may execute in parallel; assembly
    order is the fixed registry order, so reports are deterministic for a
    given config.
    """
    import re

    pattern = re.compile(only) if only else None
    groups = REGISTRY
    if pattern:
        groups = [(name, fn) for name, fn in REGISTRY
                  if any(pattern.search(rn) for rn in CATALOG[name])]
    workers = cfg.resolved_threads()

    def run_one(item):
        name, fn = item
        try:
            return fn(cfg)
        except Exception as exc:  # noqa: BLE001 - captured as a fail record
            return [CheckRecord(name=f"{name}.error", status="fail",
                                measured=f"{type(exc).__name__}: {exc}",
                                expected="no exception")]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, groups))
    else:
        results = [run_one(g) for g in groups]
    records = [r for group in results for r in group]
    if pattern:
        records = [r for r in records if pattern.search(r.name)]
    return records
