"""Command-line front end: verification campaigns, weight builds, reports.

Subcommands: verify-norms, verify-bregman, verify-harmonic, build-weight,
null-seq, verify-optimality, green, eigen, suite.  Reports are JSON (CSV on
request), written atomically; a fixed seed makes every report byte-stable
up to the timestamp field.  HARDY_THREADS (or --threads) caps the suite's
parallelism; per-check ordering is fixed by the registry, so results do not
depend on the thread count.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 usage or
configuration errors, 3 internal numeric failures.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import acceptance, bregman, eigen, fields, green, hardy, norms, report
from .errors import ConstructionError, SolverError
from .norms import GlobalParams
from .report import record


def _add_common(sp, family=True, grid=True):
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out", "-o", default=None, help="report path (default stdout)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    if family:
        sp.add_argument("--family", default="euclidean",
                        help="euclidean | lp:s=<f> | quad:[[..],..] | "
                             "mix:s=<f>;A=[[..],..] | weighted:delta=<f>;base=<spec>")
        sp.add_argument("--p", type=float, default=2.0)
        sp.add_argument("--n", type=int, default=3)
    if grid:
        sp.add_argument("--grid", default="256,32",
                        help="n_r,n_ang for quadrature grids")
        sp.add_argument("--rmin", type=float, default=0.1)
        sp.add_argument("--rmax", type=float, default=10.0)


def _parse_grid(s):
    parts = s.split(",")
    return int(float(parts[0])), int(float(parts[1])) if len(parts) > 1 else 32


def _field_from_spec(spec, fam, params):
    spec = spec.strip()
    if spec == "dualpow":
        return fields.make_dual_power_field(fam, params)
    if spec.startswith("logdual:R="):
        return fields.make_log_dual_field(fam, params, float(spec[len("logdual:R="):]))
    if spec.startswith("green:"):
        prob = green.load_problem(spec[len("green:"):])
        gp = green.solve_green(prob)
        return fields.RadialProfileField(gp.profile, gp.dprofile, fam=fam,
                                         metric="euclidean", kind="green_radial",
                                         bracket=(gp.r[0], gp.r[-1]))
    if spec.startswith("f0(") and spec.endswith(")"):
        inner = _field_from_spec(spec[3:-1], fam, params)
        return fields.power_of(inner, (params.p - 1.0) / params.p)
    raise ConstructionError(f"unrecognized field spec {spec!r}")


def _emit(args, command, config, checks, payload=None):
    rep = report.build_report(command, config, checks)
    if payload is not None:
        rep["payload"] = payload
    text = report.render_json(rep) if args.format == "json" else report.render_csv(rep)
    if args.out:
        report.write_atomic(text, args.out)
    else:
        sys.stdout.write(text)
    return 0 if rep["summary"]["fail"] == 0 else 1


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_verify_norms(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    m = args.samples
    checks = []
    xi = norms.sample_vectors(fam.n, m, args.seed, stream=3)
    x = None
    if not fam.x_independent:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(args.seed + 1)))
        x = rng.standard_normal((m, fam.n))
        x /= np.linalg.norm(x, axis=-1, keepdims=True)
    a, hp = norms.operator_a(fam, x, xi)
    err = float((np.abs(np.einsum("ij,ij->i", a, xi) - hp) / (1.0 + hp)).max())
    checks.append(record("operator_identity", err <= 1e-12, err, 0.0, 1e-12))
    lam = np.linspace(-2.0, 2.0, m)
    lam[np.abs(lam) < 0.05] = 1.0
    a2, _ = norms.operator_a(fam, x, xi * lam[:, None])
    hom = np.linalg.norm(
        a2 - lam[:, None] * np.abs(lam[:, None]) ** (fam.p - 2.0) * a, axis=1)
    hom = float((hom / (1.0 + np.linalg.norm(a, axis=1))).max())
    checks.append(record("homogeneity", hom <= 1e-10, hom, 0.0, 1e-10))
    eta = norms.sample_vectors(fam.n, m, args.seed, stream=5)
    ae, _ = norms.operator_a(fam, x, eta)
    inner = np.einsum("ij,ij->i", a - ae, xi - eta)
    scale = (np.linalg.norm(a, axis=1) + np.linalg.norm(ae, axis=1)) \
        * (np.linalg.norm(xi - eta, axis=1) + 1e-300)
    viol = int(np.sum(inner <= -1e-10 * scale))
    checks.append(record("monotonicity", viol == 0, viol, 0, 0))
    kappa, nu = norms.equivalence_report(fam, n_samples=min(m, 4096), seed=args.seed)
    checks.append(record("equivalence_constants", kappa > 0.0,
                         {"kappa": kappa, "nu": nu}, "kappa > 0", None))
    if fam.x_independent:
        tol = 1e-8 if fam.has_closed_dual else 1e-4
        y = norms.sample_vectors(fam.n, min(m, 1000), args.seed, stream=6)
        g = norms.grad_dual(fam, y) if fam.has_closed_dual \
            else norms.dual_newton(fam, y)[1]
        derr = float(np.abs(norms.norm_eval(fam, None, g) - 1.0).max())
        checks.append(record("dual_identity", derr <= tol, derr, 1.0, tol))
        bid = norms.bidual_norm(fam, y[:200], seed=args.seed + 2)
        berr = float(np.abs(bid / norms.norm_eval(fam, None, y[:200]) - 1.0).max())
        tolb = 1e-6 if fam.has_closed_dual else 1e-4
        checks.append(record("biduality", berr <= tolb, berr, 1.0, tolb))
    return _emit(args, "verify-norms",
                 {"family": args.family, "p": args.p, "n": args.n,
                  "samples": m, "seed": args.seed}, checks)


def cmd_verify_bregman(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    est = bregman.verify_bounds(fam, args.samples, args.seed,
                                radius_decades=args.decades)
    checks = [
        record("c_lower_positive", est.c_lower > 0.0, est.c_lower, "> 0", None),
        record("c_upper_finite", bool(np.isfinite(est.c_upper)), est.c_upper,
               "finite", None),
    ]
    return _emit(args, "verify-bregman", est.as_dict(), checks,
                 payload=est.as_dict())


def cmd_verify_harmonic(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    params = GlobalParams(args.p, args.n)
    field = _field_from_spec(args.field, fam, params)
    dom = fields.annulus(args.rmin, args.rmax, args.n)
    n_r, n_ang = _parse_grid(args.grid)
    res = fields.weak_residual(fam, field, dom, n_tests=args.tests,
                               seed=args.seed, n_rho=max(8, n_r // 16),
                               n_ang=n_ang)
    checks = [record("weak_residual", res <= args.tol, res, 0.0, args.tol)]
    return _emit(args, "verify-harmonic",
                 {"family": args.family, "p": args.p, "n": args.n,
                  "field": args.field, "tests": args.tests, "seed": args.seed},
                 checks)


def _build_hw(args, fam, params):
    field = _field_from_spec(args.field, fam, params)
    return hardy.build_weight_zero_potential(fam, params, field,
                                             sigma=args.sigma,
                                             bracket=(1e-30, 1e30)
                                             if args.sigma == 0.0 else None)


def cmd_build_weight(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    params = GlobalParams(args.p, args.n)
    hw = _build_hw(args, fam, params)
    checks = []
    x = norms.sample_vectors(args.n, 500, args.seed, decades=2, stream=8)
    W = hw.weight(x)
    checks.append(record("weight_nonnegative", bool(np.all(W >= 0.0)),
                         float(W.min()), ">= 0", None))
    if fam.kind == "euclidean" and hw.branch == "standard":
        Wref = abs((args.p - args.n) / args.p) ** args.p \
            * np.linalg.norm(x, axis=1) ** (-args.p)
        err = float(np.abs(W / Wref - 1.0).max())
        checks.append(record("classical_reduction", err <= 1e-10, err, 0.0, 1e-10))
    dom = fields.annulus(args.rmin, args.rmax, args.n)

    def negW(xx):
        return -hw.weight(xx)

    res = fields.weak_residual(fam, hw.ground_state, dom, V=negW,
                               n_tests=args.tests, seed=args.seed)
    checks.append(record("ground_state_residual", res <= 1e-5, res, 0.0, 1e-5))
    levels = np.geomspace(0.3, 30.0, 10)
    dom_flux = fields.annulus(1e-8, 1e8, args.n)
    try:
        _, flux_cv = fields.flux_constancy(fam, hw.source, dom_flux, levels)
    except Exception:
        flux_cv = None
    return _emit(args, "build-weight",
                 {"family": args.family, "p": args.p, "n": args.n,
                  "field": args.field, "sigma": args.sigma, "seed": args.seed},
                 checks,
                 payload={"branch": hw.branch, "p": args.p, "n": args.n,
                          "family": fam.label(), "c_p": hw.c_p,
                          "residual": res, "flux_cv": flux_cv,
                          "flux_constant": hw.flux_constant()})


def cmd_null_seq(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    params = GlobalParams(args.p, args.n)
    hw = _build_hw(args, fam, params)
    ks = [2 ** j for j in range(int(math.log2(args.kmin)),
                                int(math.log2(args.kmax)) + 1)]
    ns = hardy.null_sequence(hw, ks)
    rows = [(k, e, m_, r) for k, e, m_, r in
            zip(ns.k_list, ns.energies, ns.masses, ns.ratios)]
    if args.format == "csv" or (args.out and args.out.endswith(".csv")):
        text = report.rows_to_csv(["k", "energy", "mass", "ratio"], rows)
        if args.out:
            report.write_atomic(text, args.out)
        else:
            sys.stdout.write(text)
        return 0
    checks = [record("energies_decreasing",
                     all(a > b for a, b in zip(ns.energies[ns.k0:],
                                               ns.energies[ns.k0 + 1:])),
                     {"k0_index": ns.k0}, "decreasing", None)]
    x = np.log(np.log(np.array(ns.k_list, dtype=float)))
    levels = np.geomspace(0.3, 30.0, 10)
    dom_flux = fields.annulus(1e-8, 1e8, args.n)
    _, flux_cv = fields.flux_constancy(fam, hw.source, dom_flux, levels)
    payload = {
        "branch": hw.branch, "p": args.p, "n": args.n, "family": fam.label(),
        "slope_energy": float(np.polyfit(x, np.log(ns.energies), 1)[0]),
        "slope_mass": float(np.polyfit(np.log(ns.k_list), ns.masses, 1)[0]),
        "ratio_tail": ns.ratios[-1],
        "flux_cv": flux_cv,
        "rows": rows, "truncated": ns.truncated,
    }
    return _emit(args, "null-seq",
                 {"family": args.family, "p": args.p, "n": args.n,
                  "kmax": args.kmax, "seed": args.seed}, checks,
                 payload=payload)


def cmd_verify_optimality(args):
    fam = norms.parse_family(args.family, args.p, args.n)
    params = GlobalParams(args.p, args.n)
    hw = _build_hw(args, fam, params)
    eps_list = [float(e) for e in args.eps.split(",")]
    ks = tuple(2 ** j for j in range(2, int(math.log2(args.kmax)) + 1, 2))
    probe = hardy.optimality_at_infinity_probe(hw, eps_list, k_list=ks)
    ok = all(1.0 - 1e-3 <= v <= 1.05 for v in probe["infima"].values())
    checks = [record("infima_near_one", ok, probe["infima"],
                     "in [1 - 1e-3, 1.05]", None)]
    nc = hardy.verify_null_criticality(hw, [1e-1, 1e-2, 1e-3], T=1.0)
    checks.append(record("null_criticality_slope", nc["rel_err"] <= 0.05,
                         nc["slope"], nc["expected_slope"], 0.05))
    return _emit(args, "verify-optimality",
                 {"family": args.family, "p": args.p, "n": args.n,
                  "eps": args.eps, "kmax": args.kmax, "seed": args.seed},
                 checks, payload=probe["table"])


def cmd_green(args):
    prob = green.load_problem(args.problem)
    gp = green.solve_green(prob)
    if args.profile_out:
        du = gp.dprofile(gp.r)
        rows = list(zip(gp.r.tolist(), gp.u.tolist(), du.tolist()))
        report.write_atomic(report.rows_to_csv(["r", "u", "du"], rows),
                            args.profile_out)
    beta, A, B = green.farfield_exponent(gp)
    fb = green.flux_bound_check(gp)
    expect = (prob.p - prob.n) / (prob.p - 1.0) if prob.p < prob.n else None
    checks = [record("residual", gp.residual <= 1e-8, gp.residual, 0.0, 1e-8),
              record("flux_identity", fb["worst_identity_rel_err"] <= 0.01,
                     fb["worst_identity_rel_err"], 0.0, 0.01)]
    if expect is not None:
        checks.append(record("farfield_exponent", abs(beta - expect) <= 0.02,
                             beta, expect, 0.02))
    return _emit(args, "green", {"problem": args.problem, "seed": args.seed},
                 checks,
                 payload={"C0": fb["C0"], "M_phi": fb["M_phi"],
                          "beta": beta, "amplitude": A, "offset": B})


def cmd_eigen(args):
    V = None
    if args.potential and args.potential != "none":
        if args.potential.startswith("const:"):
            c = float(args.potential[len("const:"):])

            def V(x, c=c):
                return np.full_like(np.asarray(x, dtype=float), c)
        else:
            import json as _json

            with open(args.potential) as fh:
                coefs = _json.load(fh)["cosine_coefficients"]

            def V(x, coefs=coefs):
                x = np.asarray(x, dtype=float)
                return sum(c * np.cos((i + 1) * math.pi * x / args.L)
                           for i, c in enumerate(coefs))

    ep = eigen.EigenProblem(p=args.p, L=args.L, V=V, N=args.N, seed=args.seed,
                            geometry=args.geometry, n=args.n)
    pr = eigen.principal_eigenvalue(ep)
    s2 = eigen.second_eigenvalue_and_gap(ep)
    checks = [
        record("principal_residual", pr.residual <= 1e-7, pr.residual, 0.0, 1e-7),
        record("principal_positive", pr.sign_changes == 0, pr.sign_changes, 0, None),
        record("gap_positive", s2["gap"] > 0.0, s2["gap"], "> 0", None),
    ]
    return _emit(args, "eigen",
                 {"p": args.p, "L": args.L, "potential": args.potential,
                  "N": args.N, "seed": args.seed, "geometry": args.geometry,
                  "n": args.n},
                 checks,
                 payload={"lambda1": pr.lam, "lambda2": s2["lambda2"],
                          "gap": s2["gap"],
                          "residuals": {"principal": pr.residual,
                                        "nodal_mismatch": s2["mismatch"]},
                          "restarts_agreeing": pr.restarts_agreeing})


def cmd_suite(args):
    cfg = acceptance.SuiteConfig(seed=args.seed, quick=args.quick,
                                 threads=args.threads)
    checks = acceptance.run_battery(cfg, only=args.only)
    # the thread count is an execution detail, not part of the configuration:
    # reports must be byte-identical across thread counts
    return _emit(args, "suite",
                 {"seed": args.seed, "quick": args.quick, "only": args.only},
                 checks)


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(
        prog="finslerhardy",
        description="Optimal Hardy weights for anisotropic p-Dirichlet "
                    "energies: constructions and verification campaigns.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-norms", help="norm family calculus checks")
    _add_common(sp, grid=False)
    sp.add_argument("--samples", type=int, default=10000)
    sp.set_defaults(fn=cmd_verify_norms)

    sp = sub.add_parser("verify-bregman", help="Bregman envelope estimation")
    _add_common(sp, grid=False)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--decades", type=int, default=3)
    sp.set_defaults(fn=cmd_verify_bregman)

    sp = sub.add_parser("verify-harmonic", help="weak p-harmonicity residual")
    _add_common(sp)
    sp.add_argument("--field", default="dualpow",
                    help="dualpow | logdual:R=<f> | green:<file> | f0(<spec>)")
    sp.add_argument("--tests", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.set_defaults(fn=cmd_verify_harmonic)

    sp = sub.add_parser("build-weight", help="construct a Hardy weight")
    _add_common(sp)
    sp.add_argument("--field", default="dualpow")
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--tests", type=int, default=40)
    sp.set_defaults(fn=cmd_build_weight)

    sp = sub.add_parser("null-seq", help="null-sequence energies and masses")
    _add_common(sp)
    sp.add_argument("--field", default="dualpow")
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--kmin", type=int, default=16)
    sp.add_argument("--kmax", type=int, default=4096)
    sp.set_defaults(fn=cmd_null_seq)

    sp = sub.add_parser("verify-optimality", help="tail Hardy-ratio probe")
    _add_common(sp)
    sp.add_argument("--field", default="dualpow")
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--eps", default="1e-1,1e-2")
    sp.add_argument("--kmax", type=int, default=4096)
    sp.set_defaults(fn=cmd_verify_optimality)

    sp = sub.add_parser("green", help="radial Green potential solve")
    _add_common(sp, family=False, grid=False)
    sp.add_argument("--problem", required=True, help="problem JSON file")
    sp.add_argument("--profile-out", default=None, help="CSV profile output")
    sp.set_defaults(fn=cmd_green)

    sp = sub.add_parser("eigen", help="1D/radial p-Laplacian eigenvalues")
    _add_common(sp, family=False, grid=False)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--potential", default="none",
                    help="none | const:<c> | <json file with cosine_coefficients>")
    sp.add_argument("--N", "--grid", dest="N", type=int, default=1024)
    sp.add_argument("--geometry", choices=("interval", "ball"), default="interval")
    sp.add_argument("--n", type=int, default=3, help="ball dimension")
    sp.set_defaults(fn=cmd_eigen)

    sp = sub.add_parser("suite", help="full acceptance battery")
    _add_common(sp, family=False, grid=False)
    sp.add_argument("--quick", action="store_true",
                    help="reduced grids, tolerances x5, same record names")
    sp.add_argument("--only", default=None, help="regex filter on record names")
    sp.add_argument("--threads", type=int, default=0,
                    help="parallel checks (default HARDY_THREADS or 1)")
    sp.set_defaults(fn=cmd_suite)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConstructionError, ValueError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except (SolverError, ArithmeticError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
