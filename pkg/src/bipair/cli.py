"""Command line entry point: ``bipair <subcommand> [flags]``.

Every subcommand writes CSV (``#`` comment header echoing the parsed
configuration, floats in shortest round-trip form) to ``--out`` or stdout.
Exit codes: 0 ok, 2 bad configuration, 3 a numerical check failed,
4 steady-state search did not converge.
"""

import argparse
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from . import cg as _cg
from . import dynamics as dyn
from . import fock, specfun, states, stats

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_NONCONV = 0, 2, 3, 4


class CheckFailed(RuntimeError):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return str(v)


def _header(args):
    skip = {"func"}
    out = [f"# bipair {__version__} {args.command}"]
    for k in sorted(vars(args)):
        if k not in skip:
            out.append(f"# {k}={_fmt(getattr(args, k))}")
    return out


def write_output(path, lines):
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".bipair-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _row(*vals):
    return ",".join(_fmt(v) for v in vals)


def _zeta(args):
    if args.zeta_abs is not None:
        return complex(args.zeta_abs)
    return complex(args.zeta_re, args.zeta_im)


def _grid(args):
    if args.steps == 1:
        return np.array([args.zeta_min])
    return np.linspace(args.zeta_min, args.zeta_max, args.steps)


# --- subcommands -----------------------------------------------------------

def cmd_qscan(args):
    closed_case = args.q1 == args.q2 == args.n == 0
    lines = _header(args)
    lines.append("zeta_abs,q_numeric,q_closed_eq30,n1_mean_numeric,n1_mean_closed_eq28,cutoff_used")
    for z in _grid(args):
        psi = states.make_bipair_coupled(float(z), args.q1, args.q2, args.n, tail_tol=args.tail_tol,
                                         cg="formula")
        dist = stats.marginal(psi.state, "a")
        if abs(dist.total() - 1) > 1e-10:
            raise CheckFailed(f"distribution at |zeta|={z} sums to {dist.total()}")
        qn = stats.mandel_q(dist) if stats.moments(dist)[0] > 0 else math.nan
        mean = stats.moments(stats.marginal_n1(psi.state))[0]
        qc = stats.mandel_q_closed(z) if closed_case and z > 0 else math.nan
        mc = stats.mean_n1_closed(z) if closed_case else math.nan
        lines.append(_row(float(z), qn, qc, mean, mc, psi.kmax))
    return lines


def cmd_pk(args):
    zeta = _zeta(args)
    psi = states.make_bipair_coupled(zeta, args.q1, args.q2, args.n, tail_tol=args.tail_tol,
                                     cg="formula")
    dist = stats.joint_pk(psi)
    p = np.zeros(args.kmax + 1)
    m = min(len(dist), args.kmax + 1)
    p[:m] = dist.probabilities[:m]
    if abs(dist.total() - 1) > 1e-10:
        raise CheckFailed(f"P_k sums to {dist.total()}")
    mean = stats.moments(dist)[0]
    ref = stats.poisson_reference(mean, args.kmax).probabilities
    lines = _header(args)
    lines.append(f"# mean_k={_fmt(mean)}")
    if mean > 0:
        lines.append(f"# fano={_fmt(stats.fano(dist))}")
    lines.append("k,p_k,poisson_ref")
    for k in range(args.kmax + 1):
        lines.append(_row(k, p[k], ref[k]))
    return lines


def cmd_cg(args):
    formula = _cg.cg_block(args.q1, args.q2, args.n, args.kmax)
    oracle = _cg.lowest_weight_oracle(args.q1, args.q2, args.n, args.kmax)
    rep = _cg.validate_block(formula, oracle)
    lines = _header(args)
    lines.append(f"# sign={rep.sign} max_abs_diff={_fmt(rep.max_deviation)}")
    lines.append("q1,q2,n,k,n1,n2,coefficient_formula,coefficient_oracle,abs_diff")
    for k in range(args.kmax + 1):
        for n1 in range(args.n + k + 1):
            a = rep.sign * formula.table[k, n1]
            b = oracle.table[k, n1]
            lines.append(_row(args.q1, args.q2, args.n, k, n1, args.n + k - n1, float(a), float(b),
                              float(abs(a - b))))
    if not rep.passed:
        write_output(args.out, lines)
        raise CheckFailed(f"formula and oracle differ by {rep.max_deviation:.3e}")
    return lines


def _samples(rng, count, radius=1.0):
    r = radius * np.sqrt(rng.uniform(0, 1, (count, 2)))
    t = rng.uniform(0, 2 * np.pi, (count, 2))
    z = r * np.exp(1j * t)
    return [(complex(a), complex(b)) for a, b in z]


def cmd_overlap(args):
    zeta = _zeta(args)
    rng = np.random.default_rng(args.seed)
    pts = _samples(rng, args.samples)
    psi = states.make_bipair_coupled(zeta, args.q1, args.q2, args.n, tail_tol=args.tail_tol)
    lines = _header(args)
    rows, ratios = [], []
    for a, b in pts:
        lat = states.lattice_overlap(psi, a, b)
        f = states.overlap_f(a, b, zeta, args.q1, args.q2, args.n)
        ratios.append(lat / f)
        rows.append((a.real, a.imag, b.real, b.imag, lat.real, lat.imag, f.real, f.imag))
    ratios = np.array(ratios)
    spread = float(np.max(np.abs(ratios / ratios[0] - 1)))
    pde1 = states.pde_residual(zeta, args.q1, args.q2, args.n, pts, h=1e-3, equation="lowering")
    pde2 = states.pde_residual(zeta, args.q1, args.q2, args.n, pts, h=1e-3, equation="casimir")
    lines += [f"# ratio_spread={_fmt(spread)}", f"# pde_lowering={_fmt(pde1)}",
              f"# pde_casimir={_fmt(pde2)}"]
    lines.append("z1c_re,z1c_im,z2c_re,z2c_im,lattice_re,lattice_im,f_re,f_im")
    lines += [_row(*map(float, r)) for r in rows]
    if spread > 1e-8:
        write_output(args.out, lines)
        raise CheckFailed(f"lattice overlap / f not constant: spread {spread:.3e}")
    return lines


def cmd_steady(args):
    params = dyn.MasterEqParams(args.kappa, args.g, args.q1, args.q2, args.n1_cut, args.n2_cut)
    lat = params.lattice
    rho0 = dyn.DensityMatrix.site(lat)
    family = dyn.dark_subspace(params)
    res = dyn.steady_state(params, rho0, method=args.method, dt=args.dt, max_steps=args.max_steps,
                           dark_state=family[0], kernel_dim=args.method == "nullspace")
    coeffs, resid = dyn.dark_decomposition(res.rho, family)
    lines = _header(args)
    lines.append("t,trace,purity,liouvillian_norm,dark_overlap")
    traj = res.trajectory or [{
        "t": math.nan,
        "trace": res.rho.trace().real,
        "purity": res.rho.purity(),
        "liouvillian_norm": res.liouvillian_norm,
        "dark_overlap": res.rho.expectation(family[0]),
    }]
    for r in traj:
        lines.append(_row(r["t"], r["trace"], r["purity"], r["liouvillian_norm"], r["dark_overlap"]))
    lines.append(f"# dark_condition_residual={_fmt(dyn.dark_condition_residual(res.rho, params))}")
    lines.append(f"# decomposition_residual={_fmt(resid)}")
    lines.append(f"# edge_population={_fmt(res.edge_population)}")
    if res.kernel_dim is not None:
        lines.append(f"# kernel_dim={res.kernel_dim}")
    for i, w in enumerate(np.diag(coeffs).real):
        lines.append(f"# dark_weight n={i} {_fmt(float(w))}")
    for note in res.notes:
        lines.append(f"# note: {note}")
    return lines


# --- verify ----------------------------------------------------------------

def _check_specfun(rng):
    worst = 0.0
    for nu in range(0, 6):
        for x in (0.3, 1.7, 6.0, 21.0):
            lhs = specfun.bessel_i(nu, x).real - specfun.bessel_i(nu + 2, x).real
            rhs = 2 * (nu + 1) / x * specfun.bessel_i(nu + 1, x).real
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
            lhs = specfun.bessel_k(nu + 2, x) - specfun.bessel_k(nu, x)
            rhs = 2 * (nu + 1) / x * specfun.bessel_k(nu + 1, x)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst, 1e-12


def _check_algebra(rng):
    lat = fock.ProductLattice(1, 2, 14, 14)
    worst = 0.0
    for _ in range(100):
        amp = np.zeros(lat.shape, dtype=complex)
        amp[:12, :12] = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        v = fock.FourModeState(lat, amp)
        lo, up, kz = fock.apply_total_lowering, fock.apply_total_raising, fock.apply_total_kz
        scale = fock.norm(up(up(v))) + fock.norm(v)
        for lhs, rhs in (
            (lo(up(v)) - up(lo(v)), 2 * kz(v)),
            (kz(up(v)) - up(kz(v)), up(v)),
            (kz(lo(v)) - lo(kz(v)), -1 * lo(v)),
        ):
            worst = max(worst, fock.norm(lhs - rhs) / scale)
    return worst, 1e-10


def _check_cg(rng):
    worst = 0.0
    for q1 in range(4):
        for q2 in range(4):
            for blk_f, blk_o in zip([_cg.cg_block(q1, q2, n, 6) for n in range(4)],
                                    _cg.oracle_blocks(q1, q2, 3, 6)):
                worst = max(worst, _cg.validate_block(blk_f, blk_o).max_deviation)
    return worst, 1e-9


_GRID = [(z, q1, q2, n) for z in (0.5, 1.5 + 0.5j, 3.0)
         for q1 in range(3) for q2 in range(3) for n in range(3)]


def _check_residuals(rng):
    worst = 0.0
    for z, q1, q2, n in _GRID:
        psi = states.make_bipair_coupled(z, q1, q2, n)
        worst = max(worst, states.eigen_residual(psi), states.casimir_residual(psi))
    return worst, 1e-8


def _check_equivalence(rng):
    worst = 0.0
    for z, q1, q2, n in _GRID:
        a = states.make_bipair_coupled(z, q1, q2, n)
        b = states.make_bipair_direct(z, q1, q2, n)
        worst = max(worst, 1 - abs(fock.inner(a.state, b.state)))
    return worst, 1e-10


def _check_completeness(rng):
    worst = 0.0
    for q in range(6):
        for n in range(11):
            worst = max(worst, abs(states.completeness_diagonal(q, n) - 1))
    return worst, 1e-6


def _check_stats(rng):
    worst = 0.0
    for z in (0.25, 0.5, 1.0, 2.0, 3.0, 4.0):
        psi = states.make_bipair_coupled(z, 0, 0, 0, tail_tol=1e-14, cg="formula")
        pk = stats.joint_pk(psi).probabilities
        worst = max(worst, np.max(np.abs(pk - stats.p_k_closed(z, len(pk) - 1))))
        m = stats.moments(stats.joint_pk(psi))[0]
        worst = max(worst, abs(m / stats.mean_k_closed(z) - 1))
    return worst, 1e-10


def _check_overlap(rng):
    pts = _samples(rng, 12)
    worst = 0.0
    for z, q1, q2, n in [(1.0, 0, 0, 0), (1.5 + 0.5j, 1, 2, 1), (0.7j, 2, 0, 2)]:
        psi = states.make_bipair_coupled(z, q1, q2, n)
        r = np.array([states.lattice_overlap(psi, a, b) / states.overlap_f(a, b, z, q1, q2, n)
                      for a, b in pts])
        worst = max(worst, float(np.max(np.abs(r / r[0] - 1))))
    return worst, 1e-8


def _check_pde(rng):
    pts = _samples(rng, 12)
    worst = 0.0
    for z, q1, q2, n in [(1.0, 0, 0, 0), (1.5 + 0.5j, 1, 2, 1), (0.7j, 2, 0, 2)]:
        for eq in ("lowering", "casimir"):
            worst = max(worst, states.pde_residual(z, q1, q2, n, pts, h=1e-3, equation=eq))
    return worst, 1e-6


def _check_dynamics(rng):
    params = dyn.MasterEqParams(1.0, 0.3, 1, 0, 4, 4)
    d = params.lattice.dim
    worst = 0.0
    for _ in range(10):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = (x + x.conj().T) / 2
        a = dyn.liouvillian(rho, params)
        b = dyn.liouvillian(rho, params, form="shifted")
        worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(a),
                    abs(np.trace(a)) / np.linalg.norm(rho),
                    np.max(np.abs(a - a.conj().T)) / np.linalg.norm(a))
    return worst, 1e-12


CHECKS = [
    ("bessel recurrences", _check_specfun),
    ("su11 commutators", _check_algebra),
    ("cg formula vs oracle", _check_cg),
    ("eigen/casimir residuals", _check_residuals),
    ("coupled vs direct fidelity", _check_equivalence),
    ("resolution of identity", _check_completeness),
    ("closed-form statistics", _check_stats),
    ("overlap function", _check_overlap),
    ("overlap pdes", _check_pde),
    ("liouvillian forms", _check_dynamics),
]


def cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    lines = _header(args)
    lines.append("invariant,value,tolerance,passed,seconds")
    failed = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        val, tol = fn(rng)
        ok = bool(val <= tol)
        if not ok:
            failed.append(name)
        lines.append(_row(name, float(val), tol, ok, round(time.perf_counter() - t0, 2)))
    # informational rows, not gating
    grid = np.arange(1, 8) * 0.25
    qs = [stats.mandel_q_numeric(states.make_bipair_coupled(z, 0, 0, 0, cg="formula"), "a")
          for z in grid]
    lines.append(f"# info: max Q over |zeta| in 0.25..1.75 = {_fmt(max(qs))} (sign change at "
                 f"|zeta| = {_fmt(stats.q_zero_crossing())})")
    rep = stats.q_discrepancy_report()
    lines.append(f"# info: max |Q_closed - Q_numeric| over 0.1..3 = {_fmt(rep.max_abs_diff)}")
    if failed:
        write_output(args.out, lines)
        raise CheckFailed("failed: " + ", ".join(failed))
    return lines


# --- argument parsing ------------------------------------------------------

def _positive(v):
    x = float(v)
    if not x > 0 or not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {v}")
    return x


def _nonneg_int(v):
    x = int(v)
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative integer, got {v}")
    return x


def _pos_int(v):
    x = int(v)
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return x


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q1", type=_nonneg_int, default=0)
    common.add_argument("--q2", type=_nonneg_int, default=0)
    common.add_argument("--n", type=_nonneg_int, default=0)
    common.add_argument("--tail-tol", type=_positive, default=1e-12)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    zeta = argparse.ArgumentParser(add_help=False)
    zeta.add_argument("--zeta-re", type=float, default=1.0)
    zeta.add_argument("--zeta-im", type=float, default=0.0)
    zeta.add_argument("--zeta-abs", type=float, default=None, help="real zeta; overrides re/im")

    p = argparse.ArgumentParser(prog="bipair", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("qscan", parents=[common], help="Mandel Q and <n1> over a |zeta| grid")
    s.add_argument("--zeta-min", type=float, default=0.25)
    s.add_argument("--zeta-max", type=float, default=1.75)
    s.add_argument("--steps", type=_pos_int, default=7)
    s.set_defaults(func=cmd_qscan)

    s = sub.add_parser("pk", parents=[common, zeta], help="P_k next to a Poisson reference")
    s.add_argument("--kmax", type=_nonneg_int, default=20)
    s.set_defaults(func=cmd_pk)

    s = sub.add_parser("cg", parents=[common], help="coupling coefficients, formula vs oracle")
    s.add_argument("--kmax", type=_nonneg_int, default=6)
    s.set_defaults(func=cmd_cg)

    s = sub.add_parser("overlap", parents=[common, zeta], help="analytic overlap vs lattice sums")
    s.add_argument("--samples", type=_pos_int, default=12)
    s.set_defaults(func=cmd_overlap)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("steady", parents=[common], help="steady state of the master equation")
    s.add_argument("--g", type=float, default=0.3)
    s.add_argument("--kappa", type=_positive, default=1.0)
    s.add_argument("--n1-cut", type=_nonneg_int, default=12)
    s.add_argument("--n2-cut", type=_nonneg_int, default=12)
    s.add_argument("--dt", type=_positive, default=None)
    s.add_argument("--max-steps", type=_pos_int, default=400_000)
    s.add_argument("--method", choices=("evolve", "nullspace"), default="nullspace")
    s.set_defaults(func=cmd_steady)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    if getattr(args, "zeta_max", None) is not None and args.zeta_max < args.zeta_min:
        parser.error("--zeta-max must be >= --zeta-min")
    if getattr(args, "zeta_min", 0) < 0:
        parser.error("--zeta-min must be >= 0")
    try:
        lines = args.func(args)
    except CheckFailed as e:
        print(f"bipair: check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except dyn.NonConvergence as e:
        print(f"bipair: not converged: {e}", file=sys.stderr)
        return EXIT_NONCONV
    except (ValueError, specfun.BesselRangeError) as e:
        print(f"bipair: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    write_output(args.out, lines)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
