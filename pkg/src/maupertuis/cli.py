"""
Command-line experiment runner.

Every subcommand writes ``<out>/<name>.csv`` and ``<out>/<name>.json``; the
JSON holds the echoed config, the package version, the results and a list
of named assertions.  Exit status: 0 if every assertion passes, 2 if any
fails, 1 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import dynamics, effective, geodesics, homogenize
from . import potential as potmod
from . import quadrature as quad

DEFAULT_EPS = "0.1,0.05,0.01,0.005"
SLACK = 1e-7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _eps_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("eps list must be strictly decreasing")
    return vals


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a point: {text!r}")


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


class Report:
    """Collects results and assertions for one run."""

    def __init__(self, name: str, args: argparse.Namespace):
        self.name = name
        self.config = {k: v for k, v in vars(args).items() if k != "func"}
        self.results: list = []
        self.assertions: list = []

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.assertions.append({"name": name, "pass": bool(ok), "detail": detail})
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    def write_json(self, out: Path) -> Path:
        path = out / f"{self.name}.json"
        doc = {"config": self.config, "version": __version__, "results": self.results,
               "assertions": self.assertions}
        path.write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
        return path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _load_potential(args, dim: int | None = None):
    try:
        V = potmod.load(args.potential)
    except (OSError, ValueError) as exc:
        raise UsageError(f"--potential: {exc}")
    if dim is not None and V.dim != dim:
        raise UsageError(f"--potential: this command needs a {dim}D potential, got {V.dim}D")
    return V


def _point(values, V, flag):
    p = np.asarray(values, dtype=float)
    if p.shape != (V.dim,):
        raise UsageError(f"{flag}: expected {V.dim} coordinates, got {len(values)}")
    return p


# -- subcommands ---------------------------------------------------------------

def cmd_ivp(args, out: Path) -> Report:
    V = _load_potential(args, dim=1)
    rep = Report("ivp", args)
    if args.energy is not None:
        q_a = 0.0 if args.qa is None else args.qa
        res = homogenize.ivp_convergence_experiment(V, args.energy, q_a, args.eps, horizon=args.horizon)
        write_csv(out / "ivp.csv", ["eps", "sup_error", "bound", "ratio"],
                  [[r["eps"], r["sup_error"], r["bound"], r["ratio"]] for r in res.rows()])
        rep.results = list(res.rows())
        rep.results.append({"energy": res.energy, "q_a": res.q_a, "horizon": res.horizon,
                            "sigma": quad.sigma(V, res.energy), "fitted_rate": res.slope})
        rep.check("uniform_bound", bool(np.all(res.within_bound)),
                  f"max ratio {float(np.max(res.ratio)):.4g}")
        if len(res.eps) >= 2:
            rep.check("rate", 0.8 <= res.slope <= 1.2, f"fitted rate {res.slope:.4f}")
        if args.save_trajectory:
            eps = float(res.eps[-1])
            t = np.linspace(0.0, res.horizon, 2048)
            dynamics.closed_form_trajectory(V, res.energy, eps, q_a, t).write_csv(out / "ivp_trajectory.csv")
        return rep

    # fixed initial velocity: one eps_k sequence per admissible energy
    p_a = args.velocity
    q_a = 1.0 if args.qa is None else args.qa
    fam = homogenize.slope_family(V, p_a)
    energies = args.energies or [fam.upper, 0.5 * (fam.lower + fam.upper)]
    rows, slopes = [], []
    for E in energies:
        seq = homogenize.nonuniqueness_sequence(V, q_a, p_a, E)
        eps_k = seq.eps_sequence(args.kmax)
        s = quad.sigma(V, E)
        e0 = np.array([seq.initial_energy(V, k) for k in range(1, args.kmax + 1)])
        errs = np.array([homogenize.sup_error(V, E, e, q_a, 10.0 * s) for e in eps_k])
        bound = homogenize.error_constant(E) * eps_k / s
        for e, err, b in zip(eps_k, errs, bound):
            rows.append([E, e, err, b, err / b])
        slopes.append(seq.slope)
        rep.results.append({"energy": E, "level_point": seq.level_point, "slope": seq.slope,
                            "max_energy_error": float(np.max(np.abs(e0 - E)))})
        rep.check(f"initial_energy[E={E!r}]", bool(np.max(np.abs(e0 - E)) <= 1e-10),
                  f"max |E_k - E| = {float(np.max(np.abs(e0 - E))):.3e}")
        rep.check(f"uniform_bound[E={E!r}]", bool(np.all(errs <= bound + SLACK)),
                  f"max ratio {float(np.max(errs / bound)):.4g}")
    if len(slopes) >= 2:
        gap = min(abs(a - b) for i, a in enumerate(slopes) for b in slopes[i + 1:])
        rep.check("distinct_limits", gap > 10 * 1e-10, f"smallest slope gap {gap:.4g}")
    rep.results.append({"inf_slope_zero": fam.inf_slope_zero, "energy_range": [fam.lower, fam.upper]})
    write_csv(out / "ivp.csv", ["energy", "eps", "sup_error", "bound", "ratio"], rows)
    return rep


def cmd_bvp(args, out: Path) -> Report:
    V = _load_potential(args, dim=1)
    rep = Report("bvp", args)
    q_a, q_b = args.qa, args.qb
    if not q_b > q_a:
        raise UsageError("--to: must exceed --from")
    if args.energy is not None:
        rows = []
        for e in args.eps:
            r = homogenize.bvp_fixed_energy(V, args.energy, q_a, q_b, e)
            rows.append([e, r.arrival_time, r.limit_time, r.deviation, r.bound])
            rep.check(f"arrival_time[eps={e!r}]", r.deviation <= r.bound + SLACK,
                      f"|T_eps - T| = {r.deviation:.3e}, bound {r.bound:.3e}")
        write_csv(out / "bvp.csv", ["eps", "arrival_time", "limit_time", "deviation", "bound"], rows)
        rep.results = [dict(zip(["eps", "arrival_time", "limit_time", "deviation", "bound"], r)) for r in rows]
        return rep

    T = args.time
    lo, hi = homogenize.fixed_time_energy_bounds(V, T, q_a, q_b)
    rows = []
    for e in args.eps:
        E = homogenize.bvp_fixed_time(V, T, q_a, q_b, e)
        resid = abs(quad.tau_eps(V, E, e, q_a, q_b) - T)
        rows.append([e, E, resid, lo, hi])
        rep.check(f"arrival_time[eps={e!r}]", resid <= 1e-10, f"|tau(E) - T| = {resid:.3e}")
        rep.check(f"energy_bounds[eps={e!r}]", lo - 1e-12 <= E <= hi + 1e-12, f"E = {E!r} in [{lo!r}, {hi!r}]")
    write_csv(out / "bvp.csv", ["eps", "energy", "residual", "lower_bound", "upper_bound"], rows)
    rep.results = [dict(zip(["eps", "energy", "residual", "lower_bound", "upper_bound"], r)) for r in rows]
    return rep


def cmd_effective(args, out: Path) -> Report:
    V = _load_potential(args, dim=1)
    rep = Report("effective-hamiltonian", args)
    H = effective.EffectiveHamiltonian1D.build(V)
    p = np.linspace(0.0, args.pmax, args.points)
    hb = H.hbar(p)
    hp = H.hbar_prime(p)
    write_csv(out / "effective-hamiltonian.csv", ["p", "hbar", "hbar_prime"], np.column_stack([p, hb, hp]))
    rep.results = [{"p_crit": H.p_crit}]
    rep.check("nonnegative", bool(np.all(hb >= 0)), f"min hbar {float(np.min(hb)):.3e}")
    rep.check("nondecreasing", bool(np.all(np.diff(hb) >= 0)), "hbar along p >= 0")
    moving = hb > 0
    if np.any(moving):
        a = hb[moving]
        back = np.array([H.p_of_alpha(x) for x in a])
        err = float(np.max(np.abs(back - p[moving]) / p[moving]))
        rep.check("round_trip", err <= 1e-9, f"max relative |p(hbar(p)) - p| = {err:.3e}")
    return rep


def _geodesic_common(args, V):
    q_a = _point(args.qa, V, "--from")
    q_b = _point(args.qb, V, "--to")
    if np.array_equal(q_a, q_b):
        raise UsageError("--to: endpoints coincide")
    return q_a, q_b


def cmd_geodesic(args, out: Path) -> Report:
    V = _load_potential(args)
    rep = Report("geodesic", args)
    q_a, q_b = _geodesic_common(args, V)
    E, eps = args.energy, args.eps[0]
    res = geodesics.minimize_jacobi_full(V, E, eps, q_a, q_b, args.N, starts=args.starts,
                                         perturbation=args.perturbation, seed=args.seed)
    c = res.curve
    tc = geodesics.reparametrize_to_time(c, V, E, eps)
    c.write_csv(out / "geodesic.csv")
    tc.write_csv(out / "geodesic_timed.csv")
    straight = geodesics.jacobi_energy(geodesics.Curve.straight(q_a, q_b, c.N), V, E, eps)
    rep.results = [{"N": c.N, "jacobi_energy": res.value, "jacobi_length": geodesics.jacobi_length(c, V, E, eps),
                    "total_time": tc.total_time, "straight_energy": straight, "iterations": res.iterations,
                    "status": res.status, "start_values": res.start_values}]
    rep.check("converged", res.converged, f"max |grad| = {res.grad_norm:.3e} ({res.status})")
    rep.check("descent", res.value <= straight, f"J = {res.value!r} vs straight {straight!r}")
    return rep


def cmd_cell(args, out: Path) -> Report:
    V = _load_potential(args)
    rep = Report("cell-problem", args)
    z = _point(args.z, V, "--z")
    if not np.any(z):
        raise UsageError("--z: must be nonzero")
    kw = dict(N=args.N, starts=args.starts, perturbation=args.perturbation, seed=args.seed, workers=args.workers)
    if args.energy is not None:
        est = geodesics.cell_problem_jacobi(V, args.energy, z, args.eps, **kw)
        for e in est:
            rep.check(f"finsler_sandwich[eps={e.eps!r}]", e.within_bounds(),
                      f"{e.lower_bound!r} <= {e.estimate!r} <= {e.upper_bound!r}")
        if args.homogeneity:
            est2 = geodesics.cell_problem_jacobi(V, args.energy, 2 * z, args.eps, **kw)
            ratio = est2[-1].estimate / est[-1].estimate
            rep.check("two_homogeneity", abs(ratio / 4.0 - 1.0) <= 0.02, f"J(2z)/J(z) = {ratio!r}")
            est = est + est2
    else:
        est = geodesics.cell_problem_action(V, args.time, z, args.eps, **kw)
        for e in est:
            rep.check(f"action_bounds[eps={e.eps!r}]", e.within_bounds(),
                      f"{e.lower_bound!r} <= {e.estimate!r} <= {e.upper_bound!r}")
        if len(est) >= 2:
            a, b = est[-2].estimate, est[-1].estimate
            rep.check("cauchy", abs(a - b) <= 0.02 * abs(b), f"last two estimates {a!r}, {b!r}")
    geodesics.write_cell_csv(out / "cell-problem.csv", est)
    rep.results = [dict(e.row(), converged=e.converged) for e in est]
    return rep


def cmd_verify(args, out: Path) -> Report:
    V = _load_potential(args)
    rep = Report("verify", args)
    q_a, q_b = _geodesic_common(args, V)
    E, eps = args.energy, args.eps[0]
    curve = geodesics.minimize_jacobi(V, E, eps, q_a, q_b, args.N, starts=args.starts,
                                      perturbation=args.perturbation, seed=args.seed)
    r = geodesics.verify_correspondence(V, E, eps, q_a, q_b, curve=curve, rtol=args.rtol,
                                        tol_traj=args.tol_traj, dt=args.dt)
    geodesics.reparametrize_to_time(curve, V, E, eps).write_csv(out / "verify_timed.csv")
    write_csv(out / "verify.csv", ["N", "total_time", "jacobi_energy", "jacobi_length", "action"],
              [[curve.N, r.total_time, r.jacobi_energy, r.jacobi_length, r.action]])
    rep.results = [{"N": curve.N, "total_time": r.total_time, "jacobi_energy": r.jacobi_energy,
                    "jacobi_length": r.jacobi_length, "action": r.action, "endpoint": r.endpoint}]
    for c in r.checks:
        rep.check(c.name, c.passed, f"{c.value:.3e} (tol {c.tolerance:g}); {c.detail}")
    return rep


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maupertuis", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, default_potential):
        p.add_argument("--potential", default=default_potential,
                       help="builtin (zero, cos1d, cos2d) or descriptor file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0)

    def multistart(p):
        p.add_argument("--N", type=_count, default=None, help="segments (default 40 per crossed cell)")
        p.add_argument("--starts", type=_count, default=5)
        p.add_argument("--perturbation", type=float, default=0.1,
                       help="size of perturbed starts relative to the endpoint distance")

    p = sub.add_parser("ivp", help="fixed-energy or fixed-velocity initial value sweep")
    common(p, "cos1d")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--energy", type=_positive)
    g.add_argument("--velocity", type=_positive, help="initial speed p_a; builds eps_k sequences")
    p.add_argument("--eps", type=_eps_list, default=_eps_list(DEFAULT_EPS))
    p.add_argument("--qa", type=float, default=None, help="start point (default 0, or 1 with --velocity)")
    p.add_argument("--horizon", type=_positive, default=None, help="default 10 sigma(E)")
    p.add_argument("--energies", type=lambda s: [_positive(v) for v in s.split(",")], default=None,
                   help="energies for --velocity (default p_a^2/2 and the midpoint of the admissible range)")
    p.add_argument("--kmax", type=_count, default=40)
    p.add_argument("--save-trajectory", action="store_true", help="write the smallest-eps trajectory")
    p.set_defaults(func=cmd_ivp)

    p = sub.add_parser("bvp", help="boundary value problems at fixed energy or fixed time")
    common(p, "cos1d")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--energy", type=_positive)
    g.add_argument("--time", type=_positive)
    p.add_argument("--from", dest="qa", type=float, default=0.0)
    p.add_argument("--to", dest="qb", type=float, default=1.0)
    p.add_argument("--eps", type=_eps_list, default=_eps_list(DEFAULT_EPS))
    p.set_defaults(func=cmd_bvp)

    p = sub.add_parser("effective-hamiltonian", help="tabulate hbar and hbar' on [0, pmax]")
    common(p, "cos1d")
    p.add_argument("--pmax", type=_positive, required=True)
    p.add_argument("--points", type=_count, default=101)
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("geodesic", help="minimize the discrete Jacobi energy between two points")
    common(p, "cos2d")
    p.add_argument("--energy", type=_positive, required=True)
    p.add_argument("--eps", type=_eps_list, required=True, help="a single eps")
    p.add_argument("--from", dest="qa", type=_vector, required=True)
    p.add_argument("--to", dest="qb", type=_vector, required=True)
    multistart(p)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("cell-problem", help="Jacobi (--energy) or action (--time) cell problem sweep")
    common(p, "cos2d")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--energy", type=_positive)
    g.add_argument("--time", type=_positive)
    p.add_argument("--z", type=_vector, required=True)
    p.add_argument("--eps", type=_eps_list, required=True)
    p.add_argument("--homogeneity", action="store_true", help="also solve for 2z and compare")
    p.add_argument("--workers", type=_count, default=1)
    multistart(p)
    p.set_defaults(func=cmd_cell)

    p = sub.add_parser("verify", help="Maupertuis correspondence checks on a Jacobi minimizer")
    common(p, "cos2d")
    p.add_argument("--energy", type=_positive, required=True)
    p.add_argument("--eps", type=_eps_list, required=True, help="a single eps")
    p.add_argument("--from", dest="qa", type=_vector, required=True)
    p.add_argument("--to", dest="qb", type=_vector, required=True)
    p.add_argument("--rtol", type=_positive, default=1e-5)
    p.add_argument("--tol-traj", type=_positive, default=1e-3)
    p.add_argument("--dt", type=_positive, default=None, help="Verlet step (default eps/400)")
    multistart(p)
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("geodesic", "verify") and len(args.eps) != 1:
            raise UsageError("--eps: give a single value")
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        rep = args.func(args, out)
    except (UsageError, ValueError) as exc:
        print(f"maupertuis: error: {exc}", file=sys.stderr)
        return 1
    path = rep.write_json(out)
    for a in rep.assertions:
        print(f"{'PASS' if a['pass'] else 'FAIL'}  {a['name']}: {a['detail']}")
    print(f"wrote {path}")
    return 0 if rep.passed else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
