"""Command-line front end.

Exit codes: 0 on success, 1 for usage errors (bad flags, malformed model,
unsupported family), 2 when a finiteness criterion or variance guard is
violated.  The default seed can be overridden with ``LEVYEXP_SEED``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import closedform, criteria, montecarlo, quadrature, skeleton
from .errors import CriterionError, LevyExpError, Unsupported
from .model import LevyModel, classify

SEED_ENV = "LEVYEXP_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _load_model(source: str) -> LevyModel:
    p = Path(source)
    if p.is_file():
        return LevyModel.from_json(p.read_text())
    if source.lstrip().startswith("{"):
        return LevyModel.from_json(source)
    raise UsageError(f"model file not found: {source}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return montecarlo.DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _cfg(args) -> montecarlo.PathConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    return montecarlo.PathConfig(n_paths=args.paths, step=args.step, horizon=args.horizon, seed=seed,
                                 workers=args.workers, epsilon_tail=args.horizon_eps)


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for '{args.command}'")


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _clean(v) for k, v in row.items()})
    return buf.getvalue()


def _emit(args, payload, rows=None):
    if args.format == "csv":
        text = _rows_csv(rows if rows is not None else [payload])
    else:
        text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_criteria(args):
    _need(args, "a")
    model = _load_model(args.model)
    _emit(args, criteria.check_finiteness(model, args.a).to_dict())


def _exact(model, quantity, a, r, theta):
    if quantity == "inf":
        return closedform.inf_transform(model, theta if theta is not None else a)
    if model.is_stable:
        if quantity != "T" or model.drift != 0:
            raise Unsupported("the stable closed form covers T with drift 0")
        return closedform.stable_T_moment(model.stable_index, a, r)
    fn = {"T": closedform.specneg_T, "N": closedform.specneg_N, "rho": closedform.specneg_rho}[quantity]
    return fn(model, a, r)


def cmd_exact(args):
    if args.quantity != "inf" or args.theta is None:
        _need(args, "a")
    model = _load_model(args.model)
    r = args.r if args.r is not None else 0.0
    cf = _exact(model, args.quantity, args.a, r, args.theta)
    _emit(args, cf.to_dict())


def cmd_estimate(args):
    model = _load_model(args.model)
    cfg = _cfg(args)
    if args.quantity == "inf":
        theta = args.theta if args.theta is not None else args.a
        if theta is None:
            raise UsageError("--theta (or --a) is required for --quantity inf")
        est = montecarlo.estimate_inf_transform(model, theta, cfg)
    else:
        _need(args, "a", "r")
        if args.quantity == "T":
            est = montecarlo.estimate_moment_T(model, args.a, args.r, cfg, mode=args.mode)
        elif args.quantity == "N":
            est = montecarlo.estimate_moment_N(model, args.a, args.r, cfg)
        else:
            est = montecarlo.estimate_moment_rho(model, args.a, args.r, cfg)
    _emit(args, est.to_dict())


def _r_list(args):
    if args.r_list:
        return [float(x) for x in args.r_list.split(",") if x.strip()]
    if args.r is not None:
        return [args.r]
    raise UsageError(f"--r-list (or --r) is required for '{args.command}'")


def cmd_test_integrals(args):
    _need(args, "a")
    model = _load_model(args.model)
    rep = criteria.check_finiteness(model, args.a)
    rows = []
    for r in _r_list(args):
        u = quadrature.U_a(model, args.a, r, args.tol)
        v = quadrature.V_a(model, args.a, r, args.tol)
        scaled = None
        if rep.gamma is not None and u.value is not None:
            scaled = math.exp(-rep.gamma * r) * u.value
        rows.append({"r": r, "U_a": u.value, "V_a": v.value, "e^{-gamma r}U_a": scaled,
                     "certificate": max(u.abs_err, v.abs_err), "verdict_U": u.verdict.value,
                     "verdict_V": v.verdict.value, "mode": "Quadrature", "error_U": u.abs_err,
                     "error_V": v.abs_err})
    _emit(args, {"a": args.a, "rows": rows}, rows)


def cmd_asymptote(args):
    _need(args, "a")
    model = _load_model(args.model)
    cfg = _cfg(args)
    rows = []
    g = criteria.check_finiteness(model, args.a).gamma
    if g is None:
        raise Unsupported("subordinators have no tilt, so there is no exp(-gamma r) normalization")
    for r in _r_list(args):
        est = montecarlo.estimate_moment_T(model, args.a, r, cfg)
        s = math.exp(-g * r)
        rows.append({"r": r, "quantity": "T", "value": s * est.mean, "error": s * est.std_err,
                     "mode": est.mode.value})
    constants = {}
    for name, fn in (("U_a", closedform.asymptotic_constant_ua),
                     ("rho", lambda m, a: closedform.asymptotic_constant_rho(m, a, cfg)),
                     ("T", closedform.asymptotic_constant_T)):
        try:
            constants[name] = fn(model, args.a)
        except LevyExpError as exc:
            constants[name] = f"unavailable: {exc}"
    _emit(args, {"a": args.a, "rows": rows, "constants": constants}, rows)


def cmd_bridge(args):
    _need(args, "a", "r")
    model = _load_model(args.model)
    if not classify(model).is_compound_poisson:
        raise UsageError("bridge needs a CompoundPoisson model with drift 0")
    res = skeleton.verify_cpp_bridge(model.jump_rate, model.jump_law, args.a, args.r, _cfg(args))
    out = skeleton.bridge_to_dict(res)
    rows = [{"quantity": q, "lhs": p["lhs"]["mean"], "lhs_err": p["lhs"]["std_err"],
             "rhs": p["rhs"]["mean"], "rhs_err": p["rhs"]["std_err"], "compatible": p["compatible"],
             "mode": "MC"} for q, p in out["pairs"].items()]
    _emit(args, out, rows)


def _verify_rows(model, a, r, cfg, tol):
    """Closed form against quadrature against Monte Carlo, one row per quantity."""
    rows = []

    def row(quantity, level, exact, quad, quad_err, est):
        ok_q = quad is None or abs(quad - exact) <= max(1e-6 * abs(exact), 10 * quad_err)
        ok_m = est is None or abs(est.mean - exact) <= 3 * est.std_err + est.truncation_cert + 1e-12 * abs(exact)
        rows.append({"quantity": quantity, "r": level, "exact": exact, "quadrature": quad,
                     "quadrature_err": quad_err, "mc": None if est is None else est.mean,
                     "mc_err": None if est is None else est.std_err,
                     "mc_cert": None if est is None else est.truncation_cert,
                     "pass": bool(ok_q and ok_m)})

    bm = model.family.value == "BrownianDrift" and model.gaussian_var == 1.0

    def dens(kind, level):
        if not bm:
            return None, None
        q = quadrature.bm_density_moment(kind, model.drift, a, level)
        return q.value, q.abs_err

    cfT = closedform.specneg_T(model, a, r).value
    row("T", r, cfT, *dens("T", r), montecarlo.estimate_moment_T(model, a, r, cfg))
    cfN = closedform.specneg_N(model, a, 0.0).value
    q = quadrature.sojourn_zero_moment(model, a, tol)
    row("N", 0.0, cfN, q.value, q.abs_err, montecarlo.estimate_moment_N(model, a, 0.0, cfg))
    try:
        cfR = closedform.specneg_rho(model, a, 0.0).value
    except CriterionError:
        cfR = None
    if cfR is not None:
        row("rho", 0.0, cfR, *dens("rho", 0.0), montecarlo.estimate_moment_rho(model, a, 0.0, cfg))
    try:
        c = closedform.asymptotic_constant_ua(model, a)
        big = 20.0
        u = quadrature.U_a(model, a, big, tol)
        g = criteria.solve_gamma(model, a)
        rows.append({"quantity": "U_a_asymptote", "r": big, "exact": c,
                     "quadrature": math.exp(-g * big) * u.value, "quadrature_err": math.exp(-g * big) * u.abs_err,
                     "mc": None, "mc_err": None, "mc_cert": None,
                     "pass": bool(abs(math.exp(-g * big) * u.value - c) <= 0.01 * c)})
    except LevyExpError:
        pass
    return rows


def cmd_verify(args):
    _need(args, "a")
    model = _load_model(args.model)
    if not classify(model).is_spectrally_negative:
        raise UsageError("verify needs a spectrally negative model (closed forms are the reference)")
    r = args.r if args.r is not None else 2.0
    rows = _verify_rows(model, args.a, r, _cfg(args), args.tol)
    _emit(args, {"a": args.a, "rows": rows, "all_pass": all(x["pass"] for x in rows)}, rows)


COMMANDS = {"criteria": cmd_criteria, "exact": cmd_exact, "estimate": cmd_estimate,
            "test-integrals": cmd_test_integrals, "asymptote": cmd_asymptote, "bridge": cmd_bridge,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levyexp", description="Exponential moments of passage, sojourn and last exit times "
                                             "of Levy processes.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--model", required=True, help="model JSON file (or an inline JSON object)")
    p.add_argument("--a", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--r-list", help="comma-separated levels")
    p.add_argument("--theta", type=float, help="argument of the infimum transform")
    p.add_argument("--quantity", choices=["T", "N", "rho", "inf"], default="T")
    p.add_argument("--mode", choices=["Direct", "EsscherIS", "Exact"])
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--horizon", type=float, default=1e4)
    p.add_argument("--horizon-eps", type=float, default=1e-3)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.a is not None and not args.a > 0:
            raise UsageError(f"--a must be positive, got {args.a}")
        code = COMMANDS[args.command](args)
        return code or 0
    except CriterionError as exc:
        print(f"criterion violated: {exc}", file=sys.stderr)
        return 2
    except (UsageError, LevyExpError, ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
