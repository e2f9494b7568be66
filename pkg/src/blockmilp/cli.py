"""Command line: generate instances, run the solvers, query the oracles,
and rebuild the experiment tables.

Solver parameters follow the 6-tuple convention
(rho0, gamma, innerALM, innerADMM, almDualStepSize, admmDualStepSize);
precedence is explicit flags > config file > per-family defaults.  Reports
are deterministic apart from the "timings" block, so replaying a run with
the echoed parameters reproduces it exactly.
"""

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import admm as admm_mod
from . import alm as alm_mod
from . import instances, model, reference

REPORT_TAG = "blockmilp-report-v1"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ITER_LIMIT = 2
EXIT_USAGE = 64

PARAM_TUPLE = ("rho0", "gamma", "inner_alm", "inner_admm", "alm_step", "admm_step")

CSV_COLUMNS = ["instance", "method", "gap", "iterations", "time_s", "objective",
               "bound", "status"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _family_defaults(family, args) -> dict:
    """Per-family solver parameters validated against the acceptance table
    behavior at desk scale (documented in the README)."""
    base = {"inner_alm": 100, "inner_admm": 50, "alm_step": 200.0,
            "admm_step": 200.0, "gamma": 1.1}
    if family == "investment":
        S = args.get("S", 3)
        base["rho0"] = max(1.0, 100.0 / float(S * S))
        if args.get("z_up", 5) > 5:
            base["inner_admm"] = 100
            base["admm_step"] = 0.01
    elif family == "sslp":
        base.update(rho0=200.0, gamma=2.0, inner_alm=50, inner_admm=50,
                    alm_step=50.0, admm_step=50.0)
    elif family == "random":
        base.update(rho0=20.0)
    else:
        base["rho0"] = 1.0
    return base


def _build_problem(ns) -> tuple:
    """Problem plus a metadata dict describing where it came from."""
    if ns.problem:
        path = Path(ns.problem)
        if not path.exists():
            raise UsageError(f"problem file not found: {path}")
        problem = model.from_json(path.read_text())
        return problem, {"source": str(path)}, None, {}
    if not ns.family:
        raise UsageError("either --problem or --family is required")
    fam_args = {}
    if ns.family == "investment":
        fam_args = {"S": ns.S or 3, "T": ns.T or "I", "z_up": ns.z_up or 5}
        problem = instances.gen_investment(fam_args["S"], fam_args["T"], fam_args["z_up"])
    elif ns.family == "sslp":
        fam_args = {"m": ns.m or 3, "n": ns.n or 5, "P": ns.P or 3, "seed": ns.seed or 0}
        problem = instances.gen_sslp(fam_args["m"], fam_args["n"], fam_args["P"], fam_args["seed"])
    elif ns.family == "random":
        fam_args = {"P": ns.P or 5, "block_dim": ns.block_dim or 10, "ints": ns.ints or 6,
                    "eq_rows": ns.eq_rows or 4, "copies": ns.copies or 2,
                    "seed": ns.seed or 0, "g_slack": ns.g_slack or 4}
        problem = instances.gen_random_structured(
            fam_args["P"], fam_args["block_dim"], fam_args["ints"], fam_args["eq_rows"],
            fam_args["copies"], fam_args["seed"], fam_args["g_slack"])
    else:
        raise UsageError(f"unknown family {ns.family!r}")
    return problem, {"source": f"gen:{ns.family}", **fam_args}, ns.family, fam_args


def _resolve_params(ns, family, fam_args) -> dict:
    params = {"eps_p": 1e-6, "eps_d": 1e-4, "gap_tol": 1e-4, "inner_gap": 1e-4,
              "eps": 1e-4, "outer_limit": 60, "iter_limit": 10_000, "workers": 1,
              "cut_window": None, "variant": "practical", "tau0": 1.0, "tau": 1.0,
              "encoder": "auto", "dual_scheme": "practical", "beta0": None,
              "mu_lo": None, "mu_hi": None, "beta_cap": None}
    params.update(_family_defaults(family, fam_args))
    if ns.config:
        path = Path(ns.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"malformed config: {e}")
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        params.update({k: v for k, v in loaded.items() if k in params or k in PARAM_TUPLE})
    if ns.params:
        vals = ns.params.split(",")
        if len(vals) != 6:
            raise UsageError("--params expects 6 comma-separated values")
        for key, val in zip(PARAM_TUPLE, vals):
            params[key] = float(val)
        params["inner_alm"] = int(params["inner_alm"])
        params["inner_admm"] = int(params["inner_admm"])
    for key in ("rho0", "gamma", "alm_step", "admm_step", "beta0", "eps_p", "eps_d",
                "gap_tol", "inner_gap", "eps", "tau0", "tau", "mu_lo", "mu_hi", "beta_cap"):
        v = getattr(ns, key, None)
        if v is not None:
            params[key] = v
    for key in ("inner_alm", "inner_admm", "outer_limit", "iter_limit", "workers",
                "cut_window"):
        v = getattr(ns, key, None)
        if v is not None:
            params[key] = v
    for key in ("variant", "encoder", "dual_scheme"):
        v = getattr(ns, key, None)
        if v is not None:
            params[key] = v
    if params["beta0"] is None:
        params["beta0"] = params["rho0"]
    return params


def _run_algorithm(problem, alg, params):
    t0 = time.perf_counter()
    if alg == "alm":
        ap = alm_mod.AlmParams(
            variant=params["variant"], rho0=params["rho0"], gamma=params["gamma"],
            inner_alm=params["inner_alm"], alm_step=params["alm_step"],
            inner_gap=params["inner_gap"], gap_tol=params["gap_tol"],
            eps_p=params["eps_p"], eps_d=params["eps_d"], tau0=params["tau0"],
            tau=params["tau"], outer_limit=params["outer_limit"],
            workers=params["workers"], cut_window=params["cut_window"],
            encoder=params["encoder"])
        if params["variant"] == "practical":
            rep = alm_mod.practical_alm(problem, ap)
        elif params["variant"] == "gap":
            rep = alm_mod.subgrad_gap(problem, ap)
        elif params["variant"] == "finite":
            _, _, rep = alm_mod.subgrad_finite(problem, ap)
        elif params["variant"] == "penalty":
            eps = max(params["eps_p"], 1e-4)
            _, _, rep = alm_mod.penalty_solve(problem, np.zeros(problem.m), eps, ap)
        else:
            raise UsageError(f"unknown variant {params['variant']!r}")
        elapsed = time.perf_counter() - t0
        out = {
            "status": "optimal" if rep.status in ("optimal", "converged") else rep.status,
            "objective": rep.upper_bound,
            "lower_bound": rep.lower_bound,
            "gap": rep.gap,
            "iterations": rep.z_solves,
            "residual": rep.incumbent.residual_l1 if rep.incumbent else None,
            "incumbent": None if rep.incumbent is None else
                {"x": rep.incumbent.x.tolist(), "z": rep.incumbent.z.tolist()},
            "history": {"dual": rep.dual_history, "residual": rep.residual_history},
            "cuts": rep.cuts,
        }
    elif alg == "admm":
        ap = admm_mod.AdmmParams(
            beta0=params["beta0"], gamma=params["gamma"], inner_admm=params["inner_admm"],
            admm_step=params["admm_step"], beta_cap=params["beta_cap"],
            mu_lo=params["mu_lo"], mu_hi=params["mu_hi"], eps=params["eps"],
            feas_tol=params["eps_p"], iter_limit=params["iter_limit"],
            dual_scheme=params["dual_scheme"], workers=params["workers"],
            cut_window=params["cut_window"], encoder=params["encoder"])
        inc, rep = admm_mod.admm_solve(problem, ap)
        elapsed = time.perf_counter() - t0
        out = {
            "status": rep.status,
            "objective": rep.upper_bound,
            "lower_bound": rep.lower_bound,
            "gap": rep.gap,
            "iterations": rep.n_iterations,
            "residual": inc.residual_l1 if inc else None,
            "incumbent": None if inc is None else {"x": inc.x.tolist(), "z": inc.z.tolist()},
            "history": {"lower": rep.lb_history, "upper": rep.ub_history},
            "cuts": rep.cuts,
        }
    else:
        raise UsageError(f"unknown algorithm {alg!r}")
    out["timings"] = {"total_s": elapsed}
    return out


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


def _csv_row(instance_name, method, result) -> dict:
    return {
        "instance": instance_name,
        "method": method,
        "gap": f"{max(result['gap'], 0.0) * 100:.2f}%",
        "iterations": result["iterations"],
        "time_s": f"{result['timings']['total_s']:.2f}",
        "objective": f"{result['objective']:.6f}",
        "bound": f"{result['lower_bound']:.6f}",
        "status": result["status"],
    }


def _write_csv(rows, stream, extra=()):
    cols = CSV_COLUMNS + list(extra)
    w = csv.DictWriter(stream, fieldnames=cols)
    w.writeheader()
    for r in rows:
        w.writerow(r)


def cmd_gen(ns) -> int:
    problem, meta, family, _ = _build_problem(ns)
    if family is None:
        raise UsageError("gen requires --family")
    text = model.to_json(problem)
    if ns.output:
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_solve(ns) -> int:
    problem, meta, family, fam_args = _build_problem(ns)
    bad = model.validate(problem)
    if bad:
        print("invalid problem:", file=sys.stderr)
        for b in bad:
            print("  " + b, file=sys.stderr)
        return EXIT_ERROR
    params = _resolve_params(ns, family, fam_args)
    result = _run_algorithm(problem, ns.alg, params)
    doc = {
        "format": REPORT_TAG,
        "algorithm": ns.alg,
        "variant": params["variant"] if ns.alg == "alm" else params["dual_scheme"],
        "parameters": {k: params[k] for k in sorted(params)},
        "param_tuple": [params[k] for k in PARAM_TUPLE],
        "instance": {**meta, "n": problem.n, "d": problem.d, "m": problem.m},
        **result,
    }
    text = json.dumps(doc, indent=1, default=_json_default)
    if ns.report:
        Path(ns.report).write_text(text)
    if ns.csv:
        with open(ns.csv, "w", newline="") as fh:
            _write_csv([_csv_row(meta.get("source", "problem"), ns.alg, result)], fh)
    if ns.format == "csv":
        buf = io.StringIO()
        _write_csv([_csv_row(meta.get("source", "problem"), ns.alg, result)], buf)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(text + "\n")
    if result["status"] in ("optimal", "converged"):
        return EXIT_OK
    return EXIT_ITER_LIMIT


def cmd_oracle(ns) -> int:
    problem, meta, *_ = _build_problem(ns)
    if ns.op == "extensive":
        value, x, z = reference.lattice_extensive(problem)
        out = {"op": "extensive", "value": value, "x": x.tolist(), "z": z.tolist()}
    elif ns.op == "dual":
        lam = _parse_vector(ns.lam, problem.m)
        out = {"op": "dual", "lam": lam.tolist(), "rho": ns.rho,
               "value": reference.enum_dual(problem, lam, ns.rho)}
    elif ns.op == "perturb":
        u = _parse_vector(ns.u, problem.m)
        val = reference.enum_perturbation(problem, u)
        out = {"op": "perturb", "u": u.tolist(),
               "value": None if np.isinf(val) else val,
               "infeasible": bool(np.isinf(val))}
    else:
        raise UsageError(f"unknown oracle op {ns.op!r}")
    sys.stdout.write(json.dumps(out, indent=1, default=_json_default) + "\n")
    return EXIT_OK


def _parse_vector(text, length):
    if text is None:
        return np.zeros(length)
    vals = [float(v) for v in text.split(",")]
    if len(vals) == 1:
        return np.full(length, vals[0])
    if len(vals) != length:
        raise UsageError(f"vector needs {length} entries, got {len(vals)}")
    return np.asarray(vals)


TABLES = {
    "investment-I": {"family": "investment", "grid": [{"S": 3}, {"S": 5}, {"S": 21}],
                     "fixed": {"T": "I", "z_up": 5}, "iter_cap": 37},
    "investment-T": {"family": "investment", "grid": [{"S": 3}, {"S": 5}, {"S": 21}],
                     "fixed": {"T": "T", "z_up": 5}, "iter_cap": 37},
    "investment-u10": {"family": "investment", "grid": [{"S": 3}],
                       "fixed": {"T": "T", "z_up": 10}, "iter_cap": 121},
    "sslp-small": {"family": "sslp", "grid": [{"seed": 1}, {"seed": 2}, {"seed": 3}],
                   "fixed": {"m": 3, "n": 5, "P": 3}, "iter_cap": 10_000},
    "random": {"family": "random", "grid": [{"P": 5}, {"P": 10}],
               "fixed": {"block_dim": 10, "ints": 6, "eq_rows": 4, "copies": 2,
                         "seed": 3, "g_slack": 4}, "iter_cap": 4},
}


def _gen_for_table(family, spec):
    if family == "investment":
        return instances.gen_investment(spec["S"], spec["T"], spec["z_up"])
    if family == "sslp":
        return instances.gen_sslp(spec["m"], spec["n"], spec["P"], spec["seed"])
    return instances.gen_random_structured(spec["P"], spec["block_dim"], spec["ints"],
                                           spec["eq_rows"], spec["copies"], spec["seed"],
                                           spec["g_slack"])


def _scale_table(table, scale):
    out = []
    for g in table["grid"]:
        spec = {**table["fixed"], **g}
        if scale != 1.0:
            if "S" in spec:
                spec["S"] = max(2, int(round(spec["S"] * scale)))
            if "P" in spec:
                spec["P"] = max(2, int(round(spec["P"] * scale)))
            if "n" in spec:
                spec["n"] = max(1, int(round(spec["n"] * scale)))
        out.append(spec)
    return out


def cmd_reproduce(ns) -> int:
    if ns.table not in TABLES:
        raise UsageError(f"unknown table {ns.table!r}; choose from {sorted(TABLES)}")
    table = TABLES[ns.table]
    rows = []
    worst = EXIT_OK
    for spec in _scale_table(table, ns.scale):
        problem = _gen_for_table(table["family"], spec)
        try:
            p_star = reference.lattice_extensive(problem)[0]
        except reference.SizeGuardError:
            p_star = None
        params = _resolve_params(ns, table["family"], spec)
        name = "-".join(f"{k}{v}" for k, v in sorted(spec.items()))
        for alg in ("alm", "admm"):
            result = _run_algorithm(problem, alg, params)
            row = _csv_row(name, alg, result)
            flags = []
            if result["status"] not in ("optimal", "converged"):
                flags.append("status")
                worst = max(worst, EXIT_ITER_LIMIT)
            if result["iterations"] > table["iter_cap"]:
                flags.append(f"iters>{table['iter_cap']}")
            if p_star is not None and result["objective"] is not None:
                if abs(result["objective"] - p_star) > 1e-6 * max(1.0, abs(p_star)):
                    flags.append("objective")
            row["flag"] = ";".join(flags)
            rows.append(row)
    stream = open(ns.output, "w", newline="") if ns.output else sys.stdout
    try:
        _write_csv(rows, stream, extra=("flag",))
    finally:
        if ns.output:
            stream.close()
    return worst


def build_parser() -> _Parser:
    p = _Parser(prog="blockmilp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_family(sp):
        sp.add_argument("--family", choices=["investment", "sslp", "random"])
        sp.add_argument("--S", type=int)
        sp.add_argument("--T", choices=["I", "T"])
        sp.add_argument("--z-up", dest="z_up", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--P", type=int)
        sp.add_argument("--block-dim", dest="block_dim", type=int)
        sp.add_argument("--ints", type=int)
        sp.add_argument("--eq-rows", dest="eq_rows", type=int)
        sp.add_argument("--copies", type=int)
        sp.add_argument("--g-slack", dest="g_slack", type=int)
        sp.add_argument("--seed", type=int)

    g = sub.add_parser("gen", help="generate an instance as JSON")
    add_family(g)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen, problem=None)

    s = sub.add_parser("solve", help="run a decomposition solve")
    s.add_argument("--problem")
    add_family(s)
    s.add_argument("--alg", choices=["alm", "admm"], required=True)
    s.add_argument("--variant", choices=["penalty", "gap", "finite", "practical"])
    s.add_argument("--params", help="rho0,gamma,innerALM,innerADMM,almStep,admmStep")
    s.add_argument("--config", help="JSON file with parameter overrides")
    for flag in ("rho0", "gamma", "alm-step", "admm-step", "beta0", "eps-p", "eps-d",
                 "gap-tol", "inner-gap", "eps", "tau0", "tau", "mu-lo", "mu-hi",
                 "beta-cap"):
        s.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=float)
    for flag in ("inner-alm", "inner-admm", "outer-limit", "iter-limit", "workers",
                 "cut-window"):
        s.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=int)
    s.add_argument("--dual-scheme", dest="dual_scheme", choices=["practical", "projected"])
    s.add_argument("--encoder", choices=["auto", "split", "unary"])
    s.add_argument("--report", help="write the JSON report here")
    s.add_argument("--csv", help="write a one-row CSV summary here")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="brute-force reference values")
    o.add_argument("--op", choices=["extensive", "dual", "perturb"], required=True)
    o.add_argument("--problem")
    add_family(o)
    o.add_argument("--lam", help="comma-separated multipliers (or one value for all)")
    o.add_argument("--rho", type=float, default=1.0)
    o.add_argument("--u", help="comma-separated perturbation")
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("reproduce", help="rebuild an experiment table")
    r.add_argument("--table", required=True)
    r.add_argument("--scale", type=float, default=1.0)
    r.add_argument("-o", "--output")
    r.add_argument("--params")
    r.add_argument("--config")
    for flag in ("workers", "outer-limit", "iter-limit", "cut-window"):
        r.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=int)
    r.set_defaults(func=cmd_reproduce, problem=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (reference.SizeGuardError, reference.OracleInfeasible, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
