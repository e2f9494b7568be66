"""Plain-text LP interchange for the external-solver adapter.

Grammar (one token group per line, all numbers as shortest round-trip
decimals, variables implicitly named x0..x{n-1}):

    blockmilp-lp-v1
    nvars <n>
    minimize
    <c_0> ... <c_{n-1}>
    bounds
    <lower_i> <upper_i>          (n lines)
    integers
    <i_1> <i_2> ...              (single line of indices, may be empty)
    eq <k>
    <a_0> ... <a_{n-1}> <rhs>    (k lines)
    le <k>
    <a_0> ... <a_{n-1}> <rhs>    (k lines)
    end

The adapter invokes `$BLOCKMILP_SOLVER_CMD <instance.lp> <solution.sol>` and
reads the solution file back:

    status optimal | infeasible
    x<i> <value>                 (one line per variable when optimal)
"""

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

HEADER = "blockmilp-lp-v1"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_lp(instance, path):
    inst = instance
    lines = [HEADER, f"nvars {inst.n}", "minimize",
             " ".join(_fmt(v) for v in inst.objective), "bounds"]
    for lo, hi in zip(inst.lower, inst.upper):
        lines.append(f"{_fmt(lo)} {_fmt(hi)}")
    lines.append("integers")
    lines.append(" ".join(str(i) for i in np.nonzero(inst.integrality)[0]))
    lines.append(f"eq {inst.eq_matrix.shape[0]}")
    for row, rhs in zip(inst.eq_matrix, inst.eq_rhs):
        lines.append(" ".join(_fmt(v) for v in row) + " " + _fmt(rhs))
    lines.append(f"le {inst.ineq_matrix.shape[0]}")
    for row, rhs in zip(inst.ineq_matrix, inst.ineq_rhs):
        lines.append(" ".join(_fmt(v) for v in row) + " " + _fmt(rhs))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def read_lp(path):
    from .subsolver import MilpInstance

    toks = Path(path).read_text().splitlines()
    it = iter(toks)
    if next(it).strip() != HEADER:
        raise ValueError("not a blockmilp LP file")
    n = int(next(it).split()[1])
    if next(it).strip() != "minimize":
        raise ValueError("expected 'minimize'")
    obj = np.array([float(v) for v in next(it).split()])
    if next(it).strip() != "bounds":
        raise ValueError("expected 'bounds'")
    lo, hi = np.zeros(n), np.zeros(n)
    for i in range(n):
        a, b = next(it).split()
        lo[i], hi[i] = float(a), float(b)
    if next(it).strip() != "integers":
        raise ValueError("expected 'integers'")
    integ = np.zeros(n, bool)
    line = next(it).split()
    integ[[int(i) for i in line]] = True
    eq_n = int(next(it).split()[1])
    eq, eqr = [], []
    for _ in range(eq_n):
        vals = [float(v) for v in next(it).split()]
        eq.append(vals[:n])
        eqr.append(vals[n])
    le_n = int(next(it).split()[1])
    le, ler = [], []
    for _ in range(le_n):
        vals = [float(v) for v in next(it).split()]
        le.append(vals[:n])
        ler.append(vals[n])
    if next(it).strip() != "end":
        raise ValueError("expected 'end'")
    return MilpInstance.make(obj, lo, hi, integ,
                             np.array(eq) if eq else None, np.array(eqr) if eq else None,
                             np.array(le) if le else None, np.array(ler) if le else None)


def write_solution(path, status: str, x=None):
    lines = [f"status {status}"]
    if x is not None:
        lines += [f"x{i} {_fmt(v)}" for i, v in enumerate(x)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_solution(path, n):
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if head[0] != "status":
        raise ValueError("malformed solution file")
    status = head[1]
    if status != "optimal":
        return status, None
    x = np.zeros(n)
    for ln in lines[1:]:
        if not ln.strip():
            continue
        name, val = ln.split()
        x[int(name[1:])] = float(val)
    return status, x


def solve_external(instance, opts, cmd: str):
    """Round-trip through the configured executable.  The external solver is
    trusted for optimality; the point is still checked against the instance
    at the caller's feasibility tolerance."""
    from .subsolver import Status, SubSolveResult

    with tempfile.TemporaryDirectory(prefix="blockmilp-") as td:
        lp = str(Path(td) / "instance.lp")
        sol = str(Path(td) / "solution.sol")
        write_lp(instance, lp)
        proc = subprocess.run(shlex.split(cmd) + [lp, sol], capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"external solver failed (exit {proc.returncode}): "
                               f"{proc.stderr.strip()[:500]}")
        status, x = read_solution(sol, instance.n)
    if status == "infeasible":
        return SubSolveResult(Status.INFEASIBLE, None, np.inf, np.inf, 0.0)
    if x is None:
        raise RuntimeError(f"external solver returned status {status!r}")
    viol = 0.0
    if instance.eq_matrix.shape[0]:
        viol = max(viol, float(np.abs(instance.eq_matrix @ x - instance.eq_rhs).max()))
    if instance.ineq_matrix.shape[0]:
        viol = max(viol, float(np.maximum(instance.ineq_matrix @ x - instance.ineq_rhs, 0).max()))
    if viol > max(opts.feas_tol, 1e-6) * 100:
        raise RuntimeError(f"external solution violates constraints by {viol}")
    value = float(instance.objective @ x)
    return SubSolveResult(Status.OPTIMAL, x, value, value, 0.0)
