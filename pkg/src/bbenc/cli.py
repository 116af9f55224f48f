"""``bbenc`` command line: block-encoding and evolution benchmarks, sweeps and self-checks.

Config files are flat ``key = value`` lines (``#`` starts a comment); list
values are comma separated.  ``--set key=value`` overrides file entries.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .builders import EXTRA_OPERATORS, METHODS, OPERATORS, build_be, qsvt_circuit
from .circuit import MAX_DENSE_QUBITS, dumps
from .errors import BbencError, DomainError, ParityError, SolverError, StructureError
from .lattice import DEFAULT_PHI_MAX, DigitizationGrid
from .synthesis import transpile

COLUMNS = ("method", "operator", "n_q", "t", "eps_target", "eps_measured", "rotations", "cnots", "ancillas",
           "queries", "scale_factor", "residual")
EVOLVE_METHODS = ("pf2", "pf4", "gqsp")
STRUCTURE_ONLY = "structure-only"

DEFAULTS = {
    "method": None,
    "operator": ",".join(OPERATORS),
    "n_q": "2,3,4",
    "phi_max": str(DEFAULT_PHI_MAX),
    "m": "1",
    "lam": "32",
    "g": "1",
    "tol": "1e-12",
    "verify_tol": "1e-8",
    "sites": "1",
    "potential": "v1",
    "t": "10",
    "eps": "1e-2,1e-3,1e-4,1e-6",
    "steps": "",
    "inject_fault": "",
    "evolve_n_q": "3",
}


class UsageError(Exception):
    pass


# -- config ---------------------------------------------------------------------------

def parse_config(text: str) -> Dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        if k not in DEFAULTS:
            raise UsageError(f"config line {lineno}: unknown key {k!r}")
        out[k] = v.strip()
    return out


class Scenario:
    """Resolved settings for one command."""

    def __init__(self, command: str, values: Dict[str, str]):
        self.command = command
        v = dict(DEFAULTS)
        v.update(values)
        self.raw = v
        try:
            default_methods = ",".join(METHODS) if command == "be" else "pf2,gqsp"
            if command == "evolve" and "n_q" not in values:
                v["n_q"] = v["evolve_n_q"]
            self.methods = _strs(v["method"] or default_methods)
            self.operators = _strs(v["operator"])
            self.n_q = [int(x) for x in _strs(v["n_q"])]
            self.phi_max = float(v["phi_max"])
            self.m, self.lam, self.g = float(v["m"]), float(v["lam"]), float(v["g"])
            self.tol = float(v["tol"])
            self.verify_tol = float(v["verify_tol"])
            self.sites = int(v["sites"])
            self.potential = v["potential"]
            self.t = [float(x) for x in _strs(v["t"])]
            self.eps = [float(x) for x in _strs(v["eps"])]
            self.steps = int(v["steps"]) if v["steps"] else None
            self.inject_fault = v["inject_fault"]
        except ValueError as exc:
            raise UsageError(f"bad config value: {exc}") from exc
        if not (self.methods and self.operators and self.n_q and self.t and self.eps):
            raise UsageError("ranges must be non-empty")
        if any(n < 1 for n in self.n_q) or self.phi_max <= 0:
            raise UsageError("n_q must be >= 1 and phi_max > 0")
        if any(not (0 < e < 1) for e in self.eps):
            raise UsageError("eps values must lie in (0, 1)")

    def methods_for(self, allowed) -> List[str]:
        bad = [m for m in self.methods if m not in allowed]
        if bad:
            raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(allowed)}")
        return self.methods


def _strs(s: str) -> List[str]:
    return [x.strip() for x in str(s).split(",") if x.strip()]


# -- rows ------------------------------------------------------------------------------

def _row(**kw) -> dict:
    row = {c: "" for c in COLUMNS}
    for k, v in kw.items():
        if k not in row:
            raise KeyError(k)
        row[k] = v
    return row


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def rows_to_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: List[dict]) -> str:
    return json.dumps([{c: _fmt(r[c]) for c in COLUMNS} for r in rows], indent=1) + "\n"


class RunResult:
    def __init__(self):
        self.rows: List[dict] = []
        self.failures: List[str] = []
        self.last_circuit = None


def run_be(sc: Scenario, result: RunResult = None) -> RunResult:
    result = result or RunResult()
    methods = sc.methods_for(METHODS)
    for name in sc.operators:
        if name not in OPERATORS + EXTRA_OPERATORS:
            raise UsageError(f"unknown operator {name!r}; choose from {', '.join(OPERATORS + EXTRA_OPERATORS)}")
    for name in sc.operators:
        for method in methods:
            for n_q in sc.n_q:
                grid = DigitizationGrid(n_q, sc.phi_max)
                try:
                    be = build_be(method, name, grid, tol=sc.tol, m=sc.m, lam=sc.lam, g=sc.g)
                except (ParityError, DomainError, SolverError, StructureError) as exc:
                    result.rows.append(_row(method=method, operator=name, n_q=n_q,
                                            residual=f"error:{type(exc).__name__}"))
                    continue
                tc, counts = transpile(be.circuit)
                if be.circuit.num_qubits > MAX_DENSE_QUBITS:
                    residual = STRUCTURE_ONLY
                else:
                    residual = be.residual()
                    if not residual <= sc.verify_tol:
                        result.failures.append(f"{method}/{name}/n_q={n_q}: residual {residual:.3e}")
                result.rows.append(_row(method=method, operator=name, n_q=n_q, rotations=counts.rotations,
                                        cnots=counts.cnots, ancillas=be.num_ancillas, queries=be.queries,
                                        scale_factor=be.alpha, residual=residual))
                result.last_circuit = tc
    return result


def run_evolve(sc: Scenario, result: RunResult = None) -> RunResult:
    from .evolution import (HamiltonianSpec, build_hamiltonian_matrix, gqsp_evolve, hamiltonian_be,
                            steps_for_eps, trotter_evolve)
    from .qubitization import make_walk

    result = result or RunResult()
    methods = sc.methods_for(EVOLVE_METHODS)
    label = f"H{sc.sites}"
    for n_q in sc.n_q:
        spec = HamiltonianSpec(sc.sites, DigitizationGrid(n_q, sc.phi_max), sc.potential, sc.m, sc.lam, sc.g)
        if spec.n_system > 10:
            raise UsageError("evolution runs need dense matrices; keep sites * n_q <= 10")
        H = build_hamiltonian_matrix(spec)
        walk = None
        for method in methods:
            cost = None
            for t in sc.t:
                for eps in sc.eps:
                    if method == "gqsp":
                        if walk is None:
                            walk = make_walk(hamiltonian_be(spec))
                        circ, rep = gqsp_evolve(walk, t, eps, H=H, cost_model=cost)
                        cost = rep.extra["cost_model"]
                        result.rows.append(_row(method=method, operator=label, n_q=n_q, t=t, eps_target=eps,
                                                eps_measured=rep.eps_measured, rotations=rep.counts.rotations,
                                                cnots=rep.counts.cnots, ancillas=rep.counts.ancillas,
                                                queries=rep.queries, scale_factor=walk.alpha))
                        result.last_circuit = transpile(walk.circuit)[0]
                    else:
                        order = int(method[2])
                        try:
                            steps = sc.steps or steps_for_eps(spec, t, eps, order, H)
                        except SolverError as exc:
                            result.rows.append(_row(method=method, operator=label, n_q=n_q, t=t, eps_target=eps,
                                                    residual=f"error:{type(exc).__name__}"))
                            continue
                        circ, rep = trotter_evolve(spec, t, steps, order, eps, cost_model=cost, H=H)
                        cost = rep.extra["cost_model"]
                        result.rows.append(_row(method=method, operator=label, n_q=n_q, t=t, eps_target=eps,
                                                eps_measured=rep.eps_measured, rotations=rep.counts.rotations,
                                                cnots=rep.counts.cnots, ancillas=0, queries=steps))
                        result.last_circuit = transpile(circ)[0]
                    if sc.steps is None and not rep.eps_measured <= eps:
                        result.failures.append(f"{method}/{label}/t={t}/eps={eps}: measured {rep.eps_measured:.3e}")
    return result


def run_sweep(sc: Scenario) -> RunResult:
    """BE rows for the block-encoding methods, then evolution rows (``evolve_n_q``)."""
    given = _strs(sc.raw["method"] or "")
    be_methods = [m for m in given if m in METHODS] if given else list(METHODS)
    ev_methods = [m for m in given if m in EVOLVE_METHODS] if given else list(EVOLVE_METHODS)
    unknown = [m for m in given if m not in METHODS and m not in EVOLVE_METHODS]
    if unknown:
        raise UsageError(f"unknown method(s) {unknown}")
    res = RunResult()
    if be_methods:
        run_be(Scenario("be", {**sc.raw, "method": ",".join(be_methods)}), res)
    if ev_methods:
        run_evolve(Scenario("evolve", {**sc.raw, "method": ",".join(ev_methods), "n_q": sc.raw["evolve_n_q"]}), res)
    return res


# -- verification suite ------------------------------------------------------------------

def _check_diag_bounds(sc):
    from .circuit import unitary_of, Circuit, DiagonalPhase
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        ph = rng.uniform(-np.pi, np.pi, 1 << n)
        tc, c = transpile(Circuit(n, (DiagonalPhase(tuple(range(n)), ph),)))
        if c.rotations > (1 << n) - 1 or c.cnots > max(0, (1 << n) - 2):
            return False, f"n={n}: {c}"
        worst = max(worst, float(np.max(np.abs(np.diag(unitary_of(tc)) - np.exp(1j * ph)))))
    return worst <= 1e-12, f"max error {worst:.1e}"


def _check_headline(sc):
    be = build_be("love-lcu", "v1", DigitizationGrid(4, sc.phi_max))
    c = transpile(be.circuit)[1]
    return c.rotations == 13, f"{c.rotations} rotations"


def _check_be(sc, fault=False):
    worst = 0.0
    for n_q in (2, 3):
        grid = DigitizationGrid(n_q, sc.phi_max)
        for name in OPERATORS:
            for method in METHODS:
                be = build_be(method, name, grid)
                if fault and method == "qsvt":
                    from .qsp import SymmetricPhases
                    ph = np.array(be.metadata["phases"])
                    ph[0] += 1e-3
                    ph[-1] += 1e-3
                    base = be.metadata["base"]
                    be = be.with_circuit(qsvt_circuit(base, SymmetricPhases(ph, "qsvt")))
                worst = max(worst, be.residual())
    return worst <= sc.verify_tol, f"max residual {worst:.1e}"


def _check_agreement(sc):
    worst = 0.0
    grid = DigitizationGrid(3, sc.phi_max)
    for name in OPERATORS:
        blocks = []
        for method in ("qsvt", "qetu-exp", "qetu-arccos", "love-lcu"):
            be = build_be(method, name, grid)
            blocks.append(be.block() * be.alpha)
        for i in range(len(blocks)):
            for j in range(i):
                worst = max(worst, float(np.max(np.abs(blocks[i] - blocks[j]))))
    return worst <= 1e-7, f"max pairwise deviation {worst:.1e}"


def _check_walk(sc):
    from .evolution import HamiltonianSpec, hamiltonian_be
    from .qubitization import make_walk, walk_block_error
    spec = HamiltonianSpec(1, DigitizationGrid(2, sc.phi_max))
    err = walk_block_error(make_walk(hamiltonian_be(spec)))
    return err <= 1e-8, f"max block deviation {err:.1e}"


def _check_s(sc):
    from .qubitization import verify_s
    worst = 0.0
    grid = DigitizationGrid(2, sc.phi_max)
    for method in ("qsvt", "qetu-exp", "qetu-arccos", "love-lcu"):
        rep = verify_s(build_be(method, "v1", grid))
        worst = max(worst, rep.commutation, rep.cond_block, rep.cond_square)
    return worst <= 1e-10, f"max S deviation {worst:.1e}"


def _check_gqsp(sc):
    from .evolution import HamiltonianSpec, gqsp_evolve, hamiltonian_be
    from .qubitization import make_walk
    spec = HamiltonianSpec(1, DigitizationGrid(3, sc.phi_max))
    walk = make_walk(hamiltonian_be(spec))
    worst = 0.0
    cost = None
    for eps in (1e-3, 1e-8):
        _, rep = gqsp_evolve(walk, 1.0, eps, cost_model=cost)
        cost = rep.extra["cost_model"]
        worst = max(worst, rep.eps_measured / eps)
    return worst <= 1.0, f"max eps_measured/eps {worst:.2f}"


def _check_trotter(sc):
    from .evolution import HamiltonianSpec, build_hamiltonian_matrix, exact_evolution, trotter_unitary
    spec = HamiltonianSpec(1, DigitizationGrid(3, sc.phi_max))
    H = build_hamiltonian_matrix(spec)
    U = exact_evolution(H, 1.0)
    out = []
    for order, steps in ((2, (400, 4000)), (4, (100, 1000))):
        e = [np.linalg.norm(trotter_unitary(spec, 1.0, s, order) - U, 2) for s in steps]
        out.append(math.log10(e[0] / e[1]))
    ok = abs(out[0] - 2) <= 0.1 and abs(out[1] - 4) <= 0.2
    return ok, f"slopes {out[0]:.2f}, {out[1]:.2f}"


def _check_qsp(sc):
    from .poly import chebyshev_interpolate
    from .qsp import eval_wx, solve_wx_phases
    f = lambda x: 0.5 * np.cos(3 * x)
    s = chebyshev_interpolate(f, 64, "even")
    ph = solve_wx_phases(s, use_cache=False)
    x = np.cos(np.linspace(0, np.pi, 257))
    r = float(np.max(np.abs(eval_wx(ph.phases, x)[:, 0, 0].real - s(x))))
    return r <= 1e-10, f"degree 64 residual {r:.1e}"


def _check_jacobi(sc):
    from .poly import jacobi_anger
    th = np.linspace(-np.pi, np.pi, 2001)
    worst = 0.0
    for t, eps in ((5.0, 1e-6), (50.0, 1e-10)):
        tab = jacobi_anger(t, eps)
        worst = max(worst, float(np.max(np.abs(tab(th) - np.exp(-1j * t * np.cos(th))))) / eps)
    return worst <= 1.0, f"max error/eps {worst:.2f}"


VERIFY_CHECKS = [
    ("diagonal-synthesis-bounds", _check_diag_bounds),
    ("love-lcu-v1-13-rotations", _check_headline),
    ("block-encoding-residuals", _check_be),
    ("method-agreement", _check_agreement),
    ("walk-spectrum", _check_walk),
    ("s-operator-identities", _check_s),
    ("gqsp-error", _check_gqsp),
    ("trotter-order", _check_trotter),
    ("qsp-phase-residual", _check_qsp),
    ("jacobi-anger-error", _check_jacobi),
]


def run_verify(sc: Scenario = None, out=None) -> int:
    """Run the invariant suite; prints a summary table and returns the exit status."""
    sc = sc or Scenario("verify", {})
    out = sys.stdout if out is None else out
    failed = []
    for name, fn in VERIFY_CHECKS:
        t0 = time.time()
        try:
            if fn is _check_be:
                ok, info = fn(sc, fault=sc.inject_fault == "phase")
            else:
                ok, info = fn(sc)
        except BbencError as exc:  # pragma: no cover - reported, not raised
            ok, info = False, f"{type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failed.append(name)
        print(f"{status}  {name:<28} {info}  ({time.time() - t0:.1f}s)", file=out)
    print(f"{len(VERIFY_CHECKS) - len(failed)}/{len(VERIFY_CHECKS)} checks passed", file=out)
    if failed:
        print("failed: " + ", ".join(failed), file=out)
    return 1 if failed else 0


# -- entry point --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bbenc", description="Block-encoding and evolution benchmarks.")
    p.add_argument("command", choices=("be", "evolve", "sweep", "verify"))
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config entry")
    p.add_argument("--out", help="CSV (or JSON with --json) output file; default stdout")
    p.add_argument("--json", action="store_true", help="write JSON records instead of CSV")
    p.add_argument("--dump-circuit", metavar="FILE", help="write the last transpiled circuit")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        values = {}
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise UsageError(f"config file {args.config} not found")
            values = parse_config(path.read_text())
            os.environ.setdefault("BBENC_CACHE_DIR", str(path.resolve().parent / ".cache"))
        for item in args.set:
            values.update(parse_config(item))
        sc = Scenario(args.command, values)
        if args.command == "verify":
            return run_verify(sc)
        runner: Callable = {"be": run_be, "evolve": run_evolve, "sweep": run_sweep}[args.command]
        res = runner(sc)
    except UsageError as exc:
        print(f"bbenc: {exc}", file=sys.stderr)
        return 2
    text = rows_to_json(res.rows) if args.json else rows_to_csv(res.rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.dump_circuit and res.last_circuit is not None:
        Path(args.dump_circuit).write_text(dumps(res.last_circuit))
    for f in res.failures:
        print(f"verification failure: {f}", file=sys.stderr)
    return 1 if res.failures else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
