"""Command-line entry point: ``dogip {bench,verify,solve,quad,tables}``.

Exit codes: 0 success, 1 failed verification or solver non-convergence,
2 configuration error, 3 resource refusal.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .assembly import assemble_elliptic_matrix, assemble_rhs, assemble_wp_matrix
from .coefficients import matrix_field, scalar_field
from .dofmap import build_continuous_dofmap
from .errors import DogipError
from .mesh import build_structured_mesh
from .metrics import EfficiencyReport, build_report, estimated_entries, round_half_up
from .operators import build_elliptic_dogip, build_wp_dogip
from .quadrature import exactness_error, grundmann_moller
from .reference import MAX_PRIMAL_ORDER, build_interp_elliptic, build_interp_wp
from .solver import BcSpec, apply_dirichlet, cg_solve
from .verification import TOLERANCE, VerifyCase, default_cases, run_sweep

DEFAULT_MEM_CAP = 200_000_000
BENCH_PERTURB = 0.2


class ConfigError(ValueError):
    pass


class ResourceRefused(RuntimeError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    d: int | None = None
    pairs: list = field(default_factory=list)
    N: list = field(default_factory=list)
    k: list = field(default_factory=list)
    problem: str = "wp"
    m: str | None = None
    M: str | None = None
    f: str | None = None
    dirichlet: str | None = None
    exact: str | None = None
    operator: str = "both"
    quad_degree: int | None = None
    degree: int | None = None
    out: str | None = None
    format: str = "text"
    serial: bool = False
    mem_cap: int = DEFAULT_MEM_CAP
    perturb: float = 0.0
    seed: int = 0
    vectors: int = 10
    tol: float = 1e-12
    inject_fault: bool = False
    show: bool = False

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**{key: val for key, val in mapping.items() if val is not None})
        cfg.validate()
        return cfg

    def validate(self):
        if self.d is not None and self.d not in (2, 3):
            raise ConfigError(f"--d must be 2 or 3, got {self.d}")
        problems = ("wp", "elliptic", "both") if self.subcommand == "verify" else ("wp", "elliptic")
        if self.problem not in problems:
            raise ConfigError(f"--problem must be one of {problems}")
        if self.format not in ("text", "csv", "json"):
            raise ConfigError("--format must be text, csv or json")
        if self.subcommand == "bench" and not self.pairs:
            raise ConfigError("bench needs --pairs N:k[,N:k...]")
        if self.subcommand == "quad" and (self.degree is None or self.degree < 0):
            raise ConfigError("quad needs a non-negative --degree")
        if self.mem_cap <= 0:
            raise ConfigError("--mem-cap must be positive")
        if not 0 <= self.perturb < 0.5:
            raise ConfigError("--perturb must lie in [0, 0.5)")
        for N, k in self.pairs + [(n, None) for n in self.N] + [(None, k) for k in self.k]:
            if N is not None and N < 1:
                raise ConfigError(f"N must be >= 1, got {N}")
            if k is not None and self.d is not None and not 1 <= k <= MAX_PRIMAL_ORDER[self.d]:
                raise ConfigError(f"k={k} outside [1, {MAX_PRIMAL_ORDER[self.d]}] for d={self.d}")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _pairs(text):
    out = []
    for item in text.split(","):
        try:
            N, k = item.split(":")
            out.append((int(N), int(k)))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected N:k[,N:k...], got {text!r}") from exc
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser(defaults=None):
    """Argument parser; ``defaults`` (e.g. from ``--config``) replace built-in defaults."""
    parser = _Parser(prog="dogip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, perturb=0.0):
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--problem", default="wp")
        p.add_argument("--m", help="scalar weight, polynomial in x,y,z (wp)")
        p.add_argument("--M", help="identity | diag:a,b[,c] | iso:EXPR (elliptic)")
        p.add_argument("--quad-degree", type=int)
        p.add_argument("--out")
        p.add_argument("--format", default="text")
        p.add_argument("--serial", action="store_true")
        p.add_argument("--perturb", type=float, default=perturb,
                       help="interior vertex jitter in units of 1/N")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON file with default option values")

    p = sub.add_parser("bench", help="efficiency tables")
    common(p, perturb=BENCH_PERTURB)
    p.add_argument("--pairs", type=_pairs)
    p.add_argument("--mem-cap", type=int, default=DEFAULT_MEM_CAP)

    p = sub.add_parser("verify", help="CSR vs DoGIP product sweep")
    common(p)
    p.set_defaults(problem="both", d=None)
    p.add_argument("--N", type=_int_list)
    p.add_argument("--k", type=_int_list)
    p.add_argument("--vectors", type=int, default=10)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("solve", help="solve one system with CG")
    common(p)
    p.add_argument("--N", type=_int_list, default=[4])
    p.add_argument("--k", type=_int_list, default=[1])
    p.add_argument("--f")
    p.add_argument("--dirichlet", help="boundary data expression (elliptic)")
    p.add_argument("--exact", help="exact solution expression for error norms")
    p.add_argument("--operator", default="both", choices=("csr", "dogip", "both"))
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("quad", help="quadrature point count and exactness")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--degree", type=int)
    p.add_argument("--format", default="text")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("tables", help="reference interpolation tables")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=_int_list, default=[1])
    p.add_argument("--problem", default="wp")
    p.add_argument("--show", action="store_true")
    p.add_argument("--format", default="text")
    p.add_argument("--out")
    p.add_argument("--config")
    if defaults:
        for sp in sub.choices.values():
            sp.set_defaults(**defaults)
    return parser


def parse_config(argv):
    """Parse ``argv`` into a validated :class:`RunConfig`.

    Values from a ``--config`` JSON file act as defaults; explicit flags win.
    Unknown keys in the file are rejected.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    defaults = {}
    if known.config:
        with open(known.config) as fh:
            defaults = json.load(fh)
        if not isinstance(defaults, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(defaults) - {f.name for f in dataclasses.fields(RunConfig)}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "pairs" in defaults:
            defaults["pairs"] = [tuple(p) for p in defaults["pairs"]]
    ns = vars(build_parser(defaults).parse_args(argv))
    ns.pop("config", None)
    return RunConfig.from_mapping(ns)


# -- rendering ---------------------------------------------------------------

def _render_rows(rows, fmt, fieldnames, text_render):
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: repr(v) if isinstance(v, float) else v for key, v in row.items()})
        return buf.getvalue()
    return text_render(rows)


def render_reports(reports, fmt):
    rows = [r.as_dict() for r in reports]

    def text(rows):
        head = (f"{'N':>6} {'k':>3} {'mem A':>14} {'mem A_T':>8} {'mem A^DoGIP':>14} "
                f"{'mem A_T^DoGIP':>14} {'nnz Bhat':>9} {'mem.':>6} {'comp.':>6}")
        lines = [head, "-" * len(head)]
        for r in rows:
            lines.append(
                f"{r['N']:>6,} {r['k']:>3} {r['mem_a']:>14,} {r['mem_a_t']:>8,} {r['mem_a_dogip']:>14,} "
                f"{r['mem_a_dogip_t']:>14,} {r['nnz_bhat']:>9,} "
                f"{round_half_up(r['memory_efficiency']):>6.2f} {round_half_up(r['computational_efficiency']):>6.2f}")
        return "\n".join(lines) + "\n"

    return _render_rows(rows, fmt, EfficiencyReport.fieldnames(), text)


def parse_reports(text, fmt):
    """Inverse of :func:`render_reports` for the machine formats."""
    if fmt == "json":
        rows = json.loads(text)
    elif fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
    else:
        raise ValueError("only csv and json output can be parsed back")
    return [EfficiencyReport.from_dict(r) for r in rows]


def _emit(cfg, text):
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def _coefficient(cfg):
    return cfg.m if cfg.problem == "wp" else cfg.M


def cmd_bench(cfg):
    d = cfg.d or 2
    for N, k in cfg.pairs:
        est = estimated_entries(d, N, k)
        if est > cfg.mem_cap:
            raise ResourceRefused(f"N={N}, k={k}: estimated {est:,} entries exceeds --mem-cap {cfg.mem_cap:,}")
    reports = []
    for N, k in cfg.pairs:
        mesh = build_structured_mesh(d, N, perturb=cfg.perturb, seed=cfg.seed)
        reports.append(build_report(mesh, k, cfg.problem, _coefficient(cfg), cfg.quad_degree))
    _emit(cfg, render_reports(reports, cfg.format))
    return reports


def cmd_verify(cfg):
    ds = (cfg.d,) if cfg.d else (2, 3)
    problems = ("wp", "elliptic") if cfg.problem == "both" else (cfg.problem,)
    kwargs = {"ds": ds, "problems": problems}
    if cfg.N:
        kwargs["Ns"] = tuple(cfg.N)
    if cfg.k:
        kwargs["ks"] = tuple(cfg.k)
    if cfg.m:
        kwargs["m_specs"] = (cfg.m,)
    if cfg.M:
        kwargs["M_specs"] = (cfg.M,)
    cases = default_cases(**kwargs)
    for c in cases:
        c.perturb, c.seed = cfg.perturb, cfg.seed
    results = run_sweep(cases, n_vectors=cfg.vectors, seed=cfg.seed, fault=cfg.inject_fault)
    rows = [{"case": r.case.label, "discrepancy": r.discrepancy, "passed": r.passed} for r in results]

    def text(rows):
        lines = [f"{'PASS' if r['passed'] else 'FAIL'}  {r['discrepancy']:.3e}  {r['case']}" for r in rows]
        lines.append(f"tolerance {TOLERANCE:g}: {sum(r['passed'] for r in rows)}/{len(rows)} passed")
        return "\n".join(lines) + "\n"

    _emit(cfg, _render_rows(rows, cfg.format, ["case", "discrepancy", "passed"], text))
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"verification failed: {r.case.label}", file=sys.stderr)
    return 1 if failed else 0


def solve_problem(cfg):
    """Assemble and solve one system along the requested operator paths."""
    d, N, k = cfg.d or 2, cfg.N[0], cfg.k[0]
    mesh = build_structured_mesh(d, N, perturb=cfg.perturb, seed=cfg.seed)
    V = build_continuous_dofmap(mesh, k)
    f = scalar_field(cfg.f if cfg.f is not None else ("x+y" if cfg.problem == "wp" else "0"), d)
    b = assemble_rhs(mesh, V, f, rule=None if cfg.quad_degree is None else cfg.quad_degree)
    if cfg.problem == "wp":
        coeff = scalar_field(cfg.m or 1.0, d)
        ops = {"csr": lambda: assemble_wp_matrix(mesh, V, coeff, cfg.quad_degree),
               "dogip": lambda: build_wp_dogip(mesh, k, coeff, cfg.quad_degree, V)}
        bc = BcSpec(np.array([], dtype=np.int64), np.array([]))
    else:
        coeff = matrix_field(cfg.M or "identity", d)
        ops = {"csr": lambda: assemble_elliptic_matrix(mesh, V, coeff, cfg.quad_degree),
               "dogip": lambda: build_elliptic_dogip(mesh, k, coeff, cfg.quad_degree, V)}
        if cfg.dirichlet is None:
            raise ConfigError("elliptic solve needs --dirichlet boundary data")
        g = scalar_field(cfg.dirichlet, d)
        idx = V.boundary_dofs()
        bc = BcSpec(idx, g(V.coords[idx]))
    names = ("csr", "dogip") if cfg.operator == "both" else (cfg.operator,)
    exact = scalar_field(cfg.exact, d)(V.coords) if cfg.exact else None
    results = {}
    for name in names:
        op, rhs = apply_dirichlet(ops[name](), b, bc)
        res = cg_solve(op, rhs, tol=cfg.tol)
        summary = {"operator": name, "iterations": res.iterations, "residual": res.residuals[-1],
                   "converged": res.converged, "dim": V.dim}
        if exact is not None:
            summary["max_nodal_error"] = float(np.abs(res.x - exact).max())
        results[name] = (res, summary)
    return V, results


def cmd_solve(cfg):
    _, results = solve_problem(cfg)
    rows = [s for _, s in results.values()]
    if len(results) == 2:
        diff = float(np.abs(results["csr"][0].x - results["dogip"][0].x).max())
        for r in rows:
            r["csr_dogip_difference"] = diff
    fields = sorted({key for r in rows for key in r}, key=lambda s: (s != "operator", s))

    def text(rows):
        return "".join(" ".join(f"{key}={r[key]}" for key in fields if key in r) + "\n" for r in rows)

    _emit(cfg, _render_rows(rows, cfg.format, fields, text))
    return 0 if all(r["converged"] for r in rows) else 1


def cmd_quad(cfg):
    rule = grundmann_moller(cfg.d or 2, cfg.degree)
    row = {"d": rule.d, "requested_degree": cfg.degree, "degree": rule.degree,
           "n_points": rule.n_points, "all_weights_positive": rule.positive,
           "weight_sum": float(rule.weights.sum()), "max_relative_error": exactness_error(rule)}
    text = lambda rows: "".join(f"{key}: {v}\n" for key, v in rows[0].items())
    _emit(cfg, _render_rows([row], cfg.format, list(row), text))
    return 0


def cmd_tables(cfg):
    d = cfg.d or 2
    rows, shows = [], []
    for k in cfg.k:
        t = build_interp_wp(d, k) if cfg.problem == "wp" else build_interp_elliptic(d, k)
        rows.append({"d": d, "k": k, "problem": cfg.problem, "W_T": t.W_T, "V_T": t.V_T,
                     "nnz_bhat": t.nnz, "nnz_pm1_bhat": t.nnz_pm1})
        if cfg.show:
            with np.printoptions(precision=6, suppress=True, linewidth=160):
                shows.append(f"k={k}\n{t.table}\n")

    def text(rows):
        out = "".join(" ".join(f"{key}={v}" for key, v in r.items()) + "\n" for r in rows)
        return out + "".join(shows)

    _emit(cfg, _render_rows(rows, cfg.format, list(rows[0]), text))
    return 0


COMMANDS = {"bench": cmd_bench, "verify": cmd_verify, "solve": cmd_solve,
            "quad": cmd_quad, "tables": cmd_tables}


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except (ConfigError, DogipError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    _parallel.set_serial(cfg.serial)
    try:
        result = COMMANDS[cfg.subcommand](cfg)
    except ResourceRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DogipError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    finally:
        _parallel.set_serial(False)
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
