"""Command-line interface ``cpdil``.

Exit codes: 0 all gates pass, 1 a verification gate failed (named in the
output), 2 unreadable or malformed input, 3 the regular kernel is not
positive definite.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import io
from .channel import (
    choi_distance,
    commutation_defect,
    is_contractive,
    is_cp,
    is_endomorphism,
    is_unital,
    minimal_kraus,
)
from .config import Config, load_config
from .dilate import (
    build_kernel,
    check_pd,
    kolmogorov,
    verify_dilation_eq,
    verify_dilation_theorem,
    verify_endomorphism,
    verify_minimality,
)
from .errors import CpdilError, NotCommuting, NotCP, NotPD, SchemaError
from .extend import SampledSemigroup, extend_to, two_param_assemble
from .prodsys import make_system, verify_associativity, verify_commutation_relation, verify_rep_identity
from .report import Report, _plain
from .semigroup import CpSemigroup
from .strongcomm import sc_semigroup_check, witness_unitary

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_NOT_PD = 0, 1, 2, 3


class Run:
    """Ordered gate reports for one command."""

    def __init__(self, command: str, as_json: bool):
        self.command = command
        self.as_json = as_json
        self.reports: list[Report] = []
        self.extra: dict = {}
        self.failed: str | None = None

    def gate(self, rep: Report) -> Report:
        self.reports.append(rep)
        if not rep.passed and self.failed is None:
            self.failed = rep.name
        return rep

    def manifest(self) -> dict:
        return {r.name: {"residual": r.residual, "tol": r.tol, "passed": r.passed} for r in self.reports}

    def finish(self, code: int | None = None, lines: list[str] | None = None) -> int:
        if code is None:
            code = EXIT_OK if self.failed is None else EXIT_FAIL
        if self.as_json:
            doc = {
                "command": self.command,
                "exit_code": code,
                "passed": code == EXIT_OK,
                "failed_gate": self.failed,
                "reports": [r.to_dict() for r in self.reports],
                **_plain(self.extra),
            }
            print(json.dumps(doc, indent=1))
        else:
            for line in lines or []:
                print(line)
            for r in self.reports:
                mark = "PASS" if r.passed else "FAIL"
                print(f"{r.name:<24} {mark}  residual={r.residual:.3e}  tol={r.tol:.1e}")
            if self.failed:
                print(f"failed gate: {self.failed}")
        return code


def _config(args) -> Config:
    cfg = load_config(args.config)
    over = {}
    if getattr(args, "tol", None) is not None:
        over["tol_verify"] = args.tol
    for name in ("level", "radius", "horizon", "seed"):
        if getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    return cfg.updated(**over)


# -- commands --------------------------------------------------------------------------
def cmd_check_cp(args) -> int:
    run = Run("check-cp", args.json)
    cfg = _config(args)
    ch = io.channel_from_doc(io.read_json(args.channel))
    flags = {
        "cp": is_cp(ch, cfg.tol_verify),
        "unital": is_unital(ch, cfg.tol_verify),
        "contractive": is_contractive(ch, cfg.tol_verify),
    }
    run.extra["flags"] = flags
    w = np.linalg.eigvalsh(0.5 * (ch.choi + ch.choi.conj().T))
    run.gate(Report("cp", max(0.0, -float(w[0])), cfg.tol_verify, flags["cp"], {"choi_min_eig": float(w[0])}))
    line = ", ".join(f"{k.upper() if k == 'cp' else k}: {str(v).lower()}" for k, v in flags.items())
    return run.finish(lines=[line])


def cmd_kraus(args) -> int:
    run = Run("kraus", args.json)
    cfg = _config(args)
    ch = io.channel_from_doc(io.read_json(args.channel))
    try:
        fam = minimal_kraus(ch, cfg.rank_threshold, cfg.tol_verify)
    except NotCP as exc:
        w = float(np.linalg.eigvalsh(0.5 * (ch.choi + ch.choi.conj().T))[0])
        run.gate(Report("cp", -w, cfg.tol_verify, False, {"error": str(exc)}))
        return run.finish()
    rebuilt = fam.channel()
    run.gate(Report.from_residual("kraus_reconstruction", choi_distance(rebuilt, ch), cfg.tol_verify))
    run.extra.update({"rank": fam.rank, "kraus": [io.encode_matrix(k) for k in fam.ops]})
    lines = [f"rank {fam.rank}"] + [f"T_{i} = {np.round(k, 6).tolist()}" for i, k in enumerate(fam.ops)]
    return run.finish(lines=lines)


def cmd_sc_witness(args) -> int:
    run = Run("sc-witness", args.json)
    cfg = _config(args)
    a = io.channel_from_doc(io.read_json(args.first))
    b = io.channel_from_doc(io.read_json(args.second))
    try:
        fu = witness_unitary(a, b, cfg.tol_verify, cfg.rank_threshold)
    except NotCommuting as exc:
        run.gate(Report("commute", float(exc.defect or 0.0), cfg.tol_verify, False, {"error": str(exc)}))
        return run.finish()
    run.gate(Report.from_residual("witness_residual", fu.residual, cfg.tol_verify))
    run.gate(Report.from_residual("witness_unitarity", fu.unitarity, cfg.tol_verify))
    run.extra["u"] = io.encode_matrix(fu.u)
    u = np.round(fu.u, 10) + 0.0
    shown = u.real.tolist() if np.allclose(u.imag, 0) else u.tolist()
    return run.finish(lines=[f"u = {shown}"])


def _pair(args):
    r = io.load_dynamics(args.first)
    s = io.load_dynamics(args.second)
    if r.dim != s.dim:
        raise SchemaError("inputs act on different matrix algebras")
    if isinstance(r, CpSemigroup) != isinstance(s, CpSemigroup):
        raise SchemaError("inputs must both be semigroups or both be step channels")
    return r, s


def cmd_prodsys_verify(args) -> int:
    run = Run("prodsys-verify", args.json)
    cfg = _config(args)
    r, s = _pair(args)
    system = make_system(r, s, cfg.level, cfg.horizon, cfg.tol_verify)
    run.gate(verify_rep_identity(system, probes=cfg.probes, tol=cfg.tol_verify, seed=cfg.seed))
    run.gate(verify_commutation_relation(system, cfg.tol_verify))
    run.gate(verify_associativity(system, cfg.tol_verify))
    return run.finish()


def _not_pd(run: Run, exc: NotPD) -> int:
    rep = exc.report
    if rep is not None:
        run.gate(rep)
        br = rep.details.get("brehmer")
        if br is not None:
            run.extra["brehmer"] = br
        run.extra["witness"] = rep.details.get("witness")
    lines = [f"kernel not positive definite: {exc}"]
    if rep is not None and "brehmer" in rep.details:
        lines.append(f"Brehmer cp-side operator: {np.round(rep.details['brehmer']['cp_side'].real, 10).tolist()}")
    return run.finish(EXIT_NOT_PD, lines)


def _dilation(run: Run, cfg: Config, system):
    kernel = build_kernel(system, cfg.radius)
    rep = check_pd(kernel)
    if not rep.passed:
        raise NotPD(f"min eig {rep.details['min_eig']:.6g}", rep)
    run.gate(rep)
    return kolmogorov(kernel, cfg.rank_threshold)


def _verify_all(run: Run, cfg: Config, ds) -> None:
    run.gate(verify_dilation_theorem(ds, cfg.tol_verify))
    run.gate(verify_endomorphism(ds, cfg.probes, cfg.tol_verify, cfg.seed))
    run.gate(verify_dilation_eq(ds, probes=cfg.probes, tol=cfg.tol_verify, seed=cfg.seed))
    run.gate(verify_minimality(ds, tol=cfg.tol_verify))


def cmd_dilate(args) -> int:
    run = Run("dilate", args.json)
    cfg = _config(args)
    r, s = _pair(args)
    system = make_system(r, s, cfg.level, cfg.radius, cfg.tol_verify)
    try:
        ds = _dilation(run, cfg, system)
    except NotPD as exc:
        return _not_pd(run, exc)
    run.gate(verify_dilation_theorem(ds, cfg.tol_verify))
    run.extra["dim_K"] = ds.dim
    if args.out:
        io.write_json(args.out, io.dilation_to_doc(ds, r, s, cfg.level, run.manifest()))
    return run.finish(lines=[f"dim K = {ds.dim}"])


def cmd_verify(args) -> int:
    run = Run("verify", args.json)
    cfg = _config(args)
    ds, r, s, level, stored = io.dilation_from_doc(io.read_json(args.dilation))
    run.gate(Report.from_residual("stored_blocks", stored, cfg.tol_verify))
    _verify_all(run, cfg, ds)
    run.extra["dim_K"] = ds.dim
    return run.finish(lines=[f"dim K = {ds.dim}"])


def cmd_extend(args) -> int:
    run = Run("extend", args.json)
    cfg = _config(args)
    ss = SampledSemigroup(io.table_from_doc(io.read_json(args.table)), cfg.tol_verify)
    run.gate(ss.closure_defect())
    ch, rep = extend_to(ss, args.t, args.depth, tol=cfg.tol_verify)
    run.gate(rep)
    run.extra["channel"] = io.channel_to_doc(ch, kraus=False)
    return run.finish(lines=[f"t = {args.t}, depth = {args.depth}"])


def _extension_gates(run: Run, cfg: Config, r: CpSemigroup, s: CpSemigroup, depth: int = 12) -> None:
    tables = {name: SampledSemigroup.binary(sg, depth) for name, sg in (("R", r), ("S", s))}
    worst = 0.0
    for name, sg in (("R", r), ("S", s)):
        ch, rep = extend_to(tables[name], Fraction(1, 3), depth, tol=cfg.tol_verify)
        worst = max(worst, choi_distance(ch, sg.at(1 / 3)))
    run.gate(Report.from_residual("extend", worst, 1e-8, time="1/3", depth=depth))
    alpha = two_param_assemble(tables["R"], tables["S"], tol=1e-8)
    semi = alpha.semigroup_residual([((0.3, 0.7), (0.4, 0.1))])
    run.gate(Report.from_residual("two_parameter", semi, 1e-8, swap_residual=alpha.swap_residual))


def cmd_pipeline(args) -> int:
    run = Run("pipeline", args.json)
    cfg = _config(args)
    r, s = _pair(args)
    generated = isinstance(r, CpSemigroup)
    step = Fraction(1, 2 ** cfg.level)
    rs, ss_ = (r.at(step), s.at(step)) if generated else (r, s)
    run.gate(Report.from_residual("commute", commutation_defect(rs, ss_), cfg.tol_verify))
    if run.failed:
        return run.finish()
    try:
        if generated:
            run.gate(sc_semigroup_check(r, s, cfg.level, cfg.radius, cfg.tol_verify, strict=False))
        else:
            fu = witness_unitary(rs, ss_, cfg.tol_verify, cfg.rank_threshold)
            run.gate(Report.from_residual("sc_witness", max(fu.residual, fu.unitarity), cfg.tol_verify))
    except NotCommuting as exc:
        run.gate(Report("sc_witness", float(exc.defect or 0.0), cfg.tol_verify, False, {"error": str(exc)}))
    if run.failed:
        return run.finish()
    system = make_system(r, s, cfg.level, cfg.radius, cfg.tol_verify)
    run.gate(verify_rep_identity(system, probes=cfg.probes, tol=cfg.tol_verify, seed=cfg.seed))
    run.gate(verify_commutation_relation(system, cfg.tol_verify))
    run.gate(verify_associativity(system, cfg.tol_verify))
    if run.failed:
        return run.finish()
    try:
        ds = _dilation(run, cfg, system)
    except NotPD as exc:
        return _not_pd(run, exc)
    _verify_all(run, cfg, ds)
    if generated:
        _extension_gates(run, cfg, r, s)
        auto = is_endomorphism(r.at(1), cfg.tol_verify) and is_unital(r.at(1), cfg.tol_verify)
        run.extra["r_automorphic"] = bool(auto)
    run.extra["dim_K"] = ds.dim
    if args.out:
        io.write_json(args.out, io.dilation_to_doc(ds, r, s, cfg.level, run.manifest()))
    return run.finish(lines=[f"dim K = {ds.dim}"])


# -- argument parsing --------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    common.add_argument("--config", help="JSON file overriding the default configuration")
    common.add_argument("--tol", type=float, help="verification tolerance")

    parser = argparse.ArgumentParser(prog="cpdil", description="Dilations of commuting CP semigroups on M_n.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-cp", parents=[common], help="complete positivity and unitality of a channel")
    p.add_argument("channel")
    p.set_defaults(func=cmd_check_cp)

    p = sub.add_parser("kraus", parents=[common], help="minimal Kraus family of a channel")
    p.add_argument("channel")
    p.set_defaults(func=cmd_kraus)

    p = sub.add_parser("sc-witness", parents=[common], help="unitary witness of strong commutation")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_sc_witness)

    for name, func, extra in (
        ("prodsys-verify", cmd_prodsys_verify, ("--level", "--horizon")),
        ("dilate", cmd_dilate, ("--level", "--radius")),
        ("pipeline", cmd_pipeline, ("--level", "--radius")),
    ):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("first", metavar="R.json")
        p.add_argument("second", metavar="S.json")
        for flag in extra:
            p.add_argument(flag, type=int)
        if name != "prodsys-verify":
            p.add_argument("--out", help="write the dilation document here")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", parents=[common], help="re-run all checks on a dilation document")
    p.add_argument("dilation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extend", parents=[common], help="extend a dyadic sample table to a real time")
    p.add_argument("table")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--depth", type=int, default=20)
    p.set_defaults(func=cmd_extend)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NotPD as exc:
        return _not_pd(Run(args.command, args.json), exc)
    except CpdilError as exc:
        print(f"verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        # bad config values or inconsistent inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
