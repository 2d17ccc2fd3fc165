"""Command-line front door: parse specification files, dispatch to the
engines, and emit machine-readable reports.

Exit codes: 0 success, 1 validation failure, 2 parse error, 3 numeric
tolerance failure.  Reports are byte-stable for fixed inputs, tolerances,
and seeds; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import specfile
from .cpmaps import InvarianceError, cp_extremal, cp_validate, kraus_extract, ksgns
from .fingroup import (
    CocycleExtensionError,
    GroupStructureError,
    cocycle_violation,
    rep_violation,
)
from .instruments import (
    B_from_instrument,
    StructureViolation,
    as_cpmap,
    instrument_extremal,
    lambda_from_observable,
    naimark,
    observable_extremal,
    phase_space,
    sample_stream,
    validate_instrument,
    validate_observable,
)
from .kernels import (
    DilationResidualError,
    EquivalenceError,
    KernelValidationError,
    kernel_extremal,
    kolmogorov_decompose,
    validate_kernel,
)
from .numlin import NotPositiveError, Tolerances, psd_check

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3


def _tolerances(args) -> Tolerances:
    return Tolerances(
        psd_eig=args.tol_psd_eig,
        rank_rel=args.tol_rank_rel,
        unitary_fro=args.tol_unitary_fro,
        recon_fro=args.tol_recon_fro,
    )


class Report:
    """Verdicts with their residuals, artifacts with provenance notes."""

    def __init__(self, command, kind, tol: Tolerances):
        self.body = {
            "command": command,
            "kind": kind,
            "tolerances": {
                "psd_eig": tol.psd_eig,
                "rank_rel": tol.rank_rel,
                "unitary_fro": tol.unitary_fro,
                "recon_fro": tol.recon_fro,
            },
            "verdicts": {},
            "artifacts": {},
        }

    def verdict(self, name, ok, residual=0.0):
        self.body["verdicts"][name] = {"ok": bool(ok), "residual": float(residual)}

    def artifact(self, name, provenance, **payload):
        self.body["artifacts"][name] = {"provenance": provenance, **payload}

    @property
    def all_ok(self) -> bool:
        return all(v["ok"] for v in self.body["verdicts"].values())

    def emit(self, stream=None):
        stream = sys.stdout if stream is None else stream
        json.dump(self.body, stream, sort_keys=True, indent=1)
        stream.write("\n")


def _load_file(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise specfile.SpecFileError(str(exc)) from exc
    return specfile.load(text)


def _merge_checks(report: Report, checks: dict):
    for name, (ok, residual) in checks.items():
        report.verdict(name, ok, residual)


def cmd_validate(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    report = Report("validate", kind, tol)
    if kind == "group":
        report.verdict("group_axioms", True)
        if "action" in obj:
            report.verdict("action", True)
        if "cocycle" in obj:
            bad = cocycle_violation(obj["cocycle"])
            report.verdict("cocycle", bad is None)
        if "rep" in obj:
            bad = rep_violation(obj["rep"], tol)
            report.verdict("rep", bad is None)
    elif kind == "kernel":
        spec, _ = obj
        kr = validate_kernel(spec, tol)
        report.verdict("positive", kr.positive, kr.residuals.get("covariance", 0.0))
        report.verdict("covariant", kr.covariant, kr.residuals.get("covariance", 0.0))
        report.verdict("alpha_cocycle", kr.alpha_ok, kr.residuals.get("alpha", 0.0))
    elif kind == "cpmap":
        cr = cp_validate(obj, tol)
        report.verdict("completely_positive", cr.cp)
        report.verdict("covariant", cr.covariant, cr.residuals.get("covariance", 0.0))
        report.verdict("normal", cr.normal)
        if cr.zero_map:
            report.artifact("warning", "validation note", message="the map is zero")
    elif kind == "observable":
        _merge_checks(report, validate_observable(obj, tol).checks)
    elif kind == "instrument":
        _merge_checks(report, validate_instrument(obj, tol).checks)
    elif kind == "phase_space":
        d, ops = obj
        spec = phase_space(d, ops, tol)
        _merge_checks(report, validate_instrument(spec, tol).checks)
    elif kind == "state":
        report.verdict("positive", psd_check(obj, tol))
        report.verdict("unit_trace", abs(np.trace(obj).real - 1.0) <= 1e-8,
                       abs(np.trace(obj).real - 1.0))
    _finish(report, args)
    return EXIT_OK if report.all_ok else EXIT_INVALID


def cmd_dilate(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    report = Report("dilate", kind, tol)
    if kind == "kernel":
        spec, _ = obj
        dec = kolmogorov_decompose(spec, tol)
        for name, res in dec.residuals.items():
            report.verdict(name, True, res)
        report.artifact(
            "decomposition",
            "minimal covariant factorization of the kernel blocks",
            rank=dec.rank,
            factors=[specfile.matrix_out(f) for f in dec.factors],
            dilation_rep=[specfile.matrix_out(dec.sym(g)) for g in spec.action.group.elements()],
        )
    elif kind == "cpmap":
        dil = ksgns(obj, tol)
        for name, res in dil.residuals.items():
            report.verdict(name, True, res)
        report.artifact(
            "dilation",
            "minimal covariant dilation: intertwiner, algebra representation",
            rank=dil.rank,
            j=specfile.matrix_out(dil.j),
            pi_units=[specfile.matrix_out(p) for p in dil.pi_units],
            sym=None if dil.sym is None else [specfile.matrix_out(dil.sym(g)) for g in dil.sym.group.elements()],
        )
    elif kind == "observable":
        naim = naimark(obj, tol)
        for name, res in naim.residuals.items():
            report.verdict(name, True, res)
        report.artifact(
            "naimark",
            "minimal covariant Naimark dilation: fibers, isometry, transport blocks",
            fiber_dims=list(naim.fiber_dims),
            isometry=specfile.matrix_out(naim.isometry()),
            cocycle_blocks={
                str(g): [specfile.matrix_out(b) for b in blocks]
                for g, blocks in naim.cocycle_blocks.items()
            },
        )
    elif kind == "instrument":
        dil = ksgns(as_cpmap(obj), tol)
        for name, res in dil.residuals.items():
            report.verdict(name, True, res)
        report.artifact(
            "dilation",
            "minimal covariant dilation of the instrument as a CP map",
            rank=dil.rank,
            j=specfile.matrix_out(dil.j),
        )
    else:
        raise specfile.SpecFileError(f"dilate does not apply to kind {kind!r}")
    _finish(report, args)
    return EXIT_OK


def cmd_extremal(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    report = Report("extremal", kind, tol)
    if kind == "kernel":
        spec, z_pairs = obj
        cert = kernel_extremal(spec, z_pairs, None, tol)
        neighbours = (
            [specfile.kernel_out(p, z_pairs) for p in cert.perturbed] if cert.perturbed else None
        )
    elif kind == "cpmap":
        cert = cp_extremal(obj, None, tol)
        neighbours = [specfile.cpmap_out(p) for p in cert.perturbed] if cert.perturbed else None
    elif kind == "observable":
        data = lambda_from_observable(obj, seed=args.seed, tol=tol)
        cert = observable_extremal(data, tol)
        neighbours = (
            [specfile.observable_out(p) for p in cert.perturbed] if cert.perturbed else None
        )
    elif kind == "instrument":
        cert = instrument_extremal(obj, tol)
        neighbours = (
            [specfile.instrument_out(p) for p in cert.perturbed] if cert.perturbed else None
        )
    else:
        raise specfile.SpecFileError(f"extremal does not apply to kind {kind!r}")
    # the outcome is data, not a pass/fail gate
    report.verdict("decision_reached", True, float(cert.freedom))
    report.artifact(
        "decision",
        "extremality in the covariant comparison class",
        extreme=cert.extreme,
        freedom=cert.freedom,
    )
    if cert.witness is not None:
        report.artifact(
            "witness",
            "Hermitian direction on the dilation certifying a convex split",
            matrix=specfile.matrix_out(cert.witness),
        )
    if neighbours:
        report.artifact(
            "split",
            "the two neighbours whose midpoint is the input; both re-validate",
            plus=neighbours[0],
            minus=neighbours[1],
        )
    _finish(report, args)
    return EXIT_OK


def cmd_kraus(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    report = Report("kraus", kind, tol)
    if kind == "cpmap":
        dil = ksgns(obj, tol)
        ops = kraus_extract(obj, dil, tol)
        report.verdict("reconstruction", True, dil.residuals["reconstruction"])
        report.artifact(
            "kraus",
            "Kraus family reproducing the map; count equals the Choi rank",
            count=len(ops),
            operators=[specfile.matrix_out(a) for a in ops],
        )
    elif kind == "instrument":
        data = B_from_instrument(obj, tol)
        report.verdict("roundtrip", True)
        report.artifact(
            "kraus",
            "generating family extracted from the base outcome",
            count=len(data.b_ops),
            operators=[specfile.matrix_out(b) for b in data.b_ops],
        )
    else:
        raise specfile.SpecFileError(f"kraus does not apply to kind {kind!r}")
    _finish(report, args)
    return EXIT_OK


def cmd_phase_space(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    if kind != "phase_space":
        raise specfile.SpecFileError("phase-space needs a phase_space document")
    d, ops = obj
    spec = phase_space(d, ops, tol)
    text = specfile.document("instrument", specfile.instrument_out(spec))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    tol = _tolerances(args)
    kind, obj = _load_file(args.file)
    if kind == "phase_space":
        obj = phase_space(obj[0], obj[1], tol)
    elif kind != "instrument":
        raise specfile.SpecFileError("sample needs an instrument or phase_space document")
    state_kind, state = _load_file(args.state)
    if state_kind != "state":
        raise specfile.SpecFileError("the second file must be a state document")
    for result in sample_stream(obj, state, args.n, args.seed):
        record = [
            result.outcome,
            result.probability,
            specfile.matrix_out(result.post_state),
        ]
        sys.stdout.write(json.dumps(record) + "\n")
    return EXIT_OK


def _finish(report: Report, args):
    report.emit()
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            report.emit(handle)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-psd-eig", type=float, default=1e-9, help="PSD eigenvalue slack (default 1e-9)")
    common.add_argument("--tol-rank-rel", type=float, default=1e-9, help="relative rank cutoff (default 1e-9)")
    common.add_argument("--tol-unitary-fro", type=float, default=1e-8, help="unitarity certificate slack (default 1e-8)")
    common.add_argument("--tol-recon-fro", type=float, default=1e-8, help="reconstruction certificate slack (default 1e-8)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized decompositions (default 0)")
    common.add_argument("--json-out", type=str, default=None, help="also write the report to this path")

    parser = argparse.ArgumentParser(
        prog="covkit",
        description=(
            "Covariant kernels, dilations, and quantum instruments over finite "
            "symmetry groups."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a document against its kind's invariants")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dilate", parents=[common], help="minimal dilation per kind (Kolmogorov / KSGNS / Naimark)")
    p.add_argument("file")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("extremal", parents=[common], help="decide extremality and emit a witness or split")
    p.add_argument("file")
    p.set_defaults(func=cmd_extremal)

    p = sub.add_parser("kraus", parents=[common], help="extract a Kraus / generating family")
    p.add_argument("file")
    p.set_defaults(func=cmd_kraus)

    p = sub.add_parser("phase-space", parents=[common], help="build the discrete phase-space instrument from a seed")
    p.add_argument("file")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_phase_space)

    p = sub.add_parser("sample", parents=[common], help="draw outcomes and post states from an instrument")
    p.add_argument("file")
    p.add_argument("state")
    p.add_argument("-n", type=int, default=1)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = args.func(args)
    except json.JSONDecodeError as exc:
        print(f"parse error: line {exc.lineno}, column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_PARSE
    except (specfile.SpecFileError, GroupStructureError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DilationResidualError, EquivalenceError, NotPositiveError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        KernelValidationError,
        InvarianceError,
        StructureViolation,
        CocycleExtensionError,
        ValueError,
    ) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        elapsed = time.perf_counter() - start
        print(f"wall time: {elapsed:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
