"""Command-line interface: ``gptforge <command> ...``.

Exit codes: 0 success or positive answer, 3 negative answer (infeasible,
not tomographically local, negative representation, rejected certificate),
2 error.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, zoo
from .embed.embedding import (
    EmbeddingCertificate, cardinality_check, certificate_problems, embed_test, reduce_certificate,
)
from .errors import GptError
from .frames import build_frame, frame_model, positivity_report, represent
from .gptcore import GptState, validate_fragment
from .linalg import default_tol
from .quantum import frame_min_eigenvalue, hermitian_basis, state_coords
from .quotient import check_unique_deterministic_effect, quotient
from .tomo import tomographic_locality_check

EXIT_OK, EXIT_ERROR, EXIT_NO = 0, 2, 3


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)        # path -> sha256
    verdicts: list = field(default_factory=list)      # {operation, verdict, tol, ...}
    certificates: list = field(default_factory=list)  # paths or embedded documents
    residuals: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: str | None = None

    def add_input(self, path: str) -> dict:
        text = Path(path).read_text(encoding="utf-8")
        self.inputs[str(path)] = io.sha256(text)
        return io.loads(text)

    def verdict(self, operation: str, verdict, tol: float, **extra) -> None:
        self.verdicts.append({"operation": operation, "verdict": verdict, "tol": tol, **extra})

    def to_dict(self) -> dict:
        return {
            "schema": "runreport.v1",
            "command": self.command,
            "inputs": self.inputs,
            "verdicts": self.verdicts,
            "certificates": self.certificates,
            "residuals": self.residuals,
            "wall_time": self.wall_time,
            "error": self.error,
        }


def _emit(obj, out: str | None, report: RunReport) -> None:
    doc = obj if isinstance(obj, dict) else io.to_dict(obj)
    if out and out != "-":
        io.write(out, doc)
        if doc.get("schema") == "certificate.v1":
            report.certificates.append(out)
    else:
        print(io.dumps(doc))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_quotient(args, report: RunReport) -> int:
    table = io.table_from_dict(report.add_input(args.input))
    if not table.procedures:
        raise GptError("no procedures")
    if table.deterministic_effect_ids:
        chk = check_unique_deterministic_effect(table, args.tol)
        report.verdict("check_unique_deterministic_effect", bool(chk), args.tol, details=list(chk.details))
        if not chk:
            raise GptError("deterministic effects are not operationally equivalent: " + "; ".join(chk.details))
    frag, cmap = quotient(table, args.tol)
    n_states = len(frag.states)
    report.verdict("quotient", "ok", args.tol, classes=len(cmap.classes), state_classes=n_states,
                   dims={s.id: s.dim for s in frag.systems})
    _emit(frag, args.out, report)
    return EXIT_OK


def cmd_tomloc(args, report: RunReport) -> int:
    if args.dims:
        a, b, ab = args.dims
    elif args.input:
        doc = report.add_input(args.input)
        a, b, ab = doc["dim_a"], doc["dim_b"], doc["dim_joint"]
    else:
        raise GptError("tomloc needs --dims A B AB or a tomloc.v1 fixture")
    v = tomographic_locality_check(a, b, ab)
    report.verdict("tomographic_locality_check", "TL" if v.tomographically_local else "not TL", 0,
                   dim_a=v.dim_a, dim_b=v.dim_b, dim_joint=v.dim_joint, deficit=v.deficit)
    print(str(v), file=sys.stderr)
    return EXIT_OK if v.tomographically_local else EXIT_NO


def _sample_witness(args_tuple):
    seed, index = args_tuple
    from .frames import sample_square_frame

    basis = hermitian_basis(2, unit_first=True)
    rng = np.random.default_rng([seed, index])
    entry = sample_square_frame(basis.system("qubit"), rng)
    return frame_min_eigenvalue(entry, basis)


def cmd_frame(args, report: RunReport) -> int:
    if args.action == "build":
        doc = report.add_input(args.input)
        if doc.get("schema") == "frame.v1":
            entry = io.frame_from_dict(doc, args.tol)
        else:
            system = io.system_from_dict(doc["system"])
            chi = np.array(doc["chi"], dtype=float)
            entry = build_frame(system, chi, args.tol, labels=doc.get("labels"),
                                allow_overcomplete=chi.shape[0] != system.dim)
        report.verdict("build_frame", "ok", args.tol, exact=entry.exact)
        report.residuals.update(normalization=entry.normalization_residual, biorthogonality=entry.biorthogonality_residual)
        _emit(entry, args.out, report)
        return EXIT_OK

    if args.action == "apply":
        entry = io.frame_from_dict(report.add_input(args.input), args.tol)
        model = frame_model(entry)
        if args.ket:
            amp = np.array([complex(x) for x in args.ket.split(",")])
            amp = amp / np.linalg.norm(amp)
            basis = hermitian_basis(len(amp), unit_first=True)
            if basis.dim != entry.system.dim:
                raise GptError(f"ket of length {len(amp)} does not fit system of dim {entry.system.dim}")
            vec = state_coords(np.outer(amp, amp.conj()), basis)
        elif args.vec:
            vec = np.array([float(x) for x in args.vec.split(",")])
        else:
            raise GptError("frame apply needs --ket or --vec")
        rep = represent(model, GptState(entry.system, vec))
        report.verdict("represent", "ok", args.tol, values=dict(zip(entry.ontic.labels, map(float, rep))))
        for lab, val in zip(entry.ontic.labels, rep):
            print(f"{lab}\t{val:.12g}")
        return EXIT_OK

    if args.action == "verify":
        entry = io.frame_from_dict(report.add_input(args.input), args.tol)
        frag = io.fragment_from_dict(report.add_input(args.fragment))
        rep = positivity_report(frame_model(entry), frag, args.tol)
        report.verdict("positivity_report", "positive" if rep.positive else "negative", args.tol,
                       min_entry=rep.min_entry, witness=rep.witness)
        _emit(rep.to_dict(), args.out, report)
        return EXIT_OK if rep.positive else EXIT_NO

    if args.action == "sample":
        jobs = [(args.seed, i) for i in range(args.n)]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                witnesses = list(pool.map(_sample_witness, jobs, chunksize=max(1, args.n // (4 * args.jobs))))
        else:
            witnesses = [_sample_witness(j) for j in jobs]
        positive = sum(w >= -args.tol for w in witnesses)
        report.verdict("sample_square_frame", "ok", args.tol, n=args.n, positive=int(positive),
                       fraction_positive=positive / args.n, max_witness=float(max(witnesses)))
        print(f"{positive}/{args.n} sampled qubit frames are positive (fraction {positive / args.n:g})", file=sys.stderr)
        return EXIT_OK
    raise GptError(f"unknown frame action {args.action!r}")


def cmd_embed(args, report: RunReport) -> int:
    frag = io.fragment_from_dict(report.add_input(args.input))
    res = embed_test(frag, args.tol, exact=args.exact)
    cert = res.certificate
    if res.feasible and args.reduce:
        cert = reduce_certificate(cert, tol=args.tol)
    extra = {"dim": res.reduced.dim, "exact": args.exact}
    if isinstance(cert, EmbeddingCertificate):
        extra["ontic_count"] = cert.ontic_count
    report.verdict("embed_test", res.verdict, args.tol, **extra)
    _emit(cert, args.out, report)
    return EXIT_OK if res.feasible else EXIT_NO


def cmd_verify(args, report: RunReport) -> int:
    cert = io.certificate_from_dict(report.add_input(args.certificate))
    frag = io.fragment_from_dict(report.add_input(args.fragment))
    problems = certificate_problems(cert, frag, args.tol)
    report.verdict("verify_certificate", not problems, args.tol, problems=problems,
                   kind="embedding" if isinstance(cert, EmbeddingCertificate) else "farkas")
    for p in problems:
        print(p, file=sys.stderr)
    return EXIT_OK if not problems else EXIT_NO


def cmd_zoo(args, report: RunReport) -> int:
    if args.action == "list":
        for name in zoo.names():
            print(f"{name}\t{zoo.get(name).description}")
        return EXIT_OK
    if not args.name:
        raise GptError("zoo emit needs a model name")
    model = zoo.get(args.name)
    outdir = Path(args.out_dir) if args.out_dir else None
    for kind, art in model.artefacts.items():
        doc = art if isinstance(art, dict) else io.to_dict(art)
        if outdir is None:
            print(io.dumps(doc))
        else:
            outdir.mkdir(parents=True, exist_ok=True)
            path = outdir / f"{model.name}.{kind}.json"
            io.write(path, doc)
            print(path, file=sys.stderr)
    report.verdict("zoo", "ok", args.tol, model=model.name, artefacts=list(model.artefacts))
    return EXIT_OK


def cmd_report(args, report: RunReport) -> int:
    """Validate a fragment, run the embedding test and, with a frame, the positivity check."""
    frag = io.fragment_from_dict(report.add_input(args.input))
    val = validate_fragment(frag, args.tol)
    report.verdict("validate_fragment", val.ok, args.tol, violations=[v.message for v in val.violations])
    code = EXIT_OK if val.ok else EXIT_NO
    res = embed_test(frag, args.tol, exact=args.exact)
    cert = res.certificate
    if res.feasible:
        cert = reduce_certificate(cert, tol=args.tol)
    report.verdict("embed_test", res.verdict, args.tol, dim=res.reduced.dim)
    report.certificates.append(io.to_dict(cert))
    if not res.feasible:
        code = EXIT_NO
    if args.frame:
        entry = io.frame_from_dict(report.add_input(args.frame), args.tol)
        rep = positivity_report(frame_model(entry), frag, args.tol)
        report.verdict("positivity_report", "positive" if rep.positive else "negative", args.tol,
                       min_entry=rep.min_entry, witness=rep.witness)
        card = cardinality_check(entry.n, entry.system.dim)
        report.verdict("cardinality_check", card.passed, 0, n_ontic=card.n_ontic, gpt_dim=card.gpt_dim, gamma=card.gamma)
        if not (rep.positive and card.passed):
            code = EXIT_NO
    return code


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance (default: $GPTFORGE_TOL or 1e-9)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--report", help="write the run report here instead of stderr")

    p = argparse.ArgumentParser(prog="gptforge", description="GPT fragments, frames and noncontextuality tests")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quotient", parents=[common], help="statstable.v1 -> fragment.v1")
    q.add_argument("input")
    q.add_argument("--out")
    q.set_defaults(func=cmd_quotient)

    t = sub.add_parser("tomloc", parents=[common], help="tomographic locality dimension count")
    t.add_argument("input", nargs="?")
    t.add_argument("--dims", type=int, nargs=3, metavar=("A", "B", "AB"))
    t.set_defaults(func=cmd_tomloc)

    f = sub.add_parser("frame", parents=[common], help="build, apply, verify or sample frames")
    f.add_argument("action", choices=["build", "apply", "verify", "sample"])
    f.add_argument("input", nargs="?")
    f.add_argument("fragment", nargs="?")
    f.add_argument("--out")
    f.add_argument("--ket", help="comma-separated amplitudes, e.g. 1,0,0")
    f.add_argument("--vec", help="comma-separated GPT state vector")
    f.add_argument("--n", type=int, default=1000)
    f.set_defaults(func=cmd_frame)

    e = sub.add_parser("embed", parents=[common], help="simplex-embedding test of a fragment.v1")
    e.add_argument("input")
    e.add_argument("--out")
    e.add_argument("--exact", action="store_true")
    e.add_argument("--reduce", action="store_true", help="reduce the certificate to few ontic states")
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("verify", parents=[common], help="recheck a certificate.v1 against a fragment.v1")
    v.add_argument("certificate")
    v.add_argument("fragment")
    v.set_defaults(func=cmd_verify)

    z = sub.add_parser("zoo", parents=[common], help="list or emit reference models")
    z.add_argument("action", choices=["list", "emit"])
    z.add_argument("name", nargs="?")
    z.add_argument("--out-dir")
    z.set_defaults(func=cmd_zoo)

    r = sub.add_parser("report", parents=[common], help="full analysis of a fragment")
    r.add_argument("input")
    r.add_argument("--frame")
    r.add_argument("--exact", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.tol is None:
        args.tol = default_tol()
    report = RunReport(args.command + (f" {args.action}" if hasattr(args, "action") else ""))
    start = time.perf_counter()
    try:
        code = args.func(args, report)
    except (GptError, KeyError, ValueError, OSError) as exc:
        report.error = str(exc)
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    report.wall_time = time.perf_counter() - start
    text = io.dumps(report.to_dict())
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
