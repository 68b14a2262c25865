"""Command-line interface.

Subcommands: ``reassign`` (re-cluster and relabel segment records), ``cpwer``
(score a hypothesis against a reference), ``oracle`` (best possible
segment-to-speaker labels), ``report`` (attenuation sweep grid), and
``synth`` (generate a synthetic corpus).  Exit codes: 0 success, 1
validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from pathlib import Path

from . import corpus, metrics, pipeline
from .affinity import AttenuationConfig
from .oracle import oracle_assignment
from .pipeline import PipelineConfig, SynthSpec


class UsageError(ValueError):
    """Bad command-line arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_attenuation(text: str) -> AttenuationConfig:
    """Parse ``none``, ``step:ALPHA``, or ``poly:BETA``."""
    kind, _, value = text.partition(":")
    if kind == "none" and not value:
        return AttenuationConfig(mode="none")
    try:
        if kind == "step":
            return AttenuationConfig(mode="stepwise", alpha=float(value))
        if kind == "poly":
            return AttenuationConfig(mode="polynomial", beta=float(value))
    except ValueError as exc:
        raise UsageError(f"bad attenuation {text!r}: {exc}") from exc
    raise UsageError(f"bad attenuation {text!r} (expected none|step:ALPHA|poly:BETA)")


def parse_num_speakers(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError as exc:
        raise UsageError(f"bad --num-speakers {text!r} (expected auto or integer)") from exc
    if value < 1:
        raise UsageError("--num-speakers must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slrkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reassign", help="re-cluster segments and rewrite speaker labels")
    p.add_argument("--segments", required=True, help="segment records (JSONL)")
    p.add_argument("--algorithm", choices=["sc", "kmeans"], default="sc")
    p.add_argument("--attenuation", default="none", help="none|step:ALPHA|poly:BETA")
    p.add_argument("--num-speakers", default="auto", help="auto or a fixed count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="relabeled segment records (JSONL)")
    p.add_argument("--reference", help="reference records (JSONL); enables scoring")
    p.add_argument("--report", help="where to write per-session score lines (JSONL)")

    p = sub.add_parser("cpwer", help="score hypothesis segments against a reference")
    p.add_argument("--reference", required=True)
    p.add_argument("--hyp", required=True, help="segment records with speaker labels")
    p.add_argument("--per-session", action="store_true")

    p = sub.add_parser("oracle", help="cpWER-minimal segment-to-speaker labels")
    p.add_argument("--segments", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--mode", choices=["exact", "greedy"], default="greedy")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="attenuation sweep over all sessions")
    p.add_argument("--segments", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--sweep", default="step:0,0.1,0.25,1;poly:1,2,4,8,16")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True, help="SynthSpec as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--sessions", type=int, default=1)

    return parser


def _load_reference_map(path: str) -> dict[str, corpus.ReferenceTranscript]:
    return {ref.session_id: ref for ref in corpus.parse_reference(path)}


def _require_reference(
    refs: dict[str, corpus.ReferenceTranscript], session_id: str
) -> corpus.ReferenceTranscript:
    if session_id not in refs:
        raise ValueError(f"no reference for session {session_id!r}")
    return refs[session_id]


def _score_line(session_id: str, report: metrics.CpWerReport) -> str:
    return json.dumps(
        {
            "session_id": session_id,
            "cpwer": report.cpwer,
            "errors": report.errors,
            "ref_words": report.ref_words,
            "mapping": report.mapping,
        }
    )


def _cmd_reassign(args) -> int:
    sessions = corpus.parse_segments(args.segments)
    cfg = PipelineConfig(
        algorithm=args.algorithm,
        attenuation=parse_attenuation(args.attenuation),
        seed=args.seed,
        num_speakers=parse_num_speakers(args.num_speakers),
    )
    refs = _load_reference_map(args.reference) if args.reference else None

    out_lines: list[str] = []
    report_lines: list[str] = []
    for index, session in enumerate(sessions):
        reference = _require_reference(refs, session.session_id) if refs else None
        assignment, report = pipeline.reassign(
            session, reference, cfg, seed=pipeline.session_seed(args.seed, index)
        )
        buf = io.StringIO()
        corpus.write_assignment(session, assignment, buf)
        out_lines.append(buf.getvalue())
        if reference is not None:
            report_lines.append(
                json.dumps(
                    {
                        "session_id": session.session_id,
                        "algorithm": cfg.algorithm,
                        "attenuation": cfg.attenuation.mode,
                        "alpha": cfg.attenuation.alpha,
                        "beta": cfg.attenuation.beta,
                        "cpwer_before": report.cpwer_before.cpwer,
                        "cpwer_after": report.cpwer_after.cpwer,
                        "cpwer_oracle": report.cpwer_oracle.cpwer,
                        "oracle_mode": report.oracle_mode,
                        "relative_confusion_error": report.relative_confusion_error,
                        "mapping": report.cpwer_after.mapping,
                    }
                )
            )
    Path(args.out).write_text("".join(out_lines), encoding="utf-8")
    if args.report:
        Path(args.report).write_text(
            "".join(line + "\n" for line in report_lines), encoding="utf-8"
        )
    return 0


def _cmd_cpwer(args) -> int:
    refs = _load_reference_map(args.reference)
    sessions = corpus.parse_segments(args.hyp)
    reports = []
    for session in sessions:
        reference = _require_reference(refs, session.session_id)
        report = metrics.cpwer(reference, pipeline.initial_speaker_streams(session))
        reports.append(report)
        if args.per_session:
            print(_score_line(session.session_id, report))
    if not reports:
        raise ValueError("no sessions in hypothesis input")
    summary = {
        "session_id": "ALL",
        "pooled_cpwer": pipeline.pooled_cpwer(reports),
        "macro_cpwer": pipeline.macro_cpwer(reports),
        "errors": sum(r.errors for r in reports),
        "ref_words": sum(r.ref_words for r in reports),
    }
    print(json.dumps(summary))
    return 0


def _cmd_oracle(args) -> int:
    refs = _load_reference_map(args.reference)
    sessions = corpus.parse_segments(args.segments)
    out_lines = []
    for session in sessions:
        reference = _require_reference(refs, session.session_id)
        assignment, report = oracle_assignment(session, reference, args.mode)
        buf = io.StringIO()
        corpus.write_assignment(
            session, assignment, buf, label_names=list(reference.per_speaker)
        )
        out_lines.append(buf.getvalue())
        print(_score_line(session.session_id, report))
    Path(args.out).write_text("".join(out_lines), encoding="utf-8")
    return 0


def _cmd_report(args) -> int:
    refs = corpus.parse_reference(args.reference)
    sessions = corpus.parse_segments(args.segments)
    alphas, betas = pipeline.parse_sweep(args.sweep)
    rows = pipeline.run_report(sessions, refs, alphas, betas, args.seed)
    Path(args.out).write_text(
        "".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8"
    )
    return 0


def _cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("synth spec must be a JSON object")
    try:
        spec = SynthSpec(**raw)
    except TypeError as exc:
        raise ValueError(f"bad synth spec: {exc}") from exc
    if args.sessions < 1:
        raise ValueError("--sessions must be >= 1")

    seg_lines: list[str] = []
    ref_lines: list[str] = []
    truth_lines: list[str] = []
    for index in range(args.sessions):
        session, reference, truth = pipeline.generate_session(
            spec, pipeline.session_seed(args.seed, index), session_id=f"synth{index}"
        )
        buf = io.StringIO()
        corpus.write_segments(session, buf)
        seg_lines.append(buf.getvalue())
        buf = io.StringIO()
        corpus.write_reference(reference, buf)
        ref_lines.append(buf.getvalue())
        truth_lines.extend(
            json.dumps(
                {
                    "session_id": session.session_id,
                    "segment_id": seg.segment_id,
                    "speaker": f"spk{label}",
                }
            )
            + "\n"
            for seg, label in zip(session.segments, truth.labels)
        )
    prefix = Path(args.out_prefix)
    Path(str(prefix) + ".segments.jsonl").write_text("".join(seg_lines), "utf-8")
    Path(str(prefix) + ".reference.jsonl").write_text("".join(ref_lines), "utf-8")
    Path(str(prefix) + ".truth.jsonl").write_text("".join(truth_lines), "utf-8")
    return 0


_COMMANDS = {
    "reassign": _cmd_reassign,
    "cpwer": _cmd_cpwer,
    "oracle": _cmd_oracle,
    "report": _cmd_report,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
