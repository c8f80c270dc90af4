"""Command-line interface.

Subcommands::

    synth      write a synthetic labeled JSONL corpus
    ingest     corpus -> cached count matrix, vocabulary, prune report
    spectrum   cached matrix -> singular spectrum and elbow estimates
    factorize  cached matrix -> one scaled NMF model and its partition
    sweep      full experiment -> results.csv, report.json, ari_vs_rank.svg

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cluster_eval import assign_clusters
from .errors import DataError, NumericalError
from .harness import ExperimentConfig, emit_report, ingest_documents, run_experiment
from .nmf import InitKind, LossKind, NmfConfig, factorize, save_model
from .rank import second_elbow, singular_values, sweep_range
from .scaling import DocTermMatrix, ScalingKind, apply_scaling, post_scale
from .synth import SyntheticSpec, generate_synthetic_corpus

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="scalednmf", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p_synth.add_argument("--k-topics", type=int, required=True)
    p_synth.add_argument("--docs", type=int, required=True)
    p_synth.add_argument("--vocab", type=int, required=True)
    p_synth.add_argument("--doc-length-mean", type=float, default=100.0)
    p_synth.add_argument("--doc-length-dispersion", type=float, default=0.0)
    p_synth.add_argument("--concentration", type=float, default=0.1)
    p_synth.add_argument("--zipf", type=float, default=0.0)
    p_synth.add_argument("--length-skew", type=float, default=1.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output directory (writes corpus.jsonl)")

    p_ingest = sub.add_parser("ingest", help="tokenize, prune, and cache the count matrix")
    p_ingest.add_argument("path", help="corpus path")
    p_ingest.add_argument("--format", choices=("jsonl", "csv", "dir"), default="jsonl")
    p_ingest.add_argument("--min-token-len", type=int, default=2)
    p_ingest.add_argument("--rare-mass", type=float, default=0.99)
    p_ingest.add_argument("--no-prune", action="store_true", help="skip common/rare token removal")
    p_ingest.add_argument("--out", required=True, help="output directory")

    p_spec = sub.add_parser("spectrum", help="singular spectrum and elbows of a cached matrix")
    p_spec.add_argument("ingest_dir", help="directory produced by ingest")
    p_spec.add_argument("--seed", type=int, default=0)
    p_spec.add_argument("--radius", type=int, default=10)
    p_spec.add_argument("--out", required=True, help="output directory (writes spectrum.json)")

    p_fact = sub.add_parser("factorize", help="factor one scaling at one rank")
    p_fact.add_argument("ingest_dir", help="directory produced by ingest")
    p_fact.add_argument("--scaling", default="nl", help="counts|rs|cs|nl|pwmi")
    p_fact.add_argument("--rank", type=int, required=True)
    p_fact.add_argument("--loss", default="frobenius")
    p_fact.add_argument("--seed", type=int, default=0)
    p_fact.add_argument("--max-iter", type=int, default=200)
    p_fact.add_argument("--init", choices=("random", "nndsvda"), default="random")
    p_fact.add_argument("--pwmi-times-n", action="store_true")
    p_fact.add_argument("--out", required=True, help="output directory (writes model.txt, partition.json)")

    p_sweep = sub.add_parser("sweep", help="run the full scaling-by-rank experiment")
    p_sweep.add_argument("path", nargs="?", help="corpus path (omit when --config supplies a corpus)")
    p_sweep.add_argument("--config", help="JSON experiment config; flags override its values")
    p_sweep.add_argument("--format", choices=("jsonl", "csv", "dir"), default=None)
    p_sweep.add_argument("--scalings", default=None, help="comma-separated subset of counts,rs,cs,nl,pwmi")
    p_sweep.add_argument("--loss", default=None)
    p_sweep.add_argument("--rank", type=int, nargs="+", default=None, help="explicit rank list (skips the elbow sweep)")
    p_sweep.add_argument("--radius", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--pwmi-times-n", action="store_true", default=None)
    p_sweep.add_argument("--spectrum-on-scaled", action="store_true", default=None)
    p_sweep.add_argument("--min-token-len", type=int, default=None)
    p_sweep.add_argument("--rare-mass", type=float, default=None)
    p_sweep.add_argument("--out", required=True, help="output directory")
    return parser


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        k_topics=args.k_topics,
        n_docs=args.docs,
        vocab_size=args.vocab,
        doc_length=(args.doc_length_mean, args.doc_length_dispersion),
        topic_concentration=args.concentration,
        zipf_exponent=args.zipf,
        length_skew=args.length_skew,
        seed=args.seed,
    )
    docs = generate_synthetic_corpus(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps({"id": d.id, "text": d.text, "label": d.label}, sort_keys=True)
        for d in docs
    ]
    (out / "corpus.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(docs)} documents to {out / 'corpus.jsonl'}")
    return 0


def _cmd_ingest(args) -> int:
    from .corpus import load_corpus

    docs = load_corpus(args.path, args.format)
    result = ingest_documents(
        docs,
        prune=not args.no_prune,
        min_token_len=args.min_token_len,
        rare_mass=args.rare_mass,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.matrix.save(out / "matrix.txt")
    _write_json(
        out / "meta.json",
        {
            "doc_ids": result.doc_ids,
            "dropped_doc_ids": result.dropped_ids,
            "labels": result.labels,
            "vocab": list(result.vocab.terms),
            "min_token_len": args.min_token_len,
        },
    )
    if result.prune_report is not None:
        (out / "prune_report.json").write_text(result.prune_report.to_json(), encoding="utf-8")
    print(
        f"ingested {result.matrix.n_docs} docs x {result.matrix.n_terms} terms "
        f"({result.matrix.nnz} nonzeros) into {out}"
    )
    return 0


def _read_ingest_dir(path: str) -> tuple[DocTermMatrix, dict]:
    base = Path(path)
    matrix_path = base / "matrix.txt"
    meta_path = base / "meta.json"
    if not matrix_path.exists() or not meta_path.exists():
        raise DataError(f"{base} does not look like an ingest directory (need matrix.txt and meta.json)")
    matrix = DocTermMatrix.load(matrix_path)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return matrix, meta


def _cmd_spectrum(args) -> int:
    matrix, _ = _read_ingest_dir(args.ingest_dir)
    count = min(64, min(matrix.counts.shape))
    spectrum = singular_values(matrix.counts, count, seed=args.seed)
    elbow = second_elbow(spectrum)
    bounds = (2, max(2, min(matrix.counts.shape) - 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "spectrum.json",
        {
            "values": [float(v) for v in spectrum.values],
            "dims": list(spectrum.source_dims),
            "first": elbow.first,
            "second": elbow.second,
            "degenerate": elbow.degenerate,
            "sweep": sweep_range(elbow, args.radius, bounds),
        },
    )
    print(f"spectrum of {spectrum.source_dims}: first elbow {elbow.first}, second {elbow.second}")
    return 0


def _cmd_factorize(args) -> int:
    matrix, meta = _read_ingest_dir(args.ingest_dir)
    kind = ScalingKind.parse(args.scaling)
    scaled = apply_scaling(matrix, kind, pwmi_times_n=args.pwmi_times_n)
    config = NmfConfig(
        rank=args.rank,
        loss=LossKind.parse(args.loss),
        max_iter=args.max_iter,
        seed=args.seed,
        init=InitKind(args.init),
    )
    model = factorize(scaled.matrix, config)
    W, _ = post_scale(model.W, model.H, scaled)
    partition = assign_clusters(W, meta["doc_ids"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.txt")
    _write_json(
        out / "partition.json",
        {"assignments": partition.assignments, "k": partition.k, "scaling": kind.value},
    )
    status = "converged" if model.converged else "hit max_iter"
    print(f"factorized {kind.value} at rank {args.rank}: {status} after {model.n_iter} iterations")
    return 0


_SWEEP_OVERRIDES = (
    ("format", "corpus_format"),
    ("scalings", "scalings"),
    ("loss", "loss"),
    ("rank", "rank_override"),
    ("radius", "sweep_radius"),
    ("seed", "seed"),
    ("pwmi_times_n", "pwmi_times_n"),
    ("spectrum_on_scaled", "spectrum_on_scaled"),
    ("min_token_len", "min_token_len"),
    ("rare_mass", "rare_mass"),
)


def _cmd_sweep(args) -> int:
    base: dict = {}
    if args.config:
        config_path = Path(args.config)
        if not config_path.exists():
            raise DataError(f"config file does not exist: {config_path}")
        try:
            base = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{config_path}: invalid JSON ({exc.msg})") from None
    if args.path is not None:
        base["corpus_path"] = args.path
        base.setdefault("corpus_format", "jsonl")
        base.pop("synthetic", None)
    for flag, key in _SWEEP_OVERRIDES:
        value = getattr(args, flag)
        if value is None:
            continue
        if flag == "scalings":
            value = [s for s in value.split(",") if s]
        base[key] = value
    try:
        config = ExperimentConfig.from_dict(base)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(config)
    paths = emit_report(report, args.out)
    best = report.best_ari()
    if best:
        summary = ", ".join(f"{k}={v:.3f}" for k, v in sorted(best.items()))
        print(f"best ARI over sweep: {summary}")
    print(f"wrote {paths['csv']}, {paths['json']}, {paths['svg']}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "spectrum": _cmd_spectrum,
    "factorize": _cmd_factorize,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        # DataError is a ValueError; contract violations count as data errors
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
