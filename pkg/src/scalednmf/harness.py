"""Experiment orchestration: corpus to count matrix to scaled NMF sweep.

The pipeline ingests (or synthesizes) a corpus, estimates the number of
topics from the second spectrum elbow, factors every requested scaling of the
count matrix over the surrounding rank range, and scores each run against the
ground-truth labels when present.  All randomness derives from the master
seed, so a configuration maps to byte-identical report files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .cluster_eval import AriReport, Partition, assign_clusters, score_partitions
from .corpus import PruneReport, RawDocument, Vocabulary
from .errors import DataError
from .nmf import FROBENIUS, InitKind, LossKind, NmfConfig, NmfModel, factorize
from .rank import ElbowEstimate, SingularSpectrum, second_elbow, singular_values, sweep_range
from .scaling import ALL_SCALINGS, DocTermMatrix, ScaledMatrix, ScalingKind, apply_scaling, post_scale
from .synth import SyntheticSpec, generate_synthetic_corpus

__all__ = [
    "ExperimentConfig",
    "IngestResult",
    "CellResult",
    "ExperimentReport",
    "ingest_documents",
    "run_experiment",
    "emit_report",
]

_SCALING_COLORS = {
    ScalingKind.COUNTS: "#1f77b4",
    ScalingKind.ROW: "#ff7f0e",
    ScalingKind.COLUMN: "#2ca02c",
    ScalingKind.NORMALIZED_LAPLACIAN: "#d62728",
    ScalingKind.PWMI: "#9467bd",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's results.

    Exactly one of ``corpus_path`` and ``synthetic`` must be set.  The output
    location is deliberately not part of the config so that reports written
    to different directories stay byte-identical.
    """

    corpus_path: str | None = None
    corpus_format: str | None = None
    synthetic: SyntheticSpec | None = None
    scalings: tuple[ScalingKind, ...] = ALL_SCALINGS
    loss: LossKind = FROBENIUS
    seed: int = 0
    sweep_radius: int = 10
    rank_override: tuple[int, ...] | None = None
    pwmi_times_n: bool = False
    spectrum_on_scaled: bool = False
    min_token_len: int = 2
    rare_mass: float = 0.99
    max_iter: int = 200
    tol: float = 1e-4
    init: InitKind = InitKind.SEEDED_RANDOM

    def __post_init__(self) -> None:
        if not self.scalings:
            raise ValueError("at least one scaling is required")
        if (self.corpus_path is None) == (self.synthetic is None):
            raise ValueError("exactly one of corpus_path and synthetic must be given")
        if self.corpus_path is not None and self.corpus_format not in ("jsonl", "csv", "dir"):
            raise ValueError("corpus_format must be jsonl, csv, or dir")
        if self.sweep_radius < 0:
            raise ValueError("sweep_radius must be non-negative")

    def to_dict(self) -> dict:
        return {
            "corpus_path": self.corpus_path,
            "corpus_format": self.corpus_format,
            "synthetic": None if self.synthetic is None else self.synthetic.to_dict(),
            "scalings": [k.value for k in self.scalings],
            "loss": self.loss.name,
            "beta": self.loss.beta,
            "seed": self.seed,
            "sweep_radius": self.sweep_radius,
            "rank_override": None if self.rank_override is None else list(self.rank_override),
            "pwmi_times_n": self.pwmi_times_n,
            "spectrum_on_scaled": self.spectrum_on_scaled,
            "min_token_len": self.min_token_len,
            "rare_mass": self.rare_mass,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "init": self.init.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        synth = d.get("synthetic")
        scalings = d.get("scalings")
        ranks = d.get("rank_override")
        return cls(
            corpus_path=d.get("corpus_path"),
            corpus_format=d.get("corpus_format"),
            synthetic=None if synth is None else SyntheticSpec.from_dict(synth),
            scalings=ALL_SCALINGS if scalings is None else tuple(ScalingKind.parse(s) for s in scalings),
            loss=LossKind.parse(d.get("loss", "frobenius")),
            seed=int(d.get("seed", 0)),
            sweep_radius=int(d.get("sweep_radius", 10)),
            rank_override=None if ranks is None else tuple(int(r) for r in ranks),
            pwmi_times_n=bool(d.get("pwmi_times_n", False)),
            spectrum_on_scaled=bool(d.get("spectrum_on_scaled", False)),
            min_token_len=int(d.get("min_token_len", 2)),
            rare_mass=float(d.get("rare_mass", 0.99)),
            max_iter=int(d.get("max_iter", 200)),
            tol=float(d.get("tol", 1e-4)),
            init=InitKind(d.get("init", "random")),
        )

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class IngestResult:
    """A count matrix plus everything needed to interpret its rows."""

    matrix: DocTermMatrix
    doc_ids: list[str]
    dropped_ids: list[str]
    labels: dict[str, str] | None
    vocab: Vocabulary
    prune_report: PruneReport | None


def ingest_documents(
    docs: list[RawDocument],
    *,
    prune: bool = True,
    min_token_len: int = 2,
    rare_mass: float = 0.99,
) -> IngestResult:
    """Tokenize, optionally prune, and count a list of documents."""
    vocab = corpus_mod.build_vocabulary(docs, min_token_len)
    prune_report = None
    if prune:
        vocab, prune_report = corpus_mod.prune_vocabulary(vocab, rare_mass)
    matrix, kept_ids, dropped_ids = corpus_mod.count_matrix(docs, vocab, min_token_len)
    by_id = {doc.id: doc for doc in docs}
    labels: dict[str, str] | None = None
    if all(by_id[i].label is not None for i in kept_ids):
        labels = {i: by_id[i].label for i in kept_ids}  # type: ignore[misc]
    return IngestResult(
        matrix=matrix,
        doc_ids=kept_ids,
        dropped_ids=dropped_ids,
        labels=labels,
        vocab=vocab,
        prune_report=prune_report,
    )


@dataclass
class CellResult:
    """One (scaling, rank) run of the sweep."""

    scaling: ScalingKind
    rank: int
    seed: int
    converged: bool
    n_iter: int
    objective: float
    ari: float | None = None
    rand: float | None = None
    k_pred: int | None = None

    def to_dict(self) -> dict:
        return {
            "scaling": self.scaling.value,
            "rank": self.rank,
            "seed": self.seed,
            "converged": self.converged,
            "iterations": self.n_iter,
            "objective": self.objective,
            "ari": self.ari,
            "rand": self.rand,
            "k_pred": self.k_pred,
        }


@dataclass
class ExperimentReport:
    """Full sweep output: one cell per (scaling, rank) plus provenance."""

    config: dict
    config_digest: str
    n_docs: int
    n_terms: int
    dropped_doc_ids: list[str]
    spectra: dict[str, list[float]]
    elbows: dict[str, dict]
    ranks: dict[str, list[int]]
    cells: list[CellResult]
    prune_report: PruneReport | None
    labeled: bool
    warnings: list[str] = field(default_factory=list)

    def best_ari(self) -> dict[str, float]:
        """Best ARI over the sweep, per scaling (empty when unlabeled)."""
        best: dict[str, float] = {}
        for cell in self.cells:
            if cell.ari is None:
                continue
            key = cell.scaling.value
            if key not in best or cell.ari > best[key]:
                best[key] = cell.ari
        return best

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_digest": self.config_digest,
            "n_docs": self.n_docs,
            "n_terms": self.n_terms,
            "dropped_doc_ids": self.dropped_doc_ids,
            "spectra": self.spectra,
            "elbows": self.elbows,
            "ranks": self.ranks,
            "results": [cell.to_dict() for cell in self.cells],
            "best_ari": self.best_ari(),
            "prune_report": None
            if self.prune_report is None
            else json.loads(self.prune_report.to_json()),
            "labeled": self.labeled,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _cell_seed(master: int, kind: ScalingKind, rank: int) -> int:
    ordinal = list(ScalingKind).index(kind)
    seq = np.random.SeedSequence([master & 0xFFFFFFFFFFFFFFFF, ordinal, rank])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _spectrum_and_ranks(
    matrix, seed: int, radius: int, bounds: tuple[int, int]
) -> tuple[SingularSpectrum, ElbowEstimate | None, list[int] | None]:
    """Spectrum plus elbow-derived ranks; elbow is None when the spectrum is
    too short to estimate one (explicit ranks are then required)."""
    count = min(64, min(matrix.shape))
    spectrum = singular_values(matrix, count, seed=seed)
    if len(spectrum) < 4:
        return spectrum, None, None
    elbow = second_elbow(spectrum)
    return spectrum, elbow, sweep_range(elbow, radius, bounds)


def _load_documents(config: ExperimentConfig) -> tuple[list[RawDocument], bool]:
    """Documents plus whether vocabulary pruning should run."""
    if config.synthetic is not None:
        return generate_synthetic_corpus(config.synthetic), False
    docs = corpus_mod.load_corpus(config.corpus_path, config.corpus_format)
    return docs, True


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the full sweep described by ``config``."""
    docs, prune = _load_documents(config)
    ingest = ingest_documents(
        docs, prune=prune, min_token_len=config.min_token_len, rare_mass=config.rare_mass
    )
    matrix = ingest.matrix
    n, m = matrix.n_docs, matrix.n_terms
    report_warnings: list[str] = []
    if ingest.labels is None:
        report_warnings.append("corpus has no complete labels; ARI columns are absent")
        warnings.warn(report_warnings[-1], stacklevel=2)
    truth = None
    if ingest.labels is not None:
        label_ids = {lab: i for i, lab in enumerate(sorted(set(ingest.labels.values())))}
        truth = Partition({doc: label_ids[lab] for doc, lab in ingest.labels.items()})

    bounds = (2, max(2, min(n, m) - 1))
    spectra: dict[str, list[float]] = {}
    elbows: dict[str, dict] = {}
    ranks_by_scaling: dict[str, list[int]] = {}
    scaled_by_kind: dict[ScalingKind, ScaledMatrix] = {
        kind: apply_scaling(matrix, kind, pwmi_times_n=config.pwmi_times_n)
        for kind in config.scalings
    }

    def resolve_ranks(ranks: list[int] | None, source: str) -> list[int]:
        if config.rank_override:
            return list(config.rank_override)
        if ranks is None:
            raise DataError(
                f"spectrum of {source} is too short to estimate a rank sweep; "
                "pass explicit ranks"
            )
        return ranks

    def elbow_entry(elbow: ElbowEstimate | None) -> dict:
        if elbow is None:
            return {"first": None, "second": None, "degenerate": True}
        return {"first": elbow.first, "second": elbow.second, "degenerate": elbow.degenerate}

    if config.spectrum_on_scaled:
        for kind, scaled in scaled_by_kind.items():
            spectrum, elbow, ranks = _spectrum_and_ranks(
                scaled.matrix, config.seed, config.sweep_radius, bounds
            )
            spectra[kind.value] = [float(v) for v in spectrum.values]
            elbows[kind.value] = elbow_entry(elbow)
            ranks_by_scaling[kind.value] = resolve_ranks(ranks, kind.value)
    else:
        spectrum, elbow, ranks = _spectrum_and_ranks(
            matrix.counts, config.seed, config.sweep_radius, bounds
        )
        spectra["counts"] = [float(v) for v in spectrum.values]
        elbows["counts"] = elbow_entry(elbow)
        shared = resolve_ranks(ranks, "counts")
        for kind in config.scalings:
            ranks_by_scaling[kind.value] = shared

    cells: list[CellResult] = []
    for kind in config.scalings:
        scaled = scaled_by_kind[kind]
        for rank in ranks_by_scaling[kind.value]:
            seed = _cell_seed(config.seed, kind, rank)
            nmf_config = NmfConfig(
                rank=rank,
                loss=config.loss,
                max_iter=config.max_iter,
                tol=config.tol,
                seed=seed,
                init=config.init,
            )
            model = factorize(scaled.matrix, nmf_config)
            W, _ = post_scale(model.W, model.H, scaled)
            cell = CellResult(
                scaling=kind,
                rank=rank,
                seed=seed,
                converged=model.converged,
                n_iter=model.n_iter,
                objective=model.objective_history[-1],
            )
            if truth is not None:
                predicted = assign_clusters(W, ingest.doc_ids)
                score = score_partitions(predicted, truth)
                cell.ari, cell.rand, cell.k_pred = score.ari, score.rand, score.k_pred
            cells.append(cell)

    return ExperimentReport(
        config=config.to_dict(),
        config_digest=config.digest(),
        n_docs=n,
        n_terms=m,
        dropped_doc_ids=ingest.dropped_ids,
        spectra=spectra,
        elbows=elbows,
        ranks=ranks_by_scaling,
        cells=cells,
        prune_report=ingest.prune_report,
        labeled=truth is not None,
        warnings=report_warnings,
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _results_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scaling", "rank", "ari", "rand", "converged", "iterations", "objective"])
    for cell in report.cells:
        writer.writerow(
            [
                cell.scaling.value,
                cell.rank,
                _format_cell(cell.ari),
                _format_cell(cell.rand),
                _format_cell(cell.converged),
                cell.n_iter,
                _format_cell(cell.objective),
            ]
        )
    return buf.getvalue()


def _svg_line(x1: float, y1: float, x2: float, y2: float, color: str = "#444444", width: float = 1.0) -> str:
    return (
        f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
        f'stroke="{color}" stroke-width="{width:g}"/>'
    )


def _svg_text(x: float, y: float, text: str, size: int = 12, anchor: str = "middle") -> str:
    return (
        f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
        f'text-anchor="{anchor}">{text}</text>'
    )


def _ari_svg(report: ExperimentReport) -> str:
    """ARI against rank, one polyline per scaling, as a standalone SVG."""
    width, height = 640, 420
    left, right, top, bottom = 60, 170, 30, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    series: dict[str, list[tuple[int, float]]] = {}
    for cell in report.cells:
        if cell.ari is not None:
            series.setdefault(cell.scaling.value, []).append((cell.rank, cell.ari))
    all_ranks = sorted({r for pts in series.values() for r, _ in pts})
    all_aris = [a for pts in series.values() for _, a in pts]
    rank_lo, rank_hi = (all_ranks[0], all_ranks[-1]) if all_ranks else (0, 1)
    if rank_lo == rank_hi:
        rank_lo, rank_hi = rank_lo - 1, rank_hi + 1
    y_lo = min(0.0, min(all_aris)) if all_aris else 0.0
    y_hi = 1.0

    def sx(rank: float) -> float:
        return left + (rank - rank_lo) / (rank_hi - rank_lo) * plot_w

    def sy(ari: float) -> float:
        return top + (y_hi - ari) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        _svg_line(left, top, left, top + plot_h),
        _svg_line(left, top + plot_h, left + plot_w, top + plot_h),
        _svg_text(left + plot_w / 2, height - 12, "rank"),
        _svg_text(18, top + plot_h / 2, "ARI"),
    ]
    n_yticks = 5
    for i in range(n_yticks + 1):
        y_val = y_lo + (y_hi - y_lo) * i / n_yticks
        y = sy(y_val)
        parts.append(_svg_line(left - 4, y, left, y))
        parts.append(_svg_text(left - 8, y + 4, f"{y_val:.1f}", size=10, anchor="end"))
    for rank in all_ranks:
        x = sx(rank)
        parts.append(_svg_line(x, top + plot_h, x, top + plot_h + 4))
        parts.append(_svg_text(x, top + plot_h + 16, str(rank), size=10))
    legend_y = top + 10
    for kind in ScalingKind:
        if kind.value not in series:
            continue
        pts = sorted(series[kind.value])
        coords = " ".join(f"{sx(r):.2f},{sy(a):.2f}" for r, a in pts)
        color = _SCALING_COLORS[kind]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        lx = left + plot_w + 12
        parts.append(f'<rect x="{lx}" y="{legend_y - 9}" width="12" height="12" fill="{color}"/>')
        parts.append(_svg_text(lx + 18, legend_y + 2, kind.value, size=11, anchor="start"))
        legend_y += 20
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: ExperimentReport, out_dir: str | Path) -> dict[str, Path]:
    """Write results.csv, report.json, and ari_vs_rank.svg into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "csv": out / "results.csv",
            "json": out / "report.json",
            "svg": out / "ari_vs_rank.svg",
        }
        paths["csv"].write_text(_results_csv(report), encoding="utf-8")
        paths["json"].write_text(report.to_json(), encoding="utf-8")
        paths["svg"].write_text(_ari_svg(report), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write report to {out}: {exc}") from exc
    return paths
