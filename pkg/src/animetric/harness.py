"""Close-set benchmark runner.

Loads a manifest, routes every case to its scorer over pre-extracted ABTF
artifacts, and aggregates per-dimension scores into a report. A case with
a missing or corrupt artifact fails loudly and individually: it is
excluded from the dimension mean, counted in a visible failure tally, and
flips the run's exit status, but never becomes a silent zero.

With a warm judge cache the whole run is a pure function of (manifest,
artifacts, cache): two runs emit byte-identical reports.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import appeal, camera, qa, siso, squash
from .artifacts import (
    EmbeddingSet,
    FlowSequence,
    MaskSequence,
    QualitySeries,
    TrackSet,
    VideoCase,
)
from .gateway import QARequest, VlmGateway

SCORER_KINDS = (
    "qa",
    "siso",
    "squash",
    "dyndeg",
    "diversity",
    "novelty",
    "semext",
    "camera",
    "quality",
    "rationality-qa",
)

REQUIRED_ARTIFACTS = {
    "qa": {"frames"},
    "rationality-qa": {"frames"},
    "semext": {"frames"},
    "siso": {"tracks"},
    "camera": {"tracks"},
    "squash": {"masks", "frames"},
    "dyndeg": {"flow"},
    "diversity": {"embeddings"},
    "novelty": {"embeddings"},
    "quality": {"quality"},
}

# Close-set per-dimension case counts checked in strict mode.
CLOSE_SET_CASE_COUNTS = {
    "appearance": 30,
    "behavior": 30,
    "personality": 30,
    "anticipation": 30,
    "follow_through": 30,
    "slow_in_slow_out": 30,
    "squash_stretch": 30,
    "distinctive_content": 30,
    "solid_drawing": 60,
    "novelty": 30,
    "diversity": 50,
    "dynamic_degree": 60,
    "semantic_extension": 30,
    "semantic_object": 30,
    "semantic_action": 30,
    "semantic_color": 30,
    "semantic_scene": 30,
    "motion_rationality": 30,
    "camera_motion": 70,
}

REBOUND_QUESTION = (
    "Does the primary object or character visibly rebound, an impact or "
    "compression followed by a recovery, at any point in the video?"
)

ASPECT_QUESTIONS = {
    "new_characters": "Beyond the prompt, does the video introduce any new characters?",
    "new_objects": (
        "Beyond the prompt, does the video introduce new objects or object interactions?"
    ),
    "camera_editing": (
        "Does the video add camera or editing changes (cuts, angle changes, "
        "camera movement) beyond the prompt?"
    ),
    "scene_expansion": "Does the video coherently expand the scene beyond the prompt?",
    "environment_change": (
        "Does the video add environmental changes (lighting, weather, ambient "
        "objects) beyond the prompt?"
    ),
}

ACTION_COUNT_QUESTION = (
    "How many distinct new actions does the video show beyond what the prompt "
    "explicitly states?"
)

REPORT_NOTES = (
    "dimension score = uniform mean of case scores (exact-match accuracy for "
    "camera, dynamic fraction for dynamic degree)",
    "semantic extension normalization caps new actions at 5 and divides by 10",
    "failed cases are excluded from dimension means and tallied separately",
)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestDimension:
    dimension_id: str
    scorer: str
    cases: tuple[VideoCase, ...]
    expected_count: int | None = None


@dataclass(frozen=True)
class Manifest:
    suite: str
    dimensions: tuple[ManifestDimension, ...]
    base_dir: Path = field(default_factory=Path)

    def case_count(self) -> int:
        return sum(len(d.cases) for d in self.dimensions)


def load_manifest(path: str | Path, strict_counts: bool = False) -> Manifest:
    """Parse and validate a manifest file; see docs/manifest.schema.json."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if not isinstance(doc, dict) or "dimensions" not in doc:
        raise ManifestError(f"{path}: manifest must be an object with 'dimensions'")

    seen_cases: set[str] = set()
    dimensions = []
    for dim_doc in doc["dimensions"]:
        dimension_id = dim_doc.get("dimension_id")
        scorer = dim_doc.get("scorer")
        if not dimension_id:
            raise ManifestError(f"{path}: dimension without dimension_id")
        if scorer not in SCORER_KINDS:
            raise ManifestError(
                f"{path}: dimension {dimension_id!r} has unknown scorer {scorer!r}"
            )
        cases = []
        for case_doc in dim_doc.get("cases", []):
            case = VideoCase(
                case_id=case_doc["case_id"],
                dimension_id=dimension_id,
                source_image=case_doc.get("source_image", ""),
                prompt=case_doc.get("prompt", ""),
                expected_label=case_doc.get("expected_label"),
                question_bank_ref=case_doc.get("question_bank_ref"),
                artifact_needs=frozenset(case_doc.get("artifact_needs", [])),
            )
            if case.case_id in seen_cases:
                raise ManifestError(f"{path}: duplicate case_id {case.case_id!r}")
            seen_cases.add(case.case_id)
            missing = REQUIRED_ARTIFACTS[scorer] - case.artifact_needs
            if missing:
                raise ManifestError(
                    f"{path}: case {case.case_id!r} ({scorer}) must declare "
                    f"artifact needs {sorted(missing)}"
                )
            cases.append(case)
        expected = dim_doc.get("expected_count")
        if strict_counts and dimension_id in CLOSE_SET_CASE_COUNTS:
            required = CLOSE_SET_CASE_COUNTS[dimension_id]
            if len(cases) != required:
                raise ManifestError(
                    f"{path}: strict mode: dimension {dimension_id!r} has "
                    f"{len(cases)} cases, close-set requires {required}"
                )
        if expected is not None and len(cases) != expected:
            raise ManifestError(
                f"{path}: dimension {dimension_id!r} declares expected_count "
                f"{expected} but has {len(cases)} cases"
            )
        dimensions.append(
            ManifestDimension(
                dimension_id=dimension_id,
                scorer=scorer,
                cases=tuple(cases),
                expected_count=expected,
            )
        )
    return Manifest(
        suite=doc.get("suite", path.stem),
        dimensions=tuple(dimensions),
        base_dir=path.parent,
    )


@dataclass(frozen=True)
class RunConfig:
    tau: float = squash.DEFAULT_TAU
    siso_window: int = siso.DEFAULT_WINDOW
    siso_interval_frac: float = siso.DEFAULT_INTERVAL_FRAC
    dynamic_fraction: float = appeal.DEFAULT_DYNAMIC_FRACTION
    static_frac: float = camera.DEFAULT_STATIC_FRAC
    zoom_dominance: float = camera.DEFAULT_ZOOM_DOMINANCE
    workers: int = 1

    def digest(self) -> str:
        doc = asdict(self)
        doc.pop("workers")  # execution detail, not scoring-relevant
        blob = json.dumps(doc, sort_keys=True).encode("ascii")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class CaseRecord:
    case_id: str
    dimension_id: str
    scorer: str
    score: float | None
    error: str | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "dimension_id": self.dimension_id,
            "scorer": self.scorer,
            "score": self.score,
            "error": self.error,
            "detail": self.detail,
        }


@dataclass
class ModelResult:
    model_name: str
    dimension_scores: dict[str, float | None]
    cases: list[CaseRecord]
    failed_cases: int
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "dimensions": self.dimension_scores,
            "cases": [c.to_dict() for c in self.cases],
            "failed_cases": self.failed_cases,
            "provenance": self.provenance,
        }


@dataclass
class BenchmarkReport:
    suite: str
    models: dict[str, ModelResult]

    @property
    def failed_cases(self) -> int:
        return sum(m.failed_cases for m in self.models.values())

    def dimension_table(self) -> dict[str, dict[str, float | None]]:
        """{model: {dimension: score}} for normalization and rendering."""
        return {name: dict(m.dimension_scores) for name, m in self.models.items()}

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "models": {name: m.to_dict() for name, m in self.models.items()},
            "notes": list(REPORT_NOTES),
        }


class CaseFailure(RuntimeError):
    """Raised inside a scorer to fail one case without stopping the run."""


def _artifact_path(artifacts_dir: Path, case_id: str, kind: str) -> Path:
    suffix = {
        "masks": ".masks.abtf",
        "tracks": ".tracks.abtf",
        "flow": ".flow.abtf",
        "embeddings": ".emb.abtf",
        "quality": ".quality.abtf",
    }[kind]
    path = artifacts_dir / f"{case_id}{suffix}"
    if not path.exists():
        raise CaseFailure(f"missing artifact {path.name}")
    return path


def _frame_paths(artifacts_dir: Path, case_id: str) -> list[str]:
    frames_dir = artifacts_dir / f"{case_id}.frames"
    if not frames_dir.is_dir():
        raise CaseFailure(f"missing frames directory {frames_dir.name}")
    frames = sorted(str(p) for p in frames_dir.glob("*.png"))
    if not frames:
        raise CaseFailure(f"no PNG frames in {frames_dir.name}")
    return frames


def _load_bank(manifest: Manifest, case: VideoCase) -> qa.QuestionBank:
    if not case.question_bank_ref:
        raise CaseFailure(f"case {case.case_id!r} has no question_bank_ref")
    bank_path = manifest.base_dir / case.question_bank_ref
    if not bank_path.exists():
        raise CaseFailure(f"question bank {bank_path} not found")
    return qa.load_question_bank(bank_path)


def _score_case(
    manifest: Manifest,
    dimension: ManifestDimension,
    case: VideoCase,
    artifacts_dir: Path,
    gateway: VlmGateway,
    config: RunConfig,
) -> tuple[float, dict]:
    kind = dimension.scorer
    if kind in ("qa", "rationality-qa"):
        bank = _load_bank(manifest, case)
        frames = _frame_paths(artifacts_dir, case.case_id)
        if bank.setting == qa.ROTATION_SETTING:
            result = qa.evaluate_ip_rotation(bank, case, frames, gateway)
        else:
            result = qa.evaluate_case(bank, case, frames, gateway)
        return result.score, result.to_dict()

    if kind == "siso":
        tracks = TrackSet.load(_artifact_path(artifacts_dir, case.case_id, "tracks"))
        curve = siso.relative_speed_curve(tracks)
        verdict = siso.score_siso(
            curve,
            video_frames=tracks.frame_count,
            window=config.siso_window,
            interval_frac=config.siso_interval_frac,
        )
        return verdict.normalized_score, verdict.to_dict()

    if kind == "squash":
        masks = MaskSequence.load(_artifact_path(artifacts_dir, case.case_id, "masks"))
        frames = _frame_paths(artifacts_dir, case.case_id)
        answer = gateway.ask_yes_no(
            QARequest(
                question=REBOUND_QUESTION,
                system_context=f"Generation prompt: {case.prompt}" if case.prompt else "",
                frames=tuple(frames),
                case_id=case.case_id,
            )
        )
        rebound = answer.verdict == "yes"
        result = squash.squash_stretch_score(masks, rebound=rebound, tau=config.tau)
        detail = result.to_dict()
        detail["rebound_verdict"] = answer.verdict
        return result.combined_score, detail

    if kind == "dyndeg":
        flow_path = _artifact_path(artifacts_dir, case.case_id, "flow")
        flows = FlowSequence.load(flow_path)
        height, width = flows.data.shape[1:3]
        result = appeal.dynamic_degree(
            flows, height, width, dynamic_fraction=config.dynamic_fraction
        )
        return (100.0 if result.is_dynamic else 0.0), result.to_dict()

    if kind == "diversity":
        emb = EmbeddingSet.load(_artifact_path(artifacts_dir, case.case_id, "embeddings"))
        score = appeal.diversity_score(emb.vectors)
        return score, {"diversity": score}

    if kind == "novelty":
        gen = EmbeddingSet.load(_artifact_path(artifacts_dir, case.case_id, "embeddings"))
        ref_path = artifacts_dir / f"{case.case_id}.ref.emb.abtf"
        if not ref_path.exists():
            raise CaseFailure(f"missing reference embeddings {ref_path.name}")
        ref = EmbeddingSet.load(ref_path)
        score = appeal.novelty_score(gen, ref)
        return score, {"novelty": score}

    if kind == "semext":
        frames = _frame_paths(artifacts_dir, case.case_id)
        context = f"Generation prompt: {case.prompt}" if case.prompt else ""
        verdicts = {}
        for aspect, question in ASPECT_QUESTIONS.items():
            answer = gateway.ask_yes_no(
                QARequest(
                    question=question,
                    system_context=context,
                    frames=tuple(frames),
                    case_id=case.case_id,
                )
            )
            verdicts[aspect] = answer.verdict
        count_answer = gateway.ask_count(
            QARequest(
                question=ACTION_COUNT_QUESTION,
                system_context=context,
                frames=tuple(frames),
                case_id=case.case_id,
            )
        )
        action_count = count_answer.count if count_answer.count is not None else 0
        tally = appeal.semantic_extension(verdicts, action_count)
        detail = tally.to_dict()
        detail["aspect_verdicts"] = verdicts
        detail["count_parsed"] = count_answer.count is not None
        return tally.normalized, detail

    if kind == "camera":
        tracks = TrackSet.load(_artifact_path(artifacts_dir, case.case_id, "tracks"))
        verdict = camera.classify_camera(
            tracks,
            static_frac=config.static_frac,
            zoom_dominance=config.zoom_dominance,
        )
        if case.expected_label is None:
            raise CaseFailure(f"camera case {case.case_id!r} has no expected label")
        score = 100.0 if verdict.predicted == case.expected_label else 0.0
        detail = verdict.to_dict()
        detail["expected"] = case.expected_label
        return score, detail

    if kind == "quality":
        series = QualitySeries.load(
            _artifact_path(artifacts_dir, case.case_id, "quality")
        )
        score = appeal.perceptual_quality(series)
        return score, {"mean_quality": score}

    raise CaseFailure(f"no scorer implementation for kind {kind!r}")


def run_close_set(
    manifest: Manifest,
    artifacts_dir: str | Path,
    gateway: VlmGateway,
    model_name: str = "model",
    config: RunConfig | None = None,
) -> BenchmarkReport:
    """Score every manifest case and aggregate per-dimension results."""
    artifacts_dir = Path(artifacts_dir)
    config = config or RunConfig()

    jobs = [
        (dimension, case)
        for dimension in manifest.dimensions
        for case in dimension.cases
    ]

    def run_one(job) -> CaseRecord:
        dimension, case = job
        try:
            score, detail = _score_case(
                manifest, dimension, case, artifacts_dir, gateway, config
            )
            return CaseRecord(
                case_id=case.case_id,
                dimension_id=dimension.dimension_id,
                scorer=dimension.scorer,
                score=score,
                detail=detail,
            )
        except Exception as exc:
            return CaseRecord(
                case_id=case.case_id,
                dimension_id=dimension.dimension_id,
                scorer=dimension.scorer,
                score=None,
                error=f"{type(exc).__name__}: {exc}",
            )

    if config.workers > 1 and jobs:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run_one, jobs))
    else:
        records = [run_one(job) for job in jobs]

    dimension_scores: dict[str, float | None] = {}
    for dimension in manifest.dimensions:
        scores = [
            r.score
            for r in records
            if r.dimension_id == dimension.dimension_id and r.score is not None
        ]
        dimension_scores[dimension.dimension_id] = (
            sum(scores) / len(scores) if scores else None
        )

    failed = sum(1 for r in records if r.error is not None)
    provenance = {
        "gateway_model": gateway.config.model_name,
        "cache_digest": gateway.cache_digest(),
        "config_hash": config.digest(),
    }
    result = ModelResult(
        model_name=model_name,
        dimension_scores=dimension_scores,
        cases=records,
        failed_cases=failed,
        provenance=provenance,
    )
    return BenchmarkReport(suite=manifest.suite, models={model_name: result})


def merge_reports(reports: list[BenchmarkReport]) -> BenchmarkReport:
    """Combine single-model reports of the same suite for comparison."""
    if not reports:
        raise ValueError("no reports to merge")
    suite = reports[0].suite
    models: dict[str, ModelResult] = {}
    for report in reports:
        for name, result in report.models.items():
            if name in models:
                raise ValueError(f"duplicate model {name!r} across reports")
            models[name] = result
    return BenchmarkReport(suite=suite, models=models)


def normalize_scores(
    table: dict[str, dict[str, float | None]],
) -> dict[str, dict[str, float | None]]:
    """Per-dimension min-max normalization of model scores to [0, 1].

    Constant columns map to 0.5; dimensions a model failed stay None.
    """
    if len(table) < 2:
        raise ValueError("normalization needs at least 2 models")
    dimensions = sorted({d for scores in table.values() for d in scores})
    normalized = {model: {} for model in table}
    for dim in dimensions:
        values = [
            table[model][dim]
            for model in table
            if table[model].get(dim) is not None
        ]
        lo = min(values) if values else None
        hi = max(values) if values else None
        for model in table:
            value = table[model].get(dim)
            if value is None:
                normalized[model][dim] = None
            elif hi == lo:
                normalized[model][dim] = 0.5
            else:
                normalized[model][dim] = (value - lo) / (hi - lo)
    return normalized


def render_report(report: BenchmarkReport, out_dir: str | Path) -> list[Path]:
    """Emit report.json (canonical), report.md, and radar-data.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    json_path = out_dir / "report.json"
    json_path.write_text(
        json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
    )

    md_path = out_dir / "report.md"
    md_path.write_text(_render_markdown(report))

    csv_path = out_dir / "radar-data.csv"
    table = report.dimension_table()
    radar = normalize_scores(table) if len(table) >= 2 else table
    models = sorted(radar)
    dimensions = sorted({d for scores in radar.values() for d in scores})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dimension"] + models)
    for dim in dimensions:
        writer.writerow(
            [dim]
            + [
                "" if radar[m].get(dim) is None else f"{radar[m][dim]:.6f}"
                for m in models
            ]
        )
    csv_path.write_text(buf.getvalue())
    return [json_path, md_path, csv_path]


def _render_markdown(report: BenchmarkReport) -> str:
    models = sorted(report.models)
    dimensions = sorted(
        {d for m in report.models.values() for d in m.dimension_scores}
    )
    lines = [f"# Benchmark report: {report.suite}", ""]
    header = "| dimension | " + " | ".join(models) + " |"
    rule = "|---" * (len(models) + 1) + "|"
    lines += [header, rule]
    for dim in dimensions:
        cells = []
        for model in models:
            score = report.models[model].dimension_scores.get(dim)
            cells.append("failed" if score is None else f"{score:.2f}")
        lines.append(f"| {dim} | " + " | ".join(cells) + " |")
    lines.append("")

    failures = [
        (model, record)
        for model in models
        for record in report.models[model].cases
        if record.error is not None
    ]
    if failures:
        lines += ["## Failed cases", ""]
        for model, record in failures:
            lines.append(
                f"- `{model}` / `{record.dimension_id}` / `{record.case_id}`: "
                f"{record.error}"
            )
        lines.append("")

    lines += ["## Notes", ""]
    for note in REPORT_NOTES:
        lines.append(f"- {note}")
    lines.append("")
    for model in models:
        prov = report.models[model].provenance
        lines.append(
            f"- `{model}`: judge `{prov['gateway_model']}`, cache "
            f"`{prov['cache_digest'][:12]}`, config `{prov['config_hash'][:12]}`"
        )
    lines.append("")
    return "\n".join(lines)
