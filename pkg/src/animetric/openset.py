"""Open-set diagnosis and prompt-refinement loop.

Given an arbitrary video and its prompt, a judge conditioned on one
evaluation dimension enumerates what the video gets wrong as diagnostic
questions; a text refiner folds those into an improved prompt; an external
generator produces a new candidate, which is re-extracted and re-scored.
The loop stops when the configured target score is met, the score stops
improving by at least one point, or the iteration budget runs out.

Trace layout: iteration 0 is the original (video, prompt); iteration k
records the refined prompt, the diagnostic questions that produced it,
the candidate video, and its score. A clean diagnosis of the original
video ends the loop before any generator call.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from . import appeal, camera as camera_mod, siso as siso_mod, squash as squash_mod
from .gateway import QARequest, VlmGateway
from .harness import REBOUND_QUESTION, SCORER_KINDS
from .qa import score_qa

REFINER_TEMPLATE_VERSION = "refiner-v1"
REFINER_TEMPLATE = (
    "You improve prompts for an image-to-video generation model.\n"
    "Original prompt:\n{prompt}\n\n"
    "A reviewer found these issues with the generated video:\n{questions}\n\n"
    "Rewrite the prompt so the regenerated video fixes every issue while "
    "keeping the original intent. Reply with the improved prompt only."
)

DIAGNOSIS_PROMPT = (
    "Inspect the provided video frames against this prompt:\n{prompt}\n\n"
    "List concrete failures of the video under the dimension described in "
    "the system context, phrased as yes/no questions a later reviewer could "
    "answer 'yes' once the failure is fixed. Return between 0 and 10 "
    "questions; return an empty list if the video already satisfies the "
    "dimension."
)

MAX_DIAGNOSTIC_QUESTIONS = 10
DEFAULT_MIN_IMPROVEMENT = 1.0
DEFAULT_MAX_ITERS = 3

STOP_TARGET_MET = "score_improved_target_met"
STOP_MAX_ITERS = "max_iters"
STOP_NO_IMPROVEMENT = "no_improvement"

RUBRIC_HOOKS = ("qa", "rationality-qa")


@dataclass(frozen=True)
class DimensionSpec:
    """One refinable dimension: its judge-facing definition and its scorer."""

    dimension_id: str
    definition: str
    scoring_hook: str

    def __post_init__(self):
        if self.scoring_hook not in SCORER_KINDS:
            raise ValueError(
                f"scoring hook {self.scoring_hook!r} is not a known scorer kind"
            )


@dataclass(frozen=True)
class Iteration:
    prompt: str
    questions: tuple[str, ...]
    video_ref: str
    score: float | None  # None when generation failed
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "questions": list(self.questions),
            "video_ref": self.video_ref,
            "score": self.score,
            "error": self.error,
        }


@dataclass(frozen=True)
class RefinementTrace:
    iterations: tuple[Iteration, ...]
    best_index: int
    stop_reason: str

    def __post_init__(self):
        scored = [it.score for it in self.iterations if it.score is not None]
        best = self.iterations[self.best_index].score
        if best is None or (scored and best < max(scored)):
            raise ValueError("best_index does not point at the maximum score")

    @property
    def best(self) -> Iteration:
        return self.iterations[self.best_index]

    def to_dict(self) -> dict:
        return {
            "iterations": [it.to_dict() for it in self.iterations],
            "best_index": self.best_index,
            "stop_reason": self.stop_reason,
            "refiner_template": REFINER_TEMPLATE_VERSION,
        }


class Generator(Protocol):
    """Produces a candidate video from (source image, prompt)."""

    def __call__(self, image: str, prompt: str, out_path: str) -> str: ...


class CommandGenerator:
    """Invokes ``<cmd> --image <path> --prompt <file> --out <path>``."""

    def __init__(self, command: str):
        self.command = command

    def __call__(self, image: str, prompt: str, out_path: str) -> str:
        with tempfile.NamedTemporaryFile(
            "w", suffix=".txt", delete=False
        ) as prompt_file:
            prompt_file.write(prompt)
            prompt_path = prompt_file.name
        argv = shlex.split(self.command) + [
            "--image", image, "--prompt", prompt_path, "--out", out_path,
        ]
        completed = subprocess.run(argv, capture_output=True, text=True)
        if completed.returncode != 0:
            raise RuntimeError(
                f"generator command failed ({completed.returncode}): "
                f"{completed.stderr.strip()[:500]}"
            )
        return out_path


class HttpGenerator:
    """POSTs {image, prompt} and expects {"video": <reference>} back."""

    def __init__(self, endpoint_url: str, timeout: float = 600.0):
        self.endpoint_url = endpoint_url
        self.timeout = timeout

    def __call__(self, image: str, prompt: str, out_path: str) -> str:
        response = requests.post(
            self.endpoint_url,
            json={"image": image, "prompt": prompt},
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["video"]


def diagnose(
    frames: Sequence[str],
    prompt: str,
    spec: DimensionSpec,
    gateway: VlmGateway,
) -> list[str]:
    """Ask the judge to enumerate dimension-specific failures of the video."""
    if not frames:
        raise ValueError("diagnosis needs at least one frame")
    questions = gateway.ask_question_list(
        system_context=(
            f"Evaluation dimension '{spec.dimension_id}': {spec.definition}"
        ),
        user_text=DIAGNOSIS_PROMPT.format(prompt=prompt),
        frames=frames,
    )
    return questions[:MAX_DIAGNOSTIC_QUESTIONS]


def refine_prompt(prompt: str, questions: Sequence[str], gateway: VlmGateway) -> str:
    """Fold diagnostic questions into an improved prompt.

    An empty diagnosis returns the prompt verbatim, no refiner call.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    if not questions:
        return prompt
    numbered = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(questions))
    completion = gateway.complete_text(
        REFINER_TEMPLATE.format(prompt=prompt, questions=numbered)
    )
    refined = completion.text.strip()
    if not refined:
        raise RuntimeError("refiner returned an empty prompt")
    return refined


def score_with_hook(
    spec: DimensionSpec,
    artifacts: dict,
    gateway: VlmGateway,
    rubric: tuple[str, ...] = (),
    prompt: str = "",
) -> float:
    """Score one video's extracted artifacts with the spec's scoring hook.

    Judge-based hooks score against ``rubric`` (the frozen diagnostic
    question set, so scores are comparable across iterations); an empty
    rubric means nothing was found wrong and scores 100.
    """
    hook = spec.scoring_hook
    if hook in RUBRIC_HOOKS:
        if not rubric:
            return 100.0
        frames = tuple(artifacts["frames"])
        verdicts = []
        for question in rubric:
            answer = gateway.ask_yes_no(
                QARequest(
                    question=question,
                    system_context=(
                        f"Evaluation dimension '{spec.dimension_id}': {spec.definition}"
                    ),
                    frames=frames,
                )
            )
            verdicts.append(answer.verdict)
        return score_qa(verdicts)

    if hook == "siso":
        curve = siso_mod.relative_speed_curve(artifacts["tracks"])
        verdict = siso_mod.score_siso(
            curve, video_frames=artifacts["tracks"].frame_count
        )
        return verdict.normalized_score

    if hook == "squash":
        answer = gateway.ask_yes_no(
            QARequest(
                question=REBOUND_QUESTION,
                system_context=f"Generation prompt: {prompt}" if prompt else "",
                frames=tuple(artifacts["frames"]),
            )
        )
        result = squash_mod.squash_stretch_score(
            artifacts["masks"], rebound=answer.verdict == "yes"
        )
        return result.combined_score

    if hook == "dyndeg":
        flows = artifacts["flow"]
        height, width = flows.data.shape[1:3]
        return 100.0 if appeal.dynamic_degree(flows, height, width).is_dynamic else 0.0

    if hook == "diversity":
        return appeal.diversity_score(artifacts["embeddings"].vectors)

    if hook == "novelty":
        return appeal.novelty_score(
            artifacts["embeddings"], artifacts["ref_embeddings"]
        )

    if hook == "camera":
        verdict = camera_mod.classify_camera(artifacts["tracks"])
        expected = artifacts.get("expected_label")
        if expected is None:
            raise ValueError("camera hook needs an expected_label artifact entry")
        return 100.0 if verdict.predicted == expected else 0.0

    if hook == "quality":
        return appeal.perceptual_quality(artifacts["quality"])

    if hook == "semext":
        frames = tuple(artifacts["frames"])
        context = f"Generation prompt: {prompt}" if prompt else ""
        from .harness import ACTION_COUNT_QUESTION, ASPECT_QUESTIONS

        verdicts = {
            aspect: gateway.ask_yes_no(
                QARequest(question=q, system_context=context, frames=frames)
            ).verdict
            for aspect, q in ASPECT_QUESTIONS.items()
        }
        count = gateway.ask_count(
            QARequest(
                question=ACTION_COUNT_QUESTION, system_context=context, frames=frames
            )
        ).count
        return appeal.semantic_extension(verdicts, count or 0).normalized

    raise ValueError(f"no open-set scoring for hook {hook!r}")


@dataclass(frozen=True)
class OpenSetCase:
    video: str
    prompt: str
    source_image: str = ""


def refine_iterate(
    case: OpenSetCase,
    spec: DimensionSpec,
    generator: Generator,
    extractor_hook: Callable[[str], dict],
    gateway: VlmGateway,
    max_iters: int = DEFAULT_MAX_ITERS,
    target_score: float | None = None,
    min_improvement: float = DEFAULT_MIN_IMPROVEMENT,
    workdir: str | Path | None = None,
) -> RefinementTrace:
    """Run the diagnose -> refine -> regenerate loop for one case.

    ``extractor_hook`` maps a video reference to the artifact dict the
    scoring hook needs; it must always include ``frames`` (still paths for
    the judge). Generator failures are recorded in the trace and end the
    loop with the best result so far.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not case.prompt:
        raise ValueError("the case prompt must be non-empty")
    workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="refine-"))
    workdir.mkdir(parents=True, exist_ok=True)

    artifacts = extractor_hook(case.video)
    questions = diagnose(artifacts["frames"], case.prompt, spec, gateway)
    # Judge-based hooks keep this first diagnosis as a frozen rubric so all
    # iterations are scored on the same questions.
    rubric = tuple(questions) if spec.scoring_hook in RUBRIC_HOOKS else ()
    score0 = score_with_hook(spec, artifacts, gateway, rubric, prompt=case.prompt)
    iterations = [Iteration(case.prompt, (), case.video, float(score0))]

    if target_score is not None and score0 >= target_score:
        return _finish(iterations, STOP_TARGET_MET)
    if not questions:
        return _finish(iterations, STOP_NO_IMPROVEMENT)

    current_prompt = case.prompt
    stop_reason = STOP_MAX_ITERS
    for step in range(1, max_iters + 1):
        refined = refine_prompt(current_prompt, questions, gateway)
        candidate_path = str(workdir / f"candidate-{step}.mp4")
        try:
            candidate = generator(
                case.source_image or case.video, refined, candidate_path
            )
        except Exception as exc:
            iterations.append(
                Iteration(
                    prompt=refined,
                    questions=tuple(questions),
                    video_ref=candidate_path,
                    score=None,
                    error=f"generation failed: {exc}",
                )
            )
            stop_reason = STOP_NO_IMPROVEMENT
            break

        artifacts = extractor_hook(candidate)
        score = float(
            score_with_hook(spec, artifacts, gateway, rubric, prompt=refined)
        )
        iterations.append(
            Iteration(
                prompt=refined,
                questions=tuple(questions),
                video_ref=candidate,
                score=score,
            )
        )

        previous = iterations[-2].score
        improvement = score - (previous if previous is not None else score)
        if target_score is not None and score >= target_score:
            stop_reason = STOP_TARGET_MET
            break
        if improvement < min_improvement:
            stop_reason = STOP_NO_IMPROVEMENT
            break
        if step == max_iters:
            stop_reason = STOP_MAX_ITERS
            break

        current_prompt = refined
        questions = diagnose(artifacts["frames"], current_prompt, spec, gateway)
        if not questions:
            stop_reason = STOP_NO_IMPROVEMENT
            break

    return _finish(iterations, stop_reason)


def _finish(iterations: list[Iteration], stop_reason: str) -> RefinementTrace:
    scored = [(i, it.score) for i, it in enumerate(iterations) if it.score is not None]
    best_index = max(scored, key=lambda pair: pair[1])[0]
    # max() keeps the earliest of tied scores, so a no-op refinement
    # leaves best_index at the original video.
    return RefinementTrace(
        iterations=tuple(iterations),
        best_index=best_index,
        stop_reason=stop_reason,
    )
