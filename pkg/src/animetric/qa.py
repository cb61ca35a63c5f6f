"""Question banks and structured yes/no scoring.

A bank holds per-case question sets for one dimension (optionally with a
character profile used as judge context). Scoring maps yes to 1 and
everything else, including unparseable judge output, to 0, then averages
to [0, 100]. Unparseable answers are surfaced via ``unparseable_count``
rather than being dropped, so judge failures depress the score visibly
instead of inflating it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .artifacts import VideoCase
from .gateway import QARequest, VlmGateway

ROTATION_SETTING = "rotation_360"

VERDICTS = ("yes", "no", "unparseable")


class BankError(ValueError):
    """A question bank is malformed or missing a requested entry."""


@dataclass(frozen=True)
class BankEntry:
    case_id: str
    questions: tuple[tuple[str, str], ...]  # (question_id, text)
    profile: str = ""

    def __post_init__(self):
        if len(self.questions) < 1:
            raise BankError(f"case {self.case_id}: needs at least one question")
        ids = [qid for qid, _ in self.questions]
        if len(set(ids)) != len(ids):
            raise BankError(f"case {self.case_id}: duplicate question ids")


@dataclass(frozen=True)
class QuestionBank:
    dimension_id: str
    entries: dict[str, BankEntry]
    setting: str = ""

    def entry_for(self, case_id: str) -> BankEntry:
        if case_id not in self.entries:
            raise BankError(
                f"bank for {self.dimension_id!r} has no entry for case {case_id!r}"
            )
        return self.entries[case_id]


def load_question_bank(path: str | Path) -> QuestionBank:
    """Parse {dimension_id, setting?, cases: [{case_id, profile?, questions}]}."""
    doc = json.loads(Path(path).read_text())
    entries = {}
    for case_doc in doc.get("cases", []):
        case_id = case_doc["case_id"]
        if case_id in entries:
            raise BankError(f"duplicate bank entry for case {case_id!r}")
        for q in case_doc.get("questions", []):
            # Weights exist for forward compatibility only; scoring is unweighted.
            if q.get("weight", 1) != 1:
                raise BankError(
                    f"case {case_id!r}, question {q.get('id')!r}: weights are fixed at 1"
                )
        questions = tuple(
            (q["id"], q["text"]) for q in case_doc.get("questions", [])
        )
        entries[case_id] = BankEntry(
            case_id=case_id,
            questions=questions,
            profile=case_doc.get("profile", ""),
        )
    return QuestionBank(
        dimension_id=doc["dimension_id"],
        entries=entries,
        setting=doc.get("setting", ""),
    )


@dataclass(frozen=True)
class DimensionCaseScore:
    case_id: str
    dimension_id: str
    score: float
    verdicts: tuple[tuple[str, str], ...]  # (question_id, verdict)
    unparseable_count: int = 0
    setting: str = ""

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "dimension_id": self.dimension_id,
            "score": self.score,
            "verdicts": [list(v) for v in self.verdicts],
            "unparseable_count": self.unparseable_count,
            "setting": self.setting,
        }


def score_qa(answers: list[str]) -> float:
    """100/K times the number of "yes" verdicts, exact before rounding."""
    if not answers:
        raise ValueError("cannot score an empty answer list")
    for verdict in answers:
        if verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {verdict!r}")
    yes = sum(1 for v in answers if v == "yes")
    return float(Fraction(100 * yes, len(answers)))


def evaluate_case(
    bank: QuestionBank,
    case: VideoCase,
    frames: list[str],
    gateway: VlmGateway,
) -> DimensionCaseScore:
    """Ask every bank question for a case and aggregate the verdicts."""
    entry = bank.entry_for(case.case_id)
    system_context = _system_context(bank, entry, case)
    verdicts = []
    unparseable = 0
    for question_id, text in entry.questions:
        answer = gateway.ask_yes_no(
            QARequest(
                question=text,
                system_context=system_context,
                frames=tuple(frames),
                case_id=case.case_id,
            )
        )
        if answer.verdict == "unparseable":
            unparseable += 1
        verdicts.append((question_id, answer.verdict))
    return DimensionCaseScore(
        case_id=case.case_id,
        dimension_id=bank.dimension_id,
        score=score_qa([v for _, v in verdicts]),
        verdicts=tuple(verdicts),
        unparseable_count=unparseable,
        setting=bank.setting,
    )


def evaluate_ip_rotation(
    bank: QuestionBank,
    case: VideoCase,
    frames: list[str],
    gateway: VlmGateway,
) -> DimensionCaseScore:
    """Appearance QA for the turnaround setting (frontal/profile/back views).

    Mechanically identical to :func:`evaluate_case`; the bank must carry the
    rotation tag so reports can split the two appearance settings.
    """
    if bank.setting != ROTATION_SETTING:
        raise BankError(
            f"case {case.case_id!r}: bank {bank.dimension_id!r} lacks the "
            f"{ROTATION_SETTING!r} tag"
        )
    return evaluate_case(bank, case, frames, gateway)


def _system_context(bank: QuestionBank, entry: BankEntry, case: VideoCase) -> str:
    parts = [f"You are judging the '{bank.dimension_id}' dimension of a generated video."]
    if entry.profile:
        parts.append(f"Character profile: {entry.profile}")
    if case.prompt:
        parts.append(f"Generation prompt: {case.prompt}")
    parts.append("Judge only what is visible in the provided frames.")
    return "\n".join(parts)
