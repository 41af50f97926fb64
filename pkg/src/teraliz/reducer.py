"""Mutation-driven suite reduction: keep generalized tests that add kills, drop redundant originals."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .mutation import KillMatrix


class MatrixMismatch(Exception):
    """The original and variant kill matrices were built over different mutants."""


@dataclass
class ReductionDecision:
    variant: str
    retained: dict[str, list[str]]
    removed_originals: list[str]
    final_suite: list[str]
    score_before: float
    score_after: float
    new_kills: list[str]
    # Originals whose assertions were all generalized but whose removal would lose kills.
    kept_for_kills: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "variant": self.variant,
            "retained": [{"id": gt, "new_kills": kills} for gt, kills in self.retained.items()],
            "removed_originals": self.removed_originals,
            "kept_for_kills": self.kept_for_kills,
            "final_suite": self.final_suite,
            "score_before": round(self.score_before, 6),
            "score_after": round(self.score_after, 6),
            "new_kills": self.new_kills,
        }


def _check_same_mutants(a: KillMatrix, b: KillMatrix) -> None:
    ka = [(m.id, m.file, m.function, m.operator, m.line, m.col, m.description) for m in a.mutants]
    kb = [(m.id, m.file, m.function, m.operator, m.line, m.col, m.description) for m in b.mutants]
    if ka != kb:
        raise MatrixMismatch(f"mutant sets differ ({len(ka)} vs {len(kb)} mutants)")


def final_kills(original: KillMatrix, variant: KillMatrix, originals: Sequence[str], gts: Sequence[str]) -> set[str]:
    return original.killed(list(originals)) | variant.killed(list(gts))


def reduce(
    original: KillMatrix,
    variant: KillMatrix,
    assertions_by_test: Mapping[str, Sequence[str]],
    passing_gts: Mapping[str, str],
    variant_name: str = "",
) -> ReductionDecision:
    """Select the final suite for one variant.

    ``assertions_by_test`` lists the assertion ids of every original test and
    ``passing_gts`` maps an assertion id to the generalized test created for it
    when that test passed on the unmutated program. Matrix columns must be
    test ids in source order (originals) and assertion-id order (generalized).
    """
    _check_same_mutants(original, variant)
    orig_kills = original.killed()

    new_by_gt = {gt: sorted(variant.killed_by(gt) - orig_kills) for gt in variant.tests}
    retained = [gt for gt in variant.tests if new_by_gt[gt]]
    # Drop generalized tests whose new kills the others already cover, so each survivor is needed.
    for gt in list(retained):
        others = set().union(*(new_by_gt[o] for o in retained if o != gt))
        if set(new_by_gt[gt]) <= others:
            retained.remove(gt)

    kept = list(original.tests)
    target = final_kills(original, variant, kept, retained)
    removed, blocked = [], []
    for t in original.tests:
        ids = assertions_by_test.get(t, ())
        if not ids or not all(a in passing_gts for a in ids):
            continue
        trial = [o for o in kept if o != t]
        if final_kills(original, variant, trial, retained) >= target:
            kept = trial
            removed.append(t)
        else:
            blocked.append(t)

    after = final_kills(original, variant, kept, retained)
    total = len(original.mutants)
    return ReductionDecision(
        variant=variant_name,
        retained={gt: new_by_gt[gt] for gt in retained},
        removed_originals=removed,
        final_suite=kept + retained,
        score_before=original.score(),
        score_after=len(after) / total if total else 1.0,
        new_kills=sorted(after - orig_kills),
        kept_for_kills=blocked,
    )
