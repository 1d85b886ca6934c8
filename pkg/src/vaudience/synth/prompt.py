"""Turn an aggregate summary into text for a text-to-audio backend."""

from __future__ import annotations

from dataclasses import dataclass

from ..state import AggregateSummary, AudienceError, ReactionKind


@dataclass(frozen=True)
class PromptTable:
    """Quantity phrases bucketed by count; bands cover every count >= 0.

    Each band is (inclusive upper bound, phrase); the last band's bound is
    None, meaning unbounded. The zero band's phrase is empty: a silent
    reaction contributes nothing to the prompt.
    """

    bands: tuple[tuple[int | None, str], ...] = (
        (0, ""),
        (1, "one person"),
        (3, "a few people"),
        (10, "several people"),
        (None, "many people"),
    )
    gerunds: tuple[str, str, str, str] = ("clapping", "whistling", "booing", "laughing")

    def __post_init__(self) -> None:
        bounds = [b for b, _ in self.bands[:-1]]
        if self.bands[-1][0] is not None:
            raise AudienceError("last band must be unbounded")
        if any(b is None for b in bounds) or bounds != sorted(set(bounds)):
            raise AudienceError("band bounds must be finite, unique, and ascending")
        if not self.bands or self.bands[0][0] != 0:
            raise AudienceError("first band must cover count 0")
        if len(self.gerunds) != 4:
            raise AudienceError("need one gerund per reaction")

    def quantity(self, count: int) -> str:
        if count < 0:
            raise AudienceError(f"negative count {count}")
        for bound, phrase in self.bands:
            if bound is None or count <= bound:
                return phrase
        raise AssertionError("unreachable: last band is unbounded")


DEFAULT_PROMPT_TABLE = PromptTable()


def build_prompt(summary: AggregateSummary, table: PromptTable = DEFAULT_PROMPT_TABLE) -> str:
    """Describe the active reactions in fixed order; empty when all are idle."""
    parts = []
    for kind in ReactionKind:
        phrase = table.quantity(summary.counts[kind])
        if phrase:
            parts.append(f"{phrase} {table.gerunds[kind]}")
    return " and ".join(parts)
