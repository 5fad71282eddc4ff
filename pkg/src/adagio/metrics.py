"""Word error rate and exact-match evaluation arithmetic."""

from __future__ import annotations

from dataclasses import dataclass


class EmptyReference(ValueError):
    pass


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int

    @property
    def edits(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        """May exceed 1.0; insertions are counted against the reference length."""
        return self.edits / self.ref_words


def wer(reference: str, hypothesis: str) -> WerReport:
    """Word-level Levenshtein alignment with unit costs.

    The distance is unambiguous; the S/I/D breakdown resolves ties by
    preferring a substitution over an insert+delete pair.
    """
    ref = reference.split()
    hyp = hypothesis.split()
    if not ref:
        raise EmptyReference("reference must contain at least one word")

    r, h = len(ref), len(hyp)
    dist = [[0] * (h + 1) for _ in range(r + 1)]
    for i in range(r + 1):
        dist[i][0] = i
    for j in range(h + 1):
        dist[0][j] = j
    for i in range(1, r + 1):
        for j in range(1, h + 1):
            same = ref[i - 1] == hyp[j - 1]
            dist[i][j] = min(
                dist[i - 1][j - 1] + (0 if same else 1),
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )

    substitutions = insertions = deletions = 0
    i, j = r, h
    while i > 0 and j > 0:
        same = ref[i - 1] == hyp[j - 1]
        if dist[i][j] == dist[i - 1][j - 1] + (0 if same else 1):
            if not same:
                substitutions += 1
            i -= 1
            j -= 1
        elif dist[i][j] == dist[i - 1][j] + 1:
            deletions += 1
            i -= 1
        else:
            insertions += 1
            j -= 1
    deletions += i
    insertions += j
    return WerReport(substitutions, insertions, deletions, r)


def targeted_success(transcription: str, target: str) -> bool:
    """Exact equality up to whitespace-run collapsing."""
    return " ".join(transcription.split()) == " ".join(target.split())
