"""Built-in benchmark datasets that can be reconstructed exactly.

The three MONK's problems are complete truth tables over six categorical
attributes, labeled by their published target rules, so the full 432-row
datasets are regenerated here rather than shipped.  The tic-tac-toe endgame
set is every board reachable at the end of a game with x moving first,
labeled "win for x"; it is rebuilt by exhaustive play.
"""

from __future__ import annotations

import csv
import io
from itertools import product

from .encoding import RawTable

MONKS_ATTRIBUTE_VALUES = {
    "a1": (1, 2, 3),
    "a2": (1, 2, 3),
    "a3": (1, 2),
    "a4": (1, 2, 3),
    "a5": (1, 2, 3, 4),
    "a6": (1, 2),
}


def _monks_rule(problem: int, a: tuple[int, ...]) -> bool:
    a1, a2, a3, a4, a5, a6 = a
    if problem == 1:
        return a1 == a2 or a5 == 1
    if problem == 2:
        return sum(1 for v in a if v == 1) == 2
    if problem == 3:
        return (a5 == 3 and a4 == 1) or (a5 != 4 and a2 != 3)
    raise ValueError(f"no monks problem {problem}")


def monks(problem: int) -> RawTable:
    """The full 432-sample MONK's problem table, class 1 mapped to +1."""
    columns = tuple(MONKS_ATTRIBUTE_VALUES)
    rows = []
    labels = []
    for combo in product(*MONKS_ATTRIBUTE_VALUES.values()):
        rows.append(tuple(str(v) for v in combo))
        labels.append(1 if _monks_rule(problem, combo) else -1)
    return RawTable(column_names=columns, rows=tuple(rows), labels=tuple(labels))


_TTT_LINES = (
    (0, 1, 2), (3, 4, 5), (6, 7, 8),
    (0, 3, 6), (1, 4, 7), (2, 5, 8),
    (0, 4, 8), (2, 4, 6),
)


def _winner(board: tuple[str, ...]) -> str | None:
    for i, j, k in _TTT_LINES:
        if board[i] != "b" and board[i] == board[j] == board[k]:
            return board[i]
    return None


def tic_tac_toe() -> RawTable:
    """All end-of-game boards with x first; positive means a win for x."""
    finals: dict[tuple[str, ...], bool] = {}

    def play(board: tuple[str, ...], to_move: str) -> None:
        win = _winner(board)
        if win is not None or "b" not in board:
            finals[board] = win == "x"
            return
        for sq in range(9):
            if board[sq] == "b":
                nxt = board[:sq] + (to_move,) + board[sq + 1 :]
                play(nxt, "o" if to_move == "x" else "x")

    play(("b",) * 9, "x")
    columns = tuple(
        f"{row}-{col}" for row in ("top", "middle", "bottom")
        for col in ("left", "middle", "right")
    )
    boards = sorted(finals)
    rows = tuple(boards)
    labels = tuple(1 if finals[b] else -1 for b in boards)
    return RawTable(column_names=columns, rows=rows, labels=labels)


def synthetic_clinic(n_samples: int = 695, seed: int = 20240901) -> RawTable:
    """Deterministic stand-in for a two-class clinical table.

    Nine ordinal columns with six levels each and a roughly 65/35 class
    split, generated from a fixed noisy scoring rule.  Used where a real
    measurement dataset of that shape is called for but cannot be bundled.
    """
    from .rng import SplitMix64

    rng = SplitMix64(seed)
    columns = tuple(f"m{c}" for c in range(1, 10))
    rows = []
    labels = []
    for _ in range(n_samples):
        # A latent severity drives correlated cell values plus noise.
        severity = rng.next_below(60)
        cells = []
        score = 0
        for c in range(9):
            base = severity // 10 if c % 3 != 2 else rng.next_below(6)
            jitter = int(rng.next_below(3)) - 1
            level = min(5, max(0, base + jitter))
            cells.append(str(level + 1))
            score += level
        noisy = score + int(rng.next_below(9))
        labels.append(-1 if noisy >= 32 else 1)
        rows.append(tuple(cells))
    return RawTable(column_names=columns, rows=tuple(rows), labels=tuple(labels))


def to_csv(table: RawTable, label_name: str = "class") -> str:
    """Render a RawTable as CSV with the label as the last column."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(table.column_names) + [label_name])
    for row, y in zip(table.rows, table.labels):
        writer.writerow(list(row) + [str(y)])
    return out.getvalue()
