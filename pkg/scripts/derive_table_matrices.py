#!/usr/bin/env python3
"""Integer search for the confusion matrices behind the published metric tables.

The reported tables give per-class precision/recall/F1 and aggregates rounded
to 2 decimals, plus exact per-class supports.  This script enumerates every
non-negative integer matrix with those row sums and keeps the ones whose
metrics round (half-up) to the published cells.  Run it before touching the
eval code; the frozen matrices in tests/ must match its output.

Everything here is exact rational arithmetic -- no floats, no imports from
the package under test.
"""

from fractions import Fraction
from itertools import product


def round2(x: Fraction) -> Fraction:
    """Half-up rounding to 2 decimals, exact."""
    return Fraction(int(100 * x + Fraction(1, 2)), 100)


def metrics_for(matrix, supports):
    """Per-class (P, R, F1) plus (accuracy, macro, weighted), all Fractions."""
    k = len(supports)
    total = sum(supports)
    col = [sum(matrix[r][c] for r in range(k)) for c in range(k)]
    per_class = []
    for c in range(k):
        tp = matrix[c][c]
        p = Fraction(tp, col[c]) if col[c] else Fraction(0)
        r = Fraction(tp, supports[c]) if supports[c] else Fraction(0)
        f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
        per_class.append((p, r, f1))
    accuracy = Fraction(sum(matrix[c][c] for c in range(k)), total)
    macro = tuple(sum(m[i] for m in per_class) / k for i in range(3))
    weighted = tuple(
        sum(supports[c] * per_class[c][i] for c in range(k)) / total for i in range(3)
    )
    return per_class, accuracy, macro, weighted


def search(supports, table):
    """All matrices whose rounded metrics equal `table`.

    table = (per_class_targets, accuracy, macro, weighted) with 2-dp Fractions.
    """
    targets, t_acc, t_macro, t_weighted = table
    k = len(supports)

    # Diagonals are pinned by recall: round2(d / support) == target recall.
    diag_candidates = []
    for c in range(k):
        want = targets[c][1]
        diag_candidates.append(
            [d for d in range(supports[c] + 1) if round2(Fraction(d, supports[c])) == want]
        )

    solutions = []
    for diag in product(*diag_candidates):
        # Distribute each row's residual over the k-1 off-diagonal cells.
        row_options = []
        for c in range(k):
            rest = supports[c] - diag[c]
            opts = []
            slots = [j for j in range(k) if j != c]
            for split in _compositions(rest, len(slots)):
                row = [0] * k
                row[c] = diag[c]
                for j, v in zip(slots, split):
                    row[j] = v
                opts.append(tuple(row))
            row_options.append(opts)
        for rows in product(*row_options):
            per_class, acc, macro, weighted = metrics_for(rows, supports)
            if round2(acc) != t_acc:
                continue
            if any(
                (round2(p), round2(r), round2(f)) != targets[c]
                for c, (p, r, f) in enumerate(per_class)
            ):
                continue
            if tuple(round2(v) for v in macro) != t_macro:
                continue
            if tuple(round2(v) for v in weighted) != t_weighted:
                continue
            solutions.append(tuple(rows))
    return solutions


def _compositions(total, slots):
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


def f2(s):
    return Fraction(s)


INTENT = (
    [(f2("0.92"), f2("0.80"), f2("0.86")),
     (f2("0.93"), f2("1.00"), f2("0.96")),
     (f2("0.86"), f2("0.91"), f2("0.89"))],
    f2("0.91"),
    (f2("0.90"), f2("0.91"), f2("0.90")),
    (f2("0.91"), f2("0.91"), f2("0.90")),
)

MODERATION = (
    [(f2("0.95"), f2("0.99"), f2("0.97")),
     (f2("1.00"), f2("0.89"), f2("0.94")),
     (f2("0.99"), f2("0.98"), f2("0.99"))],
    f2("0.98"),
    (f2("0.98"), f2("0.95"), f2("0.97")),
    (f2("0.98"), f2("0.98"), f2("0.98")),
)


def main():
    for name, supports, table in [
        ("intent (crypto/fan/casual)", [41, 40, 35], INTENT),
        ("moderation (toxic/spam/not_toxic_not_spam)", [106, 9, 268], MODERATION),
    ]:
        sols = search(supports, table)
        print(f"{name}: {len(sols)} consistent matrix/matrices")
        for s in sols:
            for row in s:
                print("   ", list(row))
        if len(sols) != 1:
            raise SystemExit(f"expected a unique solution for {name}")


if __name__ == "__main__":
    main()
