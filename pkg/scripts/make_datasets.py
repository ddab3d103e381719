"""Regenerate the CSV fixtures under tests/data.

tictactoe.csv
    Every distinct final board of a game where x moves first (958 boards),
    nine square columns with values x/o/b plus whether x won.
iris.csv
    The four Iris measurements cut into tertiles, plus the species.
synthetic17.csv
    101 rows forward-sampled from a random 17-node network, arities 2-3.
"""

import csv
import sys
from pathlib import Path

import numpy as np

LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]
SQUARES = ["top-left", "top-middle", "top-right", "middle-left", "middle-middle",
           "middle-right", "bottom-left", "bottom-middle", "bottom-right"]


def _winner(board):
    for a, b, c in LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


def tictactoe_endgames():
    seen = {}

    def play(board, mover):
        w = _winner(board)
        if w or "b" not in board:
            seen.setdefault(tuple(board), w == "x")
            return
        for i, cell in enumerate(board):
            if cell == "b":
                board[i] = mover
                play(board, "o" if mover == "x" else "x")
                board[i] = "b"

    play(["b"] * 9, "x")
    return sorted(seen.items())


def write_tictactoe(path):
    boards = tictactoe_endgames()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SQUARES + ["class"])
        for board, xwins in boards:
            w.writerow(list(board) + ["positive" if xwins else "negative"])
    return len(boards)


def write_iris(path):
    from sklearn.datasets import load_iris

    iris = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    cols = []
    for j in range(4):
        x = iris.data[:, j]
        cuts = np.quantile(x, [1 / 3, 2 / 3])
        cols.append(np.array(["low", "mid", "high"])[np.searchsorted(cuts, x, side="right")])
    species = np.array(iris.target_names)[iris.target]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["species"])
        for row in zip(*cols, species):
            w.writerow(row)
    return len(species)


def write_synthetic(path, n=17, m=101, seed=2009):
    rng = np.random.default_rng(seed)
    arities = rng.integers(2, 4, size=n)
    parents = [sorted(rng.choice(i, size=min(i, rng.integers(0, 4)), replace=False).tolist())
               if i else [] for i in range(n)]
    cpts = []
    for i in range(n):
        q = int(np.prod([arities[p] for p in parents[i]])) if parents[i] else 1
        cpts.append(rng.dirichlet(np.full(arities[i], 0.5), size=q))
    data = np.zeros((m, n), dtype=int)
    for row in range(m):
        for i in range(n):
            cfg = 0
            for p in parents[i]:
                cfg = cfg * arities[p] + data[row, p]
            data[row, i] = rng.choice(arities[i], p=cpts[i][cfg])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"V{i:02d}" for i in range(n)])
        w.writerows(data.tolist())
    return m


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "tests" / "data")
    out.mkdir(parents=True, exist_ok=True)
    print("tictactoe", write_tictactoe(out / "tictactoe.csv"))
    print("iris", write_iris(out / "iris.csv"))
    print("synthetic17", write_synthetic(out / "synthetic17.csv"))
