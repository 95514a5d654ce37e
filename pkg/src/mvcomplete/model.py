"""Multi-view problems, the six model variants and their shared objective."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .loss import LossKind, cumulative_loss
from .prox import l1_norm, nuclear_norm

# (shared, specific, robust) per variant name
VARIANTS = {
    "I00": (False, True, False),
    "I0R": (False, True, True),
    "J00": (True, False, False),
    "J0R": (True, False, True),
    "JL0": (True, True, False),
    "JLR": (True, True, True),
}


@dataclass(frozen=True)
class ViewData:
    """One view: ``d`` rows, observed coordinates and their values."""

    d: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    loss: LossKind = LossKind.SQUARED
    weight: float = 1.0

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        cols = np.asarray(self.cols, dtype=np.intp).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if not rows.shape == cols.shape == values.shape:
            raise InvalidArgument("rows, cols and values must have equal length")
        for name, arr in (("rows", rows), ("cols", cols), ("values", values)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "loss", LossKind.parse(self.loss))
        if self.weight < 0:
            raise InvalidArgument("loss weight must be nonnegative")

    @classmethod
    def from_triples(cls, d, n, triples, loss=LossKind.SQUARED, weight=1.0):
        triples = list(triples)
        if triples:
            r, c, v = zip(*triples)
        else:
            r, c, v = (), (), ()
        return cls(d, n, np.array(r, dtype=np.intp), np.array(c, dtype=np.intp),
                   np.array(v, dtype=float), loss, weight)

    @classmethod
    def from_dense(cls, y: np.ndarray, mask: np.ndarray, loss=LossKind.SQUARED, weight=1.0):
        r, c = np.nonzero(mask)
        return cls(y.shape[0], y.shape[1], r, c, y[r, c], loss, weight)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d, self.n)

    def mask(self) -> np.ndarray:
        m = np.zeros((self.d, self.n), dtype=bool)
        m[self.rows, self.cols] = True
        return m

    def to_dense(self, fill: float = 0.0) -> np.ndarray:
        y = np.full((self.d, self.n), fill, dtype=float)
        y[self.rows, self.cols] = self.values
        return y

    def subset(self, index) -> "ViewData":
        """View restricted to the observed entries selected by ``index``."""
        return ViewData(self.d, self.n, self.rows[index], self.cols[index],
                        self.values[index], self.loss, self.weight)


@dataclass(frozen=True)
class MultiViewProblem:
    views: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))

    @classmethod
    def from_views(cls, views: Sequence[ViewData]) -> "MultiViewProblem":
        if not views:
            raise InvalidArgument("a problem needs at least one view")
        return cls(tuple(views), views[0].n)

    @property
    def K(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [v.d for v in self.views]


@dataclass(frozen=True)
class Issue:
    code: str
    view: Optional[int]
    message: str

    def __str__(self):
        where = "" if self.view is None else f"view {self.view}: "
        return f"{self.code}: {where}{self.message}"


def validate_problem(problem: MultiViewProblem) -> list[Issue]:
    """Every invariant violation in ``problem``; an empty list means valid."""
    issues = []
    if problem.K < 1:
        issues.append(Issue("no-views", None, "problem has no views"))
    if problem.n < 1:
        issues.append(Issue("bad-dimension", None, f"n must be >= 1, got {problem.n}"))
    for k, v in enumerate(problem.views):
        if v.n != problem.n:
            issues.append(Issue("column-mismatch", k, f"has {v.n} columns, expected {problem.n}"))
        if v.d < 1:
            issues.append(Issue("bad-dimension", k, f"d must be >= 1, got {v.d}"))
        if v.nnz == 0:
            continue
        bad = (v.rows < 0) | (v.rows >= v.d) | (v.cols < 0) | (v.cols >= v.n)
        for i in np.flatnonzero(bad):
            issues.append(Issue("index-out-of-range", k,
                                f"entry {i} at ({v.rows[i]}, {v.cols[i]}) outside {v.d}x{v.n}"))
        ok = ~bad
        flat = v.rows[ok].astype(np.int64) * max(v.n, 1) + v.cols[ok]
        uniq, counts = np.unique(flat, return_counts=True)
        for key in uniq[counts > 1]:
            issues.append(Issue("duplicate-entry", k,
                                f"({key // v.n}, {key % v.n}) observed more than once"))
        if not np.all(np.isfinite(v.values)):
            issues.append(Issue("non-finite-value", k, "observed values must be finite"))
        if v.loss is LossKind.LOGISTIC:
            nonbin = np.flatnonzero(np.abs(v.values) != 1.0)
            for i in nonbin:
                issues.append(Issue("non-binary-target", k,
                                    f"value {v.values[i]!r} at ({v.rows[i]}, {v.cols[i]}) not in {{-1, +1}}"))
    return issues


def check_problem(problem: MultiViewProblem) -> None:
    issues = validate_problem(problem)
    if issues:
        raise InvalidArgument("; ".join(str(i) for i in issues))


@dataclass(frozen=True)
class ModelSpec:
    """Which latent blocks are present, and their regularization weights."""

    shared: bool
    specific: bool
    robust: bool
    lambda0: float = 1.0
    lambda_k: tuple = (1.0,)
    alpha_k: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "lambda_k", tuple(float(x) for x in np.atleast_1d(self.lambda_k)))
        object.__setattr__(self, "alpha_k", tuple(float(x) for x in np.atleast_1d(self.alpha_k)))
        if not (self.shared or self.specific):
            raise InvalidArgument("at least one of shared/specific blocks must be on")
        if self.lambda0 < 0 or min(self.lambda_k) < 0 or min(self.alpha_k) < 0:
            raise InvalidArgument("regularization weights must be nonnegative")

    @classmethod
    def variant(cls, name: str, lambda0=1.0, lambda_k=1.0, alpha_k=1.0) -> "ModelSpec":
        try:
            flags = VARIANTS[name.upper()]
        except KeyError:
            raise InvalidArgument(f"unknown model {name!r}; expected one of {sorted(VARIANTS)}") from None
        return cls(*flags, lambda0=float(lambda0), lambda_k=lambda_k, alpha_k=alpha_k)

    @property
    def name(self) -> str:
        return ("J" if self.shared else "I") + ("L" if self.shared and self.specific else "0") \
            + ("R" if self.robust else "0")

    def lam(self, k: int) -> float:
        return self.lambda_k[k] if len(self.lambda_k) > 1 else self.lambda_k[0]

    def alpha(self, k: int) -> float:
        return self.alpha_k[k] if len(self.alpha_k) > 1 else self.alpha_k[0]

    def check_views(self, K: int) -> None:
        for name, vals in (("lambda_k", self.lambda_k), ("alpha_k", self.alpha_k)):
            if len(vals) not in (1, K):
                raise InvalidArgument(f"{name} has {len(vals)} entries for {K} views")

    def to_dict(self) -> dict:
        return {"model": self.name, "lambda0": self.lambda0,
                "lambda_k": list(self.lambda_k), "alpha_k": list(self.alpha_k)}


@dataclass
class LatentBlocks:
    x0: Optional[np.ndarray] = None
    xk: Optional[list] = None
    sk: Optional[list] = None

    @classmethod
    def zeros(cls, problem: MultiViewProblem, spec: ModelSpec) -> "LatentBlocks":
        n = problem.n
        return cls(
            x0=np.zeros((sum(problem.dims), n)) if spec.shared else None,
            xk=[np.zeros((d, n)) for d in problem.dims] if spec.specific else None,
            sk=[np.zeros((d, n)) for d in problem.dims] if spec.robust else None,
        )

    def copy(self) -> "LatentBlocks":
        return LatentBlocks(
            None if self.x0 is None else self.x0.copy(),
            None if self.xk is None else [x.copy() for x in self.xk],
            None if self.sk is None else [s.copy() for s in self.sk],
        )

    def arrays(self) -> list[np.ndarray]:
        out = [] if self.x0 is None else [self.x0]
        return out + list(self.xk or []) + list(self.sk or [])

    def combine(self, other: "LatentBlocks", a: float, b: float) -> "LatentBlocks":
        """``a * self + b * other`` block by block."""
        def mix(x, y):
            return None if x is None else a * x + b * y
        return LatentBlocks(
            mix(self.x0, other.x0),
            None if self.xk is None else [mix(x, y) for x, y in zip(self.xk, other.xk)],
            None if self.sk is None else [mix(x, y) for x, y in zip(self.sk, other.sk)],
        )


def _offsets(dims: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(dims)])


def select_block(x0: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    """Rows of the stacked matrix ``x0`` that belong to view ``k``."""
    off = _offsets(dims)
    if x0.shape[0] != off[-1]:
        raise InvalidArgument(f"stacked matrix has {x0.shape[0]} rows, dims sum to {off[-1]}")
    if not 0 <= k < len(dims):
        raise InvalidArgument(f"view index {k} out of range for {len(dims)} views")
    return x0[off[k]:off[k + 1]]


def concat_blocks(parts: Sequence[np.ndarray]) -> np.ndarray:
    parts = [np.asarray(p, dtype=float) for p in parts]
    if not parts:
        raise InvalidArgument("nothing to concatenate")
    if len({p.shape[1] for p in parts}) != 1:
        raise InvalidArgument("all parts must share the column count")
    return np.vstack(parts)


def assemble_prediction(blocks: LatentBlocks, spec: ModelSpec, k: int,
                        dims: Optional[Sequence[int]] = None) -> np.ndarray:
    """``P_k X0 + X_k + S_k`` over the blocks active in ``spec``."""
    parts = []
    if spec.shared:
        if dims is None:
            if blocks.xk is not None:
                dims = [x.shape[0] for x in blocks.xk]
            elif blocks.sk is not None:
                dims = [s.shape[0] for s in blocks.sk]
            else:
                raise InvalidArgument("view dims are needed to split a lone shared block")
        parts.append(select_block(blocks.x0, k, dims))
    if spec.specific:
        parts.append(blocks.xk[k])
    if spec.robust:
        parts.append(blocks.sk[k])
    out = parts[0].copy()
    for p in parts[1:]:
        if p.shape != out.shape:
            raise InvalidArgument("block shapes disagree")
        out += p
    return out


def regularizer(spec: ModelSpec, blocks: LatentBlocks) -> float:
    total = 0.0
    if spec.shared:
        total += spec.lambda0 * nuclear_norm(blocks.x0)
    if spec.specific:
        total += sum(spec.lam(k) * nuclear_norm(x) for k, x in enumerate(blocks.xk))
    if spec.robust:
        total += sum(spec.alpha(k) * l1_norm(s) for k, s in enumerate(blocks.sk))
    return total


def data_loss(problem: MultiViewProblem, predictions: Sequence[np.ndarray]) -> float:
    return sum(v.weight * cumulative_loss(v.loss, p, v) for v, p in zip(problem.views, predictions))


def objective(problem: MultiViewProblem, spec: ModelSpec, blocks: LatentBlocks) -> float:
    """Regularized training objective of the model ``spec`` at ``blocks``."""
    for a in blocks.arrays():
        if not np.all(np.isfinite(a)):
            raise InvalidArgument("blocks contain non-finite entries")
    preds = [assemble_prediction(blocks, spec, k, problem.dims) for k in range(problem.K)]
    return regularizer(spec, blocks) + data_loss(problem, preds)


@dataclass
class SolveResult:
    """Fitted blocks plus per-iteration traces (time is cumulative seconds)."""

    blocks: LatentBlocks
    spec: ModelSpec
    solver: str
    objective_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    time_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    info: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def predictions(self, problem: MultiViewProblem) -> list[np.ndarray]:
        return [assemble_prediction(self.blocks, self.spec, k, problem.dims)
                for k in range(problem.K)]
