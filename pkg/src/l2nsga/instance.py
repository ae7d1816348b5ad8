"""Test-suite optimization instances: I/O, compaction and synthetic generation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Block",
    "FaultMatrix",
    "Instance",
    "InstanceFormatError",
    "compact",
    "format_faults",
    "format_instance",
    "generate_faults",
    "generate_synthetic",
    "load_faults",
    "load_instance",
    "parse_block",
    "write_faults",
    "write_instance",
]

INSTANCE_MAGIC = "tcs-instance"
FAULTS_MAGIC = "tcs-faults"
FORMAT_VERSION = "v1"


class InstanceFormatError(ValueError):
    """Raised for malformed instance or fault files; carries the line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True, eq=False)
class Instance:
    """A test-case selection problem.

    Coverage matrices are boolean ``tests x entities``. ``*_weights`` give how
    many raw entities each column stands for (all ones before compaction),
    while ``total_*_weight`` is the raw entity count and is the coverage
    denominator, so entities no test covers still count as uncovered.
    """

    name: str
    statement_cov: np.ndarray
    branch_cov: np.ndarray
    cost: np.ndarray
    statement_weights: np.ndarray = None
    branch_weights: np.ndarray = None
    total_statement_weight: int = None
    total_branch_weight: int = None
    test_ids: tuple[str, ...] = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "statement_cov", np.ascontiguousarray(self.statement_cov, dtype=bool))
        set_(self, "branch_cov", np.ascontiguousarray(self.branch_cov, dtype=bool))
        set_(self, "cost", np.ascontiguousarray(self.cost, dtype=np.float64))
        n = self.cost.shape[0]
        for attr, cov in (("statement", self.statement_cov), ("branch", self.branch_cov)):
            if getattr(self, f"{attr}_weights") is None:
                set_(self, f"{attr}_weights", np.ones(cov.shape[1], dtype=np.int64))
            else:
                set_(self, f"{attr}_weights", np.asarray(getattr(self, f"{attr}_weights"), dtype=np.int64))
            if getattr(self, f"total_{attr}_weight") is None:
                set_(self, f"total_{attr}_weight", int(getattr(self, f"{attr}_weights").sum()))
        if self.test_ids is None:
            set_(self, "test_ids", tuple(str(i) for i in range(n)))
        else:
            set_(self, "test_ids", tuple(self.test_ids))
        for arr in (self.statement_cov, self.branch_cov, self.cost, self.statement_weights, self.branch_weights):
            arr.setflags(write=False)
        self._validate()

    def _validate(self):
        n = self.num_tests
        if n < 1:
            raise ValueError("instance needs at least one test")
        if self.cost.ndim != 1:
            raise ValueError("cost must be a vector")
        for label, cov, w, total in (
            ("statement", self.statement_cov, self.statement_weights, self.total_statement_weight),
            ("branch", self.branch_cov, self.branch_weights, self.total_branch_weight),
        ):
            if cov.ndim != 2 or cov.shape[0] != n:
                raise ValueError(f"{label} coverage must have {n} rows, got shape {cov.shape}")
            if w.shape != (cov.shape[1],):
                raise ValueError(f"{label} weights do not match the number of columns")
            if (w < 1).any():
                raise ValueError(f"{label} weights must be positive")
            if total < 1:
                raise ValueError(f"total {label} weight must be positive")
            if w.sum() > total:
                raise ValueError(f"{label} column weights exceed the total weight")
        if len(self.test_ids) != n:
            raise ValueError("test_ids length does not match the number of tests")
        if not np.isfinite(self.cost).all() or (self.cost < 0).any():
            raise ValueError("costs must be finite and non-negative")
        if not (self.cost > 0).any():
            raise ValueError("at least one test must have a positive cost")

    @property
    def num_tests(self) -> int:
        return int(self.cost.shape[0])

    @property
    def num_statements(self) -> int:
        return self.total_statement_weight

    @property
    def num_branches(self) -> int:
        return self.total_branch_weight

    @property
    def total_cost(self) -> float:
        return float(self.cost.sum())

    @property
    def is_raw(self) -> bool:
        """True when every column is one raw entity (nothing merged or dropped)."""
        return (
            self.statement_cov.shape[1] == self.total_statement_weight
            and self.branch_cov.shape[1] == self.total_branch_weight
        )

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.test_ids == other.test_ids
            and self.total_statement_weight == other.total_statement_weight
            and self.total_branch_weight == other.total_branch_weight
            and np.array_equal(self.cost, other.cost)
            and np.array_equal(self.statement_cov, other.statement_cov)
            and np.array_equal(self.branch_cov, other.branch_cov)
            and np.array_equal(self.statement_weights, other.statement_weights)
            and np.array_equal(self.branch_weights, other.branch_weights)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FaultMatrix:
    detects: np.ndarray
    test_ids: tuple[str, ...] = None

    def __post_init__(self):
        detects = np.ascontiguousarray(self.detects, dtype=bool)
        if detects.ndim != 2:
            raise ValueError("fault matrix must be 2-D (tests x faults)")
        detects.setflags(write=False)
        object.__setattr__(self, "detects", detects)
        if self.test_ids is None:
            object.__setattr__(self, "test_ids", tuple(str(i) for i in range(detects.shape[0])))

    @property
    def num_tests(self) -> int:
        return int(self.detects.shape[0])

    @property
    def num_faults(self) -> int:
        return int(self.detects.shape[1])

    def __eq__(self, other):
        if not isinstance(other, FaultMatrix):
            return NotImplemented
        return self.test_ids == other.test_ids and np.array_equal(self.detects, other.detects)

    __hash__ = None


# --------------------------------------------------------------------------- I/O


def _format_cost(c: float) -> str:
    c = float(c)
    return str(int(c)) if c.is_integer() and abs(c) < 2**53 else repr(c)


def _format_indices(row: np.ndarray) -> str:
    return ",".join(str(i) for i in np.flatnonzero(row))


def format_instance(instance: Instance) -> str:
    if not instance.is_raw:
        raise ValueError("only uncompacted instances can be written; keep the raw instance around")
    lines = [
        f"{INSTANCE_MAGIC} {FORMAT_VERSION} {instance.num_tests} "
        f"{instance.num_statements} {instance.num_branches}"
    ]
    for i, tid in enumerate(instance.test_ids):
        lines.append(
            f"{tid} {_format_cost(instance.cost[i])} "
            f"S:{_format_indices(instance.statement_cov[i])} "
            f"B:{_format_indices(instance.branch_cov[i])}"
        )
    return "\n".join(lines) + "\n"


def write_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(format_instance(instance), encoding="utf-8")


def _parse_header(line: str, magic: str, arity: int, lineno: int, path: str) -> list[int]:
    parts = line.split()
    if len(parts) != 2 + arity or parts[0] != magic or parts[1] != FORMAT_VERSION:
        raise InstanceFormatError(
            f"malformed header {line!r}; expected '{magic} {FORMAT_VERSION}' and {arity} counts", lineno, path
        )
    try:
        counts = [int(p) for p in parts[2:]]
    except ValueError:
        raise InstanceFormatError(f"non-integer count in header {line!r}", lineno, path) from None
    if any(c < 0 for c in counts):
        raise InstanceFormatError("negative count in header", lineno, path)
    return counts


def _parse_index_list(token: str, prefix: str, limit: int, lineno: int, path: str) -> list[int]:
    if not token.startswith(prefix):
        raise InstanceFormatError(f"expected field starting with {prefix!r}, got {token!r}", lineno, path)
    body = token[len(prefix):]
    if not body:
        return []
    try:
        idx = [int(x) for x in body.split(",")]
    except ValueError:
        raise InstanceFormatError(f"bad index list {token!r}", lineno, path) from None
    for i in idx:
        if not 0 <= i < limit:
            raise InstanceFormatError(f"entity index {i} out of range [0, {limit})", lineno, path)
    return idx


def _content_lines(text: str) -> list[tuple[int, str]]:
    return [(no, ln) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]


def parse_instance(text: str, name: str = "instance", path: str | None = None) -> Instance:
    lines = _content_lines(text)
    if not lines:
        raise InstanceFormatError("empty instance file", 1, path)
    hline, header = lines[0]
    n, n_s, n_b = _parse_header(header, INSTANCE_MAGIC, 3, hline, path)
    rows = lines[1:]
    if len(rows) != n:
        at = rows[n][0] if len(rows) > n else (rows[-1][0] + 1 if rows else hline + 1)
        raise InstanceFormatError(f"header declares {n} tests but file has {len(rows)} test lines", at, path)
    s_cov = np.zeros((n, n_s), dtype=bool)
    b_cov = np.zeros((n, n_b), dtype=bool)
    cost = np.empty(n, dtype=np.float64)
    ids = []
    for i, (lineno, line) in enumerate(rows):
        parts = line.split()
        if len(parts) != 4:
            raise InstanceFormatError(f"expected '<id> <cost> S:<...> B:<...>', got {line!r}", lineno, path)
        ids.append(parts[0])
        try:
            c = float(parts[1])
        except ValueError:
            raise InstanceFormatError(f"bad cost {parts[1]!r}", lineno, path) from None
        if not np.isfinite(c) or c < 0:
            raise InstanceFormatError(f"cost must be finite and non-negative, got {parts[1]}", lineno, path)
        cost[i] = c
        s_cov[i, _parse_index_list(parts[2], "S:", n_s, lineno, path)] = True
        b_cov[i, _parse_index_list(parts[3], "B:", n_b, lineno, path)] = True
    if len(set(ids)) != len(ids):
        raise InstanceFormatError("duplicate test ids", None, path)
    if not (cost > 0).any():
        raise InstanceFormatError("at least one test must have a positive cost", None, path)
    if n_s < 1 or n_b < 1:
        raise InstanceFormatError("instance needs at least one statement and one branch", hline, path)
    return Instance(name=name, statement_cov=s_cov, branch_cov=b_cov, cost=cost, test_ids=tuple(ids))


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), name=path.stem, path=str(path))


def format_faults(faults: FaultMatrix) -> str:
    lines = [f"{FAULTS_MAGIC} {FORMAT_VERSION} {faults.num_tests} {faults.num_faults}"]
    for i, tid in enumerate(faults.test_ids):
        lines.append(f"{tid} F:{_format_indices(faults.detects[i])}")
    return "\n".join(lines) + "\n"


def write_faults(faults: FaultMatrix, path: str | Path) -> None:
    Path(path).write_text(format_faults(faults), encoding="utf-8")


def parse_faults(text: str, path: str | None = None) -> FaultMatrix:
    lines = _content_lines(text)
    if not lines:
        raise InstanceFormatError("empty fault file", 1, path)
    hline, header = lines[0]
    n, n_f = _parse_header(header, FAULTS_MAGIC, 2, hline, path)
    rows = lines[1:]
    if len(rows) != n:
        at = rows[n][0] if len(rows) > n else (rows[-1][0] + 1 if rows else hline + 1)
        raise InstanceFormatError(f"header declares {n} tests but file has {len(rows)} test lines", at, path)
    detects = np.zeros((n, n_f), dtype=bool)
    ids = []
    for i, (lineno, line) in enumerate(rows):
        parts = line.split()
        if len(parts) != 2:
            raise InstanceFormatError(f"expected '<id> F:<...>', got {line!r}", lineno, path)
        ids.append(parts[0])
        detects[i, _parse_index_list(parts[1], "F:", n_f, lineno, path)] = True
    return FaultMatrix(detects=detects, test_ids=tuple(ids))


def load_faults(path: str | Path, instance: Instance | None = None) -> FaultMatrix:
    path = Path(path)
    faults = parse_faults(path.read_text(encoding="utf-8"), path=str(path))
    if instance is not None and faults.num_tests != instance.num_tests:
        raise InstanceFormatError(
            f"fault matrix has {faults.num_tests} tests but the instance has {instance.num_tests}", None, str(path)
        )
    return faults


# --------------------------------------------------------------------- compaction


def _compact_matrix(cov: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = cov.any(axis=0)
    cov, weights = cov[:, keep], weights[keep]
    if cov.shape[1] == 0:
        return cov, weights
    # columns as packed byte strings; first occurrence fixes the column order
    packed = np.packbits(cov, axis=0).T
    _, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    merged_w = np.zeros(order.size, dtype=np.int64)
    np.add.at(merged_w, remap[inverse], weights)
    return cov[:, first[order]], merged_w


def compact(instance: Instance) -> Instance:
    """Merge identical coverage columns and drop never-covered ones.

    Statement and branch matrices are compacted independently; the totals
    (coverage denominators) are carried over unchanged, so coverage fractions
    of every selection are preserved exactly.
    """
    s_cov, s_w = _compact_matrix(instance.statement_cov, instance.statement_weights)
    b_cov, b_w = _compact_matrix(instance.branch_cov, instance.branch_weights)
    return Instance(
        name=instance.name,
        statement_cov=s_cov,
        branch_cov=b_cov,
        cost=instance.cost,
        statement_weights=s_w,
        branch_weights=b_w,
        total_statement_weight=instance.total_statement_weight,
        total_branch_weight=instance.total_branch_weight,
        test_ids=instance.test_ids,
    )


# ---------------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class Block:
    """Planted group: ``tests`` jointly cover ``statements`` and ``branches``.

    Ranges are half-open index ranges (Python ``range`` objects).
    """

    tests: range
    statements: range
    branches: range = field(default=range(0))


_RANGE_RE = re.compile(r"^(\d+)-(\d+)$|^(\d+)$")


def _parse_range(text: str) -> range:
    m = _RANGE_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad range {text!r}; expected 'a-b' (inclusive) or 'a'")
    if m.group(3) is not None:
        a = b = int(m.group(3))
    else:
        a, b = int(m.group(1)), int(m.group(2))
    if b < a:
        raise ValueError(f"empty range {text!r}")
    return range(a, b + 1)


def parse_block(text: str) -> Block:
    """Parse ``tests:statements[:branches]`` with inclusive ``a-b`` ranges, e.g. ``0-2:0-9:0-3``."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad block spec {text!r}; expected 'tests:statements[:branches]'")
    ranges = [_parse_range(p) for p in parts]
    return Block(*ranges)


def _check_blocks(blocks: Sequence[Block], num_tests: int, num_statements: int, num_branches: int) -> None:
    for label, limit, get in (
        ("tests", num_tests, lambda b: b.tests),
        ("statements", num_statements, lambda b: b.statements),
        ("branches", num_branches, lambda b: b.branches),
    ):
        used = np.zeros(limit, dtype=bool)
        for blk in blocks:
            r = get(blk)
            if len(r) == 0:
                continue
            if r.start < 0 or r.stop > limit:
                raise ValueError(f"block {label} {r.start}..{r.stop - 1} exceeds the {limit} available")
            if used[r.start:r.stop].any():
                raise ValueError(f"blocks overlap on {label}")
            used[r.start:r.stop] = True
    for blk in blocks:
        if len(blk.tests) < 1:
            raise ValueError("a block needs at least one test")
        if len(blk.tests) > num_tests:
            raise ValueError("block is larger than the test suite")
        if len(blk.statements) + len(blk.branches) < len(blk.tests):
            raise ValueError("block has fewer entities than tests; every block test must cover something")


CORE_FRACTION = 0.4  # share of free entities every ordinary test may touch
CORE_POPULARITY = 0.8  # upper bound on a core entity's per-test hit rate
MODULE_FRACTION = 0.3  # share of free entities split into feature modules
BLOCK_COST_PER_ENTITY = 0.25
DECOY_COST_PER_ENTITY = 0.6


def generate_synthetic(
    num_tests: int,
    num_statements: int,
    num_branches: int,
    blocks: Iterable[Block] | None = None,
    seed: int = 0,
    name: str | None = None,
) -> Instance:
    """Seeded random coverage instance with optional planted linkage blocks.

    Free entities (outside any block) are split into a shared core, feature
    modules and rare entities. Every ordinary test hits core entities at a
    per-entity rate, exercises one to three modules, and rare entities are
    reached by one to three random tests. Costs grow with the number of
    covered entities, times log-normal noise.

    A block's entities are dealt out among the block's tests (each covered by
    exactly one of them) at a low per-entity cost, and a few ordinary "decoy"
    tests also cover the whole block expensively, so the cheap way to cover
    a block is to take its tests together.
    """
    if min(num_tests, num_statements, num_branches) < 1:
        raise ValueError("num_tests, num_statements and num_branches must all be >= 1")
    blocks = list(blocks or ())
    _check_blocks(blocks, num_tests, num_statements, num_branches)
    rng = np.random.default_rng(seed)

    s_cov = np.zeros((num_tests, num_statements), dtype=bool)
    b_cov = np.zeros((num_tests, num_branches), dtype=bool)
    block_test = np.zeros(num_tests, dtype=bool)
    free_s = np.ones(num_statements, dtype=bool)
    free_b = np.ones(num_branches, dtype=bool)
    for blk in blocks:
        block_test[blk.tests.start:blk.tests.stop] = True
        free_s[blk.statements.start:blk.statements.stop] = False
        free_b[blk.branches.start:blk.branches.stop] = False

    ordinary = np.flatnonzero(~block_test)
    n_modules = max(1, len(ordinary) // 10)
    if len(ordinary):
        for cov, free in ((s_cov, free_s), (b_cov, free_b)):
            ents = np.flatnonzero(free)
            n_core = int(CORE_FRACTION * ents.size)
            n_mod = int(MODULE_FRACTION * ents.size)
            core, rare = ents[:n_core], ents[n_core + n_mod:]
            modules = np.array_split(ents[n_core:n_core + n_mod], n_modules)
            popularity = CORE_POPULARITY * rng.random(n_core)
            cov[np.ix_(ordinary, core)] = rng.random((ordinary.size, n_core)) < popularity
            for t in ordinary:
                k = min(n_modules, 1 + rng.binomial(2, 0.3))
                for m in rng.choice(n_modules, size=k, replace=False):
                    mod = modules[m]
                    cov[t, mod[rng.random(mod.size) < rng.uniform(0.2, 0.7)]] = True
            for e in rare:
                k = min(ordinary.size, int(rng.integers(1, 4)))
                cov[rng.choice(ordinary, size=k, replace=False), e] = True

    noise = rng.lognormal(0.0, 0.5, size=num_tests)
    cost = (1.0 + s_cov.sum(axis=1) + b_cov.sum(axis=1)) * noise

    for blk in blocks:
        tests = np.arange(blk.tests.start, blk.tests.stop)
        ents = [("s", i) for i in blk.statements] + [("b", i) for i in blk.branches]
        order = rng.permutation(len(ents))
        # every block test gets at least one entity, the rest are dealt at random
        owner = np.concatenate([np.arange(len(tests)), rng.integers(0, len(tests), len(ents) - len(tests))])
        for pos, e in zip(owner, order):
            kind, idx = ents[e]
            (s_cov if kind == "s" else b_cov)[tests[pos], idx] = True
        share = s_cov[tests].sum(axis=1) + b_cov[tests].sum(axis=1)
        cost[tests] = BLOCK_COST_PER_ENTITY * share * noise[tests] + 0.05
        if len(ordinary):
            n_decoys = min(len(ordinary), max(1, len(tests) // 4))
            for d in rng.choice(ordinary, size=n_decoys, replace=False):
                s_cov[d, blk.statements.start:blk.statements.stop] = True
                b_cov[d, blk.branches.start:blk.branches.stop] = True
                cost[d] += DECOY_COST_PER_ENTITY * len(ents) * noise[d]

    # free entities nobody touched still need an owner, and every test covers something
    pool = ordinary if len(ordinary) else np.arange(num_tests)
    for cov, free in ((s_cov, free_s), (b_cov, free_b)):
        for e in np.flatnonzero(free & ~cov.any(axis=0)):
            cov[rng.choice(pool), e] = True
    for t in np.flatnonzero(~(s_cov.any(axis=1) | b_cov.any(axis=1))):
        s_cov[t, rng.integers(num_statements)] = True
        cost[t] += noise[t]

    cost = np.round(cost, 6)
    cost[cost <= 0] = 1e-6
    if name is None:
        name = f"synth-{num_tests}x{num_statements}x{num_branches}-s{seed}"
    return Instance(name=name, statement_cov=s_cov, branch_cov=b_cov, cost=cost)


def generate_faults(instance: Instance, num_faults: int, max_detectors: int = 3, seed: int = 0) -> FaultMatrix:
    """Seeded fault matrix where each fault is detected by 1..max_detectors tests.

    Detectors of a fault are drawn among the tests covering one random
    statement column, so fault detection follows coverage.
    """
    if num_faults < 0 or max_detectors < 1:
        raise ValueError("num_faults must be >= 0 and max_detectors >= 1")
    rng = np.random.default_rng(seed)
    detects = np.zeros((instance.num_tests, num_faults), dtype=bool)
    columns = np.flatnonzero(instance.statement_cov.any(axis=0))
    for f in range(num_faults):
        if columns.size:
            col = columns[rng.integers(columns.size)]
            pool = np.flatnonzero(instance.statement_cov[:, col])
        else:
            pool = np.arange(instance.num_tests)
        k = min(pool.size, int(rng.integers(1, max_detectors + 1)))
        detects[rng.choice(pool, size=k, replace=False), f] = True
    return FaultMatrix(detects=detects, test_ids=instance.test_ids)
