"""Static multi-level orthogonal range trees with canonical-subset enumeration.

A :class:`LevelTree` is a balanced binary tree over the points sorted by one
coordinate; every internal node owns an associated tree over the next
coordinate, built from the points of its subtree. Querying a box walks the
first level, decomposes the matching key range into O(log n) canonical nodes
and recurses into their associated trees. The last level is a sorted array
whose matching slice is itself the canonical subset.

Small subtrees (``<= leaf_size`` points) keep no associated structure; the
query reports their points for direct verification instead.

For two-dimensional points an optional *tail* hangs off the last level: each
node there owns a tree over the 45-degree rotated coordinates ``(u + v, u - v)``
in which an L1 ball is an axis-aligned square.
"""
from __future__ import annotations

from typing import Callable, List, Optional

import numpy as np


class Chain:
    """The coordinate matrix and level order shared by one family of trees."""

    __slots__ = ("name", "coords", "dims", "leaf_size", "tail")

    def __init__(self, name: str, coords: np.ndarray, dims, leaf_size: int,
                 tail: Optional[Callable[[np.ndarray], "LevelTree"]] = None):
        self.name = name
        self.coords = coords
        self.dims = tuple(dims)
        self.leaf_size = leaf_size
        self.tail = tail


class Collector:
    """Query box per chain plus the output lists.

    ``exact`` receives id arrays known to satisfy every constraint; ``check``
    receives candidates that still need a per-point test. A last-level slice
    counts as exact only for chains named in ``exact_chains``.
    """

    __slots__ = ("boxes", "use_tail", "exact_chains", "exact", "check", "nodes")

    def __init__(self, boxes: dict, use_tail: bool, exact_chains=frozenset()):
        self.boxes = boxes
        self.use_tail = use_tail
        self.exact_chains = exact_chains
        self.exact: List[np.ndarray] = []
        self.check: List[np.ndarray] = []
        self.nodes = 0  # canonical subsets visited, for diagnostics


class _Node:
    __slots__ = ("lo", "hi", "left", "right", "assoc")

    def __init__(self, lo: int, hi: int):
        self.lo = lo
        self.hi = hi
        self.left = None
        self.right = None
        self.assoc = None


class LevelTree:
    __slots__ = ("chain", "depth", "ids", "keys", "last", "root")

    def __init__(self, chain: Chain, ids: np.ndarray, depth: int = 0):
        self.chain = chain
        self.depth = depth
        col = chain.coords[ids, chain.dims[depth]]
        order = np.argsort(col, kind="stable")
        self.ids = ids[order]
        self.keys = col[order]
        self.last = depth == len(chain.dims) - 1
        self.root = None
        if not self.last or chain.tail is not None:
            self.root = self._build(0, len(self.ids))

    def _build(self, lo: int, hi: int) -> _Node:
        node = _Node(lo, hi)
        if hi - lo > self.chain.leaf_size:
            mid = (lo + hi) // 2
            node.left = self._build(lo, mid)
            node.right = self._build(mid, hi)
            sub = self.ids[lo:hi]
            if self.last:
                node.assoc = self.chain.tail(sub)
            else:
                node.assoc = LevelTree(self.chain, sub, self.depth + 1)
        return node

    def __len__(self) -> int:
        return len(self.ids)

    def collect(self, q: Collector) -> None:
        lo_box, hi_box = q.boxes[self.chain.name]
        i = int(np.searchsorted(self.keys, lo_box[self.depth], "left"))
        j = int(np.searchsorted(self.keys, hi_box[self.depth], "right"))
        if i >= j:
            return
        if self.root is None:
            q.nodes += 1
            (q.exact if self.chain.name in q.exact_chains else q.check).append(self.ids[i:j])
            return
        self._decompose(self.root, i, j, q)

    def _decompose(self, node: _Node, i: int, j: int, q: Collector) -> None:
        if node.hi <= i or j <= node.lo:
            return
        if node.assoc is None:
            q.check.append(self.ids[max(i, node.lo):min(j, node.hi)])
            return
        if i <= node.lo and node.hi <= j:
            q.nodes += 1
            if not self.last:
                node.assoc.collect(q)
            elif q.use_tail:
                node.assoc.collect(q)
            else:
                (q.exact if self.chain.name in q.exact_chains else q.check).append(
                    self.ids[node.lo:node.hi])
            return
        self._decompose(node.left, i, j, q)
        self._decompose(node.right, i, j, q)

    def size(self) -> int:
        """Total number of stored point references, associated trees included."""
        total = len(self.ids)
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if node.assoc is not None:
                total += node.assoc.size()
            if node.left is not None:
                stack.extend((node.left, node.right))
        return total


def rotate(coords: np.ndarray) -> np.ndarray:
    """(u, v) -> (u + v, u - v); the L1 ball becomes a square of half side beta."""
    return np.stack([coords[:, 0] + coords[:, 1], coords[:, 0] - coords[:, 1]], axis=1)


class StaticBlock:
    """Range tree over a fixed set of point ids of a growing coordinate table."""

    __slots__ = ("pids", "coords", "levels", "tree", "rotated")

    def __init__(self, pids: np.ndarray, coords: np.ndarray, levels: int, leaf_size: int):
        self.pids = np.asarray(pids, dtype=np.int64)
        self.coords = coords[self.pids]
        x = self.coords.shape[1]
        self.levels = levels
        local = np.arange(len(self.pids), dtype=np.int64)
        tail = None
        self.rotated = x == 2 and levels == 2
        if self.rotated:
            rot_chain = Chain("rot", rotate(self.coords), (0, 1), leaf_size)
            tail = lambda sub: LevelTree(rot_chain, sub, 0)  # noqa: E731
        chain = Chain("cube", self.coords, range(levels), leaf_size, tail)
        self.tree = LevelTree(chain, local, 0)

    def __len__(self) -> int:
        return len(self.pids)

    def collect(self, q: Collector, exact: list, check: list) -> None:
        q.exact, q.check = [], []
        self.tree.collect(q)
        exact.extend(self.pids[ids] for ids in q.exact)
        check.extend(self.pids[ids] for ids in q.check)
