"""Cover constructions: cyclic covers, Schreier data, mod-p homology with
killed handle classes, separation maps and cocycle covers.

The pipeline realizes the three steps of the finite-index subgroup
construction:

1. ``cyclic_cover``   -- the shift action of b1 on Z/d (all other generators
   trivial); its basepoint stabilizer is the kernel of the b1-exponent map
   reduced mod d.
2. ``homology``       -- F_p homology of the basepoint stabilizer, computed
   on the non-tree edges of the Schreier graph, with the relator lifted at
   every point and the supplied handle classes killed.
3. ``search_separation`` / ``cocycle_cover`` -- a seeded random linear map
   F_p^dim(H) -> F_p^m that keeps every target class nonzero, and the
   extension-by-cocycle action it defines on degree * p^m points.

Only depth-1 homology towers are on the supported path; deeper p-quotients
are available through ``iterated_cocycle_tower`` under hard degree caps.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

import numpy as np

from .actions import PointedAction, _bfs_order
from .errors import (
    DegreeCapExceeded,
    KillWordNotInSubgroup,
    RankExhausted,
    TargetInvisible,
)
from .words import Presentation, SurfacePresentation, Word


def cyclic_cover(pres: SurfacePresentation, d: int) -> PointedAction:
    """Degree-d cover on which b1 shifts Z/d and every other generator is
    trivial; well-defined because the b1-exponent map kills the relator."""
    if d < 1:
        raise ValueError("cover degree must be >= 1")
    perms = np.tile(np.arange(d, dtype=np.int64), (pres.n_generators, 1))
    perms[pres.b_j0 - 1] = (np.arange(d, dtype=np.int64) + 1) % d
    return PointedAction(pres, perms, 0, {"kind": "cyclic", "d": d})


# ---------------------------------------------------------------------------
# Schreier graphs
# ---------------------------------------------------------------------------


class SchreierData:
    """Spanning tree plus an index for the non-tree edges of an action.

    Edges are pairs (point v, positive generator g) meaning v -> g.v.  The
    tree is the canonical BFS tree from the basepoint, so the non-tree edges
    freely generate the preimage of the basepoint stabilizer in the free
    group; their count is degree*(number of generators) - degree + 1.
    """

    def __init__(self, act: PointedAction):
        self.act = act
        n_gens = act.perms.shape[0]
        order, position = _bfs_order(act, act.basepoint)
        if order.size != act.degree:
            raise ValueError("Schreier data needs a transitive action")
        # recover discovery edges: walk BFS again, point by point, in the
        # canonical order, marking the first edge that reaches each point
        tree = np.zeros((n_gens, act.degree), dtype=bool)
        parent = np.full(act.degree, -1, dtype=np.int64)
        parent_letter = np.zeros(act.degree, dtype=np.int64)
        seen = np.zeros(act.degree, dtype=bool)
        seen[act.basepoint] = True
        for x in order:
            for letter in [k + 1 for k in range(n_gens)] + [-(k + 1) for k in range(n_gens)]:
                y = int(act.letter_perm(letter)[x])
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    parent_letter[y] = letter
                    if letter > 0:
                        tree[letter - 1, x] = True
                    else:
                        tree[-letter - 1, y] = True
        self.tree = tree
        self.parent = parent
        self.parent_letter = parent_letter
        edge_index = np.full((n_gens, act.degree), -1, dtype=np.int64)
        count = 0
        for g in range(n_gens):
            for v in range(act.degree):
                if not tree[g, v]:
                    edge_index[g, v] = count
                    count += 1
        self.edge_index = edge_index
        self.n_edges = count
        assert count == act.degree * n_gens - (act.degree - 1)

    def walk(self, w: Word, start: int) -> tuple[int, np.ndarray]:
        """Walk w from a point; returns the endpoint and the signed count of
        non-tree edge crossings (exact integers, not yet reduced mod p)."""
        vec = np.zeros(self.n_edges, dtype=np.int64)
        x = int(start)
        act = self.act
        for letter in reversed(w.letters):
            if letter > 0:
                e = self.edge_index[letter - 1, x]
                if e >= 0:
                    vec[e] += 1
                x = int(act.perms[letter - 1][x])
            else:
                x = int(act.inverse_perms[-letter - 1][x])
                e = self.edge_index[-letter - 1, x]
                if e >= 0:
                    vec[e] -= 1
        return x, vec


def build_schreier(act: PointedAction) -> SchreierData:
    return SchreierData(act)


def schreier_class(
    sd: SchreierData, w: Word, start: int, p: int
) -> tuple[int, np.ndarray]:
    """Endpoint and mod-p edge vector of the walk; when the walk closes at
    the basepoint the vector is the homology class of w in the stabilizer."""
    end, vec = sd.walk(w, start)
    return end, (vec % p).astype(np.int64)


# ---------------------------------------------------------------------------
# F_p linear algebra (dense)
# ---------------------------------------------------------------------------


def rref_modp(rows: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p; returns (nonzero rows, pivot cols)."""
    a = (np.asarray(rows, dtype=np.int64) % p).copy()
    if a.ndim != 2:
        a = a.reshape(1, -1)
    m, n = a.shape
    r = 0
    pivots: list[int] = []
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, p)) % p
        col = a[:, c].copy()
        col[r] = 0
        mask = col != 0
        if mask.any():
            a[mask] = (a[mask] - np.outer(col[mask], a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank_modp(rows: np.ndarray, p: int) -> int:
    return len(rref_modp(rows, p)[1])


@dataclass
class HomologyData:
    """Quotient of F_p^edges by relator rows and kill rows.

    ``projection`` is a dim(H) x edges matrix whose kernel is exactly the
    row span; composing it with inclusion of the span gives zero.
    """

    p: int
    schreier: SchreierData
    kill_words: list[Word]
    rref: np.ndarray
    pivots: list[int]
    free_cols: list[int]
    dim: int
    projection: np.ndarray

    def project(self, vec: np.ndarray) -> np.ndarray:
        return (self.projection @ (np.asarray(vec, dtype=np.int64) % self.p)) % self.p

    def class_of(self, w: Word, start: int | None = None) -> np.ndarray:
        base = self.schreier.act.basepoint if start is None else start
        end, vec = self.schreier.walk(w, base)
        if end != base:
            raise KillWordNotInSubgroup(
                f"word does not fix the point: {w} ends at {end}", word=w, endpoint=end
            )
        return self.project(vec)

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "edges": self.schreier.n_edges,
            "dim": self.dim,
            "pivots": self.pivots,
            "rref": self.rref.tolist(),
            "kill_words": [str(w) for w in self.kill_words],
        }


def homology(act: PointedAction, p: int, kill_words: list[Word]) -> HomologyData:
    """Mod-p homology of the basepoint stabilizer with handles killed.

    Relator rows are included at every point, so the quotient is independent
    of lift choices and conjugation acts trivially on it; together with the
    supplied kill rows the row span therefore contains the homology image of
    the whole normal closure of the kill set.  With no kills the dimension is
    2 + degree*(2*genus - 2) for actions of orientable presentations.
    """
    sd = build_schreier(act)
    rows = np.zeros((act.degree + len(kill_words), sd.n_edges), dtype=np.int64)
    relator = act.pres.relator
    for v in range(act.degree):
        end, vec = sd.walk(relator, v)
        assert end == v, "relator must act trivially on a verified action"
        rows[v] = vec
    base = act.basepoint
    for i, w in enumerate(kill_words):
        end, vec = sd.walk(w, base)
        if end != base:
            raise KillWordNotInSubgroup(
                f"kill word {w} moves the basepoint to {end}", word=w, endpoint=end
            )
        rows[act.degree + i] = vec
    rref, pivots = rref_modp(rows, p)
    pivot_set = set(pivots)
    free_cols = [c for c in range(sd.n_edges) if c not in pivot_set]
    dim = len(free_cols)
    # projection onto free coordinates after eliminating pivot coordinates
    projection = np.zeros((dim, sd.n_edges), dtype=np.int64)
    for row_out, c in enumerate(free_cols):
        projection[row_out, c] = 1
    for i, c in enumerate(pivots):
        projection[:, c] = (-rref[i, free_cols]) % p
    return HomologyData(
        p=p,
        schreier=sd,
        kill_words=list(kill_words),
        rref=rref,
        pivots=pivots,
        free_cols=free_cols,
        dim=dim,
        projection=projection,
    )


# ---------------------------------------------------------------------------
# separation maps
# ---------------------------------------------------------------------------


@dataclass
class SeparationMap:
    """Linear map F_p^dim(H) -> F_p^m sending every target class off zero."""

    p: int
    rank: int
    matrix: np.ndarray  # rank x dim
    seed: int
    targets: list[tuple[Word, np.ndarray]]

    def apply(self, h_class: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(0, dtype=np.int64)
        return (self.matrix @ (np.asarray(h_class) % self.p)) % self.p

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "rank": self.rank,
            "seed": self.seed,
            "matrix": self.matrix.tolist(),
            "targets": [
                {"word": str(w), "image": self.apply(c).tolist()} for w, c in self.targets
            ],
        }


def search_separation(
    hd: HomologyData,
    targets: list[Word],
    seed: int,
    rank_cap: int = 8,
    tries: int = 32,
) -> SeparationMap:
    """Find the minimal rank m whose seeded random matrix keeps every target
    class nonzero (full row rank enforced so the cocycle cover stays
    transitive).  Deterministic given the seed.

    Raises ``TargetInvisible`` when some target class is already zero in H
    (the depth-1 quotient cannot separate it: change d or E, or accept the
    failure) and ``RankExhausted`` past the rank cap.
    """
    p = hd.p
    classes: list[np.ndarray] = []
    for w in targets:
        c = hd.class_of(w)
        if not c.any():
            raise TargetInvisible(f"class of {w} dies in the homology quotient", word=w)
        classes.append(c)
    if not targets:
        return SeparationMap(p=p, rank=0, matrix=np.zeros((0, hd.dim), dtype=np.int64), seed=seed, targets=[])
    rng = random.Random(seed)
    for rank in range(1, rank_cap + 1):
        for _ in range(tries):
            matrix = np.array(
                [[rng.randrange(p) for _ in range(hd.dim)] for _ in range(rank)],
                dtype=np.int64,
            )
            if rank_modp(matrix, p) != rank:
                continue
            images = (matrix @ np.stack(classes, axis=1)) % p
            if (images != 0).any(axis=0).all():
                return SeparationMap(
                    p=p,
                    rank=rank,
                    matrix=matrix,
                    seed=seed,
                    targets=list(zip(targets, classes)),
                )
    raise RankExhausted(
        f"no rank <= {rank_cap} map separates {len(targets)} targets over F_{p}"
    )


# ---------------------------------------------------------------------------
# cocycle covers
# ---------------------------------------------------------------------------


def _encode_shift_table(p: int, rank: int) -> np.ndarray:
    """digits[h] = base-p digit vector of h, little-endian."""
    size = p**rank
    digits = np.zeros((size, rank), dtype=np.int64)
    h = np.arange(size)
    for t in range(rank):
        digits[:, t] = (h // p**t) % p
    return digits


def cocycle_cover(act: PointedAction, hd: HomologyData, sm: SeparationMap) -> PointedAction:
    """Extension of the base action by F_p^m along the separated cocycle.

    Points are pairs (base point v, h in F_p^m) encoded as v*p^m + h; a
    generator g sends (v, h) to (g.v, h + c(g, v)) where c(g, v) is the
    image under the separation map of the single-edge class of g at v.  The
    relator stays trivial because relator rows lie in the projection kernel;
    the basepoint stabilizer is the kernel of stabilizer -> H -> F_p^m.
    """
    if hd.schreier.act is not act:
        raise ValueError("homology data was built for a different action")
    p, rank = sm.p, sm.rank
    if rank == 0:
        return act
    block = p**rank
    n = act.degree
    # image of each edge class under the separation map, precomputed
    edge_images = (sm.matrix @ hd.projection) % p  # rank x n_edges
    digits = _encode_shift_table(p, rank)
    powers = p ** np.arange(rank, dtype=np.int64)
    perms = np.empty((act.perms.shape[0], n * block), dtype=np.int64)
    for g in range(act.perms.shape[0]):
        base_images = act.perms[g]
        eidx = hd.schreier.edge_index[g]
        shifts = np.zeros((n, rank), dtype=np.int64)
        nontree = eidx >= 0
        shifts[nontree] = edge_images[:, eidx[nontree]].T
        new_h = ((digits[None, :, :] + shifts[:, None, :]) % p) @ powers  # (n, block)
        perms[g] = (base_images[:, None] * block + new_h).ravel()
    meta = {
        "kind": "cocycle",
        "base": dict(act.meta),
        "p": p,
        "rank": rank,
        "seed": sm.seed,
    }
    return PointedAction(act.pres, perms, act.basepoint * block, meta)


def iterated_cocycle_tower(
    act: PointedAction,
    p: int,
    rank: int,
    levels: int,
    seed: int,
    degree_cap: int = 200_000,
) -> list[PointedAction]:
    """Experimental: repeated no-kill homology extensions over one action.

    Deeper p-quotients grow exponentially in degree, so this mode enforces a
    hard cap and exists for exploration only; the supported construction
    path uses a single homology layer.
    """
    tower = [act]
    rng = random.Random(seed)
    for level in range(levels):
        cur = tower[-1]
        if cur.degree * p**rank > degree_cap:
            raise DegreeCapExceeded(
                f"level {level + 1} would have degree {cur.degree * p ** rank} > cap {degree_cap}"
            )
        hd = homology(cur, p, [])
        matrix = None
        for _ in range(64):
            cand = np.array(
                [[rng.randrange(p) for _ in range(hd.dim)] for _ in range(rank)],
                dtype=np.int64,
            )
            if rank_modp(cand, p) == rank:
                matrix = cand
                break
        if matrix is None:
            raise RankExhausted(f"no full-rank {rank} matrix over F_{p} found")
        sm = SeparationMap(p=p, rank=rank, matrix=matrix, seed=seed, targets=[])
        tower.append(cocycle_cover(cur, hd, sm))
    return tower


def homology_to_json(hd: HomologyData, sm: SeparationMap | None = None) -> str:
    payload: dict = {"homology": hd.to_json_dict()}
    if sm is not None:
        payload["separation"] = sm.to_json_dict()
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
