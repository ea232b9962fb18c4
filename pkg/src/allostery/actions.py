"""Finite transitive pointed permutation actions.

A ``PointedAction`` is the computational stand-in for a finite-index
subgroup: the basepoint stabilizer of a transitive action on ``{0..m-1}``.
Permutations are stored densely (one image array per positive generator) so
that words evaluate in vectorized loops on actions with up to ~10^6 points.

Words act on the left: ``(uv).x = u.(v.x)``, i.e. evaluation applies the
rightmost letter first.  All breadth-first traversals use the fixed letter
order "positive generators in alphabet order, then their inverses", which
makes orbit numberings and serialized certificates reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ForeignGenerators, NotAQuotient, PresentationMismatch
from .words import Presentation, Word, presentation_from_json

_SIDECAR_THRESHOLD = 65536  # embed perms in JSON below this degree


class PointedAction:
    """Transitive action of a presentation with a distinguished basepoint."""

    def __init__(
        self,
        pres: Presentation,
        perms: np.ndarray | Sequence[Sequence[int]],
        basepoint: int = 0,
        meta: dict | None = None,
    ):
        perms = np.ascontiguousarray(np.asarray(perms, dtype=np.int64))
        if perms.ndim != 2 or perms.shape[0] != pres.n_generators:
            raise ValueError("need one permutation per positive generator")
        self.pres = pres
        self.perms = perms
        self.degree = int(perms.shape[1])
        self.basepoint = int(basepoint)
        self.meta = dict(meta or {})
        self._inverse: np.ndarray | None = None

    @property
    def inverse_perms(self) -> np.ndarray:
        if self._inverse is None:
            inv = np.empty_like(self.perms)
            rng = np.arange(self.degree, dtype=np.int64)
            for k in range(self.perms.shape[0]):
                inv[k, self.perms[k]] = rng
            self._inverse = inv
        return self._inverse

    def letter_perm(self, letter: int) -> np.ndarray:
        """Image array of a signed letter."""
        if letter > 0:
            return self.perms[letter - 1]
        return self.inverse_perms[-letter - 1]

    def _check_word(self, w: Word) -> None:
        if w.alphabet != self.pres.alphabet:
            raise ForeignGenerators("word is not over this action's presentation")

    def act(self, w: Word, x: int) -> int:
        """The point ``w . x``."""
        self._check_word(w)
        for letter in reversed(w.letters):
            x = int(self.letter_perm(letter)[x])
        return x

    def word_images(self, w: Word) -> np.ndarray:
        """Vector of ``w . x`` over all points x."""
        self._check_word(w)
        cur = np.arange(self.degree, dtype=np.int64)
        for letter in reversed(w.letters):
            cur = self.letter_perm(letter)[cur]
        return cur

    def fixed_mask(self, w: Word) -> np.ndarray:
        return self.word_images(w) == np.arange(self.degree, dtype=np.int64)

    def __repr__(self) -> str:
        return (
            f"PointedAction(degree={self.degree}, basepoint={self.basepoint}, "
            f"pres={self.pres!r})"
        )


def trivial_action(pres: Presentation) -> PointedAction:
    return PointedAction(
        pres, np.zeros((pres.n_generators, 1), dtype=np.int64), 0, {"kind": "trivial"}
    )


def fix_set(act: PointedAction, w: Word) -> np.ndarray:
    """Sorted array of points fixed by w."""
    return np.flatnonzero(act.fixed_mask(w))


def fix_all(act: PointedAction, words: Iterable[Word]) -> np.ndarray:
    """Points fixed by every word in the list.

    Subgroups enter through generating sets only: a point is fixed by every
    element of a subgroup iff it is fixed by the generators.
    """
    mask = np.ones(act.degree, dtype=bool)
    for w in words:
        mask &= act.fixed_mask(w)
    return np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    ok: bool
    degree: int
    failures: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "index": self.degree, "failures": self.failures}


def _bfs_order(act: PointedAction, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical breadth-first numbering from ``start``.

    Returns (order, position): ``order`` lists old point labels in visit
    order, ``position[old] = new`` (or -1 if unreached).  Frontier expansion
    is parent-major then letter-major, matching a FIFO queue with the fixed
    letter order.
    """
    n = act.degree
    position = np.full(n, -1, dtype=np.int64)
    position[start] = 0
    order = [np.array([start], dtype=np.int64)]
    frontier = order[0]
    count = 1
    tables = [act.perms[k] for k in range(act.perms.shape[0])] + [
        act.inverse_perms[k] for k in range(act.perms.shape[0])
    ]
    while frontier.size:
        images = np.stack([t[frontier] for t in tables], axis=1).ravel()
        fresh_mask = position[images] < 0
        fresh = images[fresh_mask]
        if fresh.size:
            # first occurrence in visit order
            uniq, first = np.unique(fresh, return_index=True)
            take = uniq[np.argsort(first)]
            position[take] = np.arange(count, count + take.size)
            count += take.size
            order.append(take)
            frontier = take
        else:
            frontier = np.empty(0, dtype=np.int64)
    return np.concatenate(order), position


def verify_action(act: PointedAction) -> VerificationReport:
    """Check well-formedness, the relator, and transitivity.

    Failures are reported structurally (axiom name plus a witness) rather
    than raised; the index equals the degree when all checks pass.
    """
    failures: list[dict] = []
    n = act.degree
    rng = np.arange(n, dtype=np.int64)
    if not (0 <= act.basepoint < n):
        failures.append({"axiom": "basepoint", "witness": act.basepoint})
    for k, name in enumerate(act.pres.alphabet):
        row = act.perms[k]
        if row.min(initial=0) < 0 or row.max(initial=0) >= n or not np.array_equal(
            np.sort(row), rng
        ):
            failures.append({"axiom": "bijection", "generator": name})
    if not failures:
        images = act.word_images(act.pres.relator)
        bad = np.flatnonzero(images != rng)
        if bad.size:
            failures.append({"axiom": "relator", "witness_point": int(bad[0])})
        _, position = _bfs_order(act, act.basepoint)
        unreached = np.flatnonzero(position < 0)
        if unreached.size:
            failures.append(
                {
                    "axiom": "transitivity",
                    "orbit_representatives": [act.basepoint, int(unreached[0])],
                }
            )
    return VerificationReport(ok=not failures, degree=n, failures=failures)


# ---------------------------------------------------------------------------
# canonical form and serialization
# ---------------------------------------------------------------------------


def canonical_relabel(act: PointedAction) -> PointedAction:
    """Renumber points in breadth-first order from the basepoint.

    Equal basepoint stabilizers of equal presentations yield identical
    permutation tables, making serialized actions directly comparable.
    """
    order, position = _bfs_order(act, act.basepoint)
    if order.size != act.degree:
        raise ValueError("cannot canonicalize an intransitive action")
    new_perms = position[act.perms[:, order]]
    return PointedAction(act.pres, new_perms, 0, act.meta)


def canonical_serialize(act: PointedAction) -> bytes:
    """Deterministic canonical bytes (meta excluded)."""
    canon = canonical_relabel(act)
    payload = {
        "pres": canon.pres.to_json_dict(),
        "degree": canon.degree,
        "basepoint": 0,
        "perms": {
            name: canon.perms[k].tolist() for k, name in enumerate(canon.pres.alphabet)
        },
    }
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def save_action(act: PointedAction, path: str, sidecar_threshold: int = _SIDECAR_THRESHOLD) -> None:
    """Write the canonical action file; large tables go to a binary sidecar.

    The sidecar holds the generator permutations as little-endian u32 arrays
    in alphabet order.  Either storage form round-trips to identical
    ``canonical_serialize`` bytes.
    """
    canon = canonical_relabel(act)
    payload: dict = {
        "pres": canon.pres.to_json_dict(),
        "degree": canon.degree,
        "basepoint": 0,
        "meta": canon.meta,
    }
    if canon.degree >= sidecar_threshold:
        root, ext = os.path.splitext(path)
        sidecar = root + ".bin" if ext == ".json" else path + ".bin"
        with open(sidecar, "wb") as fh:
            fh.write(canon.perms.astype("<u4").tobytes())
        payload["perms_file"] = os.path.basename(sidecar)
        payload["perm_order"] = list(canon.pres.alphabet)
        payload["format"] = "u32le"
    else:
        payload["perms"] = {
            name: canon.perms[k].tolist() for k, name in enumerate(canon.pres.alphabet)
        }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_action(path: str) -> PointedAction:
    with open(path) as fh:
        payload = json.load(fh)
    pres = presentation_from_json(payload["pres"])
    degree = payload["degree"]
    if "perms" in payload:
        perms = np.array(
            [payload["perms"][name] for name in pres.alphabet], dtype=np.int64
        )
    else:
        if payload.get("format") != "u32le":
            raise ValueError(f"unknown sidecar format {payload.get('format')!r}")
        sidecar = os.path.join(os.path.dirname(path), payload["perms_file"])
        raw = np.fromfile(sidecar, dtype="<u4")
        perms = raw.reshape(pres.n_generators, degree).astype(np.int64)
        if payload["perm_order"] != list(pres.alphabet):
            index = [payload["perm_order"].index(name) for name in pres.alphabet]
            perms = perms[index]
    return PointedAction(pres, perms, payload["basepoint"], payload.get("meta"))


# ---------------------------------------------------------------------------
# products and quotients
# ---------------------------------------------------------------------------


def product_intersection(act1: PointedAction, act2: PointedAction) -> PointedAction:
    """Orbit of (basepoint, basepoint) in the diagonal action.

    The basepoint stabilizer of the result is the intersection of the two
    stabilizers.  The degree always divides degree1*degree2, with equality
    when the degrees are coprime.
    """
    if act1.pres != act2.pres:
        raise PresentationMismatch(f"{act1.pres!r} vs {act2.pres!r}")
    n1, n2 = act1.degree, act2.degree
    tables1 = [act1.perms[k] for k in range(act1.perms.shape[0])] + [
        act1.inverse_perms[k] for k in range(act1.perms.shape[0])
    ]
    tables2 = [act2.perms[k] for k in range(act2.perms.shape[0])] + [
        act2.inverse_perms[k] for k in range(act2.perms.shape[0])
    ]
    position = np.full(n1 * n2, -1, dtype=np.int64)
    start = act1.basepoint * n2 + act2.basepoint
    position[start] = 0
    frontier = np.array([start], dtype=np.int64)
    chunks = [frontier]
    count = 1
    while frontier.size:
        fi, fj = frontier // n2, frontier % n2
        images = np.stack(
            [t1[fi] * n2 + t2[fj] for t1, t2 in zip(tables1, tables2)], axis=1
        ).ravel()
        fresh = images[position[images] < 0]
        if fresh.size:
            uniq, first = np.unique(fresh, return_index=True)
            take = uniq[np.argsort(first)]
            position[take] = np.arange(count, count + take.size)
            count += take.size
            chunks.append(take)
            frontier = take
        else:
            frontier = np.empty(0, dtype=np.int64)
    orbit = np.concatenate(chunks)
    oi, oj = orbit // n2, orbit % n2
    perms = np.empty((act1.perms.shape[0], orbit.size), dtype=np.int64)
    for k in range(act1.perms.shape[0]):
        perms[k] = position[act1.perms[k][oi] * n2 + act2.perms[k][oj]]
    meta = {
        "kind": "product_intersection",
        "factors": [act1.degree, act2.degree],
    }
    return PointedAction(act1.pres, perms, 0, meta)


def _path_word(
    pres: Presentation, parents: dict[int, tuple[int, int]], point: int
) -> Word:
    """Word w with w . basepoint = point, from BFS parent pointers."""
    letters: list[int] = []
    while point in parents:
        point, letter = parents[point]
        letters.append(letter)
    # collected child-to-root; as written left-to-right the first letter
    # recorded is applied last, which is exactly left-action order
    return Word(pres.alphabet, letters)


def quotient_map(fine: PointedAction, coarse: PointedAction) -> np.ndarray:
    """The basepoint-respecting equivariant surjection, as a point map.

    Exists iff the coarse basepoint stabilizer contains the fine one; found
    by breadth-first transport from the basepoints.  Raises ``NotAQuotient``
    with a witness word (in the fine stabilizer, not in the coarse one)
    otherwise.  Fibers are checked to have equal size.
    """
    if fine.pres != coarse.pres:
        raise PresentationMismatch(f"{fine.pres!r} vs {coarse.pres!r}")
    n_gens = fine.perms.shape[0]
    image = np.full(fine.degree, -1, dtype=np.int64)
    image[fine.basepoint] = coarse.basepoint
    parents: dict[int, tuple[int, int]] = {}
    queue = [fine.basepoint]
    head = 0
    letters = [k + 1 for k in range(n_gens)] + [-(k + 1) for k in range(n_gens)]
    while head < len(queue):
        x = queue[head]
        head += 1
        y = image[x]
        for letter in letters:
            nx = int(fine.letter_perm(letter)[x])
            ny = int(coarse.letter_perm(letter)[y])
            if image[nx] < 0:
                image[nx] = ny
                parents[nx] = (x, letter)
                queue.append(nx)
            elif image[nx] != ny:
                u = _path_word(fine.pres, parents, x)
                v = _path_word(fine.pres, parents, nx)
                letter_word = Word(fine.pres.alphabet, [letter])
                witness = v.inverse() * letter_word * u
                raise NotAQuotient(
                    f"stabilizer word {witness} moves the coarse basepoint",
                    witness=witness,
                )
    if (image < 0).any():
        raise NotAQuotient("fine action is not transitive")
    fibers = np.bincount(image, minlength=coarse.degree)
    if fibers.min() == 0:
        raise NotAQuotient("map is not onto the coarse action")
    if fibers.max() != fibers.min():
        raise NotAQuotient("fibers have unequal cardinality")
    assert fibers.max() * coarse.degree == fine.degree
    return image
