"""Distance analysis and Ward hierarchical clustering of mean feature
vectors, plus plot-ready text renderings.

Heights follow the usual squared-distance Lance-Williams convention for
Ward's method (two singletons merge at their Euclidean distance), so
they are directly comparable with an independent scalar run of the
recurrence.  Newick output places every node at half its merge height,
which renders an ultrametric tree with non-negative branch lengths.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .validation import check_array

__all__ = [
    "DistanceMatrix",
    "Dendrogram",
    "mean_vectors",
    "distance_matrix",
    "ward_linkage",
    "render_newick",
    "parse_newick",
    "render_merge_csv",
    "parse_merge_csv",
    "combined_matrix_csv",
    "bakers_gamma",
]


@dataclass
class DistanceMatrix:
    labels: list
    d: np.ndarray
    scaled: bool

    def __post_init__(self):
        self.labels = list(self.labels)
        self.d = np.asarray(self.d, dtype=float)
        n = len(self.labels)
        if len(set(map(str, self.labels))) != n:
            raise ValueError("labels must be unique")
        if self.d.shape != (n, n):
            raise ValueError("matrix shape does not match labels")
        if not np.allclose(self.d, self.d.T, atol=1e-12, rtol=0.0):
            raise ValueError("matrix must be symmetric")
        if np.any(np.diag(self.d) != 0):
            raise ValueError("diagonal must be zero")
        if np.any(self.d < 0):
            raise ValueError("distances must be non-negative")

    def pair(self, a, b):
        i = self.labels.index(a)
        j = self.labels.index(b)
        return float(self.d[i, j])

    def offdiag(self):
        mask = ~np.eye(len(self.labels), dtype=bool)
        return self.d[mask]


def mean_vectors(matrix, by, *, standard_variant="standard"):
    """Label -> mean feature vector.

    by="variant" averages each variant over all fids and runs;
    by="fid" averages per fid over the standard variant's rows only.
    Requires a scaled matrix.
    """
    if by not in ("variant", "fid"):
        raise ValueError(f"by must be 'variant' or 'fid', got {by!r}")
    if not matrix.scaled:
        raise ValueError("mean vectors are defined on a scaled matrix")
    if by == "fid":
        keep = matrix.meta_array("variant") == standard_variant
        if not np.any(keep):
            raise ValueError(f"no rows for variant {standard_variant!r}")
        matrix = matrix.select_rows(keep)
    key = matrix.meta_array(by)
    labels = [v.item() if hasattr(v, "item") else v for v in np.unique(key)]
    vectors = np.vstack([matrix.values[key == lab].mean(axis=0) for lab in labels])
    return labels, vectors


def distance_matrix(labels, vectors, *, scale=True):
    """Pairwise Euclidean distances, min-max scaled over off-diagonals.

    A constant off-diagonal (including the 2-label case) scales to all
    zeros.  scale=False returns the raw distances.
    """
    vectors = check_array(vectors, ndim=2, name="vectors")
    if len(labels) != vectors.shape[0]:
        raise ValueError("labels and vectors disagree on count")
    if len(labels) < 2:
        raise ValueError("need at least 2 labels")
    diff = vectors[:, None, :] - vectors[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(d, 0.0)
    d = (d + d.T) / 2.0
    if not scale:
        return DistanceMatrix(labels, d, scaled=False)
    mask = ~np.eye(len(labels), dtype=bool)
    lo = d[mask].min()
    hi = d[mask].max()
    if hi > lo:
        out = (d - lo) / (hi - lo)
    else:
        out = np.zeros_like(d)
    out[~mask] = 0.0
    return DistanceMatrix(labels, out, scaled=True)


@dataclass(eq=False)
class Dendrogram:
    """Agglomerative merge history.

    Leaves are ids 0..n-1 in label order; merge i creates id n+i.
    Each merge is (a, b, height, size).  Equality is structural: two
    dendrograms are equal when they agree on the cophenetic map (label
    pair -> first common merge height), which determines an ultrametric
    tree uniquely; leaf numbering and merge order are representation.
    """

    labels: list
    merges: list

    def __eq__(self, other):
        # Newick branch lengths are half-height differences, so a text
        # round trip can perturb a height by an ulp; compare tightly
        # instead of bitwise.
        if not isinstance(other, Dendrogram):
            return NotImplemented
        if sorted(map(str, self.labels)) != sorted(map(str, other.labels)):
            return False
        mine = {(min(a, b, key=str), max(a, b, key=str)): h
                for (a, b), h in self.cophenetic().items()}
        theirs = {(min(a, b, key=str), max(a, b, key=str)): h
                  for (a, b), h in other.cophenetic().items()}
        if set(mine) != set(theirs):
            return False
        return all(
            math.isclose(mine[k], theirs[k], rel_tol=1e-12, abs_tol=1e-15)
            for k in mine
        )

    def __post_init__(self):
        self.labels = list(self.labels)
        self.merges = [(int(a), int(b), float(h), int(s))
                       for a, b, h, s in self.merges]
        n = len(self.labels)
        if len(self.merges) != n - 1:
            raise ValueError(f"{n} leaves need {n - 1} merges")

    def heights(self):
        return [h for _, _, h, _ in self.merges]

    def cophenetic(self):
        """(pair of leaf labels) -> height of their first common cluster."""
        n = len(self.labels)
        members = {i: [i] for i in range(n)}
        out = {}
        for step, (a, b, h, _) in enumerate(self.merges):
            for i in members[a]:
                for j in members[b]:
                    key = (min(i, j), max(i, j))
                    out[(self.labels[key[0]], self.labels[key[1]])] = h
            members[n + step] = members.pop(a) + members.pop(b)
        return out


def ward_linkage(labels, vectors):
    """Ward agglomeration via the Lance-Williams recurrence on squared
    Euclidean distances; ties break on the smallest (d^2, a, b)."""
    vectors = check_array(vectors, ndim=2, name="vectors")
    n = vectors.shape[0]
    if len(labels) != n:
        raise ValueError("labels and vectors disagree on count")
    if n < 2:
        raise ValueError("need at least 2 vectors")
    total = 2 * n - 1
    d2 = np.full((total, total), np.inf)
    diff = vectors[:, None, :] - vectors[None, :, :]
    d2[:n, :n] = np.sum(diff * diff, axis=2)
    size = np.zeros(total, dtype=np.int64)
    size[:n] = 1
    active = list(range(n))
    merges = []
    for step in range(n - 1):
        best = (math.inf, -1, -1)
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                a, b = active[ai], active[bi]
                cand = (d2[a, b], a, b)
                if cand < best:
                    best = cand
        dist2, a, b = best
        c = n + step
        size[c] = size[a] + size[b]
        merges.append((a, b, math.sqrt(dist2), int(size[c])))
        for o in active:
            if o in (a, b):
                continue
            new = (
                (size[a] + size[o]) * d2[a, o]
                + (size[b] + size[o]) * d2[b, o]
                - size[o] * dist2
            ) / (size[a] + size[b] + size[o])
            d2[c, o] = new
            d2[o, c] = new
        active.remove(a)
        active.remove(b)
        active.append(c)
    return Dendrogram(labels, merges)


def _check_newick_label(label):
    text = str(label)
    if any(ch in text for ch in "():,;\n") or not text:
        raise ValueError(f"label {text!r} cannot be rendered")
    return text


def render_newick(dendrogram):
    """Ultrametric Newick: every node sits at half its merge height."""
    n = len(dendrogram.labels)
    position = {i: 0.0 for i in range(n)}
    rendered = {i: _check_newick_label(lab)
                for i, lab in enumerate(dendrogram.labels)}
    for step, (a, b, h, _) in enumerate(dendrogram.merges):
        node = n + step
        position[node] = h / 2.0
        la = position[node] - position[a]
        lb = position[node] - position[b]
        rendered[node] = f"({rendered[a]}:{la:.17g},{rendered[b]}:{lb:.17g})"
        del rendered[a], rendered[b]
    (root,) = rendered.values()
    return root + ";"


def parse_newick(text):
    """Inverse of render_newick; heights are twice the node positions."""
    text = text.strip()
    if not text.endswith(";"):
        raise ValueError("newick string must end with ';'")
    body = text[:-1]
    pos = 0

    def parse_node():
        nonlocal pos
        if pos < len(body) and body[pos] == "(":
            pos += 1
            left = parse_node()
            if body[pos] != ",":
                raise ValueError(f"expected ',' at {pos}")
            pos += 1
            right = parse_node()
            if body[pos] != ")":
                raise ValueError(f"expected ')' at {pos}")
            pos += 1
            length = None
            if pos < len(body) and body[pos] == ":":
                pos += 1
                length = _parse_number()
            return ("node", left, right, length)
        start = pos
        while pos < len(body) and body[pos] not in ":,()":
            pos += 1
        label = body[start:pos]
        if not label:
            raise ValueError(f"empty label at {start}")
        length = None
        if pos < len(body) and body[pos] == ":":
            pos += 1
            length = _parse_number()
        return ("leaf", label, length)

    def _parse_number():
        nonlocal pos
        start = pos
        while pos < len(body) and body[pos] not in ",()":
            pos += 1
        return float(body[start:pos])

    tree = parse_node()
    if pos != len(body):
        raise ValueError(f"trailing characters at {pos}")

    labels = []

    def collect(node):
        if node[0] == "leaf":
            labels.append(node[1])

        else:
            collect(node[1])
            collect(node[2])

    collect(tree)

    internals = []

    def build(node):
        """Returns (temp id, position, leaf count); leaves get final ids."""
        if node[0] == "leaf":
            return ("leaf", labels.index(node[1])), 0.0, 1
        _, left, right, _ = node
        lref, lpos, lcnt = build(left)
        rref, rpos, rcnt = build(right)
        llen = left[2] if left[0] == "leaf" else left[3]
        rlen = right[2] if right[0] == "leaf" else right[3]
        if llen is None or rlen is None:
            raise ValueError("branch lengths are required")
        pos_a = lpos + llen
        pos_b = rpos + rlen
        if abs(pos_a - pos_b) > 1e-9 * max(1.0, abs(pos_a)):
            raise ValueError("children disagree on parent position")
        idx = len(internals)
        internals.append([lref, rref, 2.0 * pos_a, lcnt + rcnt])
        return ("int", idx), pos_a, lcnt + rcnt

    build(tree)
    # creation order = ascending height, stable in parse (post) order
    order = sorted(range(len(internals)), key=lambda i: (internals[i][2], i))
    remap = {("int", old): ("int", new) for new, old in enumerate(order)}
    n = len(labels)

    def resolve(ref):
        if ref[0] == "leaf":
            return ref[1]
        return n + remap[ref][1]

    merges = []
    for new_idx, old_idx in enumerate(order):
        lref, rref, height, count = internals[old_idx]
        merges.append((resolve(lref), resolve(rref), height, count))
    return Dendrogram(labels, merges)


def render_merge_csv(dendrogram):
    """Flat merge table; leaves by label, internal clusters as #k."""
    for label in dendrogram.labels:
        if "," in str(label) or str(label).startswith("#"):
            raise ValueError(f"label {label!r} cannot be rendered")
    n = len(dendrogram.labels)

    def ref(i):
        return str(dendrogram.labels[i]) if i < n else f"#{i - n}"

    lines = ["labels," + ",".join(str(v) for v in dendrogram.labels)]
    lines.append("left,right,height,size")
    for a, b, h, s in dendrogram.merges:
        lines.append(f"{ref(a)},{ref(b)},{h:.17g},{s}")
    return "\n".join(lines) + "\n"


def parse_merge_csv(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or not lines[0].startswith("labels,"):
        raise ValueError("missing labels preamble")
    labels = lines[0].split(",")[1:]
    if lines[1] != "left,right,height,size":
        raise ValueError("missing merge header")
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)

    def deref(token):
        if token.startswith("#"):
            return n + int(token[1:])
        return index[token]

    merges = []
    for ln in lines[2:]:
        left, right, h, s = ln.split(",")
        merges.append((deref(left), deref(right), float(h), int(s)))
    return Dendrogram(labels, merges)


def combined_matrix_csv(lower, upper):
    """One matrix CSV: lower triangle from ``lower``, upper from ``upper``.

    Mirrors the paper-style combined layout (short run length below the
    diagonal, long above).  Both matrices must share labels.
    """
    if list(lower.labels) != list(upper.labels):
        raise ValueError("label sets differ")
    labels = [str(v) for v in lower.labels]
    lines = ["label," + ",".join(labels)]
    n = len(labels)
    for i in range(n):
        cells = []
        for j in range(n):
            if i == j:
                cells.append("0")
            elif i > j:
                cells.append(f"{lower.d[i, j]:.17g}")
            else:
                cells.append(f"{upper.d[i, j]:.17g}")
        lines.append(labels[i] + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def bakers_gamma(dendro_a, dendro_b):
    """Spearman correlation of cophenetic heights over shared leaf pairs."""
    if sorted(map(str, dendro_a.labels)) != sorted(map(str, dendro_b.labels)):
        raise ValueError("dendrograms must share their leaf labels")
    ca = dendro_a.cophenetic()
    cb = dendro_b.cophenetic()

    def lookup(c, i, j):
        return c[(i, j)] if (i, j) in c else c[(j, i)]

    pairs = sorted(ca)
    xs = [ca[p] for p in pairs]
    ys = [lookup(cb, *p) for p in pairs]
    rho = spearmanr(xs, ys).statistic
    return float(rho)
