"""Pixel graphs: Gaussian-kernel adjacency, Laplacian and difference operator.

Two weightings are supported. The extended-neighbourhood (EN) graph
connects every pair of cells within a physical cutoff distance, using the
true centre-to-centre distance in the kernel, so it depends on geometry
alone. The NLTV graph connects cells inside a square search window and
weighs them by the distance between reference-image patches, so it has to
be rebuilt whenever the reference changes.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

# relative slack on cutoff comparisons, so grid spacings that equal the
# cutoff up to rounding stay inside it
_CUTOFF_SLACK = 1e-9


@dataclass(frozen=True)
class KernelParams:
    sigma: float
    cutoff: float
    patch: int = 3  # full width, odd
    window: int = 21  # full width, odd
    magnitude_only: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        for name in ("patch", "window"):
            w = getattr(self, name)
            if w < 1 or w % 2 == 0:
                raise ValueError(f"{name} width must be a positive odd integer, got {w}")


@dataclass
class GraphModel:
    """Undirected weighted graph over the N pixels.

    ``W`` is stored as a CSR matrix with sorted column indices, so the
    neighbourhood of vertex ``n`` is ``W.indices[W.indptr[n]:W.indptr[n+1]]``
    in ascending order.
    """

    W: sp.csr_matrix
    kind: str = "custom"
    _laplacian: sp.csr_matrix = field(default=None, repr=False)

    @property
    def N(self):
        return self.W.shape[0]

    @property
    def E(self):
        return self.W.nnz

    def neighbours(self, n):
        return self.W.indices[self.W.indptr[n]:self.W.indptr[n + 1]]

    @property
    def degree(self):
        return np.asarray(self.W.sum(axis=1)).ravel()

    @property
    def D_deg(self):
        return sp.diags(self.degree, format="csr")

    @property
    def L_g(self):
        if self._laplacian is None:
            self._laplacian = (self.D_deg - self.W).tocsr()
        return self._laplacian


def _finalize(rows, cols, weights, N, kind):
    keep = (weights > 0) & (rows != cols)
    r, c, w = rows[keep], cols[keep], weights[keep]
    W = sp.coo_matrix((np.r_[w, w], (np.r_[r, c], np.r_[c, r])), shape=(N, N)).tocsr()
    W.sum_duplicates()
    W.sort_indices()
    W.eliminate_zeros()
    return GraphModel(W, kind)


def gaussian_weight(delta, sigma, cutoff):
    """Kernel weight ``exp(-delta^2 / (2 sigma^2))``, zero beyond the cutoff."""
    delta = np.asarray(delta, dtype=float)
    w = np.exp(-delta ** 2 / (2.0 * sigma ** 2))
    return np.where(delta <= cutoff * (1 + _CUTOFF_SLACK), w, 0.0)


def en_distance(grid, n, n2):
    """Euclidean distance in metres between the centres of cells ``n`` and ``n2``."""
    c = grid.centers
    return np.hypot(*(c[n] - c[n2]).T)


def _patches(ref_image, grid, patch):
    h = patch // 2
    img = np.pad(grid.to_image(ref_image), h)
    win = np.lib.stride_tricks.sliding_window_view(img, (patch, patch))
    return win.reshape(grid.N, patch * patch)


def nltv_distance(ref_image, grid, n, n2, patch=3, magnitude_only=False):
    """l2 distance between zero-padded ``patch x patch`` patches around ``n`` and ``n2``."""
    ref = np.asarray(ref_image)
    if ref.shape != (grid.N,):
        raise ValueError(f"reference image must have length {grid.N}")
    if magnitude_only:
        ref = np.abs(ref)
    P = _patches(ref, grid, patch)
    return np.linalg.norm(P[n] - P[n2], axis=-1)


def window_pairs(grid, window):
    """All pairs ``n < n2`` whose row and column offsets are within the half-window."""
    h = window // 2
    rows, cols = [], []
    base = np.arange(grid.N)
    r0, c0 = grid.rowcol(base)
    for dr in range(0, h + 1):
        for dc in range(-h, h + 1):
            if dr == 0 and dc <= 0:
                continue
            r, c = r0 + dr, c0 + dc
            ok = (r < grid.ny) & (c >= 0) & (c < grid.nx)
            rows.append(base[ok])
            cols.append(grid.index(r[ok], c[ok]))
    if not rows:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    return np.concatenate(rows), np.concatenate(cols)


def en_pairs(grid, cutoff):
    tree = cKDTree(grid.centers)
    pairs = tree.query_pairs(cutoff * (1 + _CUTOFF_SLACK), output_type="ndarray")
    if pairs.size == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    return pairs[:, 0], pairs[:, 1]


def build_weights(distance_fn, params, grid, pairs):
    """Assemble a :class:`GraphModel` from candidate pairs and a distance.

    ``distance_fn(n, n2)`` is evaluated on the index arrays of candidate
    pairs; the Gaussian kernel with cutoff then sets each weight.
    """
    i, j = pairs
    delta = distance_fn(i, j) if len(i) else np.empty(0)
    w = gaussian_weight(delta, params.sigma, params.cutoff)
    return _finalize(np.asarray(i), np.asarray(j), w, grid.N, "custom")


def en_graph(grid, params):
    """Extended-neighbourhood graph: every pair within ``params.cutoff`` metres."""
    pairs = en_pairs(grid, params.cutoff)
    g = build_weights(lambda a, b: en_distance(grid, a, b), params, grid, pairs)
    g.kind = "en"
    return g


def nltv_graph(grid, ref_image, params):
    """Nonlocal graph weighted by reference-image patch distances.

    Candidates are restricted to the ``window x window`` search window; the
    kernel cutoff applies to the patch distance.
    """
    ref = np.asarray(ref_image)
    if params.magnitude_only:
        ref = np.abs(ref)
    P = _patches(ref, grid, params.patch)
    pairs = window_pairs(grid, params.window)
    g = build_weights(lambda a, b: np.linalg.norm(P[a] - P[b], axis=1), params, grid, pairs)
    g.kind = "nltv"
    return g


def tv2d_graph(grid):
    """4-connected lattice with unit weights."""
    n = np.arange(grid.N)
    r, c = grid.rowcol(n)
    right = c + 1 < grid.nx
    down = r + 1 < grid.ny
    rows = np.r_[n[right], n[down]]
    cols = np.r_[n[right] + 1, n[down] + grid.nx]
    g = _finalize(rows, cols, np.ones(len(rows)), grid.N, "tv2d")
    return g


def build_difference(model):
    """Stack the per-vertex difference blocks into one sparse E x N matrix.

    Row ``i`` of vertex ``n``'s block carries ``+w`` at column ``n`` and
    ``-w`` at the ``i``-th neighbour, so ``||Lambda s||_1`` sums the weighted
    absolute differences over every directed edge.
    """
    W = model.W
    E, N = W.nnz, model.N
    src = np.repeat(np.arange(N), np.diff(W.indptr))
    rows = np.arange(E)
    data = np.r_[W.data, -W.data]
    return sp.csr_matrix((data, (np.r_[rows, rows], np.r_[src, W.indices])), shape=(E, N))


def dump_edges(path, model):
    """Write ``n n' weight`` lines, sorted by ``(n, n')``."""
    W = model.W.tocoo()
    order = np.lexsort((W.col, W.row))
    with open(path, "w") as fh:
        for a, b, w in zip(W.row[order], W.col[order], W.data[order]):
            fh.write(f"{a} {b} {w:.17g}\n")


def load_edges(path, N):
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return GraphModel(sp.csr_matrix((N, N)))
    W = sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(N, N))
    W.sort_indices()
    return GraphModel(W)
