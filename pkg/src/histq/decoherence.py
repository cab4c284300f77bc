"""Three independent constructions of the standard decoherence functional.

For a state rho with spectral form sum_i w_i |psi_i><psi_i| and homogeneous
histories h = (h_1, ..., h_n), k = (k_1, ..., k_n) the functional is

    d(h, k) = tr(h_n ... h_1 rho k_1 ... k_n).

`d_direct` evaluates that product literally.  `d_series` expands the same
number as a finite sum over basis-index tuples (j_1, ..., j_2n): each tuple
contributes w_{j_1} <eps_tilde, (h (x) k) eps> where eps and eps_tilde are
simple tensors on the doubled space assembled from psi_{j_1} and standard
basis vectors, with inner products conjugate-linear in the first argument.
`build_M` packs the same rank-one data into a single kernel operator M on
the doubled space so that d(p, q) = tr((p (x) q) M) for arbitrary history
projections p, q, including inhomogeneous ones; `d_via_M_streaming` computes
that trace tuple-by-tuple without materializing M.

Tuple slot layout (1-based index names, zero-based code): eps places
psi_{j_1} first, then e_{j_2n}, ..., e_{j_{n+2}} and e_{j_2}, ..., e_{j_{n+1}};
eps_tilde places e_{j_2n}, ..., e_{j_{n+1}} first, then psi_{j_1} and
e_{j_2}, ..., e_{j_n}.  Both families are orthonormal, which pins trace(M)=1
and the singular values of M to the weights of rho.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from . import matrixcore
from .errors import ShapeError, SizeCapError, ValidationError
from .historyspace import (
    DensityOperator,
    HistoryProjection,
    HomogeneousHistory,
    completed_basis,
    density_matrix,
    embed_homogeneous,
    history_projection,
    pad_history,
    sum_projection,
)
from .seeding import generator

DEFAULT_MATERIALIZE_CAP = 1024


@dataclass(frozen=True)
class BasisTuple:
    """One index tuple of the series expansion with its doubled-space vectors.

    ``index`` holds (j_1, ..., j_2n) with 1 <= j_r <= d.  ``eps`` and
    ``eps_tilde`` are unit vectors of dimension d**(2n).
    """

    order: int
    single_dim: int
    index: tuple[int, ...]
    eps: np.ndarray
    eps_tilde: np.ndarray


@dataclass(frozen=True)
class ILSOperator:
    """Kernel operator M on the doubled history space.

    Satisfies trace(M) = 1 within 1e-9 and operator norm at most 1 + 1e-8;
    both are checked at construction.  ``state_fingerprint`` hashes the
    generating density operator.
    """

    matrix: np.ndarray
    order: int
    single_dim: int
    state_fingerprint: str


def state_fingerprint(rho: DensityOperator) -> str:
    h = hashlib.sha256()
    h.update(b"histq-density-v1")
    h.update(int(rho.dim).to_bytes(4, "little"))
    h.update(np.ascontiguousarray(rho.weights).tobytes())
    h.update(np.ascontiguousarray(rho.vectors).tobytes())
    return h.hexdigest()


def d_direct(rho: DensityOperator, h: HomogeneousHistory, k: HomogeneousHistory) -> complex:
    """Time-ordered product evaluation tr(h_n ... h_1 rho k_1 ... k_n)."""
    if h.single_dim != rho.dim or k.single_dim != rho.dim:
        raise ShapeError("histories and state must share the single-time dimension")
    order = max(h.order, k.order)
    h = pad_history(h, order)
    k = pad_history(k, order)
    left = reduce(np.matmul, [p.matrix for p in reversed(h.projections)])
    right = reduce(np.matmul, [p.matrix for p in k.projections])
    return complex(np.trace(left @ density_matrix(rho) @ right))


def _be_index(indices, d: int) -> int:
    # big-endian composite index, leftmost factor most significant
    out = 0
    for j in indices:
        out = out * d + j
    return out


def _tuple_parts(J: tuple[int, ...], n: int):
    # J is zero-based (j_1, ..., j_2n); see the module docstring for the layout
    u = tuple(J[pos] for pos in range(2 * n - 1, n, -1))
    v = J[n]
    w = tuple(J[1:n])
    return u, v, w


def _tuple_term(J, n, d, hmat, kmat, psi) -> complex:
    u, v, w = _tuple_parts(J, n)
    row_a = _be_index(u + (v,), d)
    col_b = _be_index(w + (v,), d)
    a = 0j
    b = 0j
    for t in range(d):
        a += psi[t] * hmat[row_a, _be_index((t,) + u, d)]
        b += np.conj(psi[t]) * kmat[_be_index((t,) + w, d), col_b]
    return a * b


def _check_pair(rho: DensityOperator, p: HistoryProjection, q: HistoryProjection):
    if p.single_dim != rho.dim or q.single_dim != rho.dim:
        raise ShapeError("history projections and state must share the single-time dimension")
    if p.order != q.order:
        raise ShapeError(f"order mismatch {p.order} vs {q.order}")
    return rho.dim, p.order


def build_basis_tuples(d: int, n: int, rho: DensityOperator):
    """Yield all d**(2n) basis tuples in lexicographic index order.

    The spectral basis of rho is completed to a full orthonormal basis with
    zero weights when rho has fewer than d vectors.
    """
    if rho.dim != d:
        raise ShapeError(f"state dimension {rho.dim} does not match d={d}")
    full = completed_basis(rho)
    eye = np.eye(d, dtype=np.complex128)
    for J in product(range(d), repeat=2 * n):
        u, v, w = _tuple_parts(J, n)
        psi = full.vectors[:, J[0]]
        eps_slots = [psi] + [eye[:, j] for j in u] + [eye[:, j] for j in J[1:n + 1]]
        til_slots = [eye[:, j] for j in u + (v,)] + [psi] + [eye[:, j] for j in w]
        yield BasisTuple(
            order=n,
            single_dim=d,
            index=tuple(j + 1 for j in J),
            eps=reduce(np.kron, eps_slots),
            eps_tilde=reduce(np.kron, til_slots),
        )


def d_series(rho: DensityOperator, h: HistoryProjection, k: HistoryProjection) -> complex:
    """Series evaluation: fixed-order sum of per-tuple contributions.

    Tuples are visited in lexicographic order and accumulated left to right.
    Each contribution splits across the doubled-space tensor cut, so only
    entries of h and k are touched.
    """
    d, n = _check_pair(rho, h, k)
    full = completed_basis(rho)
    weights = full.weights
    vectors = full.vectors
    hmat = h.matrix
    kmat = k.matrix
    total = 0j
    for J in product(range(d), repeat=2 * n):
        wgt = weights[J[0]]
        if wgt == 0.0:
            continue
        total += wgt * _tuple_term(J, n, d, hmat, kmat, vectors[:, J[0]])
    return complex(total)


def build_M(rho: DensityOperator, d: int, n: int,
            cap: int = DEFAULT_MATERIALIZE_CAP) -> ILSOperator:
    """Materialize the kernel operator M = sum_J w_{j_1} |eps_J><eps_tilde_J|.

    Raises
    ------
    SizeCapError
        If the doubled dimension d**(2n) exceeds ``cap``; use
        ``d_via_M_streaming`` instead in that regime.
    """
    dd = d ** (2 * n)
    if dd > cap:
        raise SizeCapError(
            f"doubled dimension {d}**{2 * n}={dd} exceeds materialization cap "
            f"{cap}; evaluate with d_via_M_streaming instead"
        )
    m = np.zeros((dd, dd), dtype=np.complex128)
    weights = completed_basis(rho).weights
    for bt in build_basis_tuples(d, n, rho):
        wgt = weights[bt.index[0] - 1]
        if wgt == 0.0:
            continue
        m += wgt * np.outer(bt.eps, np.conj(bt.eps_tilde))
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > 1e-9:
        raise ValidationError(f"kernel trace {tr:.12g} differs from 1 beyond 1e-9")
    norm = matrixcore.operator_norm(m)
    if norm > 1.0 + 1e-8:
        raise ValidationError(f"kernel norm {norm:.12g} exceeds 1 + 1e-8")
    return ILSOperator(matrix=m, order=n, single_dim=d,
                       state_fingerprint=state_fingerprint(rho))


def d_via_M(M: ILSOperator, p: HistoryProjection, q: HistoryProjection) -> complex:
    """Kernel evaluation tr((p (x) q) M)."""
    if p.single_dim != M.single_dim or q.single_dim != M.single_dim:
        raise ShapeError("history projections must match the kernel's single-time dimension")
    if p.order != M.order or q.order != M.order:
        raise ShapeError("history projections must match the kernel's order")
    pq = np.kron(p.matrix, q.matrix)
    return complex(np.einsum("ij,ji->", pq, M.matrix))


def _tree_sum(values: np.ndarray) -> complex:
    # fixed-shape pairwise reduction; result is independent of any threading
    arr = np.asarray(values, dtype=np.complex128)
    while arr.size > 1:
        if arr.size % 2:
            arr = np.concatenate([arr, [0j]])
        arr = arr[0::2] + arr[1::2]
    return complex(arr[0]) if arr.size else 0j


def d_via_M_streaming(rho: DensityOperator, p: HistoryProjection,
                      q: HistoryProjection) -> complex:
    """Kernel evaluation without materializing M.

    Per-tuple contributions are computed in lexicographic order and combined
    by a deterministic pairwise tree whose shape depends only on (d, n).
    """
    d, n = _check_pair(rho, p, q)
    full = completed_basis(rho)
    weights = full.weights
    vectors = full.vectors
    pmat = p.matrix
    qmat = q.matrix
    terms = np.zeros(d ** (2 * n), dtype=np.complex128)
    for pos, J in enumerate(product(range(d), repeat=2 * n)):
        wgt = weights[J[0]]
        if wgt == 0.0:
            continue
        terms[pos] = wgt * _tuple_term(J, n, d, pmat, qmat, vectors[:, J[0]])
    return _tree_sum(terms)


@dataclass(frozen=True)
class Evaluator:
    """A decoherence functional bound to a fixed state and geometry.

    ``kind`` is "projection" when the evaluator accepts arbitrary history
    projections and "homogeneous" when it needs factorized histories.
    """

    method: str
    rho: DensityOperator
    single_dim: int
    order: int
    kind: str
    _fn: object

    def value(self, p: HistoryProjection, q: HistoryProjection) -> complex:
        if self.kind != "projection":
            raise ShapeError(f"evaluator {self.method} needs homogeneous histories")
        return self._fn(p, q)

    def value_history(self, h: HomogeneousHistory, k: HomogeneousHistory) -> complex:
        if self.kind == "homogeneous":
            return self._fn(h, k)
        cap = max(self.single_dim ** self.order, 1)
        return self._fn(embed_homogeneous(h, cap=cap), embed_homogeneous(k, cap=cap))


def make_evaluator(method: str, rho: DensityOperator, d: int, n: int,
                   cap: int = DEFAULT_MATERIALIZE_CAP) -> Evaluator:
    """Bind one of the four evaluation strategies to (rho, d, n)."""
    if method == "direct":
        return Evaluator(method, rho, d, n, "homogeneous",
                         lambda h, k: d_direct(rho, h, k))
    if method == "series":
        return Evaluator(method, rho, d, n, "projection",
                         lambda p, q: d_series(rho, p, q))
    if method == "ils":
        M = build_M(rho, d, n, cap=cap)
        return Evaluator(method, rho, d, n, "projection",
                         lambda p, q: d_via_M(M, p, q))
    if method == "stream":
        return Evaluator(method, rho, d, n, "projection",
                         lambda p, q: d_via_M_streaming(rho, p, q))
    raise ValidationError(f"unknown evaluation method {method!r}")


@dataclass(frozen=True)
class AxiomReport:
    """Maximum violations of the defining properties over seeded samples."""

    method: str
    samples: int
    seed: int
    tol: float
    max_hermitian: float
    max_positivity: float
    max_normalization: float
    max_additivity: float

    @property
    def max_violation(self) -> float:
        return max(self.max_hermitian, self.max_positivity,
                   self.max_normalization, self.max_additivity)

    @property
    def all_within_tol(self) -> bool:
        return self.max_violation <= self.tol

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "max_hermitian": self.max_hermitian,
            "max_positivity": self.max_positivity,
            "max_normalization": self.max_normalization,
            "max_additivity": self.max_additivity,
            "max_violation": self.max_violation,
            "all_within_tol": self.all_within_tol,
        }


def _random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _cols_projector(basis: np.ndarray, lo: int, hi: int) -> np.ndarray:
    cols = basis[:, lo:hi]
    return cols @ cols.conj().T


def random_projection(dim: int, rng: np.random.Generator,
                      rank: int | None = None) -> np.ndarray:
    """Random projection matrix from a Haar-ish random orthonormal basis."""
    if rank is None:
        rank = int(rng.integers(1, dim)) if dim > 1 else 1
    return _cols_projector(_random_unitary(dim, rng), 0, rank)


def random_homogeneous(d: int, n: int, rng: np.random.Generator) -> HomogeneousHistory:
    """Random homogeneous history with independently drawn factors."""
    from .historyspace import homogeneous_history

    mats = []
    for _ in range(n):
        rank = int(rng.integers(1, d + 1))
        mats.append(random_projection(d, rng, rank=rank))
    return homogeneous_history(mats)


def verify_axioms(evaluator: Evaluator, samples: int = 200, seed: int = 0,
                  tol: float = 1e-9) -> AxiomReport:
    """Measure violations of hermitianness, positivity, normalization, and
    additivity over orthogonal splits, across seeded random draws.

    Violations are data, not errors; the report is bit-identical for
    identical inputs and seed.
    """
    rng = generator(seed, "verify")
    d = evaluator.single_dim
    n = evaluator.order
    dim = d ** n
    if evaluator.kind == "homogeneous":
        return _verify_homogeneous(evaluator, samples, seed, tol, rng, d, n)

    eye = history_projection(np.eye(dim, dtype=np.complex128), n, d)
    max_norm = abs(evaluator.value(eye, eye) - 1.0)
    max_herm = 0.0
    max_pos = 0.0
    max_add = 0.0
    for _ in range(samples):
        p = history_projection(random_projection(dim, rng), n, d)
        q = history_projection(random_projection(dim, rng), n, d)
        v_pq = evaluator.value(p, q)
        v_qp = evaluator.value(q, p)
        max_herm = max(max_herm, abs(v_pq - np.conj(v_qp)))
        diag = evaluator.value(p, p)
        max_pos = max(max_pos, max(-diag.real, 0.0), abs(diag.imag))

        basis = _random_unitary(dim, rng)
        r = int(rng.integers(2, dim + 1))
        s = int(rng.integers(1, r))
        p1 = history_projection(_cols_projector(basis, 0, s), n, d)
        p2 = history_projection(_cols_projector(basis, s, r), n, d)
        whole = sum_projection([p1, p2])
        split_gap = evaluator.value(whole, q) - evaluator.value(p1, q) - evaluator.value(p2, q)
        max_add = max(max_add, abs(split_gap))
        split_gap = evaluator.value(q, whole) - evaluator.value(q, p1) - evaluator.value(q, p2)
        max_add = max(max_add, abs(split_gap))
    return AxiomReport(evaluator.method, samples, seed, tol,
                       float(max_herm), float(max_pos), float(max_norm), float(max_add))


def _verify_homogeneous(evaluator, samples, seed, tol, rng, d, n) -> AxiomReport:
    from .historyspace import homogeneous_history, validate_projection

    eye_h = homogeneous_history([np.eye(d, dtype=np.complex128)] * n)
    max_norm = abs(evaluator.value_history(eye_h, eye_h) - 1.0)
    max_herm = 0.0
    max_pos = 0.0
    max_add = 0.0
    for _ in range(samples):
        h = random_homogeneous(d, n, rng)
        k = random_homogeneous(d, n, rng)
        v_hk = evaluator.value_history(h, k)
        v_kh = evaluator.value_history(k, h)
        max_herm = max(max_herm, abs(v_hk - np.conj(v_kh)))
        diag = evaluator.value_history(h, h)
        max_pos = max(max_pos, max(-diag.real, 0.0), abs(diag.imag))

        # additivity in the first time slot over an orthogonal split
        basis = _random_unitary(d, rng)
        r = int(rng.integers(2, d + 1))
        s = int(rng.integers(1, r))
        rest = [p.matrix for p in random_homogeneous(d, n, rng).projections[1:]] if n > 1 else []
        part1 = _cols_projector(basis, 0, s)
        part2 = _cols_projector(basis, s, r)
        h1 = homogeneous_history([part1] + rest)
        h2 = homogeneous_history([part2] + rest)
        hsum = homogeneous_history([validate_projection(part1 + part2).matrix] + rest)
        gap = (evaluator.value_history(hsum, k) - evaluator.value_history(h1, k)
               - evaluator.value_history(h2, k))
        max_add = max(max_add, abs(gap))
    return AxiomReport(evaluator.method, samples, seed, tol,
                       float(max_herm), float(max_pos), float(max_norm), float(max_add))
