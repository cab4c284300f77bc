"""Consistent-set checking and the search for diagonal values above one.

A family is realized as the Boolean closure of pairwise-orthogonal generator
projections: every orthogonal sum of generators plus the complement of their
total.  Consistency asks that Re d(h, k) vanish for every disjoint pair in
the closure; the diagonal then defines a probability assignment on the
generators.  Bilinearity reduces all closure checks to the Gram matrix of
the atoms, so the evaluator is called only O(k^2) times for k atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .historyspace import (VALIDATION_TOL, HistoryProjection, history_projection,
                           orthogonal, validate_projection)
from .seeding import generator

MAX_ATOMS = 12


@dataclass(frozen=True)
class HistoryFamily:
    members: tuple[HistoryProjection, ...]
    labels: tuple[str, ...]
    atoms: tuple[HistoryProjection, ...]
    atom_labels: tuple[str, ...]
    order: int
    single_dim: int


def build_family(members, labels=None, tol: float = VALIDATION_TOL) -> HistoryFamily:
    """Validate generators and close the family under complement of the total.

    Generators must be pairwise orthogonal and sum to a projection; the
    complement of the total joins the atom list when it has nonzero rank.
    """
    members = tuple(members)
    if not members:
        raise ValidationError("family needs at least one generator")
    if labels is None:
        labels = tuple(f"g{i}" for i in range(len(members)))
    labels = tuple(str(x) for x in labels)
    if len(labels) != len(members):
        raise ValidationError(
            f"{len(labels)} labels for {len(members)} generators")
    if len(set(labels)) != len(labels):
        raise ValidationError("generator labels must be unique")
    if "rest" in labels:
        raise ValidationError("label 'rest' is reserved for the complement")
    order = members[0].order
    single_dim = members[0].single_dim
    for m in members:
        if (m.order, m.single_dim) != (order, single_dim):
            raise ShapeError("generators live on different history spaces")
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if not orthogonal(members[i], members[j], tol):
                raise ValidationError(
                    f"generators {labels[i]!r} and {labels[j]!r} are not orthogonal")
    dim = members[0].dim
    total = np.zeros((dim, dim), dtype=np.complex128)
    for m in members:
        total = total + m.matrix
    validate_projection(total, tol)
    comp = np.eye(dim, dtype=np.complex128) - total
    comp_proj = validate_projection(comp, tol)
    atoms = list(members)
    atom_labels = list(labels)
    if comp_proj.rank > 0:
        atoms.append(history_projection(comp, order, single_dim, tol))
        atom_labels.append("rest")
    if len(atoms) > MAX_ATOMS:
        raise ValidationError(
            f"{len(atoms)} atoms exceed cap {MAX_ATOMS}; closure enumeration "
            "grows as 3^k")
    return HistoryFamily(members=members, labels=labels, atoms=tuple(atoms),
                         atom_labels=tuple(atom_labels), order=order,
                         single_dim=single_dim)


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_re_offdiag: float
    probabilities: dict
    prob_sum: float
    unphysical: tuple[str, ...]
    tol: float

    def as_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "max_re_offdiag": self.max_re_offdiag,
            "probabilities": dict(self.probabilities),
            "prob_sum": self.prob_sum,
            "unphysical": list(self.unphysical),
            "tol": self.tol,
        }


def _mask_label(mask: int, atom_labels) -> str:
    return "+".join(atom_labels[i] for i in range(len(atom_labels))
                    if mask >> i & 1)


def check_consistent(evaluator, family: HistoryFamily,
                     tol: float = 1e-9) -> ConsistencyReport:
    """Re d over all unordered disjoint closure pairs, probabilities on generators.

    evaluator is either a bound evaluator object exposing value(p, q) on
    history projections or a bare callable with that signature.
    """
    ev = evaluator.value if hasattr(evaluator, "value") else evaluator
    k = len(family.atoms)
    gram = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        for j in range(k):
            gram[i, j] = complex(ev(family.atoms[i], family.atoms[j]))
    re_gram = gram.real
    n_masks = 1 << k
    ind = np.zeros((n_masks, k))
    for m in range(1, n_masks):
        low = m & -m
        ind[m] = ind[m ^ low]
        ind[m, low.bit_length() - 1] = 1.0
    row_sum = ind @ re_gram
    diag = np.einsum("mk,mk->m", row_sum, ind)

    max_re = 0.0
    full = n_masks - 1
    for s in range(1, n_masks):
        comp = full & ~s
        t = comp
        while t:
            if s < t:
                cross = float(row_sum[s] @ ind[t])
                max_re = max(max_re, abs(cross))
            t = (t - 1) & comp
    member_count = len(family.members)
    probabilities = {family.labels[i]: float(re_gram[i, i])
                     for i in range(member_count)}
    prob_sum = float(sum(probabilities.values()))
    unphysical = tuple(_mask_label(m, family.atom_labels)
                       for m in range(1, n_masks) if diag[m] > 1.0 + tol)
    consistent = max_re <= tol and all(p >= -tol for p in probabilities.values())
    return ConsistencyReport(consistent=consistent, max_re_offdiag=float(max_re),
                             probabilities=probabilities, prob_sum=prob_sum,
                             unphysical=unphysical, tol=tol)


@dataclass(frozen=True)
class SearchResult:
    projection: HistoryProjection
    value: float
    rank: int
    restart_index: int
    xi: np.ndarray | None

    def __iter__(self):
        return iter((self.projection, self.value))


def _positive_projector(h: np.ndarray) -> np.ndarray:
    """Projector onto the positive eigenspace of a Hermitian matrix; falls back
    to the top eigenvector when no eigenvalue clears the floor."""
    vals, vecs = np.linalg.eigh(h)
    keep = vals > 1e-12
    if not np.any(keep):
        v = vecs[:, -1:]
        return v @ v.conj().T
    v = vecs[:, keep]
    return v @ v.conj().T


def diag_excess_search(M, budget: int = 200, seed: int = 0,
                       sweeps: int = 50) -> SearchResult:
    """Seeded multistart alternating ascent on Re d(p, q) = Re tr((p (x) q) M).

    Each slot update replaces one argument by the projector onto the
    positive eigenspace of the induced Hermitian form, which maximizes the
    slot-linear objective over all projections regardless of rank.  Since
    the kernel is positive semidefinite, Re d(p, q) <= max(d(p,p), d(q,q)),
    so the better diagonal at a fixed point certifies the ascent value.
    Deterministic given seed; ties break to the lowest restart index.
    """
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    dim = M.matrix.shape[0]
    d_hist = int(round(dim ** 0.5))
    if d_hist * d_hist != dim:
        raise ShapeError(f"operator dimension {dim} is not a perfect square")
    m4 = M.matrix.reshape(d_hist, d_hist, d_hist, d_hist)

    def diag_value(p):
        return float(np.einsum("ac,be,ceab->", p, p, m4).real)

    best_val = -np.inf
    best_p = None
    best_restart = -1
    for restart in range(budget):
        rng = generator(seed, "search", restart)
        xi = rng.standard_normal(d_hist) + 1j * rng.standard_normal(d_hist)
        xi /= np.linalg.norm(xi)
        q = np.outer(xi, np.conj(xi))
        p = np.eye(d_hist, dtype=np.complex128)
        for _ in range(sweeps):
            w = np.einsum("be,ceab->ca", q, m4)
            p_new = _positive_projector((w + w.conj().T) / 2.0)
            t = np.einsum("ac,ceab->eb", p_new, m4)
            q_new = _positive_projector((t + t.conj().T) / 2.0)
            if (np.max(np.abs(p_new - p)) <= 1e-13 and
                    np.max(np.abs(q_new - q)) <= 1e-13):
                p, q = p_new, q_new
                break
            p, q = p_new, q_new
        for cand in (p, q):
            val = diag_value(cand)
            if val > best_val:
                best_val = val
                best_p = cand
                best_restart = restart
    proj = validate_projection(best_p)
    hist = history_projection(best_p, M.order, M.single_dim)
    xi_out = None
    if proj.rank == 1:
        vals, vecs = np.linalg.eigh(best_p)
        xi_out = np.ascontiguousarray(vecs[:, -1])
    return SearchResult(projection=hist, value=best_val, rank=proj.rank,
                        restart_index=best_restart, xi=xi_out)
