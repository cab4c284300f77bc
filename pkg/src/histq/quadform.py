"""Quadratic-form representation on the algebraic tensor product.

Elements are finite sums of simple tensors x_1 (x) ... (x) x_n of single-time
operators.  The product map Pi sends a simple tensor to the reversed product
x_n x_{n-1} ... x_1, and the form is D(z, w) = tr(Pi(w)^dagger Pi(z) rho).
On projection tensors D agrees with the time-ordered evaluator, and on unit
vectors of the doubled space it exhibits linear growth, the finite shadow of
unboundedness.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import matrixcore
from .errors import ShapeError, ValidationError
from .historyspace import DensityOperator, density_from_spectral, density_matrix
from .seeding import generator


@dataclass(frozen=True)
class SimpleTensorSum:
    """A finite sum of simple tensors; the empty sum is the zero element."""

    order: int
    single_dim: int
    terms: tuple[tuple[np.ndarray, ...], ...]


def simple_tensor_sum(terms, order: int | None = None,
                      single_dim: int | None = None) -> SimpleTensorSum:
    """Validate factor shapes and assemble a SimpleTensorSum."""
    parsed = []
    for term in terms:
        factors = tuple(matrixcore.as_complex_matrix(f) for f in term)
        for f in factors:
            if f.shape[0] != f.shape[1]:
                raise ShapeError(f"tensor factor must be square, got {f.shape}")
        parsed.append(factors)
    if parsed:
        orders = {len(t) for t in parsed}
        dims = {f.shape[0] for t in parsed for f in t}
        if len(orders) != 1:
            raise ShapeError(f"terms have mixed orders {sorted(orders)}")
        if len(dims) != 1:
            raise ShapeError(f"factors have mixed dimensions {sorted(dims)}")
        t_order, t_dim = orders.pop(), dims.pop()
        if order is not None and order != t_order:
            raise ShapeError(f"declared order {order} != term order {t_order}")
        if single_dim is not None and single_dim != t_dim:
            raise ShapeError(f"declared dim {single_dim} != factor dim {t_dim}")
        order, single_dim = t_order, t_dim
    if order is None or single_dim is None:
        raise ShapeError("empty tensor sum needs explicit order and single_dim")
    return SimpleTensorSum(order=order, single_dim=single_dim, terms=tuple(parsed))


def identity_element(single_dim: int, order: int) -> SimpleTensorSum:
    eye = np.eye(single_dim, dtype=np.complex128)
    return simple_tensor_sum([tuple(eye for _ in range(order))])


def pi_map(z: SimpleTensorSum) -> np.ndarray:
    """Linear product map: each term contributes x_n x_{n-1} ... x_1."""
    acc = np.zeros((z.single_dim, z.single_dim), dtype=np.complex128)
    for term in z.terms:
        acc += reduce(np.matmul, reversed(term))
    return acc


def D_form(rho: DensityOperator, z: SimpleTensorSum, w: SimpleTensorSum) -> complex:
    """D(z, w) = tr(Pi(w)^dagger Pi(z) rho)."""
    if z.single_dim != rho.dim or w.single_dim != rho.dim:
        raise ShapeError("tensor sums must match the state dimension")
    if z.order != w.order:
        raise ShapeError(f"order mismatch {z.order} vs {w.order}")
    pz = pi_map(z)
    pw = pi_map(w)
    return complex(np.trace(pw.conj().T @ pz @ density_matrix(rho)))


def gns_gram(rho: DensityOperator, basis) -> np.ndarray:
    """Gram matrix G[i, j] = D(z_i, z_j); positive semidefinite.

    Null vectors of G span the degenerate directions of the semi-inner
    product within the span of the basis.
    """
    basis = list(basis)
    g = np.zeros((len(basis), len(basis)), dtype=np.complex128)
    for i, zi in enumerate(basis):
        for j, zj in enumerate(basis):
            if j < i:
                g[i, j] = np.conj(g[j, i])
            else:
                g[i, j] = D_form(rho, zi, zj)
    return g


def assemble(z: SimpleTensorSum, cap: int = 4096) -> np.ndarray:
    """Dense Kronecker assembly of the element; for oracles and small probes."""
    dim = z.single_dim ** z.order
    if dim > cap:
        raise ShapeError(f"assembled dimension {dim} exceeds cap {cap}")
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for term in z.terms:
        acc += reduce(np.kron, term)
    return acc


def reassociate(z: SimpleTensorSum, seed: int = 0) -> SimpleTensorSum:
    """Rewrite z as a different SimpleTensorSum for the same element.

    Moves random nonzero scalars between adjacent slots and splits terms by
    scalar decomposition of the first factor.  Used to check representation
    independence of the form.
    """
    rng = generator(seed, "probe")
    new_terms = []
    for term in z.terms:
        factors = [f.copy() for f in term]
        if len(factors) >= 2:
            c = complex(0.5 + rng.random() * 1.5) * np.exp(2j * np.pi * rng.random())
            factors[0] = factors[0] * c
            factors[1] = factors[1] / c
        if rng.random() < 0.5:
            alpha = 0.25 + 0.5 * rng.random()
            first = [factors[0] * alpha] + factors[1:]
            second = [factors[0] * (1.0 - alpha)] + factors[1:]
            new_terms.extend([tuple(first), tuple(second)])
        else:
            new_terms.append(tuple(factors))
    return simple_tensor_sum(new_terms, order=z.order, single_dim=z.single_dim)


@dataclass(frozen=True)
class UniquenessReport:
    probe_count: int
    seed: int
    max_deviation: float

    def as_dict(self) -> dict:
        return {"probe_count": self.probe_count, "seed": self.seed,
                "max_deviation": self.max_deviation}


def random_tensor_sum(d: int, n: int, rng: np.random.Generator,
                      max_terms: int = 3) -> SimpleTensorSum:
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        factors = []
        for _ in range(n):
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            factors.append(g / np.sqrt(d))
        terms.append(tuple(factors))
    return simple_tensor_sum(terms, order=n, single_dim=d)


def uniqueness_check(rho: DensityOperator, q_eval, order: int,
                     probe_count: int = 50, seed: int = 0) -> UniquenessReport:
    """Max |q_eval(u, v) - D(u, v)| over seeded random simple-tensor sums.

    Any bounded form that agrees with the functional on projection tensors
    must agree everywhere, so a nonzero deviation flags a defective
    candidate; the check is an agreement test on probes, not a proof.
    """
    rng = generator(seed, "probe")
    worst = 0.0
    for _ in range(probe_count):
        u = random_tensor_sum(rho.dim, order, rng)
        v = random_tensor_sum(rho.dim, order, rng)
        dev = abs(complex(q_eval(u, v)) - D_form(rho, u, v))
        worst = max(worst, dev)
    return UniquenessReport(probe_count=probe_count, seed=seed, max_deviation=float(worst))


@dataclass(frozen=True)
class ProbeRow:
    size: int
    norm: float
    value: float


def _ladder_element(n_dim: int) -> SimpleTensorSum:
    """z_N = sum_j |e_j><e_1| (x) |e_1><e_j| inside a dim-N single-time space."""
    terms = []
    for j in range(n_dim):
        x = np.zeros((n_dim, n_dim), dtype=np.complex128)
        x[j, 0] = 1.0
        y = np.zeros((n_dim, n_dim), dtype=np.complex128)
        y[0, j] = 1.0
        terms.append((x, y))
    return simple_tensor_sum(terms, order=2, single_dim=n_dim)


def _ladder_norm(n_dim: int) -> float:
    # the assembled doubled-space operator acts by (Z x)[j, 0] = x[0, j];
    # evaluated lazily so large sizes never materialize the matrix
    def matvec(vec):
        x = vec.reshape(n_dim, n_dim)
        out = np.zeros_like(x)
        out[:, 0] = x[0, :]
        return out.reshape(-1)

    def rmatvec(vec):
        x = vec.reshape(n_dim, n_dim)
        out = np.zeros_like(x)
        out[0, :] = x[:, 0]
        return out.reshape(-1)

    return matrixcore.operator_norm_matvec(matvec, rmatvec, n_dim * n_dim)


def unboundedness_probe(sizes) -> list[ProbeRow]:
    """Growth table: for each N report the norm of z_N and delta(z_N) = D(z_N, 1).

    The value grows like N while the element norm stays 1, witnessing that
    no uniform bound C with |D(z, w)| <= C ||z|| ||w|| exists.
    """
    rows = []
    for n_dim in sizes:
        n_dim = int(n_dim)
        if n_dim < 1:
            raise ShapeError(f"probe size must be positive, got {n_dim}")
        xi = np.zeros((n_dim, 1), dtype=np.complex128)
        xi[0, 0] = 1.0
        rho = density_from_spectral([1.0], xi)
        value = D_form(rho, _ladder_element(n_dim), identity_element(n_dim, 2))
        if abs(value.imag) > 1e-9:
            raise ValidationError(f"probe value has imaginary part {value.imag:.3e}")
        rows.append(ProbeRow(size=n_dim, norm=_ladder_norm(n_dim), value=float(value.real)))
    return rows
