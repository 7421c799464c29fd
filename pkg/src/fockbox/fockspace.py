"""Truncated multi-ladder bosonic Fock spaces.

A layout is an ordered list of independent bosonic ladders, each truncated at
a per-ladder occupation cutoff.  The joint basis is the tensor product of the
single-ladder bases in row-major order, with the occupation of the *last*
ladder varying fastest, so basis index i maps to occupations
``np.unravel_index(i, dims)`` with ``dims = (cutoff + 1, ...)``.

Ladder operators use a hard cutoff: the raising operator annihilates the top
level.  Consequently ``[a, a+] = 1`` holds exactly only on the subspace that
excludes the top level; ``P ([a, a+] - 1) P = 0`` for the projector P onto
occupations <= cutoff - 1, and tests pin that equality exactly.

The module also owns the coherent-leakage policy: a displacement of amplitude
f on a ladder with cutoff N is admissible when the Poisson tail
``exp(-f^2) f^(2N) / N!`` is below 1e-12.  Verification routines enforce the
policy; plain construction does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ContractViolationError, LayoutError

FAMILIES = ("a", "b", "d")

DIMENSION_CAP = 2_000_000
DENSE_EXP_CAP = 4096
LEAKAGE_TAIL_BOUND = 1e-12
ANTIHERMITIAN_RTOL = 1e-10


@dataclass(frozen=True, order=True)
class LadderId:
    """One bosonic ladder: family 'a' (neutral), 'b' or 'd' (charged pair)."""

    family: str
    mode_index: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise LayoutError(f"unknown ladder family {self.family!r}")

    def __str__(self):
        return f"{self.family}{self.mode_index}"

    @classmethod
    def parse(cls, text: str) -> "LadderId":
        text = text.strip()
        if not text or text[0] not in FAMILIES:
            raise LayoutError(f"cannot parse ladder id {text!r}")
        try:
            mode = int(text[1:])
        except ValueError as exc:
            raise LayoutError(f"cannot parse ladder id {text!r}") from exc
        return cls(text[0], mode)


@dataclass(frozen=True)
class FockLayout:
    """Ordered ladders with per-ladder occupation cutoffs."""

    ladders: tuple[LadderId, ...]
    cutoffs: tuple[int, ...]
    dimension_cap: int = DIMENSION_CAP

    def __post_init__(self):
        if len(self.ladders) != len(self.cutoffs):
            raise LayoutError("one cutoff per ladder required")
        if not self.ladders:
            raise LayoutError("layout needs at least one ladder")
        if len(set(self.ladders)) != len(self.ladders):
            raise LayoutError("duplicate ladder in layout")
        if any(c < 1 for c in self.cutoffs):
            raise LayoutError("cutoffs must be >= 1")
        dim = 1
        for c in self.cutoffs:
            dim *= c + 1
            if dim > self.dimension_cap:
                raise LayoutError(
                    f"layout dimension exceeds cap {self.dimension_cap}"
                )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def position(self, ladder: LadderId) -> int:
        try:
            return self.ladders.index(ladder)
        except ValueError as exc:
            raise LayoutError(f"ladder {ladder} not in layout") from exc

    def cutoff(self, ladder: LadderId) -> int:
        return self.cutoffs[self.position(ladder)]

    def basis_index(self, occupations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def occupations(self) -> np.ndarray:
        """(dimension, n_ladders) array of occupations per basis state."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids.T

    def projection_mask(self, levels) -> np.ndarray:
        """Boolean basis mask for occupations <= levels (int or per-ladder)."""
        if isinstance(levels, int):
            levels = {lad: levels for lad in self.ladders}
        occ = self.occupations()
        mask = np.ones(self.dimension, dtype=bool)
        for lad, lvl in levels.items():
            mask &= occ[:, self.position(lad)] <= lvl
        return mask


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Sparse complex operator bound to a layout."""

    layout: FockLayout
    matrix: sp.csr_matrix

    def _check(self, other: "OperatorMatrix"):
        if self.layout != other.layout:
            raise LayoutError("operators live on different layouts")

    def __add__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, (self.matrix - other.matrix).tocsr())

    def __mul__(self, scalar):
        return OperatorMatrix(self.layout, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, (self.matrix @ other.matrix).tocsr())

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.matrix.conj().T.tocsr())

    def max_abs(self) -> float:
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix.data)))

    def hermiticity_residual(self) -> float:
        return (self - self.adjoint()).max_abs()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense complex state bound to a layout."""

    layout: FockLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (self.layout.dimension,):
            raise LayoutError("state length does not match layout dimension")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.layout, self.amplitudes / n)


# ---------------------------------------------------------------------------
# single-ladder blocks and tensor embedding


def lowering_block(cutoff: int) -> np.ndarray:
    """Dense single-ladder annihilator: <n-1|a|n> = sqrt(n), top row kept."""
    return np.diag(np.sqrt(np.arange(1.0, cutoff + 1)), 1)


def raising_block(cutoff: int) -> np.ndarray:
    """Exact transpose of the lowering block (real entries)."""
    return lowering_block(cutoff).T.copy()


def embed(layout: FockLayout, blocks: Mapping[LadderId, np.ndarray]) -> sp.csr_matrix:
    """Kronecker-embed per-ladder blocks (identity on absent ladders)."""
    for lad in blocks:
        layout.position(lad)
    result = None
    for lad, dim in zip(layout.ladders, layout.dims):
        if lad in blocks:
            block = blocks[lad]
            if block.shape != (dim, dim):
                raise LayoutError(f"block for {lad} has wrong shape {block.shape}")
            factor = sp.csr_matrix(block.astype(np.complex128, copy=False))
        else:
            factor = sp.identity(dim, dtype=np.complex128, format="csr")
        result = factor if result is None else sp.kron(result, factor, format="csr")
    return result.tocsr()


@lru_cache(maxsize=None)
def _embedded_ladder(layout: FockLayout, ladder: LadderId, dagger: bool) -> sp.csr_matrix:
    cutoff = layout.cutoff(ladder)
    block = raising_block(cutoff) if dagger else lowering_block(cutoff)
    return embed(layout, {ladder: block})


def annihilator(layout: FockLayout, ladder: LadderId) -> OperatorMatrix:
    return OperatorMatrix(layout, _embedded_ladder(layout, ladder, False))


def creator(layout: FockLayout, ladder: LadderId) -> OperatorMatrix:
    return OperatorMatrix(layout, _embedded_ladder(layout, ladder, True))


def number_operator(layout: FockLayout, ladder: LadderId) -> OperatorMatrix:
    occ = layout.occupations()[:, layout.position(ladder)].astype(np.complex128)
    return OperatorMatrix(layout, sp.diags(occ, format="csr"))


def identity(layout: FockLayout) -> OperatorMatrix:
    return OperatorMatrix(
        layout, sp.identity(layout.dimension, dtype=np.complex128, format="csr")
    )


def projector(layout: FockLayout, levels) -> OperatorMatrix:
    mask = layout.projection_mask(levels).astype(np.complex128)
    return OperatorMatrix(layout, sp.diags(mask, format="csr"))


# ---------------------------------------------------------------------------
# states


def vacuum(layout: FockLayout) -> StateVector:
    amps = np.zeros(layout.dimension, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(layout, amps)


def basis_state(layout: FockLayout, occupations: Mapping[LadderId, int] | Sequence[int]) -> StateVector:
    if isinstance(occupations, Mapping):
        occs = [0] * len(layout.ladders)
        for lad, n in occupations.items():
            occs[layout.position(lad)] = n
    else:
        occs = list(occupations)
    for n, cutoff in zip(occs, layout.cutoffs):
        if not 0 <= n <= cutoff:
            raise LayoutError(f"occupation {n} outside 0..{cutoff}")
    amps = np.zeros(layout.dimension, dtype=np.complex128)
    amps[layout.basis_index(occs)] = 1.0
    return StateVector(layout, amps)


def apply(op: OperatorMatrix, state: StateVector) -> StateVector:
    if op.layout != state.layout:
        raise LayoutError("operator and state live on different layouts")
    return StateVector(state.layout, op.matrix @ state.amplitudes)


def expectation(op: OperatorMatrix, state: StateVector) -> complex:
    if op.layout != state.layout:
        raise LayoutError("operator and state live on different layouts")
    return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))


# ---------------------------------------------------------------------------
# matrix exponential


def exp_antihermitian(generator: OperatorMatrix) -> OperatorMatrix:
    """Unitary exp(G) of an anti-Hermitian G via scaling-and-squaring.

    Dense under the hood, so refuses layouts above DENSE_EXP_CAP; displacement
    unitaries on large layouts factorize per ladder instead (see displace).
    """
    dim = generator.layout.dimension
    if dim > DENSE_EXP_CAP:
        raise LayoutError(
            f"dimension {dim} too large for dense exponentiation"
            f" (cap {DENSE_EXP_CAP}); use per-ladder factors"
        )
    norm = generator.max_abs()
    defect = (generator + generator.adjoint()).max_abs()
    if norm > 0.0 and defect > ANTIHERMITIAN_RTOL * norm:
        raise ContractViolationError(
            f"generator is not anti-Hermitian: |G + G+| = {defect:.3e}"
            f" exceeds {ANTIHERMITIAN_RTOL} * |G| = {ANTIHERMITIAN_RTOL * norm:.3e}"
        )
    u = scipy.linalg.expm(generator.to_dense())
    return OperatorMatrix(generator.layout, sp.csr_matrix(u))


def displacement_block(cutoff: int, amplitude: float) -> np.ndarray:
    """Dense single-ladder exp(f (a+ - a)); real orthogonal."""
    gen = amplitude * (raising_block(cutoff) - lowering_block(cutoff))
    return scipy.linalg.expm(gen)


# ---------------------------------------------------------------------------
# coherent-leakage policy


def poisson_tail(amplitude: float, cutoff: int) -> float:
    """exp(-f^2) f^(2N) / N!, the weight the cutoff truncates away."""
    f2 = amplitude * amplitude
    if f2 == 0.0:
        return 0.0
    return math.exp(-f2 + cutoff * math.log(f2) - math.lgamma(cutoff + 1))


def leakage_admissible(amplitude: float, cutoff: int) -> bool:
    return poisson_tail(amplitude, cutoff) < LEAKAGE_TAIL_BOUND


def min_admissible_cutoff(amplitude: float) -> int:
    cutoff = 1
    while not leakage_admissible(amplitude, cutoff):
        cutoff += 1
        if cutoff > 10_000:
            raise ValueError(f"no practical cutoff admits amplitude {amplitude}")
    return cutoff


def max_admissible_amplitude(cutoff: int) -> float:
    """Largest |f| the cutoff admits; tail grows with f on the relevant range."""
    lo, hi = 0.0, math.sqrt(cutoff)
    if leakage_admissible(hi, cutoff):
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if leakage_admissible(mid, cutoff):
            lo = mid
        else:
            hi = mid
    return lo
