"""Dense superoperator algebra on a d-dimensional system.

Operators are complex (d, d) arrays, superoperators complex (d^2, d^2) arrays
acting on column-stacked operators: ``vec(X)[j*d + i] = X[i, j]`` so that
``vec(L X R) = kron(R.T, L) vec(X)``.  The Hilbert-Schmidt inner product
``<A|B> = tr(A^dag B)`` makes this vectorization orthonormal, hence the
superadjoint (adjoint w.r.t. that product) is the plain conjugate transpose.

The bipartite objects (Choi operators, maximally entangled vector) use the
row-major embedding ``|M>[a*d + b] = M[a, b]`` on system (x) copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BASIS_CONVENTION",
    "DefectiveMatrixError",
    "ParityCovarianceError",
    "ReconstructionError",
    "vectorize",
    "devectorize",
    "hs_inner",
    "lmul",
    "rmul",
    "lmul_rmul",
    "superadjoint",
    "identity_superop",
    "commutator_superop",
    "anticommutator_superop",
    "dissipator",
    "dissipator_heisenberg",
    "parity_superop",
    "choi_of",
    "superop_from_choi",
    "bipartite_ket_one",
    "operator_to_bipartite",
    "bipartite_to_operator",
    "bipartite_swap_conj",
    "choi_duality_transform",
    "is_tp",
    "is_hermiticity_preserving",
    "is_cp",
    "is_parity_covariant",
    "SpectralMode",
    "SpectralDecomposition",
    "spectral_decompose",
    "KrausTerm",
    "KrausSet",
    "canonical_kraus",
    "JumpTerm",
    "JumpSet",
    "gksl_decompose",
    "gksl_decompose_heisenberg",
]

BASIS_CONVENTION = "column-stacking"


class DefectiveMatrixError(np.linalg.LinAlgError):
    """Superoperator is not diagonalizable within tolerance."""


class ParityCovarianceError(ValueError):
    """Map does not commute with the parity sandwich within tolerance."""


class ReconstructionError(RuntimeError):
    """A canonical decomposition failed to rebuild its input."""


# ---------------------------------------------------------------------------
# vectorization and elementary superoperators
# ---------------------------------------------------------------------------

def vectorize(op: np.ndarray) -> np.ndarray:
    """Column-stack an operator: entry (i, j) lands at component j*d + i."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError("expected a square operator matrix")
    return op.reshape(-1, order="F").copy()


def devectorize(vec: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec).reshape(-1)
    if dim is None:
        dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError("vector length is not a perfect square")
    return vec.reshape((dim, dim), order="F").copy()


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a^dag b)."""
    return complex(np.vdot(np.asarray(a), np.asarray(b)))


def lmul(op: np.ndarray) -> np.ndarray:
    """Superoperator of left multiplication X -> op X."""
    op = np.asarray(op)
    return np.kron(np.eye(op.shape[0]), op)


def rmul(op: np.ndarray) -> np.ndarray:
    """Superoperator of right multiplication X -> X op."""
    op = np.asarray(op)
    return np.kron(op.T, np.eye(op.shape[0]))


def lmul_rmul(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Superoperator of X -> left X right."""
    left = np.asarray(left)
    right = np.asarray(right)
    if left.shape != right.shape:
        raise ValueError("left and right factors must share a dimension")
    return np.kron(right.T, left)


def superadjoint(s: np.ndarray) -> np.ndarray:
    """Adjoint w.r.t. the Hilbert-Schmidt product (conjugate transpose)."""
    return np.asarray(s).conj().T.copy()


def identity_superop(dim: int) -> np.ndarray:
    return np.eye(dim * dim, dtype=complex)


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """X -> [h, X]."""
    return lmul(h) - rmul(h)


def anticommutator_superop(h: np.ndarray) -> np.ndarray:
    """X -> {h, X}."""
    return lmul(h) + rmul(h)


def dissipator(j: np.ndarray) -> np.ndarray:
    """X -> j X j^dag - {j^dag j, X}/2 (trace-annihilating)."""
    j = np.asarray(j)
    jdj = j.conj().T @ j
    return np.kron(j.conj(), j) - 0.5 * anticommutator_superop(jdj)


def dissipator_heisenberg(j: np.ndarray) -> np.ndarray:
    """X -> j X j^dag - {j j^dag, X}/2 (unit-annihilating variant)."""
    j = np.asarray(j)
    jjd = j @ j.conj().T
    return np.kron(j.conj(), j) - 0.5 * anticommutator_superop(jjd)


def parity_superop(parity_op: np.ndarray) -> np.ndarray:
    """Left multiplication with the fermion parity operator."""
    return lmul(parity_op)


# ---------------------------------------------------------------------------
# Choi transform and bipartite helpers
# ---------------------------------------------------------------------------

def choi_of(s: np.ndarray) -> np.ndarray:
    """Choi operator (s (x) id) |1>><<1| of a superoperator matrix."""
    s = np.asarray(s)
    d2 = s.shape[0]
    d = int(round(np.sqrt(d2)))
    return s.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d2, d2).copy()


def superop_from_choi(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`choi_of`."""
    c = np.asarray(c)
    d2 = c.shape[0]
    d = int(round(np.sqrt(d2)))
    return c.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d2, d2).copy()


def bipartite_ket_one(dim: int) -> np.ndarray:
    """Unnormalized maximally entangled vector sum_k |k>|k> (norm sqrt(d))."""
    return np.eye(dim, dtype=complex).reshape(-1)


def operator_to_bipartite(m: np.ndarray) -> np.ndarray:
    """|M> = (M (x) 1)|1>: components M[a, b] at index a*d + b."""
    return np.asarray(m, dtype=complex).reshape(-1).copy()


def bipartite_to_operator(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim).copy()


def bipartite_swap_conj(c: np.ndarray) -> np.ndarray:
    """S C* S with S the bipartite swap (conjugation is entrywise)."""
    c = np.asarray(c)
    d2 = c.shape[0]
    d = int(round(np.sqrt(d2)))
    return c.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d2, d2).conj().copy()


def choi_duality_transform(c: np.ndarray) -> np.ndarray:
    """Swap-and-conjugate transform mapping choi[S] to choi[S superadjoint]."""
    return bipartite_swap_conj(c)


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

def is_tp(s: np.ndarray, tol: float = 1e-10) -> bool:
    """Trace preservation: <1| s = <1|."""
    s = np.asarray(s)
    d = int(round(np.sqrt(s.shape[0])))
    one = vectorize(np.eye(d))
    return bool(np.abs(s.conj().T @ one - one).max() <= tol)


def is_hermiticity_preserving(s: np.ndarray, tol: float = 1e-10) -> bool:
    c = choi_of(s)
    return bool(np.abs(c - c.conj().T).max() <= tol)


def is_cp(s: np.ndarray, tol: float = 1e-9) -> tuple[bool, float]:
    """Complete positivity witness: (verdict, smallest Choi eigenvalue)."""
    c = choi_of(s)
    herm_defect = np.abs(c - c.conj().T).max()
    w = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    min_eig = float(w[0])
    if herm_defect > max(tol, 1e-10):
        return False, min_eig
    return min_eig >= -tol, min_eig


def is_parity_covariant(s: np.ndarray, parity_op: np.ndarray, tol: float = 1e-10) -> bool:
    sandwich = lmul_rmul(parity_op, parity_op)
    return bool(np.abs(sandwich @ s - s @ sandwich).max() <= tol)


# ---------------------------------------------------------------------------
# spectral decomposition with left/right pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralMode:
    value: complex
    right: np.ndarray
    left: np.ndarray


@dataclass(frozen=True)
class SpectralDecomposition:
    modes: tuple[SpectralMode, ...]
    degeneracy_groups: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.value for m in self.modes])

    def to_superoperator(self) -> np.ndarray:
        """Rebuild sum_i value_i |right_i><left_i|."""
        out = 0.0
        for m in self.modes:
            out = out + m.value * np.outer(vectorize(m.right), vectorize(m.left).conj())
        return out

    def mode_projector(self, i: int) -> np.ndarray:
        m = self.modes[i]
        return np.outer(vectorize(m.right), vectorize(m.left).conj())


def _sort_order(values: np.ndarray) -> np.ndarray:
    # descending real part, then ascending imaginary part
    return np.lexsort((values.imag, -values.real))


def _group_close(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and abs(v - values[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def spectral_decompose(s: np.ndarray, degeneracy_tol: float = 1e-9) -> SpectralDecomposition:
    """Eigenvalues with binormalized left/right eigenvector pairs.

    Eigenvalues are sorted by descending real part then ascending imaginary
    part; right eigenvectors are unit Hilbert-Schmidt norm with their
    largest-magnitude component made real positive, and left partners scaled
    so that <left_i|right_j> = delta_ij.  Raises
    :class:`DefectiveMatrixError` when a Jordan block is detected (left/right
    overlap below 1e-12 before scaling).
    """
    s = np.asarray(s, dtype=complex)
    d2 = s.shape[0]
    d = int(round(np.sqrt(d2)))
    w, vr = np.linalg.eig(s)
    wl, ul = np.linalg.eig(s.conj().T)

    order = _sort_order(w)
    w = w[order]
    vr = vr[:, order]
    # align the left problem (eigenvalues conj(w)) with the rights by optimal
    # assignment; a plain sort is unstable under rounding of near-ties
    from scipy.optimize import linear_sum_assignment
    wl_target = wl.conj()
    cost = np.abs(w[:, None] - wl_target[None, :])
    rows, cols = linear_sum_assignment(cost)
    ul = ul[:, cols]
    wl_target = wl_target[cols]
    scale = max(1.0, float(np.abs(w).max()))
    if np.abs(w - wl_target).max() > 1e-6 * scale:
        raise DefectiveMatrixError("left/right eigenvalue sets do not match")

    tol = degeneracy_tol * scale
    groups = _group_close(w, tol)

    lefts = np.empty_like(vr)
    for grp in groups:
        idx = np.array(grp)
        overlap = ul[:, idx].conj().T @ vr[:, idx]
        smin = np.linalg.svd(overlap, compute_uv=False)[-1]
        if smin < 1e-12:
            raise DefectiveMatrixError(
                f"defective eigenvalue cluster near {w[idx[0]]:.6g} "
                f"(binormalization overlap {smin:.2e})")
        lefts[:, idx] = ul[:, idx] @ np.linalg.inv(overlap).conj().T

    modes = []
    for i in range(d2):
        r = vr[:, i]
        l = lefts[:, i]
        nrm = np.linalg.norm(r)
        r = r / nrm
        l = l * nrm
        peak = r[np.argmax(np.abs(r))]
        phase = peak / abs(peak)
        r = r / phase
        l = l * np.conj(phase)
        modes.append(SpectralMode(complex(w[i]), devectorize(r, d), devectorize(l, d)))
    return SpectralDecomposition(tuple(modes), tuple(tuple(g) for g in groups))


# ---------------------------------------------------------------------------
# canonical operator-sum decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KrausTerm:
    coefficient: float
    operator: np.ndarray
    parity: int


@dataclass(frozen=True)
class KrausSet:
    terms: tuple[KrausTerm, ...]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms])

    @property
    def parities(self) -> np.ndarray:
        return np.array([t.parity for t in self.terms])

    def to_superoperator(self) -> np.ndarray:
        out = 0.0
        for t in self.terms:
            m = t.operator
            out = out + t.coefficient * np.kron(m.conj(), m)
        return out


@dataclass(frozen=True)
class JumpTerm:
    rate: float
    operator: np.ndarray
    parity: int


@dataclass(frozen=True)
class JumpSet:
    effective_hamiltonian: np.ndarray
    terms: tuple[JumpTerm, ...]

    @property
    def rates(self) -> np.ndarray:
        return np.array([t.rate for t in self.terms])

    @property
    def parities(self) -> np.ndarray:
        return np.array([t.parity for t in self.terms])

    def generator(self) -> np.ndarray:
        """Rebuild G from -iG = -i[H, .] + sum_a j_a D(J_a)."""
        x = -1j * commutator_superop(self.effective_hamiltonian)
        for t in self.terms:
            x = x + t.rate * dissipator(t.operator)
        return 1j * x

    def heisenberg_generator(self) -> np.ndarray:
        """Rebuild G^H from i G^H = i[H, .] + sum_a j_a D^H(J_a)."""
        x = 1j * commutator_superop(self.effective_hamiltonian)
        for t in self.terms:
            x = x + t.rate * dissipator_heisenberg(t.operator)
        return -1j * x


def _parity_sector_bases(parity_op: np.ndarray):
    """Orthonormal bases of the even/odd bipartite parity sectors."""
    pb = np.kron(np.asarray(parity_op), np.asarray(parity_op))
    w, u = np.linalg.eigh(0.5 * (pb + pb.conj().T))
    even = u[:, w > 0.0]
    odd = u[:, w < 0.0]
    return even, odd


def _sector_eigh(choi: np.ndarray, basis: np.ndarray):
    """Eigen-pairs of choi restricted to the span of basis columns."""
    if basis.shape[1] == 0:
        return np.empty(0), np.empty((choi.shape[0], 0), dtype=complex)
    block = basis.conj().T @ choi @ basis
    w, v = np.linalg.eigh(0.5 * (block + block.conj().T))
    return w, basis @ v


def _phase_fix(m: np.ndarray) -> np.ndarray:
    flat = m.reshape(-1)
    peak = flat[np.argmax(np.abs(flat))]
    if peak == 0:
        return m
    return m * (abs(peak) / peak)


def canonical_kraus(s: np.ndarray, parity_op: np.ndarray,
                    coeff_tol: float = 1e-12, herm_tol: float = 1e-10,
                    parity_tol: float = 1e-10) -> KrausSet:
    """Canonical measurement-operator sum of a parity-covariant map.

    Diagonalizes the Choi operator separately in the even and odd bipartite
    parity sectors, so every operator carries a definite parity even under
    coefficient degeneracies.  Coefficients are the real Choi eigenvalues,
    operators are unit-norm with the largest-magnitude entry made real
    positive.  Terms with |coefficient| below ``coeff_tol`` (relative) are
    dropped.
    """
    s = np.asarray(s, dtype=complex)
    c = choi_of(s)
    defect = np.abs(c - c.conj().T).max()
    scale = max(1.0, float(np.abs(c).max()))
    if defect > herm_tol * scale:
        raise ReconstructionError(
            f"Choi operator is not Hermitian (defect {defect:.2e})")
    if not is_parity_covariant(s, parity_op, parity_tol * scale):
        raise ParityCovarianceError("map does not commute with the parity sandwich")

    d = np.asarray(parity_op).shape[0]
    even, odd = _parity_sector_bases(parity_op)
    terms = []
    for basis, par in ((even, 1), (odd, -1)):
        w, vecs = _sector_eigh(c, basis)
        for i, m in enumerate(w):
            if abs(m) <= coeff_tol * scale:
                continue
            op = _phase_fix(bipartite_to_operator(vecs[:, i], d))
            terms.append(KrausTerm(float(m), op, par))
    terms.sort(key=lambda t: (-t.coefficient, -t.parity))
    return KrausSet(tuple(terms))


def _recover_b(choi: np.ndarray, dim: int) -> np.ndarray:
    """Operator B from the |1>-row of a Choi operator |1><B| + |B><1| + jumps.

    Returns B with Im(tr B) = 0; that component is pure gauge (a constant
    shift of the effective Hamiltonian).
    """
    one = bipartite_ket_one(dim)
    r = bipartite_to_operator(choi @ one, dim)
    tr_r = np.trace(r)
    b0 = (r - (tr_r / dim) * np.eye(dim)) / dim
    re_tr_b = tr_r.real / (2.0 * dim)
    return b0 + (re_tr_b / dim) * np.eye(dim)


def _vacuum_gauge(h: np.ndarray) -> np.ndarray:
    """Shift by a multiple of the identity so the (0, 0) element vanishes."""
    h = 0.5 * (h + h.conj().T)
    return h - h[0, 0].real * np.eye(h.shape[0])


def _gksl_core(gen: np.ndarray, parity_op: np.ndarray, heisenberg: bool,
               rate_tol: float, recon_tol: float):
    gen = np.asarray(gen, dtype=complex)
    d = np.asarray(parity_op).shape[0]
    one = vectorize(np.eye(d))
    scale = max(1.0, float(np.abs(gen).max()))
    if heisenberg:
        defect = np.abs(gen @ one).max()
        label = "unit preservation"
        c = choi_of(1j * gen)
    else:
        defect = np.abs(gen.conj().T @ one).max()
        label = "trace preservation"
        c = choi_of(-1j * gen)
    if defect > 1e-9 * scale:
        raise ValueError(f"{label} violated (defect {defect:.2e})")
    cd = np.abs(c - c.conj().T).max()
    if cd > 1e-9 * scale:
        raise ReconstructionError(f"Choi operator is not Hermitian (defect {cd:.2e})")
    if not is_parity_covariant(gen, parity_op, 1e-9 * scale):
        raise ParityCovarianceError("generator does not commute with the parity sandwich")

    even, odd = _parity_sector_bases(parity_op)
    # remove the maximally entangled direction from the even sector
    one_b = bipartite_ket_one(d) / np.sqrt(d)
    proj = even - np.outer(one_b, one_b.conj() @ even)
    q, r = np.linalg.qr(proj)
    keep = np.abs(np.diag(r)) > 1e-9
    even_c = q[:, keep]

    terms = []
    for basis, par in ((even_c, 1), (odd, -1)):
        w, vecs = _sector_eigh(c, basis)
        for i, j in enumerate(w):
            if abs(j) <= rate_tol * scale:
                continue
            op = _phase_fix(bipartite_to_operator(vecs[:, i], d))
            terms.append(JumpTerm(float(j), op, par))
    terms.sort(key=lambda t: (-t.rate, -t.parity))

    b = _recover_b(c, d)
    h = 0.5j * (b - b.conj().T)  # -Im B; the Heisenberg variant wants +Im B
    if heisenberg:
        h = -h
    h = _vacuum_gauge(h)

    # consistency: Hermitian part of B against the jump operators
    re_b = 0.5 * (b + b.conj().T)
    acc = np.zeros((d, d), dtype=complex)
    for t in terms:
        jop = t.operator
        acc += t.rate * (jop @ jop.conj().T if heisenberg else jop.conj().T @ jop)
    defect = np.abs(re_b + 0.5 * acc).max()
    if defect > recon_tol * scale:
        raise ReconstructionError(
            f"Hermitian part of B inconsistent with jump rates (defect {defect:.2e})")

    jset = JumpSet(h, tuple(terms))
    rebuilt = jset.heisenberg_generator() if heisenberg else jset.generator()
    resid = np.abs(rebuilt - gen).max()
    if resid > recon_tol * scale:
        raise ReconstructionError(f"jump expansion residual {resid:.2e}")
    return jset


def gksl_decompose(gen: np.ndarray, parity_op: np.ndarray,
                   rate_tol: float = 1e-10, recon_tol: float = 1e-9) -> JumpSet:
    """Canonical jump expansion of a trace-preserving time-local generator.

    The input is G in ``d rho / dt = -i G rho``.  Jump operators are
    traceless, mutually orthonormal, of definite parity; rates are the Choi
    eigenvalues on the complement of the maximally entangled direction.  The
    effective Hamiltonian is recovered from the |1>-row of choi[-iG], gauge
    fixed so its (0, 0) element vanishes (vacuum energy zero), and checked
    against the jump rates through the Hermitian part of the row.
    """
    return _gksl_core(gen, parity_op, False, rate_tol, recon_tol)


def gksl_decompose_heisenberg(gen_h: np.ndarray, parity_op: np.ndarray,
                              rate_tol: float = 1e-10, recon_tol: float = 1e-9) -> JumpSet:
    """Jump expansion of a unit-preserving Heisenberg generator.

    The input is G^H in ``d A / dt = +i G^H A``; dissipators carry the
    unit-preserving anticommutator placement ``{J J^dag, .}``.
    """
    return _gksl_core(gen_h, parity_op, True, rate_tol, recon_tol)


# ---------------------------------------------------------------------------
# JSON serialization (row-major [re, im] pairs)
# ---------------------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> dict:
    """Serialize an operator or superoperator matrix with its conventions."""
    m = np.asarray(m, dtype=complex)
    side = m.shape[0]
    dim = int(round(np.sqrt(side)))
    entries = [[[float(x.real), float(x.imag)] for x in row] for row in m]
    return {
        "dim": dim if dim * dim == side else side,
        "basis_convention": BASIS_CONVENTION,
        "entries": entries,
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    if doc.get("basis_convention", BASIS_CONVENTION) != BASIS_CONVENTION:
        raise ValueError("unsupported basis convention")
    return np.array([[complex(x[0], x[1]) for x in row] for row in doc["entries"]])
