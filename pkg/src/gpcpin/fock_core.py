"""N-fermion states over a finite orbital space, ladder operators, 1-RDMs and NONs.

Slater determinants are stored as integer bitmasks. Orbital ``i`` (1-based in
every public interface) lives in bit ``i - 1``. A determinant is always taken
with its orbitals in ascending order, so the sign of a ladder operator is
``(-1) ** (number of occupied orbitals below the target)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ArgumentError, NumericError

MAX_ORBITALS = 64
NORM_TOL = 1e-12
FILE_NORM_TOL = 1e-8
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True, order=True)
class Setting:
    """The pair (N, d): N fermions in d orbitals."""

    particles: int
    orbitals: int

    def __post_init__(self):
        n, d = self.particles, self.orbitals
        if not (isinstance(n, (int, np.integer)) and isinstance(d, (int, np.integer))):
            raise ArgumentError(f"setting entries must be integers, got ({n!r}, {d!r})")
        if n < 0 or d < 0 or n > d or d > MAX_ORBITALS:
            raise ArgumentError(f"invalid setting (N={n}, d={d})")

    @property
    def dimension(self) -> int:
        return math.comb(self.orbitals, self.particles)

    def dual(self) -> "Setting":
        return Setting(self.orbitals - self.particles, self.orbitals)

    def __str__(self):
        return f"({self.particles},{self.orbitals})"


def det_from_orbitals(orbitals: Iterable[int], d: int = MAX_ORBITALS) -> int:
    """Bitmask for the determinant |i1,...,iN> (1-based orbitals, any order)."""
    mask = 0
    for i in orbitals:
        i = int(i)
        if not 1 <= i <= d:
            raise ArgumentError(f"orbital {i} outside 1..{d}")
        bit = 1 << (i - 1)
        if mask & bit:
            raise ArgumentError(f"orbital {i} occupied twice")
        mask |= bit
    return mask


def orbitals_of(det: int) -> tuple[int, ...]:
    """Ascending 1-based orbital indices of a bitmask."""
    out = []
    i = 1
    while det:
        if det & 1:
            out.append(i)
        det >>= 1
        i += 1
    return tuple(out)


def determinants(setting: Setting) -> list[int]:
    """All C(d, N) determinants in lexicographic order of their orbital tuples."""
    return [
        det_from_orbitals(c, setting.orbitals)
        for c in itertools.combinations(range(1, setting.orbitals + 1), setting.particles)
    ]


def apply_ladder(det: int, orbital: int, mode: str, d: int = MAX_ORBITALS):
    """Apply a creation or annihilation operator to a determinant.

    Returns ``(sign, new_det)`` or ``None`` when the result vanishes.
    """
    if not 1 <= orbital <= d:
        raise ArgumentError(f"orbital {orbital} outside 1..{d}")
    bit = 1 << (orbital - 1)
    occupied = bool(det & bit)
    if mode == "annihilate":
        if not occupied:
            return None
    elif mode == "create":
        if occupied:
            return None
    else:
        raise ArgumentError(f"unknown ladder mode {mode!r}")
    below = (det & (bit - 1)).bit_count()
    return (-1 if below & 1 else 1), det ^ bit


@dataclass(frozen=True)
class FermionState:
    """Normalized sparse expansion of an N-fermion state in Slater determinants."""

    setting: Setting
    amplitudes: Mapping[int, complex] = field(hash=False)

    def __post_init__(self):
        n, d = self.setting.particles, self.setting.orbitals
        clean = {}
        for det, c in self.amplitudes.items():
            det = int(det)
            if det >> d or det.bit_count() != n:
                raise ArgumentError(
                    f"determinant {orbitals_of(det)} does not belong to setting {self.setting}")
            if c != 0:
                clean[det] = complex(c)
        norm = sum(abs(c) ** 2 for c in clean.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise ArgumentError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", clean)

    @classmethod
    def from_orbitals(cls, setting: Setting, terms, normalize: bool = False) -> "FermionState":
        """Build from ``{(i1,...,iN): amplitude}`` or an iterable of such pairs."""
        items = terms.items() if isinstance(terms, Mapping) else terms
        amps: dict[int, complex] = {}
        for orbs, c in items:
            det = det_from_orbitals(orbs, setting.orbitals)
            if det in amps:
                raise ArgumentError(f"duplicate determinant {tuple(sorted(orbs))}")
            amps[det] = complex(c)
        if normalize:
            amps = _normalized(amps)
        return cls(setting, amps)

    @classmethod
    def from_vector(cls, setting: Setting, vector, normalize: bool = False) -> "FermionState":
        """Build from a dense vector in the order of :func:`determinants`."""
        basis = determinants(setting)
        vector = np.asarray(vector, dtype=complex)
        if vector.shape != (len(basis),):
            raise ArgumentError(f"expected vector of length {len(basis)}, got {vector.shape}")
        amps = {det: c for det, c in zip(basis, vector) if c != 0}
        if normalize:
            amps = _normalized(amps)
        return cls(setting, amps)

    def to_vector(self) -> np.ndarray:
        basis = determinants(self.setting)
        index = {det: k for k, det in enumerate(basis)}
        out = np.zeros(len(basis), dtype=complex)
        for det, c in self.amplitudes.items():
            out[index[det]] = c
        return out

    def amplitude(self, orbitals: Iterable[int]) -> complex:
        return self.amplitudes.get(det_from_orbitals(orbitals, self.setting.orbitals), 0j)


def _normalized(amps: dict[int, complex]) -> dict[int, complex]:
    norm = math.sqrt(sum(abs(c) ** 2 for c in amps.values()))
    if norm == 0:
        raise ArgumentError("cannot normalize the zero vector")
    return {k: v / norm for k, v in amps.items()}


def random_state(setting: Setting, rng: np.random.Generator, real: bool = False) -> FermionState:
    """Haar-random pure state in the full determinant basis."""
    dim = setting.dimension
    v = rng.normal(size=dim)
    if not real:
        v = v + 1j * rng.normal(size=dim)
    return FermionState.from_vector(setting, v, normalize=True)


@dataclass(frozen=True)
class Spectrum:
    """Descending natural occupation numbers with their validated invariants."""

    values: tuple[float, ...]
    particles: int

    def __init__(self, values, particles: int | None = None, tol: float = 1e-10):
        vals = np.asarray(values, dtype=float).ravel()
        if vals.size == 0:
            raise ArgumentError("empty spectrum")
        total = float(vals.sum())
        n = int(round(total)) if particles is None else int(particles)
        if abs(total - n) > tol:
            raise ArgumentError(f"spectrum sums to {total!r}, expected {n}")
        if np.any(np.diff(vals) > tol):
            raise ArgumentError("spectrum is not in descending order")
        if vals.min() < -tol or vals.max() > 1 + tol:
            raise ArgumentError("spectrum violates the Pauli box 0 <= lambda <= 1")
        object.__setattr__(self, "values", tuple(float(x) for x in vals))
        object.__setattr__(self, "particles", n)

    @property
    def setting(self) -> Setting:
        return Setting(self.particles, len(self.values))

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def one_rdm(state: FermionState) -> np.ndarray:
    """The matrix of <a_i^dagger a_j>, trace N, as a d x d complex array."""
    d = state.setting.orbitals
    amps = state.amplitudes
    rho = np.zeros((d, d), dtype=complex)
    for det, cj in amps.items():
        for j in orbitals_of(det):
            s1, hole = apply_ladder(det, j, "annihilate", d)
            for i in range(1, d + 1):
                res = apply_ladder(hole, i, "create", d)
                if res is None:
                    continue
                s2, target = res
                ck = amps.get(target)
                if ck is not None:
                    rho[i - 1, j - 1] += ck.conjugate() * cj * s1 * s2
    return rho


def check_one_rdm(rho, particles: int | None = None) -> np.ndarray:
    """Validate hermiticity, trace and positivity; return the array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ArgumentError("1-RDM must be a square matrix")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-12:
        raise ArgumentError("1-RDM is not hermitian")
    tr = np.trace(rho).real
    if particles is not None and abs(tr - particles) > 1e-10:
        raise ArgumentError(f"1-RDM trace {tr!r} differs from N={particles}")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ArgumentError("1-RDM is not positive semidefinite")
    return rho


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9)))
    return v * (abs(v[k]) / v[k])


def _pivoted_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(block) built from standard vectors."""
    d, m = block.shape
    proj = block @ block.conj().T
    chosen: list[np.ndarray] = []
    for _ in range(m):
        cands = proj.copy()
        for u in chosen:
            cands -= np.outer(u, u.conj() @ cands)
        norms = np.linalg.norm(cands, axis=0)
        k = int(np.argmax(norms > norms.max() * (1 - 1e-9)))
        chosen.append(_fix_phase(cands[:, k] / norms[k]))
    return np.column_stack(chosen)


def natural_occupations(rdm) -> tuple[Spectrum, np.ndarray]:
    """Descending NONs and the matching natural orbitals (as columns)."""
    rho = check_one_rdm(rdm)
    w, v = np.linalg.eigh(rho)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    resid = float(np.linalg.norm(rho @ v - v * w))
    if not np.isfinite(resid) or resid > 1e-8 * max(1.0, float(np.abs(w).max())):
        raise NumericError(f"eigensolver residual too large: {resid:.3e}", residual=resid)
    start = 0
    out = np.empty_like(v)
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k - 1] - w[k] >= DEGENERACY_GAP:
            block = v[:, start:k]
            if k - start == 1:
                out[:, start] = _fix_phase(block[:, 0])
            else:
                out[:, start:k] = _pivoted_basis(block)
            start = k
    lam = np.clip(w, 0.0, 1.0)
    total = float(lam.sum())
    return Spectrum(lam, particles=int(round(total))), out


def spectrum_of(state: FermionState) -> Spectrum:
    return natural_occupations(one_rdm(state))[0]


def ky_fan_sum(spec, k: int) -> float:
    """Sum of the k largest occupation numbers."""
    vals = spec.values if isinstance(spec, Spectrum) else tuple(spec)
    if not 0 <= k <= len(vals):
        raise ArgumentError(f"k={k} outside 0..{len(vals)}")
    return float(sum(sorted(vals, reverse=True)[:k]))


def rotate_state(state: FermionState, orbitals: np.ndarray) -> FermionState:
    """Re-expand ``state`` in determinants of new orbitals.

    Column k of ``orbitals`` holds the k-th new orbital in the old basis; the
    matrix must be unitary. Since :func:`one_rdm` returns <a_i^+ a_j>, which is
    the transpose of the orbital-space density matrix, natural orbitals are the
    complex conjugates of the eigenvectors from :func:`natural_occupations`.
    """
    u = np.asarray(orbitals, dtype=complex)
    setting = state.setting
    d = setting.orbitals
    if u.shape != (d, d) or np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise ArgumentError("orbital matrix must be a d x d unitary")
    basis = determinants(setting)
    idx = [np.array(orbitals_of(det)) - 1 for det in basis]
    uc = u.conj()
    new = np.zeros(len(basis), dtype=complex)
    for det, c in state.amplitudes.items():
        rows = np.array(orbitals_of(det)) - 1
        sub = uc[rows]
        for k, cols in enumerate(idx):
            new[k] += c * np.linalg.det(sub[:, cols])
    return FermionState.from_vector(setting, new, normalize=True)


def to_natural_orbitals(state: FermionState) -> tuple[Spectrum, FermionState]:
    """NONs and the state re-expanded in its own natural orbitals (descending)."""
    spec, vecs = natural_occupations(one_rdm(state))
    return spec, rotate_state(state, vecs.conj())


def parse_state(text: str, renormalize: bool = False) -> FermionState:
    """Read the line format ``setting N d`` followed by ``i1,...,iN re im`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ArgumentError("empty state file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "setting":
        raise ArgumentError("state file must start with 'setting N d'")
    try:
        setting = Setting(int(head[1]), int(head[2]))
    except ValueError as exc:
        raise ArgumentError(f"bad setting line: {lines[0]!r}") from exc
    amps: dict[int, complex] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ArgumentError(f"bad amplitude line: {ln!r}")
        try:
            orbs = [int(x) for x in parts[0].split(",")]
            c = complex(float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ArgumentError(f"bad amplitude line: {ln!r}") from exc
        if len(orbs) != setting.particles:
            raise ArgumentError(f"line {ln!r} does not list {setting.particles} orbitals")
        det = det_from_orbitals(orbs, setting.orbitals)
        if det in amps:
            raise ArgumentError(f"duplicate determinant {tuple(sorted(orbs))}")
        amps[det] = c
    norm = sum(abs(c) ** 2 for c in amps.values())
    if abs(norm - 1.0) > FILE_NORM_TOL:
        if not renormalize:
            raise ArgumentError(f"state is not normalized (norm^2 = {norm:.12g})")
    if renormalize or abs(norm - 1.0) > NORM_TOL:
        amps = _normalized(amps)
    return FermionState(setting, amps)


def format_state(state: FermionState) -> str:
    out = [f"setting {state.setting.particles} {state.setting.orbitals}"]
    for det in sorted(state.amplitudes, key=orbitals_of):
        c = state.amplitudes[det]
        orbs = ",".join(str(i) for i in orbitals_of(det))
        out.append(f"{orbs} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(out) + "\n"
