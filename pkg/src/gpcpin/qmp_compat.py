"""Spectral compatibility of two-qubit marginals.

Two problems are covered. In ``a_ab`` only the spectra of rho_A and rho_AB are
given. In ``a_b_ab`` the spectra of rho_A, rho_B and rho_AB all are. Each
inequality is reported as its slack ``rhs - lhs``; a triple is compatible when
no slack is below ``-tol``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

MODES = ("a_ab", "a_b_ab")
TOL = 1e-10


def _spectrum(values, size: int, name: str, tol: float) -> tuple[float, ...]:
    try:
        v = np.asarray(values, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ArgumentError(f"{name}: not a list of numbers") from exc
    if v.size != size:
        raise ArgumentError(f"{name}: expected {size} values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ArgumentError(f"{name}: non-finite entry")
    if np.any(np.diff(v) > tol):
        raise ArgumentError(f"{name}: not in descending order")
    if v.min() < -tol:
        raise ArgumentError(f"{name}: negative entry")
    if abs(v.sum() - 1) > tol:
        raise ArgumentError(f"{name}: sums to {v.sum()!r}, expected 1")
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class MarginalTriple:
    spec_a: tuple[float, float]
    spec_b: tuple[float, float] | None
    spec_ab: tuple[float, float, float, float]
    mode: str = "a_b_ab"

    @classmethod
    def create(cls, spec_a, spec_b, spec_ab, mode: str = "a_b_ab", tol: float = TOL) -> "MarginalTriple":
        if mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}, got {mode!r}")
        a = _spectrum(spec_a, 2, "spectrum of A", tol)
        ab = _spectrum(spec_ab, 4, "spectrum of AB", tol)
        if mode == "a_b_ab":
            if spec_b is None:
                raise ArgumentError("mode a_b_ab needs the spectrum of B")
            b = _spectrum(spec_b, 2, "spectrum of B", tol)
        else:
            b = None if spec_b is None else _spectrum(spec_b, 2, "spectrum of B", tol)
        return cls(a, b, ab, mode)


@dataclass(frozen=True)
class CompatibilityResult:
    compatible: bool
    values: list[tuple[str, float]]
    mode: str

    def to_dict(self) -> dict:
        return {"mode": self.mode, "compatible": self.compatible,
                "inequalities": [{"label": lab, "slack": v} for lab, v in self.values]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def inequality_slacks(triple: MarginalTriple) -> list[tuple[str, float]]:
    a, ab = triple.spec_a, triple.spec_ab
    l1, l2, l3, l4 = ab
    if triple.mode == "a_ab":
        return [("A1 <= AB1 + AB2", l1 + l2 - a[0])]
    b = triple.spec_b
    da, db = a[0] - a[1], b[0] - b[1]
    return [
        ("A1 - A2 <= AB1 + AB2 - AB3 - AB4", l1 + l2 - l3 - l4 - da),
        ("B1 - B2 <= AB1 + AB2 - AB3 - AB4", l1 + l2 - l3 - l4 - db),
        ("A1 - A2 + B1 - B2 <= 2 AB1 - 2 AB4", 2 * l1 - 2 * l4 - da - db),
        ("|A1 - B1| <= min(AB1 - AB3, AB2 - AB4)", min(l1 - l3, l2 - l4) - abs(a[0] - b[0])),
    ]


def check(triple: MarginalTriple, tol: float = TOL) -> CompatibilityResult:
    vals = inequality_slacks(triple)
    return CompatibilityResult(all(v >= -tol for _, v in vals), vals, triple.mode)


def check_spectra(spec_a, spec_b, spec_ab, mode: str = "a_b_ab", tol: float = TOL) -> CompatibilityResult:
    return check(MarginalTriple.create(spec_a, spec_b, spec_ab, mode, tol), tol)


def marginal_triple(rho_ab, mode: str = "a_b_ab") -> MarginalTriple:
    """Descending spectra of rho_A, rho_B and rho_AB for a 4x4 density matrix (A is the first factor)."""
    rho = np.asarray(rho_ab, dtype=complex)
    if rho.shape != (4, 4):
        raise ArgumentError("expected a 4x4 density matrix")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ArgumentError("density matrix is not hermitian")
    t = rho.reshape(2, 2, 2, 2)
    rho_a = np.einsum("ijkj->ik", t)
    rho_b = np.einsum("ijil->jl", t)

    def spec(m):
        w = np.clip(np.linalg.eigvalsh(m)[::-1], 0.0, None)
        return w / w.sum()
    return MarginalTriple.create(spec(rho_a), spec(rho_b), spec(rho), mode, tol=1e-9)
