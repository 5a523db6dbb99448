"""Generalized Pauli constraint catalogs and the distance measures built on them.

A constraint is the affine functional ``D(lam) = kappa0 + sum_i kappa_i lam_i``
with integer coefficients, required to be ``>= 0`` (inequality) or ``== 0``
(equality) on every pure-state spectrum of its setting. Native catalogs live in
``data/catalogs.txt``; particle-hole duals and the two-fermion pairing rules are
generated on request.
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ArgumentError, UnsupportedSettingError
from .fock_core import Setting, Spectrum

SPECTRUM_TOL = 1e-9
MEASURES = ("dD", "d2", "d1")
MAX_ORBITALS = 10


@dataclass(frozen=True)
class AffineConstraint:
    label: str
    kind: str
    kappa0: int
    kappas: tuple[int, ...]
    setting: Setting

    def __post_init__(self):
        if self.kind not in ("inequality", "equality"):
            raise ArgumentError(f"unknown constraint kind {self.kind!r}")
        if len(self.kappas) != self.setting.orbitals:
            raise ArgumentError(f"{self.label}: {len(self.kappas)} coefficients for d={self.setting.orbitals}")
        if not any(self.kappas):
            raise ArgumentError(f"{self.label}: all coefficients vanish")

    @property
    def norm2(self) -> float:
        return math.sqrt(sum(k * k for k in self.kappas))

    @property
    def norm_inf(self) -> int:
        return max(abs(k) for k in self.kappas)

    def value(self, lam) -> float:
        """kappa0 + sum kappa_i lam_i without any validation."""
        return self.kappa0 + float(np.dot(self.kappas, np.asarray(lam, dtype=float)))

    def dual(self) -> "AffineConstraint":
        """The constraint obtained by lam_i -> 1 - lam_{d+1-i}."""
        ks = self.kappas
        label = _relabel(self.label, self.setting, self.setting.dual())
        return AffineConstraint(label, self.kind, self.kappa0 + sum(ks), tuple(-k for k in reversed(ks)),
                                self.setting.dual())


def _relabel(label: str, old: Setting, new: Setting) -> str:
    tag = f"({old.particles},{old.orbitals})"
    new_tag = f"({new.particles},{new.orbitals})"
    return label.replace(tag, new_tag, 1) if tag in label else f"{label}*"


@dataclass(frozen=True)
class ConstraintCatalog:
    setting: Setting
    constraints: tuple[AffineConstraint, ...]
    provenance: str

    @property
    def inequalities(self) -> tuple[AffineConstraint, ...]:
        return tuple(c for c in self.constraints if c.kind == "inequality")

    @property
    def equalities(self) -> tuple[AffineConstraint, ...]:
        return tuple(c for c in self.constraints if c.kind == "equality")

    def __getitem__(self, label: str) -> AffineConstraint:
        for c in self.constraints:
            if c.label == label:
                return c
        raise KeyError(label)

    def reduced_inequalities(self) -> tuple[AffineConstraint, ...]:
        """Inequalities rewritten with the equalities eliminated.

        Each equality is solved for its lowest-index NON, which is substituted
        into every inequality (the Borland-Dennis one becomes
        ``lam5 + lam6 - lam4``). On the polytope both forms agree; on a
        truncated spectrum, where the equalities hold only approximately, the
        reduced form measures the distance within the equality hyperplanes.
        """
        return tuple(reduce_by_equalities(c, self.equalities) for c in self.inequalities)

    def as_inequalities(self) -> tuple[AffineConstraint, ...]:
        """Every equality split into the pair D >= 0 and -D >= 0."""
        out = []
        for c in self.constraints:
            if c.kind == "inequality":
                out.append(c)
            else:
                out.append(AffineConstraint(c.label + "+", "inequality", c.kappa0, c.kappas, c.setting))
                out.append(AffineConstraint(c.label + "-", "inequality", -c.kappa0,
                                            tuple(-k for k in c.kappas), c.setting))
        return tuple(out)


def reduce_by_equalities(c: AffineConstraint, equalities) -> AffineConstraint:
    k0, ks = c.kappa0, list(c.kappas)
    for e in equalities:
        pivot = next(i for i, x in enumerate(e.kappas) if x)
        if not ks[pivot]:
            continue
        f, rem = divmod(ks[pivot], e.kappas[pivot])
        if rem:
            raise ArgumentError(f"{c.label}: elimination by {e.label} leaves non-integer coefficients")
        k0 -= f * e.kappa0
        ks = [a - f * b for a, b in zip(ks, e.kappas)]
    return AffineConstraint(c.label, c.kind, k0, tuple(ks), c.setting)


def _parse_resource(text: str) -> dict[Setting, tuple[AffineConstraint, ...]]:
    lines = text.splitlines()
    declared = None
    body_start = 0
    for k, ln in enumerate(lines):
        if not ln.startswith("#"):
            body_start = k
            break
        parts = ln[1:].split()
        if parts[:1] == ["sha256"]:
            declared = parts[1]
    body = "\n".join(lines[body_start:]) + "\n"
    if declared is None or hashlib.sha256(body.encode()).hexdigest() != declared:
        raise RuntimeError("constraint catalog resource failed its checksum")
    out: dict[Setting, list[AffineConstraint]] = {}
    current = None
    for ln in lines[body_start:]:
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "setting":
            current = Setting(int(parts[1]), int(parts[2]))
            out[current] = []
            continue
        label, kind, k0, *ks = parts
        out[current].append(AffineConstraint(label, kind, int(k0), tuple(int(x) for x in ks), current))
    return {s: tuple(v) for s, v in out.items()}


@functools.lru_cache(maxsize=1)
def _native() -> dict[Setting, tuple[AffineConstraint, ...]]:
    text = resources.files(__package__).joinpath("data/catalogs.txt").read_text()
    return _parse_resource(text)


def _pairing_catalog(setting: Setting) -> tuple[AffineConstraint, ...]:
    # two fermions: nonzero NONs are evenly degenerate
    d = setting.orbitals
    out = []
    for i in range(1, d // 2 + 1):
        ks = [0] * d
        ks[2 * i - 2], ks[2 * i - 1] = 1, -1
        out.append(AffineConstraint(f"P^{{(2,{d})}}_{i}", "equality", 0, tuple(ks), setting))
    if d % 2:
        ks = [0] * d
        ks[-1] = 1
        out.append(AffineConstraint(f"P^{{(2,{d})}}_{d // 2 + 1}", "equality", 0, tuple(ks), setting))
    return tuple(out)


def _is_trivial(s: Setting) -> bool:
    # one particle or one hole: only the Pauli box applies
    return s.particles <= 1 or s.particles >= s.orbitals - 1


def is_supported(setting: Setting) -> bool:
    if setting.orbitals > MAX_ORBITALS:
        return False
    if _is_trivial(setting) or setting.particles == 2 or setting.dual().particles == 2:
        return True
    return setting in _native() or setting.dual() in _native()


def supported_settings(max_orbitals: int = MAX_ORBITALS) -> list[Setting]:
    return [Setting(n, d) for d in range(1, max_orbitals + 1) for n in range(0, d + 1)
            if is_supported(Setting(n, d))]


def nearest_supported(setting: Setting) -> Setting | None:
    """Supported (N - r, d - r - s) reachable by dropping the fewest NONs."""
    n, d = setting.particles, setting.orbitals
    best = None
    for r in range(0, n + 1):
        for s in range(0, d - n + 1):
            if d - r - s > MAX_ORBITALS:
                continue
            cand = Setting(n - r, d - r - s)
            if is_supported(cand) and not _is_trivial(cand):
                key = (r + s, r)
                if best is None or key < best[0]:
                    best = (key, cand)
    return None if best is None else best[1]


@functools.lru_cache(maxsize=None)
def catalog(setting: Setting) -> ConstraintCatalog:
    """The complete constraint catalog of a supported setting."""
    native = _native()
    if setting.orbitals <= MAX_ORBITALS:
        if setting in native:
            return ConstraintCatalog(setting, native[setting], "native")
        if _is_trivial(setting):
            return ConstraintCatalog(setting, (), "native")
        if setting.particles == 2:
            return ConstraintCatalog(setting, _pairing_catalog(setting), "native")
        dual = setting.dual()
        if dual in native or dual.particles == 2:
            base = catalog(dual)
            return ConstraintCatalog(setting, tuple(c.dual() for c in base.constraints),
                                     f"dual-of({dual.particles},{dual.orbitals})")
    near = nearest_supported(setting)
    hint = f"; nearest supported truncation is {near}" if near else ""
    raise UnsupportedSettingError(f"no constraint catalog for setting {setting}{hint}", nearest=near)


def spectrum_values(spec, setting: Setting | None = None, tol: float = SPECTRUM_TOL) -> np.ndarray:
    """Check ordering, the Pauli box and normalization; return the values as an array."""
    vals = np.asarray(spec.values if isinstance(spec, Spectrum) else spec, dtype=float).ravel()
    if setting is not None:
        if vals.size != setting.orbitals:
            raise ArgumentError(f"spectrum has {vals.size} entries, setting {setting} needs {setting.orbitals}")
        if abs(vals.sum() - setting.particles) > tol:
            raise ArgumentError(f"spectrum sums to {vals.sum():.12g}, expected {setting.particles}")
    if np.any(np.diff(vals) > tol):
        raise ArgumentError("spectrum is not ordered decreasingly")
    if vals.size and (vals.min() < -tol or vals.max() > 1 + tol):
        raise ArgumentError("spectrum leaves the Pauli box [0, 1]")
    return vals


def evaluate(c: AffineConstraint, spec, tol: float = SPECTRUM_TOL) -> float:
    return c.value(spectrum_values(spec, c.setting, tol))


def measure(c: AffineConstraint, spec, which: str = "dD", tol: float = SPECTRUM_TOL) -> float:
    d = evaluate(c, spec, tol)
    if which == "dD":
        return d
    if which == "d2":
        return d / c.norm2
    if which == "d1":
        return d / c.norm_inf
    raise ArgumentError(f"unknown measure {which!r}; choose from {MEASURES}")


def min_distance(spec, setting: Setting, which: str = "dD", tol: float = SPECTRUM_TOL):
    """Smallest measure over the inequalities of the catalog, with its constraint.

    Returns ``(inf, None)`` for catalogs without inequalities. Ties go to the
    earlier constraint.
    """
    vals = spectrum_values(spec, setting, tol)
    best = (math.inf, None)
    for c in catalog(setting).inequalities:
        v = measure(c, vals, which, tol)
        if v < best[0]:
            best = (v, c)
    return best


def equality_residuals(spec, setting: Setting, tol: float = SPECTRUM_TOL) -> list[tuple[str, float]]:
    vals = spectrum_values(spec, setting, tol)
    return [(c.label, c.value(vals)) for c in catalog(setting).equalities]


def is_member(spec, setting: Setting, tol: float = SPECTRUM_TOL) -> bool:
    """Polytope membership: Pauli box, ordering, normalization and every constraint."""
    try:
        vals = spectrum_values(spec, setting, tol)
    except ArgumentError:
        return False
    return all(c.value(vals) >= -tol for c in catalog(setting).as_inequalities())
