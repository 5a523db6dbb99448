"""Truncated pinning analysis, the selection rule and structural stability bounds."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, PreconditionError, UnsupportedTruncationError
from .fock_core import (
    FermionState,
    Setting,
    Spectrum,
    det_from_orbitals,
    determinants,
    orbitals_of,
    to_natural_orbitals,
)
from .pauli_constraints import (
    SPECTRUM_TOL,
    AffineConstraint,
    catalog,
    is_supported,
    measure,
    spectrum_values,
)

EXACT_TOL = 1e-12
QUASI_PINNING_THRESHOLD = 1e-3


@dataclass(frozen=True)
class TruncationReport:
    """Result of dropping NONs close to 1 (the first r) and close to 0 (the last s).

    ``r`` and ``s`` count all dropped entries, including those that were exactly
    1 or 0. Only the inexact ones contribute to ``epsilon``.
    """

    r: int
    s: int
    epsilon: float
    setting: Setting
    values: tuple[float, ...]
    original_setting: Setting
    exact_ones: int = 0
    exact_zeros: int = 0

    @property
    def norm_tol(self) -> float:
        # the kept block sums to N' only up to the dropped weight
        return SPECTRUM_TOL + self.dropped_weight

    dropped_weight: float = 0.0


def _step_one(vals: np.ndarray) -> tuple[int, int]:
    ones = 0
    while ones < vals.size and abs(1 - vals[ones]) <= EXACT_TOL:
        ones += 1
    zeros = 0
    while zeros < vals.size - ones and abs(vals[vals.size - 1 - zeros]) <= EXACT_TOL:
        zeros += 1
    return ones, zeros


def _candidate(vals: np.ndarray, n: int, ones: int, zeros: int, r: int, s: int) -> TruncationReport:
    d = vals.size
    lead = vals[ones:r]
    tail = vals[d - s:d - zeros] if s > zeros else vals[:0]
    eps = max([0.0] + [float(1 - x) for x in lead] + [float(x) for x in tail])
    kept = vals[r:d - s]
    dropped = float(np.sum(1 - lead) + np.sum(tail))
    return TruncationReport(r=r, s=s, epsilon=eps, setting=Setting(n - r, d - r - s),
                            values=tuple(float(x) for x in kept), original_setting=Setting(n, d),
                            exact_ones=ones, exact_zeros=zeros, dropped_weight=dropped)


def truncate(spec, epsilon_threshold: float | None = None, r: int | None = None,
             s: int | None = None, tol: float = SPECTRUM_TOL) -> TruncationReport:
    """Reduce a spectrum to a supported setting.

    Exact 1s and 0s are always removed. With ``epsilon_threshold`` the largest
    truncation whose error stays under the threshold and whose setting has a
    catalog is chosen; with explicit ``r`` and ``s`` those counts are used.
    """
    vals = spectrum_values(spec, tol=tol)
    n = int(round(vals.sum()))
    spectrum_values(vals, Setting(n, vals.size), tol)
    d = vals.size
    ones, zeros = _step_one(vals)
    if r is not None or s is not None:
        r = ones if r is None else r
        s = zeros if s is None else s
        if r < ones or s < zeros or r > n or s > d - n:
            raise ArgumentError(f"explicit truncation r={r}, s={s} incompatible with the spectrum")
        rep = _candidate(vals, n, ones, zeros, r, s)
        if not is_supported(rep.setting):
            raise UnsupportedTruncationError(f"truncated setting {rep.setting} has no catalog",
                                             achievable=_achievable(vals, n, ones, zeros))
        return rep
    thr = 0.0 if epsilon_threshold is None else float(epsilon_threshold)
    if thr < 0:
        raise ArgumentError("epsilon threshold must be non-negative")
    cands = []
    for rr in range(ones, n + 1):
        for ss in range(zeros, d - n + 1):
            rep = _candidate(vals, n, ones, zeros, rr, ss)
            if rep.epsilon <= thr and is_supported(rep.setting):
                cands.append(rep)
    if not cands:
        raise UnsupportedTruncationError(
            f"no supported truncation of a {Setting(n, d)} spectrum with epsilon <= {thr:g}",
            achievable=_achievable(vals, n, ones, zeros))
    # settings with genuine inequalities first, then drop as much as the
    # threshold allows, then prefer the smaller error
    return max(cands, key=lambda t: (_has_inequalities(t.setting), t.r + t.s, -t.epsilon, -t.r))


def _has_inequalities(setting: Setting) -> bool:
    return setting.orbitals > 0 and bool(catalog(setting).inequalities)


def _achievable(vals, n, ones, zeros) -> list[tuple[Setting, float]]:
    d = vals.size
    out = {}
    for rr in range(ones, n + 1):
        for ss in range(zeros, d - n + 1):
            rep = _candidate(vals, n, ones, zeros, rr, ss)
            if is_supported(rep.setting):
                if rep.setting not in out or rep.epsilon < out[rep.setting]:
                    out[rep.setting] = rep.epsilon
    return sorted(out.items(), key=lambda kv: kv[1])


@dataclass
class PinningReport:
    setting: Setting
    measure: str
    epsilon: float
    constraints: list[tuple[str, float]]
    min_label: str
    min_value: float
    bound: float
    verdict: str
    truncation: TruncationReport = field(repr=False)
    threshold: float = QUASI_PINNING_THRESHOLD
    equalities: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        t = self.truncation
        return {
            "setting": [self.setting.particles, self.setting.orbitals],
            "measure": self.measure,
            "epsilon": self.epsilon,
            "truncated_setting": [t.setting.particles, t.setting.orbitals],
            "r": t.r,
            "s": t.s,
            "constraints": [{"label": lab, "value": v} for lab, v in self.constraints],
            "equalities": [{"label": lab, "residual": v} for lab, v in self.equalities],
            "min": {"label": self.min_label, "value": self.min_value, "bound": self.bound},
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def analyze(spec, epsilon_threshold: float | None = None, r: int | None = None, s: int | None = None,
            which: str = "dD", quasi_threshold: float = QUASI_PINNING_THRESHOLD,
            tol: float = SPECTRUM_TOL, reduce: bool = True) -> PinningReport:
    """Truncate, evaluate the truncated catalog and classify the result.

    When the truncated setting carries no inequality beyond the Pauli box (for
    example a Slater determinant, where every NON is exactly 0 or 1) the Pauli
    distance ``min(lam_i, 1 - lam_i)`` of the full spectrum is reported instead.

    With ``reduce`` (the default) settings that carry equalities are measured in
    the equality-reduced form of their inequalities.
    """
    t = truncate(spec, epsilon_threshold, r, s, tol)
    if t.setting.orbitals:
        cat = catalog(t.setting)
        ineqs = cat.reduced_inequalities() if reduce else cat.inequalities
    else:
        ineqs = ()
    rows = [(c.label, measure(c, t.values, which, t.norm_tol + tol)) for c in ineqs]
    eq_rows = ([(c.label, c.value(t.values)) for c in catalog(t.setting).equalities]
               if t.setting.orbitals else [])
    if rows:
        k = min(range(len(rows)), key=lambda i: (rows[i][1], i))
        label, value = rows[k]
        cost = sum(abs(x) for x in ineqs[k].kappas)
        if which == "d2":
            cost /= ineqs[k].norm2
        elif which == "d1":
            cost /= ineqs[k].norm_inf
    else:
        vals = np.asarray(spectrum_values(spec, tol=tol))
        pauli = np.minimum(vals, 1 - vals)
        label, value = "pauli", float(max(0.0, pauli.min()))
        if t.exact_ones or t.exact_zeros:
            value = 0.0
        cost = 1.0
    bound = cost * t.epsilon
    if value == 0.0 and t.epsilon == 0.0:
        verdict = "pinned"
    elif value < quasi_threshold:
        verdict = "quasi-pinned"
    else:
        verdict = "unpinned"
    return PinningReport(setting=t.original_setting, measure=which, epsilon=t.epsilon, constraints=rows,
                         min_label=label, min_value=value, bound=bound, verdict=verdict, truncation=t,
                         threshold=quasi_threshold, equalities=eq_rows)


def selection_zero_space(saturated, setting: Setting) -> set[int]:
    """Determinants annihilated by the D-hat operator of every listed constraint.

    D-hat acts on |i1..iN> as kappa0 + sum of kappa over the occupied orbitals.
    """
    out = set()
    for det in determinants(setting):
        occ = [i - 1 for i in orbitals_of(det)]
        if all(c.kappa0 + sum(c.kappas[i] for i in occ) == 0 for c in saturated):
            out.add(det)
    return out


def projection_weight(state: FermionState, dets) -> float:
    masks = {d if isinstance(d, int) else det_from_orbitals(d, state.setting.orbitals) for d in dets}
    return float(sum(abs(c) ** 2 for det, c in state.amplitudes.items() if det in masks))


BD_SETTING = Setting(3, 6)


def borland_dennis_pinned_dets() -> set[int]:
    cat = catalog(BD_SETTING)
    return selection_zero_space(list(cat.equalities) + [cat["D^{(3,6)}"]], BD_SETTING)


def counterexample_state(alpha: complex, gamma: complex, delta: float) -> FermionState:
    """Three-determinant state near the Borland-Dennis facet with no weight on its pinned span.

    The middle amplitude is sqrt(|alpha|^2 + |gamma|^2 - delta). The three
    amplitudes are normalized jointly, so D equals delta only when
    2|alpha|^2 + 2|gamma|^2 - delta = 1.
    """
    mid2 = abs(alpha) ** 2 + abs(gamma) ** 2 - delta
    if mid2 < 0:
        raise ArgumentError("|alpha|^2 + |gamma|^2 must exceed delta")
    return FermionState.from_orbitals(
        BD_SETTING, {(1, 3, 5): alpha, (1, 2, 4): math.sqrt(mid2), (2, 3, 6): gamma}, normalize=True)


@dataclass(frozen=True)
class BoundReport:
    check: str
    delta: float
    value: float
    lower: float
    upper: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"check": self.check, "delta": self.delta, "value": self.value,
                "lower": self.lower, "upper": self.upper, "pass": self.passed, **self.extra}


def structure_bounds(state: FermionState, check: str = "hf", tol: float = 1e-10) -> BoundReport:
    """Sandwich bounds that tie NONs to the structure of the state in its natural orbitals."""
    spec, rotated = to_natural_orbitals(state)
    lam = np.array(spec.values)
    n = state.setting.particles
    if check == "hf":
        delta = float(n - lam[:n].sum())
        overlap = abs(rotated.amplitude(range(1, n + 1))) ** 2
        lo, hi = 1 - delta, 1 - delta / n
        return BoundReport("hf", delta, overlap, lo, hi, lo - tol <= overlap <= hi + tol)
    if check == "borland_dennis":
        if state.setting != BD_SETTING:
            raise ArgumentError("the Borland-Dennis bound needs a (3,6) state")
        delta = float(3 - lam[:3].sum())
        if delta > 0.25 + tol:
            raise PreconditionError(f"delta = {delta:.6g} exceeds 1/4")
        d36 = float(catalog(BD_SETTING)["D^{(3,6)}"].value(lam))
        chi = (1 + 2 * delta) / (1 - 4 * delta)
        w = projection_weight(rotated, borland_dennis_pinned_dets())
        lo, hi = 1 - chi * d36, 1 - d36 / 2
        return BoundReport("borland_dennis", delta, w, lo, hi, lo - tol <= w <= hi + tol,
                           {"chi": chi, "D": d36})
    raise ArgumentError(f"unknown bound check {check!r}")


def pad_spectrum(values, r: int, s: int) -> tuple[float, ...]:
    """(1^r, values, 0^s)."""
    return tuple(itertools.chain([1.0] * r, values, [0.0] * s))
