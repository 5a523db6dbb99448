"""Periodic one-band Hubbard chain with hopping t = 1.

H = sum_{k,s} eps_k n_{k s} + (u/d) sum_{k,p,q} c+_{k+q up} c_{k up} c+_{p-q dn} c_{p dn}
with eps_k = -2 cos(2 pi k / d), written in the Bloch-spin basis. Orbital
``2k + s + 1`` (1-based) carries wavenumber k and spin s (0 up, 1 down), so the
one-body part is diagonal and total wavenumber K = sum k (mod d) and the spin
projection M label the blocks.
"""

from __future__ import annotations

import csv
import functools
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, brentq

from .errors import ArgumentError, NumericError, PreconditionError, UnsupportedTruncationError
from .fock_core import FermionState, Setting, Spectrum, apply_ladder, orbitals_of
from .pinning_analysis import PinningReport, analyze

MIN_SITES, MAX_SITES = 3, 5
MIN_ELECTRONS, MAX_ELECTRONS = 3, 5
CROSSING_GAP = 1e-8
TRANSITION_TOL = 1e-6
# a constraint distance below this counts as saturated in scans
PIN_TOL = 1e-9


def bloch_orbital(k: int, spin: int, sites: int) -> int:
    """1-based orbital index of wavenumber ``k`` (taken mod ``sites``) and spin 0 (up) or 1 (down)."""
    return 2 * (k % sites) + spin + 1


def orbital_label(orbital: int) -> tuple[int, int]:
    """Inverse of :func:`bloch_orbital`: ``(k, spin)``."""
    return divmod(orbital - 1, 2)


@dataclass(frozen=True)
class LatticeSetting:
    sites: int
    electrons: int

    def __post_init__(self):
        if not (MIN_SITES <= self.sites <= MAX_SITES):
            raise ArgumentError(f"sites must lie in {MIN_SITES}..{MAX_SITES}, got {self.sites}")
        if not (MIN_ELECTRONS <= self.electrons <= MAX_ELECTRONS):
            raise ArgumentError(f"electrons must lie in {MIN_ELECTRONS}..{MAX_ELECTRONS}, got {self.electrons}")
        if self.electrons > 2 * self.sites:
            raise ArgumentError("more electrons than spin orbitals")

    @property
    def fermion_setting(self) -> Setting:
        return Setting(self.electrons, 2 * self.sites)

    @property
    def default_two_m(self) -> int:
        return self.electrons % 2

    def __str__(self):
        return f"{self.sites} sites, {self.electrons} electrons"


@dataclass(frozen=True)
class SymmetryBlock:
    """Hamiltonian ``kinetic + u * interaction`` on the determinants with wavenumber K and 2M = two_m."""

    sites: int
    electrons: int
    K: int
    two_m: int
    basis: tuple[int, ...]
    kinetic: np.ndarray = field(repr=False)
    interaction: np.ndarray = field(repr=False)

    @property
    def M(self) -> float:
        return self.two_m / 2

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def hamiltonian(self, u: float) -> np.ndarray:
        return self.kinetic + u * self.interaction

    def ground(self, u: float) -> tuple[float, np.ndarray]:
        w, v = np.linalg.eigh(self.hamiltonian(u))
        return float(w[0]), v[:, 0]

    def spin_squared(self) -> np.ndarray:
        """Matrix of S^2 = S- S+ + Sz (Sz + 1) in the block basis."""
        idx = {det: i for i, det in enumerate(self.basis)}
        d2 = 2 * self.sites
        out = np.zeros((self.dimension, self.dimension))
        sz = self.M
        for i, det in enumerate(self.basis):
            out[i, i] += sz * (sz + 1)
            for k in range(self.sites):
                for p in range(self.sites):
                    ops = [(bloch_orbital(k, 1, self.sites), "create"), (bloch_orbital(k, 0, self.sites), "annihilate"),
                           (bloch_orbital(p, 0, self.sites), "create"), (bloch_orbital(p, 1, self.sites), "annihilate")]
                    r = _apply_string(det, ops, d2)
                    if r is not None:
                        out[idx[r[1]], i] += r[0]
        return out

    def state(self, vector) -> FermionState:
        amps = {det: complex(c) for det, c in zip(self.basis, vector) if c != 0}
        return FermionState(Setting(self.electrons, 2 * self.sites), amps)


def _apply_string(det: int, ops, d: int):
    """Apply a product of ladder operators, rightmost first."""
    sign = 1
    for orbital, mode in reversed(ops):
        r = apply_ladder(det, orbital, mode, d)
        if r is None:
            return None
        s, det = r
        sign *= s
    return sign, det


def _sector(sites: int, electrons: int, two_m: int) -> list[tuple[int, int]]:
    n_up = (electrons + two_m) // 2
    n_dn = electrons - n_up
    out = []
    for up in itertools.combinations(range(sites), n_up):
        for dn in itertools.combinations(range(sites), n_dn):
            mask = 0
            for k in up:
                mask |= 1 << (bloch_orbital(k, 0, sites) - 1)
            for k in dn:
                mask |= 1 << (bloch_orbital(k, 1, sites) - 1)
            out.append(((sum(up) + sum(dn)) % sites, mask))
    return out


@functools.lru_cache(maxsize=None)
def _blocks(sites: int, electrons: int, two_m: int) -> tuple[SymmetryBlock, ...]:
    d2 = 2 * sites
    eps = [-2 * math.cos(2 * math.pi * k / sites) for k in range(sites)]
    by_k: dict[int, list[int]] = {}
    for K, mask in _sector(sites, electrons, two_m):
        by_k.setdefault(K, []).append(mask)
    out = []
    for K in sorted(by_k):
        basis = tuple(sorted(by_k[K]))
        idx = {det: i for i, det in enumerate(basis)}
        dim = len(basis)
        kin = np.zeros((dim, dim))
        inter = np.zeros((dim, dim))
        for i, det in enumerate(basis):
            occ = [orbital_label(o) for o in orbitals_of(det)]
            kin[i, i] = sum(eps[k] for k, _ in occ)
            ups = [k for k, s in occ if s == 0]
            dns = [k for k, s in occ if s == 1]
            for k in ups:
                for p in dns:
                    for q in range(sites):
                        ops = [(bloch_orbital(k + q, 0, sites), "create"), (bloch_orbital(k, 0, sites), "annihilate"),
                               (bloch_orbital(p - q, 1, sites), "create"), (bloch_orbital(p, 1, sites), "annihilate")]
                        r = _apply_string(det, ops, d2)
                        if r is not None:
                            inter[idx[r[1]], i] += r[0] / sites
        out.append(SymmetryBlock(sites, electrons, K, two_m, basis, kin, inter))
    return tuple(out)


def build_blocks(setting: LatticeSetting, two_m: int | None = None) -> list[SymmetryBlock]:
    """Symmetry blocks of the sector ``2M = two_m``, or of every M when ``two_m`` is None."""
    n = setting.electrons
    if two_m is None:
        ms = range(-n if n <= setting.sites else n - 2 * setting.sites, 1 + min(n, 2 * setting.sites - n), 2)
    else:
        if (two_m - n) % 2 or abs(two_m) > n:
            raise ArgumentError(f"2M = {two_m} impossible for {n} electrons")
        ms = [two_m]
    out = []
    for m in ms:
        out.extend(_blocks(setting.sites, n, m))
    return out


def sector_dimensions(setting: LatticeSetting, two_m: int) -> dict[tuple[int, int], int]:
    """``{(2S, K): dimension}`` inside the sector ``2M = two_m``, from the S^2 eigenvalues."""
    out: dict[tuple[int, int], int] = {}
    for b in build_blocks(setting, two_m):
        if not b.dimension:
            continue
        for ev in np.linalg.eigvalsh(b.spin_squared()):
            two_s = int(round(math.sqrt(1 + 4 * ev) - 1))
            out[two_s, b.K] = out.get((two_s, b.K), 0) + 1
    return out


def bloch_occupations(block: SymmetryBlock, vector) -> np.ndarray:
    """Diagonal of the 1-RDM in the Bloch-spin basis (the NONs of a symmetry-adapted state)."""
    occ = np.zeros(2 * block.sites)
    for det, c in zip(block.basis, vector):
        w = abs(c) ** 2
        for o in orbitals_of(det):
            occ[o - 1] += w
    return occ


# ---------------------------------------------------------------------------
# three sites, three electrons


@dataclass(frozen=True)
class ThreeSiteSolution:
    u: float
    energies: tuple[float, float, float]
    alpha: float
    beta: float
    gamma: float
    occupations: tuple[float, ...]
    spectrum: Spectrum = field(repr=False)
    distance: float

    @property
    def pinned(self) -> bool:
        return self.alpha ** 2 >= self.beta ** 2 + self.gamma ** 2

    def state(self) -> FermionState:
        """The K=1, M=1/2 ground state on the Bloch-spin orbitals."""
        return FermionState.from_orbitals(Setting(3, 6), list(zip(THREE_SITE_BASIS, (self.alpha, self.beta, self.gamma))))


# |0 up, 0 dn, 1 up>, |1 up, 1 dn, 2 up>, |0 up, 2 up, 2 dn>
THREE_SITE_BASIS = (
    (bloch_orbital(0, 0, 3), bloch_orbital(0, 1, 3), bloch_orbital(1, 0, 3)),
    (bloch_orbital(1, 0, 3), bloch_orbital(1, 1, 3), bloch_orbital(2, 0, 3)),
    (bloch_orbital(0, 0, 3), bloch_orbital(2, 0, 3), bloch_orbital(2, 1, 3)),
)


def three_site_matrix(u: float) -> np.ndarray:
    """Hamiltonian on the K=1, M=1/2 block in the basis :data:`THREE_SITE_BASIS`."""
    return np.array([[2 * u / 3 - 3, -u / 3, -u / 3],
                     [-u / 3, 2 * u / 3 + 3, -u / 3],
                     [-u / 3, -u / 3, 2 * u / 3]])


def characteristic(u: float, e: float) -> float:
    """det(E - H_u) on the K=1 block, expanded as a cubic in E."""
    return e ** 3 - 2 * u * e ** 2 + (u ** 2 - 9) * e + 6 * u


def three_site_energies(u: float) -> tuple[float, float, float]:
    """Roots E1 < E3 < E2 of the block cubic from the trigonometric formula, Newton-polished."""
    u = float(u)
    q = u * u / 9 + 3
    r = u ** 3 / 27
    theta = math.acos(max(-1.0, min(1.0, r / q ** 1.5)))
    root = 2 * math.sqrt(q)
    out = []
    for shift in (0.0, 2 * math.pi, -2 * math.pi):
        e = 2 * u / 3 - root * math.cos((theta + shift) / 3)
        for _ in range(2):
            dp = 3 * e * e - 4 * u * e + u * u - 9
            if dp == 0:
                break
            e -= characteristic(u, e) / dp
        out.append(e)
    return tuple(out)


def _null_vector(m: np.ndarray) -> np.ndarray:
    # cross products of row pairs; the largest is the best-conditioned null vector
    cands = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    v = max(cands, key=lambda c: float(np.dot(c, c)))
    return v / np.linalg.norm(v)


def solve_three_site(u: float) -> ThreeSiteSolution:
    u = float(u)
    if not math.isfinite(u):
        raise ArgumentError("u must be finite")
    energies = three_site_energies(u)
    e1 = energies[0]
    # the cross product of rows 1 and 2 is u/3 (u+3-E, u-3-E, u-4E+3(E^2-9)/u); the
    # other two pairs stay regular as u -> 0
    a, b, c = _null_vector(three_site_matrix(u) - e1 * np.eye(3))
    if a < 0:
        a, b, c = -a, -b, -c
    a2, b2, c2 = a * a, b * b, c * c
    occ = (a2 + c2, a2, a2 + b2, b2, b2 + c2, c2)
    spec = Spectrum(sorted(occ, reverse=True), particles=3)
    return ThreeSiteSolution(u=u, energies=energies, alpha=float(a), beta=float(b), gamma=float(c),
                             occupations=occ, spectrum=spec, distance=max(0.0, b2 + c2 - a2))


def three_site_sign(u: float) -> float:
    """|alpha|^2 - |beta|^2 - |gamma|^2: non-negative exactly where the ground state is pinned."""
    s = solve_three_site(u)
    return s.alpha ** 2 - s.beta ** 2 - s.gamma ** 2


@dataclass(frozen=True)
class SuperposedState:
    u: float
    zeta: complex
    xi: complex
    rho_up: np.ndarray = field(repr=False)
    rho_down: np.ndarray = field(repr=False)
    up_values: tuple[float, float, float]
    down_values: tuple[float, float, float]
    spectrum: Spectrum
    distance: float
    case: str
    pairing_residual: float


def superposed_blocks(u: float, zeta: complex, xi: complex) -> tuple[np.ndarray, np.ndarray]:
    """Spin-up and spin-down 1-RDM blocks (rows k = 0, 1, 2) of zeta Psi_1 + xi P Psi_1.

    ``P`` reflects every wavenumber k -> -k; Psi_1 is the K=1 ground state.
    """
    s = solve_three_site(u)
    a, b, c = s.alpha, s.beta, s.gamma
    z2, x2 = abs(zeta) ** 2, abs(xi) ** 2
    w = zeta * np.conj(xi)
    wc = np.conj(w)
    up = np.array([
        [a * a + c * c, w * c * b, wc * b * c],
        [wc * c * b, z2 * a * a + x2 * c * c + b * b, w * a * a],
        [w * b * c, wc * a * a, z2 * c * c + x2 * a * a + b * b],
    ], dtype=complex)
    dn = np.array([
        [a * a, -w * a * c, -wc * c * a],
        [-wc * a * c, z2 * b * b + x2 * c * c, -w * b * b],
        [-w * c * a, -wc * b * b, z2 * c * c + x2 * b * b],
    ], dtype=complex)
    return up, dn


def superposed_state(u: float, zeta: complex, xi: complex, tol: float = 1e-12) -> SuperposedState:
    """NONs and pinning of the superposition of the two degenerate 3-site ground states.

    ``n`` are the eigenvalues of the spin-down block (trace 1), ``m`` those of
    the spin-up block (trace 2). Each n has a partner m with n + m = 1, and
    the state is pinned exactly when m_3 <= n_1.
    """
    zeta, xi = complex(zeta), complex(xi)
    norm = abs(zeta) ** 2 + abs(xi) ** 2
    if abs(norm - 1) > tol:
        raise ArgumentError(f"|zeta|^2 + |xi|^2 = {norm!r}, expected 1")
    up, dn = superposed_blocks(u, zeta, xi)
    m = np.sort(np.linalg.eigvalsh(up))[::-1]
    n = np.sort(np.linalg.eigvalsh(dn))[::-1]
    pairing = float(np.max(np.abs(np.sort(n) - np.sort(1 - m))))
    if pairing > 1e-9:
        raise NumericError("spin blocks do not pair up to one", residual=pairing)
    vals = np.clip(np.sort(np.concatenate([n, m]))[::-1], 0.0, 1.0)
    spec = Spectrum(vals, particles=3)
    case = "pinned" if m[2] <= n[0] else "unpinned"
    dist = float(vals[4] + vals[5] - vals[3])
    return SuperposedState(u=float(u), zeta=zeta, xi=xi, rho_up=up, rho_down=dn,
                           up_values=tuple(map(float, m)), down_values=tuple(map(float, n)),
                           spectrum=spec, distance=dist, case=case, pairing_residual=pairing)


# ---------------------------------------------------------------------------
# scans over u


@dataclass
class ScanPoint:
    u: float
    K: int
    two_m: int
    energy: float
    occupations: np.ndarray = field(repr=False)
    spectrum: Spectrum | None
    report: PinningReport | None
    is_ground: bool
    degenerate: bool
    note: str = ""

    @property
    def min_label(self) -> str:
        return self.report.min_label if self.report else "unsupported"

    @property
    def min_distance(self) -> float:
        return self.report.min_value if self.report else float("nan")

    @property
    def pinned(self) -> bool | None:
        return None if self.report is None else self.min_distance < PIN_TOL


@dataclass
class GroundScan:
    setting: LatticeSetting
    points: list[ScanPoint]
    crossings: list[float]

    def to_csv(self) -> str:
        d = 2 * self.setting.sites
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "E0"] + [f"lambda_{i}" for i in range(1, d + 1)]
                   + ["min_constraint_label", "min_distance", "pinned"])
        for p in self.points:
            lam = list(p.spectrum.values) if p.spectrum is not None else [float("nan")] * d
            dist = "" if p.report is None else f"{p.min_distance:.12g}"
            pinned = "" if p.pinned is None else str(p.pinned).lower()
            w.writerow([f"{p.u:.12g}", f"{p.energy:.12g}"] + [f"{x:.12g}" for x in lam]
                       + [p.min_label, dist, pinned])
        return buf.getvalue()


def _sector_lowest(blocks, u) -> dict[int, float]:
    return {b.K: b.ground(u)[0] for b in blocks if b.dimension}


def _pick_sector(blocks, u, K) -> SymmetryBlock:
    by_k = {b.K: b for b in blocks if b.dimension}
    if K == "auto":
        lows = _sector_lowest(blocks, u)
        e0 = min(lows.values())
        return by_k[min(k for k, e in lows.items() if e <= e0 + CROSSING_GAP)]
    if K % len(blocks) not in by_k:
        raise ArgumentError(f"no states with K = {K}")
    return by_k[K % len(blocks)]


def ground_point(setting: LatticeSetting, u: float, K: int | str = 1, two_m: int | None = None,
                 epsilon_threshold: float | None = None) -> ScanPoint:
    """Lowest state of the (K, M) block at coupling ``u`` with its pinning analysis.

    ``K="auto"`` picks the block holding the ground state of the M sector (the
    smallest K on ties). The point is flagged ``degenerate`` when another
    block, other than the mirror image -K, or the second level of the same
    block lies within :data:`CROSSING_GAP`.
    """
    two_m = setting.default_two_m if two_m is None else two_m
    blocks = build_blocks(setting, two_m)
    blk = _pick_sector(blocks, u, K)
    w, v = np.linalg.eigh(blk.hamiltonian(u))
    e0 = float(w[0])
    lows = _sector_lowest(blocks, u)
    mirror = (-blk.K) % setting.sites
    others = [e for k, e in lows.items() if k not in (blk.K, mirror)]
    degenerate = (len(w) > 1 and w[1] - w[0] < CROSSING_GAP) or any(abs(e - e0) < CROSSING_GAP for e in others)
    is_ground = e0 <= min(lows.values()) + CROSSING_GAP
    occ = bloch_occupations(blk, v[:, 0])
    vals = np.clip(np.sort(occ)[::-1], 0.0, 1.0)
    spec = Spectrum(vals, particles=setting.electrons)
    note = ""
    try:
        report = analyze(spec, epsilon_threshold=epsilon_threshold)
    except UnsupportedTruncationError as exc:
        report = None
        note = "; ".join(f"{s}: epsilon={e:.3g}" for s, e in exc.achievable[:4]) or str(exc)
    return ScanPoint(u=float(u), K=blk.K, two_m=two_m, energy=e0, occupations=occ, spectrum=spec,
                     report=report, is_ground=is_ground, degenerate=bool(degenerate), note=note)


def ground_scan(setting: LatticeSetting, u_grid, K: int | str = 1, two_m: int | None = None,
                epsilon_threshold: float | None = None) -> GroundScan:
    """Pinning analysis of the (K, M) ground state over ``u_grid``.

    Level crossings between the chosen block and any other block of the M
    sector are located between neighbouring grid points and listed in
    ``crossings``.
    """
    two_m = setting.default_two_m if two_m is None else two_m
    us = sorted(float(u) for u in u_grid)
    points = [ground_point(setting, u, K, two_m, epsilon_threshold) for u in us]
    blocks = build_blocks(setting, two_m)
    crossings = []
    for p, q in zip(points, points[1:]):
        if p.K != q.K or p.is_ground != q.is_ground:
            blk = next(b for b in blocks if b.K == p.K)

            def gap(u, blk=blk):
                lows = _sector_lowest(blocks, u)
                mirror = (-blk.K) % setting.sites
                return blk.ground(u)[0] - min(e for k, e in lows.items() if k not in (blk.K, mirror))
            a, b = gap(p.u), gap(q.u)
            if a * b < 0:
                crossings.append(float(brentq(gap, p.u, q.u, xtol=1e-12)))
    return GroundScan(setting, points, crossings)


def energy_crossing(setting: LatticeSetting, bracket, K: int = 1, other: int = 0, two_m: int | None = None) -> float:
    """Coupling where the lowest levels of blocks ``K`` and ``other`` cross."""
    two_m = setting.default_two_m if two_m is None else two_m
    by_k = {b.K: b for b in build_blocks(setting, two_m)}

    def gap(u):
        return by_k[K % setting.sites].ground(u)[0] - by_k[other % setting.sites].ground(u)[0]
    lo, hi = map(float, bracket)
    if gap(lo) * gap(hi) > 0:
        raise PreconditionError(f"levels of K={K} and K={other} do not cross in [{lo}, {hi}]")
    return float(brentq(gap, lo, hi, xtol=1e-12))


def labelled_occupations(setting: LatticeSetting, u: float, K: int = 1, two_m: int | None = None) -> np.ndarray:
    """Bloch-spin occupations of the lowest (K, M) state, indexed by orbital - 1."""
    two_m = setting.default_two_m if two_m is None else two_m
    blk = _pick_sector(build_blocks(setting, two_m), u, K)
    return bloch_occupations(blk, blk.ground(u)[1])


def find_transition(setting: LatticeSetting, bracket=None, pair: tuple[int, int] = (6, 7),
                    K: int = 1, tol: float = TRANSITION_TOL) -> float:
    """Coupling where the pinning status of the (K, M) ground state flips.

    Three sites use |alpha|^2 - |beta|^2 - |gamma|^2. Otherwise the NONs at
    sorted positions ``pair`` at the lower bracket end are followed by their
    Bloch-spin labels and the zero of their difference is bisected.
    """
    if setting.sites == 3 and setting.electrons == 3:
        lo, hi = (1.0, 50.0) if bracket is None else map(float, bracket)
        f = three_site_sign
    else:
        lo, hi = (1.0, 10.0) if bracket is None else map(float, bracket)
        i, j = pair
        if not (1 <= i < j <= 2 * setting.sites):
            raise ArgumentError(f"pair {pair} out of range")
        occ = labelled_occupations(setting, lo, K)
        order = np.argsort(-occ, kind="stable")
        a, b = order[i - 1], order[j - 1]

        def f(u):
            o = labelled_occupations(setting, u, K)
            return o[a] - o[b]
    fa, fb = f(lo), f(hi)
    if fa == 0:
        return lo
    if fb == 0:
        return hi
    if fa * fb > 0:
        raise PreconditionError(f"no change of pinning status in [{lo}, {hi}]")
    return float(bisect(f, lo, hi, xtol=tol))


def real_space_hamiltonian(sites: int, u: float, electrons: int | None = None) -> np.ndarray:
    """Dense site-basis Hamiltonian, optionally restricted to a fixed electron number.

    Orbital ``2i + s + 1`` is site i with spin s. Used as an independent check
    of the momentum-space blocks.
    """
    d2 = 2 * sites
    if electrons is None:
        basis = list(range(1 << d2))
    else:
        basis = [sum(1 << o for o in c) for c in itertools.combinations(range(d2), electrons)]
    idx = {det: i for i, det in enumerate(basis)}
    h = np.zeros((len(basis), len(basis)))
    for col, det in enumerate(basis):
        for i in range(sites):
            if det >> (2 * i) & 1 and det >> (2 * i + 1) & 1:
                h[col, col] += u
            for s in (0, 1):
                for j in ((i + 1) % sites, (i - 1) % sites):
                    r = _apply_string(det, [(2 * j + s + 1, "create"), (2 * i + s + 1, "annihilate")], d2)
                    if r is not None:
                        h[idx[r[1]], col] -= r[0]
    return h
