"""Acceptance gate: one test and one summary line per criterion, each at its stated tolerance and time budget."""

import contextlib
import io
import json
import math
import time
from fractions import Fraction as F

import mpmath
import numpy as np

from conftest import ACCEPTANCE_LINES
from gpcpin import harmonium, hubbard
from gpcpin.cli import run
from gpcpin.errors import PreconditionError, UnsupportedTruncationError
from gpcpin.fock_core import FermionState, Setting, ky_fan_sum, one_rdm, random_state, spectrum_of
from gpcpin.pauli_constraints import catalog, is_member
from gpcpin.pinning_analysis import analyze, pad_spectrum, structure_bounds
from gpcpin.qmp_compat import check, marginal_triple

SEED = 0


class Gate:
    def __init__(self, number, budget):
        self.number, self.budget = number, budget
        self.checks = []

    def add(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        elapsed = time.perf_counter() - self.t0
        if exc[0] is not None:
            self.add("raised", False, repr(exc[1]))
        self.add("runtime", elapsed < self.budget, f"{elapsed:.2f}s < {self.budget}s")
        failed = [c for c in self.checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        shown = failed or self.checks
        detail = "; ".join(f"{n}: {d}" if d else n for n, _, d in shown)
        ACCEPTANCE_LINES[self.number] = f"criterion {self.number}: {status} ({elapsed:.1f}s) {detail}"
        print(ACCEPTANCE_LINES[self.number])
        assert not failed, ACCEPTANCE_LINES[self.number]
        return False


def cli_json(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run(list(argv))
    assert code == 0
    return json.loads(buf.getvalue())


def loglog_slope(xs, ys):
    return float(np.polyfit([math.log(x) for x in xs], [float(mpmath.log(y)) for y in ys], 1)[0])


# ---------------------------------------------------------------- Harmonium

NON_TABLE = {
    0.2: [0.99999655, 0.99966393, 0.99966062, 0.00033932, 0.00033608, 3.416e-6, 8.8e-8, 1.1e-9, 0, 0],
    0.4: [0.99979195, 0.99541159, 0.99523526, 0.00475175, 0.00458920, 0.00020069, 0.00001857, 9.36e-7,
          4.4e-8, 0.2e-8],
    0.6: [0.99788745, 0.98161011, 0.98014300, 0.01963124, 0.01837054, 0.00196597, 0.00034683, 0.00004026,
          4.133e-6, 4.12e-7],
    0.8: [0.99008995, 0.95575302, 0.95053687, 0.04811132, 0.04380671, 0.00886269, 0.00225847, 0.00048034,
          0.00008335, 0.00001447],
    1.0: [0.97039917, 0.91814283, 0.90742159, 0.08809330, 0.07883271, 0.02537522, 0.00807419, 0.00273121,
          0.00068859, 0.00018185],
}


def test_criterion_01_non_tables():
    with Gate(1, 5.0) as g:
        worst = {}
        for delta, row in NON_TABLE.items():
            doc = cli_json("harmonium", "nons", "--N", "3", "--delta", str(delta), "--mmax", "200")
            tol = 1e-6 if delta == 1.0 else 1e-7
            err = float(np.max(np.abs(np.array(doc["nons"][:10]) - row)))
            worst[delta] = err
            g.add(f"delta={delta}", err <= tol, f"max error {err:.2e} <= {tol:g}")
        g.add("table", True, ", ".join(f"{d}: {e:.1e}" for d, e in worst.items()))


SATURATIONS = {
    0.2: ((2.4e-8, 9.8e-8, 5.6e-8, 1.19e-7), 0.10),
    0.4: ((6.565e-6, 2.034e-5, 1.220e-5, 2.613e-5), 0.005),
}


def test_criterion_02_saturations():
    with Gate(2, 2.0) as g:
        for delta, (printed, rel) in SATURATIONS.items():
            spec = harmonium.fermionic_nons(harmonium.derive_params(3, delta=delta), 200)
            # the tail past 40 NONs carries no weight at double precision
            lead = spec.values[:40]
            rep = analyze(lead, r=0, s=len(lead) - 7)
            vals = dict(rep.constraints)
            got = [vals[f"D^{{(3,7)}}_{i}"] for i in range(1, 5)]
            errs = [abs(a - b) / b for a, b in zip(got, printed)]
            g.add(f"delta={delta}", max(errs) <= rel,
                  f"D=({', '.join(f'{x:.4g}' for x in got)}), max rel error {max(errs):.2%} <= {rel:.1%}")


def test_criterion_03_weak_coupling_scaling():
    deltas = (1e-1, 1e-2, 1e-3)
    with Gate(3, 30.0) as g:
        one_minus_l1, l7, d36 = [], [], []
        for d in deltas:
            lam = harmonium.fermionic_nons_mp(3, d, digits=50, count=8)
            one_minus_l1.append(1 - lam[0])
            l7.append(lam[6])
            d36.append(lam[4] + lam[5] - lam[3])
        dlast = mpmath.mpf(deltas[-1])
        for name, ys, power, lead in (("1-lambda_1", one_minus_l1, 6, F(40, 729)),
                                      ("lambda_7", l7, 8, F(80, 2187)),
                                      ("D^(3,6)", d36, 8, F(4510, 59049))):
            slope = loglog_slope(deltas, ys)
            coeff = float(ys[-1] / dlast ** power)
            rel = abs(coeff / float(lead) - 1)
            g.add(f"{name} slope", abs(slope - power) <= 0.1, f"{slope:.3f} vs {power}")
            g.add(f"{name} coefficient", rel <= 0.01, f"{coeff:.6g} vs {lead} ({rel:.1e})")


PRINTED_SERIES = [
    {6: F(40, 729), 8: F(-1390, 59049)},
    {4: F(2, 9), 6: F(-232, 729), 8: F(3926, 10935)},
    {4: F(2, 9), 6: F(-64, 243), 8: F(81902, 295245)},
    {4: F(2, 9), 6: F(-64, 243), 8: F(73802, 295245)},
    {4: F(2, 9), 6: F(-232, 729), 8: F(3976, 10935)},
    {6: F(40, 729), 8: F(-2200, 59049)},
    {8: F(80, 2187)},
    {},
    {},
]


def test_criterion_04_perturbation_series():
    with Gate(4, 60.0) as g:
        table = cli_json("harmonium", "series", "--order", "10")["series"]
        got = [{int(k): F(v) for k, v in row["coefficients"].items()} for row in table[:9]]
        low = [{k: v for k, v in row.items() if k <= 8} for row in got]
        g.add("orders <= 8", low == PRINTED_SERIES, f"{sum(map(len, PRINTED_SERIES))} printed coefficients")
        g.add("lambda_8 starts at delta^10", min(got[7], default=99) >= 10)
        g.add("lambda_9 vanishes through delta^10", not got[8])
        g.add("rational", all(isinstance(v, F) for row in got for v in row.values()))


# ---------------------------------------------------------------- Hubbard

def test_criterion_05_three_sites():
    with Gate(5, 5.0) as g:
        g.add("E1(0) = -3", hubbard.solve_three_site(0.0).energies[0] == -3.0)
        grid = np.linspace(-50, 50, 2001)
        res = max(abs(hubbard.characteristic(u, e)) for u in grid for e in hubbard.three_site_energies(u))
        g.add("cubic residual", res < 1e-10, f"{res:.1e} < 1e-10")
        up = hubbard.find_transition(hubbard.LatticeSetting(3, 3))
        g.add("u_p", 12.85 <= up <= 12.87, f"{up:.6f}")
        d100 = hubbard.solve_three_site(100.0).distance
        target = 1 / 3 - 4 / 100 - 6 / 1e4
        g.add("D(100)", abs(d100 - target) < 1e-3, f"{d100:.6f} vs {target:.6f}")
        worst = 0.0
        for u in np.linspace(-50, 12, 311):
            s = hubbard.solve_three_site(u)
            worst = max(worst, abs(s.distance), abs(analyze(s.spectrum).min_value))
        g.add("D = 0 for u <= 12", worst < 1e-12, f"max |D| {worst:.1e}")


def test_criterion_06_superposition():
    with Gate(6, 2.0) as g:
        worst_d = worst_pair = 0.0
        for u in (-20.0, 0.0, 5.0, 20.0, 100.0):
            for phase in (0.0, math.pi / 3, 1.0, 2.5):
                r = hubbard.superposed_state(u, 2 ** -0.5, np.exp(1j * phase) * 2 ** -0.5)
                worst_d = max(worst_d, abs(r.distance))
                worst_pair = max(worst_pair, r.pairing_residual)
        g.add("D = 0", worst_d < 1e-10, f"max |D| {worst_d:.1e}")
        g.add("pairing n+m=1", worst_pair < 1e-10, f"max residual {worst_pair:.1e}")


PRINTED_4SITE = {
    2: (0.981, 0.974, 0.955, 0.029, 0.017, 0.016, 0.015, 0.012),
    3: (0.962, 0.951, 0.913, 0.0583, 0.0333, 0.0314, 0.0291, 0.0224),
    12: (0.826, 0.826, 0.659, 0.253, 0.146, 0.127, 0.095, 0.067),
}


def test_criterion_07_four_sites():
    s = hubbard.LatticeSetting(4, 3)
    d2 = catalog(Setting(3, 8))["D^{(3,8)}_2"]
    with Gate(7, 10.0) as g:
        for u, row in PRINTED_4SITE.items():
            lam = hubbard.ground_point(s, u).spectrum.values
            err = float(np.max(np.abs(np.array(lam) - row)))
            g.add(f"NONs u={u}", err < 1e-3, f"max error {err:.1e}")
        worst = max(abs(d2.value(hubbard.ground_point(s, u).spectrum.values)) for u in np.linspace(2.4, 18.5, 60))
        g.add("D_2 on [2.4, 18.5]", worst < 1e-9, f"max |D_2| {worst:.1e}")
        up = hubbard.find_transition(s, (1.0, 10.0))
        g.add("transition 2.3 +- 0.1", abs(up - 2.3) <= 0.1, f"u_p = {up:.4f}")


def test_criterion_08_five_site_null_result():
    with Gate(8, 60.0) as g:
        native, missing, proxy = [], [], []
        for n in (3, 4, 5):
            for u in (-10.0, -1.0, 1.0, 5.0, 10.0, 50.0):
                spec = hubbard.ground_point(hubbard.LatticeSetting(5, n), u, K="auto").spectrum
                try:
                    native.append(analyze(spec).min_value)
                except UnsupportedTruncationError:
                    missing.append((n, u))
                    rep = analyze(spec, epsilon_threshold=1.0)
                    proxy.append((rep.min_value, rep.bound))
        g.add("evaluated points > 1e-4", all(v > 1e-4 for v in native),
              f"{len(native)} points, min {min(native):.3g}" if native else "none")
        g.add("every point evaluated", not missing,
              f"{len(missing)} of 18 points need a (N,10) catalog; truncated proxy distances all > 1e-4: "
              f"{all(v > 1e-4 for v, _ in proxy)}, above their truncation bound: "
              f"{sum(v > b for v, b in proxy)} of {len(proxy)}")


# ---------------------------------------------------------------- property suites

def test_criterion_09_property_suites():
    rng = np.random.default_rng(SEED)
    cases = 500
    with Gate(9, 60.0) as g:
        settings = [Setting(3, 6), Setting(3, 7), Setting(3, 8), Setting(2, 6), Setting(5, 8)]
        ok = sum(is_member(spectrum_of(random_state(settings[i % 5], rng)), settings[i % 5]) for i in range(cases))
        g.add("polytope membership", ok == cases, f"{ok}/{cases}")

        ok = 0
        for i in range(cases):
            d = 4 + i % 5
            lam = np.array(spectrum_of(random_state(Setting(2, d), rng)).values)
            pairs = lam[: d - d % 2].reshape(-1, 2)
            ok += bool(np.allclose(pairs[:, 0], pairs[:, 1], atol=1e-9) and (d % 2 == 0 or abs(lam[-1]) < 1e-9))
        g.add("N=2 pairwise degeneracy", ok == cases, f"{ok}/{cases}")

        ok = 0
        for i in range(cases):
            st = random_state(Setting(3, 7), rng)
            rho = one_rdm(st)
            k = 1 + i % 6
            q, _ = np.linalg.qr(rng.normal(size=(7, k)) + 1j * rng.normal(size=(7, k)))
            ok += np.trace(q.conj().T @ rho @ q).real <= ky_fan_sum(spectrum_of(st), k) + 1e-10
        g.add("Ky-Fan bound", ok == cases, f"{ok}/{cases}")

        ok = 0
        for i in range(cases):
            s = Setting(3, 6 + i % 3)
            v = random_state(s, rng).to_vector() * rng.uniform(0.01, 0.6)
            v[0] += 1
            ok += structure_bounds(FermionState.from_vector(s, v, normalize=True), "hf").passed
        g.add("HF overlap sandwich", ok == cases, f"{ok}/{cases}")

        ok = done = 0
        while done < cases:
            v = random_state(Setting(3, 6), rng).to_vector() * rng.uniform(0.01, 0.45)
            v[0] += 1
            st = FermionState.from_vector(Setting(3, 6), v, normalize=True)
            try:
                ok += structure_bounds(st, "borland_dennis").passed
            except PreconditionError:
                continue
            done += 1
        g.add("BD stability sandwich", ok == cases, f"{ok}/{cases}")

        ok = 0
        for i in range(cases):
            n, delta = 2 + i % 4, rng.uniform(0.05, 1.0)
            a = harmonium.fermionic_nons(harmonium.derive_params(n, delta=delta), 40).values
            b = harmonium.fermionic_nons(harmonium.derive_params(n, delta=-delta), 40).values
            ok += bool(np.allclose(a, b, atol=1e-10))
        g.add("duality lambda(delta) = lambda(-delta)", ok == cases, f"{ok}/{cases}")

        embeddings = [((2, 5), 1, 0), ((3, 6), 0, 1), ((3, 6), 0, 2), ((3, 7), 0, 1), ((2, 4), 1, 1)]
        ok = 0
        for i in range(cases):
            (n, d), r, s = embeddings[i % len(embeddings)]
            if i % 2:
                lam = spectrum_of(random_state(Setting(n, d), rng)).values
            else:
                x = np.sort(rng.random(d))[::-1]
                x = np.minimum(x * n / x.sum(), 1.0)
                x = x * n / x.sum()
                if x.max() > 1:
                    x = np.full(d, n / d)
                lam = tuple(x)
            ok += is_member(pad_spectrum(lam, r, s), Setting(n + r, d + r + s)) == is_member(lam, Setting(n, d))
        g.add("embedding equivalence", ok == cases, f"{ok}/{cases}")

        ok = 0
        for _ in range(cases):
            v = rng.normal(size=4) + 1j * rng.normal(size=4)
            v /= np.linalg.norm(v)
            ok += check(marginal_triple(np.outer(v, v.conj()))).compatible
        g.add("two-qubit marginal soundness", ok == cases, f"{ok}/{cases}")


def test_criterion_10_fermi_level_hierarchy():
    deltas = (5e-3, 1e-2, 2e-2)
    with Gate(10, 300.0) as g:
        worst = 0.0
        for n in range(4, 9):
            runs = [harmonium.fermionic_nons_mp(n, d, digits=45, count=n + 4) for d in deltas]
            quantities = {
                f"1-lambda_{n - 1}": (lambda lam: 1 - lam[n - 2], 4),
                f"lambda_{n + 1}": (lambda lam: lam[n], 4),
                f"1-lambda_{n - 2}": (lambda lam: 1 - lam[n - 3], 6),
                f"lambda_{n + 3}": (lambda lam: lam[n + 2], 6),
                f"1-lambda_{n - 3}": (lambda lam: 1 - lam[n - 4], 8),
                f"lambda_{n + 4}": (lambda lam: lam[n + 3], 8),
            }
            for name, (f, power) in quantities.items():
                slope = loglog_slope(deltas, [f(lam) for lam in runs])
                worst = max(worst, abs(slope - power))
                g.add(f"N={n} {name}", abs(slope - power) <= 0.2, f"{slope:.3f} vs {power}")
        g.add("all exponents", worst <= 0.2, f"max deviation {worst:.3f}")
        g.checks = [c for c in g.checks if not c[1]] or g.checks[-1:]
