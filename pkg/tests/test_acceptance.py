"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (shown even under
output capture) and then asserts.  Runtime limits are part of each criterion.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from grassquant.bounds import (DetailParams, circle_quantizer_oracle, drf_detailed, drf_exact_circle,
                               drf_lower, heath_approx)
from grassquant.codebook import estimate_distortion, maxmin_design, min_distance, random_codebook
from grassquant.core import Field, SeededRng, chordal_distance_sq, complement, sample_uniform
from grassquant.mimo import MimoConfig, perfect_csit_rate, predict_rate, simulate_rate
from grassquant.volume import (ManifoldParams, volume_bounds, volume_coefficient, volume_main_order,
                               volume_monte_carlo, volume_quadrature_oracle)

C, R = Field.COMPLEX, Field.REAL
G42C = ManifoldParams(4, 2, 2, C)


class Criterion:
    def __init__(self, capsys, label: str, limit_s: float):
        self.capsys, self.label, self.limit = capsys, label, limit_s
        self.failures: list[str] = []
        self.notes: list[str] = []
        self.start = time.perf_counter()

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)

    def note(self, text: str) -> None:
        self.notes.append(text)

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.start
        self.check(elapsed < self.limit, f"runtime {elapsed:.1f}s exceeds {self.limit:.0f}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures[:4] + self.notes)
        with self.capsys.disabled():
            print(f"\n[{status}] {self.label} ({elapsed:.1f}s){': ' + detail if detail else ''}")
        assert not self.failures, self.failures


def test_criterion_01_exact_case_volume(capsys):
    c = Criterion(capsys, "C1 exact-case volume, complex lines", 1.0)
    for n in range(2, 9):
        for d in (0.2, 0.5, 0.9):
            v = volume_main_order(ManifoldParams(n, 1, 1, C), d).value
            c.check(abs(v - d ** (2 * (n - 1))) <= 1e-12, f"n={n} delta={d}: {v}")
    c.finish()


def test_criterion_02_monte_carlo_exact_complex(capsys):
    c = Criterion(capsys, "C2 Monte Carlo vs formula, G(4,2) complex", 60.0)
    N = 10 ** 6
    for k, d in enumerate((0.4, 0.6, 0.8)):
        target = 0.5 * d ** 8
        sigma = math.sqrt(target * (1 - target) / N)
        mc = volume_monte_carlo(G42C, d, N, SeededRng(2024, k)).value
        c.check(abs(mc - target) <= 4 * sigma, f"delta={d}: {(mc - target) / sigma:+.2f} sigma")
        c.note(f"delta={d} z={(mc - target) / sigma:+.2f}")
    c.finish()


def random_configs(count, seed):
    gen = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(gen.integers(2, 9))
        p, q = (int(x) for x in gen.integers(1, n + 1, size=2))
        mp = ManifoldParams(n, p, q, C if gen.random() < 0.5 else R)
        m = mp.normalized()
        if min(m.p, m.n - m.q) > 2 or mp.exponent == 0:
            continue
        out.append((mp, float(gen.uniform(0.02, 1.0))))
    return out


def test_criterion_03_quadrature_vs_formula(capsys):
    c = Criterion(capsys, "C3 quadrature oracle within volume bounds", 120.0)
    exact = 0
    for mp, d in random_configs(50, 7):
        oracle = volume_quadrature_oracle(mp, d).value
        lo, hi = volume_bounds(mp, d)
        c.check(lo.value * (1 - 1e-6) <= oracle <= hi.value * (1 + 1e-6),
                f"{mp} delta={d:.3f}: {oracle} not in [{lo.value}, {hi.value}]")
        if mp.is_exact_case:
            exact += 1
            formula = volume_coefficient(mp) * d ** mp.exponent
            c.check(abs(oracle / formula - 1) <= 1e-6, f"{mp} delta={d:.3f}: exact case off")
    # exact cases are checked on their own as well, so the relative check never goes untested
    for mp in (ManifoldParams(5, 2, 2, C), ManifoldParams(6, 1, 2, R), ManifoldParams(7, 1, 1, C)):
        for d in (0.05, 0.5, 0.95):
            formula = volume_coefficient(mp) * d ** mp.exponent
            c.check(abs(volume_quadrature_oracle(mp, d).value / formula - 1) <= 1e-6, f"{mp} delta={d}")
    c.note(f"{exact} of 50 random configurations are exact cases")
    c.finish()


def test_criterion_04_complement_duality(capsys):
    c = Criterion(capsys, "C4 complement duality, 10^4 pairs", 30.0)
    configs = [(4, 1, 2, R), (4, 2, 2, C), (5, 2, 3, C), (5, 1, 4, R), (6, 2, 2, R),
               (6, 3, 4, C), (7, 1, 5, C), (7, 3, 3, R), (8, 2, 6, C), (8, 4, 5, R)]
    worst = 0.0
    for k, (n, p, q, f) in enumerate(configs):
        gen = np.random.default_rng(k)
        for _ in range(1000):
            P, Q = sample_uniform(n, p, f, gen), sample_uniform(n, q, f, gen)
            worst = max(worst, abs(chordal_distance_sq(P, Q) - chordal_distance_sq(complement(P), complement(Q))))
    c.check(worst <= 1e-9, f"worst deviation {worst:.2e}")
    c.note(f"worst deviation {worst:.2e}")
    c.finish()


def test_criterion_05_random_code_sandwich(capsys):
    c = Criterion(capsys, "C5 detailed bounds sandwich random codebooks, G(4,2) complex", 300.0)
    for K in (16, 64, 256, 1024):
        lo, hi = drf_detailed(G42C, K)
        means = [estimate_distortion(random_codebook(G42C, K, SeededRng(100 + s, K)), samples=100_000,
                                     rng=SeededRng(200 + s, K)).mean for s in range(20)]
        mean = float(np.mean(means))
        sigma = float(np.std(means, ddof=1) / math.sqrt(len(means)))
        c.check(lo <= mean <= hi + 3 * sigma, f"K={K}: {mean} vs [{lo}, {hi}] sigma={sigma:.1e}")
        c.note(f"K={K} [{lo:.4f}, {mean:.4f}, {hi:.4f}]")
    c.finish()


def test_criterion_06_circle_oracle(capsys):
    c = Criterion(capsys, "C6 circle oracle, G(2,1) real", 60.0)
    mp = ManifoldParams(2, 1, 1, R)
    for K in (4, 8, 16, 32, 64):
        oracle = circle_quantizer_oracle(K)
        lo, hi = drf_detailed(mp, K, DetailParams(0.5))
        c.check(lo <= oracle <= hi, f"K={K}: {oracle} not in [{lo}, {hi}]")
        stated = drf_exact_circle(K)
        c.note(f"K={K} closed-form deviation {stated - oracle:+.3e}")
    scaled = 64 ** 2 * circle_quantizer_oracle(64)
    c.check(abs(scaled / (math.pi ** 2 / 12) - 1) <= 0.02, f"K^2 D(64) = {scaled}")
    c.finish()


def test_criterion_07_heath_identity(capsys):
    c = Criterion(capsys, "C7 Heath identity", 1.0)
    for n in range(2, 11):
        mp = ManifoldParams(n, 1, 1, C)
        for j in range(1, 13):
            a, b = heath_approx(n, 2 ** j), drf_lower(mp, 2 ** j).value
            c.check(abs(a - b) <= 1e-15 * abs(a), f"n={n} K=2^{j}: {a} vs {b}")
    c.finish()


def test_criterion_08_maxmin_design(capsys):
    c = Criterion(capsys, "C8 max-min design", 300.0)
    md = min_distance(maxmin_design(ManifoldParams(2, 1, 1, R), 2, rng=SeededRng(8)))
    c.check(md >= 0.999, f"G(2,1) real K=2 min distance {md}")
    designed = estimate_distortion(maxmin_design(G42C, 16, rng=SeededRng(8)), samples=100_000, rng=SeededRng(80))
    rand = [estimate_distortion(random_codebook(G42C, 16, SeededRng(300 + s)), samples=100_000,
                                rng=SeededRng(400 + s)).mean for s in range(20)]
    avg = float(np.mean(rand))
    sigma = math.hypot(designed.stderr, float(np.std(rand, ddof=1)) / math.sqrt(len(rand)))
    c.check(designed.mean + 2 * sigma <= avg, f"designed {designed.mean} vs random {avg}")
    c.note(f"min distance {md:.6f}; designed {designed.mean:.4f} vs random {avg:.4f}")
    c.finish()


def test_criterion_09_mimo_band_consistency(capsys):
    c = Criterion(capsys, "C9 MIMO band consistency, Lt=4 Lr=2 s=2", 600.0)
    mp = ManifoldParams(4, 2, 2, C)
    books = {rfb: maxmin_design(mp, 2 ** rfb, rng=SeededRng(11)) for rfb in (4, 8, 12)}
    for rfb in (4, 8):
        for rho_db in (0.0, 10.0):
            cfg = MimoConfig.from_db(4, 2, 2, rho_db, rfb, trials=100_000, seed=3)
            sim = simulate_rate(cfg, books[rfb])
            lo, hi = predict_rate(cfg)
            ok = lo - 3 * sim.stderr <= sim.mean <= hi + 3 * sim.stderr
            z = (sim.mean - lo) / sim.stderr if sim.mean < lo else max(0.0, (sim.mean - hi) / sim.stderr)
            c.check(ok, f"Rfb={rfb} rho={rho_db:g}dB: {sim.mean:.4f} outside [{lo:.4f}, {hi:.4f}] ({z:+.1f} sigma)")
    for rho_db in (0.0, 10.0):
        gaps = {}
        for rfb in (4, 12):
            cfg = MimoConfig.from_db(4, 2, 2, rho_db, rfb, trials=100_000, seed=3)
            gaps[rfb] = perfect_csit_rate(cfg).mean - simulate_rate(cfg, books[rfb]).mean
        c.check(gaps[12] < gaps[4], f"rho={rho_db:g}dB gap did not shrink: {gaps}")
        c.note(f"rho={rho_db:g}dB gap Rfb=4 {gaps[4]:.4f} -> Rfb=12 {gaps[12]:.4f}")
    c.finish()


CLI_COMMANDS = [
    ["volume", "--n", "6", "--p", "2", "--q", "3", "--field", "real", "--delta", "0.2..1.0/5", "--samples", "50000"],
    ["bounds", "drf", "--n", "8", "--p", "2", "--K", "2..4096*2"],
    ["bounds", "packing", "--n", "4", "--p", "2", "--delta", "0.25,0.5"],
    ["bounds", "rdf", "--n", "4", "--p", "2", "--D", "0.05..0.5/4", "--format", "json"],
    ["mimo", "--lt", "4", "--lr", "2", "--s", "2", "--rfb", "4", "--rho-db", "0,10", "--trials", "20000",
     "--iters", "300", "--restarts", "2", "--threads", "2"],
]


def test_criterion_10_cli_determinism(capsys, tmp_path):
    c = Criterion(capsys, "C10 CLI determinism", 300.0)

    def cli(args):
        r = subprocess.run([sys.executable, "-m", "grassquant.cli", *args], capture_output=True)
        return r.returncode, r.stdout

    cb = str(tmp_path / "cb.json")
    design = ["design", "--n", "4", "--p", "2", "--K", "16", "--iters", "500", "--restarts", "2", "--codebook", cb]
    first_design = cli(design)
    first_book = open(cb, "rb").read()
    second_design = cli(design)
    c.check(first_design == second_design and first_design[0] == 0, "design table differs")
    c.check(open(cb, "rb").read() == first_book, "codebook file differs")
    for args in CLI_COMMANDS + [["distortion", "--codebook", cb, "--samples", "50000"]]:
        a, b = cli(args), cli(args)
        c.check(a == b and a[0] == 0 and a[1], f"{' '.join(args[:2])} output differs or failed")
    c.finish()
