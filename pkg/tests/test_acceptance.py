"""Acceptance criteria, one PASS/FAIL line each, repeated in the pytest terminal summary."""

import cmath
import json
import math
import time

import numpy as np
import pytest

from odk.certifier import certify_somewhere_dense, upgrade_to_dense
from odk.cli import main
from odk.density import basis_extraction_check, decide_density, decide_density_exact, decide_density_numeric
from odk.matrix_group import CommutingGroup, build_log_pool, matrix_exp, principal_log
from odk.sampler import coverage_report, coverage_sweep, sample_orbit, sample_scalar_orbit_annulus

from conftest import ACCEPTANCE_LINES, GROUPS, load_corpus
from test_density import _unimodular
from test_matrix_group import random_commuting_pair

CORPUS = load_corpus()
R2 = math.sqrt(2)
GL1 = CommutingGroup(([[cmath.exp(R2 + 1j)]], [[cmath.exp(1 + 1j * R2)]]))
ANNULUS = (0.5, 1.5)

def report(key, ok, detail):
    line = f"[acceptance {key}] {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def searches():
    """Certificate searches shared by criteria 6, 7 and 8."""
    out = {"gl1": certify_somewhere_dense(GL1, 1.0)}
    for lam in (2.0, 1j):
        out[f"gl1*{lam}"] = certify_somewhere_dense(GL1, lam)
    for name in ("scalar_two", "rotation_sqrt2"):
        group = CommutingGroup.from_json(json.loads((GROUPS / f"{name}.json").read_text()))
        out[name] = certify_somewhere_dense(group, 1.0)
    return out


def test_1_exact_corpus():
    misses, slowest = [], 0.0
    for name, fam, expected, s in CORPUS:
        t0 = time.perf_counter()
        v = decide_density_exact(fam)
        slowest = max(slowest, time.perf_counter() - t0)
        got_s = list(v.relation.s) if v.relation else None
        if v.classification != expected or (s is not None and got_s != s):
            misses.append(name)
    ok = len(CORPUS) >= 12 and not misses and slowest < 1.0
    assert report(1, ok, f"{len(CORPUS) - len(misses)}/{len(CORPUS)} families match, "
                         f"slowest decision {slowest * 1e3:.1f} ms; misses {misses}")


def test_2_exact_numeric_agreement():
    pairs = {"CERTIFIED_DENSE": "DENSE_UP_TO_HEIGHT", "NOT_DENSE": "NOT_DENSE_NUMERIC"}
    misses = []
    for name, fam, _, _ in CORPUS:
        exact = decide_density_exact(fam).outcome.value
        numeric = decide_density_numeric(fam.to_float(), 10 ** 4).outcome.value
        if pairs[exact] != numeric:
            misses.append(f"{name}: {exact} vs {numeric}")
    assert report(2, not misses, f"{len(CORPUS) - len(misses)}/{len(CORPUS)} agree at height 1e4; {misses}")


def test_3_sampling_consistency():
    t0 = time.perf_counter()
    bad, lines = [], []
    for name, fam, expected, _ in CORPUS:
        reps = coverage_sweep(fam, w=1.0, h=0.1, cap=10 ** 6)
        final = reps[-1]
        if expected == "dense":
            ok = final.occupancy >= 0.95
        else:
            plateau = len(reps) >= 3 and len({round(r.occupancy, 3) for r in reps[-3:]}) == 1
            ok = plateau and final.occupancy <= 0.5
        lines.append(f"{name}={final.occupancy:.3f}@K{final.box_bound}")
        if not ok:
            bad.append(name)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    assert report(3, ok, f"{len(CORPUS) - len(bad)}/{len(CORPUS)} consistent in {elapsed:.1f} s; "
                         f"failures {bad}; " + ", ".join(lines))


def test_4_matrix_analysis():
    rng = np.random.default_rng(2024)
    worst_rt, worst_res, worst_comm = 0.0, 0.0, 0.0
    for _ in range(100):
        pair = random_commuting_pair(rng, n=3, cond_max=1e3)
        for A in pair:
            worst_rt = max(worst_rt, np.linalg.norm(matrix_exp(principal_log(A)) - A) / np.linalg.norm(A))
        pool = build_log_pool(CommutingGroup(tuple(pair)), 1, 1)
        worst_res = max(worst_res, max(c.residual for c in pool))
        mats = np.stack([c.matrix for c in pool])
        ab = np.einsum("iab,jbc->ijac", mats, mats)
        worst_comm = max(worst_comm, float(np.abs(ab - ab.transpose(1, 0, 2, 3)).max()))
    ok = worst_rt <= 1e-10 and worst_res <= 1e-8 and worst_comm <= 1e-8
    assert report(4, ok, f"roundtrip {worst_rt:.2e} (<=1e-10), pool residual {worst_res:.2e} (<=1e-8), "
                         f"commutator {worst_comm:.2e} (<=1e-8)")


def test_5_basis_extraction():
    checked, bad = 0, []
    for name, fam, expected, _ in CORPUS:
        real = fam.real()
        if expected != "dense" or real.p != real.dim + 1:
            continue
        for f in (fam, fam.to_float()):
            checked += 1
            if not basis_extraction_check(f, decide_density(f)):
                bad.append(name)
    assert report(5, checked > 0 and not bad,
                  f"{checked - len(bad)}/{checked} dense d+1 families (exact and float) pass; {bad}")


def test_6_end_to_end(searches, tmp_path, capsys):
    cert = searches["gl1"]
    has_shift = cert.found and any(
        abs(c.matrix[0, 0] - 2j * math.pi) < 1e-9 for c in cert.candidates)
    path = tmp_path / "cert.json"
    if cert.found:
        path.write_text(json.dumps(upgrade_to_dense(cert, True).to_json()))
    verify_code = main(["verify", "--input", str(path)]) if cert.found else None
    controls = [main(["certify", "--input", str(GROUPS / f"{g}.json"), "--point", "1"])
                for g in ("scalar_two", "rotation_sqrt2")]
    capsys.readouterr()

    pts = sample_orbit(GL1, 1.0, 200)
    occ = coverage_report(pts, ANNULUS[1], 0.05, annulus=ANNULUS, box_bound=200).occupancy
    in_annulus = int(np.sum((np.abs(pts) >= ANNULUS[0]) & (np.abs(pts) <= ANNULUS[1])))

    ok = has_shift and verify_code == 0 and controls == [2, 2] and occ >= 0.9
    assert report(6, ok, f"certificate with 2*pi*i shift: {has_shift}; verify exit {verify_code}; "
                         f"controls exit {controls}; annulus occupancy at K=200 {occ:.4f} (>=0.9) "
                         f"from {in_annulus} orbit points in the annulus")


def test_6_supplement_annulus_occupancy_larger_box():
    """Diagnostic only: the orbit does fill the annulus once enough exponents are enumerated."""
    pts = sample_scalar_orbit_annulus(GL1, 1.0, 10_000, *ANNULUS)
    occ = coverage_report(pts, ANNULUS[1], 0.05, annulus=ANNULUS, box_bound=10_000).occupancy
    assert report("6-supplement", occ >= 0.9, f"diagnostic, annulus occupancy at K=10000 {occ:.4f} (>=0.9)")


def test_7_invariance(searches):
    rng = np.random.default_rng(7)
    flips = []
    for name, fam, expected, _ in CORPUS:
        for _ in range(20):
            M = _unimodular(fam.p, rng) if fam.p > 1 else np.array([[-1]])
            moved = fam.transformed(M.tolist())
            if decide_density(moved).classification != expected:
                flips.append(f"{name}/exact")
            if decide_density(moved.to_float(), 10 ** 4).classification != expected:
                flips.append(f"{name}/float")
    scaled = [searches[f"gl1*{lam}"].found for lam in (2.0, 1j)]
    ok = not flips and all(scaled)
    assert report(7, ok, f"{20 * len(CORPUS)} unimodular changes x 2 modes, {len(flips)} flips {flips[:5]}; "
                         f"certificate under x -> 2x, ix: {scaled}")


def test_8_property_d_path_consistency(searches):
    total = sum(len(r.examined) for r in searches.values())
    bad = [(k, t.indices) for k, r in searches.items() for t in r.examined if not t.consistent]
    assert report(8, total > 0 and not bad, f"{total} tuples examined, {len(bad)} disagreements")
