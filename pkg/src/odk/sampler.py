"""Empirical oracle: sample subgroup and orbit points, measure grid coverage.

Coverage numbers are observations, never proofs.  Window sizes, grid steps
and sample caps are explicit inputs.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from odk import lattice_tools as lt
from odk._accel import maybe_njit, pick
from odk.density import GeneratorFamily
from odk.errors import CapZero, DimensionTooHigh, SingularMatrix, ValidationError
from odk.matrix_group import CommutingGroup

MAX_GRID_DIM = 4
DEFAULT_CAP = 1_000_000


@dataclass(frozen=True)
class CoverageReport:
    window: float
    grid_step: float
    occupancy: float
    dispersion: float
    sample_count: int
    in_window: int
    cells: int
    occupied: int
    dim: int
    center: tuple = ()
    annulus: Optional[tuple] = None
    box_bound: Optional[int] = None
    cap: Optional[int] = None
    seed: Optional[int] = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["K"] = out.pop("box_bound")
        out["center"] = list(self.center)
        out["annulus"] = list(self.annulus) if self.annulus else None
        return out


# -- kernels -------------------------------------------------------------------

def _bin_numba(points, lo, h, ncell):
    n, d = points.shape
    total = ncell ** d
    occ = np.zeros(total, dtype=np.bool_)
    inside = 0
    for i in range(n):
        flat = 0
        ok = True
        for a in range(d):
            c = int(np.floor((points[i, a] - lo[a]) / h))
            if c < 0 or c >= ncell:
                ok = False
                break
            flat = flat * ncell + c
        if ok:
            occ[flat] = True
            inside += 1
    return occ, inside


def _bin_numpy(points, lo, h, ncell):
    d = points.shape[1]
    idx = np.floor((points - lo) / h).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < ncell), axis=1)
    occ = np.zeros(ncell ** d, dtype=bool)
    if ok.any():
        flat = np.ravel_multi_index(tuple(idx[ok].T), (ncell,) * d)
        occ[flat] = True
    return occ, int(ok.sum())


bin_points = pick(maybe_njit(_bin_numba), _bin_numpy)


def _orbit_numba(powers, x, idx):
    # powers: (q, 2K+1, n, n); idx: (M, q) offsets into the power tables
    M, q = idx.shape
    n = x.shape[0]
    out = np.empty((M, n), dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    for t in range(M):
        for a in range(n):
            v[a] = x[a]
        for g in range(q - 1, -1, -1):
            P = powers[g, idx[t, g]]
            for a in range(n):
                acc = 0j
                for b in range(n):
                    acc += P[a, b] * v[b]
                w[a] = acc
            for a in range(n):
                v[a] = w[a]
        for a in range(n):
            out[t, a] = v[a]
    return out


def _orbit_numpy(powers, x, idx):
    v = np.broadcast_to(x, (idx.shape[0], x.shape[0])).astype(np.complex128)
    for g in range(idx.shape[1] - 1, -1, -1):
        v = np.einsum("tab,tb->ta", powers[g][idx[:, g]], v)
    return v


orbit_points = pick(maybe_njit(_orbit_numba), _orbit_numpy)


# -- sampling ------------------------------------------------------------------

def _coefficient_box(p: int, K: int, cap: int, seed: int) -> np.ndarray:
    """All of [-K, K]^p when it fits under cap, else a negation-symmetric random draw."""
    if cap <= 0:
        raise CapZero("cap must be positive")
    side = 2 * K + 1
    if side ** p <= cap:
        axes = [np.arange(-K, K + 1, dtype=np.int64)] * p
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, p)
    rng = np.random.default_rng(seed)
    half = rng.integers(-K, K + 1, size=(max(cap // 2, 1), p), dtype=np.int64)
    return np.concatenate([half, -half])


def sample_subgroup(family: GeneratorFamily, K: int, cap: int = DEFAULT_CAP, seed: int = 0) -> np.ndarray:
    """Points sum_i k_i x_i with |k_i| <= K, as rows of an (N, d) array."""
    fam = family.to_float().real()
    X = fam.matrix()
    coeffs = _coefficient_box(fam.p, K, cap, seed)
    return coeffs.astype(float) @ X.T


def sample_subgroup_windowed(family: GeneratorFamily, K: int, w: float = 1.0, center=None,
                             cap: int = DEFAULT_CAP, seed: int = 0) -> np.ndarray:
    """Subgroup points inside the half-open box [center - w, center + w)^d.

    A basis of d generators spans a full lattice; the remaining generators'
    coefficients range over [-K, K] and for each such offset every lattice
    translate landing in the window is enumerated.  Rank-deficient families
    fall back to :func:`sample_subgroup` clipped to the window.
    """
    if cap <= 0:
        raise CapZero("cap must be positive")
    fam = family.to_float().real()
    X = fam.matrix()
    d = fam.dim
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    basis_idx: list[int] = []
    for j in range(fam.p):
        if lt.numeric_rank(X[:, basis_idx + [j]]) == len(basis_idx) + 1:
            basis_idx.append(j)
    if len(basis_idx) < d:
        pts = sample_subgroup(family, K, cap, seed)
        return pts[_in_box(pts, c, w)]
    extra_idx = [j for j in range(fam.p) if j not in basis_idx]
    B = X[:, basis_idx]
    Binv = np.linalg.inv(B)
    if extra_idx:
        offsets = _coefficient_box(len(extra_idx), K, cap, seed).astype(float) @ X[:, extra_idx].T
    else:
        offsets = np.zeros((1, d))
    half = np.abs(Binv) @ np.full(d, w)
    span = np.ceil(2 * half).astype(np.int64) + 2
    grid = np.stack(np.meshgrid(*[np.arange(s) for s in span], indexing="ij"), -1).reshape(-1, d)
    out = []
    total = 0
    chunk = max(1, 2_000_000 // max(len(grid), 1))
    for start in range(0, len(offsets), chunk):
        off = offsets[start:start + chunk]
        m0 = np.floor((c - off) @ Binv.T - half).astype(np.int64)
        m = m0[:, None, :] + grid[None, :, :]
        pts = off[:, None, :] + m.astype(float) @ B.T
        pts = pts.reshape(-1, d)
        pts = pts[_in_box(pts, c, w)]
        out.append(pts)
        total += len(pts)
        if total >= cap:
            break
    pts = np.concatenate(out) if out else np.zeros((0, d))
    return pts[:cap]


def _in_box(pts: np.ndarray, c: np.ndarray, w: float) -> np.ndarray:
    return np.all((pts >= c - w) & (pts < c + w), axis=1)


def _power_table(A: np.ndarray, K: int) -> np.ndarray:
    n = A.shape[0]
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularMatrix("generator is singular")
    Ainv = np.linalg.inv(A)
    table = np.empty((2 * K + 1, n, n), dtype=complex)
    table[K] = np.eye(n)
    for j in range(1, K + 1):
        table[K + j] = table[K + j - 1] @ A
        table[K - j] = table[K - j + 1] @ Ainv
    return table


def sample_orbit(group: CommutingGroup, x, K: int, cap: int = DEFAULT_CAP, seed: int = 0) -> np.ndarray:
    """Orbit points A_1^{k_1} ... A_q^{k_q} x for |k_i| <= K, as an (N, n) complex array."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    powers = np.stack([_power_table(A, K) for A in group.generators])
    idx = _coefficient_box(group.q, K, cap, seed) + K
    return orbit_points(powers, x, np.ascontiguousarray(idx))


def sample_scalar_orbit_annulus(group: CommutingGroup, x, K: int, r_in: float, r_out: float) -> np.ndarray:
    """Orbit points of a GL(1, C) group with r_in <= |z| <= r_out, all exponents |k_i| <= K.

    Works in log coordinates: only exponent tuples whose log-modulus lands in
    [log r_in, log r_out] are generated, so large K stays cheap.
    """
    if group.n != 1:
        raise ValidationError("annulus enumeration is implemented for GL(1, C) only")
    x = complex(np.atleast_1d(x)[0])
    a = np.array([np.log(abs(A[0, 0])) for A in group.generators])
    phase = np.array([np.angle(A[0, 0]) for A in group.generators])
    lo, hi = np.log(r_in) - np.log(abs(x)), np.log(r_out) - np.log(abs(x))
    if group.q == 1:
        k = np.arange(-K, K + 1)
        keep = (k * a[0] >= lo) & (k * a[0] <= hi)
        ks = k[keep][:, None]
    else:
        head = _coefficient_box(group.q - 1, K, 10 ** 7, 0)
        base = head @ a[:-1]
        last = a[-1]
        if last == 0:
            raise ValidationError("last generator must have |A| != 1 for annulus enumeration")
        k_lo = np.ceil(np.minimum((lo - base) / last, (hi - base) / last))
        k_hi = np.floor(np.maximum((lo - base) / last, (hi - base) / last))
        k_lo, k_hi = np.maximum(k_lo, -K), np.minimum(k_hi, K)
        rows = []
        for h, kl, kh in zip(head, k_lo.astype(int), k_hi.astype(int)):
            for kk in range(kl, kh + 1):
                rows.append(np.append(h, kk))
        ks = np.array(rows, dtype=np.int64).reshape(-1, group.q)
    logmod = ks @ a + np.log(abs(x))
    arg = ks @ phase + np.angle(x)
    return (np.exp(logmod) * np.exp(1j * arg))[:, None]


# -- coverage ------------------------------------------------------------------

def as_real_points(points) -> np.ndarray:
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    if np.iscomplexobj(pts):
        pts = np.concatenate([pts.real, pts.imag], axis=1)
    return np.ascontiguousarray(pts, dtype=float)


def coverage_report(points, w: float, h: float, center=None, annulus=None, dim: Optional[int] = None,
                    box_bound=None, cap=None, seed=None) -> CoverageReport:
    """Grid occupancy and dispersion of ``points`` in the box [center - w, center + w)^d.

    Cells are ceil(2w/h) per axis, indexed by floor division.  With
    ``annulus=(r_in, r_out)`` only cells whose centers satisfy
    r_in <= |c - center| <= r_out are counted.  Dispersion is the largest
    distance from a counted cell center to its nearest sample, capped at the
    window diameter.
    """
    if w <= 0 or h <= 0:
        raise ValidationError("window and grid step must be positive")
    pts = as_real_points(points) if len(points) else np.zeros((0, dim or 1))
    d = pts.shape[1] if len(points) else (dim or 1)
    if d > MAX_GRID_DIM:
        raise DimensionTooHigh(f"coverage grids support d <= {MAX_GRID_DIM}, got {d}")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    ncell = int(np.ceil(2 * w / h - 1e-12))
    lo = c - w
    diameter = 2 * w * np.sqrt(d)

    near = pts[np.all(np.abs(pts - c) < 10 * w, axis=1)] if len(pts) else pts
    occ, inside = bin_points(np.ascontiguousarray(near), lo, float(h), ncell)

    axes = [lo[a] + (np.arange(ncell) + 0.5) * h for a in range(d)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    mask = np.ones(len(centers), dtype=bool)
    if annulus is not None:
        r = np.linalg.norm(centers - c, axis=1)
        mask = (r >= annulus[0]) & (r <= annulus[1])
    counted = int(mask.sum())
    occupied = int((occ & mask).sum())

    window_pts = near[np.all(np.abs(near - c) < w + h, axis=1)] if len(near) else near
    if len(window_pts):
        dist, _ = cKDTree(window_pts).query(centers[mask])
        dispersion = float(min(np.max(dist), diameter)) if counted else 0.0
    else:
        dispersion = float(diameter)

    return CoverageReport(
        window=float(w), grid_step=float(h),
        occupancy=occupied / counted if counted else 0.0,
        dispersion=dispersion, sample_count=int(len(pts)), in_window=int(inside),
        cells=counted, occupied=occupied, dim=d, center=tuple(float(v) for v in c),
        annulus=tuple(annulus) if annulus is not None else None,
        box_bound=box_bound, cap=cap, seed=seed,
    )


def coverage_sweep(family: GeneratorFamily, w: float = 1.0, h: float = 0.1, cap: int = DEFAULT_CAP,
                   K0: int = 4, max_rounds: int = 16, seed: int = 0) -> list[CoverageReport]:
    """Windowed coverage reports for K = K0, 2K0, 4K0, ... until the cap or a plateau.

    Stops once occupancy reaches 1, or is unchanged to 3 decimals over two
    consecutive doublings, or the sample count hits the cap.
    """
    reports: list[CoverageReport] = []
    K = K0
    for _ in range(max_rounds):
        pts = sample_subgroup_windowed(family, K, w, cap=cap, seed=seed)
        rep = coverage_report(pts, w, h, dim=family.real_dim, box_bound=K, cap=cap, seed=seed)
        reports.append(rep)
        if rep.occupancy >= 1.0 or rep.sample_count >= cap:
            break
        if len(reports) >= 3 and len({round(r.occupancy, 3) for r in reports[-3:]}) == 1:
            break
        K *= 2
    return reports


# -- CSV -----------------------------------------------------------------------

def emit_plot_data(points, path) -> None:
    """CSV with header x0..x{d-1}, one row per point, 17 significant digits."""
    pts = as_real_points(points) if len(points) else np.zeros((0, 0))
    d = pts.shape[1] if len(points) else (np.asarray(points).shape[1] if np.ndim(points) == 2 else 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(d)])
        for row in pts:
            writer.writerow([format(float(v), ".17g") for v in row])


def read_plot_data(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    d = len(rows[0])
    if len(rows) == 1:
        return np.zeros((0, d))
    return np.array([[float(v) for v in r] for r in rows[1:]])
