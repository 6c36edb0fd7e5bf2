"""Spectrum and resolvent of the assembled per-mode operators.

Eigenvalues come from the Hermitian pencil (G_block, M_block) of each
mode: G_block is the dissipation form, exactly Hermitian and positive
semidefinite by construction, so the computed spectrum is real and clean
down to roundoff. Near-zero values are re-evaluated through the
nonnegative quadrature form on their eigenvectors, which pins kernel
eigenvalues at tiny nonnegative numbers instead of order eps*||G||
jitter.

Resolvent solves reuse the eigendecomposition: with V M-orthonormal,
(G - lam M)^{-1} r = V diag(1/(w - lam)) V^H r, followed by one
refinement pass. Negative modes are conjugate m-reversals of positive
ones; the solve conjugates lam and the data instead of assembling them.

Eigenvalues of mode -n equal those of mode n, so spectral reports for
negative modes are served from the |n| decomposition.
"""

import csv
import dataclasses
import math

import numpy as np
import scipy.linalg

from .fields import norm_Hkp, norm_L2, random_smooth_vector, zeros_vector
from .stokesop import (
    _dissipation_slice,
    expand_slice,
    mode_operator,
    reduce_slice,
)

# slack for sector membership |Im lam| <= Re lam + SECTOR_TOL
SECTOR_TOL = 1e-8


@dataclasses.dataclass
class SpectralEntry:
    n: int
    lam: complex
    residual: float
    in_sector: bool


@dataclasses.dataclass
class SpectralReport:
    """Eigenvalue listing with kernel bookkeeping.

    entries are sorted by mode, then ascending eigenvalue; kernel_dim is
    None unless mode 0 was part of the request.
    """

    entries: list
    kernel_dim: object
    tolerance: float


@dataclasses.dataclass
class ResolventSample:
    lam: complex
    l2_gain: float
    l2_bound: float
    hk_gain: float
    bound_ok: bool


def _eigen(ws, n):
    """Cached eigendecomposition (w, V, lam_max) of mode |n|."""
    op = mode_operator(ws, abs(n))
    if op.eigen is None:
        w, v = scipy.linalg.eigh(op.G_block, op.M_block)
        lam_max = float(np.max(np.abs(w))) if w.size else 0.0
        cfg = ws.config
        small = np.abs(w) < 1e-8 * lam_max
        for i in np.nonzero(small)[0]:
            varr = (op.basis @ v[:, i]).reshape(3, cfg.n_modes_theta, cfg.n_r)
            num = _dissipation_slice(ws, abs(n), varr)
            den = float(np.real(v[:, i].conj() @ (op.M_block @ v[:, i])))
            w[i] = num / den
        order = np.argsort(w, kind="stable")
        op.eigen = (w[order], v[:, order], lam_max)
    return op.eigen


def eigensolve(ws, n, count):
    """The count smallest eigenvalues of mode n, ascending.

    Returns a list of SpectralEntry. The residual is the absolute pencil
    defect ||G y - lam M y||_2 / ||y||_M of each eigenpair; in_sector
    records |Im lam| <= Re lam + SECTOR_TOL (imaginary parts are zero by
    construction of the Hermitian pencil).
    """
    op = mode_operator(ws, abs(n))
    w, v, _ = _eigen(ws, n)
    count = min(int(count), w.size)
    vs = v[:, :count]
    ws_ = w[:count]
    defect = op.G_block @ vs - (op.M_block @ vs) * ws_
    mnorm = np.sqrt(np.abs(np.einsum("ki,ki->i", np.conj(vs), op.M_block @ vs)))
    res = np.linalg.norm(defect, axis=0) / mnorm
    entries = []
    for i in range(count):
        lam = complex(ws_[i], 0.0)
        in_sector = abs(lam.imag) <= lam.real + SECTOR_TOL
        entries.append(SpectralEntry(int(n), lam, float(res[i]), bool(in_sector)))
    return entries


def kernel_dimension(ws, tol=1e-10):
    """Number of mode-0 eigenvalues below tol * max|eigenvalue|."""
    w, _, lam_max = _eigen(ws, 0)
    if lam_max == 0.0:
        return int(w.size)
    return int(np.sum(np.abs(w) < tol * lam_max))


def spectral_report(ws, modes, count, tolerance=SECTOR_TOL):
    """Assemble a SpectralReport over several modes."""
    entries = []
    for n in sorted(modes):
        entries.extend(eigensolve(ws, n, count))
    kd = kernel_dimension(ws) if 0 in set(modes) else None
    return SpectralReport(entries, kd, tolerance)


# ---------------------------------------------------------------------------
# resolvent


def _pencil_solve(ws, n, lam, r):
    """Solve (G - lam M) y = r in mode-n coordinates (any sign of n)."""
    if n < 0:
        return np.conj(_pencil_solve(ws, -n, np.conj(lam), np.conj(r)))
    op = mode_operator(ws, n)
    w, v, lam_max = _eigen(ws, n)
    gap = np.min(np.abs(w - lam))
    if gap < 1e-12 * max(lam_max, 1.0):
        raise RuntimeError(
            "resolvent parameter %s is within %.3e of the mode-%d spectrum"
            % (lam, gap, n)
        )
    y = v @ ((np.conj(v.T) @ r) / (w - lam))
    res = r - (op.G_block @ y - lam * (op.M_block @ y))
    y += v @ ((np.conj(v.T) @ res) / (w - lam))
    return y


def resolve(ws, lam, g):
    """Weak solve of (A - lam) v = g over all stored modes.

    Args:
        ws: Workspace.
        lam: spectral parameter with |Im lam| > Re lam (the sector where
            the form is coercive).
        g: VectorField right-hand side.

    Returns:
        (VectorField, info dict) where info holds the max relative
        algebraic residual over modes and any conditioning warnings.
    """
    lam = complex(lam)
    if not abs(lam.imag) > lam.real:
        raise ValueError(
            "spectral parameter %s lies outside the sector |Im| > Re" % (lam,)
        )
    cfg = ws.config
    out = zeros_vector(cfg)
    worst = 0.0
    warnings = []
    for i_n in range(cfg.n_modes_z):
        n = i_n - cfg.n_z
        r = reduce_slice(ws, n, g.coeffs[:, i_n])
        rnorm = float(np.linalg.norm(r))
        if rnorm == 0.0:
            continue
        y = _pencil_solve(ws, n, lam, r)
        op = mode_operator(ws, abs(n))
        if n < 0:
            defect = np.conj(r) - (
                op.G_block @ np.conj(y) - np.conj(lam) * (op.M_block @ np.conj(y))
            )
        else:
            defect = r - (op.G_block @ y - lam * (op.M_block @ y))
        rel = float(np.linalg.norm(defect)) / rnorm
        worst = max(worst, rel)
        if rel > 1e-8:
            warnings.append("mode %d residual %.3e" % (n, rel))
        out.coeffs[:, i_n] = expand_slice(ws, n, y)
    out.real_flag = False
    return out, {"max_rel_residual": worst, "warnings": warnings}


def resolvent_sweep(ws, lam_grid, rng, tolerance=1e-8):
    """Gain measurements over a grid of spectral parameters.

    One random pole-regular right-hand side is drawn and reused across the
    whole grid so gains are comparable along rays.

    Returns a list of ResolventSample with the L^2 gain, the coercivity
    bound sqrt(2)/|lam|, the H^2 gain, and the bound check.
    """
    grid = list(lam_grid)
    if not grid:
        raise ValueError("resolvent sweep requires a nonempty grid")
    g = random_smooth_vector(ws.config, rng, real=False)
    gl2 = norm_L2(g)
    samples = []
    for lam in grid:
        v, _ = resolve(ws, lam, g)
        l2 = norm_L2(v) / gl2
        bound = math.sqrt(2.0) / abs(lam)
        hk = norm_Hkp(v, 2) / gl2
        samples.append(
            ResolventSample(complex(lam), l2, bound, hk, bool(l2 <= bound + tolerance))
        )
    return samples


def ray_exponents(samples):
    """Log-log slope of hk_gain vs |lam| per ray direction.

    Returns {direction: slope} with directions keyed by rounded unit
    vectors; rays with fewer than two points are skipped.
    """
    groups = {}
    for s in samples:
        d = s.lam / abs(s.lam)
        key = (round(d.real, 12), round(d.imag, 12))
        groups.setdefault(key, []).append((abs(s.lam), s.hk_gain))
    out = {}
    for key, pts in groups.items():
        if len(pts) < 2:
            continue
        pts.sort()
        x = np.log([p[0] for p in pts])
        y = np.log([max(p[1], 1e-300) for p in pts])
        out[key] = float(np.polyfit(x, y, 1)[0])
    return out


# ---------------------------------------------------------------------------
# CSV output


def _fmt(x):
    return repr(float(x))


def write_eigenvalues_csv(path, entries):
    """Write eigenvalue rows: n, re_lambda, im_lambda, residual, in_sector."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "re_lambda", "im_lambda", "residual", "in_sector"])
        for e in entries:
            w.writerow(
                [
                    str(e.n),
                    _fmt(e.lam.real),
                    _fmt(e.lam.imag),
                    _fmt(e.residual),
                    "true" if e.in_sector else "false",
                ]
            )


def write_resolvent_csv(path, samples):
    """Write sweep rows: re_lambda, im_lambda, l2_gain, l2_bound, hk_gain, bound_ok."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["re_lambda", "im_lambda", "l2_gain", "l2_bound", "hk_gain", "bound_ok"]
        )
        for s in samples:
            w.writerow(
                [
                    _fmt(s.lam.real),
                    _fmt(s.lam.imag),
                    _fmt(s.l2_gain),
                    _fmt(s.l2_bound),
                    _fmt(s.hk_gain),
                    "true" if s.bound_ok else "false",
                ]
            )
