"""Fourier-symbol spectra of the compressible 4x4 block.

After the Hodge split the linear system reduces, per wavenumber magnitude k,
to a real 4x4 matrix A(k) acting on (n_plus, phi_plus, n_minus, phi_minus),
where phi is the scalar potential amplitude of the compressible momentum.
This module builds A(k), its characteristic quartic, exact eigenvalue
branches with spectral projectors, and the closed-form low- and
high-frequency expansions, plus the certified middle-band decay gap and the
dual-path semigroup.

The branch convention: lambda1/lambda2 are the sound pair (complex conjugate
with Im lambda1 >= 0 at small k), lambda3/lambda4 the diffusive pair with
|lambda3| <= |lambda4|.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .model import EquilibriumState

ComplexArray = np.ndarray

DEGENERACY_REL = 1e-6


@dataclass(frozen=True)
class BandPartition:
    """Low/middle/high frequency split (0, eta1], (eta1, K), [K, inf)."""

    eta1: float = 0.1
    K_cut: float = 10.0
    b_mid: float = float("nan")

    def __post_init__(self):
        if not 0.0 < self.eta1 < self.K_cut:
            raise ValueError("need 0 < eta1 < K_cut")

    def band_of(self, k: float) -> str:
        if k <= self.eta1:
            return "low"
        if k >= self.K_cut:
            return "high"
        return "middle"


DEFAULT_PARTITION = BandPartition()


@dataclass(frozen=True)
class CompressibleSymbol:
    k: float
    entries: np.ndarray  # real 4x4


@dataclass(frozen=True)
class SpectralPoint:
    k: float
    lambdas: ComplexArray          # shape (4,), branch-labeled
    projectors: ComplexArray | None  # shape (4,4,4) or None when degenerate
    degenerate_flag: bool
    band: str


def symbol_at(k: float, eq: EquilibriumState) -> CompressibleSymbol:
    """The 4x4 compressible symbol A(k)."""
    p = eq.params
    k = float(k)
    A = np.array([
        [0.0, -k, 0.0, 0.0],
        [eq.beta1 * k + p.sigma_plus * k ** 3, -eq.nu_plus * k ** 2,
         eq.beta2 * k, 0.0],
        [0.0, 0.0, 0.0, -k],
        [eq.beta3 * k, 0.0, eq.beta4 * k + p.sigma_minus * k ** 3,
         -eq.nu_minus * k ** 2],
    ])
    return CompressibleSymbol(k=k, entries=A)


def char_poly_coeffs(k: float, eq: EquilibriumState):
    """Coefficients (c3, c2, c1, c0) of lambda^4 + c3 l^3 + c2 l^2 + c1 l + c0."""
    p = eq.params
    k2 = k * k
    k4 = k2 * k2
    k6 = k4 * k2
    k8 = k4 * k4
    c3 = (eq.nu_plus + eq.nu_minus) * k2
    c2 = (eq.beta1 + eq.beta4) * k2 \
        + (p.sigma_plus + p.sigma_minus + eq.nu_plus * eq.nu_minus) * k4
    c1 = (eq.beta1 * eq.nu_minus + eq.beta4 * eq.nu_plus) * k4 \
        + (eq.nu_plus * p.sigma_minus + eq.nu_minus * p.sigma_plus) * k6
    c0 = (eq.beta1 * p.sigma_minus + eq.beta4 * p.sigma_plus) * k6 \
        + p.sigma_plus * p.sigma_minus * k8
    return (c3, c2, c1, c0)


def low_freq_expansion(k, eq: EquilibriumState) -> ComplexArray:
    """Leading closed-form eigenvalues for small k.

    Sound pair -b1 k^2 +- i c k (error O(k^3)); diffusive pair
    lam3_tilde k^2, lam4_tilde k^2 (error O(k^4)).  When the diffusive
    discriminant is negative the tilde rates are a complex-conjugate pair
    already, so the same formula covers that case.
    """
    k = np.asarray(k, dtype=float)
    k2 = k * k
    lam1 = -eq.b1 * k2 + 1j * eq.c * k
    lam2 = np.conj(lam1)
    lam3 = complex(eq.lam3_tilde) * k2
    lam4 = complex(eq.lam4_tilde) * k2
    return np.stack(np.broadcast_arrays(lam1, lam2, lam3, lam4), axis=-1)


def high_freq_expansion(k, eq: EquilibriumState) -> ComplexArray:
    """Leading eigenvalues for large k.

    The quartic factors, to leading order, into
    (lambda^2 + nu_plus k^2 lambda + sigma_plus k^4) *
    (lambda^2 + nu_minus k^2 lambda + sigma_minus k^4),
    giving per phase lambda = -(nu +- sqrt(nu^2 - 4 sigma))/2 * k^2.
    Returned order: [plus slow, plus fast, minus slow, minus fast].
    """
    k = np.asarray(k, dtype=float)
    k2 = k * k
    out = []
    for nu, sig in ((eq.nu_plus, eq.params.sigma_plus),
                    (eq.nu_minus, eq.params.sigma_minus)):
        root = np.sqrt(complex(nu * nu - 4.0 * sig))
        out.append(-(nu - root) / 2.0 * k2)
        out.append(-(nu + root) / 2.0 * k2)
    return np.stack(np.broadcast_arrays(*out), axis=-1)


def high_freq_rel_err(k: float, eq: EquilibriumState) -> np.ndarray:
    """Deviation of exact roots from the high-frequency formula.

    The formula's remainder is O(1) uniformly in k, so the deviation is
    normalized by the spectral scale max |lambda| (a per-root normalization
    would diverge-test the slow pair against its own O(1) remainder).
    """
    pt = eigen_branches(k, eq)
    approx = high_freq_expansion(k, eq)
    scale = np.abs(pt.lambdas).max()
    return np.array([np.min(np.abs(approx - lam)) / scale
                     for lam in pt.lambdas])


def _quartic_roots(k: float, eq: EquilibriumState) -> ComplexArray:
    """Companion-matrix roots with one Newton polish per root."""
    c3, c2, c1, c0 = char_poly_coeffs(k, eq)
    coeffs = np.array([1.0, c3, c2, c1, c0])
    roots = np.roots(coeffs)
    dcoeffs = np.array([4.0, 3.0 * c3, 2.0 * c2, c1])
    for _ in range(2):
        pv = np.polyval(coeffs, roots)
        dv = np.polyval(dcoeffs, roots)
        step = np.where(dv != 0.0, pv / np.where(dv == 0.0, 1.0, dv), 0.0)
        roots = roots - step
    return roots


def _assign(roots: ComplexArray, reference: ComplexArray) -> ComplexArray:
    """Permute roots to minimize total distance to the reference labels."""
    cost = np.abs(roots[None, :] - reference[:, None])
    _, cols = linear_sum_assignment(cost)
    return roots[cols]


def _heuristic_label(roots: ComplexArray) -> ComplexArray:
    """Label with no reference: conjugate pair first, then by magnitude."""
    imag = np.abs(roots.imag) > 1e-9 * (1.0 + np.abs(roots))
    osc = roots[imag]
    real = roots[~imag]
    if len(osc) == 2:
        osc = osc[np.argsort(-osc.imag)]
        real = real[np.argsort(np.abs(real))]
        return np.concatenate([osc, real])
    if len(osc) == 4:
        # two conjugate pairs: sound pair has the larger |Im|
        order = np.argsort(-np.abs(osc.imag))
        osc = osc[order]
        pair1 = osc[:2][np.argsort(-osc[:2].imag)]
        pair2 = osc[2:][np.argsort(-osc[2:].imag)]
        return np.concatenate([pair1, pair2])
    # all real: sound pair became overdamped; order everything by magnitude
    return roots[np.argsort(np.abs(roots))]


def eigen_branches(k: float, eq: EquilibriumState,
                   prev: SpectralPoint | None = None,
                   part: BandPartition = DEFAULT_PARTITION,
                   force_projectors: bool = False) -> SpectralPoint:
    """Exact eigenvalues, branch labels, and spectral projectors at one k.

    The degenerate flag marks points where the semigroup should switch to
    scaling-and-squaring; force_projectors still builds the (possibly
    ill-conditioned) projectors there, which diagnostic code wants at very
    small k where the diffusive pair gap closes like k^2.
    """
    k = float(k)
    band = part.band_of(k)
    if k == 0.0:
        lams = np.zeros(4, dtype=complex)
        return SpectralPoint(k=k, lambdas=lams, projectors=None,
                             degenerate_flag=True, band=band)

    roots = _quartic_roots(k, eq)
    if prev is not None:
        lams = _assign(roots, prev.lambdas)
    elif band == "low":
        lams = _assign(roots, low_freq_expansion(k, eq))
    elif band == "high":
        lams = _assign(roots, high_freq_expansion(k, eq))
    else:
        lams = _heuristic_label(roots)

    max_abs = np.abs(lams).max()
    gaps = np.abs(lams[:, None] - lams[None, :])
    np.fill_diagonal(gaps, np.inf)
    degenerate = gaps.min() < DEGENERACY_REL * (1.0 + max_abs)

    projectors = None
    if not degenerate or (force_projectors and gaps.min() > 0.0):
        A = symbol_at(k, eq).entries.astype(complex)
        I = np.eye(4, dtype=complex)
        projectors = np.empty((4, 4, 4), dtype=complex)
        for i in range(4):
            P = I
            for j in range(4):
                if j == i:
                    continue
                P = P @ (A - lams[j] * I) / (lams[i] - lams[j])
            projectors[i] = P
    return SpectralPoint(k=k, lambdas=lams, projectors=projectors,
                         degenerate_flag=bool(degenerate), band=band)


def singular_projector_coeffs(eq: EquilibriumState, k: float):
    """1/k coefficients of the diffusive projectors P3, P4 near k.

    Entries of P3/P4 in columns 2 and 4 blow up like a/k; the coefficient a
    is extracted by a two-point fit at k and k/2 (which cancels the regular
    part).  Returns a pair of 4x4 complex coefficient matrices.
    """
    P = {}
    for kk in (k, 0.5 * k):
        pt = eigen_branches(kk, eq, force_projectors=True)
        if pt.projectors is None:
            raise RuntimeError("projectors unavailable (exact degeneracy)")
        P[kk] = pt.projectors
    scale = 1.0 / (2.0 / k - 1.0 / k)
    a3 = (P[0.5 * k][2] - P[k][2]) * scale
    a4 = (P[0.5 * k][3] - P[k][3]) * scale
    return a3, a4


def singular_combination_residual(eq: EquilibriumState, k: float) -> float:
    """Relative size of the beta-weighted combination of 1/k coefficients.

    The combination beta1 * (row 1) + beta2 * (row 3) of P3 and P4 must kill
    the 1/k singularities in columns 2 and 4; returns the worst ratio of the
    combined coefficient to the sum of the individual magnitudes.
    """
    worst = 0.0
    for a in singular_projector_coeffs(eq, k):
        comb = eq.beta1 * a[0] + eq.beta2 * a[2]
        denom = np.abs(eq.beta1 * a[0]) + np.abs(eq.beta2 * a[2])
        for col in (1, 3):
            worst = max(worst, float(np.abs(comb[col]) / denom[col]))
    return worst


def mid_band_gap(eq: EquilibriumState,
                 part: BandPartition = DEFAULT_PARTITION,
                 n_grid: int = 2000, refine_rounds: int = 3) -> float:
    """Certified uniform decay rate on the middle band.

    Samples max Re lambda on a uniform k-grid over [eta1, K] and refines
    locally around the grid maximum; returns b_mid = -max > 0 or raises.
    """
    def worst(ks: np.ndarray) -> np.ndarray:
        lams = _batched_eigenvalues(ks, eq)
        return lams.real.max(axis=1)

    ks = np.linspace(part.eta1, part.K_cut, n_grid)
    vals = worst(ks)
    idx = int(np.argmax(vals))
    lo = ks[max(idx - 1, 0)]
    hi = ks[min(idx + 1, len(ks) - 1)]
    best = vals[idx]
    for _ in range(refine_rounds):
        ks_f = np.linspace(lo, hi, 64)
        vals_f = worst(ks_f)
        j = int(np.argmax(vals_f))
        best = max(best, vals_f[j])
        lo = ks_f[max(j - 1, 0)]
        hi = ks_f[min(j + 1, len(ks_f) - 1)]
    b_mid = -float(best)
    if b_mid <= 0.0:
        raise RuntimeError("middle-band spectral gap is not positive")
    return b_mid


def _batched_eigenvalues(ks: np.ndarray, eq: EquilibriumState) -> ComplexArray:
    """Eigenvalues of A(k) for a whole k-grid at once (unlabeled)."""
    p = eq.params
    ks = np.asarray(ks, dtype=float)
    n = ks.size
    A = np.zeros((n, 4, 4))
    k = ks.ravel()
    A[:, 0, 1] = -k
    A[:, 1, 0] = eq.beta1 * k + p.sigma_plus * k ** 3
    A[:, 1, 1] = -eq.nu_plus * k ** 2
    A[:, 1, 2] = eq.beta2 * k
    A[:, 2, 3] = -k
    A[:, 3, 0] = eq.beta3 * k
    A[:, 3, 2] = eq.beta4 * k + p.sigma_minus * k ** 3
    A[:, 3, 3] = -eq.nu_minus * k ** 2
    return np.linalg.eigvals(A)


def semigroup(k: float, t: float, eq: EquilibriumState,
              part: BandPartition = DEFAULT_PARTITION) -> ComplexArray:
    """e^{t A(k)} by the spectral sum, or scaling-and-squaring near degeneracy."""
    sp = eigen_branches(k, eq, part=part)
    if sp.degenerate_flag:
        return scipy.linalg.expm(t * symbol_at(k, eq).entries).astype(complex)
    out = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        out += np.exp(sp.lambdas[i] * t) * sp.projectors[i]
    return out


def semigroup_batch(ks: np.ndarray, t: float,
                    eq: EquilibriumState) -> ComplexArray:
    """e^{t A(k)} for a grid of k at once, shape (nk, 4, 4).

    Batched eigendecomposition route; modes whose eigenvector matrix is badly
    conditioned fall back to scaling-and-squaring individually.
    """
    p = eq.params
    ks = np.asarray(ks, dtype=float)
    n = ks.size
    A = np.zeros((n, 4, 4))
    A[:, 0, 1] = -ks
    A[:, 1, 0] = eq.beta1 * ks + p.sigma_plus * ks ** 3
    A[:, 1, 1] = -eq.nu_plus * ks ** 2
    A[:, 1, 2] = eq.beta2 * ks
    A[:, 2, 3] = -ks
    A[:, 3, 0] = eq.beta3 * ks
    A[:, 3, 2] = eq.beta4 * ks + p.sigma_minus * ks ** 3
    A[:, 3, 3] = -eq.nu_minus * ks ** 2

    lam, V = np.linalg.eig(A)
    expL = np.exp(lam * t)
    out = np.einsum("nij,nj->nij", V, expL)
    out = np.linalg.solve(np.transpose(V, (0, 2, 1)),
                          np.transpose(out, (0, 2, 1)))
    out = np.transpose(out, (0, 2, 1))

    cond = np.linalg.cond(V)
    bad = ~np.isfinite(cond) | (cond > 1e8) | (ks == 0.0)
    for idx in np.nonzero(bad)[0]:
        out[idx] = scipy.linalg.expm(t * A[idx])
    return out


def spectrum_rows(eq: EquilibriumState,
                  k_grid: np.ndarray,
                  part: BandPartition = DEFAULT_PARTITION) -> list[dict]:
    """Continuity-chained sweep producing one report row per k."""
    rows = []
    prev = None
    for k in k_grid:
        sp = eigen_branches(float(k), eq, prev=prev, part=part)
        if not sp.degenerate_flag:
            prev = sp
        if sp.band == "low":
            ref = low_freq_expansion(k, eq)
            errs = np.abs(sp.lambdas - ref)
        elif sp.band == "high":
            ref = high_freq_expansion(k, eq)
            cost = np.abs(sp.lambdas[:, None] - ref[None, :])
            r, c = linear_sum_assignment(cost)
            errs = np.full(4, np.nan)
            errs[r] = cost[r, c]
        else:
            errs = np.full(4, np.nan)
        row = {"k": float(k), "band": sp.band,
               "degenerate": int(sp.degenerate_flag)}
        for i in range(4):
            row[f"re_lambda{i+1}"] = float(sp.lambdas[i].real)
            row[f"im_lambda{i+1}"] = float(sp.lambdas[i].imag)
        for i in range(4):
            row[f"expansion_err{i+1}"] = float(errs[i])
        rows.append(row)
    return rows
