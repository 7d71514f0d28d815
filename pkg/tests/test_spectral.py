"""Spectral certification tests for the compressible 4x4 symbol.

Oracles: numpy's own characteristic polynomial of the assembled matrix
(np.poly), batched eigensolves, and scipy's scaling-and-squaring matrix
exponential as the independent semigroup route.
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from twofluid.model import ModelParams, solve_equilibrium
from twofluid import spectral as sp

SYM_EQ = solve_equilibrium(ModelParams())
ASYM_EQ = solve_equilibrium(
    ModelParams(A_minus=2.0, mu_minus=0.7, sigma_plus=0.02))


class TestSymbol:
    def test_zero_wavenumber(self):
        assert np.all(sp.symbol_at(0.0, SYM_EQ).entries == 0.0)

    def test_symmetric_entries_at_unit_k(self):
        A = sp.symbol_at(1.0, SYM_EQ).entries
        assert A[1, 0] == pytest.approx(2.01, abs=1e-11)
        assert A[1, 1] == pytest.approx(-1.0, abs=1e-12)
        assert A[0, 1] == -1.0
        assert A[2, 3] == -1.0

    def test_trace(self):
        for k in (0.3, 2.0, 17.0):
            A = sp.symbol_at(k, ASYM_EQ).entries
            expected = -(ASYM_EQ.nu_plus + ASYM_EQ.nu_minus) * k * k
            assert np.trace(A) == pytest.approx(expected, rel=1e-13)


class TestCharPoly:
    def test_zero_k(self):
        assert sp.char_poly_coeffs(0.0, SYM_EQ) == (0.0, 0.0, 0.0, 0.0)

    def test_symmetric_unit_k(self):
        c3, c2, c1, c0 = sp.char_poly_coeffs(1.0, SYM_EQ)
        assert c3 == pytest.approx(2.0, rel=1e-12)
        assert c2 == pytest.approx(5.02, rel=1e-12)
        assert c0 == pytest.approx(0.0401, rel=1e-12)

    def test_matches_determinant_expansion(self):
        rng = np.random.default_rng(7)
        for eq in (SYM_EQ, ASYM_EQ):
            for k in rng.uniform(1e-3, 20.0, size=20):
                coeffs = np.poly(sp.symbol_at(k, eq).entries)  # oracle
                mine = (1.0,) + sp.char_poly_coeffs(k, eq)
                scale = np.abs(coeffs) + 1e-30
                assert np.all(np.abs(np.array(mine) - coeffs) / scale < 1e-11)


class TestEigenBranches:
    def test_low_k_example(self):
        pt = sp.eigen_branches(0.01, SYM_EQ, force_projectors=True)
        lam1 = pt.lambdas[0]
        approx = -0.5 * 0.01 ** 2 + 2j * 0.01
        assert abs(lam1 - approx) / abs(lam1) < 1e-3
        assert pt.lambdas[2].real == pytest.approx(-0.010102 * 1e-4, rel=1e-3)
        assert pt.lambdas[3].real == pytest.approx(-0.98990 * 1e-4, rel=1e-3)

    def test_k_zero_degenerate(self):
        pt = sp.eigen_branches(0.0, SYM_EQ)
        assert pt.degenerate_flag
        assert np.all(pt.lambdas == 0.0)

    def test_diffusive_product_vieta(self):
        # lam3*lam4 -> ((beta1 sig_m + beta4 sig_p)/(beta1+beta4)) k^4
        k = 1e-3
        pt = sp.eigen_branches(k, SYM_EQ, force_projectors=True)
        prod = pt.lambdas[2] * pt.lambdas[3]
        assert prod.real == pytest.approx(0.01 * k ** 4, rel=1e-3)

    def test_roots_solve_quartic(self):
        for eq in (SYM_EQ, ASYM_EQ):
            for k in (0.05, 0.7, 3.0, 40.0):
                c3, c2, c1, c0 = sp.char_poly_coeffs(k, eq)
                pt = sp.eigen_branches(k, eq)
                res = np.polyval([1.0, c3, c2, c1, c0], pt.lambdas)
                scale = max(abs(c0), abs(c1), abs(c2), 1.0)
                assert np.abs(res).max() < 1e-9 * scale


class TestExpansions:
    def test_low_freq_symmetric_formula(self):
        lam = sp.low_freq_expansion(0.02, SYM_EQ)
        assert lam[0] == pytest.approx(-0.5 * 4e-4 + 2j * 0.02, rel=1e-12)
        assert lam[1] == np.conj(lam[0])

    def test_low_freq_residual_slopes(self):
        # the diffusive-pair remainder needs asymmetric parameters: with
        # symmetric ones the quartic factors exactly and the residual is
        # pure round-off
        ks = np.logspace(-3, -1, 25)
        errs = np.empty((25, 4))
        for i, k in enumerate(ks):
            pt = sp.eigen_branches(k, ASYM_EQ, force_projectors=True)
            errs[i] = np.abs(pt.lambdas - sp.low_freq_expansion(k, ASYM_EQ))
        slope_osc = np.polyfit(np.log(ks), np.log(errs[:, 0]), 1)[0]
        slope_d3 = np.polyfit(np.log(ks), np.log(errs[:, 2]), 1)[0]
        slope_d4 = np.polyfit(np.log(ks), np.log(errs[:, 3]), 1)[0]
        assert slope_osc == pytest.approx(3.0, abs=0.2)
        assert slope_d3 == pytest.approx(4.0, abs=0.3)
        assert slope_d4 == pytest.approx(4.0, abs=0.3)

    def test_symmetric_diffusive_pair_exact(self):
        # symmetric parameters: quartic factors, tilde rates are exact
        for k in (1e-3, 1e-2, 1e-1):
            pt = sp.eigen_branches(k, SYM_EQ, force_projectors=True)
            approx = sp.low_freq_expansion(k, SYM_EQ)
            for i in (2, 3):
                assert abs(pt.lambdas[i] - approx[i]) \
                    < 1e-10 * abs(approx[i])

    def test_high_freq_five_percent(self):
        # remainder of the k^2-leading formula is O(1); deviation measured
        # against the spectral scale max |lambda|
        for eq in (SYM_EQ, ASYM_EQ):
            for k in (50.0, 100.0):
                assert sp.high_freq_rel_err(k, eq).max() < 0.05

    def test_high_freq_remainder_is_order_one(self):
        # absolute deviation stays bounded as k doubles
        errs = []
        for k in (50.0, 100.0, 200.0, 400.0):
            pt = sp.eigen_branches(k, SYM_EQ)
            approx = sp.high_freq_expansion(k, SYM_EQ)
            errs.append(max(np.min(np.abs(approx - lam))
                            for lam in pt.lambdas))
        assert max(errs) < 3.0 * min(errs) + 1.0

    def test_high_freq_monotone_improvement(self):
        errs = [sp.high_freq_rel_err(k, SYM_EQ).max()
                for k in (20.0, 40.0, 80.0, 160.0)]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_high_freq_stability(self):
        pt = sp.eigen_branches(50.0, SYM_EQ)
        assert np.all(pt.lambdas.real < 0.0)


class TestProjectors:
    def _sample_ks(self):
        rng = np.random.default_rng(11)
        return np.concatenate([
            rng.uniform(0.005, 0.1, 70),
            rng.uniform(0.1, 10.0, 80),
            rng.uniform(10.0, 60.0, 50),
        ])

    def test_projector_algebra_everywhere(self):
        checked = 0
        for eq in (SYM_EQ, ASYM_EQ):
            for k in self._sample_ks():
                pt = sp.eigen_branches(float(k), eq)
                if pt.projectors is None:
                    continue
                P = pt.projectors
                I = np.eye(4)
                assert np.abs(P.sum(axis=0) - I).max() < 1e-8
                A = sp.symbol_at(float(k), eq).entries
                rec = np.einsum("i,ijk->jk", pt.lambdas, P)
                assert np.abs(rec - A).max() < 1e-8 * max(1.0, np.abs(A).max())
                for i in range(4):
                    for j in range(4):
                        prod = P[i] @ P[j]
                        ref = P[i] if i == j else 0.0
                        assert np.abs(prod - ref).max() < 1e-8
                checked += 1
        assert checked >= 200

    def test_conjugate_pair_low_band(self):
        for k in (0.01, 0.05, 0.09):
            pt = sp.eigen_branches(k, SYM_EQ, force_projectors=True)
            assert pt.lambdas[1] == pytest.approx(np.conj(pt.lambdas[0]))
            assert np.abs(pt.projectors[0] - np.conj(pt.projectors[1])).max() \
                < 1e-8

    def test_leading_projector_constants(self):
        # P1 entry (1,1) -> beta1 / (2(beta1+beta4)) as k -> 0
        for eq in (SYM_EQ, ASYM_EQ):
            pt = sp.eigen_branches(1e-3, eq, force_projectors=True)
            lead = eq.beta1 / (2.0 * (eq.beta1 + eq.beta4))
            assert pt.projectors[0][0, 0].real == pytest.approx(lead, rel=1e-2)

    def test_singular_entries_diverge_like_inverse_k(self):
        # (1,2) entries of P3 fit a/k with a -> -beta4/R_disc
        for eq in (SYM_EQ, ASYM_EQ):
            a3, _ = sp.singular_projector_coeffs(eq, 1e-3)
            expected = -eq.beta4 / eq.R_disc
            assert a3[0, 1].real == pytest.approx(expected, rel=1e-2)
            assert abs(a3[0, 1].imag) < 1e-6 * abs(expected)

    def test_singular_combination_cancels(self):
        for eq in (SYM_EQ, ASYM_EQ):
            assert sp.singular_combination_residual(eq, 1e-3) < 1e-6


class TestMidBandGap:
    def test_positive_and_grid_stable(self):
        b1 = sp.mid_band_gap(SYM_EQ, n_grid=2000)
        b2 = sp.mid_band_gap(SYM_EQ, n_grid=4000)
        assert b1 > 0.0
        assert abs(b1 - b2) < 0.01 * b1

    def test_degenerate_parameter_case(self):
        eq = solve_equilibrium(ModelParams(A_minus=1.7))  # sig+=sig-, mu+=mu-
        assert sp.mid_band_gap(eq) > 0.0


class TestSemigroup:
    def test_identity_at_t_zero(self):
        S = sp.semigroup(0.7, 0.0, SYM_EQ)
        assert np.abs(S - np.eye(4)).max() < 1e-12

    def test_dual_path_agreement(self):
        rng = np.random.default_rng(3)
        for eq in (SYM_EQ, ASYM_EQ):
            for _ in range(50):
                k = rng.uniform(1e-3, 20.0)
                t = rng.uniform(1e-3, 10.0)
                S1 = sp.semigroup(k, t, eq)
                S2 = scipy.linalg.expm(t * sp.symbol_at(k, eq).entries)
                assert np.abs(S1 - S2).max() < 1e-8

    def test_low_band_decay_rate(self):
        # oscillatory part (sound-pair projection) decays like e^{-b1 k^2 t}
        k = 0.05
        pt = sp.eigen_branches(k, SYM_EQ, force_projectors=True)
        ts = np.linspace(200.0, 2000.0, 12)
        vals = []
        for t in ts:
            S_osc = (np.exp(pt.lambdas[0] * t) * pt.projectors[0]
                     + np.exp(pt.lambdas[1] * t) * pt.projectors[1])
            vals.append(np.abs(S_osc).max())
        slope = np.polyfit(ts, np.log(vals), 1)[0]
        assert slope == pytest.approx(-SYM_EQ.b1 * k * k, rel=0.05)

    def test_batch_matches_scalar(self):
        ks = np.array([0.02, 0.4, 3.0, 15.0])
        B = sp.semigroup_batch(ks, 1.7, ASYM_EQ)
        for i, k in enumerate(ks):
            S = scipy.linalg.expm(1.7 * sp.symbol_at(k, ASYM_EQ).entries)
            assert np.abs(B[i] - S).max() < 1e-9

    def test_entry_boundedness(self):
        # no entry blow-up on a broad (k, t) sweep
        for k in (0.01, 0.1, 1.0, 10.0):
            for t in (0.1, 1.0, 10.0, 100.0):
                S = sp.semigroup(k, t, SYM_EQ)
                assert np.abs(S).max() < 1.0 + 10.0 * k * t


class TestSpectrumRows:
    def test_sweep_structure(self):
        ks = np.logspace(-2, 1.5, 40)
        rows = sp.spectrum_rows(SYM_EQ, ks)
        assert len(rows) == 40
        bands = {r["band"] for r in rows}
        assert bands == {"low", "middle", "high"}
        low = [r for r in rows if r["band"] == "low"]
        assert all(np.isfinite(r["expansion_err1"]) for r in low)
