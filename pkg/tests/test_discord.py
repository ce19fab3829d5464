"""Gaussian discord: conventions, symplectic eigenvalues and the closed form
checked against an extended-precision re-evaluation."""

import math

import mpmath as mp
import numpy as np
import pytest

from antisync.discord import (CovMatrix4, HALF_VACUUM, UNIT_VACUUM, entropy_f,
                              discord_from_v6, gaussian_discord, reduce,
                              rescale_to_unit_vacuum, symplectic_eigenvalues,
                              symplectic_eigenvalues_direct)
from antisync.errors import DegenerateCovarianceError, ParameterError


def rotation2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def single_mode_block(rng):
    """Random physical one-mode covariance (unit vacuum): thermal, squeezed,
    rotated."""
    t = 1.0 + 2.0 * rng.random()      # 2 n + 1 >= 1
    r = 0.8 * rng.random()
    R = rotation2(rng.random() * math.pi)
    return t * R @ np.diag([math.exp(2 * r), math.exp(-2 * r)]) @ R.T


def tms_thermal(r, n1, n2):
    """Two-mode squeezed thermal state, unit-vacuum convention."""
    t1, t2 = 2 * n1 + 1.0, 2 * n2 + 1.0
    ch, sh = math.cosh(r), math.sinh(r)
    a = t1 * ch ** 2 + t2 * sh ** 2
    b = t1 * sh ** 2 + t2 * ch ** 2
    c = (t1 + t2) * ch * sh
    Z = np.diag([1.0, -1.0])
    V = np.zeros((4, 4))
    V[:2, :2] = a * np.eye(2)
    V[2:, 2:] = b * np.eye(2)
    V[:2, 2:] = c * Z
    V[2:, :2] = c * Z
    return V


def discord_mp(V, base=2, dps=50):
    """Extended-precision evaluation of the same closed forms (mpmath)."""
    with mp.workdps(dps):
        M = mp.matrix([[mp.mpf(float(x)) for x in row] for row in V])
        det2 = lambda m: m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        alpha = det2(M[:2, :2])
        beta = det2(M[2:, 2:])
        gamma = det2(M[:2, 2:])
        delta = mp.det(M)
        if gamma == 0:
            return 0.0
        sigma = alpha + beta + 2 * gamma
        root = mp.sqrt(sigma ** 2 - 4 * delta)
        nu_p = mp.sqrt((sigma + root) / 2)
        nu_m = mp.sqrt((sigma - root) / 2)
        g2 = gamma ** 2
        use_first = False
        if abs(beta - 1) > mp.mpf("1e-30"):
            denom = (beta + 1) * g2 * (alpha + delta)
            if denom != 0 and (delta - alpha * beta) ** 2 / denom <= 1:
                use_first = True
        if use_first:
            eps = ((2 * g2 + (beta - 1) * (delta - alpha)
                    + 2 * abs(gamma) * mp.sqrt(g2 + (beta - 1) * (delta - alpha)))
                   / (beta - 1) ** 2)
        else:
            eps = ((alpha * beta - g2 + delta
                    - mp.sqrt(g2 ** 2 + (delta - alpha * beta) ** 2
                              - 2 * g2 * (delta + alpha * beta))) / (2 * beta))

        def f(x):
            if x <= 1:
                return mp.mpf(0)
            return (((x + 1) / 2) * mp.log((x + 1) / 2)
                    - ((x - 1) / 2) * mp.log((x - 1) / 2)) / mp.log(base)

        d = f(mp.sqrt(beta)) - f(nu_m) - f(nu_p) + f(mp.sqrt(eps))
        return float(d)


class TestReduceAndRescale:
    def test_identity_reduction(self):
        cm = reduce(0.5 * np.eye(6))
        assert cm.convention == HALF_VACUUM
        assert np.array_equal(cm.matrix, 0.5 * np.eye(4))

    def test_block_diagonal_blocks_survive(self):
        V6 = np.diag([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        cm = reduce(V6)
        assert np.array_equal(cm.matrix, np.diag([1.0, 2.0, 3.0, 4.0]))

    def test_reduction_is_the_slice(self):
        rng = np.random.default_rng(3)
        B = rng.normal(size=(6, 6))
        V6 = B @ B.T
        assert np.array_equal(reduce(V6).matrix, V6[:4, :4])

    def test_rescale_doubles_and_tags(self):
        cm = rescale_to_unit_vacuum(reduce(0.5 * np.eye(6)))
        assert cm.convention == UNIT_VACUUM
        assert np.array_equal(cm.matrix, np.eye(4))

    def test_double_rescale_rejected(self):
        cm = rescale_to_unit_vacuum(reduce(0.5 * np.eye(6)))
        with pytest.raises(ParameterError, match="already"):
            rescale_to_unit_vacuum(cm)

    def test_rescale_preserves_physicality(self):
        V = tms_thermal(0.6, 0.2, 0.1)
        halved = CovMatrix4(matrix=0.5 * V, convention=HALF_VACUUM)
        nu_p, nu_m = symplectic_eigenvalues(rescale_to_unit_vacuum(halved))
        assert nu_m >= 1.0 - 1e-12

    def test_asymmetric_rejected(self):
        M = np.eye(4)
        M[0, 1] = 0.5
        with pytest.raises(ParameterError, match="symmetric"):
            CovMatrix4(matrix=M, convention=UNIT_VACUUM)


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        assert symplectic_eigenvalues(np.eye(4)) == pytest.approx((1.0, 1.0))

    def test_thermal_times_vacuum(self):
        nu = symplectic_eigenvalues(np.diag([3.0, 3.0, 1.0, 1.0]))
        assert nu == pytest.approx((3.0, 1.0))

    def test_pure_two_mode_squeezed(self):
        # the closed form loses half its digits at the degenerate pure-state
        # point (sqrt of a cancellation), hence the 1e-6 tolerance
        V = tms_thermal(1.0, 0.0, 0.0)  # pure state: det V = 1
        assert np.linalg.det(V) == pytest.approx(1.0, rel=1e-10)
        nu_p, nu_m = symplectic_eigenvalues(V)
        assert nu_p == pytest.approx(1.0, abs=1e-6)
        assert nu_m == pytest.approx(1.0, abs=1e-6)

    def test_agrees_with_direct_eigenvalue_route(self):
        # spectrally separated occupancies: the closed form is accurate only
        # away from the nu_+ == nu_- degeneracy (equal-occupancy states)
        rng = np.random.default_rng(17)
        for _ in range(20):
            n1 = 0.3 + 0.7 * rng.random()
            n2 = 1.8 + 1.2 * rng.random()
            V = tms_thermal(1.2 * rng.random(), n1, n2)
            S = np.zeros((4, 4))
            S[:2, :2] = rotation2(rng.random() * math.pi)
            S[2:, 2:] = rotation2(rng.random() * math.pi)
            V = S @ V @ S.T
            formula = symplectic_eigenvalues(V)
            direct = symplectic_eigenvalues_direct(V)
            assert formula == pytest.approx(direct, rel=1e-10)

    def test_degenerate_input_raises(self):
        # indefinite symmetric matrix with Sigma_+^2 < 4 det V (garbage in,
        # clear error out)
        V = np.array([[-0.5287, -0.0353, -0.7626, -0.5124],
                      [-0.0353, 0.6438, 0.839, -0.7894],
                      [-0.7626, 0.839, 1.3961, -0.3609],
                      [-0.5124, -0.7894, -0.3609, -0.3609]])
        with pytest.raises(DegenerateCovarianceError):
            symplectic_eigenvalues(V)


class TestEntropyFunction:
    def test_boundary_value(self):
        assert entropy_f(1.0) == 0.0
        assert entropy_f(1.0 - 1e-12) == 0.0

    def test_monotone_increasing(self):
        xs = np.linspace(1.0, 10.0, 50)
        vals = [entropy_f(x) for x in xs]
        assert np.all(np.diff(vals) > 0)

    def test_thermal_entropy_value(self):
        # x = 2 n + 1 gives the bosonic thermal entropy; n = 1 in bits:
        # (n+1) log2(n+1) - n log2 n = 2
        assert entropy_f(3.0) == pytest.approx(2.0, rel=1e-12)

    def test_below_domain_raises(self):
        with pytest.raises(DegenerateCovarianceError):
            entropy_f(0.5)


class TestGaussianDiscord:
    def test_vacuum_product_is_zero(self):
        assert gaussian_discord(np.eye(4)) == 0.0

    def test_product_states_are_zero(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            V = np.zeros((4, 4))
            V[:2, :2] = single_mode_block(rng)
            V[2:, 2:] = single_mode_block(rng)
            assert gaussian_discord(V) <= 1e-10

    def test_against_extended_precision_oracle(self):
        # thermal occupancies bounded away from the pure state, where the
        # float64 closed form is well conditioned
        cases = [(r, n1, n2)
                 for r in (0.1, 0.3, 0.5, 0.8, 1.2)
                 for (n1, n2) in ((0.05, 0.02), (0.5, 0.0), (0.3, 1.5), (2.0, 0.7))]
        assert len(cases) == 20
        for r, n1, n2 in cases:
            V = tms_thermal(r, n1, n2)
            got = gaussian_discord(V)
            want = discord_mp(V)
            assert got == pytest.approx(want, abs=1e-8), (r, n1, n2)

    def test_never_below_minus_1e10_and_clamped(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            V = tms_thermal(1.0 * rng.random(), 2 * rng.random(), 2 * rng.random())
            S = np.zeros((4, 4))
            S[:2, :2] = rotation2(rng.random() * math.pi)
            S[2:, 2:] = rotation2(rng.random() * math.pi)
            d = gaussian_discord(S @ V @ S.T)
            assert d >= 0.0  # negative rounding noise is clamped to zero

    def test_local_rotation_invariance(self):
        rng = np.random.default_rng(37)
        V = tms_thermal(0.7, 0.4, 0.1)
        base = gaussian_discord(V)
        for _ in range(10):
            S = np.zeros((4, 4))
            S[:2, :2] = rotation2(rng.random() * math.pi)
            S[2:, 2:] = rotation2(rng.random() * math.pi)
            assert gaussian_discord(S @ V @ S.T) == pytest.approx(base, abs=1e-10)

    def test_convention_bridge(self):
        V = tms_thermal(0.5, 0.2, 0.0)
        via_tagged = gaussian_discord(CovMatrix4(matrix=0.5 * V, convention=HALF_VACUUM))
        direct = gaussian_discord(V)
        assert via_tagged == pytest.approx(direct, rel=1e-12)

    def test_discord_from_v6_matches_manual_path(self):
        from conftest import make_series  # noqa: F401  (shared fixture import path)
        V6 = np.eye(6)
        V6[:4, :4] = 0.5 * tms_thermal(0.4, 0.1, 0.0)
        manual = gaussian_discord(rescale_to_unit_vacuum(reduce(V6)))
        assert discord_from_v6(V6) == pytest.approx(manual, rel=1e-12)

    def test_log_base_e_scales_by_ln2(self):
        V = tms_thermal(0.6, 0.3, 0.0)
        bits = gaussian_discord(V, base=2.0)
        nats = gaussian_discord(V, base=math.e)
        assert nats == pytest.approx(bits * math.log(2.0), rel=1e-10)

    def test_strict_sign_differs_on_correlated_states(self):
        V = tms_thermal(0.6, 0.3, 0.0)
        default = gaussian_discord(V)
        strict = gaussian_discord(V, strict_paper_sign=True)
        assert strict < default  # differs by 2 f(sqrt(eps)) > 0

    def test_correlated_state_has_positive_discord(self):
        assert gaussian_discord(tms_thermal(0.5, 0.0, 0.0)) > 0.1
