import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from marlab.errors import DataError
from marlab.mar import (ErrorDist, MarModel, estimate, identify,
                        min_root_modulus, pseudo_residual_path,
                        select_pseudo_order, simulate, student_t_logpdf)
from marlab.series import reverse


class TestLogpdf:
    def test_standard_cauchy_mode(self):
        assert student_t_logpdf(0.0, 1.0, 1.0) == pytest.approx(np.log(1 / np.pi))

    def test_symmetry(self, rng):
        x = rng.normal(size=20) * 5
        assert np.allclose(student_t_logpdf(x, 2.3, 1.7),
                           student_t_logpdf(-x, 2.3, 1.7))

    def test_value_against_formula(self):
        # t density with 2 dof at x=1: Gamma(1.5) / (Gamma(1) sqrt(2 pi) 1.5^1.5)
        expected = np.log(gamma_fn(1.5) / (gamma_fn(1.0) * np.sqrt(2 * np.pi)
                                           * 1.5 ** 1.5))
        assert student_t_logpdf(1.0, 2.0, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_integrates_to_one(self):
        for dof, scale in ((1.0, 1.0), (2.0, 3.0), (7.5, 0.4)):
            total, _ = quad(lambda x: np.exp(student_t_logpdf(x, dof, scale)),
                            -np.inf, np.inf)
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_scale_shift(self, rng):
        x = rng.normal(size=9)
        assert np.allclose(student_t_logpdf(x, 3.0, 2.0),
                           student_t_logpdf(x / 2.0, 3.0, 1.0) - np.log(2.0))


class TestRootModulus:
    def test_degree_zero(self):
        assert min_root_modulus([]) == np.inf
        assert min_root_modulus([0.0]) == np.inf

    def test_matches_numpy_roots(self, rng):
        for _ in range(50):
            k = rng.integers(1, 5)
            c = rng.uniform(-0.9, 0.9, size=k)
            poly = np.concatenate([-c[::-1], [1.0]])
            expected = np.abs(np.roots(poly)).min()
            assert min_root_modulus(c) == pytest.approx(expected, rel=1e-9)

    def test_model_rejects_nonstationary(self):
        with pytest.raises(DataError, match="nonstationary"):
            MarModel(phi=[1.01], psi=[], dist=ErrorDist.student_t(2.0))
        with pytest.raises(DataError, match="nonstationary"):
            MarModel(phi=[], psi=[0.6, 0.6], dist=ErrorDist.student_t(2.0))


class TestErrorDist:
    def test_cauchy_dof_fixed(self):
        with pytest.raises(DataError):
            ErrorDist("cauchy", 2.0, 1.0)
        assert ErrorDist.cauchy(0.5).dof == 1.0

    def test_positivity(self):
        with pytest.raises(DataError):
            ErrorDist.student_t(-1.0)


class TestSimulate:
    def test_deterministic_given_seed(self, noncausal_t2):
        a = simulate(noncausal_t2, 100, seed=5)
        b = simulate(noncausal_t2, 100, seed=5)
        c = simulate(noncausal_t2, 100, seed=6)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_white_noise_no_autocorrelation(self):
        m = MarModel(phi=[], psi=[], dist=ErrorDist.student_t(5.0))
        y = simulate(m, 4000, seed=11).values
        r1 = np.corrcoef(y[:-1], y[1:])[0, 1]
        assert abs(r1) < 3 / np.sqrt(4000)

    def test_mirror_of_causal_is_noncausal(self, rng):
        # same error draws, time-reversed, swap the roles of lag and lead
        dist = ErrorDist.student_t(2.0)
        mc = MarModel(phi=[0.8], psi=[], dist=dist)
        mn = MarModel(phi=[], psi=[0.8], dist=dist)
        eps = dist.sample(rng, 300 + 2 * 200)
        y_causal = simulate(mc, 300, errors=eps[::-1].copy())
        y_noncausal = simulate(mn, 300, errors=eps)
        rev = reverse(y_causal).values
        assert np.corrcoef(rev, y_noncausal.values)[0, 1] > 0.99
        assert np.max(np.abs(rev - y_noncausal.values)) < 1e-10 * np.abs(rev).max()

    def test_cauchy_bubbles_rise_then_crash(self, cauchy_noncausal):
        # after the peak of each long path, a drawdown of most of the peak
        # height follows within a few steps
        hits = 0
        for seed in range(20):
            y = simulate(cauchy_noncausal, 1000, seed=seed).values
            k = int(np.argmax(np.abs(y)))
            peak = abs(y[k])
            tail = np.abs(y[k:k + 8])
            if peak > 10 and tail.min() < 0.5 * peak:
                hits += 1
        assert hits >= 16

    def test_intercept_added(self):
        m = MarModel(phi=[], psi=[], dist=ErrorDist.student_t(3.0), intercept=7.0)
        y = simulate(m, 2000, seed=3).values
        assert abs(np.median(y) - 7.0) < 0.5

    def test_burn_too_small(self, noncausal_t2):
        with pytest.raises(DataError):
            simulate(noncausal_t2, 50, seed=1, burn=10)


class TestPseudoResiduals:
    def test_white_noise_identity(self, rng):
        y = rng.normal(size=30)
        eps, u = pseudo_residual_path(y, 0, 0, [], [])
        assert np.array_equal(eps, y)
        assert np.array_equal(u, y)

    def test_zero_coefficients_shift_only(self, rng):
        y = rng.normal(size=30)
        eps, u = pseudo_residual_path(y, 1, 0, [0.0], [])
        assert np.array_equal(u, y[1:])
        eps2, u2 = pseudo_residual_path(y, 0, 1, [], [0.0])
        assert np.array_equal(eps2, y[:-1])
        assert np.array_equal(u2, y)

    def test_recovers_simulated_errors(self, mixed_t2):
        y, eps_true = simulate(mixed_t2, 400, seed=21, burn=2000,
                               return_errors=True)
        eps, u = pseudo_residual_path(y.values, 1, 1,
                                      mixed_t2.phi, mixed_t2.psi)
        # eps covers t = r+1 .. T-s of the kept window
        target = eps_true[1:-1]
        assert eps.shape == target.shape
        assert np.max(np.abs(eps - target)) < 1e-6

    def test_lengths(self, rng):
        y = rng.normal(size=50)
        eps, u = pseudo_residual_path(y, 2, 1, [0.1, 0.1], [0.2])
        assert u.size == 48 and eps.size == 47

    def test_too_short(self):
        with pytest.raises(DataError):
            pseudo_residual_path(np.arange(3.0), 2, 1, [0.1, 0.1], [0.2])


class TestOrderSelection:
    def test_strong_ar1_picks_one(self):
        m = MarModel(phi=[0.9], psi=[], dist=ErrorDist.student_t(3.0))
        hits = 0
        for seed in range(30):
            y = simulate(m, 400, seed=seed).values
            if select_pseudo_order(y, 4).p == 1:
                hits += 1
        assert hits >= 27

    def test_mixed_has_order_two(self, mixed_t2):
        hits = 0
        for seed in range(30):
            y = simulate(mixed_t2, 400, seed=100 + seed).values
            if select_pseudo_order(y, 4).p == 2:
                hits += 1
        assert hits >= 24

    def test_white_noise_rarely_dynamic(self):
        m = MarModel(phi=[], psi=[], dist=ErrorDist.student_t(2.0))
        dynamic = 0
        n = 150
        for seed in range(n):
            y = simulate(m, 400, seed=2000 + seed).values
            if select_pseudo_order(y, 4, allow_zero=True).p >= 1:
                dynamic += 1
        # around 7 percent under this criterion
        assert 0.01 <= dynamic / n <= 0.16

    def test_zero_needs_permission(self, rng):
        y = rng.standard_t(2, size=300)
        sel = select_pseudo_order(y, 4, allow_zero=False)
        assert sel.p >= 1
        assert sel.p_min == 1

    def test_criterion_values_exposed(self, rng):
        y = rng.standard_t(3, size=200)
        sel = select_pseudo_order(y, 3, allow_zero=True)
        assert sel.values.size == 4
        assert sel.value_at(sel.p) == sel.values.min()


class TestEstimate:
    def test_noncausal_recovery(self, noncausal_t2):
        psis = []
        for seed in range(25):
            y = simulate(noncausal_t2, 400, seed=3000 + seed)
            fit = estimate(y, 0, 1)
            psis.append(fit.model.psi[0])
        assert abs(np.median(psis) - 0.8) < 0.03

    def test_stationarity_never_violated(self, mixed_t2):
        for seed in range(10):
            y = simulate(mixed_t2, 300, seed=4000 + seed)
            fit = estimate(y, 1, 1)
            assert min_root_modulus(fit.model.phi) > 1 + 1e-6
            assert min_root_modulus(fit.model.psi) > 1 + 1e-6

    def test_scale_equivariance(self, noncausal_t2):
        y = simulate(noncausal_t2, 400, seed=5001)
        f1 = estimate(y.values, 0, 1)
        f2 = estimate(100.0 * y.values, 0, 1)
        assert f2.model.psi[0] == pytest.approx(f1.model.psi[0], abs=2e-3)
        assert f2.model.dist.dof == pytest.approx(f1.model.dist.dof, rel=0.02)
        assert f2.model.dist.scale == pytest.approx(100 * f1.model.dist.scale,
                                                    rel=0.02)

    def test_cauchy_dof_fixed(self, cauchy_noncausal):
        y = simulate(cauchy_noncausal, 300, seed=8)
        fit = estimate(y, 0, 1, dist_kind="cauchy")
        assert fit.model.dist.dof == 1.0
        assert np.isnan(fit.std_errors[1])   # dof entry carries no uncertainty

    def test_std_errors_sane(self, noncausal_t2):
        y = simulate(noncausal_t2, 400, seed=77)
        fit = estimate(y, 0, 1)
        assert fit.std_errors is not None
        se_psi = fit.std_errors[0]
        assert 0.001 < se_psi < 0.2

    def test_intercept_stored(self, noncausal_t2):
        y = simulate(noncausal_t2, 300, seed=12)
        shifted = y.values + 50.0
        fit = estimate(shifted, 0, 1)
        assert fit.model.intercept == pytest.approx(np.mean(shifted))

    def test_white_noise_fit(self, rng):
        y = rng.standard_t(2.0, size=300) * 2.0
        fit = estimate(y, 0, 0)
        assert 1.0 < fit.model.dist.dof < 4.0
        assert 1.4 < fit.model.dist.scale < 2.8

    def test_loglik_matches_residual_density(self, noncausal_t2):
        y = simulate(noncausal_t2, 300, seed=9)
        fit = estimate(y, 0, 1)
        ll = fit.model.dist.logpdf(fit.residuals).sum()
        assert fit.loglik == pytest.approx(ll, abs=1e-8)


class TestTimeReversal:
    def test_duality_of_likelihood(self, mixed_t2):
        for seed in (1, 2, 3):
            y = simulate(mixed_t2, 300, seed=seed)
            f = estimate(y.values, 1, 1)
            g = estimate(y.values[::-1], 1, 1)
            assert g.loglik == pytest.approx(f.loglik, abs=1e-4)
            assert g.model.phi[0] == pytest.approx(f.model.psi[0], abs=5e-3)
            assert g.model.psi[0] == pytest.approx(f.model.phi[0], abs=5e-3)

    def test_reversed_noncausal_identifies_causal(self, noncausal_t2):
        hits = 0
        for seed in range(10):
            y = simulate(noncausal_t2, 400, seed=6000 + seed)
            fit = identify(reverse(y))
            if (fit.r, fit.s) == (1, 0):
                hits += 1
        assert hits >= 8


class TestIdentify:
    def test_noncausal_identified(self, noncausal_t2):
        hits = 0
        for seed in range(20):
            y = simulate(noncausal_t2, 400, seed=7000 + seed)
            fit = identify(y)
            if (fit.r, fit.s) == (0, 1):
                hits += 1
        assert hits >= 17

    def test_best_split_has_max_loglik(self, mixed_t2):
        y = simulate(mixed_t2, 350, seed=31)
        sel_p = select_pseudo_order(y.values, 4).p
        fit = identify(y)
        assert fit.p_used == sel_p
        for s in range(fit.p_used + 1):
            other = estimate(y.values, fit.p_used - s, s)
            assert fit.loglik >= other.loglik - 1e-6 * abs(fit.loglik)

    def test_white_noise_gives_mar00(self):
        m = MarModel(phi=[], psi=[], dist=ErrorDist.student_t(2.0))
        found = 0
        for seed in range(10):
            y = simulate(m, 400, seed=8000 + seed)
            fit = identify(y, allow_zero=True)
            if (fit.r, fit.s, fit.p_used) == (0, 0, 0):
                found += 1
        assert found >= 7

    def test_dict_export(self, noncausal_t2):
        y = simulate(noncausal_t2, 300, seed=15)
        doc = identify(y).to_dict()
        for key in ("r", "s", "phi", "psi", "dof", "scale", "loglik",
                    "std_errors", "p_used", "sample_length"):
            assert key in doc
