import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr

from ptfprg.gaussops import hypervar, is_attenuated
from ptfprg.hermite import HermitePoly, random_poly
from ptfprg.hyperlab import (approx_eq_mult, carbery_wright_check,
                             derivative_ratio_experiment, derivative_sequence,
                             hypercon_check, zoom_ratio_check,
                             local_hyperconc_experiment,
                             retention_attrition_experiment)
from ptfprg.statgrid import PolySampler

RNG = np.random.default_rng(60)


class TestApproxEq:
    def test_both_zero(self):
        assert approx_eq_mult(0.0, 0.0, 0.5)

    def test_sign_mismatch(self):
        assert not approx_eq_mult(1.0, -1.0, 10.0)

    def test_band(self):
        assert approx_eq_mult(1.0, math.e, 1.0)
        assert not approx_eq_mult(1.0, math.e * 1.01, 1.0)


class TestHyperconCheck:
    def test_constant_holds_for_any_eta(self):
        g = HermitePoly.constant(2, 3.0)
        rep = hypercon_check(g, q=4.0, eta=0.0, trials=500, master_seed=1)
        assert rep.holds and rep.deviation_norm == pytest.approx(0.0, abs=1e-12)

    def test_two_route_crosscheck(self):
        # near-constant polynomial: the certificate route and the Monte Carlo
        # route must agree
        g = HermitePoly(2, {(0, 0): 5.0, (1, 0): 0.05, (0, 1): -0.04})
        q = 4.0
        mc = hypercon_check(g, q=q, eta=0.1, trials=20_000, master_seed=2)
        exact = hypercon_check(g, q=q, eta=0.1,
                               exact_amplification=math.sqrt(q - 1.0))
        assert exact.exact_route and exact.holds
        assert mc.holds
        assert mc.deviation_norm <= exact.deviation_norm + 4 * mc.stderr

    def test_hyper_markov_tail(self):
        g = HermitePoly(2, {(0, 0): 4.0, (1, 1): 0.1, (1, 0): 0.15})
        q = 4.0
        R = math.sqrt(q - 1.0)
        mu = g.mean()
        eta = math.sqrt(hypervar(g, R)) / abs(mu)
        X = RNG.standard_normal((40_000, 2))
        dev = np.abs(g.eval_batch(X) - mu)
        for t in (0.3, 0.6, 1.2):
            frac = float((dev > t * abs(mu)).mean())
            err = math.sqrt(max(frac * (1 - frac), 1e-12) / len(dev))
            assert frac <= (eta / t) ** q + 4 * err

    def test_q_must_exceed_two(self):
        with pytest.raises(ValueError):
            hypercon_check(HermitePoly.constant(1, 1.0), q=2.0, eta=0.1)


class TestAttenuationChain:
    def test_attenuated_implies_hyperconcentrated(self):
        # certificate at (R, theta) gives the (1 + R^2/2, sqrt(theta)) bound
        g = HermitePoly.constant(2, 3.0) + random_poly(2, 2, RNG).scale(0.02)
        R, theta = 2.0, 1.0
        rep = is_attenuated(g, 0, R, theta)
        assert rep.attenuated
        theta_eff = rep.hypervar_above_k / rep.sq2norm
        hc = hypercon_check(g, q=1 + R * R / 2, eta=math.sqrt(theta_eff),
                            trials=20_000, master_seed=3)
        assert hc.holds

    def test_multiplicative_tail(self):
        # Pr[g not within e^{+-gamma} of mu] <= (2 sqrt(theta)/gamma)^{R^2/2+1}
        g = HermitePoly.constant(2, 3.0) + random_poly(2, 2, RNG).scale(0.01)
        R = 2.0
        rep = is_attenuated(g, 0, R, 1.0)
        theta = rep.hypervar_above_k / rep.sq2norm
        mu = g.mean()
        X = RNG.standard_normal((40_000, 2))
        vals = g.eval_batch(X)
        for gamma in (0.25, 0.5, 1.0):
            bad = ~np.array([approx_eq_mult(v, mu, gamma) for v in vals[:4000]])
            frac = float(bad.mean())
            err = math.sqrt(max(frac * (1 - frac), 1e-12) / 4000)
            bound = (2 * math.sqrt(theta) / gamma) ** (R * R / 2 + 1)
            assert frac <= bound + 4 * err


class TestLocalHyperconc:
    def test_lambda_zero_never_fails(self):
        p = random_poly(2, 2, RNG)
        rep = local_hyperconc_experiment(PolySampler(p), R=2.0, eps=0.3,
                                         beta=0.1, lam=0.0, x_trials=50,
                                         master_seed=4)
        assert rep["failure_fraction"] == 0.0

    def test_linear_base_threshold_behavior(self):
        # for p = h_1 the zoom weights are exact: level-1 weight lam, mean
        # sqrt(1-lam) x; failure iff R^2 lam > eps^2 ((1-lam) x^2 + lam)
        lam, R, eps = 0.01, 2.0, 0.3
        p = HermitePoly(1, {(1,): 1.0})
        rep = local_hyperconc_experiment(PolySampler(p), R=R, eps=eps,
                                         beta=0.5, lam=lam, x_trials=4000,
                                         master_seed=5)
        thr2 = (R * R * lam / (eps * eps) - lam) / (1 - lam)
        want = 2 * ndtr(math.sqrt(max(thr2, 0.0))) - 1 if thr2 > 0 else 0.0
        err = math.sqrt(0.25 / 4000)
        assert abs(rep["failure_fraction"] - want) <= 4 * err + 1e-6

    def test_exact_mode_requires_dirac(self):
        p = random_poly(2, 2, RNG)
        s = PolySampler(p, i=1, lam=0.3, R=2.0, rng=np.random.default_rng(0))
        with pytest.raises(ValueError):
            local_hyperconc_experiment(s, R=2.0, eps=0.3, beta=0.1, lam=0.01,
                                       x_trials=10, inner_mode="exact")

    def test_nice_distribution_mode_runs(self):
        p = random_poly(2, 2, RNG)
        s = PolySampler(p, i=1, lam=0.3, R=2.0, rng=np.random.default_rng(1))
        rep = local_hyperconc_experiment(s, R=2.0, eps=0.5, beta=0.5,
                                         lam=1e-5, x_trials=20,
                                         inner_mode="mc", inner_trials=30,
                                         master_seed=6)
        assert 0.0 <= rep["failure_fraction"] <= 1.0


class TestDerivativeSequence:
    def test_h2_frozen(self):
        g = HermitePoly(1, {(2,): 1.0})
        x = np.array([1.5])
        ds = derivative_sequence(PolySampler(g), x,
                                 [np.array([1.0]), np.array([1.0])])
        assert ds.values[0] == pytest.approx(((1.5**2 - 1) / math.sqrt(2)) ** 2)
        assert ds.values[1] == pytest.approx(2 * 1.5**2)
        assert ds.values[2] == pytest.approx(2.0)

    def test_beyond_degree_is_zero(self):
        g = random_poly(2, 2, RNG)
        ys = [RNG.standard_normal(2) for _ in range(3)]
        ds = derivative_sequence(PolySampler(g), RNG.standard_normal(2), ys)
        assert ds.values[3] == 0.0

    def test_ratio_sweep(self):
        p = random_poly(3, 3, RNG)
        rep = derivative_ratio_experiment(PolySampler(p), eps=0.2, trials=200,
                                          master_seed=7)
        assert rep["passing_C"] is not None and rep["passing_C"] <= 8.0


class TestRetentionAttrition:
    def test_degree_k_dirac_any_lambda(self):
        p = random_poly(2, 2, RNG)
        rep = retention_attrition_experiment(PolySampler(p), k=2, S=40.0,
                                             lam=0.35, beta_prime=0.2,
                                             trials=400, master_seed=8)
        assert rep["retention_passing_C"] is not None

    def test_tiny_lambda_attrition_trivial(self):
        p = random_poly(2, 2, RNG)
        rep = retention_attrition_experiment(PolySampler(p), k=2, S=10.0,
                                             lam=1e-9, beta_prime=0.2,
                                             trials=200, master_seed=9)
        assert rep["attrition_fractions"][1.0] == 0.0

    def test_constant_sampler_never_fails(self):
        p = HermitePoly.constant(2, 1.0)
        rep = retention_attrition_experiment(PolySampler(p), k=1, S=5.0,
                                             lam=0.5, beta_prime=0.3,
                                             trials=100, master_seed=10)
        assert rep["retention_fractions"][1.0] == 0.0
        assert rep["attrition_fractions"][1.0] == 0.0

    def test_precondition_enforced(self):
        p = HermitePoly(1, {(3,): 1.0})  # all weight above level 1 at S = 5
        with pytest.raises(ValueError):
            retention_attrition_experiment(PolySampler(p), k=1, S=5.0,
                                           lam=0.5, beta_prime=0.3, trials=10)


class TestCarberyWright:
    def test_linear_exact_oracle(self):
        g = HermitePoly(2, {(1, 0): 1.0})
        rep = carbery_wright_check(g, 0.5, trials=40_000, master_seed=11)
        want = 2 * ndtr(0.25) - 1  # Pr[|N(0,1)| < (0.5/2)^1]
        assert abs(rep["fractions"][2.0] - want) <= 4 * rep["stderr"]

    def test_delta_one_trivial(self):
        g = random_poly(2, 2, RNG)
        rep = carbery_wright_check(g, 1.0, trials=2000, master_seed=12)
        assert rep["passing_C"] is not None

    def test_product_of_coordinates(self):
        g = HermitePoly(2, {(1, 1): 1.0})
        rep = carbery_wright_check(g, 0.3, trials=40_000, master_seed=13)
        assert rep["passing_C"] is not None and rep["passing_C"] <= 8.0


class TestZoomRatio:
    def test_lambda_zero_no_failures(self):
        g = random_poly(2, 3, RNG)
        rep = zoom_ratio_check(g, lam=0.0, beta=0.1, trials=2000,
                                master_seed=14)
        assert rep["fractions"][1.0]["fraction"] == 0.0

    def test_linear_quadrature_oracle(self):
        # for linear g the joint law of (g(x), zoom value) is bivariate
        # normal; integrate the per-center failure probability exactly
        a0, a1 = 0.4, 1.0
        lam, beta, C = 0.04, 0.2, 2.0
        g = HermitePoly(1, {(0,): a0, (1,): a1})
        nu = C * 1.0 * math.sqrt(lam) / beta

        def fail_prob(u):
            gx = a0 + a1 * u
            mean = a0 + a1 * math.sqrt(1 - lam) * u
            sd = a1 * math.sqrt(lam)
            if gx > 0:
                lo, hi = math.exp(-nu) * gx, math.exp(nu) * gx
            else:
                lo, hi = math.exp(nu) * gx, math.exp(-nu) * gx
            return 1.0 - (ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd))

        want, _ = quad(lambda u: fail_prob(u) * math.exp(-u * u / 2)
                       / math.sqrt(2 * math.pi), -8, 8, limit=200)
        rep = zoom_ratio_check(g, lam=lam, beta=beta, trials=40_000,
                                master_seed=15)
        got = rep["fractions"][C]["fraction"]
        assert abs(got - want) <= 4 * rep["stderr"] + 1e-6

    def test_random_degree3_sweep(self):
        g = random_poly(3, 3, RNG)
        rep = zoom_ratio_check(g, lam=1e-4, beta=0.1, trials=20_000,
                                master_seed=16)
        assert rep["passing_C"] is not None and rep["passing_C"] <= 8.0
