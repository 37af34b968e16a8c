import numpy as np
import pytest

from trgc.errors import ConfigError, GenerationError
from trgc.granger import trgc_analytic, trgc_from_series
from trgc.scenarios import (
    LONG_MEMORY_MODEL,
    InferenceConfig,
    ScenarioConfig,
    aggregate,
    downsample,
    gen_additive_noise,
    gen_hidden_cause,
    gen_long_memory,
    gen_mixing,
    gen_unidirectional,
    generate,
    random_var,
    repetition_seeds,
    run_experiment,
    run_grid,
    tally,
    unit_det_matrix,
)
from trgc.structural import MixtureModel, mixture_to_var
from trgc.time_reversal import mixture_symmetry_check
from trgc.var_core import TimeSeries, check_stability, solve_cross_covariances

SMALL = InferenceConfig(order=2, n_boot=100)


class TestConfig:
    def test_defaults(self):
        cfg = ScenarioConfig("noiseless-unidir")
        assert (cfg.T, cfg.p_gen, cfg.sigma, cfg.n_reps) == (2000, 5, 0.2, 300)
        assert ScenarioConfig("hidden-cause").sigma == 0.3
        assert ScenarioConfig("additive-noise").noise_kind == "mixed-autocorrelated"

    @pytest.mark.parametrize("kwargs", [
        dict(scenario="bogus"),
        dict(scenario="additive-noise", gamma=1.5),
        dict(scenario="noiseless-unidir", noise_kind="mixed-white"),
        dict(scenario="additive-noise", tau=2),
        dict(scenario="downsample", tau=0),
        dict(scenario="linear-mixing", gamma=0.5),
        dict(scenario="additive-noise", noise_kind="pink"),
    ])
    def test_invalid_combinations(self, kwargs):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kwargs)

    @pytest.mark.parametrize("scenario, kwargs, truth", [
        ("noiseless-unidir", {}, "x->y"),
        ("linear-mixing", {}, "none"),
        ("hidden-cause", {}, "none"),
        ("additive-noise", {"gamma": 0.5}, "none"),
        ("additive-noise", {"gamma": 0.5, "interaction": True}, "x->y"),
        ("additive-noise", {"gamma": 1.0, "interaction": True}, "none"),
        ("long-memory", {"gamma": 0.5}, "x->y"),
        ("downsample", {"tau": 4}, "x->y"),
    ])
    def test_ground_truth(self, scenario, kwargs, truth):
        assert ScenarioConfig(scenario, **kwargs).ground_truth == truth


class TestBuildingBlocks:
    def test_random_var_respects_mask_and_radius(self, rng):
        mask = np.array([[1.0, 0.0], [1.0, 1.0]])
        for _ in range(20):
            m = random_var(rng, 2, 5, 0.2, mask)
            assert np.all(m.coeffs[:, 0, 1] == 0)
            assert check_stability(m).radius < 0.97
            assert np.all(np.diag(m.resid_cov) <= 1) and m.resid_cov[0, 1] == 0

    def test_random_var_budget(self, rng):
        with pytest.raises(GenerationError, match="3 attempts"):
            random_var(rng, 2, 5, 5.0, max_attempts=3)

    def test_unit_det(self, rng):
        for _ in range(20):
            assert abs(np.linalg.det(unit_det_matrix(rng))) == pytest.approx(1.0, rel=1e-12)

    def test_downsample(self):
        ts = TimeSeries(np.arange(10.0).reshape(5, 2))
        assert downsample(ts, 1).data.tolist() == ts.data.tolist()
        out = downsample(TimeSeries(np.arange(7.0)), 3).data[:, 0]
        assert out.tolist() == [0.0, 3.0, 6.0] and len(out) == int(np.ceil(7 / 3))

    def test_aggregate(self):
        assert aggregate(TimeSeries(np.full((9, 2), 2.5)), 3).data.tolist() == [[2.5, 2.5]] * 3
        np.testing.assert_array_equal(aggregate(TimeSeries(np.arange(7.0)), 2).data[:, 0], [0.5, 2.5, 4.5])
        ts = TimeSeries(np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(aggregate(ts, 1).data, ts.data)


class TestGenerators:
    @pytest.mark.parametrize("scenario, kwargs", [
        ("noiseless-unidir", {}),
        ("linear-mixing", {}),
        ("hidden-cause", {}),
        ("additive-noise", {"gamma": 0.5}),
        ("long-memory", {"gamma": 0.3}),
        ("downsample", {"tau": 2}),
        ("aggregate", {"tau": 3}),
    ])
    def test_shape_and_determinism(self, scenario, kwargs):
        cfg = ScenarioConfig(scenario, T=300, **kwargs)
        a = generate(cfg, np.random.default_rng(1)).data
        b = generate(cfg, np.random.default_rng(1)).data
        assert a.shape == (300, 2)
        np.testing.assert_array_equal(a, b)

    def test_zero_sigma_gives_independent_white_channels(self, rng):
        _, model = gen_unidirectional(ScenarioConfig("noiseless-unidir", sigma_A=0.0), rng)
        np.testing.assert_array_equal(model.coeffs, 0.0)
        assert abs(trgc_analytic(model).D_net) < 1e-12

    def test_unidirectional_draws_have_nonnegative_net_flow(self, rng):
        cfg = ScenarioConfig("noiseless-unidir")
        for _ in range(30):
            _, model = gen_unidirectional(cfg, rng)
            assert np.all(np.triu(model.coeffs, 1) == 0)
            assert trgc_analytic(model).D_net >= -1e-10

    def test_diagonal_mixing_only_rescales_latents(self):
        cfg = ScenarioConfig("linear-mixing", T=400)
        a = gen_mixing(cfg, np.random.default_rng(3), mixing=np.eye(2)).data
        b = gen_mixing(cfg, np.random.default_rng(3), mixing=np.diag([2.0, 1.0])).data
        np.testing.assert_allclose(b[:, 0], 2 * a[:, 0])
        np.testing.assert_array_equal(b[:, 1], a[:, 1])

    def test_mixture_covariances_symmetric_any_det_sign(self, rng):
        latent = random_var(rng, 2, 5, 0.2, np.eye(2))
        for sign in (1.0, -1.0):
            mix = unit_det_matrix(rng) * np.array([[sign], [1.0]])
            var = mixture_to_var(MixtureModel(mix, latent))
            assert np.max(mixture_symmetry_check(solve_cross_covariances(var, 8))) < 1e-10

    def test_hidden_cause_yields_population_net_flow(self):
        # a long simulation of the observed pair shows a non-negligible net score
        cfg = ScenarioConfig("hidden-cause", T=50_000)
        nets = [abs(trgc_from_series(gen_hidden_cause(cfg, np.random.default_rng(s)), 5).forward.F_net)
                for s in range(5)]
        assert max(nets) > 0.01

    def test_additive_noise_extremes(self):
        clean = ScenarioConfig("additive-noise", T=300, gamma=0.0)
        pure = ScenarioConfig("additive-noise", T=300, gamma=1.0)
        z0 = gen_additive_noise(clean, np.random.default_rng(2)).data
        z1 = gen_additive_noise(pure, np.random.default_rng(2)).data
        assert not np.allclose(z0, z1)

    def test_long_memory_model(self):
        np.testing.assert_array_equal(LONG_MEMORY_MODEL.coeffs[0], [[0.95, 0.0], [1.0, 0.5]])
        np.testing.assert_array_equal(LONG_MEMORY_MODEL.resid_cov, np.eye(2))
        assert trgc_analytic(LONG_MEMORY_MODEL).D_net > 0
        z0 = gen_long_memory(0.0, np.random.default_rng(5), T=200).data
        z1 = gen_long_memory(0.5, np.random.default_rng(5), T=200).data
        np.testing.assert_array_equal(z0[:, 1], z1[:, 1])


class TestRunner:
    def test_zero_reps_is_empty(self):
        res = run_experiment(ScenarioConfig("noiseless-unidir", n_reps=0), inference=SMALL)
        assert res.rows() == [] and res.n_valid == 0

    def test_same_seed_identical(self):
        cfg = ScenarioConfig("linear-mixing", T=300, n_reps=4, seed=5)
        a = run_experiment(cfg, inference=SMALL).to_dict()
        b = run_experiment(cfg, inference=SMALL).to_dict()
        assert a == b

    def test_parallel_matches_serial(self):
        cfg = ScenarioConfig("noiseless-unidir", T=300, n_reps=4, seed=6)
        a = run_experiment(cfg, inference=SMALL, workers=1).to_dict()
        b = run_experiment(cfg, inference=SMALL, workers=2).to_dict()
        assert a == b

    def test_seeds_depend_on_rep(self):
        assert repetition_seeds(0, 0) != repetition_seeds(0, 1)
        assert repetition_seeds(0, 3) == repetition_seeds(0, 3)

    def test_rates_bounded(self):
        cfg = ScenarioConfig("noiseless-unidir", T=300, n_reps=6)
        res = run_experiment(cfg, ["standard-gc", "net-gc", "diff-trgc"], SMALL)
        for row in res.rows():
            assert 0 <= row["tpr"] <= 1 and 0 <= row["fpr"] <= 1 and row["n"] == 6

    def test_failures_excluded_from_denominator(self):
        cfg = ScenarioConfig("noiseless-unidir", T=300, n_reps=3)
        records = [
            {"rep": 0, "seeds": [0, 0], "order": 2, "decisions": {"net-gc": "x->y"}, "error": None},
            {"rep": 1, "seeds": [0, 0], "order": None, "decisions": {}, "error": "rank-deficient: x"},
            {"rep": 2, "seeds": [0, 0], "order": 2, "decisions": {"net-gc": "y->x"}, "error": None},
        ]
        res = tally(cfg, ["net-gc"], records)
        assert (res.n_valid, res.n_failed) == (2, 1)
        assert res.tpr("net-gc") == 0.5 and res.fpr("net-gc") == 0.5

    def test_detection_counts_as_fp_without_truth(self):
        cfg = ScenarioConfig("linear-mixing", n_reps=2)
        records = [
            {"rep": 0, "seeds": [0, 0], "order": 1, "decisions": {"standard-gc": "both"}, "error": None},
            {"rep": 1, "seeds": [0, 0], "order": 1, "decisions": {"standard-gc": "none"}, "error": None},
        ]
        res = tally(cfg, ["standard-gc"], records)
        assert res.fp["standard-gc"] == 1 and res.tp["standard-gc"] == 0

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            run_experiment(ScenarioConfig("linear-mixing", n_reps=1), ["telepathy"], SMALL)

    def test_grid_over_gamma(self):
        cfg = ScenarioConfig("additive-noise", T=300, n_reps=2)
        results = run_grid(cfg, {"gamma": [0.0, 0.5, 0.9]}, ["diff-trgc"], SMALL)
        assert [r.condition for r in results] == ["gamma=0.0", "gamma=0.5", "gamma=0.9"]

    @pytest.mark.slow
    def test_independent_channels_standard_gc_size(self):
        cfg = ScenarioConfig("additive-noise", gamma=0.0, n_reps=100, seed=77)
        res = run_experiment(cfg, ["standard-gc"], InferenceConfig(order="bic"))
        assert abs(res.fpr("standard-gc") - 0.10) <= 0.04
