import math

import numpy as np
import pytest

from conserva.dataset import generate
from conserva.extract.candidate import SPURIOUS, TRUE_DISCOVERY, Candidate
from conserva.extract.expression import from_prefix
from conserva.systems import get_system, true_invariant
from conserva.verify import (
    GateConfig,
    adjudicate,
    apply_gate,
    chebyshev_false_positive_bound,
    constancy,
    diversity_rho,
    evaluate_on_trajectories,
    ground_truth_constancy,
    noise_growth_exponent,
    rank_correlation,
    restart_success_probability,
)

ENERGY = "add mul mul 0.5 k square x1 div square x2 mul 2.0 m"


def _cand(prefix, source="gp"):
    return Candidate(expression=from_prefix(prefix), source=source)


def test_constancy_values():
    """Should average std over |mean| across trajectories"""
    assert constancy([np.ones(5), 2 * np.ones(5)]) == 0.0
    assert constancy([np.array([1.0, 3.0])]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        constancy([np.array([1.0])])
    with pytest.raises(ValueError):
        constancy([])


def test_diversity_rho_values():
    """Should compare the spread of means with the mean within-trajectory std"""
    rho = diversity_rho([np.array([0.0, 2.0]), np.array([10.0, 12.0])])
    assert rho == pytest.approx(5.0)
    assert diversity_rho([np.ones(4), np.ones(4)]) == 0.0
    with pytest.raises(ValueError):
        diversity_rho([np.ones(4)])


def test_gate_config_validation():
    """Should reject a non-positive tau and a negative rho_min"""
    with pytest.raises(ValueError):
        GateConfig(tau=0.0)
    with pytest.raises(ValueError):
        GateConfig(rho_min=-1.0)
    cfg = GateConfig.from_dict({"tau": 0.05}, max_complexity=12)
    assert cfg.tau == 0.05 and cfg.rho_min == 10.0 and cfg.max_complexity == 12


def test_parameters_bind_per_trajectory(mass_spring_ds):
    """Should bind parameter names to each trajectory's own values"""
    test = mass_spring_ds.split("test")
    series, invalid = evaluate_on_trajectories(from_prefix("k"), test)
    assert invalid == 0.0
    assert [s[0] for s in series] == pytest.approx([t.params["k"] for t in test])


def test_gate_accepts_energy(mass_spring_ds):
    """Should accept the energy and explain every rejection"""
    test = mass_spring_ds.split("test")
    cands = [_cand(ENERGY), _cand("1.0"), _cand("x1"), _cand("log x1")]
    accepted = apply_gate(cands, test, GateConfig())
    assert accepted == [cands[0]]
    assert cands[0].reason == "accepted" and cands[0].test_constancy < 1e-4
    assert cands[1].reason.startswith("diversity")
    assert cands[2].reason.startswith("constancy")
    assert cands[3].reason.startswith("invalid")


def test_gate_complexity_cap(mass_spring_ds):
    """Should reject candidates above the complexity cap before evaluating them"""
    cand = _cand(ENERGY)
    assert apply_gate([cand], mass_spring_ds.split("test"), GateConfig(max_complexity=5)) == []
    assert cand.reason.startswith("complexity")
    assert cand.test_constancy is None


def test_gate_threaded_matches_serial(mass_spring_ds):
    """Should give the same decisions with a worker pool"""
    test = mass_spring_ds.split("test")
    serial = [_cand(p) for p in (ENERGY, "x1", "square x2")]
    pooled = [_cand(p) for p in (ENERGY, "x1", "square x2")]
    apply_gate(serial, test)
    apply_gate(pooled, test, jobs=3)
    assert [c.reason for c in serial] == [c.reason for c in pooled]


def test_rank_correlation():
    """Should be Spearman's rho with nan for constant inputs"""
    assert rank_correlation([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
    assert rank_correlation([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert rank_correlation([1, 4, 9, 16], [1, 2, 3, 4]) == pytest.approx(1.0)
    assert math.isnan(rank_correlation([1, 1, 1], [1, 2, 3]))


def test_adjudicate_monotone_transforms(mass_spring_ds):
    """Should count the energy and any monotone function of it as true discoveries"""
    test = mass_spring_ds.split("test")
    cands = [_cand(ENERGY), _cand(f"exp {ENERGY}"), _cand(f"sub 0.0 {ENERGY}")]
    accepted = apply_gate(cands, test, GateConfig())
    assert len(accepted) == 3
    assert adjudicate(accepted, "mass_spring", test) == [TRUE_DISCOVERY] * 3
    assert cands[2].rank_correlation == pytest.approx(-1.0)


def test_adjudicate_without_law(lorenz_ds):
    """Should call everything spurious on systems without a known law"""
    cand = _cand("x1")
    assert adjudicate([cand], get_system("lorenz"), lorenz_ds.split("test")) == [SPURIOUS]
    assert cand.verdict == SPURIOUS


@pytest.mark.parametrize("system, limit", [
    ("mass_spring", 1e-6),
    ("coupled_springs", 1e-6),
    ("henon_heiles", 1e-6),
    ("lotka_volterra", 5e-6),
])
def test_ground_truth_constancy(system, limit):
    """Should find the closed-form invariant constant on generated data"""
    ds = generate(get_system(system).scaled(n_traj=20, T=100), seed=42)
    assert ground_truth_constancy(ds.system, ds.split("test")) < limit


def test_ground_truth_constancy_without_law(lorenz_ds):
    """Should return None when no closed form exists"""
    assert ground_truth_constancy(lorenz_ds.system, lorenz_ds.split("test")) is None


def test_restart_success_probability():
    """Should compound independent restarts"""
    assert restart_success_probability(0.5, 2) == pytest.approx(0.75)
    assert restart_success_probability(0.0, 10) == 0.0
    with pytest.raises(ValueError):
        restart_success_probability(1.5, 2)
    with pytest.raises(ValueError):
        restart_success_probability(0.5, 0)


def test_chebyshev_bound():
    """Should cap the false-positive bound at one"""
    assert chebyshev_false_positive_bound(1.0, 0.5, 4.0) == pytest.approx(0.5)
    assert chebyshev_false_positive_bound(10.0, 0.5, 1.0) == 1.0
    with pytest.raises(ValueError):
        chebyshev_false_positive_bound(1.0, 0.0, 1.0)


def test_noise_growth_exponent():
    """Should recover the power of a variance that grows as sigma squared"""
    sigmas = [0.01, 0.05, 0.1, 0.2]
    assert noise_growth_exponent(sigmas, [3.0 * s ** 2 for s in sigmas]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        noise_growth_exponent([0.1], [0.01])
    with pytest.raises(ValueError):
        noise_growth_exponent([0.0, 0.1], [0.01, 0.02])


@pytest.mark.parametrize("p", [0.1, 0.3, 0.6])
@pytest.mark.parametrize("restarts", [1, 3, 10])
def test_restart_law_matches_simulation(p, restarts):
    """Should agree with simulated Bernoulli restarts within three standard errors"""
    trials = 20000
    rng = np.random.default_rng(int(p * 100) + restarts)
    hits = (rng.random((trials, restarts)) < p).any(axis=1).mean()
    expected = restart_success_probability(p, restarts)
    se = math.sqrt(max(expected * (1 - expected), 1e-12) / trials)
    assert abs(hits - expected) <= 3 * se + 1e-12


@pytest.mark.parametrize("tau", [0.2, 0.5, 1.0])
def test_chebyshev_bound_holds_on_null(tau):
    """Should bound how often a null candidate's diversity ratio exceeds tau"""
    sigma_inter, delta, trials = 0.1, 1.0, 10000
    rng = np.random.default_rng(7)
    wiggle = delta * np.array([1.0, -1.0] * 5)
    exceed = 0
    for means in rng.normal(0.0, sigma_inter, size=(trials, 5)):
        if diversity_rho([m + wiggle for m in means]) > tau:
            exceed += 1
    bound = chebyshev_false_positive_bound(sigma_inter, tau, delta)
    assert exceed / trials <= bound + 3 * math.sqrt(bound * (1 - bound) / trials) + 1e-12


def test_energy_variance_grows_quadratically(mass_spring_ds):
    """Should find the energy's variance under state noise growing as sigma squared"""
    traj = mass_spring_ds.split("test")[0]
    states = np.asarray(traj.states, dtype=np.float64)
    clean = true_invariant("mass_spring", states, traj.params)
    rng = np.random.default_rng(11)
    sigmas = [0.005, 0.01, 0.02, 0.05]
    variances = []
    for sigma in sigmas:
        noisy = np.concatenate([states + sigma * rng.normal(size=states.shape) for _ in range(50)])
        values = true_invariant("mass_spring", noisy, traj.params) - np.tile(clean, 50)
        variances.append(values.var())
    assert noise_growth_exponent(sigmas, variances) == pytest.approx(2.0, abs=0.3)
