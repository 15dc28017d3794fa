import math

import numpy as np
import pytest

from noisylpm.model import HOFF, TWO_PARAM
from noisylpm.synth import SynthSpec, expected_density, generate


def test_same_seed_same_graph():
    a = generate(SynthSpec(N=150, seed=4))
    b = generate(SynthSpec(N=150, seed=4))
    assert a[0].same_structure(b[0]) and np.array_equal(a[1], b[1])
    c = generate(SynthSpec(N=150, seed=5))
    assert not c[0].same_structure(a[0])


def test_symmetric_loop_free_and_in_square():
    net, Z, psi = generate(SynthSpec(N=120, seed=1, law="truncated-gaussian"))
    A = net.adjacency_matrix()
    assert np.array_equal(A, A.T) and not A.diagonal().any()
    assert np.all(np.abs(Z) <= 1)
    assert psi.tolist() == [0.5, math.log(3)]


def test_pin_origin():
    net, Z, _ = generate(SynthSpec(N=10, seed=0, pin_first_node_at_origin=True))
    assert Z[0].tolist() == [0.0, 0.0]


def test_near_empty_graph():
    net, _, _ = generate(SynthSpec(N=300, beta=-10.0, theta=5.0, seed=0))
    assert net.density < 0.01


def test_density_matches_expectation():
    for law in ("uniform", "truncated-gaussian"):
        spec = SynthSpec(N=400, law=law)
        dens = [generate(SynthSpec(N=400, law=law, seed=s))[0].density for s in range(30)]
        se = np.std(dens, ddof=1) / math.sqrt(len(dens))
        assert abs(np.mean(dens) - expected_density(spec)) < 3 * se + 1e-4


def test_expected_density_monte_carlo():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-1, 1, (2, 400000, 2))
    d = np.hypot(*(a - b).T)
    mc = np.mean(1 / (1 + np.exp(-(0.5 - 3 * d))))
    assert expected_density(SynthSpec()) == pytest.approx(mc, abs=2e-3)


def test_hoff_link_and_validation():
    net, _, psi = generate(SynthSpec(N=50, seed=0), HOFF)
    assert psi.tolist() == [0.5]
    with pytest.raises(ValueError):
        SynthSpec(N=1)
    with pytest.raises(ValueError):
        SynthSpec(law="clustered")
