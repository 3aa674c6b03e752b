import itertools

import pytest
import numpy as np

from vecc.core.variable import Variable, EXOGENOUS
from vecc.core.graph import CausalGraph
from vecc.core.event import Interventional
from vecc.circuit.circuit import ZeroLikelihoodError
from vecc.circuit.learning import ExpectationMaximisation, em_fit, fit_restarts
from vecc.circuit.parameters import Parameterization, random_parameterization
from vecc.inference.compiler import compile_graph
from vecc.oracle.worlds import joint_distribution, enumerate_worlds, event_probability
from vecc.data.dataset import WeightedDataset, exact_dataset
from vecc.data.families import hypertension, hypertension_scm, chain, semi_markov, grid, fill_random, \
    positive_markovian_scm


class TestExpectationMaximisation:

    def test_fully_observed_step(self):
        """ With nothing hidden, one iteration gives the relative frequencies. """
        graph = CausalGraph([Variable("A", 2), Variable("B", 2)], {"B": ["A"]})
        circuit = compile_graph(graph, thin_jointree=False).circuit
        data = WeightedDataset(["A", "B"], [[0, 0], [0, 1], [1, 1], [1, 1]], [1.0, 2.0, 3.0, 4.0])
        p = ExpectationMaximisation(circuit, data).step(random_parameterization(graph, seed=0))
        assert np.allclose(p.cpts["A"], [[0.3, 0.7]])
        assert np.allclose(p.cpts["B"], [[1 / 3, 2 / 3], [0.0, 1.0]])

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone(self, seed):
        graph = semi_markov()
        circuit = compile_graph(graph, thin_jointree=False).circuit
        data = exact_dataset(fill_random(graph, seed=seed))
        init = random_parameterization(graph, seed=100 + seed)
        _, trace = em_fit(circuit, init, data, max_iters=50, tol=-np.inf)
        assert len(trace) == 51
        assert np.all(np.diff(trace) >= -1e-9)

    def test_tolerance_stops(self):
        graph = semi_markov()
        circuit = compile_graph(graph, thin_jointree=False).circuit
        data = exact_dataset(fill_random(graph, seed=1))
        _, trace = em_fit(circuit, random_parameterization(graph, seed=2), data, max_iters=10000, tol=1e-3)
        assert len(trace) < 10001
        assert trace[-1] - trace[-2] < 1e-3

    def test_zero_likelihood(self):
        graph = chain()
        circuit = compile_graph(graph).circuit
        init = Parameterization(graph, {"U": [0.5, 0.5]}, {"V": [[1.0, 0.0], [1.0, 0.0]]})
        data = WeightedDataset(["V"], [[0], [1]])
        with pytest.raises(ZeroLikelihoodError) as e:
            em_fit(circuit, init, data)
        assert e.value.record == 1

    def test_skipped_rows(self):
        graph = chain()
        circuit = compile_graph(graph).circuit
        init = Parameterization(graph, {"U": [1.0, 0.0]}, {"V": [[0.4, 0.6], [0.9, 0.1]]})
        em = ExpectationMaximisation(circuit, WeightedDataset(["V"], [[0], [1]]))
        p = em.step(init)
        assert em.skipped == [("V", 1)]
        assert np.allclose(p.cpts["V"][1], [0.9, 0.1])
        assert np.allclose(p.cpts["V"][0], [0.5, 0.5])

    def test_skipped_rows_reset(self):
        graph = chain()
        circuit = compile_graph(graph).circuit
        stuck = Parameterization(graph, {"U": [1.0, 0.0]}, {"V": [[0.4, 0.6], [0.9, 0.1]]})
        em = ExpectationMaximisation(circuit, WeightedDataset(["V"], [[0], [1]]), max_iters=5, tol=-np.inf)
        em.fit(stuck)
        assert em.skipped == [("V", 1)]
        em.fit(stuck)
        assert em.skipped == [("V", 1)]
        em.fit(Parameterization(graph, {"U": [0.5, 0.5]}, {"V": [[0.4, 0.6], [0.9, 0.1]]}))
        assert em.skipped == []

    def test_projection(self):
        graph = semi_markov()
        circuit = compile_graph(graph).circuit
        scm = fill_random(graph, seed=4)
        p, trace = em_fit(circuit, Parameterization.from_scm(scm), exact_dataset(scm), max_iters=5,
                          deterministic_projection=True)
        assert p.is_mechanism()
        assert np.isfinite(trace[-1])

    def test_thinned_needs_projection(self):
        graph = grid(3)
        circuit = compile_graph(graph, placement="cascade", replica_cap=3).circuit
        assert circuit.thinned
        data = WeightedDataset(["X_1"], [[0], [1]])
        with pytest.raises(ValueError):
            em_fit(circuit, random_parameterization(graph, seed=0), data)


class TestFitRestarts:

    def test_hypertension(self):
        scm = hypertension_scm()
        circuit = compile_graph(hypertension(), thin_jointree=False).circuit
        data = exact_dataset(scm)
        best, trace = fit_restarts(circuit, scm.graph, data, restarts=64, seed=0, max_iters=1000, tol=1e-12)
        assert best is not None
        truth = joint_distribution(scm).table.reshape(-1)
        names = scm.graph.endogenous
        cells = [dict(zip(names, cell)) for cell in itertools.product(range(2), repeat=len(names))]
        fitted = circuit.evaluate_batch(best, cells)
        assert 0.5 * np.abs(truth - fitted).sum() < 1e-3

    def test_seeded(self):
        graph = semi_markov()
        circuit = compile_graph(graph, thin_jointree=False).circuit
        data = exact_dataset(fill_random(graph, seed=7))
        first, first_trace = fit_restarts(circuit, graph, data, restarts=3, seed=9, max_iters=20)
        second, second_trace = fit_restarts(circuit, graph, data, restarts=3, seed=9, max_iters=20)
        assert first_trace == second_trace
        assert first.to_dict() == second.to_dict()

    def test_all_failed(self):
        graph = CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], {"V": []})
        circuit = compile_graph(graph).circuit
        data = WeightedDataset(["V"], [[0], [1]])
        best, trace = fit_restarts(circuit, graph, data, restarts=4, seed=0, deterministic_projection=True)
        assert best is None and trace == []

    def test_markovian_agrees_with_oracle(self):
        """ Whenever EM recovers the observational distribution of a positive Markovian model, the causal
        effects under the fitted parameters are the interventional probabilities of the true model. """
        recovered = 0
        for seed in range(20):
            scm = positive_markovian_scm(3, seed=seed)
            graph = scm.graph
            table = enumerate_worlds(scm)
            assert np.all(joint_distribution(scm, table=table).table > 0)
            circuit = compile_graph(graph, thin_jointree=False).circuit
            data = exact_dataset(scm)
            best, _ = fit_restarts(circuit, graph, data, restarts=2, seed=seed, max_iters=3000, tol=1e-14)
            fitted = circuit.evaluate_batch(best, data.evidence)
            if 0.5 * np.abs(fitted - data.weights).sum() > 1e-6:
                continue
            recovered += 1
            y = graph.endogenous[-1]
            for x in graph.endogenous[:-1]:
                for value, target in itertools.product(range(graph.cardinality(x)), range(graph.cardinality(y))):
                    expected = event_probability(scm, Interventional({y: target}, {x: value}), table)
                    assert circuit.causal_effect(best, {x: value}, {y: target}) == pytest.approx(expected, abs=1e-4)
        assert recovered >= 10
