import itertools

import pytest
import numpy as np

from vecc.core.variable import Variable, EXOGENOUS
from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm
from vecc.core.event import Observational, Interventional, Counterfactual
from vecc.circuit.parameters import Parameterization
from vecc.inference.compiler import compile_graph
from vecc.oracle.worlds import WorldTable, EnumerationCapError, enumerate_worlds, worlds_of_event, \
    event_probability, conditional_probability, joint_distribution, format_world_table
from vecc.oracle.estimands import UndefinedEstimandError, backdoor_estimate, frontdoor_estimate
from vecc.data.families import hypertension_scm, semi_markov, grid_plus, fill_random, corpus_scm


class TestWorlds:

    def test_hypertension_table(self, scm):
        table = enumerate_worlds(scm)
        assert len(table) == 16
        assert table.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        world = table[15]
        assert world.assignment == {"U_r": 1, "U_x": 1, "U_y": 1, "U_z": 1}
        assert world.probability == pytest.approx(0.149625, abs=1e-12)
        assert world.induced == {"Z": 1, "X": 1, "Y": 1}
        assert table[0].assignment == {"U_r": 0, "U_x": 0, "U_y": 0, "U_z": 0}

    def test_no_exogenous(self):
        graph = CausalGraph([Variable("A", 2)])
        table = enumerate_worlds(Scm(graph, {}, {"A": [1]}))
        assert len(table) == 1
        assert table[0].probability == 1.0
        assert table[0].induced == {"A": 1}

    def test_cap(self, scm, monkeypatch):
        monkeypatch.setattr(WorldTable, "MAX_WORLDS", 8)
        with pytest.raises(EnumerationCapError):
            enumerate_worlds(scm)

    def test_events(self, scm):
        assert list(worlds_of_event(scm, Observational({"X": 0, "Y": 0}))) == [6, 7, 9, 12]
        assert list(worlds_of_event(scm, Interventional({"Y": 1}, {"X": 1}))) == list(range(8, 16))
        assert list(worlds_of_event(scm, Observational({}))) == list(range(16))
        event = Counterfactual((Interventional({"Y": 1}, {"X": 1}), Observational({"X": 0, "Y": 0})))
        assert list(worlds_of_event(scm, event)) == [9, 12]

    def test_probabilities(self, scm):
        assert event_probability(scm, Observational({"X": 0, "Y": 0})) == pytest.approx(0.4830, abs=1e-12)
        assert event_probability(scm, Interventional({"Y": 1}, {"X": 1})) == pytest.approx(0.25, abs=1e-12)
        event = Counterfactual((Interventional({"Y": 1}, {"X": 1}), Observational({"X": 0, "Y": 0})))
        assert event_probability(scm, event) == pytest.approx(0.0105, abs=1e-12)

    def test_conditional(self, scm):
        value = conditional_probability(scm, Interventional({"Y": 1}, {"X": 1}), Observational({"X": 0, "Y": 0}))
        assert value == pytest.approx(0.0105 / 0.4830, abs=1e-12)
        assert value == pytest.approx(0.021739, abs=1e-6)
        with pytest.raises(ValueError):
            conditional_probability(scm, Observational({"Y": 1}), Observational({"Z": 1, "X": 1, "Y": 0}))

    def test_invalid_event(self, scm):
        with pytest.raises(ValueError):
            event_probability(scm, Observational({"U_r": 1}))

    @pytest.mark.parametrize("index", range(6))
    def test_sub_model(self, index):
        scm = corpus_scm(3, index)
        table = enumerate_worlds(scm)
        x = scm.graph.endogenous[0]
        y = scm.graph.endogenous[-1]
        for value in range(scm.graph.cardinality(x)):
            sub = scm.mutilate({x: value})
            for target in range(scm.graph.cardinality(y)):
                expected = event_probability(sub, Observational({y: target}))
                event = Interventional({y: target}, {x: value})
                assert event_probability(scm, event, table) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("index", range(6))
    def test_additive_and_monotone(self, index):
        scm = corpus_scm(4, index)
        table = enumerate_worlds(scm)
        names = scm.graph.endogenous
        total = 0.0
        for cell in itertools.product(*(range(scm.graph.cardinality(v)) for v in names)):
            e = dict(zip(names, cell))
            value = event_probability(scm, Observational(e), table)
            total += value
            first = {names[0]: cell[0]}
            assert value <= event_probability(scm, Observational(first), table) + 1e-12
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_format(self, scm):
        lines = format_world_table(enumerate_worlds(scm)).splitlines()
        assert lines[0] == "U_r\tU_x\tU_y\tU_z\tprobability\tZ\tX\tY"
        assert len(lines) == 17
        assert lines[16].startswith("1\t1\t1\t1\t0.14962")


class TestJointDistribution:

    def test_hypertension(self, scm):
        joint = joint_distribution(scm)
        assert joint.variables == ("Z", "X", "Y")
        assert joint.table.sum() == pytest.approx(1.0, abs=1e-12)
        assert joint.project(["X", "Y"]).reorder(["X", "Y"]).table[0, 0] == pytest.approx(0.4830, abs=1e-12)
        assert joint.table[1, 1, 0] == 0.0

    def test_marginals(self, scm):
        joint = joint_distribution(scm)
        marginal = joint_distribution(scm, ["Y", "X"])
        assert np.allclose(marginal.table, joint.project(["X", "Y"]).reorder(["Y", "X"]).table, atol=1e-12)

    def test_chain(self):
        graph = CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], {"V": ["U"]})
        joint = joint_distribution(Scm(graph, {"U": [0.7, 0.3]}, {"V": [0, 1]}))
        assert joint.table[1] == pytest.approx(0.3, abs=1e-12)

    def test_empty(self, scm):
        assert joint_distribution(scm, []).table[()] == pytest.approx(1.0, abs=1e-12)


class TestBackdoor:

    @pytest.mark.parametrize("z", [["Z"], []])
    def test_semi_markov(self, confounded, z):
        joint = joint_distribution(confounded)
        for x, y in itertools.product(range(2), range(2)):
            expected = event_probability(confounded, Interventional({"Y": y}, {"X": x}))
            assert backdoor_estimate(joint, {"X": x}, {"Y": y}, z) == pytest.approx(expected, abs=1e-12)

    def test_empty_set_is_conditional(self, confounded):
        joint = joint_distribution(confounded)
        expected = conditional_probability(confounded, Observational({"Y": 1}), Observational({"X": 1}))
        assert backdoor_estimate(joint, {"X": 1}, {"Y": 1}, []) == pytest.approx(expected, abs=1e-12)

    def test_grid_plus(self):
        """ {X_2, X_3} blocks every back-door path from X_1 to Z_3_3 in G'_3. """
        graph = grid_plus(3)
        rng = np.random.default_rng(0)
        mechanisms = {"X_1": [0, 1], "X_2": [0, 0], "X_3": [1, 1], "Y_1": [0, 1], "Y_2": [1, 0], "Y_3": [0, 1]}
        for v in graph.endogenous:
            if v.startswith("Z"):
                mechanisms[v] = rng.integers(2, size=graph.parent_instantiations(v)).tolist()
        scm = Scm(graph, {"U_X": [0.35, 0.65], "U_Y": [0.6, 0.4]}, mechanisms)
        joint = joint_distribution(scm)
        circuit = compile_graph(graph, placement="cascade", replica_cap=3).circuit
        p = Parameterization.from_scm(scm)
        for x, y in itertools.product(range(2), range(2)):
            expected = event_probability(scm, Interventional({"Z_3_3": y}, {"X_1": x}))
            estimate = backdoor_estimate(joint, {"X_1": x}, {"Z_3_3": y}, ["X_2", "X_3"])
            assert estimate == pytest.approx(expected, abs=1e-12)
            assert circuit.causal_effect(p, {"X_1": x}, {"Z_3_3": y}) == pytest.approx(expected, abs=1e-9)

    def test_undefined(self):
        graph = CausalGraph([Variable("U", 2, EXOGENOUS), Variable("Z", 2), Variable("X", 2), Variable("Y", 2)],
                            {"Z": ["U"], "X": ["Z"], "Y": ["X"]})
        scm = Scm(graph, {"U": [0.5, 0.5]}, {"Z": [0, 1], "X": [0, 1], "Y": [0, 1]})
        with pytest.raises(UndefinedEstimandError):
            backdoor_estimate(joint_distribution(scm), {"X": 1}, {"Y": 1}, ["Z"])

    @pytest.mark.parametrize("x,y,z", [({}, {"Y": 1}, []), ({"X": 1}, {"X": 1}, []), ({"X": 1}, {"Y": 1}, ["X"]),
                                       ({"X": 1}, {"Y": 1}, ["Z", "Z"]), ({"X": 1}, {"Y": 1}, ["W"])])
    def test_invalid_sets(self, confounded, x, y, z):
        with pytest.raises(ValueError):
            backdoor_estimate(joint_distribution(confounded), x, y, z)


class TestFrontdoor:

    def test_mediator(self, mediated):
        joint = joint_distribution(mediated, ["X", "Z", "Y"])
        for x, y in itertools.product(range(2), range(2)):
            expected = event_probability(mediated, Interventional({"Y": y}, {"X": x}))
            assert frontdoor_estimate(joint, {"X": x}, {"Y": y}, ["Z"]) == pytest.approx(expected, abs=1e-12)

    def test_confounding_biases_conditional(self, mediated):
        expected = event_probability(mediated, Interventional({"Y": 1}, {"X": 1}))
        conditional = conditional_probability(mediated, Observational({"Y": 1}), Observational({"X": 1}))
        assert abs(expected - conditional) > 1e-3

    def test_deterministic_mediator(self, mediated):
        priors = dict(mediated.priors)
        priors["U_Z"] = [1.0, 0.0]
        scm = Scm(mediated.graph, priors, mediated.mechanisms)
        with pytest.raises(UndefinedEstimandError):
            frontdoor_estimate(joint_distribution(scm), {"X": 1}, {"Y": 1}, ["Z"])

    @pytest.mark.parametrize("z", [[], ["Y"], ["X"]])
    def test_invalid_sets(self, mediated, z):
        with pytest.raises(ValueError):
            frontdoor_estimate(joint_distribution(mediated), {"X": 1}, {"Y": 1}, z)


@pytest.fixture()
def scm():
    return hypertension_scm()


@pytest.fixture()
def confounded():
    """ U confounds Z and X; Z -> X -> Y. """
    priors = {"U": [0.6, 0.4], "U_Z": [0.3, 0.7], "U_X": [0.2, 0.8], "U_Y": [0.9, 0.1]}
    mechanisms = {"Z": [0, 1, 1, 0], "X": [0, 1, 0, 1, 0, 1, 1, 0], "Y": [0, 1, 1, 0]}
    return Scm(semi_markov(), priors, mechanisms)


@pytest.fixture()
def mediated():
    """ U confounds X and Y, and X affects Y only through Z. """
    variables = [Variable("U", 2, EXOGENOUS), Variable("U_X", 2, EXOGENOUS), Variable("U_Z", 2, EXOGENOUS),
                 Variable("U_Y", 2, EXOGENOUS), Variable("X", 2), Variable("Z", 2), Variable("Y", 2)]
    graph = CausalGraph(variables, {"X": ["U", "U_X"], "Z": ["X", "U_Z"], "Y": ["Z", "U", "U_Y"]})
    priors = {"U": [0.3, 0.7], "U_X": [0.8, 0.2], "U_Z": [0.75, 0.25], "U_Y": [0.9, 0.1]}
    mechanisms = {"X": [0, 1, 1, 0], "Z": [0, 1, 1, 0], "Y": [0, 1, 0, 1, 0, 1, 1, 0]}
    return Scm(graph, priors, mechanisms)
