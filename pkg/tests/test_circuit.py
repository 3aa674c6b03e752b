import pytest
import numpy as np
from scipy.special import xlogy

from vecc.circuit.circuit import Circuit, Node, MechanismRequiredError, evaluate, causal_effect, backprop, \
    log_likelihood
from vecc.circuit.parameters import Parameterization, random_parameterization
from vecc.circuit.serialization import serialize, deserialize, CircuitParseError, save_circuit, load_circuit
from vecc.inference.compiler import compile_graph
from vecc.oracle.worlds import joint_distribution
from vecc.data.dataset import WeightedDataset, exact_dataset
from vecc.data.families import hypertension, hypertension_scm, semi_markov, chain, grid, random_graph


class TestEvaluate:

    def test_hypertension(self, circuit, p):
        assert evaluate(circuit, p, {"X": 0, "Y": 0}) == pytest.approx(0.4830, abs=5e-5)
        assert causal_effect(circuit, p, {"X": 1}, {"Y": 1}) == pytest.approx(0.25, abs=1e-12)

    def test_log_space(self, circuit, p):
        value = circuit.evaluate(p, {"X": 0, "Y": 0})
        assert circuit.evaluate(p, {"X": 0, "Y": 0}, log_space=True) == pytest.approx(np.log(value), abs=1e-12)
        assert circuit.causal_effect(p, {"X": 1}, {"X": 0}, log_space=True) == -np.inf

    def test_conflicting_intervention(self, circuit, p):
        assert circuit.causal_effect(p, {"X": 1}, {"X": 0}) == 0.0
        assert circuit.causal_effect(p, {"X": 1}, {"X": 1}) == pytest.approx(1.0, abs=1e-12)

    def test_batch(self, circuit, p):
        evidence = [{"X": x, "Y": y} for x in range(2) for y in range(2)]
        values = circuit.evaluate_batch(p, evidence)
        assert values.sum() == pytest.approx(1.0, abs=1e-12)
        assert values[0] == pytest.approx(circuit.evaluate(p, evidence[0]), abs=1e-15)

    def test_empty_evidence(self, circuit, p):
        assert evaluate(circuit, p) == pytest.approx(1.0, abs=1e-12)
        assert circuit.evaluate(p, {}) == pytest.approx(1.0, abs=1e-12)
        assert circuit.evaluate(p, {}, log_space=True) == pytest.approx(0.0, abs=1e-12)
        assert circuit.evaluate_batch(p, [{}, {}]).tolist() == pytest.approx([1.0, 1.0], abs=1e-12)
        value, gradient = backprop(circuit, p)
        assert value == pytest.approx(1.0, abs=1e-12)
        assert gradient.indicator[("X", 0)] == pytest.approx(circuit.evaluate(p, {"X": 0}), abs=1e-12)

    def test_unknown_evidence(self, circuit, p):
        with pytest.raises(ValueError):
            circuit.evaluate(p, {"W": 0})

    def test_overrides(self, circuit, p):
        overrides = p.intervention_overrides({"X": 1})
        assert circuit.evaluate(p, {"Y": 1}, overrides=overrides) == pytest.approx(0.25, abs=1e-12)
        sub = compile_graph(hypertension().mutilate(["X"])).circuit
        assert sub.evaluate(p.mutilate({"X": 1}), {"Y": 1}) == pytest.approx(0.25, abs=1e-12)


class TestBackprop:

    def test_finite_difference(self, semi_markov_circuit):
        graph = semi_markov()
        p = random_parameterization(graph, seed=3)
        e = {"X": 1, "Y": 0}
        gradient = semi_markov_circuit.backprop(p, e)
        assert gradient.value == pytest.approx(semi_markov_circuit.evaluate(p, e), abs=1e-15)
        h = 1e-4
        for key in semi_markov_circuit.theta_keys:
            theta = p.value(*key)
            up = semi_markov_circuit.evaluate(p, e, overrides={key: theta + h})
            down = semi_markov_circuit.evaluate(p, e, overrides={key: theta - h})
            assert gradient.theta[key] == pytest.approx((up - down) / (2 * h), abs=1e-9)

    @pytest.mark.parametrize("seed", range(50))
    def test_finite_difference_random(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_graph(int(rng.integers(2, 5)), exo=2, max_card=3, seed=seed)
        circuit = compile_graph(graph, thin_jointree=False).circuit
        p = random_parameterization(graph, seed=seed + 1000)
        e = {v: int(rng.integers(graph.cardinality(v))) for v in graph.endogenous if rng.random() < 0.6}
        gradient = circuit.backprop(p, e)
        h = 1e-4
        for key in circuit.theta_keys:
            theta = p.value(*key)
            up = circuit.evaluate(p, e, overrides={key: theta + h})
            down = circuit.evaluate(p, e, overrides={key: theta - h})
            assert gradient.theta[key] == pytest.approx((up - down) / (2 * h), abs=1e-9)

    def test_indicator_derivatives(self, semi_markov_circuit):
        p = random_parameterization(semi_markov(), seed=4)
        value, gradient = backprop(semi_markov_circuit, p)
        assert value == pytest.approx(1.0, abs=1e-12)
        for (var, val), derivative in gradient.indicator.items():
            assert derivative == pytest.approx(semi_markov_circuit.evaluate(p, {var: val}), abs=1e-12)

    def test_expected_counts(self, semi_markov_circuit):
        """ theta * dAC/dtheta summed over the values of a variable is the probability of the evidence. """
        p = random_parameterization(semi_markov(), seed=5)
        e = {"Z": 0, "Y": 1}
        gradient = semi_markov_circuit.backprop(p, e)
        counts = {}
        for (var, val, pinst), derivative in gradient.theta.items():
            counts[var] = counts.get(var, 0.0) + p.value(var, val, pinst) * derivative
        for total in counts.values():
            assert total == pytest.approx(gradient.value, abs=1e-12)


class TestLogLikelihood:

    def test_negative_entropy(self, circuit, p):
        joint = joint_distribution(hypertension_scm()).table
        data = exact_dataset(hypertension_scm())
        assert log_likelihood(circuit, p, data) == pytest.approx(float(np.sum(xlogy(joint, joint))), abs=1e-12)

    def test_zero_probability(self, circuit, p):
        data = WeightedDataset(["Z", "X", "Y"], [[1, 1, 0], [0, 0, 0]], [1.0, 2.0])
        assert circuit.log_likelihood(p, data) == -np.inf
        ignored = WeightedDataset(["Z", "X", "Y"], [[1, 1, 0], [0, 0, 0]], [0.0, 2.0])
        assert np.isfinite(circuit.log_likelihood(p, ignored))

    def test_missing_values(self, circuit, p):
        data = WeightedDataset(["X", "Y"], [[0, -1]], [1.0])
        assert circuit.log_likelihood(p, data) == pytest.approx(np.log(circuit.evaluate(p, {"X": 0})), abs=1e-12)

    def test_empty(self, circuit, p):
        assert circuit.log_likelihood(p, WeightedDataset(["X"], [])) == 0.0

    def test_single_empty_record(self, circuit, p):
        data = WeightedDataset([], [[]])
        assert len(data) == 1
        assert log_likelihood(circuit, p, data) == pytest.approx(0.0, abs=1e-12)
        assert circuit.log_likelihood(p, WeightedDataset([], [[], []], [2.0, 3.0])) == pytest.approx(0.0, abs=1e-12)


class TestSerialization:

    def test_round_trip(self, circuit, p):
        text = serialize(circuit)
        assert text.startswith("acir 1\n")
        restored = deserialize(text)
        assert restored == circuit
        assert serialize(restored) == text
        assert restored.evaluate(p, {"X": 0, "Y": 0}) == circuit.evaluate(p, {"X": 0, "Y": 0})

    def test_thinned_round_trip(self, tmp_path):
        circuit = compile_graph(grid(3), placement="cascade", replica_cap=3).circuit
        assert circuit.thinned == {"X_1", "X_2", "X_3", "Y_1", "Y_2", "Y_3"}
        text = serialize(circuit)
        assert text.splitlines()[1] == "thinned X_1 X_2 X_3 Y_1 Y_2 Y_3"
        assert deserialize(text).thinned == circuit.thinned
        path = str(tmp_path / "grid.ac")
        save_circuit(circuit, path)
        restored = load_circuit(path)
        assert restored == circuit
        with pytest.raises(MechanismRequiredError):
            restored.evaluate(random_parameterization(grid(3), seed=0), {}, strict=True)
        assert "thinned" not in serialize(compile_graph(grid(3), thin_jointree=False).circuit)

    def test_files(self, tmp_path):
        circuit = compile_graph(chain()).circuit
        path = str(tmp_path / "chain.ac")
        save_circuit(circuit, path)
        assert load_circuit(path) == circuit

    def test_constants(self):
        circuit = Circuit([Node("const", value=0.1), Node("const", value=1 / 3), Node("add", children=(0, 1))], 2)
        restored = deserialize(serialize(circuit))
        assert restored.nodes[1].value == 1 / 3

    @pytest.mark.parametrize("text,line", [
        ("acir 2\nnode 0 const 1\nroot 0\n", 1),
        ("acir 1\nnode 0 const 1\nnode 2 const 1\nroot 1\n", 3),
        ("acir 1\nnode 0 const 1\nnode 1 sub 0\nroot 1\n", 3),
        ("acir 1\nnode 0 add 1\nroot 0\n", 2),
        ("acir 1\nnode 0 lambda X -1\nroot 0\n", 2),
        ("acir 1\nnode 0 theta X 0\nroot 0\n", 2),
        ("acir 1\nnode 0 const 1\nroot 1\n", 3),
        ("acir 1\nnode 0 const 1\nroot 0\nnode 1 const 1\n", 4),
        ("acir 1\nnode 0 const 1\n", 3),
        ("acir 1\nnode 0 const one\nroot 0\n", 2),
        ("acir 1\nnode 0 lambda X 0\nthinned X\nroot 0\n", 3),
        ("acir 1\nthinned\nnode 0 const 1\nroot 0\n", 2),
        ("acir 1\nthinned X\nthinned X\nnode 0 lambda X 0\nroot 0\n", 3),
        ("acir 1\nthinned W\nnode 0 lambda X 0\nroot 0\n", 2),
    ])
    def test_malformed(self, text, line):
        with pytest.raises(CircuitParseError) as e:
            deserialize(text)
        assert e.value.line == line

    def test_blank_lines(self):
        circuit = deserialize("acir 1\n\nnode 0 const 1\n\nroot 0\n")
        assert len(circuit) == 1


@pytest.fixture()
def p():
    return Parameterization.from_scm(hypertension_scm())


@pytest.fixture()
def circuit():
    return compile_graph(hypertension()).circuit


@pytest.fixture()
def semi_markov_circuit():
    return compile_graph(semi_markov(), thin_jointree=False).circuit
