import pytest
import numpy as np

from vecc.core.variable import Variable, EXOGENOUS
from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm
from vecc.core.event import Observational, Interventional, Counterfactual, parse_instantiation, \
    merge_instantiations, check_event
from vecc.core.parser import parse_model, dump_model, validate, ModelParseError
from vecc.core.config import Configuration
from vecc.oracle.worlds import WorldTable
from vecc.inference.jointree import Jointree
from vecc.data.families import hypertension, hypertension_scm, grid


class TestVariable:

    @pytest.mark.parametrize("name,card", [("1X", 2), ("X-1", 2), ("X", 1), ("X", True), ("X", 2.0)])
    def test_invalid(self, name, card):
        with pytest.raises(ValueError):
            Variable(name, card)

    def test_kind(self):
        u = Variable("U", 3, EXOGENOUS)
        assert u.is_exogenous and not u.is_endogenous
        with pytest.raises(ValueError):
            Variable("U", 2, "latent")


class TestCausalGraph:

    def test_structure(self):
        graph = hypertension()
        assert graph.exogenous == ["U_r", "U_x", "U_y", "U_z"]
        assert graph.endogenous == ["Z", "X", "Y"]
        assert graph.children("U_r") == ("Z", "Y")
        assert graph.family("Y") == ("X", "U_y", "U_r", "Y")
        assert graph.parent_instantiations("Y") == 8
        order = graph.topological_order
        assert order.index("Z") < order.index("X") < order.index("Y")

    def test_markovian(self):
        assert not hypertension().is_markovian()
        assert hypertension().is_semi_markovian()
        graph = CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], {"V": ["U"]})
        assert graph.is_markovian()

    def test_cycle(self):
        variables = [Variable("A", 2), Variable("B", 2)]
        with pytest.raises(ValueError, match="cycle"):
            CausalGraph(variables, {"A": ["B"], "B": ["A"]})

    @pytest.mark.parametrize("parents", [{"V": ["W"]}, {"U": ["V"]}, {"V": ["U", "U"]}, {"W": ["U"]}])
    def test_invalid_parents(self, parents):
        with pytest.raises(ValueError):
            CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], parents)

    def test_duplicate(self):
        with pytest.raises(ValueError):
            CausalGraph([Variable("V", 2), Variable("V", 3)])

    def test_mutilate(self):
        graph = hypertension().mutilate(["X"])
        assert graph.parents("X") == ()
        assert "X" not in graph.children("Z")
        assert graph.parents("Y") == ("X", "U_y", "U_r")
        with pytest.raises(ValueError):
            hypertension().mutilate(["U_r"])

    def test_moral_graph(self):
        moral = grid(2).moral_graph()
        assert moral.has_edge("X_1", "Y_2")
        assert not moral.has_edge("X_1", "X_2")
        assert set(moral.nodes) == set(grid(2).names)


class TestScm:

    def test_mutilate(self, scm):
        sub = scm.mutilate({"X": 1})
        assert list(sub.mechanism("X")) == [1]
        assert sub.graph.parents("X") == ()
        assert scm.mutilate({}) is scm

    @pytest.mark.parametrize("z", [{"U_r": 0}, {"X": 2}])
    def test_mutilate_invalid(self, scm, z):
        with pytest.raises(ValueError):
            scm.mutilate(z)

    def test_tables_read_only(self, scm):
        with pytest.raises(ValueError):
            scm.mechanism("Y")[0] = 1


class TestParser:

    def test_round_trip(self, scm):
        parsed = parse_model(dump_model(scm))
        assert isinstance(parsed, Scm)
        assert parsed.graph == scm.graph
        for name in scm.graph.endogenous:
            assert np.array_equal(parsed.mechanism(name), scm.mechanism(name))
        for name in scm.graph.exogenous:
            assert np.array_equal(parsed.prior(name), scm.prior(name))
        assert dump_model(parsed) == dump_model(scm)

    def test_partial_model(self):
        text = dump_model(hypertension())
        parsed = parse_model(text)
        assert isinstance(parsed, CausalGraph)
        assert parsed == hypertension()

    def test_prior_sum(self):
        text = '{"variables": [\n' \
               '{"name": "U", "kind": "exogenous", "card": 2, "prior": [0.5, 0.6]},\n' \
               '{"name": "V", "card": 2, "parents": ["U"], "mechanism": [0, 1]}\n' \
               ']}'
        with pytest.raises(ModelParseError, match="prior does not sum to 1") as e:
            parse_model(text)
        assert e.value.line == 2

    def test_mechanism_length(self):
        text = '{"variables": [\n' \
               '{"name": "U", "kind": "exogenous", "card": 2, "prior": [0.5, 0.5]},\n' \
               '{"name": "V", "card": 2, "parents": ["U"], "mechanism": [0, 1, 1]}\n' \
               ']}'
        with pytest.raises(ModelParseError, match="instead of") as e:
            parse_model(text)
        assert e.value.line == 3

    @pytest.mark.parametrize("text", [
        '{"variables": [{"name": "V", "card": 2}, {"name": "V", "card": 2}]}',
        '{"variables": [{"name": "V", "card": 2, "parents": ["W"]}]}',
        '{"variables": [{"name": "V", "card": "2"}]}',
        '{"variables": [{"name": "U", "kind": "exogenous", "card": 2, "parents": []}]}',
        '{"variables": [{"name": "V", "card": 2, "prior": [0.5, 0.5]}]}',
        '{"variables": [{"name": "A", "card": 2, "parents": ["B"]}, {"name": "B", "card": 2, "parents": ["A"]}]}',
        '{"vars": []}',
    ])
    def test_invalid(self, text):
        with pytest.raises(ModelParseError):
            parse_model(text)

    def test_duplicate_line(self):
        text = '{"variables": [\n' \
               '{"name": "U", "kind": "exogenous", "card": 2, "prior": [0.5, 0.5]},\n' \
               '{"name": "V", "card": 2, "parents": ["U"], "mechanism": [0, 1]},\n' \
               '{"name": "V", "card": 2, "parents": ["U"], "mechanism": [1, 0]}\n' \
               ']}'
        with pytest.raises(ModelParseError, match="duplicate variable V") as e:
            parse_model(text)
        assert e.value.line == 4

    def test_syntax_error_line(self):
        with pytest.raises(ModelParseError) as e:
            parse_model('{"variables": [\n{"name": "V", "card": 2},\n{"name": }\n]}')
        assert e.value.line == 3

    def test_validate_scm(self):
        graph = CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], {"V": ["U"]})
        diagnostics = validate(Scm(graph, {"U": [0.5, 0.5]}, {"V": [0, 2]}))
        assert [d.variable for d in diagnostics] == ["V"]
        diagnostics = validate(Scm(graph, {}, {"V": [0, 1]}))
        assert str(diagnostics[0]) == "U: missing prior"


class TestEvent:

    def test_parse_instantiation(self):
        assert parse_instantiation("X=0, Y=1") == {"X": 0, "Y": 1}
        assert parse_instantiation("") == {}
        assert parse_instantiation(None) == {}

    @pytest.mark.parametrize("text", ["X", "X=a", "=1", "X=0,X=1"])
    def test_parse_invalid(self, text):
        with pytest.raises(ValueError):
            parse_instantiation(text)

    def test_merge(self):
        assert merge_instantiations([{"X": 1}, {"Y": 0}, {"X": 1}]) == {"X": 1, "Y": 0}
        assert merge_instantiations([{"X": 1}, {"X": 0}]) is None

    def test_variables(self):
        event = Counterfactual((Interventional({"Y": 1}, {"X": 1}), Observational({"X": 0, "Y": 0})))
        assert event.variables == ["Y", "X"]

    @pytest.mark.parametrize("event", [Observational({"U_r": 0}), Observational({"W": 0}),
                                       Interventional({"Y": 2}, {"X": 1})])
    def test_check_event(self, event):
        with pytest.raises(ValueError):
            check_event(hypertension(), event)


class TestConfiguration:

    def test_set_properties(self):
        old_worlds, old_cap = WorldTable.MAX_WORLDS, Jointree.REPLICA_CAP
        try:
            Configuration.set_properties(max_worlds=64, replica_cap=3, not_a_property=1)
            assert WorldTable.MAX_WORLDS == 64
            assert Jointree.REPLICA_CAP == 3
            assert Configuration().max_worlds == 64
        finally:
            WorldTable.MAX_WORLDS, Jointree.REPLICA_CAP = old_worlds, old_cap

    def test_invalid_value(self):
        with pytest.raises(AssertionError):
            Configuration.set_properties(replica_cap=0)


@pytest.fixture()
def scm():
    return hypertension_scm()
