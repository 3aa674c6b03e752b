import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from vecc.core.graph import CausalGraph
from vecc.circuit.builder import CircuitBuilder
from vecc.circuit.circuit import Circuit
from vecc.inference.elimination import EliminationOrder, elimination_order
from vecc.inference.factor import Factor, evidence_factor
from vecc.inference.jointree import Jointree, FactorLabel, build_jointree, default_replicas, PLACEMENTS
from vecc.inference.thinning import ThinningCertificate, thin

logger = logging.getLogger(__name__)


@dataclass
class CompilationResult:
    """ A compiled circuit together with the jointree that scheduled its construction. """
    circuit: Circuit
    jointree: Jointree
    certificate: ThinningCertificate = field(default_factory=ThinningCertificate)
    order: Optional[EliminationOrder] = None
    unthinned_width: Optional[int] = None

    @property
    def stats(self) -> "CircuitStats":
        return circuit_stats(self)


@dataclass(frozen=True)
class CircuitStats:
    nodes: int
    edges: int
    add: int
    mul: int
    theta: int
    indicators: int
    constants: int
    depth: int
    width: int
    unthinned_width: Optional[int]
    order_width: Optional[int]
    thinned: List[str]
    markovian: bool

    def report(self) -> str:
        """ Line-oriented report with one tab-separated key and value per line in a fixed order. """
        rows = [("nodes", self.nodes), ("edges", self.edges), ("add", self.add), ("mul", self.mul),
                ("theta", self.theta), ("lambda", self.indicators), ("const", self.constants),
                ("depth", self.depth), ("order_width", _na(self.order_width)),
                ("unthinned_width", _na(self.unthinned_width)), ("thinned_width", self.width),
                ("thinned_variables", ",".join(self.thinned) or "-"), ("markovian", str(self.markovian).lower())]
        return "".join(f"{key}\t{value}\n" for key, value in rows)


def compile_jointree(graph: CausalGraph, jt: Jointree) -> CompilationResult:
    """ Compile a circuit by symbolic variable elimination scheduled by a jointree.

    A leaf sends its factor, multiplied by the evidence factor of its variable if it is the designated copy,
    summed down to its separator. An internal node multiplies its children's messages and sums the product
    down to its separator. The top leaf multiplies its factor with its child's message and sums out everything.

    Raises:
        ValueError: If the jointree's leaves do not hold every prior and mechanism of the graph.
    """
    _check_cover(graph, jt)
    builder = CircuitBuilder()
    if jt.top is None:
        return CompilationResult(builder.finish(builder.constant(1.0)), jt)

    designated = {v: jt.designated_leaf(v) for v in graph.endogenous}
    leaf_factors: Dict[str, Factor] = {}
    messages: Dict[int, Factor] = {}
    for i in jt.bottom_up():
        label = jt.label(i)
        if label is not None:
            if label.variable not in leaf_factors:
                leaf_factors[label.variable] = parameter_factor(graph, label.variable, builder)
            factor = leaf_factors[label.variable]
            if designated.get(label.variable) == i:
                factor = factor.multiply(evidence_factor(graph.variable(label.variable), builder=builder))
            for child in jt.children(i):
                factor = factor.multiply(messages.pop(child))
        else:
            left, right = jt.children(i)
            factor = messages.pop(left).multiply(messages.pop(right))
        if i == jt.top:
            factor = factor.sum_out(factor.variables)
        else:
            factor = factor.project(jt.sep(i))
        messages[i] = factor

    root = messages[jt.top].table[()]
    thinned = sorted({v for i in jt.edges for v in jt.unthinned_sep(i) - jt.sep(i)})
    circuit = builder.finish(root, thinned)
    return CompilationResult(circuit, jt)


def compile_graph(graph: CausalGraph,
                  heuristic: str = "min-fill",
                  order: Sequence[str] = None,
                  replica_cap: int = None,
                  thin_jointree: bool = True,
                  placement: str = "auto",
                  replicas: Mapping[str, int] = None) -> CompilationResult:
    """ Compile a causal graph into a circuit.

    The replica-free jointree is always built. When thinning, jointrees with replicated mechanisms are built for
    the requested placement ("auto" tries all of them), thinned on the endogenous variables, and the narrowest
    jointree is compiled, so thinning never increases the width.

    Args:
        graph: The causal graph.
        heuristic: Elimination order heuristic, see elimination_order.
        order: User order for the "given" heuristic.
        replica_cap: Cap on default replica counts.
        thin_jointree: If False, compile the replica-free unthinned jointree.
        placement: "auto", "dtree" or "cascade".
        replicas: Explicit replica counts overriding the defaults.
    """
    if placement != "auto" and placement not in PLACEMENTS:
        raise ValueError(f"Unknown placement {placement!r}; expected auto or one of {PLACEMENTS}.")
    eo = elimination_order(graph, heuristic, order)
    plain_placement = "dtree" if placement == "auto" else placement
    plain = build_jointree(graph, eo, placement=plain_placement)
    chosen, certificate = plain, ThinningCertificate()

    if thin_jointree:
        counts = dict(replicas) if replicas is not None else default_replicas(graph, replica_cap)
        for candidate in (PLACEMENTS if placement == "auto" else (placement,)):
            thinned, cert = thin(build_jointree(graph, eo, counts, candidate), graph.endogenous)
            logger.debug(f"{candidate} placement gives thinned width {thinned.width}.")
            if thinned.width < chosen.width:
                chosen, certificate = thinned, cert
        if chosen is plain:
            logger.info(f"Thinning did not reduce width {plain.width}; compiling the replica-free jointree.")

    result = compile_jointree(graph, chosen)
    result.certificate = certificate
    result.order = eo
    result.unthinned_width = plain.width
    logger.info(f"Compiled {result.circuit} from order width {eo.width}, jointree width {chosen.width} "
                f"(unthinned {plain.width}), thinned variables {result.circuit.thinned or '-'}.")
    return result


def parameter_factor(graph: CausalGraph, variable: str, builder: CircuitBuilder) -> Factor:
    """ The symbolic factor of a variable: its prior, or its conditional table over parents then itself. """
    card = graph.cardinality(variable)
    if graph.variable(variable).is_exogenous:
        return Factor([variable], [card], [builder.theta(variable, v, 0) for v in range(card)], builder)
    rows = graph.parent_instantiations(variable)
    cells = np.array([builder.theta(variable, v, p) for p in range(rows) for v in range(card)], dtype=object)
    return Factor(graph.family(variable), graph.parent_cardinalities(variable) + (card,), cells, builder)


def circuit_stats(result: CompilationResult) -> CircuitStats:
    circuit = result.circuit
    counts = circuit.counts()
    return CircuitStats(nodes=len(circuit),
                        edges=circuit.edge_count,
                        add=counts["add"],
                        mul=counts["mul"],
                        theta=counts["theta"],
                        indicators=counts["lambda"],
                        constants=counts["const"],
                        depth=circuit.depth(),
                        width=result.jointree.width,
                        unthinned_width=result.unthinned_width,
                        order_width=None if result.order is None else result.order.width,
                        thinned=sorted(circuit.thinned),
                        markovian=result.jointree.graph.is_markovian())


def _check_cover(graph: CausalGraph, jt: Jointree):
    if jt.graph is not graph and jt.graph != graph:
        raise ValueError("Jointree was built for a different graph.")
    copies = {}
    for i in jt.leaves:
        label: FactorLabel = jt.label(i)
        if label.variable not in graph:
            raise ValueError(f"Jointree leaf {label} does not belong to the graph.")
        copies[label.variable] = copies.get(label.variable, 0) + 1
    missing = [v for v in graph.names if v not in copies]
    if missing:
        raise ValueError(f"Jointree does not cover the factors of {missing}.")
    replicated = [u for u in graph.exogenous if copies[u] > 1]
    if replicated:
        raise ValueError(f"Jointree replicates priors of {replicated}.")


def _na(value) -> str:
    return "-" if value is None else str(value)
