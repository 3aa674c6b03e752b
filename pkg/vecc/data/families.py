import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm
from vecc.core.variable import Variable, EXOGENOUS
from vecc.circuit.parameters import random_parameterization

logger = logging.getLogger(__name__)

FILLS = ("none", "random", "paper")


@dataclass(frozen=True)
class GenSpec:
    """ Which model to generate and how to fill in its parameters.

    Attributes:
        family: One of FAMILIES.
        n: Size of the grid families.
        n_vars: Number of endogenous variables of the random family.
        exo: Number of exogenous variables of a semi-Markovian random model.
        max_parents: Largest number of endogenous parents of a variable in the random family.
        max_card: Largest cardinality in the random family.
        markovian: Give every variable of the random family its own exogenous parent.
        fill: "none" for a bare causal graph, "random" for seeded random priors and mechanisms, or "paper" for
            the fixed tables of the hypertension model.
        seed: Seed of the random family and of the random fill.
    """
    family: str
    n: int = 3
    n_vars: int = 5
    exo: int = 3
    max_parents: int = 2
    max_card: int = 2
    markovian: bool = False
    fill: str = "none"
    seed: Optional[int] = None


def hypertension() -> CausalGraph:
    """ Treatment X, hypertension Z, recovery Y with a shared exogenous cause U_r of Z and Y. """
    variables = [Variable("U_r", 2, EXOGENOUS), Variable("U_x", 2, EXOGENOUS), Variable("U_y", 2, EXOGENOUS),
                 Variable("U_z", 2, EXOGENOUS), Variable("Z", 2), Variable("X", 2), Variable("Y", 2)]
    parents = {"Z": ["U_z", "U_r"], "X": ["Z", "U_x"], "Y": ["X", "U_y", "U_r"]}
    return CausalGraph(variables, parents)


def hypertension_scm() -> Scm:
    """ The hypertension model with its tables filled in. Pr(X=0, Y=0) = 0.4830 under this model. """
    priors = {"U_r": [0.75, 0.25], "U_x": [0.1, 0.9], "U_y": [0.3, 0.7], "U_z": [0.05, 0.95]}
    mechanisms = {"Z": [0, 0, 0, 1], "X": [1, 0, 0, 1], "Y": [1, 0, 0, 1, 0, 1, 0, 1]}
    return Scm(hypertension(), priors, mechanisms)


def chain() -> CausalGraph:
    """ U -> V. """
    return CausalGraph([Variable("U", 2, EXOGENOUS), Variable("V", 2)], {"V": ["U"]})


def collider() -> CausalGraph:
    """ X <- U -> Y: two endogenous variables sharing one exogenous cause. """
    variables = [Variable("U", 2, EXOGENOUS), Variable("X", 2), Variable("Y", 2)]
    return CausalGraph(variables, {"X": ["U"], "Y": ["U"]})


def semi_markov() -> CausalGraph:
    """ Confounded treatment: U -> Z, U -> X, Z -> X, X -> Y, each endogenous variable with its own noise. """
    variables = [Variable("U", 2, EXOGENOUS), Variable("U_Z", 2, EXOGENOUS), Variable("U_X", 2, EXOGENOUS),
                 Variable("U_Y", 2, EXOGENOUS), Variable("Z", 2), Variable("X", 2), Variable("Y", 2)]
    parents = {"Z": ["U", "U_Z"], "X": ["U", "Z", "U_X"], "Y": ["X", "U_Y"]}
    return CausalGraph(variables, parents)


def grid(n: int, chained: bool = False) -> CausalGraph:
    """ The grid G_n: exogenous U_X and U_Y, X_i with parent U_X, Y_j with parent U_Y, and Z_i_j with parents
    X_i and Y_j for 1 <= i, j <= n.

    Args:
        n: Grid size, at least 1.
        chained: Add the edges Z_i_j -> Z_i_(j+1) and Z_i_n -> Z_(i+1)_1 that make every Z a descendant of
            the previous one in row-major order.
    """
    if n < 1:
        raise ValueError(f"Grid size must be at least 1 and not {n}.")
    variables = [Variable("U_X", 2, EXOGENOUS), Variable("U_Y", 2, EXOGENOUS)]
    variables += [Variable(f"X_{i}", 2) for i in range(1, n + 1)]
    variables += [Variable(f"Y_{j}", 2) for j in range(1, n + 1)]
    parents = {f"X_{i}": ["U_X"] for i in range(1, n + 1)}
    parents.update({f"Y_{j}": ["U_Y"] for j in range(1, n + 1)})
    previous = None
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            name = f"Z_{i}_{j}"
            variables.append(Variable(name, 2))
            parents[name] = [f"X_{i}", f"Y_{j}"] + ([previous] if chained and previous else [])
            previous = name
    return CausalGraph(variables, parents)


def grid_plus(n: int) -> CausalGraph:
    """ The grid G'_n: G_n with a chain through the Z variables in row-major order. """
    return grid(n, chained=True)


def random_graph(n_vars: int,
                 exo: int = 3,
                 max_parents: int = 2,
                 max_card: int = 2,
                 markovian: bool = False,
                 seed: int = None) -> CausalGraph:
    """ A seeded random causal graph over endogenous V_1..V_n_vars.

    Each V_i draws up to max_parents endogenous parents among V_1..V_(i-1). In a Markovian graph V_i also gets
    its own exogenous parent U_i; otherwise there are exo exogenous variables U_1..U_exo and V_i draws one or
    two of them, so exogenous variables may be shared. Cardinalities are drawn from 2..max_card.
    """
    if n_vars < 1:
        raise ValueError(f"Random graph needs at least one endogenous variable, not {n_vars}.")
    if max_card < 2:
        raise ValueError(f"Largest cardinality must be at least 2 and not {max_card}.")
    if not markovian and exo < 1:
        raise ValueError("A semi-Markovian random graph needs at least one exogenous variable.")
    rng = np.random.default_rng(seed)
    exo_count = n_vars if markovian else exo
    exogenous = [Variable(f"U_{k}", int(rng.integers(2, max_card + 1)), EXOGENOUS)
                 for k in range(1, exo_count + 1)]
    endogenous = [Variable(f"V_{k}", int(rng.integers(2, max_card + 1))) for k in range(1, n_vars + 1)]

    parents: Dict[str, List[str]] = {}
    for k, variable in enumerate(endogenous):
        count = int(rng.integers(0, min(max_parents, k) + 1))
        chosen = sorted(rng.choice(k, size=count, replace=False).tolist()) if count else []
        names = [endogenous[c].name for c in chosen]
        if markovian:
            names.append(exogenous[k].name)
        else:
            shared = int(rng.integers(1, min(2, exo_count) + 1))
            names += [exogenous[c].name for c in sorted(rng.choice(exo_count, size=shared, replace=False).tolist())]
        parents[variable.name] = names
    return CausalGraph(exogenous + endogenous, parents)


def fill_random(graph: CausalGraph, seed: int = None) -> Scm:
    """ An SCM over graph with Dirichlet(1) priors and mechanisms drawn uniformly over deterministic tables. """
    return random_parameterization(graph, seed, deterministic=True).to_scm()


FAMILIES: Dict[str, Callable[[GenSpec], CausalGraph]] = {
    "hypertension": lambda spec: hypertension(),
    "chain": lambda spec: chain(),
    "collider": lambda spec: collider(),
    "semi-markov": lambda spec: semi_markov(),
    "grid": lambda spec: grid(spec.n),
    "grid-plus": lambda spec: grid_plus(spec.n),
    "random": lambda spec: random_graph(spec.n_vars, spec.exo, spec.max_parents, spec.max_card, spec.markovian,
                                        spec.seed),
}


def generate(spec: GenSpec) -> Union[CausalGraph, Scm]:
    """ Generate the model described by spec: a causal graph for fill "none", otherwise an SCM.

    Raises:
        ValueError: On an unknown family or fill, or fill "paper" for any family but hypertension.
    """
    if spec.family not in FAMILIES:
        raise ValueError(f"Unknown family {spec.family!r}; expected one of {sorted(FAMILIES)}.")
    if spec.fill not in FILLS:
        raise ValueError(f"Unknown fill {spec.fill!r}; expected one of {FILLS}.")
    if spec.fill == "paper":
        if spec.family != "hypertension":
            raise ValueError(f"Fixed tables exist only for the hypertension family, not {spec.family}.")
        return hypertension_scm()

    graph = FAMILIES[spec.family](spec)
    logger.debug(f"Generated {spec.family} graph {graph}.")
    if spec.fill == "none":
        return graph
    # The fill seed is offset from the structure seed of the random family.
    fill_seed = None if spec.seed is None else spec.seed + 1
    return fill_random(graph, fill_seed)


def corpus_scm(seed: int, index: int, max_vars: int = 6, max_exo: int = 4, max_card: int = 3) -> Scm:
    """ The index-th model of a seeded corpus of small semi-Markovian SCMs with random sizes, structure,
    priors and mechanisms. The same seed and index always give the same model. """
    rng = np.random.default_rng([seed, index])
    graph = random_graph(int(rng.integers(1, max_vars + 1)),
                         exo=int(rng.integers(1, max_exo + 1)),
                         max_parents=2,
                         max_card=max_card,
                         seed=int(rng.integers(2 ** 32)))
    return fill_random(graph, int(rng.integers(2 ** 32)))


def positive_markovian_scm(n_vars: int, max_parents: int = 2, max_card: int = 2, seed: int = None) -> Scm:
    """ A seeded Markovian SCM whose observational distribution is strictly positive.

    The structure is that of random_graph(markovian=True), except that U_i takes as many values as V_i. The
    mechanism of V_i is (U_i + s(pa)) mod |V_i| for a random shift s of every parent instantiation pa, so each
    value of V_i has probability at least 0.2 / |V_i| given any parents.
    """
    rng = np.random.default_rng(seed)
    shape = random_graph(n_vars, max_parents=max_parents, max_card=max_card, markovian=True,
                         seed=int(rng.integers(2 ** 32)))
    exogenous = {shape.parents(v)[-1]: shape.cardinality(v) for v in shape.endogenous}
    variables = [Variable(u, exogenous[u], EXOGENOUS) for u in shape.exogenous]
    variables += [shape.variable(v) for v in shape.endogenous]
    graph = CausalGraph(variables, {v: list(shape.parents(v)) for v in shape.endogenous})

    floor = 0.2
    priors = {u: (1 - floor) * rng.dirichlet(np.ones(card)) + floor / card for u, card in exogenous.items()}
    mechanisms = {}
    for v in graph.endogenous:
        card = graph.cardinality(v)
        rows = graph.parent_instantiations(v) // card
        shifts = rng.integers(card, size=rows)
        mechanisms[v] = [(u + shift) % card for shift in shifts.tolist() for u in range(card)]
    return Scm(graph, priors, mechanisms)
