import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, xlogy

from vecc.core.event import merge_instantiations

logger = logging.getLogger(__name__)

CONST = "const"
THETA = "theta"
LAMBDA = "lambda"
ADD = "add"
MUL = "mul"

ThetaKey = Tuple[str, int, int]
LambdaKey = Tuple[str, int]


class MechanismRequiredError(ValueError):
    """ Raised by strict evaluation of a thinned circuit under a parameterization that is not a mechanism for
    every thinned variable. """


class ZeroLikelihoodError(ValueError):
    """ Raised when a record has probability zero under the current parameters. """

    def __init__(self, message: str, record: int):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class Node:
    """ A circuit node. Leaves are constants, parameters theta(var, val, pinst) and indicators lambda(var, val);
    internal nodes add or multiply their children. """
    kind: str
    children: Tuple[int, ...] = ()
    value: float = 0.0
    var: str = ""
    val: int = 0
    pinst: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.kind in (CONST, THETA, LAMBDA)


@dataclass
class Gradient:
    """ Value of a circuit and its partial derivatives with respect to every parameter and indicator leaf. """
    value: float
    theta: Dict[ThetaKey, float] = field(default_factory=dict)
    indicator: Dict[LambdaKey, float] = field(default_factory=dict)


class Circuit:
    """ An arithmetic circuit over parameters and indicators.

    Nodes are stored with children before their parents. Evaluation is vectorised over a batch of evidence
    records: the buffer of node values has one row per node and one column per record.
    """

    STRICT_MECHANISMS = False

    def __init__(self, nodes: Sequence[Node], root: int, thinned: FrozenSet[str] = frozenset()):
        self._nodes = tuple(nodes)
        if not self._nodes:
            raise ValueError("A circuit needs at least one node.")
        if not 0 <= root < len(self._nodes):
            raise ValueError(f"Root {root} is not a node of the circuit.")
        self._root = root
        self._thinned = frozenset(thinned)

        self._const_ids, self._const_values = [], []
        self._theta_ids, self._theta_keys = [], []
        self._lambda_ids, self._lambda_keys = [], []
        self._operations = []
        for i, node in enumerate(self._nodes):
            if node.kind == CONST:
                self._const_ids.append(i)
                self._const_values.append(node.value)
            elif node.kind == THETA:
                self._theta_ids.append(i)
                self._theta_keys.append((node.var, node.val, node.pinst))
            elif node.kind == LAMBDA:
                self._lambda_ids.append(i)
                self._lambda_keys.append((node.var, node.val))
            elif node.kind in (ADD, MUL):
                if not node.children:
                    raise ValueError(f"Node {i} has no children.")
                if any(not 0 <= c < i for c in node.children):
                    raise ValueError(f"Node {i} has a child that does not precede it.")
                self._operations.append((i, node.kind == ADD, np.array(node.children, dtype=np.int64)))
            else:
                raise ValueError(f"Node {i} has unknown kind {node.kind!r}.")
        if len(set(self._theta_keys)) != len(self._theta_keys):
            raise ValueError("A parameter leaf appears more than once.")
        if len(set(self._lambda_keys)) != len(self._lambda_keys):
            raise ValueError("An indicator leaf appears more than once.")

        self._theta_position = {key: k for k, key in enumerate(self._theta_keys)}
        self._lambda_rows: Dict[str, List[Tuple[int, int]]] = {}
        for k, (var, val) in enumerate(self._lambda_keys):
            self._lambda_rows.setdefault(var, []).append((val, k))

    def __len__(self):
        return len(self._nodes)

    def __repr__(self):
        return f"Circuit({len(self._nodes)} nodes, root={self._root})"

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return self._nodes == other._nodes and self._root == other._root and self._thinned == other._thinned

    def evaluate(self,
                 p,
                 e: Mapping[str, int] = None,
                 overrides: Mapping[ThetaKey, float] = None,
                 log_space: bool = False,
                 strict: bool = None) -> float:
        """ Evaluate the circuit at a partial instantiation of endogenous variables.

        Args:
            p: The parameterization that feeds the parameter leaves.
            e: Evidence; indicators of unassigned variables are set to 1.
            overrides: Values replacing individual parameter leaves.
            log_space: Return the natural logarithm, computed in log space.
            strict: Reject parameterizations that are not mechanisms for thinned variables. Defaults to
                Circuit.STRICT_MECHANISMS.

        Returns:
            The probability of e, or its logarithm.
        """
        return float(self.evaluate_batch(p, [e or {}], overrides, log_space, strict)[0])

    def evaluate_batch(self,
                       p,
                       evidence: Sequence[Mapping[str, int]],
                       overrides: Mapping[ThetaKey, float] = None,
                       log_space: bool = False,
                       strict: bool = None) -> np.ndarray:
        """ Evaluate the circuit for every instantiation in evidence. Returns one value per instantiation. """
        self._check_parameterization(p, strict)
        theta = self.theta_vector(p, overrides)
        lam = self.indicators(evidence)
        values = self.forward(theta, lam, log_space)
        return values[self._root].copy()

    def causal_effect(self,
                      p,
                      x: Mapping[str, int],
                      y: Mapping[str, int],
                      log_space: bool = False,
                      strict: bool = None) -> float:
        """ The interventional probability Pr(y_x).

        The parameter leaves of every intervened variable are overridden with the constant mechanism that
        sets it to its value in x, and the circuit is evaluated at the instantiation x, y. Conflicting values
        for a shared variable give probability zero.
        """
        merged = merge_instantiations([x, y])
        if merged is None:
            return -np.inf if log_space else 0.0
        return self.evaluate(p, merged, p.intervention_overrides(x), log_space, strict)

    def backprop(self,
                 p,
                 e: Mapping[str, int] = None,
                 overrides: Mapping[ThetaKey, float] = None,
                 strict: bool = None) -> Gradient:
        """ Evaluate the circuit at e and compute the partial derivative of its value with respect to every
        parameter and indicator leaf, with one upward and one downward pass. """
        self._check_parameterization(p, strict)
        theta = self.theta_vector(p, overrides)
        lam = self.indicators([e or {}])
        values = self.forward(theta, lam)
        derivatives = self.backward(values)
        gradient = Gradient(float(values[self._root, 0]))
        for key, i in zip(self._theta_keys, self._theta_ids):
            gradient.theta[key] = float(derivatives[i, 0])
        for key, i in zip(self._lambda_keys, self._lambda_ids):
            gradient.indicator[key] = float(derivatives[i, 0])
        return gradient

    def log_likelihood(self, p, data, strict: bool = None) -> float:
        """ Weighted log-likelihood of a dataset. Returns -inf if a record of positive weight has probability 0.

        Args:
            p: Parameterization.
            data: A WeightedDataset whose columns are endogenous variables.
        """
        self._check_parameterization(p, strict)
        if len(data) == 0:
            return 0.0
        lam = self.record_indicators(data.columns, data.records)
        values = self.forward(self.theta_vector(p), lam)[self._root]
        return weighted_log_likelihood(values, data.weights)

    def theta_vector(self, p, overrides: Mapping[ThetaKey, float] = None) -> np.ndarray:
        """ Values of the parameter leaves in the order of theta_keys. """
        theta = p.theta_vector(self._theta_keys)
        for key, value in (overrides or {}).items():
            k = self._theta_position.get(key)
            if k is not None:
                theta[k] = value
        return theta

    def indicators(self, evidence: Sequence[Mapping[str, int]]) -> np.ndarray:
        """ Indicator values with one row per indicator leaf and one column per instantiation. """
        columns = sorted({name for e in evidence for name in e})
        records = np.full((len(evidence), len(columns)), -1, dtype=np.int64)
        position = {name: k for k, name in enumerate(columns)}
        for r, e in enumerate(evidence):
            for name, value in e.items():
                records[r, position[name]] = value
        return self.record_indicators(columns, records)

    def record_indicators(self, columns: Sequence[str], records: np.ndarray) -> np.ndarray:
        """ Indicator values for a matrix of records with one column per variable, -1 marking missing values. """
        records = np.asarray(records, dtype=np.int64)
        if records.ndim != 2:
            records = records.reshape(-1, len(columns))
        if records.shape[1] != len(columns):
            raise ValueError(f"Records have {records.shape[1]} columns but {len(columns)} variables were named.")
        lam = np.ones((len(self._lambda_keys), records.shape[0]))
        for k, name in enumerate(columns):
            rows = self._lambda_rows.get(name)
            if rows is None:
                raise ValueError(f"Evidence references unknown variable {name}.")
            column = records[:, k]
            for val, row in rows:
                lam[row] = (column == val) | (column < 0)
        return lam

    def _check_parameterization(self, p, strict: Optional[bool]):
        if strict is None:
            strict = Circuit.STRICT_MECHANISMS
        if strict and self._thinned and not p.is_mechanism(self._thinned):
            raise MechanismRequiredError(f"Circuit was thinned on {sorted(self._thinned)} and needs mechanism "
                                         f"parameters for them.")

    def forward(self, theta: np.ndarray, lam: np.ndarray, log_space: bool = False) -> np.ndarray:
        batch = lam.shape[1]
        values = np.empty((len(self._nodes), batch))
        with np.errstate(divide="ignore"):
            leaf = np.log if log_space else np.asarray
            values[self._const_ids] = leaf(np.asarray(self._const_values, dtype=float))[:, None]
            values[self._theta_ids] = leaf(np.asarray(theta, dtype=float))[:, None]
            values[self._lambda_ids] = leaf(lam)
        with np.errstate(invalid="ignore", divide="ignore"):
            for i, is_add, children in self._operations:
                if log_space:
                    values[i] = logsumexp(values[children], axis=0) if is_add else values[children].sum(axis=0)
                else:
                    values[i] = values[children].sum(axis=0) if is_add else values[children].prod(axis=0)
        return values

    def backward(self, values: np.ndarray) -> np.ndarray:
        derivatives = np.zeros_like(values)
        derivatives[self._root] = 1.0
        for i, is_add, children in reversed(self._operations):
            upstream = derivatives[i]
            if not upstream.any():
                continue
            if is_add:
                np.add.at(derivatives, children, np.broadcast_to(upstream, (len(children), len(upstream))))
                continue
            factors = values[children]
            others = np.ones_like(factors)
            others[1:] *= np.cumprod(factors[:-1], axis=0)
            others[:-1] *= np.cumprod(factors[:0:-1], axis=0)[::-1]
            np.add.at(derivatives, children, upstream * others)
        return derivatives

    def counts(self) -> Dict[str, int]:
        """ Number of nodes of each kind. """
        result = {kind: 0 for kind in (ADD, MUL, THETA, LAMBDA, CONST)}
        for node in self._nodes:
            result[node.kind] += 1
        return result

    def depth(self) -> int:
        """ Length of the longest path from the root to a leaf. """
        depth = np.zeros(len(self._nodes), dtype=np.int64)
        for i, _, children in self._operations:
            depth[i] = depth[children].max() + 1
        return int(depth[self._root])

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return self._nodes

    @property
    def root(self) -> int:
        return self._root

    @property
    def thinned(self) -> FrozenSet[str]:
        """ Variables removed from some separator of the jointree the circuit was compiled from. """
        return self._thinned

    @property
    def theta_keys(self) -> List[ThetaKey]:
        return list(self._theta_keys)

    @property
    def lambda_keys(self) -> List[LambdaKey]:
        return list(self._lambda_keys)

    @property
    def theta_ids(self) -> List[int]:
        return list(self._theta_ids)

    @property
    def variables(self) -> List[str]:
        """ Variables with an indicator leaf, i.e. those evidence can refer to. """
        return sorted(self._lambda_rows)

    @property
    def edge_count(self) -> int:
        return sum(len(children) for _, _, children in self._operations)


def weighted_log_likelihood(values: np.ndarray, weights: np.ndarray) -> float:
    """ Sum of weight * ln(value); -inf if a value of positive weight is zero. """
    with np.errstate(divide="ignore"):
        return float(np.sum(xlogy(weights, values)))


def evaluate(c: Circuit, p, e: Mapping[str, int] = None, log_space: bool = False) -> float:
    return c.evaluate(p, e, log_space=log_space)


def causal_effect(c: Circuit, p, x: Mapping[str, int], y: Mapping[str, int]) -> float:
    return c.causal_effect(p, x, y)


def backprop(c: Circuit, p, e: Mapping[str, int] = None) -> Tuple[float, Gradient]:
    gradient = c.backprop(p, e)
    return gradient.value, gradient


def log_likelihood(c: Circuit, p, data) -> float:
    return c.log_likelihood(p, data)
