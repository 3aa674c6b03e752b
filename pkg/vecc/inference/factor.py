import logging
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from vecc.core.variable import Variable

logger = logging.getLogger(__name__)


class FactorModeError(TypeError):
    """ Raised when numeric and symbolic factors are mixed, or a numeric-only operation sees a symbolic one. """


class Factor:
    """ A dense table over discrete variables.

    Cells are stored in a numpy array with one axis per variable, which in C order is row-major with the last
    variable varying fastest. A numeric factor holds float64 cells. A symbolic factor holds circuit node ids in an
    object array and builds new nodes through its builder whenever cells are multiplied or added.
    """

    def __init__(self,
                 variables: Sequence[str],
                 cardinalities: Sequence[int],
                 table,
                 builder=None):
        """ Create a new factor.

        Args:
            variables: Names of the variables of the factor, no duplicates.
            cardinalities: Cardinality of each variable.
            table: Cells in row-major order, either flat or already shaped.
            builder: A CircuitBuilder for symbolic factors; None for numeric ones.
        """
        self._variables = tuple(variables)
        self._cardinalities = tuple(int(c) for c in cardinalities)
        if len(set(self._variables)) != len(self._variables):
            raise ValueError(f"Factor variables {self._variables} contain duplicates.")
        if len(self._variables) != len(self._cardinalities):
            raise ValueError("Each factor variable needs a cardinality.")
        self._builder = builder
        dtype = object if builder is not None else float
        table = np.asarray(table, dtype=dtype)
        size = int(np.prod(self._cardinalities, dtype=np.int64))
        if table.size != size:
            raise ValueError(f"Factor over {self._variables} needs {size} cells and not {table.size}.")
        self._table = table.reshape(self._cardinalities)
        self._table.setflags(write=False)
        self._index = {v: i for i, v in enumerate(self._variables)}

    def __repr__(self):
        mode = "symbolic" if self.is_symbolic else "numeric"
        return f"Factor({', '.join(self._variables)}; {mode})"

    def __mul__(self, other: "Factor") -> "Factor":
        return self.multiply(other)

    @classmethod
    def scalar(cls, value, builder=None) -> "Factor":
        """ A factor over no variables holding a single cell. """
        return cls((), (), [value], builder)

    def cardinality(self, variable: str) -> int:
        return self._cardinalities[self._index[variable]]

    def value(self, assignment: Mapping[str, int]):
        """ The cell of the factor at a full assignment of its variables. """
        return self._table[tuple(assignment[v] for v in self._variables)]

    def multiply(self, other: "Factor") -> "Factor":
        """ Pointwise product over the union of the variables of both factors.

        The result lists the variables of this factor followed by the variables of other that are new.
        """
        self._check_mode(other)
        variables = list(self._variables) + [v for v in other.variables if v not in self._index]
        cards = [self._card_of(v, other) for v in variables]
        left = self._aligned(variables, cards)
        right = other._aligned(variables, cards)
        if not self.is_symbolic:
            return Factor(variables, cards, left * right)

        left, right = np.broadcast_arrays(left, right)
        cells = [self._builder.mul([a, b]) for a, b in zip(left.ravel(), right.ravel())]
        return Factor(variables, cards, np.array(cells, dtype=object), self._builder)

    def sum_out(self, variables: Iterable[str]) -> "Factor":
        """ Sum out the given variables. Variables that the factor does not mention are ignored. """
        summed = [v for v in self._variables if v in set(variables)]
        if not summed:
            return self
        keep = [v for v in self._variables if v not in summed]
        keep_cards = [self.cardinality(v) for v in keep]
        if not self.is_symbolic:
            axes = tuple(self._index[v] for v in summed)
            return Factor(keep, keep_cards, np.sum(self._table, axis=axes))

        table = np.transpose(self._table, [self._index[v] for v in keep + summed])
        rows = table.reshape(int(np.prod(keep_cards, dtype=np.int64)), -1)
        cells = [self._builder.add(list(row)) for row in rows]
        return Factor(keep, keep_cards, np.array(cells, dtype=object), self._builder)

    def project(self, variables: Iterable[str]) -> "Factor":
        """ Sum out every variable that is not in variables. """
        keep = set(variables)
        return self.sum_out([v for v in self._variables if v not in keep])

    def reorder(self, variables: Sequence[str]) -> "Factor":
        """ The same factor with its variables (and table axes) permuted into the given order. """
        if sorted(variables) != sorted(self._variables):
            raise ValueError(f"Cannot reorder {self._variables} into {tuple(variables)}.")
        table = np.transpose(self._table, [self._index[v] for v in variables])
        return Factor(variables, [self.cardinality(v) for v in variables], table, self._builder)

    def _aligned(self, variables: Sequence[str], cards: Sequence[int]) -> np.ndarray:
        own = [v for v in variables if v in self._index]
        table = np.transpose(self._table, [self._index[v] for v in own])
        shape = [c if v in self._index else 1 for v, c in zip(variables, cards)]
        return table.reshape(shape)

    def _card_of(self, variable: str, other: "Factor") -> int:
        if variable in self._index:
            card = self.cardinality(variable)
            if variable in other._index and other.cardinality(variable) != card:
                raise ValueError(f"Variable {variable} has different cardinalities in the two factors.")
            return card
        return other.cardinality(variable)

    def _check_mode(self, other: "Factor"):
        if self.is_symbolic != other.is_symbolic:
            raise FactorModeError("Cannot combine a numeric factor with a symbolic one.")
        if self._builder is not other._builder:
            raise FactorModeError("Cannot combine symbolic factors of different circuit builders.")

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._variables

    @property
    def cardinalities(self) -> Tuple[int, ...]:
        return self._cardinalities

    @property
    def table(self) -> np.ndarray:
        """ Read-only array of cells with one axis per variable. """
        return self._table

    @property
    def size(self) -> int:
        return self._table.size

    @property
    def is_symbolic(self) -> bool:
        return self._builder is not None

    @property
    def builder(self):
        return self._builder


def multiply(f: Factor, g: Factor) -> Factor:
    return f.multiply(g)


def sum_out(f: Factor, variables: Iterable[str]) -> Factor:
    return f.sum_out(variables)


def product(factors: Iterable[Factor]) -> Optional[Factor]:
    """ Multiply all factors together. Returns None for an empty iterable. """
    result = None
    for factor in factors:
        result = factor if result is None else result.multiply(factor)
    return result


def evidence_factor(variable: Variable, obs: Optional[int] = None, builder=None) -> Factor:
    """ The evidence factor of a variable.

    Numeric factors are one-hot at obs, or all ones without evidence. Symbolic factors hold the indicator
    leaves of the variable, one per value.
    """
    card = variable.cardinality
    if obs is not None and not 0 <= obs < card:
        raise ValueError(f"Observed value {obs} out of range for {variable.name} with cardinality {card}.")
    if builder is not None:
        return Factor([variable.name], [card], [builder.indicator(variable.name, i) for i in range(card)], builder)
    cells = np.ones(card) if obs is None else np.eye(card)[obs]
    return Factor([variable.name], [card], cells)


def is_mechanism(f: Factor, variable: str) -> bool:
    """ Whether a numeric factor is a causal mechanism for variable: every cell is 0 or 1 and for every
    instantiation of the other variables exactly one value of variable has cell 1. """
    if f.is_symbolic:
        raise FactorModeError("Mechanism status of a symbolic factor is declared, not tested.")
    if variable not in f.variables:
        raise ValueError(f"Variable {variable} is not in factor {f}.")
    table = f.table
    if not np.all((table == 0) | (table == 1)):
        return False
    return bool(np.all(table.sum(axis=f.variables.index(variable)) == 1))
