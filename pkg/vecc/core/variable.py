from dataclasses import dataclass

EXOGENOUS = "exogenous"
ENDOGENOUS = "endogenous"


@dataclass(frozen=True)
class Variable:
    """ A discrete variable of a causal graph.

    Values are indexed 0..cardinality-1. For binary variables, index 1 stands for the positive literal
    (lowercase x) and index 0 for its negation.
    """
    name: str
    cardinality: int
    kind: str = ENDOGENOUS

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.isidentifier():
            raise ValueError(f"Variable name {self.name!r} is not an identifier.")
        if isinstance(self.cardinality, bool) or not isinstance(self.cardinality, int):
            raise ValueError(f"Cardinality of {self.name} must be an integer and not {self.cardinality!r}.")
        if self.cardinality < 2:
            raise ValueError(f"Cardinality of {self.name} must be at least 2 and not {self.cardinality}.")
        if self.kind not in (EXOGENOUS, ENDOGENOUS):
            raise ValueError(f"Variable {self.name} has unknown kind {self.kind!r}.")

    def __repr__(self):
        return f"{self.name}({self.kind[:3]},{self.cardinality})"

    @property
    def is_exogenous(self) -> bool:
        return self.kind == EXOGENOUS

    @property
    def is_endogenous(self) -> bool:
        return self.kind == ENDOGENOUS
