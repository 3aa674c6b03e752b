import logging
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm
from vecc.inference.factor import Factor
from vecc.oracle.worlds import joint_distribution

logger = logging.getLogger(__name__)


class WeightedDataset:
    """ Records over endogenous variables, each with a non-negative weight.

    Records are stored as an integer matrix with one column per variable; MISSING marks an unobserved value.
    In CSV files a missing value is written as "?" and an optional "weight" column holds the weights.
    """

    MISSING = -1
    MISSING_TOKEN = "?"
    WEIGHT_COLUMN = "weight"

    def __init__(self, columns: Sequence[str], records, weights=None):
        self._columns = list(columns)
        if len(set(self._columns)) != len(self._columns):
            raise ValueError(f"Dataset columns {self._columns} contain duplicates.")
        records = np.array(records, dtype=np.int64)
        if records.ndim == 2 and records.shape[1] == len(self._columns):
            self._records = records
        elif records.size:
            self._records = records.reshape(-1, len(self._columns))
        else:
            self._records = np.zeros((0, len(self._columns)), dtype=np.int64)
        n = self._records.shape[0]
        self._weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if self._weights.shape != (n,):
            raise ValueError(f"Dataset has {n} records but {self._weights.size} weights.")
        if np.any(self._weights < 0) or not np.all(np.isfinite(self._weights)):
            raise ValueError("Dataset weights must be finite and non-negative.")
        if np.any(self._records < WeightedDataset.MISSING):
            raise ValueError("Dataset values must be non-negative indices or missing.")
        self._records.setflags(write=False)
        self._weights.setflags(write=False)

    def __len__(self) -> int:
        return self._records.shape[0]

    def __repr__(self):
        return f"WeightedDataset({len(self)} records over {', '.join(self._columns)})"

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "WeightedDataset":
        """ Read a data frame whose cells are value indices or "?", with an optional weight column. """
        weights = None
        if cls.WEIGHT_COLUMN in frame.columns:
            weights = pd.to_numeric(frame[cls.WEIGHT_COLUMN], errors="raise").to_numpy(dtype=float)
            frame = frame.drop(columns=[cls.WEIGHT_COLUMN])
        values = frame.astype(str).apply(lambda column: column.str.strip())
        values = values.replace(cls.MISSING_TOKEN, str(cls.MISSING))
        try:
            records = values.astype(np.int64).to_numpy()
        except ValueError as e:
            raise ValueError(f"Dataset holds a value that is neither an index nor {cls.MISSING_TOKEN!r}: {e}")
        return cls(list(frame.columns), records, weights)

    @classmethod
    def from_csv(cls, path_or_buffer) -> "WeightedDataset":
        frame = pd.read_csv(path_or_buffer, dtype=str, keep_default_na=False)
        return cls.from_frame(frame)

    @classmethod
    def from_distribution(cls, joint: Factor, drop_zero: bool = True) -> "WeightedDataset":
        """ One record per cell of a numeric distribution, weighted by the cell's probability. """
        cells = np.indices(joint.cardinalities).reshape(len(joint.variables), -1).T
        weights = joint.table.reshape(-1)
        if drop_zero:
            keep = weights > 0
            cells, weights = cells[keep], weights[keep]
        return cls(joint.variables, cells, weights)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self._records, columns=self._columns).astype(object)
        frame[frame == WeightedDataset.MISSING] = WeightedDataset.MISSING_TOKEN
        frame[WeightedDataset.WEIGHT_COLUMN] = self._weights
        return frame

    def to_csv(self, path_or_buffer=None):
        """ Write the dataset as CSV. Returns the text if no path or buffer is given. """
        return self.to_frame().to_csv(path_or_buffer, index=False, float_format="%.17g", lineterminator="\n")

    def check(self, graph: CausalGraph):
        """ Raise ValueError unless every column is an endogenous variable of graph and every value is in range. """
        for k, name in enumerate(self._columns):
            variable = graph.find(name)
            if variable is None:
                raise ValueError(f"Dataset column {name} is not a variable of the model.")
            if not variable.is_endogenous:
                raise ValueError(f"Dataset column {name} is exogenous.")
            bad = np.flatnonzero(self._records[:, k] >= variable.cardinality)
            if bad.size:
                raise ValueError(f"Record {int(bad[0])} has value {int(self._records[bad[0], k])} out of range "
                                 f"for {name}.")

    @property
    def columns(self) -> List[str]:
        return list(self._columns)

    @property
    def records(self) -> np.ndarray:
        return self._records

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def evidence(self) -> List[Dict[str, int]]:
        """ Each record as an instantiation of its observed variables. """
        return [{name: int(value) for name, value in zip(self._columns, row) if value != WeightedDataset.MISSING}
                for row in self._records]


def exact_dataset(scm: Scm) -> WeightedDataset:
    """ The exact observational distribution over all endogenous variables of an SCM as a weighted dataset. """
    return WeightedDataset.from_distribution(joint_distribution(scm))
