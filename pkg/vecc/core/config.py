import logging

from vecc.core.scm import Scm
from vecc.inference.jointree import Jointree
from vecc.circuit.circuit import Circuit
from vecc.circuit.learning import ExpectationMaximisation
from vecc.oracle.worlds import WorldTable

logger = logging.getLogger(__name__)


class Configuration:
    """ Class that serves as central location to get or set global vecc parameters,
    such as the world enumeration cap or the default number of mechanism replicas. """

    @classmethod
    def set_properties(cls, **kwargs):
        """ Set any properties of vecc using a dictionary. Unknown keys are ignored. """
        for k, v in kwargs.items():
            try:
                getattr(cls, k).fset(cls, v)
            except AttributeError:
                logger.debug(f"Ignoring unknown configuration key {k}.")
                continue

    @property
    def max_worlds(self) -> int:
        """ Largest number of worlds the oracle will enumerate. """
        return WorldTable.MAX_WORLDS

    @max_worlds.setter
    def max_worlds(self, value: int):
        assert isinstance(value, int) and value > 0, f"World cap must be a positive integer and not {value}."
        WorldTable.MAX_WORLDS = value

    @property
    def replica_cap(self) -> int:
        """ Upper bound on the default number of replicas of a mechanism. """
        return Jointree.REPLICA_CAP

    @replica_cap.setter
    def replica_cap(self, value: int):
        assert isinstance(value, int) and value >= 1, f"Replica cap must be at least 1 and not {value}."
        Jointree.REPLICA_CAP = value

    @property
    def em_max_iters(self) -> int:
        """ Default iteration limit of EM. """
        return ExpectationMaximisation.MAX_ITERS

    @em_max_iters.setter
    def em_max_iters(self, value: int):
        assert isinstance(value, int) and value >= 0, f"EM iteration limit cannot be {value}."
        ExpectationMaximisation.MAX_ITERS = value

    @property
    def em_tol(self) -> float:
        """ Default log-likelihood improvement below which EM stops. """
        return ExpectationMaximisation.TOL

    @em_tol.setter
    def em_tol(self, value: float):
        assert value >= 0, f"EM tolerance cannot be {value}."
        ExpectationMaximisation.TOL = value

    @property
    def strict_mechanisms(self) -> bool:
        """ Whether evaluating a thinned circuit rejects parameterizations that are not mechanisms. """
        return Circuit.STRICT_MECHANISMS

    @strict_mechanisms.setter
    def strict_mechanisms(self, value: bool):
        assert isinstance(value, bool), f"Strict mechanism flag must be a boolean and not {value}."
        Circuit.STRICT_MECHANISMS = value

    @property
    def probability_tol(self) -> float:
        """ Tolerance for probability vectors summing to 1. """
        return Scm.PROBABILITY_TOL

    @probability_tol.setter
    def probability_tol(self, value: float):
        assert 0 <= value < 1, f"Probability tolerance cannot be {value}."
        Scm.PROBABILITY_TOL = value
