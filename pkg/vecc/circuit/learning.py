import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from vecc.circuit.circuit import Circuit, ZeroLikelihoodError, weighted_log_likelihood
from vecc.circuit.parameters import Parameterization, random_parameterization

logger = logging.getLogger(__name__)


class ExpectationMaximisation:
    """ Fits the parameters of a circuit to a weighted dataset with EM.

    Expected counts are read off the circuit derivatives: for each record r with weight w_r the count of a
    parameter grows by w_r * theta * dAC_r/dtheta / AC_r. The M-step normalises counts per table row. With
    deterministic projection every endogenous row is rounded to the 0/1 row of its largest entry after each
    M-step, which keeps the parameters mechanisms as thinned circuits require.
    """

    MAX_ITERS = 500
    TOL = 1e-8

    def __init__(self,
                 circuit: Circuit,
                 data,
                 max_iters: int = None,
                 tol: float = None,
                 deterministic_projection: bool = False):
        """ Create a new EM run.

        Args:
            circuit: The compiled circuit.
            data: WeightedDataset over endogenous variables.
            max_iters: Iteration limit, ExpectationMaximisation.MAX_ITERS by default.
            tol: Stop once the log-likelihood improves by less than this; ExpectationMaximisation.TOL by default.
            deterministic_projection: Round endogenous tables to 0/1 tables after every M-step.

        Raises:
            ValueError: If the circuit is thinned and deterministic_projection is off.
        """
        self._circuit = circuit
        self._data = data
        self._max_iters = ExpectationMaximisation.MAX_ITERS if max_iters is None else max_iters
        self._tol = ExpectationMaximisation.TOL if tol is None else tol
        self._projection = deterministic_projection
        self._lam = circuit.record_indicators(data.columns, data.records)
        self._weights = np.asarray(data.weights, dtype=float)
        self._skipped: List[Tuple[str, int]] = []

        if circuit.thinned and not deterministic_projection:
            raise ValueError(f"EM on a circuit thinned on {sorted(circuit.thinned)} needs deterministic projection.")
        if circuit.thinned:
            logger.info("EM with deterministic projection on a thinned circuit is experimental.")

        keys = circuit.theta_keys
        self._groups: Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        by_variable: Dict[str, List[int]] = {}
        for k, (var, _, _) in enumerate(keys):
            by_variable.setdefault(var, []).append(k)
        for var, positions in by_variable.items():
            self._groups[var] = (np.array(positions),
                                 np.array([keys[k][2] for k in positions]),
                                 np.array([keys[k][1] for k in positions]))

    def fit(self, init: Parameterization) -> Tuple[Parameterization, List[float]]:
        """ Run EM from init.

        Returns:
            The fitted parameterization and the log-likelihood before the first and after every iteration.

        Raises:
            ZeroLikelihoodError: If a record has probability zero under the current parameters.
        """
        if self._projection and self._circuit.thinned and not init.is_mechanism(self._circuit.thinned):
            raise ValueError("EM on a thinned circuit needs mechanism tables for the thinned variables.")
        p = init
        self._skipped = []
        values, likelihood = self._expectation(p)
        trace = [likelihood]
        for iteration in range(self._max_iters):
            p = self._maximisation(p, values)
            values, new_likelihood = self._expectation(p)
            trace.append(new_likelihood)
            logger.debug(f"EM iteration {iteration + 1}: log-likelihood {new_likelihood:.12g}")
            if new_likelihood - likelihood < self._tol:
                break
            likelihood = new_likelihood
        return p, trace

    def step(self, p: Parameterization) -> Parameterization:
        """ A single EM iteration. """
        self._skipped = []
        values, _ = self._expectation(p)
        return self._maximisation(p, values)

    def _expectation(self, p: Parameterization):
        theta = self._circuit.theta_vector(p)
        values = self._circuit.forward(theta, self._lam)
        root = values[self._circuit.root]
        zero = np.flatnonzero((root <= 0) & (self._weights > 0))
        if zero.size:
            record = int(zero[0])
            raise ZeroLikelihoodError(f"Record {record} has probability zero under the current parameters.", record)
        return (theta, values), weighted_log_likelihood(root, self._weights)

    def _maximisation(self, p: Parameterization, state) -> Parameterization:
        theta, values = state
        derivatives = self._circuit.backward(values)
        root = values[self._circuit.root]
        scale = np.divide(self._weights, root, out=np.zeros_like(root), where=root > 0)
        leaf_derivatives = derivatives[self._circuit.theta_ids]
        counts = theta * (leaf_derivatives @ scale)

        graph = p.graph
        priors, cpts = {}, {}
        for var, (positions, pinsts, vals) in self._groups.items():
            if graph.variable(var).is_exogenous:
                table = np.zeros((1, graph.cardinality(var)))
                old = p.priors[var][None, :]
            else:
                table = np.zeros((graph.parent_instantiations(var), graph.cardinality(var)))
                old = p.cpts[var]
            np.add.at(table, (pinsts, vals), counts[positions])
            totals = table.sum(axis=1, keepdims=True)
            empty = totals[:, 0] <= 0
            for row in np.flatnonzero(empty):
                if (var, int(row)) in self._skipped:
                    continue
                self._skipped.append((var, int(row)))
                logger.warning(f"Zero expected count for {var} row {row}; keeping its parameters.")
            new = np.where(empty[:, None], old, table / np.where(empty[:, None], 1.0, totals))
            if graph.variable(var).is_exogenous:
                priors[var] = new[0]
            else:
                if self._projection:
                    new = np.eye(new.shape[1])[np.argmax(new, axis=1)]
                cpts[var] = new
        return p.replace(priors, cpts)

    @property
    def skipped(self) -> List[Tuple[str, int]]:
        """ Table rows whose update was skipped because their expected counts were zero, during the last call
        to fit or step. """
        return list(self._skipped)


def em_fit(circuit: Circuit,
           init: Parameterization,
           data,
           max_iters: int = None,
           tol: float = None,
           deterministic_projection: bool = False) -> Tuple[Parameterization, List[float]]:
    """ Fit parameters with EM starting from init. See ExpectationMaximisation. """
    return ExpectationMaximisation(circuit, data, max_iters, tol, deterministic_projection).fit(init)


def fit_restarts(circuit: Circuit,
                 graph,
                 data,
                 restarts: int = 1,
                 seed: int = None,
                 max_iters: int = None,
                 tol: float = None,
                 deterministic_projection: bool = False) \
        -> Tuple[Optional[Parameterization], List[float]]:
    """ Run EM from several seeded random initialisations and keep the run with the highest final
    log-likelihood. Runs that hit a zero-probability record are skipped.

    Returns:
        The best parameterization and its trace, or (None, []) if every run failed.
    """
    em = ExpectationMaximisation(circuit, data, max_iters, tol, deterministic_projection)
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    best, best_trace = None, []
    for k, child in enumerate(seeds):
        init = random_parameterization(graph, np.random.default_rng(child), deterministic_projection)
        try:
            p, trace = em.fit(init)
        except ZeroLikelihoodError as e:
            logger.warning(f"Restart {k} skipped: {e}")
            continue
        logger.debug(f"Restart {k}: final log-likelihood {trace[-1]:.12g} after {len(trace) - 1} iterations.")
        if best is None or trace[-1] > best_trace[-1]:
            best, best_trace = p, trace
    return best, best_trace
