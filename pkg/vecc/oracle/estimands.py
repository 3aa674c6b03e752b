import logging
import math
from typing import Mapping, Sequence

import numpy as np

from vecc.inference.factor import Factor

logger = logging.getLogger(__name__)


class UndefinedEstimandError(ValueError):
    """ Raised when an estimand conditions on an instantiation of probability zero. """


def backdoor_estimate(joint: Factor, x: Mapping[str, int], y: Mapping[str, int], z: Sequence[str]) -> float:
    """ The back-door adjustment sum over z of Pr(y | x, z) Pr(z).

    Args:
        joint: Numeric distribution covering the variables of x, y and z.
        x: Instantiation of the treatment variables.
        y: Instantiation of the outcome variables.
        z: The adjustment set, disjoint from x and y.

    Raises:
        UndefinedEstimandError: If Pr(x, z) is zero for some z with Pr(z) > 0.
    """
    _check_sets(joint, x, y, z)
    table = _grouped(joint, [list(x), list(y), list(z)])
    xi, yi = _flat(joint, x), _flat(joint, y)
    p_xyz = table[xi, yi]
    p_xz = table[xi].sum(axis=0)
    p_z = table.sum(axis=(0, 1))

    support = p_z > 0
    undefined = support & (p_xz <= 0)
    if np.any(undefined):
        z_value = _unflat(joint, z, int(np.flatnonzero(undefined)[0]))
        raise UndefinedEstimandError(f"Back-door estimand conditions on Pr({_show(x)}, {_show(z_value)}) = 0.")
    return float(np.sum(p_xyz[support] / p_xz[support] * p_z[support]))


def frontdoor_estimate(joint: Factor, x: Mapping[str, int], y: Mapping[str, int], z: Sequence[str]) -> float:
    """ The front-door formula: sum over z of Pr(z | x) times the sum over x' of Pr(y | x', z) Pr(x').

    Args:
        joint: Numeric distribution covering the variables of x, y and z.
        x: Instantiation of the treatment variables.
        y: Instantiation of the outcome variables.
        z: The mediators, non-empty and disjoint from x and y.

    Raises:
        UndefinedEstimandError: If Pr(x) is zero, or Pr(x', z) is zero for some x' and z of positive probability
            that the formula conditions on. This includes mediators that copy the treatment.
    """
    if not z:
        raise ValueError("Front-door estimand needs at least one mediator.")
    _check_sets(joint, x, y, z)
    table = _grouped(joint, [list(x), list(z), list(y)])
    xi, yi = _flat(joint, x), _flat(joint, y)
    p_xz = table.sum(axis=2)
    p_x = p_xz.sum(axis=1)
    if p_x[xi] <= 0:
        raise UndefinedEstimandError(f"Front-door estimand conditions on Pr({_show(x)}) = 0.")

    p_z_given_x = p_xz[xi] / p_x[xi]
    estimate = 0.0
    for zi in np.flatnonzero(p_z_given_x > 0):
        treatments = np.flatnonzero(p_x > 0)
        zero = treatments[p_xz[treatments, zi] <= 0]
        if zero.size:
            x_value = _unflat(joint, list(x), int(zero[0]))
            z_value = _unflat(joint, z, int(zi))
            raise UndefinedEstimandError(f"Front-door estimand conditions on "
                                         f"Pr({_show(x_value)}, {_show(z_value)}) = 0.")
        inner = np.sum(table[treatments, zi, yi] / p_xz[treatments, zi] * p_x[treatments])
        estimate += p_z_given_x[zi] * inner
    return float(estimate)


def _check_sets(joint: Factor, x: Mapping[str, int], y: Mapping[str, int], z: Sequence[str]):
    if not x or not y:
        raise ValueError("Estimands need non-empty treatment and outcome instantiations.")
    if set(x) & set(y):
        raise ValueError(f"Treatment and outcome share variables {sorted(set(x) & set(y))}.")
    overlap = set(z) & (set(x) | set(y))
    if overlap:
        raise ValueError(f"Adjustment set must not contain treatment or outcome variables {sorted(overlap)}.")
    if len(set(z)) != len(z):
        raise ValueError(f"Adjustment set {list(z)} lists a variable more than once.")
    missing = [v for v in list(x) + list(y) + list(z) if v not in joint.variables]
    if missing:
        raise ValueError(f"Distribution over {joint.variables} does not cover {missing}.")
    if joint.is_symbolic:
        raise ValueError("Estimands need a numeric distribution.")


def _grouped(joint: Factor, groups) -> np.ndarray:
    names = [v for group in groups for v in group]
    table = joint.project(names).reorder(names).table
    shape = [math.prod(joint.cardinality(v) for v in group) for group in groups]
    return table.reshape(shape)


def _flat(joint: Factor, instantiation: Mapping[str, int]) -> int:
    names = list(instantiation)
    return int(np.ravel_multi_index([instantiation[v] for v in names], [joint.cardinality(v) for v in names]))


def _unflat(joint: Factor, names: Sequence[str], index: int) -> dict:
    if not names:
        return {}
    values = np.unravel_index(index, [joint.cardinality(v) for v in names])
    return {v: int(i) for v, i in zip(names, values)}


def _show(instantiation: Mapping[str, int]) -> str:
    return ",".join(f"{k}={v}" for k, v in instantiation.items()) or "{}"
