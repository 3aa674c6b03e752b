from .dataset import WeightedDataset, exact_dataset
from .families import GenSpec, FAMILIES, generate, hypertension, hypertension_scm, chain, collider, semi_markov, \
    grid, grid_plus, random_graph, fill_random, corpus_scm, positive_markovian_scm
