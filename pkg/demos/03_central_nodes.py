"""
Finding the central nodes without the graph
============================================

On a core-periphery graph the most central nodes are the core.  The Perron
direction of the interaction graph is the only one-signed covariance
eigenvector, which is found with the positivity score and split into its
physical and coupling factors.
"""

import numpy as np

from prodgraph import (
    FilterSpec,
    detect_centrality,
    detection_error_rate,
    gen_core_periphery,
    gen_path,
    interaction_matrix,
    max_degree_scale,
    positivity_score,
    sample_covariances,
    sym_evd,
    synthesize,
    topk,
)

rng = np.random.default_rng(8)
gg, core = gen_core_periphery(80, 10, 0.2, 0.05, rng)
gc = gen_path(3)
gamma = (0.01, 0.02, 0.97)
tau = max_degree_scale(interaction_matrix(gc.adj, gg.adj, gamma))

covs = sample_covariances(synthesize(FilterSpec.resolvent_interaction(tau, gamma), gc, gg,
                                     1000, 0.01, rng))
vectors = sym_evd(covs.full).vectors
scores = np.array([positivity_score(v) for v in vectors.T])
print("three most one-signed eigenvectors:", np.argsort(scores)[:3], np.sort(scores)[:3])

res = detect_centrality(vectors, 80, 3)
found = topk(res.cg, 10)
print("detected:", [i + 1 for i in found])
print("error rate:", detection_error_rate(found, core))
print("coupling centrality:", np.round(res.cc, 3))
