"""Sequential resource allocation for epidemic control on networks.

Core pieces:

* :mod:`sdra.graphs` -- network representation and generators.
* :mod:`sdra.epidemic` -- exact event-driven SIS dynamics under treatment.
* :mod:`sdra.scoring` -- node criticality scores and priority planning.
* :mod:`sdra.selection` -- warm-started sequential selection (online
  hiring rules, offline oracle, cutoff tables).
* :mod:`sdra.control` -- the round loop tying sampling, scoring and
  selection to the epidemic.
* :mod:`sdra.metrics` -- AUC, selection error, paired runs, regression.
* :mod:`sdra.meanfield` -- coarse-grained moment ODEs and closures.
* :mod:`sdra.cli` -- experiment commands emitting CSV outputs.
"""

__version__ = "0.1.0"
