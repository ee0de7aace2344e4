"""csgcompress: lossy point-cloud-to-CSG compression.

Detect which primitives of a fitted set overlap, partition the extraction
problem by maximal cliques, enumerate the non-empty fundamental products
the primitives carve out, and reassemble the smallest exact cover of the
inside products into a compact CSG tree.  The cover step can be solved
classically (dancing links, exhaustive search) or through a QUBO/Ising
encoding suitable for annealing hardware; QUBO models can be exported in a
qbsolv-compatible text format.
"""

__version__ = "0.1.0"
