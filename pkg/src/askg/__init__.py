"""Aviation safety knowledge graph engine.

Builds a constrained property graph from tabular accident records,
answers natural-language questions over it through a Cypher-subset
query engine, and verifies that every answer is grounded in retrieved
graph nodes.
"""

__version__ = "0.1.0"
