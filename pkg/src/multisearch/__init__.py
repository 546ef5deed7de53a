"""Multi-target object search in procedurally generated grid houses.

Semantic score maps (scene-level and object-level) rank exploration
frontiers; a benchmark harness compares the planner against ablations and
baselines on paired seeded worlds.
"""

__version__ = "0.1.0"
