"""irkit: issue-resolution toolkit.

Pipelines: steps-to-reproduce quality assessment against an app execution
model, buggy UI localization as ranked retrieval, and solution
identification over issue-thread comments, plus a shared corpus model and
evaluation harness.
"""

__version__ = "0.1.0"
