__doc__ = """
This module is not at user level. Configuration objects and the chunked worker pool live here
and are glued together by the `poissonlab.harness` and `poissonlab.cli` modules.
"""
