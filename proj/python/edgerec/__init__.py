"""Python bindings for the EdgeRec core: feature encoders, sequence kernels,
metrics, and the simulate/train entry points."""

from ._edgerec import *  # noqa: F401,F403
