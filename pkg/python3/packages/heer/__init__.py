"""
heer: embeddings of heterogeneous information networks through typed
edge representations, with the edge reconstruction benchmark and the
analyses used to study incompatible edge types.
"""

__version__ = "1.0.0"
