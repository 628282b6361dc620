"""K3 Monodromy - rational curve counts, local singularity analysis and bitangent monodromy."""

__version__ = "0.1.0"
