"""Mixed Hodge structures, degenerations and zero loci of normal functions."""

__version__ = "0.1.0"
