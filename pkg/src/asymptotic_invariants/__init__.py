"""Asymptotic Invariants - finite type knot invariants and helicity of divergence-free fields."""

__version__ = "0.1.0"
