"""Riemannian maps, their tension and bitension fields, checked on chart manifolds."""

__version__ = "0.1.0"
