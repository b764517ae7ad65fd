"""Random-matrix and random-Euler-product models for Dirichlet L-functions
over F_q[u], with exact moment machinery and Monte-Carlo cross-checks."""

__version__ = "0.1.0"
