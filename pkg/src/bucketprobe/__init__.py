"""Distributions of linear probing statistics with buckets of size b.

specialfn         tree function, root family, Ramanujan Q, tree polynomials
poisson_analytic  limit laws in the Poisson model (PGFs, PMFs, moments)
exact_model       exact counts and expectations for n keys in m buckets
simulator         insertion engines (FCFS, Robin Hood, LCFS) and profiles
montecarlo        replicated simulation with standard errors
enumeration       exhaustive oracle over all hash sequences
cli               command line entry point
"""
from .pmf import Pmf

__version__ = "0.1.0"

__all__ = ["Pmf", "__version__"]
