"""Stochastic-approximation alternatives to LSTD, LSTDQ and least squares."""
