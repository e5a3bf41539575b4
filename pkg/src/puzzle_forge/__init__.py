"""Yoccoz puzzles, principal nests and return graphs of quadratic polynomials."""
