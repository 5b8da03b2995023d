"""Stochastic time-dependent Ginzburg-Landau simulations of a superconducting
ring threaded by a solenoid's flux, with the matching closed-form single-mode
solutions and light-cone timing estimates."""

__version__ = "0.1.0"
