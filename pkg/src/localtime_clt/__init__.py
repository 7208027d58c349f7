"""Local-time moduli of Brownian motion: path simulation, modulus
functionals, Kac moment evaluation and statistical checks of the
second-order limit laws."""

__version__ = "0.1.0"
