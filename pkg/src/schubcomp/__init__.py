"""Principal specializations of Schubert polynomials and random reduced
bumpless pipe dreams."""

__version__ = "0.1.0"
