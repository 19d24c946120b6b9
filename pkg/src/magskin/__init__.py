"""Non-Hermitian and Liouvillian skin effects in dissipative spin chains."""

__version__ = "0.1.0"
