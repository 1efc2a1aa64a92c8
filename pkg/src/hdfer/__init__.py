"""Error-rate estimation for LDPC codes under hard-decision decoding on the BSC."""

__version__ = "0.1.0"
