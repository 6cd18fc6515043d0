"""Peak-AoI violation bounds for cell-free massive MIMO with sensing/communication partitioning."""
__version__ = "0.1.0"
