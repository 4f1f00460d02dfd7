"""Quantum Zeno dynamics of one and two qubits in a broadband squeezed-vacuum bath."""

__version__ = "0.1.0"
