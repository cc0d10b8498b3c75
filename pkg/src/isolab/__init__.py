"""isolab: numerical workbench for Penrose-Lifshits mushroom pairs."""

__version__ = "0.1.0"
