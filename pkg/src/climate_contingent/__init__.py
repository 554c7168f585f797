"""Climate-contingent finance: scenario contracts, adaptation wealth
simulation, price equalization, and climate-contingent bond structuring."""

__version__ = "0.1.0"
