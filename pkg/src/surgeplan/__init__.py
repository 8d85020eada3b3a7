"""surgeplan: robust surge-capacity allocation and patient-transfer planning."""

__version__ = "0.1.0"
