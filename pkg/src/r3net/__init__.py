"""Development placeholder; full public API restored once all modules exist."""
__version__ = "0.1.0"
