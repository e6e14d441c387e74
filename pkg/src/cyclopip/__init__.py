"""Class groups, principal ideals and short generators in cyclotomic fields."""

__version__ = "0.1.0"
